"""
Typing rules for terms and atoms. Annotates every term with its AttrType.
"""
from dataclasses import replace
from typing import Dict, Optional

from errors import LangError
from formula_ast import (
    Add, Attr, Compare, Const, Der, EnumLit, Exists, Forall, GlobalAttr, Letter, Next, NullConst,
    ObjRef, Prop, Scale, Sub, Term, map_children, walk,
)
from schemas import AttrType, Signature

BOOL = AttrType(kind="boolean")
INT = AttrType(kind="integer")
REAL = AttrType(kind="real")
REAL_CONTINUOUS = AttrType(kind="real", continuous=True)

EQUALITY_OPS = ("=", "!=")


def is_numeric(t: Optional[AttrType]) -> bool:
    return t is not None and t.kind in ("integer", "real")


def _fail(message: str, node) -> LangError:
    return LangError(message, kind="type", span=node.span, req_id=node.req)


class _Checker:
    def __init__(self, sig: Signature):
        self.sig = sig

    def term(self, t: Term, scope: Dict[str, str]) -> Term:
        if isinstance(t, Const):
            return replace(t, type=INT if t.value.denominator == 1 else REAL)
        if isinstance(t, Attr):
            attr = self.sig.get_class(scope[t.obj]).attribute(t.attr)
            return replace(t, type=attr.type)
        if isinstance(t, GlobalAttr):
            return replace(t, type=self.sig.get_global(t.name).type)
        if isinstance(t, ObjRef):
            return replace(t, type=AttrType(kind="reference", target=scope[t.var]))
        if isinstance(t, NullConst):
            return replace(t, type=AttrType(kind="reference", nullable=True))
        if isinstance(t, EnumLit):
            return t
        if isinstance(t, Next):
            if any(isinstance(n, Next) for n in walk(t.arg)):
                raise _fail("nested next", t)
            if any(isinstance(n, Der) for n in walk(t.arg)):
                raise _fail("next and der cannot be nested", t)
            arg = self.term(t.arg, scope)
            return replace(t, arg=arg, type=arg.type)
        if isinstance(t, Der):
            if any(isinstance(n, Der) for n in walk(t.arg)):
                raise _fail("nested der", t)
            if any(isinstance(n, Next) for n in walk(t.arg)):
                raise _fail("next and der cannot be nested", t)
            arg = self.term(t.arg, scope)
            if not self._continuous(arg):
                raise _fail("der requires continuous real", t)
            return replace(t, arg=arg, type=REAL)
        if isinstance(t, (Add, Sub)):
            left = self.term(t.left, scope)
            right = self.term(t.right, scope)
            for side in (left, right):
                if not is_numeric(side.type):
                    raise _fail(f"arithmetic on {side.type.kind if side.type else 'enumeration'} term", t)
            return replace(t, left=left, right=right, type=self._sum_type([left, right]))
        if isinstance(t, Scale):
            arg = self.term(t.arg, scope)
            if not is_numeric(arg.type):
                raise _fail(f"arithmetic on {arg.type.kind if arg.type else 'enumeration'} term", t)
            kind = arg.type if t.coef.denominator == 1 or arg.type.kind == "real" else REAL
            return replace(t, arg=arg, type=kind)
        raise _fail(f"unexpected term {t!r}", t)

    def _continuous(self, t: Term) -> bool:
        leaves = [n for n in walk(t) if isinstance(n, Term) and not isinstance(n, (Add, Sub, Scale))]
        variables = [n for n in leaves if not isinstance(n, Const)]
        return bool(variables) and all(n.type is not None and n.type.continuous for n in variables)

    def _sum_type(self, parts) -> AttrType:
        types = [p.type for p in parts if not isinstance(p, Const)]
        if any(p.type.kind == "real" for p in parts):
            if types and all(t.continuous for t in types):
                return REAL_CONTINUOUS
            return REAL
        return INT

    def compare(self, f: Compare, scope: Dict[str, str]) -> Compare:
        left = self.term(f.left, scope)
        right = self.term(f.right, scope)
        lt, rt = left.type, right.type
        if isinstance(left, EnumLit) and isinstance(right, EnumLit):
            raise _fail("cannot compare two enumeration literals", f)
        if isinstance(left, EnumLit) or isinstance(right, EnumLit):
            lit, other = (left, right) if isinstance(left, EnumLit) else (right, left)
            if other.type is None or other.type.kind != "enumeration":
                raise _fail(f"enumeration symbol {lit.symbol} compared with {other.type.kind}", f)
            if lit.symbol not in (other.type.symbols or []):
                raise _fail(f"symbol {lit.symbol} is not in the enumeration of the compared attribute", f)
            lit = replace(lit, type=other.type)
            left, right = (lit, other) if isinstance(left, EnumLit) else (other, lit)
            lt = rt = other.type
            self._equality_only(f)
        elif is_numeric(lt) and is_numeric(rt):
            pass
        elif lt.kind == "enumeration" and rt.kind == "enumeration":
            if lt.symbols != rt.symbols:
                raise _fail("comparison across enumerations", f)
            self._equality_only(f)
        elif "enumeration" in (lt.kind, rt.kind) and (is_numeric(lt) or is_numeric(rt)):
            raise _fail("enum compared with number", f)
        elif lt.kind == "reference" and rt.kind == "reference":
            if lt.target and rt.target and lt.target != rt.target:
                raise _fail(f"comparison between references to {lt.target} and {rt.target}", f)
            self._equality_only(f)
        elif lt.kind == "boolean" and rt.kind == "boolean":
            self._equality_only(f)
        else:
            raise _fail(f"cannot compare {lt.kind} with {rt.kind}", f)
        return replace(f, left=left, right=right)

    def _equality_only(self, f: Compare):
        if f.op not in EQUALITY_OPS:
            raise _fail(f"operator {f.op} needs numeric operands", f)

    def formula(self, f, scope: Dict[str, str]):
        if isinstance(f, (Forall, Exists)):
            inner = dict(scope)
            inner[f.var] = f.cls
            return replace(f, body=self.formula(f.body, inner))
        if isinstance(f, Compare):
            return self.compare(f, scope)
        if isinstance(f, Prop):
            term = self.term(f.term, scope)
            if term.type is None or term.type.kind != "boolean":
                raise _fail(f"{term.type.kind if term.type else 'enumeration symbol'} used as a formula", f)
            return replace(f, term=term)
        if isinstance(f, Letter):
            for n in walk(f.formula):
                if isinstance(n, (Next, Der)):
                    raise _fail("next and der are not allowed in sequence letters", n)
        return map_children(f, lambda child: self.formula(child, scope))


def typecheck(f, sig: Signature):
    """
    Annotate terms with types and verify atom typing.

    Raises:
        LangError: kind "type", with the offending span and requirement id
    """
    return _Checker(sig).formula(f, {})
