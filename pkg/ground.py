"""
Finite instantiation: expand quantifiers over fixed object populations and
flatten attribute accesses into ground state variables.
"""
import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

from config import GroundLimits
from errors import GroundError
from formula_ast import (
    FALSE, TRUE,
    Add, And, Attr, BoolConst, Compare, Const, Der, Exists, Forall, Formula, GlobalAttr, GVar,
    Letter, Next, NextStep, Not, NullConst, ObjConst, ObjRef, Prop, Scale, StrongSere, Sub,
    SuffixImpl, Until, conjuncts, map_children,
)
from pretty import pretty
from schemas import AttrType, Signature

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GroundVar:
    name: str
    kind: str
    continuous: bool = False
    lo: Optional[int] = None
    hi: Optional[int] = None
    symbols: Optional[Tuple[str, ...]] = None

    @property
    def domain(self):
        if self.kind == "boolean":
            return (False, True)
        if self.kind in ("enumeration", "reference"):
            return self.symbols[self.lo:self.hi + 1]
        if self.kind == "integer":
            return tuple(range(self.lo, self.hi + 1))
        return None

    @property
    def is_finite(self) -> bool:
        return self.kind != "real"

    def describe(self) -> str:
        if self.kind == "real":
            return "real continuous" if self.continuous else "real discrete"
        if self.kind == "integer":
            return f"integer {self.lo}..{self.hi}"
        if self.kind == "boolean":
            return "boolean"
        return "{" + ", ".join(self.domain) + "}"


@dataclass
class GroundProblem:
    vars: List[GroundVar]
    conjuncts: List[Formula]
    origin: List[Optional[str]] = field(default_factory=list)

    @property
    def formula(self) -> Formula:
        result = None
        for c in self.conjuncts:
            result = c if result is None else And(result, c)
        return TRUE if result is None else result

    def var(self, name: str) -> GroundVar:
        for v in self.vars:
            if v.name == name:
                return v
        raise KeyError(name)


def _mk_and(a, b):
    if a == FALSE or b == FALSE:
        return FALSE
    if a == TRUE:
        return b
    if b == TRUE:
        return a
    return And(a, b)


def _mk_not(a):
    if isinstance(a, BoolConst):
        return BoolConst(not a.value)
    if isinstance(a, Not):
        return a.arg
    return Not(a)


_STATIC_OPS = {
    "<": lambda a, b: a < b, "<=": lambda a, b: a <= b, "=": lambda a, b: a == b,
    ">=": lambda a, b: a >= b, ">": lambda a, b: a > b, "!=": lambda a, b: a != b,
}


class _Instantiator:
    def __init__(self, sig: Signature, bounds: Dict[str, int], limits: GroundLimits):
        self.sig = sig
        self.bounds = bounds
        self.limits = limits
        self.vars: Dict[str, GroundVar] = {}
        self.nodes = 0

    def _count(self, node):
        self.nodes += 1
        if self.nodes > self.limits.max_nodes:
            raise GroundError(
                f"expansion exceeds {self.limits.max_nodes} ground nodes; lower the class bounds"
            )
        return node

    def _bound(self, cls: str) -> int:
        if cls not in self.bounds:
            raise GroundError(f"missing bound {cls}")
        return self.bounds[cls]

    def _declare(self, name: str, t: AttrType) -> GroundVar:
        if name in self.vars:
            return self.vars[name]
        if t.kind == "enumeration":
            symbols = tuple(t.symbols)
            var = GroundVar(name, "enumeration", lo=0, hi=len(symbols) - 1, symbols=symbols)
        elif t.kind == "reference":
            n = self._bound(t.target)
            symbols = ("null",) + tuple(f"{t.target}#{i}" for i in range(1, n + 1))
            var = GroundVar(name, "reference", lo=0 if t.nullable else 1, hi=n, symbols=symbols)
        elif t.kind == "integer":
            var = GroundVar(name, "integer", lo=t.lo, hi=t.hi)
        else:
            var = GroundVar(name, t.kind, continuous=t.continuous)
        self.vars[name] = var
        return var

    def term(self, t, env):
        if isinstance(t, Attr):
            obj = env[t.obj]
            name = f"{obj.label}.{t.attr}"
            self._declare(name, t.type)
            return self._count(GVar(name, type=t.type))
        if isinstance(t, GlobalAttr):
            self._declare(t.name, t.type)
            return self._count(GVar(t.name, type=t.type))
        if isinstance(t, ObjRef):
            return self._count(replace(env[t.var], type=t.type))
        if isinstance(t, (Add, Sub, Scale, Next, Der)):
            return self._count(map_children(t, lambda c: self.term(c, env)))
        return self._count(t)

    def formula(self, f, env):
        if isinstance(f, Forall):
            result = TRUE
            for i in range(1, self._bound(f.cls) + 1):
                inner = dict(env)
                inner[f.var] = ObjConst(f.cls, i)
                result = _mk_and(result, self.formula(f.body, inner))
            return result
        if isinstance(f, Exists):
            result = TRUE
            for i in range(1, self._bound(f.cls) + 1):
                inner = dict(env)
                inner[f.var] = ObjConst(f.cls, i)
                result = _mk_and(result, _mk_not(self.formula(f.body, inner)))
            return _mk_not(result)
        if isinstance(f, Compare):
            left = self.term(f.left, env)
            right = self.term(f.right, env)
            static = (ObjConst, NullConst)
            if isinstance(left, static) and isinstance(right, static):
                same = left == right
                return BoolConst(same if f.op == "=" else not same)
            if isinstance(left, Const) and isinstance(right, Const):
                return BoolConst(_STATIC_OPS[f.op](left.value, right.value))
            return self._count(Compare(f.op, left, right))
        if isinstance(f, Prop):
            return self._count(Prop(self.term(f.term, env)))
        if isinstance(f, BoolConst):
            return f
        if isinstance(f, Not):
            return self._count(_mk_not(self.formula(f.arg, env)))
        if isinstance(f, And):
            return self._count(_mk_and(self.formula(f.left, env), self.formula(f.right, env)))
        if isinstance(f, NextStep):
            arg = self.formula(f.arg, env)
            return arg if isinstance(arg, BoolConst) else self._count(NextStep(arg))
        if isinstance(f, Until):
            left = self.formula(f.left, env)
            right = self.formula(f.right, env)
            if isinstance(right, BoolConst) or left == FALSE:
                return right
            return self._count(Until(left, right))
        if isinstance(f, StrongSere):
            return self._count(StrongSere(self.sere(f.sere, env)))
        if isinstance(f, SuffixImpl):
            return self._count(SuffixImpl(self.sere(f.sere, env), self.formula(f.arg, env)))
        raise GroundError(f"cannot instantiate {type(f).__name__}; desugar first")

    def sere(self, r, env):
        if isinstance(r, Letter):
            return self._count(Letter(self.formula(r.formula, env)))
        return self._count(map_children(r, lambda c: self.sere(c, env)))


def instantiate(f: Formula, sig: Signature, bounds: Dict[str, int], limits: Optional[GroundLimits] = None) -> GroundProblem:
    """
    Ground a typechecked, desugared formula.

    Top-level conjuncts are instantiated separately and keep the requirement
    id they were tagged with as their origin.
    """
    inst = _Instantiator(sig, bounds, limits or GroundLimits())
    ground: List[Formula] = []
    origin: List[Optional[str]] = []
    for conjunct in conjuncts(f):
        g = inst.formula(conjunct, {})
        for part in conjuncts(g):
            if part == TRUE:
                continue
            ground.append(part)
            origin.append(conjunct.req)
    variables = sorted(inst.vars.values(), key=lambda v: v.name)
    logger.info(f"🔍 Grounded {len(ground)} conjuncts over {len(variables)} variables ({inst.nodes} nodes)")
    return GroundProblem(variables, ground, origin)


def merge_problems(problems: List[GroundProblem]) -> GroundProblem:
    variables: Dict[str, GroundVar] = {}
    ground: List[Formula] = []
    origin: List[Optional[str]] = []
    for p in problems:
        for v in p.vars:
            variables.setdefault(v.name, v)
        ground.extend(p.conjuncts)
        origin.extend(p.origin)
    return GroundProblem(sorted(variables.values(), key=lambda v: v.name), ground, origin)


def free_vars(g: GroundProblem) -> Tuple[List[GroundVar], List[GroundVar]]:
    """Split into (discrete, continuous) by declared kind."""
    discrete = [v for v in g.vars if not v.continuous]
    continuous = [v for v in g.vars if v.continuous]
    return discrete, continuous


def dump_ground(g: GroundProblem) -> str:
    lines = ["vars:"]
    for v in g.vars:
        lines.append(f"  {v.name} : {v.describe()}")
    lines.append("conjuncts:")
    for req, c in zip(g.origin, g.conjuncts):
        lines.append(f"  [{req or '-'}] {pretty(c)}")
    return "\n".join(lines) + "\n"
