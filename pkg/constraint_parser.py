"""
Parser for the property language.

Grammar summary (full EBNF in docs/grammar.md):
  formula   := binary levels, loosest first: until/releases, iff, implies, or, and
  unary     := primary | prefix unary
  prefix    := not | always | never | eventually | in the future | next
             | forall v in C . | exists v in C .
  primary   := comparison | sere_formula | true | false | attribute | ( formula )
  sere_form := { sere } ! | { sere } |-> unary | { sere } |=> unary
Quantifiers and unary temporal operators bind the next unary formula only.
"""
import re
from dataclasses import replace
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Optional

from pyparsing import (
    Empty,
    Forward,
    Keyword,
    Literal,
    Located,
    MatchFirst,
    OpAssoc,
    ParseBaseException,
    ParserElement,
    Regex,
    Suppress,
    Word,
    alphanums,
    alphas,
    infix_notation,
)

from errors import LangError
from formula_ast import (
    FALSE, FLIPPED, TRUE,
    Add, Always, And, Attr, Concat, Const, Eventually, Exists, Forall, Formula, Fusion, GlobalAttr,
    EnumLit, Iff, Implies, Letter, Name, Next, NextStep, Not, NullConst, ObjRef, Or, Prop, Release,
    Repeat, Scale, Star, StrongSere, Sub, SuffixImpl, SuffixImplNext, Term, Union, Until, Compare,
    Der, map_children, tag_requirement,
)
from schemas import Signature

ParserElement.enable_packrat()

RESERVED = (
    "in", "there", "for", "forall", "exists", "always", "never", "eventually", "next",
    "not", "until", "releases", "implies", "iff", "and", "or", "true", "false", "null",
    "der", "is",
)

LEGAL_CHARS = re.compile(r"[A-Za-z0-9_\s.(){}\[\]*+\-/<>=!|;:]")


def _kw(word: str) -> Keyword:
    return Keyword(word)


def _with_span(node, start: int, end: int):
    if getattr(node, "span", None) is None:
        return replace(node, span=(start, end))
    return node


def _spanned(expr: ParserElement) -> ParserElement:
    def action(s, l, t):
        start = t[0]
        while start < t[2] and s[start].isspace():
            start += 1
        return _with_span(t[1][0], start, t[2])
    return Located(expr).set_parse_action(action)


def _rational(text: str, loc: int = 0) -> Fraction:
    num, _, den = text.partition("/")
    value = Fraction(num)
    if den:
        if Fraction(den) == 0:
            raise LangError(f"division by zero in constant {text}", kind="lexical", span=(loc, loc + len(text)))
        value = value / Fraction(den)
    return value


# ---------------------------------------------------------------------------
# Term actions
# ---------------------------------------------------------------------------

def _negate(s, loc, t):
    items = list(t[0])
    operand = items[-1]
    for _ in items[:-1]:
        operand = Const(-operand.value) if isinstance(operand, Const) else Scale(Fraction(-1), operand)
    return operand


def _multiply(s, loc, t):
    items = list(t[0])
    result = items[0]
    for i in range(2, len(items), 2):
        right = items[i]
        if isinstance(result, Const) and isinstance(right, Const):
            result = Const(result.value * right.value)
        elif isinstance(result, Const):
            result = Scale(result.value, right)
        elif isinstance(right, Const):
            result = Scale(right.value, result)
        else:
            raise LangError("nonlinear term: products need a constant factor", kind="syntax", span=(loc, loc + 1))
    return result


def _add_sub(s, loc, t):
    items = list(t[0])
    result = items[0]
    for i in range(1, len(items), 2):
        builder = Add if items[i] == "+" else Sub
        result = builder(result, items[i + 1])
    return result


def _comparison(s, loc, t):
    left, op, right = t[0], t[1], t[2]
    if isinstance(left, Const) and not isinstance(right, Const):
        left, right, op = right, left, FLIPPED[op]
    return Compare(op, left, right)


# ---------------------------------------------------------------------------
# Formula actions
# ---------------------------------------------------------------------------

BINARY = {
    "and": And, "or": Or, "implies": Implies, "->": Implies,
    "iff": Iff, "<->": Iff, "until": Until, "releases": Release,
}


def _fold_left(s, loc, t):
    items = list(t[0])
    result = items[0]
    for i in range(1, len(items), 2):
        result = BINARY[items[i]](result, items[i + 1])
    return result


def _fold_right(s, loc, t):
    items = list(t[0])
    result = items[-1]
    for i in range(len(items) - 2, 0, -2):
        result = BINARY[items[i]](items[i - 1], result)
    return result


def _prefix(s, loc, t):
    op, arg = t[0], t[1]
    if isinstance(op, tuple):
        kind, var, cls = op
        return (Forall if kind == "forall" else Exists)(var, cls, arg)
    if op == "not":
        return Not(arg)
    if op == "always":
        return Always(arg)
    if op == "never":
        return Always(Not(arg))
    if op == "eventually":
        return Eventually(arg)
    return NextStep(arg)


def _letter_not(s, loc, t):
    items = list(t[0])
    operand = items[-1]
    for _ in items[:-1]:
        operand = Not(operand)
    return operand


def _sere_binary(s, loc, t):
    items = list(t[0])
    result = items[0]
    builders = {";": Concat, ":": Fusion, "|": Union}
    for i in range(1, len(items), 2):
        result = builders[items[i]](result, items[i + 1])
    return result


def _sere_postfix(s, loc, t):
    items = list(t[0])
    result = items[0]
    for op in items[1:]:
        digits = op[2:-1]
        result = Repeat(result, int(digits)) if digits else Star(result)
    return result


def _sere_formula(s, loc, t):
    sere, op = t[0], t[1]
    if op == "!":
        return StrongSere(sere)
    if op == "|->":
        return SuffixImpl(sere, t[2])
    return SuffixImplNext(sere, t[2])


@lru_cache(maxsize=None)
def _grammar() -> ParserElement:
    reserved = MatchFirst([_kw(w) for w in RESERVED])
    ident = ~reserved + Word(alphas + "_", alphanums + "_")
    lpar, rpar = Suppress("("), Suppress(")")

    # Terms
    term = Forward()
    rational = Regex(r"\d+(?:\.\d+)?(?:/\d+(?:\.\d+)?)?").set_parse_action(lambda s, l, t: Const(_rational(t[0], l)))
    attr_ref = Regex(r"[A-Za-z_]\w*\.[A-Za-z_]\w*").set_parse_action(
        lambda s, l, t: Attr(*t[0].split(".", 1))
    )
    name = ident.copy().set_parse_action(lambda s, l, t: Name(t[0]))
    null = _kw("null").set_parse_action(lambda s, l, t: NullConst())
    next_term = (Suppress(_kw("next")) + lpar + term + rpar).set_parse_action(lambda s, l, t: Next(t[0]))
    der_term = (Suppress(_kw("der")) + lpar + term + rpar).set_parse_action(lambda s, l, t: Der(t[0]))
    term_atom = _spanned(rational | next_term | der_term | attr_ref | null | name)
    minus = Regex(r"-(?!>)")
    term <<= infix_notation(term_atom, [
        (minus, 1, OpAssoc.RIGHT, _negate),
        (Literal("*"), 2, OpAssoc.LEFT, _multiply),
        (Literal("+") | minus, 2, OpAssoc.LEFT, _add_sub),
    ])

    # Comparators, symbolic and worded
    def sugar(words, op):
        expr = _kw(words[0])
        for w in words[1:]:
            expr = expr + _kw(w)
        return expr.set_parse_action(lambda s, l, t: op)

    comparator = (
        sugar(["is", "at", "least"], ">=") | sugar(["is", "at", "most"], "<=")
        | sugar(["is", "greater", "than"], ">") | sugar(["is", "less", "than"], "<")
        | sugar(["is", "equal", "to"], "=") | sugar(["is", "different", "from"], "!=")
        | Regex(r"<=|>=|!=|=(?!>)|<(?!-)|>")
    )
    comparison = _spanned((term + comparator + term).set_parse_action(_comparison))

    bool_const = _kw("true").set_parse_action(lambda s, l, t: TRUE) | _kw("false").set_parse_action(lambda s, l, t: FALSE)
    prop = _spanned((attr_ref.copy() | name.copy()).set_parse_action(lambda s, l, t: Prop(t[0])))

    # SEREs: letters are boolean combinations of atoms
    letter_atom = comparison | bool_const | prop
    letter = infix_notation(letter_atom, [
        (_kw("not"), 1, OpAssoc.RIGHT, _letter_not),
        (_kw("and"), 2, OpAssoc.LEFT, _fold_left),
        (_kw("or"), 2, OpAssoc.LEFT, _fold_left),
    ])
    sere = Forward()
    sere_atom = (letter + Empty()).set_parse_action(lambda s, l, t: Letter(t[0]))
    sere <<= infix_notation(sere_atom, [
        (Regex(r"\[\*\d*\]"), 1, OpAssoc.LEFT, _sere_postfix),
        (Literal(":"), 2, OpAssoc.LEFT, _sere_binary),
        (Literal(";"), 2, OpAssoc.LEFT, _sere_binary),
        (Regex(r"\|(?![-=]>)"), 2, OpAssoc.LEFT, _sere_binary),
    ], lpar=Suppress("{"), rpar=Suppress("}"))

    # Formulas
    formula = Forward()
    unary = Forward()
    sere_formula = _spanned(
        (Suppress("{") + sere + Suppress("}")
         + (Literal("!") | Literal("|->") + unary | Literal("|=>") + unary)).set_parse_action(_sere_formula)
    )
    primary = comparison | sere_formula | bool_const | prop | (lpar + formula + rpar)

    forall_head = (_kw("forall") | _kw("for") + _kw("all")).set_parse_action(lambda s, l, t: "forall")
    exists_head = (_kw("exists") | _kw("there") + _kw("exists")).set_parse_action(lambda s, l, t: "exists")
    quantifier = ((forall_head | exists_head) + ident + Suppress(_kw("in")) + ident + Suppress(".")).set_parse_action(
        lambda s, l, t: [(t[0], t[1], t[2])]
    )
    future = (_kw("in") + _kw("the") + _kw("future")).set_parse_action(lambda s, l, t: "eventually")
    prefix = (
        quantifier | _kw("not") | _kw("always") | _kw("never") | _kw("eventually") | future | _kw("next")
    )
    unary <<= primary | _spanned((prefix + unary).set_parse_action(_prefix))

    formula <<= infix_notation(unary, [
        (_kw("and"), 2, OpAssoc.LEFT, _fold_left),
        (_kw("or"), 2, OpAssoc.LEFT, _fold_left),
        (_kw("implies") | Literal("->"), 2, OpAssoc.RIGHT, _fold_right),
        (_kw("iff") | Literal("<->"), 2, OpAssoc.LEFT, _fold_left),
        (_kw("until") | _kw("releases"), 2, OpAssoc.RIGHT, _fold_right),
    ])
    return formula


# ---------------------------------------------------------------------------
# Name resolution
# ---------------------------------------------------------------------------

def _resolve_term(term: Term, sig: Signature, scope: Dict[str, str]) -> Term:
    if isinstance(term, Name):
        ident = term.ident
        if ident in scope:
            return ObjRef(ident, span=term.span)
        if sig.get_global(ident) is not None:
            return GlobalAttr(ident, span=term.span)
        if ident in sig.enum_symbols():
            return EnumLit(ident, span=term.span)
        raise LangError(f"unknown attribute {ident}", kind="name", span=term.span)
    if isinstance(term, Attr):
        if term.obj not in scope:
            if sig.get_class(term.obj) is not None:
                raise LangError(f"class {term.obj} used as a variable", kind="name", span=term.span)
            raise LangError(f"unbound variable {term.obj}", kind="name", span=term.span)
        cls = sig.get_class(scope[term.obj])
        if cls.attribute(term.attr) is None:
            raise LangError(f"unknown attribute {cls.name}.{term.attr}", kind="name", span=term.span)
        return term
    return map_children(term, lambda child: _resolve_term(child, sig, scope))


def _resolve(node, sig: Signature, scope: Dict[str, str]):
    if isinstance(node, (Forall, Exists)):
        if sig.get_class(node.cls) is None:
            raise LangError(f"unknown class {node.cls}", kind="name", span=node.span)
        inner = dict(scope)
        inner[node.var] = node.cls
        return replace(node, body=_resolve(node.body, sig, inner))
    if isinstance(node, Term):
        return _resolve_term(node, sig, scope)
    return map_children(node, lambda child: _resolve(child, sig, scope))


def parse_constraint(src: str, sig: Signature, req_id: Optional[str] = None) -> Formula:
    """
    Parse one constraint string into a resolved, untyped formula.

    Raises:
        LangError: lexical, syntax or name error, with span and requirement id
    """
    for match in re.finditer(r".", src, re.S):
        if not LEGAL_CHARS.match(match.group()):
            pos = match.start()
            raise LangError(f"unexpected character {match.group()!r}", kind="lexical", span=(pos, pos + 1), req_id=req_id)
    try:
        parsed = _grammar().parse_string(src, parse_all=True)[0]
    except ParseBaseException as e:
        raise LangError(f"syntax error: {e.msg}", kind="syntax", span=(e.loc, e.loc + 1), req_id=req_id) from e
    except LangError as e:
        raise e.with_requirement(req_id) if req_id else e
    try:
        resolved = _resolve(parsed, sig, {})
    except LangError as e:
        raise e.with_requirement(req_id) if req_id else e
    return tag_requirement(resolved, req_id)
