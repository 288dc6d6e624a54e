"""
Canonical text rendering of formulas; parse_constraint(pretty(f)) == f.
"""
from fractions import Fraction

from formula_ast import (
    FLIPPED,
    Add, Always, And, Attr, BoolConst, Compare, Concat, Const, Der, EnumLit, Eventually, Exists,
    Forall, Fusion, GlobalAttr, GVar, Iff, Implies, Letter, Name, Next, NextStep, Not, NullConst,
    ObjConst, ObjRef, Or, Prop, Release, Repeat, Scale, SmtAtom, Star, StrongSere, Sub, SuffixImpl,
    SuffixImplNext, Union, Until,
)


def format_const(value: Fraction) -> str:
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def pretty_term(t) -> str:
    if isinstance(t, Const):
        return format_const(t.value)
    if isinstance(t, Attr):
        return f"{t.obj}.{t.attr}"
    if isinstance(t, (GVar, GlobalAttr)):
        return t.name
    if isinstance(t, ObjRef):
        return t.var
    if isinstance(t, Name):
        return t.ident
    if isinstance(t, EnumLit):
        return t.symbol
    if isinstance(t, NullConst):
        return "null"
    if isinstance(t, ObjConst):
        return t.label
    if isinstance(t, Next):
        return f"next({pretty_term(t.arg)})"
    if isinstance(t, Der):
        return f"der({pretty_term(t.arg)})"
    if isinstance(t, Scale):
        return f"{format_const(t.coef)} * {_wrap_term(t.arg)}"
    if isinstance(t, (Add, Sub)):
        op = "+" if isinstance(t, Add) else "-"
        left = pretty_term(t.left) if isinstance(t.left, (Add, Sub)) else _wrap_term(t.left)
        return f"{left} {op} {_wrap_term(t.right)}"
    raise TypeError(f"cannot render term {t!r}")


def _wrap_term(t) -> str:
    text = pretty_term(t)
    return f"({text})" if isinstance(t, (Add, Sub, Scale)) else text


_BINARY = {And: "and", Or: "or", Implies: "implies", Iff: "iff", Until: "until", Release: "releases"}
_UNARY = {Not: "not", Always: "always", Eventually: "eventually", NextStep: "next"}

_BARE_OPERAND = (Prop, BoolConst, StrongSere)
_BARE_CHILD = (Prop, BoolConst, Compare, StrongSere)


def pretty(f) -> str:
    if isinstance(f, BoolConst):
        return "true" if f.value else "false"
    if isinstance(f, Prop):
        return pretty_term(f.term)
    if isinstance(f, Compare):
        left, op, right = f.left, f.op, f.right
        if isinstance(left, Const) and not isinstance(right, Const):
            left, right, op = right, left, FLIPPED[op]
        return f"{pretty_term(left)} {op} {pretty_term(right)}"
    if isinstance(f, SmtAtom):
        return f"[{f.node.serialize()}]"
    for cls, word in _UNARY.items():
        if isinstance(f, cls):
            return f"{word} {_operand(f.arg)}"
    for cls, word in _BINARY.items():
        if isinstance(f, cls):
            return f"{_child(f.left)} {word} {_child(f.right)}"
    if isinstance(f, (Forall, Exists)):
        word = "forall" if isinstance(f, Forall) else "exists"
        return f"{word} {f.var} in {f.cls} . {_operand(f.body)}"
    if isinstance(f, StrongSere):
        return f"{{{pretty_sere(f.sere)}}}!"
    if isinstance(f, SuffixImpl):
        return f"{{{pretty_sere(f.sere)}}} |-> {_operand(f.arg)}"
    if isinstance(f, SuffixImplNext):
        return f"{{{pretty_sere(f.sere)}}} |=> {_operand(f.arg)}"
    raise TypeError(f"cannot render formula {f!r}")


def _operand(f) -> str:
    text = pretty(f)
    return text if isinstance(f, _BARE_OPERAND) else f"({text})"


def _child(f) -> str:
    text = pretty(f)
    return text if isinstance(f, _BARE_CHILD) else f"({text})"


def pretty_sere(r) -> str:
    if isinstance(r, Letter):
        text = pretty(r.formula)
        return text if isinstance(r.formula, (Prop, BoolConst, Compare)) else f"({text})"
    if isinstance(r, Star):
        return f"{_sere_child(r.arg)}[*]"
    if isinstance(r, Repeat):
        return f"{_sere_child(r.arg)}[*{r.count}]"
    ops = {Concat: ";", Fusion: ":", Union: "|"}
    for cls, op in ops.items():
        if isinstance(r, cls):
            return f"{_sere_child(r.left)} {op} {_sere_child(r.right)}"
    raise TypeError(f"cannot render sere {r!r}")


def _sere_child(r) -> str:
    text = pretty_sere(r)
    return text if isinstance(r, Letter) else f"{{{text}}}"
