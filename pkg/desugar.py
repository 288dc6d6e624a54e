"""
Rewrite formulas into the core connectives:
atoms, not, and, next, until, quantifiers, {r}! and {r} |-> f.
"""
from formula_ast import (
    TRUE,
    Always, And, BoolConst, Compare, Concat, Eventually, Exists, Forall, Iff, Implies, Letter,
    NextStep, Not, Or, Prop, Release, StrongSere, SuffixImpl, SuffixImplNext, Until, map_children,
)


def neg(f):
    """Negation that cancels a double negation."""
    if isinstance(f, Not):
        return f.arg
    return Not(f, span=f.span, req=f.req)


def desugar(f):
    """Idempotent rewrite into core form; shared operands stay shared."""
    f = map_children(f, desugar)
    span, req = f.span, f.req
    if isinstance(f, Not):
        return neg(f.arg)
    if isinstance(f, Always):
        return Not(Until(TRUE, neg(f.arg), span=span, req=req), span=span, req=req)
    if isinstance(f, Eventually):
        return Until(TRUE, f.arg, span=span, req=req)
    if isinstance(f, Release):
        return Not(Until(neg(f.left), neg(f.right), span=span, req=req), span=span, req=req)
    if isinstance(f, Or):
        return Not(And(neg(f.left), neg(f.right), span=span, req=req), span=span, req=req)
    if isinstance(f, Implies):
        return Not(And(f.left, neg(f.right), span=span, req=req), span=span, req=req)
    if isinstance(f, Iff):
        forward = Not(And(f.left, neg(f.right)), span=span, req=req)
        backward = Not(And(f.right, neg(f.left)), span=span, req=req)
        return And(forward, backward, span=span, req=req)
    if isinstance(f, SuffixImplNext):
        return SuffixImpl(Concat(f.sere, Letter(TRUE)), f.arg, span=span, req=req)
    return f


CORE = (Prop, Compare, BoolConst, And, Not, NextStep, Until, Forall, Exists, StrongSere, SuffixImpl)
