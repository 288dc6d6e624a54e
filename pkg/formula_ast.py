"""
Typed AST of the property language.

Terms, formulas and SEREs are frozen dataclasses. Source spans, owning
requirement ids and type annotations never take part in equality, so two
formulas are equal exactly when they have the same structure.
"""
from dataclasses import dataclass, field, fields, replace
from fractions import Fraction
from typing import Any, Callable, Iterator, Optional, Tuple

from schemas import AttrType


@dataclass(frozen=True, kw_only=True)
class Node:
    span: Optional[Tuple[int, int]] = field(default=None, compare=False, repr=False)
    req: Optional[str] = field(default=None, compare=False, repr=False)


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------

@dataclass(frozen=True, kw_only=True)
class Term(Node):
    type: Optional[AttrType] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Const(Term):
    value: Fraction


@dataclass(frozen=True)
class Name(Term):
    """Bare identifier before name resolution."""
    ident: str


@dataclass(frozen=True)
class Attr(Term):
    obj: str
    attr: str


@dataclass(frozen=True)
class ObjRef(Term):
    var: str


@dataclass(frozen=True)
class GlobalAttr(Term):
    name: str


@dataclass(frozen=True)
class EnumLit(Term):
    symbol: str


@dataclass(frozen=True)
class NullConst(Term):
    pass


@dataclass(frozen=True)
class Add(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Sub(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Scale(Term):
    coef: Fraction
    arg: Term


@dataclass(frozen=True)
class Next(Term):
    arg: Term


@dataclass(frozen=True)
class Der(Term):
    arg: Term


@dataclass(frozen=True)
class GVar(Term):
    """Ground state variable, named "Class#i.attr" or by its global name."""
    name: str


@dataclass(frozen=True)
class ObjConst(Term):
    cls: str
    index: int

    @property
    def label(self) -> str:
        return f"{self.cls}#{self.index}"


# ---------------------------------------------------------------------------
# Formulas
# ---------------------------------------------------------------------------

@dataclass(frozen=True, kw_only=True)
class Formula(Node):
    pass


@dataclass(frozen=True)
class BoolConst(Formula):
    value: bool


@dataclass(frozen=True)
class Prop(Formula):
    term: Term


@dataclass(frozen=True)
class Compare(Formula):
    op: str
    left: Term
    right: Term


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Iff(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class NextStep(Formula):
    arg: Formula


@dataclass(frozen=True)
class Until(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Release(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Always(Formula):
    arg: Formula


@dataclass(frozen=True)
class Eventually(Formula):
    arg: Formula


@dataclass(frozen=True)
class Forall(Formula):
    var: str
    cls: str
    body: Formula


@dataclass(frozen=True)
class Exists(Formula):
    var: str
    cls: str
    body: Formula


@dataclass(frozen=True)
class StrongSere(Formula):
    sere: "Sere"


@dataclass(frozen=True)
class SuffixImpl(Formula):
    sere: "Sere"
    arg: Formula


@dataclass(frozen=True)
class SuffixImplNext(Formula):
    sere: "Sere"
    arg: Formula


@dataclass(frozen=True)
class SmtAtom(Formula):
    """Discretized atom: a boolean pysmt formula over state, primed and step variables."""
    node: Any


# ---------------------------------------------------------------------------
# SEREs
# ---------------------------------------------------------------------------

@dataclass(frozen=True, kw_only=True)
class Sere(Node):
    pass


@dataclass(frozen=True)
class Letter(Sere):
    formula: Formula


@dataclass(frozen=True)
class Concat(Sere):
    left: Sere
    right: Sere


@dataclass(frozen=True)
class Fusion(Sere):
    left: Sere
    right: Sere


@dataclass(frozen=True)
class Union(Sere):
    left: Sere
    right: Sere


@dataclass(frozen=True)
class Star(Sere):
    arg: Sere


@dataclass(frozen=True)
class Repeat(Sere):
    arg: Sere
    count: int


TRUE = BoolConst(True)
FALSE = BoolConst(False)

COMPARISON_OPS = ("<", "<=", "=", ">=", ">", "!=")
FLIPPED = {"<": ">", "<=": ">=", "=": "=", ">=": "<=", ">": "<", "!=": "!="}
NEGATED = {"<": ">=", "<=": ">", "=": "!=", ">=": "<", ">": "<=", "!=": "="}

ATOMIC = (Prop, Compare, BoolConst, SmtAtom)
TEMPORAL = (NextStep, Until, Release, Always, Eventually, StrongSere, SuffixImpl, SuffixImplNext)
QUANTIFIERS = (Forall, Exists)


# ---------------------------------------------------------------------------
# Generic traversal
# ---------------------------------------------------------------------------

def _child_fields(node: Node):
    for f in fields(node):
        if f.name in ("span", "req", "type"):
            continue
        value = getattr(node, f.name)
        if isinstance(value, Node):
            yield f.name, value


def children(node: Node) -> Iterator[Node]:
    for _, child in _child_fields(node):
        yield child


def map_children(node: Node, fn: Callable[[Node], Node]) -> Node:
    """Rebuild node with fn applied to every direct child; returns node itself if nothing changed."""
    changes = {}
    for name, child in _child_fields(node):
        new = fn(child)
        if new is not child:
            changes[name] = new
    return replace(node, **changes) if changes else node


def walk(node: Node) -> Iterator[Node]:
    """Pre-order traversal."""
    stack = [node]
    while stack:
        current = stack.pop()
        yield current
        stack.extend(reversed(list(children(current))))


def size(node: Node) -> int:
    return sum(1 for _ in walk(node))


def dag_size(node: Node) -> int:
    """Node count with physically shared subterms counted once."""
    seen = set()
    stack = [node]
    while stack:
        current = stack.pop()
        if id(current) in seen:
            continue
        seen.add(id(current))
        stack.extend(children(current))
    return len(seen)


def tag_requirement(node: Node, req_id: Optional[str]) -> Node:
    """Stamp every node with its owning requirement id."""
    tagged = map_children(node, lambda child: tag_requirement(child, req_id))
    return replace(tagged, req=req_id)


def conjoin(formulas) -> Formula:
    result = None
    for f in formulas:
        result = f if result is None else And(result, f)
    return TRUE if result is None else result


def conjuncts(formula: Formula):
    """Flatten a top-level And chain, left to right."""
    if isinstance(formula, And):
        return conjuncts(formula.left) + conjuncts(formula.right)
    return [formula]
