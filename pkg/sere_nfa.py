"""
SERE to epsilon-free NFA compilation.

Letters stay formulas; an edge is taken when its letter holds at the
current position. Fusion overlaps the last letter of the left operand with
the first letter of the right one by conjoining the two letters.
"""
from dataclasses import dataclass
from typing import Callable, Dict, FrozenSet, List, Optional, Tuple

from formula_ast import And, BoolConst, Concat, Fusion, Letter, Not, Or, Prop, Repeat, SmtAtom, Star, Union


@dataclass(frozen=True)
class Nfa:
    states: int
    initial: FrozenSet[int]
    accepting: FrozenSet[int]
    edges: Tuple[Tuple[int, object, int], ...]

    @property
    def accepts_empty(self) -> bool:
        return bool(self.initial & self.accepting)

    def outgoing(self, state: int):
        return [(letter, dst) for src, letter, dst in self.edges if src == state]


@dataclass
class _Fragment:
    initial: set
    accepting: set
    edges: list

    @property
    def nullable(self) -> bool:
        return bool(self.initial & self.accepting)


class _Builder:
    def __init__(self):
        self.count = 0

    def fresh(self) -> int:
        self.count += 1
        return self.count - 1

    def build(self, r) -> _Fragment:
        if isinstance(r, Letter):
            s0, s1 = self.fresh(), self.fresh()
            return _Fragment({s0}, {s1}, [(s0, r.formula, s1)])
        if isinstance(r, Concat):
            return self._concat(self.build(r.left), self.build(r.right))
        if isinstance(r, Union):
            a, b = self.build(r.left), self.build(r.right)
            return _Fragment(a.initial | b.initial, a.accepting | b.accepting, a.edges + b.edges)
        if isinstance(r, Star):
            a = self.build(r.arg)
            s = self.fresh()
            loops = [(p, letter, i) for p, letter, q in a.edges if q in a.accepting for i in a.initial]
            return _Fragment(a.initial | {s}, a.accepting | {s}, a.edges + loops)
        if isinstance(r, Repeat):
            if r.count == 0:
                s = self.fresh()
                return _Fragment({s}, {s}, [])
            result = self.build(r.arg)
            for _ in range(r.count - 1):
                result = self._concat(result, self.build(r.arg))
            return result
        if isinstance(r, Fusion):
            a, b = self.build(r.left), self.build(r.right)
            fused = [
                (p, And(x, y), dst)
                for p, x, q in a.edges if q in a.accepting
                for i, y, dst in b.edges if i in b.initial
            ]
            return _Fragment(set(a.initial), set(b.accepting), a.edges + b.edges + fused)
        raise TypeError(f"not a sere: {r!r}")

    def _concat(self, a: _Fragment, b: _Fragment) -> _Fragment:
        bridges = [(p, letter, i) for p, letter, q in a.edges if q in a.accepting for i in b.initial]
        initial = a.initial | (b.initial if a.nullable else set())
        accepting = b.accepting | (a.accepting if b.nullable else set())
        return _Fragment(initial, accepting, a.edges + b.edges + bridges)


def _trim(frag: _Fragment) -> Nfa:
    succ: Dict[int, list] = {}
    pred: Dict[int, list] = {}
    for src, _, dst in frag.edges:
        succ.setdefault(src, []).append(dst)
        pred.setdefault(dst, []).append(src)

    reach = set()
    stack = sorted(frag.initial)
    while stack:
        s = stack.pop()
        if s not in reach:
            reach.add(s)
            stack.extend(succ.get(s, []))
    useful = set()
    stack = sorted(frag.accepting & reach)
    while stack:
        s = stack.pop()
        if s not in useful and s in reach:
            useful.add(s)
            stack.extend(pred.get(s, []))

    # Renumber in breadth-first order from the initial states.
    order: List[int] = []
    queue = sorted(frag.initial & useful)
    seen = set(queue)
    while queue:
        s = queue.pop(0)
        order.append(s)
        for d in succ.get(s, []):
            if d in useful and d not in seen:
                seen.add(d)
                queue.append(d)
    index = {s: i for i, s in enumerate(order)}
    edges = tuple(
        (index[src], letter, index[dst])
        for src, letter, dst in frag.edges
        if src in index and dst in index
    )
    return Nfa(
        states=len(order),
        initial=frozenset(index[s] for s in frag.initial if s in index),
        accepting=frozenset(index[s] for s in frag.accepting if s in index),
        edges=edges,
    )


def compile_sere(r) -> Nfa:
    """Epsilon-free NFA with L(nfa) = L(r); every state reachable and co-reachable."""
    return _trim(_Builder().build(r))


def letter_holds(letter, valuation: Dict) -> bool:
    """Evaluate a boolean letter over {name: bool}; SmtAtom leaves look up their pysmt node."""
    if isinstance(letter, BoolConst):
        return letter.value
    if isinstance(letter, Prop):
        return bool(valuation[letter.term.name])
    if isinstance(letter, SmtAtom):
        return bool(valuation[letter.node])
    if isinstance(letter, Not):
        return not letter_holds(letter.arg, valuation)
    if isinstance(letter, And):
        return letter_holds(letter.left, valuation) and letter_holds(letter.right, valuation)
    if isinstance(letter, Or):
        return letter_holds(letter.left, valuation) or letter_holds(letter.right, valuation)
    raise TypeError(f"cannot evaluate letter {letter!r}")


def nfa_accepts(nfa: Nfa, word: List[Dict], holds: Optional[Callable] = None) -> bool:
    holds = holds or letter_holds
    current = set(nfa.initial)
    for valuation in word:
        current = {dst for src, letter, dst in nfa.edges if src in current and holds(letter, valuation)}
        if not current:
            return False
    return bool(current & nfa.accepting)
