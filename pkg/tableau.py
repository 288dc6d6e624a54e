"""
Core temporal formula -> fair transition system.

The tableau works on the negation normal form: every X/U subformula gets one
boolean elementary variable per polarity, constrained one way only
(v -> obligation). Eventualities become justice constraints. Non-boolean
atoms are mirrored by atom bits (bit <-> atom in trans) so init and fairness
range over booleans only.
"""
import itertools
import logging

from pysmt.shortcuts import And, Bool, Iff, Implies, Not, Or, Symbol
from pysmt.typing import BOOL

from discretize import DiscreteProblem
from errors import AutomataError
from formula_ast import (
    And as FAnd, BoolConst, Not as FNot, NextStep, SmtAtom, StrongSere, SuffixImpl, Until,
)
from fts import Fts
from pretty import pretty
from sere_nfa import compile_sere

logger = logging.getLogger(__name__)


class _Tableau:
    def __init__(self, problem: DiscreteProblem):
        self.problem = problem
        self.state_vars = list(problem.state.values())
        self.primed = dict(problem.primed)
        self.ground_bools = {s for s in self.state_vars if s.symbol_type().is_bool_type()}
        self.trans = []
        self.fairness = []
        self.labels = {}
        self.atom_bits = {}
        self.memo = {}
        self.elementary = itertools.count()
        self.sere_ids = itertools.count()

    def new_bool(self, name: str, label: str = None):
        sym = Symbol(name, BOOL)
        self.state_vars.append(sym)
        self.primed[sym] = Symbol(name + "'", BOOL)
        if label:
            self.labels[sym] = label
        return sym

    def prime(self, formula):
        return formula.substitute(self.primed)

    def atom(self, node):
        if node.is_symbol() and node in self.ground_bools:
            return node
        if node not in self.atom_bits:
            bit = self.new_bool(f"atom#{len(self.atom_bits)}", node.serialize())
            self.atom_bits[node] = bit
            self.trans.append(Iff(bit, node))
        return self.atom_bits[node]

    def enc(self, f, pos: bool = True):
        key = (f, pos)
        if key not in self.memo:
            self.memo[key] = self._enc(f, pos)
        return self.memo[key]

    def _enc(self, f, pos: bool):
        if isinstance(f, BoolConst):
            return Bool(f.value == pos)
        if isinstance(f, SmtAtom):
            lit = self.atom(f.node)
            return lit if pos else Not(lit)
        if isinstance(f, FNot):
            return self.enc(f.arg, not pos)
        if isinstance(f, FAnd):
            left, right = self.enc(f.left, pos), self.enc(f.right, pos)
            return And(left, right) if pos else Or(left, right)
        if isinstance(f, NextStep):
            arg = self.enc(f.arg, pos)
            v = self.new_bool(f"el#{next(self.elementary)}", ("" if pos else "not ") + pretty(f))
            self.trans.append(Implies(v, self.prime(arg)))
            return v
        if isinstance(f, Until):
            h, k = self.enc(f.left, pos), self.enc(f.right, pos)
            v = self.new_bool(f"el#{next(self.elementary)}", ("" if pos else "not ") + pretty(f))
            if pos:
                self.trans.append(Implies(v, Or(k, And(h, self.prime(v)))))
                self.fairness.append(Or(Not(v), k))
            else:
                # not (h U k) == (not h) R (not k)
                self.trans.append(Implies(v, And(k, Or(h, self.prime(v)))))
            return v
        if isinstance(f, StrongSere):
            if pos:
                return self.exists_match(f.sere, Bool(True), empty_ok=True)
            nfa = compile_sere(f.sere)
            if nfa.accepts_empty:
                return Bool(False)
            return self.forall_match(f.sere, Bool(False))
        if isinstance(f, SuffixImpl):
            if pos:
                return self.forall_match(f.sere, self.enc(f.arg, True))
            return self.exists_match(f.sere, self.enc(f.arg, False), empty_ok=False)
        raise AutomataError(f"non-core construct {type(f).__name__}; desugar first")

    def exists_match(self, sere, conclusion, empty_ok: bool):
        """Pending bits o_q plus breakpoint bits b_q; the breakpoint set must empty infinitely often."""
        nfa = compile_sere(sere)
        if empty_ok and nfa.accepts_empty:
            return Bool(True)
        n = next(self.sere_ids)
        o = [self.new_bool(f"sere#{n}.o{q}") for q in range(nfa.states)]
        b = [self.new_bool(f"sere#{n}.b{q}") for q in range(nfa.states)]
        for q in range(nfa.states):
            pending, tracked = [], []
            for letter, dst in nfa.outgoing(q):
                holds = self.enc(letter, True)
                done = conclusion if dst in nfa.accepting else Bool(False)
                pending.append(And(holds, Or(done, self.prime(o[dst]))))
                tracked.append(And(holds, Or(done, And(self.prime(o[dst]), self.prime(b[dst])))))
            self.trans.append(Implies(o[q], Or(pending)))
            self.trans.append(Implies(b[q], Or(tracked)))
            self.trans.append(Implies(b[q], o[q]))
        empty = And([Not(bit) for bit in b])
        self.trans.append(Implies(empty, And([Implies(self.prime(o[q]), self.prime(b[q])) for q in range(nfa.states)])))
        self.fairness.append(empty)
        return Or([o[q] for q in sorted(nfa.initial)])

    def forall_match(self, sere, conclusion):
        """Universal bits u_q: every run reaching acceptance asserts the conclusion there."""
        nfa = compile_sere(sere)
        n = next(self.sere_ids)
        u = [self.new_bool(f"sere#{n}.u{q}") for q in range(nfa.states)]
        for src, letter, dst in nfa.edges:
            holds = self.enc(letter, True)
            then = And(self.prime(u[dst]), conclusion) if dst in nfa.accepting else self.prime(u[dst])
            self.trans.append(Implies(And(u[src], holds), then))
        return And([u[q] for q in sorted(nfa.initial)])


def compile_ltl(problem: DiscreteProblem) -> Fts:
    """
    Build the fair transition system whose fair runs are exactly the
    models of the problem's formula.

    Raises:
        AutomataError: a sugar construct survived desugaring
    """
    t = _Tableau(problem)
    top = t.enc(problem.formula, True)
    # Atom bits over current state only are pinned in every state, the last one included.
    state = set(problem.state.values())
    links = [Iff(bit, node) for node, bit in t.atom_bits.items() if node.get_free_variables() <= state]
    init = And([top, problem.domain_constraint(False)] + links)
    trans = And(
        [problem.axioms] + t.trans + [t.prime(link) for link in links]
        + [problem.domain_constraint(False), problem.domain_constraint(True)]
    )
    fairness = []
    for f in t.fairness:
        if f not in fairness:
            fairness.append(f)
    fts = Fts(
        state_vars=t.state_vars,
        input_vars=list(problem.inputs),
        init=init,
        trans=trans,
        fairness=fairness,
        primed=t.primed,
        domains=dict(problem.domains),
        labels=t.labels,
    )
    logger.info(
        f"🔒 FTS: {len(fts.state_vars)} state vars ({len(t.atom_bits)} atom bits), "
        f"{len(fts.fairness)} fairness constraints"
    )
    return fts
