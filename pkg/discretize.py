"""
Hybrid to discrete reduction.

Each discrete step is either a flow (positive duration, discrete variables
frozen, every continuous x moves to x + der.x * delta) or a jump (zero
duration, anything may change). der.x is a transition-scoped input; an atom
mentioning der(x) reads it and only holds on flows. The flow law is the one
product of two variables in the encoding; every atom stays linear.
"""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from pysmt.shortcuts import (
    GE, GT, LE, LT, And, Bool, Equals, Iff, Implies, Int, Not, Plus, Real, Symbol, Times, ToReal,
)
from pysmt.typing import BOOL, INT, REAL

from errors import DiscretizeError, TraceError
from formula_ast import (
    Add, BoolConst, Compare, Const, Der, EnumLit, GVar, Next, NullConst, ObjConst, Prop, Scale,
    SmtAtom, Sub, conjoin, map_children,
)
from ground import GroundProblem, free_vars
from schemas import HybridTrace, TraceStep

logger = logging.getLogger(__name__)

FLOW_NAME = "step.flow"
DELTA_NAME = "step.delta"
DER_PREFIX = "der."


@dataclass
class StepModel:
    flow: object
    delta: object
    continuous: List[str]
    ders: Dict[str, object] = field(default_factory=dict)   # continuous var name -> der input

    @property
    def inputs(self) -> List[object]:
        return [self.flow, self.delta] + [self.ders[name] for name in self.continuous]


@dataclass
class DiscreteProblem:
    ground: GroundProblem
    state: Dict[str, object]          # ground var name -> pysmt symbol
    primed: Dict[object, object]      # state symbol -> next-state symbol
    inputs: List[object]
    step: Optional[StepModel]
    conjuncts: list
    axioms: object                    # transition constraint: flow and jump laws
    domains: Dict[object, Tuple[int, int]] = field(default_factory=dict)

    @property
    def formula(self):
        return conjoin(self.conjuncts)

    def domain_constraint(self, primed: bool = False):
        parts = []
        for sym, (lo, hi) in self.domains.items():
            s = self.primed[sym] if primed else sym
            parts.append(And(LE(Int(lo), s), LE(s, Int(hi))))
        return And(parts) if parts else Bool(True)


def _symbol_type(var):
    if var.kind == "boolean":
        return BOOL
    if var.kind == "real":
        return REAL
    return INT


def _enum_index(t) -> int:
    if isinstance(t, ObjConst):
        return t.index
    if isinstance(t, NullConst):
        return 0
    return list(t.type.symbols).index(t.symbol)


class _Linear:
    """Linear form: {(slot, var name): coefficient} + constant; slot in cur/next/der."""

    def __init__(self, coeffs=None, const=Fraction(0)):
        self.coeffs: Dict[Tuple[str, str], Fraction] = dict(coeffs or {})
        self.const = Fraction(const)

    def scaled(self, k: Fraction) -> "_Linear":
        return _Linear({key: c * k for key, c in self.coeffs.items()}, self.const * k)

    def plus(self, other: "_Linear") -> "_Linear":
        coeffs = dict(self.coeffs)
        for key, c in other.coeffs.items():
            coeffs[key] = coeffs.get(key, Fraction(0)) + c
        return _Linear({k: c for k, c in coeffs.items() if c != 0}, self.const + other.const)

    def slots(self):
        return {slot for slot, _ in self.coeffs}


def _linear(t, slot: str = "cur") -> _Linear:
    if isinstance(t, Const):
        return _Linear(const=t.value)
    if isinstance(t, (EnumLit, ObjConst, NullConst)):
        return _Linear(const=Fraction(_enum_index(t)))
    if isinstance(t, GVar):
        return _Linear({(slot, t.name): Fraction(1)})
    if isinstance(t, Next):
        return _linear(t.arg, "next")
    if isinstance(t, Der):
        inner = _linear(t.arg, slot)
        return _Linear({("der", name): c for (_, name), c in inner.coeffs.items()})
    if isinstance(t, Add):
        return _linear(t.left, slot).plus(_linear(t.right, slot))
    if isinstance(t, Sub):
        return _linear(t.left, slot).plus(_linear(t.right, slot).scaled(Fraction(-1)))
    if isinstance(t, Scale):
        return _linear(t.arg, slot).scaled(t.coef)
    raise DiscretizeError(f"nonlinear ground atom: unsupported term {type(t).__name__}")


_RELATIONS = {
    "<": LT, "<=": LE, ">": GT, ">=": GE,
    "=": Equals, "!=": lambda a, b: Not(Equals(a, b)),
}


class _Discretizer:
    def __init__(self, g: GroundProblem):
        self.g = g
        self.state = {v.name: Symbol(v.name, _symbol_type(v)) for v in g.vars}
        self.primed = {sym: Symbol(name + "'", sym.symbol_type()) for name, sym in self.state.items()}
        _, continuous = free_vars(g)
        self.continuous = [v.name for v in continuous]
        self.step: Optional[StepModel] = None
        if self.continuous:
            self.step = StepModel(
                Symbol(FLOW_NAME, BOOL),
                Symbol(DELTA_NAME, REAL),
                self.continuous,
                {name: Symbol(DER_PREFIX + name, REAL) for name in self.continuous},
            )

    def _sym(self, slot: str, name: str):
        if slot == "der":
            return self.step.ders[name]
        sym = self.state[name]
        return self.primed[sym] if slot == "next" else sym

    def _build(self, terms: List[Tuple[Fraction, object]], const: Fraction, relation: str):
        terms = [(c, s) for c, s in terms if c != 0]
        if not terms:
            return Bool(_static(relation, const))
        integral = all(s.symbol_type() == INT for _, s in terms) and all(
            c.denominator == 1 for c, _ in terms
        ) and const.denominator == 1
        if integral:
            parts = [s if c == 1 else Times(Int(int(c)), s) for c, s in terms]
            rhs = Int(int(-const))
        else:
            parts = []
            for c, s in terms:
                s = ToReal(s) if s.symbol_type() == INT else s
                parts.append(s if c == 1 else Times(Real(c), s))
            rhs = Real(-const)
        lhs = parts[0] if len(parts) == 1 else Plus(parts)
        return _RELATIONS[relation](lhs, rhs)

    def atom(self, f):
        if isinstance(f, Prop):
            t = f.term
            if isinstance(t, Next):
                return self.primed[self.state[t.arg.name]]
            return self.state[t.name]
        if f.left.type is not None and f.left.type.kind == "boolean":
            left, right = (self._bool_side(s) for s in (f.left, f.right))
            same = Iff(left, right)
            return same if f.op == "=" else Not(same)

        form = _linear(f.left).plus(_linear(f.right).scaled(Fraction(-1)))
        slots = form.slots()
        if not form.coeffs:
            return Bool(_static(f.op, form.const))
        if "der" in slots and "next" in slots:
            raise DiscretizeError("atom mixes der and next")
        terms = [(c, self._sym(slot, name)) for (slot, name), c in sorted(form.coeffs.items())]
        atom = self._build(terms, form.const, f.op)
        return And(self.step.flow, atom) if "der" in slots else atom

    def _bool_side(self, t):
        if isinstance(t, Next):
            return self.primed[self.state[t.arg.name]]
        return self.state[t.name]

    def rewrite(self, f):
        if isinstance(f, (Prop, Compare)):
            node = self.atom(f)
            if node.is_constant():
                return BoolConst(node.is_true())
            return SmtAtom(node, span=f.span, req=f.req)
        return map_children(f, self.rewrite)

    def axioms(self):
        if self.step is None:
            return Bool(True)
        flow, delta = self.step.flow, self.step.delta
        laws = [
            Implies(flow, GT(delta, Real(0))),
            Implies(Not(flow), Equals(delta, Real(0))),
        ]
        for v in self.g.vars:
            sym = self.state[v.name]
            if v.continuous:
                moved = Plus(sym, Times(self.step.ders[v.name], delta))
                laws.append(Implies(flow, Equals(self.primed[sym], moved)))
                continue
            same = Iff(self.primed[sym], sym) if v.kind == "boolean" else Equals(self.primed[sym], sym)
            laws.append(Implies(flow, same))
        return And(laws)


def _static(op: str, value: Fraction) -> bool:
    return {
        "<": value < 0, "<=": value <= 0, "=": value == 0,
        ">=": value >= 0, ">": value > 0, "!=": value != 0,
    }[op]


def to_discrete(g: GroundProblem) -> DiscreteProblem:
    """
    Rewrite a ground problem into a discrete-time one.

    Raises:
        DiscretizeError: atom mixing der and next, or a nonlinear ground atom
    """
    d = _Discretizer(g)
    conjuncts = [d.rewrite(c) for c in g.conjuncts]
    inputs = d.step.inputs if d.step else []
    domains = {}
    for v in g.vars:
        if v.kind in ("integer", "enumeration", "reference"):
            domains[d.state[v.name]] = (v.lo, v.hi)
    logger.info(
        f"🔍 Discretized: {len(d.state)} state vars, {len(d.continuous)} continuous, "
        f"step model {'on' if d.step else 'off'}"
    )
    return DiscreteProblem(
        ground=g,
        state=d.state,
        primed=d.primed,
        inputs=inputs,
        step=d.step,
        conjuncts=conjuncts,
        axioms=d.axioms(),
        domains=domains,
    )


# ---------------------------------------------------------------------------
# Witness lifting and replay
# ---------------------------------------------------------------------------

def _display(var, value):
    if var.kind in ("enumeration", "reference"):
        return var.symbols[int(value)]
    if var.kind == "real":
        return Fraction(value)
    if var.kind == "integer":
        return int(value)
    return bool(value)


def lift_trace(lasso, problem: DiscreteProblem) -> HybridTrace:
    """
    Turn a discrete lasso over the problem's symbols into a hybrid trace.

    Raises:
        TraceError: the lasso breaks the flow or jump law
    """
    states = []
    for valuation in lasso.states:
        states.append({v.name: _display(v, valuation[problem.state[v.name]]) for v in problem.ground.vars})

    steps = []
    for i, inputs in enumerate(lasso.inputs):
        if problem.step is None:
            steps.append(TraceStep(kind="jump", delta=Fraction(0)))
            continue
        flow = bool(inputs[problem.step.flow])
        delta = Fraction(inputs[problem.step.delta])
        ders = {}
        if flow:
            for name in problem.step.continuous:
                ders[name] = Fraction(inputs[problem.step.ders[name]])
        steps.append(TraceStep(kind="flow" if flow else "jump", delta=delta, ders=ders))

    trace = HybridTrace(states=states, steps=steps, loop_start=lasso.loop_start)
    continuous = problem.step.continuous if problem.step else []
    replay_hybrid_trace(trace, continuous)
    return trace


def replay_hybrid_trace(trace: HybridTrace, continuous: Optional[List[str]] = None) -> None:
    """
    Check the step laws on a hybrid trace by exact arithmetic.

    continuous defaults to every variable that carries a derivative somewhere.

    Raises:
        TraceError: "invariant violation: ..." on the first broken law
    """
    if continuous is None:
        continuous = sorted({name for step in trace.steps for name in step.ders})
    continuous = set(continuous)
    for i, step in enumerate(trace.steps):
        before, after = trace.states[i], trace.states[i + 1]
        if step.kind == "flow":
            if step.delta <= 0:
                raise TraceError(f"invariant violation: flow with zero duration at step {i}")
            for name, value in before.items():
                if name in continuous:
                    if name not in step.ders:
                        raise TraceError(f"invariant violation: no derivative for {name} at step {i}")
                    expected = value + step.ders[name] * step.delta
                    if after[name] != expected:
                        raise TraceError(
                            f"invariant violation: flow law broken for {name} at step {i}"
                        )
                elif after[name] != value:
                    raise TraceError(f"invariant violation: {name} changes during flow at step {i}")
        elif step.delta != 0:
            raise TraceError(f"invariant violation: jump with nonzero duration at step {i}")
    if trace.states[-1] != trace.states[trace.loop_start]:
        raise TraceError("invariant violation: loop end differs from loop start")
