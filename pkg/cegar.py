"""
Predicate-abstraction CEGAR for fair transition systems.

Each round builds the abstract system by ALLSAT projection onto one bit per
predicate, searches it for a fair lasso, replays the abstract lasso on the
concrete system and, when the replay is infeasible, mines new predicates from
the minimized unsat core of the replay query.
"""
import logging
import re
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Set, Tuple

from pysmt.shortcuts import GE, LE, And, Iff, Int, Minus, Not, Real, Symbol
from pysmt.typing import BOOL

from bmc import Unrolling, replay_lasso
from config import CegarLimits, SolverConfig
from errors import EngineError, TraceError
from explicit import find_fair_lasso
from fts import Fts, SolveVerdict
from smt_client import SmtProblem, all_models_projected, minimize_core, solve

logger = logging.getLogger(__name__)

AbstractState = Tuple[bool, ...]


@dataclass
class Abstraction:
    predicates: List[object]
    bits: List[object]
    initial: Set[AbstractState] = field(default_factory=set)
    transitions: Dict[AbstractState, List[AbstractState]] = field(default_factory=dict)
    fair_sets: List[Set[AbstractState]] = field(default_factory=list)

    def successors(self, state: AbstractState):
        return [(None, dst) for dst in self.transitions.get(state, [])]


# ---------------------------------------------------------------------------
# Predicates
# ---------------------------------------------------------------------------

def _atoms(formula) -> List[object]:
    """Arithmetic atoms of a pysmt formula, in first-seen order."""
    seen, result = set(), []
    stack = [formula]
    while stack:
        f = stack.pop()
        if f in seen:
            continue
        seen.add(f)
        if f.is_le() or f.is_lt() or f.is_equals():
            result.append(f)
            continue
        stack.extend(reversed(f.args()))
    return result


def _is_trivial(p) -> bool:
    return p.simplify().is_bool_constant()


def initial_predicates(fts: Fts) -> List[object]:
    """
    Boolean state variables verbatim plus every arithmetic atom of init,
    trans and fairness that ranges over current state only. Atoms over
    primed variables only are shifted back to the current state.
    """
    state = set(fts.state_vars)
    unprime = {p: v for v, p in fts.primed.items()}
    preds = list(fts.boolean_state_vars())
    sources = [fts.init, fts.trans] + list(fts.fairness)
    for source in sources:
        for atom in _atoms(source):
            free = atom.get_free_variables()
            if free and free <= state:
                candidate = atom
            elif free and free <= set(unprime):
                candidate = atom.substitute(unprime)
            else:
                continue
            if candidate not in preds and not _is_trivial(candidate):
                preds.append(candidate)
    return preds


def _links(preds, bits, primed: Optional[Dict] = None):
    parts = []
    for p, b in zip(preds, bits):
        parts.append(Iff(b, p) if primed is None else Iff(primed[b], p.substitute(primed)))
    return And(parts)


def _region(bits, state: AbstractState):
    return And([b if v else Not(b) for b, v in zip(bits, state)])


def abstract_build(fts: Fts, preds: List[object], solver: SolverConfig, reachable: bool = True) -> Abstraction:
    """
    Existential abstraction: an abstract state or step exists iff some
    concrete state or step maps onto it.

    With reachable set, transitions and fairness sets are computed only for
    abstract states reachable from the abstract initial states, one image
    query per state. Otherwise the whole relation is projected at once.

    Raises:
        EngineError: ALLSAT cap exceeded (reason "abstraction-limit")
    """
    bits = [Symbol(f"pred#{i}", BOOL) for i in range(len(preds))]
    bits_next = {b: Symbol(f"pred#{i}'", BOOL) for i, b in enumerate(bits)}
    primed = dict(fts.primed)
    primed.update(bits_next)

    cur = _links(preds, bits)
    nxt = _links(preds, bits, primed)
    step = And(fts.trans, cur, nxt)
    next_bits = [bits_next[b] for b in bits]
    a = Abstraction(predicates=list(preds), bits=bits)

    a.initial = all_models_projected(SmtProblem.of([("init", And(fts.init, cur))]), bits, solver)
    if not reachable:
        n = len(bits)
        for point in sorted(all_models_projected(SmtProblem.of([("trans", step)]), bits + next_bits, solver)):
            a.transitions.setdefault(point[:n], []).append(point[n:])
        for f in fts.fairness:
            a.fair_sets.append(all_models_projected(SmtProblem.of([("fair", And(f, cur))]), bits, solver))
        return a

    seen = set(a.initial)
    queue = deque(sorted(a.initial))
    edges = 0
    while queue:
        state = queue.popleft()
        image = all_models_projected(SmtProblem.of([("trans", step), ("from", _region(bits, state))]), next_bits, solver)
        a.transitions[state] = sorted(image)
        edges += len(image)
        if edges > solver.allsat_cap:
            raise EngineError(f"more than {solver.allsat_cap} abstract transitions", reason="abstraction-limit")
        for dst in a.transitions[state]:
            if dst not in seen:
                seen.add(dst)
                queue.append(dst)

    for f in fts.fairness:
        members = set()
        for state in sorted(seen):
            outcome = solve(SmtProblem.of([("fair", And(f, cur, _region(bits, state)))]), solver)
            if outcome.status == "unknown":
                raise EngineError("solver returned unknown on a fairness query", reason=outcome.reason or "solver-unknown")
            if outcome.is_sat:
                members.add(state)
        a.fair_sets.append(members)
    logger.info(
        f"🔍 Abstraction over {len(bits)} predicates: {len(a.initial)} initial states, "
        f"{len(seen)} reachable, {edges} abstract transitions"
    )
    return a


# ---------------------------------------------------------------------------
# Simulation and refinement
# ---------------------------------------------------------------------------

def _simulation_problem(fts: Fts, a: Abstraction, path: List[AbstractState], loop_start: int) -> SmtProblem:
    k = len(path) - 1
    u = Unrolling(fts, k)
    assertions = [("init", u.init())]
    for i, point in enumerate(path):
        region = And([u.at(p, i) if v else Not(u.at(p, i)) for p, v in zip(a.predicates, point)])
        assertions.append((f"abs@{i}", region))
    assertions += [(f"trans@{i}", u.trans(i)) for i in range(k)]
    assertions.append(("loop", u.loop_back(loop_start)))
    for n, f in enumerate(fts.fairness):
        assertions.append((f"fair{n}", u.fair(f, loop_start)))
    problem = SmtProblem.of(assertions, produce_cores=True)
    declared = set(problem.declarations)
    for i in range(k + 1):
        declared |= {u.subs(i)[v] for v in fts.state_vars}
    for i in range(k):
        declared |= {u.subs(i)[v] for v in fts.input_vars}
    problem.declarations = sorted(declared, key=lambda s: s.symbol_name())
    return problem


_TIMED = re.compile(r"^(?P<base>.*)@(?P<step>\d+)$")


def _untime(atom, by_name: Dict[str, object]):
    """Map an atom over x@i symbols back to current-state symbols when it mentions one step only."""
    steps, subst = set(), {}
    for s in atom.get_free_variables():
        m = _TIMED.match(s.symbol_name())
        if not m or m.group("base") not in by_name:
            return None
        steps.add(m.group("step"))
        subst[s] = by_name[m.group("base")]
    if len(steps) != 1:
        return None
    return atom.substitute(subst)


def _constants(formula) -> Set[Fraction]:
    result, stack, seen = set(), [formula], set()
    while stack:
        f = stack.pop()
        if f in seen:
            continue
        seen.add(f)
        if f.is_int_constant() or f.is_real_constant():
            result.add(Fraction(str(f.constant_value())))
        stack.extend(f.args())
    return result


def _half_spaces(variables, constants) -> List[object]:
    def const(v, c):
        if v.symbol_type().is_int_type():
            return Int(int(c)) if c.denominator == 1 else None
        return Real(c)

    result = []
    for c in sorted(constants):
        for v in variables:
            value = const(v, c)
            if value is not None:
                result += [LE(v, value), GE(v, value)]
    for i, x in enumerate(variables):
        for y in variables[i + 1:]:
            if x.symbol_type() != y.symbol_type():
                continue
            for c in sorted(constants):
                value = const(x, c)
                if value is not None:
                    result.append(LE(Minus(x, y), value))
    return result


def refine(fts: Fts, preds: List[object], core_formulas: List[object], limits: CegarLimits) -> List[object]:
    """
    New predicates from an infeasible replay: single-step atoms of the core
    first, then half-spaces x <= c, x >= c, x - y <= c over the core's
    variables and constants.
    """
    by_name = {v.symbol_name(): v for v in fts.state_vars}
    fresh: List[object] = []

    def offer(p):
        p = p.simplify()
        if p not in preds and p not in fresh and not p.is_bool_constant() and len(fresh) < limits.max_new_predicates:
            fresh.append(p)

    for f in core_formulas:
        for atom in _atoms(f):
            p = _untime(atom, by_name)
            if p is not None:
                offer(p)
    if fresh:
        return fresh

    variables, constants = [], {Fraction(0)}
    for f in core_formulas:
        constants |= _constants(f)
        for s in sorted(f.get_free_variables(), key=lambda s: s.symbol_name()):
            m = _TIMED.match(s.symbol_name())
            base = by_name.get(m.group("base")) if m else None
            if base is not None and not base.symbol_type().is_bool_type() and base not in variables:
                variables.append(base)
    for p in _half_spaces(variables, constants):
        offer(p)
    return fresh


def cegar(
    fts: Fts,
    limits: CegarLimits,
    solver: SolverConfig,
    init_preds: Optional[List[object]] = None,
) -> SolveVerdict:
    """
    Abstract, search, simulate, refine until a proof, a real witness or a limit.

    Returns:
        unsat when the abstract fair language is empty, sat with a concrete
        lasso when an abstract lasso replays, otherwise unknown with reason
        "refinement-stuck" or "abstraction-limit"
    """
    preds = list(init_preds) if init_preds is not None else initial_predicates(fts)
    for iteration in range(1, limits.max_iterations + 1):
        logger.info(f"🔒 CEGAR iteration {iteration}: {len(preds)} predicates")
        try:
            a = abstract_build(fts, preds, solver)
        except EngineError as e:
            logger.warning(f"⚠️ {e}")
            return SolveVerdict("unknown", reason=e.reason, iterations=iteration, predicates=len(preds))

        found = find_fair_lasso(
            sorted(a.initial),
            a.successors,
            [lambda s, fair=fair: s in fair for fair in a.fair_sets],
        )
        if found is None:
            logger.info(f"✅ Abstract language empty after {iteration} iterations")
            return SolveVerdict("unsat", method="abstract-emptiness", iterations=iteration, predicates=len(preds))

        path, _, loop_start = found
        problem = _simulation_problem(fts, a, path, loop_start)
        outcome = solve(problem, solver)
        if outcome.is_sat:
            k = len(path) - 1
            lasso = Unrolling(fts, k).decode(outcome.model, loop_start)
            violations = replay_lasso(fts, lasso)
            if violations:
                raise TraceError("invariant violation: " + "; ".join(violations))
            logger.info(f"✅ Abstract lasso of length {k} is real")
            return SolveVerdict("sat", lasso=lasso, method="cegar", iterations=iteration, predicates=len(preds))
        if outcome.status == "unknown":
            return SolveVerdict("unknown", reason=outcome.reason or "solver-unknown", iterations=iteration, predicates=len(preds))

        core = minimize_core(problem, outcome.core or [n for n, _ in problem.assertions], solver)
        formulas = [f for n, f in problem.assertions if n in core]
        fresh = refine(fts, preds, formulas, limits)
        if not fresh:
            logger.info("⚠️ Refinement found no new predicate")
            return SolveVerdict("unknown", reason="refinement-stuck", iterations=iteration, predicates=len(preds))
        logger.info(f"🔍 Spurious lasso of length {len(path) - 1}; {len(fresh)} new predicates")
        preds += fresh
    return SolveVerdict("unknown", reason="refinement-stuck", iterations=limits.max_iterations, predicates=len(preds))
