"""
Bounded model checking with lasso-shaped traces.

A lasso of length k is k+1 state copies plus k input copies; exactly one
loop selector l_i picks the state the last copy folds back to, and every
fairness constraint must hold somewhere inside the loop.
"""
import logging
from typing import Dict, List

from pysmt.shortcuts import And, EqualsOrIff, ExactlyOne, Implies, Or, Symbol
from pysmt.typing import BOOL

from config import BmcConfig, SolverConfig
from errors import TraceError
from fts import Fts, Lasso, SolveVerdict, evaluate
from smt_client import SmtProblem, solve

logger = logging.getLogger(__name__)


def at_time(v, t: int):
    return Symbol(f"{v.symbol_name()}@{t}", v.symbol_type())


def loop_selector(i: int):
    return Symbol(f"loop@{i}", BOOL)


class Unrolling:
    """Time-indexed copies of an FTS's vocabulary."""

    def __init__(self, fts: Fts, k: int):
        self.fts = fts
        self.k = k

    def subs(self, i: int) -> Dict[object, object]:
        """x -> x@i, x' -> x@(i+1), input -> input@i."""
        result = {v: at_time(v, i) for v in self.fts.state_vars}
        result.update({self.fts.primed[v]: at_time(v, i + 1) for v in self.fts.state_vars})
        result.update({v: at_time(v, i) for v in self.fts.input_vars})
        return result

    def at(self, formula, i: int):
        return formula.substitute(self.subs(i))

    def init(self):
        return self.at(self.fts.init, 0)

    def trans(self, i: int):
        return self.at(self.fts.trans, i)

    def loop_back(self, l: int):
        return And([EqualsOrIff(at_time(v, self.k), at_time(v, l)) for v in self.fts.state_vars])

    def fair(self, f, l: int):
        return Or([self.at(f, j) for j in range(l, self.k)])

    def decode(self, model: Dict[object, object], loop_start: int) -> Lasso:
        states = [{v: model[at_time(v, i)] for v in self.fts.state_vars} for i in range(self.k + 1)]
        inputs = [{v: model[at_time(v, i)] for v in self.fts.input_vars} for i in range(self.k)]
        return Lasso(states=states, inputs=inputs, loop_start=loop_start)


def bmc_encode(fts: Fts, k: int) -> SmtProblem:
    """
    Lasso encoding of length k.

    Assertions: init at step 0, one transition per step, exactly one loop
    selector, loop-back equality and fairness under each selector.
    """
    if k < 1:
        raise ValueError("bound must be at least 1")
    u = Unrolling(fts, k)
    selectors = [loop_selector(i) for i in range(k)]
    assertions = [("init", u.init())]
    assertions += [(f"trans@{i}", u.trans(i)) for i in range(k)]
    assertions.append(("loop", ExactlyOne(selectors)))
    for l, sel in enumerate(selectors):
        assertions.append((f"loop@{l}", Implies(sel, u.loop_back(l))))
        for n, f in enumerate(fts.fairness):
            assertions.append((f"fair{n}@{l}", Implies(sel, u.fair(f, l))))
    problem = SmtProblem.of(assertions)
    # Every copy is declared even when no assertion mentions it, so decoding is total.
    declared = set(problem.declarations)
    for i in range(k + 1):
        declared |= {at_time(v, i) for v in fts.state_vars}
    for i in range(k):
        declared |= {at_time(v, i) for v in fts.input_vars}
    declared |= set(selectors)
    problem.declarations = sorted(declared, key=lambda s: s.symbol_name())
    return problem


def replay_lasso(fts: Fts, lasso: Lasso) -> List[str]:
    """
    Check a lasso against the FTS by direct evaluation.

    Returns:
        list of violations; empty when the lasso is a fair run
    """
    violations = []
    if not 0 <= lasso.loop_start < max(lasso.k, 1):
        violations.append(f"loop start {lasso.loop_start} outside [0, {lasso.k})")
        return violations
    if not evaluate(fts.init, lasso.states[0]):
        violations.append("init does not hold at step 0")
    for i in range(lasso.k):
        assignment = dict(lasso.states[i])
        assignment.update({fts.primed[v]: value for v, value in lasso.states[i + 1].items()})
        assignment.update(lasso.inputs[i])
        if not evaluate(fts.trans, assignment):
            violations.append(f"transition {i} -> {i + 1} violated")
    if lasso.states[-1] != lasso.states[lasso.loop_start]:
        violations.append(f"last state differs from loop start {lasso.loop_start}")
    for n, f in enumerate(fts.fairness):
        if not any(evaluate(f, lasso.states[j]) for j in range(lasso.loop_start, lasso.k)):
            violations.append(f"fairness constraint {n} never holds inside the loop")
    return violations


def bmc_search(fts: Fts, cfg: BmcConfig, solver: SolverConfig) -> SolveVerdict:
    """
    Try each bound of the schedule; the first satisfiable encoding wins.

    Never answers unsat: no lasso up to k_max does not rule out longer ones.

    Raises:
        TraceError: the decoded lasso does not replay
    """
    tried = []
    unknown = False
    for k in cfg.k_schedule:
        logger.info(f"🔍 BMC bound k={k}")
        tried.append(k)
        outcome = solve(bmc_encode(fts, k), solver)
        if outcome.is_sat:
            loop_start = next(i for i in range(k) if outcome.model[loop_selector(i)])
            lasso = Unrolling(fts, k).decode(outcome.model, loop_start)
            violations = replay_lasso(fts, lasso)
            if violations:
                raise TraceError("invariant violation: " + "; ".join(violations))
            logger.info(f"✅ BMC found a lasso at k={k}, loop to {loop_start}")
            return SolveVerdict("sat", lasso=lasso, method="bmc", bounds=tried)
        if outcome.status == "unknown":
            logger.warning(f"⚠️ Solver answered unknown at k={k} ({outcome.reason})")
            unknown = True
    reason = "bound-exhausted" if not unknown else "bound-exhausted; solver-unknown"
    return SolveVerdict("unknown", reason=reason, bounds=tried)
