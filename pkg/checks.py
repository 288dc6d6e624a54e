"""
The three validation checks over a project: consistency, scenario and
property. Each runs the full pipeline

    parse -> typecheck -> desugar -> instantiate -> to_discrete
          -> compile_ltl -> solve_formula -> lift_trace

and maps the engine verdict plus any culprit core back to requirement ids.
"""
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, List, Optional, Tuple

from config import CheckConfig
from constraint_parser import parse_constraint
from desugar import desugar, neg
from discretize import DiscreteProblem, lift_trace, to_discrete
from engine import solve_formula
from errors import EngineError, LangError, ProjectError
from formula_ast import Formula, conjoin, tag_requirement
from fts import SolveVerdict, dump_fts
from ground import dump_ground, instantiate, merge_problems
from project import requirements_by_category
from schemas import CheckResult, CheckStats, Project, Requirement
from tableau import compile_ltl
from typechecker import typecheck

logger = logging.getLogger(__name__)


def compile_requirement(project: Project, req: Requirement) -> Formula:
    """Conjunction of a requirement's constraints in core form, tagged with its id."""
    parts = []
    for src in req.constraints:
        f = parse_constraint(src, project.signature, req.id)
        try:
            f = typecheck(f, project.signature)
        except LangError as e:
            raise e if e.req_id else e.with_requirement(req.id)
        parts.append(desugar(f))
    return tag_requirement(conjoin(parts), req.id)


def _lookup(project: Project, req_id: str, category: str) -> Requirement:
    req = project.requirement(req_id)
    if req is None:
        raise ProjectError(f"unknown id {req_id}")
    if req.category != category:
        raise ProjectError(f"category mismatch: {req_id} is a {req.category}, not a {category}")
    return req


def _dump(directory: Optional[str], name: str, text: str) -> None:
    if not directory:
        return
    os.makedirs(directory, exist_ok=True)
    with open(os.path.join(directory, name), "w", encoding="utf-8") as f:
        f.write(text)


def run_pipeline(
    project: Project,
    parts: List[Tuple[str, Formula]],
    cfg: CheckConfig,
    label: str = "check",
) -> Tuple[SolveVerdict, DiscreteProblem, float]:
    """
    Ground, discretize, compile and solve the conjunction of the given parts.

    Returns:
        (verdict, discrete problem, engine seconds)
    """
    sig, bounds = project.signature, project.bounds
    ground = merge_problems([instantiate(f, sig, bounds, cfg.ground) for _, f in parts])
    _dump(cfg.dump_ground_dir, f"{label}.ground.txt", dump_ground(ground))
    problem = to_discrete(ground)
    fts = compile_ltl(problem)
    _dump(cfg.dump_fts_dir, f"{label}.fts.txt", dump_fts(fts))
    started = time.perf_counter()
    verdict = solve_formula(fts, cfg)
    return verdict, problem, time.perf_counter() - started


def minimize_core(ids: Iterable[str], reproblem: Callable[[List[str]], Optional[bool]]) -> Tuple[List[str], bool]:
    """
    Deletion-based minimization at requirement granularity.

    reproblem(subset) answers True when the subset is proven unsatisfiable,
    False when it is satisfiable and None when the engine gave up.

    Returns:
        (remaining ids, whether the result is known to be 1-minimal)
    """
    keep = list(ids)
    minimal = True
    for rid in list(keep):
        trial = [i for i in keep if i != rid]
        try:
            proven = reproblem(trial)
        except EngineError:
            proven = None
        if proven is True:
            keep = trial
        elif proven is None:
            minimal = False
    return keep, minimal


def _core(project: Project, parts: List[Tuple[str, Formula]], cfg: CheckConfig) -> Tuple[List[str], bool]:
    ids = [rid for rid, _ in parts]
    if not cfg.minimize_cores:
        return ids, False
    by_id = dict(parts)
    proof_only = cfg.model_copy(update={"strategy": "cegar", "dump_ground_dir": None, "dump_fts_dir": None})

    def reproblem(subset: List[str]) -> Optional[bool]:
        verdict, _, _ = run_pipeline(project, [(i, by_id[i]) for i in subset], proof_only)
        if verdict.is_unsat:
            return True
        return False if verdict.is_sat else None

    logger.info(f"🔍 Minimizing core over {len(ids)} requirements")
    return minimize_core(ids, reproblem)


def _stats(project: Project, verdict: SolveVerdict, seconds: float) -> CheckStats:
    return CheckStats(
        bounds=dict(project.bounds),
        bmc_bounds=list(verdict.bounds),
        engine=verdict.method or None,
        engine_seconds={"solve": round(seconds, 3)},
        cegar_iterations=verdict.iterations,
        predicates=verdict.predicates,
    )


def _requirement_parts(project: Project) -> List[Tuple[str, Formula]]:
    return [(req.id, compile_requirement(project, req)) for req in requirements_by_category(project, "requirement")]


def _result(kind, target, verdict, problem, seconds, project, parts, cfg, sat_verdict, unsat_verdict, core_on_unsat=True):
    stats = _stats(project, verdict, seconds)
    if verdict.is_sat:
        return CheckResult(kind=kind, target=target, verdict=sat_verdict, witness=lift_trace(verdict.lasso, problem), stats=stats)
    if verdict.is_unsat:
        core, minimal = _core(project, parts, cfg) if core_on_unsat else (None, None)
        return CheckResult(kind=kind, target=target, verdict=unsat_verdict, culprit_core=core, core_minimal=minimal, stats=stats)
    return CheckResult(kind=kind, target=target, verdict="UNKNOWN", reason=verdict.reason or "solver-unknown", stats=stats)


def check_consistency(project: Project, cfg: Optional[CheckConfig] = None) -> CheckResult:
    """Satisfiability of the conjunction of all requirement-category fragments."""
    cfg = cfg or CheckConfig()
    parts = _requirement_parts(project)
    logger.info(f"🔒 Consistency check over {len(parts)} requirements")
    verdict, problem, seconds = run_pipeline(project, parts, cfg, "consistency")
    result = _result("consistency", None, verdict, problem, seconds, project, parts, cfg, "CONSISTENT", "INCONSISTENT")
    logger.info(f"✅ Consistency: {result.verdict}")
    return result


def check_scenario(project: Project, scenario_id: str, cfg: Optional[CheckConfig] = None) -> CheckResult:
    """Satisfiability of the requirements together with one scenario."""
    cfg = cfg or CheckConfig()
    scenario = _lookup(project, scenario_id, "scenario")
    parts = _requirement_parts(project) + [(scenario.id, compile_requirement(project, scenario))]
    logger.info(f"🔒 Scenario check {scenario_id}")
    verdict, problem, seconds = run_pipeline(project, parts, cfg, f"scenario-{scenario_id}")
    result = _result("scenario", scenario_id, verdict, problem, seconds, project, parts, cfg, "POSSIBLE", "IMPOSSIBLE")
    logger.info(f"✅ Scenario {scenario_id}: {result.verdict}")
    return result


def check_property(project: Project, property_id: str, cfg: Optional[CheckConfig] = None) -> CheckResult:
    """Unsatisfiability of the requirements together with the property's negation."""
    cfg = cfg or CheckConfig()
    prop = _lookup(project, property_id, "property")
    negated = tag_requirement(neg(compile_requirement(project, prop)), prop.id)
    parts = _requirement_parts(project) + [(prop.id, negated)]
    logger.info(f"🔒 Property check {property_id}")
    verdict, problem, seconds = run_pipeline(project, parts, cfg, f"property-{property_id}")
    result = _result(
        "property", property_id, verdict, problem, seconds, project, parts, cfg,
        "VIOLATED", "ENTAILED", core_on_unsat=False,
    )
    logger.info(f"✅ Property {property_id}: {result.verdict}")
    return result


def _run_task(task) -> CheckResult:
    kind, target, project, cfg = task
    if kind == "consistency":
        return check_consistency(project, cfg)
    if kind == "scenario":
        return check_scenario(project, target, cfg)
    return check_property(project, target, cfg)


def check_all(project: Project, cfg: Optional[CheckConfig] = None, jobs: int = 1) -> List[CheckResult]:
    """Consistency, then every scenario, then every property, in declaration order."""
    cfg = cfg or CheckConfig()
    tasks = [("consistency", None, project, cfg)]
    tasks += [("scenario", r.id, project, cfg) for r in requirements_by_category(project, "scenario")]
    tasks += [("property", r.id, project, cfg) for r in requirements_by_category(project, "property")]
    logger.info(f"🔒 Running {len(tasks)} checks with {jobs} job(s)")
    if jobs <= 1 or len(tasks) == 1:
        return [_run_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_task, tasks))
