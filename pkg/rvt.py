"""
Requirements validation driver
Parse → Validate → Check

    python rvt.py parse <project>
    python rvt.py check consistency|scenario|property|all <project> [--id RID] ...
    python rvt.py trace <trace.json>
    python rvt.py links <project>

Exit codes: 0 positive verdict / success, 1 negative verdict (parse: bad
constraints), 2 input or tool error, 3 UNKNOWN.
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError as PydanticValidationError

from checks import check_all, check_consistency, check_property, check_scenario
from config import BmcConfig, CegarLimits, CheckConfig, CliConfig, SolverConfig
from constraint_parser import parse_constraint
from discretize import replay_hybrid_trace
from errors import LangError, RvtError
from project import load_project
from report import ReportGenerator, render_links, render_trace
from schemas import NEGATIVE_VERDICTS, POSITIVE_VERDICTS, CheckResult, HybridTrace
from typechecker import typecheck

logger = logging.getLogger("rvt")

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_INPUT = 2
EXIT_UNKNOWN = 3


def _error(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return EXIT_INPUT


def exit_code(results: List[CheckResult]) -> int:
    """Any negative verdict wins, then any UNKNOWN, else success."""
    verdicts = [r.verdict for r in results]
    if any(v in NEGATIVE_VERDICTS for v in verdicts):
        return EXIT_NEGATIVE
    if any(v not in POSITIVE_VERDICTS for v in verdicts):
        return EXIT_UNKNOWN
    return EXIT_OK


# ========================================
# parse
# ========================================

def cmd_parse(args) -> int:
    try:
        project = load_project(args.project)
    except RvtError as e:
        return _error(str(e))

    checked = 0
    diagnostics = []
    for req in project.requirements:
        for src in req.constraints:
            checked += 1
            try:
                typecheck(parse_constraint(src, project.signature, req.id), project.signature)
            except LangError as e:
                diagnostics.append(e if e.req_id else e.with_requirement(req.id))

    if diagnostics:
        for d in diagnostics:
            print(f"{d} [{d.kind}]")
        print(f"⚠️ {len(diagnostics)} of {checked} constraints rejected")
        return EXIT_NEGATIVE
    print(f"✅ {checked} constraints OK")
    return EXIT_OK


# ========================================
# check
# ========================================

def build_config(args) -> CliConfig:
    solver = SolverConfig.from_env(path=args.solver, timeout_ms=args.timeout_ms, dump_dir=args.dump_smt)
    bmc = BmcConfig()
    if args.bound_schedule:
        bmc = BmcConfig(k_schedule=[int(k) for k in args.bound_schedule.split(",") if k.strip()])
    cegar = CegarLimits() if args.cegar_iters is None else CegarLimits(max_iterations=args.cegar_iters)
    check = CheckConfig(
        solver=solver,
        bmc=bmc,
        cegar=cegar,
        strategy=args.strategy,
        minimize_cores=not args.no_minimize,
        dump_ground_dir=args.dump_ground,
        dump_fts_dir=args.dump_fts,
    )
    return CliConfig(check=check, output="json" if args.json else "text", jobs=args.jobs)


def cmd_check(args) -> int:
    try:
        cfg = build_config(args)
    except (PydanticValidationError, ValueError) as e:
        return _error(f"invalid option: {e}")

    if args.which in ("scenario", "property") and not args.id:
        return _error(f"check {args.which} needs --id")

    try:
        project = load_project(args.project)
        if args.which == "consistency":
            results = [check_consistency(project, cfg.check)]
        elif args.which == "scenario":
            results = [check_scenario(project, args.id, cfg.check)]
        elif args.which == "property":
            results = [check_property(project, args.id, cfg.check)]
        else:
            results = check_all(project, cfg.check, jobs=cfg.jobs)
        if cfg.output == "json":
            if args.which == "all":
                rendered = json.dumps([r.model_dump(mode="json") for r in results], indent=2)
            else:
                rendered = results[0].model_dump_json(indent=2)
        else:
            rendered = ReportGenerator(project).render_all(results)
    except RvtError as e:
        return _error(str(e))

    print(rendered)
    return exit_code(results)


# ========================================
# trace / links
# ========================================

def cmd_trace(args) -> int:
    try:
        raw = Path(args.trace).read_text(encoding="utf-8")
    except OSError as e:
        return _error(f"cannot read {args.trace}: {e.strerror or e}")
    try:
        data = json.loads(raw)
        if isinstance(data, dict) and "witness" in data:
            data = data["witness"]
        trace = HybridTrace.model_validate(data)
    except (json.JSONDecodeError, PydanticValidationError) as e:
        return _error(f"malformed trace file {args.trace}: {e}")
    try:
        replay_hybrid_trace(trace)
    except RvtError as e:
        return _error(str(e))
    print(render_trace(trace), end="")
    return EXIT_OK


def cmd_links(args) -> int:
    try:
        project = load_project(args.project)
    except RvtError as e:
        return _error(str(e))
    print(render_links(project), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rvt", description="Formal validation of requirements")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v progress, -vv solver traffic")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="parse and typecheck every constraint")
    p.add_argument("project")
    p.set_defaults(handler=cmd_parse)

    c = sub.add_parser("check", help="run a validation check")
    c.add_argument("which", choices=["consistency", "scenario", "property", "all"])
    c.add_argument("project")
    c.add_argument("--id", help="scenario or property id")
    c.add_argument("--bound-schedule", help="comma-separated BMC bounds, e.g. 2,4,8")
    c.add_argument("--cegar-iters", type=int, help="CEGAR iteration limit")
    c.add_argument("--strategy", choices=["bmc-cegar", "bmc", "cegar"], default="bmc-cegar")
    c.add_argument("--solver", help="SMT solver binary (default $RVT_SMT_SOLVER or z3)")
    c.add_argument("--timeout-ms", type=int, help="per-query timeout")
    c.add_argument("--json", action="store_true", help="print CheckResult JSON")
    c.add_argument("--dump-smt", metavar="DIR", help="write every SMT query to DIR")
    c.add_argument("--dump-ground", metavar="DIR", help="write the ground problem to DIR")
    c.add_argument("--dump-fts", metavar="DIR", help="write the transition system to DIR")
    c.add_argument("--no-minimize", action="store_true", help="skip culprit core minimization")
    c.add_argument("--jobs", type=int, default=1, help="parallel checks for 'check all'")
    c.set_defaults(handler=cmd_check)

    t = sub.add_parser("trace", help="render a witness trace")
    t.add_argument("trace")
    t.set_defaults(handler=cmd_trace)

    links = sub.add_parser("links", help="print the traceability graph")
    links.add_argument("project")
    links.set_defaults(handler=cmd_links)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(message)s")
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())
