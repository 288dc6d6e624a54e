"""
SMT-LIB v2 client for an external solver process.

pysmt builds the terms and prints them; the solver runs as a child process
speaking SMT-LIB over stdin/stdout. Symbols go over the wire as v0, v1, ...
in declaration order so identical problems produce identical text.
"""
import hashlib
import io
import logging
import os
import subprocess
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, Optional, Set, Tuple

import pyparsing as pp
from pysmt.smtlib.printers import SmtPrinter
from pysmt.shortcuts import And, Not

from config import SolverConfig
from errors import EngineError, SmtError

logger = logging.getLogger(__name__)


def _nonlinear(formula) -> bool:
    """True when some product has two non-constant factors."""
    seen, stack = set(), [formula]
    while stack:
        f = stack.pop()
        if f in seen:
            continue
        seen.add(f)
        if f.is_times() and sum(1 for a in f.args() if not a.is_constant()) > 1:
            return True
        stack.extend(f.args())
    return False


@dataclass
class SmtProblem:
    declarations: List[object]
    assertions: List[Tuple[str, object]]
    produce_cores: bool = False

    @classmethod
    def of(cls, assertions: Iterable[Tuple[str, object]], produce_cores: bool = False) -> "SmtProblem":
        """Declare every free symbol of the assertions, ordered by name."""
        assertions = list(assertions)
        names = [name for name, _ in assertions]
        if len(names) != len(set(names)):
            raise SmtError("assertion names must be unique")
        symbols = set()
        for _, f in assertions:
            symbols |= f.get_free_variables()
        return cls(sorted(symbols, key=lambda s: s.symbol_name()), assertions, produce_cores)

    @property
    def logic(self) -> str:
        ints = any(s.symbol_type().is_int_type() for s in self.declarations)
        if any(_nonlinear(f) for _, f in self.assertions):
            return "QF_NIRA" if ints else "QF_NRA"
        return "QF_LIRA" if ints else "QF_LRA"

    def restricted(self, names: Iterable[str]) -> "SmtProblem":
        keep = set(names)
        return SmtProblem.of([(n, f) for n, f in self.assertions if n in keep], self.produce_cores)


@dataclass(frozen=True)
class SmtOutcome:
    status: str                     # sat | unsat | unknown
    model: Dict[object, object] = field(default_factory=dict)
    core: FrozenSet[str] = frozenset()
    reason: str = ""

    @property
    def is_sat(self) -> bool:
        return self.status == "sat"

    @property
    def is_unsat(self) -> bool:
        return self.status == "unsat"


class _WirePrinter(SmtPrinter):
    def __init__(self, stream, names: Dict[object, str]):
        super().__init__(stream)
        self.names = names

    def walk_symbol(self, formula):
        self.write(self.names[formula])


def _sort(symbol) -> str:
    t = symbol.symbol_type()
    if t.is_bool_type():
        return "Bool"
    if t.is_int_type():
        return "Int"
    if t.is_real_type():
        return "Real"
    raise SmtError(f"unsupported sort {t} for {symbol.symbol_name()}")


def _quote(name: str) -> str:
    return "|" + name.replace("|", "_").replace("\\", "_") + "|"


class _Wire:
    def __init__(self, problem: SmtProblem):
        self.names = {s: f"v{i}" for i, s in enumerate(problem.declarations)}
        self.symbols = {v: s for s, v in self.names.items()}

    def term(self, formula) -> str:
        buf = io.StringIO()
        _WirePrinter(buf, self.names).printer(formula)
        return buf.getvalue()


def emit_script(problem: SmtProblem) -> List[str]:
    """The command sequence sent for a problem, without check-sat."""
    wire = _Wire(problem)
    lines = []
    if problem.produce_cores:
        lines.append("(set-option :produce-unsat-cores true)")
    lines.append(f"(set-logic {problem.logic})")
    for s in problem.declarations:
        lines.append(f"(declare-const {wire.names[s]} {_sort(s)})")
    for name, f in problem.assertions:
        if problem.produce_cores:
            lines.append(f"(assert (! {wire.term(f)} :named {_quote(name)}))")
        else:
            lines.append(f"(assert {wire.term(f)})")
    return lines


# ---------------------------------------------------------------------------
# Response parsing
# ---------------------------------------------------------------------------

_SEXPR = pp.nested_expr(ignore_expr=pp.QuotedString('"', esc_quote='""') | pp.QuotedString("|"))


def _parse_sexpr(text: str):
    text = text.strip()
    if not text.startswith("("):
        return text
    try:
        return _SEXPR.parse_string(text, parse_all=True).as_list()[0]
    except pp.ParseBaseException as e:
        raise SmtError(f"cannot parse solver response {text!r}: {e}") from e


def _number(value) -> Fraction:
    if isinstance(value, str):
        try:
            return Fraction(value)
        except ValueError as e:
            raise SmtError(f"unexpected numeral {value!r}") from e
    if len(value) == 2 and value[0] == "-":
        return -_number(value[1])
    if len(value) == 3 and value[0] == "/":
        return _number(value[1]) / _number(value[2])
    raise SmtError(f"unexpected model value {value!r}")


def _value(symbol, raw):
    t = symbol.symbol_type()
    if t.is_bool_type():
        if raw not in ("true", "false"):
            raise SmtError(f"unexpected boolean {raw!r}")
        return raw == "true"
    number = _number(raw)
    if t.is_int_type():
        if number.denominator != 1:
            raise SmtError(f"non-integral value {raw!r} for {symbol.symbol_name()}")
        return int(number)
    return number


def _solver_command(cfg: SolverConfig) -> List[str]:
    binary = os.path.basename(cfg.path)
    if "cvc5" in binary or "cvc4" in binary:
        return [cfg.path, "--lang=smt2", "--incremental", f"--tlimit-per={cfg.timeout_ms}"]
    return [cfg.path, "-in", "-smt2", f"-t:{cfg.timeout_ms}"]


def _dump(cfg: SolverConfig, lines: List[str]) -> None:
    if not cfg.dump_dir:
        return
    text = "\n".join(lines) + "\n"
    os.makedirs(cfg.dump_dir, exist_ok=True)
    digest = hashlib.sha1(text.encode("utf-8")).hexdigest()[:12]
    path = os.path.join(cfg.dump_dir, f"query-{digest}.smt2")
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)
    logger.debug(f"dumped SMT query to {path}")


# ---------------------------------------------------------------------------
# Sessions
# ---------------------------------------------------------------------------

class SmtSession:
    """
    One solver process fed command by command. Blocking clauses are added as
    plain assertions; there is no push/pop.

    Usage:
        with SmtSession(problem, cfg) as session:
            status = session.check()
    """

    def __init__(self, problem: SmtProblem, cfg: SolverConfig):
        self.problem = problem
        self.cfg = cfg
        self.wire = _Wire(problem)
        self.sent: List[str] = []
        try:
            self.proc = subprocess.Popen(
                _solver_command(cfg),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as e:
            raise SmtError(f"cannot start solver {cfg.path!r}: {e}") from e
        self.send("(set-option :print-success true)")
        for line in emit_script(problem):
            self.send(line)

    def __enter__(self) -> "SmtSession":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def close(self) -> None:
        _dump(self.cfg, self.sent)
        if self.proc.poll() is None:
            try:
                self.proc.stdin.write("(exit)\n")
                self.proc.stdin.flush()
            except OSError:
                pass
            try:
                self.proc.wait(timeout=1)
            except subprocess.TimeoutExpired:
                self.proc.kill()
                self.proc.wait()
        for stream in (self.proc.stdin, self.proc.stdout, self.proc.stderr):
            try:
                stream.close()
            except OSError:
                pass

    def _read(self) -> str:
        depth = 0
        chunks = []
        while True:
            line = self.proc.stdout.readline()
            if not line:
                err = self.proc.stderr.read() if self.proc.poll() is not None else ""
                raise SmtError(f"solver process exited unexpectedly {err.strip()}".strip())
            chunks.append(line)
            in_string = False
            for ch in line:
                if ch == '"':
                    in_string = not in_string
                elif not in_string:
                    depth += (ch == "(") - (ch == ")")
            if depth <= 0 and "".join(chunks).strip():
                return "".join(chunks).strip()

    def send(self, command: str) -> str:
        self.sent.append(command)
        logger.debug(f"smt> {command}")
        try:
            self.proc.stdin.write(command + "\n")
            self.proc.stdin.flush()
        except OSError as e:
            raise SmtError(f"solver process closed its input: {e}") from e
        response = self._read()
        logger.debug(f"smt< {response}")
        if response.startswith("(error"):
            raise SmtError(f"solver rejected {command[:80]!r}: {response}")
        return response

    def add(self, name: str, formula) -> None:
        missing = formula.get_free_variables() - set(self.wire.names)
        if missing:
            raise SmtError(f"undeclared symbols in added assertion: {sorted(s.symbol_name() for s in missing)}")
        self.send(f"(assert {self.wire.term(formula)})")

    def check(self) -> str:
        status = self.send("(check-sat)")
        if status not in ("sat", "unsat", "unknown"):
            raise SmtError(f"unexpected check-sat answer {status!r}")
        return status

    def reason_unknown(self) -> str:
        try:
            text = self.send("(get-info :reason-unknown)")
        except SmtError:
            return "solver-unknown"
        return "timeout" if ("timeout" in text or "canceled" in text) else "solver-unknown"

    def values(self, symbols: Optional[List[object]] = None) -> Dict[object, object]:
        symbols = list(self.problem.declarations if symbols is None else symbols)
        if not symbols:
            return {}
        names = " ".join(self.wire.names[s] for s in symbols)
        parsed = _parse_sexpr(self.send(f"(get-value ({names}))"))
        model = {}
        for entry in parsed:
            wire_name, raw = entry[0], entry[1]
            symbol = self.wire.symbols[wire_name]
            model[symbol] = _value(symbol, raw)
        return model

    def unsat_core(self) -> FrozenSet[str]:
        parsed = _parse_sexpr(self.send("(get-unsat-core)"))
        if isinstance(parsed, str):
            parsed = []
        return frozenset(name.strip("|") for name in parsed)


def solve(problem: SmtProblem, cfg: SolverConfig) -> SmtOutcome:
    """
    Run one standalone query.

    Returns:
        SmtOutcome with a total model on sat, the named core on unsat when
        cores were requested, or a reason on unknown
    """
    with SmtSession(problem, cfg) as session:
        status = session.check()
        if status == "sat":
            return SmtOutcome("sat", model=session.values())
        if status == "unsat":
            core = session.unsat_core() if problem.produce_cores else frozenset()
            return SmtOutcome("unsat", core=core)
        return SmtOutcome("unknown", reason=session.reason_unknown())


def all_models_projected(problem: SmtProblem, proj: List[object], cfg: SolverConfig) -> Set[Tuple[bool, ...]]:
    """
    Enumerate the projections of all models onto boolean symbols.

    Returns:
        set of value tuples ordered like proj

    Raises:
        EngineError: more than cfg.allsat_cap models (reason "abstraction-limit"),
            or the solver answered unknown
    """
    if not proj:
        outcome = solve(problem, cfg)
        if outcome.status == "unknown":
            raise EngineError("solver returned unknown during enumeration", reason=outcome.reason or "solver-unknown")
        return {()} if outcome.is_sat else set()
    declared = set(problem.declarations)
    extra = [s for s in proj if s not in declared]
    if extra:
        problem = SmtProblem(
            sorted(declared | set(extra), key=lambda s: s.symbol_name()),
            problem.assertions,
            problem.produce_cores,
        )
    found: Set[Tuple[bool, ...]] = set()
    with SmtSession(problem, cfg) as session:
        while True:
            status = session.check()
            if status == "unsat":
                break
            if status == "unknown":
                raise EngineError("solver returned unknown during enumeration", reason=session.reason_unknown())
            model = session.values(proj)
            point = tuple(bool(model[s]) for s in proj)
            found.add(point)
            if len(found) > cfg.allsat_cap:
                raise EngineError(
                    f"more than {cfg.allsat_cap} projected models", reason="abstraction-limit"
                )
            block = Not(And([s if v else Not(s) for s, v in zip(proj, point)]))
            session.add(f"block{len(found)}", block)
    logger.debug(f"ALLSAT: {len(found)} projected models over {len(proj)} symbols")
    return found


def minimize_core(problem: SmtProblem, core: Iterable[str], cfg: SolverConfig) -> FrozenSet[str]:
    """Deletion-based shrinking: drop each assertion whose removal keeps the rest unsat."""
    keep = sorted(core)
    for name in list(keep):
        trial = [n for n in keep if n != name]
        outcome = solve(problem.restricted(trial), cfg)
        if outcome.is_unsat:
            keep = trial
    logger.debug(f"core minimized to {len(keep)} assertions")
    return frozenset(keep)
