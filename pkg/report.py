"""
Engineer-facing reports: check verdicts with the prose of the involved
requirements, witness tables and the traceability graph.

Prose lines are copied from the project with line breaks folded to spaces.
The traceability lock re-reads the rendered text and refuses output whose
quoted prose differs from the requirement texts.
"""
import logging
import re
from fractions import Fraction
from typing import Dict, List

from errors import TraceError
from pretty import format_const
from project import linked_requirements, requirements_for
from schemas import CheckResult, HybridTrace, Project, Requirement

logger = logging.getLogger(__name__)

REPORT_TEMPLATE = """\
# {title}

**Verdict:** {verdict}{reason}

{body}
## Statistics

- Bounds: {bounds}
- BMC bounds tried: {bmc_bounds}
- Engine: {engine} ({seconds}s)
- CEGAR iterations: {iterations}, predicates: {predicates}
"""

_TITLES = {
    "consistency": "Consistency check",
    "scenario": "Scenario check {target}",
    "property": "Property check {target}",
}

_PROSE = re.compile(r"^> \[(?P<id>[^\]]+)\] (?P<text>.*)$", re.M)
_LINKED = re.compile(r"^  linked: \[(?P<id>[^\]]+)\] (?P<text>.*)$", re.M)


def _one_line(text: str) -> str:
    return " ".join(text.splitlines())


def format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, Fraction):
        return format_const(value)
    return str(value)


def render_trace(trace: HybridTrace) -> str:
    """
    One row per step: kind, duration, changed variables and derivatives,
    with the loop marker on the last row.
    """
    lines = ["step | kind | delta | changes | derivatives", "---- | ---- | ----- | ------- | -----------"]
    initial = ", ".join(f"{k}={format_value(v)}" for k, v in sorted(trace.states[0].items()))
    lines.insert(0, f"initial: {initial or '(no variables)'}")
    for i, step in enumerate(trace.steps):
        before, after = trace.states[i], trace.states[i + 1]
        changes = ", ".join(
            f"{name}: {format_value(before[name])} → {format_value(after[name])}"
            for name in sorted(after)
            if after[name] != before.get(name)
        )
        ders = ", ".join(f"{name}'={format_const(v)}" for name, v in sorted(step.ders.items()))
        row = f"{i} | {step.kind} | {format_const(step.delta)} | {changes or '-'} | {ders or '-'}"
        if i == len(trace.steps) - 1:
            row += f"  ↺ to step {trace.loop_start}"
        lines.append(row)
    return "\n".join(lines) + "\n"


def _prose(reqs: List[Requirement], project: Project) -> List[str]:
    lines = []
    for req in reqs:
        lines.append(f"> [{req.id}] {_one_line(req.text)}")
        for linked in linked_requirements(project, req.id):
            lines.append(f"  linked: [{linked.id}] {_one_line(linked.text)}")
    return lines


class ReportGenerator:
    """Renders check results; every quoted requirement line is checked against the project."""

    def __init__(self, project: Project):
        self.project = project

    def render(self, result: CheckResult) -> str:
        body: List[str] = []
        expected: Dict[str, str] = {}

        if result.culprit_core is not None:
            culprits = requirements_for(self.project, result.culprit_core)
            note = "" if result.core_minimal else " (not known to be minimal)"
            body.append(f"## Culprit requirements{note}\n")
            body.extend(_prose(culprits, self.project))
            body.append("")
            expected.update({r.id: r.text for r in culprits})
        if result.target is not None:
            target = self.project.requirement(result.target)
            body.append(f"## {result.kind.capitalize()}\n")
            body.append(f"> [{target.id}] {_one_line(target.text)}")
            body.append("")
            expected[target.id] = target.text
        if result.witness is not None:
            title = "Counterexample" if result.verdict == "VIOLATED" else "Witness"
            body.append(f"## {title}\n")
            body.append(render_trace(result.witness))

        stats = result.stats
        text = REPORT_TEMPLATE.format(
            title=_TITLES[result.kind].format(target=result.target),
            verdict=result.verdict,
            reason=f" ({result.reason})" if result.reason else "",
            body="\n".join(body),
            bounds=", ".join(f"{k}={v}" for k, v in sorted(stats.bounds.items())) or "-",
            bmc_bounds=", ".join(str(k) for k in stats.bmc_bounds) or "-",
            engine=stats.engine or "-",
            seconds=stats.engine_seconds.get("solve", 0),
            iterations=stats.cegar_iterations,
            predicates=stats.predicates,
        )
        self._validate_traceability(text, expected)
        return text

    def render_all(self, results: List[CheckResult]) -> str:
        return "\n---\n\n".join(self.render(r) for r in results)

    def _validate_traceability(self, text: str, expected: Dict[str, str]) -> None:
        quoted = {m.group("id"): m.group("text") for m in _PROSE.finditer(text)}
        for req_id, prose in expected.items():
            if quoted.get(req_id) != _one_line(prose):
                raise TraceError(f"traceability violation: prose of {req_id} altered in report")
        for m in _LINKED.finditer(text):
            linked = self.project.requirement(m.group("id"))
            if linked is None or m.group("text") != _one_line(linked.text):
                raise TraceError(f"traceability violation: prose of {m.group('id')} altered in report")
        logger.debug(f"🔒 Traceability lock verified: {len(expected)} requirement(s)")


def render_links(project: Project) -> str:
    """The traceability graph, one requirement per block."""
    lines = []
    for req in project.requirements:
        lines.append(f"{req.id} ({req.category}): {_one_line(req.text)}")
        for linked in linked_requirements(project, req.id):
            lines.append(f"  -> {linked.id}")
    return "\n".join(lines) + "\n"
