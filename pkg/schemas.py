import re
from fractions import Fraction
from typing import Annotated, Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, PlainSerializer, PlainValidator, model_validator


# ---------------------------------------------------------------------------
# Exact rationals travel as "p/q" strings
# ---------------------------------------------------------------------------

_RATIONAL = re.compile(r"^-?\d+/\d+$")


def format_rational(value: Fraction) -> str:
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"


def parse_rational(value: Any) -> Fraction:
    if isinstance(value, bool):
        raise ValueError(f"not a rational: {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str) and (_RATIONAL.match(value) or re.match(r"^-?\d+$", value)):
        return Fraction(value)
    raise ValueError(f"not a rational: {value!r}")


def _parse_value(value: Any) -> Any:
    if isinstance(value, (bool, int, Fraction)):
        return value
    if isinstance(value, str):
        return Fraction(value) if _RATIONAL.match(value) else value
    raise ValueError(f"unsupported trace value: {value!r}")


def _dump_value(value: Any) -> Any:
    if isinstance(value, Fraction):
        return format_rational(value)
    return value


Rational = Annotated[Fraction, PlainValidator(parse_rational), PlainSerializer(format_rational)]
TraceValue = Annotated[Any, PlainValidator(_parse_value), PlainSerializer(_dump_value)]


# ---------------------------------------------------------------------------
# Signature (class diagram)
# ---------------------------------------------------------------------------

AttrKind = Literal["boolean", "enumeration", "integer", "real", "reference"]


class AttrType(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: AttrKind
    symbols: Optional[List[str]] = None  # enumeration
    lo: Optional[int] = None  # integer
    hi: Optional[int] = None  # integer
    continuous: bool = False  # real only
    target: Optional[str] = None  # reference
    nullable: bool = False  # reference


class AttributeDef(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str
    type: AttrType


class ClassDef(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str
    attributes: List[AttributeDef] = Field(default_factory=list)

    def attribute(self, name: str) -> Optional[AttributeDef]:
        for attr in self.attributes:
            if attr.name == name:
                return attr
        return None


class Signature(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    classes: List[ClassDef] = Field(default_factory=list)
    globals: List[AttributeDef] = Field(default_factory=list)

    def get_class(self, name: str) -> Optional[ClassDef]:
        for cls in self.classes:
            if cls.name == name:
                return cls
        return None

    def get_global(self, name: str) -> Optional[AttributeDef]:
        for attr in self.globals:
            if attr.name == name:
                return attr
        return None

    def enum_symbols(self) -> Dict[str, List[AttrType]]:
        """Map every enumeration symbol to the enumeration types declaring it."""
        found: Dict[str, List[AttrType]] = {}
        attrs = [a for c in self.classes for a in c.attributes] + list(self.globals)
        for attr in attrs:
            if attr.type.kind == "enumeration":
                for sym in attr.type.symbols or []:
                    found.setdefault(sym, [])
                    if attr.type not in found[sym]:
                        found[sym].append(attr.type)
        return found


# ---------------------------------------------------------------------------
# Requirements and projects
# ---------------------------------------------------------------------------

Category = Literal["definition", "requirement", "scenario", "property"]


class Requirement(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    id: str
    text: str
    category: Category
    constraints: List[str] = Field(default_factory=list)
    links: List[str] = Field(default_factory=list)


class Project(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    signature: Signature
    requirements: List[Requirement] = Field(default_factory=list)
    bounds: Dict[str, int] = Field(default_factory=dict)

    def requirement(self, req_id: str) -> Optional[Requirement]:
        for req in self.requirements:
            if req.id == req_id:
                return req
        return None


class Diagnostic(BaseModel):
    """One violated invariant, with where it happened."""

    location: str
    message: str
    span: Optional[List[int]] = None

    def __str__(self) -> str:
        return f"{self.location}: {self.message}"


# ---------------------------------------------------------------------------
# Witnesses and check results
# ---------------------------------------------------------------------------

class TraceStep(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    kind: Literal["flow", "jump"]
    delta: Rational
    ders: Dict[str, Rational] = Field(default_factory=dict)


class HybridTrace(BaseModel):
    """
    Lasso-shaped hybrid witness.

    states[i] is the valuation before step i; states[-1] repeats
    states[loop_start], so len(states) == len(steps) + 1.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    states: List[Dict[str, TraceValue]]
    steps: List[TraceStep]
    loop_start: int

    @model_validator(mode="after")
    def _check_shape(self) -> "HybridTrace":
        if len(self.states) != len(self.steps) + 1:
            raise ValueError(
                f"trace has {len(self.states)} states for {len(self.steps)} steps"
            )
        if not 0 <= self.loop_start < max(len(self.steps), 1):
            raise ValueError(f"loop_start {self.loop_start} out of range")
        return self


Verdict = Literal[
    "CONSISTENT", "POSSIBLE", "ENTAILED",
    "INCONSISTENT", "IMPOSSIBLE", "VIOLATED",
    "UNKNOWN",
]

POSITIVE_VERDICTS = ("CONSISTENT", "POSSIBLE", "ENTAILED")
NEGATIVE_VERDICTS = ("INCONSISTENT", "IMPOSSIBLE", "VIOLATED")
WITNESS_VERDICTS = ("CONSISTENT", "POSSIBLE", "VIOLATED")


class CheckStats(BaseModel):
    bounds: Dict[str, int] = Field(default_factory=dict)
    bmc_bounds: List[int] = Field(default_factory=list)
    engine: Optional[str] = None
    engine_seconds: Dict[str, float] = Field(default_factory=dict)
    cegar_iterations: int = 0
    predicates: int = 0


class CheckResult(BaseModel):
    kind: Literal["consistency", "scenario", "property"]
    target: Optional[str] = None
    verdict: Verdict
    reason: Optional[str] = None
    witness: Optional[HybridTrace] = None
    culprit_core: Optional[List[str]] = None
    core_minimal: Optional[bool] = None
    stats: CheckStats = Field(default_factory=CheckStats)

    @model_validator(mode="after")
    def _check_invariants(self) -> "CheckResult":
        if (self.witness is not None) != (self.verdict in WITNESS_VERDICTS):
            raise ValueError(f"witness presence does not match verdict {self.verdict}")
        if self.culprit_core is not None and self.verdict not in ("INCONSISTENT", "IMPOSSIBLE"):
            raise ValueError(f"culprit core not allowed with verdict {self.verdict}")
        if self.verdict == "UNKNOWN" and not self.reason:
            raise ValueError("UNKNOWN verdict needs a reason")
        return self
