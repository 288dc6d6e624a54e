"""
Run configuration for the validation pipeline.
Environment defaults: RVT_SMT_SOLVER, RVT_SMT_TIMEOUT_MS. CLI flags override both.
"""
import os
from typing import List, Literal, Optional

from pydantic import BaseModel, Field, field_validator

DEFAULT_SOLVER = "z3"
DEFAULT_TIMEOUT_MS = 10000


class SolverConfig(BaseModel):
    path: str = DEFAULT_SOLVER
    timeout_ms: int = DEFAULT_TIMEOUT_MS
    dump_dir: Optional[str] = None
    allsat_cap: int = 2 ** 16

    @field_validator("timeout_ms")
    @classmethod
    def _positive_timeout(cls, value: int) -> int:
        if value <= 0:
            raise ValueError("timeout must be positive")
        return value

    @classmethod
    def from_env(cls, **overrides) -> "SolverConfig":
        values = {
            "path": os.environ.get("RVT_SMT_SOLVER", DEFAULT_SOLVER),
            "timeout_ms": int(os.environ.get("RVT_SMT_TIMEOUT_MS", DEFAULT_TIMEOUT_MS)),
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


class BmcConfig(BaseModel):
    k_schedule: List[int] = Field(default_factory=lambda: [2, 4, 6, 8, 10])

    @field_validator("k_schedule")
    @classmethod
    def _strictly_increasing(cls, value: List[int]) -> List[int]:
        if not value:
            raise ValueError("bound schedule must not be empty")
        if value[0] < 1:
            raise ValueError("bounds must be positive")
        if any(b <= a for a, b in zip(value, value[1:])):
            raise ValueError(f"bound schedule must be strictly increasing: {value}")
        return value

    @property
    def k_max(self) -> int:
        return self.k_schedule[-1]


class CegarLimits(BaseModel):
    max_iterations: int = 20
    max_new_predicates: int = 32


class GroundLimits(BaseModel):
    max_nodes: int = 100000


Strategy = Literal["bmc-cegar", "bmc", "cegar"]


class CheckConfig(BaseModel):
    solver: SolverConfig = Field(default_factory=SolverConfig.from_env)
    bmc: BmcConfig = Field(default_factory=BmcConfig)
    cegar: CegarLimits = Field(default_factory=CegarLimits)
    ground: GroundLimits = Field(default_factory=GroundLimits)
    strategy: Strategy = "bmc-cegar"
    minimize_cores: bool = True
    dump_ground_dir: Optional[str] = None
    dump_fts_dir: Optional[str] = None


class CliConfig(BaseModel):
    check: CheckConfig = Field(default_factory=CheckConfig)
    output: Literal["text", "json"] = "text"
    jobs: int = 1

    @field_validator("jobs")
    @classmethod
    def _positive_jobs(cls, value: int) -> int:
        if value < 1:
            raise ValueError("--jobs must be at least 1")
        return value
