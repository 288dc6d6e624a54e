import os
import shutil
import sys
from pathlib import Path

import pytest
from pysmt.environment import reset_env

from config import BmcConfig, CegarLimits, CheckConfig, SolverConfig
from desugar import desugar
from discretize import to_discrete
from constraint_parser import parse_constraint
from ground import instantiate
from schemas import AttrType, AttributeDef, Signature
from tableau import compile_ltl
from typechecker import typecheck

FIXTURES = Path(__file__).parent / "fixtures"


def pytest_configure(config):
    config.addinivalue_line("markers", "needs_solver: test runs an external SMT solver")


@pytest.fixture(autouse=True)
def fresh_pysmt_env():
    """Symbols are global per pysmt environment; give every test its own."""
    reset_env()
    yield


def _find_solver():
    configured = os.environ.get("RVT_SMT_SOLVER")
    if configured and shutil.which(configured):
        return shutil.which(configured)
    found = shutil.which("z3")
    if found:
        return found
    # z3-solver wheels ship the binary next to the interpreter's scripts
    candidate = Path(sys.executable).parent / "z3"
    return str(candidate) if candidate.exists() else None


@pytest.fixture
def solver():
    path = _find_solver()
    if path is None:
        pytest.skip("no SMT solver binary available")
    return SolverConfig(path=path, timeout_ms=20000, allsat_cap=4096)


@pytest.fixture
def check_cfg(solver):
    return CheckConfig(
        solver=solver,
        bmc=BmcConfig(k_schedule=[1, 2, 4]),
        cegar=CegarLimits(max_iterations=4, max_new_predicates=8),
    )


@pytest.fixture
def fixture_path():
    return lambda name: FIXTURES / name


# ======================== Helpers ========================

def boolean_signature(*names, reals=(), continuous=()):
    globals_ = [AttributeDef(name=n, type=AttrType(kind="boolean")) for n in names]
    globals_ += [AttributeDef(name=n, type=AttrType(kind="real")) for n in reals]
    globals_ += [AttributeDef(name=n, type=AttrType(kind="real", continuous=True)) for n in continuous]
    return Signature(globals=globals_)


def core_formula(text, sig):
    return desugar(typecheck(parse_constraint(text, sig), sig))


def compile_text(text, sig, bounds=None):
    """parse -> typecheck -> desugar -> ground -> discretize -> tableau."""
    problem = to_discrete(instantiate(core_formula(text, sig), sig, bounds or {}))
    return compile_ltl(problem), problem
