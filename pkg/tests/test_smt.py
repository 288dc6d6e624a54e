from fractions import Fraction

import pytest
from pysmt.shortcuts import GE, GT, LT, And, Equals, Iff, Int, Not, Or, Plus, Real, Symbol, Times
from pysmt.typing import BOOL, INT, REAL

from config import SolverConfig
from errors import EngineError, SmtError
from smt_client import SmtProblem, _number, _parse_sexpr, all_models_projected, emit_script, minimize_core, solve


class TestEmitScript:
    def test_declarations_use_wire_names_in_name_order(self):
        y, x = Symbol("y", BOOL), Symbol("x", REAL)
        lines = emit_script(SmtProblem.of([("a", GT(x, Real(0))), ("b", y)]))
        assert lines[:3] == ["(set-logic QF_LRA)", "(declare-const v0 Real)", "(declare-const v1 Bool)"]
        assert lines[-1] == "(assert v1)"
        assert not any("x" in line for line in lines[1:])

    def test_named_assertions(self):
        n = Symbol("Train#1.level", INT)
        problem = SmtProblem.of([("trans@0", Equals(n, Int(1)))], produce_cores=True)
        lines = emit_script(problem)
        assert lines[0] == "(set-option :produce-unsat-cores true)"
        assert lines[1] == "(set-logic QF_LIRA)"
        assert lines[-1].startswith("(assert (! ")
        assert lines[-1].endswith(":named |trans@0|))")

    def test_identical_problems_identical_text(self):
        def build():
            a, b = Symbol("a", BOOL), Symbol("b", BOOL)
            return emit_script(SmtProblem.of([("init", Or(a, b)), ("loop", Not(a))]))
        assert build() == build()

    def test_duplicate_names(self):
        a = Symbol("a", BOOL)
        with pytest.raises(SmtError, match="unique"):
            SmtProblem.of([("init", a), ("init", Not(a))])

    def test_restricted_redeclares(self):
        a, b = Symbol("a", BOOL), Symbol("b", BOOL)
        problem = SmtProblem.of([("first", a), ("second", b)]).restricted(["second"])
        assert problem.declarations == [b]

    def test_product_of_variables_selects_nonlinear_logic(self):
        x, d, t = Symbol("x", REAL), Symbol("d", REAL), Symbol("t", REAL)
        flow = Equals(Symbol("x'", REAL), Plus(x, Times(d, t)))
        assert SmtProblem.of([("flow", flow)]).logic == "QF_NRA"
        n = Symbol("n", INT)
        assert SmtProblem.of([("flow", flow), ("pin", Equals(n, Int(0)))]).logic == "QF_NIRA"
        assert SmtProblem.of([("scaled", GT(Times(Real(2), x), t))]).logic == "QF_LRA"


class TestResponses:
    def test_model_values(self):
        parsed = _parse_sexpr("((v0 true) (v1 (- (/ 1 2))) (v2 3.5))")
        assert parsed[0] == ["v0", "true"]
        assert _number(parsed[1][1]) == Fraction(-1, 2)
        assert _number(parsed[2][1]) == Fraction(7, 2)

    def test_bare_atoms(self):
        assert _parse_sexpr("unsat") == "unsat"

    def test_missing_binary(self):
        cfg = SolverConfig(path="/nonexistent/solver-binary")
        a = Symbol("a", BOOL)
        with pytest.raises(SmtError, match="cannot start solver"):
            solve(SmtProblem.of([("a", a)]), cfg)


@pytest.mark.needs_solver
class TestSolver:
    def test_sat_model_is_exact(self, solver):
        x = Symbol("x", REAL)
        outcome = solve(SmtProblem.of([("lo", GT(x, Real(1))), ("hi", LT(x, Real(2)))]), solver)
        assert outcome.is_sat
        assert isinstance(outcome.model[x], Fraction)
        assert 1 < outcome.model[x] < 2

    def test_integer_model(self, solver):
        n = Symbol("n", INT)
        outcome = solve(SmtProblem.of([("pin", Equals(n, Int(3)))]), solver)
        assert outcome.model[n] == 3

    def test_unsat_core_and_minimization(self, solver):
        x, y = Symbol("x", REAL), Symbol("y", BOOL)
        problem = SmtProblem.of(
            [("a", GT(x, Real(2))), ("b", LT(x, Real(1))), ("c", y)],
            produce_cores=True,
        )
        outcome = solve(problem, solver)
        assert outcome.is_unsat
        assert {"a", "b"} <= outcome.core
        assert minimize_core(problem, outcome.core, solver) == frozenset({"a", "b"})

    def test_allsat_projection(self, solver):
        p, q, r = Symbol("p", BOOL), Symbol("q", BOOL), Symbol("r", BOOL)
        problem = SmtProblem.of([("some", Or(p, q)), ("free", Or(r, Not(r)))])
        models = all_models_projected(problem, [p, q], solver)
        assert models == {(True, False), (False, True), (True, True)}

    def test_allsat_cap(self, solver):
        p, q = Symbol("p", BOOL), Symbol("q", BOOL)
        capped = solver.model_copy(update={"allsat_cap": 2})
        with pytest.raises(EngineError) as info:
            all_models_projected(SmtProblem.of([("some", Or(p, q))]), [p, q], capped)
        assert info.value.reason == "abstraction-limit"

    def test_allsat_of_unsat_problem(self, solver):
        p = Symbol("p", BOOL)
        assert all_models_projected(SmtProblem.of([("both", And(p, Not(p)))]), [p], solver) == set()

    def test_allsat_projection_over_real_atoms(self, solver):
        x, p, q = Symbol("x", REAL), Symbol("p", BOOL), Symbol("q", BOOL)
        problem = SmtProblem.of([("p", Iff(GE(x, Real(0)), p)), ("q", Iff(GE(x, Real(1)), q))])
        models = all_models_projected(problem, [p, q], solver)
        assert models == {(True, False), (True, True), (False, False)}

    def test_flow_law_derivative_is_exact(self, solver):
        x, x1 = Symbol("x", REAL), Symbol("x'", REAL)
        d, t = Symbol("d", REAL), Symbol("t", REAL)
        problem = SmtProblem.of([
            ("flow", Equals(x1, Plus(x, Times(d, t)))),
            ("ends", And(Equals(x, Real(0)), Equals(x1, Real(6)), Equals(t, Real(3)))),
        ])
        outcome = solve(problem, solver)
        assert outcome.is_sat
        assert outcome.model[d] == Fraction(2)
