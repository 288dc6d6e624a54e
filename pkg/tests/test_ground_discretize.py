import json
from fractions import Fraction

import pytest
from pysmt.shortcuts import GE, TRUE, And, Equals, Int, Real

from config import GroundLimits
from conftest import boolean_signature, core_formula
from discretize import DELTA_NAME, FLOW_NAME, replay_hybrid_trace, to_discrete
from errors import DiscretizeError, GroundError, TraceError
from formula_ast import SmtAtom, tag_requirement, walk
from ground import dump_ground, free_vars, instantiate, merge_problems
from schemas import AttrType, AttributeDef, ClassDef, HybridTrace, Signature


def _signature():
    return Signature(
        classes=[ClassDef(name="Train", attributes=[
            AttributeDef(name="speed", type=AttrType(kind="real")),
            AttributeDef(name="ahead", type=AttrType(kind="reference", target="Train", nullable=True)),
        ])],
        globals=[
            AttributeDef(name="mode", type=AttrType(kind="enumeration", symbols=["on", "off"])),
            AttributeDef(name="level", type=AttrType(kind="integer", lo=0, hi=3)),
            AttributeDef(name="x", type=AttrType(kind="real", continuous=True)),
        ],
    )


def _ground(text, bounds=None, sig=None, **limits):
    sig = sig or _signature()
    return instantiate(core_formula(text, sig), sig, bounds or {"Train": 2}, GroundLimits(**limits) if limits else None)


class TestInstantiate:
    def test_forall_declares_one_variable_per_object(self):
        g = _ground("always (forall t in Train . t.speed >= 0)")
        assert [v.name for v in g.vars] == ["Train#1.speed", "Train#2.speed"]
        assert len(g.conjuncts) == 1

    def test_top_level_conjuncts_keep_origin(self):
        f = tag_requirement(core_formula("forall t in Train . t.speed >= 0", _signature()), "R1")
        g = instantiate(f, _signature(), {"Train": 2})
        assert len(g.conjuncts) == 2
        assert g.origin == ["R1", "R1"]

    def test_reference_domain_includes_null(self):
        g = _ground("forall t in Train . t.ahead = null")
        ahead = g.var("Train#1.ahead")
        assert ahead.kind == "reference"
        assert ahead.domain == ("null", "Train#1", "Train#2")

    def test_static_object_equality_folds_away(self):
        g = _ground("forall t in Train . (t = t or t.speed >= 0)", {"Train": 1})
        assert g.conjuncts == []

    def test_missing_bound(self):
        with pytest.raises(GroundError, match="missing bound Train"):
            _ground("forall t in Train . t.speed >= 0", bounds={"Other": 1})

    def test_node_limit(self):
        with pytest.raises(GroundError, match="expansion exceeds 5 ground nodes"):
            _ground("forall t in Train . forall u in Train . t.speed >= u.speed", max_nodes=5)

    def test_merge_and_split(self):
        a = _ground("x >= 0")
        b = _ground("level = 1 and x <= 3")
        merged = merge_problems([a, b])
        assert [v.name for v in merged.vars] == ["level", "x"]
        discrete, continuous = free_vars(merged)
        assert [v.name for v in discrete] == ["level"]
        assert [v.name for v in continuous] == ["x"]

    def test_dump(self):
        text = dump_ground(_ground("level = 1"))
        assert "  level : integer 0..3" in text
        assert "  [-] level = 1" in text


class TestToDiscrete:
    def test_enum_atom_compares_index(self):
        problem = to_discrete(_ground("mode = off"))
        atom = problem.conjuncts[0]
        assert isinstance(atom, SmtAtom)
        assert atom.node == Equals(problem.state["mode"], Int(1))
        assert problem.domains == {problem.state["mode"]: (0, 1)}

    def test_no_step_model_without_continuous_vars(self):
        problem = to_discrete(_ground("always level <= 2"))
        assert problem.step is None
        assert problem.inputs == []
        assert problem.axioms.is_true()

    def test_derivative_reads_a_flow_input(self):
        problem = to_discrete(_ground("always der(x) >= 1"))
        assert [s.symbol_name() for s in problem.inputs] == [FLOW_NAME, DELTA_NAME, "der.x"]
        atoms = [n for n in walk(problem.conjuncts[0]) if isinstance(n, SmtAtom)]
        der_x = problem.step.ders["x"]
        assert atoms[0].node == And(problem.step.flow, GE(der_x, Real(1)))

    def test_flow_law_moves_continuous_by_der_times_delta(self):
        problem = to_discrete(_ground("always der(x) >= 1"))
        x = problem.state["x"]
        valuation = {
            x: Real(0), problem.step.ders["x"]: Real(2),
            problem.step.delta: Real(3), problem.step.flow: TRUE(),
        }
        laws = problem.axioms.substitute(valuation)
        assert laws.substitute({problem.primed[x]: Real(6)}).simplify().is_true()
        assert laws.substitute({problem.primed[x]: Real(5)}).simplify().is_false()

    def test_der_and_next_in_one_atom(self):
        with pytest.raises(DiscretizeError, match="mixes der and next"):
            to_discrete(_ground("always der(x) = next(x)"))

    def test_der_against_state(self):
        problem = to_discrete(_ground("always der(x) >= x"))
        atoms = [n for n in walk(problem.conjuncts[0]) if isinstance(n, SmtAtom)]
        names = {s.symbol_name() for s in atoms[0].node.get_free_variables()}
        assert names == {"x", "der.x", FLOW_NAME}

    def test_constant_atoms_fold(self):
        problem = to_discrete(_ground("x - x = 0"))
        assert problem.conjuncts[0].value is True


# ======================== Helpers ========================

def _trace(states, steps, loop_start):
    return HybridTrace.model_validate({"states": states, "steps": steps, "loop_start": loop_start})


class TestReplay:
    def test_valid_fixture(self, fixture_path):
        trace = HybridTrace.model_validate(json.loads(fixture_path("trace_two_flows.json").read_text()))
        replay_hybrid_trace(trace)
        assert trace.steps[0].ders == {"x": Fraction(1)}

    def test_zero_duration_flow(self, fixture_path):
        trace = HybridTrace.model_validate(json.loads(fixture_path("trace_zero_flow.json").read_text()))
        with pytest.raises(TraceError, match="flow with zero duration at step 0"):
            replay_hybrid_trace(trace)

    def test_flow_law(self):
        trace = _trace(
            [{"x": "0/1"}, {"x": "3/1"}, {"x": "3/1"}],
            [{"kind": "flow", "delta": "1/1", "ders": {"x": "2/1"}}, {"kind": "jump", "delta": "0/1"}],
            1,
        )
        with pytest.raises(TraceError, match="flow law broken for x at step 0"):
            replay_hybrid_trace(trace)

    def test_discrete_variable_frozen_during_flow(self):
        trace = _trace(
            [{"x": "0/1", "on": False}, {"x": "1/2", "on": True}, {"x": "1/2", "on": True}],
            [{"kind": "flow", "delta": "1/2", "ders": {"x": "1/1"}}, {"kind": "jump", "delta": "0/1"}],
            1,
        )
        with pytest.raises(TraceError, match="on changes during flow at step 0"):
            replay_hybrid_trace(trace, ["x"])

    def test_jump_takes_no_time(self):
        trace = _trace([{"x": "0/1"}, {"x": "0/1"}], [{"kind": "jump", "delta": "1/1"}], 0)
        with pytest.raises(TraceError, match="jump with nonzero duration"):
            replay_hybrid_trace(trace)

    def test_loop_closes(self):
        trace = _trace([{"x": "0/1"}, {"x": "1/1"}], [{"kind": "jump", "delta": "0/1"}], 0)
        with pytest.raises(TraceError, match="loop end differs from loop start"):
            replay_hybrid_trace(trace)

    def test_shape_is_validated(self):
        with pytest.raises(ValueError):
            _trace([{"x": "0/1"}], [{"kind": "jump", "delta": "0/1"}], 0)
