from fractions import Fraction

import pytest

from conftest import boolean_signature, core_formula
from constraint_parser import parse_constraint
from desugar import CORE, desugar, neg
from errors import LangError
from formula_ast import (
    TRUE,
    Add, Always, And, Compare, Concat, Const, Eventually, Formula, Forall, GlobalAttr, Implies, Letter,
    Not, Or, Prop, Scale, StrongSere, SuffixImpl, SuffixImplNext, Until, walk,
)
from pretty import pretty
from schemas import AttrType, AttributeDef, ClassDef, Signature
from typechecker import typecheck


def _train_signature():
    return Signature(
        classes=[ClassDef(name="Train", attributes=[
            AttributeDef(name="speed", type=AttrType(kind="real")),
            AttributeDef(name="mode", type=AttrType(kind="enumeration", symbols=["stopped", "moving"])),
        ])],
        globals=[AttributeDef(name="alarm", type=AttrType(kind="boolean"))],
    )


def _p(name):
    return Prop(GlobalAttr(name))


class TestParser:
    def test_precedence(self):
        sig = boolean_signature("a", "b", "c")
        assert parse_constraint("a and b or c", sig) == Or(And(_p("a"), _p("b")), _p("c"))

    def test_implies_is_right_associative(self):
        sig = boolean_signature("a", "b", "c")
        assert parse_constraint("a implies b implies c", sig) == Implies(_p("a"), Implies(_p("b"), _p("c")))

    def test_never_is_always_not(self):
        sig = boolean_signature("a")
        assert parse_constraint("never a", sig) == Always(Not(_p("a")))

    def test_worded_comparator(self):
        sig = _train_signature()
        f = parse_constraint("forall t in Train . t.speed is at most 5", sig)
        assert isinstance(f, Forall)
        assert f.body.op == "<=" and f.body.right == Const(Fraction(5))

    def test_constant_moves_right(self):
        sig = boolean_signature(reals=("x",))
        assert parse_constraint("5 < x", sig) == Compare(">", GlobalAttr("x"), Const(Fraction(5)))

    def test_linear_arithmetic(self):
        sig = boolean_signature(reals=("x",))
        f = parse_constraint("2 * x + 1/2 >= 0", sig)
        assert f.left == Add(Scale(Fraction(2), GlobalAttr("x")), Const(Fraction(1, 2)))

    def test_in_the_future(self):
        sig = boolean_signature("a")
        assert parse_constraint("in the future a", sig) == Eventually(_p("a"))

    def test_sere_forms(self):
        sig = boolean_signature("a", "b")
        assert parse_constraint("{a ; b}!", sig) == StrongSere(Concat(Letter(_p("a")), Letter(_p("b"))))
        f = parse_constraint("{a} |=> b", sig)
        assert isinstance(f, SuffixImplNext) and f.arg == _p("b")

    def test_spans_and_requirement_tag(self):
        sig = boolean_signature("a", "b")
        f = parse_constraint("a and b", sig, "R7")
        assert f.req == "R7"
        assert f.right.span == (6, 7)

    def test_sere_letters_are_boolean_combinations(self):
        sig = boolean_signature("a", "b")
        f = parse_constraint("{a and b ; not a}!", sig)
        assert isinstance(f.sere, Concat)
        assert f.sere.left == Letter(And(_p("a"), _p("b")))
        assert isinstance(f.sere.right, Letter)
        assert isinstance(f.sere.right.formula, Not)

    def test_spans_skip_leading_whitespace(self):
        sig = boolean_signature("a", "b", reals=("x",))
        f = parse_constraint("a  and   b", sig)
        assert f.left.span == (0, 1)
        assert f.right.span == (9, 10)
        g = parse_constraint("always   x >= 1", sig)
        assert g.arg.span == (9, 15)


class TestParserErrors:
    def test_lexical(self):
        with pytest.raises(LangError) as info:
            parse_constraint("x >= 0 #", boolean_signature(reals=("x",)), "R1")
        assert info.value.kind == "lexical"
        assert info.value.span == (7, 8)
        assert str(info.value) == "R1@7-8: unexpected character '#'"

    def test_syntax(self):
        with pytest.raises(LangError) as info:
            parse_constraint("x >= ", boolean_signature(reals=("x",)))
        assert info.value.kind == "syntax"

    def test_nonlinear_product(self):
        with pytest.raises(LangError, match="nonlinear"):
            parse_constraint("x * y >= 0", boolean_signature(reals=("x", "y")))

    def test_division_by_zero_in_constant(self):
        with pytest.raises(LangError) as info:
            parse_constraint("x >= 1/0", boolean_signature(reals=("x",)), "R2")
        assert info.value.kind == "lexical"
        assert info.value.span == (5, 8)
        assert "division by zero" in str(info.value)

    @pytest.mark.parametrize("text, message", [
        ("y >= 0", "unknown attribute y"),
        ("t.speed >= 0", "unbound variable t"),
        ("forall t in Bus . t.speed >= 0", "unknown class Bus"),
        ("forall t in Train . t.weight >= 0", "unknown attribute Train.weight"),
        ("Train.speed >= 0", "class Train used as a variable"),
    ])
    def test_name_errors(self, text, message):
        with pytest.raises(LangError) as info:
            parse_constraint(text, _train_signature())
        assert info.value.kind == "name"
        assert info.value.message == message


class TestTypechecker:
    @pytest.mark.parametrize("text, message", [
        ("forall t in Train . t.mode < stopped", "operator < needs numeric operands"),
        ("forall t in Train . t.mode = 1", "enum compared with number"),
        ("alarm >= 1", "cannot compare boolean with integer"),
        ("forall t in Train . t.speed", "real used as a formula"),
        ("forall t in Train . der(t.speed) = 1", "der requires continuous real"),
        ("forall t in Train . next(next(t.speed)) = 1", "nested next"),
    ])
    def test_rejects(self, text, message):
        sig = _train_signature()
        with pytest.raises(LangError) as info:
            typecheck(parse_constraint(text, sig), sig)
        assert info.value.kind == "type"
        assert info.value.message == message

    def test_accepts_enum_literal(self):
        sig = _train_signature()
        f = typecheck(parse_constraint("forall t in Train . t.mode = stopped", sig), sig)
        assert f.body.right.type.symbols == ["stopped", "moving"]

    def test_der_on_continuous_real(self):
        sig = boolean_signature(continuous=("x",))
        f = typecheck(parse_constraint("der(x) = 1", sig), sig)
        assert f.left.type.kind == "real"


class TestPretty:
    @pytest.mark.parametrize("text", [
        "always (a implies eventually b)",
        "a until (b and not c)",
        "{a[*] ; b : c}! or {a | b} |-> next c",
        "x - (y + 2) > 1/3",
        "not (a iff b) releases c",
    ])
    def test_reparse_is_identity(self, text):
        sig = boolean_signature("a", "b", "c", reals=("x", "y"))
        f = parse_constraint(text, sig)
        assert parse_constraint(pretty(f), sig) == f


# ======================== Helpers ========================

def _all_core(f):
    return all(isinstance(n, CORE) for n in walk(f) if isinstance(n, Formula))


class TestDesugar:
    def test_always(self):
        sig = boolean_signature("a")
        assert core_formula("always a", sig) == Not(Until(TRUE, Not(_p("a"))))

    def test_suffix_next_becomes_suffix_with_true(self):
        sig = boolean_signature("a", "b")
        f = core_formula("{a} |=> b", sig)
        assert f == SuffixImpl(Concat(Letter(_p("a")), Letter(TRUE)), _p("b"))

    @pytest.mark.parametrize("text", [
        "always (a implies eventually b)",
        "(a or b) releases (a iff b)",
        "never {a ; b[*2]}!",
    ])
    def test_result_is_core_and_idempotent(self, text):
        sig = boolean_signature("a", "b")
        f = core_formula(text, sig)
        assert _all_core(f)
        assert desugar(f) == f

    def test_neg_cancels_double_negation(self):
        a = _p("a")
        assert neg(neg(a)) == a
        assert neg(Not(a)) == a
