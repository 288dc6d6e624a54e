"""
Cross-checks against brute-force references: SERE matching by recursive
splitting, propositional LTL by evaluating every small lasso, quantified
formulas by evaluating small populations directly, and the parser against
the canonical printer on random formulas. The SMT engines are held to the
same references and to each other.
"""
import itertools
import random
from fractions import Fraction
from functools import lru_cache

import pytest

from bmc import replay_lasso
from config import BmcConfig, CegarLimits, CheckConfig
from conftest import boolean_signature, compile_text, core_formula
from constraint_parser import parse_constraint
from engine import solve_formula
from explicit import language_empty_explicit
from formula_ast import (
    COMPARISON_OPS,
    Add, Always, And, BoolConst, Compare, Concat, Const, Eventually, Exists, Forall, Fusion, GlobalAttr,
    Iff, Implies, Letter, NextStep, Not, Or, Prop, Release, Repeat, Scale, Star, StrongSere, Sub,
    SuffixImpl, SuffixImplNext, Union, Until,
)
from pretty import pretty
from schemas import AttrType, AttributeDef, ClassDef, Signature
from sere_nfa import compile_sere, nfa_accepts

PROPS = ("p", "q")


# ======================== SERE ========================

_LETTERS = [
    Prop(GlobalAttr("a")),
    Prop(GlobalAttr("b")),
    Not(Prop(GlobalAttr("b"))),
    BoolConst(True),
]


def _letter_true(f, valuation):
    if isinstance(f, BoolConst):
        return f.value
    if isinstance(f, Not):
        return not _letter_true(f.arg, valuation)
    return valuation[f.term.name]


def _random_sere(rng, depth):
    if depth == 0 or rng.random() < 0.25:
        return Letter(rng.choice(_LETTERS))
    op = rng.choice(["concat", "fusion", "union", "star", "repeat"])
    if op == "star":
        return Star(_random_sere(rng, depth - 1))
    if op == "repeat":
        return Repeat(_random_sere(rng, depth - 1), rng.randint(0, 2))
    cls = {"concat": Concat, "fusion": Fusion, "union": Union}[op]
    return cls(_random_sere(rng, depth - 1), _random_sere(rng, depth - 1))


@lru_cache(maxsize=None)
def _matches(r, word):
    """word is a tuple of (a, b) pairs."""
    n = len(word)
    if isinstance(r, Letter):
        return n == 1 and _letter_true(r.formula, dict(zip("ab", word[0])))
    if isinstance(r, Union):
        return _matches(r.left, word) or _matches(r.right, word)
    if isinstance(r, Concat):
        return any(_matches(r.left, word[:i]) and _matches(r.right, word[i:]) for i in range(n + 1))
    if isinstance(r, Fusion):
        return any(_matches(r.left, word[:i + 1]) and _matches(r.right, word[i:]) for i in range(n))
    if isinstance(r, Star):
        return n == 0 or any(_matches(r.arg, word[:i]) and _matches(r, word[i:]) for i in range(1, n + 1))
    if isinstance(r, Repeat):
        if r.count == 0:
            return n == 0
        rest = Repeat(r.arg, r.count - 1)
        return any(_matches(r.arg, word[:i]) and _matches(rest, word[i:]) for i in range(n + 1))
    raise TypeError(r)


_WORDS = [
    word
    for length in range(6)
    for word in itertools.product(itertools.product((False, True), repeat=2), repeat=length)
]


@pytest.mark.parametrize("seed", range(200))
def test_nfa_agrees_with_recursive_matcher(seed):
    r = _random_sere(random.Random(seed), 3)
    nfa = compile_sere(r)
    for word in _WORDS:
        valuations = [{"a": a, "b": b} for a, b in word]
        assert nfa_accepts(nfa, valuations) == _matches(r, word), (r, word)


# ======================== LTL ========================

SATISFIABLE = [
    "eventually p",
    "always p",
    "p until q",
    "p releases q",
    "not (p until q)",
    "next next p and not p",
    "eventually always q",
    "always eventually p and always eventually not p",
    "always (p implies next not p)",
    "always (p iff next q)",
    "(always p) or (eventually q and always not p)",
    "never p and eventually q",
    "{p ; q [*2]}!",
    "always ({p} |=> q)",
    "not {p ; p}!",
]

UNSATISFIABLE = [
    "false",
    "p and not p",
    "always p and eventually not p",
    "never p and eventually p",
    "next p and next not p",
    "(p until q) and always not q",
    "always q and (p until not q)",
    "always (p implies next not p) and always p",
    "eventually always p and always eventually not p",
    "always (p iff next not p) and always (p iff next p)",
    "{p ; q}! and never q",
    "always ({p} |-> false) and eventually p",
    "{p [*2]}! and not p",
    "always (p until false)",
    "(not p) releases false",
]


def _holds_on_lasso(f, letters, loop):
    """Truth of a core formula at every position of the lasso letters[:loop] (letters[loop:])^w."""
    n = len(letters)
    succ = [i + 1 for i in range(n - 1)] + [loop]

    if isinstance(f, BoolConst):
        return [f.value] * n
    if isinstance(f, Prop):
        return [step[f.term.name] for step in letters]
    if isinstance(f, Not):
        return [not v for v in _holds_on_lasso(f.arg, letters, loop)]
    if isinstance(f, And):
        left, right = _holds_on_lasso(f.left, letters, loop), _holds_on_lasso(f.right, letters, loop)
        return [a and b for a, b in zip(left, right)]
    if isinstance(f, NextStep):
        arg = _holds_on_lasso(f.arg, letters, loop)
        return [arg[succ[i]] for i in range(n)]
    if isinstance(f, Until):
        left, right = _holds_on_lasso(f.left, letters, loop), _holds_on_lasso(f.right, letters, loop)
        value = [False] * n
        for _ in range(n + 1):
            value = [right[i] or (left[i] and value[succ[i]]) for i in range(n)]
        return value
    raise TypeError(f"not a propositional core formula: {f!r}")


def _has_model(f, max_len=4):
    for length in range(1, max_len + 1):
        for letters in itertools.product(itertools.product((False, True), repeat=2), repeat=length):
            steps = [dict(zip(PROPS, bits)) for bits in letters]
            for loop in range(length):
                if _holds_on_lasso(f, steps, loop)[0]:
                    return True
    return False


def _is_sere_free(text):
    return "{" not in text


@pytest.mark.parametrize("text, expected", [(t, True) for t in SATISFIABLE] + [(t, False) for t in UNSATISFIABLE])
def test_explicit_check_agrees_with_oracle(text, expected):
    sig = boolean_signature(*PROPS)
    if _is_sere_free(text):
        assert _has_model(core_formula(text, sig)) is expected
    fts, problem = compile_text(text, sig)
    lasso = language_empty_explicit(fts)
    assert (lasso is not None) is expected
    if lasso is not None and _is_sere_free(text):
        steps = [
            {name: bool(state.get(problem.state.get(name), False)) for name in PROPS}
            for state in lasso.states[:-1]
        ]
        assert _holds_on_lasso(core_formula(text, sig), steps, lasso.loop_start)[0]


def _engines_cfg(solver, strategy="bmc-cegar"):
    return CheckConfig(
        solver=solver,
        bmc=BmcConfig(k_schedule=[1, 2, 4, 6, 8, 10]),
        cegar=CegarLimits(max_iterations=4, max_new_predicates=8),
        strategy=strategy,
    )


@pytest.mark.needs_solver
@pytest.mark.parametrize("text, expected", [(t, True) for t in SATISFIABLE] + [(t, False) for t in UNSATISFIABLE])
def test_smt_engines_agree_with_oracle(text, expected, solver):
    fts, _ = compile_text(text, boolean_signature(*PROPS))
    verdict = solve_formula(fts, _engines_cfg(solver))
    if expected:
        assert verdict.is_sat
        assert replay_lasso(fts, verdict.lasso) == []
    else:
        assert verdict.is_unsat


@pytest.mark.needs_solver
@pytest.mark.parametrize("text", SATISFIABLE + UNSATISFIABLE)
def test_engines_never_conflict(text, solver):
    fts, _ = compile_text(text, boolean_signature(*PROPS))
    answers = {"explicit": "sat" if language_empty_explicit(fts) is not None else "unsat"}
    for strategy in ("bmc", "cegar"):
        answers[strategy] = solve_formula(fts, _engines_cfg(solver, strategy)).status
    assert len(set(answers.values()) - {"unknown"}) == 1, answers


# ======================== Grounding ========================

QUANTIFIED = [
    "forall t in Obj . t.p",
    "exists t in Obj . (t.p and not t.q)",
    "always (forall t in Obj . (t.p implies t.q))",
    "eventually (exists t in Obj . t.p)",
    "forall t in Obj . eventually t.p",
    "(exists t in Obj . t.p) and (forall t in Obj . not t.p)",
    "always (exists t in Obj . t.p) and eventually (forall t in Obj . not t.p)",
    "forall t in Obj . (t.p until t.q)",
    "exists t in Obj . always (t.p and not t.q)",
    "forall t in Obj . exists u in Obj . (t.p iff not u.p)",
    "forall t in Obj . forall u in Obj . (t = u or (t.p iff not u.p))",
    "always (forall t in Obj . ((next t.p) iff not t.p))",
    "exists t in Obj . (next t.p and not t.p)",
    "always (forall t in Obj . t.p) and eventually (exists t in Obj . t.q)",
    "never (exists t in Obj . t.p) and (forall t in Obj . eventually t.p)",
    "forall t in Obj . (t.q releases t.p)",
    "(exists t in Obj . always eventually t.p) and (forall t in Obj . always eventually not t.p)",
    "forall t in Obj . exists u in Obj . t != u",
    "exists t in Obj . (t.p and (forall u in Obj . (t = u or not u.p)))",
    "always (forall t in Obj . (t.p implies next t.q)) and always (exists t in Obj . t.p) and never (exists t in Obj . t.q)",
]

_ATTRS = ("p", "q")
_BRUTE_LENGTH = {1: 3, 2: 2, 3: 1}


def _object_signature():
    return Signature(classes=[ClassDef(name="Obj", attributes=[
        AttributeDef(name=a, type=AttrType(kind="boolean")) for a in _ATTRS
    ])])


def _holds_quantified(f, letters, loop, n, env):
    """Like _holds_on_lasso; letters[i] maps (object index, attribute) to a bool."""
    size = len(letters)
    succ = [i + 1 for i in range(size - 1)] + [loop]

    def sub(g, bindings=env):
        return _holds_quantified(g, letters, loop, n, bindings)

    if isinstance(f, BoolConst):
        return [f.value] * size
    if isinstance(f, Prop):
        return [step[(env[f.term.obj], f.term.attr)] for step in letters]
    if isinstance(f, Compare):
        same = env[f.left.var] == env[f.right.var]
        return [same if f.op == "=" else not same] * size
    if isinstance(f, Not):
        return [not v for v in sub(f.arg)]
    if isinstance(f, And):
        return [a and b for a, b in zip(sub(f.left), sub(f.right))]
    if isinstance(f, NextStep):
        arg = sub(f.arg)
        return [arg[succ[i]] for i in range(size)]
    if isinstance(f, Until):
        left, right = sub(f.left), sub(f.right)
        value = [False] * size
        for _ in range(size + 1):
            value = [right[i] or (left[i] and value[succ[i]]) for i in range(size)]
        return value
    if isinstance(f, (Forall, Exists)):
        parts = [sub(f.body, {**env, f.var: i}) for i in range(1, n + 1)]
        combine = all if isinstance(f, Forall) else any
        return [combine(p[i] for p in parts) for i in range(size)]
    raise TypeError(f"not a quantified boolean core formula: {f!r}")


def _has_quantified_model(f, n):
    keys = [(i, a) for i in range(1, n + 1) for a in _ATTRS]
    for length in range(1, _BRUTE_LENGTH[n] + 1):
        for bits in itertools.product((False, True), repeat=len(keys) * length):
            letters = [dict(zip(keys, bits[j * len(keys):(j + 1) * len(keys)])) for j in range(length)]
            for loop in range(length):
                if _holds_quantified(f, letters, loop, n, {})[0]:
                    return True
    return False


@pytest.mark.needs_solver
@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("text", QUANTIFIED)
def test_grounding_agrees_with_brute_force(text, n, solver):
    sig = _object_signature()
    f = core_formula(text, sig)
    fts, problem = compile_text(text, sig, {"Obj": n})
    verdict = solve_formula(fts, _engines_cfg(solver))
    if _has_quantified_model(f, n):
        assert verdict.is_sat
    if verdict.is_sat:
        assert replay_lasso(fts, verdict.lasso) == []
        letters = [
            {
                (i, a): bool(state.get(problem.state.get(f"Obj#{i}.{a}"), False))
                for i in range(1, n + 1) for a in _ATTRS
            }
            for state in verdict.lasso.states[:-1]
        ]
        assert _holds_quantified(f, letters, verdict.lasso.loop_start, n, {})[0]


@pytest.mark.parametrize("n, expected", [(1, False), (2, True)])
def test_distinct_objects_need_two(n, expected):
    sig = _object_signature()
    text = "(forall t in Obj . exists u in Obj . t != u) and eventually (exists t in Obj . t.p)"
    assert _has_quantified_model(core_formula(text, sig), n) is expected
    fts, _ = compile_text(text, sig, {"Obj": n})
    assert (language_empty_explicit(fts) is not None) is expected


# ======================== Parser ========================

def _random_term(rng, depth):
    if depth == 0 or rng.random() < 0.4:
        return GlobalAttr(rng.choice(["x", "y"]))
    op = rng.choice(["add", "sub", "scale", "const"])
    if op == "scale":
        return Scale(Fraction(rng.randint(2, 5)), _random_term(rng, depth - 1))
    if op == "const":
        return Add(_random_term(rng, depth - 1), Const(Fraction(rng.randint(1, 9), rng.randint(1, 4))))
    return (Add if op == "add" else Sub)(_random_term(rng, depth - 1), _random_term(rng, depth - 1))


def _random_atom(rng):
    if rng.random() < 0.6:
        return Prop(GlobalAttr(rng.choice(["a", "b", "c"])))
    const = Const(Fraction(rng.randint(0, 9), rng.randint(1, 3)))
    return Compare(rng.choice(COMPARISON_OPS), _random_term(rng, 2), const)


def _random_letter_sere(rng, depth):
    if depth == 0 or rng.random() < 0.3:
        atom = _random_atom(rng)
        return Letter(And(atom, _random_atom(rng)) if rng.random() < 0.2 else atom)
    op = rng.choice(["concat", "fusion", "union", "star", "repeat"])
    if op == "star":
        return Star(_random_letter_sere(rng, depth - 1))
    if op == "repeat":
        return Repeat(_random_letter_sere(rng, depth - 1), rng.randint(0, 3))
    cls = {"concat": Concat, "fusion": Fusion, "union": Union}[op]
    return cls(_random_letter_sere(rng, depth - 1), _random_letter_sere(rng, depth - 1))


def _random_formula(rng, depth):
    if depth == 0 or rng.random() < 0.2:
        return _random_atom(rng)
    kind = rng.choice(["unary", "binary", "binary", "sere"])
    if kind == "unary":
        cls = rng.choice([Not, Always, Eventually, NextStep])
        return cls(_random_formula(rng, depth - 1))
    if kind == "binary":
        cls = rng.choice([And, Or, Implies, Iff, Until, Release])
        return cls(_random_formula(rng, depth - 1), _random_formula(rng, depth - 1))
    sere = _random_letter_sere(rng, 2)
    shape = rng.choice([StrongSere, SuffixImpl, SuffixImplNext])
    return StrongSere(sere) if shape is StrongSere else shape(sere, _random_formula(rng, depth - 1))


@pytest.mark.parametrize("seed", range(500))
def test_pretty_then_parse_is_identity(seed):
    sig = boolean_signature("a", "b", "c", reals=("x", "y"))
    f = _random_formula(random.Random(seed), 4)
    assert parse_constraint(pretty(f), sig) == f, pretty(f)
