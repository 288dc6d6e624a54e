"""
Symbolic fair transition systems and lasso-shaped runs over them.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from pysmt.shortcuts import Bool, Int, Real

from errors import AutomataError


@dataclass
class Fts:
    state_vars: List[object]
    input_vars: List[object]
    init: object
    trans: object
    fairness: List[object]
    primed: Dict[object, object]
    domains: Dict[object, Tuple[int, int]] = field(default_factory=dict)
    labels: Dict[object, str] = field(default_factory=dict)

    def prime(self, formula):
        return formula.substitute(self.primed)

    def is_finite(self) -> bool:
        for v in self.state_vars + self.input_vars:
            if not v.symbol_type().is_bool_type() and v not in self.domains:
                return False
        return True

    def boolean_state_vars(self) -> List[object]:
        return [v for v in self.state_vars if v.symbol_type().is_bool_type()]


@dataclass
class Lasso:
    """
    k transitions over states s_0..s_k with s_k equal to s_loop_start.
    Valuations map pysmt symbols to bool, int or Fraction.
    """
    states: List[Dict[object, object]]
    inputs: List[Dict[object, object]]
    loop_start: int

    @property
    def k(self) -> int:
        return len(self.inputs)


def constant(symbol, value):
    t = symbol.symbol_type()
    if t.is_bool_type():
        return Bool(bool(value))
    if t.is_int_type():
        return Int(int(value))
    return Real(Fraction(value))


def evaluate(formula, assignment: Dict[object, object]) -> bool:
    """Truth value of a formula under a total assignment of its free symbols."""
    subst = {sym: constant(sym, value) for sym, value in assignment.items()}
    result = formula.substitute(subst).simplify()
    if not result.is_bool_constant():
        missing = sorted(s.symbol_name() for s in result.get_free_variables())
        raise AutomataError(f"assignment leaves {', '.join(missing)} unassigned")
    return result.is_true()


def dump_fts(fts: Fts) -> str:
    def kind(v):
        t = v.symbol_type()
        if v in fts.domains:
            lo, hi = fts.domains[v]
            return f"int {lo}..{hi}"
        return str(t)

    lines = ["VARIABLES"]
    for v in fts.state_vars:
        label = fts.labels.get(v)
        lines.append(f"  {v.symbol_name()} : {kind(v)}" + (f"    -- {label}" if label else ""))
    lines.append("INPUTS")
    for v in fts.input_vars:
        lines.append(f"  {v.symbol_name()} : {kind(v)}")
    lines.append("INIT")
    lines.append(f"  {fts.init.serialize()}")
    lines.append("TRANS")
    for part in (fts.trans.args() if fts.trans.is_and() else [fts.trans]):
        lines.append(f"  {part.serialize()}")
    lines.append("FAIRNESS")
    for f in fts.fairness:
        lines.append(f"  {f.serialize()}")
    return "\n".join(lines) + "\n"


@dataclass
class SolveVerdict:
    """
    Engine answer. sat carries a lasso; unsat names the proving method;
    unknown carries one or more reasons joined by "; ".
    """
    status: str                         # sat | unsat | unknown
    lasso: Optional[Lasso] = None
    method: str = ""
    reason: str = ""
    bounds: List[int] = field(default_factory=list)
    iterations: int = 0
    predicates: int = 0

    @property
    def is_sat(self) -> bool:
        return self.status == "sat"

    @property
    def is_unsat(self) -> bool:
        return self.status == "unsat"
