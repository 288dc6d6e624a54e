"""
Engine selection: BMC for witnesses, CEGAR for emptiness proofs.
"""
import logging

from bmc import bmc_search
from cegar import cegar
from config import CheckConfig
from fts import Fts, SolveVerdict

logger = logging.getLogger(__name__)


def solve_formula(fts: Fts, cfg: CheckConfig) -> SolveVerdict:
    """
    Run the configured strategy.

    bmc-cegar runs the bound schedule first and CEGAR only when BMC finds
    nothing; any sat wins, CEGAR unsat wins over BMC unknown, otherwise the
    verdict is unknown with both reasons.
    """
    if cfg.strategy == "bmc":
        return bmc_search(fts, cfg.bmc, cfg.solver)
    if cfg.strategy == "cegar":
        return cegar(fts, cfg.cegar, cfg.solver)

    first = bmc_search(fts, cfg.bmc, cfg.solver)
    if first.is_sat:
        return first
    logger.info("🔒 BMC inconclusive, switching to CEGAR")
    second = cegar(fts, cfg.cegar, cfg.solver)
    second.bounds = first.bounds
    if second.is_sat or second.is_unsat:
        return second
    second.reason = f"{first.reason}; {second.reason}"
    return second
