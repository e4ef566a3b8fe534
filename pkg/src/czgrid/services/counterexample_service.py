"""
Counterexample service: H¹ atoms with growing dyadic H¹ norm
"""
import logging
import math
from typing import List, Tuple

from ..config import ExperimentConfig
from ..errors import VerificationError
from ..grid import build_grid
from ..hardy_bmo import fit_pairings, required_j_lo, run_counterexample
from ..schemas.report import CounterexampleRecord, CounterexampleSummary

logger = logging.getLogger(__name__)

# Closed form against quadrature, and the affine fit in |ℓ|
PAIRING_TOLERANCE = 1e-9


class CounterexampleService:
    """Service reproducing the H¹ versus H¹_D non-equivalence"""

    @staticmethod
    def run(config: ExperimentConfig) -> Tuple[List[CounterexampleRecord], CounterexampleSummary]:
        """
        Build the n = 1 grid deep enough for every ℓ and run the construction

        Returns:
            Tuple (records, summary)
        """
        if config.n != 1:
            logger.warning(f"The counterexample runs on n = 1; ignoring n = {config.n}")
        j_lo = min(config.j_lo, required_j_lo(config.j_list))
        grid = build_grid(1, j_lo, config.j_hi, config.t_extent)
        records = run_counterexample(grid, config.j_list)
        return records, fit_pairings(records)

    @staticmethod
    def check(records: List[CounterexampleRecord], summary: CounterexampleSummary) -> None:
        """
        Raises:
            VerificationError: If a pairing disagrees with its quadrature, an
                atom is invalid or the pairings are not affine in |ℓ|
        """
        problems: List[str] = []
        for r in records:
            if not r.relative_error <= PAIRING_TOLERANCE:
                problems.append(f"ℓ = {r.ell}: relative error {r.relative_error:.3e}")
            if not r.atom_valid:
                problems.append(f"ℓ = {r.ell}: a_j is not an atom")
        if summary.slope is not None:
            if not math.isclose(summary.slope, summary.expected_slope, abs_tol=PAIRING_TOLERANCE):
                problems.append(f"slope {summary.slope:.12f}, expected {summary.expected_slope:.12f}")
            if not (summary.residual or 0.0) <= PAIRING_TOLERANCE:
                problems.append(f"affine fit residual {summary.residual:.3e}")
        if problems:
            raise VerificationError("; ".join(problems))
