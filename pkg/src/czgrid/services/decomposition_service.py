"""
Decomposition service: Calderón–Zygmund decompositions of random functions
"""
import logging
from typing import List

import numpy as np

from ..config import ExperimentConfig
from ..grid import build_grid
from ..maximal import cz_decompose, random_decomposition_inputs
from ..schemas.report import CZDecompositionRecord

logger = logging.getLogger(__name__)


class DecompositionService:
    """Service decomposing random step functions over an α sweep"""

    @staticmethod
    def run(config: ExperimentConfig) -> List[CZDecompositionRecord]:
        """
        Decompose `trials` random functions at every α = multiplier·‖f‖∞

        Returns:
            One record per (trial, α); `violations` lists broken invariants
        """
        grid = build_grid(config.n, config.j_lo, config.j_hi, config.t_extent)
        functions = random_decomposition_inputs(
            grid, config.seed, config.trials, base_depth=config.base_depth, density=config.density
        )
        records: List[CZDecompositionRecord] = []
        for trial, f in enumerate(functions):
            sup, l1 = f.lp_norm(float("inf")), f.lp_norm(1)
            if sup == 0:
                logger.debug(f"Trial {trial}: zero function skipped")
                continue
            for multiplier in config.alpha_grid:
                alpha = multiplier * sup
                decomposition = cz_decompose(f, alpha)
                magnitude = abs(decomposition.function)
                averages = [magnitude.average(s) for s in decomposition.sets]
                reconstruction = decomposition.good.values + sum(
                    (b.values for b, _ in decomposition.bad),
                    np.zeros(decomposition.function.window.size),
                )
                records.append(
                    CZDecompositionRecord(
                        seed=config.seed,
                        trial=trial,
                        alpha=alpha,
                        alpha_multiplier=multiplier,
                        bad_sets=len(decomposition.bad),
                        covering_measure=decomposition.covering_measure(),
                        l1_over_alpha=l1 / alpha,
                        good_sup_over_alpha=decomposition.good.lp_norm(float("inf")) / alpha,
                        max_average_ratio=max(averages, default=0.0) / alpha,
                        reconstruction_error=float(
                            np.max(np.abs(reconstruction - decomposition.function.values))
                        ),
                        max_bad_mean=max(
                            (abs(b.integral(s)) for b, s in decomposition.bad), default=0.0
                        ),
                        literal_constant_exceedances=decomposition.literal_exceedances(),
                        violations=decomposition.violations(),
                    )
                )

        failed = sum(bool(r.violations) for r in records)
        exceed = sum(r.literal_constant_exceedances for r in records)
        if exceed:
            logger.warning(f"{exceed} covering sets average above 2^n α (allowed up to 3α)")
        logger.info(f"Decomposed {len(records)} (f, α) pairs, {failed} with violations")
        return records
