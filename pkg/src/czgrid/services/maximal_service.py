"""
Maximal service: weak (1,1), Fefferman–Stein and distributional sweeps
"""
import logging
from typing import List, Tuple

from ..config import ExperimentConfig
from ..grid import DyadicGrid, build_grid
from ..maximal import (
    check_fefferman_stein,
    check_weak11,
    fit_distributional_constant,
    maximal_at,
    restricted_family_witness,
    restricted_maximal_at,
)
from ..schemas.report import MaximalRecord, MaximalSummary

logger = logging.getLogger(__name__)


class MaximalService:
    """Service running the maximal-function experiments"""

    @staticmethod
    def run(config: ExperimentConfig) -> Tuple[List[MaximalRecord], MaximalSummary]:
        """
        Run every maximal-function experiment of one configuration

        Args:
            config: Experiment configuration

        Returns:
            Tuple (records, summary)
        """
        grid = build_grid(config.n, config.j_lo, config.j_hi, config.t_extent)
        depth, density = config.base_depth, config.density

        weak = check_weak11(grid, config.seed, config.trials, config.alpha_grid, depth, density)
        per_p, skipped = check_fefferman_stein(
            grid, config.seed, config.trials, config.p_list, depth, config.outer_levels, density
        )
        fit = fit_distributional_constant(
            grid, config.seed, config.trials, config.alpha_grid, config.b_list, config.c_list, depth, density
        )

        records = weak.records + fit.records
        for result in per_p.values():
            records.extend(result.records)
        records.extend(MaximalService._witness_records(grid, config.seed))

        summary = MaximalSummary(
            n=config.n,
            seed=config.seed,
            trials=config.trials,
            weak11_max=weak.value,
            weak11_half_max=weak.half_value,
            weak11_stable=weak.stable,
            a_p={str(p): r.value for p, r in per_p.items()},
            a_p_half={str(p): r.half_value for p, r in per_p.items()},
            a_p_stable={str(p): r.stable for p, r in per_p.items()},
            skipped_constant=skipped,
            k_fit=fit.k_fit,
            k_fit_other_batch=fit.k_other_batch,
            k_stable=fit.stable,
            literal_constant_exceedances=weak.exceedances,
        )
        logger.info(
            f"Maximal experiments: weak (1,1) {weak.value:.4f}, "
            + ", ".join(f"A_{p} {r.value:.4f}" for p, r in per_p.items())
            + f", K {fit.k_fit:.4f}"
        )
        return records, summary

    @staticmethod
    def _witness_records(grid: DyadicGrid, seed: int) -> List[MaximalRecord]:
        """M_D χ_R and the restricted maximal function at a point below R"""
        f, point, family_set = restricted_family_witness(grid)
        values = {
            "witness_dyadic": maximal_at(f, point),
            "witness_restricted": restricted_maximal_at(f, [family_set], point),
        }
        return [
            MaximalRecord(
                experiment=name,
                seed=seed,
                trial=0,
                parameter={"t": point.t},
                value=value,
            )
            for name, value in values.items()
        ]
