"""
Grid service: builds the grid and runs the property verification
"""
import logging
from typing import List, Sequence

import numpy as np

from ..config import ExperimentConfig
from ..czset import CZSet, estimate_dilated_ratio, fit_ball_sandwich, random_admissible
from ..geometry import GroupPoint, fit_growth_slopes
from ..grid import DyadicGrid, build_grid
from ..grid_checks import verify_theorem31
from ..schemas.report import DilatedRatio, GridReport, Record

logger = logging.getLogger(__name__)


class GridService:
    """Service for grid verification and grid dumps"""

    SANDWICH_SETS = 100
    SANDWICH_SAMPLES = 1000
    DILATED_SETS = 5

    @staticmethod
    def build(config: ExperimentConfig) -> DyadicGrid:
        return build_grid(config.n, config.j_lo, config.j_hi, config.t_extent)

    @staticmethod
    def verify(config: ExperimentConfig) -> GridReport:
        """
        Run the grid property checks plus the Monte-Carlo geometry fits

        Args:
            config: Experiment configuration

        Returns:
            GridReport; passed iff every exact property holds
        """
        grid = GridService.build(config)
        report = verify_theorem31(
            grid, trials=config.trials, seed=config.seed, window_depth=config.window_depth
        )
        report.growth_fit = fit_growth_slopes(config.n, config.mc_samples, config.seed)

        rng = np.random.default_rng(config.seed)
        sets = [random_admissible(config.n, rng) for _ in range(GridService.SANDWICH_SETS)]
        sandwich = fit_ball_sandwich(sets, GridService.SANDWICH_SAMPLES, config.seed)
        report.sandwich_fit = sandwich
        report.dilated_ratios = GridService._dilated_ratios(
            sets[: GridService.DILATED_SETS], config, sandwich.kappa_hat
        )
        return report

    @staticmethod
    def _dilated_ratios(
        sets: Sequence[CZSet], config: ExperimentConfig, kappa: float
    ) -> List[DilatedRatio]:
        ratios: List[DilatedRatio] = []
        for i, R in enumerate(sets):
            ratio, stderr = estimate_dilated_ratio(R, config.mc_samples, config.seed + i)
            ratios.append(
                DilatedRatio(
                    set=R.text(),
                    ratio=ratio,
                    stderr=stderr,
                    kappa_hat=kappa,
                    within_bound=ratio <= kappa + 3 * stderr,
                )
            )
            if ratio > kappa + 3 * stderr:
                logger.warning(f"ρ(R*)/ρ(R) = {ratio:.4g} exceeds κ̂ = {kappa:.4g} for {R.text()}")
        return ratios

    @staticmethod
    def dump(config: ExperimentConfig, points: Sequence[GroupPoint], level: int) -> List[Record]:
        """Chain entries of both halves followed by the located ids of `points`"""
        grid = GridService.build(config)
        records: List[Record] = list(grid.chain_records())
        records.extend(grid.located_record(p, level) for p in points)
        return records
