"""
Verification of the grid properties

For a built grid this checks, level by level:

    partition  sets of one level are disjoint and cover (exact measures on
               windows, exactly-once coverage of sampled points)
    nesting    sets of two levels are nested or disjoint
    parent     3/2 <= ρ(parent)/ρ(R) <= max{3, 2^n}
    children   2 or 2^n children with fractions in [min(2^-n, 1/3), 2/3]
    growth     ρ(R_j^x) >= (3/2)^j ρ(R_0^x) above level 0 and
               ρ(R_j^x) <= (2/3)^|j| ρ(R_0^x) below it
"""
import logging
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Set, Tuple

import numpy as np

from .czset import CZSet, intersection_measure, is_subset
from .geometry import GroupPoint
from .grid import DyadicGrid, DyadicSetId
from .schemas.report import GridReport, PropertyCheck

logger = logging.getLogger(__name__)

# Points whose level-0 sets serve as default windows: one in each band kind
DEFAULT_WINDOW_POINTS = ((0.5, 0.5), (-1.0, 3.0), (5.0, -1.0), (-100.0, -5.0))


def default_windows(grid: DyadicGrid, level: int = 0) -> List[DyadicSetId]:
    return [grid.locate(GroupPoint((x,) * grid.n, t), level) for x, t in DEFAULT_WINDOW_POINTS]


def allowed_parent_ratios(n: int) -> Set[Fraction]:
    return {Fraction(3, 2), Fraction(2), Fraction(3), Fraction(2**n)}


def child_fraction_bounds(n: int) -> Tuple[Fraction, Fraction]:
    return min(Fraction(1, 2**n), Fraction(1, 3)), Fraction(2, 3)


class _Verifier:
    """Accumulates property checks over one grid"""

    def __init__(self, grid: DyadicGrid):
        self.grid = grid
        self.partition = PropertyCheck(name="partition")
        self.nesting = PropertyCheck(name="nesting")
        self.parent = PropertyCheck(name="parent_ratio")
        self.children = PropertyCheck(name="children")
        self.growth = PropertyCheck(name="growth")
        self.ratios: Set[Fraction] = set()
        self.fractions: Set[Fraction] = set()
        self.literal_child = 0
        self.literal_ratio = 0
        self._seen_parents: Set[DyadicSetId] = set()
        self._seen_children: Set[DyadicSetId] = set()

    @property
    def properties(self) -> List[PropertyCheck]:
        return [self.partition, self.nesting, self.parent, self.children, self.growth]

    def check_level_partition(self, window: DyadicSetId, sets: Sequence[DyadicSetId], j: int) -> None:
        grid = self.grid
        resolved = [grid.resolve(s) for s in sets]
        self.partition.checked += 1
        for a in range(len(resolved)):
            for b in range(a + 1, len(resolved)):
                if intersection_measure(resolved[a], resolved[b]) != 0:
                    self.partition.fail(f"level {j}: {sets[a]} overlaps {sets[b]}")
        if j <= window.level:
            total = sum((s.measure() for s in resolved), Fraction(0))
            if total != grid.measure(window):
                self.partition.fail(
                    f"level {j} under {window}: measures sum to {total}, expected {grid.measure(window)}"
                )

    def check_nesting(self, lower: Sequence[DyadicSetId], upper: Sequence[DyadicSetId]) -> None:
        grid = self.grid
        for a in lower:
            A = grid.resolve(a)
            for b in upper:
                B = grid.resolve(b)
                self.nesting.checked += 1
                if intersection_measure(A, B) == 0:
                    continue
                if not is_subset(A, B):
                    self.nesting.fail(f"{a} meets {b} without being contained in it")
                elif grid.ancestor(a, b.level) != b:
                    self.nesting.fail(f"{a} lies in {b} but its ancestor differs")

    def check_parent(self, set_id: DyadicSetId) -> None:
        grid = self.grid
        if set_id in self._seen_parents or set_id.level >= grid.j_hi:
            return
        self._seen_parents.add(set_id)
        parent = grid.parent_id(set_id)
        ratio = grid.measure(parent) / grid.measure(set_id)
        self.parent.checked += 1
        self.ratios.add(ratio)
        if ratio not in allowed_parent_ratios(grid.n):
            self.parent.fail(f"{set_id}: parent ratio {ratio}")
        if ratio > 2**grid.n:
            self.literal_ratio += 1
        if not is_subset(grid.resolve(set_id), grid.resolve(parent)):
            self.parent.fail(f"{set_id} is not contained in its parent {parent}")

    def check_children(self, set_id: DyadicSetId) -> None:
        grid = self.grid
        if set_id in self._seen_children or set_id.level - 1 < grid.j_lo:
            return
        self._seen_children.add(set_id)
        kids = grid.children(set_id)
        mass = grid.measure(set_id)
        lo, hi = child_fraction_bounds(grid.n)
        self.children.checked += 1
        if len(kids) not in (2, 2**grid.n):
            self.children.fail(f"{set_id}: {len(kids)} children")
        for kid in kids:
            fraction = grid.measure(kid) / mass
            self.fractions.add(fraction)
            if not lo <= fraction <= hi:
                self.children.fail(f"{kid}: fraction {fraction} of {set_id}")
            if fraction < Fraction(1, 2**grid.n):
                self.literal_child += 1
            if grid.parent_id(kid) != set_id:
                self.children.fail(f"parent of {kid} is not {set_id}")
        self.check_level_partition(set_id, kids, set_id.level - 1)

    def check_point(self, p: GroupPoint) -> None:
        """Locate p at the lowest level and walk its parents to the top"""
        grid = self.grid
        node = grid.locate(p, grid.j_lo)
        measures: Dict[int, Fraction] = {}
        while True:
            self.partition.checked += 1
            if not grid.resolve(node).contains(p):
                self.partition.fail(f"{node} at level {node.level} does not contain {p}")
            measures[node.level] = grid.measure(node)
            if node.level == grid.j_hi:
                break
            parent = grid.parent_id(node)
            if measures[node.level] * Fraction(3, 2) > grid.measure(parent):
                self.growth.fail(f"{p}: parent of {node} grows by less than 3/2")
            node = parent

        base = measures[0]
        for j, mass in measures.items():
            self.growth.checked += 1
            if j > 0 and mass < Fraction(3, 2) ** j * base:
                self.growth.fail(f"{p}: ρ(R_{j}) = {mass} < (3/2)^{j} ρ(R_0)")
            if j < 0 and mass > Fraction(2, 3) ** (-j) * base:
                self.growth.fail(f"{p}: ρ(R_{j}) = {mass} > (2/3)^{-j} ρ(R_0)")


def _random_point(grid: DyadicGrid, window: CZSet, rng: np.random.Generator) -> GroupPoint:
    lo = np.array([float(c) for c in window.cube.lower()])
    side = float(window.cube.side)
    x = lo + side * rng.random(grid.n)
    t = float(window.bottom) + 2.0 * float(window.r) * rng.random()
    return GroupPoint(tuple(x), t)


def verify_theorem31(
    grid: DyadicGrid,
    windows: Optional[Sequence[DyadicSetId]] = None,
    trials: int = 1000,
    seed: int = 0,
    window_depth: int = 3,
) -> GridReport:
    """
    Check partition, nesting, parent ratios, children and growth on a grid

    Exact checks run on every level from level(w) − window_depth up to the
    horizon for each window w. Sampled points are drawn half inside the
    windows and half in a wide box |x| < 256, |t| < t_extent, located at the
    lowest level and followed up the parent chain.

    Returns:
        GridReport with every failure enumerated
    """
    windows = list(windows) if windows is not None else default_windows(grid)
    rng = np.random.default_rng(seed)
    check = _Verifier(grid)

    enumerated: Dict[DyadicSetId, Dict[int, List[DyadicSetId]]] = {}
    for window in windows:
        j_bottom = max(grid.j_lo, window.level - window_depth)
        by_level = {j: grid.enumerate_level(j, window) for j in range(j_bottom, grid.j_hi + 1)}
        enumerated[window] = by_level
        logger.debug(
            f"Window {window}: {sum(len(v) for v in by_level.values())} sets over "
            f"levels [{j_bottom}, {grid.j_hi}]"
        )
        for j, sets in by_level.items():
            check.check_level_partition(window, sets, j)
            for s in sets:
                check.check_parent(s)
                check.check_children(s)
        levels = sorted(by_level)
        for a, j in enumerate(levels):
            for k in levels[a + 1 :]:
                check.check_nesting(by_level[j], by_level[k])

    window_sets = [grid.resolve(w) for w in windows]
    extent = float(grid.t_extent)
    for trial in range(trials):
        if trial % 2 == 0 and window_sets:
            w = int(rng.integers(len(window_sets)))
            p = _random_point(grid, window_sets[w], rng)
            located = grid.locate(p, windows[w].level)
            if located != windows[w]:
                check.partition.fail(f"{p} drawn in {windows[w]} located in {located}")
            for j, sets in enumerated[windows[w]].items():
                if j > windows[w].level:
                    break
                holders = [s for s in sets if grid.resolve(s).contains(p)]
                if holders != [grid.locate(p, j)]:
                    check.partition.fail(f"{p} at level {j} lies in {len(holders)} enumerated sets")
        else:
            x = tuple(rng.uniform(-256.0, 256.0, size=grid.n))
            p = GroupPoint(x, float(rng.uniform(-extent, extent)))
        check.check_point(p)

    if check.literal_child or check.literal_ratio:
        logger.warning(
            f"{check.literal_child} children below ρ(R)/2^n and {check.literal_ratio} parents "
            f"above 2^n ρ(R) (allowed constants are 1/3 and 3)"
        )

    report = GridReport(
        n=grid.n,
        j_lo=grid.j_lo,
        j_hi=grid.j_hi,
        seed=seed,
        trials=trials,
        windows=[w.text() for w in windows],
        properties=check.properties,
        parent_ratios=[str(r) for r in sorted(check.ratios)],
        child_fractions=[str(f) for f in sorted(check.fractions)],
        literal_child_discrepancies=check.literal_child,
        literal_ratio_discrepancies=check.literal_ratio,
    )
    logger.info(
        "Grid verification: "
        + ", ".join(f"{p.name} {p.violations}/{p.checked}" for p in report.properties)
    )
    return report
