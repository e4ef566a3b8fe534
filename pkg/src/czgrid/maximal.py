"""
Dyadic maximal and sharp functions, the covering lemma and the
Calderón–Zygmund decomposition

All operators are exact tree walks over the window of a step function.
Sets containing a point of the window are window nodes, descendants of a
leaf (where |f| is constant) or ancestors of the root; the averages over
ancestors A are ∫|f|/ρ(A) and shrink by at least 3/2 per level, which is
what stops every upward walk.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np

from .czset import AtomSupport, BoxLike, CZSet, DyadicCube, intersection_measure
from .errors import AdmissibilityError, HorizonError, InvalidThresholdError
from .geometry import GroupPoint
from .grid import DyadicGrid, DyadicSetId, Half
from .schemas.report import MaximalRecord
from .step_function import StepFunction, Window, random_step_function

logger = logging.getLogger(__name__)

# Lower bound on ρ(parent)/ρ(set) over the whole grid
MIN_PARENT_RATIO = 1.5


def _node_mass(f: StepFunction, node: DyadicSetId) -> float:
    return float(f.window.grid.measure(node))


def _prefix(weights: np.ndarray) -> np.ndarray:
    return np.concatenate(([0.0], np.cumsum(weights)))


def _check_alpha(alpha: float) -> None:
    if not alpha > 0:
        raise InvalidThresholdError(f"alpha must be positive, got {alpha}")


def _abs_total(f: StepFunction) -> float:
    return float(np.dot(np.abs(f.values), f.window.measures))


def dyadic_maximal(f: StepFunction) -> StepFunction:
    """
    M_D f on every leaf of the window

    The value on a leaf is the running max of average(|f|) along the window
    path from the root to the leaf. Ancestors of the root never beat the
    root average, so the upward walk ends at the root.
    """
    window = f.window
    prefix = _prefix(np.abs(f.values) * window.measures)
    result = np.zeros(window.size)
    stack: List[Tuple[DyadicSetId, float]] = [(window.root, 0.0)]
    while stack:
        node, best = stack.pop()
        start, stop = window.span(node)
        best = max(best, (prefix[stop] - prefix[start]) / _node_mass(f, node))
        kids = window.node_children(node)
        if kids:
            stack.extend((kid, best) for kid in kids)
        else:
            result[start] = best
    return StepFunction(window, result)


def _window_oscillation(f: StepFunction, node: DyadicSetId) -> float:
    start, stop = f.window.span(node)
    v = f.values[start:stop]
    m = f.window.measures[start:stop]
    mass = _node_mass(f, node)
    mean = float(np.dot(v, m)) / mass
    return float(np.dot(np.abs(v - mean), m)) / mass


def _ancestor_oscillation(f: StepFunction, ancestor: DyadicSetId) -> float:
    """(1/ρ(A))∫_A |f − f_A| for an ancestor A of the root, f zero on A minus the root"""
    mass = _node_mass(f, ancestor)
    mean = f.total() / mass
    outside = mass - float(f.window.grid.measure(f.window.root))
    inside = float(np.dot(np.abs(f.values - mean), f.window.measures))
    return (inside + outside * abs(mean)) / mass


def dyadic_sharp(f: StepFunction) -> StepFunction:
    """
    f♯_D on every leaf of the window

    Window nodes contribute their exact mean oscillation along the path to
    each leaf. Ancestors of the root contribute to every leaf at once; the
    walk up stops when 2∫|f|/ρ(next ancestor) cannot exceed what every leaf
    already has.

    Raises:
        HorizonError: If the walk needs a level above the grid horizon
    """
    window = f.window
    grid = window.grid
    inner = np.zeros(window.size)
    stack: List[Tuple[DyadicSetId, float]] = [(window.root, 0.0)]
    while stack:
        node, best = stack.pop()
        kids = window.node_children(node)
        if not kids:
            inner[window.span(node)[0]] = best
            continue
        best = max(best, _window_oscillation(f, node))
        stack.extend((kid, best) for kid in kids)

    abs_total = _abs_total(f)
    floor = float(np.min(inner))
    outer = 0.0
    node = window.root
    while 2 * abs_total / (MIN_PARENT_RATIO * _node_mass(f, node)) > max(outer, floor):
        node = grid.parent_id(node)
        outer = max(outer, _ancestor_oscillation(f, node))
    logger.debug(f"Sharp walk for {window} stopped at level {node.level}")
    return StepFunction(window, np.maximum(inner, outer))


def mean_oscillation(f: StepFunction, set_id: DyadicSetId) -> float:
    """(1/ρ(R))∫_R |f − f_R| dρ for any grid set, by exact leaf intersections"""
    grid = f.window.grid
    target = grid.resolve(set_id)
    mass = float(target.measure())
    weights = np.array(
        [float(intersection_measure(grid.resolve(leaf), target)) for leaf in f.window.leaves]
    )
    mean = float(np.dot(f.values, weights)) / mass
    outside = mass - float(weights.sum())
    return (float(np.dot(np.abs(f.values - mean), weights)) + outside * abs(mean)) / mass


def _box_abs_average(f: StepFunction, box: BoxLike) -> float:
    grid = f.window.grid
    weights = np.array(
        [float(intersection_measure(grid.resolve(leaf), box)) for leaf in f.window.leaves]
    )
    return float(np.dot(np.abs(f.values), weights)) / float(box.measure())


def _check_family(family: Sequence[BoxLike]) -> None:
    for member in family:
        if isinstance(member, AtomSupport) and not member.is_admissible():
            raise AdmissibilityError(f"Family member {member} is not admissible", "admissible")


def restricted_maximal(f: StepFunction, family: Sequence[BoxLike]) -> StepFunction:
    """
    Max over family members containing each leaf center of average(|f|),
    maximized with |f| itself

    A lower bound for the maximal function over all CZ sets.
    """
    _check_family(family)
    window = f.window
    averages = [_box_abs_average(f, member) for member in family]
    result = np.abs(f.values).copy()
    for i, leaf in enumerate(window.leaves):
        center = window.grid.resolve(leaf).center()
        for member, avg in zip(family, averages):
            if avg > result[i] and member.contains(center):
                result[i] = avg
    return StepFunction(window, result)


def _half_of(p: GroupPoint) -> Half:
    return Half.UPPER if p.t >= 0 else Half.LOWER


def maximal_at(f: StepFunction, p: GroupPoint) -> float:
    """
    M_D f(p) at any point of S

    Outside the root the only sets meeting the support are ancestors of the
    root; the smallest one containing p gives the sup.
    """
    window = f.window
    leaf = window.leaf_containing(p)
    if leaf is not None:
        return float(dyadic_maximal(f).value(leaf))

    abs_total = _abs_total(f)
    if abs_total == 0 or _half_of(p) != window.root.half:
        return 0.0
    grid = window.grid
    node = window.root
    while not grid.resolve(node).contains(p):
        node = grid.parent_id(node)
    return abs_total / _node_mass(f, node)


def restricted_maximal_at(f: StepFunction, family: Sequence[BoxLike], p: GroupPoint) -> float:
    _check_family(family)
    best = abs(f.value_at(p))
    for member in family:
        if member.contains(p):
            best = max(best, _box_abs_average(f, member))
    return best


def covering(f: StepFunction, alpha: float) -> List[DyadicSetId]:
    """
    Maximal grid sets R with average(|f|, R) > α, pairwise disjoint

    Their union is {M_D f > α}. If the root itself qualifies, the answer is
    the topmost qualifying ancestor of the root.

    Raises:
        InvalidThresholdError: If α <= 0
        HorizonError: If the topmost qualifying ancestor lies above the horizon
    """
    _check_alpha(alpha)
    window = f.window
    grid = window.grid
    abs_total = _abs_total(f)
    root = window.root

    if abs_total / _node_mass(f, root) > alpha:
        node = root
        while abs_total / (MIN_PARENT_RATIO * _node_mass(f, node)) > alpha:
            parent = grid.parent_id(node)
            if abs_total / _node_mass(f, parent) <= alpha:
                break
            node = parent
        return [node]

    prefix = _prefix(np.abs(f.values) * window.measures)
    found: List[DyadicSetId] = []
    stack = [root]
    while stack:
        node = stack.pop()
        start, stop = window.span(node)
        if (prefix[stop] - prefix[start]) / _node_mass(f, node) > alpha:
            found.append(node)
        else:
            stack.extend(reversed(window.node_children(node)))
    return found


def level_set_measure(f: StepFunction, alpha: float) -> float:
    """ρ({M_D f > α}) over all of S"""
    grid = f.window.grid
    return float(sum(grid.measure(s) for s in covering(f, alpha)))


def covering_constant(n: int) -> int:
    """Grid-wide bound on average(|f|, R)/α over covering sets"""
    return max(3, 2**n)


def literal_exceedances(f: StepFunction, alpha: float, sets: Sequence[DyadicSetId]) -> int:
    """Covering sets whose |f| average exceeds 2^n α (allowed up to 3α)"""
    magnitude = abs(f)
    limit = 2**f.window.grid.n * alpha
    return sum(magnitude.average(s) > limit for s in sets)


@dataclass
class CZDecomposition:
    """
    f = good + Σ bad_i at threshold α

    `function` is f on the (possibly lifted) window the parts live on.
    """

    alpha: float
    function: StepFunction
    good: StepFunction
    bad: List[Tuple[StepFunction, DyadicSetId]] = field(default_factory=list)

    @property
    def sets(self) -> List[DyadicSetId]:
        return [s for _, s in self.bad]

    def covering_measure(self) -> float:
        grid = self.function.window.grid
        return float(sum(grid.measure(s) for s in self.sets))

    def literal_exceedances(self) -> int:
        return literal_exceedances(self.function, self.alpha, self.sets)

    def violations(self, rtol: float = 1e-12) -> List[str]:
        """Every broken decomposition property, empty when all hold"""
        f = self.function
        grid = f.window.grid
        problems: List[str] = []
        scale = max(1.0, float(np.max(np.abs(f.values))))

        total = self.good.values + sum((b.values for b, _ in self.bad), np.zeros(f.window.size))
        error = float(np.max(np.abs(total - f.values)))
        if error > rtol * scale:
            problems.append(f"reconstruction error {error:.3e}")

        for b, s in self.bad:
            scale_s = max(float(np.dot(np.abs(b.values), b.window.measures)), abs(f).integral(s))
            mean = b.integral(s)
            if abs(mean) > rtol * scale_s:
                problems.append(f"bad part on {s} has integral {mean:.3e}")

        bound = covering_constant(grid.n) * self.alpha
        sup = float(np.max(np.abs(self.good.values)))
        if sup > bound * (1 + rtol):
            problems.append(f"|good| reaches {sup:.6g} > {bound:.6g}")

        sets = [grid.resolve(s) for s in self.sets]
        for a in range(len(sets)):
            for b in range(a + 1, len(sets)):
                if intersection_measure(sets[a], sets[b]) != 0:
                    problems.append(f"covering sets {self.sets[a]} and {self.sets[b]} overlap")

        l1 = f.lp_norm(1)
        if self.covering_measure() > l1 / self.alpha * (1 + rtol):
            problems.append(f"covering measure {self.covering_measure():.6g} exceeds ‖f‖₁/α")

        magnitude = abs(f)
        for s in self.sets:
            avg = magnitude.average(s)
            parent = grid.parent_id(s) if s.level < grid.j_hi else None
            limit = bound
            if parent is not None:
                limit = self.alpha * float(grid.measure(parent) / grid.measure(s))
            if not self.alpha < avg <= limit * (1 + rtol):
                problems.append(f"average {avg:.6g} on {s} outside ({self.alpha:.6g}, {limit:.6g}]")
            if parent is not None and magnitude.average(parent) > self.alpha:
                problems.append(f"covering set {s} is not maximal")
        return problems


def cz_decompose(f: StepFunction, alpha: float) -> CZDecomposition:
    """
    Calderón–Zygmund decomposition of f at height α

    good equals f off the covering sets and f_R on each covering set R;
    the bad parts are (f − f_R)χ_R. When the covering set is an ancestor of
    the root, f is first lifted to it.

    Raises:
        InvalidThresholdError: If α <= 0
    """
    sets = covering(f, alpha)
    if sets and not f.window.is_node(sets[0]):
        logger.debug(f"Lifting {f.window} to covering set {sets[0]}")
        f = f.lifted_to(sets[0])

    window = f.window
    good = f.values.copy()
    bad: List[Tuple[StepFunction, DyadicSetId]] = []
    for s in sets:
        start, stop = window.span(s)
        mean = f.average(s)
        part = np.zeros(window.size)
        part[start:stop] = f.values[start:stop] - mean
        good[start:stop] = mean
        bad.append((StepFunction(window, part), s))
    return CZDecomposition(alpha, f, StepFunction(window, good), bad)


def lifted_below(f: StepFunction, threshold: float) -> StepFunction:
    """f lifted until average(|f|, root) <= threshold, so {M_D f > threshold} lies in the root"""
    _check_alpha(threshold)
    abs_total = _abs_total(f)
    grid = f.window.grid
    node = f.window.root
    while abs_total / _node_mass(f, node) > threshold:
        node = grid.parent_id(node)
    return f.lifted_to(node)


def check_distributional(f: StepFunction, alpha: float, b: float, c: float) -> Tuple[float, float]:
    """
    ρ({M_D f > α} ∩ {f♯_D <= cα}) and ρ({M_D f > bα})

    Raises:
        InvalidThresholdError: If α <= 0, b outside (0, 1) or c <= 0
    """
    _check_alpha(alpha)
    if not 0 < b < 1 or not c > 0:
        raise InvalidThresholdError(f"Need 0 < b < 1 and c > 0, got b={b}, c={c}")
    lifted = lifted_below(f, b * alpha)
    return _distributional_sides(lifted, dyadic_maximal(lifted), dyadic_sharp(lifted), alpha, b, c)


def _distributional_sides(
    f: StepFunction, maximal: StepFunction, sharp: StepFunction, alpha: float, b: float, c: float
) -> Tuple[float, float]:
    m = f.window.measures
    lhs = float(np.sum(m[(maximal.values > alpha) & (sharp.values <= c * alpha)]))
    rhs = float(np.sum(m[maximal.values > b * alpha]))
    return lhs, rhs


# Oracles


def _brute_force(
    f: StepFunction, value: Callable[[StepFunction, DyadicSetId], float], bound_factor: float
) -> StepFunction:
    window = f.window
    grid = window.grid
    resolved = [grid.resolve(leaf) for leaf in window.leaves]
    result = np.zeros(window.size)
    abs_total = _abs_total(f)
    level = min(leaf.level for leaf in window.leaves)
    while True:
        for set_id in grid.enumerate_level(level, window.root):
            target = grid.resolve(set_id)
            holders = [i for i, leaf in enumerate(resolved) if _inside(leaf, target)]
            if holders:
                v = value(f, set_id)
                result[holders] = np.maximum(result[holders], v)
        if level >= window.root.level:
            top = _node_mass(f, grid.ancestor(window.root, level))
            if bound_factor * abs_total / (MIN_PARENT_RATIO * top) <= float(np.min(result)):
                break
        level += 1
    return StepFunction(window, result)


def _inside(inner: CZSet, outer: CZSet) -> bool:
    return intersection_measure(inner, outer) == inner.measure()


def brute_force_maximal(f: StepFunction) -> StepFunction:
    """M_D f by enumerating every grid set meeting the root, level by level"""
    return _brute_force(f, lambda g, s: abs(g).average(s), 1.0)


def brute_force_sharp(f: StepFunction) -> StepFunction:
    """f♯_D by enumerating every grid set meeting the root, level by level"""
    return _brute_force(f, mean_oscillation, 2.0)


def restricted_family_witness(grid: DyadicGrid) -> Tuple[StepFunction, GroupPoint, CZSet]:
    """
    χ_R for R = [0,32)^n × [0,2) with a point under R and an admissible
    non-dyadic set containing both

    M_D χ_R vanishes at the point while the set has average 1/2.
    """
    root = grid.locate(GroupPoint((0.5,) * grid.n, 0.5), 0)
    f = StepFunction.constant(Window(grid, root, [root]), 1.0)
    point = GroupPoint((16.0,) * grid.n, -0.5)
    family_set = CZSet(DyadicCube(5, (0,) * grid.n), 0, 1)
    return f, point, family_set


# Checkers


@dataclass
class StabilityResult:
    """Max of a ratio over all trials and over the first half of them"""

    records: List[MaximalRecord]
    value: float
    half_value: float
    stable: bool
    exceedances: int = 0


def is_stable(a: float, b: float, tolerance: float) -> bool:
    top = max(abs(a), abs(b))
    return top == 0 or abs(a - b) <= tolerance * top


def window_pool(
    grid: DyadicGrid, rng: np.random.Generator, count: int = 16, base_depth: int = 4
) -> List[Window]:
    """Uniform windows rooted at level 0 sets around random points"""
    if -base_depth < grid.j_lo:
        raise HorizonError(
            f"Base level {-base_depth} is below the grid horizon {grid.j_lo}", required_level=-base_depth
        )
    extent = min(float(grid.t_extent), 8.0) / 2
    pool: List[Window] = []
    seen = set()
    for _ in range(count):
        x = tuple(rng.uniform(-64.0, 64.0, size=grid.n))
        root = grid.locate(GroupPoint(x, float(rng.uniform(-extent, extent))), 0)
        if root in seen:
            continue
        seen.add(root)
        pool.append(Window.uniform(grid, root, -base_depth))
    return pool


def _draw(pool: Sequence[Window], rng: np.random.Generator, density: float) -> StepFunction:
    return random_step_function(pool[int(rng.integers(len(pool)))], density, rng)


def check_weak11(
    grid: DyadicGrid,
    seed: int,
    trials: int,
    alpha_grid: Sequence[float],
    base_depth: int = 4,
    density: float = 0.7,
) -> StabilityResult:
    """
    Sup over trials and α of α·ρ({M_D f > α})/‖f‖₁, with α a multiple of ‖f‖∞

    Stable when the max over all trials is within 10% of the max over the
    first half.
    """
    rng = np.random.default_rng(seed)
    pool = window_pool(grid, rng, base_depth=base_depth)
    records: List[MaximalRecord] = []
    best = half = 0.0
    exceedances = 0
    for trial in range(trials):
        f = _draw(pool, rng, density)
        sup, l1 = f.lp_norm(float("inf")), f.lp_norm(1)
        if sup == 0:
            continue
        for multiplier in alpha_grid:
            alpha = multiplier * sup
            sets = covering(f, alpha)
            exceedances += literal_exceedances(f, alpha, sets)
            ratio = alpha * float(sum(grid.measure(s) for s in sets)) / l1
            records.append(
                MaximalRecord(
                    experiment="weak11",
                    seed=seed,
                    trial=trial,
                    parameter={"alpha_multiplier": multiplier},
                    value=ratio,
                )
            )
            best = max(best, ratio)
            if trial < (trials + 1) // 2:
                half = best
    stable = is_stable(best, half, 0.1)
    if not stable:
        logger.warning(f"Weak (1,1) ratio unstable: {half:.4g} over half the trials, {best:.4g} overall")
    if exceedances:
        logger.warning(f"{exceedances} covering sets average above 2^n α (allowed up to 3α)")
    return StabilityResult(records, best, half, stable, exceedances)


def check_fefferman_stein(
    grid: DyadicGrid,
    seed: int,
    trials: int,
    p_list: Sequence[float],
    base_depth: int = 4,
    outer_levels: int = 4,
    density: float = 0.7,
) -> Tuple[Dict[float, StabilityResult], int]:
    """
    Per p, the max over trials of ‖M_D f‖_p/‖f♯_D‖_p

    Norms are taken on the window lifted by `outer_levels`. Functions with
    f♯_D = 0 are skipped and counted.

    Returns:
        Results per p and the number of skipped functions
    """
    rng = np.random.default_rng(seed)
    pool = window_pool(grid, rng, base_depth=base_depth)
    per_p: Dict[float, List[MaximalRecord]] = {p: [] for p in p_list}
    best = {p: 0.0 for p in p_list}
    half = {p: 0.0 for p in p_list}
    skipped = 0
    for trial in range(trials):
        f = _draw(pool, rng, density).lifted(outer_levels)
        maximal, sharp = dyadic_maximal(f), dyadic_sharp(f)
        if sharp.lp_norm(float("inf")) == 0:
            skipped += 1
            continue
        for p in p_list:
            ratio = maximal.lp_norm(p) / sharp.lp_norm(p)
            per_p[p].append(
                MaximalRecord(
                    experiment="fefferman_stein", seed=seed, trial=trial, parameter={"p": p}, value=ratio
                )
            )
            best[p] = max(best[p], ratio)
            if trial < (trials + 1) // 2:
                half[p] = best[p]
    if skipped:
        logger.info(f"Skipped {skipped} functions with vanishing sharp function")

    results: Dict[float, StabilityResult] = {}
    for p in p_list:
        stable = is_stable(best[p], half[p], 0.1)
        if not stable:
            logger.warning(f"A_p estimate for p={p} unstable: {half[p]:.4g} vs {best[p]:.4g}")
        results[p] = StabilityResult(per_p[p], best[p], half[p], stable)
    return results, skipped


def _distributional_batch(
    grid: DyadicGrid,
    seed: int,
    batch: int,
    trials: int,
    alpha_grid: Sequence[float],
    b_list: Sequence[float],
    c_list: Sequence[float],
    base_depth: int,
    density: float,
) -> Tuple[float, List[MaximalRecord]]:
    rng = np.random.default_rng([seed, batch])
    pool = window_pool(grid, rng, base_depth=base_depth)
    records: List[MaximalRecord] = []
    constant = 0.0
    for trial in range(trials):
        f = _draw(pool, rng, density)
        sup = f.lp_norm(float("inf"))
        if sup == 0:
            continue
        lifted = lifted_below(f, min(b_list) * min(alpha_grid) * sup)
        maximal, sharp = dyadic_maximal(lifted), dyadic_sharp(lifted)
        for multiplier in alpha_grid:
            for b in b_list:
                for c in c_list:
                    lhs, rhs = _distributional_sides(lifted, maximal, sharp, multiplier * sup, b, c)
                    if lhs == 0:
                        continue
                    k = lhs * (1 - b) / (c * rhs)
                    constant = max(constant, k)
                    records.append(
                        MaximalRecord(
                            experiment="distributional",
                            seed=seed,
                            trial=trial + batch * trials,
                            parameter={"alpha_multiplier": multiplier, "b": b, "c": c},
                            value=k,
                        )
                    )
    return constant, records


@dataclass
class DistributionalFit:
    """Smallest K with lhs <= K·c/(1−b)·rhs over a sweep, on two seed batches"""

    records: List[MaximalRecord]
    k_fit: float
    k_other_batch: float
    stable: bool


def fit_distributional_constant(
    grid: DyadicGrid,
    seed: int,
    trials: int,
    alpha_grid: Sequence[float],
    b_list: Sequence[float],
    c_list: Sequence[float],
    base_depth: int = 4,
    density: float = 0.7,
) -> DistributionalFit:
    """Sweep (α, b, c) over random functions and fit K on two disjoint batches"""
    args = (trials, alpha_grid, b_list, c_list, base_depth, density)
    k_fit, first = _distributional_batch(grid, seed, 0, *args)
    k_other, second = _distributional_batch(grid, seed, 1, *args)
    stable = is_stable(k_fit, k_other, 0.2)
    if not stable:
        logger.warning(f"Distributional constant unstable across batches: {k_fit:.4g} vs {k_other:.4g}")
    return DistributionalFit(first + second, k_fit, k_other, stable)


def random_decomposition_inputs(
    grid: DyadicGrid,
    seed: int,
    trials: int,
    base_depth: int = 4,
    density: float = 0.7,
) -> List[StepFunction]:
    """Seeded random functions on the shared window pool"""
    rng = np.random.default_rng(seed)
    pool = window_pool(grid, rng, base_depth=base_depth)
    return [_draw(pool, rng, density) for _ in range(trials)]
