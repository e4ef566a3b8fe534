"""
H¹ atoms, dyadic BMO estimates and the H¹ versus H¹_D counterexample

The counterexample lives on the n = 1 grid. R_0 = [0, 32) × [0, 2) is a
level-0 set whose right face x = 32 it shares with its neighbour. Below it,
R_j is the first set on the descent along that face whose side is 2^ℓ_j,
and E_j is its mirror image across the face. The atom

    a_j = (χ_{R_j} − χ_{E_j}) / (2 ρ(R_j))

is supported on the non-dyadic admissible box R_j ∪ E_j, so ‖a_j‖_{H¹} <= 1,
while its pairing with φ(x, t) = χ_{x>32} log(x − 32), a function of bounded
dyadic mean oscillation, grows like |ℓ_j| log 2 / 2.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .czset import AtomSupport, BoxLike, CZSet, intersection_measure
from .errors import GridConfigurationError, HorizonError, InvalidFunctionError
from .geometry import GroupPoint
from .grid import DyadicGrid, DyadicSetId
from .maximal import mean_oscillation
from .schemas.report import AtomReport, CounterexampleRecord, CounterexampleSummary
from .step_function import StepFunction, Window

logger = logging.getLogger(__name__)

LOG2 = math.log(2.0)

# Intervals [0, face·2^K) are evaluated exactly up to this K; beyond it a tail bound applies
BMO_LATTICE_DEPTH = 60

FACE_EXPONENT = 5


@dataclass
class Atom:
    """A step function meant to be supported in `support`"""

    support: BoxLike
    function: StepFunction


def validate_atom(atom: Atom, rtol: float = 1e-12) -> AtomReport:
    """
    Check ‖a‖∞ <= 1/ρ(support), ∫ a = 0 and that a vanishes off the support
    """
    f = atom.function
    grid = f.window.grid
    support_measure = atom.support.measure()
    bound = 1.0 / float(support_measure)
    sup = f.lp_norm(float("inf"))
    mean = f.total()
    violations: List[str] = []

    if sup > bound * (1 + rtol):
        violations.append(f"sup norm {sup:.6g} exceeds 1/ρ(support) = {bound:.6g} by {sup - bound:.3e}")
    mass = f.lp_norm(1)
    if abs(mean) > rtol * max(mass, 1e-300):
        violations.append(f"integral {mean:.3e} is not zero (∫|a| = {mass:.6g})")
    for leaf, value in zip(f.window.leaves, f.values):
        if value == 0:
            continue
        piece = grid.resolve(leaf)
        if intersection_measure(piece, atom.support) != piece.measure():
            violations.append(f"value {value:.6g} on {leaf} outside the support")

    return AtomReport(
        valid=not violations,
        sup_norm=sup,
        sup_bound=bound,
        mean=mean,
        support_measure=float(support_measure),
        violations=violations,
    )


def _log_antiderivative(u: float) -> float:
    """G(u) = u log u − u, continuous at 0"""
    return u * math.log(u) - u if u > 0 else 0.0


class ShiftedLogProfile:
    """
    h(x) = log(x − face) for x > face and 0 otherwise

    A function of the first horizontal coordinate only, so its mean
    oscillation over a CZ set equals its oscillation over the cube's interval.
    """

    def __init__(self, face: float):
        self.face = float(face)

    def __call__(self, x: Union[float, np.ndarray]) -> np.ndarray:
        u = np.asarray(x, dtype=float) - self.face
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(u > 0, np.log(np.where(u > 0, u, 1.0)), 0.0)

    def _check(self, a: float, b: float) -> None:
        if not a < b:
            raise InvalidFunctionError(f"Empty interval [{a}, {b})")

    def integral(self, a: float, b: float) -> float:
        """∫_a^b h"""
        self._check(a, b)
        return _log_antiderivative(max(b - self.face, 0.0)) - _log_antiderivative(
            max(a - self.face, 0.0)
        )

    def mean(self, a: float, b: float) -> float:
        return self.integral(a, b) / (b - a)

    def oscillation(self, a: float, b: float) -> float:
        """(1/|I|)∫_I |h − h_I| over I = [a, b), in closed form"""
        self._check(a, b)
        c = self.mean(a, b)
        zero_part = max(0.0, min(b, self.face) - a)
        total = zero_part * abs(c)
        if b > self.face:
            u0, u1 = max(a - self.face, 0.0), b - self.face
            crossing = min(max(math.exp(c), u0), u1)

            def F(u: float) -> float:
                return _log_antiderivative(u) - c * u

            total += F(u0) + F(u1) - 2 * F(crossing)
        return total / (b - a)


@dataclass
class BMOEstimate:
    """An upper bound for a dyadic BMO norm with the steps that produce it"""

    value: float
    derivation: List[str] = field(default_factory=list)


def bmo_dyadic_upper_log(face: float) -> BMOEstimate:
    """
    Upper bound for sup over dyadic intervals I of the mean oscillation of
    χ_{x>face} log(x − face), face a power of two

    Intervals of side <= face are dyadic in u = x − face: those starting at
    the face give exactly 2/e, those right of it at most log(2)/2 and those
    left of it 0. Of the longer ones, [0, face·2^K) is evaluated in closed
    form for K <= BMO_LATTICE_DEPTH and bounded analytically beyond; the
    others lie left of the face or start at u >= |I|/2 (at most log(3)/2).
    """
    mantissa, _ = math.frexp(face)
    if face <= 0 or mantissa != 0.5:
        raise InvalidFunctionError(f"Face must be a positive power of two, got {face}")

    profile = ShiftedLogProfile(face)
    small = 2 / math.e
    shifted = math.log(3.0) / 2
    lattice = [profile.oscillation(0.0, face * 2.0**K) for K in range(1, BMO_LATTICE_DEPTH + 1)]
    K = BMO_LATTICE_DEPTH + 1
    length = face * 2.0**K
    tail = 2 / math.e + 2 * face * (math.log(length) + 1) / length
    value = max(small, shifted, max(lattice), tail)

    best_K = int(np.argmax(lattice)) + 1
    derivation = [
        f"|I| <= {face:g}, I = [face, face + |I|): 2/e = {small:.12f}",
        f"|I| <= {face:g}, I right of the face: <= log(2)/2 = {math.log(2.0) / 2:.12f}",
        f"|I| > {face:g}, I = [0, face·2^K), K <= {BMO_LATTICE_DEPTH}: max {max(lattice):.12f} at K = {best_K}",
        f"|I| > {face:g}, I = [0, face·2^K), K > {BMO_LATTICE_DEPTH}: <= 2/e + 2·face·(log|I| + 1)/|I| = {tail:.12f}",
        f"|I| > {face:g}, I right of the face: <= log(3)/2 = {shifted:.12f}",
        "intervals left of the face: 0",
    ]
    return BMOEstimate(value, derivation)


def bmo_dyadic_lower(
    f: Union[StepFunction, ShiftedLogProfile],
    probe: Sequence[DyadicSetId],
    grid: Optional[DyadicGrid] = None,
) -> float:
    """
    max over probe sets R of (1/ρ(R))∫_R |f − f_R| dρ, a lower bound for ‖f‖_{BMO_D}

    Raises:
        InvalidFunctionError: If the probe is empty or a closed-form profile
            is probed without an n = 1 grid
    """
    if not probe:
        raise InvalidFunctionError("Empty probe")
    if isinstance(f, StepFunction):
        return max(mean_oscillation(f, set_id) for set_id in probe)
    if grid is None or grid.n != 1:
        raise InvalidFunctionError("A log profile is probed on an n = 1 grid")
    best = 0.0
    for set_id in probe:
        cube = grid.resolve(set_id).cube
        best = max(best, f.oscillation(float(cube.lower()[0]), float(cube.upper()[0])))
    return best


def graded_log_quadrature(h: float, panels: int = 64, nodes: int = 12) -> float:
    """
    ∫_0^h log u du by Gauss–Legendre on the panels [h 2^{−k−1}, h 2^{−k}]

    The remaining piece [0, h 2^{−panels}) is dropped; it contributes less
    than h 2^{−panels}(panels + |log h| + 1).
    """
    x, w = np.polynomial.legendre.leggauss(nodes)
    k = np.arange(panels)
    lo = h * np.exp2(-k - 1.0)
    half = lo / 2
    points = (lo + half)[:, None] + half[:, None] * x[None, :]
    return float(np.sum(half[:, None] * w[None, :] * np.log(points)))


# Counterexample construction


def _common_ancestor(grid: DyadicGrid, a: DyadicSetId, b: DyadicSetId) -> DyadicSetId:
    if a.half != b.half:
        raise GridConfigurationError(f"{a} and {b} lie in different halves")
    level = max(a.level, b.level)
    a, b = grid.ancestor(a, level), grid.ancestor(b, level)
    while a != b:
        a, b = grid.parent_id(a), grid.parent_id(b)
    return a


def face_root(grid: DyadicGrid) -> DyadicSetId:
    """The level-0 set [0, 32) × [0, 2) whose right face carries the construction"""
    return grid.locate(GroupPoint((0.5,), 0.5), 0)


def descend_along_face(grid: DyadicGrid, ell: int) -> DyadicSetId:
    """
    First set below R_0 with side 2^ℓ, following the child at the face x = 32
    with the lowest bottom

    Raises:
        GridConfigurationError: If the grid horizon ends before side 2^ℓ
    """
    node = face_root(grid)
    face = grid.resolve(node).cube.upper()[0]
    try:
        while grid.resolve(node).cube.k > ell:
            kids = [k for k in grid.children(node) if grid.resolve(k).cube.upper()[0] == face]
            node = min(kids, key=lambda k: grid.resolve(k).bottom)
    except HorizonError as e:
        raise GridConfigurationError(
            f"Grid reaches level {grid.j_lo} before side 2^{ell}; lower j_lo"
        ) from e
    return node


def counterexample_pair(grid: DyadicGrid, ell: int) -> Tuple[DyadicSetId, DyadicSetId, AtomSupport]:
    """
    R_j, E_j and the admissible box R_j ∪ E_j for side exponent ℓ

    Raises:
        GridConfigurationError: If E_j is not the mirror image of R_j or the
            union is not an admissible translate of the parent of R_j
    """
    if grid.n != 1:
        raise GridConfigurationError(f"The counterexample is built on the n = 1 grid, got n = {grid.n}")
    r_id = descend_along_face(grid, ell)
    R = grid.resolve(r_id)
    face = R.cube.upper()[0]
    side = R.cube.side
    center = GroupPoint((float(face + side / 2),), float(R.t))
    e_id = grid.locate(center, r_id.level)
    E = grid.resolve(e_id)
    if (E.cube.lower()[0], E.cube.k, E.t, E.r) != (face, R.cube.k, R.t, R.r):
        raise GridConfigurationError(f"{E.text()} is not the mirror of {R.text()} across x = {face}")

    union = AtomSupport((face - side,), R.cube.k + 1, R.t, R.r)
    parent = grid.resolve(grid.parent_id(r_id))
    if not union.is_admissible() or AtomSupport.from_czset(parent).translated((side,)) != union:
        raise GridConfigurationError(
            f"R ∪ E for ℓ = {ell} is not an admissible translate of the parent {parent.text()}"
        )
    return r_id, e_id, union


def counterexample_atom(grid: DyadicGrid, ell: int) -> Tuple[Atom, DyadicSetId, DyadicSetId]:
    """a_j = (χ_R − χ_E)/(2ρ(R)) on the window refined to R and E"""
    r_id, e_id, union = counterexample_pair(grid, ell)
    root = _common_ancestor(grid, r_id, e_id)
    window = Window.refined_to(grid, root, [r_id, e_id])
    height = 1.0 / (2 * float(grid.measure(r_id)))
    function = StepFunction.from_mapping(window, {r_id: height, e_id: -height})
    return Atom(union, function), r_id, e_id


def closed_form_pairing(ell: int) -> float:
    """|∫ a_j φ dρ| = (1 − ℓ log 2)/2"""
    return (1 - ell * LOG2) / 2


def _interval_integral_numeric(profile: ShiftedLogProfile, lo: float, hi: float) -> float:
    if hi <= profile.face:
        return 0.0
    u0, u1 = max(lo - profile.face, 0.0), hi - profile.face
    return graded_log_quadrature(u1) - (graded_log_quadrature(u0) if u0 > 0 else 0.0)


def numeric_pairing(atom: Atom, profile: ShiftedLogProfile) -> float:
    """|∫ a φ dρ| summed leaf by leaf with the graded quadrature in x"""
    f = atom.function
    grid = f.window.grid
    total = 0.0
    for leaf, value in zip(f.window.leaves, f.values):
        if value == 0:
            continue
        piece = grid.resolve(leaf)
        height = float(piece.top - piece.bottom)
        lo, hi = float(piece.cube.lower()[0]), float(piece.cube.upper()[0])
        total += value * height * _interval_integral_numeric(profile, lo, hi)
    return abs(total)


def required_j_lo(j_list: Sequence[int]) -> int:
    """A lowest level deep enough for the descent to side 2^min(ℓ)"""
    return -3 * (FACE_EXPONENT - min(j_list)) - 8


def run_counterexample(grid: DyadicGrid, j_list: Sequence[int]) -> List[CounterexampleRecord]:
    """
    One record per ℓ in j_list: the pair (R_j, E_j), closed-form and numeric
    pairings and the resulting lower bound for ‖a_j‖_{H¹_D}

    Raises:
        GridConfigurationError: If the grid lacks the adjacent pairs
    """
    face = float(2**FACE_EXPONENT)
    profile = ShiftedLogProfile(face)
    bmo = bmo_dyadic_upper_log(face)
    records: List[CounterexampleRecord] = []
    for ell in sorted(set(j_list), reverse=True):
        if ell >= FACE_EXPONENT:
            raise GridConfigurationError(f"Side exponent {ell} must be below {FACE_EXPONENT}")
        atom, r_id, e_id = counterexample_atom(grid, ell)
        report = validate_atom(atom)
        if not report.valid:
            logger.warning(f"Atom for ℓ = {ell} failed validation: {report.violations}")
        exact = closed_form_pairing(ell)
        numeric = numeric_pairing(atom, profile)
        records.append(
            CounterexampleRecord(
                ell=ell,
                k=r_id.level,
                r_set=grid.resolve(r_id).text(),
                e_set=grid.resolve(e_id).text(),
                union_set=_support_text(atom.support),
                pairing=exact,
                pairing_numeric=numeric,
                relative_error=abs(numeric - exact) / exact,
                h1_upper=1.0 if report.valid else float("inf"),
                bmo_upper=bmo.value,
                h1d_lower=exact / bmo.value,
                atom_valid=report.valid,
            )
        )
        logger.debug(f"ℓ = {ell}: R at level {r_id.level}, pairing {exact:.6f}")
    return records


def _support_text(support: BoxLike) -> str:
    if isinstance(support, CZSet):
        return support.text()
    corner = " ".join(str(c) for c in support.corner)
    return f"{support.n} {support.k} {corner} {support.t} {support.r}"


def fit_pairings(records: Sequence[CounterexampleRecord]) -> CounterexampleSummary:
    """Least-squares line of pairing against |ℓ|; needs two distinct scales for a slope"""
    face = float(2**FACE_EXPONENT)
    bmo = bmo_dyadic_upper_log(face)
    slope = intercept = residual = None
    if len({r.ell for r in records}) >= 2:
        x = np.array([abs(r.ell) for r in records], dtype=float)
        y = np.array([r.pairing for r in records])
        slope, intercept = (float(v) for v in np.polyfit(x, y, 1))
        residual = float(np.max(np.abs(slope * x + intercept - y)))
    return CounterexampleSummary(
        records=len(records),
        slope=slope,
        expected_slope=LOG2 / 2,
        intercept=intercept,
        residual=residual,
        bmo_upper=bmo.value,
        bmo_derivation=bmo.derivation,
        max_relative_error=max((r.relative_error for r in records), default=0.0),
    )