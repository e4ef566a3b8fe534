"""
Calderón–Zygmund sets: admissibility, exact measure, splitting and parents

A CZ set is Q×[t−r, t+r) with Q a dyadic cube of side L = 2^k, subject to

    e^2·e^t·r <= L < e^8·e^t·r        if r < 1
    e^t·e^{2r} <= L < e^t·e^{8r}      if r >= 1

Vertical coordinates are kept as Fractions so that splits partition exactly.
"""
import itertools
import logging
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import AdmissibilityError, DimensionMismatchError
from .geometry import GroupPoint, ball_half_widths, dist_many, offset_distance
from .schemas.report import SandwichFit

logger = logging.getLogger(__name__)

LOG2 = math.log(2.0)

Rational = Union[int, float, Fraction]


class ParentKind(str, Enum):
    """The three parent constructions"""

    HORIZONTAL = "horizontal"
    VERTICAL_UP = "vertical_up"
    VERTICAL_DOWN = "vertical_down"


class SplitMode(str, Enum):
    CUBE = "cube"
    INTERVAL = "interval"


class Membership(str, Enum):
    IN = "in"
    OUT = "out"
    BOUNDARY = "boundary"


def _as_fraction(value: Rational) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float) and not math.isfinite(value):
        raise AdmissibilityError(f"Non-finite vertical coordinate: {value}", "finite")
    return Fraction(value)


@dataclass(frozen=True, order=True)
class DyadicCube:
    """
    The cube [m_1 2^k, (m_1+1) 2^k) × … × [m_n 2^k, (m_n+1) 2^k)
    """

    k: int
    m: Tuple[int, ...]

    def __post_init__(self):
        if len(self.m) < 1:
            raise DimensionMismatchError("A dyadic cube needs at least one coordinate")
        object.__setattr__(self, "m", tuple(int(c) for c in self.m))

    @property
    def n(self) -> int:
        return len(self.m)

    @property
    def side(self) -> Fraction:
        return Fraction(2) ** self.k

    @property
    def log_side(self) -> float:
        return self.k * LOG2

    def lower(self) -> Tuple[Fraction, ...]:
        return tuple(c * self.side for c in self.m)

    def upper(self) -> Tuple[Fraction, ...]:
        return tuple((c + 1) * self.side for c in self.m)

    def center(self) -> Tuple[float, ...]:
        return tuple(math.ldexp(2 * c + 1, self.k - 1) for c in self.m)

    def contains_x(self, x: Sequence[float]) -> bool:
        if len(x) != self.n:
            raise DimensionMismatchError(f"Dimension mismatch: {len(x)} vs {self.n}")
        return all(math.floor(math.ldexp(xi, -self.k)) == mi for xi, mi in zip(x, self.m))

    def parent(self) -> "DyadicCube":
        return DyadicCube(self.k + 1, tuple(c // 2 for c in self.m))

    def children(self) -> List["DyadicCube"]:
        """The 2^n subcubes in lexicographic corner order"""
        return [
            DyadicCube(self.k - 1, tuple(2 * c + o for c, o in zip(self.m, offset)))
            for offset in itertools.product((0, 1), repeat=self.n)
        ]

    @classmethod
    def containing(cls, x: Sequence[float], k: int) -> "DyadicCube":
        return cls(k, tuple(math.floor(math.ldexp(xi, -k)) for xi in x))


def admissibility_failure(k: int, t: Rational, r: Rational) -> Optional[str]:
    """
    Name the admissibility inequality that fails for (2^k, t, r), or None

    Comparisons are done on logarithms: log L = k·log 2.
    """
    r_val = float(r)
    t_val = float(t)
    if r_val <= 0:
        return "r > 0"
    log_side = k * LOG2
    if r_val >= 1:
        lower, upper = t_val + 2 * r_val, t_val + 8 * r_val
        if not lower <= log_side:
            return f"e^t e^(2r) <= L (log L = {log_side:.6g} < {lower:.6g})"
        if not log_side < upper:
            return f"L < e^t e^(8r) (log L = {log_side:.6g} >= {upper:.6g})"
    else:
        lower = 2 + t_val + math.log(r_val)
        upper = 8 + t_val + math.log(r_val)
        if not lower <= log_side:
            return f"e^2 e^t r <= L (log L = {log_side:.6g} < {lower:.6g})"
        if not log_side < upper:
            return f"L < e^8 e^t r (log L = {log_side:.6g} >= {upper:.6g})"
    return None


def is_admissible(cube: DyadicCube, t: Rational, r: Rational) -> bool:
    """True iff cube × [t−r, t+r) is a Calderón–Zygmund set"""
    return admissibility_failure(cube.k, t, r) is None


def can_extend_horizontally(k: int, t: Rational, r: Rational) -> bool:
    """Side condition of the horizontal parent: e^t e^{2r} <= L < e^t e^{8r} / 2"""
    return float(r) >= 1 and float(t) + 2 * float(r) <= k * LOG2 < float(t) + 8 * float(r) - LOG2


@dataclass(frozen=True)
class CZSet:
    """
    An admissible Calderón–Zygmund set cube × [t − r, t + r)

    Raises:
        AdmissibilityError: If the inequalities of the current regime fail
    """

    cube: DyadicCube
    t: Fraction
    r: Fraction

    def __post_init__(self):
        object.__setattr__(self, "t", _as_fraction(self.t))
        object.__setattr__(self, "r", _as_fraction(self.r))
        failure = admissibility_failure(self.cube.k, self.t, self.r)
        if failure is not None:
            raise AdmissibilityError(f"Not admissible: {self.text()} violates {failure}", failure)

    @property
    def n(self) -> int:
        return self.cube.n

    @property
    def bottom(self) -> Fraction:
        return self.t - self.r

    @property
    def top(self) -> Fraction:
        return self.t + self.r

    @property
    def is_big(self) -> bool:
        return self.r >= 1

    def measure(self) -> Fraction:
        """ρ(R) = 2r·L^n, exactly"""
        return 2 * self.r * self.cube.side**self.n

    def center(self) -> GroupPoint:
        return GroupPoint(self.cube.center(), float(self.t))

    def contains(self, p: GroupPoint) -> bool:
        if p.n != self.n:
            raise DimensionMismatchError(f"Dimension mismatch: {p.n} vs {self.n}")
        return self.cube.contains_x(p.x) and self.bottom <= p.t < self.top

    def text(self) -> str:
        """Canonical text form `n k m.. t r`"""
        parts = [str(self.n), str(self.cube.k), *(str(c) for c in self.cube.m)]
        parts += [_format_number(self.t), _format_number(self.r)]
        return " ".join(parts)

    @classmethod
    def from_text(cls, text: str) -> "CZSet":
        fields = text.split()
        try:
            n, k = int(fields[0]), int(fields[1])
            m = tuple(int(c) for c in fields[2 : 2 + n])
            t, r = _parse_number(fields[2 + n]), _parse_number(fields[3 + n])
        except (IndexError, ValueError) as e:
            raise AdmissibilityError(f"Malformed CZ set text: {text!r}", "format") from e
        if len(fields) != 4 + n:
            raise AdmissibilityError(f"Malformed CZ set text: {text!r}", "format")
        return cls(DyadicCube(k, m), t, r)

    def __str__(self) -> str:
        return self.text()


def _format_number(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return repr(float(value))


def _parse_number(token: str) -> Fraction:
    if "/" in token:
        return Fraction(token)
    return Fraction(float(token)) if any(c in token for c in ".eE") else Fraction(int(token))


def measure(R: CZSet) -> Fraction:
    return R.measure()


def center(R: CZSet) -> GroupPoint:
    return R.center()


def contains(R: CZSet, p: GroupPoint) -> bool:
    return R.contains(p)


def _overlap(a_lo: Fraction, a_hi: Fraction, b_lo: Fraction, b_hi: Fraction) -> Fraction:
    return max(Fraction(0), min(a_hi, b_hi) - max(a_lo, b_lo))


def box_bounds(R: "BoxLike") -> Tuple[Tuple[Fraction, ...], Tuple[Fraction, ...], Fraction, Fraction]:
    """Lower corner, upper corner, bottom and top of a CZ set or translated box"""
    if isinstance(R, CZSet):
        return R.cube.lower(), R.cube.upper(), R.bottom, R.top
    return R.bounds()


def intersection_measure(R: "BoxLike", S: "BoxLike") -> Fraction:
    """Exact ρ(R ∩ S) for two boxes"""
    r_lo, r_hi, r_bot, r_top = box_bounds(R)
    s_lo, s_hi, s_bot, s_top = box_bounds(S)
    if len(r_lo) != len(s_lo):
        raise DimensionMismatchError(f"Dimension mismatch: {len(r_lo)} vs {len(s_lo)}")
    result = _overlap(r_bot, r_top, s_bot, s_top)
    for a_lo, a_hi, b_lo, b_hi in zip(r_lo, r_hi, s_lo, s_hi):
        if not result:
            break
        result *= _overlap(a_lo, a_hi, b_lo, b_hi)
    return result


def intersects(R: "BoxLike", S: "BoxLike") -> bool:
    return intersection_measure(R, S) > 0


def is_subset(R: "BoxLike", S: "BoxLike") -> bool:
    r_lo, r_hi, r_bot, r_top = box_bounds(R)
    s_lo, s_hi, s_bot, s_top = box_bounds(S)
    return (
        s_bot <= r_bot
        and r_top <= s_top
        and all(b <= a for a, b in zip(r_lo, s_lo))
        and all(a <= b for a, b in zip(r_hi, s_hi))
    )


def split_mode(R: CZSet) -> SplitMode:
    """Cube split if every halved cube stays admissible with the same (t, r)"""
    if admissibility_failure(R.cube.k - 1, R.t, R.r) is None:
        return SplitMode.CUBE
    return SplitMode.INTERVAL


def split(R: CZSet, mode: Optional[SplitMode] = None) -> List[CZSet]:
    """
    Split R into 2^n or 2 disjoint admissible CZ sets of equal measure

    Cube children come in lexicographic corner order, interval children
    bottom first.

    Raises:
        AdmissibilityError: If the requested (or canonical) mode yields an
            inadmissible child
    """
    mode = mode or split_mode(R)
    try:
        if mode == SplitMode.CUBE:
            return [CZSet(sub, R.t, R.r) for sub in R.cube.children()]
        half = R.r / 2
        return [CZSet(R.cube, R.t - half, half), CZSet(R.cube, R.t + half, half)]
    except AdmissibilityError as e:
        logger.warning(f"Split of {R.text()} in mode {mode.value} failed: {e}")
        raise AdmissibilityError(
            f"Cannot split {R.text()} in mode {mode.value}: {e}", e.inequality
        ) from e


def _require_parent_condition(R: CZSet, kind: ParentKind) -> None:
    if R.r < 1:
        raise AdmissibilityError(f"{kind.value} parent of {R.text()} needs r >= 1", "r >= 1")
    horizontal = can_extend_horizontally(R.cube.k, R.t, R.r)
    if kind == ParentKind.HORIZONTAL and not horizontal:
        raise AdmissibilityError(
            f"Horizontal parent of {R.text()} needs L < e^t e^(8r) / 2",
            "e^t e^(2r) <= L < e^t e^(8r) / 2",
        )
    if kind != ParentKind.HORIZONTAL and horizontal:
        raise AdmissibilityError(
            f"{kind.value} parent of {R.text()} needs L >= e^t e^(8r) / 2",
            "e^t e^(8r) / 2 <= L < e^t e^(8r)",
        )


def parent(R: CZSet, kind: ParentKind) -> Tuple[CZSet, List[CZSet]]:
    """
    Parent M(R) of a big-regime CZ set together with the siblings of R

    Horizontal doubles the cube, VerticalUp extends the interval to
    [t−r, t+3r) and VerticalDown to [t−5r, t+r).

    Raises:
        AdmissibilityError: If the side condition of the requested kind fails
    """
    _require_parent_condition(R, kind)
    t, r = R.t, R.r

    if kind == ParentKind.HORIZONTAL:
        big = R.cube.parent()
        M = CZSet(big, t, r)
        siblings = [CZSet(sub, t, r) for sub in big.children() if sub != R.cube]
    elif kind == ParentKind.VERTICAL_UP:
        M = CZSet(R.cube, t + r, 2 * r)
        siblings = [CZSet(R.cube, t + 2 * r, r)]
    else:
        M = CZSet(R.cube, t - 2 * r, 3 * r)
        siblings = [CZSet(R.cube, t - 3 * r, 2 * r)]

    return M, siblings


def parent_decomposition(M: CZSet, kind: ParentKind) -> List[CZSet]:
    """
    The decomposition of a parent built by `parent(R, kind)`, bottom first

    Horizontal and VerticalUp parents decompose by the cube and interval
    splits; a VerticalDown parent of radius 3r splits into [t−5r, t−r) and
    [t−r, t+r) relative to the child center.
    """
    if kind == ParentKind.HORIZONTAL:
        return split(M, SplitMode.CUBE)
    if kind == ParentKind.VERTICAL_UP:
        return split(M, SplitMode.INTERVAL)
    r = M.r / 3
    return [CZSet(M.cube, M.t - r, 2 * r), CZSet(M.cube, M.t + 2 * r, r)]


def measure_ratio_bounds(n: int) -> Tuple[Fraction, Fraction]:
    """Bounds on ρ(M(R))/ρ(R) for every parent: [3/2, max{3, 2^n}]"""
    return Fraction(3, 2), Fraction(max(3, 2**n))


@dataclass(frozen=True)
class AtomSupport:
    """
    A translated box corner + [0, 2^k)^n × [t − r, t + r) with real corner

    Admissibility uses the same inequalities as CZSet; the corner need not
    lie on the dyadic lattice.
    """

    corner: Tuple[Fraction, ...]
    k: int
    t: Fraction
    r: Fraction

    def __post_init__(self):
        object.__setattr__(self, "corner", tuple(_as_fraction(c) for c in self.corner))
        object.__setattr__(self, "t", _as_fraction(self.t))
        object.__setattr__(self, "r", _as_fraction(self.r))

    @property
    def n(self) -> int:
        return len(self.corner)

    @property
    def side(self) -> Fraction:
        return Fraction(2) ** self.k

    def is_admissible(self) -> bool:
        return admissibility_failure(self.k, self.t, self.r) is None

    def bounds(self) -> Tuple[Tuple[Fraction, ...], Tuple[Fraction, ...], Fraction, Fraction]:
        upper = tuple(c + self.side for c in self.corner)
        return self.corner, upper, self.t - self.r, self.t + self.r

    def measure(self) -> Fraction:
        return 2 * self.r * self.side**self.n

    def contains(self, p: GroupPoint) -> bool:
        lo, hi, bot, top = self.bounds()
        return all(a <= x < b for x, a, b in zip(p.x, lo, hi)) and bot <= p.t < top

    @classmethod
    def from_czset(cls, R: CZSet) -> "AtomSupport":
        return cls(R.cube.lower(), R.cube.k, R.t, R.r)

    def translated(self, shift: Sequence[Rational]) -> "AtomSupport":
        return AtomSupport(
            tuple(c + _as_fraction(s) for c, s in zip(self.corner, shift)), self.k, self.t, self.r
        )


BoxLike = Union[CZSet, AtomSupport]


def random_admissible(
    n: int,
    rng: np.random.Generator,
    log2_r_range: Tuple[float, float] = (-6.0, 6.0),
    t_range: Tuple[float, float] = (-10.0, 10.0),
    m_range: int = 8,
) -> CZSet:
    """
    Draw an admissible CZ set: log-uniform r, uniform t, then a uniform side
    exponent among the admissible ones and a random lattice position

    t and r are rounded to dyadic rationals so every split stays exact.
    """
    r = Fraction(float(np.exp2(rng.uniform(*log2_r_range)))).limit_denominator(1 << 20)
    t = Fraction(round(rng.uniform(*t_range) * 1024), 1024)
    ks = list(admissible_exponents(t, r))
    k = ks[int(rng.integers(len(ks)))]
    m = tuple(int(v) for v in rng.integers(-m_range, m_range, size=n))
    return CZSet(DyadicCube(k, m), t, r)


def admissible_exponents(t: Rational, r: Rational) -> Iterator[int]:
    """Every k such that a cube of side 2^k is admissible with (t, r)"""
    r_val, t_val = float(r), float(t)
    if r_val >= 1:
        lower, upper = t_val + 2 * r_val, t_val + 8 * r_val
    else:
        lower, upper = 2 + t_val + math.log(r_val), 8 + t_val + math.log(r_val)
    for k in range(math.floor(lower / LOG2) - 1, math.ceil(upper / LOG2) + 2):
        if admissibility_failure(k, t, r) is None:
            yield k


def distance_to_set_many(R: CZSet, xs: np.ndarray, ts: np.ndarray) -> np.ndarray:
    """
    Exact d(q, R) for many points q = (xs[i], ts[i])

    For p = (p.x, τ) the distance satisfies
    cosh d(p, q) = cosh(q.t − τ) + e^{−τ−q.t}|q.x − p.x|²/2.
    The horizontal term is minimised by clamping q.x to the cube; the
    remaining convex function of τ has its minimum at ½·log(e^{2q.t} + D²),
    clamped to [t − r, t + r].
    """
    xs = np.asarray(xs, dtype=float)
    ts = np.asarray(ts, dtype=float)
    if xs.ndim != 2 or xs.shape[1] != R.n:
        raise DimensionMismatchError(
            f"Dimension mismatch: points have shape {xs.shape}, set has n={R.n}"
        )
    lo = np.array([float(c) for c in R.cube.lower()])
    hi = np.array([float(c) for c in R.cube.upper()])
    gap = np.maximum(np.maximum(lo - xs, xs - hi), 0.0)
    d_sq = np.sum(gap * gap, axis=1)

    with np.errstate(divide="ignore"):
        tau = 0.5 * np.logaddexp(2.0 * ts, np.log(d_sq))
    tau = np.clip(tau, float(R.bottom), float(R.top))
    return offset_distance(d_sq, tau, ts)


def distance_to_set(R: CZSet, p: GroupPoint) -> float:
    """d(p, R); 0 when p ∈ R"""
    if R.contains(p):
        return 0.0
    return float(distance_to_set_many(R, np.array([p.x]), np.array([p.t]))[0])


def dilated_membership(R: CZSet, p: GroupPoint, tol: Optional[float] = None) -> Membership:
    """
    Classify p against R* = {d(·, R) < r_R}

    IN when d(p, R) < r_R − tol, OUT when d(p, R) > r_R + tol, BOUNDARY
    otherwise. tol defaults to 1e−3·r_R.
    """
    r = float(R.r)
    tol = 1e-3 * r if tol is None else tol
    d = distance_to_set(R, p)
    if d < r - tol:
        return Membership.IN
    if d > r + tol:
        return Membership.OUT
    return Membership.BOUNDARY


def dilated_contains(R: CZSet, p: GroupPoint, tol: Optional[float] = None) -> bool:
    return dilated_membership(R, p, tol) == Membership.IN


def _uniform_in_set(R: CZSet, rng: np.random.Generator, samples: int) -> Tuple[np.ndarray, np.ndarray]:
    lo = np.array([float(c) for c in R.cube.lower()])
    side = float(R.cube.side)
    xs = lo + side * rng.random((samples, R.n))
    ts = float(R.bottom) + 2.0 * float(R.r) * rng.random(samples)
    return xs, ts


def _corners(R: CZSet) -> Tuple[np.ndarray, np.ndarray]:
    lows = [float(c) for c in R.cube.lower()]
    highs = [float(c) for c in R.cube.upper()]
    corners = list(
        itertools.product(*zip(lows, highs), (float(R.bottom), float(R.top)))
    )
    pts = np.array(corners)
    return pts[:, : R.n], pts[:, R.n]


def _outer_ratio(R: CZSet, xs: np.ndarray, ts: np.ndarray) -> float:
    c = R.center()
    return float(np.max(dist_many(c, xs, ts))) / float(R.r)


def _inner_violations(R: CZSet, rng: np.random.Generator, samples: int) -> int:
    c = R.center()
    r = float(R.r)
    half_x, half_t = ball_half_widths(r)
    half_x *= math.exp(c.t)
    xs = np.asarray(c.x) + rng.uniform(-half_x, half_x, size=(samples, R.n))
    ts = c.t + rng.uniform(-half_t, half_t, size=samples)
    inside_ball = dist_many(c, xs, ts) < r

    lo = np.array([float(v) for v in R.cube.lower()])
    hi = np.array([float(v) for v in R.cube.upper()])
    in_cube = np.all((lo <= xs) & (xs < hi), axis=1)
    in_interval = (float(R.bottom) <= ts) & (ts < float(R.top))
    return int(np.sum(inside_ball & ~(in_cube & in_interval)))


def fit_ball_sandwich(sets: Sequence[CZSet], samples: int, seed: int) -> SandwichFit:
    """
    Empirical κ̂₀ for B(x_R, r_R) ⊂ R ⊂ B(x_R, κ₀ r_R)

    κ̂₀ is the running max of d(x_R, p)/r_R over the corners of each set
    plus `samples` uniform points; the inner inclusion is tested on
    `samples` points of each ball. The value at half the samples is kept to
    judge stability.
    """
    if not sets:
        raise ValueError("fit_ball_sandwich needs at least one set")
    rng = np.random.default_rng(seed)
    half = max(1, samples // 2)
    kappa_half = 0.0
    kappa = 0.0
    violations = 0
    for R in sets:
        cx, ct = _corners(R)
        xs, ts = _uniform_in_set(R, rng, samples)
        corner_ratio = _outer_ratio(R, cx, ct)
        kappa_half = max(kappa_half, corner_ratio, _outer_ratio(R, xs[:half], ts[:half]))
        kappa = max(kappa, corner_ratio, _outer_ratio(R, xs, ts))
        violations += _inner_violations(R, rng, samples)

    stable = kappa <= 1.05 * kappa_half
    logger.info(
        f"Ball sandwich over {len(sets)} sets: kappa_hat={kappa:.4f} "
        f"(half samples {kappa_half:.4f}), inner violations {violations}"
    )
    if not stable:
        logger.warning(f"kappa_hat moved more than 5% when samples doubled: {kappa_half} -> {kappa}")
    return SandwichFit(
        sets=len(sets),
        samples=samples,
        seed=seed,
        kappa_hat=kappa,
        kappa_hat_half=kappa_half,
        inner_violations=violations,
        stable=stable,
    )


def estimate_dilated_ratio(R: CZSet, samples: int, seed: int) -> Tuple[float, float]:
    """
    Monte-Carlo estimate of ρ(R*)/ρ(R) with its standard error

    If d(q, p) < r for some p ∈ R then |q.t − p.t| < r and
    |q.x − p.x| < e^{p.t}·sinh(r), which gives the sampling box.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    r = float(R.r)
    reach = math.exp(float(R.top)) * math.sinh(r)
    lo = np.array([float(c) for c in R.cube.lower()]) - reach
    hi = np.array([float(c) for c in R.cube.upper()]) + reach
    bottom, top = float(R.bottom) - r, float(R.top) + r

    xs = lo + (hi - lo) * rng.random((samples, R.n))
    ts = bottom + (top - bottom) * rng.random(samples)
    hits = distance_to_set_many(R, xs, ts) < r

    volume = float(np.prod(hi - lo)) * (top - bottom)
    frac = float(np.mean(hits))
    scale = volume / float(R.measure())
    return scale * frac, scale * math.sqrt(frac * (1.0 - frac) / samples)
