"""
Group structure, left-invariant distance and Haar measure of balls on S = R^n ⋊ R
"""
import logging
import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike

from .errors import DimensionMismatchError, InvalidPointError
from .schemas.report import GrowthFit

logger = logging.getLogger(__name__)

_LOG2 = math.log(2.0)
# Above this, asinh(e^u) is evaluated without forming e^u.
_ASINH_SWITCH = 300.0


@dataclass(frozen=True)
class GroupPoint:
    """
    A point (x, t) of S.

    The product is (x, t)·(x', t') = (x + e^t x', t + t') and o = (0, 0) is the identity.

    Example:
        >>> p = GroupPoint((0.0,), math.log(2))
        >>> mul(p, GroupPoint((3.0,), 0.0))
        GroupPoint(x=(6.0,), t=0.6931471805599453)
    """

    x: Tuple[float, ...]
    t: float

    def __post_init__(self):
        if len(self.x) < 1:
            raise InvalidPointError("A group point needs at least one horizontal coordinate")
        coords = tuple(float(c) for c in self.x)
        if not all(math.isfinite(c) for c in coords) or not math.isfinite(self.t):
            raise InvalidPointError(f"Non-finite coordinates: x={self.x}, t={self.t}")
        object.__setattr__(self, "x", coords)
        object.__setattr__(self, "t", float(self.t))

    @property
    def n(self) -> int:
        return len(self.x)

    @classmethod
    def identity(cls, n: int) -> "GroupPoint":
        return cls((0.0,) * n, 0.0)


def _check_dims(p: GroupPoint, q: GroupPoint) -> None:
    if p.n != q.n:
        raise DimensionMismatchError(f"Dimension mismatch: {p.n} vs {q.n}")


def mul(p: GroupPoint, q: GroupPoint) -> GroupPoint:
    """Group product p·q"""
    _check_dims(p, q)
    scale = math.exp(p.t)
    return GroupPoint(tuple(a + scale * b for a, b in zip(p.x, q.x)), p.t + q.t)


def inv(p: GroupPoint) -> GroupPoint:
    """Group inverse, so that mul(p, inv(p)) is the identity"""
    scale = math.exp(-p.t)
    return GroupPoint(tuple(-scale * a for a in p.x), -p.t)


def _log_sinh_sq_half_distance(log_y_sq: ArrayLike, s: ArrayLike) -> np.ndarray:
    """log sinh²(d/2), where sinh²(d/2) = sinh²(s/2) + e^{-s}|y|²/4"""
    s = np.asarray(s, dtype=float)
    a = np.abs(s) / 2.0
    with np.errstate(divide="ignore"):
        log_sinh_sq = 2.0 * (a + np.log(-np.expm1(-2.0 * a)) - _LOG2)
    return np.logaddexp(log_sinh_sq, np.asarray(log_y_sq, dtype=float) - s - 2.0 * _LOG2)


def _distance_from_log(h: np.ndarray) -> np.ndarray:
    """d = 2 asinh(e^{h/2}), with asinh(e^u) = u + log(1 + sqrt(1 + e^{-2u})) for large u"""
    u = h / 2.0
    near = 2.0 * np.arcsinh(np.exp(np.minimum(u, _ASINH_SWITCH)))
    far = 2.0 * (u + np.log1p(np.sqrt(1.0 + np.exp(-2.0 * np.maximum(u, _ASINH_SWITCH)))))
    return np.where(u > _ASINH_SWITCH, far, near)


def offset_distance(diff_sq: ArrayLike, t_from: ArrayLike, t_to: ArrayLike) -> np.ndarray:
    """
    d((x, t_from), (x', t_to)) from |x' - x|^2 alone, elementwise

    Args:
        diff_sq: Squared horizontal offsets |x' - x|^2
        t_from: Vertical coordinates of the first points
        t_to: Vertical coordinates of the second points

    Returns:
        Array of distances, broadcast over the inputs
    """
    t_from = np.asarray(t_from, dtype=float)
    with np.errstate(divide="ignore"):
        log_y_sq = np.log(np.asarray(diff_sq, dtype=float)) - 2.0 * t_from
    s = np.asarray(t_to, dtype=float) - t_from
    return _distance_from_log(_log_sinh_sq_half_distance(log_y_sq, s))


def dist(p: GroupPoint, q: GroupPoint) -> float:
    """
    Left-invariant distance d(p, q).

    Reduces to the origin through (y, s) = p^{-1}·q, where
    cosh d = (e^s + e^{-s} + e^{-s}|y|^2) / 2. Evaluated as
    2 asinh(sqrt(sinh²(s/2) + e^{-s}|y|²/4)) in log space, so it stays exact
    for nearby points and finite for far-apart ones.
    """
    _check_dims(p, q)
    # p^{-1}·q = (e^{-p.t}(q.x - p.x), q.t - p.t)
    diff_sq = sum((b - a) ** 2 for a, b in zip(p.x, q.x))
    return float(offset_distance(diff_sq, p.t, q.t))


def dist_many(center: GroupPoint, xs: np.ndarray, ts: np.ndarray) -> np.ndarray:
    """
    Distances from center to many points at once

    Args:
        center: Base point
        xs: Array of shape (N, n) with horizontal coordinates
        ts: Array of shape (N,) with vertical coordinates

    Returns:
        Array of shape (N,) with distances
    """
    xs = np.asarray(xs, dtype=float)
    ts = np.asarray(ts, dtype=float)
    if xs.ndim != 2 or xs.shape[1] != center.n:
        raise DimensionMismatchError(
            f"Dimension mismatch: points have shape {xs.shape}, center has n={center.n}"
        )
    diffs = xs - np.asarray(center.x)
    return offset_distance(np.sum(diffs * diffs, axis=1), center.t, ts)


def ball_half_widths(r: float) -> Tuple[float, float]:
    """
    Half-widths (X, T) of a box around o enclosing B(o, r).

    From e^t + e^{-t}(1 + |x|^2) < 2 cosh r one gets |t| < r and
    |x|^2 < 2 cosh(r) e^t <= 2 cosh(r) e^r.
    """
    return math.exp(r / 2.0) * math.sqrt(2.0 * math.cosh(r)), r


def mc_ball_measure(
    center: GroupPoint, r: float, samples: int, seed: int
) -> Tuple[float, float]:
    """
    Monte-Carlo estimate of the right Haar measure of B(center, r)

    Samples the image under left translation by center of the box enclosing
    B(o, r), which has volume e^{n·center.t} times the box at o.

    Args:
        center: Ball center
        r: Radius (> 0)
        samples: Number of uniform samples (>= 1)
        seed: Seed of the numpy generator

    Returns:
        Tuple (estimate, standard error)
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if r <= 0:
        raise ValueError("r must be positive")

    rng = np.random.default_rng(seed)
    n = center.n
    half_x, half_t = ball_half_widths(r)
    half_x *= math.exp(center.t)

    xs = np.asarray(center.x) + rng.uniform(-half_x, half_x, size=(samples, n))
    ts = center.t + rng.uniform(-half_t, half_t, size=samples)
    hits = dist_many(center, xs, ts) < r

    volume = (2.0 * half_x) ** n * (2.0 * half_t)
    frac = float(np.mean(hits))
    estimate = volume * frac
    stderr = volume * math.sqrt(frac * (1.0 - frac) / samples)
    return estimate, stderr


def ball_measure_closed_form(r: float) -> float:
    """Exact ρ(B(o, r)) for n = 1, equal to 2π(cosh r − 1)"""
    return 2.0 * math.pi * (math.cosh(r) - 1.0)


def fit_growth_slopes(
    n: int,
    samples: int,
    seed: int,
    small_radii: Sequence[float] = (0.05, 0.1, 0.2),
    large_radii: Sequence[float] = (2.0, 3.0, 4.0),
) -> GrowthFit:
    """
    Fit the ball-growth envelope from Monte-Carlo estimates

    Small radii are fitted on a log-log scale (expected slope n + 1), large radii
    on a log-linear scale (expected slope n).
    """
    origin = GroupPoint.identity(n)
    small = [mc_ball_measure(origin, r, samples, seed + i) for i, r in enumerate(small_radii)]
    large = [
        mc_ball_measure(origin, r, samples, seed + len(small_radii) + i)
        for i, r in enumerate(large_radii)
    ]

    small_slope = float(
        np.polyfit(np.log(small_radii), np.log([est for est, _ in small]), 1)[0]
    )
    large_slope = float(np.polyfit(large_radii, np.log([est for est, _ in large]), 1)[0])
    logger.info(f"Ball growth n={n}: small slope {small_slope:.4f}, large slope {large_slope:.4f}")

    return GrowthFit(
        n=n,
        samples=samples,
        seed=seed,
        small_radii=list(small_radii),
        small_estimates=[est for est, _ in small],
        small_slope=small_slope,
        large_radii=list(large_radii),
        large_estimates=[est for est, _ in large],
        large_slope=large_slope,
    )
