"""Monte-Carlo estimators for disagreement geometry.

Everything here reports uncertainty explicitly: estimates come back as
``EstimateWithCI`` with three-sigma half-widths (Wilson-adjusted when
the hit count is too small for the normal approximation), and the
check_* functions fold that uncertainty into their pass criteria so a
borderline quantity is never failed on Monte-Carlo noise alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .distributions import DistributionSpec, RandomStream, RngLike, as_generator, sample_chunks
from .errors import CalibrationError, DegeneratePointError, InsufficientResolutionError
from .geometry import Hypothesis, angle, dis_membership_many, rotate_towards, unit_vector, _unit_array

#: Chunk length for the wide direction-matrix products used below;
#: smaller than the sampler default to bound the margins buffer.
_PAIR_CHUNK = 32_768
#: Hit count below which the Wilson interval replaces the normal one.
_WILSON_THRESHOLD = 25
_Z = 3.0


@dataclass(frozen=True)
class EstimateWithCI:
    """Point estimate with a symmetric-by-construction confidence half-width.

    Half-widths are three-sigma.  For binomial counts use
    ``from_counts``, which switches to the (asymmetric) Wilson interval
    when either outcome count is below 25 and reports the larger
    one-sided width.
    """

    value: float
    half_width: float
    n: int

    def __post_init__(self):
        if self.half_width < 0:
            raise ValueError("half_width must be nonnegative")
        if self.n < 1:
            raise ValueError("n must be >= 1")

    @property
    def lower(self) -> float:
        return self.value - self.half_width

    @property
    def upper(self) -> float:
        return self.value + self.half_width

    @classmethod
    def from_counts(cls, hits: int, n: int) -> "EstimateWithCI":
        if not 0 <= hits <= n:
            raise ValueError(f"hits must be in [0, {n}], got {hits}")
        p = hits / n
        if min(hits, n - hits) >= _WILSON_THRESHOLD:
            half = _Z * math.sqrt(p * (1.0 - p) / n)
        else:
            z2 = _Z * _Z
            denom = 1.0 + z2 / n
            center = (p + z2 / (2.0 * n)) / denom
            rad = _Z * math.sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom
            half = max(center + rad - p, p - (center - rad))
        return cls(value=p, half_width=half, n=n)

    def scaled(self, factor: float) -> "EstimateWithCI":
        """The estimate of ``factor`` times the underlying quantity."""
        if factor <= 0:
            raise ValueError("factor must be positive")
        return EstimateWithCI(self.value * factor, self.half_width * factor, self.n)


def _split(rng: RngLike, k: int) -> RngLike:
    """Child stream when splitting is possible, the same generator otherwise."""
    if isinstance(rng, RandomStream):
        return rng.child(k)
    return rng


def estimate_disagreement(u, v, dist: DistributionSpec, n: int, rng: RngLike) -> EstimateWithCI:
    """P(sign(u . x) != sign(v . x)) by Monte Carlo.

    Identical directions short-circuit to exactly 0 with zero width;
    no amount of sampling should report phantom disagreement there.
    """
    uw = _unit_array(u, "u")
    vw = _unit_array(v, "v")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if np.array_equal(uw, vw):
        return EstimateWithCI(value=0.0, half_width=0.0, n=n)
    hits = 0
    for block in sample_chunks(dist, n, rng):
        hits += int(np.sum((block @ uw >= 0) != (block @ vw >= 0)))
    return EstimateWithCI.from_counts(hits, n)


def estimate_band_disagreement(
    u, v, b: float, dist: DistributionSpec, n: int, rng: RngLike
) -> EstimateWithCI:
    """P(sign(u . x) != sign(v . x) and |v . x| >= b) by Monte Carlo."""
    return estimate_band_profile(u, v, [b], dist, n, rng)[0]


def estimate_band_profile(
    u, v, b_values: Sequence[float], dist: DistributionSpec, n: int, rng: RngLike
) -> Tuple[EstimateWithCI, ...]:
    """Band disagreement at several thresholds, on one shared sample.

    Sharing the sample makes the estimates exactly nonincreasing in b,
    so profile shapes are never artifacts of independent noise.
    """
    uw = _unit_array(u, "u")
    vw = _unit_array(v, "v")
    bs = np.asarray(list(b_values), dtype=float)
    if bs.size == 0:
        raise ValueError("b_values must be nonempty")
    if np.any(bs < 0):
        raise ValueError("band half-widths must be nonnegative")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    hits = np.zeros(bs.size, dtype=np.int64)
    for block in sample_chunks(dist, n, rng):
        mv = block @ vw
        disagree = (block @ uw >= 0) != (mv >= 0)
        kept = np.abs(mv[disagree])
        hits += np.sum(kept[:, None] >= bs[None, :], axis=0)
    return tuple(EstimateWithCI.from_counts(int(h), n) for h in hits)


@dataclass(frozen=True)
class AngleBoundReport:
    """Outcome of the disagreement-vs-angle floor check."""

    floor: float
    trials: int
    n: int
    min_ratio: float
    passed: bool
    pairs: Tuple[Tuple[float, float, float], ...]  # (angle, estimate, half_width)


def check_angle_bound(
    dist: DistributionSpec,
    trials: int,
    n: int,
    rng: RngLike,
    floor: float = 0.1,
) -> AngleBoundReport:
    """Check P(disagree) >= floor * angle over random hypothesis pairs.

    Pairs are drawn with angles uniform on [0.02, pi/2] and all
    evaluated on one shared sample.  A pair passes when its estimate
    plus CI half-width reaches floor * angle, so failures cannot be
    explained away by Monte-Carlo noise.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    g_pairs = as_generator(_split(rng, 1))
    data_rng = _split(rng, 2)
    d = dist.d
    thetas = g_pairs.uniform(0.02, math.pi / 2, trials)
    dirs = np.empty((2 * trials, d))
    for i in range(trials):
        u = unit_vector(g_pairs.standard_normal(d))
        t = unit_vector(g_pairs.standard_normal(d))
        if angle(u, t) < thetas[i]:
            t = unit_vector(-t.w)
        v = rotate_towards(u, t, float(thetas[i]))
        dirs[i] = u.w
        dirs[trials + i] = v.w
    hits = np.zeros(trials, dtype=np.int64)
    for block in sample_chunks(dist, n, data_rng, chunk=_PAIR_CHUNK):
        margins = block @ dirs.T
        hits += np.sum((margins[:, :trials] >= 0) != (margins[:, trials:] >= 0), axis=0)
    pairs = []
    min_ratio = math.inf
    for i in range(trials):
        est = EstimateWithCI.from_counts(int(hits[i]), n)
        pairs.append((float(thetas[i]), est.value, est.half_width))
        min_ratio = min(min_ratio, est.upper / float(thetas[i]))
    return AngleBoundReport(
        floor=floor,
        trials=trials,
        n=n,
        min_ratio=min_ratio,
        passed=min_ratio >= floor,
        pairs=tuple(pairs),
    )


@dataclass(frozen=True)
class MarginDecayReport:
    """Fit of log band disagreement against band width.

    Estimates share one sample.  ``slope`` is from the regression of
    log(estimate / angle) on b / angle over the positive estimates;
    the check passes when the decay is at least exponential with rate
    0.3 in those units.  ``grid_below_angle`` flags grids that start
    below the pair angle, where the bound is still flat.
    """

    angle: float
    b_grid: Tuple[float, ...]
    estimates: Tuple[EstimateWithCI, ...]
    slope: float
    intercept: float
    r_squared: float
    passed: bool
    grid_below_angle: bool
    n: int


def check_margin_decay(
    u, v, dist: DistributionSpec, b_grid: Sequence[float], n: int, rng: RngLike
) -> MarginDecayReport:
    """Verify band disagreement decays exponentially in the band width.

    Raises ``InsufficientResolutionError`` when fewer than two grid
    points have any hits, since no decay rate can be fitted from one
    point; callers should increase n or shrink the grid.
    """
    bs = tuple(float(b) for b in b_grid)
    if len(bs) < 2:
        raise ValueError("b_grid needs at least two points")
    if any(b2 <= b1 for b1, b2 in zip(bs, bs[1:])):
        raise ValueError("b_grid must be strictly increasing")
    if bs[0] <= 0:
        raise ValueError("b_grid values must be positive")
    eta = angle(u, v)
    if eta == 0.0:
        raise ValueError("u and v must differ to have a decay profile")
    ests = estimate_band_profile(u, v, bs, dist, n, rng)
    xs = []
    ys = []
    for b, est in zip(bs, ests):
        if est.value > 0:
            xs.append(b / eta)
            ys.append(math.log(est.value / eta))
    if len(xs) < 2:
        raise InsufficientResolutionError(
            f"only {len(xs)} of {len(bs)} band estimates are positive at n = {n}; "
            "increase n or use smaller bands"
        )
    slope, intercept = np.polyfit(xs, ys, 1)
    fitted = np.polyval([slope, intercept], xs)
    ss_res = float(np.sum((np.asarray(ys) - fitted) ** 2))
    ss_tot = float(np.sum((np.asarray(ys) - np.mean(ys)) ** 2))
    r_squared = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return MarginDecayReport(
        angle=eta,
        b_grid=bs,
        estimates=ests,
        slope=float(slope),
        intercept=float(intercept),
        r_squared=r_squared,
        passed=float(slope) <= -0.3,
        grid_below_angle=bs[0] < eta,
        n=n,
    )


def _pava(values: np.ndarray) -> np.ndarray:
    """Least-squares nondecreasing fit by pooling adjacent violators."""
    vals = []
    counts = []
    for v in np.asarray(values, dtype=float):
        vals.append(float(v))
        counts.append(1)
        while len(vals) > 1 and vals[-2] > vals[-1]:
            total = counts[-1] + counts[-2]
            merged = (vals[-1] * counts[-1] + vals[-2] * counts[-2]) / total
            vals.pop()
            counts.pop()
            vals[-1] = merged
            counts[-1] = total
    return np.repeat(vals, counts)


def _invert_disagreement_angle(
    w: Hypothesis, dist: DistributionSpec, r: float, rng: RngLike, n_tab: int = 200_000
) -> float:
    """Angle phi at which mean disagreement with w reaches mass r.

    Tabulates disagreement over 64 angles and 4 rotation planes on a
    shared sample, enforces monotonicity in the angle by isotonic
    regression, and inverts by interpolation through (0, 0).
    """
    g_dirs = as_generator(_split(rng, 1))
    data_rng = _split(rng, 2)
    d = dist.d
    n_angles, n_planes = 64, 4
    phis = (math.pi / 2) * np.arange(1, n_angles + 1) / (n_angles + 1)
    rows = [w.w]
    for _ in range(n_planes):
        t = g_dirs.standard_normal(d)
        perp = t - (t @ w.w) * w.w
        pn = float(np.linalg.norm(perp))
        if pn == 0.0:
            continue
        perp /= pn
        for phi in phis:
            rows.append(math.cos(phi) * w.w + math.sin(phi) * perp)
    planes_used = (len(rows) - 1) // n_angles
    if planes_used == 0:
        raise CalibrationError("could not build any rotation plane around the target")
    dirs = np.stack(rows)
    hits = np.zeros(len(rows) - 1, dtype=np.int64)
    for block in sample_chunks(dist, n_tab, data_rng, chunk=_PAIR_CHUNK):
        margins = block @ dirs.T
        base = margins[:, :1] >= 0
        hits += np.sum((margins[:, 1:] >= 0) != base, axis=0)
    table = hits.reshape(planes_used, n_angles).mean(axis=0) / n_tab
    table = _pava(table)
    if r > table[-1]:
        raise CalibrationError(
            f"disagreement mass r = {r:g} exceeds the largest tabulated value {table[-1]:.4g}"
        )
    xp = np.concatenate([[0.0], table + 1e-15 * np.arange(1, n_angles + 1)])
    fp = np.concatenate([[0.0], phis])
    phi = float(np.interp(r, xp, fp))
    if not 0.0 < phi < math.pi / 2:
        raise CalibrationError(f"inverted angle {phi:g} is outside (0, pi/2)")
    return phi


def estimate_capacity(
    w_star, r: float, dist: DistributionSpec, n: int, rng: RngLike
) -> EstimateWithCI:
    """Disagreement-region mass of the radius-r ball, divided by r.

    The ball lives in the disagreement pseudo-metric.  For rotationally
    symmetric distributions its angular radius is exactly pi r; other
    distributions go through a tabulated inversion of disagreement mass
    against angle (``CalibrationError`` if r is beyond its range).
    """
    w = w_star if isinstance(w_star, Hypothesis) else unit_vector(w_star)
    if not 0.0 < r < 0.25:
        raise ValueError(f"r must be in (0, 1/4), got {r!r}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if dist.rotationally_symmetric:
        phi = math.pi * r
    else:
        phi = _invert_disagreement_angle(w, dist, r, _split(rng, 1))
    hits = 0
    for block in sample_chunks(dist, n, _split(rng, 2)):
        hits += int(np.sum(dis_membership_many(block, w, phi)))
    return EstimateWithCI.from_counts(hits, n).scaled(1.0 / r)


@dataclass(frozen=True)
class CapacityCurve:
    """Capacity estimates over a strictly increasing grid of radii."""

    points: Tuple[Tuple[float, EstimateWithCI], ...]

    def __post_init__(self):
        pts = tuple((float(r), est) for r, est in self.points)
        if not pts:
            raise ValueError("curve needs at least one point")
        if any(r2 <= r1 for (r1, _), (r2, _) in zip(pts, pts[1:])):
            raise ValueError("radii must be strictly increasing")
        object.__setattr__(self, "points", pts)

    @property
    def r_values(self) -> Tuple[float, ...]:
        return tuple(r for r, _ in self.points)

    @property
    def values(self) -> Tuple[float, ...]:
        return tuple(est.value for _, est in self.points)

    @property
    def sup_value(self) -> float:
        return max(self.values)


def estimate_dis_coefficient(
    w_star, dist: DistributionSpec, r_grid: Sequence[float], n: int, rng: RngLike
) -> CapacityCurve:
    """Capacity over a grid of radii; the curve's sup is the coefficient.

    All radii share one sample (and, for non-rotationally-symmetric
    distributions, one tabulated angle inversion), so the curve shape
    is free of independent-sample noise.
    """
    w = w_star if isinstance(w_star, Hypothesis) else unit_vector(w_star)
    rs = tuple(float(r) for r in r_grid)
    if not rs:
        raise ValueError("r_grid must be nonempty")
    if any(r2 <= r1 for r1, r2 in zip(rs, rs[1:])):
        raise ValueError("r_grid must be strictly increasing")
    if rs[0] <= 0.0 or rs[-1] >= 0.25:
        raise ValueError("r_grid values must lie in (0, 1/4)")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if dist.rotationally_symmetric:
        phi_values = [math.pi * r for r in rs]
    else:
        inv_rng = _split(rng, 1)
        phi_values = [
            _invert_disagreement_angle(w, dist, r, _split(inv_rng, i)) for i, r in enumerate(rs)
        ]
    sin_phis = np.sin(phi_values)
    hits = np.zeros(len(rs), dtype=np.int64)
    for block in sample_chunks(dist, n, _split(rng, 2)):
        norms = np.linalg.norm(block, axis=1)
        if np.any(norms == 0.0):
            raise DegeneratePointError("sample contains the zero vector")
        ratio = np.abs(block @ w.w) / norms
        hits += np.sum(ratio[:, None] <= sin_phis[None, :], axis=0)
    points = []
    for r, h in zip(rs, hits):
        points.append((r, EstimateWithCI.from_counts(int(h), n).scaled(1.0 / r)))
    return CapacityCurve(points=tuple(points))
