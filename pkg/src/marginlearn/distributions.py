"""Seedable samplers for isotropic and nearly log-concave distributions.

Three base families cover the regimes the learners are analyzed under:
the standard Gaussian, the uniform ball rescaled to identity
covariance, and an equal-weight two-Gaussian mixture re-isotropized by
a closed-form affine map.  ``apply_affine`` produces non-isotropic
variants, and ``estimate_whitening`` implements the second-moment
inverse-square-root reduction that maps them back.

All sampling is driven by ``RandomStream`` values: immutable
(seed, stream_id) pairs that reproduce draws bit-exactly and can be
split into independent child streams for parallel Monte Carlo.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Optional, Tuple, Union

import numpy as np

from .errors import RankDeficientError

_MIX64 = 0x9E3779B97F4A7C15
_MIX64B = 0xBF58476D1CE4E5B9
_U64 = 1 << 64

#: Default chunk length for streaming Monte-Carlo estimators.
CHUNK = 1 << 18


@dataclass(frozen=True)
class RandomStream:
    """Immutable seed for reproducible sampling.

    Identical (seed, stream_id) pairs reproduce identical draws
    bit-exactly on one build.  ``child`` derives statistically
    independent streams deterministically.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or not 0 <= int(v) < _U64:
                raise ValueError(f"{name} must be an integer in [0, 2^64), got {v!r}")
            object.__setattr__(self, name, int(v))

    def generator(self) -> np.random.Generator:
        """A fresh numpy Generator seeded by (seed, stream_id)."""
        return np.random.default_rng((self.seed, self.stream_id))

    def child(self, k: int) -> "RandomStream":
        """Derived stream k; distinct k give independent streams."""
        if k < 0:
            raise ValueError(f"child index must be nonnegative, got {k!r}")
        mixed = (self.stream_id * _MIX64 + (k + 1) * _MIX64B) % _U64
        return RandomStream(self.seed, mixed)


RngLike = Union[RandomStream, np.random.Generator]


def as_generator(rng: RngLike) -> np.random.Generator:
    """Accept either a RandomStream or a live numpy Generator."""
    if isinstance(rng, RandomStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RandomStream or numpy Generator, got {type(rng).__name__}")


@dataclass(frozen=True, eq=False)
class DistributionSpec:
    """Declarative description of a sampleable zero-mean distribution on R^d.

    Instances come from the ``make_*`` constructors and ``apply_affine``;
    the fields beyond ``kind`` and ``d`` are kind-specific.  ``beta``
    records the log-concavity defect measured for mixture specs (0 for
    the exactly log-concave families).
    """

    kind: str
    d: int
    name: str
    isotropic: bool
    rotationally_symmetric: bool
    radius: Optional[float] = None
    means: Optional[np.ndarray] = None
    weights: Optional[np.ndarray] = None
    comp_scale: Optional[np.ndarray] = None
    beta: float = 0.0
    inner: Optional["DistributionSpec"] = None
    matrix: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in ("gaussian", "uniform_ball", "gaussian_mixture", "affine"):
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        if self.d < 2:
            raise ValueError(f"dimension must be >= 2, got {self.d}")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if np.any(w < 0) or abs(float(w.sum()) - 1.0) > 1e-12:
                raise ValueError("mixture weights must be nonnegative and sum to 1")
        for name in ("means", "weights", "comp_scale", "matrix"):
            v = getattr(self, name)
            if v is not None:
                arr = np.asarray(v, dtype=float).copy()
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)

    def __repr__(self) -> str:
        return f"DistributionSpec({self.name!r}, d={self.d})"


def make_gaussian(d: int) -> DistributionSpec:
    """Standard Gaussian on R^d (isotropic, rotationally symmetric)."""
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    return DistributionSpec(
        kind="gaussian", d=d, name="gaussian", isotropic=True, rotationally_symmetric=True
    )


def make_uniform_ball(d: int) -> DistributionSpec:
    """Uniform distribution on the ball of radius sqrt(d+2).

    A uniform ball of radius R has E||x||^2 = R^2 d / (d+2), so this
    radius is exactly the one making the spec isotropic.
    """
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    return DistributionSpec(
        kind="uniform_ball",
        d=d,
        name="ball",
        isotropic=True,
        rotationally_symmetric=True,
        radius=math.sqrt(d + 2),
    )


def midpoint_log_concavity_defect(logpdf, lo: float, hi: float, grid: int = 601) -> float:
    """Largest midpoint defect of a 1-d log-density over [lo, hi].

    Returns sup over grid pairs (x1, x2) of
    (logpdf(x1) + logpdf(x2)) / 2 - logpdf((x1 + x2) / 2), clamped at 0.
    Zero characterizes log-concave densities; a positive value is the
    beta of a nearly log-concave one.
    """
    xs = np.linspace(lo, hi, grid)
    h = logpdf(xs)
    mids = logpdf((xs[:, None] + xs[None, :]) / 2.0)
    defect = (h[:, None] + h[None, :]) / 2.0 - mids
    return float(max(0.0, float(np.max(defect))))


def _mixture_axis_logpdf(m: float, sigma: float):
    """Log-density of the 1-d marginal 0.5 N(m, s^2) + 0.5 N(-m, s^2)."""
    const = math.log(0.5) - math.log(sigma * math.sqrt(2 * math.pi))

    def logpdf(x):
        x = np.asarray(x, dtype=float)
        a = -((x - m) ** 2) / (2 * sigma * sigma)
        b = -((x + m) ** 2) / (2 * sigma * sigma)
        return np.logaddexp(a, b) + const

    return logpdf


def make_beta_mixture(d: int, separation: float) -> DistributionSpec:
    """Equal-weight two-Gaussian mixture, re-isotropized in closed form.

    The raw mixture has unit-covariance components with means
    +-(separation/2) e1 and overall covariance I + (separation^2/4)
    e1 e1^T; rescaling the first coordinate by its inverse square root
    restores identity covariance exactly.  The measured log-concavity
    defect of the e1 marginal is stored as ``beta`` (zero throughout
    the admitted range separation <= 2, where the marginal is
    unimodal and hence exactly log-concave).
    """
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    if separation < 0:
        raise ValueError(f"separation must be >= 0, got {separation!r}")
    if separation > 2:
        raise ValueError(f"separation must be <= 2 to stay nearly log-concave, got {separation!r}")
    if separation == 0:
        return make_gaussian(d)
    scale1 = 1.0 / math.sqrt(1.0 + separation * separation / 4.0)
    m = (separation / 2.0) * scale1
    mean = np.zeros(d)
    mean[0] = m
    comp_scale = np.ones(d)
    comp_scale[0] = scale1
    logpdf = _mixture_axis_logpdf(m, scale1)
    span = m + 8.0 * scale1
    beta = midpoint_log_concavity_defect(logpdf, -span, span)
    if beta < 1e-9:
        beta = 0.0
    return DistributionSpec(
        kind="gaussian_mixture",
        d=d,
        name=f"mixture:{separation:g}",
        isotropic=True,
        rotationally_symmetric=False,
        means=np.stack([mean, -mean]),
        weights=np.array([0.5, 0.5]),
        comp_scale=comp_scale,
        beta=beta,
    )


def apply_affine(spec: DistributionSpec, A) -> DistributionSpec:
    """Spec whose samples are A x for x drawn from ``spec``.

    Zero mean is preserved; the result is flagged non-isotropic and the
    learners expect it to go through the whitening reduction.
    """
    mat = np.asarray(A, dtype=float)
    if mat.shape != (spec.d, spec.d):
        raise ValueError(f"A must be {spec.d}x{spec.d}, got shape {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise ValueError("A contains non-finite entries")
    if np.linalg.cond(mat) > 1e12:
        raise ValueError("A is singular or near-singular")
    return DistributionSpec(
        kind="affine",
        d=spec.d,
        name=f"affine({spec.name})",
        isotropic=False,
        rotationally_symmetric=False,
        inner=spec,
        matrix=mat,
    )


def _sample_g(spec: DistributionSpec, n: int, g: np.random.Generator) -> np.ndarray:
    if spec.kind == "gaussian":
        return g.standard_normal((n, spec.d))
    if spec.kind == "uniform_ball":
        z = g.standard_normal((n, spec.d))
        norms = np.linalg.norm(z, axis=1)
        norms[norms == 0.0] = 1.0
        radii = spec.radius * g.random(n) ** (1.0 / spec.d)
        return z * (radii / norms)[:, None]
    if spec.kind == "gaussian_mixture":
        pick = g.random(n) < spec.weights[0]
        z = g.standard_normal((n, spec.d)) * spec.comp_scale
        return z + np.where(pick[:, None], spec.means[0], spec.means[1])
    if spec.kind == "affine":
        return _sample_g(spec.inner, n, g) @ spec.matrix.T
    raise ValueError(f"unknown distribution kind {spec.kind!r}")


def sample(spec: DistributionSpec, n: int, rng: RngLike) -> np.ndarray:
    """Draw n i.i.d. vectors as an (n, d) array, deterministic given rng."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return _sample_g(spec, n, as_generator(rng))


def sample_chunks(spec: DistributionSpec, n: int, rng: RngLike, chunk: int = CHUNK) -> Iterator[np.ndarray]:
    """Yield the same n draws as ``sample`` in memory-bounded chunks."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    g = as_generator(rng)
    remaining = n
    while remaining > 0:
        take = min(chunk, remaining)
        yield _sample_g(spec, take, g)
        remaining -= take


@dataclass(frozen=True, eq=False)
class WhiteningTransform:
    """Estimated inverse square root of a second-moment matrix."""

    matrix: np.ndarray
    n_used: int

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=float).copy()
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"matrix must be square, got shape {mat.shape}")
        if np.max(np.abs(mat - mat.T)) > 1e-6:
            raise ValueError("matrix must be symmetric within 1e-6")
        if np.linalg.eigvalsh(mat)[0] <= 0:
            raise ValueError("matrix must be positive definite")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @property
    def d(self) -> int:
        return int(self.matrix.shape[0])

    def transform(self, X) -> np.ndarray:
        """Apply the whitening map to rows of X (or to one vector)."""
        arr = np.asarray(X, dtype=float)
        return arr @ self.matrix  # symmetric, so right-multiplication is M x per row


def estimate_whitening(samples) -> WhiteningTransform:
    """Whitening transform from the empirical second-moment matrix.

    All supported specs are zero-mean, so the second-moment matrix
    coincides with the covariance and no mean estimate is needed.
    Requires at least 10 d^2 samples; raises ``RankDeficientError``
    when the matrix is singular or has condition number above 1e12.
    """
    X = np.asarray(samples, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"samples must be a 2-d array, got shape {X.shape}")
    n, d = X.shape
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    if n < 10 * d * d:
        raise ValueError(f"need at least 10 d^2 = {10 * d * d} samples, got {n}")
    if not np.all(np.isfinite(X)):
        raise ValueError("samples contain non-finite entries")
    second_moment = X.T @ X / n
    vals, vecs = np.linalg.eigh(second_moment)
    if vals[0] <= 0 or vals[-1] / vals[0] > 1e12:
        raise RankDeficientError(
            f"second-moment matrix is rank-deficient (eigenvalue range [{vals[0]:.3g}, {vals[-1]:.3g}])"
        )
    M = (vecs * (vals ** -0.5)) @ vecs.T
    return WhiteningTransform(matrix=(M + M.T) / 2.0, n_used=n)


@dataclass(frozen=True)
class IsotropyAudit:
    """Sample-based audit of zero mean and unit directional second moments."""

    mean_norm: float
    mean_bound: float
    worst_direction_dev: float
    direction_bound: float
    n: int

    @property
    def passed(self) -> bool:
        return self.mean_norm <= self.mean_bound and self.worst_direction_dev <= self.direction_bound


def isotropy_audit(
    spec: DistributionSpec,
    n: int,
    rng: RngLike,
    n_directions: int = 20,
    mean_bound: Optional[float] = None,
    direction_bound: float = 0.03,
) -> IsotropyAudit:
    """Audit |mean| and per-direction second moments on n fresh samples.

    Runs on any spec regardless of its isotropy flag, so it doubles as
    the negative control for deliberately non-isotropic inputs.
    """
    if isinstance(rng, RandomStream):
        dir_g = rng.child(1).generator()
        data_rng: RngLike = rng.child(2)
    else:
        dir_g = rng
        data_rng = rng
    dirs = dir_g.standard_normal((n_directions, spec.d))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    total = np.zeros(spec.d)
    sq = np.zeros(n_directions)
    for block in sample_chunks(spec, n, data_rng):
        total += block.sum(axis=0)
        sq += np.square(block @ dirs.T).sum(axis=0)
    mean_norm = float(np.linalg.norm(total / n))
    worst = float(np.max(np.abs(sq / n - 1.0)))
    if mean_bound is None:
        mean_bound = 0.01 * math.sqrt(spec.d)
    return IsotropyAudit(
        mean_norm=mean_norm,
        mean_bound=mean_bound,
        worst_direction_dev=worst,
        direction_bound=direction_bound,
        n=n,
    )
