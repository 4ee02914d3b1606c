"""Label oracles, noise models, and excess-error measurement.

``LabelOracle`` is the single gateway through which learners see
labels; it counts every query so that label-complexity experiments
cannot under-report.  Excess error against the oracle's own target is
available in closed form for rotationally symmetric distributions and
by Monte Carlo otherwise; neither path touches the query counter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .distributions import DistributionSpec, RngLike, as_generator, sample_chunks
from .geometry import Hypothesis, angle, label_signs, _unit_array


@dataclass(frozen=True)
class NoiseModel:
    """Label-flip law as a function of the target margin |w* . x|.

    Three kinds: "none" (clean labels), "massart" (flip with any
    probability up to a constant eta < 1/2; realized here as exactly
    eta everywhere, the worst case), and "tsybakov" (flip probability
    approaching 1/2 near the decision boundary at a rate controlled by
    alpha, with tau setting the margin scale).
    """

    kind: str
    eta: float = 0.0
    alpha: float = 0.0
    tau: float = 0.0

    def __post_init__(self):
        if self.kind == "none":
            pass
        elif self.kind == "massart":
            if not 0.0 <= self.eta < 0.5:
                raise ValueError(f"massart eta must be in [0, 1/2), got {self.eta!r}")
        elif self.kind == "tsybakov":
            if not 0.0 < self.alpha < 1.0:
                raise ValueError(f"tsybakov alpha must be in (0, 1), got {self.alpha!r}")
            if not self.tau > 0.0:
                raise ValueError(f"tsybakov tau must be positive, got {self.tau!r}")
        else:
            raise ValueError(f"unknown noise kind {self.kind!r}")

    @classmethod
    def none(cls) -> "NoiseModel":
        return cls(kind="none")

    @classmethod
    def massart(cls, eta: float) -> "NoiseModel":
        return cls(kind="massart", eta=float(eta))

    @classmethod
    def tsybakov(cls, alpha: float, tau: float) -> "NoiseModel":
        return cls(kind="tsybakov", alpha=float(alpha), tau=float(tau))

    @classmethod
    def from_descriptor(cls, text: str) -> "NoiseModel":
        """Parse "none", "massart:<eta>", or "tsybakov:<alpha>:<tau>"."""
        parts = text.strip().split(":")
        if parts[0] == "none" and len(parts) == 1:
            return cls.none()
        if parts[0] == "massart" and len(parts) == 2:
            return cls.massart(float(parts[1]))
        if parts[0] == "tsybakov" and len(parts) == 3:
            return cls.tsybakov(float(parts[1]), float(parts[2]))
        raise ValueError(f"unrecognized noise descriptor {text!r}")

    def descriptor(self) -> str:
        if self.kind == "none":
            return "none"
        if self.kind == "massart":
            return f"massart:{self.eta:g}"
        return f"tsybakov:{self.alpha:g}:{self.tau:g}"

    def flip_probabilities(self, margins) -> np.ndarray:
        """Flip probability q(x) as a function of |w* . x|."""
        m = np.abs(np.asarray(margins, dtype=float))
        if self.kind == "none":
            return np.zeros_like(m)
        if self.kind == "massart":
            return np.full_like(m, self.eta)
        expo = (1.0 - self.alpha) / self.alpha
        return 0.5 * (1.0 - np.minimum(1.0, m / self.tau)) ** expo


@dataclass
class LabelOracle:
    """Stateful labeler around a hidden target halfspace.

    Every call to ``label`` or ``label_many`` advances ``queries_used``
    by the number of points labeled.  Noisy labels flip the clean sign
    independently with probability given by the noise model.
    """

    target: Hypothesis
    noise: NoiseModel = field(default_factory=NoiseModel.none)
    queries_used: int = 0

    def label(self, x, rng: RngLike) -> int:
        y = int(self.label_many(np.asarray(x, dtype=float)[None, :], rng)[0])
        return y

    def label_many(self, X, rng: RngLike) -> np.ndarray:
        arr = np.asarray(X, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != self.target.d:
            raise ValueError(f"X must be (n, {self.target.d}), got shape {arr.shape}")
        self.queries_used += arr.shape[0]
        return noisy_labels(self.target, self.noise, arr, rng)


def noisy_labels(target: Hypothesis, noise: NoiseModel, X, rng: RngLike) -> np.ndarray:
    """Labels from the target under the noise model; no query counting."""
    arr = np.asarray(X, dtype=float)
    margins = arr @ target.w
    y = label_signs(margins)
    if noise.kind == "none":
        return y
    g = as_generator(rng)
    flips = g.random(arr.shape[0]) < noise.flip_probabilities(margins)
    return np.where(flips, -y, y)


def excess_error(
    w: Union[Hypothesis, np.ndarray],
    oracle: LabelOracle,
    dist: DistributionSpec,
    n: int = 200_000,
    rng: Optional[RngLike] = None,
    method: str = "auto",
) -> float:
    """Excess risk of w over the oracle's target under its noise model.

    For clean or Massart labels the excess risk is (1 - 2 eta) times
    the disagreement mass, which for rotationally symmetric
    distributions is exactly angle(w, w*) / pi; that closed form is
    used when available.  Otherwise a Monte-Carlo estimate integrates
    (1 - 2 q(x)) over the disagreement region, which is exact in
    expectation for every noise kind here because q depends on x only.
    Never consumes oracle queries.
    """
    if method not in ("auto", "mc", "closed"):
        raise ValueError(f"method must be auto, mc, or closed, got {method!r}")
    wv = _unit_array(w, "w")
    closed_ok = dist.rotationally_symmetric and oracle.noise.kind in ("none", "massart")
    if method == "closed" and not closed_ok:
        raise ValueError("closed form needs a rotationally symmetric distribution and flat noise")
    if method == "closed" or (method == "auto" and closed_ok):
        theta = angle(wv, oracle.target)
        return (1.0 - 2.0 * oracle.noise.eta) * theta / math.pi
    if rng is None:
        raise ValueError("Monte-Carlo excess error needs an rng")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    tw = oracle.target.w
    total = 0.0
    for block in sample_chunks(dist, n, rng):
        margins = block @ tw
        disagree = label_signs(block @ wv) != label_signs(margins)
        q = oracle.noise.flip_probabilities(margins)
        total += float(np.sum((1.0 - 2.0 * q) * disagree))
    return total / n
