"""Unit-vector hypotheses and exact halfspace geometry.

A homogeneous halfspace labels a point x by the sign of w . x for a
unit vector w.  This module holds the vector primitives everything
else is built on: angles between hypotheses, controlled rotations
inside a plane, and the closed-form membership test for the
disagreement region of an angular ball of hypotheses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegeneratePointError,
    DegenerateRotationError,
    DimensionMismatchError,
)

#: Unit-norm tolerance enforced by the Hypothesis constructor.
NORM_TOL = 1e-9

_PARALLEL_TOL = 1e-12


def _vector(v, name: str = "x") -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size < 2:
        raise ValueError(f"{name} needs dimension >= 2, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def label_signs(values):
    """Sign labels in {-1, +1} for an array of margins, with 0 -> +1."""
    return np.where(np.asarray(values) >= 0, 1, -1)


@dataclass(frozen=True, eq=False)
class Hypothesis:
    """A unit-norm weight vector defining the halfspace x -> sign(w . x)."""

    w: np.ndarray

    def __post_init__(self):
        arr = _vector(self.w, "w").copy()
        norm = float(np.linalg.norm(arr))
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"||w|| must be 1 within {NORM_TOL:g}, got {norm!r}")
        arr.setflags(write=False)
        object.__setattr__(self, "w", arr)

    @property
    def d(self) -> int:
        return int(self.w.size)

    def __repr__(self) -> str:
        coords = np.array2string(self.w, precision=4, threshold=6)
        return f"Hypothesis({coords})"


@dataclass(frozen=True, eq=False)
class LabeledExample:
    """A feature vector with its binary label in {-1, +1}."""

    x: np.ndarray
    y: int

    def __post_init__(self):
        arr = _vector(self.x, "x").copy()
        arr.setflags(write=False)
        object.__setattr__(self, "x", arr)
        y = self.y
        if y not in (-1, 1):
            raise ValueError(f"y must be -1 or +1, got {y!r}")
        object.__setattr__(self, "y", int(y))


def unit_vector(v) -> Hypothesis:
    """Normalize a nonzero vector into a Hypothesis."""
    arr = _vector(v, "v")
    norm = float(np.linalg.norm(arr))
    if norm == 0.0:
        raise ValueError("cannot normalize the zero vector")
    return Hypothesis(arr / norm)


def _unit_array(u, name: str) -> np.ndarray:
    if isinstance(u, Hypothesis):
        return u.w
    arr = _vector(u, name)
    norm = float(np.linalg.norm(arr))
    if norm == 0.0:
        raise ValueError(f"{name} is the zero vector")
    return arr / norm


def angle(u, v) -> float:
    """Angle in [0, pi] between two hypotheses (or unit directions)."""
    uw = _unit_array(u, "u")
    vw = _unit_array(v, "v")
    if uw.size != vw.size:
        raise DimensionMismatchError(f"dimension mismatch: {uw.size} vs {vw.size}")
    # clamp guards floating-point drift outside arccos' domain
    dot = float(np.clip(np.dot(uw, vw), -1.0, 1.0))
    return float(math.acos(dot))


def predict(w: Hypothesis, x) -> int:
    """Label of x under w: sign(w . x), with the tie sign(0) = +1."""
    xv = _vector(x, "x")
    if xv.size != w.d:
        raise DimensionMismatchError(f"dimension mismatch: {w.d} vs {xv.size}")
    return 1 if float(np.dot(w.w, xv)) >= 0.0 else -1


def rotate_towards(w, t, phi: float) -> Hypothesis:
    """Rotate ``w`` towards ``t`` by ``phi`` radians inside span{w, t}.

    Parameters
    ----------
    w, t : Hypothesis
        Source direction and rotation target.  ``t`` fixes the plane
        and the sense of the rotation; it must not be parallel to ``w``.
    phi : float
        Rotation magnitude, ``0 <= phi <= angle(w, t)``.

    Returns
    -------
    Hypothesis
        Unit vector in span{w, t} with ``angle(result, w) == phi`` and
        ``angle(result, t) == angle(w, t) - phi``, both within 1e-8.
    """
    uw = _unit_array(w, "w")
    tw = _unit_array(t, "t")
    if uw.size != tw.size:
        raise DimensionMismatchError(f"dimension mismatch: {uw.size} vs {tw.size}")
    theta = angle(uw, tw)
    if not 0.0 <= phi <= theta + 1e-12:
        raise ValueError(f"phi must lie in [0, angle(w,t)] = [0, {theta:.6g}], got {phi!r}")
    perp = tw - np.dot(tw, uw) * uw
    norm = float(np.linalg.norm(perp))
    if norm < _PARALLEL_TOL:
        raise DegenerateRotationError("t is parallel to w; the rotation plane is undefined")
    out = math.cos(phi) * uw + math.sin(phi) * (perp / norm)
    return unit_vector(out)


def dis_membership(x, center: Hypothesis, phi: float) -> bool:
    """Whether some hypothesis within angle ``phi`` of ``center`` disagrees on x.

    Exact for homogeneous halfspaces: x belongs to the disagreement
    region of the angular ball iff ``|center . x| / ||x|| <= sin(phi)``,
    i.e. iff the angular distance from x to the boundary of ``center``
    is at most ``phi``.
    """
    if not 0.0 <= phi < math.pi / 2:
        raise ValueError(f"phi must lie in [0, pi/2), got {phi!r}")
    xv = _vector(x, "x")
    if xv.size != center.d:
        raise DimensionMismatchError(f"dimension mismatch: {center.d} vs {xv.size}")
    nx = float(np.linalg.norm(xv))
    if nx == 0.0:
        raise DegeneratePointError("x = 0 lies on every halfspace boundary")
    return bool(abs(float(np.dot(center.w, xv))) <= math.sin(phi) * nx)


def dis_membership_many(X, center: Hypothesis, phi: float) -> np.ndarray:
    """Vectorized dis_membership over the rows of X."""
    if not 0.0 <= phi < math.pi / 2:
        raise ValueError(f"phi must lie in [0, pi/2), got {phi!r}")
    arr = np.asarray(X, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != center.d:
        raise DimensionMismatchError(f"X must have shape (n, {center.d}), got {arr.shape}")
    norms = np.linalg.norm(arr, axis=1)
    if np.any(norms == 0.0):
        raise DegeneratePointError("X contains a zero row")
    return np.abs(arr @ center.w) <= math.sin(phi) * norms


@dataclass(frozen=True, eq=False)
class AngularBall:
    """Ball of hypotheses within a fixed angle of a center hypothesis."""

    center: Hypothesis
    radius: float

    def __post_init__(self):
        r = float(self.radius)
        if not 0.0 <= r <= math.pi:
            raise ValueError(f"radius must lie in [0, pi], got {self.radius!r}")
        object.__setattr__(self, "radius", r)

    def contains(self, h) -> bool:
        return angle(self.center, h) <= self.radius + 1e-12

    def project(self, v) -> Hypothesis:
        """Geodesic projection of a direction onto the ball."""
        h = v if isinstance(v, Hypothesis) else unit_vector(v)
        theta = angle(self.center, h)
        if theta <= self.radius:
            return h
        if self.radius == 0.0:
            return self.center
        # constructed directly rather than via rotate_towards: near the
        # arccos resolution floor a recomputed angle can disagree with
        # theta, and the rotation needs no second validation here
        c = self.center.w
        perp = h.w - np.dot(h.w, c) * c
        norm = float(np.linalg.norm(perp))
        if norm < _PARALLEL_TOL:
            if theta < math.pi / 2:
                # numerically indistinguishable from the center
                return h
            # antipodal input: every boundary point is equally near; pick
            # a deterministic plane through the least-aligned axis
            axis = np.zeros(self.center.d)
            axis[int(np.argmin(np.abs(c)))] = 1.0
            perp = axis - np.dot(axis, c) * c
            norm = float(np.linalg.norm(perp))
        return unit_vector(math.cos(self.radius) * c + math.sin(self.radius) * (perp / norm))
