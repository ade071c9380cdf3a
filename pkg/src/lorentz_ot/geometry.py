"""Flat-spacetime geometry backend: events, causal structure, distances, minimizers.

Everything lives in a single global chart R^{1+n}.  A point is a numpy array
of shape (1+n,) whose first entry is the time coordinate; batches of points
are arrays of shape (N, 1+n).  Tangent vectors and covectors use the same
chart representation.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

# Vectors / point pairs within this distance of the light cone boundary are
# classified as causal, so rounding noise on null pairs never produces
# spurious infinite costs.
CAUSAL_TOL = 1e-12


class GeometryError(ValueError):
    pass


class DimensionMismatch(GeometryError):
    pass


class NotCausallyRelated(GeometryError):
    """Raised when a minimizer is requested for a pair outside J+."""


class NotCausal(GeometryError):
    """Raised when a flow step is requested for a vector outside the cone."""


class Causality(enum.Enum):
    CHRONOLOGICAL = "chronological"
    CAUSAL_NULL = "causal_null"
    INCOMPARABLE = "incomparable"


def _as_array(x, dim: int) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if a.shape[-1] != dim:
        raise DimensionMismatch(f"expected last axis {dim}, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise GeometryError("non-finite coordinates")
    return a


# -- chart-level Minkowski helpers (used by the Lagrangian layer as well) ----

def minkowski_quad(delta: np.ndarray) -> np.ndarray:
    """g-quadratic form with flipped sign: dt^2 - |dz|^2 for displacement dt,dz."""
    d2 = delta[..., 0] ** 2 - np.sum(delta[..., 1:] ** 2, axis=-1)
    return d2


def lorentz_norm(delta: np.ndarray) -> np.ndarray:
    """|v|_g = sqrt(|dt^2 - |dz|^2|)."""
    return np.sqrt(np.abs(minkowski_quad(delta)))


def euclid_norm(delta: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(delta**2, axis=-1))


def causal_margin(delta: np.ndarray) -> np.ndarray:
    """dt - |dz|: nonnegative (up to tolerance) iff future-directed causal."""
    return delta[..., 0] - euclid_norm(delta[..., 1:])


def is_causal_delta(delta: np.ndarray) -> np.ndarray:
    scale = 1.0 + euclid_norm(delta)
    return causal_margin(delta) >= -CAUSAL_TOL * scale


def causal_distance(delta: np.ndarray) -> np.ndarray:
    """Time separation for a displacement: sqrt(dt^2-|dz|^2) on the cone, else 0."""
    q = minkowski_quad(delta)
    causal = is_causal_delta(delta)
    return np.where(causal, np.sqrt(np.maximum(q, 0.0)), 0.0)


@dataclass(frozen=True)
class MinimizerCurve:
    """Action-minimizing curve gamma:[0,t] -> M between causally related events.

    In the flat chart the minimizer is the straight segment with affine
    parametrization, which makes L(gamma, gamma') constant automatically.
    """

    start: np.ndarray
    end: np.ndarray
    duration: float

    def __post_init__(self):
        if self.duration <= 0:
            raise GeometryError("curve duration must be positive")

    @property
    def displacement(self) -> np.ndarray:
        return self.end - self.start

    def point(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        frac = s / self.duration
        return self.start + np.multiply.outer(frac, self.displacement)

    def velocity(self, s=None) -> np.ndarray:
        # affine parametrization: constant velocity
        return self.displacement / self.duration


class Geometry:
    """Interface contract for a spacetime backend.

    Required: temporal function tau with the growth bound
    dtau(v) >= max(|v|_h, 2|v|_g) on the causal cone, the cone test, the
    Lorentzian distance, and minimizers with constant Lagrangian along the
    parametrization.  Only the flat implementation ships; curved backends
    plug in here.
    """

    n: int

    @property
    def dim(self) -> int:
        return self.n + 1

    def tau(self, x) -> float | np.ndarray:
        raise NotImplementedError

    def dtau(self, x, v) -> float | np.ndarray:
        raise NotImplementedError

    def g_norm(self, x, v):
        raise NotImplementedError

    def h_norm(self, x, v):
        raise NotImplementedError

    def h_distance(self, x, y):
        raise NotImplementedError

    def is_causal_vector(self, v, at=None):
        raise NotImplementedError

    def is_timelike_vector(self, v, at=None):
        raise NotImplementedError

    def causal_relation(self, x, y) -> Causality:
        raise NotImplementedError

    def lorentz_distance(self, x, y):
        raise NotImplementedError

    def minimizer(self, x, y, t: float) -> MinimizerCurve:
        raise NotImplementedError

    def flow_step(self, x, v, s: float):
        raise NotImplementedError

    def describe(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Minkowski(Geometry):
    """R^{1,n} with metric -dt^2 + |dz|^2, auxiliary h = Euclidean, tau = 2t.

    tau = 2t is the smallest clean constant multiple of the time coordinate
    satisfying dtau(v) >= max(|v|_h, 2|v|_g) on the cone: for causal v,
    2 v_t >= sqrt(2) v_t >= |v|_h and 2 v_t >= 2 sqrt(v_t^2 - |v_z|^2).
    """

    n: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise GeometryError("spatial dimension must be >= 1")

    # tau and derivatives -----------------------------------------------------

    def tau(self, x):
        x = _as_array(x, self.dim)
        return 2.0 * x[..., 0]

    def dtau(self, x, v):
        v = _as_array(v, self.dim)
        return 2.0 * v[..., 0]

    def g_norm(self, x, v):
        return lorentz_norm(_as_array(v, self.dim))

    def h_norm(self, x, v):
        return euclid_norm(_as_array(v, self.dim))

    def h_distance(self, x, y):
        x = _as_array(x, self.dim)
        y = _as_array(y, self.dim)
        return euclid_norm(y - x)

    # causal structure --------------------------------------------------------

    def is_causal_vector(self, v, at=None):
        return is_causal_delta(_as_array(v, self.dim))

    def is_timelike_vector(self, v, at=None):
        v = _as_array(v, self.dim)
        scale = 1.0 + euclid_norm(v)
        return causal_margin(v) > CAUSAL_TOL * scale

    def causal_relation(self, x, y) -> Causality:
        x = _as_array(x, self.dim)
        y = _as_array(y, self.dim)
        delta = y - x
        scale = 1.0 + euclid_norm(delta)
        tol = CAUSAL_TOL * scale
        margin = causal_margin(delta)
        if euclid_norm(delta) <= tol:
            return Causality.CAUSAL_NULL
        if margin > tol:
            return Causality.CHRONOLOGICAL
        if margin >= -tol:
            return Causality.CAUSAL_NULL
        return Causality.INCOMPARABLE

    def in_causal_future(self, x, y) -> bool:
        return self.causal_relation(x, y) is not Causality.INCOMPARABLE

    def lorentz_distance(self, x, y):
        x = _as_array(x, self.dim)
        y = _as_array(y, self.dim)
        return float(causal_distance(y - x))

    # minimizers and flow -----------------------------------------------------

    def minimizer(self, x, y, t: float) -> MinimizerCurve:
        x = _as_array(x, self.dim)
        y = _as_array(y, self.dim)
        if t <= 0:
            raise GeometryError("duration must be positive")
        if self.causal_relation(x, y) is Causality.INCOMPARABLE:
            raise NotCausallyRelated(f"target {y} not in the causal future of {x}")
        return MinimizerCurve(start=x, end=y, duration=float(t))

    def flow_step(self, x, v, s: float):
        x = _as_array(x, self.dim)
        v = _as_array(v, self.dim)
        if not bool(self.is_causal_vector(v)):
            raise NotCausal(f"vector {v} is outside the future cone")
        return x + s * v, v.copy()

    def describe(self) -> dict:
        return {"geometry": "minkowski", "spatial_dim": self.n}


def geometry_from_header(header: dict) -> Geometry:
    """Build a Geometry from the instance JSON header."""
    kind = header.get("geometry")
    if kind != "minkowski":
        raise GeometryError(f"unknown geometry {kind!r}; built-in: 'minkowski'")
    return Minkowski(n=int(header["spatial_dim"]))
