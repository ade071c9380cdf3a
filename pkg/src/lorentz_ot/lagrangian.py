"""Lagrangian layer: L, the cost family c_t, Legendre transform, Hamiltonian.

The Lagrangian is L(v) = (dtau(v) - |v|_g)^2 on the future cone and +inf
outside.  Its minimal time-t action between causally related events has the
closed form c_t(x,y) = (tau(y) - tau(x) - d(x,y))^2 / t, which the whole
transport pipeline is built on.  Infinity is represented by IEEE inf; the LP
layer drops non-finite edges instead of encoding them as large floats.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .geometry import (
    CAUSAL_TOL,
    Causality,
    Geometry,
    MinimizerCurve,
    Minkowski,
    causal_distance,
    causal_margin,
    euclid_norm,
    is_causal_delta,
)

INF = float("inf")


class LagrangianError(ValueError):
    pass


class NonpositiveTime(LagrangianError):
    pass


class NotTimelike(LagrangianError):
    """L is not differentiable on the cone boundary; fiber derivatives need int(C)."""


class NotChronological(LagrangianError):
    """Cost super-differentials exist only on I+ where the cost is semiconcave."""


class InDualCone(LagrangianError):
    """p with pv <= 0 for every causal v is outside the Legendre image."""


class NoConvergence(LagrangianError):
    pass


# -- chart-level kernel: m(delta) = (2 dt - d(delta))^2 on the cone ----------
# m equals L on fibers and t * c_t on causal displacements.  It is convex and
# 2-homogeneous; its Hessian is 0-homogeneous and positive definite strictly
# inside the cone.

def _metric_flip(delta: np.ndarray) -> np.ndarray:
    """G delta with G = diag(1, -1, ..., -1)."""
    out = -delta.copy()
    out[..., 0] = delta[..., 0]
    return out


def m_value(delta: np.ndarray) -> np.ndarray:
    """(2 dt - d)^2 on the causal cone, +inf outside (vectorized)."""
    delta = np.asarray(delta, dtype=float)
    causal = is_causal_delta(delta)
    d = causal_distance(delta)
    val = (2.0 * delta[..., 0] - d) ** 2
    return np.where(causal, val, INF)


def m_grad(delta: np.ndarray) -> np.ndarray:
    """Gradient of m, valid strictly inside the cone (vectorized).

    Outside the strict cone the entries are inf/nan; callers mask them.
    """
    delta = np.asarray(delta, dtype=float)
    d = causal_distance(delta)
    gd = _metric_flip(delta)
    a = np.zeros_like(delta)
    a[..., 0] = 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        a -= gd / d[..., None]
    return 2.0 * (2.0 * delta[..., 0] - d)[..., None] * a


def m_hess(delta: np.ndarray) -> np.ndarray:
    """Hessian of m at a strictly timelike displacement."""
    delta = np.asarray(delta, dtype=float)
    dim = delta.shape[-1]
    d = causal_distance(delta)
    gd = _metric_flip(delta)
    a = np.zeros_like(delta)
    a[..., 0] = 2.0
    g = np.diag([1.0] + [-1.0] * (dim - 1))
    with np.errstate(divide="ignore", invalid="ignore"):
        a -= gd / d[..., None]
        outer_a = a[..., :, None] * a[..., None, :]
        outer_gd = gd[..., :, None] * gd[..., None, :]
        hess_d = g / d[..., None, None] - outer_gd / (d**3)[..., None, None]
    return 2.0 * outer_a - 2.0 * (2.0 * delta[..., 0] - d)[..., None, None] * hess_d


def _require_minkowski(g: Geometry):
    if not isinstance(g, Minkowski):
        raise NotImplementedError(
            "fiber-derivative closed forms are implemented for the flat backend"
        )


# -- Lagrangian and cost ------------------------------------------------------

def lagrangian(g: Geometry, v) -> float:
    """L(v) = (dtau(v) - |v|_g)^2 for causal v, +inf otherwise."""
    _require_minkowski(g)
    return float(m_value(np.asarray(v, dtype=float)))


def cost(g: Geometry, t: float, x, y) -> float:
    """Minimal time-t action c_t(x,y); +inf off J+. Satisfies c_t = c_1 / t."""
    if t <= 0:
        raise NonpositiveTime(f"cost needs t > 0, got {t}")
    _require_minkowski(g)
    delta = np.asarray(y, dtype=float) - np.asarray(x, dtype=float)
    return float(m_value(delta)) / t


def cost_batch(g: Geometry, t: float, x, y) -> np.ndarray:
    """Vectorized c_t over broadcastable point arrays."""
    if t <= 0:
        raise NonpositiveTime(f"cost needs t > 0, got {t}")
    _require_minkowski(g)
    delta = np.asarray(y, dtype=float) - np.asarray(x, dtype=float)
    return m_value(delta) / t


def cost_matrix(g: Geometry, t: float, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """c_t on every source-target pair; entry [i, j] = c_t(xs[i], ys[j])."""
    return cost_batch(g, t, xs[:, None, :], ys[None, :, :])


def action(g: Geometry, curve: MinimizerCurve, n_samples: int = 64) -> float:
    """Composite-Simpson quadrature of the Lagrangian action along a curve."""
    if n_samples < 2:
        raise LagrangianError("need at least 2 quadrature intervals")
    n = n_samples + (n_samples % 2)  # Simpson needs an even interval count
    s = np.linspace(0.0, curve.duration, n + 1)
    pts = curve.point(s)
    vel = np.broadcast_to(curve.velocity(), pts.shape)
    lvals = m_value(vel)
    weights = np.ones(n + 1)
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    h = curve.duration / n
    return float(np.sum(weights * lvals) * h / 3.0)


# -- fiber derivatives, Legendre transform, Hamiltonian -----------------------

def dLdv(g: Geometry, v) -> np.ndarray:
    """Fiber gradient of L at a strictly timelike vector."""
    _require_minkowski(g)
    v = np.asarray(v, dtype=float)
    if not bool(g.is_timelike_vector(v)):
        raise NotTimelike(f"{v} is not strictly timelike")
    return m_grad(v)


def legendre(g: Geometry, v) -> np.ndarray:
    """Legendre transform int(C) -> T*M \\ C*: v -> dL/dv(v)."""
    return dLdv(g, v)


def in_dual_cone(g: Geometry, p) -> bool:
    """True iff p v <= 0 for every causal v (closed dual future cone)."""
    _require_minkowski(g)
    p = np.asarray(p, dtype=float)
    return bool(p[..., 0] + euclid_norm(p[..., 1:]) <= 0.0)


def legendre_inverse(
    g: Geometry, p, tol: float = 1e-12, max_iter: int = 200
) -> np.ndarray:
    """Invert the Legendre transform by damped Newton with the analytic Hessian.

    Steps that leave the cone or fail to reduce the residual are bisected back
    toward the current (timelike) iterate.
    """
    _require_minkowski(g)
    p = np.asarray(p, dtype=float)
    if in_dual_cone(g, p):
        raise InDualCone(f"{p} lies in the dual future cone")
    pnorm = euclid_norm(p)
    v = np.zeros_like(p)
    v[0] = max(pnorm / 2.0, 1e-6)

    def residual(w):
        return m_grad(w) - p

    res = residual(v)
    rnorm = euclid_norm(res)
    target = tol * (1.0 + pnorm)
    for _ in range(max_iter):
        if rnorm <= target:
            return v
        step = np.linalg.solve(m_hess(v), -res)
        alpha = 1.0
        for _ in range(60):
            cand = v + alpha * step
            if causal_margin(cand) > CAUSAL_TOL * (1.0 + euclid_norm(cand)):
                cand_res = residual(cand)
                cand_norm = euclid_norm(cand_res)
                if cand_norm < rnorm:
                    v, res, rnorm = cand, cand_res, cand_norm
                    break
            alpha *= 0.5
        else:
            # fully stuck: restart on the cone axis at a different scale
            v = np.zeros_like(p)
            v[0] = max(pnorm, 1e-6)
            res = residual(v)
            rnorm = euclid_norm(res)
    if rnorm <= target:
        return v
    raise NoConvergence(f"legendre_inverse failed after {max_iter} iterations")


def hamiltonian(g: Geometry, p) -> float:
    """H(p) = sup_v p v - L(v), evaluated at the Legendre critical point."""
    v = legendre_inverse(g, p)
    p = np.asarray(p, dtype=float)
    return float(np.dot(p, v) - m_value(v))


# -- cost super-differential (reaching gradient triple) ------------------------

@dataclass(frozen=True)
class CostSuperDifferential:
    """Super-differential of (t,x,y) -> c_t(x,y) at a chronological pair."""

    dt: float
    dx: np.ndarray
    dy: np.ndarray


def cost_superdifferential(g: Geometry, t: float, x, y) -> CostSuperDifferential:
    """(d/dt c_t, -dL/dv at gamma'(0), dL/dv at gamma'(t)) for the minimizer.

    The time derivative uses the identity c_t = c_1 / t exactly.
    """
    if t <= 0:
        raise NonpositiveTime(f"need t > 0, got {t}")
    _require_minkowski(g)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if g.causal_relation(x, y) is not Causality.CHRONOLOGICAL:
        raise NotChronological("cost is locally semiconcave only on I+")
    delta = y - x
    grad = m_grad(delta / t)
    c1 = float(m_value(delta))
    return CostSuperDifferential(dt=-c1 / (t * t), dx=-grad, dy=grad)


# -- uniform superlinearity constants ------------------------------------------

@dataclass(frozen=True)
class SuperlinearityConstant:
    K: float
    C_of_K: float


def superlinearity_constant(g: Geometry, K: float) -> SuperlinearityConstant:
    """C(K) with L(v) >= K |v|_h - C(K) on the whole cone.

    L is 2-homogeneous and K|v|_h is 1-homogeneous, so on each cone ray the
    supremum of K rho - rho^2 L(u) is K^2 / (4 L(u)); the worst ray minimizes
    L over causal unit-h directions, a 1-d problem by rotational symmetry.
    A 1% safety margin absorbs the scalar-minimizer tolerance.
    """
    if K <= 0:
        raise LagrangianError("K must be positive")
    _require_minkowski(g)

    def ray_l(ut: float) -> float:
        q = max(2.0 * ut * ut - 1.0, 0.0)
        return (2.0 * ut - np.sqrt(q)) ** 2

    res = minimize_scalar(ray_l, bounds=(1.0 / np.sqrt(2.0), 1.0), method="bounded")
    l_min = min(res.fun, ray_l(1.0), ray_l(1.0 / np.sqrt(2.0)))
    return SuperlinearityConstant(K=K, C_of_K=1.01 * K * K / (4.0 * l_min))
