"""Discrete Kantorovich transport for the Lorentzian cost.

The primal/dual solve runs a successive-shortest-path min-cost-flow on the
bipartite graph restricted to causal (finite-cost) edges.  Node potentials
are maintained with the usual reduced-cost invariant, so at optimality the
duals satisfy psi_j - phi_i <= c_ij on every causal edge with equality on
every flow-carrying edge, and infeasibility (no coupling supported on J+)
surfaces as an unreachable demand rather than a big-M artifact.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .geometry import Causality, Geometry
from .lagrangian import cost_matrix

MERGE_TOL = 1e-12
MARGINAL_TOL = 1e-10


class TransportError(ValueError):
    pass


class Infeasible(TransportError):
    """No coupling supported on the causal set exists; the total cost is +inf."""


def merge_points(points: np.ndarray, weights: np.ndarray, tol: float = MERGE_TOL):
    """Merge coincident points (within tol in the h-metric), summing weights.

    Returns (points, weights, index_map) with first-occurrence ordering.
    """
    points = np.asarray(points, dtype=float)
    weights = np.asarray(weights, dtype=float)
    kept: list[int] = []
    uniq = np.empty_like(points)
    index_map = np.empty(len(points), dtype=int)
    for k, p in enumerate(points):
        if kept:
            dists = np.linalg.norm(uniq[: len(kept)] - p, axis=1)
            slot = int(np.argmin(dists))
            if dists[slot] <= tol:
                index_map[k] = slot
                continue
        uniq[len(kept)] = p
        kept.append(k)
        index_map[k] = len(kept) - 1
    out_pts = points[kept].copy()
    out_w = np.zeros(len(kept))
    np.add.at(out_w, index_map, weights)
    return out_pts, out_w, index_map


@dataclass(frozen=True)
class DiscreteMeasure:
    """Weighted point cloud: a finitely supported probability measure."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        w = np.asarray(self.weights, dtype=float).ravel()
        if len(pts) != len(w):
            raise TransportError("points and weights differ in length")
        if np.any(w <= 0):
            raise TransportError("weights must be positive")
        pts, w, _ = merge_points(pts, w)
        if abs(w.sum() - 1.0) > 1e-12:
            raise TransportError(f"weights sum to {w.sum()}, expected 1")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class Coupling:
    """Sparse nonnegative plan with prescribed marginals on causal pairs."""

    source: DiscreteMeasure
    target: DiscreteMeasure
    entries: np.ndarray  # columns: source index, target index, mass

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=float).reshape(-1, 3)
        if np.any(e[:, 2] <= 0):
            raise TransportError("coupling masses must be positive")
        row = np.zeros(len(self.source))
        col = np.zeros(len(self.target))
        np.add.at(row, e[:, 0].astype(int), e[:, 2])
        np.add.at(col, e[:, 1].astype(int), e[:, 2])
        if np.max(np.abs(row - self.source.weights)) > MARGINAL_TOL:
            raise TransportError("row sums do not match the source weights")
        if np.max(np.abs(col - self.target.weights)) > MARGINAL_TOL:
            raise TransportError("column sums do not match the target weights")
        object.__setattr__(self, "entries", e)

    def pairs(self):
        for i, j, m in self.entries:
            yield int(i), int(j), float(m)


@dataclass(frozen=True)
class DualPair:
    """Kantorovich potentials with phi anchored to 0 at the anchor index."""

    phi: np.ndarray
    psi: np.ndarray
    anchor: int = 0


@dataclass(frozen=True)
class DynamicalCoupling:
    """Finite list of minimizing curves with masses; curves have duration 1."""

    curves: list = field(default_factory=list)  # (MinimizerCurve, mass) pairs

    def __iter__(self):
        return iter(self.curves)

    def __len__(self):
        return len(self.curves)

    def total_mass(self) -> float:
        return float(sum(m for _, m in self.curves))


# -- successive shortest path solver ------------------------------------------

_REM_TOL = 1e-13


def _min_cost_flow(a: np.ndarray, b: np.ndarray, adj, costs):
    """Exact min-cost flow on a dense-supply bipartite graph.

    a, b: supplies and demands (equal totals); adj[i]/costs[i]: causal target
    indices and their costs for source i.  Returns (flows dict, phi, psi).
    """
    n, m = len(a), len(b)
    pi_s = np.zeros(n)
    pi_t = np.zeros(m)
    sup = a.copy()
    dem = b.copy()
    flow: dict[tuple[int, int], float] = {}
    flow_in: list[dict[int, float]] = [dict() for _ in range(m)]

    while True:
        active = np.nonzero(sup > _REM_TOL)[0]
        if len(active) == 0:
            break
        src = int(active[0])

        # Dijkstra on the residual graph with reduced costs; nodes 0..n-1 are
        # sources, n..n+m-1 targets.
        dist = np.full(n + m, np.inf)
        parent: dict[int, tuple[int, int]] = {}
        done = np.zeros(n + m, dtype=bool)
        dist[src] = 0.0
        heap = [(0.0, src)]
        while heap:
            d, node = heapq.heappop(heap)
            if done[node]:
                continue
            done[node] = True
            if node < n:
                i = node
                rc = costs[i] - pi_s[i] + pi_t[adj[i]]
                nd = d + np.maximum(rc, 0.0)
                for k, j in enumerate(adj[i]):
                    tj = n + j
                    if not done[tj] and nd[k] < dist[tj]:
                        dist[tj] = nd[k]
                        parent[tj] = (i, k)
                        heapq.heappush(heap, (nd[k], tj))
            else:
                j = node - n
                for i, f in flow_in[j].items():
                    if done[i] or f <= 0.0:
                        continue
                    k = int(np.searchsorted(adj[i], j))
                    rc = -costs[i][k] - pi_t[j] + pi_s[i]
                    nd = d + max(rc, 0.0)
                    if nd < dist[i]:
                        dist[i] = nd
                        parent[i] = (n + j, k)
                        heapq.heappush(heap, (nd, i))

        demanded = np.nonzero(dem > _REM_TOL)[0]
        reach = demanded[np.isfinite(dist[n + demanded])]
        if len(reach) == 0:
            raise Infeasible("no causal route from remaining supply to demand")
        t_star = int(reach[np.argmin(dist[n + reach])])
        d_star = dist[n + t_star]

        upd = np.minimum(dist, d_star)
        pi_s -= np.where(np.isfinite(upd[:n]), upd[:n], 0.0)
        pi_t -= np.where(np.isfinite(upd[n:]), upd[n:], 0.0)

        # walk the path back, find the bottleneck, then augment
        path = []
        node = n + t_star
        while node != src:
            prev, k = parent[node]
            path.append((prev, node, k))
            node = prev
        path.reverse()
        amt = min(sup[src], dem[t_star])
        for u, v, k in path:
            if u >= n:  # backward arc: limited by the flow it cancels
                amt = min(amt, flow[(v, u - n)])
        for u, v, k in path:
            if u < n:
                key = (u, v - n)
                flow[key] = flow.get(key, 0.0) + amt
                flow_in[v - n][u] = flow[key]
            else:
                key = (v, u - n)
                flow[key] -= amt
                if flow[key] <= 0.0:
                    del flow[key]
                    del flow_in[u - n][v]
                else:
                    flow_in[u - n][v] = flow[key]
        sup[src] -= amt
        dem[t_star] -= amt

    return flow, -pi_s, -pi_t


def _components(n: int, m: int, adj) -> np.ndarray:
    """Connected components of the bipartite causal graph; labels per node."""
    labels = np.full(n + m, -1, dtype=int)
    comp = 0
    adj_t: list[list[int]] = [[] for _ in range(m)]
    for i in range(n):
        for j in adj[i]:
            adj_t[j].append(i)
    for start in range(n):
        if labels[start] >= 0:
            continue
        stack = [start]
        labels[start] = comp
        while stack:
            node = stack.pop()
            if node < n:
                for j in adj[node]:
                    if labels[n + j] < 0:
                        labels[n + j] = comp
                        stack.append(n + j)
            else:
                for i in adj_t[node - n]:
                    if labels[i] < 0:
                        labels[i] = comp
                        stack.append(i)
        comp += 1
    return labels


def solve_kantorovich(
    g: Geometry, mu0: DiscreteMeasure, mu1: DiscreteMeasure, t: float = 1.0
):
    """Primal-optimal coupling and dual-optimal potentials from one solve.

    Non-causal pairs are omitted from the graph; if they disconnect supply
    from demand the problem is infeasible and the total cost is +inf.
    Returns (coupling, duals, total_cost).
    """
    c = cost_matrix(g, t, mu0.points, mu1.points)
    n, m = c.shape
    adj = [np.nonzero(np.isfinite(c[i]))[0] for i in range(n)]
    costs = [c[i][adj[i]] for i in range(n)]
    if any(len(x) == 0 for x in adj):
        raise Infeasible("a source point has no causal target")

    flow, phi, psi = _min_cost_flow(mu0.weights, mu1.weights, adj, costs)

    # anchor phi at the lowest source index per causal component (duals are
    # defined up to one additive constant on each component)
    labels = _components(n, m, adj)
    for comp in range(labels.max() + 1):
        srcs = np.nonzero(labels[:n] == comp)[0]
        if len(srcs) == 0:
            continue
        shift = phi[srcs[0]]
        phi[labels[:n] == comp] -= shift
        psi[labels[n:] == comp] -= shift

    entries = np.array(
        [[i, j, mass] for (i, j), mass in sorted(flow.items()) if mass > 0],
        dtype=float,
    ).reshape(-1, 3)
    coupling = Coupling(source=mu0, target=mu1, entries=entries)
    total = float(
        sum(mass * c[int(i), int(j)] for i, j, mass in entries)
    )
    duals = DualPair(phi=phi, psi=psi, anchor=0)
    return coupling, duals, total


# -- support classification, dynamical couplings, interpolation ----------------

@dataclass(frozen=True)
class SupportReport:
    fraction_on_I_plus: float
    passed: bool


def check_chronological_support(g: Geometry, coupling: Coupling) -> SupportReport:
    """Mass fraction of coupling entries that are chronologically related."""
    chrono = 0.0
    total = 0.0
    for i, j, mass in coupling.pairs():
        total += mass
        rel = g.causal_relation(coupling.source.points[i], coupling.target.points[j])
        if rel is Causality.CHRONOLOGICAL:
            chrono += mass
    frac = chrono / total if total > 0 else 0.0
    return SupportReport(fraction_on_I_plus=frac, passed=frac >= 1.0 - 1e-12)


def dynamical_coupling(g: Geometry, coupling: Coupling) -> DynamicalCoupling:
    """One unit-duration minimizing curve per coupling entry (deterministic)."""
    curves = []
    for i, j, mass in coupling.pairs():
        curve = g.minimizer(coupling.source.points[i], coupling.target.points[j], 1.0)
        curves.append((curve, mass))
    return DynamicalCoupling(curves=curves)


def displacement_interpolation(pi: DynamicalCoupling, t: float) -> DiscreteMeasure:
    """mu_t: push the curve measure forward through evaluation at time t."""
    if not 0.0 <= t <= 1.0:
        raise TransportError(f"interpolation time {t} outside [0, 1]")
    pts = np.array([curve.point(t) for curve, _ in pi])
    w = np.array([mass for _, mass in pi])
    return DiscreteMeasure(points=pts, weights=w)


def intermediate_coupling(pi: DynamicalCoupling, s: float, t: float) -> Coupling:
    """pi_{s,t}: joint pushforward through (e_s, e_t); optimal for c_{t-s}."""
    if not 0.0 <= s < t <= 1.0:
        raise TransportError(f"need 0 <= s < t <= 1, got s={s}, t={t}")
    pts_s = np.array([curve.point(s) for curve, _ in pi])
    pts_t = np.array([curve.point(t) for curve, _ in pi])
    w = np.array([mass for _, mass in pi])
    mpts_s, mw_s, map_s = merge_points(pts_s, w)
    mpts_t, mw_t, map_t = merge_points(pts_t, w)
    acc: dict[tuple[int, int], float] = {}
    for k in range(len(w)):
        key = (int(map_s[k]), int(map_t[k]))
        acc[key] = acc.get(key, 0.0) + float(w[k])
    entries = np.array([[i, j, m] for (i, j), m in sorted(acc.items())])
    mu_s = DiscreteMeasure(points=mpts_s, weights=mw_s)
    mu_t = DiscreteMeasure(points=mpts_t, weights=mw_t)
    return Coupling(source=mu_s, target=mu_t, entries=entries)
