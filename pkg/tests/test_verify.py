import dataclasses

import numpy as np
import pytest

from lorentz_ot import (
    BoxSpec,
    CandidateSet,
    Coupling,
    DiscreteMeasure,
    DualPair,
    c11_check,
    check_duality,
    cost,
    cost_superdifferential,
    semiconcavity_scan,
    semigroup_suite,
    solve_kantorovich,
    theorem_A_check,
)
from lorentz_ot.cli import generate_instance
from lorentz_ot.semigroup import box_grid, enrich_candidates, eval_inf_of_sup
from lorentz_ot.verify import NonFiniteField, one_sided_diagnostics


def grid_1d(n, h):
    return (np.arange(n) - (n - 1) / 2) * h


def test_scan_exact_quadratic():
    h = 0.02
    xs = grid_1d(41, h)
    ys = grid_1d(41, h)
    values = xs[:, None] ** 2 + ys[None, :] ** 2
    report = semiconcavity_scan(values, h)
    # |x|^2 is exactly 1-semiconcave and 0-semiconvex (it is convex)
    assert report.K_upper == pytest.approx(1.0, abs=1e-10)
    assert report.K_lower == pytest.approx(0.0, abs=1e-10)
    # a saddle carries unit curvature on both sides
    saddle = xs[:, None] ** 2 - ys[None, :] ** 2
    report = semiconcavity_scan(saddle, h)
    assert report.K_upper == pytest.approx(1.0, abs=1e-10)
    assert report.K_lower == pytest.approx(1.0, abs=1e-10)


def test_scan_kink_ratio():
    h = 0.01
    xs = grid_1d(41, h)  # odd count, includes 0
    values = np.abs(xs)
    report = semiconcavity_scan(values, h)
    # second difference at the kink is 2h, ratio 1/h; convex side clean
    assert report.K_upper == pytest.approx(1.0 / h, rel=1e-12)
    assert report.K_lower == pytest.approx(0.0, abs=1e-12)


def test_scan_rejects_non_finite():
    values = np.array([1.0, np.inf, 2.0])
    with pytest.raises(NonFiniteField):
        semiconcavity_scan(values, 0.1)


def test_scan_cost_slice(mink1):
    # u(y) = c_t(x0, y) on a chronological box is semiconcave with finite K
    x0 = np.array([0.0, 0.0])
    center = np.array([2.0, 0.0])
    h = 0.02
    pts = box_grid(center, 0.2, h)
    values = np.array([cost(mink1, 1.0, x0, y) for y in pts]).reshape(21, 21)
    report = semiconcavity_scan(values, h)
    assert np.isfinite(report.K_upper)
    assert report.K_upper < 50.0


def test_c11_constant_field_passes():
    report = c11_check(lambda pts: np.zeros(len(pts)), [[0.0, 0.0]], BoxSpec(0.1, 0.02))
    assert report.passed
    assert report.points[0].K_upper == 0.0
    assert report.points[0].K_lower == 0.0


def test_c11_detects_kink():
    evaluate = lambda pts: np.abs(pts[:, 1])
    report = c11_check(evaluate, [[0.0, 0.0]], BoxSpec(0.1, 0.02))
    assert not report.passed
    assert report.points[0].divergent


def test_c11_smooth_but_not_c2_field():
    # max(0, x)^2 is C^{1,1} with curvature jumping 0 -> 1: both K finite
    evaluate = lambda pts: np.maximum(pts[:, 1], 0.0) ** 2
    report = c11_check(evaluate, [[0.0, 0.0]], BoxSpec(0.1, 0.02))
    assert report.passed
    assert report.points[0].K_upper_refined == pytest.approx(1.0, abs=1e-8)


def test_check_duality_hand_instance(mink1):
    mu0 = DiscreteMeasure(points=[[0.0, 0.0]], weights=[1.0])
    mu1 = DiscreteMeasure(points=[[2.0, 0.0]], weights=[1.0])
    coupling = Coupling(source=mu0, target=mu1, entries=[[0, 0, 1.0]])
    duals = DualPair(phi=np.array([0.0]), psi=np.array([4.0]))
    report = check_duality(coupling, duals, mink1)
    assert report.duality_gap == 0.0
    assert report.max_support_residual == 0.0
    assert report.max_subsolution_violation == 0.0
    assert report.passed


def test_check_duality_fault_injection(solved_instance):
    g = solved_instance["g"]
    coupling = solved_instance["coupling"]
    duals = solved_instance["duals"]
    bad = DualPair(phi=duals.phi, psi=duals.psi + np.eye(len(duals.psi))[0] * 0.1)
    report = check_duality(coupling, bad, g)
    assert report.max_subsolution_violation >= 0.1 - 1e-9
    assert not report.passed


def test_semigroup_suite_clean(solved_instance):
    g = solved_instance["g"]
    base = CandidateSet(
        points=np.vstack([solved_instance["mu0"].points, solved_instance["mu1"].points])
    )
    cands = enrich_candidates(g, base, solved_instance["pi"], times=[0.3, 0.7])
    report = semigroup_suite(g, cands, n_fields=10, seed=1)
    assert report.contraction_violation <= 1e-13
    assert report.expansion_violation <= 1e-13
    assert report.monotonicity_violation <= 0.0
    assert report.shift_defect <= 1e-12
    assert report.sublaw_negative >= -1e-12
    assert report.sublaw_defect_raw >= 0.0
    assert report.sublaw_defect_enriched <= 1e-9


def test_theorem_A_examples(mink1):
    report = theorem_A_check(mink1, [(1.0, [0.0, 0.0], [2.0, 0.0])])
    assert report.max_relative_error <= 1e-6
    assert report.max_dt_identity_error <= 1e-12


def test_theorem_A_random_batch(mink1):
    rng = np.random.default_rng(2)
    triples = []
    for _ in range(100):
        x = np.array([0.0, rng.uniform(-1, 1)])
        z = rng.uniform(-1, 1)
        y = x + np.array([abs(z) + rng.uniform(0.2, 1.5), z])
        triples.append((rng.uniform(0.5, 2.0), x, y))
    report = theorem_A_check(mink1, triples)
    assert report.max_relative_error <= 1e-5
    assert report.max_dt_identity_error <= 1e-12


def test_theorem_A_fault_injection(mink1):
    def corrupted(g, t, x, y):
        sd = cost_superdifferential(g, t, x, y)
        return dataclasses.replace(sd, dt=sd.dt + 1e-4)

    report = theorem_A_check(
        mink1, [(1.0, [0.0, 0.0], [2.0, 0.0])], superdiff_fn=corrupted
    )
    assert report.max_relative_error > 1e-5
    assert report.max_dt_identity_error > 1e-12


def test_one_sided_diagnostics(solved_instance):
    g = solved_instance["g"]
    duals = solved_instance["duals"]
    mu1 = solved_instance["mu1"]
    pi = solved_instance["pi"]
    t, tau = 0.7, 0.16
    a_t = np.array([c.point(t) for c, _ in pi])
    raw = lambda pts: eval_inf_of_sup(mu1.points, duals.psi, 1 - t, 0.0, pts)
    comp = lambda pts: eval_inf_of_sup(mu1.points, duals.psi, 1 - t + tau, tau, pts)
    report = one_sided_diagnostics(raw, comp, a_t, BoxSpec(0.2, 0.02))
    assert np.isfinite(report.raw_K_lower)
    assert report.lower_stable
    assert report.within_factor_two  # smoothing cannot worsen concavity


def test_reports_are_deterministic(solved_instance):
    g = solved_instance["g"]
    r1 = check_duality(solved_instance["coupling"], solved_instance["duals"], g)
    r2 = check_duality(solved_instance["coupling"], solved_instance["duals"], g)
    assert r1 == r2
    base = CandidateSet(points=solved_instance["mu0"].points)
    s1 = semigroup_suite(g, base, n_fields=3, seed=7)
    s2 = semigroup_suite(g, base, n_fields=3, seed=7)
    assert s1 == s2
