"""Pipeline driver: gen, solve, interpolate, regularize, verify, report.

Exit codes: 0 success, 2 precondition failure, 3 verification failure,
4 infeasible transport problem.  All artifacts are deterministic for a fixed
config and seed; wall-clock timings live in a separate timings.json so the
remaining artifacts stay byte-reproducible.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .geometry import Minkowski
from .lagrangian import cost
from .semigroup import (
    CandidateSet,
    GridSpec,
    PotentialField,
    SemigroupError,
    enrich_candidates,
    eval_inf_of_sup,
    eval_sup_of_inf,
    regularized_pair,
    tau_upper_bound,
)
from .transport import (
    Coupling,
    DiscreteMeasure,
    Infeasible,
    check_chronological_support,
    displacement_interpolation,
    dynamical_coupling,
    solve_kantorovich,
)
from .verify import (
    BoxSpec,
    NonFiniteField,
    c11_check,
    check_duality,
    one_sided_diagnostics,
    semigroup_suite,
    theorem_A_check,
)

EXIT_OK = 0
EXIT_PRECONDITION = 2
EXIT_VERIFY = 3
EXIT_INFEASIBLE = 4


@dataclass
class RunConfig:
    out: str = "out"
    seed: int = 42
    s: float = 0.3
    t: float = 0.7
    tau_schedule: list = field(default_factory=list)  # empty: derived geometric scan
    eval_radius: float = 0.2
    eval_spacing: float | None = None  # default 0.02 in 1+1, 0.05 above
    k_max: float = 1e3
    gradient_lipschitz_max: float = 1e3
    drift_max: float = 0.1
    ladder_tol: float = 1e-8
    duality_tol: float = 1e-9
    subsolution_pairs: int = 64
    suite_fields: int = 20
    force: bool = False

    def resolved_tau_schedule(self) -> list:
        if self.tau_schedule:
            return list(self.tau_schedule)
        top = 0.8 * tau_upper_bound(self.s, self.t)
        return [top, top / 2.0, top / 4.0, top / 8.0]

    def resolved_eval_spacing(self, spatial_dim: int) -> float:
        if self.eval_spacing is not None:
            return self.eval_spacing
        return 0.02 if spatial_dim <= 1 else 0.05

    def as_dict(self) -> dict:
        return {
            "out": self.out,
            "seed": self.seed,
            "s": self.s,
            "t": self.t,
            "tau_schedule": list(self.tau_schedule),
            "eval_radius": self.eval_radius,
            "eval_spacing": self.eval_spacing,
            "k_max": self.k_max,
            "gradient_lipschitz_max": self.gradient_lipschitz_max,
            "drift_max": self.drift_max,
            "ladder_tol": self.ladder_tol,
            "duality_tol": self.duality_tol,
            "subsolution_pairs": self.subsolution_pairs,
            "suite_fields": self.suite_fields,
            "force": self.force,
        }


def load_config(args) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        data = io.read_json(args.config)
        for key, value in data.items():
            if hasattr(cfg, key):
                setattr(cfg, key, value)
    for key in ("out", "seed", "s", "t", "force"):
        value = getattr(args, key, None)
        if value is not None:
            setattr(cfg, key, value)
    if getattr(args, "tau_schedule", None):
        cfg.tau_schedule = [float(v) for v in args.tau_schedule.split(",")]
    return cfg


def _paths(out: str) -> dict:
    root = Path(out)
    return {
        "root": root,
        "instance": root / "instance.json",
        "coupling": root / "coupling.json",
        "duals_phi": root / "duals_phi.csv",
        "duals_psi": root / "duals_psi.csv",
        "duality": root / "duality_report.json",
        "support": root / "support_report.json",
        "regularize": root / "regularize_report.json",
        "verify": root / "verify_report.json",
        "manifest": root / "manifest.json",
        "timings": root / "timings.json",
        "curves": root / "curves.csv",
    }


def _semantic_config(cfg: RunConfig) -> dict:
    data = cfg.as_dict()
    data.pop("out", None)  # the output path must not perturb the run identity
    return data


def _update_manifest(paths, cfg: RunConfig, stage: str, artifacts, summary) -> None:
    manifest = io.read_json(paths["manifest"]) if paths["manifest"].exists() else {
        "config_hash": io.config_hash(_semantic_config(cfg)),
        "stages": {},
        "artifacts": [],
    }
    manifest["config_hash"] = io.config_hash(_semantic_config(cfg))
    manifest["stages"][stage] = summary
    known = set(manifest["artifacts"])
    for a in artifacts:
        name = str(Path(a).name)
        if name not in known:
            manifest["artifacts"].append(name)
            known.add(name)
    manifest["artifacts"] = sorted(manifest["artifacts"])
    io.write_json(paths["manifest"], manifest)


def _record_timing(paths, stage: str, seconds: float) -> None:
    data = io.read_json(paths["timings"]) if paths["timings"].exists() else {}
    data[stage] = seconds
    io.write_json(paths["timings"], data)


def _sample_ball(rng, n: int, dim: int, radius: float) -> np.ndarray:
    raw = rng.normal(size=(n, dim))
    raw /= np.linalg.norm(raw, axis=1, keepdims=True)
    radii = radius * rng.uniform(0.0, 1.0, size=n) ** (1.0 / dim)
    return raw * radii[:, None]


def generate_instance(
    n: int,
    spatial_dim: int = 1,
    mode: str = "chronological",
    seed: int = 42,
    ball_radius: float = 0.5,
    time_gap: float = 3.0,
):
    """Random two-slice instance; chronological mode guarantees every
    source-target pair is chronological (spatial scatter in a ball of radius
    rho against a time gap > 2 rho)."""
    if n < 1:
        raise ValueError("instance needs at least one point per side")
    if time_gap <= 2.0 * ball_radius:
        raise ValueError("time gap must exceed the spatial diameter")
    if mode not in ("chronological", "mixed"):
        raise ValueError(f"unknown mode {mode!r}")
    g = Minkowski(n=spatial_dim)
    rng = np.random.default_rng(seed)
    z0 = _sample_ball(rng, n, spatial_dim, ball_radius)
    z1 = _sample_ball(rng, n, spatial_dim, ball_radius)
    pts0 = np.hstack([np.zeros((n, 1)), z0])
    pts1 = np.hstack([np.full((n, 1), time_gap), z1])
    if mode == "mixed":
        far = np.zeros((1, spatial_dim))
        far[0, 0] = 10.0 * ball_radius
        extra0 = np.hstack([[[0.0]], far])
        null_step = np.zeros((1, spatial_dim))
        null_step[0, 0] = 1.0
        extra1 = np.hstack([[[1.0]], far + null_step])
        pts0 = np.vstack([pts0, extra0])
        pts1 = np.vstack([pts1, extra1])
    m = len(pts0)
    w = np.full(m, 1.0 / m)
    return g, DiscreteMeasure(points=pts0, weights=w), DiscreteMeasure(points=pts1, weights=w)


# -- stages ---------------------------------------------------------------------

def cmd_gen(args) -> int:
    cfg = load_config(args)
    paths = _paths(cfg.out)
    paths["root"].mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    try:
        g, mu0, mu1 = generate_instance(
            n=args.n,
            spatial_dim=args.dim,
            mode=args.mode,
            seed=cfg.seed,
            ball_radius=args.radius,
            time_gap=args.gap,
        )
    except ValueError as exc:
        print(f"gen: invalid spec: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    io.write_instance(paths["instance"], g, mu0, mu1)
    _update_manifest(
        paths,
        cfg,
        "gen",
        [paths["instance"]],
        {"n": args.n, "dim": args.dim, "mode": args.mode, "seed": cfg.seed},
    )
    _record_timing(paths, "gen", time.perf_counter() - t0)
    print(f"gen: wrote {paths['instance']}")
    return EXIT_OK


def cmd_solve(args) -> int:
    cfg = load_config(args)
    paths = _paths(cfg.out)
    if not paths["instance"].exists():
        print("solve: missing instance.json (run gen first)", file=sys.stderr)
        return 1
    t0 = time.perf_counter()
    g, mu0, mu1 = io.read_instance(paths["instance"])
    try:
        coupling, duals, total = solve_kantorovich(g, mu0, mu1)
    except Infeasible as exc:
        print(f"solve: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    io.write_coupling(paths["coupling"], coupling)
    io.write_duals(paths["duals_phi"], paths["duals_psi"], duals)
    report = check_duality(coupling, duals, g, tol=cfg.duality_tol)
    io.write_json(paths["duality"], report.as_dict())
    support = check_chronological_support(g, coupling)
    io.write_json(
        paths["support"],
        {"fraction_on_I_plus": support.fraction_on_I_plus, "passed": support.passed},
    )
    _update_manifest(
        paths,
        cfg,
        "solve",
        [paths["coupling"], paths["duals_phi"], paths["duals_psi"], paths["duality"], paths["support"]],
        {
            "total_cost": total,
            "entries": len(coupling.entries),
            "duality_passed": report.passed,
            "chronological_fraction": support.fraction_on_I_plus,
        },
    )
    _record_timing(paths, "solve", time.perf_counter() - t0)
    print(f"solve: total cost {total!r}, duality gap {report.duality_gap!r}")
    return EXIT_OK


def _load_solution(paths):
    g, mu0, mu1 = io.read_instance(paths["instance"])
    coupling = io.read_coupling(paths["coupling"], mu0, mu1)
    duals = io.read_duals(paths["duals_phi"], paths["duals_psi"])
    return g, mu0, mu1, coupling, duals


def cmd_interpolate(args) -> int:
    cfg = load_config(args)
    paths = _paths(cfg.out)
    for key in ("instance", "coupling"):
        if not paths[key].exists():
            print(f"interpolate: missing {paths[key].name}", file=sys.stderr)
            return 1
    t0 = time.perf_counter()
    g, mu0, mu1, coupling, _ = _load_solution(paths)
    pi = dynamical_coupling(g, coupling)
    times = [float(v) for v in args.times.split(",")] if args.times else [cfg.s, cfg.t]
    written = []
    for r in times:
        mu_r = displacement_interpolation(pi, r)
        path = paths["root"] / f"mu_t_{r:.6g}.json"
        io.write_json(paths["root"] / path.name, io.measure_to_dict(mu_r))
        written.append(path)
    io.write_curves_csv(paths["curves"], pi)
    written.append(paths["curves"])
    _update_manifest(paths, cfg, "interpolate", written, {"times": times})
    _record_timing(paths, "interpolate", time.perf_counter() - t0)
    print(f"interpolate: wrote {len(written)} artifacts")
    return EXIT_OK


def _dual_fields(mu0, mu1, duals):
    phi = PotentialField(sites=mu0.points, values=duals.phi, provenance="raw")
    psi = PotentialField(sites=mu1.points, values=duals.psi, provenance="raw")
    return phi, psi


def cmd_regularize(args) -> int:
    cfg = load_config(args)
    paths = _paths(cfg.out)
    for key in ("instance", "coupling", "duals_phi"):
        if not paths[key].exists():
            print(f"regularize: missing {paths[key].name}", file=sys.stderr)
            return 1
    t0 = time.perf_counter()
    g, mu0, mu1, coupling, duals = _load_solution(paths)
    support = check_chronological_support(g, coupling)
    if not support.passed and not cfg.force:
        print(
            "regularize: coupling is not concentrated on I+ "
            f"(fraction {support.fraction_on_I_plus}); rerun with --force to override",
            file=sys.stderr,
        )
        return EXIT_PRECONDITION

    pi = dynamical_coupling(g, coupling)
    phi, psi = _dual_fields(mu0, mu1, duals)
    spacing = cfg.resolved_eval_spacing(g.n)
    box = BoxSpec(radius=cfg.eval_radius, spacing=spacing)
    schedule = sorted(cfg.resolved_tau_schedule(), reverse=True)
    a_s = np.array([curve.point(cfg.s) for curve, _ in pi])
    a_t = np.array([curve.point(cfg.t) for curve, _ in pi])
    per_tau = []
    selected = None
    artifacts = []
    for tau in schedule:
        try:
            pair = regularized_pair(
                g, phi, psi, pi, cfg.s, cfg.t, tau,
                grid_spec=GridSpec(radius=cfg.eval_radius, spacing=spacing),
            )
        except SemigroupError as exc:
            print(f"regularize: {exc}", file=sys.stderr)
            return EXIT_PRECONDITION
        phi_s_vals = eval_sup_of_inf(phi.sites, phi.values, cfg.s, 0.0, a_s)
        psi_t_vals = eval_inf_of_sup(psi.sites, psi.values, 1.0 - cfg.t, 0.0, a_t)
        phi_agree = float(np.max(np.abs(pair.phi_evaluator(a_s) - phi_s_vals)))
        psi_agree = float(np.max(np.abs(pair.psi_evaluator(a_t) - psi_t_vals)))
        tag = f"{tau:.6g}"
        phi_csv = paths["root"] / f"phi_s_tau{tag}.csv"
        psi_csv = paths["root"] / f"psi_t_tau{tag}.csv"
        io.write_field_csv(phi_csv, pair.Phi_s)
        io.write_field_csv(psi_csv, pair.Psi_t)
        artifacts += [phi_csv, psi_csv]
        entry = {
            "tau": tau,
            "phi_support_agreement": phi_agree,
            "psi_support_agreement": psi_agree,
            "solver_diagnostics": pair.diagnostics,
        }
        if selected is None:
            # the schedule descends, so the first certified tau is the
            # largest one; smaller taus get fields but no certification run
            try:
                c11_phi = c11_check(
                    pair.phi_evaluator, a_s, box,
                    K_max=cfg.k_max,
                    gradient_lipschitz_max=cfg.gradient_lipschitz_max,
                    drift_max=cfg.drift_max,
                )
                c11_psi = c11_check(
                    pair.psi_evaluator, a_t, box,
                    K_max=cfg.k_max,
                    gradient_lipschitz_max=cfg.gradient_lipschitz_max,
                    drift_max=cfg.drift_max,
                )
            except NonFiniteField as exc:
                entry.update({"passed": False, "error": str(exc)})
                per_tau.append(entry)
                continue
            c11_path = paths["root"] / f"c11_tau{tag}.json"
            io.write_json(
                c11_path, {"phi": c11_phi.as_dict(), "psi": c11_psi.as_dict()}
            )
            artifacts.append(c11_path)
            passed = (
                c11_phi.passed
                and c11_psi.passed
                and phi_agree <= cfg.ladder_tol
                and psi_agree <= cfg.ladder_tol
            )
            entry.update(
                {
                    "passed": passed,
                    "c11_phi_passed": c11_phi.passed,
                    "c11_psi_passed": c11_psi.passed,
                }
            )
            if passed:
                selected = tau
        else:
            entry.update({"passed": None, "c11_skipped": True})
        per_tau.append(entry)
    report = {
        "schedule": schedule,
        "per_tau": per_tau,
        "selected_tau": selected,
        "s": cfg.s,
        "t": cfg.t,
        "eval_box": {"radius": cfg.eval_radius, "spacing": spacing},
    }
    io.write_json(paths["regularize"], report)
    artifacts.append(paths["regularize"])
    _update_manifest(
        paths, cfg, "regularize", artifacts,
        {"selected_tau": selected},
    )
    _record_timing(paths, "regularize", time.perf_counter() - t0)
    if selected is None:
        print("regularize: tau schedule exhausted without a passing tau", file=sys.stderr)
        return EXIT_VERIFY
    print(f"regularize: selected tau {selected!r}")
    return EXIT_OK


def _ladder_checks(g, coupling, duals, s, t, tau, ladder_fractions=(0.5, 1.0)):
    """Calibration ladder along every coupling entry's minimizer."""
    phi_sites = coupling.source.points
    psi_sites = coupling.target.points
    worst = {"ladder_forward": 0.0, "ladder_backward": 0.0, "pair_calibration": 0.0}
    for i, j, _ in coupling.pairs():
        gamma = g.minimizer(phi_sites[i], psi_sites[j], 1.0)
        phi0 = duals.phi[i]
        for frac in ladder_fractions:
            r = frac * tau
            pt = gamma.point(s + tau - r)
            lhs = eval_sup_of_inf(phi_sites, duals.phi, s + tau, r, pt[None, :])[0]
            rhs = phi0 + cost(g, s + tau - r, gamma.start, pt)
            worst["ladder_forward"] = max(
                worst["ladder_forward"], abs(lhs - rhs) / (1.0 + abs(rhs))
            )
            pt = gamma.point(t - tau + r)
            lhs = eval_inf_of_sup(psi_sites, duals.psi, 1.0 - t + tau, r, pt[None, :])[0]
            rhs = phi0 + cost(g, t - tau + r, gamma.start, pt)
            worst["ladder_backward"] = max(
                worst["ladder_backward"], abs(lhs - rhs) / (1.0 + abs(rhs))
            )
        xs, xt = gamma.point(s), gamma.point(t)
        phi_val = eval_sup_of_inf(phi_sites, duals.phi, s + tau, tau, xs[None, :])[0]
        psi_val = eval_inf_of_sup(psi_sites, duals.psi, 1.0 - t + tau, tau, xt[None, :])[0]
        resid = abs(psi_val - phi_val - cost(g, t - s, xs, xt))
        worst["pair_calibration"] = max(worst["pair_calibration"], resid)
    return {k: float(v) for k, v in worst.items()}


def _subsolution_sample(g, coupling, duals, s, t, tau, n_pairs, seed, radius):
    """Random causal evaluation pairs for the regularized subsolution bound."""
    rng = np.random.default_rng(seed)
    phi_sites = coupling.source.points
    psi_sites = coupling.target.points
    entries = list(coupling.pairs())
    worst = 0.0
    checked = 0
    for _ in range(n_pairs * 4):
        if checked >= n_pairs:
            break
        i, j, _ = entries[rng.integers(len(entries))]
        i2, j2, _ = entries[rng.integers(len(entries))]
        g1 = g.minimizer(phi_sites[i], psi_sites[j], 1.0)
        g2 = g.minimizer(phi_sites[i2], psi_sites[j2], 1.0)
        x = g1.point(s) + np.concatenate([[0.0], rng.uniform(-radius, radius, g.n)])
        y = g2.point(t) + np.concatenate([[0.0], rng.uniform(-radius, radius, g.n)])
        cval = cost(g, t - s, x, y)
        if not np.isfinite(cval):
            continue
        phi_val = eval_sup_of_inf(phi_sites, duals.phi, s + tau, tau, x[None, :])[0]
        psi_val = eval_inf_of_sup(psi_sites, duals.psi, 1.0 - t + tau, tau, y[None, :])[0]
        if not (np.isfinite(phi_val) and np.isfinite(psi_val)):
            continue
        worst = max(worst, psi_val - phi_val - cval)
        checked += 1
    return worst, checked


def cmd_verify(args) -> int:
    cfg = load_config(args)
    paths = _paths(cfg.out)
    required = ["instance", "coupling", "duals_phi", "duals_psi"]
    for key in required:
        if not paths[key].exists():
            print(f"verify: missing {paths[key].name}", file=sys.stderr)
            return 1
    t0 = time.perf_counter()
    g, mu0, mu1, coupling, duals = _load_solution(paths)

    hard_failures = []
    report = {}

    duality = check_duality(coupling, duals, g, tol=cfg.duality_tol)
    report["duality"] = duality.as_dict()
    if not duality.passed:
        hard_failures.append("duality")

    support = check_chronological_support(g, coupling)
    report["support"] = {
        "fraction_on_I_plus": support.fraction_on_I_plus,
        "passed": support.passed,
    }

    rng = np.random.default_rng(cfg.seed)
    triples = []
    for _ in range(32):
        i = rng.integers(len(mu0))
        j = rng.integers(len(mu1))
        if g.causal_relation(mu0.points[i], mu1.points[j]).value == "chronological":
            triples.append((float(rng.uniform(0.5, 2.0)), mu0.points[i], mu1.points[j]))
    if triples:
        tha = theorem_A_check(g, triples)
        report["theorem_A"] = tha.as_dict()
        if tha.max_relative_error > 1e-5 or tha.max_dt_identity_error > 1e-12:
            hard_failures.append("theorem_A")

    pi = dynamical_coupling(g, coupling)
    base = CandidateSet(points=np.vstack([mu0.points, mu1.points]))
    cands = enrich_candidates(
        g, base, pi, times=[cfg.s, cfg.t], grid_spec=None
    )
    suite = semigroup_suite(g, cands, n_fields=cfg.suite_fields, seed=cfg.seed)
    report["semigroup"] = suite.as_dict()
    # contraction/monotonicity are exact discrete identities; 1e-13 absorbs
    # single-rounding float noise of (u + c) - c roundtrips
    if (
        suite.contraction_violation > 1e-13
        or suite.expansion_violation > 1e-13
        or suite.monotonicity_violation > 0.0
        or suite.shift_defect > 1e-12
        or suite.sublaw_defect_enriched > 1e-9
        or suite.sublaw_negative < -1e-12
    ):
        hard_failures.append("semigroup")

    if paths["regularize"].exists():
        reg = io.read_json(paths["regularize"])
        tau = reg.get("selected_tau")
        report["regularize"] = {"selected_tau": tau}
        if tau is None:
            hard_failures.append("regularize")
        else:
            if not support.passed:
                hard_failures.append("support")
            ladder = _ladder_checks(g, coupling, duals, cfg.s, cfg.t, tau)
            report["ladder"] = ladder
            if max(ladder.values()) > cfg.ladder_tol:
                hard_failures.append("ladder")
            worst, checked = _subsolution_sample(
                g, coupling, duals, cfg.s, cfg.t, tau,
                cfg.subsolution_pairs, cfg.seed, cfg.eval_radius,
            )
            report["subsolution_sample"] = {"worst": float(worst), "pairs": checked}
            if worst > cfg.ladder_tol:
                hard_failures.append("subsolution")

            # one-sided regularity comparison (diagnostic, never fatal)
            a_t = np.array([curve.point(cfg.t) for curve, _ in pi])
            spacing = cfg.resolved_eval_spacing(g.n)
            raw_ev = lambda pts: eval_inf_of_sup(
                mu1.points, duals.psi, 1.0 - cfg.t, 0.0, pts
            )
            comp_ev = lambda pts: eval_inf_of_sup(
                mu1.points, duals.psi, 1.0 - cfg.t + tau, tau, pts
            )
            one_sided = one_sided_diagnostics(
                raw_ev, comp_ev, a_t,
                box=BoxSpec(radius=cfg.eval_radius, spacing=spacing),
            )
            report["one_sided"] = one_sided.as_dict()

    report["hard_failures"] = hard_failures
    report["passed"] = not hard_failures
    io.write_json(paths["verify"], report)
    _update_manifest(
        paths, cfg, "verify", [paths["verify"]],
        {"passed": report["passed"], "hard_failures": hard_failures},
    )
    _record_timing(paths, "verify", time.perf_counter() - t0)

    print("verify summary")
    print(f"  duality gap          {duality.duality_gap!r}  pass={duality.passed}")
    print(f"  support residual     {duality.max_support_residual!r}")
    print(f"  subsolution viol.    {duality.max_subsolution_violation!r}")
    print(f"  chronological frac   {support.fraction_on_I_plus!r}")
    for key in ("theorem_A", "semigroup", "ladder", "subsolution_sample", "one_sided"):
        if key in report:
            print(f"  {key}: {report[key]}")
    print(f"  PASSED: {report['passed']}")
    return EXIT_OK if report["passed"] else EXIT_VERIFY


def cmd_report(args) -> int:
    cfg = load_config(args)
    paths = _paths(cfg.out)
    if not paths["manifest"].exists():
        print("report: no manifest found", file=sys.stderr)
        return 1
    manifest = io.read_json(paths["manifest"])
    print(f"config hash: {manifest['config_hash']}")
    for stage, summary in manifest.get("stages", {}).items():
        print(f"[{stage}] {summary}")
    print("artifacts:")
    for a in manifest.get("artifacts", []):
        print(f"  {a}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lorentz-ot",
        description="Lorentzian optimal transport pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=str, default=None)
        p.add_argument("--out", type=str, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--s", type=float, default=None)
        p.add_argument("--t", type=float, default=None)
        p.add_argument("--tau-schedule", dest="tau_schedule", type=str, default=None)
        p.add_argument("--force", action="store_true", default=None)

    p = sub.add_parser("gen", help="generate a random instance")
    common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--mode", choices=["chronological", "mixed"], default="chronological")
    p.add_argument("--radius", type=float, default=0.5)
    p.add_argument("--gap", type=float, default=3.0)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="solve the Kantorovich problem")
    common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("interpolate", help="displacement interpolation")
    common(p)
    p.add_argument("--times", type=str, default=None)
    p.set_defaults(func=cmd_interpolate)

    p = sub.add_parser("regularize", help="forward-backward regularized pair")
    common(p)
    p.set_defaults(func=cmd_regularize)

    p = sub.add_parser("verify", help="run the certification suite")
    common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("report", help="print the manifest summary")
    common(p)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
