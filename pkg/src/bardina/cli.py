"""``bardina`` command line: one subcommand per pipeline stage, CSV/JSON into ``--out``."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import bounds, dynamics, kolmogorov as K, lattice as L, serialize, verify
from .config import CONFIG_KEYS, ConfigError, RunConfig, parse_config
from .report import ReportDocument
from .spectral import TorusLattice, random_field, shear_field

log = logging.getLogger("bardina")

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
NUMERIC_ERRORS = (dynamics.BlowUpError, K.SolverFailure, K.StableFamily, FloatingPointError, np.linalg.LinAlgError)
SUBCOMMANDS = ("simulate", "stability-scan", "stability-eigen", "lift", "count", "bounds", "sums", "verify")


def _rp(cfg: RunConfig) -> K.RegionParams:
    return K.RegionParams(cfg.delta, cfg.c2, cfg.c3, cfg.c4)


def _c1(cfg: RunConfig, rp: K.RegionParams) -> float:
    return cfg.c1 if cfg.c1 > 0 else K.empirical_c1(rp=rp)


def _s_list(cfg: RunConfig) -> tuple:
    return cfg.s_list[:2] if cfg.quick else cfg.s_list


# subcommands -------------------------------------------------------


def cmd_simulate(cfg: RunConfig, out: Path) -> dict:
    """Integrate the filtered system with RK4 and record the energy diagnostics."""
    lat = TorusLattice(cfg.d, cfg.M)
    rng = np.random.default_rng(cfg.seed)
    if cfg.forcing == "kolmogorov":
        g = shear_field(lat, cfg.s, cfg.gamma * cfg.lam)
    else:
        g = random_field(lat, rng, scale=cfg.forcing_amplitude)
    u0 = random_field(lat, rng, scale=cfg.init_scale)
    p = dynamics.PhysicsParams(cfg.alpha, cfg.gamma, g)
    T = min(cfg.T, 20 * cfg.dt) if cfg.quick else cfg.T
    rec = dynamics.simulate(u0, p, T, cfg.dt, every=cfg.every)
    rec.write_csv(out / "trajectory.csv")
    dynamics.write_checkpoint(out / "checkpoint.json", rec, p)
    payload = {
        "steps": int(round(T / cfg.dt)),
        "final_energy_alpha": rec.energy_alpha[-1],
        "energy_residual": dynamics.energy_residual(rec, p),
        "peak_energy_alpha": rec.energy_alpha.max(),
        "dissipative_bound_holds": dynamics.check_dissipative(rec, p),
        "time_avg_gradient": dynamics.time_avg_gradient(rec),
        "grad_avg_bound": dynamics.grad_avg_bound(rec, p),
        "flag_drift": rec.max_flag_drift,
    }
    if cfg.d == 2:
        payload["vorticity_estimate_holds"] = dynamics.vorticity_estimate_2d(rec, p)
    return payload


def cmd_stability_scan(cfg: RunConfig, out: Path) -> dict:
    """Tabulate the region membership and the critical forcing across wave numbers."""
    rp = _rp(cfg)
    s = cfg.s
    region_rows = []
    rmax, tlo, thi = K._rect_bounds(s, rp)
    for t in np.arange(1, 4 * s + 1) / 4:
        for r in range(-(s - 1), s):
            in_a = K.region_A_contains(float(t), r, s, rp.delta)
            in_d = bool(tlo <= t <= thi and abs(r) <= rmax)
            region_rows.append((float(t), r, int(in_a), int(in_d)))
    serialize.write_csv(out / "region_scan.csv", ["t_prime", "r", "in_A", "in_D"], region_rows)
    rows = []
    n_t = 3 if cfg.quick else 5
    for ss in _s_list(cfg):
        rmax, tlo, thi = K._rect_bounds(ss, rp)
        f = K.KolmogorovFlow(ss, 1.0, cfg.gamma, 1 / ss**2)
        for t in np.linspace(tlo, thi, n_t):
            for r in range(-rmax, rmax + 1):
                cl = K.critical_lambda(f, float(t), r)
                rows.append((ss, float(t), r, cl.lam_star, cl.c1_hat))
    serialize.write_csv(out / "instability_scan.csv", ["s", "t_prime", "r", "lambda_star", "c1_hat"], rows)
    by_s = {}
    for ss, _, _, _, c in rows:
        by_s[ss] = max(by_s.get(ss, 0.0), c)
    vals = list(by_s.values())
    return {
        "region_points": len(region_rows),
        "region_A_points": sum(r[2] for r in region_rows),
        "rectangle_inside_region": all(K.rectangle_in_region(ss, rp) for ss in _s_list(cfg)),
        "sup_c1_hat": {str(k): v for k, v in by_s.items()},
        "sup_c1_hat_spread": (max(vals) - min(vals)) / min(vals),
    }


def _eigen_dict(res: K.EigenResult) -> dict:
    return {
        "mu": [res.mu.real, res.mu.imag],
        "unstable": res.unstable,
        "growth_rate": res.growth_rate,
        "N": res.N,
        "converged": res.converged,
        "t_prime": res.t_prime,
        "r": res.r,
    }


def cmd_stability_eigen(cfg: RunConfig, out: Path) -> dict:
    """Most unstable eigenvalue of one Kolmogorov perturbation family."""
    f = K.KolmogorovFlow(cfg.s, cfg.lam, cfg.gamma, cfg.alpha)
    res = K.most_unstable_eigenvalue(f, cfg.t_prime, cfg.r)
    payload = _eigen_dict(res)
    try:
        payload["lambda_star"] = K.critical_lambda(f, cfg.t_prime, cfg.r).lam_star
    except K.StableFamily:
        payload["lambda_star"] = None
    payload["in_region_A"] = K.region_A_contains(cfg.t_prime, cfg.r, cfg.s, cfg.delta)
    return payload


def cmd_lift(cfg: RunConfig, out: Path) -> dict:
    """Build the 3D unstable mode for one wave vector triple."""
    f = K.KolmogorovFlow(cfg.s, cfg.lam, cfg.gamma, cfg.alpha, d=3)
    m = K.unstable_3d_mode(f, cfg.a, cfg.b, cfg.r)
    ahat, ghat = K.squire_reduce(cfg.a, cfg.b, cfg.gamma)
    return {
        "a": m.a,
        "b": m.b,
        "r": m.r,
        "a_hat": ahat,
        "gamma_hat": ghat,
        "mu": [m.mu.real, m.mu.imag],
        "unstable": m.unstable,
        "residual": m.residual,
        "divergence": m.divergence,
        "condition": m.condition,
        "m": m.m,
        "w_re": m.w.real,
        "w_im": m.w.imag,
    }


def cmd_count(cfg: RunConfig, out: Path) -> dict:
    """Count unstable 3D wave vector triples per forcing frequency."""
    rp = _rp(cfg)
    svals = (100, 200) if cfg.quick else tuple(sorted(set(cfg.s_list) | {100, 200, 400}))
    rows = []
    for s in svals:
        n = K.count_unstable_3d(s, rp)
        rows.append((s, n, n / s**3, rp.c5))
    serialize.write_csv(out / "counting.csv", ["s", "count", "count_over_s3", "c5"], rows)
    return {"region": rp.to_dict(), "c5": rp.c5, "rows": [list(r) for r in rows]}


def cmd_bounds(cfg: RunConfig, out: Path) -> dict:
    """Compare the lower dimension bound with the upper bounds."""
    if cfg.g_norm_sq > 0:
        a, g = cfg.alpha, cfg.gamma
        K_avg = bounds.trace_coefficient_averaged(math.sqrt(cfg.g_norm_sq), a, g)
        payload = {
            "g_norm_sq": cfg.g_norm_sq,
            "upper_3d": bounds.upper_bound_3d(cfg.g_norm_sq, a, g),
            "upper_2d": bounds.upper_bound_2d(cfg.g_norm_sq, a, g),
            "n_star": bounds.n_star(K_avg, g),
            "constants": dict(bounds.CONSTANTS),
        }
        if cfg.rot_g_norm_sq > 0:
            payload["upper_2d_vorticity"] = bounds.upper_bound_2d_vorticity(cfg.rot_g_norm_sq, a, g)
        return payload
    rp = _rp(cfg)
    c1 = _c1(cfg, rp)
    samples = min(cfg.samples, 4) if cfg.quick else cfg.samples
    reps = [bounds.consistency_report(1 / s**2, cfg.gamma, rp, c1, max_samples=samples) for s in _s_list(cfg)]
    alphas = [r.alpha for r in reps]
    lower = [K.lower_bound_dimension(r.alpha, cfg.gamma, rp, c1, max_samples=0).to_dict() for r in reps]
    serialize.write_json(out / "lower_bound.json", {"c1": c1, "region": rp.to_dict(), "contributions": lower})
    payload = {
        "c1": c1,
        "reports": [r.to_dict() for r in reps],
        "upper_slope": bounds.loglog_slope(alphas, [r.upper_3d for r in reps]) if len(reps) > 1 else None,
        "lower_slope": bounds.loglog_slope(alphas, [r.count for r in reps]) if len(reps) > 1 else None,
        "constants": dict(bounds.CONSTANTS),
    }
    return payload


def sums_table(m_min: float, m_max: float, points: int, tol: float) -> list[tuple]:
    grid = sorted(set(np.geomspace(m_min, m_max, points).tolist()) | {1.0})
    rows = []
    for m in grid:
        d = L.F_direct(m, tol)
        p = L.F_poisson(m, tol) if m >= L.POISSON_MIN_M else None
        best = L.F(m, max(tol, 1e-12)).value
        rows.append((m, d.value, p.value if p else "", d.tail_bound, math.pi**2 - best))
    return rows


def cmd_sums(cfg: RunConfig, out: Path) -> dict:
    """Tabulate the lattice sum by both summation routes."""
    rows = sums_table(cfg.m_min, cfg.m_max, 20 if cfg.quick else cfg.m_points, cfg.tol)
    serialize.write_csv(out / "lattice_sums.csv", ["m", "F_direct", "F_poisson", "tail", "pi2_margin"], rows)
    anchor = next(r for r in rows if r[0] == 1.0)
    return {
        "rows": len(rows),
        "F_at_1": anchor[1],
        "min_pi2_margin": min(r[4] for r in rows),
        "G0_ledger": L.G0_ledger(),
    }


def cmd_verify(cfg: RunConfig, out: Path) -> dict:
    """Run the numerical verification suite; exit 1 on any failed check."""
    checks = verify.run_suite(quick=cfg.quick, seed=cfg.seed)
    return {"quick": cfg.quick, "checks": [c.to_dict() for c in checks], "violations": sum(not c.passed for c in checks)}


COMMANDS = {
    "simulate": cmd_simulate,
    "stability-scan": cmd_stability_scan,
    "stability-eigen": cmd_stability_eigen,
    "lift": cmd_lift,
    "count": cmd_count,
    "bounds": cmd_bounds,
    "sums": cmd_sums,
    "verify": cmd_verify,
}


# argument handling ------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="flat key = value file")
    common.add_argument("--set", metavar="JSON", dest="json_override", help="JSON object of config overrides")
    common.add_argument("--quick", action="store_true", default=None, help="reduced problem sizes")
    common.add_argument("-v", "--verbose", action="store_true")
    for key in CONFIG_KEYS:
        if key == "quick":
            continue
        common.add_argument("--" + key.replace("_", "-"), dest="opt_" + key, metavar=key.upper())
    parser = argparse.ArgumentParser(prog="bardina", description="Run one pipeline stage and write CSV and JSON results into --out.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common], help=COMMANDS[name].__doc__)
    return parser


def _overrides(ns: argparse.Namespace) -> dict:
    out = {k[4:]: v for k, v in vars(ns).items() if k.startswith("opt_") and v is not None}
    if ns.quick:
        out["quick"] = True
    return out


def _error(kind: str, message: str, **extra) -> None:
    print(json.dumps({"error": kind, "message": message, **extra}), file=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = parse_config(ns.config, _overrides(ns), ns.json_override)
    except ConfigError as exc:
        _error("config", str(exc), violations=exc.violations)
        return EXIT_CONFIG
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        payload = COMMANDS[ns.command](cfg, out)
    except NUMERIC_ERRORS as exc:
        _error("numeric", str(exc), type=type(exc).__name__)
        return EXIT_NUMERIC
    except ValueError as exc:
        _error("config", str(exc))
        return EXIT_CONFIG
    doc = ReportDocument(ns.command, cfg.to_dict(), serialize._plain(payload), {"seed": cfg.seed})
    doc.write(out / f"{ns.command.replace('-', '_')}.json")
    (out / "effective.cfg").write_text(cfg.to_text())
    if ns.command == "verify" and payload["violations"]:
        failed = [c["name"] for c in payload["checks"] if not c["passed"]]
        _error("violation", f"{len(failed)} check(s) failed", failed=failed)
        return EXIT_VIOLATION
    print(serialize.dumps({"command": ns.command, "out": str(out), "payload_sha256": doc.payload_digest()}))
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
