"""Config-driven experiment runner.

Usage:
    wassdyn run --config cfg.json [--seed S] [--out DIR] [--quiet]
    wassdyn run --preset splitting_dirac --out DIR
    wassdyn list-presets

The config is a JSON document whose ``command`` field selects one of
simulate / pairing / certify / evi-check / rate-study.  Every run writes its
artifacts plus a manifest listing each produced file with its content hash;
identical config and seed reproduce byte-identical outputs.

Exit codes: 0 success, 1 config error, 2 stability violation, 3 check
failure (violations found).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys

import numpy as np

from . import __version__, analysis, fields, identities, presets
from ._kernels import active_backend
from .euler import StabilityViolation, euler_run, global_bounds, ievi_rows
from .io import atomic_write_text, pairing_to_record, save_measure
from .measures import (DiscreteMeasure, VelocityMeasure, dirac,
                       uniform_interval, unit_disc, x_marginal)
from .pairings import pairing_l, pairing_l_nu, pairing_r, pairing_r_nu
from .tolerances import CHECK_TOL, as_dict as tolerance_table
from .transport import w2


class ConfigError(ValueError):
    pass


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _need(cfg: dict, key: str, where: str):
    if key not in cfg:
        raise ConfigError(f"missing key {key!r} in {where}")
    return cfg[key]


def _resolve_measure(spec, where: str = "measure") -> DiscreteMeasure:
    if not isinstance(spec, dict):
        raise ConfigError(f"{where}: expected an object")
    if "dirac" in spec:
        return dirac(spec["dirac"])
    if "atoms" in spec:
        atoms = np.asarray(spec["atoms"], dtype=float)
        if atoms.ndim != 2 or atoms.shape[1] < 2:
            raise ConfigError(f"{where}: atoms must be rows [w, x1, ...]")
        return DiscreteMeasure(atoms[:, 1:], atoms[:, 0])
    if "uniform" in spec:
        u = spec["uniform"]
        return uniform_interval(float(u["a"]), float(u["b"]), int(u["n"]))
    if "disc" in spec:
        return unit_disc(int(spec["disc"]["n"]))
    raise ConfigError(f"{where}: need one of dirac/atoms/uniform/disc")


def _resolve_velocity_atoms(rows, where: str) -> VelocityMeasure:
    arr = np.asarray(rows, dtype=float)
    if arr.ndim != 2 or (arr.shape[1] - 1) % 2:
        raise ConfigError(f"{where}: rows must be [w, x1..xd, v1..vd]")
    d = (arr.shape[1] - 1) // 2
    return VelocityMeasure(arr[:, 1:1 + d], arr[:, 1 + d:], arr[:, 0])


def _resolve_field(spec, where: str = "field") -> fields.MpvfSpec:
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError(f"{where}: expected an object with a 'kind'")
    kind = spec["kind"]
    try:
        if kind == "potential":
            return fields.potential(spec.get("gradient", "quadratic"))
        if kind == "interaction":
            return fields.interaction(spec.get("gradient", "quadratic"))
        if kind == "constant":
            return fields.constant(_resolve_measure(_need(spec, "theta", where), "theta"))
        if kind == "rotation":
            return fields.rotation()
        if kind == "splitting_particle":
            return fields.splitting_particle()
        if kind == "toward_measure":
            return fields.toward_measure(
                _resolve_measure(_need(spec, "target", where), "target"),
                float(spec.get("sign", 1.0)))
        if kind == "pairwise_map":
            return fields.pairwise_map(_need(spec, "map", where))
        if kind == "per_particle_map":
            return fields.per_particle_map(_need(spec, "map", where))
        if kind == "composite_sum":
            children = [_resolve_field(c, f"{where}.children") for c in _need(spec, "children", where)]
            return fields.composite_sum(children)
    except fields.FieldError as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    raise ConfigError(f"{where}: unknown field kind {kind!r}")


def _resolve_reference(spec, field_spec, mu0, where: str = "reference"):
    kind = _need(spec, "type", where)
    if kind == "stationary":
        return lambda t: mu0
    if kind == "splitting":
        return lambda t: analysis.analytic_splitting(mu0, t)
    if kind == "geodesic":
        target = _resolve_measure(_need(spec, "target", where), "target")
        return lambda t: analysis.analytic_geodesic_flow(target, mu0, t)
    if kind == "lift":
        map_id = _need(spec, "map", where)
        return lambda t: analysis.analytic_lift(map_id, mu0, t)
    raise ConfigError(f"{where}: unknown reference type {kind!r}")


def _resolve_times(spec, where: str = "times") -> np.ndarray:
    try:
        return np.linspace(float(spec["start"]), float(spec["stop"]), int(spec["num"]))
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"{where}: need start/stop/num") from exc


def _resolve_curve(spec, where: str = "curve") -> analysis.CurveSamples:
    kind = _need(spec, "type", where)
    if kind == "euler":
        field_spec = _resolve_field(_need(spec, "field", where))
        mu0 = _resolve_measure(_need(spec, "mu0", where), "mu0")
        traj = euler_run(field_spec, mu0, float(spec["tau"]), float(spec["T"]),
                         float(spec["L"]))
        return analysis.CurveSamples.from_trajectory(traj,
                                                     stride=int(spec.get("stride", 1)))
    times = _resolve_times(_need(spec, "times", where))
    if kind == "stationary":
        mu = _resolve_measure(_need(spec, "measure", where), "measure")
        return analysis.CurveSamples(times, tuple(mu for _ in times))
    if kind == "analytic_splitting":
        mu0 = _resolve_measure(_need(spec, "mu0", where), "mu0")
        return analysis.CurveSamples.from_function(
            lambda t: analysis.analytic_splitting(mu0, t), times)
    if kind == "analytic_geodesic":
        target = _resolve_measure(_need(spec, "target", where), "target")
        mu0 = _resolve_measure(_need(spec, "mu0", where), "mu0")
        return analysis.CurveSamples.from_function(
            lambda t: analysis.analytic_geodesic_flow(target, mu0, t), times)
    raise ConfigError(f"{where}: unknown curve type {kind!r}")


def _report_csv(path: str, rows) -> None:
    lines = ["check,param,grid_t,lhs,rhs,excess"]
    for check, param, t, lhs, rhs, excess in rows:
        lines.append(f"{check},{param},{_fmt(t)},{_fmt(lhs)},{_fmt(rhs)},{_fmt(excess)}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def _json_default(obj):
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _write_json(path: str, payload) -> None:
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True,
                                       default=_json_default) + "\n")


def _write_manifest(outdir: str, config: dict) -> None:
    names = sorted(f for f in os.listdir(outdir)
                   if f != "manifest.json" and os.path.isfile(os.path.join(outdir, f)))
    hashes = {}
    for name in names:
        with open(os.path.join(outdir, name), "rb") as handle:
            hashes[name] = hashlib.sha256(handle.read()).hexdigest()
    _write_json(os.path.join(outdir, "manifest.json"), {
        "files": hashes,
        "config": config,
        "tolerances": tolerance_table(),
        "version": __version__,
        "backend": active_backend(),
    })


# --- command handlers ---------------------------------------------------------

def _cmd_simulate(cfg: dict, outdir: str, log) -> int:
    field_spec = _resolve_field(_need(cfg, "field", "config"))
    mu0 = _resolve_measure(_need(cfg, "initial_measure", "config"), "initial_measure")
    num = _need(cfg, "numeric", "config")
    tau = float(_need(num, "tau", "numeric"))
    horizon = float(_need(num, "T", "numeric"))
    lam = float(num.get("lambda", 0.0))
    resolved = {}
    bound = num.get("L", "auto")
    if bound == "auto":
        coeffs = num.get("M_of_R", [1.0, 1.0])
        psi0 = fields.evaluate(field_spec, mu0)
        gb = global_bounds(mu0, psi0, horizon, lam,
                           lambda R: coeffs[0] + coeffs[1] * R)
        bound = gb.L
        resolved = {"auto_L": gb.L, "auto_R": gb.R, "auto_tau_max": gb.tau_max}
        if tau > gb.tau_max:
            raise ConfigError(
                f"tau={tau} exceeds the admissible step {gb.tau_max} for auto L")
    bound = float(bound)

    traj = euler_run(field_spec, mu0, tau, horizon, bound)
    for n, measure in enumerate(traj.measures):
        save_measure(os.path.join(outdir, f"step_{n:04d}.csv"), measure)
    _write_json(os.path.join(outdir, "index.json"), {
        "tau": traj.tau, "T": traj.horizon, "L": traj.stability_bound,
        "N": traj.n_steps, "field_spec": field_spec.describe(),
        "resampled": traj.resampled, **resolved,
    })
    log(f"simulate: {traj.n_steps} steps, {traj.measures[-1].n} final atoms")

    if "reference" in cfg:
        ref = _resolve_reference(cfg["reference"], field_spec, mu0)
        rows = []
        max_err = 0.0
        for k, t in enumerate(traj.times):
            err = math.sqrt(w2(traj.measures[k], ref(float(t))).cost)
            rows.append(("reference_w2", cfg["reference"]["type"], float(t),
                         err, 0.0, err))
            max_err = max(max_err, err)
        _report_csv(os.path.join(outdir, "reference_report.csv"), rows)
        _write_json(os.path.join(outdir, "summary.json"),
                    {"max_reference_w2": max_err})
        log(f"simulate: max reference W2 error {max_err:.3e}")
    return 0


def _cmd_pairing(cfg: dict, outdir: str, log) -> int:
    mode = cfg.get("mode", "single")
    if mode == "suite":
        num = cfg.get("numeric", {})
        rows, failures = identities.run_suite(
            n_instances=int(cfg.get("n_instances", 100)),
            seed=int(num.get("seed", 0)),
            max_atoms=int(cfg.get("max_atoms", 6)),
            max_dim=int(cfg.get("max_dim", 3)))
        _report_csv(os.path.join(outdir, "suite_report.csv"),
                    [(check, str(idx), 0.0, lhs, rhs, excess)
                     for check, idx, lhs, rhs, excess in rows])
        _write_json(os.path.join(outdir, "summary.json"),
                    {"n_rows": len(rows), "n_failures": len(failures)})
        log(f"pairing suite: {len(rows)} checks, {len(failures)} failures")
        return 3 if failures else 0

    phi_spec = _need(cfg, "phi", "config")
    if "velocity_atoms" in phi_spec:
        phi = _resolve_velocity_atoms(phi_spec["velocity_atoms"], "phi")
    else:
        field_spec = _resolve_field(_need(phi_spec, "field", "phi"))
        base = _resolve_measure(_need(phi_spec, "at", "phi"), "phi.at")
        phi = fields.evaluate(field_spec, base)
    against = _need(cfg, "against", "config")
    if "velocity_atoms" in against:
        other = _resolve_velocity_atoms(against["velocity_atoms"], "against")
        right = pairing_r(phi, other)
        left = pairing_l(phi, other)
        w2sq = w2(x_marginal(phi), x_marginal(other)).cost
    else:
        nu = _resolve_measure(against, "against")
        right = pairing_r_nu(phi, nu)
        left = pairing_l_nu(phi, nu)
        w2sq = w2(x_marginal(phi), nu).cost
    _write_json(os.path.join(outdir, "pairing.json"),
                {"right": pairing_to_record(right), "left": pairing_to_record(left),
                 "w2_sq_marginals": w2sq})
    log(f"pairing: right={right.value:.12g} left={left.value:.12g}")

    expect = cfg.get("expect")
    if expect:
        tol = float(expect.get("tol", 1e-9))
        ok = (abs(right.value - float(expect["right"])) <= tol
              and abs(left.value - float(expect["left"])) <= tol)
        return 0 if ok else 3
    return 0


def _cmd_certify(cfg: dict, outdir: str, log) -> int:
    cases = cfg.get("cases")
    if not cases:
        raise ConfigError("certify needs a nonempty 'cases' list")
    num = cfg.get("numeric", {})
    seed = int(num.get("seed", 0))
    reports = []
    all_ok = True
    for k, case in enumerate(cases):
        field_spec = _resolve_field(_need(case, "field", f"cases[{k}]"))
        lam = float(_need(case, "lambda", f"cases[{k}]"))
        condition = case.get("condition", "strong")
        sampler = fields.MeasureSampler(dim=int(case.get("dim", 1)),
                                        seed=seed + k)
        n_pairs = int(case.get("n_pairs", 50))
        if condition == "strong":
            report = fields.dissipativity_certificate(field_spec, sampler, lam, n_pairs)
        elif condition == "weak":
            report = fields.weak_dissipativity_certificate(field_spec, sampler, lam, n_pairs)
        else:
            raise ConfigError(f"cases[{k}]: unknown condition {condition!r}")
        expect_pass = case.get("expect", "pass") == "pass"
        ok = report.passed == expect_pass
        all_ok = all_ok and ok
        name = case.get("name", f"case{k}")
        reports.append({"name": name, "expected": "pass" if expect_pass else "fail",
                        "as_expected": ok, **report.to_record()})
        log(f"certify {name}: passed={report.passed} max_residual={report.max_residual:.3e}")
    _write_json(os.path.join(outdir, "certificates.json"), reports)
    return 0 if all_ok else 3


def _cmd_evi_check(cfg: dict, outdir: str, log) -> int:
    checks = cfg.get("checks")
    if not checks:
        raise ConfigError("evi-check needs a nonempty 'checks' list")
    rows_out = []
    summary = {}
    all_ok = True
    for k, chk in enumerate(checks):
        kind = _need(chk, "check", f"checks[{k}]")
        name = chk.get("name", f"{kind}{k}")
        if kind == "evi":
            curve = _resolve_curve(_need(chk, "curve", name))
            field_spec = _resolve_field(_need(chk, "field", name))
            nu = _resolve_measure(_need(chk, "nu", name), "nu")
            lam = float(_need(chk, "lambda", name))
            table, residual, budget = analysis.evi_table(curve, field_spec, nu, lam)
            rows_out += [(name, f"s={_fmt(s)}", t, lhs, rhs, excess)
                         for s, t, lhs, rhs, excess in table]
            passed = residual <= budget
            expect_violation = bool(chk.get("expect_violation", False))
            summary[name] = {"max_excess": residual, "budget": budget,
                             "passed": passed,
                             "as_expected": passed != expect_violation}
            all_ok = all_ok and (passed != expect_violation)
        elif kind == "contraction":
            field_spec = _resolve_field(_need(chk, "field", name))
            mu0 = _resolve_measure(_need(chk, "mu0", name), "mu0")
            mu1 = _resolve_measure(_need(chk, "mu1", name), "mu1")
            table = analysis.contraction_table(
                field_spec, mu0, mu1, float(chk["tau"]), float(chk["T"]),
                float(chk["lambda"]), float(chk["L"]))
            rows_out += [(name, "", t, d, b, e) for t, d, b, e in table]
            excess = max(r[3] for r in table)
            passed = excess <= CHECK_TOL
            summary[name] = {"max_excess": excess, "passed": passed,
                             "as_expected": passed}
            all_ok = all_ok and passed
        elif kind == "cauchy":
            field_spec = _resolve_field(_need(chk, "field", name))
            mu0 = _resolve_measure(_need(chk, "mu0", name), "mu0")
            taus = chk["taus"]
            horizon = float(chk["T"])
            bound = float(chk["L"])
            run_a = euler_run(field_spec, mu0, float(taus[0]), horizon, bound)
            run_b = euler_run(field_spec, mu0, float(taus[1]), horizon, bound)
            table = analysis.cauchy_table(run_a, run_b, float(chk.get("theta", 2.0)),
                                          float(chk["lambda"]))
            rows_out += [(name, "", t, d, b, e) for t, d, b, e in table]
            excess = max(r[3] for r in table)
            passed = excess <= 0.0
            summary[name] = {"max_excess": excess, "passed": passed,
                             "as_expected": passed}
            all_ok = all_ok and passed
        elif kind == "ievi":
            field_spec = _resolve_field(_need(chk, "field", name))
            mu0 = _resolve_measure(_need(chk, "mu0", name), "mu0")
            nu = _resolve_measure(_need(chk, "nu", name), "nu")
            traj = euler_run(field_spec, mu0, float(chk["tau"]), float(chk["T"]),
                             float(chk["L"]))
            table, scale = ievi_rows(traj, nu)
            rows_out += [(name, f"n={n}", n * traj.tau, lhs, rhs, e)
                         for n, lhs, rhs, e in table]
            excess = max(r[3] for r in table)
            passed = excess <= CHECK_TOL * (1.0 + scale)
            summary[name] = {"max_excess": excess, "passed": passed,
                             "as_expected": passed}
            all_ok = all_ok and passed
        elif kind == "barycentric":
            curve = _resolve_curve(_need(chk, "curve", name))
            field_spec = _resolve_field(_need(chk, "field", name))
            table, budget = analysis.barycentric_table(curve, field_spec)
            rows_out += [(name, fn, t, lhs, rhs, e) for fn, t, lhs, rhs, e in table]
            excess = max(r[4] for r in table)
            passed = excess <= budget
            summary[name] = {"max_excess": excess, "budget": budget,
                             "passed": passed, "as_expected": passed}
            all_ok = all_ok and passed
        else:
            raise ConfigError(f"checks[{k}]: unknown check {kind!r}")
        log(f"evi-check {name}: {summary[name]}")
    _report_csv(os.path.join(outdir, "report.csv"), rows_out)
    _write_json(os.path.join(outdir, "summary.json"), summary)
    return 0 if all_ok else 3


def _cmd_rate_study(cfg: dict, outdir: str, log) -> int:
    studies = cfg.get("studies")
    if not studies:
        raise ConfigError("rate-study needs a nonempty 'studies' list")
    lines = ["study,tau,error"]
    fits = {}
    all_ok = True
    for k, st in enumerate(studies):
        name = st.get("name", f"study{k}")
        field_spec = _resolve_field(_need(st, "field", name))
        mu0 = _resolve_measure(_need(st, "initial_measure", name), "initial_measure")
        reference = _resolve_reference(_need(st, "reference", name), field_spec, mu0)
        fit = analysis.error_rate_study(field_spec, mu0, reference,
                                        [float(t) for t in _need(st, "taus", name)],
                                        float(_need(st, "T", name)),
                                        float(_need(st, "L", name)))
        for tau, err in zip(fit.taus, fit.errors):
            lines.append(f"{name},{_fmt(tau)},{_fmt(err)}")
        fits[name] = {"slope": fit.slope, "intercept": fit.intercept,
                      "r2": fit.r2, "excluded": list(fit.excluded)}
        log(f"rate-study {name}: slope={fit.slope:.4f} r2={fit.r2:.5f}")
        expect = st.get("expect_slope")
        if expect is not None:
            lo, hi = float(expect[0]), float(expect[1])
            ok = (not math.isnan(fit.slope)) and lo <= fit.slope <= hi
            fits[name]["as_expected"] = ok
            all_ok = all_ok and ok
    atomic_write_text(os.path.join(outdir, "rates.csv"), "\n".join(lines) + "\n")
    _write_json(os.path.join(outdir, "fit.json"), fits)
    return 0 if all_ok else 3


_HANDLERS = {
    "simulate": _cmd_simulate,
    "pairing": _cmd_pairing,
    "certify": _cmd_certify,
    "evi-check": _cmd_evi_check,
    "rate-study": _cmd_rate_study,
}


def run(config: dict, outdir: str, quiet: bool = False) -> int:
    """Execute one experiment config; returns the process exit code."""

    def log(msg: str):
        if not quiet:
            print(msg)

    command = config.get("command")
    if command not in _HANDLERS:
        raise ConfigError(f"unknown command {command!r}; "
                          f"expected one of {sorted(_HANDLERS)}")
    os.makedirs(outdir, exist_ok=True)
    code = _HANDLERS[command](config, outdir, log)
    _write_manifest(outdir, config)
    log(f"artifacts in {outdir} (exit {code})")
    return code


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="wassdyn",
        description="Particle-based simulation and verification of dissipative "
                    "evolutions in the quadratic Wasserstein space.")
    sub = parser.add_subparsers(dest="cmd", required=True)
    runp = sub.add_parser("run", help="execute a config or preset")
    runp.add_argument("--config", help="path to a JSON experiment config")
    runp.add_argument("--preset", help="name of a built-in preset")
    runp.add_argument("--seed", type=int, default=None, help="override numeric.seed")
    runp.add_argument("--out", default=None, help="output directory")
    runp.add_argument("--quiet", action="store_true")
    sub.add_parser("list-presets", help="print the preset catalog")
    args = parser.parse_args(argv)

    if args.cmd == "list-presets":
        for name in presets.list_presets():
            print(name)
        return 0

    try:
        if bool(args.config) == bool(args.preset):
            raise ConfigError("provide exactly one of --config or --preset")
        if args.preset:
            if args.preset not in presets.PRESETS:
                raise ConfigError(f"unknown preset {args.preset!r}")
            config = json.loads(json.dumps(presets.PRESETS[args.preset]))
            default_out = f"out_{args.preset}"
        else:
            with open(args.config) as handle:
                config = json.load(handle)
            default_out = "out_" + os.path.splitext(os.path.basename(args.config))[0]
        if args.seed is not None:
            config.setdefault("numeric", {})["seed"] = int(args.seed)
        outdir = args.out or config.get("output_dir") or default_out
        return run(config, outdir, quiet=args.quiet)
    except (ConfigError, json.JSONDecodeError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except StabilityViolation as exc:
        print(f"stability violation: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
