"""Command-line surface: simulate | semiwave | rates | verify | sweep | report.

Every command writes deterministic artifacts into --out together with the
fully-resolved configuration; reruns with the same resolved config produce
bit-identical files.  Exit codes: 0 success, 1 configuration/validation
problems, 2 runtime failures (convergence, resource caps) with partial
artifacts where available.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import asymptotics, validation
from .config import ScenarioConfig, apply_overrides, resolve_config
from .errors import (ContractError, ConvergenceError, InsufficientDataError,
                     ResourceError, ValidationError)
from .reactions import zero_reaction
from .semiwave import (SemiWaveConfig, minimal_speed, solve_semiwave,
                       stationary_profile)
from .solver import ProblemSpec, SolverConfig, run

_FMT = ".17g"


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, float) and math.isinf(obj):
        return "inf"
    raise TypeError(f"not serializable: {type(obj)}")


def _write_profile_csv(path, x, values, name="phi"):
    with open(path, "w") as fh:
        fh.write(f"x,{name}\n")
        for xi, vi in zip(x, values):
            fh.write(f"{xi:{_FMT}},{vi:{_FMT}}\n")


def _write_snapshots(outdir, log):
    for t, snap in log.snapshots:
        path = os.path.join(outdir, f"snapshot_{t:.6f}.csv")
        _write_profile_csv(path, snap.x, snap.values, name="u")


def _echo_config(outdir, scenario: ScenarioConfig):
    _write_json(os.path.join(outdir, "resolved_config.json"), scenario.to_json())


def cmd_simulate(scenario: ScenarioConfig, outdir: str) -> int:
    spec, cfg = scenario.validate()
    log = run(spec, cfg)
    log.to_csv(os.path.join(outdir, "trajectory.csv"))
    _write_snapshots(outdir, log)
    final = log.final_state
    _write_profile_csv(os.path.join(outdir, f"snapshot_{final.t:.6f}.csv"),
                       final.as_field().x, final.u, name="u")
    return 0


def cmd_semiwave(scenario: ScenarioConfig, outdir: str) -> int:
    spec, _ = scenario.validate()
    sw = scenario["semiwave"]
    cfg = SemiWaveConfig(dx=float(sw["dx"]),
                         L0=None if sw["L0"] is None else float(sw["L0"]))
    payload = {}
    sol = solve_semiwave(spec.kernel, spec.reaction, spec.d, spec.mu, cfg)
    payload["semiwave"] = sol.to_json()
    _write_profile_csv(os.path.join(outdir, "profile.csv"), sol.x, sol.phi)
    if sw["minimal_speed"]:
        try:
            payload["wave"] = minimal_speed(spec.kernel, spec.reaction, spec.d).to_json()
        except ValidationError as exc:
            payload["wave"] = {"error": str(exc)}
    if sw["stationary"]:
        d_val = sw["stationary_d"] if sw["stationary_d"] is not None else spec.d
        prof = stationary_profile(spec.kernel, spec.reaction, float(d_val))
        payload["stationary"] = prof.to_json()
        _write_profile_csv(os.path.join(outdir, "stationary.csv"), prof.x, prof.U,
                           name="U")
    _write_json(os.path.join(outdir, "semiwave.json"), payload)
    return 0


def cmd_rates(scenario: ScenarioConfig, outdir: str) -> int:
    spec, cfg = scenario.validate()
    log = run(spec, cfg)
    log.to_csv(os.path.join(outdir, "trajectory.csv"))
    an = scenario["analysis"]
    wf = float(an["window_fraction"])
    payload = {}
    for fit_name in an["fits"]:
        if fit_name == "linear":
            payload["linear"] = asymptotics.estimate_linear_speed(log, wf).to_json()
        elif fit_name == "power":
            payload["power"] = asymptotics.fit_power_exponent(log, wf).to_json()
        elif fit_name == "tlogt":
            payload["tlogt"] = asymptotics.fit_tlogt_coefficient(log, wf).to_json()
        else:
            raise ValidationError(f"unknown fit {fit_name!r}")
    if an["drift_check"]:
        c0 = an["c0"]
        if c0 is None:
            c0 = solve_semiwave(spec.kernel, spec.reaction, spec.d, spec.mu).c0
        payload["log_drift"] = asymptotics.log_drift_check(log, float(c0), wf).to_json()
        payload["log_drift"]["c0"] = float(c0)
    _write_json(os.path.join(outdir, "rates.json"), payload)
    return 0


def cmd_verify(scenario: ScenarioConfig, outdir: str) -> int:
    spec, cfg = scenario.validate()
    ver = scenario["verify"]
    payload = {}
    ok = True
    for check in ver["checks"]:
        if check == "mass-flux":
            zspec = ProblemSpec(variant="halfline-fb", kernel=spec.kernel,
                                reaction=zero_reaction(), d=spec.d, mu=spec.mu,
                                h0=spec.h0, u0=spec.initial_datum())
            log = run(zspec, cfg)
            resid = validation.mass_flux_residual(log, zspec)
            passed = resid <= float(ver["mass_flux_tol"])
            payload["mass_flux"] = {"residual": resid, "passed": passed}
        elif check == "comparison":
            scale = float(ver["comparison_scale"])
            base = spec.initial_datum()
            low = ProblemSpec(variant=spec.variant, kernel=spec.kernel,
                              reaction=spec.reaction, d=spec.d, mu=spec.mu,
                              h0=spec.h0, u0=lambda x: scale * np.asarray(base(x)))
            rep = validation.comparison_order_check(low, spec, cfg,
                                                    tol=float(ver["comparison_tol"]))
            passed = rep.passed
            payload["comparison"] = {"passed": rep.passed,
                                     "max_u_violation": rep.max_u_violation,
                                     "max_h_violation": rep.max_h_violation}
        elif check == "refinement":
            rep = validation.refinement_order(spec, cfg,
                                              levels=int(ver["refinement_levels"]))
            passed = (not rep.inconclusive) and rep.order is not None and rep.order >= 0.7
            payload["refinement"] = {"order": rep.order,
                                     "inconclusive": rep.inconclusive,
                                     "h_values": list(rep.h_values),
                                     "passed": passed}
        else:
            raise ValidationError(f"unknown verify check {check!r}")
        ok = ok and passed
    payload["passed"] = ok
    _write_json(os.path.join(outdir, "verify.json"), payload)
    return 0


def _sweep_one(args):
    base_raw, param, value, command, subdir = args
    cfg = json.loads(base_raw)
    apply_overrides(cfg, [f"{param}={json.dumps(value)}"])
    scenario = ScenarioConfig(cfg)
    scenario.validate()
    os.makedirs(subdir, exist_ok=True)
    _echo_config(subdir, scenario)
    rc = _COMMANDS[command](scenario, subdir)
    summary = {"value": value, "dir": os.path.basename(subdir), "rc": rc}
    if command == "semiwave":
        with open(os.path.join(subdir, "semiwave.json")) as fh:
            summary["c0"] = json.load(fh)["semiwave"]["c0"]
    else:
        data = np.genfromtxt(os.path.join(subdir, "trajectory.csv"),
                             delimiter=",", names=True)
        data = np.atleast_1d(data)
        summary["h_end"] = float(data["h"][-1])
    return summary


def cmd_sweep(scenario: ScenarioConfig, outdir: str, jobs: int = 1) -> int:
    sw = scenario["sweep"]
    values = sw["values"]
    if not values:
        raise ValidationError("sweep.values is empty")
    command = sw["command"]
    if command not in ("simulate", "semiwave", "rates"):
        raise ValidationError(f"sweep.command {command!r} not supported")
    base_raw = json.dumps(scenario.to_json())
    tasks = []
    for i, val in enumerate(values):
        subdir = os.path.join(outdir, f"p{i:03d}")
        tasks.append((base_raw, sw["parameter"], val, command, subdir))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            summaries = list(pool.map(_sweep_one, tasks))
    else:
        summaries = [_sweep_one(t) for t in tasks]
    _write_json(os.path.join(outdir, "summary.json"),
                {"parameter": sw["parameter"], "command": command,
                 "points": summaries})
    return 0


def cmd_report(outdir: str, dirs) -> int:
    rows = []
    for d in dirs:
        resolved = os.path.join(d, "resolved_config.json")
        if not os.path.exists(resolved):
            print(f"error: {d} lacks resolved_config.json; refusing", file=sys.stderr)
            return 1
        row = {"dir": d}
        for name in ("verify.json", "rates.json", "semiwave.json", "summary.json"):
            path = os.path.join(d, name)
            if os.path.exists(path):
                with open(path) as fh:
                    row[name.removesuffix(".json")] = json.load(fh)
        rows.append(row)
    _write_json(os.path.join(outdir, "report.json"), {"entries": rows})
    for row in rows:
        verdict = row.get("verify", {}).get("passed")
        print(f"{row['dir']}: verify={'-' if verdict is None else ('pass' if verdict else 'FAIL')}")
    return 0


_COMMANDS = {
    "simulate": cmd_simulate,
    "semiwave": cmd_semiwave,
    "rates": cmd_rates,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="nlfront",
        description="Nonlocal-diffusion free-boundary fronts: batch runs and diagnostics")
    parser.add_argument("command",
                        choices=["simulate", "semiwave", "rates", "verify",
                                 "sweep", "report"])
    parser.add_argument("--config", default=None, help="JSON scenario file")
    parser.add_argument("--set", action="append", default=[], metavar="K=V",
                        help="dotted-path override, repeatable")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--jobs", type=int, default=1, help="parallel sweep workers")
    parser.add_argument("dirs", nargs="*", help="directories for `report`")
    args = parser.parse_intermixed_args(argv)

    os.makedirs(args.out, exist_ok=True)
    try:
        if args.command == "report":
            return cmd_report(args.out, args.dirs or [args.out])
        scenario = resolve_config(args.config, args.set)
        _echo_config(args.out, scenario)
        if args.command == "sweep":
            return cmd_sweep(scenario, args.out, jobs=args.jobs)
        return _COMMANDS[args.command](scenario, args.out)
    except (ValidationError, ContractError, InsufficientDataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ConvergenceError, ResourceError) as exc:
        partial = getattr(exc, "partial", None)
        if partial is not None and hasattr(partial, "to_csv"):
            partial.to_csv(os.path.join(args.out, "trajectory_partial.csv"))
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
