"""Command-line front end.

One JSON config drives every subcommand; each command reads its own section::

    {
      "seed": 0,
      "geometry": {"L": 6.283185307179586, "gamma": 1.0},
      "spectrum": {"count": 1000},
      "constants": {"cutoff": 10000, "tolerance": 1e-6},
      "thresholds": {"nu": 0.05, "mu": 0.5, "F_inf": 0.075, "f_L2": null, "boundary": "periodic"},
      "sim": {"nu": 0.05, "mu": 0.5, "dt": 0.05, "t_end": 100, "grid": 128,
              "forcing": {"kind": "kolmogorov", "s": 1, "amplitude": 0.075},
              "initial": {"rms_vorticity": 1.0, "k_peak": 4.0}, "sample_every": 10},
      "sync": {"coupling": {"kind": "mode_projection", "m": "theory"},
               "seeds": [0, 1], "horizon": null, "threshold": 1e-8, "search": [0, 2, 4, 8]},
      "inequalities": {"cases": ["agmon_scalar"], "samples": 10000, "cutoffs": [1, 2, 4, 8]}
    }

Exit codes: 0 success, 2 invalid config, 3 numerical failure, 4 inequality violation.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import platform
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .constants import ConvergenceError, constants_table, write_constants_json
from .inequalities import CASES, default_case, run_campaign, write_campaign_json
from .lattice import LatticeBoundsError, TorusGeometry, enumerate_spectrum, verify_eigenvalue_bounds, write_spectrum_csv
from .solver import (BlowUpError, ForcingSpec, SimParams, SpectralGrid, forcing_norms, random_field, run,
                     save_snapshot, verify_time_average_bounds, write_trajectory_csv)
from .sync import (CouplingSpec, NoConvergenceError, damped_alpha, find_empirical_threshold, gronwall_check,
                   run_sync, write_sync_csv, write_sync_summary)
from .thresholds import (attractor_dimension_bound, modes_damped, modes_periodic, nodes_damped, nodes_periodic,
                         write_reports_json)

EXIT_SCHEMA, EXIT_NUMERICAL, EXIT_VIOLATION = 2, 3, 4
SECTIONS = {"seed", "geometry", "spectrum", "constants", "thresholds", "sim", "sync", "inequalities"}
COMMANDS = ("spectrum", "constants", "thresholds", "simulate", "sync", "verify-inequalities")


class ConfigError(ValueError):
    pass


# --- config ----------------------------------------------------------------------


def load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(cfg) - SECTIONS
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    return cfg


def _section(cfg, name, allowed):
    sec = cfg.get(name, {})
    if not isinstance(sec, dict):
        raise ConfigError(f"section {name!r} must be an object")
    unknown = set(sec) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown keys in {name!r}: {sorted(unknown)}")
    return sec


def _number(sec, key, default=None, positive=False, nonneg=False, required=False):
    v = sec.get(key, default)
    if v is None:
        if required:
            raise ConfigError(f"missing required key {key!r}")
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{key!r} must be a finite number, got {v!r}")
    if positive and not v > 0:
        raise ConfigError(f"{key!r} must be positive, got {v}")
    if nonneg and v < 0:
        raise ConfigError(f"{key!r} must be nonnegative, got {v}")
    return v


def geometry_from(cfg) -> TorusGeometry:
    sec = _section(cfg, "geometry", {"L", "gamma"})
    L = _number(sec, "L", 2 * math.pi, positive=True)
    gamma = _number(sec, "gamma", 1.0)
    try:
        return TorusGeometry(float(L), float(gamma))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def sim_from(cfg):
    sec = _section(cfg, "sim", {"nu", "mu", "dt", "t_end", "grid", "forcing", "initial", "sample_every"})
    forcing = sec.get("forcing", {"kind": "zero"})
    try:
        params = SimParams(nu=_number(sec, "nu", required=True, nonneg=True),
                           mu=_number(sec, "mu", 0.0, nonneg=True),
                           dt=_number(sec, "dt", 1e-2, positive=True),
                           t_end=_number(sec, "t_end", 1.0, positive=True),
                           forcing=ForcingSpec(**forcing))
    except TypeError as exc:
        raise ConfigError(f"bad forcing: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    grid = sec.get("grid", 64)
    grid = grid if isinstance(grid, list) else [grid, grid]
    if len(grid) != 2 or not all(isinstance(n, int) and n >= 4 and n % 2 == 0 for n in grid):
        raise ConfigError("grid must be an even integer >= 4 or a pair of them")
    initial = sec.get("initial", {})
    if set(initial) - {"rms_vorticity", "k_peak"}:
        raise ConfigError("initial accepts rms_vorticity and k_peak")
    sample_every = sec.get("sample_every", 10)
    if not isinstance(sample_every, int) or sample_every < 1:
        raise ConfigError("sample_every must be a positive integer")
    return params, grid, initial, sample_every


# --- output helpers -------------------------------------------------------------


def _dump(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_default)
        fh.write("\n")


def _default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialise {type(o)}")


def config_hash(cfg) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()


def write_manifest(out: Path, command, cfg, derived, outputs):
    _dump({
        "command": command,
        "config": cfg,
        "config_hash": config_hash(cfg),
        "versions": {"detmodes": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__},
        "derived": derived,
        "outputs": sorted(outputs),
        "created": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }, out / "manifest.json")


# --- commands -------------------------------------------------------------------


def cmd_spectrum(cfg, out, args):
    geom = geometry_from(cfg)
    sec = _section(cfg, "spectrum", {"count"})
    count = sec.get("count", 1000)
    if not isinstance(count, int) or count < 1:
        raise ConfigError("spectrum.count must be a positive integer")
    spec = enumerate_spectrum(geom, count)
    write_spectrum_csv(spec, out / "spectrum.csv")
    report = verify_eigenvalue_bounds(spec)
    _dump({"checks": report.checks, "violations": report.violations}, out / "spectrum_bounds.json")
    derived = {"lambda_1": spec.eigenvalue(1), f"lambda_{count}": spec.eigenvalue(count)}
    return ["spectrum.csv", "spectrum_bounds.json"], derived, 0 if report.ok else EXIT_VIOLATION


def cmd_constants(cfg, out, args):
    geom = geometry_from(cfg)
    sec = _section(cfg, "constants", {"cutoff", "tolerance"})
    cutoff = sec.get("cutoff", 10_000)
    if not isinstance(cutoff, int) or cutoff < 1:
        raise ConfigError("constants.cutoff must be a positive integer")
    tol = _number(sec, "tolerance", 1e-6, positive=True)
    table = constants_table(geom.gamma, cutoff, tol)
    write_constants_json(table, out / "constants.json")
    return ["constants.json"], table.to_json(), 0


def threshold_inputs(cfg):
    """nu, mu and forcing norms from the thresholds section, falling back to sim."""
    geom = geometry_from(cfg)
    sec = _section(cfg, "thresholds", {"nu", "mu", "f_L2", "F_inf", "rot_f_L2", "boundary"})
    norms = {k: _number(sec, k, nonneg=True) for k in ("f_L2", "F_inf", "rot_f_L2")}
    nu, mu = _number(sec, "nu", positive=True), _number(sec, "mu", nonneg=True)
    if "sim" in cfg and (nu is None or all(v is None for v in norms.values())):
        params, grid, _, _ = sim_from(cfg)
        nu = nu if nu is not None else params.nu
        mu = mu if mu is not None else params.mu
        derived = forcing_norms(SpectralGrid(geom, *grid), params.forcing)
        norms = {k: (v if v is not None else derived[k]) for k, v in norms.items()}
    if nu is None or not nu > 0:
        raise ConfigError("thresholds need a positive nu")
    boundary = sec.get("boundary", "periodic")
    if boundary not in ("periodic", "stress_free"):
        raise ConfigError(f"unknown boundary {boundary!r}")
    return geom, nu, mu or 0.0, norms, boundary


def threshold_reports(cfg, grid_spectrum=None):
    geom, nu, mu, norms, boundary = threshold_inputs(cfg)
    spectrum = grid_spectrum or enumerate_spectrum(geom, 4000)
    reports, derived = [], {}
    if norms["f_L2"] is not None:
        reports.append(modes_periodic(norms["f_L2"], nu, geom, spectrum))
        reports.append(nodes_periodic(norms["f_L2"], nu, geom))
    if mu > 0 and norms["F_inf"] is not None:
        try:
            reports.append(modes_damped(norms["F_inf"], mu, nu, geom, boundary, spectrum))
        except ValueError:
            reports.append(modes_damped(norms["F_inf"], mu, nu, geom, boundary))
        reports.append(nodes_damped(norms["F_inf"], mu, nu, geom))
        if geom.gamma == 1:
            derived["attractor_dimension"] = attractor_dimension_bound(mu, nu, geom.L, norms["rot_f_L2"],
                                                                       norms["F_inf"])
    if not reports:
        raise ConfigError("no threshold applies: give f_L2, or mu > 0 with F_inf")
    return reports, derived


def cmd_thresholds(cfg, out, args):
    reports, derived = threshold_reports(cfg)
    write_reports_json(reports, out / "thresholds.json")
    derived["required_counts"] = {r.theorem_id: r.required_count for r in reports}
    if "attractor_dimension" in derived:
        _dump(derived["attractor_dimension"], out / "attractor_dimension.json")
        return ["thresholds.json", "attractor_dimension.json"], derived, 0
    return ["thresholds.json"], derived, 0


def cmd_simulate(cfg, out, args):
    geom = geometry_from(cfg)
    params, gsize, initial, sample_every = sim_from(cfg)
    grid = SpectralGrid(geom, *gsize)
    phi0 = random_field(grid, args.seed, k_peak=initial.get("k_peak", 4.0),
                        rms_vorticity=initial.get("rms_vorticity", 1.0))
    traj = run(phi0, params, sample_every=sample_every)
    write_trajectory_csv(traj, out / "trajectory.csv")
    save_snapshot(traj.final, out / "final.bin", traj.t_final)
    norms = forcing_norms(grid, params.forcing)
    summary = {"forcing_norms": norms, "t_final": traj.t_final}
    if params.mu > 0:
        t, sup = traj.times, traj.array("vorticity_sup")
        late = t > 10 / params.mu
        bound = norms["F_inf"] / params.mu
        summary["vorticity_sup_bound"] = {"bound": bound,
                                          "max_late": float(sup[late].max()) if late.any() else None}
    elif params.forcing.kind != "zero" and traj.t_final > 2:
        T = traj.t_final / 4
        summary["time_average_checks"] = [asdict(c) for c in verify_time_average_bounds(traj, params, geom, T)]
    _dump(summary, out / "simulate_summary.json")
    return ["trajectory.csv", "final.bin", "final.bin.json", "simulate_summary.json"], summary, 0


def cmd_sync(cfg, out, args):
    geom = geometry_from(cfg)
    params, gsize, initial, sample_every = sim_from(cfg)
    grid = SpectralGrid(geom, *gsize)
    sec = _section(cfg, "sync", {"coupling", "seeds", "horizon", "threshold", "search"})
    coupling = dict(sec.get("coupling", {"kind": "mode_projection", "m": "theory"}))
    seeds = sec.get("seeds", [args.seed])
    if not isinstance(seeds, list) or not seeds or not all(isinstance(s, int) for s in seeds):
        raise ConfigError("sync.seeds must be a nonempty list of integers")
    horizon = _number(sec, "horizon", positive=True)
    threshold = _number(sec, "threshold", 1e-8, positive=True)
    kind = coupling.get("kind", "mode_projection")
    derived = {}
    count_key = "m" if kind == "mode_projection" else "N"
    theory = None
    if params.mu > 0:
        cfg_t = dict(cfg)
        reports, _ = threshold_reports(cfg_t, grid.resolved_spectrum)
        by_id = {r.theorem_id: r for r in reports}
        rep = next((r for k, r in by_id.items() if k.startswith("modes_damped" if kind == "mode_projection"
                                                                   else "nodes_damped")), None)
        if rep is not None:
            theory = rep.required_count
            derived["theoretical_threshold"] = theory
            derived["theorem_id"] = rep.theorem_id
    if coupling.get(count_key) == "theory":
        if theory is None:
            raise ConfigError("'theory' counts need a damped run (mu > 0) with known forcing")
        coupling[count_key] = theory
    try:
        spec_template = CouplingSpec(**coupling)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad coupling: {exc}") from exc

    def inits(seed):
        kw = {"k_peak": initial.get("k_peak", 4.0), "rms_vorticity": initial.get("rms_vorticity", 1.0)}
        return random_field(grid, 2 * seed, **kw), random_field(grid, 2 * seed + 1, **kw)

    outputs, runs = [], []
    for seed in seeds:
        a, b = inits(seed)
        res = run_sync(a, b, params, spec_template, horizon, sample_every, threshold=threshold)
        name = f"sync_seed{seed}.csv"
        write_sync_csv(res, out / name)
        outputs.append(name)
        entry = {"seed": seed, **res.summary()}
        if res.lambda_next is not None and params.mu > 0 and math.isfinite(res.lambda_next):
            # The sup-norm bound is asymptotic: skip ten damping times first.
            burn = min(10 / params.mu, res.t[-1] / 2)
            T = (res.t[-1] - burn) / 4
            g = gronwall_check(res.t, damped_alpha(res, params.nu), 0.0, T, burn_in=burn)
            entry["gronwall"] = asdict(g)
        runs.append(entry)
    derived["runs"] = runs
    search = sec.get("search")
    if search is not None:
        if not isinstance(search, list) or not all(isinstance(v, int) for v in search):
            raise ConfigError("sync.search must be a list of integers")
        a, b = inits(seeds[0])

        def run_one(count):
            spec = CouplingSpec(**{**asdict(spec_template), count_key: count})
            return run_sync(a, b, params, spec, horizon, sample_every, threshold=threshold)

        star, table, monotone = find_empirical_threshold(run_one, search, jobs=args.jobs)
        derived["empirical_threshold"] = star
        derived["monotone"] = monotone
        derived["search_table"] = {str(k): v.summary() for k, v in sorted(table.items())}
        if theory:
            derived["ratio"] = star / theory
    write_sync_summary(out / "sync_summary.json", **derived)
    outputs.append("sync_summary.json")
    return outputs, derived, 0


def cmd_inequalities(cfg, out, args):
    geom = geometry_from(cfg)
    sec = _section(cfg, "inequalities", {"cases", "samples", "cutoffs"})
    names = sec.get("cases", list(CASES))
    if not isinstance(names, list) or any(n not in CASES for n in names):
        raise ConfigError(f"inequalities.cases must be drawn from {list(CASES)}")
    samples = sec.get("samples", 10_000)
    if not isinstance(samples, int) or samples < 1:
        raise ConfigError("inequalities.samples must be a positive integer")
    cutoffs = tuple(sec.get("cutoffs", (1, 2, 3, 4, 6, 8, 12)))
    cases = [default_case(n, geom.gamma) for n in names]
    reports = run_campaign(cases, samples, cutoffs, base_seed=args.seed, geometry=geom)
    write_campaign_json(reports, out / "inequalities.json")
    derived = {r.case.name: r.max_ratio for r in reports}
    status = 0 if all(r.ok for r in reports) else EXIT_VIOLATION
    return ["inequalities.json"], derived, status


HANDLERS = {"spectrum": cmd_spectrum, "constants": cmd_constants, "thresholds": cmd_thresholds,
            "simulate": cmd_simulate, "sync": cmd_sync, "verify-inequalities": cmd_inequalities}


def build_parser():
    p = argparse.ArgumentParser(prog="detmodes", description="Determining modes and nodes laboratory.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON config file")
        s.add_argument("--out", default=".", help="output directory")
        s.add_argument("--seed", type=int, default=None, help="overrides the config seed")
        s.add_argument("--jobs", type=int, default=1, help="parallel runs for threshold searches")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is None:
            seed = cfg.get("seed", 0)
            if not isinstance(seed, int):
                raise ConfigError("seed must be an integer")
            args.seed = seed
        cfg["seed"] = args.seed
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        outputs, derived, status = HANDLERS[args.command](cfg, out, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (ConvergenceError, BlowUpError, LatticeBoundsError, NoConvergenceError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    write_manifest(out, args.command, cfg, derived, outputs)
    if status == EXIT_VIOLATION:
        print("inequality or bound violation, see report", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
