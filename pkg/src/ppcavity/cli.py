"""Command-line interface: run engines, compare CSV outputs, check invariants.

Subcommands::

    ppcavity run --config run.cfg [--seed N] [--runs N] [--workers N] [--out PATH]
    ppcavity compare A.csv B.csv
    ppcavity check-invariants [--config run.cfg] [--seed N] [--points N] [--out PATH]

Flags override environment variables (prefix ``PPCAVITY_``, e.g.
``PPCAVITY_SEED``), which in turn override the configuration file.  Every run
writes a CSV (column order: t, then real_/imag_/stderr_ triples per
observable, stderr only for stochastic engines) and a JSON sidecar
``<out>.meta.json`` holding the resolved configuration, seed, and divergence
count, which suffices to reproduce the run bit for bit.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from .config import RunConfig, parse_config, serialize_config
from .errors import CavityError
from .initialization import init_points
from .invariants import run_all
from .jc import jc_sde_system, phase_init_sampler
from .maxwell_bloch import MbState, evolve_mb
from .observables import observable_bundle
from .physical import (
    physical_init_sampler,
    physical_observable_bundle,
    physical_sde_system,
    reconstruct_fields,
)
from .reference import TruncatedSpace, evolve, initial_density
from .sde import run_ensemble

ENV_PREFIX = "PPCAVITY_"
DIVERGENCE_WARNING_FRACTION = 0.01


def _env_override(name, cast):
    raw = os.environ.get(ENV_PREFIX + name)
    if raw is None:
        return None
    return cast(raw)


def _format_value(x: float) -> str:
    return repr(float(x))


def write_csv(path, times, names, columns, stderr=None):
    """Full round-trip precision CSV with the documented column order."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        header = ["t"]
        for name in names:
            header += [f"real_{name}", f"imag_{name}"]
            if stderr is not None:
                header.append(f"stderr_{name}")
        writer.writerow(header)
        for idx, t in enumerate(times):
            row = [_format_value(t)]
            for j, name in enumerate(names):
                value = columns[j][idx]
                row += [_format_value(value.real), _format_value(value.imag)]
                if stderr is not None:
                    row.append(_format_value(stderr[j][idx]))
            writer.writerow(row)


def read_csv(path):
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        rows = [[float(x) for x in row] for row in reader]
    data = np.array(rows) if rows else np.zeros((0, len(header)))
    return header, data


def _write_sidecar(out_path, cfg: RunConfig, extra):
    meta = {
        "version": __version__,
        "engine": cfg.engine,
        "master_seed": cfg.master_seed,
        "config": serialize_config(cfg),
        "config_sha256": hashlib.sha256(
            serialize_config(cfg).encode("utf-8")
        ).hexdigest(),
    }
    meta.update(extra)
    with open(str(out_path) + ".meta.json", "w") as handle:
        json.dump(meta, handle, indent=2, sort_keys=True)
        handle.write("\n")


def run_sde_jc(cfg: RunConfig):
    params = cfg.model_params()
    family = cfg.family()
    grid = cfg.grid()
    dist = init_points(cfg.atomic_density(), family)
    sampler = phase_init_sampler(params, family, cfg.alpha, dist)
    system = jc_sde_system(params, family)
    bundle = observable_bundle(params, family, cfg.observables, cfg.probes)
    return run_ensemble(
        system,
        sampler,
        grid,
        cfg.runs,
        cfg.master_seed,
        bundle,
        workers=cfg.effective_workers(),
        divergence_threshold=cfg.divergence_threshold,
    )


def run_sde_physical(cfg: RunConfig):
    params = cfg.model_params()
    family = cfg.family()
    grid = cfg.grid()
    dist = init_points(cfg.atomic_density(), family)
    phase_sampler = phase_init_sampler(params, family, cfg.alpha, dist)
    sampler = physical_init_sampler(family, phase_sampler)
    system = physical_sde_system(params)
    bundle = physical_observable_bundle(params, cfg.observables, cfg.probes)
    return run_ensemble(
        system,
        sampler,
        grid,
        cfg.runs,
        cfg.master_seed,
        bundle,
        workers=cfg.effective_workers(),
        divergence_threshold=cfg.divergence_threshold,
    )


def run_reference(cfg: RunConfig):
    params = cfg.model_params()
    space = TruncatedSpace((cfg.n_max,) * params.mode_count)
    rho0 = initial_density(params, space, cfg.alpha, cfg.atomic_density())
    return params, evolve(params, rho0, cfg.grid(), space)


def run_mb(cfg: RunConfig):
    params = cfg.model_params()
    atom = cfg.atomic_density()
    alpha = np.atleast_1d(np.asarray(cfg.alpha, dtype=complex))
    if alpha.size == 1 and params.mode_count > 1:
        alpha = np.repeat(alpha, params.mode_count)
    state0 = MbState(
        epsilon=2.0 * alpha.real,
        eta=2.0 * alpha.imag,
        rho21=complex(atom.rho21),
        nu=float((atom.rho22 - atom.rho11).real),
    )
    return params, evolve_mb(params, state0, cfg.grid())


def _deterministic_columns(cfg, params, traj):
    columns = []
    for name in cfg.observables:
        if name.startswith(("E_at_", "H_at_")):
            x = cfg.probes[int(name[5:]) - 1]
            n = params.mode_count
            n_pts = len(traj.times)
            phys = np.zeros((n_pts, 2 * n + 3), dtype=complex)
            for m in range(n):
                phys[:, 2 * m] = traj.column(f"e_{m + 1}")
                phys[:, 2 * m + 1] = traj.column(f"h_{m + 1}")
            e_val, h_val = reconstruct_fields(params, phys, x)
            columns.append(e_val if name.startswith("E_") else h_val)
        else:
            columns.append(np.asarray(traj.column(name)))
    return columns


def cmd_run(args) -> int:
    with open(args.config) as handle:
        cfg = parse_config(handle.read())
    overrides = {}
    seed = args.seed if args.seed is not None else _env_override("SEED", int)
    runs = args.runs if args.runs is not None else _env_override("RUNS", int)
    workers = args.workers if args.workers is not None else _env_override("WORKERS", int)
    out = args.out if args.out is not None else _env_override("OUT", str)
    if seed is not None:
        overrides["master_seed"] = seed
    if runs is not None:
        overrides["runs"] = runs
    if workers is not None:
        overrides["workers"] = workers
    if out is not None:
        overrides["out"] = out
    if overrides:
        cfg = replace(cfg, **overrides)
    if cfg.out is None:
        print("error: no output path (set out in [run] or pass --out)", file=sys.stderr)
        return 2

    if cfg.engine in ("sde-jc", "sde-mb-experimental"):
        result = run_sde_jc(cfg) if cfg.engine == "sde-jc" else run_sde_physical(cfg)
        columns = [result.mean[:, j] for j in range(len(result.names))]
        errs = [result.stderr[:, j] for j in range(len(result.names))]
        write_csv(cfg.out, result.grid.times, result.names, columns, errs)
        fraction = result.runs_diverged / result.runs_requested
        _write_sidecar(
            cfg.out,
            cfg,
            {
                "runs_requested": result.runs_requested,
                "runs_diverged": result.runs_diverged,
                "diverged_paths": list(result.diverged_paths[:100]),
            },
        )
        print(
            f"{cfg.engine}: {result.runs_completed}/{result.runs_requested} runs "
            f"completed ({result.runs_diverged} diverged) -> {cfg.out}"
        )
        if fraction > DIVERGENCE_WARNING_FRACTION:
            print(
                f"warning: divergent fraction {fraction:.2%} exceeds "
                f"{DIVERGENCE_WARNING_FRACTION:.0%}; statistics are suspect",
                file=sys.stderr,
            )
    else:
        params, traj = run_reference(cfg) if cfg.engine == "reference" else run_mb(cfg)
        columns = _deterministic_columns(cfg, params, traj)
        write_csv(cfg.out, traj.times, cfg.observables, columns)
        _write_sidecar(cfg.out, cfg, {})
        print(f"{cfg.engine}: wrote {cfg.out}")
    return 0


def cmd_compare(args) -> int:
    header_a, data_a = read_csv(args.first)
    header_b, data_b = read_csv(args.second)
    shared = [h for h in header_a if h in header_b and h != "t"]
    if not shared:
        print("error: no shared value columns", file=sys.stderr)
        return 2
    if data_a.shape[0] != data_b.shape[0]:
        print(
            f"error: row count mismatch ({data_a.shape[0]} vs {data_b.shape[0]})",
            file=sys.stderr,
        )
        return 2
    print("column,max_abs,rms")
    for name in shared:
        col_a = data_a[:, header_a.index(name)]
        col_b = data_b[:, header_b.index(name)]
        diff = col_a - col_b
        max_abs = float(np.abs(diff).max()) if diff.size else 0.0
        rms = float(np.sqrt(np.mean(diff**2))) if diff.size else 0.0
        print(f"{name},{max_abs!r},{rms!r}")
    return 0


def cmd_check_invariants(args) -> int:
    seed, points = 20240, 100
    if args.config:
        with open(args.config) as handle:
            cfg = parse_config(handle.read())
        seed, points = cfg.invariants_seed, cfg.invariants_points
    if args.seed is not None:
        seed = args.seed
    if args.points is not None:
        points = args.points
    report = run_all(seed=seed, points=points)
    text = json.dumps(report, indent=2)
    if args.out:
        with open(args.out, "w") as handle:
            handle.write(text + "\n")
    else:
        print(text)
    for check in report["checks"]:
        status = "pass" if check["passed"] else "FAIL"
        print(
            f"{status} {check['name']}: max_error={check['max_error']:.3e} "
            f"tolerance={check['tolerance']:.1e}",
            file=sys.stderr,
        )
    return 0 if report["passed"] else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ppcavity",
        description="Positive-P phase-space simulations of a two-level atom "
        "in a multimode cavity",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute the engine selected in the config")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--runs", type=int, default=None)
    p_run.add_argument("--workers", type=int, default=None)
    p_run.add_argument("--out", default=None)
    p_run.set_defaults(func=cmd_run)

    p_cmp = sub.add_parser("compare", help="per-column deviation of two CSV files")
    p_cmp.add_argument("first")
    p_cmp.add_argument("second")
    p_cmp.set_defaults(func=cmd_compare)

    p_inv = sub.add_parser("check-invariants", help="run the property suites")
    p_inv.add_argument("--config", default=None)
    p_inv.add_argument("--seed", type=int, default=None)
    p_inv.add_argument("--points", type=int, default=None)
    p_inv.add_argument("--out", default=None)
    p_inv.set_defaults(func=cmd_check_invariants)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CavityError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
