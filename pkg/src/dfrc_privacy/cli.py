"""Command line front end.

Subcommands: design (one precoder, beampattern dump), attack (one
design-and-estimate trial with particle traces), sweep (full Monte Carlo
experiment), oracle (particle filter vs exact posterior on a static
likelihood). Every ExperimentConfig field has a flag; unset flags fall back
to the config defaults. Failures print a JSON error record to stderr and
exit nonzero.
"""

import argparse
import csv
import json
import os
import sys

import numpy as np

from .precoder import desired_beampattern, beampattern, sinr
from .adversary import (CellLikelihoodTable, run_particle_filter,
                        run_static_filter, occupancy_fractions, classify)
from .harness import (ExperimentConfig, run_experiment, emit_results,
                      resolve_out_dir, dbm_to_watts,
                      product_likelihood_posterior, _placements, _design_for,
                      _run_seed, _SLOT_FILTER)
from .scene import AngleGrid, build_grid

_UNSET = object()

_INT_FIELDS = ("M_T", "N_R", "K", "adversary_index", "max_iters", "M", "T",
               "num_runs", "root_seed")
_FLOAT_FIELDS = ("delta", "P_t", "alpha_pl", "extent", "cell_size",
                 "angle_lo", "angle_hi", "angle_step", "Gamma_dB",
                 "sigma_k_sq_dBm", "beam_width", "epsilon",
                 "conf_threshold", "angle_threshold")


def _flag(name):
    return "--" + name.lower().replace("_", "-")


def _float_or_none(s):
    return None if s.lower() == "none" else float(s)


def _int_or_none(s):
    return None if s.lower() == "none" else int(s)


def _position(s):
    v = json.loads(s)
    return tuple(float(c) for c in v)


def _positions_or_none(s):
    if s.lower() == "none":
        return None
    v = json.loads(s)
    return tuple(tuple(float(c) for c in p) for p in v)


def _position_or_none(s):
    return None if s.lower() == "none" else _position(s)


def _sweep_value(tok):
    tok = tok.strip()
    try:
        return int(tok)
    except ValueError:
        pass
    try:
        return float(tok)
    except ValueError:
        return tok


def _parse_sweep(entries):
    out = []
    for entry in entries:
        if "=" not in entry:
            raise ValueError(f"sweep entry {entry!r} is not name=v1,v2,...")
        name, rhs = entry.split("=", 1)
        out.append((name.strip(),
                    tuple(_sweep_value(t) for t in rhs.split(","))))
    return tuple(out)


def _add_config_flags(p):
    for name in _INT_FIELDS:
        p.add_argument(_flag(name), dest=name, type=int, default=None)
    for name in _FLOAT_FIELDS:
        p.add_argument(_flag(name), dest=name, type=float, default=None)
    p.add_argument("--sigma-sq-dbm", dest="sigma_sq_dBm",
                   type=_float_or_none, default=_UNSET)
    p.add_argument("--n-th", dest="n_th", type=_int_or_none, default=_UNSET)
    p.add_argument("--cell-stat", dest="cell_stat", default=None)
    p.add_argument("--out-dir", dest="out_dir", default=None)
    p.add_argument("--bs-position", dest="bs_position", type=_position,
                   default=None)
    p.add_argument("--user-positions", dest="user_positions",
                   type=_positions_or_none, default=_UNSET)
    p.add_argument("--target-position", dest="target_position",
                   type=_position_or_none, default=_UNSET)
    p.add_argument("--sweep", dest="sweep", action="append", default=None,
                   metavar="NAME=V1,V2,...")


def _config_from_args(args):
    kwargs = {}
    for name in _INT_FIELDS + _FLOAT_FIELDS + ("cell_stat", "out_dir",
                                               "bs_position"):
        v = getattr(args, name)
        if v is not None:
            kwargs[name] = v
    for name in ("sigma_sq_dBm", "n_th", "user_positions", "target_position"):
        v = getattr(args, name)
        if v is not _UNSET:
            kwargs[name] = v
    if args.sweep is not None:
        kwargs["sweep"] = _parse_sweep(args.sweep)
    return ExperimentConfig(**kwargs)


def _single_trial_design(config, run_index=0):
    users, target = _placements(config, config.root_seed, run_index)
    return _design_for(config, users, target, config.root_seed, run_index, {})


def _cmd_design(args):
    config = _config_from_args(args)
    scenario, sol, angle_grid = _single_trial_design(config)
    d = resolve_out_dir(config)
    desired = desired_beampattern(scenario.theta_target, config.beam_width,
                                  angle_grid)
    synth = beampattern(sol.R, angle_grid.samples, config.delta)
    bp_path = os.path.join(d, "beampattern.csv")
    with open(bp_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["angle_deg", "desired", "synthesized"])
        for theta, want, got in zip(angle_grid.samples, desired.values, synth):
            w.writerow([theta, want, got])
    sinr_db = [10 * np.log10(sinr(k, sol, _rebuild_channels(config, scenario),
                                  scenario.sigma_k_sq))
               for k in range(scenario.K)]
    meta = {
        "theta_target": scenario.theta_target,
        "alpha_scale": sol.alpha_scale,
        "objective_trace": list(sol.objective_trace),
        "converged": sol.converged,
        "iterations": sol.iterations,
        "Gamma_dB": config.Gamma_dB,
        "sinr_dB": sinr_db,
    }
    meta_path = os.path.join(d, "design.json")
    with open(meta_path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(bp_path)
    print(meta_path)
    return 0


def _rebuild_channels(config, scenario):
    from .scene import generate_channels
    from .harness import _SLOT_CHANNELS
    return generate_channels(scenario,
                             _run_seed(config.root_seed, 0, _SLOT_CHANNELS))


def _cmd_attack(args):
    config = _config_from_args(args)
    scenario, sol, angle_grid = _single_trial_design(config)
    grid = build_grid(config.extent, config.cell_size, config.bs_position)
    sigma_sq = (0.0 if config.sigma_sq_dBm is None
                else dbm_to_watts(config.sigma_sq_dBm))
    snaps = tuple(int(t) for t in args.snapshot_times.split(",")) \
        if args.snapshot_times else ()
    pf_seed = _run_seed(config.root_seed, 0, _SLOT_FILTER)
    if snaps:
        particles, snapshots = run_particle_filter(
            sol, grid, angle_grid, M=config.M, T=config.T, sigma_sq=sigma_sq,
            rng_seed=pf_seed, n_th=config.n_th, cell_stat=config.cell_stat,
            delta=config.delta, snapshot_times=snaps)
    else:
        particles = run_particle_filter(
            sol, grid, angle_grid, M=config.M, T=config.T, sigma_sq=sigma_sq,
            rng_seed=pf_seed, n_th=config.n_th, cell_stat=config.cell_stat,
            delta=config.delta)
        snapshots = {}
    outcome = classify(particles, grid, scenario.theta_target,
                       conf_threshold=config.conf_threshold,
                       angle_threshold=config.angle_threshold)
    d = resolve_out_dir(config)
    paths = []
    for t, snap in sorted(snapshots.items()):
        path = os.path.join(d, f"particles_t{t}.csv")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "y", "weight"])
            for (x, y), wt in zip(snap.positions, snap.weights):
                w.writerow([x, y, wt])
        paths.append(path)
    out = {
        "label": outcome.label,
        "confidence": outcome.confidence,
        "estimated_angle": outcome.estimated_angle,
        "angle_error": outcome.angle_error,
        "theta_target": scenario.theta_target,
    }
    out_path = os.path.join(d, "attack.json")
    with open(out_path, "w") as fh:
        json.dump(out, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for p in paths + [out_path]:
        print(p)
    return 0


def _cmd_sweep(args):
    config = _config_from_args(args)
    result = run_experiment(config)
    csv_path, json_path = emit_results(result)
    print(csv_path)
    print(json_path)
    return 0


def _cmd_oracle(args):
    grid = build_grid(args.grid_n * args.oracle_cell, args.oracle_cell)
    lik = np.full(grid.n_cells, args.base_likelihood)
    lik[args.peak_cell] = args.peak_likelihood
    table = CellLikelihoodTable(B_En=-np.log1p(-lik), likelihood=lik)
    mean_occ = np.zeros(grid.n_cells)
    for s in range(args.seeds):
        particles = run_static_filter(table, grid, M=args.M, T=args.t,
                                      rng_seed=[args.root_seed, s])
        mean_occ += occupancy_fractions(particles, grid)
    mean_occ /= args.seeds
    exact = product_likelihood_posterior(lik, args.t)
    tv = 0.5 * np.abs(mean_occ - exact).sum()
    d = resolve_out_dir(ExperimentConfig(out_dir=args.out_dir))
    out_path = os.path.join(d, "oracle.json")
    with open(out_path, "w") as fh:
        json.dump({"tv_distance": float(tv),
                   "mean_occupancy": mean_occ.tolist(),
                   "exact_posterior": exact.tolist()}, fh,
                  indent=2, sort_keys=True)
        fh.write("\n")
    print(f"tv_distance {tv:.6f}")
    print(out_path)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="dfrc-privacy")
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn in (("design", _cmd_design), ("attack", _cmd_attack),
                     ("sweep", _cmd_sweep)):
        sp = sub.add_parser(name)
        _add_config_flags(sp)
        sp.set_defaults(fn=fn)
        if name == "attack":
            sp.add_argument("--snapshot-times", default="",
                            metavar="T1,T2,...")
    sp = sub.add_parser("oracle")
    sp.add_argument("--grid-n", type=int, default=4)
    sp.add_argument("--oracle-cell", type=float, default=100.0)
    sp.add_argument("--peak-cell", type=int, default=5)
    sp.add_argument("--peak-likelihood", type=float, default=0.9)
    sp.add_argument("--base-likelihood", type=float, default=0.45)
    sp.add_argument("--t", type=int, default=10)
    sp.add_argument("--M", dest="M", type=int, default=200)
    sp.add_argument("--seeds", type=int, default=500)
    sp.add_argument("--root-seed", type=int, default=0)
    sp.add_argument("--out-dir", default=None)
    sp.set_defaults(fn=_cmd_oracle)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except Exception as exc:
        record = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(record, sort_keys=True), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
