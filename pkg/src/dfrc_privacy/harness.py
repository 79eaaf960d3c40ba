"""Monte Carlo experiment harness: config, sweeps, aggregation, output files.

A sweep runs num_runs independent trials per sweep point. Per-trial seeds
derive from (root_seed, run index, purpose slot) only, never from the sweep
point, so two sweep points see identical placements, channels, and filter
randomness wherever shapes agree. Aggregation reduces over run index order,
which keeps output files byte-stable no matter how runs are scheduled.
"""

import csv
import itertools
import json
import os
from dataclasses import dataclass, fields, replace

import numpy as np

from .scene import (Scenario, AngleGrid, ConfigError, generate_channels,
                    build_grid, _entropy)
from .precoder import design_precoder, InfeasibleQoS
from .adversary import run_particle_filter, classify

# per-run rng purpose slots
_SLOT_PLACEMENT, _SLOT_CHANNELS, _SLOT_DESIGN, _SLOT_FILTER = 0, 1, 2, 3

OUTDIR_ENV = "DFRC_PRIVACY_OUTDIR"

LABELS = ("Detection", "FalseAlarm", "MissDetection", "Undetection")


def dbm_to_watts(x_dbm):
    return 10.0 ** ((x_dbm - 30.0) / 10.0)


# fields that feed the precoder design (directly or through the channels);
# sweep points differing only elsewhere reuse one design per run
_DESIGN_KEY_FIELDS = (
    "M_T", "N_R", "K", "Gamma_dB", "sigma_k_sq_dBm", "P_t", "delta",
    "alpha_pl", "beam_width", "epsilon", "max_iters",
    "angle_lo", "angle_hi", "angle_step", "bs_position",
)

_SWEEPABLE = frozenset(_DESIGN_KEY_FIELDS) | {
    "sigma_sq_dBm", "M", "T", "cell_stat", "conf_threshold",
    "angle_threshold", "extent", "cell_size",
}


@dataclass
class ExperimentConfig:
    """Everything one experiment needs, JSON round-trippable.

    user_positions / target_position of None mean fresh uniform draws over
    the search area each run; fixed tuples pin them for every run.
    """
    M_T: int = 8
    N_R: int = 2
    K: int = 2
    adversary_index: int = 1
    delta: float = 0.5
    P_t: float = 1.0
    alpha_pl: float = 3.0
    bs_position: tuple = (0.0, 0.0)
    user_positions: tuple | None = ((800.0, 100.0), (750.0, 300.0))
    target_position: tuple | None = (550.0, 400.0)
    extent: float = 1000.0
    cell_size: float = 100.0
    angle_lo: float = 0.0
    angle_hi: float = 90.0
    angle_step: float = 0.1
    Gamma_dB: float = 12.0
    sigma_k_sq_dBm: float = -100.0
    sigma_sq_dBm: float | None = -10.0
    beam_width: float = 10.0
    epsilon: float = 0.01
    max_iters: int = 20
    M: int = 200
    T: int = 300
    num_runs: int = 100
    root_seed: int = 0
    cell_stat: str = "sum"
    n_th: int | None = None
    conf_threshold: float = 0.9
    angle_threshold: float = 10.0
    sweep: tuple = ()
    out_dir: str | None = None

    def __post_init__(self):
        self.bs_position = tuple(float(c) for c in self.bs_position)
        if self.user_positions is not None:
            self.user_positions = tuple(tuple(float(c) for c in p)
                                        for p in self.user_positions)
        if self.target_position is not None:
            self.target_position = tuple(float(c) for c in self.target_position)
        self.sweep = tuple((str(name), tuple(values))
                           for name, values in self.sweep)
        for name, values in self.sweep:
            if name not in _SWEEPABLE:
                raise ConfigError(f"cannot sweep over {name!r}")
            if len(values) == 0:
                raise ConfigError(f"empty sweep values for {name!r}")

    def to_dict(self):
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = _jsonable(v)
        return out

    @classmethod
    def from_dict(cls, d):
        kwargs = dict(d)
        if kwargs.get("sweep"):
            kwargs["sweep"] = tuple((name, tuple(values))
                                    for name, values in kwargs["sweep"])
        return cls(**kwargs)


def _jsonable(v):
    if isinstance(v, tuple):
        return [_jsonable(x) for x in v]
    return v


def sweep_points(config):
    """Override dicts, one per sweep point, row-major over the sweep axes."""
    if not config.sweep:
        return [{}]
    names = [name for name, _ in config.sweep]
    return [dict(zip(names, combo))
            for combo in itertools.product(*(vals for _, vals in config.sweep))]


@dataclass
class PointStats:
    overrides: dict
    n_runs: int
    n_excluded: int
    counts: dict
    percentages: dict
    mean_confidence: float
    mean_angle_error: float


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    points: list
    rows: list      # PointStats per point, same order


def _run_seed(root_seed, r, slot):
    return _entropy(root_seed) + [r, slot]


def _placements(cfg, root_seed, r):
    """Per-run user/target positions; fixed ones pass through untouched."""
    if cfg.user_positions is not None and cfg.target_position is not None:
        return cfg.user_positions, cfg.target_position
    rng = np.random.default_rng(np.random.SeedSequence(
        _run_seed(root_seed, r, _SLOT_PLACEMENT)))
    users = cfg.user_positions
    if users is None:
        users = tuple(tuple(rng.uniform(0.0, cfg.extent, size=2))
                      for _ in range(cfg.K))
    target = cfg.target_position
    if target is None:
        target = tuple(rng.uniform(0.0, cfg.extent, size=2))
    return users, target


def _design_for(cfg, users, target, root_seed, r, cache):
    key = tuple(getattr(cfg, f) for f in _DESIGN_KEY_FIELDS) + (users, target)
    if key in cache:
        hit = cache[key]
        if isinstance(hit, Exception):
            raise hit
        return hit
    scenario = Scenario(bs_position=cfg.bs_position, user_positions=users,
                        target_position=target, M_T=cfg.M_T, N_R=cfg.N_R,
                        K=cfg.K, adversary_index=cfg.adversary_index,
                        delta=cfg.delta, P_t=cfg.P_t,
                        sigma_k_sq=dbm_to_watts(cfg.sigma_k_sq_dBm),
                        alpha_pl=cfg.alpha_pl)
    channels = generate_channels(scenario,
                                 _run_seed(root_seed, r, _SLOT_CHANNELS))
    grid_angles = AngleGrid.uniform(cfg.angle_lo, cfg.angle_hi, cfg.angle_step)
    try:
        sol = design_precoder(scenario, channels, Gamma_dB=cfg.Gamma_dB,
                              epsilon=cfg.epsilon, max_iters=cfg.max_iters,
                              rng_seed=_run_seed(root_seed, r, _SLOT_DESIGN),
                              beam_width=cfg.beam_width,
                              angle_grid=grid_angles)
    except InfeasibleQoS as exc:
        cache[key] = exc
        raise
    cache[key] = (scenario, sol, grid_angles)
    return cache[key]


def run_experiment(config):
    """Full sweep: per point, num_runs design-and-attack trials, aggregated.

    Runs hitting an infeasible QoS constraint set produce no estimate; they
    are dropped from the percentages and counted per point instead.
    """
    points = sweep_points(config)
    outcomes = [[] for _ in points]
    excluded = [0 for _ in points]
    for r in range(config.num_runs):
        cache = {}
        for j, overrides in enumerate(points):
            cfg = replace(config, **overrides)
            users, target = _placements(cfg, config.root_seed, r)
            try:
                scenario, sol, _ = _design_for(cfg, users, target,
                                               config.root_seed, r, cache)
            except InfeasibleQoS:
                excluded[j] += 1
                continue
            grid = build_grid(cfg.extent, cfg.cell_size, cfg.bs_position)
            angle_grid = AngleGrid.uniform(cfg.angle_lo, cfg.angle_hi,
                                           cfg.angle_step)
            sigma_sq = (0.0 if cfg.sigma_sq_dBm is None
                        else dbm_to_watts(cfg.sigma_sq_dBm))
            particles = run_particle_filter(
                sol, grid, angle_grid, M=cfg.M, T=cfg.T, sigma_sq=sigma_sq,
                rng_seed=_run_seed(config.root_seed, r, _SLOT_FILTER),
                n_th=cfg.n_th, cell_stat=cfg.cell_stat, delta=cfg.delta)
            outcome = classify(particles, grid, scenario.theta_target,
                               conf_threshold=cfg.conf_threshold,
                               angle_threshold=cfg.angle_threshold)
            outcomes[j].append(outcome)
    rows = [aggregate_outcomes(points[j], outcomes[j], excluded[j])
            for j in range(len(points))]
    return ExperimentResult(config=config, points=points, rows=rows)


def aggregate_outcomes(overrides, outcomes, n_excluded):
    """Counts, percentages over included runs, and mean confidence/error."""
    counts = {label: 0 for label in LABELS}
    for o in outcomes:
        counts[o.label] += 1
    n = len(outcomes)
    percentages = {label: (100.0 * counts[label] / n if n else 0.0)
                   for label in LABELS}
    mean_conf = sum(o.confidence for o in outcomes) / n if n else 0.0
    mean_err = sum(o.angle_error for o in outcomes) / n if n else 0.0
    return PointStats(overrides=dict(overrides), n_runs=n,
                      n_excluded=n_excluded, counts=counts,
                      percentages=percentages, mean_confidence=mean_conf,
                      mean_angle_error=mean_err)


def resolve_out_dir(config, out_dir=None):
    d = out_dir or config.out_dir or os.environ.get(OUTDIR_ENV) or "."
    os.makedirs(d, exist_ok=True)
    return d


def emit_results(result, out_dir=None):
    """Write results.csv and results.json; returns the two paths."""
    d = resolve_out_dir(result.config, out_dir)
    sweep_names = [name for name, _ in result.config.sweep]
    csv_path = os.path.join(d, "results.csv")
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(sweep_names + list(LABELS)
                   + ["n_runs", "n_excluded", "mean_confidence",
                      "mean_angle_error"])
        for stats in result.rows:
            w.writerow([stats.overrides[name] for name in sweep_names]
                       + [stats.percentages[label] for label in LABELS]
                       + [stats.n_runs, stats.n_excluded,
                          stats.mean_confidence, stats.mean_angle_error])
    json_path = os.path.join(d, "results.json")
    payload = {
        "config": result.config.to_dict(),
        "rows": [{
            "overrides": stats.overrides,
            "counts": stats.counts,
            "percentages": stats.percentages,
            "n_runs": stats.n_runs,
            "n_excluded": stats.n_excluded,
            "mean_confidence": stats.mean_confidence,
            "mean_angle_error": stats.mean_angle_error,
        } for stats in result.rows],
    }
    with open(json_path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return csv_path, json_path


def product_likelihood_posterior(likelihood, t, prior=None):
    """Exact posterior over cells after t conditionally independent rounds."""
    lik = np.asarray(likelihood, dtype=float)
    post = (np.full(len(lik), 1.0 / len(lik)) if prior is None
            else np.asarray(prior, dtype=float))
    post = post * lik ** t
    total = post.sum()
    if total <= 0:
        raise ValueError("posterior has no mass")
    return post / total
