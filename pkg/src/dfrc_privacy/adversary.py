"""Target-location inference from noisy precoder observations.

An inside user who can estimate the transmit precoder reconstructs the
beampattern from the noisy estimate, scores every grid cell by how much
power falls on it, and runs a particle filter whose weights follow those
scores. The most occupied cell after T observations is its location
estimate, classified into Detection / FalseAlarm / MissDetection /
Undetection by confidence and angular error.
"""

from dataclasses import dataclass

import numpy as np

from .scene import steering_matrix, _entropy

# rng stream tags so init / observation / resampling draws never collide
_INIT, _OBSERVE, _RESAMPLE = 0, 1, 2


class DegenerateLikelihood(Exception):
    """Every particle sits in a zero-likelihood cell; the filter is stuck."""


@dataclass
class PrecoderObservation:
    """One noisy snapshot of the stacked precoder [W_c | W_r]."""
    W_tilde: np.ndarray
    sigma_sq: float
    t: int


@dataclass
class ParticleSet:
    positions: np.ndarray   # (M, 2) meters
    weights: np.ndarray     # (M,) sums to 1
    generation: int = 0

    @property
    def M(self):
        return len(self.weights)


@dataclass
class CellLikelihoodTable:
    """Reconstructed per-cell beampattern and the induced likelihoods."""
    B_En: np.ndarray
    likelihood: np.ndarray

    @classmethod
    def from_beampattern(cls, B_En):
        B_En = np.clip(np.asarray(B_En, dtype=float), 0.0, None)
        return cls(B_En=B_En, likelihood=-np.expm1(-B_En))


@dataclass
class EstimationOutcome:
    label: str              # Detection | FalseAlarm | MissDetection | Undetection
    confidence: float
    estimated_angle: float
    angle_error: float


def observe_precoder(solution, sigma_sq, rng_seed, t=0):
    """Noisy precoder estimate at observation index t.

    Every entry of both blocks picks up independent circularly symmetric
    complex Gaussian noise of variance sigma_sq; distinct t under the same
    seed give independent realizations.
    """
    W = np.hstack([solution.W_c, solution.W_r])
    if sigma_sq > 0:
        rng = np.random.default_rng(
            np.random.SeedSequence(_entropy(rng_seed) + [t, _OBSERVE]))
        noise = (rng.standard_normal(W.shape) + 1j * rng.standard_normal(W.shape)) \
            * np.sqrt(sigma_sq / 2)
        W = W + noise
    return PrecoderObservation(W_tilde=W, sigma_sq=float(sigma_sq), t=t)


def reconstruct_beampattern(obs, grid, angle_grid, delta=0.5):
    """Score each cell by the reconstructed beampattern at its angle.

    The observed covariance W~ W~^H is evaluated at the angle-grid sample
    nearest each cell midpoint angle, and mapped to a likelihood in [0, 1)
    via 1 - exp(-B).
    """
    R_est = obs.W_tilde @ obs.W_tilde.conj().T
    idx = angle_grid.nearest_index(grid.midpoint_angles)
    A = steering_matrix(angle_grid.samples[idx], R_est.shape[0], delta)
    B = np.einsum("nm,mk,nk->n", A.conj(), R_est, A).real
    return CellLikelihoodTable.from_beampattern(B)


def init_particles(grid, M, rng_seed):
    """M particles uniform over the search area, equal weights."""
    rng = np.random.default_rng(
        np.random.SeedSequence(_entropy(rng_seed) + [0, _INIT]))
    positions = rng.uniform(0.0, grid.extent, size=(M, 2))
    return ParticleSet(positions=positions, weights=np.full(M, 1.0 / M),
                       generation=0)


def update_weights(particles, table, grid):
    """Multiply each particle's weight by its cell's likelihood, renormalize."""
    cells = grid.cell_of(particles.positions)
    w = particles.weights * table.likelihood[cells]
    total = w.sum()
    if total <= 0:
        raise DegenerateLikelihood("all particles in zero-likelihood cells")
    return ParticleSet(positions=particles.positions.copy(), weights=w / total,
                       generation=particles.generation)


def resample(particles, grid, rng_seed, cell_stat="sum"):
    """Redraw all particles from a per-cell categorical distribution.

    Cells are scored by the summed weight of their resident particles
    (cell_stat="sum"); "mean" scores by the average resident weight instead,
    which drops the occupancy feedback and is kept for sensitivity checks.
    M cells are drawn multinomially, each new particle lands uniformly inside
    its drawn cell, and the weights reset to 1/M.
    """
    rng = np.random.default_rng(
        np.random.SeedSequence(_entropy(rng_seed)
                               + [particles.generation + 1, _RESAMPLE]))
    cells = grid.cell_of(particles.positions)
    mass = np.bincount(cells, weights=particles.weights, minlength=grid.n_cells)
    if cell_stat == "mean":
        counts = np.bincount(cells, minlength=grid.n_cells)
        occupied = counts > 0
        mass[occupied] = mass[occupied] / counts[occupied]
    elif cell_stat != "sum":
        raise ValueError(f"unknown cell_stat {cell_stat!r}")
    total = mass.sum()
    if total <= 0:
        raise DegenerateLikelihood("no cell carries any weight")
    M = particles.M
    draws = rng.multinomial(M, mass / total)
    new_cells = np.repeat(np.arange(grid.n_cells), draws)
    ix, iy = new_cells // grid.ny, new_cells % grid.ny
    jitter = rng.uniform(0.0, 1.0, size=(M, 2))
    positions = np.stack([(ix + jitter[:, 0]) * grid.cell_size,
                          (iy + jitter[:, 1]) * grid.cell_size], axis=1)
    return ParticleSet(positions=positions, weights=np.full(M, 1.0 / M),
                       generation=particles.generation + 1)


def run_particle_filter(solution, grid, angle_grid, M, T, sigma_sq, rng_seed,
                        n_th=None, cell_stat="sum", delta=0.5,
                        snapshot_times=()):
    """Full estimation run: T observe / weight / resample rounds.

    n_th is accepted for interface compatibility and ignored; resampling is
    unconditional every round. If snapshot_times is given, returns
    (final ParticleSet, {t: ParticleSet}) with copies taken after the
    resampling of each listed round.
    """
    particles = init_particles(grid, M, rng_seed)
    snapshots = {}
    if 0 in snapshot_times:
        snapshots[0] = particles
    for t in range(1, T + 1):
        obs = observe_precoder(solution, sigma_sq, rng_seed, t=t)
        table = reconstruct_beampattern(obs, grid, angle_grid, delta=delta)
        particles = update_weights(particles, table, grid)
        particles = resample(particles, grid, rng_seed, cell_stat=cell_stat)
        if t in snapshot_times:
            snapshots[t] = particles
    if snapshot_times:
        return particles, snapshots
    return particles


def run_static_filter(table, grid, M, T, rng_seed, cell_stat="sum"):
    """T weight/resample rounds against one fixed likelihood table."""
    particles = init_particles(grid, M, rng_seed)
    for _ in range(T):
        particles = update_weights(particles, table, grid)
        particles = resample(particles, grid, rng_seed, cell_stat=cell_stat)
    return particles


def occupancy_fractions(particles, grid):
    """Fraction of particles per cell, summing to 1."""
    cells = grid.cell_of(particles.positions)
    return np.bincount(cells, minlength=grid.n_cells) / particles.M


def classify(particles, grid, theta_target, conf_threshold=0.9,
             angle_threshold=10.0):
    """Label the estimate by occupancy confidence and angular error.

    Confidence is the particle fraction in the most occupied cell; the
    estimate is that cell's midpoint angle. Ties on occupancy go to the
    lowest cell index.
    """
    cells = grid.cell_of(particles.positions)
    occupancy = np.bincount(cells, minlength=grid.n_cells)
    n_star = int(occupancy.argmax())
    confidence = occupancy[n_star] / particles.M
    estimated_angle = float(grid.midpoint_angles[n_star])
    angle_error = abs(estimated_angle - theta_target)
    if confidence >= conf_threshold:
        label = "Detection" if angle_error < angle_threshold else "FalseAlarm"
    else:
        label = "MissDetection" if angle_error < angle_threshold else "Undetection"
    return EstimationOutcome(label=label, confidence=float(confidence),
                             estimated_angle=estimated_angle,
                             angle_error=float(angle_error))
