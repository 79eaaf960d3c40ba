"""Geometry and radio environment: node placement, steering vectors, Rayleigh
path-loss channels, and the discrete cell grid the adversary reasons over.

Angles are degrees at every public interface and measured from the positive
x axis, so the first-quadrant search area maps onto [0, 90] degrees.
"""

from dataclasses import dataclass

import numpy as np


class DegeneratePlacement(Exception):
    """Two nodes coincide, leaving angle or path loss undefined."""


class ConfigError(Exception):
    """Inconsistent scenario or grid configuration."""


def angle_of(point, bs_position):
    """Azimuth of `point` as seen from the base station, in degrees."""
    dx = point[0] - bs_position[0]
    dy = point[1] - bs_position[1]
    if dx == 0 and dy == 0:
        raise DegeneratePlacement("point coincides with the base station")
    return float(np.degrees(np.arctan2(dy, dx)))


@dataclass
class Scenario:
    """Physical layout plus the radio constants of one experiment.

    adversary_index is 1-based: user 1 is the first entry of user_positions.
    sigma_k_sq is the receiver noise power in linear watts.
    """
    bs_position: tuple
    user_positions: tuple
    target_position: tuple
    M_T: int
    N_R: int
    K: int
    adversary_index: int = 1
    delta: float = 0.5
    P_t: float = 1.0
    sigma_k_sq: float = 1e-13
    alpha_pl: float = 3.0

    def __post_init__(self):
        self.bs_position = tuple(float(c) for c in self.bs_position)
        self.user_positions = tuple(tuple(float(c) for c in p)
                                    for p in self.user_positions)
        self.target_position = tuple(float(c) for c in self.target_position)
        if len(self.user_positions) != self.K:
            raise ConfigError(f"expected {self.K} user positions, "
                              f"got {len(self.user_positions)}")
        if self.K * self.N_R > self.M_T:
            raise ConfigError(f"K*N_R = {self.K * self.N_R} exceeds M_T = {self.M_T}")
        if not 1 <= self.adversary_index <= self.K:
            raise ConfigError(f"adversary_index {self.adversary_index} "
                              f"outside 1..{self.K}")

    @property
    def theta_target(self):
        """True target azimuth from the BS, degrees."""
        return angle_of(self.target_position, self.bs_position)


@dataclass
class ChannelSet:
    """One N_R x M_T channel matrix per user."""
    matrices: list

    def __post_init__(self):
        shapes = {m.shape for m in self.matrices}
        if len(shapes) > 1:
            raise ConfigError(f"inconsistent channel shapes {shapes}")
        for m in self.matrices:
            if not np.all(np.isfinite(m)):
                raise ConfigError("channel matrix has non-finite entries")

    def __len__(self):
        return len(self.matrices)

    def __getitem__(self, k):
        return self.matrices[k]


@dataclass
class GridWorld:
    """Square cell grid over the search area, BS-relative per-cell geometry.

    Cells are indexed row-major over (ix, iy) with ix along x.
    """
    extent: float
    cell_size: float
    midpoints: np.ndarray       # (N, 2) meters
    midpoint_angles: np.ndarray  # (N,) degrees
    midpoint_radii: np.ndarray   # (N,) meters
    nx: int
    ny: int
    bs_position: tuple = (0.0, 0.0)

    @property
    def n_cells(self):
        return self.nx * self.ny

    def cell_of(self, positions):
        """Cell index for each 2-D position (vectorized)."""
        pos = np.atleast_2d(positions)
        ix = np.clip((pos[:, 0] / self.cell_size).astype(int), 0, self.nx - 1)
        iy = np.clip((pos[:, 1] / self.cell_size).astype(int), 0, self.ny - 1)
        return ix * self.ny + iy


@dataclass
class AngleGrid:
    """Uniformly spaced angle samples, degrees."""
    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if len(s) < 2:
            raise ConfigError("angle grid needs at least two samples")
        steps = np.diff(s)
        if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=0, atol=1e-9):
            raise ConfigError("angle grid must be strictly increasing and uniform")
        self.samples = s

    @classmethod
    def uniform(cls, lo=0.0, hi=90.0, step=0.1):
        n = int(round((hi - lo) / step))
        return cls(lo + np.arange(n + 1) * step)

    @property
    def step(self):
        return float(self.samples[1] - self.samples[0])

    def __len__(self):
        return len(self.samples)

    def nearest_index(self, angles):
        """Index of the nearest sample per angle; ties go to the smaller one."""
        x = (np.asarray(angles) - self.samples[0]) / self.step
        idx = np.ceil(x - 0.5).astype(int)
        return np.clip(idx, 0, len(self.samples) - 1)


def steering_vector(theta, M_T, delta=0.5):
    """ULA steering vector a(theta), entry m = exp(j 2 pi m delta sin theta)."""
    m = np.arange(M_T)
    return np.exp(1j * 2 * np.pi * m * delta * np.sin(np.radians(theta)))


def steering_matrix(thetas, M_T, delta=0.5):
    """Stack of steering vectors, one row per angle: shape (len(thetas), M_T)."""
    phases = np.outer(np.sin(np.radians(thetas)), np.arange(M_T))
    return np.exp(1j * 2 * np.pi * delta * phases)


def generate_channels(scenario, rng_seed):
    """Rayleigh block-fading channels with distance path loss.

    Each entry of H_k is i.i.d. circularly symmetric complex Gaussian with
    variance d_k^(-alpha_pl), d_k the BS-to-user-k distance in meters
    (1 m reference distance).
    """
    rng = np.random.default_rng(np.random.SeedSequence(_entropy(rng_seed)))
    mats = []
    for pos in scenario.user_positions:
        d = float(np.hypot(pos[0] - scenario.bs_position[0],
                           pos[1] - scenario.bs_position[1]))
        if d == 0:
            raise DegeneratePlacement("user placed on top of the base station")
        std = np.sqrt(d ** (-scenario.alpha_pl) / 2)
        h = rng.standard_normal((scenario.N_R, scenario.M_T)) \
            + 1j * rng.standard_normal((scenario.N_R, scenario.M_T))
        mats.append(h * std)
    return ChannelSet(mats)


def build_grid(extent, cell_size, bs_position=(0.0, 0.0)):
    """Divide the square search area into equal cells with BS-relative geometry."""
    n = extent / cell_size
    nx = int(round(n))
    if abs(n - nx) > 1e-9 or nx < 1:
        raise ConfigError(f"extent {extent} not divisible by cell size {cell_size}")
    mids = (np.arange(nx) + 0.5) * cell_size
    mx, my = np.meshgrid(mids, mids, indexing="ij")
    midpoints = np.stack([mx.ravel(), my.ravel()], axis=1)
    rel = midpoints - np.asarray(bs_position, dtype=float)
    angles = np.degrees(np.arctan2(rel[:, 1], rel[:, 0]))
    radii = np.hypot(rel[:, 0], rel[:, 1])
    return GridWorld(extent=float(extent), cell_size=float(cell_size),
                     midpoints=midpoints, midpoint_angles=angles,
                     midpoint_radii=radii, nx=nx, ny=nx,
                     bs_position=tuple(float(c) for c in bs_position))


def _entropy(rng_seed):
    """Seed entropy as a flat list of non-negative ints."""
    if np.ndim(rng_seed) == 0:
        return [int(rng_seed)]
    return [int(s) for s in rng_seed]
