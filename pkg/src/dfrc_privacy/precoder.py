"""Joint radar-communication precoder design.

The transmit covariance R and per-user covariances R_k are found by a
semidefinite program that fits the beampattern a^H(theta) R a(theta) to a
scaled indicator over the target sector while guaranteeing each user a
minimum SINR. Alternating with MMSE receive-beamformer updates drives the
fit objective down monotonically; rank-1 communication precoders are then
extracted from the R_k and the radar precoder absorbs the remaining
covariance.

The SDP is solved over the real/imaginary parts of R with the scale factor
of the desired beampattern eliminated in closed form, which keeps the
objective a plain least squares in the matrix entries. Compiled problems are
cached per (M_T, K) shape and re-parameterized between calls, so repeated
Monte Carlo solves skip the modeling overhead. The cache is per-process;
concurrent Monte Carlo should use process-level workers.
"""

from dataclasses import dataclass

import cvxpy as cp
import numpy as np

from .numerics import NotPositiveSemidefinite, psd_sqrt
from .scene import AngleGrid, steering_matrix, steering_vector, _entropy


class ShapeError(Exception):
    """Matrix dimensions inconsistent with the scenario."""


class DegenerateBeamformer(Exception):
    """A receive beamformer is identically zero."""


class InfeasibleQoS(Exception):
    """No covariance satisfies the SINR floor for this channel draw."""


class SolverError(Exception):
    """The conic solver failed to return a usable solution."""


class RankDeficientUser(Exception):
    """A user's covariance delivers no power through its channel."""


class ResidualNotPSD(Exception):
    """R - W_c W_c^H is indefinite beyond tolerance; upstream solve is bad."""


@dataclass
class DesiredBeampattern:
    """Indicator-valued target beampattern on an angle grid."""
    values: np.ndarray
    beam_center: float
    beam_width: float
    angle_grid: AngleGrid

    def __len__(self):
        return len(self.values)


@dataclass
class PrecoderSolution:
    """Converged output of the alternating design.

    receive_beamformers holds the MMSE receivers computed from the final
    precoders. objective_trace lists the accepted per-iteration values of the
    beampattern mismatch; it is non-increasing by construction.
    """
    W_c: np.ndarray
    W_r: np.ndarray
    R: np.ndarray
    per_user_R_k: list
    receive_beamformers: list
    alpha_scale: float
    objective_trace: list
    converged: bool
    iterations: int


def desired_beampattern(theta_target, beam_width, angle_grid):
    """Unit indicator over |theta - theta_target| <= beam_width / 2."""
    vals = (np.abs(angle_grid.samples - theta_target) <= beam_width / 2).astype(float)
    return DesiredBeampattern(values=vals, beam_center=float(theta_target),
                              beam_width=float(beam_width), angle_grid=angle_grid)


def beampattern(R, theta, delta=0.5):
    """Transmit power a^H(theta) R a(theta) toward each angle, clipped at 0."""
    R = np.asarray(R)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise ShapeError(f"covariance must be square, got {R.shape}")
    A = steering_matrix(np.atleast_1d(theta), R.shape[0], delta)
    b = np.einsum("lm,mn,ln->l", A.conj(), R, A).real
    b = np.clip(b, 0.0, None)
    return float(b[0]) if np.ndim(theta) == 0 else b


def sinr(k, solution, channels, sigma_k_sq):
    """Received SINR of user k (0-based) under the stored precoders."""
    H = channels[k]
    u = np.asarray(solution.receive_beamformers[k]).ravel()
    un2 = np.linalg.norm(u) ** 2
    if un2 == 0:
        raise DegenerateBeamformer(f"user {k} has a zero receive beamformer")
    W = np.hstack([solution.W_c, solution.W_r])
    gains = np.abs(u.conj() @ (H @ W)) ** 2
    sig = gains[k]
    interf = gains.sum() - sig
    return float(sig / (interf + sigma_k_sq * un2))


def _mismatch_terms(R, desired, delta):
    """Beampattern b on the grid, jointly optimal scale, and the residual."""
    b = beampattern(R, desired.angle_grid.samples, delta)
    d = desired.values
    alpha = float(d @ b) / float(d @ d)
    return b, alpha


def mismatch_objective(R, desired, delta=0.5, alpha=None):
    """Least-squares distance between alpha * desired and the beampattern."""
    b, alpha_opt = _mismatch_terms(R, desired, delta)
    if alpha is None:
        alpha = alpha_opt
    return float(np.sum((alpha * desired.values - b) ** 2)), alpha


# compiled-problem cache, keyed by problem shape
_sdr_cache = {}


def _compiled_sdr(M_T, K, L, alpha_is_free):
    key = (M_T, K, L, alpha_is_free)
    if key in _sdr_cache:
        return _sdr_cache[key]
    R = cp.Variable((M_T, M_T), hermitian=True)
    Rk = [cp.Variable((M_T, M_T), hermitian=True) for _ in range(K)]
    diag_par = cp.Parameter(nonneg=True)
    # QoS data per user: G = g g^H / ||g||^2 for g = H_k^H u_k, plus the
    # (1 + 1/Gamma)-scaled copy and the normalized noise offset. Scaling by
    # ||g||^2 keeps constraint rows near unit magnitude.
    qos_par = [cp.Parameter((M_T, M_T), hermitian=True) for _ in range(K)]
    qos_boost_par = [cp.Parameter((M_T, M_T), hermitian=True) for _ in range(K)]
    noise_par = [cp.Parameter(nonneg=True) for _ in range(K)]
    x = cp.hstack([cp.vec(cp.real(R), order="F"), cp.vec(cp.imag(R), order="F")])
    constraints = [R - sum(Rk) >> 0,
                   cp.diag(R) == diag_par * np.ones(M_T)]
    for k in range(K):
        constraints.append(Rk[k] >> 0)
        constraints.append(
            cp.real(cp.trace(Rk[k] @ qos_boost_par[k]))
            >= cp.real(cp.trace(R @ qos_par[k])) + noise_par[k])
    if alpha_is_free:
        # objective rows = scaled eigenvector factor of the eliminated-alpha
        # quadratic form, padded to a fixed row count
        obj_par = cp.Parameter((2 * M_T, 2 * M_T * M_T))
        objective = cp.Minimize(cp.sum_squares(obj_par @ x))
        target_par = None
    else:
        obj_par = cp.Parameter((L, 2 * M_T * M_T))
        target_par = cp.Parameter(L)
        objective = cp.Minimize(cp.sum_squares(obj_par @ x - target_par))
    prob = cp.Problem(objective, constraints)
    entry = dict(prob=prob, R=R, Rk=Rk, diag_par=diag_par, qos_par=qos_par,
                 qos_boost_par=qos_boost_par, noise_par=noise_par,
                 obj_par=obj_par, target_par=target_par)
    _sdr_cache[key] = entry
    return entry


def _beampattern_rows(desired, M_T, delta):
    """Real map x -> b on the grid: b = D x for x = [Re vec R; Im vec R]."""
    A = steering_matrix(desired.angle_grid.samples, M_T, delta)
    L = len(A)
    C = np.einsum("ln,lm->lnm", A, A.conj()).reshape(L, M_T * M_T)
    return np.hstack([C.real, -C.imag])


def solve_sdr_step(channels, receive_beamformers, desired, scenario, Gamma,
                   alpha_fixed=None):
    """One convex design step for fixed receive beamformers.

    Returns (R, list of R_k, alpha_scale) feasible for the per-antenna power
    split, the covariance ordering R >= sum R_k, and every user's SINR floor,
    minimizing the least-squares beampattern mismatch. The mismatch scale is
    optimized jointly unless alpha_fixed pins it.
    """
    M_T, K = scenario.M_T, scenario.K
    L = len(desired)
    d = desired.values
    D = _beampattern_rows(desired, M_T, delta=scenario.delta)
    entry = _compiled_sdr(M_T, K, L, alpha_is_free=alpha_fixed is None)
    if alpha_fixed is None:
        # eliminate the scale: project the rows of D onto the complement of d
        G = D.T @ D - np.outer(D.T @ d, d @ D) / float(d @ d)
        w, V = np.linalg.eigh(G)
        w = np.clip(w, 0.0, None)
        keep = w > w.max() * 1e-10
        S = np.sqrt(w[keep])[:, None] * V.T[keep] / np.sqrt(L)
        rows = np.zeros((2 * M_T, 2 * M_T * M_T))
        rows[:S.shape[0]] = S
        entry["obj_par"].value = rows
    else:
        entry["obj_par"].value = D / np.sqrt(L)
        entry["target_par"].value = alpha_fixed * d / np.sqrt(L)
    entry["diag_par"].value = scenario.P_t / M_T
    for k in range(K):
        u = np.asarray(receive_beamformers[k]).ravel()
        g = channels[k].conj().T @ u
        gn2 = np.linalg.norm(g) ** 2
        if gn2 == 0:
            raise DegenerateBeamformer(f"user {k} has a zero effective channel")
        ghat = g / np.sqrt(gn2)
        Gk = np.outer(ghat, ghat.conj())
        Gk = (Gk + Gk.conj().T) / 2
        entry["qos_par"][k].value = Gk
        entry["qos_boost_par"][k].value = (1 + 1 / Gamma) * Gk
        noise = scenario.sigma_k_sq * np.linalg.norm(u) ** 2 / gn2
        entry["noise_par"][k].value = noise
        # Feasibility needs (1 + 1/Gamma) q_k >= <Gk, R> + noise with
        # <Gk, R> >= q_k and q_k <= tr(R) = P_t, hence P_t / Gamma >= noise.
        # Certifying the violated case here avoids a solver run whose
        # infeasibility certificate would hinge on the 1/Gamma perturbation.
        if scenario.P_t / Gamma < noise:
            raise InfeasibleQoS(
                f"SINR floor {Gamma:.3g} exceeds the power-limited bound "
                f"for user {k}")
    try:
        # warm_start would reuse the previous factorization; the sparsity of
        # obj_par changes between scenarios, which the incremental update
        # path rejects.
        entry["prob"].solve(solver=cp.CLARABEL, warm_start=False)
    except cp.error.SolverError as exc:
        raise SolverError(str(exc)) from exc
    status = entry["prob"].status
    if status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
        raise InfeasibleQoS(f"SINR floor {Gamma:.3g} unreachable (status {status})")
    if entry["R"].value is None or status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
        raise SolverError(f"solver returned status {status}")
    R = entry["R"].value
    R = (R + R.conj().T) / 2
    Rks = [(Y.value + Y.value.conj().T) / 2 for Y in entry["Rk"]]
    if alpha_fixed is None:
        _, alpha = _mismatch_terms(R, desired, scenario.delta)
    else:
        alpha = float(alpha_fixed)
    return R, Rks, alpha


def extract_communication_precoder(per_user_R_k, channels, receive_beamformers):
    """Rank-1 communication precoders from the per-user covariances.

    Column k is R_k g_k scaled so the delivered power g_k^H R_k g_k is
    preserved, with g_k = H_k^H u_k.
    """
    K = len(per_user_R_k)
    M_T = per_user_R_k[0].shape[0]
    W_c = np.zeros((M_T, K), dtype=complex)
    for k in range(K):
        u = np.asarray(receive_beamformers[k]).ravel()
        g = channels[k].conj().T @ u
        quad = float((g.conj() @ per_user_R_k[k] @ g).real)
        if quad <= 0:
            raise RankDeficientUser(f"user {k} covariance delivers no power")
        W_c[:, k] = per_user_R_k[k] @ g / np.sqrt(quad)
    return W_c


def extract_radar_precoder(R, W_c):
    """Radar precoder covering the covariance not used by communications."""
    residual = R - W_c @ W_c.conj().T
    residual = (residual + residual.conj().T) / 2
    try:
        return psd_sqrt(residual)
    except NotPositiveSemidefinite as exc:
        raise ResidualNotPSD(str(exc)) from exc


def update_receive_beamformers(solution, channels, sigma_k_sq):
    """Per-user MMSE receivers against all interfering precoder columns."""
    W = np.hstack([solution.W_c, solution.W_r])
    K = solution.W_c.shape[1]
    out = []
    for k in range(K):
        H = channels[k]
        wk = solution.W_c[:, k]
        others = W @ W.conj().T - np.outer(wk, wk.conj())
        N_R = H.shape[0]
        Q = H @ others @ H.conj().T + sigma_k_sq * np.eye(N_R)
        out.append(np.linalg.solve(Q, H @ wk))
    return out


def design_precoder(scenario, channels, Gamma_dB, epsilon=0.01, max_iters=20,
                    rng_seed=0, beam_width=10.0, angle_grid=None):
    """Alternate convex design steps with MMSE receiver updates.

    Starting from random unit-norm receive beamformers, each round solves the
    covariance design for fixed receivers, extracts the precoders, and
    refreshes the receivers. A round whose mismatch fails to improve on the
    previous one is discarded (the solver has hit its accuracy floor), so the
    recorded objective trace never increases. Terminates once the relative
    objective change falls to epsilon, flagging non-convergence if max_iters
    rounds pass without that.
    """
    if angle_grid is None:
        angle_grid = AngleGrid.uniform(0.0, 90.0, 0.1)
    desired = desired_beampattern(scenario.theta_target, beam_width, angle_grid)
    Gamma = 10 ** (Gamma_dB / 10)
    rng = np.random.default_rng(np.random.SeedSequence(_entropy(rng_seed)))
    u_list = []
    for _ in range(scenario.K):
        v = rng.standard_normal(scenario.N_R) + 1j * rng.standard_normal(scenario.N_R)
        u_list.append(v / np.linalg.norm(v))

    best = None
    trace = []
    converged = False
    for _ in range(max_iters):
        R, Rks, alpha = solve_sdr_step(channels, u_list, desired, scenario, Gamma)
        phi, _ = mismatch_objective(R, desired, scenario.delta, alpha=alpha)
        if trace and phi >= trace[-1]:
            # no further progress beyond solver accuracy; keep the last iterate
            converged = abs(phi - trace[-1]) <= epsilon * max(phi, 1e-300)
            break
        W_c = extract_communication_precoder(Rks, channels, u_list)
        W_r = extract_radar_precoder(R, W_c)
        sol = PrecoderSolution(W_c=W_c, W_r=W_r, R=R, per_user_R_k=Rks,
                               receive_beamformers=None, alpha_scale=alpha,
                               objective_trace=None, converged=False,
                               iterations=0)
        u_list = update_receive_beamformers(sol, channels, scenario.sigma_k_sq)
        sol.receive_beamformers = u_list
        prev = trace[-1] if trace else None
        trace.append(phi)
        best = sol
        if prev is not None and abs(prev - phi) <= epsilon * max(phi, 1e-300):
            converged = True
            break
    if best is None:
        raise SolverError("no iterate was accepted")
    best.objective_trace = list(trace)
    best.converged = converged
    best.iterations = len(trace)
    return best
