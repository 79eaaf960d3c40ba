import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dfrc_privacy.numerics import conj_transpose, min_eigenvalue
from dfrc_privacy.precoder import (DegenerateBeamformer, InfeasibleQoS,
                                   PrecoderSolution, RankDeficientUser,
                                   ShapeError, beampattern,
                                   design_precoder, desired_beampattern,
                                   extract_communication_precoder,
                                   extract_radar_precoder, mismatch_objective,
                                   sinr, solve_sdr_step,
                                   update_receive_beamformers)
from dfrc_privacy.scene import (AngleGrid, ChannelSet, generate_channels,
                                steering_vector)
from conftest import make_scenario

GAMMA_12_LIN = 10.0 ** 1.2
SINR_SLACK = 10.0 ** -0.001      # 0.01 dB


def random_unit_beamformers(rng, K, N_R):
    out = []
    for _ in range(K):
        v = rng.standard_normal(N_R) + 1j * rng.standard_normal(N_R)
        out.append(v / np.linalg.norm(v))
    return out


def replay_constraints(R, R_ks, channels, beamformers, scenario, Gamma,
                       tol=1e-6):
    """Independent check of every design constraint on a returned solution."""
    assert np.max(np.abs(np.diag(R).real - scenario.P_t / scenario.M_T)) <= tol
    assert min_eigenvalue(R) >= -tol
    residual = R - sum(R_ks)
    assert min_eigenvalue(residual) >= -tol
    for k, R_k in enumerate(R_ks):
        assert min_eigenvalue(R_k) >= -tol
        u, H = beamformers[k], channels[k]
        g = conj_transpose(H) @ u
        lhs = (1 + 1 / Gamma) * np.real(np.vdot(g, R_k @ g))
        rhs = np.real(np.vdot(g, R @ g)) \
            + scenario.sigma_k_sq * np.linalg.norm(u) ** 2
        assert lhs >= rhs - tol * max(1.0, abs(rhs))


def sinr_reference(k, solution, channels, sigma_k_sq):
    """Term-by-term SINR evaluation, written independently of sinr()."""
    u = solution.receive_beamformers[k]
    H = channels[k]
    num = abs(np.vdot(u, H @ solution.W_c[:, k])) ** 2
    denom = sigma_k_sq * np.linalg.norm(u) ** 2
    for i in range(solution.W_c.shape[1]):
        if i != k:
            denom += abs(np.vdot(u, H @ solution.W_c[:, i])) ** 2
    for p in range(solution.W_r.shape[1]):
        denom += abs(np.vdot(u, H @ solution.W_r[:, p])) ** 2
    return num / denom


def manual_solution(W_c, W_r, beamformers):
    R = W_c @ conj_transpose(W_c) + W_r @ conj_transpose(W_r)
    return PrecoderSolution(W_c=W_c, W_r=W_r, R=R,
                            per_user_R_k=[np.outer(W_c[:, k],
                                                   W_c[:, k].conj())
                                          for k in range(W_c.shape[1])],
                            receive_beamformers=beamformers,
                            alpha_scale=1.0, objective_trace=[0.0],
                            converged=True, iterations=1)


class TestDesiredBeampattern:
    def test_center_inside_outside(self):
        grid = AngleGrid.uniform(0.0, 90.0, 1.0)
        d = desired_beampattern(36.0, 10.0, grid)
        v = dict(zip(grid.samples, d.values))
        assert v[36.0] == 1.0
        assert v[45.0] == 0.0
        assert v[41.0] == 1.0      # boundary is inclusive
        assert v[31.0] == 1.0
        assert v[30.0] == 0.0

    @settings(max_examples=100, deadline=None)
    @given(center=st.floats(0.0, 90.0), width=st.floats(0.5, 30.0))
    def test_indicator_property(self, center, width):
        grid = AngleGrid.uniform(0.0, 90.0, 0.5)
        d = desired_beampattern(center, width, grid)
        expected = (np.abs(grid.samples - center) <= width / 2).astype(float)
        assert np.array_equal(np.asarray(d.values), expected)


class TestBeampattern:
    def test_identity_covariance(self):
        R = np.eye(20, dtype=complex)
        for theta in (0.0, 36.0, 77.7):
            assert beampattern(R, theta) == pytest.approx(20.0)

    def test_rank_one_peak(self):
        a = steering_vector(50.0, 16)
        R = np.outer(a, a.conj())
        assert beampattern(R, 50.0) == pytest.approx(256.0)

    def test_matches_column_energy(self, rng):
        W = rng.standard_normal((6, 9)) + 1j * rng.standard_normal((6, 9))
        R = W @ conj_transpose(W)
        for theta in (0.0, 12.3, 45.0, 88.8):
            a = steering_vector(theta, 6)
            direct = np.linalg.norm(conj_transpose(W) @ a) ** 2
            assert beampattern(R, theta) == pytest.approx(direct, abs=1e-9,
                                                          rel=1e-9)

    def test_rejects_non_square(self):
        with pytest.raises(ShapeError):
            beampattern(np.zeros((3, 4)), 10.0)

    def test_vectorized_over_angles(self):
        R = np.eye(4, dtype=complex)
        out = beampattern(R, np.array([0.0, 30.0, 60.0]))
        assert np.allclose(out, 4.0)


class TestSinr:
    def test_single_user_no_interference(self):
        P = 2.5
        W_c = np.array([[np.sqrt(P)], [0.0]], dtype=complex)
        sol = manual_solution(W_c, np.zeros((2, 2), dtype=complex),
                              [np.array([1.0, 0.0], dtype=complex)])
        ch = ChannelSet([np.eye(2, dtype=complex)])
        assert sinr(0, sol, ch, 1.0) == pytest.approx(P)

    def test_beamformer_scale_invariance(self, design, channels, scenario):
        base = sinr(0, design, channels, scenario.sigma_k_sq)
        scaled = dataclasses.replace(
            design,
            receive_beamformers=[(2.0 - 3.0j) * design.receive_beamformers[0],
                                 design.receive_beamformers[1]])
        assert sinr(0, scaled, channels, scenario.sigma_k_sq) \
            == pytest.approx(base, rel=1e-12)

    def test_matches_reference_implementation(self, rng):
        M_T, N_R, K = 8, 2, 2
        W_c = rng.standard_normal((M_T, K)) + 1j * rng.standard_normal((M_T, K))
        W_r = rng.standard_normal((M_T, M_T)) \
            + 1j * rng.standard_normal((M_T, M_T))
        beamformers = random_unit_beamformers(rng, K, N_R)
        sol = manual_solution(W_c, W_r, beamformers)
        ch = ChannelSet([rng.standard_normal((N_R, M_T))
                         + 1j * rng.standard_normal((N_R, M_T))
                         for _ in range(K)])
        for k in range(K):
            assert sinr(k, sol, ch, 1e-3) == pytest.approx(
                sinr_reference(k, sol, ch, 1e-3), rel=1e-10)

    def test_zero_beamformer_rejected(self, design, channels, scenario):
        broken = dataclasses.replace(
            design,
            receive_beamformers=[np.zeros(2, dtype=complex),
                                 design.receive_beamformers[1]])
        with pytest.raises(DegenerateBeamformer):
            sinr(0, broken, channels, scenario.sigma_k_sq)


class TestSolveSdrStep:
    def test_diagonal_power_constraint(self, scenario, channels, angle_grid,
                                       rng):
        desired = desired_beampattern(scenario.theta_target, 10.0, angle_grid)
        beamformers = random_unit_beamformers(rng, 2, 2)
        R, R_ks, alpha = solve_sdr_step(channels, beamformers, desired,
                                        scenario, GAMMA_12_LIN)
        assert np.max(np.abs(np.diag(R).real - scenario.P_t / scenario.M_T)) \
            <= 1e-6
        replay_constraints(R, R_ks, channels, beamformers, scenario,
                           GAMMA_12_LIN)
        assert alpha > 0

    def test_unconstrained_peak_reaches_power_bound(self, scenario, channels,
                                                    rng):
        # fit a full-power beam at the target with negligible QoS pressure:
        # the per-antenna power cap makes M_T * P_t the ceiling
        two_points = AngleGrid(np.array([scenario.theta_target,
                                         scenario.theta_target + 0.1]))
        desired = desired_beampattern(scenario.theta_target, 10.0, two_points)
        beamformers = random_unit_beamformers(rng, 2, 2)
        bound = scenario.M_T * scenario.P_t
        R, _, _ = solve_sdr_step(channels, beamformers, desired, scenario,
                                 1e-9, alpha_fixed=bound)
        assert beampattern(R, scenario.theta_target) >= 0.95 * bound

    def test_infeasible_qos(self, scenario, channels, rng):
        grid = AngleGrid.uniform(0.0, 90.0, 1.0)
        desired = desired_beampattern(scenario.theta_target, 10.0, grid)
        beamformers = random_unit_beamformers(rng, 2, 2)
        with pytest.raises(InfeasibleQoS):
            solve_sdr_step(channels, beamformers, desired, scenario, 1e9)

    def test_scale_covariance(self, scenario, channels, angle_grid, rng):
        # scaling every channel by c and the noise by |c|^2 leaves the
        # feasible set unchanged; the returned solution must still replay
        c = 2.0
        scaled_channels = ChannelSet([c * H for H in channels.matrices])
        scaled_scenario = make_scenario(sigma_k_sq=scenario.sigma_k_sq * c ** 2)
        desired = desired_beampattern(scenario.theta_target, 10.0, angle_grid)
        beamformers = random_unit_beamformers(rng, 2, 2)
        R, R_ks, _ = solve_sdr_step(scaled_channels, beamformers, desired,
                                    scaled_scenario, GAMMA_12_LIN)
        replay_constraints(R, R_ks, scaled_channels, beamformers,
                           scaled_scenario, GAMMA_12_LIN)


class TestExtraction:
    def test_rank_one_covariance_gives_unit_energy(self, channels, rng):
        u = random_unit_beamformers(rng, 1, 2)[0]
        g = conj_transpose(channels[0]) @ u
        v = g / np.linalg.norm(g)
        W_c = extract_communication_precoder([np.outer(v, v.conj())],
                                             ChannelSet([channels[0]]), [u])
        assert np.linalg.norm(W_c[:, 0]) ** 2 == pytest.approx(1.0, abs=1e-9)

    def test_column_covariance_dominated(self, design):
        for k in range(2):
            w = design.W_c[:, k]
            gap = design.per_user_R_k[k] - np.outer(w, w.conj())
            assert min_eigenvalue(gap) >= -1e-7

    def test_output_shape(self, design):
        assert design.W_c.shape == (8, 2)
        assert design.W_r.shape == (8, 8)

    def test_zero_quadratic_form_rejected(self, channels, rng):
        u = random_unit_beamformers(rng, 1, 2)[0]
        with pytest.raises(RankDeficientUser):
            extract_communication_precoder([np.zeros((8, 8), dtype=complex)],
                                           ChannelSet([channels[0]]), [u])

    def test_radar_covers_full_covariance_without_comm(self, design):
        W_r = extract_radar_precoder(design.R, np.zeros((8, 2), dtype=complex))
        assert np.linalg.norm(W_r @ conj_transpose(W_r) - design.R) < 1e-6

    def test_radar_vanishes_when_comm_covers(self, rng):
        W_c = rng.standard_normal((8, 2)) + 1j * rng.standard_normal((8, 2))
        W_r = extract_radar_precoder(W_c @ conj_transpose(W_c), W_c)
        assert np.linalg.norm(W_r) < 1e-6

    def test_reconstruction(self, design):
        total = design.W_c @ conj_transpose(design.W_c) \
            + design.W_r @ conj_transpose(design.W_r)
        assert np.linalg.norm(total - design.R) <= 1e-6


class TestUpdateReceiveBeamformers:
    def test_single_user_identity_channel(self):
        e1 = np.array([1.0, 0.0], dtype=complex)
        sol = manual_solution(e1[:, None], np.zeros((2, 2), dtype=complex),
                              [e1])
        updated = update_receive_beamformers(sol, ChannelSet([np.eye(2,
                                             dtype=complex)]), 1.0)
        assert np.allclose(updated[0], e1)

    def test_never_hurts_sinr(self, design, channels, scenario, rng):
        # the returned beamformer is a local (in fact global) SINR maximizer
        for k in range(2):
            best = sinr(k, design, channels, scenario.sigma_k_sq)
            for _ in range(100):
                d = rng.standard_normal(2) + 1j * rng.standard_normal(2)
                bumped = list(design.receive_beamformers)
                bumped[k] = bumped[k] + 1e-3 * d
                perturbed = dataclasses.replace(design,
                                                receive_beamformers=bumped)
                assert sinr(k, perturbed, channels, scenario.sigma_k_sq) \
                    <= best * (1 + 1e-10)

    def test_finite_and_nonzero(self, design, channels, scenario):
        updated = update_receive_beamformers(design, channels,
                                             scenario.sigma_k_sq)
        for u in updated:
            assert np.all(np.isfinite(u))
            assert np.linalg.norm(u) > 0


class TestDesignPrecoder:
    def test_converges_within_budget(self, design):
        assert design.converged
        assert design.iterations <= 20
        trace = np.asarray(design.objective_trace)
        if len(trace) >= 2:
            assert abs(trace[-1] - trace[-2]) <= 0.01 * abs(trace[-1])

    def test_objective_trace_non_increasing(self, design):
        trace = np.asarray(design.objective_trace)
        assert np.all(np.diff(trace) <= 1e-6)

    def test_final_objective_matches_mismatch(self, design, scenario,
                                              angle_grid):
        desired = desired_beampattern(scenario.theta_target, 10.0, angle_grid)
        phi, _ = mismatch_objective(design.R, desired)
        assert phi == pytest.approx(design.objective_trace[-1], rel=1e-9)

    def test_qos_met(self, design, channels, scenario):
        for k in range(2):
            assert sinr(k, design, channels, scenario.sigma_k_sq) \
                >= GAMMA_12_LIN * SINR_SLACK

    def test_deterministic(self, scenario, channels, design):
        again = design_precoder(scenario, channels, Gamma_dB=12.0,
                                rng_seed=[7, 2])
        assert np.array_equal(again.R, design.R)
        assert again.objective_trace == design.objective_trace

    def test_infeasible_qos_propagates(self, scenario, channels):
        with pytest.raises(InfeasibleQoS):
            design_precoder(scenario, channels, Gamma_dB=90.0, rng_seed=0)

    def test_beampattern_identity_over_grid(self, design, angle_grid):
        W = np.hstack([design.W_c, design.W_r])
        A = np.array([steering_vector(t, 8) for t in angle_grid.samples])
        via_R = beampattern(design.R, angle_grid.samples)
        via_W = np.linalg.norm(A.conj() @ W, axis=1) ** 2
        assert abs(via_R.sum() - via_W.sum()) <= 1e-8 * len(angle_grid)
