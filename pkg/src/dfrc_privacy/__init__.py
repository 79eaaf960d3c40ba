"""Joint radar-communication precoding and target-location privacy attacks."""

from .numerics import (NotPositiveSemidefinite, conj_transpose,
                       min_eigenvalue, psd_sqrt, complex_to_real_embedding,
                       close_frobenius)
from .scene import (ConfigError, DegeneratePlacement, Scenario, ChannelSet,
                    GridWorld, AngleGrid, angle_of, steering_vector,
                    steering_matrix, generate_channels, build_grid)
from .precoder import (ShapeError, DegenerateBeamformer, InfeasibleQoS,
                       SolverError, RankDeficientUser, ResidualNotPSD,
                       DesiredBeampattern, PrecoderSolution,
                       desired_beampattern, beampattern, sinr,
                       mismatch_objective, solve_sdr_step,
                       extract_communication_precoder,
                       extract_radar_precoder, update_receive_beamformers,
                       design_precoder)
from .adversary import (DegenerateLikelihood, PrecoderObservation,
                        ParticleSet, CellLikelihoodTable, EstimationOutcome,
                        observe_precoder, reconstruct_beampattern,
                        init_particles, update_weights, resample,
                        run_particle_filter, run_static_filter,
                        occupancy_fractions, classify)
from .harness import (ExperimentConfig, ExperimentResult, PointStats,
                      dbm_to_watts, sweep_points, run_experiment,
                      aggregate_outcomes, emit_results,
                      product_likelihood_posterior)

__all__ = [n for n in dir() if not n.startswith("_")]
