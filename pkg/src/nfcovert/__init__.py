"""Near-field covert communication toolkit for extremely large reflecting surfaces.

Channel synthesis (far-field multipath feed, spherical-wave receiver links),
warden detection analysis, and the joint design of a hybrid transmit precoder
and the surface reflection phases under a covertness constraint, plus the
reference schemes and experiment runners used to study them.
"""

from .config import (ConfigError, PolarPosition, SystemConfig, load_config,
                     save_config)
from .channel import (ArrayGeometry, ArrayKind, ChannelSet, build_channels,
                      build_far_field_channel, build_near_field_los_channel,
                      near_field_rows, path_loss_alice_ris, rayleigh_distance,
                      scenario_rayleigh_distance, ula_response, upa_response)
from .detection import (DetectionReport, NoiseUncertainty, dep,
                        detection_report, leakage_power, max_leakage, min_dep,
                        noise_pdf, optimal_threshold)
from .wmmse import (SolverTolerances, bisection_solve, covert_rate,
                    effective_channels, mse_matrix, receive_filter,
                    weight_matrix, wfd_closed_form, wmmse_fully_digital)
from .hybrid import (HybridPrecoder, baseband_ls, euclidean_gradient,
                     hybrid_decompose, mo_analog, retract,
                     riemannian_gradient, vector_transport)
from .ris import (AdmmParams, RisQuadratics, admm_reflection, build_quadratics,
                  dual_update, phi_update, project_ellipsoid,
                  quadratic_objective, v_update)
from .orchestrator import (BeamformerState, FeasibilityError,
                           OptimizationTrace, Solution,
                           alternating_optimization, evaluate_solution,
                           init_beamformers)
from .benchmarks import (SchemeId, far_field_scenario, random_phase_v,
                         run_scheme, sum_path_gain_ris, zf_beamformer)
from .analysis import (HeatmapGrid, equivalent_channel_inner_product,
                       focusing_ratio_dispersion, heatmap, write_heatmap_csv)

__version__ = "0.1.0"
