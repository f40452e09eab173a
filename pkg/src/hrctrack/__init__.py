"""Destination-aware discrete-state target tracking.

The package models targets whose motion is conditioned on where they will
end up, not just where they are: a bridge decomposition turns an endpoint
joint distribution plus a base random walk into per-destination transition
laws, and a pinned-marginal variant matches prescribed start and end
marginals. Normalized filters over cluttered position scans give per-epoch
state posteriors and joint sequence likelihoods; likelihood-ratio scores
drive track-extraction ROC studies, and a Monte Carlo harness reproduces
detection and filtering benchmarks end to end.

Heavy kernels run under numba when available; set HRCTRACK_BACKEND to
"numpy" or "numba" to pick explicitly (default "auto").
"""

from __future__ import annotations

from ._kernels import available_backends, backend_name, set_backend, use
from .chains import (
    BridgeConstructionError,
    BridgeFamily,
    ChainModelError,
    InfeasibleEndpointsError,
    SchrodingerBridge,
    SchrodingerConvergenceError,
    ThreePointKernel,
    bridge_initial_distributions,
    bridges_from_base_closed_form,
    bridges_from_kernel,
    destination_attainment,
    markov_endpoint_distribution,
    matrix_power_table,
    propagate_chain_marginals,
    rc_path_logprob,
    sample_markov_path,
    sample_rc_path,
    solve_schrodinger,
    three_point_from_base,
    validate_endpoint_distribution,
    validate_endpoint_feasibility,
    validate_transition_matrix,
)
from .detect import (
    DetectorSpec,
    RocCurve,
    auc,
    auc_u_statistic,
    bootstrap_auc_se,
    bootstrap_delta_auc_se,
    delta_auc,
    log_likelihood_ratio,
    null_loglik,
    operating_point,
    roc_from_scores,
    roc_to_rows,
)
from .filters import (
    FilterOutput,
    FilterState,
    ZeroEvidenceError,
    chain_filter,
    clutter_embedded_hrc_step,
    conditional_mean,
    filter_output_to_jsonable,
    hmc_filter,
    hrc_filter,
    hrc_init,
    hrc_step,
    hrc_terminal,
    hsc_filter,
    map_states,
)
from .gridworld import (
    GridSpec,
    benefit_indicator,
    build_random_walk,
    endpoints_crossing,
    endpoints_loitering,
    endpoints_mixture,
)
from .harness import (
    ConfigError,
    ExperimentConfig,
    MetricsReport,
    ModelBundle,
    brute_force_posterior,
    brute_force_sequence_likelihood,
    build_models,
    config_from_dict,
    config_from_json,
    config_hash,
    run_detection_experiment,
    run_experiment,
    run_filtering_experiment,
    sweep,
    write_report,
    write_sweep,
)
from .observation import (
    ClutterModel,
    MultiObsModel,
    NoiseModel,
    ObservationRecord,
    SingleObsModel,
    clutter_likelihood_table,
    clutter_point_likelihood,
    generate_clutter_sequence,
    generate_multi_sequence,
    generate_single_sequence,
    likelihood_table,
    multi_obs_likelihood,
    observations_from_jsonable,
    observations_to_jsonable,
    point_likelihood,
    single_obs_likelihood,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # backends
    "available_backends",
    "backend_name",
    "set_backend",
    "use",
    # grid world
    "GridSpec",
    "build_random_walk",
    "endpoints_crossing",
    "endpoints_loitering",
    "endpoints_mixture",
    "benefit_indicator",
    # chains
    "ChainModelError",
    "InfeasibleEndpointsError",
    "BridgeConstructionError",
    "SchrodingerConvergenceError",
    "ThreePointKernel",
    "BridgeFamily",
    "SchrodingerBridge",
    "validate_transition_matrix",
    "validate_endpoint_distribution",
    "validate_endpoint_feasibility",
    "matrix_power_table",
    "three_point_from_base",
    "bridge_initial_distributions",
    "bridges_from_base_closed_form",
    "bridges_from_kernel",
    "rc_path_logprob",
    "destination_attainment",
    "sample_rc_path",
    "sample_markov_path",
    "solve_schrodinger",
    "propagate_chain_marginals",
    "markov_endpoint_distribution",
    # observation
    "NoiseModel",
    "ClutterModel",
    "SingleObsModel",
    "MultiObsModel",
    "ObservationRecord",
    "point_likelihood",
    "clutter_point_likelihood",
    "single_obs_likelihood",
    "multi_obs_likelihood",
    "likelihood_table",
    "clutter_likelihood_table",
    "generate_single_sequence",
    "generate_multi_sequence",
    "generate_clutter_sequence",
    "observations_to_jsonable",
    "observations_from_jsonable",
    # filters
    "ZeroEvidenceError",
    "FilterState",
    "FilterOutput",
    "hrc_filter",
    "hmc_filter",
    "hsc_filter",
    "chain_filter",
    "hrc_init",
    "hrc_step",
    "hrc_terminal",
    "clutter_embedded_hrc_step",
    "conditional_mean",
    "map_states",
    "filter_output_to_jsonable",
    # detection
    "DetectorSpec",
    "RocCurve",
    "null_loglik",
    "log_likelihood_ratio",
    "roc_from_scores",
    "roc_to_rows",
    "auc",
    "auc_u_statistic",
    "delta_auc",
    "operating_point",
    "bootstrap_auc_se",
    "bootstrap_delta_auc_se",
    # harness
    "ConfigError",
    "ExperimentConfig",
    "MetricsReport",
    "ModelBundle",
    "config_from_dict",
    "config_from_json",
    "config_hash",
    "build_models",
    "run_detection_experiment",
    "run_filtering_experiment",
    "run_experiment",
    "sweep",
    "write_report",
    "write_sweep",
    "brute_force_sequence_likelihood",
    "brute_force_posterior",
]
