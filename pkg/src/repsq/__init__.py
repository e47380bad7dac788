"""Repeatable statistical-query performance testing.

Wraps any mean-style performance estimator in a grid-snapping output
stage and a variance-adaptive stopping rule, so that independent runs
of the same test configuration return the same number with high
probability, the returned number is provably close to the true
measure, and low-variance strategies stop early. The harness module
provides the initiator/replicator exchange that shares a serialized
quantization grid between parties.
"""

from .artifact import (
    FORMAT_VERSION,
    RNG_ALGORITHM,
    artifact_checksum,
    build_artifact,
    dump_artifact,
    fmt17,
    load_artifact,
    parse17,
    partition_from_payload,
    partition_to_payload,
    verify_artifact,
)
from .errors import (
    ArtifactVersionMismatch,
    BoundViolation,
    ClampWarning,
    DegenerateBatch,
    DomainError,
    InfeasibleRepeatability,
    InsufficientSamples,
    NonTerminated,
    OracleBudgetError,
    RepsqError,
    WeightCapExceeded,
    ZeroProposalDensity,
)
from .estimator import (
    RANGE_TERM_MODES,
    BoundSpec,
    EstimatorState,
    bernstein_radius,
    bernstein_second_coef,
    hoeffding_radius,
    required_n_hoeffding,
    should_terminate,
    update,
)
from .harness import (
    CampaignConfig,
    ConvergenceStudy,
    EffortComparison,
    RadiusTrace,
    RepeatabilityReport,
    TrialResult,
    campaign_stream,
    config_from_artifact,
    convergence_study,
    effort_comparison,
    initiator,
    pairwise_experiment,
    replicator,
    run_quantized_sq,
)
from .quantize import (
    AccuracySpec,
    Partition,
    QuantizedValue,
    build_partition,
    collision_probability_lower_bound,
    compute_alpha,
    quantize,
)
from .samplers import (
    AisPolicy,
    BetaProposal,
    BoxDomain,
    BoxUniform,
    DiscreteDistribution,
    ais_update,
    fit_beta,
    importance_weight,
    mixture_sample,
    mixture_sample_many,
    proposal_snapshot,
)
from .testbeds import (
    CellularTestbed,
    DisplacementTestbed,
    TrackingTestbed,
    convergence_study_testbed,
    displacement_testbed,
    moderate_cellular_testbed,
    rare_event_acceptance_testbed,
    rare_event_testbed,
    testbed_from_spec,
    tracking_loss,
    tracking_testbed,
)

__version__ = "0.1.0"

__all__ = [
    "FORMAT_VERSION",
    "RNG_ALGORITHM",
    "AccuracySpec",
    "AisPolicy",
    "ArtifactVersionMismatch",
    "BetaProposal",
    "BoundSpec",
    "BoundViolation",
    "BoxDomain",
    "BoxUniform",
    "CampaignConfig",
    "CellularTestbed",
    "ClampWarning",
    "ConvergenceStudy",
    "DegenerateBatch",
    "DiscreteDistribution",
    "DisplacementTestbed",
    "DomainError",
    "EffortComparison",
    "EstimatorState",
    "InfeasibleRepeatability",
    "InsufficientSamples",
    "NonTerminated",
    "OracleBudgetError",
    "Partition",
    "QuantizedValue",
    "RANGE_TERM_MODES",
    "RadiusTrace",
    "RepeatabilityReport",
    "RepsqError",
    "TrackingTestbed",
    "TrialResult",
    "WeightCapExceeded",
    "ZeroProposalDensity",
    "ais_update",
    "artifact_checksum",
    "bernstein_radius",
    "bernstein_second_coef",
    "build_artifact",
    "build_partition",
    "campaign_stream",
    "collision_probability_lower_bound",
    "compute_alpha",
    "config_from_artifact",
    "convergence_study",
    "convergence_study_testbed",
    "displacement_testbed",
    "dump_artifact",
    "effort_comparison",
    "fit_beta",
    "fmt17",
    "hoeffding_radius",
    "importance_weight",
    "initiator",
    "load_artifact",
    "mixture_sample",
    "mixture_sample_many",
    "moderate_cellular_testbed",
    "pairwise_experiment",
    "parse17",
    "partition_from_payload",
    "partition_to_payload",
    "proposal_snapshot",
    "quantize",
    "rare_event_acceptance_testbed",
    "rare_event_testbed",
    "replicator",
    "required_n_hoeffding",
    "run_quantized_sq",
    "should_terminate",
    "testbed_from_spec",
    "tracking_loss",
    "tracking_testbed",
    "update",
    "verify_artifact",
    "__version__",
]
