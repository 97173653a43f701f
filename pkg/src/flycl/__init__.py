"""Fly-circuit continual learning: sparse expansion coding plus a
partial-freezing associative readout, with perceptron and softmax
controls, a class-incremental benchmark harness, and empirical checks
of the separation theory that explains why the sparse code resists
catastrophic forgetting.
"""

from .config import (
    ExperimentConfig,
    ModelConfig,
    SyntheticSpec,
    data_stream_seed,
    derive_trial_seeds,
    experiment_from_dict,
)
from .data import (
    LabeledFeatureSet,
    PrototypeSet,
    generate_prototypes,
    load_features,
    max_pairwise_cosine,
    sample_noisy,
    save_features,
    shift_to_nonnegative,
)
from .encoder import (
    ProjectionMatrix,
    build_projection,
    default_fan_in,
    encode,
    encode_dense,
    normalize,
    project,
    winner_take_all,
)
from .errors import ConfigError, DatasetError, FeatureFileError, InfeasibleError
from .harness import (
    MetricsReport,
    OfflineReport,
    TaskSchedule,
    evaluate,
    make_schedule,
    run_class_incremental,
    run_offline,
)
from .learner import (
    PERCEPTRON_VARIANTS,
    Prediction,
    WeightMatrix,
    init_weights,
    logreg_scores,
    predict,
    update_fly,
    update_logreg,
    update_perceptron,
)
from .theory import (
    ConvergenceReport,
    EncoderConfig,
    SeparationReport,
    ShrinkageProfile,
    check_theorem1,
    controlled_cosine_pair,
    empirical_gamma,
    hijack_scenario,
    mean_convergence_check,
    pair_overlap,
    shrinkage_profile,
)

__version__ = "0.1.0"
