"""Active learning over latent-space embeddings of driving trajectories."""

__version__ = "0.1.0"

from .trajectories import (  # noqa: F401
    ClassLabel,
    CutInVariant,
    DatasetPartition,
    DatasetSpec,
    GeneratorParams,
    Trajectory,
    TrajectoryStore,
    generate_dataset,
    generate_trajectory,
)
from .metrics import f1_score  # noqa: F401
from .dtw import DistanceMatrix, dtw_distance, pairwise_distances  # noqa: F401
from .tsne import EmbeddingConfig, calibrate_bandwidths, low_dim_affinities  # noqa: F401
from .embedding import EmbeddedPoint  # noqa: F401
from .active_learning import (  # noqa: F401
    ActiveLearningSession,
    SessionConfig,
    SimulatedOracle,
    discovery_metrics,
    informativeness_entropy,
    informativeness_margin,
    informativeness_random,
    resume_session,
    run_session,
)
from .experiments import CurveSummary, ExperimentPlan, compare_strategies, run_plan  # noqa: F401
