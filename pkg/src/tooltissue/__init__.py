"""Probabilistic tool-tissue interaction modeling from sparse 2D keypoint
tracks: dynamic tissue reference frames, frame-relative SE(2) tool poses,
a time-conditioned Gaussian mixture trained by EM, and pose prediction via
Gaussian mixture regression with shortest-arc orientation interpolation.
"""

from .errors import (
    ConfigError,
    DegenerateConfiguration,
    DomainError,
    EmptyCluster,
    EmptyClusterError,
    EmptyInput,
    FormatError,
    InputError,
    InsufficientClusters,
    InsufficientPoints,
    LengthMismatch,
    MissingLabels,
    MissingToolLandmarks,
    NotFound,
    NumericalCollapse,
    NumericalError,
    TooFewPoints,
    ToolTissueError,
    UnwrapError,
    UsageError,
    ValidationError,
    VersionMismatch,
)
from .geometry import (
    IsotropicCovarianceWarning,
    Pose2,
    Rotation2,
    Transform2,
    apply_inverse,
    pca_rotation,
    relative_angle,
    shortest_angle_diff,
    slerp_angle,
    wrap_angle,
)
from .tracks import (
    LandmarkSample,
    ModelFile,
    TrackSet,
    loads_tracks,
    parse_tracks,
    read_model,
    tool_pose,
    write_model,
    write_tracks,
)
from .frames import (
    ClusterSpec,
    ClusterStat,
    Datapoint,
    ReferenceFrame,
    assemble_datapoints,
    build_reference_frame,
    cluster_gaussian,
    compute_reference_frames,
    domain_cluster,
)
from .mixture import (
    MixtureModel,
    PosePrediction,
    TrainConfig,
    TrainDiagnostics,
    em_train,
    gmr,
    predict_orientation,
    predict_trajectory,
    select_components,
    train_with_selection,
)
from .evaluation import (
    EvalReport,
    FrameError,
    SplitSpec,
    angle_error,
    evaluate,
    position_error,
    split,
    write_report_csv,
    write_summary_json,
)
from .synth import SceneConfig, generate_scene
from .config import PipelineConfig, parse_component_spec, parse_split_spec

__version__ = "0.1.0"
