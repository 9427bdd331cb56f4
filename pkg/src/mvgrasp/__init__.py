"""Multi-view depth projections, viewpoint-entropy grasp-view selection,
open-ended Bayesian category learning, and antipodal grasp synthesis for
3D point-cloud objects."""

from .errors import (
    DegenerateGeometryError,
    EmptyCloudError,
    EmptyFeatureError,
    EmptyMapError,
    EmptyNeighborhoodError,
    EmptyViewError,
    FormatError,
    NoKnowledgeError,
    NoValidGraspError,
    ParseError,
    PipelineError,
    UnknownCategoryError,
)
from .geometry import (
    Aabb,
    PointCloud,
    ReferenceFrame,
    aabb,
    centroid,
    estimate_normals,
    identity_frame,
    load_cloud,
    local_reference_frame,
    sample_primitive,
    save_cloud,
    transform_from_frame,
    transform_to_frame,
)
from .projection import (
    DEFAULT_GRASP_BINS,
    DEFAULT_RECOGNITION_BINS,
    FIXED_PLANE_SIDE_M,
    FIXED_SIZE,
    SCALE_INVARIANT,
    DepthView,
    ViewSetup,
    VirtualCamera,
    camera_directions,
    generate_cameras,
    project,
    projection_plane_side,
    read_view,
    view_count,
    write_view,
)
from .views import ViewScore, normalize_view, rank_views, view_entropy
from .features import (
    FeatureVector,
    describe_cloud,
    load_embeddings,
    pool_features,
    render_views,
    save_features,
    view_to_feature,
)
from .learner import (
    CategoryModel,
    KnowledgeBase,
    Prediction,
    load_kb,
    save_kb,
)
from .protocol import (
    DatasetHandle,
    Instance,
    ProtocolConfig,
    ProtocolReport,
    aggregate_runs,
    constant_dataset,
    gaussian_dataset,
    load_dataset,
    run_experiment,
    run_many,
    sliding_accuracy,
)
from .grasping import (
    AnnealSchedule,
    GraspCandidate,
    GraspMap,
    GraspPlan,
    GraspPose,
    GraspRect,
    GripperGeometry,
    anneal,
    back_project,
    best_grasp,
    collision_free,
    fitness,
    grasp_depth,
    iou_valid,
    plan_grasp,
    read_grasp_map,
    rect_iou,
    sample_candidates,
    synthesize_grasp_map,
    write_grasp_map,
)

__version__ = "0.1.0"
