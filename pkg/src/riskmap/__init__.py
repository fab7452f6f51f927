"""riskmap: pedestrian hazard risk scoring and navigable risk event maps.

Pipeline: a hierarchical binary-question cascade per street-level keyframe,
weighted risk scoring of the answers, worst-case aggregation onto street
segments matched from an OSM extract, GeoJSON event-map rendering, and an
evaluation harness against human ground truth.
"""

from .catalog import (
    BinaryAnswer,
    HazardCategory,
    Question,
    QuestionCatalog,
    QuerySession,
    default_catalog,
    is_complete,
    load_catalog,
    next_questions,
    record_answer,
)
from .evaluation import (
    ConfusionCounts,
    EvalReport,
    GroundTruthSet,
    MetricSet,
    align_pairs,
    build_report,
    confusion,
    mae_risk,
    metrics,
)
from .eventmap import Keyframe, RiskEventMap, build_event_map, render_geojson
from .gateway import (
    BASE_CONTEXT,
    MockOracleBackend,
    PromptEnvelope,
    RawAnswer,
    RecordedBackend,
    RemoteBackend,
    ask,
    batch_ask,
    normalize_answer,
)
from .geo import GpsPoint
from .osm import StreetGraph, StreetSegment, match_to_segment, parse_osm
from .risk import (
    RiskCategory,
    SegmentRisk,
    WeightConfig,
    answer_coefficient,
    classify,
    image_risk,
    segment_risk,
)

__version__ = "0.1.0"
