"""Gaze-and-pinch selection toolkit.

Deterministic reticle engine (sticky and magnetic hover heuristics), a
seedable trace simulator with ground-truth coordination offsets, an offline
coordination-error classifier with counterfactual (would-be) outcomes, session
metrics and repeated-measures statistics, session log I/O, and a live task
service for the browser harness.
"""

from .classify import (
    ClassifierConfig,
    IndeterminateEarlyError,
    OutcomeClass,
    SelectionRecord,
    classify,
    counterfactual,
)
from .geometry import (
    PlanePoint,
    Target,
    TargetLayout,
    angle_to_extent,
    dmm_to_meters,
    make_ring_layout,
    meters_to_dmm,
    visual_angle_deg,
)
from .metrics import EmptyMetricError, SessionMetrics, error_composition, session_metrics, throughput
from .replay import classify_session, replay_session, verify_replay
from .reticle import (
    GazeSample,
    HeuristicConfig,
    HoverResolution,
    PinchEvent,
    ReticleState,
    SelectionResolution,
    resolve_selection,
    step,
)
from .session_io import (
    Finding,
    FrameRow,
    MissingSessionFileError,
    SchemaError,
    SessionManifest,
    read_session,
    validate_session,
    write_session,
)
from .simulate import (
    GroundTruthTrial,
    Injection,
    SessionData,
    SimConfig,
    derive_session_seed,
    saccade_duration_ms,
    simulate_session,
    simulate_trial,
)
from .stats import (
    DegenerateDataError,
    MissingCellError,
    StatResult,
    f_sf,
    paired_t,
    regularized_incomplete_beta,
    rm_anova,
    t_sf_two_sided,
)
from .task import BlockConfig, Condition, RingSpec, heuristics_for, highlight_order

__version__ = "0.1.0"
