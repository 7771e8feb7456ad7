"""Experiment protocol: conditions, target sequencing, and block structure.

A block is `rounds` rounds of one selection per target. Round r uses the r-th
entry of the size schedule; target positions stay fixed while the radius
changes. Within a round the highlight hops across the ring
(next = current + ceil(n/2) mod n) to vary movement amplitude, as in the
standard ring pointing task.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .geometry import TargetLayout, make_ring_layout
from .reticle import HeuristicConfig

# Target diameters (visual angle, degrees) cycled across rounds by default.
DEFAULT_SIZE_CYCLE_DEG = (1.43, 2.03, 2.86, 4.05, 5.72)
DEFAULT_ROUNDS = 10
DEFAULT_INTER_TARGET_M = 0.26
DEFAULT_PLANE_DISTANCE_M = 1.3
TARGETS_PER_ROUND = 9


class Condition(enum.Enum):
    NONE = "none"
    STICKY = "sticky"
    MAGNETIC = "magnetic"
    STICKY_MAGNETIC = "sticky_magnetic"

    @property
    def sticky(self) -> bool:
        return self in (Condition.STICKY, Condition.STICKY_MAGNETIC)

    @property
    def magnetic(self) -> bool:
        return self in (Condition.MAGNETIC, Condition.STICKY_MAGNETIC)


def heuristics_for(
    condition: Condition,
    sticky_hold_ms: float = 50.0,
    magnetic_margin_dmm: float = 20.0,
) -> HeuristicConfig:
    return HeuristicConfig(
        sticky_enabled=condition.sticky,
        sticky_hold_ms=sticky_hold_ms,
        magnetic_enabled=condition.magnetic,
        magnetic_margin_dmm=magnetic_margin_dmm,
    )


def condition_matches(condition: Condition, cfg: HeuristicConfig) -> bool:
    return cfg.sticky_enabled == condition.sticky and cfg.magnetic_enabled == condition.magnetic


def highlight_order(n: int = TARGETS_PER_ROUND) -> tuple[int, ...]:
    """Across-the-ring highlight order for one round, starting at target 0."""
    step = (n + 1) // 2
    return tuple((i * step) % n for i in range(n))


def default_size_schedule(rounds: int = DEFAULT_ROUNDS) -> tuple[float, ...]:
    cycle = DEFAULT_SIZE_CYCLE_DEG
    return tuple(cycle[r % len(cycle)] for r in range(rounds))


@dataclass(frozen=True)
class RingSpec:
    """Geometry shared by every round of a block."""

    n_targets: int = TARGETS_PER_ROUND
    inter_target_m: float = DEFAULT_INTER_TARGET_M
    plane_distance_m: float = DEFAULT_PLANE_DISTANCE_M
    size_schedule_deg: tuple[float, ...] = field(default_factory=default_size_schedule)

    def __post_init__(self) -> None:
        if self.n_targets < 2:
            raise ValueError(f"need at least 2 targets, got {self.n_targets}")
        if self.inter_target_m <= 0:
            raise ValueError("inter_target_m must be positive")
        if self.plane_distance_m <= 0:
            raise ValueError("plane_distance_m must be positive")
        if not self.size_schedule_deg:
            raise ValueError("size schedule must not be empty")
        if any(s <= 0 for s in self.size_schedule_deg):
            raise ValueError("size schedule entries must be positive")

    @property
    def rounds(self) -> int:
        return len(self.size_schedule_deg)

    @property
    def trials(self) -> int:
        return self.rounds * self.n_targets

    def layout_for_round(self, round_index: int) -> TargetLayout:
        return make_ring_layout(
            self.n_targets,
            self.inter_target_m,
            self.size_schedule_deg[round_index],
            self.plane_distance_m,
        )


@dataclass(frozen=True)
class BlockConfig:
    """One session's worth of task: who, which condition, and the geometry."""

    subject_id: str = "sub00"
    condition: Condition = Condition.NONE
    block_index: int = 0
    ring: RingSpec = field(default_factory=RingSpec)
    sticky_hold_ms: float = 50.0
    magnetic_margin_dmm: float = 20.0

    @property
    def heuristics(self) -> HeuristicConfig:
        return heuristics_for(self.condition, self.sticky_hold_ms, self.magnetic_margin_dmm)

    @property
    def session_id(self) -> str:
        return f"{self.subject_id}_{self.condition.value}_b{self.block_index}"

    def intended_target(self, trial_index: int) -> int:
        return highlight_order(self.ring.n_targets)[trial_index % self.ring.n_targets]

    def round_of(self, trial_index: int) -> int:
        return trial_index // self.ring.n_targets
