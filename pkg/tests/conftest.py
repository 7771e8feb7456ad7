from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

import gazekit as gz

settings.register_profile(
    "default",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


# Geometry used throughout: the wide ring with a mid-size target keeps
# comfortable margins between targets and their magnetic fields.
WIDE_SPACING = 0.26
MID_SIZE_DEG = 2.86
PLANE_D = 1.3


def flat_ring(rounds: int = 1, size_deg: float = MID_SIZE_DEG, spacing: float = WIDE_SPACING) -> gz.RingSpec:
    return gz.RingSpec(
        inter_target_m=spacing,
        plane_distance_m=PLANE_D,
        size_schedule_deg=(size_deg,) * rounds,
    )


def quiet_sim(seed: int = 0, **overrides) -> gz.SimConfig:
    """Noise-free simulator config; every trial is a clean correct selection."""
    base = dict(
        seed=seed,
        fixation_jitter_sd_dmm=0.0,
        landing_error_sd_dmm=0.0,
        pinch_offset_mean_ms=100.0,
        pinch_offset_sd_ms=0.0,
        dropout_rate=0.0,
    )
    base.update(overrides)
    return gz.SimConfig(**base)


@pytest.fixture
def layout():
    return gz.make_ring_layout(9, WIDE_SPACING, MID_SIZE_DEG, PLANE_D)
