"""Angular/planar unit conversions and Fitts-ring target layouts.

All task coordinates live on a vertical plane facing the viewer. Plane-local
meters are the canonical unit; visual angles (degrees) and distance-independent
millimeters (dmm) are derived views of the same geometry. The plane origin is
the center of the target ring.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True, slots=True)
class PlanePoint:
    """A point on the task plane, in meters, origin at the ring center."""

    x: float
    y: float

    def distance_to(self, other: "PlanePoint") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True, slots=True)
class Target:
    """One circular target. `radius` is in meters on the plane."""

    id: int
    center: PlanePoint
    radius: float

    def contains(self, p: PlanePoint, margin_m: float = 0.0) -> bool:
        # Boundary-inclusive hit test; fixed so replays are bit-exact.
        return p.distance_to(self.center) <= self.radius + margin_m


@dataclass(frozen=True, slots=True)
class TargetLayout:
    """A ring of equally spaced circular targets on the plane."""

    targets: tuple[Target, ...]
    plane_distance: float
    ring_radius: float
    size_deg: float
    inter_target_m: float

    def target(self, target_id: int) -> Target:
        t = self.targets[target_id]
        if t.id != target_id:
            raise ValueError(f"layout targets out of order at id {target_id}")
        return t


def visual_angle_deg(extent_m: float, distance_m: float) -> float:
    """Visual angle subtended by `extent_m` seen flat-on at `distance_m`.

    Uses the full perspective formula 2*atan(extent / (2*distance)), not the
    small-angle approximation.
    """
    if distance_m <= 0:
        raise ValueError(f"distance must be positive, got {distance_m}")
    if extent_m < 0:
        raise ValueError(f"extent must be non-negative, got {extent_m}")
    return math.degrees(2.0 * math.atan(extent_m / (2.0 * distance_m)))


def angle_to_extent(angle_deg: float, distance_m: float) -> float:
    """Exact inverse of :func:`visual_angle_deg` at the same distance."""
    if distance_m <= 0:
        raise ValueError(f"distance must be positive, got {distance_m}")
    if not 0.0 <= angle_deg < 180.0:
        raise ValueError(f"angle must be in [0, 180) degrees, got {angle_deg}")
    return 2.0 * distance_m * math.tan(math.radians(angle_deg) / 2.0)


def dmm_to_meters(v_dmm: float, distance_m: float) -> float:
    """Convert distance-independent millimeters to plane meters.

    1 dmm subtends 1 mm at 1 m viewing distance and scales linearly with
    distance, so UI elements keep a consistent visual size.
    """
    if distance_m <= 0:
        raise ValueError(f"distance must be positive, got {distance_m}")
    return v_dmm / 1000.0 * distance_m


def meters_to_dmm(extent_m: float, distance_m: float) -> float:
    if distance_m <= 0:
        raise ValueError(f"distance must be positive, got {distance_m}")
    return extent_m * 1000.0 / distance_m


def make_ring_layout(
    n: int,
    inter_target_m: float,
    size_deg: float,
    plane_distance: float,
) -> TargetLayout:
    """Build a ring of `n` equally spaced circular targets.

    `inter_target_m` is the chord between adjacent target centers, so the ring
    radius is inter / (2*sin(pi/n)). `size_deg` is the target *diameter* as a
    visual angle at `plane_distance`. Target 0 sits at the top of the ring and
    ids increase clockwise.
    """
    if n < 2:
        raise ValueError(f"need at least 2 targets, got {n}")
    if inter_target_m <= 0:
        raise ValueError(f"inter-target distance must be positive, got {inter_target_m}")
    if size_deg <= 0:
        raise ValueError(f"target size must be positive, got {size_deg}")
    ring_radius = inter_target_m / (2.0 * math.sin(math.pi / n))
    radius = angle_to_extent(size_deg, plane_distance) / 2.0
    targets = []
    for i in range(n):
        theta = math.radians(90.0 - i * 360.0 / n)
        center = PlanePoint(ring_radius * math.cos(theta), ring_radius * math.sin(theta))
        targets.append(Target(id=i, center=center, radius=radius))
    return TargetLayout(
        targets=tuple(targets),
        plane_distance=plane_distance,
        ring_radius=ring_radius,
        size_deg=size_deg,
        inter_target_m=inter_target_m,
    )
