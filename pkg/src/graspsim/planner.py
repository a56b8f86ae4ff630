"""Grasp planning: enveloping axis, sucking orientation, gripper poses.

All angles in degrees. alpha_e is the target's long-axis direction in
[0, 180); alpha_s is the approach direction for sucking in [0, 360);
gamma_* are the wrist rotations commanded around the vertical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Pose, Sector, largest_sector_of_box, rot_x, rot_y, rot_z
from .gripper import (
    FingerState,
    GripperParams,
    fingertip_height,
    solve_bend_for_opening,
    sucker_normal_angle,
    sucker_position,
)
from .scene import Scene, object_descriptor

# minimum clear-zone extent accepted by the orientation scan
DEFAULT_ZONE_EXTENT = 45.0
# bending angle used to present a fingertip sucker
DEFAULT_SUCK_BEND = 90.0
# descent stops at the object top or 5 cm above the table, whichever is lower
MIN_DESCENT_CLEARANCE = 0.05

R0 = rot_x(180.0)  # palm-down mounting rotation


def envelope_rotation_angle(alpha_e: float) -> float:
    """Wrist rotation gamma_e for a long axis at alpha_e in [0, 180)."""
    if not 0.0 <= alpha_e < 180.0:
        raise ValueError("alpha_e must lie in [0, 180) degrees")
    if alpha_e <= 90.0:
        return alpha_e - 45.0
    return alpha_e - 135.0


def sucker_for_orientation(alpha_s: float) -> tuple[int, float]:
    """(sucker index 1..4, wrist rotation gamma_s) for approach alpha_s."""
    a = alpha_s % 360.0
    if a <= 45.0:
        return 1, a
    if a <= 135.0:
        return 2, a - 90.0
    if a <= 225.0:
        return 3, a - 180.0
    if a <= 315.0:
        return 4, a - 270.0
    return 1, a - 360.0


@dataclass(frozen=True)
class EnvelopePlan:
    target_id: int
    alpha_e: float
    gamma_e: float
    opening_d: float
    pose: Pose
    descent_opening: float  # full d_max when preenveloping is disabled

    def __post_init__(self):
        if not -45.0 <= self.gamma_e <= 45.0:
            raise ValueError("gamma_e out of [-45, 45] degrees")


@dataclass(frozen=True)
class ObstacleEntry:
    object_id: int
    f_oi: float
    sector: Sector


@dataclass(frozen=True)
class ObstacleField:
    """Per-obstacle height factors and angular sectors around one target."""

    target_id: int
    entries: tuple
    samples: np.ndarray  # (360,) combined field at integer degrees

    def value_at(self, theta_deg: float) -> float:
        """Exact combined factor at any angle (matches samples on the grid)."""
        val = 1.0
        for e in self.entries:
            if e.sector.contains(theta_deg):
                val *= e.f_oi
        return max(val, 1e-300)


@dataclass(frozen=True)
class SuckPlan:
    target_id: int
    alpha_s: float
    gamma_s: float
    sucker_index: int
    pose: Pose
    field: ObstacleField  # field of the scene the plan was built against

    def __post_init__(self):
        if not -45.0 < self.gamma_s <= 45.0:
            raise ValueError("gamma_s out of (-45, 45] degrees")
        if self.sucker_index not in (1, 2, 3, 4):
            raise ValueError("sucker index must be 1..4")


def height_factor(h_target: float, h_obstacle: float, distance: float) -> float:
    """Obstacle suppression factor: 1 for shorter neighbors, exponential
    decay in the height excess over the planar center distance otherwise."""
    if h_obstacle <= h_target:
        return 1.0
    d = max(distance, 1e-9)
    return max(math.exp(-(h_obstacle - h_target) / d), 1e-12)


def obstacle_field(scene: Scene, target_id: int) -> ObstacleField:
    """Factors and sectors for every non-target object around the target."""
    _, center3, h0 = object_descriptor(scene, target_id)
    center = center3[:2]
    entries = []
    for o in scene.objects:
        if o.id == target_id:
            continue
        dist = float(np.hypot(*(o.footprint.center - center)))
        f = height_factor(h0, o.top, dist)
        try:
            sector = largest_sector_of_box(center, o.footprint)
        except ValueError:
            # target center inside the obstacle footprint: all directions blocked
            sector = Sector(full=True)
        entries.append(ObstacleEntry(o.id, f, sector))
    samples = _combined_samples(entries)
    return ObstacleField(target_id, tuple(entries), samples)


_DEG_GRID = np.arange(360.0)


def _sector_mask(sector: Sector) -> np.ndarray:
    if sector.full:
        return np.ones(360, dtype=bool)
    if sector.empty:
        return np.zeros(360, dtype=bool)
    s, e = sector.start_deg, sector.end_deg
    if s < e:
        return (_DEG_GRID >= s) & (_DEG_GRID <= e)
    return (_DEG_GRID >= s) | (_DEG_GRID <= e)


def _combined_samples(entries) -> np.ndarray:
    samples = np.ones(360)
    for e in entries:
        if e.f_oi >= 1.0:
            continue
        samples[_sector_mask(e.sector)] *= e.f_oi
    np.clip(samples, 1e-300, None, out=samples)
    return samples


def select_sucking_orientation(field: ObstacleField, xi: float = DEFAULT_ZONE_EXTENT) -> float:
    """Approach direction alpha_s: midpoint of the best clear zone.

    Scans the 1-degree-sampled combined field for constant-value zones at
    least xi wide, keeps the one with the highest factor (later zones win
    ties, the wrap-around zone across 0 degrees is checked last), and falls
    back to erasing the weakest obstacle factor and rescanning when no zone
    qualifies. A field with no sub-unity factor selects 0 degrees outright.
    """
    factors = [e.f_oi for e in field.entries]
    sectors = [e.sector for e in field.entries]
    alpha_s = None
    while alpha_s is None:
        if not factors or min(factors) >= 1.0:
            return 0.0
        F = _combined_samples(
            [ObstacleEntry(0, f, s) for f, s in zip(factors, sectors)]
        )
        th_s1, th_e1, th_s2, th_e2 = 0, 0, 0, 0
        bar = F[0]  # value of the best zone accepted so far
        cur = F[0]  # value of the zone being scanned
        for th in range(360):
            if F[th] != cur:
                th_e1 = th - 1
                if th_e1 - th_s1 >= xi and F[th_e1] >= bar:
                    alpha_s = (th_s1 + th_e1) / 2.0
                    bar = F[th_e1]
                if th_s1 == 0:
                    th_e2 = th_e1  # remember the first zone's end for the wrap check
                th_s1 = th
                cur = F[th]
            if th == 359:
                if th_s1 != th:
                    th_e1 = th
                    th_s2 = th_s1  # the trailing zone may wrap through 0
                    if th_e1 - th_s1 >= xi and F[th] >= bar:
                        alpha_s = (th_s1 + th_e1) / 2.0
                        bar = F[th]
                else:
                    th_s2 = th
        if F[0] == F[359] and 360.0 + th_e2 - th_s2 >= xi and F[0] >= bar:
            if th_s2 + th_e2 >= 360.0:
                alpha_s = (th_s2 + th_e2) / 2.0 - 180.0
            else:
                alpha_s = (th_s2 + th_e2) / 2.0 + 180.0
        if alpha_s is None:
            # no zone qualified: erase the weakest obstacle and rescan
            best_i = None
            for i, f in enumerate(factors):
                if f != 1.0 and (best_i is None or f > factors[best_i]):
                    best_i = i
            factors[best_i] = 1.0
    return alpha_s % 360.0


def plan_envelope(
    scene: Scene,
    target_id: int,
    gripper: GripperParams,
    *,
    orientation_opt: bool = True,
    preenvelope: bool = True,
) -> EnvelopePlan:
    """Enveloping plan: align with the long axis, open to the short side.

    Disabling orientation_opt forces alpha_e = 0 with the opening fixed at
    d_max; disabling preenvelope keeps the aligned opening but descends at
    full d_max (no pre-shaping).
    """
    rect, center3, _ = object_descriptor(scene, target_id)
    short_side = 2.0 * rect.half_short
    if short_side > gripper.d_max + 1e-12:
        raise ValueError(
            f"object short side {short_side:.6g} m exceeds max opening {gripper.d_max:.6g} m"
        )
    if orientation_opt:
        alpha_e = rect.axis_angle_deg
        opening = short_side
    else:
        alpha_e = 0.0
        opening = gripper.d_max
    descent = opening if preenvelope else gripper.d_max
    gamma_e = envelope_rotation_angle(alpha_e)

    state = solve_bend_for_opening(gripper, opening)
    h_f = fingertip_height(gripper, state)
    delta = max(MIN_DESCENT_CLEARANCE, center3[2])
    q_eg = np.array([0.0, 0.0, gripper.h_p + h_f - delta])
    rot = R0 @ rot_z(gamma_e)
    p_e = center3 - rot @ q_eg
    return EnvelopePlan(target_id, alpha_e, gamma_e, opening, Pose(p_e, rot), descent)


def plan_suck(
    scene: Scene,
    target_id: int,
    gripper: GripperParams,
    *,
    orientation_opt: bool = True,
    suck_bend_deg: float = DEFAULT_SUCK_BEND,
    field: ObstacleField | None = None,
) -> SuckPlan:
    """Sucking plan: pick the clearest approach, tilt one sucker onto the top.

    The wrist pose tilts the gripper by the sucker-normal angle theta_s about
    the axis facing the approach direction, so the indexed sucker lands on
    the target center."""
    _, center3, _ = object_descriptor(scene, target_id)
    target = scene.object_by_id(target_id)
    if target.top_flat_area < gripper.sucker_area():
        raise ValueError(
            f"unsuckable target: flat area {target.top_flat_area:.3g} m^2 "
            f"is below the sucker area {gripper.sucker_area():.3g} m^2"
        )
    if field is None:
        field = obstacle_field(scene, target_id)
    alpha_s = select_sucking_orientation(field) if orientation_opt else 0.0
    index, gamma_s = sucker_for_orientation(alpha_s)

    state = FingerState.from_bend(gripper, suck_bend_deg)
    theta_s = sucker_normal_angle(gripper, state)
    h_s, d_s = sucker_position(gripper, state, theta_s)
    z = gripper.h_p + h_s

    a = alpha_s % 360.0
    if 45.0 < a <= 135.0:
        rot = R0 @ rot_z(gamma_s) @ rot_x(-theta_s)
        q_sg = np.array([0.0, -d_s, z])
    elif 135.0 < a <= 225.0:
        rot = R0 @ rot_z(gamma_s) @ rot_y(theta_s)
        q_sg = np.array([-d_s, 0.0, z])
    elif 225.0 < a <= 315.0:
        rot = R0 @ rot_z(gamma_s) @ rot_x(theta_s)
        q_sg = np.array([0.0, d_s, z])
    else:
        rot = R0 @ rot_z(gamma_s) @ rot_y(-theta_s)
        q_sg = np.array([d_s, 0.0, z])
    p_s = center3 - rot @ q_sg
    return SuckPlan(target_id, alpha_s, gamma_s, index, Pose(p_s, rot), field)


def plan_envelope_then_suck(
    scene: Scene,
    envelope_id: int,
    suck_id: int,
    gripper: GripperParams,
    *,
    orientation_opt: bool = True,
    preenvelope: bool = True,
    suck_bend_deg: float = DEFAULT_SUCK_BEND,
) -> tuple[EnvelopePlan, SuckPlan]:
    """Composite plan: envelope one object, then suck another.

    The suck is planned against the scene with the enveloped object removed
    (it is held inside the gripper while sucking)."""
    if envelope_id == suck_id:
        raise ValueError("envelope and suck targets must be distinct")
    env_plan = plan_envelope(
        scene, envelope_id, gripper, orientation_opt=orientation_opt, preenvelope=preenvelope
    )
    reduced = scene.without(envelope_id)
    suck_plan = plan_suck(
        reduced, suck_id, gripper, orientation_opt=orientation_opt, suck_bend_deg=suck_bend_deg
    )
    return env_plan, suck_plan
