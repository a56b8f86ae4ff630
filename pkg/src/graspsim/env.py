"""Episode lifecycle, grasp-outcome rules, and rewards.

Outcomes are decided by auditable geometric rules (affinity, fit, finger-ring
sweep, approach clearance, sucker blocking), then surviving successes are
flipped to failures independently with probability p_fail. Objects never
shift position; a failed grasp leaves the scene unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import ring_intersects_rect, segment_intersects_rect
from .gripper import GripperParams
from .planner import EnvelopePlan, ObstacleField, SuckPlan, obstacle_field
from .scene import Heightmap, Scene, render_depth, render_masks

KINDS = ("enveloping", "sucking", "enveloping_then_sucking")

REWARD_ES_FULL = 2.5
REWARD_SINGLE = 1.0
REWARD_ES_SEMI = 0.5
REWARD_FAIL = 0.0
REWARD_SET = (REWARD_ES_FULL, REWARD_SINGLE, REWARD_ES_SEMI, REWARD_FAIL)

DEFAULT_P_FAIL = 0.08
DEFAULT_CLEARANCE = 0.4
_FIT_TOL = 1e-9


def validate_reward_shaping(gamma: float) -> None:
    """Check the shaping inequalities that make composite actions worth
    learning: a full composite beats two singles (plain and discounted),
    and a semi-success is worth less than one single."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("discount gamma must lie in [0, 1]")
    if not REWARD_ES_FULL > REWARD_SINGLE + REWARD_SINGLE:
        raise ValueError("composite reward must exceed the sum of two singles")
    if not REWARD_ES_FULL > REWARD_SINGLE + gamma * REWARD_SINGLE:
        raise ValueError("composite reward must exceed a discounted pair of singles")
    if not REWARD_ES_SEMI < REWARD_SINGLE:
        raise ValueError("semi-success reward must stay below a single success")


@dataclass(frozen=True)
class GraspAction:
    """One executable action: a primitive plan or an envelope+suck pair."""

    kind: str
    envelope_plan: EnvelopePlan | None = None
    suck_plan: SuckPlan | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown action kind {self.kind!r}")
        if self.kind == "enveloping" and (
            self.envelope_plan is None or self.suck_plan is not None
        ):
            raise ValueError("enveloping takes exactly an envelope plan")
        if self.kind == "sucking" and (
            self.suck_plan is None or self.envelope_plan is not None
        ):
            raise ValueError("sucking takes exactly a suck plan")
        if self.kind == "enveloping_then_sucking":
            if self.envelope_plan is None or self.suck_plan is None:
                raise ValueError("composite action needs both plans")
            if self.envelope_plan.target_id == self.suck_plan.target_id:
                raise ValueError("composite action needs two distinct targets")

    def target_ids(self) -> tuple:
        ids = []
        if self.envelope_plan is not None:
            ids.append(self.envelope_plan.target_id)
        if self.suck_plan is not None:
            ids.append(self.suck_plan.target_id)
        return tuple(ids)


@dataclass(frozen=True)
class Outcome:
    envelope_success: bool | None
    suck_success: bool | None
    reward: float
    picked_ids: tuple

    def __post_init__(self):
        if self.reward not in REWARD_SET:
            raise ValueError(f"reward {self.reward} outside the reward set")


@dataclass(frozen=True)
class StateView:
    """What a policy sees: the scene plus rendered depth and object masks."""

    scene: Scene
    heightmap: Heightmap
    ids: tuple
    masks: np.ndarray

    @property
    def resolution(self) -> int:
        return self.heightmap.resolution


def make_state_view(scene: Scene, resolution: int) -> StateView:
    ids, masks = render_masks(scene, resolution)
    return StateView(scene, render_depth(scene, resolution), ids, masks)


class Episode:
    """A pick sequence on one scene, terminal when the table is empty or the
    attempt budget (3x the initial object count by default) runs out."""

    def __init__(
        self,
        scene: Scene,
        gripper: GripperParams,
        *,
        rng: np.random.Generator,
        p_fail: float = DEFAULT_P_FAIL,
        clearance_threshold: float = DEFAULT_CLEARANCE,
        max_steps: int | None = None,
        resolution: int = 64,
    ):
        if not 0.0 <= p_fail <= 1.0:
            raise ValueError("p_fail must lie in [0, 1]")
        if not 0.0 <= clearance_threshold <= 1.0:
            raise ValueError("clearance threshold must lie in [0, 1]")
        self.scene = scene
        self.gripper = gripper
        self.rng = rng
        self.p_fail = p_fail
        self.clearance_threshold = clearance_threshold
        self.max_steps = 3 * len(scene) if max_steps is None else max_steps
        self.resolution = resolution
        self.step_count = 0

    @property
    def terminal(self) -> bool:
        return len(self.scene) == 0 or self.step_count >= self.max_steps

    def view(self) -> StateView:
        return make_state_view(self.scene, self.resolution)


def _envelope_passes(scene: Scene, plan: EnvelopePlan, gripper: GripperParams) -> bool:
    obj = scene.object_by_id(plan.target_id)
    if obj.grasp_affinity not in ("envelope_only", "both"):
        return False
    rect = obj.footprint
    # width of the footprint across the closing direction
    delta = math.radians(plan.alpha_e - rect.axis_angle_deg)
    width = 2.0 * (
        rect.half_long * abs(math.sin(delta)) + rect.half_short * abs(math.cos(delta))
    )
    if width > plan.opening_d + _FIT_TOL:
        return False
    # the four fingertips descend on a circle of radius d_f around the target
    radius = plan.descent_opening / math.sqrt(2.0)
    for o in scene.objects:
        if o.id != plan.target_id and ring_intersects_rect(
            rect.center, radius, o.footprint
        ):
            return False
    return True


def _suck_passes(
    scene: Scene,
    plan: SuckPlan,
    gripper: GripperParams,
    clearance_threshold: float,
    *,
    blocked_check: bool,
    field: ObstacleField,
) -> bool:
    obj = scene.object_by_id(plan.target_id)
    if obj.grasp_affinity not in ("suck_only", "both"):
        return False
    if obj.top_flat_area < gripper.sucker_area():
        return False
    if field.value_at(plan.alpha_s) < clearance_threshold:
        return False
    if blocked_check:
        # while holding the enveloped object, the presented sucker is blocked
        # by anything within one sucker diameter along the approach direction
        a = math.radians(plan.alpha_s)
        start = obj.footprint.center
        end = start + gripper.sucker_diameter * np.array([math.cos(a), math.sin(a)])
        for o in scene.objects:
            if o.id != plan.target_id and segment_intersects_rect(
                start, end, o.footprint
            ):
                return False
    return True


def attempt_outcome(
    episode: Episode,
    action: GraspAction,
    *,
    p_fail: float | None = None,
    clearance_threshold: float | None = None,
) -> Outcome:
    """Resolve an action against the current scene.

    Geometric rules decide first; each surviving primitive success is then
    flipped to failure with probability p_fail (one draw per primitive, drawn
    whether or not the geometry passed, so the random stream advances
    identically for identical action sequences)."""
    pf = episode.p_fail if p_fail is None else p_fail
    ct = episode.clearance_threshold if clearance_threshold is None else clearance_threshold
    scene = episode.scene
    gripper = episode.gripper
    env_success = None
    suck_success = None
    picked = []

    if action.envelope_plan is not None:
        env_success = _envelope_passes(scene, action.envelope_plan, gripper)
        if episode.rng.random() < pf:
            env_success = False
        if env_success:
            picked.append(action.envelope_plan.target_id)

    if action.suck_plan is not None:
        plan = action.suck_plan
        if action.kind == "enveloping_then_sucking":
            # the suck executes after the envelope: a picked envelope target
            # has left the table, a failed one still stands and still blocks
            suck_scene = scene.without(picked[0]) if env_success else scene
            if env_success:
                field = plan.field
            else:
                field = obstacle_field(suck_scene, plan.target_id)
            blocked = True
        else:
            suck_scene = scene
            field = plan.field
            blocked = False
        suck_success = _suck_passes(
            suck_scene, plan, gripper, ct, blocked_check=blocked, field=field
        )
        if episode.rng.random() < pf:
            suck_success = False
        if suck_success:
            picked.append(plan.target_id)

    reward = reward_of(action.kind, env_success, suck_success)
    return Outcome(env_success, suck_success, reward, tuple(picked))


def reward_of(kind: str, envelope_success, suck_success) -> float:
    if kind == "enveloping":
        return REWARD_SINGLE if envelope_success else REWARD_FAIL
    if kind == "sucking":
        return REWARD_SINGLE if suck_success else REWARD_FAIL
    if kind == "enveloping_then_sucking":
        n = int(bool(envelope_success)) + int(bool(suck_success))
        return (REWARD_FAIL, REWARD_ES_SEMI, REWARD_ES_FULL)[n]
    raise ValueError(f"unknown action kind {kind!r}")


def step(episode: Episode, action: GraspAction) -> tuple[Outcome, StateView]:
    """Execute one action: resolve the outcome, remove picked objects,
    advance the step counter, and render the resulting state."""
    if episode.terminal:
        raise RuntimeError("episode is terminal")
    for tid in action.target_ids():
        episode.scene.object_by_id(tid)  # raises on stale ids
    outcome = attempt_outcome(episode, action)
    scene = episode.scene
    for tid in outcome.picked_ids:
        scene = scene.without(tid)
    episode.scene = scene
    episode.step_count += 1
    return outcome, episode.view()


LOG_COLUMNS = (
    "episode",
    "step",
    "kind",
    "env_target",
    "suck_target",
    "alpha_e",
    "gamma_e",
    "opening_d",
    "alpha_s",
    "gamma_s",
    "sucker_index",
    "envelope_success",
    "suck_success",
    "reward",
)


def log_row(episode_idx: int, step_idx: int, action: GraspAction, outcome: Outcome) -> tuple:
    """One per-step log record matching LOG_COLUMNS (empty strings for n/a)."""
    ep = action.envelope_plan
    sp = action.suck_plan

    def num(x):
        return "" if x is None else f"{x:.9g}"

    def flag(x):
        return "" if x is None else str(int(x))

    return (
        str(episode_idx),
        str(step_idx),
        action.kind,
        "" if ep is None else str(ep.target_id),
        "" if sp is None else str(sp.target_id),
        num(None if ep is None else ep.alpha_e),
        num(None if ep is None else ep.gamma_e),
        num(None if ep is None else ep.opening_d),
        num(None if sp is None else sp.alpha_s),
        num(None if sp is None else sp.gamma_s),
        "" if sp is None else str(sp.sucker_index),
        flag(outcome.envelope_success),
        flag(outcome.suck_success),
        f"{outcome.reward:.9g}",
    )
