"""Metrics, closed-form efficiency theory, and sweep orchestration.

Success rate zeta counts an action as successful when it picks at least one
object (a half-successful composite counts; a strict variant that does not
is reported alongside). Efficiency eta counts objects per action, so it
exceeds 1 whenever fully successful composite actions occur.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .env import Episode, GraspAction, Outcome, log_row, step as env_step
from .gripper import GripperParams
from .learner import ActionChoice
from .planner import plan_envelope, plan_envelope_then_suck, plan_suck
from .scene import DEFAULT_CATALOG, Scene, spawn_scene

DEFAULT_PE_GRID = tuple(round(0.1 * i, 1) for i in range(11))
DEFAULT_ACTIONS_PER_GROUP = 200
DEFAULT_REPS = 3

SWEEP_COLUMNS = (
    "pe", "rep", "zeta", "eta",
    "n_env_s", "n_env_f", "n_suck_s", "n_suck_f",
    "n_es_full", "n_es_semi", "n_es_fail",
    "zeta_strict",
)
SUMMARY_COLUMNS = (
    "pe", "reps", "zeta_mean", "zeta_std", "eta_mean", "eta_std",
    "frac_env", "frac_suck", "frac_es",
)
THEORY_COLUMNS = ("pe", "eta_theory")


@dataclass
class RunStats:
    """Attempt counters for one or more episodes."""

    n_env_s: int = 0
    n_env_f: int = 0
    n_suck_s: int = 0
    n_suck_f: int = 0
    n_es_full: int = 0
    n_es_semi: int = 0
    n_es_fail: int = 0

    @property
    def actions_executed(self) -> int:
        return (self.n_env_s + self.n_env_f + self.n_suck_s + self.n_suck_f
                + self.n_es_full + self.n_es_semi + self.n_es_fail)

    @property
    def objects_picked(self) -> int:
        return self.n_env_s + self.n_suck_s + 2 * self.n_es_full + self.n_es_semi

    @property
    def successful_actions(self) -> int:
        return self.n_env_s + self.n_suck_s + self.n_es_full + self.n_es_semi

    @property
    def strict_successful_actions(self) -> int:
        return self.n_env_s + self.n_suck_s + self.n_es_full

    def record(self, kind: str, outcome: Outcome) -> None:
        if kind == "enveloping":
            if outcome.envelope_success:
                self.n_env_s += 1
            else:
                self.n_env_f += 1
        elif kind == "sucking":
            if outcome.suck_success:
                self.n_suck_s += 1
            else:
                self.n_suck_f += 1
        elif kind == "enveloping_then_sucking":
            n = int(bool(outcome.envelope_success)) + int(bool(outcome.suck_success))
            if n == 2:
                self.n_es_full += 1
            elif n == 1:
                self.n_es_semi += 1
            else:
                self.n_es_fail += 1
        else:
            raise ValueError(f"unknown action kind {kind!r}")

    def add(self, other: "RunStats") -> "RunStats":
        return RunStats(*(a + b for a, b in zip(self._tuple(), other._tuple())))

    def _tuple(self) -> tuple:
        return (self.n_env_s, self.n_env_f, self.n_suck_s, self.n_suck_f,
                self.n_es_full, self.n_es_semi, self.n_es_fail)


def success_rate(stats: RunStats, *, strict: bool = False) -> float:
    if stats.actions_executed == 0:
        raise ValueError("no actions executed")
    n = stats.strict_successful_actions if strict else stats.successful_actions
    return n / stats.actions_executed


def grasping_efficiency(stats: RunStats) -> float:
    if stats.actions_executed == 0:
        raise ValueError("no actions executed")
    return stats.objects_picked / stats.actions_executed


def theoretical_efficiency(pe: float) -> float:
    """Best possible objects-per-action when every grasp succeeds and
    composite actions pair the two families greedily."""
    if not 0.0 <= pe <= 1.0:
        raise ValueError("pe must lie in [0, 1]")
    if pe < 0.5:
        return 1.0 / (1.0 - pe)
    return 1.0 / pe


def theoretical_expectations() -> tuple:
    """(E_eta, E_e, E_s, E_es) for pe uniform on (0, 1): the expected
    efficiency and the expected action-mix proportions."""
    return (2.0 * math.log(2.0), 0.25, 0.25, 0.5)


def optimal_action_count_oracle(scene: Scene) -> int:
    """Minimum number of actions to clear the scene with perfect outcomes.

    Exhaustive search over the remaining (envelope-only, suck-only,
    either-way) counts; composite actions clear one object from each side."""
    if len(scene) > 12:
        raise ValueError("oracle search is limited to 12 objects")
    e = sum(1 for o in scene.objects if o.grasp_affinity == "envelope_only")
    s = sum(1 for o in scene.objects if o.grasp_affinity == "suck_only")
    b = sum(1 for o in scene.objects if o.grasp_affinity == "both")
    memo: dict = {}

    def search(ne: int, ns: int, nb: int) -> int:
        if ne == 0 and ns == 0 and nb == 0:
            return 0
        key = (ne, ns, nb)
        hit = memo.get(key)
        if hit is not None:
            return hit
        best = math.inf
        # single-object actions
        if ne:
            best = min(best, 1 + search(ne - 1, ns, nb))
        if ns:
            best = min(best, 1 + search(ne, ns - 1, nb))
        if nb:
            best = min(best, 1 + search(ne, ns, nb - 1))
        # composite actions: one enveloped, one sucked
        if ne and ns:
            best = min(best, 1 + search(ne - 1, ns - 1, nb))
        if ne and nb:
            best = min(best, 1 + search(ne - 1, ns, nb - 1))
        if ns and nb:
            best = min(best, 1 + search(ne, ns - 1, nb - 1))
        if nb >= 2:
            best = min(best, 1 + search(ne, ns, nb - 2))
        memo[key] = best
        return best

    return search(e, s, b)


class OraclePolicy:
    """Non-learning planner that reads affinities directly and pairs the two
    families greedily, emitting composites until one family runs out."""

    def __init__(self, gripper: GripperParams, *, orientation_opt: bool = True,
                 preenvelope: bool = True):
        self.gripper = gripper
        self.orientation_opt = orientation_opt
        self.preenvelope = preenvelope

    def act(self, view) -> tuple:
        scene = view.scene
        env_ids = []
        suck_ids = []
        flexible = []
        for o in scene.objects:
            if o.grasp_affinity == "envelope_only":
                env_ids.append(o.id)
            elif o.grasp_affinity == "suck_only":
                suck_ids.append(o.id)
            else:
                flexible.append(o.id)
        # either-way objects reinforce whichever family is scarcer
        for oid in flexible:
            (env_ids if len(env_ids) <= len(suck_ids) else suck_ids).append(oid)
        if env_ids and suck_ids:
            ep, sp = plan_envelope_then_suck(
                scene, env_ids[0], suck_ids[0], self.gripper,
                orientation_opt=self.orientation_opt, preenvelope=self.preenvelope,
            )
            action = GraspAction("enveloping_then_sucking", envelope_plan=ep, suck_plan=sp)
            choice = ActionChoice(0.0, action.kind, env_id=env_ids[0], suck_id=suck_ids[0])
        elif env_ids:
            plan = plan_envelope(
                scene, env_ids[0], self.gripper,
                orientation_opt=self.orientation_opt, preenvelope=self.preenvelope,
            )
            action = GraspAction("enveloping", envelope_plan=plan)
            choice = ActionChoice(0.0, action.kind, env_id=env_ids[0])
        else:
            plan = plan_suck(
                scene, suck_ids[0], self.gripper, orientation_opt=self.orientation_opt
            )
            action = GraspAction("sucking", suck_plan=plan)
            choice = ActionChoice(0.0, action.kind, suck_id=suck_ids[0])
        return action, choice, None

    def observe(self, x, kind, reward, next_view, terminal) -> None:
        pass


def run_episode(policy, episode: Episode, *, log_rows: list | None = None,
                episode_idx: int = 0) -> RunStats:
    """Roll one episode to termination under the given policy."""
    stats = RunStats()
    view = episode.view()
    while not episode.terminal:
        action, choice, x = policy.act(view)
        outcome, next_view = env_step(episode, action)
        stats.record(action.kind, outcome)
        policy.observe(x, action.kind, outcome.reward, next_view, episode.terminal)
        if log_rows is not None:
            log_rows.append(log_row(episode_idx, episode.step_count - 1, action, outcome))
        view = next_view
    return stats


@dataclass(frozen=True)
class GroupResult:
    pe: float
    rep: int
    stats: RunStats
    zeta: float
    eta: float
    zeta_strict: float
    step_rows: tuple = ()  # per-step log records when the sweep collects them


@dataclass(frozen=True)
class SweepResult:
    groups: tuple  # GroupResult, ordered by (pe index, rep)

    def sweep_rows(self) -> list:
        rows = []
        for g in self.groups:
            s = g.stats
            rows.append((
                f"{g.pe:.9g}", str(g.rep), f"{g.zeta:.9g}", f"{g.eta:.9g}",
                str(s.n_env_s), str(s.n_env_f), str(s.n_suck_s), str(s.n_suck_f),
                str(s.n_es_full), str(s.n_es_semi), str(s.n_es_fail),
                f"{g.zeta_strict:.9g}",
            ))
        return rows

    def step_log_rows(self) -> list:
        """Flattened per-step env log with pe/rep context columns prepended."""
        rows = []
        for g in self.groups:
            for r in g.step_rows:
                rows.append((f"{g.pe:.9g}", str(g.rep)) + tuple(r))
        return rows

    def summary_rows(self) -> list:
        by_pe: dict = {}
        for g in self.groups:
            by_pe.setdefault(g.pe, []).append(g)
        rows = []
        for pe, gs in by_pe.items():
            zetas = np.array([g.zeta for g in gs])
            etas = np.array([g.eta for g in gs])
            total = RunStats()
            for g in gs:
                total = total.add(g.stats)
            acts = total.actions_executed
            n_env = total.n_env_s + total.n_env_f
            n_suck = total.n_suck_s + total.n_suck_f
            n_es = total.n_es_full + total.n_es_semi + total.n_es_fail
            zstd = float(np.std(zetas, ddof=1)) if len(gs) > 1 else 0.0
            estd = float(np.std(etas, ddof=1)) if len(gs) > 1 else 0.0
            rows.append((
                f"{pe:.9g}", str(len(gs)),
                f"{float(np.mean(zetas)):.9g}", f"{zstd:.9g}",
                f"{float(np.mean(etas)):.9g}", f"{estd:.9g}",
                f"{n_env / acts:.9g}", f"{n_suck / acts:.9g}", f"{n_es / acts:.9g}",
            ))
        return rows


def theory_rows(pe_values=DEFAULT_PE_GRID) -> list:
    return [(f"{pe:.9g}", f"{theoretical_efficiency(pe):.9g}") for pe in pe_values]


def _worker_count() -> int:
    raw = os.environ.get("GRASPSIM_THREADS", "").strip()
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _run_group(
    policy_factory,
    pe: float,
    pe_idx: int,
    rep: int,
    *,
    seed: int,
    gripper: GripperParams,
    n_objects: int,
    catalog,
    workspace_side: float,
    clutter: str,
    min_separation: float,
    resolution: int,
    p_fail: float,
    clearance_threshold: float,
    max_steps: int | None,
    actions_per_group: int | None,
    episodes_per_group: int | None,
    log_steps: bool,
) -> GroupResult:
    policy = policy_factory()
    stats = RunStats()
    log_rows = [] if log_steps else None
    episode_idx = 0
    while True:
        if episodes_per_group is not None:
            if episode_idx >= episodes_per_group:
                break
        elif stats.actions_executed >= actions_per_group:
            break
        scene_seed = ((seed + 1) * 1_000_003 + pe_idx * 10_007 + rep) * 4093 + episode_idx
        scene = spawn_scene(
            pe, n_objects, catalog, scene_seed % (2**63),
            workspace_side=workspace_side, clutter=clutter,
            min_separation=min_separation,
        )
        episode = Episode(
            scene, gripper,
            rng=np.random.default_rng((seed, 5, pe_idx, rep, episode_idx)),
            p_fail=p_fail, clearance_threshold=clearance_threshold,
            max_steps=max_steps, resolution=resolution,
        )
        stats = stats.add(run_episode(
            policy, episode, log_rows=log_rows, episode_idx=episode_idx,
        ))
        episode_idx += 1
    return GroupResult(
        pe, rep, stats,
        success_rate(stats), grasping_efficiency(stats),
        success_rate(stats, strict=True),
        tuple(log_rows) if log_rows is not None else (),
    )


def run_sweep(
    policy_factory,
    pe_values=DEFAULT_PE_GRID,
    *,
    seed: int = 0,
    gripper: GripperParams | None = None,
    n_objects: int = 10,
    catalog=DEFAULT_CATALOG,
    workspace_side: float = 0.25,
    clutter: str = "light",
    min_separation: float = 0.01,
    resolution: int = 64,
    p_fail: float = 0.08,
    clearance_threshold: float = 0.4,
    max_steps: int | None = None,
    actions_per_group: int | None = DEFAULT_ACTIONS_PER_GROUP,
    episodes_per_group: int | None = None,
    reps: int = DEFAULT_REPS,
    log_steps: bool = False,
) -> SweepResult:
    """Evaluate a policy across a grid of envelope fractions.

    policy_factory is called once per (pe, rep) group and must return an
    independent policy (groups may run on different threads). Groups run
    either a fixed episode count or until an action budget is met; results
    aggregate in grid order regardless of scheduling."""
    if not pe_values:
        raise ValueError("pe grid is empty")
    if actions_per_group is None and episodes_per_group is None:
        raise ValueError("need an action or episode budget per group")
    if gripper is None:
        gripper = GripperParams()
    jobs = [(pe_idx, pe, rep) for pe_idx, pe in enumerate(pe_values) for rep in range(reps)]
    kwargs = dict(
        seed=seed, gripper=gripper, n_objects=n_objects, catalog=catalog,
        workspace_side=workspace_side, clutter=clutter,
        min_separation=min_separation, resolution=resolution, p_fail=p_fail,
        clearance_threshold=clearance_threshold, max_steps=max_steps,
        actions_per_group=actions_per_group, episodes_per_group=episodes_per_group,
        log_steps=log_steps,
    )
    workers = _worker_count()
    if workers == 1:
        groups = [
            _run_group(policy_factory, pe, pe_idx, rep, **kwargs)
            for pe_idx, pe, rep in jobs
        ]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_run_group, policy_factory, pe, pe_idx, rep, **kwargs)
                for pe_idx, pe, rep in jobs
            ]
            groups = [f.result() for f in futures]
    return SweepResult(tuple(groups))
