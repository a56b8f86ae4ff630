"""Value networks, double-Q training, action selection, and policy variants.

Three small two-hidden-layer networks score the three action families:
one for enveloping, one for sucking, one for the composite pair action.
Each network reads a 16x16 depth patch of the candidate object(s) next to a
16x16 downscale of the whole workspace, flattened and concatenated.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .env import (
    Episode,
    GraspAction,
    StateView,
    make_state_view,
    step as env_step,
)
from .gripper import GripperParams
from .planner import plan_envelope, plan_envelope_then_suck, plan_suck
from .scene import DEFAULT_CATALOG, Scene, spawn_scene

PATCH_SIDE = 16
N_INPUTS = 2 * PATCH_SIDE * PATCH_SIDE
N_HIDDEN = 64
DEPTH_SCALE = 10.0  # meters are small numbers; rescale for unit-ish inputs

NET_KEYS = ("e", "s", "es")
_KIND_TO_KEY = {
    "enveloping": "e",
    "sucking": "s",
    "enveloping_then_sucking": "es",
}

DEFAULT_LR = 1e-4
DEFAULT_GAMMA = 0.5
DEFAULT_EPS_START = 0.6
DEFAULT_EPS_END = 0.1
DEFAULT_EPS_ANNEAL = 15000
DEFAULT_SYNC_PERIOD = 100
DIVERGENCE_LIMIT = 1e6

CHECKPOINT_MAGIC = b"GSPQNET1"
CHECKPOINT_VERSION = 1


def huber_loss(delta: float) -> float:
    """Quadratic inside the unit error band, linear outside."""
    d = float(delta)
    if d < 0.0:
        raise ValueError("huber_loss takes a nonnegative error magnitude")
    return 0.5 * d * d if d < 1.0 else d - 0.5


def huber_gradient(error: float) -> float:
    """d(loss)/d(prediction) for a signed error, clipped to unit magnitude."""
    return min(max(float(error), -1.0), 1.0)


class ValueNet:
    """Dense 512 -> 64 -> 64 -> 1 rectifier network over float64 params."""

    __slots__ = ("W1", "b1", "W2", "b2", "w3", "b3")

    def __init__(self, W1, b1, W2, b2, w3, b3):
        self.W1 = W1
        self.b1 = b1
        self.W2 = W2
        self.b2 = b2
        self.w3 = w3
        self.b3 = b3

    @classmethod
    def initialize(cls, rng: np.random.Generator, n_in: int = N_INPUTS, hidden: int = N_HIDDEN):
        # scaled normal init sized to keep rectifier activations from decaying
        W1 = rng.normal(0.0, math.sqrt(2.0 / n_in), (n_in, hidden))
        W2 = rng.normal(0.0, math.sqrt(2.0 / hidden), (hidden, hidden))
        w3 = rng.normal(0.0, math.sqrt(2.0 / hidden), hidden)
        return cls(W1, np.zeros(hidden), W2, np.zeros(hidden), w3, np.zeros(1))

    @property
    def arch(self) -> tuple:
        return (self.W1.shape[0], self.W1.shape[1], self.W2.shape[1], 1)

    def params(self) -> list:
        return [self.W1, self.b1, self.W2, self.b2, self.w3, self.b3]

    def copy(self) -> "ValueNet":
        return ValueNet(*(p.copy() for p in self.params()))

    def load_from(self, other: "ValueNet") -> None:
        for dst, src in zip(self.params(), other.params()):
            np.copyto(dst, src)

    def forward(self, X: np.ndarray):
        """Batch forward. Returns (q (B,), h1 (B,H), h2 (B,H))."""
        X = np.ascontiguousarray(X, dtype=np.float64)
        return K.mlp_forward(X, self.W1, self.b1, self.W2, self.b2, self.w3, float(self.b3[0]))

    def value(self, x: np.ndarray) -> float:
        q, _, _ = self.forward(x[None, :])
        return float(q[0])

    def gradients(self, x, h1, h2, gq: float) -> list:
        gW1, gb1, gW2, gb2, gw3, gb3 = K.mlp_backward(
            np.ascontiguousarray(x), np.ascontiguousarray(h1), np.ascontiguousarray(h2),
            self.W2, self.w3, float(gq),
        )
        return [gW1, gb1, gW2, gb2, gw3, np.array([float(gb3)])]

    def to_vector(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.params()])

    def from_vector(self, vec: np.ndarray) -> None:
        off = 0
        for p in self.params():
            flat = p.ravel()
            flat[:] = vec[off : off + p.size]
            off += p.size
        if off != vec.size:
            raise ValueError("parameter vector length mismatch")


class AdamState:
    """First/second-moment accumulators for one network."""

    def __init__(self, net: ValueNet, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.m = [np.zeros(p.size) for p in net.params()]
        self.v = [np.zeros(p.size) for p in net.params()]
        self.t = 0
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps

    def apply(self, net: ValueNet, grads: list, lr: float) -> None:
        self.t += 1
        for p, g, m, v in zip(net.params(), grads, self.m, self.v):
            K.adam_step(p.ravel(), g.ravel(), m, v, self.t, lr, self.beta1, self.beta2, self.eps)


class QNets:
    """Online and target copies of the three family networks."""

    def __init__(self, online: dict, target: dict):
        self.online = online
        self.target = target

    @classmethod
    def initialize(cls, rng: np.random.Generator) -> "QNets":
        online = {k: ValueNet.initialize(rng) for k in NET_KEYS}
        target = {k: online[k].copy() for k in NET_KEYS}
        return cls(online, target)

    def sync_target(self) -> None:
        for k in NET_KEYS:
            self.target[k].load_from(self.online[k])

    def copy(self) -> "QNets":
        return QNets({k: self.online[k].copy() for k in NET_KEYS},
                     {k: self.target[k].copy() for k in NET_KEYS})


class FeatureCache:
    """Per-state feature vectors (lazily built, one owner per StateView).

    Each vector is two 16x16 channels. Single objects get [local | global]:
    a full-resolution depth crop centered on the candidate (so its shape and
    immediate blockers stay sharp) next to a downscale of the whole
    workspace. Ordered pairs get [envelope crop | suck crop], which tells
    the composite net which member plays which role."""

    def __init__(self, view: StateView):
        self.view = view
        depth = view.heightmap.cells
        self._depth = depth
        self._global = K.downscale_mean(depth, PATCH_SIDE).ravel()
        self._crops: dict = {}
        self._objects: dict = {}
        self._pairs: dict = {}

    def _crop(self, oid: int) -> np.ndarray:
        patch = self._crops.get(oid)
        if patch is None:
            res = self._depth.shape[0]
            side = self.view.scene.workspace_side
            center = self.view.scene.object_by_id(oid).footprint.center
            half = PATCH_SIDE // 2
            ci = int(center[1] / side * res)  # row is the y axis
            cj = int(center[0] / side * res)
            patch = np.zeros((PATCH_SIDE, PATCH_SIDE))
            i0, j0 = ci - half, cj - half
            si0, sj0 = max(i0, 0), max(j0, 0)
            si1, sj1 = min(i0 + PATCH_SIDE, res), min(j0 + PATCH_SIDE, res)
            if si0 < si1 and sj0 < sj1:
                patch[si0 - i0:si1 - i0, sj0 - j0:sj1 - j0] = \
                    self._depth[si0:si1, sj0:sj1]
            self._crops[oid] = patch
        return patch

    def _assemble(self, local_map: np.ndarray) -> np.ndarray:
        return np.concatenate([local_map.ravel(), self._global]) * DEPTH_SCALE

    def object_features(self, oid: int) -> np.ndarray:
        f = self._objects.get(oid)
        if f is None:
            f = self._assemble(self._crop(oid))
            self._objects[oid] = f
        return f

    def pair_features(self, env_oid: int, suck_oid: int) -> np.ndarray:
        key = (env_oid, suck_oid)
        f = self._pairs.get(key)
        if f is None:
            f = np.concatenate([self._crop(env_oid).ravel(),
                                self._crop(suck_oid).ravel()]) * DEPTH_SCALE
            self._pairs[key] = f
        return f


@dataclass(frozen=True)
class QBundle:
    """Action values for one state: per object, and per ordered pair."""

    ids: tuple
    q_e: np.ndarray
    q_s: np.ndarray
    pairs: tuple  # positional (envelope, suck) index pairs; empty for N < 2
    q_es: np.ndarray

    def value_of(self, kind: str, env_id=None, suck_id=None) -> float:
        if kind == "enveloping":
            return float(self.q_e[self.ids.index(env_id)])
        if kind == "sucking":
            return float(self.q_s[self.ids.index(suck_id)])
        if kind == "enveloping_then_sucking":
            key = (self.ids.index(env_id), self.ids.index(suck_id))
            return float(self.q_es[self.pairs.index(key)])
        raise ValueError(f"unknown action kind {kind!r}")


@dataclass(frozen=True)
class ActionChoice:
    q_value: float
    kind: str
    env_id: int | None = None
    suck_id: int | None = None


def evaluate_bundle(nets: dict, cache: FeatureCache, *, use_es: bool = True) -> QBundle:
    """Score every object for enveloping and sucking, and every ordered
    (envelope, suck) pair for the composite (skipped for a single object)."""
    ids = cache.view.ids
    n = len(ids)
    if n < 1:
        raise ValueError("bundle needs at least one object")
    X = np.stack([cache.object_features(oid) for oid in ids])
    q_e = nets["e"].forward(X)[0]
    q_s = nets["s"].forward(X)[0]
    pairs = ()
    q_es = np.empty(0)
    if use_es and n > 1:
        pairs = tuple((i, j) for i in range(n) for j in range(n) if i != j)
        Xp = np.stack([cache.pair_features(ids[i], ids[j]) for i, j in pairs])
        q_es = nets["es"].forward(Xp)[0]
    return QBundle(tuple(ids), q_e, q_s, pairs, q_es)


def feasibility_masks(scene: Scene, gripper: GripperParams) -> tuple:
    """Which objects admit a plannable envelope / suck at all."""
    env_ok = np.empty(len(scene), dtype=bool)
    suck_ok = np.empty(len(scene), dtype=bool)
    for k, o in enumerate(scene.objects):
        env_ok[k] = 2.0 * o.footprint.half_short <= gripper.d_max + 1e-12
        suck_ok[k] = o.top_flat_area >= gripper.sucker_area()
    return env_ok, suck_ok


def _masked_argmax(q: np.ndarray, ok: np.ndarray):
    if not ok.any():
        return None, -math.inf
    masked = np.where(ok, q, -math.inf)
    i = int(np.argmax(masked))
    return i, float(masked[i])


def select_action(
    bundle: QBundle,
    *,
    env_ok: np.ndarray | None = None,
    suck_ok: np.ndarray | None = None,
) -> ActionChoice:
    """Greedy action choice with family priority on exact ties
    (enveloping over sucking over the composite) and first-index tie-breaks
    inside a family. A pair is feasible when its envelope member can be
    enveloped and its suck member sucked."""
    n = len(bundle.ids)
    if env_ok is None:
        env_ok = np.ones(n, dtype=bool)
    if suck_ok is None:
        suck_ok = np.ones(n, dtype=bool)

    i_e, best_e = _masked_argmax(bundle.q_e, env_ok)
    i_s, best_s = _masked_argmax(bundle.q_s, suck_ok)

    best_p, pair = -math.inf, None
    for k, (i, j) in enumerate(bundle.pairs):
        if not (env_ok[i] and suck_ok[j]):
            continue
        v = float(bundle.q_es[k])
        if v > best_p:
            best_p = v
            pair = (i, j)

    if best_e == -math.inf and best_s == -math.inf and pair is None:
        raise ValueError("no feasible action for this scene")

    if best_e >= best_s and best_e >= best_p:
        return ActionChoice(best_e, "enveloping", env_id=bundle.ids[i_e])
    if best_s >= best_p:
        return ActionChoice(best_s, "sucking", suck_id=bundle.ids[i_s])

    i, j = pair
    return ActionChoice(
        best_p, "enveloping_then_sucking",
        env_id=bundle.ids[i], suck_id=bundle.ids[j],
    )


def td_target(
    reward: float,
    terminal: bool,
    gamma: float,
    next_online: QBundle | None = None,
    next_target: QBundle | None = None,
    *,
    env_ok: np.ndarray | None = None,
    suck_ok: np.ndarray | None = None,
) -> float:
    """Double-Q target: the online nets pick the next action, the target
    nets price it. Terminal states (and zero discount) bootstrap nothing."""
    if terminal or gamma == 0.0:
        return float(reward)
    choice = select_action(next_online, env_ok=env_ok, suck_ok=suck_ok)
    v = next_target.value_of(choice.kind, choice.env_id, choice.suck_id)
    return float(reward) + gamma * v


@dataclass(frozen=True)
class PolicyVariant:
    """What a policy optimizes and which planner refinements it keeps."""

    name: str
    use_es: bool
    gamma: float
    reactive: bool  # train on the binary picked-anything signal instead
    orientation_opt: bool
    preenvelope: bool


VARIANTS = {
    "eses_drl": PolicyVariant("eses_drl", True, DEFAULT_GAMMA, False, True, True),
    "es_drl": PolicyVariant("es_drl", False, DEFAULT_GAMMA, False, True, True),
    "es_reactive": PolicyVariant("es_reactive", False, 0.0, True, True, True),
    "eses_reactive": PolicyVariant("eses_reactive", True, 0.0, True, True, True),
    "ablation_1": PolicyVariant("ablation_1", True, DEFAULT_GAMMA, False, False, False),
    "ablation_2": PolicyVariant("ablation_2", True, DEFAULT_GAMMA, False, True, False),
}


def get_variant(name) -> PolicyVariant:
    if isinstance(name, PolicyVariant):
        return name
    try:
        return VARIANTS[name]
    except KeyError:
        raise ValueError(
            f"unknown policy variant {name!r}; expected one of {sorted(VARIANTS)}"
        ) from None


def build_action(scene: Scene, choice: ActionChoice, gripper: GripperParams,
                 variant: PolicyVariant) -> GraspAction:
    if choice.kind == "enveloping":
        plan = plan_envelope(
            scene, choice.env_id, gripper,
            orientation_opt=variant.orientation_opt, preenvelope=variant.preenvelope,
        )
        return GraspAction("enveloping", envelope_plan=plan)
    if choice.kind == "sucking":
        plan = plan_suck(
            scene, choice.suck_id, gripper, orientation_opt=variant.orientation_opt
        )
        return GraspAction("sucking", suck_plan=plan)
    ep, sp = plan_envelope_then_suck(
        scene, choice.env_id, choice.suck_id, gripper,
        orientation_opt=variant.orientation_opt, preenvelope=variant.preenvelope,
    )
    return GraspAction("enveloping_then_sucking", envelope_plan=ep, suck_plan=sp)


def _choice_features(cache: FeatureCache, choice: ActionChoice) -> np.ndarray:
    if choice.kind == "enveloping_then_sucking":
        return cache.pair_features(choice.env_id, choice.suck_id)
    if choice.kind == "enveloping":
        return cache.object_features(choice.env_id)
    return cache.object_features(choice.suck_id)


def random_choice(
    bundle: QBundle,
    env_ok: np.ndarray,
    suck_ok: np.ndarray,
    rng: np.random.Generator,
) -> ActionChoice:
    """Exploration draw: a uniformly random legal kind, then uniform targets."""
    ordered_pairs = [(i, j) for i, j in bundle.pairs if env_ok[i] and suck_ok[j]]
    kinds = []
    if env_ok.any():
        kinds.append("enveloping")
    if suck_ok.any():
        kinds.append("sucking")
    if ordered_pairs:
        kinds.append("enveloping_then_sucking")
    if not kinds:
        raise ValueError("no feasible action for this scene")
    kind = kinds[int(rng.integers(len(kinds)))]
    if kind == "enveloping":
        i = int(rng.choice(np.flatnonzero(env_ok)))
        return ActionChoice(bundle.value_of(kind, env_id=bundle.ids[i]), kind,
                            env_id=bundle.ids[i])
    if kind == "sucking":
        i = int(rng.choice(np.flatnonzero(suck_ok)))
        return ActionChoice(bundle.value_of(kind, suck_id=bundle.ids[i]), kind,
                            suck_id=bundle.ids[i])
    ei, si = ordered_pairs[int(rng.integers(len(ordered_pairs)))]
    env_id, suck_id = bundle.ids[ei], bundle.ids[si]
    return ActionChoice(bundle.value_of(kind, env_id, suck_id), kind,
                        env_id=env_id, suck_id=suck_id)


def epsilon_at(step: int, start: float, end: float, anneal_steps: int) -> float:
    if anneal_steps <= 0:
        return end
    frac = min(max(step, 0) / anneal_steps, 1.0)
    return start + (end - start) * frac


@dataclass(frozen=True)
class Transition:
    features: np.ndarray
    kind: str
    reward: float
    next_scene: Scene | None  # None when nothing remains to bootstrap from
    terminal: bool

    def __post_init__(self):
        if self.reward not in (2.5, 1.0, 0.5, 0.0):
            raise ValueError("transition reward outside the reward set")


class ReplayBuffer:
    """Fixed-capacity ring of past transitions."""

    def __init__(self, capacity: int = 2048):
        self.capacity = capacity
        self._items: list = []
        self._next = 0

    def __len__(self):
        return len(self._items)

    def push(self, tr: Transition) -> None:
        if len(self._items) < self.capacity:
            self._items.append(tr)
        else:
            self._items[self._next] = tr
        self._next = (self._next + 1) % self.capacity

    def sample(self, rng: np.random.Generator) -> Transition:
        return self._items[int(rng.integers(len(self._items)))]


TRAIN_LOG_COLUMNS = (
    "step", "epsilon", "loss", "reward", "kind",
    "envelope_success", "suck_success",
)


def _flag(v) -> str:
    return "" if v is None else str(int(v))


@dataclass
class TrainResult:
    nets: QNets
    variant: PolicyVariant
    log_rows: list
    episodes_started: int


def _scene_seed(seed: int, episode_idx: int) -> int:
    return (seed * 1_000_003 + episode_idx) % (2**63)


def _update_net(nets: QNets, adam: dict, kind: str, x: np.ndarray, target_y: float,
                lr: float) -> float:
    key = _KIND_TO_KEY[kind]
    net = nets.online[key]
    q, h1, h2 = net.forward(x[None, :])
    err = float(q[0]) - target_y
    loss = huber_loss(abs(err))
    grads = net.gradients(x, h1[0], h2[0], huber_gradient(err))
    adam[key].apply(net, grads, lr)
    return loss


def _bootstrap_target(
    nets: QNets, variant: PolicyVariant, gripper: GripperParams,
    reward: float, terminal: bool, cache: FeatureCache | None,
) -> float:
    if terminal or variant.gamma == 0.0 or cache is None:
        return float(reward)
    env_ok, suck_ok = feasibility_masks(cache.view.scene, gripper)
    nb_online = evaluate_bundle(nets.online, cache, use_es=variant.use_es)
    nb_target = evaluate_bundle(nets.target, cache, use_es=variant.use_es)
    return td_target(reward, False, variant.gamma, nb_online, nb_target,
                     env_ok=env_ok, suck_ok=suck_ok)


def train(
    *,
    variant="eses_drl",
    steps: int = 20000,
    pe: float = 0.5,
    seed: int = 0,
    gripper: GripperParams | None = None,
    n_objects: int = 10,
    workspace_side: float = 0.25,
    clutter: str = "light",
    min_separation: float = 0.01,
    catalog=DEFAULT_CATALOG,
    resolution: int = 64,
    p_fail: float = 0.08,
    clearance_threshold: float = 0.4,
    max_steps: int | None = None,
    lr: float = DEFAULT_LR,
    eps_start: float = DEFAULT_EPS_START,
    eps_end: float = DEFAULT_EPS_END,
    eps_anneal_steps: int = DEFAULT_EPS_ANNEAL,
    sync_period: int = DEFAULT_SYNC_PERIOD,
    replay: bool = False,
    replay_capacity: int = 2048,
) -> TrainResult:
    """Run epsilon-greedy rollouts with per-step double-Q updates.

    Episodes are spawned back to back from a deterministic seed stream until
    the step budget is spent. Raises if the loss ever exceeds the divergence
    guard."""
    variant = get_variant(variant)
    if gripper is None:
        gripper = GripperParams()
    nets = QNets.initialize(np.random.default_rng((seed, 4)))
    adam = {k: AdamState(nets.online[k]) for k in NET_KEYS}
    explore_rng = np.random.default_rng((seed, 3))
    buffer = ReplayBuffer(replay_capacity) if replay else None

    log_rows: list = []
    episode: Episode | None = None
    cache: FeatureCache | None = None
    episode_idx = -1

    for step_i in range(steps):
        if episode is None or episode.terminal:
            episode_idx += 1
            scene = spawn_scene(
                pe, n_objects, catalog, _scene_seed(seed, episode_idx),
                workspace_side=workspace_side, clutter=clutter,
                min_separation=min_separation,
            )
            episode = Episode(
                scene, gripper, rng=np.random.default_rng((seed, 2, episode_idx)),
                p_fail=p_fail, clearance_threshold=clearance_threshold,
                max_steps=max_steps, resolution=resolution,
            )
            cache = FeatureCache(episode.view())

        eps = epsilon_at(step_i, eps_start, eps_end, eps_anneal_steps)
        bundle = evaluate_bundle(nets.online, cache, use_es=variant.use_es)
        env_ok, suck_ok = feasibility_masks(cache.view.scene, gripper)
        if explore_rng.random() < eps:
            choice = random_choice(bundle, env_ok, suck_ok, explore_rng)
        else:
            choice = select_action(bundle, env_ok=env_ok, suck_ok=suck_ok)
        action = build_action(cache.view.scene, choice, gripper, variant)
        x = _choice_features(cache, choice)

        outcome, next_view = env_step(episode, action)
        reward = outcome.reward
        if variant.reactive:
            reward = 1.0 if outcome.picked_ids else 0.0
        next_cache = FeatureCache(next_view) if len(next_view.scene) else None

        if buffer is not None:
            buffer.push(Transition(
                x, choice.kind, reward,
                next_view.scene if len(next_view.scene) else None, episode.terminal,
            ))
            tr = buffer.sample(explore_rng)
            tr_cache = None
            if not tr.terminal and variant.gamma != 0.0 and tr.next_scene is not None:
                tr_cache = FeatureCache(make_state_view(tr.next_scene, resolution))
            y = _bootstrap_target(nets, variant, gripper, tr.reward, tr.terminal, tr_cache)
            loss = _update_net(nets, adam, tr.kind, tr.features, y, lr)
        else:
            y = _bootstrap_target(nets, variant, gripper, reward, episode.terminal, next_cache)
            loss = _update_net(nets, adam, choice.kind, x, y, lr)

        if loss > DIVERGENCE_LIMIT:
            raise RuntimeError(f"training diverged: loss {loss:.3g} exceeds {DIVERGENCE_LIMIT:g}")
        if (step_i + 1) % sync_period == 0:
            nets.sync_target()

        log_rows.append((
            str(step_i), f"{eps:.9g}", f"{loss:.9g}", f"{outcome.reward:.9g}",
            action.kind, _flag(outcome.envelope_success), _flag(outcome.suck_success),
        ))
        cache = next_cache

    return TrainResult(nets, variant, log_rows, episode_idx + 1)


class GreedyPolicy:
    """Frozen-or-slowly-adapting policy wrapper used by evaluation runs.

    With continual_update on, every observed outcome applies the same
    per-step update as training (exploration off), which keeps a failing
    action from being retried forever."""

    def __init__(
        self,
        nets: QNets,
        variant: PolicyVariant,
        gripper: GripperParams,
        *,
        continual_update: bool = True,
        lr: float = DEFAULT_LR,
    ):
        self.nets = nets
        self.variant = get_variant(variant)
        self.gripper = gripper
        self.continual_update = continual_update
        self.lr = lr
        self._adam = {k: AdamState(nets.online[k]) for k in NET_KEYS} if continual_update else None

    def act(self, view: StateView) -> tuple:
        """Pick the greedy action. Returns (action, choice, features)."""
        cache = FeatureCache(view)
        bundle = evaluate_bundle(self.nets.online, cache, use_es=self.variant.use_es)
        env_ok, suck_ok = feasibility_masks(view.scene, self.gripper)
        choice = select_action(bundle, env_ok=env_ok, suck_ok=suck_ok)
        action = build_action(view.scene, choice, self.gripper, self.variant)
        return action, choice, _choice_features(cache, choice)

    def observe(self, x: np.ndarray, kind: str, reward: float, next_view: StateView | None,
                terminal: bool) -> None:
        if not self.continual_update:
            return
        if self.variant.reactive:
            reward = 1.0 if reward > 0.0 else 0.0
        cache = None
        if not terminal and next_view is not None and len(next_view.scene):
            cache = FeatureCache(next_view)
        y = _bootstrap_target(self.nets, self.variant, self.gripper, reward, terminal, cache)
        _update_net(self.nets, self._adam, kind, x, y, self.lr)


def save_checkpoint(path, nets: QNets, variant: PolicyVariant | None = None) -> None:
    """Versioned binary dump of the online parameters (little-endian f64)."""
    arch = nets.online["e"].arch
    name = (variant.name if variant is not None else "").encode()
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<II", CHECKPOINT_VERSION, len(arch)))
        fh.write(struct.pack(f"<{len(arch)}I", *arch))
        fh.write(struct.pack("<I", len(name)))
        fh.write(name)
        fh.write(struct.pack("<I", len(NET_KEYS)))
        for k in NET_KEYS:
            vec = nets.online[k].to_vector()
            fh.write(struct.pack("<Q", vec.size))
            fh.write(vec.astype("<f8").tobytes())


def load_checkpoint(path) -> tuple:
    """Restore (QNets, variant name) from save_checkpoint output."""
    with open(path, "rb") as fh:
        if fh.read(len(CHECKPOINT_MAGIC)) != CHECKPOINT_MAGIC:
            raise ValueError("not a checkpoint file")
        version, n_arch = struct.unpack("<II", fh.read(8))
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        arch = struct.unpack(f"<{n_arch}I", fh.read(4 * n_arch))
        (name_len,) = struct.unpack("<I", fh.read(4))
        name = fh.read(name_len).decode()
        (n_nets,) = struct.unpack("<I", fh.read(4))
        if n_nets != len(NET_KEYS):
            raise ValueError("unexpected network count in checkpoint")
        rng = np.random.default_rng(0)
        online = {}
        for k in NET_KEYS:
            net = ValueNet.initialize(rng, arch[0], arch[1])
            (size,) = struct.unpack("<Q", fh.read(8))
            vec = np.frombuffer(fh.read(8 * size), dtype="<f8").astype(np.float64)
            net.from_vector(vec)
            online[k] = net
        target = {k: online[k].copy() for k in NET_KEYS}
    return QNets(online, target), name
