"""Learner numerics and policy machinery.

The gradient check compares the analytic backward pass against central
differences; the Adam check recomputes the update from the moment
recursions in plain numpy.
"""

import numpy as np
import pytest

from graspsim.env import make_state_view
from graspsim.geometry import RotatedRect
from graspsim.gripper import GripperParams
from graspsim.learner import (
    DEFAULT_EPS_ANNEAL,
    DEFAULT_EPS_END,
    DEFAULT_EPS_START,
    DEFAULT_GAMMA,
    DEFAULT_LR,
    NET_KEYS,
    AdamState,
    ActionChoice,
    FeatureCache,
    GreedyPolicy,
    QBundle,
    QNets,
    ReplayBuffer,
    Transition,
    ValueNet,
    VARIANTS,
    build_action,
    epsilon_at,
    evaluate_bundle,
    feasibility_masks,
    get_variant,
    huber_gradient,
    huber_loss,
    load_checkpoint,
    random_choice,
    save_checkpoint,
    select_action,
    td_target,
    train,
)
from graspsim.scene import Scene, SceneObject, spawn_scene


def box(oid, cx, cy, hl, hs, angle, height, affinity="suck_only", flat=None):
    rect = RotatedRect(np.array([cx, cy]), hl, hs, angle)
    if flat is None:
        flat = 0.6 * rect.area()
    return SceneObject(oid, rect, height, affinity, flat)


# --------------------------------------------------------------------------
# loss numerics


def test_huber_branch_values_exact():
    assert huber_loss(0.5) == 0.125
    assert huber_loss(1.0) == 0.5
    assert huber_loss(2.0) == 1.5
    assert huber_loss(0.0) == 0.0
    # continuity at the branch point
    assert huber_loss(1.0 - 1e-12) == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(ValueError):
        huber_loss(-0.5)


def test_huber_gradient_clips_to_unit():
    assert huber_gradient(0.5) == 0.5
    assert huber_gradient(-0.3) == -0.3
    assert huber_gradient(2.0) == 1.0
    assert huber_gradient(-7.0) == -1.0
    assert huber_gradient(1.0) == 1.0


def ref_forward(net, x):
    h1 = np.maximum(x @ net.W1 + net.b1, 0.0)
    h2 = np.maximum(h1 @ net.W2 + net.b2, 0.0)
    return float(h2 @ net.w3 + net.b3[0])


def test_forward_matches_plain_numpy(rng):
    net = ValueNet.initialize(rng, 32, 8)
    for _ in range(10):
        x = rng.normal(size=32)
        assert net.value(x) == pytest.approx(ref_forward(net, x), rel=1e-12, abs=1e-15)
    X = rng.normal(size=(5, 32))
    q, h1, h2 = net.forward(X)
    assert q.shape == (5,) and h1.shape == (5, 8) and h2.shape == (5, 8)
    for k in range(5):
        assert q[k] == pytest.approx(ref_forward(net, X[k]), rel=1e-12, abs=1e-15)


def loss_at(net, x, y):
    return huber_loss(abs(net.value(x) - y))


def analytic_grads(net, x, y):
    q, h1, h2 = net.forward(x[None, :])
    return net.gradients(x, h1[0], h2[0], huber_gradient(float(q[0]) - y))


def test_gradients_match_central_differences(rng):
    net = ValueNet.initialize(rng, 24, 6)
    h = 1e-6
    for _ in range(6):
        x = rng.normal(size=24) + 0.1  # keep inputs away from exact zero
        y = float(rng.normal())
        grads = analytic_grads(net, x, y)
        for p, g in zip(net.params(), grads):
            flat_p, flat_g = p.ravel(), np.asarray(g).ravel()
            for idx in rng.choice(flat_p.size, size=min(3, flat_p.size), replace=False):
                keep = flat_p[idx]
                flat_p[idx] = keep + h
                up = loss_at(net, x, y)
                flat_p[idx] = keep - h
                dn = loss_at(net, x, y)
                flat_p[idx] = keep
                num = (up - dn) / (2 * h)
                assert abs(num - flat_g[idx]) <= 1e-4 * max(abs(num), abs(flat_g[idx]), 1e-6)


def test_adam_matches_moment_recursions(rng):
    net = ValueNet.initialize(rng, 6, 4)
    adam = AdamState(net)
    before = [p.copy() for p in net.params()]
    grads = [rng.normal(size=p.shape) for p in net.params()]
    adam.apply(net, grads, lr=1e-3)
    for p0, g, p1 in zip(before, grads, net.params()):
        m = 0.1 * g.ravel()
        v = 0.001 * g.ravel() ** 2
        mhat = m / (1 - 0.9)
        vhat = v / (1 - 0.999)
        expect = p0.ravel() - 1e-3 * mhat / (np.sqrt(vhat) + 1e-8)
        assert np.allclose(p1.ravel(), expect, rtol=1e-12, atol=1e-15)
    assert adam.t == 1
    # second step uses accumulated moments
    adam.apply(net, grads, lr=1e-3)
    assert adam.t == 2


def test_vector_roundtrip(rng):
    net = ValueNet.initialize(rng, 8, 4)
    vec = net.to_vector()
    other = ValueNet.initialize(rng, 8, 4)
    other.from_vector(vec)
    for a, b in zip(net.params(), other.params()):
        assert np.array_equal(a, b)
    with pytest.raises(ValueError):
        other.from_vector(vec[:-1])


# --------------------------------------------------------------------------
# action selection


def bundle(ids, q_e, q_s, pairs=(), q_es=()):
    return QBundle(tuple(ids), np.asarray(q_e, float), np.asarray(q_s, float),
                   tuple(pairs), np.asarray(q_es, float))


def test_select_priority_on_exact_ties():
    b = bundle([7, 8], [1.0, 0.2], [1.0, 0.3], [(0, 1)], [1.0])
    choice = select_action(b)
    assert choice.kind == "enveloping" and choice.env_id == 7
    b2 = bundle([7, 8], [0.5, 0.2], [1.0, 0.3], [(0, 1)], [1.0])
    choice2 = select_action(b2)
    assert choice2.kind == "sucking" and choice2.suck_id == 7
    b3 = bundle([7, 8], [0.5, 0.2], [0.9, 0.3], [(0, 1)], [1.0])
    choice3 = select_action(b3)
    assert choice3.kind == "enveloping_then_sucking"


def test_select_first_index_breaks_family_ties():
    b = bundle([3, 5, 9], [1.0, 1.0, 1.0], [0.0, 0.0, 0.0])
    assert select_action(b).env_id == 3


def test_select_pair_roles_follow_pair_order():
    b = bundle([1, 2], [0.0, 0.0], [0.0, 0.0], [(0, 1), (1, 0)], [5.0, 4.0])
    c = select_action(b)
    assert (c.env_id, c.suck_id) == (1, 2)
    b2 = bundle([1, 2], [0.0, 0.0], [0.0, 0.0], [(0, 1), (1, 0)], [4.0, 5.0])
    c2 = select_action(b2)
    assert (c2.env_id, c2.suck_id) == (2, 1)


def test_select_respects_feasibility_masks():
    b = bundle([1, 2], [9.0, 8.0], [1.0, 2.0], [(0, 1), (1, 0)], [5.0, 4.5])
    c = select_action(b, env_ok=np.array([False, False]), suck_ok=np.array([True, True]))
    assert c.kind == "sucking" and c.suck_id == 2
    # only the (2 envelopes, 1 sucks) orientation stays legal
    b_pair = bundle([1, 2], [0.0, 0.1], [0.2, 0.0], [(0, 1), (1, 0)], [5.0, 4.5])
    c2 = select_action(
        b_pair, env_ok=np.array([False, True]), suck_ok=np.array([True, False])
    )
    assert c2.kind == "enveloping_then_sucking"
    assert (c2.env_id, c2.suck_id) == (2, 1)
    with pytest.raises(ValueError, match="no feasible action"):
        select_action(b, env_ok=np.array([False, False]), suck_ok=np.array([False, False]))


def test_bundle_value_lookup():
    b = bundle([4, 6, 7], [1.0, 2.0, 3.0], [4.0, 5.0, 6.0],
               [(0, 2), (2, 0), (1, 2)], [7.0, 8.0, 9.0])
    assert b.value_of("enveloping", env_id=6) == 2.0
    assert b.value_of("sucking", suck_id=7) == 6.0
    assert b.value_of("enveloping_then_sucking", env_id=7, suck_id=4) == 8.0
    assert b.value_of("enveloping_then_sucking", env_id=4, suck_id=7) == 7.0
    assert b.value_of("enveloping_then_sucking", env_id=6, suck_id=7) == 9.0
    with pytest.raises(ValueError):
        b.value_of("hovering")


def test_td_target_terminal_and_zero_gamma():
    assert td_target(2.5, True, 0.5) == 2.5
    assert td_target(1.0, False, 0.0) == 1.0


def test_td_target_double_q_bootstrap():
    # online nets rank object 9's suck highest; target nets price it at 0.25
    nb_online = bundle([9], [0.1], [0.7])
    nb_target = bundle([9], [4.0], [0.25])
    y = td_target(0.5, False, 0.5, nb_online, nb_target)
    assert y == 0.5 + 0.5 * 0.25


def test_epsilon_schedule():
    assert epsilon_at(0, 0.6, 0.1, 15000) == 0.6
    assert epsilon_at(15000, 0.6, 0.1, 15000) == pytest.approx(0.1)
    assert epsilon_at(30000, 0.6, 0.1, 15000) == pytest.approx(0.1)
    assert epsilon_at(7500, 0.6, 0.1, 15000) == pytest.approx(0.35)
    assert epsilon_at(5, 0.6, 0.1, 0) == 0.1
    assert (DEFAULT_EPS_START, DEFAULT_EPS_END, DEFAULT_EPS_ANNEAL) == (0.6, 0.1, 15000)


def test_variant_table():
    assert set(VARIANTS) == {
        "eses_drl", "es_drl", "es_reactive", "eses_reactive", "ablation_1", "ablation_2",
    }
    v = VARIANTS["eses_drl"]
    assert v.use_es and v.gamma == DEFAULT_GAMMA == 0.5 and not v.reactive
    assert v.orientation_opt and v.preenvelope
    assert not VARIANTS["es_drl"].use_es
    assert VARIANTS["es_reactive"].reactive and VARIANTS["es_reactive"].gamma == 0.0
    assert VARIANTS["eses_reactive"].use_es and VARIANTS["eses_reactive"].reactive
    a1 = VARIANTS["ablation_1"]
    assert not a1.orientation_opt and not a1.preenvelope
    a2 = VARIANTS["ablation_2"]
    assert a2.orientation_opt and not a2.preenvelope
    assert get_variant(v) is v
    with pytest.raises(ValueError, match="unknown policy variant"):
        get_variant("esoteric")
    assert DEFAULT_LR == 1e-4


# --------------------------------------------------------------------------
# bundles on real scenes


def small_scene():
    return Scene(0.25, (
        box(0, 0.08, 0.08, 0.01, 0.01, 0.0, 0.04, affinity="envelope_only"),
        box(1, 0.17, 0.08, 0.02, 0.02, 0.0, 0.015),
        box(2, 0.12, 0.18, 0.015, 0.015, 30.0, 0.02),
    ), 0)


def test_evaluate_bundle_shapes(rng):
    scene = small_scene()
    cache = FeatureCache(make_state_view(scene, 32))
    nets = QNets.initialize(rng)
    b = evaluate_bundle(nets.online, cache)
    assert b.ids == (0, 1, 2)
    assert b.q_e.shape == (3,) and b.q_s.shape == (3,)
    assert b.pairs == ((0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1))
    assert b.q_es.shape == (6,)
    single = evaluate_bundle(nets.online, cache, use_es=False)
    assert single.pairs == () and single.q_es.size == 0
    lone = Scene(0.25, (scene.objects[0],), 0)
    b1 = evaluate_bundle(nets.online, FeatureCache(make_state_view(lone, 32)))
    assert b1.pairs == ()  # no composite with a single object


def test_qnets_copy_is_deep(rng):
    nets = QNets.initialize(rng)
    dup = nets.copy()
    assert set(dup.online) == set(NET_KEYS) and set(dup.target) == set(NET_KEYS)
    before = dup.online["e"].W1.copy()
    nets.online["e"].W1 += 1.0
    assert np.array_equal(dup.online["e"].W1, before)
    assert np.array_equal(nets.target["e"].W1, dup.target["e"].W1)


def test_feature_cache_crops_and_reuse():
    scene = small_scene()
    cache = FeatureCache(make_state_view(scene, 32))
    f0 = cache.object_features(0)
    assert f0 is cache.object_features(0)  # cached
    assert cache.pair_features(0, 1) is cache.pair_features(0, 1)
    # the global half of an object vector is shared across objects
    g0, g1 = cache.object_features(0)[256:], cache.object_features(1)[256:]
    assert np.array_equal(g0, g1)
    assert not np.array_equal(cache.object_features(0)[:256], cache.object_features(1)[:256])
    # pair features order the crops as (envelope, suck)
    p01, p10 = cache.pair_features(0, 1), cache.pair_features(1, 0)
    assert np.array_equal(p01[:256], cache.object_features(0)[:256])
    assert np.array_equal(p01[256:], p10[:256])
    assert not np.array_equal(p01, p10)
    # the candidate sits at the crop center, tallest cell included
    crop0 = cache.object_features(0)[:256].reshape(16, 16)
    assert crop0.max() == pytest.approx(0.04 * 10.0)
    assert crop0[7:9, 7:9].max() == crop0.max()


def test_feasibility_masks(gripper):
    scene = Scene(0.25, (
        box(0, 0.07, 0.07, 0.04, 0.04, 0.0, 0.02),             # too wide to envelope
        box(1, 0.17, 0.07, 0.01, 0.01, 0.0, 0.02, flat=1e-5),  # too curved to suck
        box(2, 0.12, 0.18, 0.015, 0.015, 0.0, 0.02),
    ), 0)
    env_ok, suck_ok = feasibility_masks(scene, gripper)
    assert env_ok.tolist() == [False, True, True]
    assert suck_ok.tolist() == [True, False, True]


def test_random_choice_is_legal_and_seeded():
    b = bundle([1, 2], [0.1, 0.2], [0.3, 0.4], [(0, 1)], [0.5])
    env_ok = np.array([True, False])
    suck_ok = np.array([False, True])
    seen = set()
    for s in range(20):
        c = random_choice(b, env_ok, suck_ok, np.random.default_rng(s))
        seen.add(c.kind)
        if c.kind == "enveloping":
            assert c.env_id == 1
        elif c.kind == "sucking":
            assert c.suck_id == 2
        else:
            assert (c.env_id, c.suck_id) == (1, 2)
    assert seen == {"enveloping", "sucking", "enveloping_then_sucking"}
    a = random_choice(b, env_ok, suck_ok, np.random.default_rng(5))
    bb = random_choice(b, env_ok, suck_ok, np.random.default_rng(5))
    assert (a.kind, a.env_id, a.suck_id) == (bb.kind, bb.env_id, bb.suck_id)
    with pytest.raises(ValueError, match="no feasible action"):
        random_choice(b, np.array([False, False]), np.array([False, False]),
                      np.random.default_rng(0))


def test_build_action_dispatch(gripper):
    scene = small_scene()
    env_a = build_action(scene, ActionChoice(0.0, "enveloping", env_id=0),
                         gripper, VARIANTS["eses_drl"])
    assert env_a.kind == "enveloping" and env_a.envelope_plan.target_id == 0
    suck_a = build_action(scene, ActionChoice(0.0, "sucking", suck_id=1),
                          gripper, VARIANTS["eses_drl"])
    assert suck_a.kind == "sucking" and suck_a.suck_plan.target_id == 1
    es_a = build_action(
        scene, ActionChoice(0.0, "enveloping_then_sucking", env_id=0, suck_id=1),
        gripper, VARIANTS["eses_drl"],
    )
    assert es_a.target_ids() == (0, 1)
    blunt = build_action(scene, ActionChoice(0.0, "enveloping", env_id=0),
                         gripper, VARIANTS["ablation_1"])
    assert blunt.envelope_plan.alpha_e == 0.0
    assert blunt.envelope_plan.descent_opening == gripper.d_max


# --------------------------------------------------------------------------
# replay, transitions, checkpoints


def test_transition_reward_set():
    with pytest.raises(ValueError):
        Transition(np.zeros(4), "sucking", 0.7, None, True)


def test_replay_buffer_ring():
    buf = ReplayBuffer(capacity=3)
    items = [Transition(np.zeros(1), "sucking", 0.0, None, True) for _ in range(5)]
    for i, tr in enumerate(items):
        buf.push(tr)
        assert len(buf) == min(i + 1, 3)
    kept = {id(t) for t in buf._items}
    assert kept == {id(items[2]), id(items[3]), id(items[4])}
    rng = np.random.default_rng(0)
    assert id(buf.sample(rng)) in kept


def test_checkpoint_roundtrip(tmp_path, rng):
    nets = QNets.initialize(rng)
    path = tmp_path / "ck.bin"
    save_checkpoint(path, nets, VARIANTS["es_drl"])
    loaded, name = load_checkpoint(path)
    assert name == "es_drl"
    for k in NET_KEYS:
        assert np.array_equal(loaded.online[k].to_vector(), nets.online[k].to_vector())
        assert np.array_equal(loaded.target[k].to_vector(), nets.online[k].to_vector())
    save_checkpoint(path, nets)  # anonymous checkpoint
    _, blank = load_checkpoint(path)
    assert blank == ""
    bad = tmp_path / "junk.bin"
    bad.write_bytes(b"not a checkpoint at all")
    with pytest.raises(ValueError, match="not a checkpoint"):
        load_checkpoint(bad)


# --------------------------------------------------------------------------
# policies and training loop


def test_greedy_policy_act_and_frozen_observe(gripper, rng):
    nets = QNets.initialize(rng)
    policy = GreedyPolicy(nets, "eses_drl", gripper, continual_update=False)
    view = make_state_view(small_scene(), 32)
    action, choice, features = policy.act(view)
    assert action.kind == choice.kind
    assert features.shape == (512,)
    before = nets.online["e"].to_vector()
    policy.observe(features, choice.kind, 1.0, None, True)
    assert np.array_equal(nets.online["e"].to_vector(), before)


def test_greedy_policy_continual_update_moves_params(gripper, rng):
    nets = QNets.initialize(rng)
    policy = GreedyPolicy(nets, "eses_drl", gripper, continual_update=True, lr=1e-3)
    view = make_state_view(small_scene(), 32)
    action, choice, features = policy.act(view)
    key = {"enveloping": "e", "sucking": "s", "enveloping_then_sucking": "es"}[choice.kind]
    before = nets.online[key].to_vector()
    policy.observe(features, choice.kind, 0.0, None, True)
    assert not np.array_equal(nets.online[key].to_vector(), before)


def tiny_train(**kw):
    args = dict(variant="eses_drl", steps=25, pe=0.5, seed=3, n_objects=3,
                resolution=32, eps_anneal_steps=20)
    args.update(kw)
    return train(**args)


def test_train_runs_and_logs():
    result = tiny_train()
    assert len(result.log_rows) == 25
    assert result.episodes_started >= 1
    for row in result.log_rows:
        assert len(row) == 7
        float(row[1]), float(row[2]), float(row[3])
        assert row[4] in ("enveloping", "sucking", "enveloping_then_sucking")
    # epsilon anneals downward
    assert float(result.log_rows[0][1]) == 0.6
    assert float(result.log_rows[-1][1]) == pytest.approx(0.1)


def test_train_is_deterministic():
    a = tiny_train()
    b = tiny_train()
    assert a.log_rows == b.log_rows
    for k in NET_KEYS:
        assert np.array_equal(a.nets.online[k].to_vector(), b.nets.online[k].to_vector())
    c = tiny_train(seed=4)
    assert c.log_rows != a.log_rows


def test_train_replay_variant_runs():
    a = tiny_train(replay=True, replay_capacity=16)
    b = tiny_train(replay=True, replay_capacity=16)
    assert a.log_rows == b.log_rows
    assert len(a.log_rows) == 25
