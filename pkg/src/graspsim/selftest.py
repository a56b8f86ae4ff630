"""Built-in invariant checks, runnable as `graspsim selftest`.

Each check is small and self-contained; the command prints one PASS/FAIL
line per check and exits nonzero if anything fails. The full test suite is
richer; this battery is the quick field diagnostic.
"""

from __future__ import annotations

import math

import numpy as np

from . import _kernels
from ._kernels import _fallback
from .env import Episode, validate_reward_shaping
from .eval import (
    OraclePolicy,
    optimal_action_count_oracle,
    run_episode,
    theoretical_efficiency,
    theoretical_expectations,
)
from .gripper import (
    FingerState,
    GripperParams,
    curvature,
    opening_distance,
    solve_bend_for_opening,
)
from .learner import huber_loss
from .planner import envelope_rotation_angle, sucker_for_orientation
from .scene import scene_from_text, scene_to_text, spawn_scene


def _check_rotations():
    from .geometry import is_rotation3, rot_x, rot_y, rot_z

    rng = np.random.default_rng(11)
    for _ in range(50):
        a, b, c = rng.uniform(-180.0, 180.0, 3)
        R = rot_x(a) @ rot_y(b) @ rot_z(c)
        assert is_rotation3(R, tol=1e-9)


def _check_opening_roundtrip():
    g = GripperParams()
    rng = np.random.default_rng(23)
    for _ in range(25):
        d = rng.uniform(1e-4, g.d_max)
        state = solve_bend_for_opening(g, d)
        err = abs(opening_distance(g, state) - d)
        assert err <= 1e-6, f"round-trip error {err:.3g} m"


def _check_curvature_linearity():
    g = GripperParams()
    pulls = np.linspace(1e-4, 0.02, 40)
    curvatures = np.array([curvature(g, FingerState.from_tendon(g, p)) for p in pulls])
    slope = curvatures[-1] / pulls[-1]
    residual = np.max(np.abs(curvatures - slope * pulls))
    assert residual <= 1e-12, f"linearity residual {residual:.3g}"


def _check_angle_tables():
    for a in range(180):
        got = envelope_rotation_angle(float(a))
        want = a - 45.0 if a <= 90 else a - 135.0
        assert got == want
        assert -45.0 <= got <= 45.0
    for a in range(360):
        idx, gamma = sucker_for_orientation(float(a))
        assert idx in (1, 2, 3, 4)
        assert -45.0 < gamma <= 45.0
        # the wrist turn plus the indexed sucker's home azimuth re-point to a
        home = {1: 0.0, 2: 90.0, 3: 180.0, 4: 270.0}[idx]
        assert (home + gamma) % 360.0 == a % 360.0


def _check_theory():
    for pe, want in ((0.0, 1.0), (0.1, 1 / 0.9), (0.5, 2.0), (0.7, 1 / 0.7), (1.0, 1.0)):
        assert abs(theoretical_efficiency(pe) - want) < 1e-12
    e_eta, e_e, e_s, e_es = theoretical_expectations()
    assert abs(e_eta - 2.0 * math.log(2.0)) < 1e-15
    assert (e_e, e_s, e_es) == (0.25, 0.25, 0.5)


def _check_rewards():
    validate_reward_shaping(0.5)


def _check_huber():
    assert huber_loss(0.5) == 0.125
    assert huber_loss(1.0) == 0.5
    assert huber_loss(2.0) == 1.5
    assert abs(huber_loss(1.0 - 1e-12) - 0.5) < 1e-9


def _check_oracle_optimality():
    g = GripperParams()
    for seed in range(20):
        pe = (seed % 5) / 4.0
        scene = spawn_scene(pe, 6, seed=seed, min_separation=0.025)
        episode = Episode(
            scene, g, rng=np.random.default_rng(seed),
            p_fail=0.0, clearance_threshold=0.0,
        )
        stats = run_episode(OraclePolicy(g), episode)
        assert stats.objects_picked == 6, f"seed {seed}: left objects behind"
        optimum = optimal_action_count_oracle(scene)
        assert stats.actions_executed == optimum, (
            f"seed {seed}: used {stats.actions_executed} actions, optimum {optimum}"
        )


def _check_scene_roundtrip():
    for seed in range(5):
        scene = spawn_scene(0.5, 7, seed=seed, clutter="heavy" if seed % 2 else "light")
        text = scene_to_text(scene)
        again = scene_from_text(text)
        assert scene_to_text(again) == text
        assert again.workspace_side == scene.workspace_side
        assert len(again) == len(scene)
        for a, b in zip(again.objects, scene.objects):
            assert a.id == b.id and a.grasp_affinity == b.grasp_affinity
            assert np.allclose(a.footprint.center, b.footprint.center)
            assert a.footprint.half_long == b.footprint.half_long
            assert a.footprint.half_short == b.footprint.half_short
            assert a.footprint.axis_angle_deg == b.footprint.axis_angle_deg
            assert a.height == b.height and a.base_z == b.base_z
            assert a.top_flat_area == b.top_flat_area


def _check_kernel_backends():
    if _kernels.BACKEND_NAME == _fallback.NAME:
        return "compiled core not present; fallback only"
    core = _kernels
    rng = np.random.default_rng(7)
    scene = spawn_scene(0.5, 6, seed=3)
    from .scene import _rect_rows

    rects, tops = _rect_rows(scene)
    h_a, m_a = core.render_scene(64, scene.workspace_side, rects, tops)
    h_b, m_b = _fallback.render_scene(64, scene.workspace_side, rects, tops)
    assert np.array_equal(h_a, h_b) and np.array_equal(m_a, m_b)

    src = rng.random((64, 64))
    assert np.allclose(core.downscale_mean(src, 16), _fallback.downscale_mean(src, 16),
                       rtol=0, atol=1e-12)

    X = rng.standard_normal((4, 32))
    W1 = rng.standard_normal((32, 8))
    b1 = rng.standard_normal(8)
    W2 = rng.standard_normal((8, 8))
    b2 = rng.standard_normal(8)
    w3 = rng.standard_normal(8)
    qa, h1a, h2a = core.mlp_forward(X, W1, b1, W2, b2, w3, 0.3)
    qb, h1b, h2b = _fallback.mlp_forward(X, W1, b1, W2, b2, w3, 0.3)
    assert np.allclose(qa, qb, atol=1e-12) and np.allclose(h2a, h2b, atol=1e-12)
    ga = core.mlp_backward(X[0], h1a[0], h2a[0], W2, w3, 0.7)
    gb = _fallback.mlp_backward(X[0], h1b[0], h2b[0], W2, w3, 0.7)
    for x, y in zip(ga, gb):
        assert np.allclose(x, y, atol=1e-12)
    return None


CHECKS = (
    ("rotation_matrices", _check_rotations),
    ("opening_roundtrip", _check_opening_roundtrip),
    ("curvature_linearity", _check_curvature_linearity),
    ("angle_branch_tables", _check_angle_tables),
    ("efficiency_theory", _check_theory),
    ("reward_shaping", _check_rewards),
    ("huber_branches", _check_huber),
    ("oracle_optimality", _check_oracle_optimality),
    ("scene_roundtrip", _check_scene_roundtrip),
    ("kernel_backends", _check_kernel_backends),
)


def run_selftest(emit=print) -> int:
    """Run every check; returns the number of failures."""
    failures = 0
    for name, fn in CHECKS:
        try:
            note = fn()
        except Exception as exc:  # report and keep going
            failures += 1
            emit(f"FAIL {name}: {exc}")
        else:
            emit(f"PASS {name}" + (f" ({note})" if note else ""))
    return failures
