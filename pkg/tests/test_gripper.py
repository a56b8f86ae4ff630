"""Finger kinematics checks.

The reference functions below re-derive the arc model from scratch (tip
height/radius of a constant-curvature finger rooted at l_p with an outward
root tilt, sucker offsets along the tip tangent/normal) so the module under
test is compared against an independent evaluation, not itself.
"""

import math

import numpy as np
import pytest

from graspsim.gripper import (
    FingerState,
    GripperParams,
    curvature,
    fingertip_coords,
    fingertip_height,
    fingertip_radius,
    opening_distance,
    solve_bend_for_opening,
    sucker_coords,
    sucker_normal_angle,
    sucker_position,
)


def ref_tip(params: GripperParams, theta_f_deg: float):
    """(h_f, d_f) from the arc geometry, written independently."""
    tt = math.radians(params.theta_t)
    tf = math.radians(theta_f_deg)
    r = params.l_f / tf
    h_f = r * (math.sin(tt) + math.sin(tf - tt))
    d_f = params.l_p - r * (math.cos(tt) - math.cos(tf - tt))
    return h_f, d_f


def ref_sucker(params: GripperParams, theta_f_deg: float, theta_s_deg: float):
    """(h_s, d_s) for a sucker offset (l_s1, l_s2) from the fingertip."""
    h_f, d_f = ref_tip(params, theta_f_deg)
    ts = math.radians(theta_s_deg)
    h_s = h_f - params.l_s1 * math.sin(ts) + params.l_s2 * math.cos(ts)
    d_s = d_f + params.l_s1 * math.cos(ts) + params.l_s2 * math.sin(ts)
    return h_s, d_s


def random_params(rng) -> GripperParams:
    return GripperParams(
        l_p=rng.uniform(0.03, 0.08),
        h_p=rng.uniform(0.01, 0.03),
        theta_t=rng.uniform(5.0, 30.0),
        l_f=rng.uniform(0.08, 0.15),
        h=rng.uniform(0.005, 0.012),
        l_s1=rng.uniform(0.008, 0.02),
        l_s2=rng.uniform(0.005, 0.015),
    )


def test_tip_model_matches_reference(rng):
    for _ in range(50):
        params = random_params(rng)
        theta_f = rng.uniform(1.0, 175.0)
        state = FingerState.from_bend(params, theta_f)
        h_ref, d_ref = ref_tip(params, theta_f)
        assert abs(fingertip_height(params, state) - h_ref) < 1e-9
        assert abs(fingertip_radius(params, state) - d_ref) < 1e-9


def test_sucker_model_matches_reference(rng):
    for _ in range(50):
        params = random_params(rng)
        theta_f = rng.uniform(1.0, 175.0)
        state = FingerState.from_bend(params, theta_f)
        theta_s = sucker_normal_angle(params, state)
        assert abs(theta_s - (theta_f - params.theta_t)) < 1e-12
        h_ref, d_ref = ref_sucker(params, theta_f, theta_s)
        h_s, d_s = sucker_position(params, state, theta_s)
        assert abs(h_s - h_ref) < 1e-9
        assert abs(d_s - d_ref) < 1e-9


def test_coordinate_rows_follow_quadrant_layout(gripper):
    state = FingerState.from_bend(gripper, 90.0)
    theta_s = sucker_normal_angle(gripper, state)
    d_f = fingertip_radius(gripper, state)
    zf = gripper.h_p + fingertip_height(gripper, state)
    F = fingertip_coords(gripper, state)
    assert np.allclose(F, [[d_f, 0, zf], [0, -d_f, zf], [-d_f, 0, zf], [0, d_f, zf]], atol=1e-12)
    h_s, d_s = sucker_position(gripper, state, theta_s)
    zs = gripper.h_p + h_s
    S = sucker_coords(gripper, state, theta_s)
    assert np.allclose(S, [[d_s, 0, zs], [0, -d_s, zs], [-d_s, 0, zs], [0, d_s, zs]], atol=1e-12)
    # adjacent tips sit one opening distance apart
    assert abs(np.linalg.norm(F[0] - F[1]) - opening_distance(gripper, state)) < 1e-12


def test_straight_finger_limits(gripper):
    state = FingerState.from_bend(gripper, 0.0)
    tt = math.radians(gripper.theta_t)
    assert abs(fingertip_height(gripper, state) - gripper.l_f * math.cos(tt)) < 1e-12
    assert abs(fingertip_radius(gripper, state) - (gripper.l_p + gripper.l_f * math.sin(tt))) < 1e-12
    assert curvature(gripper, state) == 0.0


def test_tendon_and_bend_constructions_agree(gripper):
    for theta in (10.0, 45.0, 90.0, 150.0):
        a = FingerState.from_bend(gripper, theta)
        b = FingerState.from_tendon(gripper, a.d_t)
        assert abs(a.theta_f - b.theta_f) < 1e-9
        assert abs(a.r - b.r) < 1e-9


def test_tendon_validation(gripper):
    with pytest.raises(ValueError):
        FingerState.from_tendon(gripper, -0.001)
    with pytest.raises(ValueError):
        FingerState(200.0, 0.1, 0.01)


def test_curvature_is_exactly_linear_in_tendon(gripper):
    # kappa = d_t / (h * l_f): residual against the line through the largest
    # sample must vanish to machine precision
    d_ts = np.linspace(0.001, 0.02, 25)
    kappas = np.array([
        curvature(gripper, FingerState.from_tendon(gripper, d_t)) for d_t in d_ts
    ])
    slope = kappas[-1] / d_ts[-1]
    assert np.max(np.abs(kappas - slope * d_ts)) <= 1e-12


def test_opening_roundtrip_100_targets(rng):
    params = GripperParams()
    lo = opening_distance(params, FingerState.from_bend(params, 179.0)) + 1e-4
    for _ in range(100):
        d_target = rng.uniform(max(lo, 0.005), params.d_max)
        state = solve_bend_for_opening(params, d_target)
        assert abs(opening_distance(params, state) - d_target) <= 1e-6


def test_opening_roundtrip_random_params(rng):
    for _ in range(20):
        params = random_params(rng)
        d_target = rng.uniform(0.3, 0.95) * params.d_max
        state = solve_bend_for_opening(params, d_target)
        assert abs(opening_distance(params, state) - d_target) <= 1e-6


def test_opening_monotone_past_tilt_crossing(gripper):
    # beyond theta_f = 2*theta_t the opening shrinks as the fingers curl;
    # past ~155 deg the tip folds back through the palm axis, so stop short
    thetas = np.linspace(2 * gripper.theta_t, 150.0, 60)
    ds = [opening_distance(gripper, FingerState.from_bend(gripper, t)) for t in thetas]
    assert all(a > b for a, b in zip(ds, ds[1:]))


def test_solver_rejects_out_of_range(gripper):
    with pytest.raises(ValueError):
        solve_bend_for_opening(gripper, -0.01)
    with pytest.raises(ValueError):
        solve_bend_for_opening(gripper, gripper.d_max * 1.5)


def test_params_validation():
    with pytest.raises(ValueError):
        GripperParams(l_p=-0.1)
    with pytest.raises(ValueError):
        GripperParams(theta_t=0.0)
    with pytest.raises(ValueError):
        GripperParams(d_max=1.0)  # beyond sqrt(2) * l_p
    p = GripperParams()
    assert abs(p.d_max - math.sqrt(2) * p.l_p) < 1e-12
    assert abs(p.sucker_area() - math.pi * 0.01**2) < 1e-15
