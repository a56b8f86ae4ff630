"""Constant-curvature finger kinematics for the four-finger soft gripper.

Frame G sits at the palm center: +z along the finger extension direction,
fingers rooted at radius l_p. A finger is a circular arc of length l_f whose
root tangent tilts theta_t outward from the palm axis; the bending angle
theta_f sweeps the tangent inward, so the straight finger (theta_f -> 0) is
the fully splayed state d_f = l_p + l_f*sin(theta_t) and the tip crosses
d_f = l_p at theta_f = 2*theta_t. Tendon displacement d_t maps linearly to
curvature: 1/r = d_t / (h * l_f).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class GripperParams:
    """Physical constants, meters and degrees.

    d_max must not exceed sqrt(2)*l_p: that keeps every legal opening's
    bending-angle root in the inward-curled regime (theta_f >= 2*theta_t),
    where the opening is strictly monotone in theta_f.
    """

    l_p: float = 0.05       # palm radius (root offset)
    h_p: float = 0.02       # palm thickness
    theta_t: float = 15.0   # torsion-spring leg angle, degrees
    l_f: float = 0.11       # finger arc length
    h: float = 0.008        # finger thickness (tendon moment arm)
    l_s1: float = 0.015     # sucker mount offset along the tip tangent
    l_s2: float = 0.01      # sucker mount offset along the tip normal
    d_max: float = None     # max commanded opening; default sqrt(2)*l_p
    sucker_diameter: float = 0.02

    def __post_init__(self):
        if self.d_max is None:
            object.__setattr__(self, "d_max", _SQRT2 * self.l_p)
        for name in ("l_p", "h_p", "l_f", "h", "l_s1", "l_s2", "d_max", "sucker_diameter"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"gripper length {name} must be positive")
        if not 0.0 < self.theta_t < 90.0:
            raise ValueError("theta_t must lie strictly between 0 and 90 degrees")
        if self.d_max > _SQRT2 * self.l_p + 1e-12:
            raise ValueError("d_max must not exceed sqrt(2) * l_p")

    def sucker_area(self) -> float:
        return math.pi * (self.sucker_diameter / 2.0) ** 2


@dataclass(frozen=True)
class FingerState:
    """One finger's bend: angle theta_f (degrees), arc radius r, tendon d_t."""

    theta_f: float
    r: float
    d_t: float

    def __post_init__(self):
        if self.theta_f < 0.0 or self.theta_f > 180.0:
            raise ValueError("theta_f must lie in [0, 180] degrees")

    @classmethod
    def from_bend(cls, params: GripperParams, theta_f_deg: float) -> "FingerState":
        t = math.radians(theta_f_deg)
        if t == 0.0:
            return cls(0.0, math.inf, 0.0)
        return cls(theta_f_deg, params.l_f / t, params.h * t)

    @classmethod
    def from_tendon(cls, params: GripperParams, d_t: float) -> "FingerState":
        if d_t < 0.0:
            raise ValueError("tendon displacement must be non-negative")
        if d_t == 0.0:
            return cls(0.0, math.inf, 0.0)
        t = d_t / params.h  # radians
        return cls(math.degrees(t), params.l_f / t, d_t)


def fingertip_height(params: GripperParams, state: FingerState) -> float:
    """Tip height h_f above the palm plane."""
    tt = math.radians(params.theta_t)
    if state.theta_f == 0.0:
        return params.l_f * math.cos(tt)  # straight-finger limit (r -> inf)
    tf = math.radians(state.theta_f)
    return state.r * (math.sin(tt) + math.sin(tf - tt))


def fingertip_radius(params: GripperParams, state: FingerState) -> float:
    """Tip distance d_f from the palm axis."""
    tt = math.radians(params.theta_t)
    if state.theta_f == 0.0:
        return params.l_p + params.l_f * math.sin(tt)
    tf = math.radians(state.theta_f)
    return params.l_p - state.r * (math.cos(tt) - math.cos(tf - tt))


def sucker_normal_angle(params: GripperParams, state: FingerState) -> float:
    """Tilt theta_s (degrees) that points the fingertip sucker downward."""
    return state.theta_f - params.theta_t


def sucker_position(params: GripperParams, state: FingerState, theta_s_deg: float) -> tuple[float, float]:
    """(h_s, d_s): sucker height and radial offset for tilt theta_s."""
    ts = math.radians(theta_s_deg)
    h_s = fingertip_height(params, state) - params.l_s1 * math.sin(ts) + params.l_s2 * math.cos(ts)
    d_s = fingertip_radius(params, state) + params.l_s1 * math.cos(ts) + params.l_s2 * math.sin(ts)
    return h_s, d_s


def fingertip_coords(params: GripperParams, state: FingerState) -> np.ndarray:
    """Frame-G coordinates of tips F1..F4, rows (x, y, z)."""
    d_f = fingertip_radius(params, state)
    z = params.h_p + fingertip_height(params, state)
    return np.array(
        [
            [d_f, 0.0, z],
            [0.0, -d_f, z],
            [-d_f, 0.0, z],
            [0.0, d_f, z],
        ]
    )


def sucker_coords(params: GripperParams, state: FingerState, theta_s_deg: float) -> np.ndarray:
    """Frame-G coordinates of suckers S1..S4, rows (x, y, z)."""
    h_s, d_s = sucker_position(params, state, theta_s_deg)
    z = params.h_p + h_s
    return np.array(
        [
            [d_s, 0.0, z],
            [0.0, -d_s, z],
            [-d_s, 0.0, z],
            [0.0, d_s, z],
        ]
    )


def opening_distance(params: GripperParams, state: FingerState) -> float:
    """Grasp opening d: the gap between adjacent fingertips, sqrt(2)*d_f."""
    return _SQRT2 * fingertip_radius(params, state)


def curvature(params: GripperParams, state: FingerState) -> float:
    """Arc curvature 1/r = d_t / (h * l_f); linear in the tendon pull."""
    return state.d_t / (params.h * params.l_f)


def solve_bend_for_opening(params: GripperParams, d_target: float, tol: float = 1e-6) -> FingerState:
    """Invert the opening map: find theta_f with opening(theta_f) = d_target.

    Bracketing scan at 1-degree steps over (0, 180], then bisection until
    the opening error is below tol (meters). Unique root for
    d_target <= d_max <= sqrt(2)*l_p because the opening is strictly
    decreasing past theta_f = 2*theta_t and the target sits below the
    sqrt(2)*l_p crossing.
    """
    if d_target <= 0.0:
        raise ValueError("opening must be positive")
    if d_target > params.d_max + 1e-12:
        raise ValueError(f"opening {d_target:.6g} m exceeds d_max {params.d_max:.6g} m")

    def f(theta_deg: float) -> float:
        st = FingerState.from_bend(params, theta_deg)
        return opening_distance(params, st) - d_target

    # scan for a sign change; the theta -> 0 limit opening is the largest
    lo, flo = 0.0, opening_distance(params, FingerState.from_bend(params, 0.0)) - d_target
    hi = None
    theta = 1.0
    while theta <= 180.0:
        ft = f(theta)
        if flo == 0.0:
            hi = lo
            break
        if flo > 0.0 >= ft or flo < 0.0 <= ft:
            hi = theta
            break
        lo, flo = theta, ft
        theta += 1.0
    if hi is None:
        lo_d = opening_distance(params, FingerState.from_bend(params, 180.0))
        hi_d = opening_distance(params, FingerState.from_bend(params, 0.0))
        raise ValueError(
            f"no bending angle reaches opening {d_target:.6g} m; "
            f"feasible range is about [{lo_d:.6g}, {hi_d:.6g}] m"
        )
    if hi == lo:
        return FingerState.from_bend(params, lo)

    a, b, fa = lo, hi, flo
    for _ in range(200):
        mid = 0.5 * (a + b)
        fm = f(mid)
        if abs(fm) <= tol:
            return FingerState.from_bend(params, mid)
        if (fa > 0.0) == (fm > 0.0):
            a, fa = mid, fm
        else:
            b = mid
    return FingerState.from_bend(params, 0.5 * (a + b))
