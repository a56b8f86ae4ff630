"""Planar and spatial geometry shared by the gripper, scene and planner.

Angles cross module boundaries in degrees; radians stay internal to
function bodies. All rotation matrices are plain (3,3) float arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, QhullError

ORTHO_TOL = 1e-9


def rot_x(alpha_deg: float) -> np.ndarray:
    """Right-handed rotation about the x-axis."""
    a = math.radians(alpha_deg)
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(beta_deg: float) -> np.ndarray:
    """Right-handed rotation about the y-axis."""
    b = math.radians(beta_deg)
    c, s = math.cos(b), math.sin(b)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(gamma_deg: float) -> np.ndarray:
    """Right-handed rotation about the z-axis."""
    g = math.radians(gamma_deg)
    c, s = math.cos(g), math.sin(g)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def is_rotation3(R: np.ndarray, tol: float = ORTHO_TOL) -> bool:
    """True when R is orthonormal with determinant +1 (within tol)."""
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3):
        return False
    if not np.allclose(R.T @ R, np.eye(3), atol=tol):
        return False
    return abs(np.linalg.det(R) - 1.0) <= tol


@dataclass(frozen=True)
class Pose:
    """Rigid placement: world position plus a rotation matrix."""

    position: np.ndarray
    rotation: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.position, dtype=float).reshape(3)
        R = np.asarray(self.rotation, dtype=float)
        if not is_rotation3(R):
            raise ValueError("pose rotation is not orthonormal with det +1")
        object.__setattr__(self, "position", p)
        object.__setattr__(self, "rotation", R)

    def apply(self, point) -> np.ndarray:
        return self.rotation @ np.asarray(point, dtype=float).reshape(3) + self.position


@dataclass(frozen=True)
class RotatedRect:
    """Oriented planar rectangle: center, half extents, long-axis angle.

    axis_angle_deg is the direction of the long side, reduced to [0, 180).
    half_long >= half_short > 0.
    """

    center: np.ndarray
    half_long: float
    half_short: float
    axis_angle_deg: float

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float).reshape(2)
        object.__setattr__(self, "center", c)
        if not (self.half_long >= self.half_short > 0.0):
            raise ValueError(
                f"rect half extents must satisfy half_long >= half_short > 0, "
                f"got ({self.half_long}, {self.half_short})"
            )
        a = float(self.axis_angle_deg) % 180.0
        object.__setattr__(self, "axis_angle_deg", a)

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        """Unit vectors along the long and short sides."""
        a = math.radians(self.axis_angle_deg)
        u = np.array([math.cos(a), math.sin(a)])
        v = np.array([-math.sin(a), math.cos(a)])
        return u, v

    def corners(self) -> np.ndarray:
        """(4,2) corner coordinates, counter-clockwise."""
        u, v = self.axes()
        hl, hs = self.half_long, self.half_short
        return np.array(
            [
                self.center + hl * u + hs * v,
                self.center - hl * u + hs * v,
                self.center - hl * u - hs * v,
                self.center + hl * u - hs * v,
            ]
        )

    def area(self) -> float:
        return 4.0 * self.half_long * self.half_short

    def contains_point(self, point, tol: float = 0.0) -> bool:
        q = np.asarray(point, dtype=float).reshape(2) - self.center
        u, v = self.axes()
        return abs(q @ u) <= self.half_long + tol and abs(q @ v) <= self.half_short + tol


@dataclass(frozen=True)
class Sector:
    """Angular interval in degrees with wrap-around.

    start > end encodes the wrap form (0, end] u [start, 360). The full
    circle and the empty set carry explicit flags; start == end is illegal
    otherwise.
    """

    start_deg: float = 0.0
    end_deg: float = 0.0
    empty: bool = False
    full: bool = False

    def __post_init__(self):
        if self.empty or self.full:
            return
        s = float(self.start_deg) % 360.0
        e = float(self.end_deg) % 360.0
        if s == e:
            raise ValueError("degenerate sector: start == end (use empty/full flags)")
        object.__setattr__(self, "start_deg", s)
        object.__setattr__(self, "end_deg", e)

    def contains(self, theta_deg: float) -> bool:
        if self.empty:
            return False
        if self.full:
            return True
        t = float(theta_deg) % 360.0
        if self.start_deg < self.end_deg:
            return self.start_deg <= t <= self.end_deg
        return t >= self.start_deg or t <= self.end_deg

    def extent_deg(self) -> float:
        if self.empty:
            return 0.0
        if self.full:
            return 360.0
        return (self.end_deg - self.start_deg) % 360.0


def min_area_rect(points) -> RotatedRect:
    """Minimum-area oriented bounding rectangle of a planar point set.

    Rotating-calipers over the convex hull: the optimum has a side collinear
    with a hull edge, so scanning hull-edge directions is exact. Ties keep
    the first edge in hull order.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if pts.shape[0] < 3:
        raise ValueError("min_area_rect needs at least 3 points")
    try:
        hull = ConvexHull(pts)
    except QhullError as err:
        raise ValueError(f"degenerate (collinear) point set: {err}") from None
    hp = pts[hull.vertices]  # counter-clockwise

    edges = np.roll(hp, -1, axis=0) - hp
    angles = np.arctan2(edges[:, 1], edges[:, 0])

    best = None
    for ang in angles:
        c, s = math.cos(-ang), math.sin(-ang)
        rx = hp[:, 0] * c - hp[:, 1] * s
        ry = hp[:, 0] * s + hp[:, 1] * c
        w = rx.max() - rx.min()
        h = ry.max() - ry.min()
        area = w * h
        if best is None or area < best[0] - 1e-15:
            cx = 0.5 * (rx.max() + rx.min())
            cy = 0.5 * (ry.max() + ry.min())
            best = (area, ang, w, h, cx, cy)

    area, ang, w, h, cx, cy = best
    if min(w, h) <= 1e-12:
        raise ValueError("degenerate (collinear) point set: zero-width hull")
    # rotate the box center back to world coordinates
    c, s = math.cos(ang), math.sin(ang)
    center = np.array([cx * c - cy * s, cx * s + cy * c])
    if w >= h:
        axis = math.degrees(ang)
        hl, hs = w / 2.0, h / 2.0
    else:
        axis = math.degrees(ang) + 90.0
        hl, hs = h / 2.0, w / 2.0
    return RotatedRect(center, hl, hs, axis % 180.0)


def largest_sector_of_box(target_center, box: RotatedRect) -> Sector:
    """Angular sector spanned by `box` as seen from `target_center`.

    Of the six sectors generated by the C(4,2) corner pairs the widest one is
    the full subtended interval (< 180 deg for an external viewpoint). The
    wrap form appears when the box straddles the 0-degree ray.
    """
    t = np.asarray(target_center, dtype=float).reshape(2)
    if box.contains_point(t):
        raise ValueError("target center lies inside the obstacle box")
    corners = box.corners()
    rel = corners - t
    ang = np.degrees(np.arctan2(rel[:, 1], rel[:, 0])) % 360.0

    best_span = -1.0
    best = None
    for i in range(4):
        for j in range(i + 1, 4):
            d = (ang[j] - ang[i]) % 360.0
            span = min(d, 360.0 - d)
            if span > best_span + 1e-12:
                best_span = span
                if d <= 180.0:
                    best = (ang[i], ang[j])
                else:
                    best = (ang[j], ang[i])
    return Sector(best[0], best[1])


# --- rectangle interaction helpers (used by scene packing and outcome rules) ---


def rects_overlap(a: RotatedRect, b: RotatedRect) -> bool:
    """Separating-axis test for two oriented rectangles (touching counts)."""
    for rect in (a, b):
        u, v = rect.axes()
        for axis in (u, v):
            pa = a.corners() @ axis
            pb = b.corners() @ axis
            if pa.max() < pb.min() - 1e-12 or pb.max() < pa.min() - 1e-12:
                return False
    return True


def _point_segment_distance(p, a, b) -> float:
    ab = b - a
    denom = ab @ ab
    if denom <= 0.0:
        return float(np.hypot(*(p - a)))
    t = np.clip((p - a) @ ab / denom, 0.0, 1.0)
    return float(np.hypot(*(p - (a + t * ab))))


def rect_distance(a: RotatedRect, b: RotatedRect) -> float:
    """Minimum boundary distance between two rectangles (0 when overlapping)."""
    if rects_overlap(a, b):
        return 0.0
    ca, cb = a.corners(), b.corners()
    d = math.inf
    for p in ca:
        for k in range(4):
            d = min(d, _point_segment_distance(p, cb[k], cb[(k + 1) % 4]))
    for p in cb:
        for k in range(4):
            d = min(d, _point_segment_distance(p, ca[k], ca[(k + 1) % 4]))
    return d


def rect_intersection_area(a: RotatedRect, b: RotatedRect) -> float:
    """Exact overlap area via Sutherland-Hodgman clipping of a against b."""
    poly = [tuple(p) for p in a.corners()]
    clip = b.corners()
    for k in range(4):
        if not poly:
            return 0.0
        e0, e1 = clip[k], clip[(k + 1) % 4]
        edge = e1 - e0
        out = []
        prev = poly[-1]
        prev_in = edge[0] * (prev[1] - e0[1]) - edge[1] * (prev[0] - e0[0]) >= -1e-15
        for cur in poly:
            cur_in = edge[0] * (cur[1] - e0[1]) - edge[1] * (cur[0] - e0[0]) >= -1e-15
            if cur_in != prev_in:
                # edge crossing
                dx, dy = cur[0] - prev[0], cur[1] - prev[1]
                denom = edge[0] * dy - edge[1] * dx
                if abs(denom) > 1e-18:
                    s = (edge[0] * (e0[1] - prev[1]) - edge[1] * (e0[0] - prev[0])) / denom
                    out.append((prev[0] + s * dx, prev[1] + s * dy))
            if cur_in:
                out.append(cur)
            prev, prev_in = cur, cur_in
        poly = out
    if len(poly) < 3:
        return 0.0
    x = np.array([p[0] for p in poly])
    y = np.array([p[1] for p in poly])
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def point_rect_min_max_distance(point, rect: RotatedRect) -> tuple[float, float]:
    """(min, max) distance from a point to a rectangle (min 0 when inside)."""
    p = np.asarray(point, dtype=float).reshape(2)
    q = p - rect.center
    u, v = rect.axes()
    s, t = q @ u, q @ v
    ds = max(abs(s) - rect.half_long, 0.0)
    dt = max(abs(t) - rect.half_short, 0.0)
    dmin = math.hypot(ds, dt)
    dmax = max(math.hypot(*(c - p)) for c in rect.corners())
    return dmin, dmax


def ring_intersects_rect(center, radius: float, rect: RotatedRect) -> bool:
    """Does the circle of given radius pass through the rectangle?"""
    dmin, dmax = point_rect_min_max_distance(center, rect)
    return dmin <= radius <= dmax


def segment_intersects_rect(a, b, rect: RotatedRect) -> bool:
    """Segment/rectangle intersection (endpoints inside count)."""
    a = np.asarray(a, dtype=float).reshape(2)
    b = np.asarray(b, dtype=float).reshape(2)
    if rect.contains_point(a) or rect.contains_point(b):
        return True
    corners = rect.corners()
    d1 = b - a
    for k in range(4):
        c0, c1 = corners[k], corners[(k + 1) % 4]
        d2 = c1 - c0
        denom = d1[0] * d2[1] - d1[1] * d2[0]
        if abs(denom) < 1e-18:
            continue
        dc = c0 - a
        t = (dc[0] * d2[1] - dc[1] * d2[0]) / denom
        s = (dc[0] * d1[1] - dc[1] * d1[0]) / denom
        if -1e-12 <= t <= 1.0 + 1e-12 and -1e-12 <= s <= 1.0 + 1e-12:
            return True
    return False
