"""Tabletop scenes: object catalog, cluttered spawning, depth rendering.

Scenes are immutable after spawn; the episode layer replaces the object
list when something is picked. Objects never move otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .geometry import RotatedRect, rect_distance, rect_intersection_area, rects_overlap

AFFINITIES = ("envelope_only", "suck_only", "both")

ENVELOPE_CAPABLE = ("envelope_only", "both")
SUCK_CAPABLE = ("suck_only", "both")


@dataclass(frozen=True)
class SceneObject:
    """One rigid object: footprint rectangle, height, grasp affinity.

    base_z is derived placement state (raised when stacked on another
    object); it is not serialized and is recomputed on load.
    """

    id: int
    footprint: RotatedRect
    height: float
    grasp_affinity: str
    top_flat_area: float
    base_z: float = 0.0

    def __post_init__(self):
        if self.height <= 0.0:
            raise ValueError("object height must be positive")
        if self.grasp_affinity not in AFFINITIES:
            raise ValueError(f"unknown grasp affinity {self.grasp_affinity!r}")
        if not 0.0 <= self.top_flat_area <= self.footprint.area() + 1e-12:
            raise ValueError("top_flat_area must lie within [0, footprint area]")
        if self.base_z < 0.0:
            raise ValueError("base_z must be non-negative")

    @property
    def top(self) -> float:
        return self.base_z + self.height


@dataclass(frozen=True)
class Scene:
    workspace_side: float
    objects: tuple
    rng_seed: int

    def __post_init__(self):
        if self.workspace_side <= 0.0:
            raise ValueError("workspace side must be positive")
        object.__setattr__(self, "objects", tuple(self.objects))
        ids = [o.id for o in self.objects]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate object ids in scene")
        for o in self.objects:
            for corner in o.footprint.corners():
                if not (0.0 <= corner[0] <= self.workspace_side and 0.0 <= corner[1] <= self.workspace_side):
                    raise ValueError(f"object {o.id} footprint leaves the workspace")

    def object_by_id(self, object_id: int) -> SceneObject:
        for o in self.objects:
            if o.id == object_id:
                return o
        raise KeyError(f"no object with id {object_id} in scene")

    def without(self, object_id: int) -> "Scene":
        self.object_by_id(object_id)
        return replace(self, objects=tuple(o for o in self.objects if o.id != object_id))

    def __len__(self) -> int:
        return len(self.objects)


@dataclass(frozen=True)
class Heightmap:
    resolution: int
    cells: np.ndarray  # (resolution, resolution), meters, >= 0

    def __post_init__(self):
        c = np.asarray(self.cells, dtype=float)
        if c.shape != (self.resolution, self.resolution):
            raise ValueError("heightmap cells must be square with the stated resolution")
        object.__setattr__(self, "cells", c)


@dataclass(frozen=True)
class ObjectTemplate:
    """Catalog entry: size ranges (meters) and grasp affinity.

    flat_frac scales the footprint area down to the suckable flat-top area.
    square templates tie the two half extents together.
    """

    name: str
    half_long: tuple
    half_short: tuple
    height: tuple
    affinity: str
    flat_frac: float
    square: bool = False


# 13 everyday categories. The envelope family is tall/rounded, the suck
# family is flat, so depth alone separates them; banana and remote are the
# elongated outliers whose worst-case width exceeds the gripper opening.
DEFAULT_CATALOG = (
    ObjectTemplate("sports_ball", (0.012, 0.018), (0.012, 0.018), (0.024, 0.036), "envelope_only", 0.6, square=True),
    ObjectTemplate("apple", (0.012, 0.018), (0.012, 0.018), (0.022, 0.032), "envelope_only", 0.6, square=True),
    ObjectTemplate("orange", (0.011, 0.016), (0.011, 0.016), (0.020, 0.030), "envelope_only", 0.7, square=True),
    ObjectTemplate("banana", (0.030, 0.040), (0.007, 0.010), (0.018, 0.026), "envelope_only", 0.45),
    ObjectTemplate("bottle", (0.010, 0.014), (0.010, 0.014), (0.040, 0.055), "envelope_only", 0.8, square=True),
    ObjectTemplate("cup", (0.012, 0.018), (0.012, 0.018), (0.030, 0.045), "envelope_only", 0.6, square=True),
    ObjectTemplate("teddy_bear", (0.015, 0.022), (0.010, 0.015), (0.030, 0.045), "envelope_only", 0.55),
    ObjectTemplate("toy_car", (0.018, 0.025), (0.009, 0.013), (0.010, 0.016), "suck_only", 0.55),
    ObjectTemplate("mouse", (0.015, 0.020), (0.009, 0.013), (0.010, 0.016), "suck_only", 0.65),
    ObjectTemplate("remote", (0.030, 0.040), (0.007, 0.010), (0.008, 0.012), "suck_only", 0.7),
    ObjectTemplate("cellphone", (0.016, 0.022), (0.008, 0.011), (0.006, 0.010), "suck_only", 0.8),
    ObjectTemplate("clock", (0.014, 0.020), (0.014, 0.020), (0.008, 0.014), "suck_only", 0.8, square=True),
    ObjectTemplate("bowl", (0.015, 0.022), (0.015, 0.022), (0.010, 0.016), "suck_only", 0.5, square=True),
)


def envelope_templates(catalog=DEFAULT_CATALOG):
    return tuple(t for t in catalog if t.affinity == "envelope_only")


def suck_templates(catalog=DEFAULT_CATALOG):
    return tuple(t for t in catalog if t.affinity == "suck_only")


def _sample_object(template: ObjectTemplate, object_id: int, rng, side: float):
    hl = rng.uniform(*template.half_long)
    hs = hl if template.square else rng.uniform(*template.half_short)
    if hs > hl:
        hl, hs = hs, hl
    height = rng.uniform(*template.height)
    angle = rng.uniform(0.0, 180.0)
    margin = math.hypot(hl, hs)
    cx = rng.uniform(margin, side - margin)
    cy = rng.uniform(margin, side - margin)
    rect = RotatedRect(np.array([cx, cy]), hl, hs, angle)
    flat = template.flat_frac * rect.area()
    return SceneObject(object_id, rect, height, template.affinity, flat)


def spawn_scene(
    pe: float,
    n_objects: int,
    catalog=DEFAULT_CATALOG,
    seed: int = 0,
    *,
    workspace_side: float = 0.25,
    clutter: str = "light",
    min_separation: float = 0.01,
    max_overlap_frac: float = 0.5,
    max_attempts: int = 1000,
) -> Scene:
    """Rejection-sample a scene with round(pe*n) envelope-family objects.

    "light" clutter forbids footprint overlap and keeps min_separation
    between boundaries; "heavy" permits overlap up to max_overlap_frac of
    the smaller footprint, raising the upper object's base to the tallest
    overlapped top (stacking).
    """
    if not 0.0 <= pe <= 1.0:
        raise ValueError("pe must lie in [0, 1]")
    if n_objects < 1:
        raise ValueError("need at least one object")
    if clutter not in ("light", "heavy"):
        raise ValueError(f"unknown clutter mode {clutter!r}")
    env_pool = envelope_templates(catalog)
    suck_pool = suck_templates(catalog)
    if not env_pool or not suck_pool:
        raise ValueError("catalog must contain both grasp families")

    n_env = int(math.floor(pe * n_objects + 0.5))
    rng = np.random.default_rng(seed)
    placed: list[SceneObject] = []
    for i in range(n_objects):
        pool = env_pool if i < n_env else suck_pool
        ok = False
        for _ in range(max_attempts):
            template = pool[rng.integers(len(pool))]
            cand = _sample_object(template, i, rng, workspace_side)
            if clutter == "light":
                if all(rect_distance(cand.footprint, p.footprint) >= min_separation for p in placed):
                    ok = True
            else:
                base = 0.0
                legal = True
                for p in placed:
                    if not rects_overlap(cand.footprint, p.footprint):
                        continue
                    inter = rect_intersection_area(cand.footprint, p.footprint)
                    frac = inter / min(cand.footprint.area(), p.footprint.area())
                    if frac > max_overlap_frac:
                        legal = False
                        break
                    base = max(base, p.top)
                if legal:
                    cand = replace(cand, base_z=base)
                    ok = True
            if ok:
                placed.append(cand)
                break
        if not ok:
            raise ValueError(
                f"workspace too crowded: could not place object {i} after {max_attempts} attempts"
            )
    return Scene(workspace_side, tuple(placed), seed)


def _rect_rows(scene: Scene):
    k = len(scene.objects)
    rects = np.empty((k, 6))
    tops = np.empty(k)
    for i, o in enumerate(scene.objects):
        r = o.footprint
        a = math.radians(r.axis_angle_deg)
        rects[i] = (r.center[0], r.center[1], r.half_long, r.half_short, math.cos(a), math.sin(a))
        tops[i] = o.top
    return rects, tops


def render_depth(scene: Scene, resolution: int, *, noise_amplitude: float = 0.0, rng=None) -> Heightmap:
    """Top-down depth map: per-cell max object top height, zero elsewhere."""
    if resolution < 1:
        raise ValueError("resolution must be positive")
    rects, tops = _rect_rows(scene)
    height, _ = _kernels.render_scene(resolution, scene.workspace_side, rects, tops)
    if noise_amplitude > 0.0:
        if rng is None:
            raise ValueError("sensor noise requires an rng")
        height = height + rng.uniform(-noise_amplitude, noise_amplitude, height.shape)
        np.clip(height, 0.0, None, out=height)
    return Heightmap(resolution, height)


def render_masks(scene: Scene, resolution: int) -> tuple[tuple, np.ndarray]:
    """(ids, masks): exact boolean footprint rasters, one layer per object."""
    if resolution < 1:
        raise ValueError("resolution must be positive")
    rects, tops = _rect_rows(scene)
    _, masks = _kernels.render_scene(resolution, scene.workspace_side, rects, tops)
    return tuple(o.id for o in scene.objects), masks.astype(bool)


def object_descriptor(scene: Scene, object_id: int):
    """(footprint rect, 3-D center with z at the top surface, top height)."""
    o = scene.object_by_id(object_id)
    center3 = np.array([o.footprint.center[0], o.footprint.center[1], o.top])
    return o.footprint, center3, o.top


# --- text serialization ---------------------------------------------------
# workspace <side> <seed>
# obj <id> <cx> <cy> <half_long> <half_short> <axis_deg> <height> <affinity> <flat_area>


def _fmt(x: float) -> str:
    # repr keeps the shortest digits that parse back to the same float
    return repr(float(x))


def scene_to_text(scene: Scene) -> str:
    lines = [f"workspace {_fmt(scene.workspace_side)} {scene.rng_seed}"]
    for o in scene.objects:
        r = o.footprint
        lines.append(
            "obj "
            + " ".join(
                (
                    str(o.id),
                    _fmt(r.center[0]),
                    _fmt(r.center[1]),
                    _fmt(r.half_long),
                    _fmt(r.half_short),
                    _fmt(r.axis_angle_deg),
                    _fmt(o.height),
                    o.grasp_affinity,
                    _fmt(o.top_flat_area),
                )
            )
        )
    return "\n".join(lines) + "\n"


def scene_from_text(text: str) -> Scene:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("workspace "):
        raise ValueError("scene text must start with a 'workspace' line")
    head = lines[0].split()
    if len(head) != 3:
        raise ValueError(f"bad workspace line: {lines[0]!r}")
    side = float(head[1])
    seed = int(head[2])
    objects = []
    for ln in lines[1:]:
        tok = ln.split()
        if tok[0] != "obj" or len(tok) != 10:
            raise ValueError(f"bad object line: {ln!r}")
        oid = int(tok[1])
        cx, cy, hl, hs, axis, height = (float(t) for t in tok[2:8])
        affinity = tok[8]
        flat = float(tok[9])
        rect = RotatedRect(np.array([cx, cy]), hl, hs, axis)
        # stacking state is derived: placement order is id order
        base = 0.0
        for prev in objects:
            if rects_overlap(rect, prev.footprint):
                base = max(base, prev.top)
        objects.append(SceneObject(oid, rect, height, affinity, flat, base_z=base))
    return Scene(side, tuple(objects), seed)


def save_scene(scene: Scene, path) -> None:
    with open(path, "w", newline="\n") as f:
        f.write(scene_to_text(scene))


def load_scene(path) -> Scene:
    with open(path) as f:
        return scene_from_text(f.read())
