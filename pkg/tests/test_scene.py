"""Scene spawning, serialization, and rendering checks."""

import math

import numpy as np
import pytest

from graspsim.geometry import RotatedRect, rect_distance, rect_intersection_area, rects_overlap
from graspsim.scene import (
    DEFAULT_CATALOG,
    ENVELOPE_CAPABLE,
    SUCK_CAPABLE,
    Scene,
    SceneObject,
    envelope_templates,
    load_scene,
    object_descriptor,
    render_depth,
    render_masks,
    save_scene,
    scene_from_text,
    scene_to_text,
    spawn_scene,
    suck_templates,
)


def test_catalog_has_both_families():
    assert len(DEFAULT_CATALOG) == 13
    assert len(envelope_templates()) == 7
    assert len(suck_templates()) == 6
    for t in DEFAULT_CATALOG:
        assert t.affinity in ("envelope_only", "suck_only")
        assert 0.0 < t.flat_frac <= 1.0


@pytest.mark.parametrize("pe,n,expect", [
    (0.0, 10, 0), (0.1, 10, 1), (0.25, 10, 3), (0.5, 10, 5),
    (0.5, 9, 5), (0.75, 10, 8), (1.0, 10, 10), (0.3, 7, 2),
])
def test_envelope_count_rounds_half_up(pe, n, expect):
    scene = spawn_scene(pe, n, seed=11)
    n_env = sum(o.grasp_affinity in ENVELOPE_CAPABLE for o in scene.objects)
    assert n_env == expect
    assert len(scene) == n
    # envelope family occupies the low ids
    for o in scene.objects:
        assert (o.grasp_affinity == "envelope_only") == (o.id < expect)


def test_spawn_is_deterministic():
    a = spawn_scene(0.5, 8, seed=42)
    b = spawn_scene(0.5, 8, seed=42)
    assert scene_to_text(a) == scene_to_text(b)
    c = spawn_scene(0.5, 8, seed=43)
    assert scene_to_text(a) != scene_to_text(c)


def test_light_clutter_keeps_separation():
    scene = spawn_scene(0.5, 10, seed=3, min_separation=0.012)
    objs = scene.objects
    for i, a in enumerate(objs):
        assert a.base_z == 0.0
        for b in objs[i + 1:]:
            assert not rects_overlap(a.footprint, b.footprint)
            assert rect_distance(a.footprint, b.footprint) >= 0.012 - 1e-12


def test_heavy_clutter_allows_bounded_overlap_and_stacks():
    scene = spawn_scene(0.5, 14, seed=5, clutter="heavy", workspace_side=0.18)
    objs = scene.objects
    any_overlap = False
    for i, a in enumerate(objs):
        for b in objs[i + 1:]:
            if not rects_overlap(a.footprint, b.footprint):
                continue
            any_overlap = True
            inter = rect_intersection_area(a.footprint, b.footprint)
            assert inter / min(a.footprint.area(), b.footprint.area()) <= 0.5 + 1e-9
            # later object rests on the earlier one's top
            assert b.base_z >= a.top - 1e-12 or a.base_z == 0.0
    assert any_overlap  # 14 objects in 18 cm cannot all avoid each other


def test_crowded_workspace_raises():
    with pytest.raises(ValueError, match="crowded"):
        spawn_scene(0.5, 40, seed=0, workspace_side=0.12, min_separation=0.02)


def test_spawn_argument_validation():
    with pytest.raises(ValueError):
        spawn_scene(1.5, 5)
    with pytest.raises(ValueError):
        spawn_scene(0.5, 0)
    with pytest.raises(ValueError):
        spawn_scene(0.5, 5, clutter="medium")


def test_scene_object_validation():
    rect = RotatedRect(np.array([0.1, 0.1]), 0.02, 0.01, 30.0)
    with pytest.raises(ValueError):
        SceneObject(0, rect, -0.01, "suck_only", 1e-4)
    with pytest.raises(ValueError):
        SceneObject(0, rect, 0.01, "magnetic", 1e-4)
    with pytest.raises(ValueError):
        SceneObject(0, rect, 0.01, "suck_only", rect.area() * 2)
    with pytest.raises(ValueError, match="workspace"):
        Scene(0.05, (SceneObject(0, rect, 0.01, "suck_only", 1e-4),), 0)
    with pytest.raises(ValueError, match="duplicate"):
        small = RotatedRect(np.array([0.02, 0.02]), 0.005, 0.005, 0.0)
        obj = SceneObject(1, small, 0.01, "suck_only", 1e-5)
        Scene(0.25, (obj, obj), 0)


def test_scene_without_and_lookup():
    scene = spawn_scene(0.5, 6, seed=9)
    rest = scene.without(2)
    assert len(rest) == 5
    with pytest.raises(KeyError):
        rest.object_by_id(2)
    with pytest.raises(KeyError):
        scene.without(99)
    assert scene.object_by_id(3).id == 3


def test_text_roundtrip_is_exact():
    for clutter in ("light", "heavy"):
        scene = spawn_scene(0.4, 9, seed=17, clutter=clutter,
                            workspace_side=0.2 if clutter == "heavy" else 0.25)
        again = scene_from_text(scene_to_text(scene))
        assert again.workspace_side == scene.workspace_side
        for a, b in zip(scene.objects, again.objects):
            assert a.id == b.id and a.grasp_affinity == b.grasp_affinity
            assert np.array_equal(a.footprint.center, b.footprint.center)
            assert a.footprint.half_long == b.footprint.half_long
            assert a.footprint.half_short == b.footprint.half_short
            assert a.footprint.axis_angle_deg == b.footprint.axis_angle_deg
            assert a.height == b.height
            assert a.base_z == b.base_z
            assert a.top_flat_area == b.top_flat_area


def test_save_load_file(tmp_path):
    scene = spawn_scene(0.6, 7, seed=23)
    path = tmp_path / "scene.txt"
    save_scene(scene, path)
    again = load_scene(path)
    assert scene_to_text(again) == scene_to_text(scene)


def test_malformed_text_rejected():
    with pytest.raises(ValueError):
        scene_from_text("not a scene")
    scene = spawn_scene(0.5, 3, seed=1)
    text = scene_to_text(scene)
    with pytest.raises(ValueError):
        scene_from_text(text.replace("envelope_only", "weird_affinity", 1))


def test_render_depth_matches_object_tops():
    scene = spawn_scene(0.5, 8, seed=31)
    res = 96
    hm = render_depth(scene, res)
    assert hm.cells.shape == (res, res)
    cell = scene.workspace_side / res
    for o in scene.objects:
        cx, cy = o.footprint.center
        ix = min(int(cx / cell), res - 1)
        iy = min(int(cy / cell), res - 1)
        # center cell is covered by this object, possibly topped by a stacked one
        assert hm.cells[iy, ix] >= o.top - 1e-12
    # background stays empty
    assert np.min(hm.cells) == 0.0
    assert np.max(hm.cells) <= max(o.top for o in scene.objects) + 1e-12


def test_render_masks_partition_matches_depth():
    scene = spawn_scene(0.5, 6, seed=8)
    res = 64
    ids, masks = render_masks(scene, res)
    assert ids == tuple(o.id for o in scene.objects)
    assert masks.shape == (len(scene), res, res)
    assert masks.dtype == bool
    hm = render_depth(scene, res)
    covered = masks.any(axis=0)
    assert np.array_equal(covered, hm.cells > 0.0)
    # each object's mask area approximates its footprint area
    cell_area = (scene.workspace_side / res) ** 2
    for o, m in zip(scene.objects, masks):
        assert m.sum() * cell_area == pytest.approx(o.footprint.area(), rel=0.35)


def test_render_noise_requires_rng():
    scene = spawn_scene(0.5, 4, seed=2)
    with pytest.raises(ValueError):
        render_depth(scene, 32, noise_amplitude=0.001)
    rng = np.random.default_rng(0)
    hm = render_depth(scene, 32, noise_amplitude=0.001, rng=rng)
    base = render_depth(scene, 32)
    assert np.min(hm.cells) >= 0.0
    assert np.max(np.abs(hm.cells - base.cells)) <= 0.001 + 1e-12
    with pytest.raises(ValueError):
        render_depth(scene, 0)


def test_object_descriptor_top_surface():
    scene = spawn_scene(0.5, 5, seed=13)
    o = scene.objects[0]
    rect, center3, top = object_descriptor(scene, o.id)
    assert rect is o.footprint
    assert center3[0] == o.footprint.center[0]
    assert center3[1] == o.footprint.center[1]
    assert center3[2] == o.top == top
