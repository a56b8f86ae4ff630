"""Timing comparison between the compiled kernels and the numpy fallback.

Run from the repository root:

    python3 benchmarks/bench_kernels.py

Each kernel is timed on workloads shaped like real training traffic
(64x64 scene renders, 16x16 downscales, batched 512-input value nets).
"""

from __future__ import annotations

import time

import numpy as np

from graspsim._kernels import _fallback
from graspsim.env import make_state_view
from graspsim.learner import FeatureCache, N_HIDDEN, ValueNet
from graspsim.scene import _rect_rows, spawn_scene

try:
    from graspsim._kernels import _core
except ImportError:
    _core = None


def _time(fn, *args, repeat: int = 200) -> float:
    fn(*args)  # warm up once
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn(*args)
    return (time.perf_counter() - t0) / repeat


def _workloads():
    scene = spawn_scene(0.5, 10, seed=0)
    rects, tops = _rect_rows(scene)
    depth = np.ascontiguousarray(np.random.default_rng(0).random((64, 64)))
    net = ValueNet.initialize(np.random.default_rng(1))
    # realistic inputs: masked depth patches are mostly zero
    cache = FeatureCache(make_state_view(scene, 64))
    X = np.ascontiguousarray(
        np.stack([cache.object_features(o.id) for o in scene.objects])
    )
    x1 = X[:1].copy()
    p = np.random.default_rng(3).random(X.shape[1] * N_HIDDEN)
    g = np.random.default_rng(4).random(p.size)
    m = np.zeros(p.size)
    v = np.zeros(p.size)

    def render(k):
        k.render_scene(64, scene.workspace_side, rects, tops)

    def downscale(k):
        k.downscale_mean(depth, 16)

    def forward(k):
        k.mlp_forward(X, net.W1, net.b1, net.W2, net.b2, net.w3, float(net.b3[0]))

    def backward(k):
        _, H1, H2 = k.mlp_forward(
            x1, net.W1, net.b1, net.W2, net.b2, net.w3, float(net.b3[0])
        )
        k.mlp_backward(x1[0], H1[0], H2[0], net.W2, net.w3, 1.0)

    def adam(k):
        k.adam_step(p, g, m, v, 1, 1e-4, 0.9, 0.999, 1e-8)

    return [
        ("render_scene 64x64, 10 objects", render),
        ("downscale_mean 64->16", downscale),
        (f"mlp_forward batch {X.shape[0]}", forward),
        ("mlp_backward single", backward),
        ("adam_step 32768 params", adam),
    ]


def main() -> int:
    if _core is None:
        print("compiled kernels unavailable; timing the numpy fallback only")
    rows = []
    for label, fn in _workloads():
        t_np = _time(fn, _fallback)
        if _core is not None:
            t_cy = _time(fn, _core)
            rows.append((label, t_np, t_cy, t_np / t_cy))
        else:
            rows.append((label, t_np, None, None))

    print(f"{'kernel':<34} {'numpy':>10} {'cython':>10} {'speedup':>8}")
    for label, t_np, t_cy, ratio in rows:
        np_us = f"{t_np * 1e6:.1f}us"
        if t_cy is None:
            print(f"{label:<34} {np_us:>10} {'-':>10} {'-':>8}")
        else:
            print(f"{label:<34} {np_us:>10} {t_cy * 1e6:>8.1f}us {ratio:>7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
