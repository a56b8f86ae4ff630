"""Reference numpy implementations of the hot kernels.

The compiled module (_core) mirrors these semantics; tests compare the two.
Shapes: X is (B, D) row-major float64, hidden layers (D, H1) / (H1, H2),
output weights a flat (H2,) vector.
"""

import numpy as np

NAME = "numpy"

_grid_cache: dict = {}


def _grid(resolution: int, side: float):
    key = (resolution, side)
    g = _grid_cache.get(key)
    if g is None:
        step = side / resolution
        ax = (np.arange(resolution) + 0.5) * step
        x, y = np.meshgrid(ax, ax)  # row i -> y, col j -> x
        g = (x, y)
        _grid_cache[key] = g
    return g


def render_scene(resolution: int, side: float, rects: np.ndarray, tops: np.ndarray):
    """Rasterize rectangles: per-cell max top height plus per-object masks.

    rects: (K, 6) rows (cx, cy, half_long, half_short, cos_axis, sin_axis).
    Returns (height (R,R) float64, masks (K,R,R) uint8).
    """
    x, y = _grid(resolution, side)
    k = rects.shape[0]
    height = np.zeros((resolution, resolution))
    masks = np.zeros((k, resolution, resolution), dtype=np.uint8)
    for i in range(k):
        cx, cy, hl, hs, ca, sa = rects[i]
        dx = x - cx
        dy = y - cy
        s = dx * ca + dy * sa
        t = -dx * sa + dy * ca
        m = (np.abs(s) <= hl) & (np.abs(t) <= hs)
        masks[i] = m
        np.maximum(height, np.where(m, tops[i], 0.0), out=height)
    return height, masks


def downscale_mean(src: np.ndarray, out_side: int = 16) -> np.ndarray:
    """Block-mean downscale of a square map; side must divide evenly."""
    n = src.shape[0]
    if n % out_side:
        raise ValueError(f"map side {n} not divisible by {out_side}")
    f = n // out_side
    return src.reshape(out_side, f, out_side, f).mean(axis=(1, 3))


def mlp_forward(X, W1, b1, W2, b2, w3, b3):
    """Two hidden ReLU layers to a scalar head. Returns (q, H1, H2)."""
    H1 = np.maximum(X @ W1 + b1, 0.0)
    H2 = np.maximum(H1 @ W2 + b2, 0.0)
    q = H2 @ w3 + b3
    return q, H1, H2


def mlp_backward(x, h1, h2, W2, w3, gq):
    """Gradients for a single sample given dL/dq = gq."""
    gw3 = gq * h2
    gb3 = gq
    gz2 = (gq * w3) * (h2 > 0.0)
    gW2 = np.outer(h1, gz2)
    gb2 = gz2
    gz1 = (W2 @ gz2) * (h1 > 0.0)
    gW1 = np.outer(x, gz1)
    gb1 = gz1
    return gW1, gb1, gW2, gb2, gw3, gb3


def adam_step(p, g, m, v, t, lr, beta1, beta2, eps):
    """One Adam update, in place on p/m/v. t is the 1-based step index."""
    m *= beta1
    m += (1.0 - beta1) * g
    v *= beta2
    v += (1.0 - beta2) * g * g
    mhat = m / (1.0 - beta1**t)
    vhat = v / (1.0 - beta2**t)
    p -= lr * mhat / (np.sqrt(vhat) + eps)
