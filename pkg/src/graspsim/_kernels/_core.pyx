# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Semantics match _fallback; see there for docs."""

import numpy as np

from libc.math cimport fabs, sqrt

NAME = "cython"


def render_scene(int resolution, double side, double[:, ::1] rects, double[::1] tops):
    cdef int k = rects.shape[0]
    height_arr = np.zeros((resolution, resolution))
    masks_arr = np.zeros((k, resolution, resolution), dtype=np.uint8)
    cdef double[:, ::1] height = height_arr
    cdef unsigned char[:, :, ::1] masks = masks_arr
    cdef double step = side / resolution
    cdef double cx, cy, hl, hs, ca, sa, top, rad, x, y, dx, dy, s, t
    cdef int o, i, j, i0, i1, j0, j1
    for o in range(k):
        cx = rects[o, 0]; cy = rects[o, 1]
        hl = rects[o, 2]; hs = rects[o, 3]
        ca = rects[o, 4]; sa = rects[o, 5]
        top = tops[o]
        rad = sqrt(hl * hl + hs * hs)
        # clip the scan to the rect's bounding box
        i0 = <int>((cy - rad) / step - 0.5)
        i1 = <int>((cy + rad) / step + 0.5)
        j0 = <int>((cx - rad) / step - 0.5)
        j1 = <int>((cx + rad) / step + 0.5)
        if i0 < 0: i0 = 0
        if j0 < 0: j0 = 0
        if i1 > resolution - 1: i1 = resolution - 1
        if j1 > resolution - 1: j1 = resolution - 1
        for i in range(i0, i1 + 1):
            y = (i + 0.5) * step
            dy = y - cy
            for j in range(j0, j1 + 1):
                x = (j + 0.5) * step
                dx = x - cx
                s = dx * ca + dy * sa
                t = -dx * sa + dy * ca
                if fabs(s) <= hl and fabs(t) <= hs:
                    masks[o, i, j] = 1
                    if top > height[i, j]:
                        height[i, j] = top
    return height_arr, masks_arr


def downscale_mean(double[:, ::1] src, int out_side=16):
    cdef int n = src.shape[0]
    if n % out_side:
        raise ValueError(f"map side {n} not divisible by {out_side}")
    cdef int f = n // out_side
    out_arr = np.zeros((out_side, out_side))
    cdef double[:, ::1] out = out_arr
    cdef double inv = 1.0 / (f * f)
    cdef double acc
    cdef int bi, bj, i, j
    for bi in range(out_side):
        for bj in range(out_side):
            acc = 0.0
            for i in range(bi * f, bi * f + f):
                for j in range(bj * f, bj * f + f):
                    acc += src[i, j]
            out[bi, bj] = acc * inv
    return out_arr


def mlp_forward(double[:, ::1] X, double[:, ::1] W1, double[::1] b1,
                double[:, ::1] W2, double[::1] b2, double[::1] w3, double b3):
    cdef int B = X.shape[0], D = X.shape[1]
    cdef int H1n = W1.shape[1], H2n = W2.shape[1]
    q_arr = np.empty(B)
    h1_arr = np.empty((B, H1n))
    h2_arr = np.empty((B, H2n))
    cdef double[::1] q = q_arr
    cdef double[:, ::1] h1 = h1_arr
    cdef double[:, ::1] h2 = h2_arr
    cdef double xv, acc
    cdef int b, d, h, g
    for b in range(B):
        for h in range(H1n):
            h1[b, h] = b1[h]
        for d in range(D):
            xv = X[b, d]
            if xv != 0.0:  # masked local patches are mostly zeros
                for h in range(H1n):
                    h1[b, h] += xv * W1[d, h]
        for h in range(H1n):
            if h1[b, h] < 0.0:
                h1[b, h] = 0.0
        for g in range(H2n):
            h2[b, g] = b2[g]
        for h in range(H1n):
            xv = h1[b, h]
            if xv != 0.0:
                for g in range(H2n):
                    h2[b, g] += xv * W2[h, g]
        acc = b3
        for g in range(H2n):
            if h2[b, g] < 0.0:
                h2[b, g] = 0.0
            acc += h2[b, g] * w3[g]
        q[b] = acc
    return q_arr, h1_arr, h2_arr


def mlp_backward(double[::1] x, double[::1] h1, double[::1] h2,
                 double[:, ::1] W2, double[::1] w3, double gq):
    cdef int D = x.shape[0], H1n = h1.shape[0], H2n = h2.shape[0]
    gW1_arr = np.zeros((D, H1n))
    gb1_arr = np.empty(H1n)
    gW2_arr = np.zeros((H1n, H2n))
    gb2_arr = np.empty(H2n)
    gw3_arr = np.empty(H2n)
    cdef double[:, ::1] gW1 = gW1_arr
    cdef double[::1] gb1 = gb1_arr
    cdef double[:, ::1] gW2 = gW2_arr
    cdef double[::1] gb2 = gb2_arr
    cdef double[::1] gw3 = gw3_arr
    cdef double gz2_h, acc, xv
    cdef int d, h, g
    gz2_arr = np.empty(H2n)
    cdef double[::1] gz2 = gz2_arr
    for g in range(H2n):
        gw3[g] = gq * h2[g]
        gz2[g] = gq * w3[g] if h2[g] > 0.0 else 0.0
        gb2[g] = gz2[g]
    for h in range(H1n):
        for g in range(H2n):
            gW2[h, g] = h1[h] * gz2[g]
    for h in range(H1n):
        if h1[h] > 0.0:
            acc = 0.0
            for g in range(H2n):
                acc += W2[h, g] * gz2[g]
            gb1[h] = acc
        else:
            gb1[h] = 0.0
    for d in range(D):
        xv = x[d]
        if xv != 0.0:
            for h in range(H1n):
                gW1[d, h] = xv * gb1[h]
    return gW1_arr, gb1_arr, gW2_arr, gb2_arr, gw3_arr, gq


def adam_step(double[::1] p, double[::1] g, double[::1] m, double[::1] v,
              long t, double lr, double beta1, double beta2, double eps):
    cdef int n = p.shape[0]
    cdef double c1 = 1.0 - beta1 ** t
    cdef double c2 = 1.0 - beta2 ** t
    cdef double gi
    cdef int i
    for i in range(n):
        gi = g[i]
        m[i] = beta1 * m[i] + (1.0 - beta1) * gi
        v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi
        p[i] -= lr * (m[i] / c1) / (sqrt(v[i] / c2) + eps)
