"""Smoothed 2x2 structure tensor and its orientation/strength/coherence features.

The gradient is estimated with diagonal differences on 45-degree-rotated
axes, which live on the half-sample-shifted grid of cell centers. Tensor
smoothing uses an even-length Gaussian sampled at half-integer offsets, so
the smoothed field lands back on the pixel grid. The dominant eigenvector
is rotated back by 45 degrees before the orientation angle is read off.

The per-pixel heavy lifting is JIT-compiled; everything runs in float64.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
from numba import njit, prange

from .image import require_gray

_INV_SQRT2 = 1.0 / math.sqrt(2.0)


class TensorField(NamedTuple):
    """Per-pixel smoothed tensor components (a, b, c) = (g1^2, g1*g2, g2^2)."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray


class Features(NamedTuple):
    """orientation in (-pi/2, pi/2], strength = sqrt(lambda1), coherence in [0, 1]."""

    orientation: np.ndarray
    strength: np.ndarray
    coherence: np.ndarray


def diagonal_gradient(img: np.ndarray):
    """Diagonal-difference gradient (g1, g2) on the (H-1, W-1) cell-center grid.

    g1[y, x] = (u[y, x+1] - u[y+1, x]) / sqrt(2)
    g2[y, x] = (u[y+1, x+1] - u[y, x]) / sqrt(2)
    """
    img = require_gray(img)
    if img.shape[0] < 2 or img.shape[1] < 2:
        raise ValueError(f"need at least a 2x2 image, got {img.shape}")
    u = img.astype(np.float64)
    g1 = (u[:-1, 1:] - u[1:, :-1]) * _INV_SQRT2
    g2 = (u[1:, 1:] - u[:-1, :-1]) * _INV_SQRT2
    return g1, g2


def half_shift_gaussian(rho: float) -> np.ndarray:
    """One-sided taps of the even-length Gaussian at offsets 1/2, 3/2, ...

    The full symmetric kernel is the mirror image plus these taps; they are
    normalized so the full kernel sums to 1.
    """
    if rho <= 0:
        raise ValueError("rho must be > 0")
    length = int(math.ceil(3.0 * rho))
    k = np.arange(1, length + 1) - 0.5
    g = np.exp(-(k**2) / (2.0 * rho * rho))
    return g / (2.0 * g.sum())


@njit(inline="always")
def _sym(i, n):
    # Mirror half-grid samples about the pixel-grid boundaries.
    if n == 1:
        return 0
    m = i % (2 * n)
    if m >= n:
        m = 2 * n - 1 - m
    return m


@njit(cache=True, parallel=True)
def _products_smooth_cols(g1, g2, taps, out_a, out_b, out_c):
    # Outer products of the gradient, filtered along columns; width grows by 1.
    hm, wm = g1.shape
    length = taps.size
    for y in prange(hm):
        pa = np.empty(wm)
        pb = np.empty(wm)
        pc = np.empty(wm)
        for x in range(wm):
            v1 = g1[y, x]
            v2 = g2[y, x]
            pa[x] = v1 * v1
            pb[x] = v1 * v2
            pc[x] = v2 * v2
        for p in range(wm + 1):
            sa = 0.0
            sb = 0.0
            sc = 0.0
            for k in range(1, length + 1):
                i0 = _sym(p - k, wm)
                i1 = _sym(p + k - 1, wm)
                w = taps[k - 1]
                sa += w * (pa[i0] + pa[i1])
                sb += w * (pb[i0] + pb[i1])
                sc += w * (pc[i0] + pc[i1])
            out_a[y, p] = sa
            out_b[y, p] = sb
            out_c[y, p] = sc


@njit(cache=True, parallel=True)
def _grad_products_smooth_cols(img, taps, out_a, out_b, out_c):
    # Same as _products_smooth_cols but with the diagonal differences fused in.
    h, w = img.shape
    hm, wm = h - 1, w - 1
    length = taps.size
    inv = _INV_SQRT2
    for y in prange(hm):
        pa = np.empty(wm)
        pb = np.empty(wm)
        pc = np.empty(wm)
        for x in range(wm):
            v1 = (1.0 * img[y, x + 1] - 1.0 * img[y + 1, x]) * inv
            v2 = (1.0 * img[y + 1, x + 1] - 1.0 * img[y, x]) * inv
            pa[x] = v1 * v1
            pb[x] = v1 * v2
            pc[x] = v2 * v2
        for p in range(wm + 1):
            sa = 0.0
            sb = 0.0
            sc = 0.0
            for k in range(1, length + 1):
                i0 = _sym(p - k, wm)
                i1 = _sym(p + k - 1, wm)
                wgt = taps[k - 1]
                sa += wgt * (pa[i0] + pa[i1])
                sb += wgt * (pb[i0] + pb[i1])
                sc += wgt * (pc[i0] + pc[i1])
            out_a[y, p] = sa
            out_b[y, p] = sb
            out_c[y, p] = sc


@njit(cache=True, parallel=True)
def _smooth_rows3(src_a, src_b, src_c, taps, out_a, out_b, out_c):
    # Even-length filtering along rows for all three components; height grows by 1.
    hm, w = src_a.shape
    length = taps.size
    for p in prange(hm + 1):
        for x in range(w):
            out_a[p, x] = 0.0
            out_b[p, x] = 0.0
            out_c[p, x] = 0.0
        for k in range(1, length + 1):
            i0 = _sym(p - k, hm)
            i1 = _sym(p + k - 1, hm)
            wgt = taps[k - 1]
            for x in range(w):
                out_a[p, x] += wgt * (src_a[i0, x] + src_a[i1, x])
                out_b[p, x] += wgt * (src_b[i0, x] + src_b[i1, x])
                out_c[p, x] += wgt * (src_c[i0, x] + src_c[i1, x])


def smooth_tensor(grad, rho: float) -> TensorField:
    """Gaussian-smoothed outer products of a half-grid gradient field.

    Returns per-pixel (a, b, c) on the full (H, W) pixel grid.
    """
    g1, g2 = grad
    g1 = np.ascontiguousarray(g1, np.float64)
    g2 = np.ascontiguousarray(g2, np.float64)
    taps = half_shift_gaussian(rho)
    hm, wm = g1.shape
    cols = [np.empty((hm, wm + 1)) for _ in range(3)]
    _products_smooth_cols(g1, g2, taps, *cols)
    full = [np.empty((hm + 1, wm + 1)) for _ in range(3)]
    _smooth_rows3(*cols, taps, *full)
    return TensorField(*full)


def smoothed_tensor_arrays(img: np.ndarray, rho: float) -> TensorField:
    """Fast path for `tensor_field`: fused gradient, products, and smoothing.

    Bit-identical to smooth_tensor(diagonal_gradient(img), rho).
    """
    img = require_gray(img)
    if img.shape[0] < 2 or img.shape[1] < 2:
        raise ValueError(f"need at least a 2x2 image, got {img.shape}")
    arr = np.ascontiguousarray(img)
    if arr.dtype not in (np.float32, np.float64):
        arr = arr.astype(np.float64)
    taps = half_shift_gaussian(rho)
    h, w = arr.shape
    cols = [np.empty((h - 1, w)) for _ in range(3)]
    _grad_products_smooth_cols(arr, taps, *cols)
    full = [np.empty((h, w)) for _ in range(3)]
    _smooth_rows3(*cols, taps, *full)
    return TensorField(*full)


@njit(inline="always")
def _eigen_scalar(a, b, c):
    delta = math.sqrt((a - c) * (a - c) + (2.0 * b) * (2.0 * b))
    lam1 = 0.5 * ((a + c) + delta)
    lam2 = (a + c) - lam1
    w1 = 2.0 * b
    w2 = (c - a) + delta
    f1 = (a - c) + delta
    f2 = 2.0 * b
    if w1 * w1 + w2 * w2 < f1 * f1 + f2 * f2:
        w1, w2 = f1, f2
    return lam1, lam2, w1, w2


@njit(cache=True, parallel=True)
def _features_kernel(a, b, c, theta, strength, coherence):
    for i in prange(a.size):
        lam1, lam2, w1, w2 = _eigen_scalar(a[i], b[i], c[i])
        if lam1 < 0.0:
            lam1 = 0.0
        if lam2 < 0.0:
            lam2 = 0.0
        # Undo the 45-degree rotation of the diagonal-difference axes.
        wt1 = w1 + w2
        wt2 = w2 - w1
        th = math.atan2(wt2, wt1)
        if th > 0.5 * math.pi:
            th -= math.pi
        elif th <= -0.5 * math.pi:
            th += math.pi
        s1 = math.sqrt(lam1)
        s2 = math.sqrt(lam2)
        theta[i] = th
        strength[i] = s1
        coherence[i] = (s1 - s2) / (s1 + s2) if s1 + s2 > 0.0 else 0.0


def tensor_eigen(a, b, c):
    """Eigenvalues (descending, trace-exact) and a dominant eigenvector.

    The eigenvector is (2b, c - a + delta) or the analytically equivalent
    (a - c + delta, 2b), whichever has the larger squared norm; both vanish
    only for isotropic input.
    """
    a = np.asarray(a, np.float64)
    b = np.asarray(b, np.float64)
    c = np.asarray(c, np.float64)
    delta = np.sqrt((a - c) ** 2 + (2.0 * b) ** 2)
    lam1 = 0.5 * ((a + c) + delta)
    lam2 = (a + c) - lam1
    w1p, w2p = 2.0 * b, (c - a) + delta
    w1f, w2f = (a - c) + delta, 2.0 * b
    use_fallback = (w1p * w1p + w2p * w2p) < (w1f * w1f + w2f * w2f)
    w1 = np.where(use_fallback, w1f, w1p)
    w2 = np.where(use_fallback, w2f, w2p)
    return lam1, lam2, w1, w2


def tensor_features(field: TensorField) -> Features:
    """Orientation/strength/coherence of each tensor sample.

    Orientation is the gradient direction (modulo pi, folded to the
    half-open interval (-pi/2, pi/2]); the zero tensor yields orientation 0
    and coherence 0 by convention.
    """
    a = np.ascontiguousarray(field.a, np.float64)
    b = np.ascontiguousarray(field.b, np.float64)
    c = np.ascontiguousarray(field.c, np.float64)
    shape = np.broadcast_shapes(a.shape, b.shape, c.shape)
    a, b, c = (np.broadcast_to(x, shape).reshape(-1) for x in (a, b, c))
    theta = np.empty(a.size)
    strength = np.empty(a.size)
    coherence = np.empty(a.size)
    _features_kernel(a, b, c, theta, strength, coherence)
    return Features(theta.reshape(shape), strength.reshape(shape), coherence.reshape(shape))


def tensor_field(img: np.ndarray, rho: float) -> TensorField:
    """Smoothed structure tensor of an image at analysis scale rho."""
    return smoothed_tensor_arrays(img, rho)
