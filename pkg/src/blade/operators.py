"""Reference edge-aware operators used to generate training targets.

These are direct (slow, honest) implementations: the brute-force bilateral
filter, regularized curvature motion stepped explicitly, and smoothing
along the local edge tangent via line integral convolution. The curvature
scheme simplifies the classic upwind discretization to regularized central
differences; see README notes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .image import reflect_pad, require_gray
from .structure_tensor import tensor_eigen, tensor_field


@dataclass
class FlowParams:
    """Knobs for the diffusion-style operators, pixel/intensity units."""

    dt: float = 0.1
    steps: int = 10
    epsilon: float = 1e-3 * 255.0
    rho: float = 2.0
    half_length: float = 4.0
    sigma_r: float = 25.0
    sigma_s: float = 2.5

    def __post_init__(self):
        if self.dt <= 0 or self.steps < 0 or self.epsilon <= 0:
            raise ValueError("need dt > 0, steps >= 0, epsilon > 0")
        if self.rho <= 0 or self.half_length < 0:
            raise ValueError("need rho > 0 and half_length >= 0")
        if self.sigma_r <= 0 or self.sigma_s <= 0:
            raise ValueError("bilateral sigmas must be > 0")


def bilateral(img: np.ndarray, sigma_r: float, sigma_s: float) -> np.ndarray:
    """Range/spatial Gaussian-weighted average over a 3-sigma window."""
    img = require_gray(img)
    if sigma_r <= 0 or sigma_s <= 0:
        raise ValueError("bilateral sigmas must be > 0")
    radius = int(math.ceil(3.0 * sigma_s))
    z = img.astype(np.float64)
    padded = reflect_pad(z, radius)
    h, w = z.shape
    num = np.zeros_like(z)
    den = np.zeros_like(z)
    inv_r = -0.5 / (sigma_r * sigma_r)
    inv_s = -0.5 / (sigma_s * sigma_s)
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            zs = padded[radius + dy : radius + dy + h, radius + dx : radius + dx + w]
            wgt = np.exp(inv_r * (z - zs) ** 2 + inv_s * (dy * dy + dx * dx))
            num += wgt * zs
            den += wgt
    return (num / den).astype(np.float32)


def _central_diffs(u: np.ndarray):
    p = reflect_pad(u, 1)
    ux = 0.5 * (p[1:-1, 2:] - p[1:-1, :-2])
    uy = 0.5 * (p[2:, 1:-1] - p[:-2, 1:-1])
    return ux, uy


def tv_flow(img: np.ndarray, params: FlowParams) -> np.ndarray:
    """Explicit curvature motion: du/dt = |grad u| div(grad u / |grad u|).

    The gradient magnitude is regularized as sqrt(|grad u|^2 + eps^2); the
    caller owns step-size stability (defaults respect dt <= 0.25).
    """
    img = require_gray(img)
    u = img.astype(np.float64)
    eps2 = params.epsilon * params.epsilon
    for _ in range(params.steps):
        ux, uy = _central_diffs(u)
        mag = np.sqrt(ux * ux + uy * uy + eps2)
        px = ux / mag
        py = uy / mag
        dpx, _ = _central_diffs(px)
        _, dpy = _central_diffs(py)
        u += params.dt * mag * (dpx + dpy)
    return u.astype(np.float32)


def _unit_tangent_field(img: np.ndarray, rho: float):
    """Unit edge-tangent vectors (tx, ty) per pixel; zero where isotropic."""
    a, b, c = tensor_field(img, rho)
    _, _, w1, w2 = tensor_eigen(a, b, c)
    # De-rotate the dominant (gradient) eigenvector, then take its normal.
    gx = w1 + w2
    gy = w2 - w1
    tx, ty = -gy, gx
    norm = np.hypot(tx, ty)
    good = norm > 0
    tx = np.divide(tx, norm, out=np.zeros_like(tx), where=good)
    ty = np.divide(ty, norm, out=np.zeros_like(ty), where=good)
    return tx, ty


def _bilinear(img: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    h, w = img.shape
    xs = np.clip(xs, 0.0, w - 1.0)
    ys = np.clip(ys, 0.0, h - 1.0)
    x0 = np.clip(np.floor(xs).astype(np.int64), 0, w - 2) if w > 1 else np.zeros_like(xs, np.int64)
    y0 = np.clip(np.floor(ys).astype(np.int64), 0, h - 2) if h > 1 else np.zeros_like(ys, np.int64)
    fx = xs - x0
    fy = ys - y0
    i00 = img[y0, x0]
    i01 = img[y0, np.minimum(x0 + 1, w - 1)]
    i10 = img[np.minimum(y0 + 1, h - 1), x0]
    i11 = img[np.minimum(y0 + 1, h - 1), np.minimum(x0 + 1, w - 1)]
    top = i00 + fx * (i01 - i00)
    bot = i10 + fx * (i11 - i10)
    return top + fy * (bot - top)


def _sample_tangent(tx, ty, xs, ys, ref_x, ref_y):
    """Bilinear tangent lookup with per-corner sign alignment to a reference."""
    h, w = tx.shape
    xs = np.clip(xs, 0.0, w - 1.0)
    ys = np.clip(ys, 0.0, h - 1.0)
    x0 = np.clip(np.floor(xs).astype(np.int64), 0, max(w - 2, 0))
    y0 = np.clip(np.floor(ys).astype(np.int64), 0, max(h - 2, 0))
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = xs - x0
    fy = ys - y0
    out_x = np.zeros_like(xs)
    out_y = np.zeros_like(ys)
    for yy, xx, wgt in (
        (y0, x0, (1 - fx) * (1 - fy)),
        (y0, x1, fx * (1 - fy)),
        (y1, x0, (1 - fx) * fy),
        (y1, x1, fx * fy),
    ):
        cx = tx[yy, xx]
        cy = ty[yy, xx]
        flip = np.where(cx * ref_x + cy * ref_y < 0, -1.0, 1.0)
        out_x += wgt * flip * cx
        out_y += wgt * flip * cy
    norm = np.hypot(out_x, out_y)
    good = norm > 0
    out_x = np.divide(out_x, norm, out=np.zeros_like(out_x), where=good)
    out_y = np.divide(out_y, norm, out=np.zeros_like(out_y), where=good)
    return out_x, out_y


_LIC_STEP = 0.5


def edge_tangent_flow(img: np.ndarray, params: FlowParams) -> np.ndarray:
    """Smooth along local edge tangents via line integral convolution.

    Streamlines of the tangent field are traced in both directions with
    midpoint (RK2) steps of half a pixel up to `half_length`, accumulating
    Gaussian-weighted (sigma = half_length / 2) bilinear image samples.
    Tangent sign is kept coherent by aligning each sample with the previous
    step direction.
    """
    img = require_gray(img)
    u = img.astype(np.float64)
    h, w = u.shape
    n_steps = int(round(params.half_length / _LIC_STEP))
    if n_steps == 0:
        return img.astype(np.float32).copy()
    tx, ty = _unit_tangent_field(u, params.rho)
    sigma = params.half_length / 2.0
    inv = -0.5 / (sigma * sigma)

    ys_grid, xs_grid = np.mgrid[0:h, 0:w].astype(np.float64)
    acc = u.copy()
    wsum = np.ones_like(u)
    for direction in (1.0, -1.0):
        xs = xs_grid.copy()
        ys = ys_grid.copy()
        ref_x = direction * tx
        ref_y = direction * ty
        for step in range(1, n_steps + 1):
            k1x, k1y = _sample_tangent(tx, ty, xs, ys, ref_x, ref_y)
            k2x, k2y = _sample_tangent(tx, ty, xs + 0.5 * _LIC_STEP * k1x, ys + 0.5 * _LIC_STEP * k1y, k1x, k1y)
            xs += _LIC_STEP * k2x
            ys += _LIC_STEP * k2y
            ref_x, ref_y = k2x, k2y
            s = step * _LIC_STEP
            wgt = math.exp(inv * s * s)
            acc += wgt * _bilinear(u, xs, ys)
            wsum += wgt
    return (acc / wsum).astype(np.float32)
