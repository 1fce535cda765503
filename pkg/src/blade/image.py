"""Image containers, patch access, quality metrics, noise, and resampling.

Images are numpy float32 arrays on a nominal [0, 255] intensity scale:
grayscale as (height, width), RGB as (height, width, 3). All boundary
handling is symmetric reflection without edge repetition (a b c -> ... b a
| a b c | c b ...).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


@dataclass(frozen=True)
class Footprint:
    """Centered square set of filter tap offsets with odd side length."""

    side: int

    def __post_init__(self):
        if self.side < 1 or self.side % 2 == 0:
            raise ValueError(f"footprint side must be odd and >= 1, got {self.side}")

    @property
    def radius(self) -> int:
        return self.side // 2

    @property
    def size(self) -> int:
        """Number of taps N."""
        return self.side * self.side

    def offsets(self) -> np.ndarray:
        """(N, 2) array of (row, col) offsets enumerated row-major."""
        r = self.radius
        dy, dx = np.mgrid[-r : r + 1, -r : r + 1]
        return np.stack([dy.ravel(), dx.ravel()], axis=1)


def require_gray(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img)
    if img.ndim != 2 or img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError(f"expected a 2-D grayscale image, got shape {img.shape}")
    return img


def require_rgb(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) RGB image, got shape {img.shape}")
    return img


def require_same_shape(a: np.ndarray, b: np.ndarray):
    if a.shape != b.shape:
        raise ValueError(f"image dimensions differ: {a.shape} vs {b.shape}")


def luma(rgb: np.ndarray) -> np.ndarray:
    """Rec. 601 luma of an RGB image, float32."""
    rgb = require_rgb(rgb)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    return (0.299 * r + 0.587 * g + 0.114 * b).astype(np.float32)


def reflect_index(idx, n: int):
    """Map arbitrary indices into [0, n) by mirroring about the end samples."""
    idx = np.asarray(idx)
    if n == 1:
        return np.zeros_like(idx)
    period = 2 * n - 2
    m = np.mod(idx, period)
    return np.where(m >= n, period - m, m)


def reflect_pad(img: np.ndarray, pad: int) -> np.ndarray:
    """Pad the first two axes by `pad` with mirrored samples (no edge repeat).

    Valid for any pad width, including pads larger than the image.
    """
    if pad == 0:
        return img
    h, w = img.shape[0], img.shape[1]
    yy = reflect_index(np.arange(-pad, h + pad), h)
    xx = reflect_index(np.arange(-pad, w + pad), w)
    return img[np.ix_(yy, xx)]


def extract_patch(img: np.ndarray, center, fp: Footprint) -> np.ndarray:
    """Footprint-shaped patch around `center` = (row, col), row-major order.

    Out-of-bounds taps are resolved by symmetric reflection. The center
    itself must lie inside the image.
    """
    img = require_gray(img)
    h, w = img.shape
    cy, cx = int(center[0]), int(center[1])
    if not (0 <= cy < h and 0 <= cx < w):
        raise ValueError(f"patch center {(cy, cx)} outside image of shape {(h, w)}")
    offs = fp.offsets()
    yy = reflect_index(cy + offs[:, 0], h)
    xx = reflect_index(cx + offs[:, 1], w)
    return np.ascontiguousarray(img[yy, xx])


def patch_matrix(img: np.ndarray, fp: Footprint, dtype=np.float64) -> np.ndarray:
    """All patches of an image as a (H*W, N) matrix, pixel row-major."""
    img = require_gray(img)
    padded = reflect_pad(img, fp.radius)
    win = sliding_window_view(padded, (fp.side, fp.side))
    return win.reshape(img.shape[0] * img.shape[1], fp.size).astype(dtype)


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB at peak 255; +inf for identical inputs."""
    a, b = np.asarray(a), np.asarray(b)
    require_same_shape(a, b)
    mse = float(np.mean((a.astype(np.float64) - b.astype(np.float64)) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(255.0**2 / mse)


_SSIM_SIDE = 11
_SSIM_SIGMA = 1.5
_SSIM_K1 = 0.01
_SSIM_K2 = 0.03
_SSIM_L = 255.0


def _ssim_window() -> np.ndarray:
    half = (_SSIM_SIDE - 1) / 2
    x = np.arange(_SSIM_SIDE) - half
    g = np.exp(-(x**2) / (2.0 * _SSIM_SIGMA**2))
    return g / g.sum()


def _filter_valid(img: np.ndarray, taps: np.ndarray) -> np.ndarray:
    out = sliding_window_view(img, len(taps), axis=0) @ taps
    out = sliding_window_view(out, len(taps), axis=1) @ taps
    return out


def mssim(a: np.ndarray, b: np.ndarray) -> float:
    """Mean SSIM over valid 11x11 Gaussian windows (sigma 1.5, peak 255)."""
    a, b = require_gray(a), require_gray(b)
    require_same_shape(a, b)
    if min(a.shape) < _SSIM_SIDE:
        raise ValueError(f"images must be at least {_SSIM_SIDE}x{_SSIM_SIDE} for mssim")
    g = _ssim_window()
    x = a.astype(np.float64)
    y = b.astype(np.float64)
    c1 = (_SSIM_K1 * _SSIM_L) ** 2
    c2 = (_SSIM_K2 * _SSIM_L) ** 2
    mu_x = _filter_valid(x, g)
    mu_y = _filter_valid(y, g)
    var_x = _filter_valid(x * x, g) - mu_x * mu_x
    var_y = _filter_valid(y * y, g) - mu_y * mu_y
    cov = _filter_valid(x * y, g) - mu_x * mu_y
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    return float(np.mean(num / den))


def add_awgn(img: np.ndarray, sigma: float, seed: int) -> np.ndarray:
    """Add i.i.d. zero-mean Gaussian noise; deterministic per seed, unclipped."""
    img = require_gray(img)
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, sigma, img.shape)
    return (img.astype(np.float64) + noise).astype(np.float32)


# Catmull-Rom cubic kernel, a = -0.5.
def _cubic(t: np.ndarray) -> np.ndarray:
    t = np.abs(t)
    t2, t3 = t * t, t * t * t
    near = 1.5 * t3 - 2.5 * t2 + 1.0
    far = -0.5 * t3 + 2.5 * t2 - 4.0 * t + 2.0
    return np.where(t <= 1.0, near, np.where(t < 2.0, far, 0.0))


def _resample_axis(img: np.ndarray, axis: int, n_out: int, coords: np.ndarray, kernel_scale: float) -> np.ndarray:
    """Cubic resample along one axis at fractional source `coords` (len n_out)."""
    n_in = img.shape[axis]
    reach = int(math.ceil(2.0 * kernel_scale))
    base = np.floor(coords).astype(np.int64)
    offs = np.arange(-reach + 1, reach + 1)
    idx = base[:, None] + offs[None, :]
    w = _cubic((coords[:, None] - idx) / kernel_scale)
    w /= w.sum(axis=1, keepdims=True)
    idx = reflect_index(idx, n_in)
    src = np.moveaxis(img, axis, 0).astype(np.float64)
    out = np.einsum("ot,ot...->o...", w, src[idx])
    return np.moveaxis(out, 0, axis)


def downsample_2x(img: np.ndarray) -> np.ndarray:
    """Antialiased bicubic 2x reduction; output dims are ceil(d / 2)."""
    img = require_gray(img)
    h, w = img.shape
    ho, wo = (h + 1) // 2, (w + 1) // 2
    cy = 2.0 * np.arange(ho) + 0.5
    cx = 2.0 * np.arange(wo) + 0.5
    out = _resample_axis(img, 0, ho, cy, kernel_scale=2.0)
    out = _resample_axis(out, 1, wo, cx, kernel_scale=2.0)
    return out.astype(np.float32)


def upsample_2x(img: np.ndarray, target_shape) -> np.ndarray:
    """Bicubic 2x magnification to an explicit (height, width)."""
    img = require_gray(img)
    ht, wt = int(target_shape[0]), int(target_shape[1])
    cy = (np.arange(ht) + 0.5) / 2.0 - 0.5
    cx = (np.arange(wt) + 0.5) / 2.0 - 0.5
    out = _resample_axis(img, 0, ht, cy, kernel_scale=1.0)
    out = _resample_axis(out, 1, wt, cx, kernel_scale=1.0)
    return out.astype(np.float32)


def bayer_mosaic(rgb: np.ndarray) -> np.ndarray:
    """Sample an RGB image onto an RGGB Bayer grid (even dimensions required)."""
    rgb = require_rgb(rgb)
    h, w = rgb.shape[:2]
    if h % 2 or w % 2:
        raise ValueError(f"Bayer mosaic requires even dimensions, got {(h, w)}")
    out = np.empty((h, w), np.float32)
    out[0::2, 0::2] = rgb[0::2, 0::2, 0]
    out[0::2, 1::2] = rgb[0::2, 1::2, 1]
    out[1::2, 0::2] = rgb[1::2, 0::2, 1]
    out[1::2, 1::2] = rgb[1::2, 1::2, 2]
    return out


def bilinear_demosaic(mosaic: np.ndarray) -> np.ndarray:
    """Reconstruct RGB from an RGGB mosaic by neighbor averaging.

    Missing greens use the 4-neighbor cross; missing red/blue use the
    2-neighbor pair along their sampling row/column or the 4 diagonals.
    Observed samples are passed through untouched.
    """
    mosaic = require_gray(mosaic)
    h, w = mosaic.shape
    if h % 2 or w % 2:
        raise ValueError(f"demosaic requires even dimensions, got {(h, w)}")
    m = reflect_pad(mosaic.astype(np.float64), 1)
    core = m[1:-1, 1:-1]

    cross = 0.25 * (m[:-2, 1:-1] + m[2:, 1:-1] + m[1:-1, :-2] + m[1:-1, 2:])
    horiz = 0.5 * (m[1:-1, :-2] + m[1:-1, 2:])
    vert = 0.5 * (m[:-2, 1:-1] + m[2:, 1:-1])
    diag = 0.25 * (m[:-2, :-2] + m[:-2, 2:] + m[2:, :-2] + m[2:, 2:])

    red = np.empty((h, w), np.float64)
    red[0::2, 0::2] = core[0::2, 0::2]
    red[0::2, 1::2] = horiz[0::2, 1::2]
    red[1::2, 0::2] = vert[1::2, 0::2]
    red[1::2, 1::2] = diag[1::2, 1::2]

    green = np.where(
        (np.add.outer(np.arange(h), np.arange(w)) % 2) == 1, core, cross
    )

    blue = np.empty((h, w), np.float64)
    blue[1::2, 1::2] = core[1::2, 1::2]
    blue[1::2, 0::2] = horiz[1::2, 0::2]
    blue[0::2, 1::2] = vert[0::2, 1::2]
    blue[0::2, 0::2] = diag[0::2, 0::2]

    return np.stack([red, green, blue], axis=-1).astype(np.float32)
