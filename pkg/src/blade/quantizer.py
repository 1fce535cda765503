"""Bounded uniform quantization of structure-tensor features to a filter index."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit, prange

from .structure_tensor import _eigen_scalar, tensor_field


@dataclass(frozen=True)
class QuantizerSpec:
    """Bin counts and ranges mapping features to a flat index in [0, K).

    The flat layout is strength-major: ((strength_bin * C) + coherence_bin)
    * O + orientation_bin. `rho` is the tensor smoothing scale the selection
    was designed for and travels with the spec.
    """

    orientations: int = 16
    strength_bins: int = 5
    strength_range: tuple[float, float] = (10.0, 40.0)
    coherence_bins: int = 3
    coherence_range: tuple[float, float] = (0.2, 0.8)
    rho: float = 1.2

    def __post_init__(self):
        if min(self.orientations, self.strength_bins, self.coherence_bins) < 1:
            raise ValueError("all bin counts must be >= 1")
        if not self.strength_range[0] < self.strength_range[1]:
            raise ValueError(f"bad strength range {self.strength_range}")
        if not self.coherence_range[0] < self.coherence_range[1]:
            raise ValueError(f"bad coherence range {self.coherence_range}")
        if self.rho <= 0:
            raise ValueError("rho must be > 0")

    @property
    def num_filters(self) -> int:
        return self.orientations * self.strength_bins * self.coherence_bins


def _uniform_bin(value, lo: float, hi: float, count: int) -> np.ndarray:
    v = np.clip(value, lo, hi)
    b = np.floor((v - lo) * (count / (hi - lo))).astype(np.int64)
    return np.minimum(b, count - 1)


def quantize(orientation, strength, coherence, spec: QuantizerSpec):
    """Flat filter index for feature values (arrays or scalars).

    Orientation bins are pi-periodic with horizontal/vertical at bin
    centers (round to nearest center); strength and coherence are clamped
    to their ranges and floor-binned, the top boundary landing in the last
    bin.
    """
    o = spec.orientations
    theta = np.mod(np.asarray(orientation, np.float64), math.pi)
    obin = np.floor(theta * (o / math.pi) + 0.5).astype(np.int64) % o
    sbin = _uniform_bin(strength, *spec.strength_range, spec.strength_bins)
    cbin = _uniform_bin(coherence, *spec.coherence_range, spec.coherence_bins)
    return (sbin * spec.coherence_bins + cbin) * o + obin


@njit(cache=True, parallel=True)
def _features_quantize(a, b, c, out, o_bins, s_lo, s_hi, s_bins, c_lo, c_hi, c_bins):
    # Fused eigen features + binning; mirrors tensor_features and quantize.
    o_scale = o_bins / math.pi
    s_scale = s_bins / (s_hi - s_lo)
    c_scale = c_bins / (c_hi - c_lo)
    for i in prange(a.size):
        lam1, lam2, w1, w2 = _eigen_scalar(a[i], b[i], c[i])
        if lam1 < 0.0:
            lam1 = 0.0
        if lam2 < 0.0:
            lam2 = 0.0
        wt1 = w1 + w2
        wt2 = w2 - w1
        th = math.atan2(wt2, wt1)
        if th > 0.5 * math.pi:
            th -= math.pi
        elif th <= -0.5 * math.pi:
            th += math.pi
        s1 = math.sqrt(lam1)
        s2 = math.sqrt(lam2)
        coh = (s1 - s2) / (s1 + s2) if s1 + s2 > 0.0 else 0.0

        obin = int(math.floor((th % math.pi) * o_scale + 0.5)) % o_bins
        sv = s_lo if s1 < s_lo else (s_hi if s1 > s_hi else s1)
        sbin = int(math.floor((sv - s_lo) * s_scale))
        if sbin > s_bins - 1:
            sbin = s_bins - 1
        cv = c_lo if coh < c_lo else (c_hi if coh > c_hi else coh)
        cbin = int(math.floor((cv - c_lo) * c_scale))
        if cbin > c_bins - 1:
            cbin = c_bins - 1
        out[i] = (sbin * c_bins + cbin) * o_bins + obin


def selection_map(img: np.ndarray, spec: QuantizerSpec) -> np.ndarray:
    """Per-pixel flat filter index, int32 of the image's shape."""
    a, b, c = tensor_field(img, spec.rho)
    sel = np.empty(a.size, np.int32)
    _features_quantize(
        a.reshape(-1),
        b.reshape(-1),
        c.reshape(-1),
        sel,
        spec.orientations,
        *spec.strength_range,
        spec.strength_bins,
        *spec.coherence_range,
        spec.coherence_bins,
    )
    return sel.reshape(a.shape)
