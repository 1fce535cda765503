"""Spatially-varying filtering: one selected filter evaluated per pixel.

The hot loop is JIT-compiled and parallel over rows; each output pixel is
computed independently so results are bit-identical for any thread count.
BLADE_THREADS caps the worker count (0 or unset = automatic).
"""

from __future__ import annotations

import os

import numba
import numpy as np
from numba import njit, prange

from .bank import FilterBank
from .image import luma, reflect_pad, require_gray, require_rgb, require_same_shape
from .quantizer import selection_map

_threads_configured = False


def _configure_threads():
    global _threads_configured
    if _threads_configured:
        return
    _threads_configured = True
    env = os.environ.get("BLADE_THREADS", "")
    try:
        n = int(env)
    except ValueError:
        return
    if n > 0:
        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


@njit(parallel=True, cache=True)
def _filter_selected(planes, filters, sel, side, out):
    # planes: (P, H+2r, W+2r); filters: (B, K, P*side*side); out: (B, H, W)
    nbanks = filters.shape[0]
    nplanes = planes.shape[0]
    h, w = sel.shape
    npix = side * side
    for y in prange(h):
        for x in range(w):
            k = sel[y, x]
            for b in range(nbanks):
                acc = 0.0
                for p in range(nplanes):
                    base = p * npix
                    for dy in range(side):
                        row = planes[p, y + dy]
                        for dx in range(side):
                            acc += filters[b, k, base + dy * side + dx] * row[x + dx]
                out[b, y, x] = acc


def _run(bank: FilterBank, streams: list[np.ndarray], sel: np.ndarray) -> np.ndarray:
    _configure_threads()
    r = bank.footprint.radius
    h, w = streams[0].shape
    planes = np.stack([reflect_pad(np.ascontiguousarray(s, np.float32), r) for s in streams])
    out = np.empty((bank.num_banks, h, w), np.float32)
    _filter_selected(planes, bank.filters, sel, bank.footprint.side, out)
    return out


def apply(bank: FilterBank, img: np.ndarray, selection: np.ndarray | None = None) -> np.ndarray:
    """Filter a grayscale image with a single-stream bank.

    The per-pixel filter choice comes from the bank's own quantizer unless
    an explicit selection map is provided.
    """
    img = require_gray(img)
    if bank.arity != 1 or bank.num_banks != 1:
        raise ValueError("apply needs a single-stream grayscale bank")
    if selection is None:
        selection = selection_map(img, bank.quantizer)
    return _run(bank, [img], selection)[0]


def apply_color(bank: FilterBank, rgb: np.ndarray) -> np.ndarray:
    """Filter an RGB image with a color bank (three output banks, RGB patches).

    Selection is computed once from the luma channel; each output channel
    is its bank's inner product with the full RGB patch.
    """
    rgb = require_rgb(rgb)
    if bank.arity != 3 or not bank.is_color:
        raise ValueError("apply_color needs a color bank (arity 3, three output banks)")
    sel = selection_map(luma(rgb), bank.quantizer)
    out = _run(bank, [rgb[..., c] for c in range(3)], sel)
    return np.stack([out[0], out[1], out[2]], axis=-1)


def apply_two_stream(bank: FilterBank, current: np.ndarray, coarse: np.ndarray) -> np.ndarray:
    """Filter a (current, upsampled-coarse) image pair with an arity-2 bank.

    Selection uses the current image only.
    """
    current, coarse = require_gray(current), require_gray(coarse)
    require_same_shape(current, coarse)
    if bank.arity != 2 or bank.num_banks != 1:
        raise ValueError("apply_two_stream needs an arity-2 bank")
    sel = selection_map(current, bank.quantizer)
    return _run(bank, [current, coarse], sel)[0]


def apply_per_channel(bank: FilterBank, rgb: np.ndarray) -> np.ndarray:
    """Run a grayscale bank over each RGB channel with shared luma selection."""
    rgb = require_rgb(rgb)
    if bank.arity != 1 or bank.num_banks != 1:
        raise ValueError("per-channel apply needs a single-stream grayscale bank")
    sel = selection_map(luma(rgb), bank.quantizer)
    chans = [apply(bank, rgb[..., c], selection=sel) for c in range(3)]
    return np.stack(chans, axis=-1)
