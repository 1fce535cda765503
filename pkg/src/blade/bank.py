"""Trained filter bank container: blending, binary persistence, montages."""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .image import Footprint
from .quantizer import QuantizerSpec

MAGIC = b"BLDE"
VERSION = 1
_HEADER = struct.Struct("<4sIBBHHHHfffff")


class BankFormatError(ValueError):
    """Malformed filter-bank stream (bad magic, version, truncation, layout)."""


@dataclass
class BankStats:
    """Per-filter training statistics for one output bank."""

    counts: np.ndarray  # (K,) uint64 sample counts
    residual_variance: np.ndarray  # (K,) float32, NaN when unreliable
    coeff_stddev: np.ndarray  # (K, D) float32, NaN when unreliable

    def flagged(self, dim: int) -> np.ndarray:
        """Buckets that trained on too little data or fell back."""
        return (self.counts < 2 * dim) | ~np.isfinite(self.residual_variance)


@dataclass
class FilterBank:
    """K filters of length D = arity * N, selected by quantized features.

    `filters` has shape (num_banks, K, D) float32: one output bank for
    grayscale/two-stream filtering, three (R, G, B order) for color. The
    input layout of each filter is stream-major: arity blocks of N row-major
    taps. `stats` is None for hand-constructed banks.
    """

    quantizer: QuantizerSpec
    footprint: Footprint
    arity: int
    filters: np.ndarray
    stats: list[BankStats] | None = None

    def __post_init__(self):
        self.filters = np.ascontiguousarray(self.filters, np.float32)
        if self.arity not in (1, 2, 3):
            raise ValueError(f"arity must be 1, 2, or 3, got {self.arity}")
        expected = (self.quantizer.num_filters, self.arity * self.footprint.size)
        if self.filters.ndim != 3 or self.filters.shape[1:] != expected:
            raise ValueError(
                f"filters shape {self.filters.shape} does not match (banks, K, D) = (*, {expected[0]}, {expected[1]})"
            )
        if self.filters.shape[0] not in (1, 3):
            raise ValueError(f"need 1 or 3 output banks, got {self.filters.shape[0]}")
        if self.stats is not None and len(self.stats) != self.num_banks:
            raise ValueError("one BankStats per output bank required")

    @property
    def num_banks(self) -> int:
        return self.filters.shape[0]

    @property
    def num_filters(self) -> int:
        return self.filters.shape[1]

    @property
    def dim(self) -> int:
        return self.filters.shape[2]

    @property
    def is_color(self) -> bool:
        return self.num_banks == 3


def delta_filter(fp: Footprint, arity: int = 1, stream: int = 0) -> np.ndarray:
    """Identity filter: 1 at the center tap of one input stream."""
    h = np.zeros(arity * fp.size, np.float32)
    h[stream * fp.size + fp.size // 2] = 1.0
    return h


def blend_with_identity(bank: FilterBank, alpha: float) -> FilterBank:
    """Interpolate every filter with the center-delta identity filter.

    alpha = 0 gives the identity bank, alpha = 1 returns the filters
    unchanged. Training statistics do not survive blending.
    """
    if bank.arity != 1 or bank.num_banks != 1:
        raise ValueError("identity blending is defined for single-stream grayscale banks")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    filters = np.float32(alpha) * bank.filters
    filters[0, :, bank.footprint.size // 2] += np.float32(1.0 - alpha)
    return FilterBank(bank.quantizer, bank.footprint, bank.arity, filters, stats=None)


def _empty_stats(k: int, d: int) -> BankStats:
    return BankStats(
        counts=np.zeros(k, np.uint64),
        residual_variance=np.zeros(k, np.float32),
        coeff_stddev=np.zeros((k, d), np.float32),
    )


def serialize(bank: FilterBank) -> bytes:
    """Little-endian binary encoding; hand-built banks get zeroed stats."""
    q = bank.quantizer
    header = _HEADER.pack(
        MAGIC,
        VERSION,
        bank.arity,
        bank.num_banks,
        bank.footprint.side,
        q.orientations,
        q.strength_bins,
        q.coherence_bins,
        q.strength_range[0],
        q.strength_range[1],
        q.coherence_range[0],
        q.coherence_range[1],
        q.rho,
    )
    parts = [header]
    stats = bank.stats or [_empty_stats(bank.num_filters, bank.dim)] * bank.num_banks
    for b in range(bank.num_banks):
        parts.append(np.ascontiguousarray(bank.filters[b], "<f4").tobytes())
        parts.append(np.ascontiguousarray(stats[b].residual_variance, "<f4").tobytes())
        parts.append(np.ascontiguousarray(stats[b].counts, "<u8").tobytes())
        parts.append(np.ascontiguousarray(stats[b].coeff_stddev, "<f4").tobytes())
    return b"".join(parts)


def _deserialize_at(data: bytes, offset: int) -> tuple[FilterBank, int]:
    """Parse one bank record starting at `offset`; returns (bank, end offset)."""
    if len(data) - offset < 4:
        raise BankFormatError(f"truncated stream: expected at least 4 header bytes, got {len(data) - offset}")
    if data[offset : offset + 4] != MAGIC:
        raise BankFormatError(f"bad magic {data[offset:offset + 4]!r}, expected {MAGIC!r}")
    if len(data) - offset < _HEADER.size:
        raise BankFormatError(
            f"truncated header: expected {_HEADER.size} bytes, got {len(data) - offset}"
        )
    (_, version, arity, nbanks, side, o, s, c, s_lo, s_hi, c_lo, c_hi, rho) = _HEADER.unpack_from(data, offset)
    if version != VERSION:
        raise BankFormatError(f"unsupported version {version}, expected {VERSION}")
    if arity not in (1, 2, 3) or nbanks not in (1, 3) or side < 1 or side % 2 == 0 or min(o, s, c) < 1:
        raise BankFormatError(
            f"inconsistent layout: arity={arity} banks={nbanks} side={side} bins=({o},{s},{c})"
        )
    try:
        quant = QuantizerSpec(o, s, (s_lo, s_hi), c, (c_lo, c_hi), rho)
    except ValueError as exc:
        raise BankFormatError(f"inconsistent layout: {exc}") from exc
    fp = Footprint(side)
    k, d = quant.num_filters, arity * fp.size
    per_bank = k * d * 4 + k * 4 + k * 8 + k * d * 4
    end = offset + _HEADER.size + nbanks * per_bank
    if len(data) < end:
        raise BankFormatError(f"truncated stream: expected {end - offset} bytes, got {len(data) - offset}")

    pos = offset + _HEADER.size
    filters = np.empty((nbanks, k, d), np.float32)
    stats = []
    for b in range(nbanks):
        filters[b] = np.frombuffer(data, "<f4", k * d, pos).reshape(k, d)
        pos += k * d * 4
        resvar = np.frombuffer(data, "<f4", k, pos).copy()
        pos += k * 4
        counts = np.frombuffer(data, "<u8", k, pos).copy()
        pos += k * 8
        stddev = np.frombuffer(data, "<f4", k * d, pos).reshape(k, d).copy()
        pos += k * d * 4
        stats.append(BankStats(counts, resvar, stddev))
    trained = any(st.counts.any() for st in stats)
    bank = FilterBank(quant, fp, arity, filters, stats if trained else None)
    return bank, pos


def deserialize(data: bytes) -> FilterBank:
    """Decode one bank, rejecting malformed or trailing bytes."""
    bank, end = _deserialize_at(data, 0)
    if end != len(data):
        raise BankFormatError(f"inconsistent stream length: expected {end} bytes, got {len(data)}")
    return bank


def render_montage(bank: FilterBank, mode: str = "coefficients") -> np.ndarray:
    """Diagnostic tile grid: orientations across, (strength, coherence) down.

    In "coefficients" mode each tile is independently scaled with zero at
    mid-gray. In "stddev" mode tiles share one global scale (so poorly
    trained buckets read as bright) and require a trained bank. Color banks
    render one tile-grid per output bank, stacked vertically, with tile
    colors taken from the per-channel coefficient blocks.
    """
    if mode not in ("coefficients", "stddev"):
        raise ValueError(f"unknown montage mode {mode!r}")
    if mode == "stddev" and bank.stats is None:
        raise ValueError("stddev montage requires a trained bank with statistics")
    q = bank.quantizer
    n = bank.footprint.side
    npix = bank.footprint.size
    rows, cols = q.strength_bins * q.coherence_bins, q.orientations
    grid_h = rows * (n + 1) + 1
    channels = 3 if bank.is_color else 1

    # Two-stream filters show their blocks side by side inside one tile.
    streams = 1 if bank.is_color else bank.arity
    tile_w = streams * n + (streams - 1)
    grid_w = cols * (tile_w + 1) + 1

    if mode == "stddev":
        source = np.stack([st.coeff_stddev for st in bank.stats])
        finite = source[np.isfinite(source)]
        top = float(finite.max()) if finite.size and finite.max() > 0 else 1.0

    groups = []
    for b in range(bank.num_banks):
        canvas = np.zeros((grid_h, grid_w, channels), np.float32)
        for k in range(bank.num_filters):
            row, col = divmod(k, cols)
            y0, x0 = 1 + row * (n + 1), 1 + col * (tile_w + 1)
            coefs = bank.filters[b, k] if mode == "coefficients" else source[b, k]
            tile = np.zeros((n, tile_w, channels), coefs.dtype)
            if bank.is_color:
                tile[:] = coefs.reshape(3, n, n).transpose(1, 2, 0)
            else:
                for s_i, block in enumerate(coefs.reshape(bank.arity, n, n)):
                    tile[:, s_i * (n + 1) : s_i * (n + 1) + n, 0] = block
            if mode == "coefficients":
                peak = float(np.abs(tile).max())
                scale = 127.5 / peak if peak > 0 else 0.0
                tile = 127.5 + tile * scale
            else:
                tile = np.where(np.isfinite(tile), tile * (255.0 / top), np.float32(255.0))
            canvas[y0 : y0 + n, x0 : x0 + tile_w] = tile
        groups.append(canvas[:-1] if b < bank.num_banks - 1 else canvas)
    out = np.concatenate(groups, axis=0)
    return out[..., 0] if channels == 1 else out
