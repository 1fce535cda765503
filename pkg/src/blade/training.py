"""Closed-form filter learning from observed/target pairs.

Every pixel contributes one regression sample (patch, target value) to the
bucket its quantized features select. Buckets accumulate a compact Gram
matrix so training streams over any amount of data in fixed memory, and
each filter solves an independent regularized least-squares system.
"""

from __future__ import annotations

import warnings

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.linalg import cho_factor, cho_solve

from .bank import BankStats, FilterBank, delta_filter
from .image import Footprint, luma, reflect_pad, require_same_shape
from .quantizer import QuantizerSpec, selection_map

CONDITION_LIMIT = 1e12
_CHUNK_PIXELS = 1 << 15


def build_gradient_q(fp, lam: float, arity: int = 1) -> np.ndarray:
    """Graph-Laplacian smoothness penalty: h'Qh = lam * sum (h_i - h_j)^2
    over unordered 4-neighbor tap pairs, block-diagonal across input streams.

    `fp` is a Footprint or an (N, 2) array of tap offsets.
    """
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    offsets = fp.offsets() if isinstance(fp, Footprint) else np.asarray(fp)
    n = len(offsets)
    block = np.zeros((n, n), np.float64)
    index = {tuple(off): i for i, off in enumerate(offsets)}
    for i, (dy, dx) in enumerate(offsets):
        for nb in ((dy + 1, dx), (dy, dx + 1)):
            j = index.get(nb)
            if j is None:
                continue
            block[i, i] += lam
            block[j, j] += lam
            block[i, j] -= lam
            block[j, i] -= lam
    if arity == 1:
        return block
    q = np.zeros((arity * n, arity * n), np.float64)
    for s in range(arity):
        q[s * n : (s + 1) * n, s * n : (s + 1) * n] = block
    return q


class GramAccumulator:
    """Per-bucket Gram matrices over [patch | target(s)] sample vectors.

    G[k] is (D + T, D + T) float64 and partitions as [A'A, A'b; b'A, b'b]
    for each of the T target columns; counts[k] is the number of samples.
    """

    def __init__(self, num_buckets: int, dim: int, num_targets: int = 1):
        self.num_buckets = num_buckets
        self.dim = dim
        self.num_targets = num_targets
        side = dim + num_targets
        self.gram = np.zeros((num_buckets, side, side), np.float64)
        self.counts = np.zeros(num_buckets, np.int64)

    def add_samples(self, x: np.ndarray, sel: np.ndarray):
        """Accumulate rows of x (M, D+T) into the buckets sel (M,) names."""
        order = np.argsort(sel, kind="stable")
        xs = x[order]
        ss = sel[order]
        buckets, starts = np.unique(ss, return_index=True)
        ends = np.append(starts[1:], len(ss))
        for k, s, e in zip(buckets, starts, ends):
            block = xs[s:e]
            self.gram[k] += block.T @ block
            self.counts[k] += e - s

    def merge(self, other: "GramAccumulator"):
        """Exact combination of independently accumulated shards."""
        self.gram += other.gram
        self.counts += other.counts

    def ata(self, k: int) -> np.ndarray:
        return self.gram[k, : self.dim, : self.dim]

    def atb(self, k: int, target: int = 0) -> np.ndarray:
        return self.gram[k, : self.dim, self.dim + target]

    def btb(self, k: int, target: int = 0) -> float:
        return float(self.gram[k, self.dim + target, self.dim + target])


def _as_streams(observed) -> list[np.ndarray]:
    if isinstance(observed, (tuple, list)):
        return [np.asarray(s) for s in observed]
    observed = np.asarray(observed)
    if observed.ndim == 3:
        return [observed[..., c] for c in range(observed.shape[2])]
    return [observed]


def _target_columns(target) -> list[np.ndarray]:
    target = np.asarray(target)
    if target.ndim == 3:
        return [target[..., c] for c in range(target.shape[2])]
    return [target]


def accumulate(acc: GramAccumulator, observed, target, selection: np.ndarray, fp: Footprint):
    """Append every pixel's (patch, target) sample to its selected bucket.

    `observed` may be one grayscale image, a tuple of same-size stream
    images, or an RGB image; patches of the streams are concatenated
    stream-major. Accumulation runs in float64, chunked over pixel rows.
    """
    streams = _as_streams(observed)
    targets = _target_columns(target)
    if len(streams) * fp.size != acc.dim or len(targets) != acc.num_targets:
        raise ValueError("accumulator shape does not match streams/targets")
    h, w = streams[0].shape
    for s in streams[1:]:
        require_same_shape(streams[0], s)
    for t in targets:
        require_same_shape(streams[0], t)
    if selection.shape != (h, w):
        raise ValueError(f"selection map shape {selection.shape} does not match image {(h, w)}")

    r = fp.radius
    padded = [reflect_pad(s.astype(np.float64), r) for s in streams]
    sel_flat = selection.reshape(-1)
    rows_per_chunk = max(1, _CHUNK_PIXELS // w)
    x = np.empty((rows_per_chunk * w, acc.dim + acc.num_targets), np.float64)
    for y0 in range(0, h, rows_per_chunk):
        y1 = min(y0 + rows_per_chunk, h)
        m = (y1 - y0) * w
        block = x[:m]
        for i, p in enumerate(padded):
            win = sliding_window_view(p[y0 : y1 + 2 * r], (fp.side, fp.side))
            block[:, i * fp.size : (i + 1) * fp.size] = win.reshape(m, fp.size)
        for t, tgt in enumerate(targets):
            block[:, acc.dim + t] = tgt[y0:y1].reshape(-1)
        acc.add_samples(block, sel_flat[y0 * w : y1 * w])


def augment_d4(observed, target):
    """The eight axial-flip/rotation variants of a training pair.

    Order: rotations by 0/90/180/270 degrees, then the horizontal flip of
    each, applied identically to observed and target.
    """

    def variants(item):
        if isinstance(item, (tuple, list)):
            per = [variants(s) for s in item]
            return [tuple(v[i] for v in per) for i in range(8)]
        out = [np.ascontiguousarray(np.rot90(item, k)) for k in range(4)]
        out += [np.ascontiguousarray(np.fliplr(np.rot90(item, k))) for k in range(4)]
        return out

    return list(zip(variants(observed), variants(target)))


def solve_bucket(
    acc: GramAccumulator,
    k: int,
    q: np.ndarray,
    target: int = 0,
    fallback: np.ndarray | None = None,
):
    """Solve one bucket's regularized normal equations.

    Returns (filter, residual_variance, coeff_stddev, count). The residual
    variance and stddevs are NaN when the sample count cannot support them
    (count <= D) or when the system was too ill-conditioned and the filter
    fell back to the identity delta.
    """
    d = acc.dim
    m = int(acc.counts[k])
    nan_vec = np.full(d, np.nan)
    if m == 0:
        if not q.any():
            raise np.linalg.LinAlgError(
                f"bucket {k}: singular system (no samples and no regularization)"
            )
        return np.zeros(d), float("nan"), nan_vec, 0

    lhs = q + acc.ata(k)
    atb = acc.atb(k, target)
    cond = np.linalg.cond(lhs)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        warnings.warn(f"bucket {k}: condition estimate {cond:.3g}, using identity fallback")
        h = fallback if fallback is not None else _center_delta(d)
        return h.astype(np.float64), float("nan"), nan_vec, m
    factor = cho_factor(lhs, lower=True)
    h = cho_solve(factor, atb)

    if m > d:
        residual = acc.btb(k, target) - 2.0 * h @ atb + h @ acc.ata(k) @ h
        sigma2 = max(0.0, residual / (m - d))
        inv_diag = np.diagonal(cho_solve(factor, np.eye(d)))
        stddev = np.sqrt(np.maximum(sigma2 * inv_diag, 0.0))
    else:
        sigma2, stddev = float("nan"), nan_vec
    return h, sigma2, stddev, m


def _center_delta(d: int) -> np.ndarray:
    h = np.zeros(d)
    h[_center_index(d)] = 1.0
    return h


def _center_index(d: int) -> int:
    return d // 2


def _selection_source(streams: list[np.ndarray], arity: int) -> np.ndarray:
    if arity == 3:
        return luma(np.stack(streams, axis=-1))
    return streams[0]


def accumulate_corpus(
    corpus,
    spec: QuantizerSpec,
    fp: Footprint,
    arity: int = 1,
    augment: bool = True,
) -> GramAccumulator:
    """Run selection and Gram accumulation over all (observed, target) pairs.

    Selection is computed on the first stream (grayscale/two-stream) or the
    luma of the observed RGB image (color).
    """
    num_targets = 3 if arity == 3 else 1
    acc = GramAccumulator(spec.num_filters, arity * fp.size, num_targets)
    for observed, target in corpus:
        pairs = augment_d4(observed, target) if augment else [(observed, target)]
        for obs_v, tgt_v in pairs:
            streams = _as_streams(obs_v)
            if len(streams) != arity:
                raise ValueError(f"expected {arity} input stream(s), got {len(streams)}")
            sel = selection_map(_selection_source(streams, arity), spec)
            accumulate(acc, obs_v, tgt_v, sel, fp)
    return acc


def solve_bank(acc: GramAccumulator, spec: QuantizerSpec, fp: Footprint, lam: float, arity: int) -> FilterBank:
    """Solve every bucket of an accumulator into a trained FilterBank."""
    q = build_gradient_q(fp, lam, arity)
    nbanks = acc.num_targets
    k_total, d = acc.num_buckets, acc.dim
    filters = np.zeros((nbanks, k_total, d), np.float32)
    stats = []
    for b in range(nbanks):
        fallback = delta_filter(fp, arity, stream=b if nbanks == 3 else 0).astype(np.float64)
        counts = np.zeros(k_total, np.uint64)
        resvar = np.zeros(k_total, np.float32)
        stddev = np.zeros((k_total, d), np.float32)
        for k in range(k_total):
            h, sigma2, sd, m = solve_bucket(acc, k, q, target=b, fallback=fallback)
            filters[b, k] = h
            resvar[k] = sigma2
            stddev[k] = sd
            counts[k] = m
        stats.append(BankStats(counts, resvar, stddev))
    return FilterBank(spec, fp, arity, filters, stats)


def train(
    corpus,
    spec: QuantizerSpec,
    fp: Footprint,
    lam: float = 2.0,
    arity: int = 1,
    augment: bool = True,
) -> FilterBank:
    """Full training pass: selection, D4 augmentation, accumulation, solves.

    `corpus` yields (observed, target) pairs; for two-stream banks observed
    is a (current, coarse) tuple, for color banks both are RGB images.
    Deterministic given the corpus order.
    """
    corpus = list(corpus)
    if not corpus:
        raise ValueError("training corpus is empty")
    acc = accumulate_corpus(corpus, spec, fp, arity, augment)
    return solve_bank(acc, spec, fp, lam, arity)


def train_report(bank: FilterBank) -> str:
    """Human-readable per-bucket sample counts, residual variance, flags."""
    if bank.stats is None:
        return "untrained bank (no statistics)\n"
    lines = [
        f"filters: {bank.num_filters}  taps: {bank.dim}  output banks: {bank.num_banks}",
    ]
    for b, st in enumerate(bank.stats):
        flagged = st.flagged(bank.dim)
        lines.append(
            f"bank {b}: total samples {int(st.counts.sum())}, flagged buckets {int(flagged.sum())}/{bank.num_filters}"
        )
        for k in range(bank.num_filters):
            mark = " FLAGGED" if flagged[k] else ""
            lines.append(
                f"  bucket {k:4d}: M={int(st.counts[k]):10d}  sigma_r2={float(st.residual_variance[k]):12.5g}{mark}"
            )
    return "\n".join(lines) + "\n"
