"""End-to-end pipelines: task training, multiscale denoising, eval, bench."""

from __future__ import annotations

import math
import time

import numpy as np

from . import bank as bank_io
from . import inference, operators, training
from .bank import BankFormatError, FilterBank
from .image import (
    Footprint,
    add_awgn,
    bayer_mosaic,
    bilinear_demosaic,
    downsample_2x,
    luma,
    mssim,
    psnr,
    upsample_2x,
)
from .io import read_image
from .quantizer import QuantizerSpec

TASKS = ("bilateral", "tvflow", "etf", "awgn", "pairs", "demosaic")
CASCADE_MAGIC = b"BLDM"


def read_manifest(path: str) -> list[tuple[str, ...]]:
    """Corpus manifest: one path (synthetic tasks) or observed<TAB>target per line."""
    entries = []
    with open(path) as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = tuple(p.strip() for p in line.split("\t") if p.strip())
            if len(parts) not in (1, 2):
                raise ValueError(f"{path}:{lineno}: expected 1 or 2 tab-separated paths")
            entries.append(parts)
    if not entries:
        raise ValueError(f"{path}: manifest lists no images")
    return entries


def _read_gray(path: str) -> np.ndarray:
    img = read_image(path)
    return luma(img) if img.ndim == 3 else img


def build_training_pair(task: str, entry: tuple[str, ...], op: operators.FlowParams, sigma: float, seed: int):
    """Materialize one (observed, target) pair for a task from manifest paths."""
    if task == "pairs":
        if len(entry) != 2:
            raise ValueError("task 'pairs' needs observed<TAB>target manifest lines")
        return _read_gray(entry[0]), _read_gray(entry[1])
    if len(entry) != 1:
        raise ValueError(f"task '{task}' generates its own pairs; manifest lines must have a single path")
    path = entry[0]
    if task == "demosaic":
        rgb = read_image(path)
        if rgb.ndim != 3:
            raise ValueError(f"{path}: demosaic training needs RGB images")
        if rgb.shape[0] % 2 or rgb.shape[1] % 2:
            rgb = rgb[: rgb.shape[0] // 2 * 2, : rgb.shape[1] // 2 * 2]
        return bilinear_demosaic(bayer_mosaic(rgb)), rgb
    src = _read_gray(path)
    if task == "awgn":
        return add_awgn(src, sigma, seed), src
    if task == "bilateral":
        return src, operators.bilateral(src, op.sigma_r, op.sigma_s)
    if task == "tvflow":
        return src, operators.tv_flow(src, op)
    if task == "etf":
        return src, operators.edge_tangent_flow(src, op)
    raise ValueError(f"unknown task {task!r}; expected one of {TASKS}")


def train_task(
    task: str,
    manifest_path: str,
    spec: QuantizerSpec,
    fp: Footprint,
    lam: float,
    op: operators.FlowParams | None = None,
    sigma: float = 20.0,
    seed: int = 0,
) -> FilterBank:
    """Train a bank for one task from a corpus manifest."""
    op = op or operators.FlowParams()
    entries = read_manifest(manifest_path)
    corpus = [
        build_training_pair(task, entry, op, sigma, seed + i) for i, entry in enumerate(entries)
    ]
    arity = 3 if task == "demosaic" else 1
    return training.train(corpus, spec, fp, lam, arity=arity)


# --- multiscale denoising cascade ---------------------------------------


def _pyramid(img: np.ndarray, levels: int) -> list[np.ndarray]:
    pyr = [img]
    for _ in range(levels - 1):
        pyr.append(downsample_2x(pyr[-1]))
    return pyr


def _check_levels(img: np.ndarray, levels: int):
    if levels < 1:
        raise ValueError("need at least one pyramid level")
    limit = int(math.floor(math.log2(min(img.shape[:2]))))
    if levels > limit:
        raise ValueError(f"{levels} levels exceed log2(min dimension) = {limit} for shape {img.shape}")


def multiscale_train(
    clean_images: list[np.ndarray],
    levels: int,
    spec: QuantizerSpec,
    fp: Footprint,
    lam: float,
    sigma: float,
    seed: int = 0,
) -> list[FilterBank]:
    """Train the denoising cascade; returns banks coarsest-first.

    The coarsest level learns a plain single-stream denoiser; each finer
    level learns a two-stream filter over (noisy current level, upsampled
    filtered coarser level), where the coarser result comes from applying
    the banks already trained on this same corpus.
    """
    for img in clean_images:
        _check_levels(img, levels)
    noisy_pyrs = []
    clean_pyrs = []
    for i, clean in enumerate(clean_images):
        noisy_pyrs.append(_pyramid(add_awgn(clean, sigma, seed + i), levels))
        clean_pyrs.append(_pyramid(clean, levels))

    coarsest = levels - 1
    corpus = [(noisy_pyrs[i][coarsest], clean_pyrs[i][coarsest]) for i in range(len(clean_images))]
    banks = [training.train(corpus, spec, fp, lam, arity=1)]
    results = [inference.apply(banks[0], noisy_pyrs[i][coarsest]) for i in range(len(clean_images))]

    for level in range(coarsest - 1, -1, -1):
        ups = [upsample_2x(results[i], noisy_pyrs[i][level].shape) for i in range(len(clean_images))]
        corpus = [
            ((noisy_pyrs[i][level], ups[i]), clean_pyrs[i][level]) for i in range(len(clean_images))
        ]
        banks.append(training.train(corpus, spec, fp, lam, arity=2))
        results = [
            inference.apply_two_stream(banks[-1], noisy_pyrs[i][level], ups[i])
            for i in range(len(clean_images))
        ]
    return banks


def multiscale_apply(banks: list[FilterBank], img: np.ndarray) -> np.ndarray:
    """Run the cascade (banks coarsest-first) bottom-up over an image."""
    levels = len(banks)
    _check_levels(img, levels)
    pyr = _pyramid(img, levels)
    result = inference.apply(banks[0], pyr[levels - 1])
    for j, bank in enumerate(banks[1:], start=1):
        level = levels - 1 - j
        up = upsample_2x(result, pyr[level].shape)
        result = inference.apply_two_stream(bank, pyr[level], up)
    return result


def serialize_cascade(banks: list[FilterBank]) -> bytes:
    if not 1 <= len(banks) <= 255:
        raise ValueError("cascade must hold 1..255 banks")
    parts = [CASCADE_MAGIC, bytes([len(banks)])]
    parts += [bank_io.serialize(b) for b in banks]
    return b"".join(parts)


def deserialize_cascade(data: bytes) -> list[FilterBank]:
    if len(data) < 5:
        raise BankFormatError("truncated cascade container")
    if data[:4] != CASCADE_MAGIC:
        raise BankFormatError(f"bad cascade magic {data[:4]!r}, expected {CASCADE_MAGIC!r}")
    count = data[4]
    if count < 1:
        raise BankFormatError("cascade container lists zero banks")
    banks = []
    offset = 5
    for _ in range(count):
        bank, offset = bank_io._deserialize_at(data, offset)
        banks.append(bank)
    if offset != len(data):
        raise BankFormatError(f"inconsistent cascade length: expected {offset} bytes, got {len(data)}")
    return banks


# --- evaluation and benchmark -------------------------------------------


def evaluate_pair(ref: np.ndarray, test: np.ndarray) -> tuple[float, float]:
    """(PSNR, MSSIM); color metrics are averaged over channels."""
    if ref.shape != test.shape:
        raise ValueError(f"image dimensions differ: {ref.shape} vs {test.shape}")
    if ref.ndim == 3:
        p = float(np.mean([psnr(ref[..., c], test[..., c]) for c in range(3)]))
        m = float(np.mean([mssim(ref[..., c], test[..., c]) for c in range(3)]))
        return p, m
    return psnr(ref, test), mssim(ref, test)


def benchmark(fp_sides, mp_sizes, seed: int = 0, runs: int = 5):
    """Throughput of `apply` on synthetic noise images.

    Returns (rows, ratios): one row dict per (filter side, image size) with
    median-of-`runs` timings, and per-side linearity ratios time(4 MP) /
    time(1 MP) whenever both sizes were measured.
    """
    rng = np.random.default_rng(seed)
    spec = QuantizerSpec()
    rows = []
    ratios = {}
    for side in fp_sides:
        fp = Footprint(side)
        filters = rng.normal(0.0, 0.02, (1, spec.num_filters, fp.size)).astype(np.float32)
        bank = FilterBank(spec, fp, 1, filters)
        times = {}
        for mp in mp_sizes:
            dim = int(round(math.sqrt(mp * 1e6)))
            img = rng.uniform(0.0, 255.0, (dim, dim)).astype(np.float32)
            inference.apply(bank, img)  # warm cache and JIT
            samples = []
            for _ in range(runs):
                t0 = time.perf_counter()
                inference.apply(bank, img)
                samples.append(time.perf_counter() - t0)
            t = float(np.median(samples))
            actual_mp = dim * dim / 1e6
            times[mp] = t
            rows.append({"fp": side, "mp": actual_mp, "seconds": t, "mps": actual_mp / t})
        if 1 in times and 4 in times:
            ratios[side] = times[4] / times[1]
    return rows, ratios
