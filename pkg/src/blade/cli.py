"""Command-line interface for training, applying, and evaluating filter banks."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import bank as bank_io
from . import inference, operators, pipelines
from .bank import blend_with_identity
from .image import Footprint, bilinear_demosaic
from .io import read_image, write_image
from .quantizer import QuantizerSpec
from .training import train_report


def _parse_bins(text: str, name: str) -> tuple[int, float, float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"{name} must look like COUNT:LO:HI, got {text!r}")
    return int(parts[0]), float(parts[1]), float(parts[2])


def _parse_op_params(text: str) -> dict:
    out = {}
    if not text:
        return out
    for item in text.split(","):
        key, _, value = item.partition("=")
        if not _:
            raise argparse.ArgumentTypeError(f"op-params entries must be key=value, got {item!r}")
        key = key.strip()
        out[key] = int(value) if key == "steps" else float(value)
    return out


def _num_list(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _quantizer_from_args(args) -> QuantizerSpec:
    s_bins, s_lo, s_hi = _parse_bins(args.strength, "--strength")
    c_bins, c_lo, c_hi = _parse_bins(args.coherence, "--coherence")
    return QuantizerSpec(args.orient, s_bins, (s_lo, s_hi), c_bins, (c_lo, c_hi), args.rho)


def _add_quantizer_flags(p: argparse.ArgumentParser, rho_default: float = 1.2):
    p.add_argument("--fp", type=int, default=7, help="filter footprint side (odd)")
    p.add_argument("--orient", type=int, default=16, help="orientation bin count")
    p.add_argument("--strength", default="5:10:40", help="strength bins as COUNT:LO:HI")
    p.add_argument("--coherence", default="3:0.2:0.8", help="coherence bins as COUNT:LO:HI")
    p.add_argument("--rho", type=float, default=rho_default, help="tensor smoothing scale")
    p.add_argument("--lambda", dest="lam", type=float, default=2.0, help="regularization weight")


def _write_bank(path: str, data: bytes, report: str):
    with open(path, "wb") as f:
        f.write(data)
    report_path = path + ".report.txt"
    with open(report_path, "w") as f:
        f.write(report)
    return report_path


def _cmd_train(args) -> int:
    spec = _quantizer_from_args(args)
    op = operators.FlowParams(**_parse_op_params(args.op_params))
    bank = pipelines.train_task(
        args.task,
        args.manifest,
        spec,
        Footprint(args.fp),
        args.lam,
        op=op,
        sigma=args.sigma,
        seed=args.seed,
    )
    report_path = _write_bank(args.out, bank_io.serialize(bank), train_report(bank))
    print(f"trained {bank.num_filters} filters ({bank.num_banks} bank(s)) -> {args.out}")
    print(f"report -> {report_path}")
    return 0


def _load_bank(path: str):
    with open(path, "rb") as f:
        return bank_io.deserialize(f.read())


def _cmd_apply(args) -> int:
    bank = _load_bank(args.bank)
    img = read_image(args.input)
    if args.alpha is not None:
        bank = blend_with_identity(bank, args.alpha)
    if bank.is_color:
        if img.ndim != 3:
            raise ValueError("color bank requires an RGB input image")
        out = inference.apply_color(bank, img)
    elif img.ndim == 3:
        out = inference.apply_per_channel(bank, img)
    else:
        out = inference.apply(bank, img)
    write_image(args.out, out)
    print(f"filtered {args.input} -> {args.out}")
    return 0


def _cmd_msdenoise_train(args) -> int:
    spec = _quantizer_from_args(args)
    entries = pipelines.read_manifest(args.manifest)
    images = []
    for entry in entries:
        if len(entry) != 1:
            raise ValueError("msdenoise-train manifest lines must have a single clean-image path")
        images.append(pipelines._read_gray(entry[0]))
    banks = pipelines.multiscale_train(
        images, args.levels, spec, Footprint(args.fp), args.lam, args.sigma, args.seed
    )
    report = "".join(
        f"--- level {i} ({'coarsest' if i == 0 else 'finer'}) ---\n" + train_report(b)
        for i, b in enumerate(banks)
    )
    report_path = _write_bank(args.out, pipelines.serialize_cascade(banks), report)
    print(f"trained {len(banks)}-level cascade -> {args.out}")
    print(f"report -> {report_path}")
    return 0


def _cmd_msdenoise_apply(args) -> int:
    with open(args.bank, "rb") as f:
        banks = pipelines.deserialize_cascade(f.read())
    img = read_image(args.input)
    if img.ndim != 2:
        raise ValueError("msdenoise-apply expects a grayscale input image")
    out = pipelines.multiscale_apply(banks, img)
    write_image(args.out, out)
    print(f"denoised {args.input} -> {args.out}")
    return 0


def _cmd_eval(args) -> int:
    ref = read_image(args.ref)
    test = read_image(args.test)
    p, m = pipelines.evaluate_pair(ref, test)
    print(f"PSNR_dB={p:.4f} MSSIM={m:.4f}")
    return 0


def _cmd_bench(args) -> int:
    fp_sides = [int(v) for v in _num_list(args.fp_list)]
    mp_sizes = _num_list(args.mp_list)
    rows, ratios = pipelines.benchmark(fp_sides, mp_sizes, seed=args.seed)
    print(f"{'filter':>8} {'MP':>8} {'seconds':>10} {'MP/s':>10}")
    for row in rows:
        print(f"{row['fp']:>6}x{row['fp']} {row['mp']:>8.2f} {row['seconds']:>10.4f} {row['mps']:>10.2f}")
    for side, ratio in ratios.items():
        print(f"linearity {side}x{side}: time(4MP)/time(1MP) = {ratio:.2f}")
    return 0


def _cmd_demosaic(args) -> int:
    bank = _load_bank(args.bank)
    if not bank.is_color:
        raise ValueError("demosaic requires a color bank (three output banks)")
    mosaic = read_image(args.input)
    if mosaic.ndim != 2:
        raise ValueError("demosaic expects a single-channel mosaic image")
    rgb = bilinear_demosaic(mosaic)
    out = inference.apply_color(bank, rgb)
    write_image(args.out, out)
    print(f"demosaiced {args.input} -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blade",
        description="Trainable edge-adaptive filtering: train filter banks, apply them, and evaluate results.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a filter bank for a task")
    p.add_argument("--task", required=True, choices=pipelines.TASKS)
    p.add_argument("--manifest", required=True, help="corpus manifest file")
    p.add_argument("--out", required=True, help="output bank file")
    _add_quantizer_flags(p)
    p.add_argument("--sigma", type=float, default=20.0, help="AWGN noise level for --task awgn")
    p.add_argument("--op-params", dest="op_params", default="", help="operator params, e.g. dt=0.1,steps=10")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("apply", help="filter an image with a trained bank")
    p.add_argument("--bank", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--alpha", type=float, default=None, help="identity blend factor in [0, 1]")
    p.set_defaults(func=_cmd_apply)

    p = sub.add_parser("msdenoise-train", help="train the multiscale denoising cascade")
    p.add_argument("--levels", type=int, required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    _add_quantizer_flags(p, rho_default=1.7)
    p.add_argument("--sigma", type=float, default=20.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_msdenoise_train)

    p = sub.add_parser("msdenoise-apply", help="denoise an image with a trained cascade")
    p.add_argument("--bank", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_msdenoise_apply)

    p = sub.add_parser("eval", help="report PSNR and MSSIM of a test image against a reference")
    p.add_argument("--ref", required=True)
    p.add_argument("--test", required=True)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("bench", help="measure filtering throughput")
    p.add_argument("--fp-list", dest="fp_list", default="5,7,9,11,13")
    p.add_argument("--mp-list", dest="mp_list", default="0.25,1,4")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("demosaic", help="demosaic an RGGB image with a color bank")
    p.add_argument("--bank", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_demosaic)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
