"""8-bit image file I/O: binary PGM (P5), PPM (P6), and PNG.

Byte value v maps to float v with no renormalization. Saving clamps to
[0, 255] and quantizes with round-half-away-from-zero.
"""

from __future__ import annotations

import os

import numpy as np
from PIL import Image

from .image import require_gray, require_rgb


def quantize_u8(img: np.ndarray) -> np.ndarray:
    return np.floor(np.clip(img, 0.0, 255.0) + 0.5).astype(np.uint8)


def _read_pnm_header(f):
    # Tokens may be separated by whitespace and '#' comments.
    tokens = []
    while len(tokens) < 4:
        ch = f.read(1)
        if not ch:
            raise ValueError("truncated PNM header")
        if ch == b"#":
            while ch not in (b"\n", b""):
                ch = f.read(1)
            continue
        if ch.isspace():
            continue
        tok = ch
        while True:
            ch = f.read(1)
            if not ch or ch.isspace():
                break
            if ch == b"#":
                while ch not in (b"\n", b""):
                    ch = f.read(1)
                break
            tok += ch
        tokens.append(tok)
    magic = tokens[0].decode("ascii")
    width, height, maxval = (int(t) for t in tokens[1:4])
    if maxval <= 0 or maxval > 255:
        raise ValueError(f"only 8-bit PNM supported, got maxval {maxval}")
    return magic, width, height


def read_image(path: str) -> np.ndarray:
    """Read a PGM/PPM/PNG file as float32, (H, W) or (H, W, 3)."""
    ext = os.path.splitext(path)[1].lower()
    if ext in (".pgm", ".ppm"):
        with open(path, "rb") as f:
            magic, width, height = _read_pnm_header(f)
            channels = {"P5": 1, "P6": 3}.get(magic)
            if channels is None or (ext == ".pgm") != (channels == 1):
                raise ValueError(f"{path}: unexpected PNM magic {magic!r}")
            raw = f.read(width * height * channels)
            if len(raw) < width * height * channels:
                raise ValueError(f"{path}: truncated pixel data")
        data = np.frombuffer(raw, np.uint8)
        shape = (height, width) if channels == 1 else (height, width, 3)
        return data.reshape(shape).astype(np.float32)
    if ext == ".png":
        with Image.open(path) as im:
            if im.mode not in ("L", "RGB"):
                raise ValueError(f"{path}: unsupported PNG mode {im.mode}; need 8-bit gray or RGB")
            return np.asarray(im, np.uint8).astype(np.float32)
    raise ValueError(f"{path}: unsupported image extension {ext!r}")


def write_image(path: str, img: np.ndarray):
    """Write float image data to PGM/PPM/PNG chosen by extension."""
    ext = os.path.splitext(path)[1].lower()
    img = np.asarray(img)
    data = quantize_u8(img)
    if ext == ".pgm":
        require_gray(img)
        h, w = data.shape
        with open(path, "wb") as f:
            f.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
            f.write(data.tobytes())
    elif ext == ".ppm":
        require_rgb(img)
        h, w = data.shape[:2]
        with open(path, "wb") as f:
            f.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
            f.write(data.tobytes())
    elif ext == ".png":
        if img.ndim == 2:
            Image.fromarray(data, "L").save(path)
        else:
            require_rgb(img)
            Image.fromarray(data, "RGB").save(path)
    else:
        raise ValueError(f"{path}: unsupported image extension {ext!r}")
