"""Deterministic synthetic test images with photo-like local structure.

Mixes smooth shading, oriented step edges, curved contours, windowed
oriented textures, and fine grain so the structure-tensor features cover
the orientation/strength/coherence bins that filter selection uses.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import gaussian_filter


def gray_image(seed: int, size: int = 512) -> np.ndarray:
    rng = np.random.default_rng(seed)
    h = w = size
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    img = np.full((h, w), 128.0)

    # Smooth shading: large soft bumps.
    for _ in range(6):
        cy, cx = rng.uniform(0, h), rng.uniform(0, w)
        s = rng.uniform(size / 8, size / 3)
        img += rng.uniform(-35, 35) * np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * s * s))

    # Straight edges at random orientations and sharpness.
    for _ in range(10):
        theta = rng.uniform(0, np.pi)
        d = (xx - rng.uniform(0, w)) * np.cos(theta) + (yy - rng.uniform(0, h)) * np.sin(theta)
        img += rng.uniform(20, 55) * rng.choice([-1, 1]) * np.tanh(d / rng.uniform(0.8, 3.0))

    # Curved contours: ring-shaped steps.
    for _ in range(5):
        cy, cx = rng.uniform(0, h), rng.uniform(0, w)
        radius = rng.uniform(size / 12, size / 3)
        d = np.hypot(yy - cy, xx - cx) - radius
        img += rng.uniform(15, 40) * rng.choice([-1, 1]) * np.tanh(d / rng.uniform(1.0, 2.5))

    # Windowed oriented textures.
    for _ in range(4):
        theta = rng.uniform(0, np.pi)
        wavelength = rng.uniform(5.0, 14.0)
        phase = rng.uniform(0, 2 * np.pi)
        cy, cx = rng.uniform(0, h), rng.uniform(0, w)
        s = rng.uniform(size / 10, size / 4)
        window = np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * s * s))
        carrier = np.sin(2 * np.pi * (xx * np.cos(theta) + yy * np.sin(theta)) / wavelength + phase)
        img += rng.uniform(8, 20) * window * carrier

    # Fine grain.
    img += gaussian_filter(rng.normal(0, 5.0, (h, w)), 1.2)

    return np.clip(img, 2.0, 253.0).astype(np.float32)


def rgb_image(seed: int, size: int = 512) -> np.ndarray:
    rng = np.random.default_rng(seed + 7919)
    base = gray_image(seed, size).astype(np.float64)
    h = w = size
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    channels = []
    for _ in range(3):
        tint = np.zeros((h, w))
        for _ in range(3):
            cy, cx = rng.uniform(0, h), rng.uniform(0, w)
            s = rng.uniform(size / 6, size / 2)
            tint += rng.uniform(-28, 28) * np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * s * s))
        channels.append(np.clip(base * rng.uniform(0.8, 1.1) + tint, 2.0, 253.0))
    return np.stack(channels, axis=-1).astype(np.float32)
