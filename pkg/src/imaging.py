"""
Image helpers for the recovery pipeline: channel mapping, patch tiling,
PSNR and synthetic test images
"""

from __future__ import annotations

import math
from typing import Iterator, List, Tuple

import numpy as np

from errors import ImageFormatError

RGB_CHANNELS = 3
MSI_BANDS = 8


def algebra_dim_for(channels: int) -> int:
    """RGB goes to pure quaternions, 8 bands to octonions"""
    if channels == RGB_CHANNELS:
        return 4
    if channels == MSI_BANDS:
        return 8
    raise ImageFormatError(f"Unsupported channel count {channels}: expected 3 (RGB) or 8 (spectral bands)")


def to_hypercomplex(image: np.ndarray) -> np.ndarray:
    """(H, W, 3) -> (H, W, 4) with zero real part; (H, W, 8) unchanged"""
    image = np.asarray(image, dtype=float)
    if image.ndim != 3:
        raise ImageFormatError(f"Expected an (H, W, C) image, got shape {image.shape}")
    dim = algebra_dim_for(image.shape[2])
    if dim == image.shape[2]:
        return image.copy()
    out = np.zeros(image.shape[:2] + (dim,))
    out[..., 1:] = image
    return out


def from_hypercomplex(signal: np.ndarray, channels: int) -> np.ndarray:
    """Inverse of to_hypercomplex; the real part of an RGB quaternion is dropped"""
    if channels == RGB_CHANNELS:
        return signal[..., 1:4].copy()
    return signal[..., :channels].copy()


def pad_to_multiple(image: np.ndarray, patch: int) -> np.ndarray:
    """Edge-pad height and width up to multiples of ``patch``"""
    height, width = image.shape[:2]
    pad_h = -height % patch
    pad_w = -width % patch
    if not pad_h and not pad_w:
        return image
    return np.pad(image, ((0, pad_h), (0, pad_w), (0, 0)), mode="edge")


def tiles(shape: Tuple[int, int], patch: int) -> Iterator[Tuple[int, int]]:
    """Top-left corners of the patches covering a padded image, row-major"""
    for top in range(0, shape[0], patch):
        for left in range(0, shape[1], patch):
            yield top, left


def split_patches(image: np.ndarray, patch: int) -> List[np.ndarray]:
    if image.shape[0] % patch or image.shape[1] % patch:
        raise ImageFormatError(f"Image {image.shape[:2]} does not tile into {patch}x{patch} patches")
    return [image[top:top + patch, left:left + patch].copy() for top, left in tiles(image.shape[:2], patch)]


def stitch_patches(patches: List[np.ndarray], shape: Tuple[int, int], patch: int) -> np.ndarray:
    out = np.zeros(tuple(shape) + patches[0].shape[2:])
    for (top, left), block in zip(tiles(shape, patch), patches):
        out[top:top + patch, left:left + patch] = block
    return out


def psnr(reference: np.ndarray, estimate: np.ndarray, peak: float = 1.0) -> float:
    """10 log10(peak^2 / MSE) over all channels; inf when the two agree exactly"""
    reference = np.asarray(reference, dtype=float)
    estimate = np.asarray(estimate, dtype=float)
    if reference.shape != estimate.shape:
        raise ImageFormatError(f"PSNR shape mismatch: {reference.shape} vs {estimate.shape}")
    mse = float(np.mean((reference - estimate) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak ** 2 / mse)


def synthetic_rgb(size: int) -> np.ndarray:
    """Smooth colour gradient in [0, 1]"""
    u, v = np.meshgrid(np.linspace(0.0, 1.0, size), np.linspace(0.0, 1.0, size), indexing="ij")
    red = u
    green = v
    blue = 0.5 + 0.5 * np.sin(np.pi * (u + v))
    return np.clip(np.stack([red, green, blue], axis=-1), 0.0, 1.0)


def synthetic_msi(size: int, bands: int = MSI_BANDS) -> np.ndarray:
    """Band b is a tilted gradient whose angle turns with b, values in [0, 1]"""
    u, v = np.meshgrid(np.linspace(0.0, 1.0, size), np.linspace(0.0, 1.0, size), indexing="ij")
    layers = []
    for b in range(bands):
        theta = np.pi * b / bands
        layers.append(0.5 + 0.5 * np.cos(np.pi * (math.cos(theta) * u + math.sin(theta) * v) + b))
    return np.clip(np.stack(layers, axis=-1), 0.0, 1.0)
