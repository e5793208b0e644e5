"""
Image input/output for the recover command
RGB through Pillow (PNG, PPM), 8-band images as a directory of grayscale
band_<k>.png files or as an HPRMSI raw file
"""

import logging
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from errors import ImageFormatError

logger = logging.getLogger(__name__)

RAW_MAGIC = b"HPRMSI"
RAW_VERSION = "v1"
RAW_SUFFIX = ".hprmsi"
BAND_PATTERN = "band_{}.png"
MAX_BANDS = 64


def _to_unit(array: np.ndarray, mode: str) -> np.ndarray:
    peak = 65535.0 if mode.startswith("I") else 255.0
    return array.astype(float) / peak


def _to_uint8(image: np.ndarray) -> np.ndarray:
    return np.round(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)


def read_rgb(path) -> np.ndarray:
    """(H, W, 3) in [0, 1]"""
    try:
        with Image.open(path) as img:
            return _to_unit(np.asarray(img.convert("RGB")), "RGB")
    except (OSError, UnidentifiedImageError) as e:
        raise ImageFormatError(f"Cannot read image {path}: {e}") from e


def write_rgb(path, image: np.ndarray) -> Path:
    path = Path(path)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ImageFormatError(f"Expected an (H, W, 3) image, got shape {image.shape}")
    Image.fromarray(_to_uint8(image), "RGB").save(path)
    return path


def read_band_directory(directory) -> np.ndarray:
    """band_0.png, band_1.png, ... stacked on the last axis"""
    directory = Path(directory)
    bands = []
    for k in range(MAX_BANDS):
        path = directory / BAND_PATTERN.format(k)
        if not path.is_file():
            break
        try:
            with Image.open(path) as img:
                if img.mode not in ("L", "I;16", "I"):
                    img = img.convert("L")
                bands.append(_to_unit(np.asarray(img), img.mode))
        except (OSError, UnidentifiedImageError) as e:
            raise ImageFormatError(f"Cannot read band {path}: {e}") from e
    if not bands:
        raise ImageFormatError(f"No {BAND_PATTERN.format(0)} in {directory}")
    shapes = {band.shape for band in bands}
    if len(shapes) > 1:
        raise ImageFormatError(f"Bands in {directory} differ in size: {sorted(shapes)}")
    return np.stack(bands, axis=-1)


def write_band_directory(directory, image: np.ndarray) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for k in range(image.shape[2]):
        Image.fromarray(_to_uint8(image[..., k]), "L").save(directory / BAND_PATTERN.format(k))
    return directory


def read_raw(path) -> np.ndarray:
    """
    ``HPRMSI v1 <W> <H> <BANDS>`` then W*H*BANDS little-endian float64 values,
    one full H x W plane per band, rows in order
    """
    try:
        with open(path, "rb") as f:
            header = f.readline()
            payload = f.read()
    except OSError as e:
        raise ImageFormatError(f"Cannot read {path}: {e}") from e

    fields = header.split()
    if len(fields) != 5 or fields[0] != RAW_MAGIC or fields[1].decode("ascii", "replace") != RAW_VERSION:
        raise ImageFormatError(f"{path}: bad header {header[:64]!r}")
    try:
        width, height, bands = (int(v) for v in fields[2:])
    except ValueError:
        raise ImageFormatError(f"{path}: non-integer size in header {header!r}") from None
    if width < 1 or height < 1 or bands < 1:
        raise ImageFormatError(f"{path}: empty image {width}x{height}x{bands}")

    expected = width * height * bands
    if len(payload) != 8 * expected:
        raise ImageFormatError(f"{path}: expected {expected} float64 values, found {len(payload) / 8:g}")
    planes = np.frombuffer(payload, dtype="<f8").reshape(bands, height, width)
    return np.ascontiguousarray(planes.transpose(1, 2, 0), dtype=float)


def write_raw(path, image: np.ndarray) -> Path:
    path = Path(path)
    height, width, bands = image.shape
    with open(path, "wb") as f:
        f.write(f"HPRMSI {RAW_VERSION} {width} {height} {bands}\n".encode("ascii"))
        f.write(np.ascontiguousarray(image.transpose(2, 0, 1), dtype="<f8").tobytes())
    return path


def _is_raw(path: Path) -> bool:
    with open(path, "rb") as f:
        return f.read(len(RAW_MAGIC)) == RAW_MAGIC


def read_image(path) -> np.ndarray:
    """Dispatch on what ``path`` holds: band directory, HPRMSI file or an RGB picture"""
    path = Path(path)
    if path.is_dir():
        image = read_band_directory(path)
    elif not path.is_file():
        raise ImageFormatError(f"Input not found: {path}")
    elif _is_raw(path):
        image = read_raw(path)
    else:
        image = read_rgb(path)
    logger.info("Loaded %s: %dx%d, %d channels", path, image.shape[1], image.shape[0], image.shape[2])
    return image


def write_image(out_dir, image: np.ndarray) -> Path:
    """reconstruction.png for RGB; band PNGs plus reconstruction.hprmsi otherwise"""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if image.shape[2] == 3:
        return write_rgb(out_dir / "reconstruction.png", image)
    write_band_directory(out_dir / "reconstruction", image)
    return write_raw(out_dir / f"reconstruction{RAW_SUFFIX}", image)
