"""Portable graymap/pixmap reading and writing (P2, P5 in; P2, P5, P6 out)."""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .errors import DimensionError, DomainError, MalformedHeaderError, NetpbmError, TruncatedDataError, UnsupportedMaxvalError

SUPPORTED_MAXVALS = (255, 65535)


def _header(data: bytes, n_fields: int) -> tuple[list[bytes], int]:
    """Split the first ``n_fields`` whitespace-separated header tokens,
    skipping ``#`` comments. Returns the tokens and the offset just past the
    single whitespace byte that ends the header."""
    tokens = []
    pos = 0
    n = len(data)
    while len(tokens) < n_fields:
        while pos < n and data[pos : pos + 1].isspace():
            pos += 1
        if pos < n and data[pos : pos + 1] == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        if pos >= n:
            raise MalformedHeaderError("header ends prematurely")
        start = pos
        while pos < n and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
            pos += 1
        tokens.append(data[start:pos])
    if pos < n and not data[pos : pos + 1].isspace():
        raise MalformedHeaderError("header must end with a whitespace byte")
    return tokens, pos + 1


def read_netpbm(path) -> tuple[np.ndarray, int]:
    """Raw integer samples (H, W) and maxval of a P2/P5 graymap."""
    data = Path(path).read_bytes()
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise MalformedHeaderError(f"unsupported magic {magic!r}; expected P2 or P5")
    tokens, offset = _header(data, 4)
    if tokens[0] != magic:
        raise MalformedHeaderError(f"bad magic token {tokens[0]!r}")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise MalformedHeaderError(f"non-integer header field in {tokens[1:]!r}") from None
    if width < 1 or height < 1:
        raise MalformedHeaderError(f"invalid dimensions {width}x{height}")
    if maxval not in SUPPORTED_MAXVALS:
        raise UnsupportedMaxvalError(f"maxval {maxval} not supported (use 255 or 65535)")
    count = width * height
    if magic == b"P5":
        dtype = np.dtype(np.uint8) if maxval == 255 else np.dtype(">u2")
        need = count * dtype.itemsize
        raw = data[offset : offset + need]
        if len(raw) < need:
            raise TruncatedDataError(f"expected {need} bytes of pixel data, found {len(raw)}")
        values = np.frombuffer(raw, dtype=dtype).astype(np.int64)
    else:
        body = data[offset:].split()
        if len(body) < count:
            raise TruncatedDataError(f"expected {count} samples, found {len(body)}")
        try:
            values = np.array([int(v) for v in body[:count]], dtype=np.int64)
        except ValueError:
            raise NetpbmError("non-integer sample in plain graymap") from None
    if values.size and (values.min() < 0 or values.max() > maxval):
        raise NetpbmError("sample exceeds maxval")
    return values.reshape(height, width), maxval


def read_pgm(path) -> np.ndarray:
    """Gray image normalised to [0, 1] as ``value / maxval``."""
    values, maxval = read_netpbm(path)
    return values / float(maxval)


def read_mask(path) -> np.ndarray:
    """Binary mask: any nonzero sample is foreground."""
    if _is_netpbm(path):
        return read_netpbm(path)[0] > 0
    return _read_with_pillow(path) > 0


def read_image(path) -> np.ndarray:
    """Read a PGM, or a PNG/other raster when Pillow is installed."""
    if _is_netpbm(path):
        return read_pgm(path)
    return _read_with_pillow(path) / 255.0


def _is_netpbm(path) -> bool:
    with open(path, "rb") as fh:
        return fh.read(2) in (b"P2", b"P5")


def _read_with_pillow(path) -> np.ndarray:
    try:
        from PIL import Image
    except ImportError:  # pragma: no cover - optional extra
        raise NetpbmError(f"{path}: not a PGM file and Pillow is not installed") from None
    with Image.open(path) as im:
        return np.asarray(im.convert("L"), dtype=np.float64)


def _to_samples(image, maxval: int) -> np.ndarray:
    a = np.asarray(image)
    if a.ndim != 2:
        raise DimensionError(f"expected a 2-D raster, got shape {a.shape}")
    if a.dtype == bool:
        return np.where(a, maxval, 0).astype(np.int64)
    a = a.astype(np.float64)
    if a.size and (np.isnan(a).any() or a.min() < 0.0 or a.max() > 1.0):
        raise DomainError("gray values must lie in [0, 1]")
    return np.rint(a * maxval).astype(np.int64)


def write_pgm(image, path, maxval: int = 255, plain: bool = False) -> None:
    """Write a bool mask ({0, maxval}) or a [0, 1] gray raster."""
    if maxval not in SUPPORTED_MAXVALS:
        raise UnsupportedMaxvalError(f"maxval {maxval} not supported")
    samples = _to_samples(image, maxval)
    h, w = samples.shape
    if plain:
        rows = "\n".join(" ".join(str(v) for v in row) for row in samples)
        payload = f"P2\n{w} {h}\n{maxval}\n{rows}\n".encode("ascii")
    else:
        dtype = np.uint8 if maxval == 255 else ">u2"
        payload = f"P5\n{w} {h}\n{maxval}\n".encode("ascii") + samples.astype(dtype).tobytes()
    _atomic_write(path, payload)


def write_ppm(rgb, path) -> None:
    a = np.asarray(rgb, dtype=np.uint8)
    if a.ndim != 3 or a.shape[2] != 3:
        raise DimensionError(f"expected an (H, W, 3) array, got {a.shape}")
    h, w, _ = a.shape
    _atomic_write(path, f"P6\n{w} {h}\n255\n".encode("ascii") + a.tobytes())


def _atomic_write(path, payload: bytes) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".part")
    tmp.write_bytes(payload)
    os.replace(tmp, path)


def render_particles(positions, features=None, size: int = 512) -> np.ndarray:
    """Rasterise particles over [-1, 1]^2 onto a ``size`` x ``size`` RGB canvas.

    Each particle lands on its nearest pixel; x runs along columns and y
    along rows, matching the pixel-to-particle mapping. Particles outside
    the square are skipped. Without features, particles are black on white;
    with features they take their gray level on a dark blue ground.
    """
    pos = np.asarray(positions, dtype=np.float64).reshape(-1, 2)
    col = np.rint((pos[:, 0] + 1.0) * 0.5 * (size - 1))
    row = np.rint((pos[:, 1] + 1.0) * 0.5 * (size - 1))
    keep = np.isfinite(col) & np.isfinite(row) & (col >= 0) & (col < size) & (row >= 0) & (row < size)
    col = col[keep].astype(np.int64)
    row = row[keep].astype(np.int64)
    if features is None:
        canvas = np.full((size, size, 3), 255, dtype=np.uint8)
        canvas[row, col] = 0
    else:
        canvas = np.zeros((size, size, 3), dtype=np.uint8)
        canvas[..., 2] = 60
        gray = np.rint(np.asarray(features, dtype=np.float64)[keep] * 255).astype(np.uint8)
        canvas[row, col] = gray[:, None]
    return canvas
