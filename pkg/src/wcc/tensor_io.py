"""Dense C x H x W float32 tensors and their file formats.

A ``Tensor3`` is simply a C-contiguous ``numpy.ndarray`` of dtype float32 and
shape ``(channels, height, width)``.  Element ``(c, i, j)`` lives at flat
offset ``c*H*W + i*W + j``, i.e. plain numpy C order.

Two on-disk formats are supported:

* PGM (``P2`` ASCII and ``P5`` binary), loaded as a single channel scaled into
  ``[0, 1]`` by ``maxval``.
* Raw little-endian float32 with no header, in the same channel-major,
  row-major order as the in-memory layout.
"""

from __future__ import annotations

import os
from typing import Union

import numpy as np

Tensor3 = np.ndarray
PathLike = Union[str, os.PathLike]

_SPLITMIX_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_SPLITMIX_M1 = np.uint64(0xBF58476D1CE4E5B9)
_SPLITMIX_M2 = np.uint64(0x94D049BB133111EB)


class PGMError(ValueError):
    """Base class for PGM parse failures; ``offset`` is the byte position."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class PGMMagicError(PGMError):
    pass


class PGMHeaderError(PGMError):
    pass


class PGMTruncatedError(PGMError):
    pass


class RawSizeError(ValueError):
    def __init__(self, expected: int, actual: int):
        super().__init__(f"raw file size mismatch: expected {expected} bytes, got {actual}")
        self.expected = expected
        self.actual = actual


def as_tensor3(x, copy: bool = False) -> Tensor3:
    """Coerce ``x`` to a float32 C x H x W array (2-D input gains a channel axis)."""
    arr = np.array(x, dtype=np.float32, order="C") if copy else np.ascontiguousarray(x, dtype=np.float32)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3:
        raise ValueError(f"expected a 3-D (C, H, W) tensor, got shape {arr.shape}")
    if min(arr.shape) < 1:
        raise ValueError(f"all tensor dimensions must be positive, got {arr.shape}")
    return arr


def _header_tokens(buf: bytes, count: int):
    """Read ``count`` whitespace separated header tokens, skipping ``#`` comments.

    Returns the tokens with their start offsets and the offset just past the
    last token.
    """
    tokens = []
    pos = 0
    n = len(buf)
    while len(tokens) < count:
        while pos < n and buf[pos : pos + 1].isspace():
            pos += 1
        if pos < n and buf[pos : pos + 1] == b"#":
            while pos < n and buf[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        if pos >= n:
            raise PGMTruncatedError("header ended early", pos)
        start = pos
        while pos < n and not buf[pos : pos + 1].isspace() and buf[pos : pos + 1] != b"#":
            pos += 1
        tokens.append((buf[start:pos], start))
    return tokens, pos


def _header_int(token: bytes, offset: int, what: str) -> int:
    try:
        return int(token.decode("ascii"))
    except (UnicodeDecodeError, ValueError):
        raise PGMHeaderError(f"malformed {what} {token!r}", offset) from None


def parse_pgm(buf: bytes) -> Tensor3:
    if buf[:2] not in (b"P2", b"P5"):
        raise PGMMagicError(f"unsupported magic number {buf[:2]!r}", 0)
    magic = buf[:2]
    tokens, end = _header_tokens(buf[2:], 3)
    (tw, ow), (th, oh), (tm, om) = tokens
    ow, oh, om = ow + 2, oh + 2, om + 2
    width = _header_int(tw, ow, "width")
    height = _header_int(th, oh, "height")
    maxval = _header_int(tm, om, "maxval")
    if width <= 0 or height <= 0:
        raise PGMHeaderError(f"invalid dimensions {width}x{height}", ow)
    if not 0 < maxval <= 65535:
        raise PGMHeaderError("invalid maxval", om)
    end += 2
    npix = width * height

    if magic == b"P5":
        # exactly one whitespace byte separates maxval from the payload
        if end >= len(buf) or not buf[end : end + 1].isspace():
            raise PGMTruncatedError("missing whitespace before pixel data", end)
        start = end + 1
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        need = npix * dtype.itemsize
        if len(buf) - start < need:
            raise PGMTruncatedError(f"pixel data needs {need} bytes, found {len(buf) - start}", len(buf))
        pixels = np.frombuffer(buf, dtype=dtype, count=npix, offset=start).astype(np.float64)
    else:
        fields = buf[end:].split()
        if len(fields) < npix:
            raise PGMTruncatedError(f"expected {npix} samples, found {len(fields)}", len(buf))
        try:
            pixels = np.array([int(f) for f in fields[:npix]], dtype=np.float64)
        except ValueError:
            bad = next(f for f in fields[:npix] if not f.isdigit())
            raise PGMHeaderError(f"malformed sample {bad!r}", buf.find(bad, end)) from None

    if np.any(pixels > maxval):
        raise PGMHeaderError("sample exceeds maxval", end)
    return (pixels / maxval).astype(np.float32).reshape(1, height, width)


def load_pgm(path: PathLike) -> Tensor3:
    """Load a P2/P5 PGM file as a 1 x H x W tensor scaled into [0, 1]."""
    with open(path, "rb") as fh:
        return parse_pgm(fh.read())


def save_pgm(tensor: Tensor3, path: PathLike, maxval: int = 255) -> None:
    """Write channel 0 of ``tensor`` (values clipped to [0, 1]) as a binary P5 PGM."""
    t = as_tensor3(tensor)
    img = np.clip(t[0].astype(np.float64), 0.0, 1.0) * maxval
    img = np.floor(img + 0.5)
    dtype = ">u2" if maxval > 255 else "u1"
    with open(path, "wb") as fh:
        fh.write(f"P5\n{t.shape[2]} {t.shape[1]}\n{maxval}\n".encode("ascii"))
        fh.write(img.astype(dtype).tobytes())


def load_raw(path: PathLike, channels: int, height: int, width: int) -> Tensor3:
    expected = 4 * channels * height * width
    actual = os.path.getsize(path)
    if actual != expected:
        raise RawSizeError(expected, actual)
    data = np.fromfile(path, dtype="<f4")
    return data.astype(np.float32).reshape(channels, height, width)


def save_raw(tensor: Tensor3, path: PathLike) -> None:
    as_tensor3(tensor).astype("<f4").tofile(path)


def splitmix64(counter: np.ndarray) -> np.ndarray:
    """SplitMix64 output function applied to a uint64 counter array."""
    z = np.asarray(counter, dtype=np.uint64).copy()
    z ^= z >> np.uint64(30)
    z *= _SPLITMIX_M1
    z ^= z >> np.uint64(27)
    z *= _SPLITMIX_M2
    z ^= z >> np.uint64(31)
    return z


def random_tensor(channels: int, height: int, width: int, seed: int = 0) -> Tensor3:
    """Deterministic uniform values in [-1, 1].

    Element ``n`` (flat index) is ``2 * u - 1`` rounded to float32, where
    ``u = (splitmix64(seed*2**32 + (n+1)*0x9E3779B97F4A7C15) >> 11) / 2**53``,
    all arithmetic modulo 2**64.  This is the standard SplitMix64 stream
    started at state ``seed * 2**32``, so any implementation of SplitMix64
    reproduces the same tensor.
    """
    n = channels * height * width
    base = np.uint64((int(seed) << 32) & 0xFFFFFFFFFFFFFFFF)
    with np.errstate(over="ignore"):
        counter = base + np.arange(1, n + 1, dtype=np.uint64) * _SPLITMIX_GAMMA
        bits = splitmix64(counter) >> np.uint64(11)
    u = bits.astype(np.float64) * 2.0**-53
    return (2.0 * u - 1.0).astype(np.float32).reshape(channels, height, width)
