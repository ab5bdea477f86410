"""Multi-level 2-D Haar (and periodic Daubechies-2) transforms in Mallat layout.

One analysis level maps each ``H x W`` channel to four half-size quadrants::

    +----+----+
    | LL | LH |
    +----+----+
    | HL | HH |
    +----+----+

For Haar each quadrant is a stride-2 correlation with one of the 2x2 kernels
``1/2 [[1, 1], [1, 1]]`` (LL), ``1/2 [[1, -1], [1, -1]]`` (LH),
``1/2 [[1, 1], [-1, -1]]`` (HL) and ``1/2 [[1, -1], [-1, 1]]`` (HH).  Further
levels recurse on the LL quadrant in place, so a ``d``-level transform keeps
the full ``H x W`` plane with the level-``d`` LL block in its top-left corner.

All arithmetic is done in float64 and the result is rounded to float32 once.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from wcc.tensor_io import Tensor3, as_tensor3


class Bank(str, enum.Enum):
    HAAR = "haar"
    DB2 = "db2"


class Boundary(str, enum.Enum):
    REQUIRE_DIVISIBLE = "require_divisible"
    REFLECT_PAD = "reflect_pad"


class WaveletDimensionError(ValueError):
    pass


_S3 = math.sqrt(3.0)
# Daubechies-2 scaling filter, sum = sqrt(2)
DB2_LOW = np.array([1 + _S3, 3 + _S3, 3 - _S3, 1 - _S3]) / (4 * math.sqrt(2.0))
# quadrature mirror: g[n] = (-1)^n h[L-1-n]
DB2_HIGH = np.array([DB2_LOW[3], -DB2_LOW[2], DB2_LOW[1], -DB2_LOW[0]])


@dataclass(frozen=True)
class WaveletSpec:
    levels: int = 3
    bank: Bank = Bank.HAAR
    boundary: Boundary = Boundary.REQUIRE_DIVISIBLE

    def __post_init__(self):
        object.__setattr__(self, "bank", Bank(self.bank))
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        if int(self.levels) != self.levels or self.levels < 1:
            raise ValueError(f"levels must be a positive integer, got {self.levels}")

    @property
    def block(self) -> int:
        return 2**self.levels


@dataclass(frozen=True)
class CoeffLayout:
    """Geometry of a multi-level coefficient plane.

    ``subbands`` lists ``(level, name, (row0, row1, col0, col1))`` in the
    concatenation order LL_d, LH_d, HL_d, HH_d, LH_{d-1}, ..., HH_1.
    """

    height: int
    width: int
    padded_height: int
    padded_width: int
    levels: int

    @property
    def plane_size(self) -> int:
        return self.padded_height * self.padded_width

    @property
    def subbands(self) -> Tuple[Tuple[int, str, Tuple[int, int, int, int]], ...]:
        out = []
        d = self.levels
        h, w = self.padded_height >> d, self.padded_width >> d
        out.append((d, "LL", (0, h, 0, w)))
        for level in range(d, 0, -1):
            h, w = self.padded_height >> level, self.padded_width >> level
            out.append((level, "LH", (0, h, w, 2 * w)))
            out.append((level, "HL", (h, 2 * h, 0, w)))
            out.append((level, "HH", (h, 2 * h, w, 2 * w)))
        return tuple(out)

    def concat_order(self) -> np.ndarray:
        """Flat plane indices listed in subband concatenation order."""
        parts = []
        for _, _, (r0, r1, c0, c1) in self.subbands:
            rows, cols = np.meshgrid(np.arange(r0, r1), np.arange(c0, c1), indexing="ij")
            parts.append((rows * self.padded_width + cols).ravel())
        return np.concatenate(parts)


def _require_even(shape):
    h, w = shape[-2:]
    if h % 2 or w % 2:
        raise WaveletDimensionError(f"height and width must be even, got {h}x{w}")


def _haar_analysis(x: np.ndarray) -> np.ndarray:
    a = x[..., 0::2, 0::2]
    b = x[..., 0::2, 1::2]
    c = x[..., 1::2, 0::2]
    d = x[..., 1::2, 1::2]
    h, w = a.shape[-2:]
    out = np.empty_like(x)
    out[..., :h, :w] = (a + b + c + d) * 0.5
    out[..., :h, w:] = (a - b + c - d) * 0.5
    out[..., h:, :w] = (a + b - c - d) * 0.5
    out[..., h:, w:] = (a - b - c + d) * 0.5
    return out


def _haar_synthesis(y: np.ndarray) -> np.ndarray:
    h, w = y.shape[-2] // 2, y.shape[-1] // 2
    ll, lh = y[..., :h, :w], y[..., :h, w:]
    hl, hh = y[..., h:, :w], y[..., h:, w:]
    out = np.empty_like(y)
    out[..., 0::2, 0::2] = (ll + lh + hl + hh) * 0.5
    out[..., 0::2, 1::2] = (ll - lh + hl - hh) * 0.5
    out[..., 1::2, 0::2] = (ll + lh - hl - hh) * 0.5
    out[..., 1::2, 1::2] = (ll - lh - hl + hh) * 0.5
    return out


def _periodic_split(x: np.ndarray, axis: int):
    """One periodic filter-bank analysis step along ``axis``."""
    x = np.moveaxis(x, axis, -1)
    n = x.shape[-1]
    k2 = np.arange(0, n, 2)
    low = np.zeros(x.shape[:-1] + (n // 2,))
    high = np.zeros_like(low)
    for tap in range(len(DB2_LOW)):
        xs = x[..., (k2 + tap) % n]
        low += DB2_LOW[tap] * xs
        high += DB2_HIGH[tap] * xs
    return np.moveaxis(low, -1, axis), np.moveaxis(high, -1, axis)


def _periodic_merge(low: np.ndarray, high: np.ndarray, axis: int) -> np.ndarray:
    low = np.moveaxis(low, axis, -1)
    high = np.moveaxis(high, axis, -1)
    half = low.shape[-1]
    n = 2 * half
    k2 = np.arange(0, n, 2)
    out = np.zeros(low.shape[:-1] + (n,))
    for tap in range(len(DB2_LOW)):
        # (k2 + tap) % n has no repeats for a fixed tap, so += is safe
        out[..., (k2 + tap) % n] += DB2_LOW[tap] * low + DB2_HIGH[tap] * high
    return np.moveaxis(out, -1, axis)


def _db2_analysis(x: np.ndarray) -> np.ndarray:
    lw, hw = _periodic_split(x, -1)
    ll, hl = _periodic_split(lw, -2)
    lh, hh = _periodic_split(hw, -2)
    h, w = ll.shape[-2:]
    out = np.empty_like(x)
    out[..., :h, :w] = ll
    out[..., :h, w:] = lh
    out[..., h:, :w] = hl
    out[..., h:, w:] = hh
    return out


def _db2_synthesis(y: np.ndarray) -> np.ndarray:
    h, w = y.shape[-2] // 2, y.shape[-1] // 2
    lw = _periodic_merge(y[..., :h, :w], y[..., h:, :w], -2)
    hw = _periodic_merge(y[..., :h, w:], y[..., h:, w:], -2)
    return _periodic_merge(lw, hw, -1)


_ANALYSIS = {Bank.HAAR: _haar_analysis, Bank.DB2: _db2_analysis}
_SYNTHESIS = {Bank.HAAR: _haar_synthesis, Bank.DB2: _db2_synthesis}


def hwt_level(x: Tensor3) -> Tensor3:
    """One Haar analysis level over the whole plane of every channel."""
    x = as_tensor3(x)
    _require_even(x.shape)
    return _haar_analysis(x.astype(np.float64)).astype(np.float32)


def ihwt_level(y: Tensor3) -> Tensor3:
    """Inverse of :func:`hwt_level` (the transposed stride-2 convolution)."""
    y = as_tensor3(y)
    _require_even(y.shape)
    return _haar_synthesis(y.astype(np.float64)).astype(np.float32)


def reflect_indices(n: int, target: int) -> np.ndarray:
    """Source index for each of ``target`` positions of an end-reflected axis of length ``n``.

    Reflection excludes the edge sample (``..., n-2, n-1, n-2, ...``) and
    repeats with period ``2n - 2`` if the padding exceeds the axis length.
    """
    idx = np.arange(target)
    if n == 1:
        return np.zeros(target, dtype=np.intp)
    period = 2 * n - 2
    m = idx % period
    return np.where(m < n, m, period - m).astype(np.intp)


def layout_for(height: int, width: int, spec: WaveletSpec) -> CoeffLayout:
    block = spec.block
    if spec.boundary is Boundary.REQUIRE_DIVISIBLE:
        if height % block or width % block:
            raise WaveletDimensionError(
                f"{height}x{width} is not divisible by 2**{spec.levels} = {block}"
            )
        ph, pw = height, width
    else:
        if height < 2 or width < 2:
            raise WaveletDimensionError(f"reflect padding needs H, W >= 2, got {height}x{width}")
        ph = -(-height // block) * block
        pw = -(-width // block) * block
    return CoeffLayout(height, width, ph, pw, spec.levels)


def pad_plane(x: np.ndarray, layout: CoeffLayout) -> np.ndarray:
    if (layout.padded_height, layout.padded_width) == (layout.height, layout.width):
        return x
    ri = reflect_indices(layout.height, layout.padded_height)
    ci = reflect_indices(layout.width, layout.padded_width)
    return x[..., ri[:, None], ci[None, :]]


def pad_plane_adjoint(g: np.ndarray, layout: CoeffLayout) -> np.ndarray:
    """Transpose of :func:`pad_plane`: folds padded samples back onto their sources."""
    if (layout.padded_height, layout.padded_width) == (layout.height, layout.width):
        return g
    ri = reflect_indices(layout.height, layout.padded_height)
    ci = reflect_indices(layout.width, layout.padded_width)
    rows = np.zeros(g.shape[:-2] + (layout.height, g.shape[-1]), dtype=g.dtype)
    np.add.at(rows, (..., ri, slice(None)), g)
    out = np.zeros(g.shape[:-2] + (layout.height, layout.width), dtype=g.dtype)
    np.add.at(out, (..., slice(None), ci), rows)
    return out


def forward_planes(x: np.ndarray, spec: WaveletSpec, layout: CoeffLayout) -> np.ndarray:
    """Multi-level analysis on an already padded float64 array (in the trailing two axes)."""
    analysis = _ANALYSIS[spec.bank]
    y = np.array(x, dtype=np.float64)
    h, w = y.shape[-2:]
    for _ in range(spec.levels):
        y[..., :h, :w] = analysis(y[..., :h, :w])
        h, w = h // 2, w // 2
    return y


def inverse_planes(y: np.ndarray, spec: WaveletSpec, layout: CoeffLayout) -> np.ndarray:
    synthesis = _SYNTHESIS[spec.bank]
    x = np.array(y, dtype=np.float64)
    for level in range(spec.levels - 1, -1, -1):
        h, w = layout.padded_height >> level, layout.padded_width >> level
        x[..., :h, :w] = synthesis(x[..., :h, :w])
    return x


def hwt(x: Tensor3, spec: WaveletSpec = WaveletSpec()) -> Tuple[Tensor3, CoeffLayout]:
    """Multi-level forward transform of every channel.

    Returns the coefficient tensor (padded plane under ``reflect_pad``) and
    the layout needed to invert it.
    """
    x = as_tensor3(x)
    layout = layout_for(x.shape[1], x.shape[2], spec)
    padded = pad_plane(x.astype(np.float64), layout)
    return forward_planes(padded, spec, layout).astype(np.float32), layout


def ihwt(y: Tensor3, layout: CoeffLayout, spec: WaveletSpec = WaveletSpec()) -> Tensor3:
    """Invert :func:`hwt`, cropping any reflect padding."""
    y = as_tensor3(y)
    if layout.levels != spec.levels:
        raise WaveletDimensionError(f"layout has {layout.levels} levels, spec has {spec.levels}")
    if y.shape[1:] != (layout.padded_height, layout.padded_width):
        raise WaveletDimensionError(
            f"coefficient plane {y.shape[1:]} does not match layout "
            f"{(layout.padded_height, layout.padded_width)}"
        )
    x = inverse_planes(y, spec, layout)
    return x[:, : layout.height, : layout.width].astype(np.float32)
