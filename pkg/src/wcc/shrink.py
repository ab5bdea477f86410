"""Joint hard shrinkage: one shared index set of wavelet positions for all channels."""

from __future__ import annotations

import enum
import math
import struct
from dataclasses import dataclass

import numpy as np


class Norm(str, enum.Enum):
    L2 = "l2"
    L1 = "l1"
    LINF = "linf"


@dataclass(frozen=True, eq=False)
class ShrinkSet:
    """Sorted flat positions ``indices`` kept out of a plane of ``plane_size`` entries."""

    indices: np.ndarray
    plane_size: int

    def __post_init__(self):
        idx = np.ascontiguousarray(self.indices, dtype=np.int64)
        if idx.ndim != 1 or idx.size == 0:
            raise ValueError("a shrink set needs a non-empty 1-D index list")
        if np.any(np.diff(idx) <= 0):
            raise ValueError("indices must be strictly increasing")
        if idx[0] < 0 or idx[-1] >= self.plane_size:
            raise IndexError(f"indices out of range for a plane of {self.plane_size} positions")
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    @property
    def k(self) -> int:
        return int(self.indices.size)

    def __eq__(self, other):
        return (
            isinstance(other, ShrinkSet)
            and self.plane_size == other.plane_size
            and np.array_equal(self.indices, other.indices)
        )

    def mask(self) -> np.ndarray:
        m = np.zeros(self.plane_size, dtype=bool)
        m[self.indices] = True
        return m

    def bitmap(self) -> bytes:
        """One bit per plane position, little-endian bit order within each byte."""
        return np.packbits(self.mask(), bitorder="little").tobytes()

    def to_bytes(self) -> bytes:
        """``u32`` count followed by the sorted ``u32`` indices, little-endian."""
        return struct.pack("<I", self.k) + self.indices.astype("<u4").tobytes()

    @classmethod
    def from_bytes(cls, blob: bytes, plane_size: int) -> "ShrinkSet":
        if len(blob) < 4:
            raise ValueError("shrink set blob shorter than its 4-byte header")
        (count,) = struct.unpack_from("<I", blob)
        if len(blob) != 4 + 4 * count:
            raise ValueError(f"blob declares {count} indices but holds {(len(blob) - 4) / 4}")
        idx = np.frombuffer(blob, dtype="<u4", count=count, offset=4)
        return cls(idx.astype(np.int64), plane_size)


def keep_count(rate: float, plane_size: int) -> int:
    if not 0 < rate <= 1:
        raise ValueError(f"rate must be in (0, 1], got {rate}")
    # ceil on the exact product; float noise like 0.5*6 = 3.0000000000000004 is not a fraction
    k = math.ceil(round(rate * plane_size, 9))
    return min(max(k, 1), plane_size)


def channel_norms(y, norm: Norm = Norm.L2) -> np.ndarray:
    """Norm of the channel vector at each spatial position (an H x W float64 plane)."""
    y = np.asarray(y, dtype=np.float64)
    if y.ndim == 2:
        y = y[None]
    norm = Norm(norm)
    if norm is Norm.L2:
        return np.sqrt(np.sum(y * y, axis=0))
    if norm is Norm.L1:
        return np.sum(np.abs(y), axis=0)
    return np.max(np.abs(y), axis=0)


def select_topk(norms, rate: float) -> ShrinkSet:
    """Keep the ``ceil(rate * n)`` largest norms; ties keep the lower flat index."""
    flat = np.asarray(norms, dtype=np.float64).ravel()
    k = keep_count(rate, flat.size)
    # stable sort on the negated norms keeps equal norms in index order
    order = np.argsort(-flat, kind="stable")
    return ShrinkSet(np.sort(order[:k]), flat.size)


def gather(y, s: ShrinkSet) -> np.ndarray:
    """Compact ``C x k`` block of the kept positions (dtype preserved)."""
    y = np.asarray(y)
    if y.shape[-2] * y.shape[-1] != s.plane_size:
        raise IndexError(f"plane of {y.shape[-2:]} does not match shrink set size {s.plane_size}")
    return y.reshape(y.shape[:-2] + (s.plane_size,))[..., s.indices]


def scatter(v, s: ShrinkSet, height: int, width: int) -> np.ndarray:
    """Zero-filled ``C x height x width`` plane with ``v`` written at the kept positions."""
    v = np.asarray(v)
    if height * width != s.plane_size:
        raise IndexError(f"plane {height}x{width} does not match shrink set size {s.plane_size}")
    if v.shape[-1] != s.k:
        raise ValueError(f"block has {v.shape[-1]} columns, shrink set keeps {s.k}")
    out = np.zeros(v.shape[:-1] + (s.plane_size,), dtype=v.dtype)
    out[..., s.indices] = v
    return out.reshape(v.shape[:-1] + (height, width))
