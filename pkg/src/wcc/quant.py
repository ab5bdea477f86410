"""Per-layer uniform quantization with straight-through gradients.

The quantizer scales by the clipping value ``alpha``, clips to ``[0, 1]``
(unsigned) or ``[-1, 1]`` (signed) and rounds onto ``levels`` steps, where
``levels = 2**bits - 1`` for unsigned data and ``2**(bits-1) - 1`` for signed
data.  The signed grid is symmetric, so zero is exact and ``-2**(bits-1)`` is
never produced.  Rounding is half away from zero.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np


class CalibrationWarning(UserWarning):
    """Raised (as a warning) when calibration data carries no usable range."""


@dataclass(frozen=True)
class QuantSpec:
    bits: int = 8
    signed: bool = True
    alpha: float = 1.0

    def __post_init__(self):
        if not 2 <= self.bits <= 16:
            raise ValueError(f"bits must be in [2, 16], got {self.bits}")
        if not (np.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError(f"alpha must be a positive finite number, got {self.alpha}")

    @property
    def levels(self) -> int:
        return 2 ** (self.bits - 1) - 1 if self.signed else 2**self.bits - 1

    @property
    def step(self) -> float:
        return self.alpha / self.levels

    @property
    def lower(self) -> float:
        return -1.0 if self.signed else 0.0

    def with_alpha(self, alpha: float) -> "QuantSpec":
        return QuantSpec(self.bits, self.signed, float(alpha))


def round_half_away(v: np.ndarray) -> np.ndarray:
    return np.copysign(np.floor(np.abs(v) + 0.5), v)


def quantize_levels(x, spec: QuantSpec) -> np.ndarray:
    """Integer grid index of every element (as float64)."""
    t = np.clip(np.asarray(x, dtype=np.float64) / spec.alpha, spec.lower, 1.0)
    return round_half_away(t * spec.levels)


def quantize(x, spec: QuantSpec) -> np.ndarray:
    """Scale, clip and round ``x`` onto the grid of ``spec``.

    Output dtype is float32 for float32 input and float64 otherwise.
    """
    x = np.asarray(x)
    out = quantize_levels(x, spec) * spec.alpha / spec.levels
    out = out + 0.0  # -0.0 -> 0.0
    return out.astype(np.float32) if x.dtype == np.float32 else out


def calibrate_alpha(x, signed: bool) -> float:
    """Max-abs (signed) or max-positive (unsigned) clipping value.

    Falls back to 1.0 and emits :class:`CalibrationWarning` when the data has
    no positive range.
    """
    x = np.asarray(x, dtype=np.float64)
    alpha = float(np.max(np.abs(x))) if signed else float(max(np.max(x), 0.0))
    if not alpha > 0 or not np.isfinite(alpha):
        warnings.warn("calibration data has no positive range; using alpha = 1.0", CalibrationWarning)
        return 1.0
    return alpha


def ste_mask(x, spec: QuantSpec) -> np.ndarray:
    """True where ``x / alpha`` lies strictly inside the clip interval."""
    t = np.asarray(x, dtype=np.float64) / spec.alpha
    return (t > spec.lower) & (t < 1.0)


def ste_backward(grad_out, x, spec: QuantSpec) -> np.ndarray:
    """Straight-through gradient: identity inside the clip range, zero outside."""
    grad_out = np.asarray(grad_out)
    x = np.asarray(x)
    if grad_out.shape != x.shape:
        raise ValueError(f"shape mismatch: grad {grad_out.shape} vs input {x.shape}")
    return np.where(ste_mask(x, spec), grad_out, np.zeros((), dtype=grad_out.dtype))
