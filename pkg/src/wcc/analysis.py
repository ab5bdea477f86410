"""Quantization vs. wavelet-compression error comparisons on single tensors."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List

import numpy as np

from wcc.cost import effective_bit_rate
from wcc.haar import Boundary, WaveletSpec
from wcc.layer import compress_roundtrip
from wcc.quant import QuantSpec, calibrate_alpha, quantize
from wcc.tensor_io import Tensor3, as_tensor3

COEFF_BITS = 8


@dataclass(frozen=True)
class SweepRow:
    effective_bits: float
    quant_mse: float
    wavelet_mse: float


@dataclass(frozen=True)
class Analysis:
    bits: int
    rate: float
    effective_bits: float
    quant_mse: float
    wavelet_mse: float
    kept: int
    plane_size: int


def mse(a, b) -> float:
    d = np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)
    return float(np.mean(d * d))


def quantization_error(x: Tensor3, bits: int) -> float:
    """MSE of per-tensor uniform quantization; signed only if ``x`` has negatives."""
    x = as_tensor3(x)
    signed = bool(np.min(x) < 0)
    spec = QuantSpec(bits, signed, calibrate_alpha(x, signed))
    return mse(quantize(x, spec), x)


def wavelet_error(x: Tensor3, rate: float, levels: int = 3):
    wavelet = WaveletSpec(levels, boundary=Boundary.REFLECT_PAD)
    x = as_tensor3(x)
    rec, shrink = compress_roundtrip(x, wavelet, rate, QuantSpec(COEFF_BITS, True))
    return mse(rec, x), shrink


def analyze(x: Tensor3, levels: int = 3, rate: float = 0.25, bits: int = 2) -> Analysis:
    x = as_tensor3(x)
    w_err, shrink = wavelet_error(x, rate, levels)
    return Analysis(
        bits=bits,
        rate=rate,
        effective_bits=effective_bit_rate(COEFF_BITS, rate),
        quant_mse=quantization_error(x, bits),
        wavelet_mse=w_err,
        kept=shrink.k,
        plane_size=shrink.plane_size,
    )


def sweep(x: Tensor3, levels: int = 3, bit_rates=range(2, 9)) -> List[SweepRow]:
    """Compare ``ceil(b)``-bit quantization against 8-bit coefficients kept at rate ``b / 8``."""
    x = as_tensor3(x)
    rows = []
    for b in sorted(bit_rates):
        q = quantization_error(x, math.ceil(b))
        w, _ = wavelet_error(x, b / COEFF_BITS, levels)
        rows.append(SweepRow(float(b), q, w))
    return rows
