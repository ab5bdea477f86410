"""CPU timing of an inverted residual block, dense vs. WCC pointwise convolutions.

The block is ``x + K3 @ dw3x3(K1 @ x)`` with no activations; ``dw3x3`` is a
fixed binomial 3x3 stencil applied per channel with zero padding.  The WCC
variant swaps both 1x1 products for WCC layers, each selecting its own index
set in its own transform domain.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import List

import numpy as np

from wcc.haar import Boundary, WaveletSpec
from wcc.layer import WccLayerSpec, conv1x1_reference, wcc_forward
from wcc.tensor_io import random_tensor

STENCIL = np.array([[1.0, 2.0, 1.0], [2.0, 4.0, 2.0], [1.0, 2.0, 1.0]]) / 16.0


def depthwise3x3(x: np.ndarray) -> np.ndarray:
    h, w = x.shape[1:]
    p = np.pad(x.astype(np.float32), ((0, 0), (1, 1), (1, 1)))
    out = np.zeros_like(x, dtype=np.float32)
    for di in range(3):
        for dj in range(3):
            out += np.float32(STENCIL[di, dj]) * p[:, di : di + h, dj : dj + w]
    return out


@dataclass
class Block:
    k1: np.ndarray
    k3: np.ndarray
    wavelet: WaveletSpec

    @classmethod
    def random(cls, c_in: int, expansion: int, seed: int = 0, levels: int = 3) -> "Block":
        hidden = c_in * expansion
        k1 = random_tensor(1, hidden, c_in, seed)[0] / np.float32(np.sqrt(c_in))
        k3 = random_tensor(1, c_in, hidden, seed + 1)[0] / np.float32(np.sqrt(hidden))
        return cls(k1, k3, WaveletSpec(levels, boundary=Boundary.REFLECT_PAD))

    def standard(self, x: np.ndarray) -> np.ndarray:
        h = conv1x1_reference(self.k1, x, ordered=False)
        return x + conv1x1_reference(self.k3, depthwise3x3(h), ordered=False)

    def wcc(self, x: np.ndarray, rate: float) -> np.ndarray:
        h, _ = wcc_forward(WccLayerSpec(self.k1, self.wavelet, rate), x, ordered=False)
        y, _ = wcc_forward(WccLayerSpec(self.k3, self.wavelet, rate), depthwise3x3(h), ordered=False)
        return x + y


@dataclass
class BenchResult:
    trials: int
    standard_times: List[float]
    wcc_times: List[float]
    lossless_rel_diff: float

    @property
    def standard_mean(self) -> float:
        return float(np.mean(self.standard_times))

    @property
    def wcc_mean(self) -> float:
        return float(np.mean(self.wcc_times))

    @property
    def speedup(self) -> float:
        return self.standard_mean / self.wcc_mean


class BenchCheckError(RuntimeError):
    pass


def relative_difference(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-30))


def run_bench(c_in: int, expansion: int, size: int, rate: float, trials: int, seed: int = 0) -> BenchResult:
    if min(c_in, expansion, size, trials) < 1 or size < 2:
        raise ValueError("cin, expansion and trials must be >= 1 and size >= 2")
    block = Block.random(c_in, expansion, seed)
    x = random_tensor(c_in, size, size, seed + 2)

    diff = relative_difference(block.wcc(x, 1.0), block.standard(x))
    if diff > 1e-3:
        raise BenchCheckError(f"lossless WCC block disagrees with the dense block: rel diff {diff:.3e}")

    std_times, wcc_times = [], []
    # alternate the variants so drift in machine load hits both equally
    for _ in range(trials):
        t0 = time.perf_counter()
        block.standard(x)
        std_times.append(time.perf_counter() - t0)
        t0 = time.perf_counter()
        block.wcc(x, rate)
        wcc_times.append(time.perf_counter() - t0)
    return BenchResult(trials, std_times, wcc_times, diff)
