"""
A 1x1 convolution on compressed coefficients
============================================

The layer transforms its input, keeps a shared set of positions, runs the
1x1 convolution on the compact block and transforms back.  Its kernel can
be trained through the compression with plain gradient descent.
"""

import numpy as np

from wcc import QuantSpec, WaveletSpec, WccLayerSpec, conv1x1_reference, wcc_forward, wcc_toy_fit

rng = np.random.default_rng(1)
yy, xx = np.mgrid[0:32, 0:32] / 32.0
x = np.stack([np.sin(2 * np.pi * (a * xx + b * yy)) for a, b in rng.uniform(0.3, 1.5, (4, 2))]).astype(np.float32)
kernel = rng.normal(size=(6, 4)).astype(np.float32)
dense = conv1x1_reference(kernel, x)

for rate in (1.0, 0.5, 0.25, 0.1):
    spec = WccLayerSpec(kernel, WaveletSpec(3), rate, coeff_quant=QuantSpec(8, True))
    out, s = wcc_forward(spec, x)
    err = np.linalg.norm(out - dense) / np.linalg.norm(dense)
    print(f"rate {rate:<5} kept {s.k:>4}/{s.plane_size}  relative error {err:.4f}")

# fit a kernel from scratch to the dense layer, through the compression
template = WccLayerSpec(np.zeros((6, 4)), WaveletSpec(3), 0.5, coeff_quant=QuantSpec(8, True))
fit = wcc_toy_fit(kernel, template, [x], steps=300, lr=0.2, seed=0)
print(f"loss {fit.losses[0]:.4f} -> {fit.losses[-1]:.6f} after {len(fit.losses) - 1} steps")
