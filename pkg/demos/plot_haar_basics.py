"""
Haar transform basics
=====================

A three-level Haar decomposition of a photo, its Mallat layout and how
little of the energy lives outside the coarse band.
"""

from importlib import resources

import numpy as np

from wcc import WaveletSpec, hwt, ihwt, load_pgm

image = load_pgm(resources.files("wcc") / "data" / "images" / "camera.pgm")
spec = WaveletSpec(levels=3)
coeffs, layout = hwt(image, spec)

# the transform is orthonormal: energy is preserved and the inverse is exact
print("energy in  :", float(np.sum(image.astype(np.float64) ** 2)))
print("energy out :", float(np.sum(coeffs.astype(np.float64) ** 2)))
print("max recon error:", float(np.max(np.abs(ihwt(coeffs, layout, spec) - image))))

# each subband is a rectangle of the coefficient plane
total = float(np.sum(coeffs.astype(np.float64) ** 2))
for level, name, (r0, r1, c0, c1) in layout.subbands:
    band = coeffs[:, r0:r1, c0:c1].astype(np.float64)
    print(f"level {level} {name}: {r1 - r0:>3}x{c1 - c0:<3} energy share {np.sum(band**2) / total:.4f}")

# sizes that do not divide 2**levels need the reflect-pad boundary
odd = image[:, :250, :201]
pad_spec = WaveletSpec(levels=3, boundary="reflect_pad")
c, lay = hwt(odd, pad_spec)
print("250x201 pads to", (lay.padded_height, lay.padded_width))
print("round trip error:", float(np.max(np.abs(ihwt(c, lay, pad_spec) - odd))))
