"""
Joint shrinkage across channels
===============================

One index set of wavelet positions is shared by every channel.  Positions
are ranked by the L2 norm of their channel vector.
"""

import numpy as np

from wcc import ShrinkSet, WaveletSpec, channel_norms, gather, hwt, scatter, select_topk

rng = np.random.default_rng(0)
yy, xx = np.mgrid[0:32, 0:32] / 32.0
# four correlated channels: shared edges, different gains
edge = (xx > 0.4).astype(np.float32) + 0.5 * (yy > 0.7)
x = np.stack([g * edge + 0.02 * rng.normal(size=edge.shape) for g in (1.0, -0.5, 2.0, 0.8)]).astype(np.float32)

spec = WaveletSpec(levels=3)
y, layout = hwt(x, spec)
norms = channel_norms(y)

for rate in (0.05, 0.1, 0.25):
    s = select_topk(norms, rate)
    approx = scatter(gather(y, s), s, *y.shape[1:])
    kept = np.sum(approx.astype(np.float64) ** 2) / np.sum(y.astype(np.float64) ** 2)
    print(f"rate {rate:<5} keeps {s.k:>3} of {s.plane_size} positions, {kept:.4%} of the energy")

# the index set serializes as a u32 count followed by u32 indices
s = select_topk(norms, 0.05)
blob = s.to_bytes()
print("index list bytes:", len(blob), " bitmap bytes:", len(s.bitmap()))
assert ShrinkSet.from_bytes(blob, s.plane_size) == s
