"""
Counting MACs and bit operations
================================

Exact integer accounting for the MobileNetV2 backbone and for one
pointwise layer replaced by its compressed counterpart.
"""

from importlib import resources

from wcc.cost import ConvLayerSpec, bops_conv, bops_wcc_layer, network_report, separable_savings

report = network_report(resources.files("wcc") / "data" / "mobilenetv2.txt")
print(f"1x1 MACs     {report.macs_1x1:>16,}")
print(f"spatial MACs {report.macs_spatial:>16,}")
print(f"1x1 share    {report.macs_1x1 / report.total_macs:>16.2%}")

# a 160 -> 960 expansion layer on a 34 x 34 map at 8-bit weights and activations
layer = ConvLayerSpec("pw", 160, 960, spatial=(34, 34))
plain = bops_conv(layer, 8, 8)
print(f"\nplain layer  {plain:>16,} BOPs")
for rate in (1.0, 0.5, 0.25, 0.125):
    row = bops_wcc_layer(layer, rate, levels=3, b_w=8, b_a=8)
    print(f"rate {rate:<6}  {row.bops:>16,} BOPs  ({row.bops / plain:.3f} of plain, transforms {row.transform_bops:,})")

# why the pointwise layers dominate: a separable 3x3 spends most of its MACs there
full, dw, pw, ratio = separable_savings(64, 64, 3, (32, 32))
print(f"\nfull 3x3 {full:,}  depthwise {dw:,}  pointwise {pw:,}  savings x{ratio:.2f}")
