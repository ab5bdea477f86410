"""Wavelet compressed 1x1 convolution kernels and cost accounting."""

from wcc.tensor_io import Tensor3, as_tensor3, load_pgm, load_raw, random_tensor, save_pgm, save_raw
from wcc.haar import CoeffLayout, WaveletSpec, hwt, hwt_level, ihwt, ihwt_level
from wcc.quant import QuantSpec, calibrate_alpha, quantize, ste_backward
from wcc.shrink import ShrinkSet, channel_norms, gather, scatter, select_topk
from wcc.layer import (
    WccLayerSpec,
    compress_roundtrip,
    conv1x1_reference,
    wcc_backward,
    wcc_forward,
    wcc_toy_fit,
)
from wcc.cost import (
    ConvLayerSpec,
    CostReport,
    bops_conv,
    bops_transform,
    bops_wcc_layer,
    effective_bit_rate,
    mac_conv,
    network_report,
    separable_savings,
)

__version__ = "0.1.0"
