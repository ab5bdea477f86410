"""The wavelet compressed 1x1 convolution layer.

Forward pass, per input ``x`` of shape ``C_in x H x W``:

1. multi-level wavelet transform of every channel (reflect padded if asked),
2. L2 norm of each coefficient position across channels,
3. keep the ``ceil(rate * plane_size)`` strongest positions, shared by all channels,
4. gather them into a compact ``C_in x k`` block,
5. optionally quantize the block (signed, alpha calibrated on the block),
6. multiply by the (optionally quantized) ``C_out x C_in`` kernel,
7. scatter into a zeroed ``C_out`` coefficient plane and invert the transform.

The backward pass treats the kept index set as a constant of the forward pass
and passes quantizers straight through inside their clip ranges.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from wcc.haar import (
    CoeffLayout,
    WaveletSpec,
    forward_planes,
    inverse_planes,
    layout_for,
    pad_plane,
    pad_plane_adjoint,
)
from wcc.quant import QuantSpec, calibrate_alpha, quantize, ste_mask
from wcc.shrink import Norm, ShrinkSet, channel_norms, gather, scatter, select_topk
from wcc.tensor_io import Tensor3, as_tensor3, random_tensor


class DivergenceError(ArithmeticError):
    pass


def as_kernel(k) -> np.ndarray:
    k = np.asarray(k, dtype=np.float32)
    if k.ndim == 0:
        k = k.reshape(1, 1)
    if k.ndim != 2 or min(k.shape) < 1:
        raise ValueError(f"a 1x1 kernel is a non-empty C_out x C_in matrix, got shape {k.shape}")
    if not np.all(np.isfinite(k)):
        raise ValueError("kernel entries must be finite")
    return k


@dataclass(frozen=True, eq=False)
class WccLayerSpec:
    """Configuration of one WCC layer.

    ``coeff_quant`` / ``weight_quant`` are optional signed quantizers.  When
    the matching ``*_calibrate`` flag is set (the default) their ``alpha`` is
    replaced on every call by the max-abs of the data being quantized.
    """

    kernel: np.ndarray
    wavelet: WaveletSpec = field(default_factory=WaveletSpec)
    rate: float = 1.0
    coeff_quant: Optional[QuantSpec] = None
    weight_quant: Optional[QuantSpec] = None
    coeff_calibrate: bool = True
    weight_calibrate: bool = True
    norm: Norm = Norm.L2

    def __post_init__(self):
        object.__setattr__(self, "kernel", as_kernel(self.kernel))
        object.__setattr__(self, "norm", Norm(self.norm))
        if not 0 < self.rate <= 1:
            raise ValueError(f"rate must be in (0, 1], got {self.rate}")
        if self.coeff_quant is not None and not self.coeff_quant.signed:
            raise ValueError("wavelet coefficients need a signed quantizer")

    @property
    def c_out(self) -> int:
        return self.kernel.shape[0]

    @property
    def c_in(self) -> int:
        return self.kernel.shape[1]

    def replace(self, **changes) -> "WccLayerSpec":
        fields = dict(self.__dict__)
        fields.update(changes)
        return WccLayerSpec(**fields)

    def to_json(self) -> str:
        def q(spec, calibrate):
            if spec is None:
                return None
            alpha = "calibrate" if calibrate else spec.alpha
            return {"bits": spec.bits, "signed": spec.signed, "alpha": alpha}

        doc = {
            "kernel": [[float(v) for v in row] for row in self.kernel],
            "wavelet": {
                "levels": self.wavelet.levels,
                "bank": self.wavelet.bank.value,
                "boundary": self.wavelet.boundary.value,
            },
            "rate": self.rate,
            "norm": self.norm.value,
            "coeff_quant": q(self.coeff_quant, self.coeff_calibrate),
            "weight_quant": q(self.weight_quant, self.weight_calibrate),
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "WccLayerSpec":
        doc = json.loads(text)

        def q(entry):
            if entry is None:
                return None, True
            calibrate = entry.get("alpha", "calibrate") == "calibrate"
            alpha = 1.0 if calibrate else float(entry["alpha"])
            return QuantSpec(int(entry["bits"]), bool(entry.get("signed", True)), alpha), calibrate

        cq, cc = q(doc.get("coeff_quant"))
        wq, wc = q(doc.get("weight_quant"))
        return cls(
            kernel=np.array(doc["kernel"], dtype=np.float32),
            wavelet=WaveletSpec(**doc.get("wavelet", {})),
            rate=float(doc.get("rate", 1.0)),
            coeff_quant=cq,
            weight_quant=wq,
            coeff_calibrate=cc,
            weight_calibrate=wc,
            norm=doc.get("norm", "l2"),
        )


def matmul_ordered(k: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``k @ x`` accumulated over input channels in ascending order.

    Every output element sees the same sequence of float64 multiply-adds no
    matter how many columns ``x`` has or how numpy threads, so results are
    bit-stable and column-local.
    """
    k = np.asarray(k, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros((k.shape[0],) + x.shape[1:])
    tmp = np.empty_like(out)
    for j in range(k.shape[1]):
        np.multiply(k[:, j].reshape((-1,) + (1,) * (x.ndim - 1)), x[j], out=tmp)
        out += tmp
    return out


def _product(k, x, ordered: bool) -> np.ndarray:
    if ordered:
        return matmul_ordered(k, x)
    x = np.asarray(x, dtype=np.float64)
    shape = x.shape
    return (np.asarray(k, dtype=np.float64) @ x.reshape(shape[0], -1)).reshape((k.shape[0],) + shape[1:])


def conv1x1_reference(k, x: Tensor3, ordered: bool = True) -> Tensor3:
    """Dense 1x1 convolution ``y_i = sum_j k_ij x_j`` in the spatial domain."""
    k = as_kernel(k)
    x = as_tensor3(x)
    if x.shape[0] != k.shape[1]:
        raise ValueError(f"kernel expects {k.shape[1]} input channels, got {x.shape[0]}")
    return _product(k, x, ordered).astype(np.float32)


@dataclass
class _Trace:
    layout: CoeffLayout
    shrink: ShrinkSet
    block: np.ndarray  # gathered coefficients before quantization
    block_q: np.ndarray
    coeff_spec: Optional[QuantSpec]
    kernel: np.ndarray  # float64 parameter before quantization
    kernel_q: np.ndarray
    weight_spec: Optional[QuantSpec]
    out: np.ndarray  # float64, cropped


def _resolve(spec: Optional[QuantSpec], calibrate: bool, data) -> Optional[QuantSpec]:
    if spec is None:
        return None
    return spec.with_alpha(calibrate_alpha(data, signed=True)) if calibrate else spec


def _compress(x, wavelet: WaveletSpec, rate: float, norm: Norm, shrink: Optional[ShrinkSet]):
    x = np.asarray(x, dtype=np.float64)
    layout = layout_for(x.shape[1], x.shape[2], wavelet)
    coeffs = forward_planes(pad_plane(x, layout), wavelet, layout)
    if shrink is None:
        shrink = select_topk(channel_norms(coeffs, norm), rate)
    elif shrink.plane_size != layout.plane_size:
        raise ValueError(
            f"shrink set covers {shrink.plane_size} positions, coefficient plane has {layout.plane_size}"
        )
    return layout, shrink, gather(coeffs, shrink)


def _expand_padded(block, layout: CoeffLayout, shrink: ShrinkSet, wavelet: WaveletSpec) -> np.ndarray:
    plane = scatter(block, shrink, layout.padded_height, layout.padded_width)
    return inverse_planes(plane, wavelet, layout)


def _expand(block, layout: CoeffLayout, shrink: ShrinkSet, wavelet: WaveletSpec) -> np.ndarray:
    return _expand_padded(block, layout, shrink, wavelet)[:, : layout.height, : layout.width]


def _forward(spec: WccLayerSpec, x, shrink: Optional[ShrinkSet], ordered: bool, kernel=None) -> _Trace:
    if x.shape[0] != spec.c_in:
        raise ValueError(f"layer expects {spec.c_in} input channels, got {x.shape[0]}")
    layout, shrink, block = _compress(x, spec.wavelet, spec.rate, spec.norm, shrink)
    coeff_spec = _resolve(spec.coeff_quant, spec.coeff_calibrate, block)
    block_q = quantize(block, coeff_spec) if coeff_spec else block
    kernel = spec.kernel.astype(np.float64) if kernel is None else kernel
    weight_spec = _resolve(spec.weight_quant, spec.weight_calibrate, kernel)
    kernel_q = quantize(kernel, weight_spec) if weight_spec else kernel
    out_block = _product(kernel_q, block_q, ordered)
    out = _expand(out_block, layout, shrink, spec.wavelet)
    return _Trace(layout, shrink, block, block_q, coeff_spec, kernel, kernel_q, weight_spec, out)


def wcc_forward(
    spec: WccLayerSpec, x: Tensor3, shrink: Optional[ShrinkSet] = None, ordered: bool = True
) -> Tuple[Tensor3, ShrinkSet]:
    """Run the layer on ``x``; returns the output and the index set it used.

    Passing ``shrink`` pins the index set instead of selecting it from ``x``.
    ``ordered=False`` uses BLAS for the compact product (faster, but not
    bit-stable across thread counts).
    """
    x = as_tensor3(x)
    tr = _forward(spec, x, shrink, ordered)
    return tr.out.astype(np.float32), tr.shrink


def compress_roundtrip(
    x: Tensor3,
    wavelet: WaveletSpec,
    rate: float,
    coeff_quant: Optional[QuantSpec] = QuantSpec(8, True),
    norm: Norm = Norm.L2,
) -> Tuple[Tensor3, ShrinkSet]:
    """Transform, jointly shrink, quantize (calibrated per call) and reconstruct ``x``."""
    x = as_tensor3(x)
    layout, shrink, block = _compress(x, wavelet, rate, Norm(norm), None)
    qspec = _resolve(coeff_quant, True, block)
    if qspec is not None:
        block = quantize(block, qspec)
    return _expand(block, layout, shrink, wavelet).astype(np.float32), shrink


def _backward(spec: WccLayerSpec, tr: _Trace, grad_out: np.ndarray, ordered: bool):
    layout, wavelet = tr.layout, spec.wavelet
    g = np.zeros((grad_out.shape[0], layout.padded_height, layout.padded_width))
    g[:, : layout.height, : layout.width] = grad_out
    # the inverse transform is orthogonal, so its adjoint is the forward transform
    g_block = gather(forward_planes(g, wavelet, layout), tr.shrink)

    grad_block = _product(tr.kernel_q.T, g_block, ordered)
    if tr.coeff_spec is not None:
        grad_block = np.where(ste_mask(tr.block, tr.coeff_spec), grad_block, 0.0)
    grad_x = pad_plane_adjoint(_expand_padded(grad_block, layout, tr.shrink, wavelet), layout)

    grad_k = _product(g_block, tr.block_q.T, ordered)
    if tr.weight_spec is not None:
        grad_k = np.where(ste_mask(tr.kernel, tr.weight_spec), grad_k, 0.0)
    return grad_x, grad_k


def wcc_backward(
    spec: WccLayerSpec, x: Tensor3, grad_out: Tensor3, shrink: Optional[ShrinkSet] = None
) -> Tuple[Tensor3, np.ndarray]:
    """Gradients of ``<grad_out, wcc_forward(spec, x)>`` w.r.t. ``x`` and the kernel."""
    x = as_tensor3(x)
    grad_out = np.asarray(grad_out, dtype=np.float64)
    tr = _forward(spec, x, shrink, True)
    if grad_out.shape != tr.out.shape:
        raise ValueError(f"grad_out shape {grad_out.shape} does not match output {tr.out.shape}")
    grad_x, grad_k = _backward(spec, tr, grad_out, True)
    return grad_x.astype(np.float32), grad_k.astype(np.float32)


@dataclass
class FitResult:
    kernel: np.ndarray
    losses: List[float]


def wcc_toy_fit(
    target_kernel,
    spec_template: WccLayerSpec,
    dataset: Sequence[Tensor3],
    steps: int,
    lr: float,
    seed: Optional[int] = None,
) -> FitResult:
    """Fit the layer's kernel to a dense target by plain gradient descent.

    The loss is the mean squared difference between ``wcc_forward`` and the
    uncompressed ``conv1x1_reference(target_kernel, x)``, averaged over the
    dataset.  The starting kernel is ``spec_template.kernel``, or a seeded
    draw from :func:`random_tensor` when ``seed`` is given.  ``losses`` holds
    the loss before every step plus the final loss.
    """
    if not dataset:
        raise ValueError("dataset must not be empty")
    target = as_kernel(target_kernel).astype(np.float64)
    data = [as_tensor3(x) for x in dataset]
    targets = [_product(target, x, True) for x in data]
    if seed is None:
        k = spec_template.kernel.astype(np.float64)
    else:
        k = 0.5 * random_tensor(1, *spec_template.kernel.shape, seed=seed)[0].astype(np.float64)

    losses: List[float] = []
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(steps + 1):
            loss, grad = _fit_step(spec_template, k, data, targets, want_grad=step < steps)
            if not np.isfinite(loss):
                raise DivergenceError(f"loss became {loss} at step {step}")
            losses.append(loss)
            if step < steps:
                k = k - lr * grad
    return FitResult(k.astype(np.float32), losses)


def _fit_step(spec, k, data, targets, want_grad):
    loss = 0.0
    grad = np.zeros_like(k)
    for x, t in zip(data, targets):
        tr = _forward(spec, x, None, True, kernel=k)
        diff = tr.out - t
        loss += float(np.mean(diff * diff))
        if want_grad:
            grad += _backward(spec, tr, 2.0 * diff / diff.size, True)[1]
    return loss / len(data), grad / len(data)
