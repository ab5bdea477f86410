"""Exact MAC / bit-operation accounting for convolutions and WCC layers.

All counts are Python integers.  A plain convolution costs
``C_in * C_out * N_W * N_H * K_W * K_H / (groups * S_W * S_H)`` MACs and
``MACs * b_w * b_a`` BOPs.  A multi-level Haar transform over ``C`` channels
costs ``sum_{l=1..L} 4 * C * N_W * N_H / 4**(l-1) * b_a`` BOPs; the inverse
costs the same with the output channel count.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence, Tuple, Union

from wcc.shrink import keep_count


class CostError(ValueError):
    pass


class LayerSpecError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class ConvLayerSpec:
    name: str
    c_in: int
    c_out: int
    kernel: Tuple[int, int] = (1, 1)
    groups: int = 1
    stride: Tuple[int, int] = (1, 1)
    spatial: Tuple[int, int] = (1, 1)  # (N_W, N_H)
    dilation: int = 1

    def __post_init__(self):
        dims = (self.c_in, self.c_out, *self.kernel, self.groups, *self.stride, *self.spatial, self.dilation)
        if any(int(v) != v or v < 1 for v in dims):
            raise CostError(f"{self.name}: all dimensions must be positive integers")
        if self.c_in % self.groups or self.c_out % self.groups:
            raise CostError(f"{self.name}: groups={self.groups} must divide c_in={self.c_in} and c_out={self.c_out}")

    @property
    def is_pointwise(self) -> bool:
        return tuple(self.kernel) == (1, 1)


def mac_conv(spec: ConvLayerSpec) -> int:
    k_w, k_h = spec.kernel
    s_w, s_h = spec.stride
    n_w, n_h = spec.spatial
    num = spec.c_in * spec.c_out * n_w * n_h * k_w * k_h
    den = spec.groups * s_w * s_h
    if num % den:
        raise CostError(
            f"{spec.name}: MAC count {num} / (groups {spec.groups} * stride {s_w}x{s_h}) is not an integer"
        )
    return num // den


def bops_conv(spec: ConvLayerSpec, b_w: int, b_a: int) -> int:
    if b_w < 1 or b_a < 1:
        raise CostError("bit widths must be positive")
    return mac_conv(spec) * b_w * b_a


def bops_transform(channels: int, n_w: int, n_h: int, levels: int, b_a: int) -> int:
    """BOPs of one multi-level Haar transform (forward or inverse) over ``channels`` maps."""
    total = sum(Fraction(4 * channels * n_w * n_h * b_a, 4 ** (level - 1)) for level in range(1, levels + 1))
    if total.denominator != 1:
        raise CostError(f"transform cost {total} is not an integer for {n_w}x{n_h} with {levels} levels")
    return int(total)


@dataclass(frozen=True)
class CostRow:
    name: str
    kind: str  # "1x1" or "spatial"
    macs: int
    bops: int
    transform_bops: int = 0
    wcc: bool = False
    kept_positions: int = 0
    # storage of the shared index set; informational, never added to BOPs
    index_list_bytes: int = 0
    bitmap_bytes: int = 0


@dataclass
class CostReport:
    rows: List[CostRow] = field(default_factory=list)

    def _sum(self, attr: str, kind: Optional[str] = None) -> int:
        return sum(getattr(r, attr) for r in self.rows if kind is None or r.kind == kind)

    @property
    def total_macs(self) -> int:
        return self._sum("macs")

    @property
    def total_bops(self) -> int:
        return self._sum("bops")

    @property
    def macs_1x1(self) -> int:
        return self._sum("macs", "1x1")

    @property
    def macs_spatial(self) -> int:
        return self._sum("macs", "spatial")

    @property
    def bops_1x1(self) -> int:
        return self._sum("bops", "1x1")

    @property
    def bops_spatial(self) -> int:
        return self._sum("bops", "spatial")

    @property
    def transform_bops(self) -> int:
        return self._sum("transform_bops")


def conv_row(layer: ConvLayerSpec, b_w: int = 1, b_a: int = 1) -> CostRow:
    kind = "1x1" if layer.is_pointwise else "spatial"
    return CostRow(layer.name, kind, mac_conv(layer), bops_conv(layer, b_w, b_a))


def bops_wcc_layer(layer: ConvLayerSpec, rate: float, levels: int, b_w: int, b_a: int) -> CostRow:
    """Cost of running ``layer`` as a WCC layer at shrinkage ``rate``.

    The product runs on ``ceil(rate * N_W * N_H)`` positions; the forward and
    inverse transforms are charged on the full input and output maps.
    """
    if not layer.is_pointwise or tuple(layer.stride) != (1, 1) or layer.groups != 1:
        raise CostError(f"{layer.name}: WCC accounting needs a dense stride-1 1x1 convolution")
    n_w, n_h = layer.spatial
    k = keep_count(rate, n_w * n_h)
    macs = layer.c_in * layer.c_out * k
    transform = bops_transform(layer.c_in, n_w, n_h, levels, b_a) + bops_transform(
        layer.c_out, n_w, n_h, levels, b_a
    )
    return CostRow(
        layer.name,
        "1x1",
        macs,
        macs * b_w * b_a + transform,
        transform_bops=transform,
        wcc=True,
        kept_positions=k,
        index_list_bytes=4 + 4 * k,
        bitmap_bytes=math.ceil(n_w * n_h / 8),
    )


def effective_bit_rate(b_a: float, rate: float) -> float:
    """Coefficient bit width times the fraction of kept coefficients."""
    if not 0 < rate <= 1:
        raise ValueError(f"rate must be in (0, 1], got {rate}")
    return b_a * rate


def separable_savings(c_in: int, c_out: int, k: int, spatial: Tuple[int, int]):
    """MACs of a full ``k x k`` convolution vs. its depthwise + pointwise split.

    Returns ``(full, depthwise, pointwise, full / (depthwise + pointwise))``.
    """
    hw = spatial[0] * spatial[1]
    full = c_in * c_out * k * k * hw
    depthwise = c_in * k * k * hw
    pointwise = c_in * c_out * hw
    return full, depthwise, pointwise, full / (depthwise + pointwise)


def parse_layer_specs(text: str) -> List[Tuple[int, ConvLayerSpec]]:
    """Parse ``name c_in c_out K groups stride dilation H W`` lines.

    Blank lines and ``#`` comments are ignored.  Returns ``(line_number, spec)``
    pairs so later arithmetic errors can point back at the source line.
    """
    layers = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 9:
            raise LayerSpecError(f"expected 9 fields, found {len(parts)}", lineno)
        name = parts[0]
        try:
            c_in, c_out, k, groups, stride, dilation, h, w = (int(p) for p in parts[1:])
        except ValueError:
            raise LayerSpecError(f"non-integer field in {line!r}", lineno) from None
        try:
            spec = ConvLayerSpec(name, c_in, c_out, (k, k), groups, (stride, stride), (w, h), dilation)
        except CostError as exc:
            raise LayerSpecError(str(exc), lineno) from None
        layers.append((lineno, spec))
    return layers


def network_report(
    source: Union[str, os.PathLike, Sequence[ConvLayerSpec]],
    b_w: int = 1,
    b_a: int = 1,
    rate: Optional[float] = None,
    levels: int = 3,
) -> CostReport:
    """Per-layer MAC/BOP report for a layer-spec file (or an in-memory layer list).

    With ``rate`` set, every dense stride-1 1x1 layer is costed as a WCC layer.
    """
    if isinstance(source, (str, os.PathLike)):
        with open(source) as fh:
            numbered = parse_layer_specs(fh.read())
    else:
        numbered = [(i + 1, layer) for i, layer in enumerate(source)]
    report = CostReport()
    for lineno, layer in numbered:
        try:
            if rate is not None and layer.is_pointwise and layer.groups == 1 and tuple(layer.stride) == (1, 1):
                row = bops_wcc_layer(layer, rate, levels, b_w, b_a)
            else:
                row = conv_row(layer, b_w, b_a)
        except CostError as exc:
            raise LayerSpecError(str(exc), lineno) from None
        report.rows.append(row)
    return report


def format_report(report: CostReport) -> str:
    """Fixed-width text table: name 20, kind 8, MACs/BOPs/transform 18 each."""
    lines = [f"{'layer':<20}{'kind':<8}{'MACs':>18}{'BOPs':>18}{'transform_BOPs':>18}"]
    for r in report.rows:
        kind = "wcc" if r.wcc else r.kind
        lines.append(f"{r.name:<20}{kind:<8}{r.macs:>18,}{r.bops:>18,}{r.transform_bops:>18,}")
    lines.append(f"{'total_1x1':<28}{report.macs_1x1:>18,}{report.bops_1x1:>18,}{report.transform_bops:>18,}")
    lines.append(f"{'total_spatial':<28}{report.macs_spatial:>18,}{report.bops_spatial:>18,}{0:>18,}")
    lines.append(f"{'total':<28}{report.total_macs:>18,}{report.total_bops:>18,}{report.transform_bops:>18,}")
    return "\n".join(lines)
