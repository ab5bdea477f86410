"""Acceptance gate: one test per criterion, each reporting a PASS/FAIL line.

The lines are printed in the pytest terminal summary (see conftest.py) and,
when run with ``-s``, as each criterion finishes.
"""

import itertools
import math
import os
import subprocess
import sys
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from wcc.analysis import sweep
from wcc.cost import (
    ConvLayerSpec,
    bops_conv,
    bops_transform,
    effective_bit_rate,
    network_report,
    separable_savings,
)
from wcc.haar import Boundary, WaveletSpec, hwt, ihwt
from wcc.layer import WccLayerSpec, conv1x1_reference, wcc_backward, wcc_forward, wcc_toy_fit
from wcc.quant import QuantSpec, quantize
from wcc.shrink import ShrinkSet, channel_norms, gather, scatter, select_topk
from wcc.tensor_io import load_pgm, random_tensor

DATA = Path(__file__).resolve().parents[1] / "src" / "wcc" / "data"
RESULTS = []


@contextmanager
def criterion(number, title):
    start = time.perf_counter()
    status, detail = "FAIL", ""
    try:
        yield
        status = "PASS"
    except AssertionError as exc:
        detail = f" ({str(exc).splitlines()[0][:100]})" if str(exc) else ""
        raise
    finally:
        line = f"criterion {number:>2} {status}  {title}  [{time.perf_counter() - start:.2f}s]{detail}"
        RESULTS.append((number, line))
        print(line)


def rel(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-30))


def transform_corpus():
    rng = np.random.default_rng(2024)
    corpus = []
    for i in range(100):
        levels = int(rng.integers(1, 4))
        block = 2**levels
        c = int(rng.integers(1, 5))
        h = block * int(rng.integers(1, 64 // block + 1))
        w = block * int(rng.integers(1, 64 // block + 1))
        corpus.append((WaveletSpec(levels), random_tensor(c, h, w, seed=i)))
    return corpus


def test_01_perfect_reconstruction():
    with criterion(1, "perfect reconstruction, 100 tensors, err <= 1e-5, < 1 s"):
        corpus = transform_corpus()
        start = time.perf_counter()
        worst = 0.0
        for spec, x in corpus:
            y, layout = hwt(x, spec)
            worst = max(worst, float(np.max(np.abs(ihwt(y, layout, spec).astype(np.float64) - x))))
        elapsed = time.perf_counter() - start
        assert worst <= 1e-5, f"max error {worst:.3e}"
        assert elapsed < 1.0, f"took {elapsed:.3f}s"


def test_02_parseval():
    with criterion(2, "Parseval, relative energy drift <= 1e-4"):
        worst = 0.0
        for spec, x in transform_corpus():
            y, _ = hwt(x, spec)
            nx = np.linalg.norm(x.astype(np.float64))
            worst = max(worst, abs(np.linalg.norm(y.astype(np.float64)) - nx) / nx)
        assert worst <= 1e-4, f"worst drift {worst:.3e}"


def test_03_lossless_limit():
    with criterion(3, "rate 1 matches dense 1x1 conv within 1e-4, 50 layers"):
        rng = np.random.default_rng(3)
        worst = 0.0
        for i in range(50):
            c_in, c_out = (int(v) for v in rng.integers(1, 9, 2))
            levels = int(rng.integers(1, 4))
            boundary = Boundary.REFLECT_PAD if i % 2 else Boundary.REQUIRE_DIVISIBLE
            if boundary is Boundary.REFLECT_PAD:
                h, w = (int(v) for v in rng.integers(2**levels, 33, 2))
            else:
                h, w = (2**levels * int(v) for v in rng.integers(1, 5, 2))
            k = random_tensor(1, c_out, c_in, seed=1000 + i)[0]
            x = random_tensor(c_in, h, w, seed=2000 + i)
            spec = WccLayerSpec(k, WaveletSpec(levels, boundary=boundary), 1.0)
            worst = max(worst, rel(wcc_forward(spec, x)[0], conv1x1_reference(k, x)))
        assert worst <= 1e-4, f"worst relative error {worst:.3e}"


def test_04_commutation():
    with criterion(4, "gather(conv) == conv(gather) within 1e-5, all subsets of 8 positions"):
        worst = 0.0
        for trial in range(3):
            k = random_tensor(1, 3, 4, seed=40 + trial)[0]
            y = random_tensor(4, 2, 4, seed=50 + trial)
            conv_y = conv1x1_reference(k, y)
            for r in range(1, 9):
                for subset in itertools.combinations(range(8), r):
                    s = ShrinkSet(np.array(subset), 8)
                    lhs = gather(conv_y, s)
                    rhs = conv1x1_reference(k, gather(y, s)[:, None, :])[:, 0, :]
                    worst = max(worst, rel(lhs, rhs))
        # random index sets on a larger plane
        k = random_tensor(1, 6, 5, seed=60)[0]
        y = random_tensor(5, 16, 16, seed=61)
        for rate in (0.05, 0.3, 0.77, 1.0):
            s = select_topk(channel_norms(random_tensor(1, 16, 16, seed=62)), rate)
            lhs = gather(conv1x1_reference(k, y), s)
            rhs = conv1x1_reference(k, gather(y, s)[:, None, :])[:, 0, :]
            worst = max(worst, rel(lhs, rhs))
        assert worst <= 1e-5, f"worst relative error {worst:.3e}"


def test_05_topk_optimality():
    with criterion(5, "top-k is the L2-optimal joint projector over all C(8,k) subsets"):
        for trial in range(5):
            y = np.random.default_rng(trial).normal(size=(3, 2, 4))
            for k in range(1, 9):
                s = select_topk(channel_norms(y), k / 8)
                assert s.k == k
                err = np.sum((scatter(gather(y, s), s, 2, 4) - y) ** 2)
                best = min(
                    np.sum(np.delete(y.reshape(3, 8), list(c), axis=1) ** 2)
                    for c in itertools.combinations(range(8), k)
                )
                assert err <= best + 1e-12, f"k={k}: {err} > {best}"


def test_06_quantizer_contract():
    with criterion(6, "quantizer idempotent, on grid, bounded, monotone, symmetric"):
        rng = np.random.default_rng(6)
        for bits, signed in itertools.product((2, 4, 8), (False, True)):
            alpha = float(rng.uniform(0.1, 5.0))
            spec = QuantSpec(bits, signed, alpha)
            lo = -alpha if signed else 0.0
            x = rng.uniform(lo - 0.5 * alpha, 1.5 * alpha, 10_000).astype(np.float32)
            q = quantize(x, spec)
            assert np.array_equal(quantize(q, spec), q), "idempotence"
            grid = (np.round(q.astype(np.float64) * spec.levels / alpha) * alpha / spec.levels).astype(np.float32)
            assert np.all(np.abs(q - grid) <= np.spacing(np.abs(grid))), "grid membership"
            assert np.all(np.abs(q) <= np.float32(alpha) * (1 + 1e-6)), "range"
            inside = (x >= lo) & (x <= alpha)
            bound = alpha / (2 * spec.levels) + 2 * np.spacing(np.float32(alpha))
            err = np.abs(q.astype(np.float64) - x)[inside]
            assert err.max() <= bound, f"error bound b={bits} signed={signed}"
            order = np.argsort(x, kind="stable")
            assert np.all(np.diff(q[order]) >= 0), "monotonicity"
            if signed:
                assert np.array_equal(quantize(-x, spec), -q), "symmetry"


def test_07_expansion_layer_bops():
    with criterion(7, "160->960 at 34x34: 11,363,942,400 BOPs, transforms 54,378,240"):
        layer = ConvLayerSpec("pw", 160, 960, spatial=(34, 34))
        assert bops_conv(layer, 8, 8) == 11_363_942_400
        assert bops_transform(160, 34, 34, 3, 8) + bops_transform(960, 34, 34, 3, 8) == 54_378_240


PUBLISHED_1X1 = {
    "InvRes1.conv2": 267_649_536, "InvRes2.conv1": 807_667_200, "InvRes2.conv3": 301_989_888,
    "InvRes3.conv1": 458_307_072, "InvRes3.conv3": 452_984_832, "InvRes4.conv1": 458_307_072,
    "InvRes4.conv3": 150_994_944, "InvRes5.conv1": 206_069_760, "InvRes5.conv3": 201_326_592,
    "InvRes6.conv1": 206_069_760, "InvRes6.conv3": 201_326_592, "InvRes7.conv1": 206_069_760,
    "InvRes7.conv3": 100_663_296, "InvRes8.conv1": 210_862_080, "InvRes8.conv3": 201_326_592,
    "InvRes9.conv1": 210_862_080, "InvRes9.conv3": 201_326_592, "InvRes10.conv1": 210_862_080,
    "InvRes10.conv3": 201_326_592, "InvRes11.conv1": 210_862_080, "InvRes11.conv3": 301_989_888,
    "InvRes12.conv1": 474_439_680, "InvRes12.conv3": 452_984_832, "InvRes13.conv1": 474_439_680,
    "InvRes13.conv3": 452_984_832, "InvRes14.conv1": 474_439_680, "InvRes14.conv3": 754_974_720,
    "InvRes15.conv1": 1_378_713_600, "InvRes15.conv3": 1_258_291_200, "InvRes16.conv1": 1_378_713_600,
    "InvRes16.conv3": 1_258_291_200, "InvRes17.conv1": 1_378_713_600, "InvRes17.conv3": 2_516_582_400,
}


def test_08_mobilenet_table():
    with criterion(8, "MobileNetV2 1x1 rows match the table, total 18,022,413,312"):
        report = network_report(DATA / "mobilenetv2.txt")
        rows = {r.name: r.macs for r in report.rows if r.kind == "1x1"}
        assert rows == PUBLISHED_1X1
        assert report.macs_1x1 == 18_022_413_312


def test_09_effective_bit_rate():
    with criterion(9, "effective bit rate 8 x 0.25 = 2, 8 x 0.125 = 1"):
        assert effective_bit_rate(8, 0.25) == 2.0
        assert effective_bit_rate(8, 0.125) == 1.0


def test_10_wavelet_beats_quantization():
    with criterion(10, "wavelet MSE < quantization MSE at 2, 3, 4 bits on >= 5 images, < 10 s"):
        images = sorted((DATA / "images").glob("*.pgm"))
        assert len(images) >= 5
        start = time.perf_counter()
        for path in images:
            for row in sweep(load_pgm(path), levels=3, bit_rates=(2, 3, 4)):
                assert row.wavelet_mse < row.quant_mse, f"{path.name} at {row.effective_bits} bits"
        elapsed = time.perf_counter() - start
        assert elapsed < 10.0, f"took {elapsed:.2f}s"


def test_11_gradient_path():
    with criterion(11, "backward matches finite differences within 1e-3; lossless fit <= 1%"):
        h = 1e-3
        for i in range(5):
            k = random_tensor(1, 3, 2, seed=110 + i)[0]
            x = random_tensor(2, 4, 4, seed=120 + i).astype(np.float64)
            g = random_tensor(3, 4, 4, seed=130 + i).astype(np.float64)
            spec = WccLayerSpec(k, WaveletSpec(2), 1.0)
            grad_x, grad_k = wcc_backward(spec, x, g)

            def objective(xx, kk):
                return float(np.sum(wcc_forward(spec.replace(kernel=kk), xx)[0].astype(np.float64) * g))

            fd_x = np.zeros_like(x)
            for idx in np.ndindex(x.shape):
                e = np.zeros_like(x)
                e[idx] = h
                fd_x[idx] = (objective(x + e, k) - objective(x - e, k)) / (2 * h)
            fd_k = np.zeros(k.shape)
            for idx in np.ndindex(k.shape):
                e = np.zeros(k.shape)
                e[idx] = h
                fd_k[idx] = (objective(x, k + e) - objective(x, k - e)) / (2 * h)
            assert rel(grad_x, fd_x) <= 1e-3, f"grad_x instance {i}: {rel(grad_x, fd_x):.2e}"
            assert rel(grad_k, fd_k) <= 1e-3, f"grad_k instance {i}: {rel(grad_k, fd_k):.2e}"

        target = np.array([[0.5, -1.0], [2.0, 0.3]], dtype=np.float32)
        data = [random_tensor(2, 8, 8, seed=s) for s in range(4)]
        template = WccLayerSpec(np.zeros((2, 2)), WaveletSpec(3), 1.0)
        fit = wcc_toy_fit(target, template, data, steps=200, lr=0.1, seed=0)
        assert fit.losses[-1] <= 0.01 * fit.losses[0], f"ratio {fit.losses[-1] / fit.losses[0]:.3e}"


def test_12_separable_savings():
    with criterion(12, "separable ratio within 1% of 9c/(9+c); 64->64 triple exact"):
        c_out = 10_000
        ratio = separable_savings(64, c_out, 3, (16, 16))[3]
        limit = 9 * c_out / (9 + c_out)
        assert abs(ratio - limit) <= 0.01 * limit
        full, dw, pw, _ = separable_savings(64, 64, 3, (32, 32))
        assert (full, dw, pw) == (37_748_736, 589_824, 4_194_304)


def _sweep_csv(image, threads):
    env = dict(os.environ)
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        env[var] = str(threads)
    cmd = [sys.executable, "-m", "wcc.cli", "sweep", "--input", str(image)]
    return subprocess.run(cmd, env=env, capture_output=True, check=True).stdout


def test_13_determinism():
    with criterion(13, "CLI CSV byte-identical across runs and thread counts 1, 4"):
        image = DATA / "images" / "coffee.pgm"
        outputs = [_sweep_csv(image, t) for t in (1, 1, 4, 4)]
        assert outputs[0].startswith(b"effective_bits,")
        assert len(set(outputs)) == 1
