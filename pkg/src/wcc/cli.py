"""Command line front-end: ``wcc analyze | sweep | cost | bench``.

Exit codes: 0 on success, 1 for usage errors, 2 for bad input data.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from importlib import resources
from pathlib import Path

from wcc.analysis import analyze, sweep
from wcc.bench import BenchCheckError, run_bench
from wcc.cost import CostError, LayerSpecError, format_report, network_report
from wcc.haar import WaveletDimensionError
from wcc.tensor_io import PGMError, RawSizeError, load_pgm, load_raw

EXIT_USAGE = 1
EXIT_DATA = 2

BUILTIN_SPECS = {"mobilenetv2": "mobilenetv2.txt", "pw160-960": "pw_160_960.txt"}
CSV_HEADER = ["effective_bits", "quant_mse", "wavelet_mse"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _rate(text: str) -> float:
    value = float(text)
    if not 0 < value <= 1:
        raise argparse.ArgumentTypeError(f"rate must be in (0, 1], got {text}")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _bits(text: str) -> int:
    value = int(text)
    if not 2 <= value <= 16:
        raise argparse.ArgumentTypeError(f"bits must be in [2, 16], got {text}")
    return value


def load_input(path: str, shape):
    if path.lower().endswith(".pgm"):
        return load_pgm(path)
    if shape is None:
        raise UsageError("raw inputs need --shape C H W")
    return load_raw(path, *shape)


def builtin_spec_path(name: str) -> Path:
    return Path(str(resources.files("wcc") / "data" / BUILTIN_SPECS[name]))


def _add_input(p):
    p.add_argument("--input", required=True, help="PGM image or raw little-endian float32 file")
    p.add_argument("--shape", type=_positive, nargs=3, metavar=("C", "H", "W"), help="dimensions of a raw input")
    p.add_argument("--levels", type=_positive, default=3)


def cmd_analyze(args, out):
    x = load_input(args.input, args.shape)
    a = analyze(x, levels=args.levels, rate=args.rate, bits=args.bits)
    c, h, w = x.shape
    print(f"{'input':<16}{args.input} ({c}x{h}x{w})", file=out)
    print(f"{'levels':<16}{args.levels}", file=out)
    print(f"{'rate':<16}{a.rate:.6g}", file=out)
    print(f"{'kept':<16}{a.kept}/{a.plane_size}", file=out)
    print(f"{'effective_bits':<16}{a.effective_bits:.4f}", file=out)
    print(f"{'quant_bits':<16}{a.bits}", file=out)
    print(f"{'quant_mse':<16}{a.quant_mse:.6e}", file=out)
    print(f"{'wavelet_mse':<16}{a.wavelet_mse:.6e}", file=out)


def sweep_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in rows:
        writer.writerow([repr(r.effective_bits), repr(r.quant_mse), repr(r.wavelet_mse)])
    return buf.getvalue()


def cmd_sweep(args, out):
    x = load_input(args.input, args.shape)
    text = sweep_csv(sweep(x, levels=args.levels))
    if args.out in (None, "-"):
        out.write(text)
    else:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)


def cmd_cost(args, out):
    spec = builtin_spec_path(args.spec) if args.spec in BUILTIN_SPECS else args.spec
    report = network_report(spec, b_w=args.bw, b_a=args.ba, rate=args.rate, levels=args.levels)
    print(format_report(report), file=out)


def cmd_bench(args, out):
    r = run_bench(args.cin, args.expansion, args.size, args.rate, args.trials, args.seed)
    print(
        f"config    cin={args.cin} expansion={args.expansion} size={args.size} "
        f"rate={args.rate:g} trials={r.trials} seed={args.seed}",
        file=out,
    )
    print(f"check     lossless_rel_diff={r.lossless_rel_diff:.3e}", file=out)
    print(f"standard  mean={r.standard_mean:.6f}s min={min(r.standard_times):.6f}s", file=out)
    print(f"wcc       mean={r.wcc_mean:.6f}s min={min(r.wcc_times):.6f}s", file=out)
    print(f"speedup   {r.speedup:.3f}", file=out)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wcc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("analyze", help="quantization vs. wavelet compression error on one input")
    _add_input(p)
    p.add_argument("--rate", type=_rate, default=0.25)
    p.add_argument("--bits", type=_bits, default=2)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("sweep", help="CSV of both errors for effective bit rates 2..8")
    _add_input(p)
    p.add_argument("--out", help="CSV path (default: standard output)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("cost", help="MAC/BOP report for a layer-spec file")
    p.add_argument("--spec", required=True, help=f"layer-spec file or one of {sorted(BUILTIN_SPECS)}")
    p.add_argument("--bw", type=_positive, default=8)
    p.add_argument("--ba", type=_positive, default=8)
    p.add_argument("--rate", type=_rate, help="cost dense 1x1 layers as WCC layers at this rate")
    p.add_argument("--levels", type=_positive, default=3)
    p.set_defaults(func=cmd_cost)

    p = sub.add_parser("bench", help="time a dense vs. WCC inverted residual block")
    p.add_argument("--cin", type=_positive, default=256)
    p.add_argument("--expansion", type=_positive, default=4)
    p.add_argument("--size", type=_positive, default=128)
    p.add_argument("--rate", type=_rate, default=0.25)
    p.add_argument("--trials", type=_positive, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args, out)
    except UsageError as exc:
        print(f"wcc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (
        OSError,
        PGMError,
        RawSizeError,
        LayerSpecError,
        CostError,
        WaveletDimensionError,
        BenchCheckError,
        ValueError,
    ) as exc:
        print(f"wcc: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return 0


if __name__ == "__main__":
    sys.exit(main())
