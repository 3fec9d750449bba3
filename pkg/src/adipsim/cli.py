"""Command-line frontend: analytic sweeps, simulator runs, workload reports.

Matrix files are plain text: a header line `rows cols width`, then the
row-major signed decimal elements separated by whitespace.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import os
import sys
from typing import IO, Iterator, Optional

import numpy as np

from . import analytic, cost, tiling, workload
from .preprocess import (
    Precision,
    PrecisionMode,
    deinterleave,
    inverse_permute,
    prepare_weights,
    read_packed,
    write_packed,
)
from .numerics import signed_range

SWEEP_SIZES = (4, 8, 16, 32, 64)


# -- matrix text files --------------------------------------------------------


def read_matrix(path: str) -> tuple[np.ndarray, int]:
    """Read `rows cols width` + row-major integers; returns (matrix, width)."""
    with open(path, "r", encoding="utf-8") as fh:
        tokens = fh.read().split()
    if len(tokens) < 3:
        raise ValueError(f"{path}: missing matrix header")
    rows, cols, width = (int(t) for t in tokens[:3])
    values = [int(t) for t in tokens[3:]]
    if len(values) != rows * cols:
        raise ValueError(f"{path}: expected {rows * cols} elements, found {len(values)}")
    matrix = np.array(values, dtype=np.int64).reshape(rows, cols)
    lo, hi = signed_range(width)
    if matrix.size and (matrix.min() < lo or matrix.max() > hi):
        raise ValueError(f"{path}: element outside signed {width}-bit range")
    return matrix, width


def write_matrix(matrix: np.ndarray, width: int, fh: IO[str]) -> None:
    rows, cols = matrix.shape
    fh.write(f"{rows} {cols} {width}\n")
    for row in matrix:
        fh.write(" ".join(str(int(v)) for v in row) + "\n")


@contextlib.contextmanager
def _open_out(path: Optional[str]) -> Iterator[IO[str]]:
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def _random_acts(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return rng.integers(-128, 128, size=(rows, cols), dtype=np.int64)


def _random_weights(rng: np.random.Generator, rows: int, cols: int, bits: int) -> np.ndarray:
    lo, hi = signed_range(bits)
    return rng.integers(lo, hi + 1, size=(rows, cols), dtype=np.int64)


# -- subcommands --------------------------------------------------------------


def cmd_analytic(args: argparse.Namespace) -> int:
    mul_counts = [int(tok) for tok in args.muls.split(",")]
    rows = analytic.sweep(
        size=args.size, mul_counts=mul_counts, clock_hz=args.clock_ghz * 1e9
    )
    with _open_out(args.out) as fh:
        analytic.write_sweep_csv(rows, fh)
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    precision = Precision.from_name(args.mode)
    n = args.size
    if bool(args.a) != bool(args.b):
        print("simulate: --a and --b must be given together", file=sys.stderr)
        return 2
    if args.a:
        a, a_width = read_matrix(args.a)
        if a_width != 8:
            print(f"simulate: input matrix must be 8-bit, got {a_width}", file=sys.stderr)
            return 2
        weights = []
        for path in args.b:
            w, w_width = read_matrix(path)
            if w_width > precision.weight_bits:
                print(
                    f"simulate: {path} is {w_width}-bit, mode allows "
                    f"{precision.weight_bits}",
                    file=sys.stderr,
                )
                return 2
            weights.append(w)
    else:
        rng = _rng(args.seed)
        m, k, p = args.m or 2 * n, args.k or 2 * n, args.p or 2 * n
        a = _random_acts(rng, m, k)
        weights = [
            _random_weights(rng, k, p, precision.weight_bits) for _ in range(args.nw)
        ]

    job = tiling.MatMulJob(a=a, weights=weights, precision=precision, n=n)
    trace_ctx = open(args.trace, "w", encoding="utf-8") if args.trace else None
    try:
        result = tiling.run_tiled(job, overlap_weights=args.overlap_weights, trace=trace_ctx)
    finally:
        if trace_ctx is not None:
            trace_ctx.close()
    golden = tiling.oracle_matmul(job)

    m_dim, k_dim, p_dim = job.shape
    print(f"array {n}x{n}  mode {precision.name} nw={len(weights)}")
    print(f"job {m_dim}x{k_dim} . {k_dim}x{p_dim} x{len(weights)} matrices")
    print(f"passes {result.pass_count}  cycles {result.total_cycles}")
    for t, (got, want) in enumerate(zip(result.outputs, golden)):
        if not np.array_equal(got, want):
            i, j = np.argwhere(got != want)[0]
            print(
                f"FAIL matrix {t} first mismatch at ({i}, {j}): "
                f"got {got[i, j]}, expected {want[i, j]}"
            )
            return 1
    print(f"PASS all {len(weights)} output matrices match the oracle exactly")
    return 0


def cmd_workload(args: argparse.Namespace) -> int:
    if args.model.endswith(".json") or os.path.exists(args.model):
        cfg = workload.load_config(args.model)
    else:
        cfg = workload.get_model(args.model)
    params = cost.CostParams(
        n=args.size,
        count_output_writes=args.count_output_writes,
        output_bytes=args.output_bytes,
    )

    print(
        f"model {cfg.name}: layers={cfg.layers} d_model={cfg.d_model} "
        f"heads={cfg.heads} d_k={cfg.d_k} seq_len={cfg.seq_len} "
        f"weights={cfg.weight_bits}b"
    )
    total = workload.total_ops(cfg)
    print(f"total matmul work: {total / 1e9:.2f} GOP")
    print("stage breakdown:")
    shares = workload.breakdown(cfg)
    for spec in workload.stages(cfg):
        kind = "proj" if spec.is_projection else "act-act"
        dims = f"{spec.m}x{spec.k}x{spec.p} x{spec.count}"
        print(
            f"  {spec.stage.label:<8} {kind:<7} {dims:<22}"
            f" {spec.ops / 1e9:10.2f} GOP  {100 * shares[spec.stage]:5.1f}%"
        )

    info = cost.summary(cfg, params)
    print(f"architecture comparison at {params.n}x{params.n}, {params.clock_hz / 1e9:g} GHz:")
    for arch in cost.Arch:
        t = info["totals"][arch.label]
        print(
            f"  {arch.label:<5} cycles {t['cycles']:>15,} ({1e3 * t['seconds']:9.2f} ms)"
            f"  energy {t['energy_rel']:>18,.0f}"
            f"  memory {t['mem_bytes'] / 2**30:8.3f} GiB"
        )
    vs = info["vs_dip"]
    print(f"ADiP vs DiP: projection latency improvement {vs['projection_latency_improvement_pct']:.1f}%")
    print(f"ADiP vs DiP: total latency improvement {vs['latency_improvement_pct']:.1f}%")
    print(f"ADiP vs DiP: total energy improvement {vs['energy_improvement_pct']:.1f}%")
    print(f"ADiP vs DiP: total memory savings {vs['memory_savings_pct']:.1f}%")

    if args.format == "json":
        with _open_out(args.out) as fh:
            json.dump(info, fh, indent=2)
            fh.write("\n")
    else:
        rows = [
            c
            for arch in cost.Arch
            for c in cost.evaluate(cfg, arch, params)
        ]
        with _open_out(args.out) as fh:
            cost.write_stage_csv(rows, fh)
    return 0


def cmd_interleave(args: argparse.Namespace) -> int:
    precision = Precision.from_name(args.mode)
    mode = PrecisionMode(precision, args.nw)
    n = args.size
    if args.infile:
        matrices = []
        for path in args.infile:
            matrix, width = read_matrix(path)
            if width > precision.weight_bits:
                print(
                    f"interleave: {path} is {width}-bit, mode allows "
                    f"{precision.weight_bits}",
                    file=sys.stderr,
                )
                return 2
            matrices.append(matrix)
        if len(matrices) != mode.nw:
            print(
                f"interleave: mode expects {mode.nw} matrices, got {len(matrices)}",
                file=sys.stderr,
            )
            return 2
    else:
        rng = _rng(args.seed)
        rows, cols = args.rows or n, args.cols or n
        matrices = [
            _random_weights(rng, rows, cols, precision.weight_bits)
            for _ in range(mode.nw)
        ]

    grid = prepare_weights(matrices, mode, n)
    with open(args.out, "wb") as fh:
        write_packed(grid, fh)
    print(
        f"packed {len(matrices)} matrices {matrices[0].shape[0]}x{matrices[0].shape[1]} "
        f"into {len(grid)}x{len(grid[0])} tiles of {n}x{n} words -> {args.out}"
    )
    for k, row in enumerate(grid):
        for j, tile in enumerate(row):
            print(f"tile {k} {j}")
            for word_row in tile.words:
                print(" ".join(f"{int(w):02x}" for w in word_row))

    if args.verify:
        with open(args.out, "rb") as fh:
            loaded = read_packed(fh)
        k_dim, p_dim = matrices[0].shape
        recovered = [np.zeros((len(grid) * n, len(grid[0]) * n), dtype=np.int64) for _ in matrices]
        for k, row in enumerate(loaded):
            for j, tile in enumerate(row):
                for t, wt in enumerate(deinterleave(tile)):
                    recovered[t][k * n : (k + 1) * n, j * n : (j + 1) * n] = inverse_permute(wt).data
        for t, matrix in enumerate(matrices):
            if not np.array_equal(recovered[t][:k_dim, :p_dim], matrix):
                print(f"FAIL round trip differs for matrix {t}")
                return 1
        print("PASS round trip recovers every matrix exactly")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    sizes = [int(tok) for tok in args.sizes.split(",")]
    params = cost.CostParams(n=32)
    with _open_out(args.out) as fh:
        fh.write("size,mode,throughput_gain,peak_tops,power_factor\n")
        for n in sizes:
            for precision in (Precision.W8, Precision.W4, Precision.W2):
                r = precision.r
                a = np.zeros((n, 2 * n), dtype=np.int64)
                ws = [np.zeros((2 * n, 2 * n), dtype=np.int64)] * r
                unfused = tiling.plan(tiling.MatMulJob(a, ws, Precision.W8, n)).pass_count
                fused = tiling.plan(tiling.MatMulJob(a, ws, precision, n)).pass_count
                gain = unfused // fused
                p = analytic.AnalyticParams.for_mode(n, precision.weight_bits)
                peak = analytic.peak_throughput(p, args.clock_ghz * 1e9) / 1e12
                factor = params.adip_power_by_size.get(n, float("nan"))
                fh.write(f"{n},{precision.name},{gain},{peak:.3f},{factor}\n")
    return 0


# -- entry point ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adipsim",
        description="Adaptive-precision diagonal-input systolic array: "
        "simulator, analytic models and attention-workload costs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analytic", help="emit the multiplier-count sweep CSV")
    p.add_argument("--size", type=int, default=64, help="array dimension n")
    p.add_argument("--muls", default="2,4,8,16", help="comma-separated 2-bit multiplier counts")
    p.add_argument("--clock-ghz", type=float, default=1.0)
    p.add_argument("--out", default="-", help="output CSV path (default stdout)")
    p.set_defaults(func=cmd_analytic)

    p = sub.add_parser("simulate", help="run matrices through the cycle simulator and check them")
    p.add_argument("--size", type=int, default=8, help="array dimension n")
    p.add_argument("--mode", default="w8", choices=("w8", "w4", "w2"))
    p.add_argument("--nw", type=int, default=1, help="number of weight matrices")
    p.add_argument("--m", type=int, help="input rows (default 2n)")
    p.add_argument("--k", type=int, help="shared dimension (default 2n)")
    p.add_argument("--p", type=int, help="output columns (default 2n)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--a", help="input matrix file (text format)")
    p.add_argument("--b", action="append", default=[], help="weight matrix file, repeatable")
    p.add_argument("--trace", help="write a per-cycle PE trace CSV here")
    p.add_argument("--overlap-weights", action="store_true", help="hide weight loads behind drains")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("workload", help="attention workload breakdown and architecture comparison")
    p.add_argument("model", help="builtin model name or a JSON geometry file")
    p.add_argument("--size", type=int, default=32, help="array dimension n")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default="-", help="artifact path (default stdout)")
    p.add_argument("--count-output-writes", action="store_true")
    p.add_argument("--output-bytes", type=int, default=1, choices=(1, 4))
    p.set_defaults(func=cmd_workload)

    p = sub.add_parser("interleave", help="permute and pack weight matrices, dump the tiles")
    p.add_argument("--size", type=int, default=4, help="array dimension n")
    p.add_argument("--mode", default="w8", choices=("w8", "w4", "w2"))
    p.add_argument("--nw", type=int, default=1)
    p.add_argument("--rows", type=int, help="generated matrix rows (default n)")
    p.add_argument("--cols", type=int, help="generated matrix cols (default n)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--in", dest="infile", action="append", help="weight matrix file, repeatable")
    p.add_argument("--out", required=True, help="packed binary output path")
    p.add_argument("--verify", action="store_true", help="read back and round-trip check")
    p.set_defaults(func=cmd_interleave)

    p = sub.add_parser("sweep", help="per-size gain/throughput table across precisions")
    p.add_argument("--sizes", default=",".join(str(s) for s in SWEEP_SIZES))
    p.add_argument("--clock-ghz", type=float, default=1.0)
    p.add_argument("--out", default="-", help="output CSV path (default stdout)")
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"adipsim: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
