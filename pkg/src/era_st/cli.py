"""Command-line interface: generate / build / verify / query / bench / stats.

Exit codes: 0 success, 1 verification failure or index corruption, 2 skewed
input (or usage error, per argparse convention), 3 I/O failure, 4 text digest
mismatch.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .bench import run_grid, run_worker_scaling, write_csv
from .blockio import STATS_CSV_FIELDS
from .errors import EraStError, IndexCorruptError, SkewedInputError
from .manifest import read_manifest
from .pipeline import STATS_NAME, build_index, open_index, verify_index
from .text import BuildConfig, generate_random_text, load_text

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_SKEW = 2
EXIT_IO = 3
EXIT_DIGEST = 4

DEFAULT_M = 2**22
DEFAULT_B = 2**12


def _read_config_file(path: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _resolve_config(args) -> BuildConfig:
    """Precedence: flags, then config file, then defaults.  The ERA_ST_THREADS
    environment variable overrides the worker count outright."""
    values = {
        "m": DEFAULT_M,
        "b": DEFAULT_B,
        "p": os.cpu_count() or 1,
        "max_prefix_len": None,
        "seed": 0,
    }
    if getattr(args, "config", None):
        file_values = _read_config_file(args.config)
        for key in ("m", "b", "p", "max_prefix_len", "seed"):
            if key in file_values:
                values[key] = int(file_values[key])
    for key in ("m", "b", "p", "max_prefix_len", "seed"):
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    env_p = os.environ.get("ERA_ST_THREADS")
    if env_p:
        values["p"] = int(env_p)
    return BuildConfig(
        memory_budget_m=values["m"],
        block_size_b=values["b"],
        workers_p=values["p"],
        max_prefix_len=values["max_prefix_len"],
        rng_seed=values["seed"],
    )


def _add_config_flags(parser: argparse.ArgumentParser, include_p: bool = True) -> None:
    parser.add_argument("--m", type=int, default=None, help="memory budget in symbols")
    parser.add_argument("--b", type=int, default=None, help="block size in symbols")
    if include_p:
        parser.add_argument("--p", type=int, default=None, help="worker count")
    parser.add_argument("--max-prefix-len", dest="max_prefix_len", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None, help="probe/bench seed")
    parser.add_argument("--config", default=None, help="key=value config file")


def cmd_generate(args) -> int:
    text = generate_random_text(args.n, args.sigma, args.seed if args.seed is not None else 0)
    Path(args.out).write_bytes(text.data)
    print(f"wrote {text.n} symbols (sigma={args.sigma}) to {args.out}")
    return EXIT_OK


def cmd_build(args) -> int:
    config = _resolve_config(args)
    try:
        text = load_text(args.text, args.sigma)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    notice = config.block_size_warning(text.n)
    if notice:
        print(f"note: {notice}", file=sys.stderr)
    try:
        result = build_index(text, config, args.out, check_invariants=args.check_invariants)
    except SkewedInputError as exc:
        print(f"skewed input: {exc}", file=sys.stderr)
        return EXIT_SKEW
    except OSError as exc:
        print(f"I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO
    print(
        f"built index in {result.out_dir}: {result.entry_count} subtrees, "
        f"{result.direct_count} direct leaves, {result.vtree_count} virtual trees"
    )
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        manifest = read_manifest(args.index)
    except IndexCorruptError as exc:
        print(f"corrupt index: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    try:
        text = load_text(args.text, manifest.sigma)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    outcome = verify_index(args.index, text)
    print(outcome.detail)
    return outcome.exit_code


def cmd_query(args) -> int:
    try:
        index = open_index(args.index)
    except IndexCorruptError as exc:
        print(f"corrupt index: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    pattern = args.pattern
    try:
        if args.mode == "exists":
            print("true" if index.exists(pattern) else "false")
        elif args.mode == "locate":
            print(" ".join(str(p) for p in index.locate(pattern)))
        else:
            length, witness = index.longest_prefix(pattern)
            print(f"{length} {witness}" if witness is not None else f"{length}")
    except IndexCorruptError as exc:
        print(f"corrupt index: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def cmd_stats(args) -> int:
    path = Path(args.index) / STATS_NAME
    if not path.exists():
        print(f"corrupt index: {path} missing", file=sys.stderr)
        return EXIT_VERIFY
    content = path.read_text()
    header = content.splitlines()[0] if content else ""
    if header.split(",") != list(STATS_CSV_FIELDS):
        print(f"corrupt index: unexpected stats header {header!r}", file=sys.stderr)
        return EXIT_VERIFY
    sys.stdout.write(content)
    return EXIT_OK


def cmd_bench(args) -> int:
    config = _resolve_config(args)
    seed = args.seed if args.seed is not None else 0
    if args.bench_mode == "grid":
        seeds = args.seeds if args.seeds else [seed]
        rows = run_grid(args.n, args.sigma, config, seeds)
    else:
        rows = run_worker_scaling(args.n[0], args.sigma[0], args.p_values, config, seed)
    write_csv(rows, args.out)
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="era-st",
        description="Two-phase external-memory suffix tree builder and query engine",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("generate", help="write a uniform random symbol file")
    p_gen.add_argument("--n", type=int, required=True)
    p_gen.add_argument("--sigma", type=int, required=True)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out", required=True)
    p_gen.set_defaults(func=cmd_generate)

    p_build = sub.add_parser("build", help="build an index directory")
    p_build.add_argument("text", help="input text file, one symbol per byte")
    p_build.add_argument("--sigma", type=int, required=True)
    p_build.add_argument("--out", required=True, help="index directory")
    p_build.add_argument("--check-invariants", action="store_true")
    _add_config_flags(p_build)
    p_build.set_defaults(func=cmd_build)

    p_verify = sub.add_parser("verify", help="compare an index against the brute-force reference")
    p_verify.add_argument("index")
    p_verify.add_argument("text")
    p_verify.set_defaults(func=cmd_verify)

    p_query = sub.add_parser("query", help="run a query against an index")
    p_query.add_argument("index")
    p_query.add_argument("mode", choices=("exists", "locate", "longest"))
    p_query.add_argument("pattern")
    p_query.set_defaults(func=cmd_query)

    p_stats = sub.add_parser("stats", help="print the transfer-counter CSV of a build")
    p_stats.add_argument("index")
    p_stats.set_defaults(func=cmd_stats)

    p_bench = sub.add_parser("bench", help="benchmark grids and scaling sweeps")
    bench_sub = p_bench.add_subparsers(dest="bench_mode", required=True)
    p_grid = bench_sub.add_parser("grid")
    p_grid.add_argument("--n", type=int, nargs="+", required=True)
    p_grid.add_argument("--sigma", type=int, nargs="+", required=True)
    p_grid.add_argument("--seeds", type=int, nargs="*", default=None)
    p_grid.add_argument("--out", required=True)
    _add_config_flags(p_grid)
    p_grid.set_defaults(func=cmd_bench)
    p_scale = bench_sub.add_parser("scaling")
    p_scale.add_argument("--n", type=int, nargs="+", required=True)
    p_scale.add_argument("--sigma", type=int, nargs="+", required=True)
    p_scale.add_argument("--p", dest="p_values", type=int, nargs="+", required=True)
    p_scale.add_argument("--out", required=True)
    _add_config_flags(p_scale, include_p=False)
    p_scale.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        code = args.func(args)
    except EraStError as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_VERIFY
    except OSError as exc:
        print(f"I/O failure: {exc}", file=sys.stderr)
        code = EXIT_IO
    if argv is None:
        sys.exit(code)
    return code


if __name__ == "__main__":
    main()
