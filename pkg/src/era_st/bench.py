"""Benchmark harness: phase timings and transfer counters over an N x sigma
grid, plus a worker-scaling sweep.

Counters, not cache flushes, carry the measurement: the accounting layer is
independent of the OS page cache, so repeated runs with one seed produce
identical transfer counts while wall times vary.  All positions and counters
are 64-bit.
"""

from __future__ import annotations

import csv
import io
import tempfile
from dataclasses import replace
from pathlib import Path

from .blockio import PHASE_HORIZONTAL, PHASE_SERIALIZE, PHASE_VERTICAL, total_counters
from .errors import BuildError
from .pipeline import BuildResult, build_index, index_digest
from .text import BuildConfig, generate_random_text

GRID_CSV_FIELDS = (
    "n",
    "sigma",
    "seed",
    "phase",
    "p",
    "wall_ms",
    "blocks_read",
    "blocks_written",
    "full_scans",
    "vtree_count",
    "cnt1_ms",
    "cnt_star_ms",
    "skewed_flag",
)


def _phase_rows(n: int, sigma: int, seed: int, config: BuildConfig, result: BuildResult):
    """One row per executed phase; a skewed build flags the phase it died in."""
    vertical = [s for s in result.stats if s.phase_tag == PHASE_VERTICAL]
    horizontal = [
        s for s in result.stats if s.phase_tag in (PHASE_HORIZONTAL, PHASE_SERIALIZE)
    ]
    skew_phase = result.skewed.phase if result.skewed else None
    rows = []
    vert = total_counters(vertical)
    rows.append(
        {
            "n": n,
            "sigma": sigma,
            "seed": seed,
            "phase": PHASE_VERTICAL,
            "p": config.workers_p,
            "wall_ms": round(result.wall_vertical_s * 1000.0, 3),
            "blocks_read": vert["blocks_read"],
            "blocks_written": vert["blocks_written"],
            "full_scans": vert["full_scans"],
            "vtree_count": result.vtree_count,
            "cnt1_ms": 0.0,
            "cnt_star_ms": 0.0,
            "skewed_flag": 1 if skew_phase == PHASE_VERTICAL else 0,
        }
    )
    if skew_phase == PHASE_VERTICAL:
        return rows
    horiz = total_counters(horizontal)
    rows.append(
        {
            "n": n,
            "sigma": sigma,
            "seed": seed,
            "phase": PHASE_HORIZONTAL,
            "p": config.workers_p,
            "wall_ms": round(result.wall_horizontal_s * 1000.0, 3),
            "blocks_read": horiz["blocks_read"],
            "blocks_written": horiz["blocks_written"],
            "full_scans": horiz["full_scans"],
            "vtree_count": result.vtree_count,
            "cnt1_ms": round(result.cnt1_s * 1000.0, 3),
            "cnt_star_ms": round(result.cnt_star_s * 1000.0, 3),
            "skewed_flag": 1 if skew_phase == PHASE_HORIZONTAL else 0,
        }
    )
    return rows


def run_grid(
    n_values,
    sigma_values,
    config: BuildConfig,
    seeds,
) -> list[dict]:
    """Build every (N, sigma, seed) point sequentially and collect phase rows."""
    for n in n_values:
        for sigma in sigma_values:
            if n < sigma:
                raise ValueError(f"grid point n={n} below sigma={sigma}")
    rows: list[dict] = []
    for n in n_values:
        for sigma in sigma_values:
            for seed in seeds:
                text = generate_random_text(n, sigma, seed)
                cfg = replace(config, rng_seed=seed)
                with tempfile.TemporaryDirectory(prefix="era_grid_") as tmp:
                    result = build_index(text, cfg, tmp, on_skew="return")
                rows.extend(_phase_rows(n, sigma, seed, cfg, result))
    return rows


def run_worker_scaling(
    n: int,
    sigma: int,
    p_values,
    config: BuildConfig,
    seed: int,
) -> list[dict]:
    """Rebuild one input at each worker count; the index digest must agree."""
    text = generate_random_text(n, sigma, seed)
    rows: list[dict] = []
    digests: dict[int, str] = {}
    for p in p_values:
        cfg = replace(config, workers_p=p, rng_seed=seed)
        with tempfile.TemporaryDirectory(prefix="era_scaling_") as tmp:
            result = build_index(text, cfg, tmp, on_skew="return")
            if result.skewed is None:
                digests[p] = index_digest(tmp)
        rows.extend(_phase_rows(n, sigma, seed, cfg, result))
    if len(set(digests.values())) > 1:
        raise BuildError(
            b"", f"index digest varies with worker count: {sorted(digests.items())}"
        )
    return rows


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=GRID_CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def write_csv(rows, path: str | Path) -> None:
    Path(path).write_text(rows_to_csv(rows))
