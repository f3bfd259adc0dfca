"""Single-run execution, seeded batch replication, and file outputs.

A run is fully determined by (config, seed).  Batches execute runs with
seeds base_seed + i; aggregation is a deterministic fold in seed order, so
parallel and sequential batches produce identical summaries.
"""

from __future__ import annotations

import csv
import multiprocessing
import os
from pathlib import Path

from .config import (
    ScenarioConfig,
    config_from_dict,
    config_to_dict,
    dump_toml,
)
from .epidemic import seed_infection
from .metrics import BatchSummary, RunMetrics, summarize
from .world import generate_population, step_world


def run_single(config: ScenarioConfig, seed: int, observer=None) -> RunMetrics:
    """Build a world, seed the infection, and step ticks_total times."""
    world = generate_population(config, seed)
    seed_infection(world, config.epidemic.initial_infected)
    rows = []
    for _ in range(config.run.ticks_total):
        row = step_world(world)
        rows.append(row)
        if observer is not None:
            observer(world, row)
    return RunMetrics(seed, rows)


def _run_task(args) -> RunMetrics:
    config, seed = args
    return run_single(config, seed)


def batch_seeds(config: ScenarioConfig) -> list[int]:
    return [config.run.base_seed + i for i in range(config.run.runs)]


def run_batch(config: ScenarioConfig,
              parallel: int = 1) -> tuple[BatchSummary, list[RunMetrics]]:
    """Execute config.run.runs independent runs and aggregate.

    Runs share nothing; with parallel > 1 they fan out across worker
    processes, and results are folded in seed order regardless of
    completion order.
    """
    seeds = batch_seeds(config)
    tasks = [(config, s) for s in seeds]
    if parallel > 1 and len(tasks) > 1:
        with multiprocessing.Pool(min(parallel, len(tasks))) as pool:
            per_run = pool.map(_run_task, tasks)
    else:
        per_run = [_run_task(t) for t in tasks]
    per_run.sort(key=lambda rm: rm.seed)
    return summarize(per_run), per_run


# ---------------------------------------------------------------------------
# Outputs

def _format_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_run_csv(metrics: RunMetrics, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(metrics.columns)
        for row in metrics.rows:
            writer.writerow([_format_cell(v) for v in row])


def write_summary_csv(summary: BatchSummary, path: Path) -> None:
    header = ["tick"]
    for col in summary.columns[1:]:
        header.extend([f"{col}_mean", f"{col}_sd", f"{col}_ci95"])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for t in range(len(summary.mean)):
            row = [int(summary.mean[t][0])]
            for c in range(1, len(summary.columns)):
                row.extend([
                    _format_cell(summary.mean[t][c]),
                    _format_cell(summary.sd[t][c]),
                    _format_cell(summary.ci95[t][c]),
                ])
            writer.writerow(row)
        writer.writerow(["# peak_infected_mean", repr(summary.peak_infected_mean),
                         "", ""])
        writer.writerow(["# peak_tick_mean", repr(summary.peak_tick_mean),
                         "", ""])
        writer.writerow(["# deaths_mean", repr(summary.deaths_mean), "", ""])


def write_manifest(config: ScenarioConfig, seeds: list[int],
                   path: Path) -> None:
    from . import __version__

    manifest = {
        "meta": {"version": __version__, "seeds": list(seeds)},
        "config": config_to_dict(config),
    }
    if not manifest["config"]["needs"]["gains"]:
        del manifest["config"]["needs"]["gains"]
    path.write_text(dump_toml(manifest))


def read_manifest(path: Path) -> tuple[ScenarioConfig, list[int]]:
    try:
        import tomllib
    except ModuleNotFoundError:  # pragma: no cover
        import tomli as tomllib
    data = tomllib.loads(Path(path).read_text())
    meta = data.pop("meta")
    config = config_from_dict(data["config"])
    return config, list(meta["seeds"])


def write_outputs(per_run: list[RunMetrics], summary: BatchSummary,
                  out_dir, config: ScenarioConfig) -> list[Path]:
    """Write run_<i>.csv, summary.csv, and manifest.toml under out_dir."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        written = []
        for i, metrics in enumerate(per_run):
            path = out / f"run_{i}.csv"
            write_run_csv(metrics, path)
            written.append(path)
        summary_path = out / "summary.csv"
        write_summary_csv(summary, summary_path)
        written.append(summary_path)
        manifest_path = out / "manifest.toml"
        write_manifest(config, [rm.seed for rm in per_run], manifest_path)
        written.append(manifest_path)
    except OSError as exc:
        raise OSError(f"writing outputs under {out}: {exc}") from exc
    return written


def replay_from_manifest(path, parallel: int = 1):
    """Re-execute the batch a manifest describes; bit-identical outputs."""
    config, seeds = read_manifest(Path(path))
    base = seeds[0] if seeds else config.run.base_seed
    config.run.base_seed = base
    config.run.runs = len(seeds) if seeds else config.run.runs
    return run_batch(config, parallel=parallel)


def default_out_dir() -> str:
    return os.environ.get("POLISIM_OUT_DIR", "out")
