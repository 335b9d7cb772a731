"""Multi-seed orchestration, trace aggregation, and summary reporting.

Per-seed traces and aggregates are plain CSV and are byte-identical across
re-runs of the same spec and seeds. Wall-clock timings appear only in the
summary, never in the CSVs.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .categorical import write_coeff_csv
from .config import ExperimentSpec, RunSpec
from .recursions import TRACE_COLUMNS, IterateTrace, RunConfig, run

AGG_COLUMNS = ("residual_G", "residual_h", "gain_err", "product_residual")


@dataclass
class RunResult:
    spec: RunSpec
    seeds: list
    traces: list
    wall_clock_s: float


@dataclass
class SummaryReport:
    experiment: str
    entries: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c["passed"] for e in self.entries for c in e["checks"])

    def to_json(self) -> str:
        return json.dumps(
            {"experiment": self.experiment, "passed": self.passed, "runs": self.entries},
            indent=2,
            sort_keys=True,
        )


def _run_config(spec: ExperimentSpec, rspec: RunSpec, seed: int, iterations: int) -> RunConfig:
    return RunConfig(
        mrp=spec.mrp,
        grid=spec.grid,
        schedule=rspec.schedule,
        num_iterations=iterations,
        seed=seed,
        mode=rspec.mode,
        rho=rspec.rho,
        initial_state=rspec.initial_state,
        lam=rspec.lam,
        g0=rspec.g0,
    )


def execute_run(spec: ExperimentSpec, rspec: RunSpec, seeds, threads: int = 1, iterations=None) -> RunResult:
    iters = iterations or rspec.iterations
    configs = [_run_config(spec, rspec, seed, iters) for seed in seeds]
    start = time.perf_counter()
    if threads > 1 and len(configs) > 1 and rspec.mode != "exact_km":
        with ThreadPoolExecutor(max_workers=threads) as pool:
            traces = list(pool.map(run, configs))
    else:
        traces = [run(c) for c in configs]
    return RunResult(rspec, list(seeds), traces, time.perf_counter() - start)


def _column_matrix(traces, name):
    rows = []
    for t in traces:
        vals = t.columns[name]
        rows.append([math.nan if v is None else float(v) for v in vals])
    return np.asarray(rows)


def aggregate_columns(traces) -> dict:
    """Mean and standard error per logged iteration over the seed axis."""
    ks = traces[0].column("k")
    out = {"k": ks, "alpha": traces[0].column("alpha"), "rate_guide": traces[0].column("rate_guide")}
    n = len(traces)
    for name in AGG_COLUMNS:
        mat = _column_matrix(traces, name)
        if np.all(np.isnan(mat)):
            out[f"mean_{name}"] = np.full(ks.shape, math.nan)
            out[f"stderr_{name}"] = np.full(ks.shape, math.nan)
            continue
        out[f"mean_{name}"] = mat.mean(axis=0)
        out[f"stderr_{name}"] = mat.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.zeros(ks.shape)
    return out


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return f"{v:.17g}"


def write_aggregate_csv(path, agg: dict) -> None:
    names = list(agg.keys())
    n = len(agg["k"])
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(names) + "\n")
        for r in range(n):
            cells = [str(int(agg["k"][r])) if name == "k" else _fmt(agg[name][r]) for name in names]
            fh.write(",".join(cells) + "\n")


def read_csv_columns(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        cols = {h: [] for h in header}
        for line in fh:
            for h, cell in zip(header, line.rstrip("\n").split(",")):
                cols[h].append(math.nan if cell == "" else float(cell))
    return {h: np.asarray(v) for h, v in cols.items()}


def _final_mean(agg: dict, column: str) -> float:
    return float(agg[f"mean_{column}"][-1])


def _decay_ratio(agg: dict, column: str) -> float:
    series = agg[f"mean_{column}"]
    return float(series[0] / series[-1])


def evaluate_checks(rspec: RunSpec, agg: dict) -> list:
    checks = []
    for col, bound in sorted(rspec.max_final.items()):
        value = _final_mean(agg, col)
        checks.append(
            {
                "name": f"final mean_{col} <= {bound:g}",
                "threshold": bound,
                "value": value,
                "passed": bool(value <= bound),
            }
        )
    for col, ratio in sorted(rspec.min_decay.items()):
        value = _decay_ratio(agg, col)
        checks.append(
            {
                "name": f"decay of mean_{col} >= {ratio:g}x",
                "threshold": ratio,
                "value": value,
                "passed": bool(value >= ratio),
            }
        )
    return checks


def run_experiment(
    spec: ExperimentSpec,
    *,
    out_dir=None,
    num_seeds=None,
    seed_base=None,
    iterations=None,
    include_optional=(),
    only_modes=None,
    threads: int = 1,
) -> SummaryReport:
    """Execute all selected runs across seeds and write traces + summary.

    include_optional names optional runs to add ("all" for every one);
    only_modes, when given, keeps just the runs whose mode is listed.
    """
    out = Path(out_dir or spec.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    n_seeds = num_seeds if num_seeds is not None else spec.num_seeds
    base = seed_base if seed_base is not None else spec.seed_base
    report = SummaryReport(spec.name)
    selected = []
    for rspec in spec.runs:
        if rspec.optional and not (
            "all" in include_optional or rspec.name in include_optional or rspec.mode in include_optional
        ):
            continue
        if only_modes and rspec.mode not in only_modes and rspec.name not in only_modes:
            continue
        selected.append(rspec)
    for rspec in selected:
        seeds = [base + i for i in range(n_seeds if rspec.mode != "exact_km" else 1)]
        result = execute_run(spec, rspec, seeds, threads=threads, iterations=iterations)
        rdir = out / rspec.name
        rdir.mkdir(parents=True, exist_ok=True)
        for seed, trace in zip(result.seeds, result.traces):
            trace.to_csv(rdir / f"seed_{seed}.csv")
            write_coeff_csv(rdir / f"final_coeffs_seed_{seed}.csv", trace.final_coeffs, spec.grid)
        agg = aggregate_columns(result.traces)
        write_aggregate_csv(rdir / "aggregate.csv", agg)
        checks = evaluate_checks(rspec, agg)
        entry = {
            "name": rspec.name,
            "mode": rspec.mode,
            "seeds": result.seeds,
            "iterations": iterations or rspec.iterations,
            "final": {
                col: {
                    "mean": _none_if_nan(_final_mean(agg, col)),
                    "stderr": _none_if_nan(float(agg[f"stderr_{col}"][-1])),
                }
                for col in AGG_COLUMNS
            },
            "checks": checks,
            "wall_clock_s": round(result.wall_clock_s, 3),
        }
        report.entries.append(entry)
    (out / "summary.json").write_text(report.to_json() + "\n", encoding="utf-8")
    return report


def _none_if_nan(v: float):
    return None if (isinstance(v, float) and math.isnan(v)) else v
