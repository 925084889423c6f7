"""Replicated runs, scaling sweeps and log-log slope fits."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..datagen import MixingModel
from ..diagnostics import RunTrace
from ..errors import FitFailedError
from ..solver import FIXED, StepsizeSchedule, run
from .config import DEFAULT_REGIME_LIMIT, ExperimentConfig
from .output import SUMMARY_HEADER, write_rows, write_scaling_csv, write_trace_csv

log = logging.getLogger(__name__)


@dataclass
class RunRecord:
    run_id: str
    d: int
    T: int
    replication: int
    seed: int
    trace: RunTrace


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    runs: list[RunRecord]
    files: list[Path] = field(default_factory=list)

    def by_point(self) -> dict[tuple[int, int], list[RunRecord]]:
        out: dict = {}
        for r in self.runs:
            out.setdefault((r.d, r.T), []).append(r)
        return out


@dataclass
class ScalingPoint:
    value: int
    mean_error: float
    stderr: float
    n_runs: int


@dataclass
class ScalingSummary:
    axis: str
    points: list[ScalingPoint]
    fitted_slope: float
    slope_stderr: float
    intercept: float = math.nan
    excluded: list[int] = field(default_factory=list)
    result: ExperimentResult | None = None


def replication_seeds(base_seed: int, d: int, T: int, r: int) -> tuple[int, int]:
    """Independent ``(mixing_seed, run_seed)`` for one replication."""
    ss = np.random.SeedSequence([base_seed, d, T, r])
    words = ss.generate_state(2, np.uint64)
    return int(words[0]), int(words[1])


def regime_ratio(d: int, T: int) -> float:
    return d**4 / T


def _run_one(job):
    cfg, d, T, r = job
    mix_seed, run_seed = replication_seeds(cfg.seed, d, T, r)
    model = MixingModel.random(d, cfg.source(), mix_seed)
    sched = StepsizeSchedule.for_model(
        cfg.schedule, T, model, eta=cfg.eta if cfg.schedule == FIXED else None, B=cfg.B
    )
    trace = run(
        model, T, sched, init=cfg.init, seed=run_seed,
        record_stride=cfg.record_stride, full_resolution=cfg.full_resolution,
        window_fraction=cfg.window_fraction,
    )
    trace.config_fingerprint = cfg.fingerprint()
    return RunRecord(f"{cfg.name}-d{d}-T{T}-r{r}", d, T, r, run_seed, trace)


def execute(cfg: ExperimentConfig) -> list[RunRecord]:
    """Run every replication of every ``(d, T)`` point; output order is fixed."""
    jobs = [(cfg, d, T, r) for d, T in cfg.points() for r in range(cfg.replications)]
    for d, T in cfg.points():
        # validate schedules up front so infeasible configs fail before any work
        StepsizeSchedule.for_model(cfg.schedule, T, MixingModel(np.eye(d), cfg.source()),
                                   eta=cfg.eta if cfg.schedule == FIXED else None, B=cfg.B)
        if regime_ratio(d, T) > DEFAULT_REGIME_LIMIT:
            log.warning("d=%d, T=%d: d^4/T = %.3g is outside the regime where the "
                        "convergence guarantees apply; running anyway", d, T, regime_ratio(d, T))
    workers = cfg.resolved_workers()
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as pool:
            records = list(pool.map(_run_one, jobs))
    else:
        records = [_run_one(j) for j in jobs]
    records.sort(key=lambda rec: (cfg.points().index((rec.d, rec.T)), rec.replication))
    return records


def summary_rows(runs):
    for rec in runs:
        tr = rec.trace
        yield (rec.run_id, rec.d, rec.T, rec.replication, rec.seed, tr.final_error,
               tr.window_mean_error, tr.first_warm_t, tr.final_index)


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> ExperimentResult:
    """Run all replications; writes one trace CSV per run plus ``<name>_summary.csv``."""
    result = ExperimentResult(cfg, execute(cfg))
    if write:
        out = Path(cfg.output_dir)
        for rec in result.runs:
            result.files.append(
                write_trace_csv(out / "traces" / f"{rec.run_id}.csv", [(rec.run_id, rec.trace)])
            )
        result.files.append(write_rows(out / f"{cfg.name}_summary.csv", SUMMARY_HEADER,
                                       summary_rows(result.runs)))
    return result


def fit_loglog(x, y) -> tuple[float, float, float]:
    """OLS of ``log y`` on ``log x``; returns ``(slope, intercept, slope_stderr)``."""
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    n = len(lx)
    if n < 3:
        raise FitFailedError(f"need at least 3 points for a slope fit, got {n}")
    mx, my = lx.mean(), ly.mean()
    sxx = np.sum((lx - mx) ** 2)
    if sxx == 0:
        raise FitFailedError("all x values are equal")
    slope = np.sum((lx - mx) * (ly - my)) / sxx
    intercept = my - slope * mx
    resid = ly - (intercept + slope * lx)
    s2 = np.sum(resid**2) / (n - 2)
    return float(slope), float(intercept), float(math.sqrt(s2 / sxx))


def summarize(result: ExperimentResult, max_regime_ratio: float | None = None) -> ScalingSummary:
    cfg = result.config
    axis = cfg.axis
    if axis is None:
        raise FitFailedError("scaling needs a list-valued d or T")
    points, xs, ys, excluded = [], [], [], []
    for (d, T), recs in result.by_point().items():
        errs = np.array([r.trace.window_mean_error for r in recs])
        mean = float(errs.mean())
        se = float(errs.std(ddof=1) / math.sqrt(len(errs))) if len(errs) > 1 else math.nan
        value = d if axis == "d" else T
        points.append(ScalingPoint(value, mean, se, len(errs)))
        if not (math.isfinite(mean) and mean > 0):
            log.warning("%s=%d: mean error %r excluded from the fit", axis, value, mean)
            excluded.append(value)
        elif max_regime_ratio is not None and regime_ratio(d, T) > max_regime_ratio:
            log.info("%s=%d: outside regime (d^4/T=%.3g), excluded from the fit",
                     axis, value, regime_ratio(d, T))
            excluded.append(value)
        else:
            xs.append(value)
            ys.append(mean)
    slope, intercept, slope_se = fit_loglog(xs, ys)
    return ScalingSummary(axis, points, slope, slope_se, intercept, excluded, result)


def scaling_sweep(cfg: ExperimentConfig, write: bool = True) -> ScalingSummary:
    """Run a sweep over the list-valued axis and fit the log-log slope of
    the mean final-window error."""
    if cfg.axis is None:
        raise FitFailedError("scaling needs a list-valued d or T")
    result = run_experiment(cfg, write=write)
    summary = summarize(result, cfg.max_regime_ratio)
    if write:
        result.files.append(
            write_scaling_csv(Path(cfg.output_dir) / f"{cfg.name}_scaling.csv", summary)
        )
    return summary


def emit_plot_data(obj, path) -> Path:
    """Write traces (iterable of ``(run_id, RunTrace)`` or an
    :class:`ExperimentResult`) or a :class:`ScalingSummary` as CSV."""
    if isinstance(obj, ScalingSummary):
        return write_scaling_csv(path, obj)
    if isinstance(obj, ExperimentResult):
        obj = [(r.run_id, r.trace) for r in obj.runs]
    return write_trace_csv(path, obj)
