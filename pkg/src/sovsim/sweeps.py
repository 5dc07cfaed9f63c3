"""Trajectories, parameter grids and transfer-threshold bisection.

Runs are seeded from ``(base_seed, run index)`` only, so every grid point
sees the same population of systems (common random numbers).  Results are
collected in submission order, which makes them independent of how many
worker processes execute them.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from .dynamics import advance
from .metrics import MetricsFrame, compute_frame, sovereign
from .model import ConfigError, SystemState, derive_seed, set_path, state_from_dict


class NoBracketError(ValueError):
    pass


class NonMonotoneError(ValueError):
    def __init__(self, message: str, measurements):
        super().__init__(message)
        self.measurements = measurements


@dataclass(frozen=True)
class BoundaryEvent:
    """Boundary fields replaced just before the state at ``step`` advances."""

    step: int
    changes: Mapping[str, Any]


def run_trajectory(state: SystemState, horizon: int, events: Sequence[BoundaryEvent] = ()) -> list[MetricsFrame]:
    """Frames for steps ``0..horizon`` (``horizon + 1`` frames)."""
    if not 0 <= horizon <= 10**6:
        raise ValueError("horizon must lie in [0, 1e6]")
    pending = {e.step: e for e in events}
    s = state
    frames = []
    for k in range(horizon + 1):
        if k in pending:
            s = replace(s, boundaries=replace(s.boundaries, **pending[k].changes))
        frames.append(compute_frame(s))
        if k < horizon:
            s, _ = advance(s)
    return frames


def first_transfer_step(state: SystemState, horizon: int) -> int | None:
    s = state
    for k in range(horizon + 1):
        if sovereign(s)[1]:
            return k
        if k < horizon:
            s, _ = advance(s)
    return None


# ------------------------------------------------------------------ grids


@dataclass(frozen=True)
class SweepSpec:
    parameter_path: str
    values: tuple[float, ...] | None = None
    lo: float | None = None
    hi: float | None = None
    count: int | None = None
    log: bool = False
    runs_per_point: int = 10
    horizon: int = 100
    base_seed: int = 0

    def __post_init__(self):
        if self.runs_per_point < 1:
            raise ConfigError("runs_per_point must be >= 1")
        if self.values is None:
            if self.lo is None or self.hi is None or self.count is None:
                raise ConfigError("grid needs explicit values or lo, hi and count")
            if not self.lo < self.hi:
                raise ConfigError("lo < hi required")
            if self.count < 1:
                raise ConfigError("count must be >= 1")
            if self.log and self.lo <= 0:
                raise ConfigError("log grid needs lo > 0")
        elif len(self.values) == 0:
            raise ConfigError("grid has no values")

    def grid(self) -> list[float]:
        if self.values is not None:
            return [float(v) for v in self.values]
        if self.count == 1:
            return [float(self.lo)]
        if self.log:
            return [float(v) for v in np.geomspace(self.lo, self.hi, self.count)]
        return [float(v) for v in np.linspace(self.lo, self.hi, self.count)]


@dataclass(frozen=True)
class SweepRow:
    param_value: float
    transfer_rate: float
    mean_first_transfer_step: float
    final_concentration_mean: float
    final_p_irr_mean: float


def worker_count() -> int:
    raw = os.environ.get("SOVSIM_THREADS")
    if raw:
        return max(1, int(raw))
    return os.cpu_count() or 1


def _map(fn: Callable, tasks: list, workers: int | None) -> list:
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


def build_state(doc: Mapping, parameter_path: str, value: float, seed: int) -> SystemState:
    return state_from_dict(set_path(dict(doc), parameter_path, value), seed=seed)


def _run_summary(task) -> tuple[int | None, float, float]:
    doc, path, value, seed, horizon = task
    frames = run_trajectory(build_state(doc, path, value, seed), horizon)
    first = next((f.step for f in frames if f.sovereign_is_ai), None)
    return first, frames[-1].concentration, frames[-1].p_irr


def _run_transfer(task) -> bool:
    doc, path, value, seed, horizon = task
    return first_transfer_step(build_state(doc, path, value, seed), horizon) is not None


def run_seed(base_seed: int, run_index: int) -> int:
    return derive_seed(base_seed, run_index)


def grid_sweep(spec: SweepSpec, base_config: Mapping, workers: int | None = None) -> list[SweepRow]:
    """One row per grid value, aggregated over ``runs_per_point`` runs."""
    values = spec.grid()
    set_path(dict(base_config), spec.parameter_path, values[0])
    tasks = [
        (base_config, spec.parameter_path, v, run_seed(spec.base_seed, r), spec.horizon)
        for v in values
        for r in range(spec.runs_per_point)
    ]
    results = _map(_run_summary, tasks, workers)
    rows = []
    k = spec.runs_per_point
    for i, v in enumerate(values):
        chunk = results[i * k:(i + 1) * k]
        firsts = [f for f, _, _ in chunk if f is not None]
        rows.append(SweepRow(
            param_value=v,
            transfer_rate=len(firsts) / k,
            mean_first_transfer_step=float(np.mean(firsts)) if firsts else math.nan,
            final_concentration_mean=float(np.mean([c for _, c, _ in chunk])),
            final_p_irr_mean=float(np.mean([p for _, _, p in chunk])),
        ))
    return rows


# -------------------------------------------------------------- threshold


@dataclass
class ThresholdResult:
    parameter_path: str
    critical_value: float
    bracket: tuple[float, float]
    transfer_rate_below: float
    transfer_rate_above: float
    iterations: int
    orientation: str
    target: float
    measurements: list[tuple[float, float]] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "parameter_path": self.parameter_path,
            "critical_value": self.critical_value,
            "bracket": list(self.bracket),
            "transfer_rate_below": self.transfer_rate_below,
            "transfer_rate_above": self.transfer_rate_above,
            "iterations": self.iterations,
            "orientation": self.orientation,
            "target": self.target,
            "measurements": [list(m) for m in self.measurements],
        }


def transfer_rate_curve(
    parameter_path: str,
    base_config: Mapping,
    runs_per_point: int,
    horizon: int,
    base_seed: int = 0,
    workers: int | None = None,
) -> Callable[[float], float]:
    """Empirical transfer rate as a function of one parameter."""
    set_path(dict(base_config), parameter_path, 0.0)

    def rate(value: float) -> float:
        tasks = [(base_config, parameter_path, value, run_seed(base_seed, r), horizon) for r in range(runs_per_point)]
        return sum(_map(_run_transfer, tasks, workers)) / runs_per_point

    return rate


def bisect_threshold(
    parameter_path: str,
    lo: float,
    hi: float,
    base_config: Mapping | None = None,
    runs_per_point: int = 20,
    target: float = 0.5,
    tol: float = 0.01,
    horizon: int = 100,
    base_seed: int = 0,
    rate_fn: Callable[[float], float] | None = None,
    workers: int | None = None,
) -> ThresholdResult:
    """Bisect the empirical transfer-rate curve for its ``target`` crossing.

    ``rate_fn`` replaces the simulated curve (used to test the search on a
    known indicator).
    """
    if not tol > 0:
        raise ValueError("tol must be > 0")
    if not lo < hi:
        raise ValueError("lo < hi required")
    if rate_fn is None:
        if base_config is None:
            raise ValueError("base_config or rate_fn is required")
        rate_fn = transfer_rate_curve(parameter_path, base_config, runs_per_point, horizon, base_seed, workers)
    r_lo, r_hi = rate_fn(lo), rate_fn(hi)
    measurements = [(lo, r_lo), (hi, r_hi)]
    if r_lo < target <= r_hi:
        increasing = True
    elif r_hi < target <= r_lo:
        increasing = False
    else:
        if r_lo == 0 and r_hi == 0:
            raise NoBracketError("no bracket: transfer never occurs")
        raise NoBracketError(
            f"no bracket: transfer rates {r_lo:g} at {lo:g} and {r_hi:g} at {hi:g} do not straddle {target:g}"
        )
    iterations = 0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        r = rate_fn(mid)
        measurements.append((mid, r))
        iterations += 1
        if not min(r_lo, r_hi) <= r <= max(r_lo, r_hi):
            raise NonMonotoneError(
                f"non-monotone transfer rate: {r:g} at {mid:g} outside [{min(r_lo, r_hi):g}, {max(r_lo, r_hi):g}]",
                measurements,
            )
        if (r >= target) == increasing:
            hi, r_hi = mid, r
        else:
            lo, r_lo = mid, r
    below, above = (r_lo, r_hi) if increasing else (r_hi, r_lo)
    return ThresholdResult(
        parameter_path=parameter_path,
        critical_value=0.5 * (lo + hi),
        bracket=(lo, hi),
        transfer_rate_below=below,
        transfer_rate_above=above,
        iterations=iterations,
        orientation="increasing" if increasing else "decreasing",
        target=target,
        measurements=measurements,
    )


def grid_threshold(
    lo: float,
    hi: float,
    rate_fn: Callable[[float], float],
    target: float = 0.5,
    points: int = 32,
) -> tuple[float, float, list[tuple[float, float]]]:
    """Grid-search estimate of the crossing: ``(crossing value, cell width,
    measured curve)``.  The crossing is the first grid value on the far side
    of ``target`` from ``lo``."""
    grid = np.linspace(lo, hi, points)
    curve = [(float(v), rate_fn(float(v))) for v in grid]
    increasing = curve[0][1] < target
    for v, r in curve:
        if (r >= target) if increasing else (r < target):
            return v, float(grid[1] - grid[0]), curve
    raise NoBracketError("no bracket: grid never crosses the target")
