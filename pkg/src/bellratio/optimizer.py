"""Deterministic angle search: a full grid scan, then cyclic coordinate descent
with interval halving from the best grid cells."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .bell_expressions import chsh_array, qm_ardehali_array
from .errors import DomainError
from .geometry import canonicalize_angle
from .qm_model import ExperimentConfig

ANGLE_NAMES = ("a", "a_prime", "b", "b_prime")
# values closer than this are treated as equal when breaking ties
TIE_TOL = 1e-12


@dataclass
class OptimizationResult:
    best_settings: dict[str, float]
    best_value: float
    trace: list[tuple[int, float]]
    objective: str
    method: dict = field(default_factory=dict)

    @property
    def differences(self) -> tuple[float, float, float, float]:
        """(a - b, a - b', a' - b, a' - b') reduced to [0, 180)."""
        s = self.best_settings
        return tuple(
            canonicalize_angle(s[x] - s[y])
            for x, y in (("a", "b"), ("a", "b_prime"), ("a_prime", "b"), ("a_prime", "b_prime"))
        )

    def to_dict(self) -> dict:
        return {
            "objective": self.objective,
            "best_value": self.best_value,
            "best_settings": self.best_settings,
            "differences_deg": dict(zip(("a_b", "a_bp", "ap_b", "ap_bp"), self.differences)),
            "method": self.method,
            "trace": [{"iteration": i, "value": v} for i, v in self.trace],
        }


def check_grid_step(grid_step: float) -> int:
    """Number of grid points per axis; ``grid_step`` must divide 180."""
    if not (math.isfinite(grid_step) and grid_step > 0):
        raise DomainError(f"grid_step must be positive, got {grid_step!r}")
    n = 180.0 / grid_step
    if abs(n - round(n)) > 1e-9:
        raise DomainError(f"grid_step {grid_step} does not divide 180")
    return int(round(n))


def _grid_scan(objective, axis: np.ndarray, keep: int, workers: int):
    """Best ``keep`` grid points as (value, angles) sorted by value then angles."""
    b, ap, bp = np.meshgrid(axis, axis, axis, indexing="ij")

    def slab(a):
        v = objective(a, ap, b, bp)
        order = np.lexsort((v.ravel(),))[:keep]
        return [(float(v.ravel()[i]), (a, float(ap.ravel()[i]), float(b.ravel()[i]), float(bp.ravel()[i]))) for i in order]

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(slab, axis))
    else:
        parts = [slab(a) for a in axis]
    candidates = [c for part in parts for c in part]
    candidates.sort(key=lambda c: (c[0], c[1]))
    return candidates


def _distinct_starts(candidates, starts: int):
    chosen, seen = [], set()
    for value, angles in candidates:
        key = tuple(round(x, 9) for x in angles)
        if key in seen:
            continue
        seen.add(key)
        chosen.append((value, angles))
        if len(chosen) == starts:
            break
    return chosen


def _coordinate_descent(f: Callable[[list[float]], float], x0, step: float, rounds: int):
    """Cyclic coordinate descent; the step halves after a sweep without progress.

    ``rounds`` counts halvings. Returns (x, value, per-round best values).
    """
    x = list(x0)
    fx = f(x)
    history = []
    h = step
    for _ in range(rounds):
        h *= 0.5
        improved = True
        while improved:
            improved = False
            for i in range(len(x)):
                for sign in (1.0, -1.0):
                    trial = list(x)
                    trial[i] += sign * h
                    ft = f(trial)
                    if ft < fx - TIE_TOL:
                        x, fx, improved = trial, ft, True
                        break
        history.append(fx)
    return x, fx, history


def _normalize(objective, x):
    """Rotate so that ``a = 0`` and reduce mod 180.

    Both objectives depend on (a, a', b, b') only through differences, so this
    picks the lexicographically smallest member of the rotation orbit.
    """
    rotated = tuple(canonicalize_angle(v - x[0]) for v in x)
    if not math.isclose(float(objective(*rotated)), float(objective(*x)), rel_tol=0.0, abs_tol=1e-12):
        return tuple(canonicalize_angle(v) for v in x)
    return rotated


def _minimize(objective, grid_step: float, starts: int, refine_iters: int, workers: int, name: str, sign: float):
    n = check_grid_step(grid_step)
    if starts < 1:
        raise DomainError(f"starts must be >= 1, got {starts}")
    if refine_iters < 0:
        raise DomainError(f"refine_iters must be >= 0, got {refine_iters}")
    axis = np.arange(n) * float(grid_step)
    candidates = _grid_scan(objective, axis, keep=starts, workers=workers)
    grid_best = candidates[0][0]
    trace = [(0, sign * grid_best)]

    def scalar(x):
        return float(objective(*x))

    best = None
    for value, angles in _distinct_starts(candidates, starts):
        x, fx, history = _coordinate_descent(scalar, angles, float(grid_step), refine_iters)
        canon = _normalize(objective, x)
        fx = float(objective(*canon))
        if best is None or fx < best[0] - TIE_TOL or (abs(fx - best[0]) <= TIE_TOL and canon < best[1]):
            best = (fx, canon)
        for i, v in enumerate(history, start=1):
            if len(trace) <= i:
                trace.append((i, sign * v))
            else:
                trace[i] = (i, sign * min(sign * trace[i][1], v))
    value, canon = best
    # refinement starts at grid points, so this only guards the bookkeeping
    value = min(value, grid_best)
    return OptimizationResult(
        best_settings=dict(zip(ANGLE_NAMES, canon)),
        best_value=sign * value,
        trace=trace,
        objective=name,
        method={
            "grid_step_deg": float(grid_step),
            "grid_points": n**4,
            "starts": starts,
            "refine_iters": refine_iters,
            "grid_best": sign * grid_best,
        },
    )


def optimize_ardehali(
    config: ExperimentConfig,
    grid_step: float = 5.0,
    starts: int = 8,
    refine_iters: int = 40,
    workers: int = 1,
) -> OptimizationResult:
    """Minimize the ratio form over (a, a', b, b') with r and s held at the configured values."""

    def objective(a, ap, b, bp):
        return qm_ardehali_array(config, a, ap, b, bp)

    return _minimize(objective, grid_step, starts, refine_iters, workers, "ardehali_lhs", 1.0)


def optimize_chsh(
    config: ExperimentConfig,
    grid_step: float = 5.0,
    starts: int = 8,
    refine_iters: int = 40,
    workers: int = 1,
) -> OptimizationResult:
    """Maximize |S| of the CHSH combination; ``best_value`` is the attained |S|."""
    F = config.visibility

    def objective(a, ap, b, bp):
        return -np.abs(chsh_array(F, a, ap, b, bp))

    return _minimize(objective, grid_step, starts, refine_iters, workers, "chsh_abs", -1.0)
