"""Wall-time scaling of the suppression kernels on worst-case inputs.

The generated input is one pile of mutually overlapping boxes. Benchmarks
default to score_threshold 0 so that no box is ever pruned mid-loop: pruning
short-circuits the quadratic scan and would measure the pruning heuristic
rather than the kernel itself. With that setting every rule performs the full
N-iteration loop over the remaining boxes, so wall time grows ~N^2.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .suppression import rule_from_name, _rule_code

__all__ = ["overlapping_cluster", "time_method", "fit_loglog_slope", "run_bench", "BenchRow"]


def overlapping_cluster(n: int, seed: int = 0):
    """n boxes piled onto one region so that every pair overlaps."""
    rng = np.random.Generator(np.random.PCG64(seed))
    x1 = rng.uniform(0.0, 20.0, n)
    y1 = rng.uniform(0.0, 20.0, n)
    x2 = x1 + rng.uniform(80.0, 120.0, n)
    y2 = y1 + rng.uniform(80.0, 120.0, n)
    scores = rng.uniform(0.05, 1.0, n)
    src = np.arange(n, dtype=np.int64)
    return x1, y1, x2, y2, scores, src


def time_method(
    n: int,
    method: str = "gaussian",
    backend: str | None = None,
    score_threshold: float = 0.0,
    repeats: int = 3,
    seed: int = 0,
) -> float:
    """Best-of-repeats wall time of one kernel call on n overlapping boxes."""
    arrays = overlapping_cluster(n, seed)
    code, nt, sigma = _rule_code(rule_from_name(method))
    # warm-up also triggers JIT compilation on the numba backend
    _kernels.suppress_arrays(*arrays, code, nt, sigma, score_threshold, backend=backend)
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        _kernels.suppress_arrays(*arrays, code, nt, sigma, score_threshold, backend=backend)
        best = min(best, time.perf_counter() - start)
    return best


def fit_loglog_slope(sizes, times) -> float | None:
    """Least-squares slope of log(time) against log(n); None below 2 points."""
    if len(sizes) < 2:
        return None
    return float(np.polyfit(np.log(np.asarray(sizes, dtype=np.float64)), np.log(np.asarray(times)), 1)[0])


@dataclass(frozen=True)
class BenchRow:
    n: int
    seconds: dict[str, float]


def run_bench(
    sizes: list[int],
    method: str = "gaussian",
    backends: list[str] | None = None,
    score_threshold: float = 0.0,
    repeats: int = 3,
    seed: int = 0,
) -> tuple[list[BenchRow], dict[str, float | None]]:
    """Time each size on each backend; returns rows and per-backend slopes."""
    if backends is None:
        backends = [_kernels.DEFAULT_BACKEND]
    for b in backends:
        if b not in _kernels.available_backends():
            raise ValueError(
                f"backend {b!r} unavailable; available: {', '.join(_kernels.available_backends())}"
            )
    rows = [
        BenchRow(
            n=n,
            seconds={
                b: time_method(n, method, b, score_threshold, repeats, seed) for b in backends
            },
        )
        for n in sizes
    ]
    slopes = {
        b: fit_loglog_slope(sizes, [r.seconds[b] for r in rows]) for b in backends
    }
    return rows, slopes
