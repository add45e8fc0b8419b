"""Latency micro-benchmark: warmup runs, then median/worst over repetitions.

Only the view-transform compute is timed; file I/O and table building
happen before the timed region.
"""

from __future__ import annotations

import time

from .errors import ConfigError


def time_fn(fn, reps: int, warmup: int) -> dict:
    """Run `fn` warmup+reps times; returns latency stats in milliseconds."""
    if reps < 3:
        raise ConfigError("benchmark needs at least 3 repetitions")
    if warmup < 1:
        raise ConfigError("benchmark needs at least 1 warmup run")
    for _ in range(warmup):
        fn()
    samples = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        samples.append((time.perf_counter() - t0) * 1e3)
    samples.sort()
    n = len(samples)
    median = samples[n // 2] if n % 2 else 0.5 * (samples[n // 2 - 1] + samples[n // 2])
    return {
        "median_ms": median,
        "best_ms": samples[0],
        "worst_ms": samples[-1],
        "reps": reps,
        "warmup": warmup,
    }


def run_suite(cases: dict, reps: int, warmup: int) -> dict:
    """Time every named callable; insertion order is preserved in the report."""
    return {name: time_fn(fn, reps, warmup) for name, fn in cases.items()}


def render_table(results: dict) -> str:
    lines = [f"{'case':<22}{'median':>12}{'best':>12}{'worst':>12}"]
    for name, r in results.items():
        lines.append(
            f"{name:<22}{r['median_ms']:>10.2f}ms{r['best_ms']:>10.2f}ms"
            f"{r['worst_ms']:>10.2f}ms"
        )
    return "\n".join(lines)
