"""Frequency/core-count sweep orchestration.

A sweep visits a (core frequency x uncore frequency x cores) grid in
deterministic order, runs one workload per point, and records performance,
package energy, and the frequencies actually attained (never assumed equal
to the requested ones).
"""

import random
from dataclasses import dataclass

from ..errors import InvariantError
from .base import SweepPoint, SweepResult


@dataclass(frozen=True)
class SweepGrid:
    """Axis values; None in a frequency axis means 'unclamped/turbo'."""

    core_freqs_hz: tuple[float | None, ...] = (None,)
    uncore_freqs_hz: tuple[float | None, ...] = (None,)
    cores: tuple[int, ...] = (1,)

    def validate(self) -> None:
        if not self.core_freqs_hz or not self.uncore_freqs_hz or not self.cores:
            raise InvariantError("sweep grid axes must be non-empty")
        for n in self.cores:
            if n < 1:
                raise InvariantError("sweep cores must be >= 1")

    def points(self):
        for core in self.core_freqs_hz:
            for uncore in self.uncore_freqs_hz:
                for n in self.cores:
                    yield core, uncore, n


def run_sweep(executor, grid: SweepGrid, workload, dwell_s: float = 0.5,
              seed: int | None = None) -> SweepResult:
    """Visit the grid and collect one SweepPoint per cell.

    The same seed, grid, and synthetic machine produce a bit-identical
    result; a per-sweep RNG is threaded through the points in visit order.
    """
    grid.validate()
    if seed is None:
        noise = getattr(executor, "noise", None)
        seed = noise.seed if noise is not None else 0
    rng = random.Random(seed)
    points: list[SweepPoint] = []
    for core, uncore, n in grid.points():
        points.append(executor.run_sweep_point(
            workload, core, uncore, n, dwell_s, rng))
    return SweepResult(
        workload=getattr(workload, "name", str(workload)),
        machine=getattr(getattr(executor, "md", None), "name", None),
        core_freq_axis=grid.core_freqs_hz,
        uncore_freq_axis=grid.uncore_freqs_hz,
        cores_axis=grid.cores,
        points=tuple(points),
        seed=seed,
    )


def uncore_axis(md, step_hz: float = 0.2e9) -> tuple[float, ...]:
    """The machine's full uncore range at a fixed step."""
    lo, hi = md.frequency.uncore_min_hz, md.frequency.uncore_max_hz
    if lo is None or hi is None:
        raise InvariantError(f"{md.name} has no separate uncore clock domain")
    values = []
    f = lo
    while f <= hi + 1e-6:
        values.append(round(f, 3))
        f += step_hz
    return tuple(values)
