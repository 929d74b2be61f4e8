"""Pointer-chase buffers for latency measurements.

A chain is a permutation over the cache lines of a buffer forming a single
closed walk: every line is visited exactly once before the walk repeats, so
a dependent load stream observes one access latency per line with no
opportunity for overlap.
"""

import random
from dataclasses import dataclass

from ..errors import InvariantError
from ..units import LINE_SIZE_BYTES

LAYOUTS = ("consecutive_cl", "random_cl")


@dataclass(frozen=True)
class PointerChain:
    buffer_bytes: int
    line_size: int
    layout: str
    next_line: tuple[int, ...]  # next_line[i] = line visited after line i

    @property
    def n_lines(self) -> int:
        return len(self.next_line)

    def walk(self, start: int = 0) -> list[int]:
        order = [start]
        pos = self.next_line[start]
        while pos != start:
            order.append(pos)
            pos = self.next_line[pos]
        return order

    def is_single_cycle(self) -> bool:
        seen = 0
        pos = 0
        for _ in range(self.n_lines):
            pos = self.next_line[pos]
            seen += 1
            if pos == 0:
                break
        return pos == 0 and seen == self.n_lines

    def validate(self) -> None:
        n = self.n_lines
        if sorted(self.next_line) != list(range(n)):
            raise InvariantError("chain is not a permutation over its lines")
        if not self.is_single_cycle():
            raise InvariantError("chain does not form a single closed walk")
        if self.layout == "consecutive_cl":
            for i, nxt in enumerate(self.next_line):
                if nxt != (i + 1) % n:
                    raise InvariantError(
                        f"consecutive_cl chain hops {i} -> {nxt}, expected {(i + 1) % n}")


def build_pointer_chain(buffer_bytes: int, layout: str = "consecutive_cl",
                        line_size: int = LINE_SIZE_BYTES,
                        seed: int = 0) -> PointerChain:
    """Build a single-cycle chain over the buffer's cache lines.

    consecutive_cl hops stride +1 line, exercising adjacent-line accesses;
    random_cl draws a uniformly random cyclic permutation (Sattolo's
    algorithm, so the single-cycle property holds by construction).
    """
    if layout not in LAYOUTS:
        raise InvariantError(f"unknown chain layout {layout!r} (have: {LAYOUTS})")
    if line_size <= 0:
        raise InvariantError("line_size must be > 0")
    if buffer_bytes < 2 * line_size or buffer_bytes % line_size:
        raise InvariantError(
            f"buffer_bytes must be a multiple of the line size and at least two "
            f"lines (got {buffer_bytes} with line size {line_size})")
    n = buffer_bytes // line_size
    if layout == "consecutive_cl":
        next_line = tuple((i + 1) % n for i in range(n))
    else:
        rng = random.Random(seed)
        perm = list(range(n))
        for i in range(n - 1, 0, -1):
            j = rng.randrange(i)
            perm[i], perm[j] = perm[j], perm[i]
        next_line = tuple(perm)
    chain = PointerChain(buffer_bytes=buffer_bytes, line_size=line_size,
                         layout=layout, next_line=next_line)
    chain.validate()
    return chain
