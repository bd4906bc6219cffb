"""Sliding-window stream aggregation.

Stream elements are plain ``(timestamp, value)`` pairs with integer,
non-negative timestamps. Time is split into half-open windows
``[k*advance, k*advance + size)`` starting at every non-negative
multiple of the advance. A stage-2 ``WindowAggregator`` consumes one
sorted stream, keeps a running sum per open window, and emits a window
once its end has passed the watermark. A ``FinalAggregator`` merges the
per-source partial sums, tracking which sources contributed to each
window and which sources are still active, and releases every window
exactly once as soon as no active source can still report it.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Dict, Iterable, List, NamedTuple, Set, Tuple


class OutOfOrderTuple(ValueError):
    """A tuple arrived with a timestamp below the aggregator watermark."""


class DuplicateContribution(ValueError):
    """A source reported twice for the same window start."""


class InactiveSource(ValueError):
    """A partial arrived from a source already marked inactive."""


class AlreadyInactive(ValueError):
    """A source was marked inactive twice."""


@dataclass(frozen=True)
class WindowSpec:
    """Window geometry: ``size`` time units, sliding by ``advance``."""

    size: int
    advance: int

    def __post_init__(self):
        if self.size < 1 or self.advance < 1:
            raise ValueError("window size and advance must be positive")
        if self.advance > self.size:
            raise ValueError(
                f"advance {self.advance} must not exceed size {self.size}"
            )


class WindowPartial(NamedTuple):
    """Per-source running sum of one window, as sent downstream."""

    start: int
    total: int
    source: int


def window_starts(t: int, spec: WindowSpec) -> List[int]:
    """All window starts whose window contains timestamp ``t``, ascending.

    A start ``s`` qualifies when it is a non-negative multiple of the
    advance and ``s <= t < s + size``.
    """
    if t < 0:
        raise ValueError(f"timestamp must be non-negative, got {t}")
    a = spec.advance
    k_hi = t // a
    k_lo = -((t - spec.size + 1) // -a)  # ceil division
    if k_lo < 0:
        k_lo = 0
    return [k * a for k in range(k_lo, k_hi + 1)]


class WindowAggregator:
    """Stage-2 aggregator: windowed sums over one sorted input stream.

    ``update`` feeds one tuple and returns the windows that expired as a
    result, oldest first; ``finalize`` flushes whatever is still open
    once the input is exhausted.
    """

    def __init__(self, spec: WindowSpec, source: int = 0):
        self.spec = spec
        self.source = source
        self.open_windows: Dict[int, int] = {}
        self.watermark = -1
        self.emitted_count = 0

    def update(self, timestamp: int, value: int) -> List[WindowPartial]:
        if timestamp < self.watermark:
            raise OutOfOrderTuple(
                f"timestamp {timestamp} below watermark {self.watermark}"
            )
        open_windows = self.open_windows
        for s in window_starts(timestamp, self.spec):
            open_windows[s] = open_windows.get(s, 0) + value
        self.watermark = timestamp
        horizon = timestamp - self.spec.size
        expired = [s for s in open_windows if s <= horizon]
        if not expired:
            return []
        expired.sort()
        out = [WindowPartial(s, open_windows.pop(s), self.source) for s in expired]
        self.emitted_count += len(out)
        return out

    def finalize(self) -> List[WindowPartial]:
        out = [
            WindowPartial(s, total, self.source)
            for s, total in sorted(self.open_windows.items())
        ]
        self.open_windows.clear()
        self.emitted_count += len(out)
        return out


class FinalAggregator:
    """Merges per-source window partials into final totals.

    A window is released once every source has either gone inactive or
    reported a window whose end is at or beyond this window's end
    (sources emit in ascending start order, so a later report implies
    the earlier window is complete for that source). Each window is
    released at most once; windows nobody contributed to never appear.
    """

    def __init__(self, spec: WindowSpec, sources: Iterable[int]):
        self.spec = spec
        self.partials: Dict[int, list] = {}  # start -> [total, contributor set]
        self.source_watermarks: Dict[int, int] = {s: 0 for s in sources}
        self.active: Dict[int, bool] = {s: True for s in self.source_watermarks}
        self.reported: Set[int] = set()
        self._pending_heap: List[int] = []

    def accept(self, partial: WindowPartial) -> List[Tuple[int, int]]:
        start, total, source = partial
        if source not in self.active:
            raise InactiveSource(f"unknown source {source}")
        if not self.active[source]:
            raise InactiveSource(f"source {source} is inactive")
        if start in self.reported:
            raise DuplicateContribution(
                f"window {start} was already reported"
            )
        entry = self.partials.get(start)
        if entry is None:
            self.partials[start] = [total, {source}]
            heapq.heappush(self._pending_heap, start)
        else:
            if source in entry[1]:
                raise DuplicateContribution(
                    f"source {source} already contributed to window {start}"
                )
            entry[0] += total
            entry[1].add(source)
        end = start + self.spec.size
        if end > self.source_watermarks[source]:
            self.source_watermarks[source] = end
        return self._release_ready()

    def mark_inactive(self, source: int) -> List[Tuple[int, int]]:
        if source not in self.active:
            raise InactiveSource(f"unknown source {source}")
        if not self.active[source]:
            raise AlreadyInactive(f"source {source} already inactive")
        self.active[source] = False
        return self._release_ready()

    def all_inactive(self) -> bool:
        return not any(self.active.values())

    def _release_ready(self) -> List[Tuple[int, int]]:
        # A window is ready when its end is at or below every active
        # source's watermark; with no active sources everything pending
        # is ready.
        floor = min(
            (wm for s, wm in self.source_watermarks.items() if self.active[s]),
            default=None,
        )
        heap = self._pending_heap
        released = []
        size = self.spec.size
        while heap and (floor is None or heap[0] + size <= floor):
            start = heapq.heappop(heap)
            total, _contributors = self.partials.pop(start)
            self.reported.add(start)
            released.append((start, total))
        return released
