"""Sequential reference implementations and checkers.

Everything here is single-threaded on purpose: these are the trusted
sides of every dual-route check in the test suite. ``oracle_aggregate``
recomputes windowed sums directly from a merged stream;
``check_fifo`` validates the per-endpoint operation logs of a queue
run; the exhaustive interleaving explorer lives in ``interleave``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .aggregation import WindowSpec, window_starts


class UnsortedInput(ValueError):
    """The tuple stream handed to the oracle was not sorted."""


def oracle_aggregate(
    tuples: Iterable[Tuple[int, int]], spec: WindowSpec
) -> Dict[int, int]:
    """Windowed sums of a sorted ``(timestamp, value)`` stream.

    Returns every window that received at least one tuple, as a map
    from window start to total. Raises UnsortedInput on a timestamp
    regression.
    """
    totals: Dict[int, int] = {}
    last = -1
    for ts, value in tuples:
        if ts < last:
            raise UnsortedInput(f"timestamp {ts} after {last}")
        last = ts
        for s in window_starts(ts, spec):
            totals[s] = totals.get(s, 0) + value
    return totals


def conservation_delta(
    tuples: Iterable[Tuple[int, int]], spec: WindowSpec, totals: Dict[int, int]
) -> int:
    """Difference between the summed window totals and the summed
    per-tuple contributions; zero when no value was lost or duplicated."""
    contributed = sum(
        value * len(window_starts(ts, spec)) for ts, value in tuples
    )
    return sum(totals.values()) - contributed


@dataclass
class OpLog:
    """Success-ordered operation log of one SPSC run.

    ``enqueued`` and ``dequeued`` hold payload sequence numbers in the
    order each endpoint committed them (each endpoint observes its own
    order; that is all an SPSC history exposes). ``complete`` marks a
    run that ended with producer_finish plus a full drain, in which
    case nothing may be missing.
    """

    enqueued: Sequence[int] = field(default_factory=list)
    dequeued: Sequence[int] = field(default_factory=list)
    complete: bool = False


@dataclass(frozen=True)
class Violation:
    """A FIFO or conservation failure, with a human-readable reason."""

    description: str

    def __str__(self) -> str:
        return self.description


def check_fifo(log: OpLog) -> Optional[Violation]:
    """Validate FIFO order: the dequeued sequence must be a gap-free
    prefix of the enqueued sequence. Returns None when the log is
    clean, otherwise a Violation describing the first divergence."""
    enq = log.enqueued
    deq = log.dequeued
    if len(deq) > len(enq):
        return Violation(
            f"dequeued {len(deq)} items but only {len(enq)} were enqueued"
        )
    prev = None
    for i, got in enumerate(deq):
        if prev is not None and got <= prev:
            return Violation(
                f"dequeue #{i}: sequence {got} after {prev} (order/duplication)"
            )
        expected = enq[i]
        if got != expected:
            return Violation(
                f"dequeue #{i}: expected sequence {expected}, got {got}"
            )
        prev = got
    if log.complete and len(deq) != len(enq):
        return Violation(
            f"run completed but {len(enq) - len(deq)} enqueued items "
            f"were never dequeued (loss)"
        )
    return None
