"""Multiway aggregation pipeline over SPSC queues.

Topology: each producer owns a block of stage-2 aggregators (a
contiguous, even partition) and a dedicated queue to each of them;
every aggregator owns one queue to the single final aggregator. Each
producer deals its sorted tuples round-robin across its block, so every
aggregator still sees a sorted stream.

Termination: a producer calls producer_finish on each of its queues
(which runs the BatchQueue leftover hand-off where applicable); an
aggregator drains its input, flushes its still-open windows, then sends
an inactivity marker; the final aggregator polls its queues round-robin,
skipping empty ones, until every source has gone inactive, at which
point all pending windows have been released.

All cross-thread communication goes through the queues; every other
piece of state is owned by exactly one thread.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Tuple

from .aggregation import FinalAggregator, WindowAggregator, WindowPartial, WindowSpec
from .queues import (
    EMPTY,
    ConsumerEndpoint,
    InvalidConfig,
    ProducerEndpoint,
    QueueConfig,
    QueueKind,
    new_queue,
)


class SourceDone(NamedTuple):
    """Inactivity marker an aggregator sends after its last partial."""

    source: int


@dataclass
class PipelineConfig:
    producers: int
    aggregators: int
    queue_kind: QueueKind
    queue_config: QueueConfig
    spec: WindowSpec
    workloads: List[List[Tuple[int, int]]]  # one sorted tuple list per producer

    def validate(self) -> None:
        if self.producers < 1:
            raise InvalidConfig("need at least one producer")
        if self.aggregators < 1:
            raise InvalidConfig("need at least one aggregator")
        if self.producers > self.aggregators:
            raise InvalidConfig(
                f"{self.producers} producers cannot partition "
                f"{self.aggregators} aggregators"
            )
        if len(self.workloads) != self.producers:
            raise InvalidConfig(
                f"expected {self.producers} workloads, got {len(self.workloads)}"
            )
        self.queue_config.validate(self.queue_kind)
        for i, workload in enumerate(self.workloads):
            last = -1
            for ts, _value in workload:
                if ts < 0:
                    raise InvalidConfig(f"producer {i}: negative timestamp {ts}")
                if ts < last:
                    raise InvalidConfig(
                        f"producer {i}: workload not sorted at timestamp {ts}"
                    )
                last = ts


@dataclass
class RunMetrics:
    elapsed_s: float
    tuples: int
    partials: int
    messages: int = field(init=False)
    messages_per_ms: float = field(init=False)

    def __post_init__(self):
        self.messages = self.tuples + self.partials
        ms = self.elapsed_s * 1000.0
        self.messages_per_ms = self.messages / ms if ms > 0 else 0.0


def partition_aggregators(producers: int, aggregators: int) -> List[range]:
    """Contiguous, even split of aggregator ids across producers."""
    base, extra = divmod(aggregators, producers)
    blocks = []
    lo = 0
    for i in range(producers):
        hi = lo + base + (1 if i < extra else 0)
        blocks.append(range(lo, hi))
        lo = hi
    return blocks


def _run_producer(
    workload: List[Tuple[int, int]],
    outputs: List[ProducerEndpoint],
    start: threading.Event,
) -> None:
    start.wait()
    try:
        n_out = len(outputs)
        rr = 0
        for item in workload:
            outputs[rr].enqueue_spin(item)
            rr += 1
            if rr == n_out:
                rr = 0
    finally:
        # Always signal completion so downstream threads can unwind.
        for out in outputs:
            out.producer_finish()


def _run_aggregator(
    source: int,
    spec: WindowSpec,
    inp: ConsumerEndpoint,
    out: ProducerEndpoint,
    start: threading.Event,
    counters: Dict[int, int],
) -> None:
    start.wait()
    agg = WindowAggregator(spec, source=source)
    send = out.enqueue_spin
    partials_sent = 0
    try:
        idle = 0
        while True:
            item = inp.try_dequeue()
            if item is EMPTY:
                if inp.finished():
                    break
                idle += 1
                time.sleep(0 if idle < 256 else 0.0001)
                continue
            idle = 0
            for partial in agg.update(item[0], item[1]):
                send(partial)
                partials_sent += 1
        for partial in agg.finalize():
            send(partial)
            partials_sent += 1
        send(SourceDone(source))
    finally:
        out.producer_finish()
        counters[source] = partials_sent


def _run_final(
    fa: FinalAggregator,
    inputs: List[ConsumerEndpoint],
    results: Dict[int, int],
    start: threading.Event,
) -> None:
    start.wait()
    live = list(inputs)
    idle = 0
    while live:
        progressed = False
        finished_queues = []
        for q in live:  # round-robin sweep; empty queues are skipped
            item = q.try_dequeue()
            if item is EMPTY:
                if q.finished():
                    finished_queues.append(q)
                continue
            progressed = True
            if isinstance(item, SourceDone):
                released = fa.mark_inactive(item.source)
            else:
                released = fa.accept(item)
            for win_start, total in released:
                results[win_start] = total
        for q in finished_queues:
            live.remove(q)
        if progressed:
            idle = 0
        else:
            idle += 1
            time.sleep(0 if idle < 256 else 0.0001)
    assert fa.all_inactive(), "final aggregator exited with active sources"
    assert not fa.partials, "final aggregator exited with unreleased windows"


def run_pipeline(config: PipelineConfig) -> Tuple[Dict[int, int], RunMetrics]:
    """Run the full pipeline and return the window totals plus metrics.

    The clock covers the span from releasing the worker threads to the
    last join; construction and wiring are excluded. Any exception in a
    worker thread is re-raised here.
    """
    config.validate()
    blocks = partition_aggregators(config.producers, config.aggregators)

    feed_producers: List[List[ProducerEndpoint]] = []
    agg_inputs: List[Optional[ConsumerEndpoint]] = [None] * config.aggregators
    for block in blocks:
        outs = []
        for agg_id in block:
            p, c = new_queue(config.queue_kind, config.queue_config)
            outs.append(p)
            agg_inputs[agg_id] = c
        feed_producers.append(outs)

    final_inputs: List[ConsumerEndpoint] = []
    agg_outputs: List[ProducerEndpoint] = []
    for _ in range(config.aggregators):
        p, c = new_queue(config.queue_kind, config.queue_config)
        agg_outputs.append(p)
        final_inputs.append(c)

    fa = FinalAggregator(config.spec, sources=range(config.aggregators))
    results: Dict[int, int] = {}
    partial_counts: Dict[int, int] = {}
    start = threading.Event()
    errors: List[BaseException] = []

    def guarded(fn, *args):
        def runner():
            try:
                fn(*args)
            except BaseException as exc:  # surfaced after join
                errors.append(exc)
        return runner

    threads = [
        threading.Thread(
            target=guarded(_run_producer, config.workloads[i], feed_producers[i], start),
            name=f"producer-{i}",
        )
        for i in range(config.producers)
    ]
    threads += [
        threading.Thread(
            target=guarded(
                _run_aggregator, j, config.spec, agg_inputs[j], agg_outputs[j],
                start, partial_counts,
            ),
            name=f"aggregator-{j}",
        )
        for j in range(config.aggregators)
    ]
    threads.append(
        threading.Thread(
            target=guarded(_run_final, fa, final_inputs, results, start),
            name="final-aggregator",
        )
    )

    for t in threads:
        t.start()
    t0 = time.perf_counter()
    start.set()
    for t in threads:
        t.join()
    elapsed = time.perf_counter() - t0

    if errors:
        # Prefer a root-cause error over consistency asserts that fired
        # downstream of it.
        raise next(
            (e for e in errors if not isinstance(e, AssertionError)), errors[0]
        )

    metrics = RunMetrics(
        elapsed_s=elapsed,
        tuples=sum(len(w) for w in config.workloads),
        partials=sum(partial_counts.values()),
    )
    return results, metrics
