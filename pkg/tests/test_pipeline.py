"""End-to-end pipeline runs checked against the sequential oracle."""

import pytest

from streamq import (
    InvalidConfig,
    PipelineConfig,
    QueueConfig,
    QueueKind,
    WindowSpec,
    oracle_aggregate,
    run_pipeline,
    window_starts,
)
from streamq.bench import split_workload
from streamq.pipeline import partition_aggregators

SPEC = WindowSpec(4, 2)


def config(producers, aggregators, kind, workloads, capacity=64, spec=SPEC):
    return PipelineConfig(
        producers=producers,
        aggregators=aggregators,
        queue_kind=kind,
        queue_config=QueueConfig(capacity=capacity),
        spec=spec,
        workloads=workloads,
    )


def merged(workloads):
    return sorted((t for w in workloads for t in w), key=lambda t: t[0])


def test_single_producer_single_aggregator_trace():
    cfg = config(1, 1, QueueKind.LAMPORT, [[(0, 5), (1, 3), (2, 7), (4, 1)]])
    totals, metrics = run_pipeline(cfg)
    assert totals == {0: 15, 2: 8, 4: 1}
    assert metrics.tuples == 4


def test_empty_workload():
    cfg = config(1, 2, QueueKind.BATCHQUEUE, [[]])
    totals, metrics = run_pipeline(cfg)
    assert totals == {}
    assert metrics.messages == 0


@pytest.mark.parametrize("kind", list(QueueKind))
def test_three_by_six_matches_oracle(kind):
    workloads = split_workload(10_000, 3, seed=13)
    cfg = config(3, 6, kind, workloads)
    totals, _ = run_pipeline(cfg)
    assert totals == oracle_aggregate(merged(workloads), SPEC)


def test_one_by_ten_matches_oracle():
    workloads = split_workload(5_000, 1, seed=5)
    cfg = config(1, 10, QueueKind.MCRINGBUFFER, workloads, capacity=128)
    totals, _ = run_pipeline(cfg)
    assert totals == oracle_aggregate(merged(workloads), SPEC)


def test_interleaving_independent_totals():
    workloads = split_workload(3_000, 2, seed=3)
    outputs = [
        run_pipeline(config(2, 4, QueueKind.FASTFORWARD, workloads))[0]
        for _ in range(5)
    ]
    assert all(out == outputs[0] for out in outputs)


def test_conservation_on_pipeline_output():
    workloads = split_workload(4_000, 3, seed=21)
    totals, _ = run_pipeline(config(3, 5, QueueKind.LAMPORT, workloads))
    stream = merged(workloads)
    assert sum(totals.values()) == sum(
        v * len(window_starts(t, SPEC)) for t, v in stream
    )


def test_window_never_reported_twice():
    workloads = split_workload(2_000, 2, seed=8)
    totals, _ = run_pipeline(config(2, 4, QueueKind.BATCHQUEUE, workloads))
    # run_pipeline builds the map from exactly-once releases; a repeat
    # would have tripped the final aggregator's reported-set guard.
    assert totals == oracle_aggregate(merged(workloads), SPEC)


class TestConfigValidation:
    def test_unsorted_workload_rejected(self):
        cfg = config(1, 1, QueueKind.LAMPORT, [[(3, 1), (2, 1)]])
        with pytest.raises(InvalidConfig):
            run_pipeline(cfg)

    def test_negative_timestamp_rejected(self):
        cfg = config(1, 1, QueueKind.LAMPORT, [[(-1, 1)]])
        with pytest.raises(InvalidConfig):
            run_pipeline(cfg)

    def test_more_producers_than_aggregators_rejected(self):
        cfg = config(3, 2, QueueKind.LAMPORT, [[], [], []])
        with pytest.raises(InvalidConfig):
            run_pipeline(cfg)

    def test_workload_count_mismatch_rejected(self):
        cfg = config(2, 4, QueueKind.LAMPORT, [[]])
        with pytest.raises(InvalidConfig):
            run_pipeline(cfg)

    def test_queue_config_checked(self):
        cfg = PipelineConfig(
            1, 1, QueueKind.BATCHQUEUE, QueueConfig(capacity=7), SPEC, [[]]
        )
        with pytest.raises(InvalidConfig):
            run_pipeline(cfg)


class TestPartition:
    def test_even_split(self):
        assert partition_aggregators(2, 8) == [range(0, 4), range(4, 8)]

    def test_uneven_split_is_contiguous(self):
        blocks = partition_aggregators(3, 8)
        assert blocks == [range(0, 3), range(3, 6), range(6, 8)]
        assert sum(len(b) for b in blocks) == 8

    def test_one_producer_takes_all(self):
        assert partition_aggregators(1, 10) == [range(0, 10)]
