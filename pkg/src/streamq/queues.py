"""Bounded single-producer/single-consumer queues.

Four interchangeable ring-buffer algorithms behind one endpoint-pair
interface:

* ``LAMPORT`` -- the classic two-index ring; both indices are shared and
  republished on every operation.
* ``FASTFORWARD`` -- occupancy-tagged cells; the indices stay private to
  their endpoint and all synchronization flows through the cells.
* ``BATCHQUEUE`` -- the array is split into two halves that producer and
  consumer exchange wholesale through a single ownership flag.
* ``MCRINGBUFFER`` -- private working indices republished to the shared
  control pair only every ``batch_size`` operations, with each variable
  group padded onto its own cache line.

``new_queue`` returns a ``(producer, consumer)`` endpoint pair over one
shared ring. Each endpoint must be driven by at most one thread at a
time; the two endpoints may run fully concurrently. The non-blocking
``try_enqueue``/``try_dequeue`` are the primitives; ``enqueue_spin`` and
``dequeue_spin`` wrap them with a yielding retry loop.

Memory ordering: every payload write happens before the single store
that publishes it (index, cell, or flag), and consumers read that
location before touching the payload. CPython's interpreter lock makes
attribute and list-slot stores sequentially consistent, which satisfies
the release/acquire contract the algorithms need; the store/load
placement in this module mirrors what a weak-memory port would fence.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from enum import Enum
from typing import Any, Optional


class QueueKind(Enum):
    """The four queue algorithms shipped by this package."""

    LAMPORT = "lamport"
    FASTFORWARD = "fastforward"
    BATCHQUEUE = "batchqueue"
    MCRINGBUFFER = "mcringbuffer"


class InvalidConfig(ValueError):
    """Raised when a queue or pipeline configuration is unusable."""


class QueueTimeout(Exception):
    """Raised by the spin wrappers when their attempt budget runs out."""


class _Sentinel:
    __slots__ = ("_name",)

    def __init__(self, name: str):
        self._name = name

    def __repr__(self) -> str:
        return self._name


#: Returned by try_dequeue when no element is available. A dedicated
#: sentinel (not None) so that None is a legal payload on every kind.
EMPTY = _Sentinel("EMPTY")

#: Internal filler element injected by the MCRingBuffer heartbeat;
#: consumers discard it transparently.
_HEARTBEAT = _Sentinel("HEARTBEAT")

# Spin wrappers yield with sleep(0) this many times before escalating
# to a short real sleep; keeps many-thread pipelines from thrashing.
_SPIN_FAST_ATTEMPTS = 64
_SPIN_SLOW_SECONDS = 0.0001


@dataclass(frozen=True)
class QueueConfig:
    """Construction parameters shared by all queue kinds.

    ``capacity`` is the slot count of the backing array. BatchQueue
    requires it to be even (two equal halves). ``mcr_batch_size`` and
    ``mcr_heartbeat_period`` only affect MCRingBuffer; the batch size
    must divide the capacity, which keeps index publication aligned to
    the ring and simplifies wrap bookkeeping. ``cache_line_bytes``
    sizes the padding regions that keep control variables in distinct
    cache-line-sized areas. ``debug`` enables extra ownership
    assertions on the hot paths.
    """

    capacity: int
    cache_line_bytes: int = 64
    mcr_batch_size: int = 1
    mcr_heartbeat_period: Optional[int] = None
    debug: bool = False

    def validate(self, kind: QueueKind) -> None:
        if self.capacity < 2:
            raise InvalidConfig(f"capacity must be >= 2, got {self.capacity}")
        if self.cache_line_bytes < 1:
            raise InvalidConfig("cache_line_bytes must be positive")
        if kind is QueueKind.BATCHQUEUE and self.capacity % 2 != 0:
            raise InvalidConfig(
                f"BatchQueue capacity must be even, got {self.capacity}"
            )
        if kind is QueueKind.MCRINGBUFFER:
            if self.mcr_batch_size < 1:
                raise InvalidConfig("mcr_batch_size must be positive")
            if self.mcr_batch_size > self.capacity:
                raise InvalidConfig(
                    f"mcr_batch_size {self.mcr_batch_size} exceeds "
                    f"capacity {self.capacity}"
                )
            if self.capacity % self.mcr_batch_size != 0:
                raise InvalidConfig(
                    f"mcr_batch_size {self.mcr_batch_size} must divide "
                    f"capacity {self.capacity}"
                )
            if self.mcr_heartbeat_period is not None and self.mcr_heartbeat_period < 1:
                raise InvalidConfig("mcr_heartbeat_period must be positive")


@dataclass
class EndpointStats:
    """Operation counters snapshot for one endpoint.

    ``publication_events`` counts release stores that make element data
    visible to the peer (index, cell tag, or ownership flag stores);
    termination flags are not counted.
    """

    enq_attempts: int = 0
    enq_successes: int = 0
    deq_attempts: int = 0
    deq_successes: int = 0
    publication_events: int = 0


class Padded:
    """A mutable cell flanked by cache-line-sized padding.

    The pad bytes keep the boxed value in a memory region of its own,
    mirroring the layout a native port would use to avoid false sharing
    between control variables.
    """

    __slots__ = ("_pad_before", "value", "_pad_after")

    def __init__(self, value: Any, line_bytes: int = 64):
        self._pad_before = bytes(line_bytes)
        self.value = value
        self._pad_after = bytes(line_bytes)


class ProducerEndpoint:
    """Base producer handle: spin wrapper, finish protocol, stats."""

    _kind: QueueKind

    def try_enqueue(self, item: Any) -> bool:
        raise NotImplementedError

    def producer_finish(self) -> None:
        raise NotImplementedError

    def enqueue_spin(self, item: Any, budget: Optional[int] = None) -> None:
        """Retry try_enqueue until it succeeds, yielding between attempts.

        ``budget`` bounds the number of try_enqueue calls; None spins
        until success. Raises QueueTimeout when the budget is exhausted.
        """
        attempts = 0
        while True:
            if self.try_enqueue(item):
                return
            attempts += 1
            if budget is not None and attempts >= budget:
                raise QueueTimeout(
                    f"enqueue_spin gave up after {attempts} attempts"
                )
            if attempts < _SPIN_FAST_ATTEMPTS:
                time.sleep(0)
            else:
                time.sleep(_SPIN_SLOW_SECONDS)

    def stats(self) -> EndpointStats:
        return EndpointStats(
            enq_attempts=self._enq_attempts,
            enq_successes=self._enq_successes,
            publication_events=self._publications,
        )


class ConsumerEndpoint:
    """Base consumer handle: spin wrapper, drain helper, stats."""

    _kind: QueueKind

    def try_dequeue(self) -> Any:
        raise NotImplementedError

    def finished(self) -> bool:
        """True once the producer called producer_finish and every
        committed element has been dequeued."""
        raise NotImplementedError

    def dequeue_spin(self, budget: Optional[int] = None) -> Any:
        attempts = 0
        while True:
            item = self.try_dequeue()
            if item is not EMPTY:
                return item
            attempts += 1
            if budget is not None and attempts >= budget:
                raise QueueTimeout(
                    f"dequeue_spin gave up after {attempts} attempts"
                )
            if attempts < _SPIN_FAST_ATTEMPTS:
                time.sleep(0)
            else:
                time.sleep(_SPIN_SLOW_SECONDS)

    def drain(self) -> list:
        """Dequeue until the producer has finished and the queue is empty.

        Only safe to call when the producer is guaranteed to call
        producer_finish eventually; otherwise this spins forever.
        """
        out = []
        while True:
            item = self.try_dequeue()
            if item is not EMPTY:
                out.append(item)
                continue
            if self.finished():
                return out
            time.sleep(0)

    def stats(self) -> EndpointStats:
        return EndpointStats(
            deq_attempts=self._deq_attempts,
            deq_successes=self._deq_successes,
            publication_events=self._publications,
        )


# ---------------------------------------------------------------------------
# Lamport: shared head and tail, republished on every operation.


class _LamportShared:
    __slots__ = ("ring", "capacity", "head", "tail", "producer_done")

    def __init__(self, config: QueueConfig):
        line = config.cache_line_bytes
        self.ring = [None] * config.capacity
        self.capacity = config.capacity
        self.head = Padded(0, line)
        self.tail = Padded(0, line)
        self.producer_done = Padded(False, line)


class LamportProducer(ProducerEndpoint):
    _kind = QueueKind.LAMPORT
    __slots__ = (
        "_shared", "_ring", "_capacity", "_tail", "_tail_box", "_head_box",
        "_enq_attempts", "_enq_successes", "_publications",
    )

    def __init__(self, shared: _LamportShared):
        self._shared = shared
        self._ring = shared.ring
        self._capacity = shared.capacity
        self._tail = 0  # private mirror of the shared tail
        self._tail_box = shared.tail
        self._head_box = shared.head
        self._enq_attempts = 0
        self._enq_successes = 0
        self._publications = 0

    def try_enqueue(self, item: Any) -> bool:
        self._enq_attempts += 1
        tail = self._tail
        nxt = tail + 1
        if nxt == self._capacity:
            nxt = 0
        if nxt == self._head_box.value:  # full: one slot is kept free
            return False
        self._ring[tail] = item
        self._tail = nxt
        self._tail_box.value = nxt  # publish
        self._enq_successes += 1
        self._publications += 1
        return True

    def producer_finish(self) -> None:
        self._shared.producer_done.value = True


class LamportConsumer(ConsumerEndpoint):
    _kind = QueueKind.LAMPORT
    __slots__ = (
        "_shared", "_ring", "_capacity", "_head", "_head_box", "_tail_box",
        "_deq_attempts", "_deq_successes", "_publications",
    )

    def __init__(self, shared: _LamportShared):
        self._shared = shared
        self._ring = shared.ring
        self._capacity = shared.capacity
        self._head = 0
        self._head_box = shared.head
        self._tail_box = shared.tail
        self._deq_attempts = 0
        self._deq_successes = 0
        self._publications = 0

    def try_dequeue(self) -> Any:
        self._deq_attempts += 1
        head = self._head
        if head == self._tail_box.value:
            return EMPTY
        item = self._ring[head]
        nxt = head + 1
        if nxt == self._capacity:
            nxt = 0
        self._head = nxt
        self._head_box.value = nxt  # publish consumption
        self._deq_successes += 1
        self._publications += 1
        return item

    def finished(self) -> bool:
        if not self._shared.producer_done.value:
            return False
        return self._head == self._tail_box.value


# ---------------------------------------------------------------------------
# FastForward: cells tagged with their occupancy, indices endpoint-private.
#
# A full cell holds a one-element tuple wrapping the payload; an empty
# cell holds None. Storing the wrapper is a single release event that
# publishes occupancy and payload together, so any payload value
# (including None) is legal.


class _FastForwardShared:
    __slots__ = ("ring", "capacity", "producer_done")

    def __init__(self, config: QueueConfig):
        self.ring = [None] * config.capacity
        self.capacity = config.capacity
        self.producer_done = Padded(False, config.cache_line_bytes)


class FastForwardProducer(ProducerEndpoint):
    _kind = QueueKind.FASTFORWARD
    __slots__ = (
        "_shared", "_ring", "_capacity", "_tail",
        "_enq_attempts", "_enq_successes", "_publications",
    )

    def __init__(self, shared: _FastForwardShared):
        self._shared = shared
        self._ring = shared.ring
        self._capacity = shared.capacity
        self._tail = 0  # never read by the consumer
        self._enq_attempts = 0
        self._enq_successes = 0
        self._publications = 0

    def try_enqueue(self, item: Any) -> bool:
        self._enq_attempts += 1
        tail = self._tail
        if self._ring[tail] is not None:  # cell still occupied
            return False
        self._ring[tail] = (item,)  # payload + Full tag, one store
        nxt = tail + 1
        self._tail = 0 if nxt == self._capacity else nxt
        self._enq_successes += 1
        self._publications += 1
        return True

    def producer_finish(self) -> None:
        self._shared.producer_done.value = True


class FastForwardConsumer(ConsumerEndpoint):
    _kind = QueueKind.FASTFORWARD
    __slots__ = (
        "_shared", "_ring", "_capacity", "_head",
        "_deq_attempts", "_deq_successes", "_publications",
    )

    def __init__(self, shared: _FastForwardShared):
        self._shared = shared
        self._ring = shared.ring
        self._capacity = shared.capacity
        self._head = 0  # never read by the producer
        self._deq_attempts = 0
        self._deq_successes = 0
        self._publications = 0

    def try_dequeue(self) -> Any:
        self._deq_attempts += 1
        head = self._head
        cell = self._ring[head]
        if cell is None:
            return EMPTY
        self._ring[head] = None  # clear tag first, then advance
        nxt = head + 1
        self._head = 0 if nxt == self._capacity else nxt
        self._deq_successes += 1
        self._publications += 1
        return cell[0]

    def finished(self) -> bool:
        if not self._shared.producer_done.value:
            return False
        return self._ring[self._head] is None


# ---------------------------------------------------------------------------
# BatchQueue: two halves of N slots exchanged through one ownership flag.
#
# The producer fills one half while the consumer copies the other into a
# private staging buffer. Completing a half publishes it by setting
# is_full; the consumer clears the flag after copying. The blocking
# publish of the reference algorithm becomes a deferred publication
# here: when a half is complete but is_full is still set, the producer
# records the pending hand-off and reports Full until it resolves.
#
# Termination: leftovers (a partially filled half, or a completed half
# whose publication never resolved) are exposed through leftover_flag
# plus the producer's index; the consumer only reads that range after
# observing producer_done, so no write can race the drain.


class _BatchQueueShared:
    __slots__ = (
        "ring", "half", "capacity", "is_full", "enq_index",
        "leftover_flag", "producer_done",
    )

    def __init__(self, config: QueueConfig):
        line = config.cache_line_bytes
        self.ring = [None] * config.capacity
        self.half = config.capacity // 2
        self.capacity = config.capacity
        self.is_full = Padded(False, line)
        self.enq_index = Padded(0, line)  # written only at finish
        self.leftover_flag = Padded(False, line)
        self.producer_done = Padded(False, line)


class BatchQueueProducer(ProducerEndpoint):
    _kind = QueueKind.BATCHQUEUE
    __slots__ = (
        "_shared", "_ring", "_half", "_capacity", "_is_full", "_enq_index",
        "_pending_publish", "_published_half", "_debug",
        "_enq_attempts", "_enq_successes", "_publications",
    )

    def __init__(self, shared: _BatchQueueShared, debug: bool = False):
        self._shared = shared
        self._ring = shared.ring
        self._half = shared.half
        self._capacity = shared.capacity
        self._is_full = shared.is_full
        self._enq_index = 0  # private; exposed via shared box at finish
        self._pending_publish = False
        self._published_half = -1
        self._debug = debug
        self._enq_attempts = 0
        self._enq_successes = 0
        self._publications = 0

    def try_enqueue(self, item: Any) -> bool:
        self._enq_attempts += 1
        if self._pending_publish:
            if self._is_full.value:
                return False  # consumer still owns the previous half
            self._publish()
        idx = self._enq_index
        if self._debug and self._is_full.value and idx // self._half == self._published_half:
            raise AssertionError(
                "producer writing into the half owned by the consumer"
            )
        self._ring[idx] = item
        idx += 1
        if idx == self._capacity:
            idx = 0
        self._enq_index = idx
        if idx % self._half == 0:  # half completed
            if self._is_full.value:
                self._pending_publish = True
            else:
                self._publish()
        self._enq_successes += 1
        return True

    def _publish(self) -> None:
        half = self._half
        self._published_half = (self._enq_index // half - 1) % (self._capacity // half)
        self._pending_publish = False
        self._is_full.value = True  # hand the completed half over
        self._publications += 1

    def producer_finish(self) -> None:
        shared = self._shared
        if self._pending_publish and not self._is_full.value:
            self._publish()
        shared.enq_index.value = self._enq_index
        leftovers = self._pending_publish or self._enq_index % self._half != 0
        if leftovers:
            shared.leftover_flag.value = True
            self._publications += 1  # exposes committed elements
        shared.producer_done.value = True


class BatchQueueConsumer(ConsumerEndpoint):
    _kind = QueueKind.BATCHQUEUE
    __slots__ = (
        "_shared", "_ring", "_half", "_capacity", "_is_full", "_deq_index",
        "_copy_buf", "_copy_pos", "_leftovers_taken",
        "_deq_attempts", "_deq_successes", "_publications",
    )

    def __init__(self, shared: _BatchQueueShared):
        self._shared = shared
        self._ring = shared.ring
        self._half = shared.half
        self._capacity = shared.capacity
        self._is_full = shared.is_full
        self._deq_index = 0
        self._copy_buf: list = []
        self._copy_pos = 0
        self._leftovers_taken = False
        self._deq_attempts = 0
        self._deq_successes = 0
        self._publications = 0

    def try_dequeue(self) -> Any:
        self._deq_attempts += 1
        pos = self._copy_pos
        if pos < len(self._copy_buf):
            item = self._copy_buf[pos]
            self._copy_pos = pos + 1
            self._deq_successes += 1
            return item
        if self._is_full.value:
            self._refill(self._half)
            self._is_full.value = False  # return the half to the producer
            self._publications += 1
            return self._take_first()
        shared = self._shared
        if shared.producer_done.value and shared.leftover_flag.value and not self._leftovers_taken:
            count = (shared.enq_index.value - self._deq_index) % self._capacity
            self._leftovers_taken = True
            if count:
                self._refill(count)
                return self._take_first()
        return EMPTY

    def _refill(self, count: int) -> None:
        # Halves are aligned, so [deq, deq+count) never wraps the ring.
        deq = self._deq_index
        self._copy_buf = self._ring[deq:deq + count]
        self._copy_pos = 0
        self._deq_index = (deq + count) % self._capacity

    def _take_first(self) -> Any:
        self._copy_pos = 1
        self._deq_successes += 1
        return self._copy_buf[0]

    def finished(self) -> bool:
        shared = self._shared
        if not shared.producer_done.value:
            return False
        if self._copy_pos < len(self._copy_buf) or self._is_full.value:
            return False
        return not shared.leftover_flag.value or self._leftovers_taken


# ---------------------------------------------------------------------------
# MCRingBuffer: batched publication of private working indices.


class _MCRingShared:
    __slots__ = ("ring", "capacity", "read", "write", "batch_size", "producer_done")

    def __init__(self, config: QueueConfig):
        line = config.cache_line_bytes
        self.ring = [None] * config.capacity
        self.capacity = config.capacity
        self.read = Padded(0, line)    # published consumer index
        self.write = Padded(0, line)   # published producer index
        self.batch_size = config.mcr_batch_size
        self.producer_done = Padded(False, line)


class MCRingProducer(ProducerEndpoint):
    _kind = QueueKind.MCRINGBUFFER
    __slots__ = (
        "_shared", "_ring", "_capacity", "_batch", "_write_box", "_read_box",
        "_local_read", "_next_write", "_w_batch", "_hb_period", "_hb_pending",
        "_enq_attempts", "_enq_successes", "_publications",
    )

    def __init__(self, shared: _MCRingShared, heartbeat_period: Optional[int] = None):
        self._shared = shared
        self._ring = shared.ring
        self._capacity = shared.capacity
        self._batch = shared.batch_size
        self._write_box = shared.write
        self._read_box = shared.read
        self._local_read = 0
        self._next_write = 0
        self._w_batch = 0
        self._hb_period = heartbeat_period
        self._hb_pending = 0
        self._enq_attempts = 0
        self._enq_successes = 0
        self._publications = 0

    def _raw_enqueue(self, item: Any) -> bool:
        nxt = self._next_write + 1
        if nxt == self._capacity:
            nxt = 0
        if nxt == self._local_read:
            self._local_read = self._read_box.value  # refresh snapshot
            if nxt == self._local_read:
                return False
        self._ring[self._next_write] = item
        self._next_write = nxt
        self._w_batch += 1
        if self._w_batch >= self._batch:
            self._write_box.value = nxt  # batched publication
            self._w_batch = 0
            self._publications += 1
        return True

    def try_enqueue(self, item: Any) -> bool:
        self._enq_attempts += 1
        if not self._raw_enqueue(item):
            return False
        self._enq_successes += 1
        if self._hb_period is not None:
            if self._w_batch == 0:
                self._hb_pending = 0
            else:
                self._hb_pending += 1
                if self._hb_pending >= self._hb_period:
                    self._inject_heartbeats()
        return True

    def _inject_heartbeats(self) -> None:
        # Pad the unfinished batch with filler so the publication fires
        # even when real input stalls. Best effort: stops if the ring
        # cannot take more.
        while self._w_batch != 0:
            if not self._raw_enqueue(_HEARTBEAT):
                return
        self._hb_pending = 0

    def producer_finish(self) -> None:
        if self._w_batch > 0:
            self._write_box.value = self._next_write  # flush partial batch
            self._w_batch = 0
            self._publications += 1
        self._shared.producer_done.value = True


class MCRingConsumer(ConsumerEndpoint):
    _kind = QueueKind.MCRINGBUFFER
    __slots__ = (
        "_shared", "_ring", "_capacity", "_batch", "_write_box", "_read_box",
        "_local_write", "_next_read", "_r_batch",
        "_deq_attempts", "_deq_successes", "_publications",
    )

    def __init__(self, shared: _MCRingShared):
        self._shared = shared
        self._ring = shared.ring
        self._capacity = shared.capacity
        self._batch = shared.batch_size
        self._write_box = shared.write
        self._read_box = shared.read
        self._local_write = 0
        self._next_read = 0
        self._r_batch = 0
        self._deq_attempts = 0
        self._deq_successes = 0
        self._publications = 0

    def try_dequeue(self) -> Any:
        self._deq_attempts += 1
        while True:
            nxt = self._next_read
            if nxt == self._local_write:
                self._local_write = self._write_box.value
                if nxt == self._local_write:
                    return EMPTY
            item = self._ring[nxt]
            nxt += 1
            self._next_read = 0 if nxt == self._capacity else nxt
            self._r_batch += 1
            if self._r_batch >= self._batch:
                self._read_box.value = self._next_read
                self._r_batch = 0
                self._publications += 1
            if item is _HEARTBEAT:
                continue  # filler never leaves the queue
            self._deq_successes += 1
            return item

    def finished(self) -> bool:
        if not self._shared.producer_done.value:
            return False
        if self._next_read != self._local_write:
            return False
        self._local_write = self._write_box.value
        return self._next_read == self._local_write


# ---------------------------------------------------------------------------


def new_queue(
    kind: QueueKind, config: QueueConfig
) -> tuple[ProducerEndpoint, ConsumerEndpoint]:
    """Create an empty queue of the given kind and return its endpoints.

    Usable capacity per kind: Lamport keeps one slot free (capacity-1);
    FastForward uses every cell; BatchQueue holds up to capacity
    elements but exchanges them a half at a time; MCRingBuffer keeps
    one guard slot free (capacity-1).
    """
    config.validate(kind)
    if kind is QueueKind.LAMPORT:
        shared_l = _LamportShared(config)
        return LamportProducer(shared_l), LamportConsumer(shared_l)
    if kind is QueueKind.FASTFORWARD:
        shared_f = _FastForwardShared(config)
        return FastForwardProducer(shared_f), FastForwardConsumer(shared_f)
    if kind is QueueKind.BATCHQUEUE:
        shared_b = _BatchQueueShared(config)
        return BatchQueueProducer(shared_b, debug=config.debug), BatchQueueConsumer(shared_b)
    if kind is QueueKind.MCRINGBUFFER:
        shared_m = _MCRingShared(config)
        return (
            MCRingProducer(shared_m, heartbeat_period=config.mcr_heartbeat_period),
            MCRingConsumer(shared_m),
        )
    raise InvalidConfig(f"unknown queue kind: {kind!r}")
