"""Exhaustive interleaving exploration for tiny queue instances.

Each queue algorithm is re-encoded here as a pair of deterministic step
machines (one per endpoint) whose atomic steps are single shared-memory
loads or stores, with local computation folded in. Under sequential
consistency, every possible execution of the two endpoints is some
interleaving of those atomic steps, so a depth-first search over all
schedules (with visited-state pruning, which also collapses busy-wait
cycles) covers every behaviour the algorithm can exhibit on a tiny
instance.

The producer scripts enqueue the values ``1..n`` in order; the checker
verifies on the fly that the consumer only ever observes ``1, 2, 3,
...`` (any reorder, loss, duplication, or read of an unwritten slot
breaks that), plus per-algorithm structural invariants, and flags
schedules where neither endpoint can make progress. This module is the
independent re-encoding of the algorithms: it deliberately does not
reuse the production classes in ``queues``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .queues import InvalidConfig, QueueKind

MAX_CAPACITY = 4
MAX_OPS = 6

#: Initial content of ring cells the producer has not written yet.
#: Real payloads are 1-based, so observing 0 means reading garbage.
GARBAGE = 0


class BoundsExceeded(ValueError):
    """The requested instance is larger than the explorer supports."""


@dataclass(frozen=True)
class CounterexampleTrace:
    """A schedule that violated an invariant, one label per atomic step."""

    reason: str
    steps: Tuple[str, ...]

    def __str__(self) -> str:
        lines = [self.reason] + [f"  {i}: {s}" for i, s in enumerate(self.steps)]
        return "\n".join(lines)


def _set(ring: tuple, i: int, v) -> tuple:
    return ring[:i] + (v,) + ring[i + 1:]


# Machine state conventions: producer and consumer states are tuples
# whose first element is a program counter; shared state is a per-kind
# tuple ending in the ring. step_* return (new_agent, new_shared, label)
# and consumer steps additionally return the values recorded by that
# step. A step that re-checks a condition and sees no change returns an
# identical state, which the driver treats as a busy-wait self-loop.


class _LamportMachine:
    """Two shared indices; every operation republishes its index."""

    def __init__(self, capacity: int, enqueues: int, mutated: bool = False):
        self.cap = capacity
        self.m = enqueues
        self.mutated = mutated
        self.p0 = (0, 0, 0)             # pc, ops_done, tail
        self.c0 = (0, 0, 0, GARBAGE)    # pc, ops_done, head, data
        self.shared0 = (0, 0, (GARBAGE,) * capacity)  # head, tail, ring

    def p_done(self, p) -> bool:
        return p[1] >= self.m and p[0] == 0

    def c_done(self, c, k: int) -> bool:
        return c[1] >= k

    def consumed(self, c) -> int:
        return c[1]

    def step_p(self, p, shared):
        pc, ops, tail = p
        head, s_tail, ring = shared
        after = (tail + 1) % self.cap
        if pc == 0:  # load head, full check
            if after == head:
                return p, shared, "load head (full, retry)"
            return (1, ops, tail), shared, f"load head -> {head}"
        value = ops + 1
        if not self.mutated:
            if pc == 1:  # commit payload
                return (2, ops, tail), (head, s_tail, _set(ring, tail, value)), \
                    f"store ring[{tail}]={value}"
            # pc == 2: publish tail
            return (0, ops + 1, after), (head, after, ring), f"store tail={after}"
        if pc == 1:  # mutation: index published before the payload lands
            return (2, ops, tail), (head, after, ring), f"store tail={after} (early)"
        return (0, ops + 1, after), (head, s_tail, _set(ring, tail, value)), \
            f"store ring[{tail}]={value} (late)"

    def step_c(self, c, shared):
        pc, ops, head, data = c
        s_head, tail, ring = shared
        if pc == 0:  # load tail, empty check
            if head == tail:
                return c, shared, "load tail (empty, retry)", ()
            return (1, ops, head, data), shared, f"load tail -> {tail}", ()
        if pc == 1:  # read payload
            return (2, ops, head, ring[head]), shared, f"load ring[{head}]", ()
        after = (head + 1) % self.cap
        return (0, ops + 1, after, GARBAGE), (after, tail, ring), \
            f"store head={after}", (data,)

    def check(self, p, c, shared) -> Optional[str]:
        if p[0] == 0 and c[0] == 0:  # quiescent occupancy accounting
            head, tail, _ = shared
            occupancy = (tail - head) % self.cap
            if occupancy != p[1] - c[1]:
                return (
                    f"occupancy {occupancy} != committed {p[1]} - consumed {c[1]}"
                )
            if occupancy > self.cap - 1:
                return f"occupancy {occupancy} exceeds capacity-1"
        return None


class _FastForwardMachine:
    """Occupancy-tagged cells; a None cell is empty."""

    def __init__(self, capacity: int, enqueues: int):
        self.cap = capacity
        self.m = enqueues
        self.p0 = (0, 0, 0)          # pc, ops_done, tail (producer-private)
        self.c0 = (0, 0, 0, GARBAGE)  # pc, ops_done, head, data
        self.shared0 = ((None,) * capacity,)

    def p_done(self, p) -> bool:
        return p[1] >= self.m and p[0] == 0

    def c_done(self, c, k: int) -> bool:
        return c[1] >= k

    def consumed(self, c) -> int:
        return c[1]

    def step_p(self, p, shared):
        pc, ops, tail = p
        (ring,) = shared
        if pc == 0:  # occupancy check on the target cell
            if ring[tail] is not None:
                return p, shared, f"load ring[{tail}] (occupied, retry)"
            return (1, ops, tail), shared, f"load ring[{tail}] (free)"
        value = ops + 1
        after = (tail + 1) % self.cap
        return (0, ops + 1, after), (_set(ring, tail, value),), \
            f"store ring[{tail}]={value}"

    def step_c(self, c, shared):
        pc, ops, head, data = c
        (ring,) = shared
        if pc == 0:
            cell = ring[head]
            if cell is None:
                return c, shared, f"load ring[{head}] (empty, retry)", ()
            return (1, ops, head, cell), shared, f"load ring[{head}] -> {cell}", ()
        after = (head + 1) % self.cap
        return (0, ops + 1, after, GARBAGE), (_set(ring, head, None),), \
            f"store ring[{head}]=None", (data,)

    def check(self, p, c, shared) -> Optional[str]:
        return None  # indices are endpoint-private by construction


class _BatchQueueMachine:
    """Two halves exchanged through a single ownership flag."""

    def __init__(self, capacity: int, enqueues: int):
        self.cap = capacity
        self.half = capacity // 2
        self.m = enqueues
        self.p0 = (0, 0, 0)              # pc, ops_done, enq_index
        self.c0 = (0, 0, 0, 0, ())       # pc, ops_done, deq_index, copy_i, buf
        self.shared0 = (False, (GARBAGE,) * capacity)  # is_full, ring

    def p_done(self, p) -> bool:
        return p[1] >= self.m and p[0] == 0

    def c_done(self, c, k: int) -> bool:
        return c[1] >= k

    def consumed(self, c) -> int:
        return c[1]

    def step_p(self, p, shared):
        pc, ops, enq = p
        is_full, ring = shared
        if pc == 0:  # write into the producer-owned half
            value = ops + 1
            nxt = (enq + 1) % self.cap
            pc2 = 1 if nxt % self.half == 0 else 0
            return (pc2, ops + 1, nxt), (is_full, _set(ring, enq, value)), \
                f"store ring[{enq}]={value}"
        if pc == 1:  # wait for the previous hand-off to be taken
            if is_full:
                return p, shared, "load is_full (still set, retry)"
            return (2, ops, enq), shared, "load is_full (clear)"
        return (0, ops, enq), (True, ring), "store is_full=True"

    def step_c(self, c, shared):
        pc, ops, deq, copy_i, buf = c
        is_full, ring = shared
        if pc == 0:
            if not is_full:
                return c, shared, "load is_full (unset, retry)", ()
            return (1, ops, deq, 0, ()), shared, "load is_full (set)", ()
        if pc == 1:  # copy the published half, one cell per step
            buf2 = buf + (ring[deq + copy_i],)
            if copy_i + 1 < self.half:
                return (1, ops, deq, copy_i + 1, buf2), shared, \
                    f"load ring[{deq + copy_i}]", ()
            return (2, ops, deq, 0, buf2), shared, f"load ring[{deq + copy_i}]", ()
        after = (deq + self.half) % self.cap
        return (0, ops + self.half, after, 0, ()), (False, ring), \
            "store is_full=False", buf

    def check(self, p, c, shared) -> Optional[str]:
        is_full, _ring = shared
        if is_full and p[0] == 0 and not self.p_done(p):
            # With a hand-off pending, the producer's next write must
            # stay out of the consumer-owned half.
            if p[2] // self.half == c[2] // self.half:
                return (
                    f"producer about to write index {p[2]} inside the "
                    f"half owned by the consumer (deq={c[2]})"
                )
        return None


class _MCRingMachine:
    """Private working indices, shared pair republished per batch."""

    def __init__(self, capacity: int, enqueues: int, batch: int):
        self.cap = capacity
        self.m = enqueues
        self.batch = batch
        self.p0 = (0, 0, 0, 0, 0)  # pc, ops, local_read, next_write, w_batch
        self.c0 = (0, 0, 0, 0, 0)  # pc, ops, local_write, next_read, r_batch
        self.shared0 = (0, 0, (GARBAGE,) * capacity)  # read, write, ring

    def p_done(self, p) -> bool:
        return p[1] >= self.m and p[0] == 0

    def c_done(self, c, k: int) -> bool:
        return c[1] >= k and c[0] == 0

    def consumed(self, c) -> int:
        return c[1]

    def step_p(self, p, shared):
        pc, ops, local_read, next_write, w_batch = p
        s_read, s_write, ring = shared
        after = (next_write + 1) % self.cap
        if pc == 0:
            if after == local_read:  # refresh the read snapshot
                if after == s_read:
                    return p, shared, "load read (full, retry)"
                return (0, ops, s_read, next_write, w_batch), shared, \
                    f"load read -> {s_read}"
            value = ops + 1
            w2 = w_batch + 1
            pc2 = 1 if w2 >= self.batch else 0
            return (pc2, ops + 1, local_read, after, w2), \
                (s_read, s_write, _set(ring, next_write, value)), \
                f"store ring[{next_write}]={value}"
        return (0, ops, local_read, next_write, 0), \
            (s_read, next_write, ring), f"store write={next_write}"

    def step_c(self, c, shared):
        pc, ops, local_write, next_read, r_batch = c
        s_read, s_write, ring = shared
        if pc == 0:
            if next_read == local_write:  # refresh the write snapshot
                if next_read == s_write:
                    return c, shared, "load write (empty, retry)", ()
                return (0, ops, s_write, next_read, r_batch), shared, \
                    f"load write -> {s_write}", ()
            data = ring[next_read]
            after = (next_read + 1) % self.cap
            r2 = r_batch + 1
            pc2 = 1 if r2 >= self.batch else 0
            return (pc2, ops + 1, local_write, after, r2), shared, \
                f"load ring[{next_read}] -> {data}", (data,)
        return (0, ops, local_write, next_read, 0), \
            (next_read, s_write, ring), f"store read={next_read}", ()

    def check(self, p, c, shared) -> Optional[str]:
        s_read, s_write, _ring = shared
        if p[0] == 0:  # publication lag bound at rest
            lag = (p[3] - s_write) % self.cap
            if lag >= self.batch:
                return f"producer index lag {lag} >= batch {self.batch}"
        if c[0] == 0:
            lag = (c[3] - s_read) % self.cap
            if lag >= self.batch:
                return f"consumer index lag {lag} >= batch {self.batch}"
        return None


def _build_machine(
    kind: QueueKind, capacity: int, enqueues: int, mcr_batch: int, mutation: Optional[str]
):
    if mutation is not None:
        if mutation != "publish_before_write" or kind is not QueueKind.LAMPORT:
            raise ValueError(
                f"unsupported mutation {mutation!r} for {kind.value}"
            )
        return _LamportMachine(capacity, enqueues, mutated=True)
    if kind is QueueKind.LAMPORT:
        return _LamportMachine(capacity, enqueues)
    if kind is QueueKind.FASTFORWARD:
        return _FastForwardMachine(capacity, enqueues)
    if kind is QueueKind.BATCHQUEUE:
        if capacity % 2 != 0:
            raise InvalidConfig(f"BatchQueue capacity must be even, got {capacity}")
        return _BatchQueueMachine(capacity, enqueues)
    if kind is QueueKind.MCRINGBUFFER:
        if capacity % mcr_batch != 0:
            raise InvalidConfig(
                f"mcr_batch {mcr_batch} must divide capacity {capacity}"
            )
        return _MCRingMachine(capacity, enqueues, mcr_batch)
    raise InvalidConfig(f"unknown queue kind: {kind!r}")


def _fair_run_consumable(machine, enqueues: int) -> Tuple[int, int]:
    """Alternate each agent to its fixpoint and report how far both get.

    Returns (producer_ops_completed, consumer_ops_completed) for a fair
    schedule; this sizes the dequeue script since batching can leave a
    published-index tail that no schedule may consume.
    """
    p, c, shared = machine.p0, machine.c0, machine.shared0
    unlimited = enqueues * 4 + 16
    while True:
        progressed = False
        while not machine.p_done(p):
            res = machine.step_p(p, shared)
            if (res[0], res[1]) == (p, shared):
                break
            p, shared = res[0], res[1]
            progressed = True
        while not machine.c_done(c, unlimited):
            res = machine.step_c(c, shared)
            if (res[0], res[1]) == (c, shared):
                break
            c, shared = res[0], res[1]
            progressed = True
        if not progressed:
            return p[1], machine.consumed(c)


def explore_interleavings(
    kind: QueueKind,
    capacity: int,
    enqueues: int,
    dequeues: Optional[int] = None,
    *,
    mcr_batch: int = 1,
    mutation: Optional[str] = None,
) -> Optional[CounterexampleTrace]:
    """Explore every schedule of a tiny instance; None means all clean.

    ``dequeues`` defaults to the largest count any fair schedule can
    consume given ``enqueues`` (equal to it except where batching holds
    back a partial hand-off). The first schedule that breaks FIFO, a
    structural invariant, or progress is returned as a trace.
    """
    if capacity < 2 or capacity > MAX_CAPACITY:
        raise BoundsExceeded(f"capacity must be in 2..{MAX_CAPACITY}, got {capacity}")
    if enqueues < 0 or enqueues > MAX_OPS:
        raise BoundsExceeded(f"enqueues must be in 0..{MAX_OPS}, got {enqueues}")
    if dequeues is not None and (dequeues < 0 or dequeues > MAX_OPS):
        raise BoundsExceeded(f"dequeues must be in 0..{MAX_OPS}, got {dequeues}")

    machine = _build_machine(kind, capacity, enqueues, mcr_batch, mutation)
    reachable_m, reachable_k = _fair_run_consumable(machine, enqueues)
    if mutation is None and reachable_m < enqueues:
        raise ValueError(
            f"enqueue script of {enqueues} cannot complete at capacity "
            f"{capacity} (only {reachable_m} reachable)"
        )
    if dequeues is None:
        dequeues = min(reachable_k, MAX_OPS)
    elif dequeues > reachable_k and mutation is None:
        raise ValueError(
            f"dequeue script of {dequeues} exceeds the {reachable_k} "
            f"consumable at this configuration"
        )
    k = dequeues

    init = (machine.p0, machine.c0, machine.shared0)
    visited = {init}
    parents: Dict[tuple, Optional[Tuple[tuple, str]]] = {init: None}
    stack = [init]

    def trace_back(state: tuple, reason: str) -> CounterexampleTrace:
        steps: List[str] = []
        cur = state
        while parents[cur] is not None:
            prev, label = parents[cur]
            steps.append(label)
            cur = prev
        steps.reverse()
        return CounterexampleTrace(reason=reason, steps=tuple(steps))

    while stack:
        state = stack.pop()
        p, c, shared = state

        msg = machine.check(p, c, shared)
        if msg is not None:
            return trace_back(state, f"invariant violated: {msg}")

        p_active = not machine.p_done(p)
        c_active = not machine.c_done(c, k)
        moves = []
        if p_active:
            p2, sh2, label = machine.step_p(p, shared)
            ns = (p2, c, sh2)
            if ns != state:
                moves.append((ns, "P: " + label, ()))
        if c_active:
            c2, sh2, label, recorded = machine.step_c(c, shared)
            ns = (p, c2, sh2)
            if ns != state:
                moves.append((ns, "C: " + label, recorded))

        if not moves:
            if p_active or c_active:
                return trace_back(
                    state,
                    "deadlock: both endpoints retry forever with "
                    f"{machine.consumed(c)}/{k} consumed",
                )
            continue  # final state: scripts completed, FIFO held throughout

        consumed_before = machine.consumed(c)
        for ns, label, recorded in moves:
            known = ns in visited
            if not known:
                visited.add(ns)
                parents[ns] = (state, label)
                stack.append(ns)
            for j, value in enumerate(recorded):
                expected = consumed_before + j + 1
                if value != expected:
                    if known:  # make the failing edge visible in the trace
                        parents[ns] = (state, label)
                    return trace_back(
                        ns,
                        f"FIFO violated: dequeue #{consumed_before + j} "
                        f"returned {value!r}, expected {expected}",
                    )
    return None
