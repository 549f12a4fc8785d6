"""Slot-level move heuristics: Kempe swap, reassign, invert, shift.

Every heuristic proposes a :class:`Move` without touching the timetable.
All four are feasibility-preserving on feasible input: Kempe swaps exchange
a connected conflict component between two slots, and the other three only
relabel whole slots, so no conflicting pair can end up sharing a slot.
A proposal may be a declared no-op (empty change set); no-ops are legal,
cost nothing, and still count as an iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .instance import ProblemInstance
from .solution import Timetable


class MoveKind(Enum):
    KEMPE_SWAP = 0      # swap a conflict chain between two slots
    REASSIGN_SEQ = 1    # random permutation of a contiguous slot range
    INVERT_SEQ = 2      # reversal of a contiguous slot range
    SHIFT_SEQ = 3       # cyclic rotation of a contiguous slot range

    @property
    def tag(self) -> str:
        return ("kempe", "reassign", "invert", "shift")[self.value]


@dataclass(frozen=True)
class Move:
    """A set of (exam, new_slot) changes plus how it was produced.

    ``slot_map`` is set for pure slot-relabeling moves: the (old_slot,
    new_slot) pairs for slots that actually change.  ``meta`` records the
    drawn slot indices / chain seed for tracing.
    """

    kind: MoveKind
    changes: tuple[tuple[int, int], ...]
    slot_map: tuple[tuple[int, int], ...] | None = None
    meta: tuple = field(default=())

    @property
    def is_noop(self) -> bool:
        return not self.changes


def _draw_range(k: int, rng) -> tuple[int, int]:
    """Uniform contiguous slot range [a, b] of length >= 2."""
    a = rng.randrange(k - 1)
    b = rng.randrange(a + 1, k)
    return a, b


def _relabel_move(kind: MoveKind, tt: Timetable, mapping: dict[int, int],
                  meta: tuple) -> Move:
    slot_map = tuple((s, t) for s, t in sorted(mapping.items()) if s != t)
    changes = []
    for s, t in slot_map:
        changes.extend((e, t) for e in sorted(tt.slot_members[s]))
    if not changes:
        return Move(kind, (), None, meta)
    return Move(kind, tuple(changes), slot_map, meta)


def kempe_chain(inst: ProblemInstance, tt: Timetable, t1: int, t2: int,
                seed_exam: int) -> set[int]:
    """Connected component of ``seed_exam`` in the conflict graph restricted
    to the exams of slots t1 and t2."""
    union = tt.slot_members[t1] | tt.slot_members[t2]
    conflict_sets = inst.conflict_sets
    chain = {seed_exam}
    stack = [seed_exam]
    while stack:
        e = stack.pop()
        for j in conflict_sets[e]:
            if j in union and j not in chain:
                chain.add(j)
                stack.append(j)
    return chain


def _kempe_move(tt: Timetable, t1: int, t2: int, seed_exam: int,
                chain: set[int]) -> Move:
    changes = [(e, t2) for e in sorted(chain & tt.slot_members[t1])]
    changes += [(e, t1) for e in sorted(chain & tt.slot_members[t2])]
    return Move(MoveKind.KEMPE_SWAP, tuple(changes), None, (t1, t2, seed_exam))


def kempe_chain_swap(tt: Timetable, inst: ProblemInstance, rng) -> Move:
    """Swap a random Kempe chain between two random distinct slots.

    Draws with an empty first slot (or, on capacitated instances, a swap
    that would overload a slot) are retried up to k*k times before a
    declared no-op is returned.
    """
    k = tt.num_slots
    cap = inst.slot_capacity
    for _ in range(k * k):
        t1 = rng.randrange(k)
        t2 = rng.randrange(k)
        if t1 == t2:
            continue
        members1 = tt.slot_members[t1]
        if not members1:
            continue
        ordered = sorted(members1)
        seed_exam = ordered[rng.randrange(len(ordered))]
        chain = kempe_chain(inst, tt, t1, t2, seed_exam)
        if cap is not None:
            enroll = inst.enrollments
            out1 = sum(int(enroll[e]) for e in chain & members1)
            out2 = sum(int(enroll[e]) for e in chain & tt.slot_members[t2])
            load1 = sum(int(enroll[e]) for e in members1)
            load2 = sum(int(enroll[e]) for e in tt.slot_members[t2])
            if load1 - out1 + out2 > cap or load2 - out2 + out1 > cap:
                continue
        return _kempe_move(tt, t1, t2, seed_exam, chain)
    return Move(MoveKind.KEMPE_SWAP, (), None, ())


def reassign_sequence(tt: Timetable, num_slots: int, rng) -> Move:
    """Relabel a contiguous slot range by a uniform random permutation."""
    a, b = _draw_range(num_slots, rng)
    slots = list(range(a, b + 1))
    perm = slots[:]
    rng.shuffle(perm)
    mapping = dict(zip(slots, perm))
    return _relabel_move(MoveKind.REASSIGN_SEQ, tt, mapping, (a, b, tuple(perm)))


def invert_sequence(tt: Timetable, num_slots: int, rng) -> Move:
    """Reverse a contiguous slot range: slot a+i -> slot b-i."""
    a, b = _draw_range(num_slots, rng)
    mapping = {s: a + b - s for s in range(a, b + 1)}
    return _relabel_move(MoveKind.INVERT_SEQ, tt, mapping, (a, b))


def shift_sequence(tt: Timetable, num_slots: int, rng) -> Move:
    """Rotate a contiguous slot range by one position, left or right."""
    a, b = _draw_range(num_slots, rng)
    right = rng.randrange(2) == 0
    if right:
        mapping = {s: (s + 1 if s < b else a) for s in range(a, b + 1)}
    else:
        mapping = {s: (s - 1 if s > a else b) for s in range(a, b + 1)}
    return _relabel_move(MoveKind.SHIFT_SEQ, tt, mapping,
                         (a, b, "right" if right else "left"))


def propose(heuristic: int, tt: Timetable, inst: ProblemInstance, rng) -> Move:
    """Uniform entry point: heuristic index 0..3 -> proposed move."""
    if heuristic == 0:
        return kempe_chain_swap(tt, inst, rng)
    if heuristic == 1:
        return reassign_sequence(tt, tt.num_slots, rng)
    if heuristic == 2:
        return invert_sequence(tt, tt.num_slots, rng)
    if heuristic == 3:
        return shift_sequence(tt, tt.num_slots, rng)
    raise ValueError(f"unknown heuristic index {heuristic}")


NUM_HEURISTICS = 4
HEURISTIC_NAMES = ("kempe_swap", "reassign_seq", "invert_seq", "shift_seq")
