"""Timetables, proximity cost, incremental deltas, feasibility, construction.

Cost bookkeeping is exact: the objective is kept as an integer numerator
(sum over conflicting exam pairs of weight * co-enrollment) and divided by
the student count only when a per-student value is reported.  Incremental
move deltas are therefore exact integers, never float approximations.

Two delta paths exist behind one contract.  Small instances go through
pure-Python adjacency loops (low constant cost); larger instances keep a
slot-interaction matrix so wholesale slot-permutation moves cost O(k^2)
instead of touching every moved exam's neighborhood.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .instance import ProblemInstance

# Weight per timeslot distance for conflicting exam pairs: distance 1 -> 16,
# halving down to distance 5 -> 1, zero beyond.  Distance 0 is a hard
# violation counted separately, never a weighted term.
PROXIMITY_WEIGHTS = (16, 8, 4, 2, 1)

# Below this exam count the pure-Python paths win; above it the slot matrix
# pays for itself.
_SLOT_MATRIX_MIN_EXAMS = 65


class SlotsExhausted(RuntimeError):
    """Initial construction ran out of timeslots before placing every exam."""

    def __init__(self, unplaced: int):
        super().__init__(f"construction failed: {unplaced} exam(s) unplaced")
        self.unplaced = unplaced


@lru_cache(maxsize=None)
def weight_table(num_slots: int) -> np.ndarray:
    """Weight indexed by slot distance 0..num_slots-1 (read-only)."""
    wt = np.zeros(max(num_slots, 1), dtype=np.int64)
    for d, w in enumerate(PROXIMITY_WEIGHTS, start=1):
        if d < len(wt):
            wt[d] = w
    wt.setflags(write=False)
    return wt


@lru_cache(maxsize=None)
def _weight_list(num_slots: int) -> list[int]:
    return weight_table(num_slots).tolist()


@lru_cache(maxsize=None)
def _weight_matrix(num_slots: int) -> np.ndarray:
    """W[s, t] = weight of distance |s - t| (zero diagonal, read-only)."""
    idx = np.arange(num_slots)
    W = weight_table(num_slots)[np.abs(idx[:, None] - idx[None, :])]
    W.setflags(write=False)
    return W


@dataclass(frozen=True)
class FeasibilityReport:
    hc1_violations: int       # conflicting exam pairs sharing a slot
    hc2_violations: int       # slots whose enrollment sum exceeds capacity
    hc3_ok: bool              # each exam sits in exactly one slot set
    hc4_unassigned: int       # exams without a slot
    feasible: bool


class Timetable:
    """Exam -> timeslot assignment with cached exact cost numerator.

    ``slot_members[s]`` mirrors ``assignment`` as per-slot exam sets.  On
    instances above the small-size threshold, ``slot_conflicts`` holds the
    symmetric slot-interaction matrix A with A[s, t] = sum of c_ij over
    ordered exam pairs (i in s, j in t, i != j); the cost numerator equals
    (W * A).sum() // 2.
    """

    __slots__ = ("assignment", "slot_members", "num_slots", "num_students",
                 "cost_numerator", "slot_conflicts")

    def __init__(self, assignment, slot_members, num_slots, num_students,
                 cost_numerator, slot_conflicts):
        self.assignment = assignment
        self.slot_members = slot_members
        self.num_slots = num_slots
        self.num_students = num_students
        self.cost_numerator = cost_numerator
        self.slot_conflicts = slot_conflicts

    @classmethod
    def from_assignment(cls, inst: ProblemInstance, assignment) -> "Timetable":
        """Build a timetable (members, cost, interaction matrix) from a slot
        vector.  Entries of -1 mean unassigned and contribute no cost."""
        k = inst.num_timeslots
        a = np.asarray(assignment, dtype=np.int32).copy()
        if a.shape != (inst.num_exams,):
            raise ValueError("assignment must have one entry per exam")
        if (a >= k).any() or (a < -1).any():
            raise ValueError("slot index out of range")
        members = [set() for _ in range(k)]
        for e, s in enumerate(a.tolist()):
            if s >= 0:
                members[s].add(e)
        tt = cls(a, members, k, inst.num_students, 0, None)
        if inst.num_exams >= _SLOT_MATRIX_MIN_EXAMS:
            tt.slot_conflicts = _build_slot_matrix(inst, a)
            tt.cost_numerator = _numerator_from_slot_matrix(tt.slot_conflicts)
        else:
            tt.cost_numerator = cost_numerator_of(inst, a)
        return tt

    def copy(self) -> "Timetable":
        A = self.slot_conflicts
        return Timetable(
            self.assignment.copy(),
            [set(s) for s in self.slot_members],
            self.num_slots,
            self.num_students,
            self.cost_numerator,
            A.copy() if A is not None else None,
        )

    @property
    def cached_cost(self) -> float:
        """Average proximity cost per student for the cached numerator."""
        return self.cost_numerator / self.num_students


def _build_slot_matrix(inst: ProblemInstance, assignment: np.ndarray) -> np.ndarray:
    k = inst.num_timeslots
    A = np.zeros((k, k), dtype=np.int64)
    src_slots = assignment[inst.edge_src]
    dst_slots = assignment[inst.edge_dst]
    ok = (src_slots >= 0) & (dst_slots >= 0)
    np.add.at(A, (src_slots[ok], dst_slots[ok]), inst.edge_w[ok])
    return A


def _numerator_from_slot_matrix(A: np.ndarray) -> int:
    W = _weight_matrix(A.shape[0])
    return int(np.einsum("ij,ij->", W, A)) // 2


def cost_numerator_of(inst: ProblemInstance, assignment: np.ndarray) -> int:
    """Exact cost numerator of a slot vector (unassigned exams skipped)."""
    a = np.asarray(assignment)
    s1 = a[inst.edge_src]
    s2 = a[inst.edge_dst]
    ok = (s1 >= 0) & (s2 >= 0)
    wt = weight_table(inst.num_timeslots)
    return int(inst.edge_w[ok] @ wt[np.abs(s1[ok] - s2[ok])]) // 2


def evaluate_cost(tt: Timetable, inst: ProblemInstance) -> float:
    """Average proximity cost per student, recomputed from scratch.

    Conflicting pairs sharing a slot contribute nothing here; they are hard
    violations reported by ``check_feasibility``.
    """
    if (tt.assignment < 0).any():
        raise ValueError("cannot evaluate cost with unassigned exams")
    return cost_numerator_of(inst, tt.assignment) / inst.num_students


def delta_numerator(tt: Timetable, inst: ProblemInstance, move) -> int:
    """Exact numerator change if ``move`` were applied (no mutation)."""
    changes = move.changes
    if not changes:
        return 0
    if (move.slot_map is not None and tt.slot_conflicts is not None
            and len(changes) >= tt.num_slots):
        return _perm_delta(tt, move.slot_map)
    return _exam_moves_delta(tt, inst, changes)


def delta_cost(tt: Timetable, inst: ProblemInstance, move) -> float:
    """Per-student cost change of a proposed move (exact numerator / m)."""
    return delta_numerator(tt, inst, move) / inst.num_students


def _perm_delta(tt: Timetable, slot_map) -> int:
    k = tt.num_slots
    mp = np.arange(k)
    for s, t in slot_map:
        mp[s] = t
    W = _weight_matrix(k)
    new2 = int(np.einsum("ij,ij->", W[np.ix_(mp, mp)], tt.slot_conflicts))
    return new2 // 2 - tt.cost_numerator


def _exam_moves_delta(tt: Timetable, inst: ProblemInstance, changes) -> int:
    # Sum per-endpoint pair deltas; pairs with both endpoints moved are seen
    # from each side, so their contribution is halved afterwards.
    a = tt.assignment.tolist()
    wt = _weight_list(tt.num_slots)
    new_pos = dict(changes)
    nbr_lists = inst.nbr_lists
    nbr_weights = inst.nbr_weights
    total = 0
    both_moved = 0
    for e, ns in changes:
        old = a[e]
        for j, c in zip(nbr_lists[e], nbr_weights[e]):
            pj = a[j]
            nj = new_pos.get(j)
            if nj is None:
                d = c * (wt[abs(ns - pj)] - wt[abs(old - pj)])
                total += d
            else:
                d = c * (wt[abs(ns - nj)] - wt[abs(old - pj)])
                both_moved += d
    return total + both_moved // 2


def apply_move(tt: Timetable, inst: ProblemInstance, move, delta: int | None = None):
    """Apply a move in place, keeping members, cost and slot matrix fresh.

    ``delta`` is the precomputed numerator change; it is recomputed when not
    supplied.
    """
    if delta is None:
        delta = delta_numerator(tt, inst, move)
    if not move.changes:
        return
    a = tt.assignment
    members = tt.slot_members
    A = tt.slot_conflicts
    if move.slot_map is not None:
        k = tt.num_slots
        mp = np.arange(k)
        for s, t in move.slot_map:
            mp[s] = t
        relabeled = [None] * k
        for s in range(k):
            relabeled[mp[s]] = members[s]
        tt.slot_members = relabeled
        a[:] = mp[a]
        if A is not None:
            inv = np.empty(k, dtype=np.intp)
            inv[mp] = np.arange(k)
            tt.slot_conflicts = A[np.ix_(inv, inv)]
    elif A is not None:
        rows, cols, vals = [], [], []
        for e, ns in move.changes:
            old = int(a[e])
            nbrs = inst.nbr_lists[e]
            ws = inst.nbr_weights[e]
            cur = a[nbrs].tolist() if nbrs else []
            for pj, c in zip(cur, ws):
                rows.append(old); cols.append(pj); vals.append(-c)
                rows.append(pj); cols.append(old); vals.append(-c)
                rows.append(ns); cols.append(pj); vals.append(c)
                rows.append(pj); cols.append(ns); vals.append(c)
            a[e] = ns
            members[old].discard(e)
            members[ns].add(e)
        if rows:
            np.add.at(A, (np.asarray(rows), np.asarray(cols)), np.asarray(vals))
    else:
        for e, ns in move.changes:
            old = int(a[e])
            a[e] = ns
            members[old].discard(e)
            members[ns].add(e)
    tt.cost_numerator += delta


def check_feasibility(tt: Timetable, inst: ProblemInstance) -> FeasibilityReport:
    """Count hard-constraint violations; reports, never raises."""
    C = inst.conflicts
    a = tt.assignment
    hc4 = int(np.count_nonzero(a < 0))

    hc3_ok = True
    seen = np.zeros(inst.num_exams, dtype=np.int32)
    for s, mem in enumerate(tt.slot_members):
        for e in mem:
            seen[e] += 1
            if a[e] != s:
                hc3_ok = False
    assigned_mask = a >= 0
    if (seen[assigned_mask] != 1).any() or (seen[~assigned_mask] != 0).any():
        hc3_ok = False

    hc1 = 0
    for mem in tt.slot_members:
        if len(mem) > 1:
            idx = np.fromiter(mem, dtype=np.intp)
            sub = C[np.ix_(idx, idx)]
            hc1 += int(np.count_nonzero(np.triu(sub, k=1)))

    hc2 = 0
    if inst.slot_capacity is not None:
        for mem in tt.slot_members:
            load = int(inst.enrollments[list(mem)].sum()) if mem else 0
            if load > inst.slot_capacity:
                hc2 += 1

    feasible = hc1 == 0 and hc2 == 0 and hc3_ok and hc4 == 0
    return FeasibilityReport(hc1, hc2, hc3_ok, hc4, feasible)


def default_balance_cap(inst: ProblemInstance) -> int:
    """One above the mean exams-per-slot: ceil(n / k) + 1."""
    n, k = inst.num_exams, inst.num_timeslots
    return -(-n // k) + 1


def construct_initial_LE(inst: ProblemInstance, balance_cap: int | None = None,
                         rng=None) -> Timetable:
    """Greedy largest-enrollment construction of a conflict-free timetable.

    Each timeslot is filled by seeding with the largest-enrollment
    unscheduled exam and greedily adding further unscheduled exams (in
    descending enrollment, ties by lower index) that conflict with nothing
    already in the slot, subject to the optional per-slot exam-count cap and
    seat capacity.  Deterministic; the ``rng`` argument exists only for
    signature uniformity with the improvement heuristics.

    Raises SlotsExhausted when exams remain after the last slot.
    """
    del rng  # deterministic by design
    n, k = inst.num_exams, inst.num_timeslots
    enroll = inst.enrollments
    order = sorted(range(n), key=lambda i: (-int(enroll[i]), i))
    assignment = np.full(n, -1, dtype=np.int32)
    placed = 0
    cap = inst.slot_capacity
    C = inst.conflicts
    for slot in range(k):
        if placed == n:
            break
        blocked = np.zeros(n, dtype=bool)
        load = 0
        count = 0
        for e in order:
            if assignment[e] >= 0 or blocked[e]:
                continue
            if balance_cap is not None and count >= balance_cap:
                break
            if cap is not None and load + int(enroll[e]) > cap:
                continue
            assignment[e] = slot
            placed += 1
            count += 1
            load += int(enroll[e])
            blocked |= C[e] > 0
    if placed < n:
        raise SlotsExhausted(n - placed)
    return Timetable.from_assignment(inst, assignment)


def solution_to_text(tt: Timetable, inst: ProblemInstance) -> str:
    """One ``exam_id slot`` line per exam plus a trailing cost comment."""
    lines = [f"{e + 1:04d} {int(tt.assignment[e])}" for e in range(inst.num_exams)]
    lines.append(f"# cost {tt.cost_numerator / inst.num_students!r}")
    return "\n".join(lines) + "\n"


def parse_solution_text(text: str, inst: ProblemInstance) -> tuple[np.ndarray, float | None]:
    """Read a solution file back: (assignment with -1 for missing exams,
    reported cost from the trailing comment if present)."""
    assignment = np.full(inst.num_exams, -1, dtype=np.int32)
    reported = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line.split()
            if len(parts) >= 3 and parts[1] == "cost":
                reported = float(parts[2])
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"solution line {lineno}: expected 'exam slot', got {raw!r}")
        exam = int(parts[0]) - 1
        slot = int(parts[1])
        if not 0 <= exam < inst.num_exams:
            raise ValueError(f"solution line {lineno}: unknown exam id {parts[0]}")
        if not 0 <= slot < inst.num_timeslots:
            raise ValueError(f"solution line {lineno}: slot {slot} out of range")
        if assignment[exam] != -1:
            raise ValueError(f"solution line {lineno}: exam {parts[0]} assigned twice")
        assignment[exam] = slot
    return assignment, reported
