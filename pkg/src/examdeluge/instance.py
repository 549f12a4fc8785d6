"""Problem instances for uncapacitated exam timetabling.

An instance is a set of exams, a student population (each student holds a
set of exam indices), a number of timeslots, and the conflict matrix derived
from co-enrollments.  Instances can be read from the classic two-file text
format (``.crs`` enrollment list plus ``.stu`` per-student registration
lines), generated randomly, or built directly from student registrations.

Instances are immutable after construction and safe to share between
concurrent solver runs.
"""

from __future__ import annotations

import logging
import random
import re
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)

# Alias: conflict matrices are plain symmetric integer arrays, shape (n, n).
# Off-diagonal entry [i, j] counts students enrolled in both exam i and exam
# j; the diagonal holds per-exam enrollments.
ConflictMatrix = np.ndarray


class TorontoFormatError(ValueError):
    """Raised for malformed .crs/.stu/manifest input."""


@dataclass(eq=False)
class ProblemInstance:
    """A complete timetabling problem: exams, students, slots, conflicts.

    Core fields are given at construction; derived lookup structures
    (adjacency lists, flat edge arrays) are built once in ``__post_init__``
    and must not be mutated afterwards.
    """

    name: str
    num_exams: int
    num_students: int
    num_timeslots: int
    enrollments: np.ndarray                 # (n,) int64, derived from students
    student_exams: list[tuple[int, ...]]    # sorted exam indices per student
    conflicts: ConflictMatrix               # (n, n) int32
    slot_capacity: int | None = None        # None = uncapacitated

    # Derived, filled by __post_init__.
    conflict_sets: list[set[int]] = field(default=None, repr=False, compare=False)
    nbr_lists: list[list[int]] = field(default=None, repr=False, compare=False)
    nbr_weights: list[list[int]] = field(default=None, repr=False, compare=False)
    edge_src: np.ndarray = field(default=None, repr=False, compare=False)
    edge_dst: np.ndarray = field(default=None, repr=False, compare=False)
    edge_w: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        n = self.num_exams
        C = self.conflicts
        src, dst = np.nonzero(C)
        off = src != dst
        src, dst = src[off], dst[off]
        self.edge_src = src.astype(np.int32)
        self.edge_dst = dst.astype(np.int32)
        self.edge_w = C[src, dst].astype(np.int64)
        self.nbr_lists = [[] for _ in range(n)]
        self.nbr_weights = [[] for _ in range(n)]
        for i, j, w in zip(self.edge_src.tolist(), self.edge_dst.tolist(),
                           self.edge_w.tolist()):
            self.nbr_lists[i].append(j)
            self.nbr_weights[i].append(w)
        self.conflict_sets = [set(nbrs) for nbrs in self.nbr_lists]


@dataclass(frozen=True)
class GeneratorParams:
    """Parameters for the random instance generator."""

    num_exams: int
    num_students: int
    exams_per_student: tuple[int, int]      # inclusive range
    num_timeslots: int
    seed: int = 0

    def validate(self):
        lo, hi = self.exams_per_student
        if self.num_exams < 1 or self.num_students < 1 or self.num_timeslots < 1:
            raise ValueError("num_exams, num_students and num_timeslots must be >= 1")
        if lo < 1 or hi < 1:
            raise ValueError("exams_per_student bounds must be >= 1")
        if lo > hi:
            raise ValueError(f"infeasible exams_per_student range {lo}..{hi}")
        if hi > self.num_exams:
            raise ValueError("exams_per_student max exceeds num_exams")


@dataclass(frozen=True)
class InstanceStats:
    name: str
    num_exams: int
    num_students: int
    num_timeslots: int
    total_registrations: int
    conflict_density: float


def build_conflict_matrix(student_exams: list[tuple[int, ...]], n: int) -> ConflictMatrix:
    """Count pairwise co-enrollments over a student population.

    Entry [i, j] (i != j) is the number of students registered for both
    exams; the diagonal holds per-exam enrollments.  Empty input yields the
    zero matrix.
    """
    C = np.zeros((n, n), dtype=np.int32)
    rows = []
    cols = []
    for exams in student_exams:
        for idx, i in enumerate(exams):
            if not 0 <= i < n:
                raise ValueError(f"exam index {i} out of range 0..{n - 1}")
            rows.append(i)
            cols.append(i)
            for j in exams[idx + 1:]:
                rows.append(i)
                cols.append(j)
                rows.append(j)
                cols.append(i)
    if rows:
        np.add.at(C, (np.asarray(rows), np.asarray(cols)), 1)
    return C


def make_instance(name: str, student_exams: list[tuple[int, ...]], num_exams: int,
                  num_timeslots: int, slot_capacity: int | None = None) -> ProblemInstance:
    """Build a full instance (conflicts included) from student registrations."""
    if num_exams < 1:
        raise ValueError("instance needs at least one exam")
    if len(student_exams) < 1:
        raise ValueError("instance needs at least one student")
    if num_timeslots < 1:
        raise ValueError("instance needs at least one timeslot")
    students = [tuple(sorted(s)) for s in student_exams]
    for s in students:
        if len(set(s)) != len(s):
            raise ValueError("a student lists the same exam twice")
    conflicts = build_conflict_matrix(students, num_exams)
    enrollments = np.diagonal(conflicts).astype(np.int64).copy()
    return ProblemInstance(
        name=name,
        num_exams=num_exams,
        num_students=len(students),
        num_timeslots=num_timeslots,
        enrollments=enrollments,
        student_exams=students,
        conflicts=conflicts,
        slot_capacity=slot_capacity,
    )


_INT_RE = re.compile(r"^\d+$")


def _parse_int(token: str, where: str) -> int:
    if not _INT_RE.match(token):
        raise TorontoFormatError(f"{where}: non-integer token {token!r}")
    return int(token)


def parse_toronto(crs_text: str, stu_text: str, num_timeslots: int, *,
                  name: str = "instance",
                  slot_capacity: int | None = None) -> ProblemInstance:
    """Parse the two-file exam-enrollment format into an instance.

    ``crs_text`` holds one exam per line ("NNNN enrollment", ids contiguous
    from 0001); ``stu_text`` holds one student per line listing exam ids.
    Student lines are authoritative for enrollments: a mismatch with the
    ``.crs`` column is logged as a warning, not an error.  Empty student
    lines are skipped with a warning and do not count toward the student
    total.
    """
    exam_ids = []
    crs_enroll = []
    for lineno, raw in enumerate(crs_text.splitlines(), 1):
        parts = raw.split()
        if not parts:
            continue
        if len(parts) != 2:
            raise TorontoFormatError(
                f"{name}.crs line {lineno}: expected 'exam enrollment', got {raw!r}")
        exam_ids.append(_parse_int(parts[0], f"{name}.crs line {lineno}"))
        crs_enroll.append(_parse_int(parts[1], f"{name}.crs line {lineno}"))
    n = len(exam_ids)
    if n == 0:
        raise TorontoFormatError(f"{name}.crs: no exams")
    if exam_ids != list(range(1, n + 1)):
        raise TorontoFormatError(f"{name}.crs: exam ids must be contiguous 1..{n}")

    students = []
    for lineno, raw in enumerate(stu_text.splitlines(), 1):
        tokens = raw.split()
        if not tokens:
            logger.warning("%s.stu line %d: empty student line skipped", name, lineno)
            continue
        exams = []
        for tok in tokens:
            e = _parse_int(tok, f"{name}.stu line {lineno}")
            if not 1 <= e <= n:
                raise TorontoFormatError(
                    f"{name}.stu line {lineno}: exam id {e} out of range 1..{n}")
            exams.append(e - 1)
        unique = sorted(set(exams))
        if len(unique) != len(exams):
            logger.warning("%s.stu line %d: duplicate exam ids collapsed", name, lineno)
        students.append(tuple(unique))

    inst = make_instance(name, students, n, num_timeslots, slot_capacity)
    mismatches = int(np.count_nonzero(inst.enrollments != np.asarray(crs_enroll)))
    if mismatches:
        logger.warning(
            "%s: %d exam(s) whose .crs enrollment differs from the student file; "
            "student-derived counts are used", name, mismatches)
    return inst


def write_toronto(inst: ProblemInstance) -> tuple[str, str]:
    """Serialize an instance back to (.crs text, .stu text)."""
    crs_lines = [f"{i + 1:04d} {int(inst.enrollments[i])}" for i in range(inst.num_exams)]
    stu_lines = [" ".join(f"{e + 1:04d}" for e in exams) for exams in inst.student_exams]
    return "\n".join(crs_lines) + "\n", "\n".join(stu_lines) + "\n"


def generate_instance(params: GeneratorParams) -> ProblemInstance:
    """Draw a random instance: each student takes a uniform number of
    distinct uniform-random exams.  Deterministic for a fixed seed."""
    params.validate()
    rng = random.Random(params.seed)
    lo, hi = params.exams_per_student
    n = params.num_exams
    students = []
    for _ in range(params.num_students):
        count = rng.randint(lo, hi)
        students.append(tuple(sorted(rng.sample(range(n), count))))
    name = f"rnd-e{n}-s{params.num_students}-t{params.num_timeslots}-x{params.seed}"
    return make_instance(name, students, n, params.num_timeslots)


def instance_stats(inst: ProblemInstance) -> InstanceStats:
    """Summary counts plus conflict density (fraction of exam pairs that
    share at least one student; 0 for single-exam instances)."""
    n = inst.num_exams
    if n > 1:
        nonzero_pairs = int(np.count_nonzero(np.triu(inst.conflicts, k=1)))
        density = nonzero_pairs / (n * (n - 1) / 2)
    else:
        density = 0.0
    return InstanceStats(
        name=inst.name,
        num_exams=n,
        num_students=inst.num_students,
        num_timeslots=inst.num_timeslots,
        total_registrations=int(inst.enrollments.sum()),
        conflict_density=density,
    )


def validate_instance(inst: ProblemInstance) -> None:
    """Raise AssertionError if any structural invariant is violated."""
    n, m = inst.num_exams, inst.num_students
    C = inst.conflicts
    assert n >= 1 and m >= 1 and inst.num_timeslots >= 1
    assert C.shape == (n, n)
    assert (C == C.T).all(), "conflict matrix must be symmetric"
    seen_counts = np.zeros(n, dtype=np.int64)
    for exams in inst.student_exams:
        assert len(set(exams)) == len(exams), "duplicate exam within a student"
        for e in exams:
            assert 0 <= e < n
            seen_counts[e] += 1
    assert (seen_counts == inst.enrollments).all(), "enrollments disagree with students"
    assert (np.diagonal(C) == inst.enrollments).all(), "diagonal must hold enrollments"
    diag = np.diagonal(C)
    limit = np.minimum.outer(diag, diag)
    off = ~np.eye(n, dtype=bool)
    assert (C[off] <= limit[off]).all(), "c_ij must not exceed min(c_ii, c_jj)"
    assert len(inst.student_exams) == m


@dataclass(frozen=True)
class ManifestEntry:
    name: str
    crs_path: str
    stu_path: str
    num_timeslots: int
    slot_capacity: int | None = None


def parse_manifest(text: str) -> list[ManifestEntry]:
    """Parse a batch manifest: one instance per line,
    ``name crs_path stu_path num_timeslots [slot_capacity]``.
    Blank lines and ``#`` comments are ignored.
    """
    entries = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) not in (4, 5):
            raise TorontoFormatError(
                f"manifest line {lineno}: expected "
                f"'name crs stu timeslots [capacity]', got {raw!r}")
        cap = _parse_int(parts[4], f"manifest line {lineno}") if len(parts) == 5 else None
        entries.append(ManifestEntry(
            name=parts[0],
            crs_path=parts[1],
            stu_path=parts[2],
            num_timeslots=_parse_int(parts[3], f"manifest line {lineno}"),
            slot_capacity=cap,
        ))
    return entries
