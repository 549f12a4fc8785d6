"""Reinforcement-learning heuristic selection.

Each low-level heuristic carries a utility score.  A heuristic that
produced a strict cost improvement gains one point, any other outcome loses
one, and scores are clipped to fixed bounds.  Selection is greedy: the
heuristic with the maximum utility wins, ties broken uniformly at random.

Updates are pure (a new table is returned) so a run can snapshot the table
into its trace at every iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

DEFAULT_LOWER_BOUND = 0.0
DEFAULT_UPPER_BOUND = 40.0
INITIAL_FRACTION = 0.75     # initial score = 0.75 * upper bound


@dataclass(frozen=True)
class UtilityTable:
    utilities: tuple[float, ...]
    lower_bound: float = DEFAULT_LOWER_BOUND
    upper_bound: float = DEFAULT_UPPER_BOUND


def initial_utilities(num_heuristics: int = 4,
                      lower_bound: float = DEFAULT_LOWER_BOUND,
                      upper_bound: float = DEFAULT_UPPER_BOUND,
                      initial: float | None = None) -> UtilityTable:
    if num_heuristics < 1:
        raise ValueError("need at least one heuristic")
    if initial is None:
        initial = INITIAL_FRACTION * upper_bound
    return UtilityTable((initial,) * num_heuristics, lower_bound, upper_bound)


def select_heuristic(ut: UtilityTable, rng) -> int:
    """Index of a maximum-utility heuristic; ties drawn uniformly.

    The rng is consumed only when there is an actual tie, so a unique
    maximum is selected deterministically.
    """
    us = ut.utilities
    best = max(us)
    winners = [i for i, u in enumerate(us) if u == best]
    if len(winners) == 1:
        return winners[0]
    return winners[rng.randrange(len(winners))]


def update_utility(ut: UtilityTable, heuristic: int, improved: bool) -> UtilityTable:
    """Score +1 on improvement, -1 otherwise, clipped into the bounds."""
    us = list(ut.utilities)
    value = us[heuristic] + (1.0 if improved else -1.0)
    us[heuristic] = min(ut.upper_bound, max(ut.lower_bound, value))
    return replace(ut, utilities=tuple(us))
