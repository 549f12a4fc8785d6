"""Move acceptance: Great Deluge and its extended, flexible and non-linear
variants behind one verdict interface.

All variants start the water level (boundary) at the initial solution cost.
The linear-decay family (gd, egd, fd) lowers the boundary by a fixed amount
per iteration, sized so the level halves over the nominal run.  The
extended variant additionally reheats the boundary after a stagnation
period; the non-linear variant decays multiplicatively by a random-exponent
factor on accepted moves only.

Costs are in the same per-student units as the reported objective.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum


class Variant(str, Enum):
    GD = "gd"
    EGD = "egd"
    FD = "fd"
    NLGD = "nlgd"


# Default parameter values.
DEFAULT_KF = 0.5
DEFAULT_WAIT_FRACTION = 0.25
DEFAULT_REHEAT_LIFT = 0.1
DEFAULT_BETA = 0.0
DEFAULT_BMIN = 100000.0
DEFAULT_BMAX = 300000.0
DEFAULT_DECAY_EXPONENT = 5e-10


@dataclass
class AcceptanceState:
    """Mutable per-run acceptance state, owned by exactly one run."""

    variant: Variant
    boundary: float
    total_iterations: int
    decay_rate: float = 0.0
    kf: float = DEFAULT_KF
    beta: float = DEFAULT_BETA
    bmin: float = DEFAULT_BMIN
    bmax: float = DEFAULT_BMAX
    decay_exponent: float = DEFAULT_DECAY_EXPONENT
    wait: int = 1
    reheat_lift: float = DEFAULT_REHEAT_LIFT
    stagnation_counter: int = 0
    iteration: int = 0


@dataclass(frozen=True, slots=True)
class Verdict:
    accepted: bool
    reheated: bool = False
    boundary_after: float = 0.0
    level_draw: float | None = None   # nlgd only: uniform draw in [bmin, bmax]


def init_acceptance(variant: Variant | str, initial_cost: float, *,
                    total_iterations: int,
                    kf: float = DEFAULT_KF,
                    wait_fraction: float = DEFAULT_WAIT_FRACTION,
                    reheat_lift: float = DEFAULT_REHEAT_LIFT,
                    beta: float = DEFAULT_BETA,
                    bmin: float = DEFAULT_BMIN,
                    bmax: float = DEFAULT_BMAX,
                    decay_exponent: float = DEFAULT_DECAY_EXPONENT) -> AcceptanceState:
    """Boundary starts at the initial cost; linear decay is sized to halve
    it over ``total_iterations``."""
    variant = Variant(variant)
    if total_iterations < 1:
        raise ValueError("iteration budget must be >= 1")
    if initial_cost < 0:
        raise ValueError("initial cost must be non-negative")
    if not 0.0 <= kf <= 1.0:
        raise ValueError("kf must lie in [0, 1]")
    if variant is Variant.EGD and wait_fraction <= 0:
        raise ValueError("wait fraction must be positive")
    wait = max(1, math.ceil(wait_fraction * total_iterations))
    decay = (initial_cost * 0.5) / total_iterations
    return AcceptanceState(
        variant=variant,
        boundary=initial_cost,
        total_iterations=total_iterations,
        decay_rate=decay if variant is not Variant.NLGD else 0.0,
        kf=kf,
        beta=beta,
        bmin=bmin,
        bmax=bmax,
        decay_exponent=decay_exponent,
        wait=wait,
        reheat_lift=reheat_lift,
    )


def gd_accept(st: AcceptanceState, old_cost: float, new_cost: float) -> Verdict:
    """Accept non-worsening moves or anything at or below the water level,
    then lower the level by the linear decay."""
    accepted = new_cost <= old_cost or new_cost <= st.boundary
    st.boundary = max(0.0, st.boundary - st.decay_rate)
    st.iteration += 1
    return Verdict(accepted, False, st.boundary)


def egd_accept(st: AcceptanceState, old_cost: float, new_cost: float,
               best_cost: float) -> Verdict:
    """Great Deluge rule plus reheat: after ``wait`` consecutive iterations
    without a new global best, the boundary is lifted above the incumbent
    cost and the decay is re-sized over the remaining iterations."""
    accepted = new_cost <= old_cost or new_cost <= st.boundary
    if new_cost < best_cost:
        st.stagnation_counter = 0
    else:
        st.stagnation_counter += 1
    st.iteration += 1
    if st.stagnation_counter >= st.wait:
        incumbent = new_cost if accepted else old_cost
        st.boundary = incumbent * (1.0 + st.reheat_lift)
        remaining = max(1, st.total_iterations - st.iteration)
        st.decay_rate = (st.boundary * 0.5) / remaining
        st.stagnation_counter = 0
        return Verdict(accepted, True, st.boundary)
    st.boundary = max(0.0, st.boundary - st.decay_rate)
    return Verdict(accepted, False, st.boundary)


def fd_accept(st: AcceptanceState, current_cost: float, new_cost: float) -> Verdict:
    """Accept at or below a threshold interpolated between the current cost
    and the water level by the flexibility coefficient.

    Written as (1-kf)*P + kf*B, which is algebraically P + kf*(B-P) but
    exact at kf=0 (threshold P, greedy hill-climbing) and kf=1 (threshold
    B, plain Great Deluge).  When the current cost sits at or above the
    level, the threshold is the current cost itself.
    """
    P = current_cost
    B = st.boundary
    threshold = P if P >= B else (1.0 - st.kf) * P + st.kf * B
    accepted = new_cost <= threshold
    st.boundary = max(0.0, st.boundary - st.decay_rate)
    st.iteration += 1
    return Verdict(accepted, False, st.boundary)


def nlgd_accept(st: AcceptanceState, old_cost: float, new_cost: float,
                rng) -> Verdict:
    """Great Deluge rule with multiplicative decay applied only on
    acceptance: B <- B * exp(-delta * u) + beta, u uniform in [bmin, bmax]."""
    accepted = new_cost <= old_cost or new_cost <= st.boundary
    draw = None
    if accepted:
        draw = rng.uniform(st.bmin, st.bmax)
        st.boundary = st.boundary * math.exp(-st.decay_exponent * draw) + st.beta
    st.iteration += 1
    return Verdict(accepted, False, st.boundary, draw)
