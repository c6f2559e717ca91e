"""Cost evaluation, brute-force values and dynamic-programming residuals.

The infimum over measurable controls is replaced by an exact minimum over
piecewise-constant controls that may switch only at declared nodes.  The
enumeration walks the control tree depth first in control-list order
(lexicographic), so motions are shared between controls with a common
prefix and ties resolve to the first tuple found.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .dynamics import ControlSignal, Motion, Position, Problem, solve_motion
from .errors import BudgetExceededError, DomainError
from .hjb import CiFunctional

__all__ = [
    "ValueEstimate",
    "DPPReport",
    "ENUMERATION_BUDGET",
    "running_cost",
    "cost_J",
    "cost_of_motion",
    "equal_switch_nodes",
    "value_bruteforce",
    "dpp_check",
    "dpp_residual",
    "discrete_value_functional",
]

ENUMERATION_BUDGET = 10**7


@dataclass(frozen=True)
class ValueEstimate:
    value: float
    control: ControlSignal = field(repr=False)
    count: int
    partition: tuple[int, ...]
    indices: tuple[int, ...] = ()


@dataclass(frozen=True)
class DPPReport:
    lhs: float
    rhs: float
    residual: float
    count: int
    indices: tuple[int, ...] = ()


def running_cost(problem: Problem, motion: Motion, start: int, end: int) -> float:
    """Left-rectangle integral of ``chi`` over cells ``start..end-1``."""
    if not problem.has_running_cost or end <= start:
        return 0.0
    h = problem.grid.h
    nodes = problem.grid.nodes
    total = 0.0
    for j in range(start, end):
        total += problem.running_cost(float(nodes[j]), motion.w[j], motion.control.at(j)) * h
    return total


def cost_of_motion(problem: Problem, motion: Motion) -> float:
    if motion.end_index != problem.grid.N:
        raise DomainError("cost needs a motion reaching T")
    return problem.terminal_cost(motion.terminal_state) + running_cost(
        problem, motion, motion.start_index, motion.end_index
    )


def cost_J(problem: Problem, start: Position, control: ControlSignal) -> float:
    """Bolza cost of ``control`` (covering ``[t, T)``) from ``start``."""
    motion = solve_motion(problem, start, control, problem.grid.N)
    return cost_of_motion(problem, motion)


def equal_switch_nodes(start: int, end: int, pieces: int) -> list[int]:
    """``pieces`` switching nodes splitting ``[start, end)`` as evenly as the grid allows."""
    if pieces < 1 or end - start < pieces:
        raise DomainError(f"cannot split [{start}, {end}) into {pieces} nonempty pieces")
    return [start + (k * (end - start)) // pieces for k in range(pieces)]


def _segments(start: int, end: int, switch_nodes: Sequence[int]) -> list[int]:
    segs = sorted({start, *(int(s) for s in switch_nodes if start <= int(s) < end)})
    return segs if end > start else []


def _enumerate(
    problem: Problem,
    start: Position,
    end: int,
    switch_nodes: Sequence[int],
    leaf: Callable[[Position, float], float],
    budget: int,
    report: list | None = None,
):
    """Minimize ``leaf(position at end, running cost)`` over the control tree."""
    segs = _segments(start.t_index, end, switch_nodes)
    m = len(problem.controls)
    count = m ** len(segs)
    if count > budget:
        raise BudgetExceededError(f"{m}^{len(segs)} = {count} controls exceed budget {budget}")
    bounds = segs + [end]
    grid = problem.grid
    best = [math.inf, ()]

    def dfs(level: int, pos: Position, acc: float, chosen: tuple):
        if level == len(segs):
            total = leaf(pos, acc)
            if report is not None:
                report.append((chosen, total))
            if total < best[0]:
                best[0], best[1] = total, chosen
            return
        a, b = bounds[level], bounds[level + 1]
        for idx in range(m):
            ctrl = ControlSignal.constant(grid, a, b, problem.controls[idx])
            mot = solve_motion(problem, pos, ctrl, b, check_controls=False)
            dfs(level + 1, mot.position, acc + running_cost(problem, mot, a, b), chosen + (idx,))

    dfs(0, start, 0.0, ())
    return best[0], best[1], count, tuple(segs)


def value_bruteforce(
    problem: Problem,
    start: Position,
    switch_nodes: Sequence[int],
    budget: int = ENUMERATION_BUDGET,
    report: list | None = None,
) -> ValueEstimate:
    """Exact minimum of the cost over controls switching only at ``switch_nodes``.

    ``start.t_index`` is always a switching node.  Pass a list as ``report``
    to receive ``(control index tuple, cost)`` for every enumerated control.
    """
    N = problem.grid.N
    value, idx, count, segs = _enumerate(
        problem, start, N, switch_nodes,
        lambda pos, acc: acc + problem.terminal_cost(pos.state),
        budget, report,
    )
    if segs:
        control = ControlSignal.piecewise(problem.grid, list(segs), N, problem.controls[list(idx)])
    else:
        control = ControlSignal(problem.grid, N, N, np.zeros((0, problem.n_u)))
    return ValueEstimate(value, control, count, segs, idx)


def dpp_check(
    problem: Problem,
    start: Position,
    theta_index: int,
    value_fn: Callable[[Position], float],
    switch_nodes: Sequence[int],
    budget: int = ENUMERATION_BUDGET,
) -> DPPReport:
    """Both sides of the dynamic programming identity on ``[t, theta]``."""
    t = start.t_index
    if not (t <= theta_index <= problem.grid.N):
        raise DomainError(f"theta_index {theta_index} outside [{t}, {problem.grid.N}]")
    lhs = float(value_fn(start))
    if theta_index == t:
        return DPPReport(lhs, lhs, 0.0, 0)
    rhs, idx, count, _ = _enumerate(
        problem, start, theta_index, switch_nodes,
        lambda pos, acc: float(value_fn(pos)) + acc,
        budget,
    )
    return DPPReport(lhs, rhs, abs(lhs - rhs), count, idx)


def dpp_residual(
    problem: Problem,
    start: Position,
    theta_index: int,
    value_fn: Callable[[Position], float],
    switch_nodes: Sequence[int],
    budget: int = ENUMERATION_BUDGET,
) -> float:
    return dpp_check(problem, start, theta_index, value_fn, switch_nodes, budget).residual


def discrete_value_functional(
    problem: Problem,
    switch_nodes: Sequence[int],
    budget: int = ENUMERATION_BUDGET,
) -> CiFunctional:
    """The brute-force value as a functional: from ``(t, w)`` it may switch at
    the declared nodes that are ``>= t``."""
    nodes = tuple(sorted(int(s) for s in switch_nodes))

    def value(pos: Position) -> float:
        return value_bruteforce(problem, pos, [s for s in nodes if s >= pos.t_index], budget).value

    return CiFunctional(value, name="discrete-value")
