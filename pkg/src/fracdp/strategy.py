"""Feedback control laws: strategies sampled on time partitions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .dynamics import ControlSignal, Motion, Position, Problem, solve_motion
from .errors import DomainError, GridMismatchError
from .hjb import CiFunctional, ci_derivative_estimate, default_horizon, hamiltonian
from .value import cost_of_motion, equal_switch_nodes

__all__ = [
    "Partition",
    "Strategy",
    "Rollout",
    "ConvergenceRow",
    "rollout",
    "extremal_strategy",
    "constant_strategy",
    "convergence_study",
]


@dataclass(frozen=True)
class Partition:
    """Sampling nodes ``t = tau_1 < ... < tau_k`` plus the closing node ``N``."""

    grid: object
    nodes: tuple[int, ...]

    def __post_init__(self):
        nodes = tuple(int(j) for j in self.nodes)
        if len(nodes) < 2:
            raise DomainError("a partition needs at least one interval")
        if any(b <= a for a, b in zip(nodes, nodes[1:])):
            raise DomainError(f"partition nodes must increase strictly: {nodes}")
        if nodes[-1] != self.grid.N:
            raise DomainError(f"partition must end at N={self.grid.N}, ends at {nodes[-1]}")
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def uniform(cls, grid, start: int, pieces: int) -> "Partition":
        return cls(grid, tuple(equal_switch_nodes(start, grid.N, pieces)) + (grid.N,))

    @property
    def start(self) -> int:
        return self.nodes[0]

    @property
    def intervals(self) -> int:
        return len(self.nodes) - 1

    @property
    def diam(self) -> float:
        return max(b - a for a, b in zip(self.nodes, self.nodes[1:])) * self.grid.h

    @property
    def sampling_nodes(self) -> tuple[int, ...]:
        return self.nodes[:-1]


@dataclass(frozen=True)
class Strategy:
    """Deterministic feedback ``U(t, w) -> control point``."""

    fn: Callable[[Position], object] = field(repr=False)
    name: str = ""

    def __call__(self, pos: Position) -> np.ndarray:
        return np.atleast_1d(np.asarray(self.fn(pos), dtype=float))


class Rollout(NamedTuple):
    control: ControlSignal
    motion: Motion
    cost: float


class ConvergenceRow(NamedTuple):
    intervals: int
    diam: float
    cost: float
    gap: float | None


def constant_strategy(u, name: str = "constant") -> Strategy:
    u = np.atleast_1d(np.asarray(u, dtype=float))
    return Strategy(lambda pos: u, name=name)


def rollout(problem: Problem, start: Position, strategy: Strategy, partition: Partition) -> Rollout:
    """Run the control law ``{strategy, partition}`` from ``start`` to ``T``.

    At each sampling node the realized history is measured, the strategy is
    evaluated and its value held until the next node.  The control value at
    ``T`` itself (first control in the list) never enters a cell.
    """
    grid = problem.grid
    if partition.grid != grid or start.grid != grid:
        raise GridMismatchError("partition, position and problem must share a grid")
    if partition.start != start.t_index:
        raise DomainError(f"partition starts at {partition.start}, position at {start.t_index}")
    pos = start
    pieces = []
    motion = None
    for a, b in zip(partition.nodes, partition.nodes[1:]):
        u = strategy(pos)
        problem.control_index(u)
        seg = ControlSignal.constant(grid, a, b, u)
        motion = solve_motion(problem, pos, seg, b, check_controls=False)
        pieces.append(seg)
        pos = motion.position
    control = pieces[0]
    for seg in pieces[1:]:
        control = control.concat(seg)
    full = Motion(grid, start.t_index, motion.w, motion.psi, control, np.array([]), 0.0)
    return Rollout(control, full, cost_of_motion(problem, full))


def extremal_strategy(
    problem: Problem,
    phi: CiFunctional,
    m: int | None = None,
    probe_scale: float = 1.0,
) -> Strategy:
    """Extremal shift along the ci-gradient of ``phi``.

    Picks ``argmin_u <grad phi(t, w), f(t, w(t), u)> + chi(t, w(t), u)`` with
    first-found ties.  Without analytic derivatives the gradient is estimated
    with horizon ``m``, shortened near ``T``; one cell before ``T`` there is no
    room to probe and the first control is used.
    """

    def choose(pos: Position):
        if phi.has_analytic:
            _, grad = phi.derivatives(pos)
        else:
            mm = default_horizon(problem.grid.N) if m is None else m
            mm = min(mm, (problem.grid.N - pos.t_index) // 2)
            if mm < 1:
                return problem.controls[0]
            grad = ci_derivative_estimate(phi, pos, mm, probe_scale).grad_alpha
        _, u = hamiltonian(problem, pos.t, pos.state, grad)
        return u

    return Strategy(choose, name=f"extremal[{phi.name}]")


def convergence_study(
    problem: Problem,
    start: Position,
    phi: CiFunctional,
    partition_sizes: Sequence[int],
    reference: float | None = None,
    strategy: Strategy | None = None,
) -> list[ConvergenceRow]:
    """Rollout cost of the extremal strategy for each number of intervals.

    ``gap`` is ``cost - reference`` when a reference value is supplied.
    """
    strat = strategy or extremal_strategy(problem, phi)
    rows = []
    for k in partition_sizes:
        part = Partition.uniform(problem.grid, start.t_index, int(k))
        res = rollout(problem, start, strat, part)
        gap = None if reference is None else res.cost - reference
        rows.append(ConvergenceRow(int(k), part.diam, res.cost, gap))
    return rows
