"""Controlled Caputo systems: problems, positions, controls and motions.

A *position* ``(t, w)`` stores the node samples of a history on ``[0, t]``
together with its piecewise-constant Caputo derivative ``psi``; the two are
tied by ``w(tau_i) = w(0) + (I^alpha psi)(tau_i)``.  Motions extend positions
by solving the Volterra form of the system cell by cell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from . import kernels
from .errors import CorrectorDivergenceError, DomainError, GridMismatchError
from .fraccalc import (
    Grid,
    SampledSignal,
    caputo_reconstruct,
    holder_constant,
    mittag_leffler,
    rl_integral_nodes,
)

__all__ = [
    "Problem",
    "Position",
    "ControlSignal",
    "Motion",
    "MotionBounds",
    "make_initial_position",
    "extend_position",
    "solve_motion",
    "restrict",
    "motion_bounds",
    "CORRECTOR_TOL",
    "CORRECTOR_MAX_ITER",
]

CORRECTOR_TOL = 1e-12
CORRECTOR_MAX_ITER = 50


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Problem:
    """Data of a controlled Caputo system with a Bolza cost.

    ``f(tau, x, u) -> R^n`` is the right-hand side, ``sigma(x)`` the terminal
    cost and ``chi(tau, x, u)`` the running cost (``None`` means zero).  The
    compact control set is represented by the finite list ``controls``.
    ``c_f`` bounds ``|f| <= (1 + |x|) c_f``; ``lambda_f`` is a Lipschitz
    constant of ``f`` in ``x`` on the ball of interest.
    """

    grid: Grid
    n: int
    controls: np.ndarray = field(repr=False)
    f: Callable = field(repr=False)
    sigma: Callable = field(repr=False)
    chi: Callable | None = field(default=None, repr=False)
    c_f: float = 0.0
    lambda_f: float = 0.0
    name: str = "custom"

    def __post_init__(self):
        U = np.array(self.controls, dtype=float)
        if U.ndim == 1:
            U = U[:, None]
        if U.ndim != 2 or U.shape[0] == 0:
            raise DomainError("control set must be a nonempty list of points")
        object.__setattr__(self, "controls", _frozen(U))
        if self.c_f < 0 or self.lambda_f < 0:
            raise DomainError("c_f and lambda_f must be nonnegative")

    @property
    def n_u(self) -> int:
        return self.controls.shape[1]

    @property
    def has_running_cost(self) -> bool:
        return self.chi is not None

    def running_cost(self, tau: float, x: np.ndarray, u: np.ndarray) -> float:
        if self.chi is None:
            return 0.0
        return float(self.chi(tau, x, u))

    def rhs(self, tau: float, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        return np.asarray(self.f(tau, x, u), dtype=float).reshape(self.n)

    def terminal_cost(self, x: np.ndarray) -> float:
        return float(self.sigma(x))

    def control_index(self, u) -> int:
        u = np.asarray(u, dtype=float).reshape(self.n_u)
        hits = np.flatnonzero(np.all(self.controls == u, axis=1))
        if hits.size == 0:
            raise DomainError(f"control {u} is not a member of the control set")
        return int(hits[0])

    def spot_check(self, R: float, samples: int = 200, seed: int = 0) -> list[str]:
        """Sample the growth and Lipschitz assumptions; return violation messages."""
        rng = np.random.default_rng(seed)
        out = []
        for _ in range(samples):
            tau = float(rng.uniform(0.0, self.grid.T))
            u = self.controls[rng.integers(len(self.controls))]
            x = rng.normal(size=self.n)
            x *= rng.uniform(0, R) / max(np.linalg.norm(x), 1e-300)
            y = rng.normal(size=self.n)
            y *= rng.uniform(0, R) / max(np.linalg.norm(y), 1e-300)
            fx = self.rhs(tau, x, u)
            fy = self.rhs(tau, y, u)
            if np.linalg.norm(fx) > (1 + np.linalg.norm(x)) * self.c_f * (1 + 1e-12) + 1e-12:
                out.append(f"growth violated at tau={tau:.6g}, x={x}, u={u}")
            if np.linalg.norm(fx - fy) > self.lambda_f * np.linalg.norm(x - y) * (1 + 1e-12) + 1e-12:
                out.append(f"Lipschitz violated at tau={tau:.6g}, x={x}, y={y}, u={u}")
        return out


@dataclass(frozen=True)
class Position:
    """A time node together with the history of a motion up to it."""

    grid: Grid
    w: np.ndarray = field(repr=False)
    psi: SampledSignal = field(repr=False)

    def __post_init__(self):
        w = np.array(self.w, dtype=float)
        if w.ndim == 1:
            w = w[:, None]
        if w.shape[0] != self.psi.cells + 1:
            raise DomainError(f"{w.shape[0]} node samples but {self.psi.cells} derivative cells")
        if self.psi.grid != self.grid:
            raise GridMismatchError("history derivative lives on another grid")
        if w.shape[0] > self.grid.N + 1:
            raise DomainError("history longer than the grid")
        object.__setattr__(self, "w", _frozen(w))

    @classmethod
    def from_psi(cls, grid: Grid, w0, psi) -> "Position":
        """History generated by a Caputo derivative (exact at the nodes)."""
        sig = psi if isinstance(psi, SampledSignal) else SampledSignal(grid, np.asarray(psi, float))
        w0 = np.asarray(w0, dtype=float).reshape(-1)
        if sig.cells and sig.n != w0.size:
            raise DomainError("w0 and psi disagree on the state dimension")
        if sig.cells == 0:
            sig = SampledSignal(grid, np.zeros((0, w0.size)))
        w = w0[None, :] + rl_integral_nodes(sig)
        return cls(grid, w, sig)

    @classmethod
    def from_path(cls, grid: Grid, w) -> "Position":
        """History given by node samples; the derivative is reconstructed."""
        w = np.array(w, dtype=float)
        if w.ndim == 1:
            w = w[:, None]
        return cls(grid, w, caputo_reconstruct(grid, w))

    @property
    def t_index(self) -> int:
        return self.w.shape[0] - 1

    @property
    def t(self) -> float:
        return self.grid.tau(self.t_index)

    @property
    def n(self) -> int:
        return self.w.shape[1]

    @property
    def state(self) -> np.ndarray:
        """``w(t)``, the current state."""
        return self.w[-1]

    @property
    def w0(self) -> np.ndarray:
        return self.w[0]

    @property
    def is_terminal(self) -> bool:
        return self.t_index == self.grid.N

    def times(self) -> np.ndarray:
        return self.grid.nodes[: self.t_index + 1]

    def integral_residual(self) -> float:
        """Max node gap between ``w`` and ``w(0) + I^alpha psi``."""
        if self.t_index == 0:
            return 0.0
        return float(np.abs(self.w - self.w0 - rl_integral_nodes(self.psi)).max())


def make_initial_position(grid: Grid, w0) -> Position:
    """Position at ``t = 0`` with the single sample ``w0``."""
    w0 = np.atleast_1d(np.asarray(w0, dtype=float)).reshape(-1)
    return Position(grid, w0[None, :], SampledSignal(grid, np.zeros((0, w0.size))))


def extend_position(pos: Position, psi_cells) -> Position:
    """Append Caputo-derivative cells to a history (an admissible extension)."""
    cells = np.asarray(psi_cells, dtype=float).reshape(-1, pos.n)
    return Position.from_psi(pos.grid, pos.w0, np.vstack([pos.psi.values, cells]))


@dataclass(frozen=True)
class ControlSignal:
    """Piecewise-constant control on cells ``start..end-1``."""

    grid: Grid
    start: int
    end: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if not (0 <= self.start <= self.end <= self.grid.N):
            raise DomainError(f"bad control range [{self.start}, {self.end}) on N={self.grid.N}")
        if v.shape[0] != self.end - self.start:
            raise DomainError(f"{v.shape[0]} control values for {self.end - self.start} cells")
        object.__setattr__(self, "values", _frozen(v))

    @classmethod
    def constant(cls, grid: Grid, start: int, end: int, u) -> "ControlSignal":
        u = np.atleast_1d(np.asarray(u, dtype=float))
        return cls(grid, start, end, np.tile(u, (end - start, 1)))

    @classmethod
    def from_function(cls, grid: Grid, start: int, end: int, fn: Callable) -> "ControlSignal":
        """Sample ``fn(tau)`` at the left node of every cell."""
        vals = [np.atleast_1d(np.asarray(fn(grid.tau(j)), dtype=float)) for j in range(start, end)]
        return cls(grid, start, end, np.array(vals).reshape(end - start, -1))

    @classmethod
    def piecewise(cls, grid: Grid, nodes: Sequence[int], end: int, values) -> "ControlSignal":
        """Constant ``values[k]`` on ``[nodes[k], nodes[k+1])``, last piece up to ``end``."""
        nodes = list(nodes)
        vals = np.asarray(values, dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        if len(nodes) != vals.shape[0]:
            raise DomainError("need one value per switching node")
        bounds = nodes + [end]
        if any(b <= a for a, b in zip(bounds, bounds[1:])):
            raise DomainError(f"switching nodes must increase strictly below end={end}: {nodes}")
        rows = [np.tile(vals[k], (bounds[k + 1] - bounds[k], 1)) for k in range(len(nodes))]
        return cls(grid, nodes[0], end, np.vstack(rows) if rows else np.zeros((0, vals.shape[1])))

    @property
    def cells(self) -> int:
        return self.end - self.start

    def at(self, j: int) -> np.ndarray:
        return self.values[j - self.start]

    def window(self, start: int, end: int) -> "ControlSignal":
        if not (self.start <= start <= end <= self.end):
            raise DomainError(f"window [{start}, {end}) not inside [{self.start}, {self.end})")
        return ControlSignal(self.grid, start, end, self.values[start - self.start : end - self.start])

    def concat(self, other: "ControlSignal") -> "ControlSignal":
        if other.start != self.end:
            raise DomainError("controls are not adjacent")
        return ControlSignal(self.grid, self.start, other.end, np.vstack([self.values, other.values]))


@dataclass(frozen=True)
class Motion:
    """Solution of the system from ``start_index`` to ``end_index``.

    ``w``/``psi`` cover the whole interval ``[0, tau_end]``; the part up to
    ``start_index`` is the initial history, copied unchanged.
    """

    grid: Grid
    start_index: int
    w: np.ndarray = field(repr=False)
    psi: SampledSignal = field(repr=False)
    control: ControlSignal = field(repr=False)
    iterations: np.ndarray = field(repr=False)
    max_update: float = 0.0

    @property
    def end_index(self) -> int:
        return self.w.shape[0] - 1

    @property
    def position(self) -> Position:
        return Position(self.grid, self.w, self.psi)

    @property
    def terminal_state(self) -> np.ndarray:
        return self.w[-1]

    def states(self) -> np.ndarray:
        return self.w

    def integral_residual(self) -> float:
        return self.position.integral_residual()


def restrict(motion: Motion, tau_index: int) -> Position:
    """The history ``(tau, x_tau)`` of a motion as a position."""
    if not (0 <= tau_index <= motion.end_index):
        raise IndexError(f"index {tau_index} outside motion range 0..{motion.end_index}")
    return Position(
        motion.grid,
        motion.w[: tau_index + 1],
        SampledSignal(motion.grid, motion.psi.values[:tau_index]),
    )


def solve_motion(
    problem: Problem,
    start: Position,
    control: ControlSignal,
    theta_index: int,
    *,
    tol: float = CORRECTOR_TOL,
    max_iter: int = CORRECTOR_MAX_ITER,
    check_controls: bool = True,
) -> Motion:
    """Extend ``start`` to node ``theta_index`` under ``control``.

    Each cell ``[tau_k, tau_{k+1})`` carries the constant derivative
    ``psi_k = f(tau_k, x_{k+1}, u_k)``.  An explicit predictor (state at
    ``tau_k``) seeds a fixed-point corrector on the implicit rectangle rule,
    stopped when successive iterates agree to ``tol * max(1, |x|)``.  The
    stored ``psi_k`` is the last evaluation of ``f`` and ``x_{k+1}`` is
    recomputed from it, so the motion satisfies the quadrature identity of
    its history to rounding.
    """
    grid = problem.grid
    if start.grid != grid or control.grid != grid:
        raise GridMismatchError("problem, position and control must share a grid")
    j0 = start.t_index
    if not (j0 <= theta_index <= grid.N):
        raise DomainError(f"theta_index {theta_index} outside [{j0}, {grid.N}]")
    if start.n != problem.n:
        raise DomainError(f"position has dimension {start.n}, problem has {problem.n}")
    if theta_index > j0 and not (control.start == j0 and control.end >= theta_index):
        raise DomainError(
            f"control covers [{control.start}, {control.end}) but [{j0}, {theta_index}) is needed"
        )
    used = control.window(j0, theta_index) if theta_index > j0 else ControlSignal(grid, j0, j0, np.zeros((0, problem.n_u)))
    if check_controls:
        for u in np.unique(used.values, axis=0):
            problem.control_index(u)

    n = problem.n
    a = grid.weights
    nodes = grid.nodes
    diag = a[1]
    w0 = start.w0
    x = np.empty((theta_index + 1, n))
    x[: j0 + 1] = start.w
    psi = np.empty((theta_index, n))
    psi[:j0] = start.psi.values
    iters = np.zeros(theta_index - j0, dtype=np.int64)
    worst = 0.0
    rhs = problem.rhs
    conv = kernels.convolve_at

    for k in range(j0, theta_index):
        tau = float(nodes[k])
        u = used.values[k - j0]
        S = w0 + conv(psi[:k], a, k + 1) if k > 0 else w0.copy()
        p = rhs(tau, x[k], u)
        xn = S + diag * p
        prev = math.inf
        d = 0.0
        it = 0
        for it in range(1, max_iter + 1):
            p = rhs(tau, xn, u)
            xk = S + diag * p
            d = float(np.abs(xk - xn).max())
            xn = xk
            if d <= tol * max(1.0, float(np.abs(xn).max())):
                break
            if it == max_iter and d > prev:
                raise CorrectorDivergenceError(
                    f"corrector diverging at cell {k} (update {d:.3e} after {it} iterations)"
                )
            prev = d
        if not np.all(np.isfinite(xn)):
            raise CorrectorDivergenceError(f"non-finite state at node {k + 1}")
        psi[k] = p
        x[k + 1] = xn
        iters[k - j0] = it
        worst = max(worst, d)

    return Motion(
        grid,
        j0,
        _frozen(x),
        SampledSignal(grid, psi),
        used,
        _frozen(iters),
        worst,
    )


class MotionBounds(NamedTuple):
    M_x: float
    H_x: float
    L_x: float


def motion_bounds(problem: Problem, R: float) -> MotionBounds:
    """A-priori bounds on motions from histories of sup-norm at most ``R``.

    ``M_x`` bounds the state, ``H_x`` is a Hoelder constant (when the history
    derivative is also bounded by ``R``) and ``L_x`` the Lipschitz constant of
    motions with respect to the history.
    """
    if not R > 0:
        raise DomainError(f"R must be positive, got {R}")
    g = problem.grid
    Ta = g.T**g.alpha
    M_x = (1.0 + 3.0 * R) * mittag_leffler(g.alpha, Ta * problem.c_f) - 1.0
    H_x = holder_constant(g.alpha) * max(R, (1.0 + M_x) * problem.c_f)
    L_x = 3.0 * mittag_leffler(g.alpha, Ta * problem.lambda_f)
    return MotionBounds(M_x, H_x, L_x)
