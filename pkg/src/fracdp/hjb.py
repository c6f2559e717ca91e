"""Coinvariant derivatives of order alpha, the Hamiltonian and HJB residuals.

The ci-derivatives of a functional ``phi(t, w)`` are the coefficients of its
first-order expansion along admissible extensions of the history,

    phi(tau, x_tau) - phi(t, w) = dt (tau - t) + <grad, int_t^tau psi> + o(tau - t).

Probing with extensions of constant Caputo derivative ``l`` isolates
``dt + <grad, l>``; that is what :func:`ci_derivative_estimate` does.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import kernels
from .dynamics import Motion, Position, Problem, extend_position, restrict
from .errors import DomainError, GridMismatchError
from .fraccalc import SampledSignal

__all__ = [
    "CiFunctional",
    "CiDerivativeEstimate",
    "hamiltonian",
    "ci_derivative_estimate",
    "default_horizon",
    "hjb_residual",
    "dist",
    "modulus_of_continuity",
    "total_derivative_check",
]


@dataclass(frozen=True)
class CiFunctional:
    """A functional on positions, optionally with analytic ci-derivatives.

    ``dt_alpha(pos) -> float`` and ``grad_alpha(pos) -> R^n`` are used
    whenever both are supplied; otherwise derivatives are estimated.
    """

    value: Callable[[Position], float]
    dt_alpha: Callable[[Position], float] | None = None
    grad_alpha: Callable[[Position], np.ndarray] | None = None
    ci_smooth: bool = False
    name: str = ""

    def __call__(self, pos: Position) -> float:
        return float(self.value(pos))

    @property
    def has_analytic(self) -> bool:
        return self.dt_alpha is not None and self.grad_alpha is not None

    def derivatives(self, pos: Position) -> tuple[float, np.ndarray]:
        if not self.has_analytic:
            raise DomainError(f"functional {self.name or self.value!r} has no analytic derivatives")
        return float(self.dt_alpha(pos)), np.atleast_1d(np.asarray(self.grad_alpha(pos), dtype=float))


@dataclass(frozen=True)
class CiDerivativeEstimate:
    dt_alpha: float
    grad_alpha: np.ndarray
    horizons: tuple[int, int]
    rates_short: dict = field(repr=False)
    rates_long: dict = field(repr=False)
    # |extrapolated - short-horizon| per quantity: the error proxy
    discrepancy: float = 0.0


def default_horizon(N: int) -> int:
    return max(2, N // 100)


def hamiltonian(problem: Problem, tau: float, x, s) -> tuple[float, np.ndarray]:
    """``min_u <s, f(tau, x, u)> + chi(tau, x, u)`` over the control list.

    Ties keep the first control in list order.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    s = np.atleast_1d(np.asarray(s, dtype=float))
    best = math.inf
    arg = problem.controls[0]
    for u in problem.controls:
        val = float(s @ problem.rhs(tau, x, u)) + problem.running_cost(tau, x, u)
        if val < best:
            best, arg = val, u
    return best, arg.copy()


def ci_derivative_estimate(
    phi: Callable[[Position], float],
    pos: Position,
    m: int | None = None,
    probe_scale: float = 1.0,
) -> CiDerivativeEstimate:
    """Estimate ``(dt_alpha, grad_alpha)`` of ``phi`` at ``pos`` by probing.

    For each ``l`` in ``{0, +-probe_scale e_i}`` the history is extended with
    constant Caputo derivative ``l`` over ``2m`` cells and the difference
    quotients at ``delta = m h`` and ``2 m h`` are combined by Richardson
    extrapolation (first-order error model).  The gradient uses central
    differences in ``l``.
    """
    grid = pos.grid
    m = default_horizon(grid.N) if m is None else int(m)
    if m < 1:
        raise DomainError(f"horizon must be >= 1 node, got {m}")
    if not probe_scale > 0:
        raise DomainError(f"probe_scale must be positive, got {probe_scale}")
    j = pos.t_index
    if j + 2 * m > grid.N:
        raise DomainError(f"horizon 2m={2 * m} exceeds grid from node {j} (N={grid.N})")

    base = float(phi(pos))
    if not math.isfinite(base):
        raise DomainError("functional returned a non-finite value")
    d1 = grid.tau(j + m) - grid.tau(j)
    d2 = grid.tau(j + 2 * m) - grid.tau(j)

    def rates(l):
        ext = extend_position(pos, np.tile(l, (2 * m, 1)))
        v1 = float(phi(Position(grid, ext.w[: j + m + 1], SampledSignal(grid, ext.psi.values[: j + m]))))
        v2 = float(phi(ext))
        if not (math.isfinite(v1) and math.isfinite(v2)):
            raise DomainError("functional returned a non-finite value on a probe")
        return (v1 - base) / d1, (v2 - base) / d2

    n = pos.n
    probes = {"0": np.zeros(n)}
    for i in range(n):
        e = np.zeros(n)
        e[i] = probe_scale
        probes[f"+{i}"] = e
        probes[f"-{i}"] = -e
    short, long_ = {}, {}
    for key, l in probes.items():
        short[key], long_[key] = rates(l)

    rich = {k: 2.0 * short[k] - long_[k] for k in probes}
    dt = rich["0"]
    grad = np.array([(rich[f"+{i}"] - rich[f"-{i}"]) / (2 * probe_scale) for i in range(n)])
    grad_short = np.array([(short[f"+{i}"] - short[f"-{i}"]) / (2 * probe_scale) for i in range(n)])
    disc = max(abs(dt - short["0"]), float(np.abs(grad - grad_short).max()) if n else 0.0)
    return CiDerivativeEstimate(dt, grad, (m, 2 * m), short, long_, disc)


def hjb_residual(
    problem: Problem,
    phi: CiFunctional,
    pos: Position,
    m: int | None = None,
    probe_scale: float = 1.0,
    numeric: bool | None = None,
) -> float:
    """``dt_alpha phi + H(t, w(t), grad_alpha phi)`` at a non-terminal position.

    Analytic derivatives are used when ``phi`` has them, unless ``numeric``
    forces the estimator.
    """
    if pos.is_terminal:
        raise DomainError("HJB residual is defined only for t < T")
    use_numeric = (not phi.has_analytic) if numeric is None else numeric
    if use_numeric:
        est = ci_derivative_estimate(phi, pos, m, probe_scale)
        dt, grad = est.dt_alpha, est.grad_alpha
    else:
        dt, grad = phi.derivatives(pos)
    H, _ = hamiltonian(problem, pos.t, pos.state, grad)
    return dt + H


def _graph(pos: Position) -> np.ndarray:
    return np.ascontiguousarray(np.column_stack([pos.times(), pos.w]))


def dist(a: Position, b: Position) -> float:
    """Hausdorff distance between the node-sampled graphs of two histories."""
    if a.grid != b.grid:
        raise GridMismatchError("positions live on different grids")
    return float(kernels.hausdorff(_graph(a), _graph(b)))


def modulus_of_continuity(pos: Position, delta: float) -> float:
    """Grid modulus ``max |w(s) - w(r)|`` over nodes with ``|s - r| <= delta``."""
    w = pos.w
    k = int(math.floor(delta / pos.grid.h + 1e-9))
    best = 0.0
    for lag in range(1, min(k, pos.t_index) + 1):
        best = max(best, float(np.linalg.norm(w[lag:] - w[:-lag], axis=1).max()))
    return best


def total_derivative_check(
    problem: Problem,
    phi: CiFunctional,
    motion: Motion,
    tail_fraction: float = 0.1,
) -> float:
    """Max gap between the difference quotient of ``phi`` along a motion and
    ``dt_alpha phi + <grad_alpha phi, psi>``.

    Cells starting within ``tail_fraction * T`` of the horizon are skipped:
    the derivative fields of typical functionals blow up at ``t = T`` and the
    left-point comparison is not meaningful there.
    """
    grid = motion.grid
    h = grid.h
    cutoff = grid.T * (1.0 - tail_fraction)
    worst = 0.0
    omega_prev = None
    for j in range(motion.start_index, motion.end_index):
        if grid.tau(j + 1) > cutoff + 1e-12:
            break
        pj = restrict(motion, j)
        pk = restrict(motion, j + 1)
        om_j = phi(pj) if omega_prev is None else omega_prev
        om_k = phi(pk)
        omega_prev = om_k
        dt, grad = phi.derivatives(pj)
        pred = dt + float(grad @ motion.psi.values[j])
        worst = max(worst, abs((om_k - om_j) / h - pred))
    return worst
