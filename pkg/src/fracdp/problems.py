"""Built-in problems, including the scalar example with a closed-form value.

The example is ``D^alpha x = Gamma(alpha+1) u``, ``|u| <= 1``, cost ``x(T)^2``.
Its value functional is built from the "free terminal prediction"

    val_star(t, w) = w(0) + 1/Gamma(alpha) int_0^t psi(s) (T - s)^(alpha-1) ds,

the terminal state reached from ``(t, w)`` when the control is switched off.
With ``r = (T - t)^alpha`` (the reach of full-authority control) the value is
``(val_star -+ r)^2`` outside the band ``|val_star| <= r`` and zero inside.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from . import kernels
from .dynamics import ControlSignal, Position, Problem
from .errors import DomainError
from .fraccalc import Grid
from .hjb import CiFunctional

__all__ = [
    "example_problem",
    "example_w0",
    "example_switch_time",
    "example_ubar",
    "val_star",
    "phi_example",
    "phi_example_dt",
    "phi_example_grad",
    "u_star_example",
    "classical_value",
    "example_functional",
    "val_star_functional",
    "CATALOG",
    "build_problem",
]


def example_w0(alpha: float) -> float:
    """Initial state ``2^(alpha-1) + 1`` of the worked example."""
    return 2.0 ** (alpha - 1.0) + 1.0


def example_switch_time(alpha: float, T: float = 2.0) -> float:
    """Switch time ``T - (1 - 2^(alpha-1))^(1/alpha)`` of the coast-to-zero control."""
    return T - (1.0 - 2.0 ** (alpha - 1.0)) ** (1.0 / alpha)


def example_ubar(grid: Grid, start: int) -> ControlSignal:
    """Coast-to-zero control: ``-1`` up to the switch time, then ``0``.

    The switch time is rarely a node; the cell containing it carries the
    time-weighted blend ``-(theta - tau_k)/h``, a point of ``[-1, 0]``.  Solving
    with it needs that value in the problem's control list.
    """
    theta = example_switch_time(grid.alpha, grid.T)
    if not grid.tau(start) <= theta <= grid.T:
        raise DomainError(f"switch time {theta} precedes start t = {grid.tau(start)}")
    k = min(int(math.floor(theta / grid.h + 1e-12)), grid.N - 1)
    frac = (theta - grid.tau(k)) / grid.h
    vals = np.zeros(grid.N - start)
    vals[: k - start] = -1.0
    if k >= start:
        vals[k - start] = -frac
    return ControlSignal(grid, start, grid.N, vals)


def _sq(x):
    return float(np.dot(x, x))


def example_problem(alpha: float = 0.5, T: float = 2.0, N: int = 200, controls=(-1.0, 0.0, 1.0)) -> Problem:
    g = math.gamma(alpha + 1.0)
    U = np.asarray(controls, dtype=float).reshape(-1, 1)
    if np.any(np.abs(U) > 1.0):
        raise DomainError("example controls must lie in [-1, 1]")

    def f(tau, x, u):
        return g * u

    return Problem(
        grid=Grid(T, N, alpha),
        n=1,
        controls=U,
        f=f,
        sigma=_sq,
        chi=None,
        c_f=g * float(np.abs(U).max()),
        lambda_f=0.0,
        name="paper-example",
    )


def val_star(pos: Position) -> float:
    """Terminal state of the zero-control continuation of ``pos`` (scalar)."""
    grid = pos.grid
    if pos.t_index == 0:
        return float(pos.w0[0])
    hist = kernels.convolve_at(pos.psi.values, grid.weights, grid.N)
    return float(pos.w0[0] + hist[0])


def _band(pos: Position) -> tuple[float, float]:
    return val_star(pos), (pos.grid.T - pos.t) ** pos.grid.alpha


def phi_example(pos: Position) -> float:
    v, r = _band(pos)
    if v < -r:
        return (v + r) ** 2
    if v > r:
        return (v - r) ** 2
    return 0.0


def _outer_factor(pos: Position) -> tuple[float, float]:
    """``(val_star -+ r)`` on the outer branches (0 inside the band) and ``T - t``."""
    if pos.is_terminal:
        raise DomainError("ci-derivatives are defined only for t < T")
    v, r = _band(pos)
    if v < -r:
        c = v + r
    elif v > r:
        c = v - r
    else:
        c = 0.0
    return c, pos.grid.T - pos.t


def phi_example_dt(pos: Position) -> float:
    c, rem = _outer_factor(pos)
    a = pos.grid.alpha
    # sign flips with the branch: -2a(v + r) below, +2a(v - r) above
    return 2.0 * a * abs(c) / rem ** (1.0 - a)


def phi_example_grad(pos: Position) -> np.ndarray:
    c, rem = _outer_factor(pos)
    a = pos.grid.alpha
    return np.array([2.0 * c / (math.gamma(a) * rem ** (1.0 - a))])


def u_star_example(pos: Position) -> float:
    """Closed-form optimal feedback; the free band returns 0."""
    v, r = _band(pos)
    if v > r:
        return -1.0
    if v < -r:
        return 1.0
    return 0.0


def classical_value(t: float, x: float, T: float) -> float:
    """Value of the ``alpha = 1`` problem, a function of ``(t, x(t))`` only."""
    r = T - t
    if x < -r:
        return (x + r) ** 2
    if x > r:
        return (x - r) ** 2
    return 0.0


def example_functional() -> CiFunctional:
    return CiFunctional(phi_example, phi_example_dt, phi_example_grad, ci_smooth=True, name="phi-example")


def val_star_functional() -> CiFunctional:
    def dt(pos):
        if pos.is_terminal:
            raise DomainError("ci-derivatives are defined only for t < T")
        return 0.0

    def grad(pos):
        if pos.is_terminal:
            raise DomainError("ci-derivatives are defined only for t < T")
        a = pos.grid.alpha
        return np.array([1.0 / (math.gamma(a) * (pos.grid.T - pos.t) ** (1.0 - a))])

    return CiFunctional(val_star, dt, grad, ci_smooth=True, name="val-star")


# -- catalog ------------------------------------------------------------------


def _zero_dynamics(alpha, T, N, controls=(0.0,), n=1):
    U = np.asarray(controls, dtype=float).reshape(len(controls), -1)
    return Problem(
        Grid(T, N, alpha), n, U,
        f=lambda tau, x, u: np.zeros(n),
        sigma=_sq,
        c_f=0.0, lambda_f=0.0, name="zero-dynamics",
    )


def _zero_cost(alpha, T, N, controls=(-1.0, 0.0, 1.0)):
    g = math.gamma(alpha + 1.0)
    U = np.asarray(controls, dtype=float).reshape(-1, 1)
    return Problem(
        Grid(T, N, alpha), 1, U,
        f=lambda tau, x, u: g * u,
        sigma=lambda x: 0.0,
        chi=lambda tau, x, u: 0.0,
        c_f=g * float(np.abs(U).max()), lambda_f=0.0, name="zero-cost",
    )


def _linear(alpha, T, N, controls=(-1.0, 0.0, 1.0), a=-1.0, b=1.0, q=1.0, r=0.0, p=0.0):
    """Scalar ``f = a x + b u``, ``sigma = q x^2``, ``chi = p x^2 + r u^2``."""
    U = np.asarray(controls, dtype=float).reshape(-1, 1)
    umax = float(np.abs(U).max())
    chi = None
    if r or p:
        chi = lambda tau, x, u: p * float(x[0] ** 2) + r * float(u[0] ** 2)  # noqa: E731
    return Problem(
        Grid(T, N, alpha), 1, U,
        f=lambda tau, x, u: a * x + b * u,
        sigma=lambda x: q * float(x[0] ** 2),
        chi=chi,
        c_f=max(abs(a), abs(b) * umax), lambda_f=abs(a), name="linear",
    )


CATALOG: dict[str, Callable[..., Problem]] = {
    "paper-example": example_problem,
    "zero-dynamics": _zero_dynamics,
    "zero-cost": _zero_cost,
    "linear": _linear,
}

DEFAULT_W0: dict[str, Callable[[float], list]] = {
    "paper-example": lambda alpha: [example_w0(alpha)],
    "zero-dynamics": lambda alpha: [1.0],
    "zero-cost": lambda alpha: [1.0],
    "linear": lambda alpha: [1.0],
}


def build_problem(name: str, alpha: float, T: float, N: int, controls=None, **params) -> Problem:
    try:
        builder = CATALOG[name]
    except KeyError:
        raise DomainError(f"unknown problem {name!r}; known: {sorted(CATALOG)}") from None
    kwargs = dict(params)
    if controls is not None:
        kwargs["controls"] = controls
    return builder(alpha, T, N, **kwargs)
