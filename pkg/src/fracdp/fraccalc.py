"""Special functions and discrete fractional operators on uniform grids.

Sampled signals are piecewise constant on grid cells, so the product-rectangle
Riemann-Liouville quadrature used here is exact for them: the node values of
``w(0) + I^a psi`` are the true values of the continuous function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import mpmath
import numpy as np

from . import kernels
from .errors import ConvergenceError, DomainError, SingularStepError

__all__ = [
    "Grid",
    "SampledSignal",
    "gamma_fn",
    "mittag_leffler",
    "holder_constant",
    "rl_integral",
    "rl_integral_nodes",
    "caputo_reconstruct",
]

ML_MAX_TERMS = 100_000
# largest series term up to which double summation keeps abs error near 1e-13
_ML_DOUBLE_MAX_TERM = 1e2
# |z|^(1/alpha) beyond which the series is abandoned for an integral (z < 0)
# or is known to overflow (z > 0, since E_alpha(z) > exp(z^(1/alpha)))
_ML_SERIES_REACH = 40.0
_ML_OVERFLOW_REACH = 710.0


@dataclass(frozen=True)
class Grid:
    """Uniform grid ``tau_j = j T / N`` on ``[0, T]`` carrying the order ``alpha``."""

    T: float
    N: int
    alpha: float

    def __post_init__(self):
        if not (self.T > 0 and math.isfinite(self.T)):
            raise DomainError(f"T must be positive and finite, got {self.T}")
        if int(self.N) != self.N or self.N < 1:
            raise DomainError(f"N must be a positive integer, got {self.N}")
        if not (0.0 < self.alpha < 1.0):
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "T", float(self.T))
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def h(self) -> float:
        return self.T / self.N

    @cached_property
    def nodes(self) -> np.ndarray:
        nodes = np.arange(self.N + 1) * self.h
        nodes[-1] = self.T
        nodes.flags.writeable = False
        return nodes

    @cached_property
    def weights(self) -> np.ndarray:
        """Product-rectangle weights ``a[0..N]`` (see :func:`kernels.rect_weights`)."""
        a = kernels.rect_weights(self.alpha, self.h, self.N)
        if not (a[1] > 0.0 and math.isfinite(a[1])):
            raise SingularStepError(f"diagonal weight {a[1]!r} unusable for h={self.h}")
        a.flags.writeable = False
        return a

    def tau(self, j: int) -> float:
        return float(self.nodes[j])

    def index_of(self, t: float, tol: float = 1e-9) -> int:
        """Node index for time ``t``; ``t`` must sit on a node."""
        j = int(round(t / self.h))
        if j < 0 or j > self.N or abs(j * self.h - t) > tol * max(1.0, self.T):
            raise DomainError(f"t={t} is not a node of {self}")
        return j


@dataclass(frozen=True)
class SampledSignal:
    """Piecewise-constant ``R^n`` signal, one row of ``values`` per grid cell."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2:
            raise DomainError("values must be a (cells, n) array")
        if v.shape[0] > self.grid.N:
            raise DomainError(f"{v.shape[0]} cells exceed grid size N={self.grid.N}")
        if not np.all(np.isfinite(v)):
            raise DomainError("signal values must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def cells(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    def sup_norm(self) -> float:
        if self.cells == 0:
            return 0.0
        return float(np.linalg.norm(self.values, axis=1).max())


def gamma_fn(x: float) -> float:
    """Gamma function for positive real ``x``."""
    if not x > 0:
        raise DomainError(f"gamma_fn needs x > 0, got {x}")
    return math.gamma(x)


def holder_constant(alpha: float) -> float:
    """``2 / Gamma(alpha + 1)``: Hoelder constant of ``I^alpha`` on bounded inputs."""
    return 2.0 / math.gamma(alpha + 1.0)


def _ml_log_terms(alpha: float, az: float):
    """Yield ``(k, log|z^k / Gamma(alpha k + 1)|)``."""
    lz = math.log(az)
    k = 0
    while True:
        yield k, k * lz - math.lgamma(alpha * k + 1.0)
        k += 1


def _ml_negative_integral(alpha: float, x: float) -> float:
    """``E_alpha(-x)`` for ``0 < alpha < 1``, ``x > 0`` from complete monotonicity:

        E_alpha(-x) = sin(pi a)/(pi a) int_0^inf exp(-(x v)^(1/a)) / (v^2 + 2 v cos(pi a) + 1) dv
    """
    with mpmath.workdps(30):
        a = mpmath.mpf(alpha)
        xx = mpmath.mpf(x)
        s, c = mpmath.sin(a * mpmath.pi), mpmath.cos(a * mpmath.pi)
        f = lambda v: mpmath.exp(-((xx * v) ** (1 / a))) / (v * v + 2 * v * c + 1)  # noqa: E731
        cuts = {mpmath.mpf(0), 1 / xx, 2 / xx, mpmath.mpf(1), 1 - s / 2, 1 + s, mpmath.mpf(10)}
        pts = sorted(p for p in cuts if p >= 0) + [mpmath.inf]
        return float(s / (a * mpmath.pi) * mpmath.quad(f, pts))


def mittag_leffler(alpha: float, z: float, max_terms: int = ML_MAX_TERMS) -> float:
    """One-parameter Mittag-Leffler function ``E_alpha(z)`` for real ``z``.

    Truncated power series.  Small arguments are summed exactly-rounded in
    double precision; once the largest term grows past ~100 (cancellation for
    negative ``z``, accumulated rounding for positive ``z``) the sum is carried
    out in mpmath with enough digits to absorb the largest term.  Far out on
    the negative axis (``|z|^(1/alpha) > 40``, ``alpha < 1``) an integral
    representation replaces the series.
    """
    if not (0.0 < alpha <= 1.0):
        raise DomainError(f"alpha must lie in (0, 1], got {alpha}")
    if not math.isfinite(z):
        raise DomainError(f"z must be finite, got {z}")
    if z == 0.0:
        return 1.0

    az = abs(z)
    reach = az ** (1.0 / alpha)
    if z > 0 and reach > _ML_OVERFLOW_REACH:
        raise OverflowError(f"E_{alpha}({z}) overflows double precision")
    if z < 0 and alpha < 1.0 and reach > _ML_SERIES_REACH:
        return _ml_negative_integral(alpha, az)
    # scan to the peak term to size the arithmetic
    peak_log = -math.inf
    k_peak = 0
    for k, lt in _ml_log_terms(alpha, az):
        if lt > peak_log:
            peak_log, k_peak = lt, k
        elif k > k_peak + 2:
            break
        if k > max_terms:
            raise ConvergenceError(f"E_{alpha}({z}) needs more than {max_terms} terms")

    if z > 0 and peak_log > 700.0:
        raise OverflowError(f"E_{alpha}({z}) overflows double precision")

    if peak_log < math.log(_ML_DOUBLE_MAX_TERM):
        terms = []
        scale = 1.0
        for k, lt in _ml_log_terms(alpha, az):
            t = math.exp(lt)
            scale = max(scale, t)
            terms.append(-t if (z < 0 and k % 2) else t)
            if k > k_peak and t < 1e-18 * scale:
                return math.fsum(terms)
            if k >= max_terms:
                break
        raise ConvergenceError(f"E_{alpha}({z}) did not converge in {max_terms} terms")

    dps = int(peak_log / math.log(10.0)) + 30
    with mpmath.workdps(dps):
        zz = mpmath.mpf(z)
        a = mpmath.mpf(alpha)
        total = mpmath.mpf(0)
        power = mpmath.mpf(1)
        tiny = mpmath.mpf(10) ** -25
        for k in range(max_terms + 1):
            term = power * mpmath.rgamma(a * k + 1)
            total += term
            if k > k_peak and abs(term) < tiny:
                return float(total)
            power *= zz
    raise ConvergenceError(f"E_{alpha}({z}) did not converge in {max_terms} terms")


def rl_integral(psi: SampledSignal, j: int) -> np.ndarray:
    """``(I^alpha psi)(tau_j)`` by product-rectangle quadrature."""
    if not (0 <= j <= psi.cells):
        raise IndexError(f"node {j} outside covered range 0..{psi.cells}")
    if j == 0:
        return np.zeros(psi.n)
    return kernels.convolve_at(psi.values[:j], psi.grid.weights, j)


def rl_integral_nodes(psi: SampledSignal) -> np.ndarray:
    """``(I^alpha psi)`` at every covered node ``0..cells``, shape ``(cells+1, n)``."""
    return kernels.convolve_all(psi.values, psi.grid.weights)


def caputo_reconstruct(grid: Grid, x) -> SampledSignal:
    """Piecewise-constant Caputo derivative of a node-sampled path.

    Inverts ``x(tau_j) = x(0) + (I^alpha psi)(tau_j)`` by forward substitution
    through the lower-triangular quadrature system.
    """
    x = np.array(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] < 1 or x.shape[0] > grid.N + 1:
        raise DomainError(f"path needs 1..{grid.N + 1} node samples, got {x.shape[0]}")
    a = grid.weights
    psi = kernels.forward_substitute(np.ascontiguousarray(x - x[0]), a)
    if not np.all(np.isfinite(psi)):
        raise SingularStepError("reconstruction produced non-finite values")
    return SampledSignal(grid, psi)
