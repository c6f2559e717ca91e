"""Hot numeric loops: product-rectangle convolutions and graph distances.

Every kernel exists twice: a numba-compiled loop and a vectorized numpy
version.  The public names bind to whichever backend :mod:`fracdp._accel`
selected; both implementations stay importable (``*_numpy`` / ``*_numba``) so
tests and the benchmark can compare them directly.
"""

from __future__ import annotations

import math

import numpy as np

from ._accel import HAVE_NUMBA, njit

__all__ = [
    "rect_weights",
    "convolve_all",
    "convolve_at",
    "forward_substitute",
    "hausdorff",
    "backend_kernels",
]


def rect_weights(alpha: float, h: float, m: int) -> np.ndarray:
    """Weights ``a[k] = ((k h)^a - ((k-1) h)^a) / Gamma(a+1)``, ``a[0] = 0``.

    ``a[j - i]`` is the exact Riemann-Liouville weight of cell ``i`` seen from
    node ``j`` for piecewise-constant data on a uniform grid.
    """
    k = np.arange(m + 1, dtype=float)
    scale = h**alpha / math.gamma(alpha + 1.0)
    a = np.empty(m + 1)
    a[0] = 0.0
    a[1:] = (k[1:] ** alpha - k[:-1] ** alpha) * scale
    return a


# -- numpy versions ---------------------------------------------------------


def convolve_all_numpy(psi: np.ndarray, a: np.ndarray) -> np.ndarray:
    """``out[j] = sum_{i<j} psi[i] * a[j - i]`` for ``j = 0..J``."""
    J = psi.shape[0]
    out = np.zeros((J + 1, psi.shape[1]))
    if J == 0:
        return out
    idx = np.arange(1, J + 1)[:, None] - np.arange(J)[None, :]
    W = np.where(idx > 0, a[np.clip(idx, 0, None)], 0.0)
    out[1:] = W @ psi
    return out


def convolve_at_numpy(psi: np.ndarray, a: np.ndarray, j: int) -> np.ndarray:
    """``sum_{i<k} psi[i] * a[j - i]`` with ``k = len(psi) <= j``."""
    k = psi.shape[0]
    if k == 0:
        return np.zeros(psi.shape[1])
    return a[j - k + 1 : j + 1][::-1] @ psi


def forward_substitute_numpy(dx: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Solve ``dx[j] = sum_{i<j} psi[i] a[j-i]`` for ``psi`` (lower triangular)."""
    J = dx.shape[0] - 1
    psi = np.zeros((J, dx.shape[1]))
    for j in range(1, J + 1):
        acc = a[j : 1 : -1] @ psi[: j - 1] if j > 1 else 0.0
        psi[j - 1] = (dx[j] - acc) / a[1]
    return psi


def hausdorff_numpy(A: np.ndarray, B: np.ndarray) -> float:
    """Symmetric discrete Hausdorff distance between point clouds."""
    d2 = ((A[:, None, :] - B[None, :, :]) ** 2).sum(axis=-1)
    return float(math.sqrt(max(d2.min(axis=1).max(), d2.min(axis=0).max())))


# -- numba versions ---------------------------------------------------------


@njit(cache=True)
def convolve_all_numba(psi, a):
    J = psi.shape[0]
    n = psi.shape[1]
    out = np.zeros((J + 1, n))
    for j in range(1, J + 1):
        for i in range(j):
            w = a[j - i]
            for d in range(n):
                out[j, d] += psi[i, d] * w
    return out


@njit(cache=True)
def convolve_at_numba(psi, a, j):
    k = psi.shape[0]
    n = psi.shape[1]
    out = np.zeros(n)
    for i in range(k):
        w = a[j - i]
        for d in range(n):
            out[d] += psi[i, d] * w
    return out


@njit(cache=True)
def forward_substitute_numba(dx, a):
    J = dx.shape[0] - 1
    n = dx.shape[1]
    psi = np.zeros((J, n))
    for j in range(1, J + 1):
        for d in range(n):
            acc = 0.0
            for i in range(j - 1):
                acc += psi[i, d] * a[j - i]
            psi[j - 1, d] = (dx[j, d] - acc) / a[1]
    return psi


@njit(cache=True)
def hausdorff_numba(A, B):
    p = A.shape[0]
    q = B.shape[0]
    n = A.shape[1]
    rowmin = np.full(p, np.inf)
    colmin = np.full(q, np.inf)
    for i in range(p):
        for j in range(q):
            s = 0.0
            for d in range(n):
                diff = A[i, d] - B[j, d]
                s += diff * diff
            if s < rowmin[i]:
                rowmin[i] = s
            if s < colmin[j]:
                colmin[j] = s
    return math.sqrt(max(rowmin.max(), colmin.max()))


def backend_kernels(name: str) -> dict:
    """Kernel table for ``"numpy"`` or ``"numba"`` (the latter needs numba)."""
    if name == "numpy":
        return {
            "convolve_all": convolve_all_numpy,
            "convolve_at": convolve_at_numpy,
            "forward_substitute": forward_substitute_numpy,
            "hausdorff": hausdorff_numpy,
        }
    if name == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("numba backend requested but numba is unavailable or disabled")
        return {
            "convolve_all": convolve_all_numba,
            "convolve_at": convolve_at_numba,
            "forward_substitute": forward_substitute_numba,
            "hausdorff": hausdorff_numba,
        }
    raise ValueError(f"unknown backend {name!r}")


if HAVE_NUMBA:
    convolve_all = convolve_all_numba
    convolve_at = convolve_at_numba
    forward_substitute = forward_substitute_numba
    hausdorff = hausdorff_numba
else:
    convolve_all = convolve_all_numpy
    convolve_at = convolve_at_numpy
    forward_substitute = forward_substitute_numpy
    hausdorff = hausdorff_numpy
