"""Riemann-Maruyama quadrature with compensated accumulation.

The quadrature of samples x against integrator values w on a mesh with n
steps is the left-point sum

    A = sum_{i=0}^{n-1} x[i] * (w[i+1] - w[i])

accumulated left to right in Neumaier compensated form. The kernel returns
the unevaluated pair (s, c) with s + c the compensated sum; keeping the
pair lets callers difference two sums before the final rounding collapses
them (the error estimators rely on this).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ContractError
from .paths import Mesh


# No fastmath: compensation requires strict IEEE evaluation order.
@njit(cache=True)
def _neumaier_dot(x: np.ndarray, dw: np.ndarray):  # pragma: no cover - jitted
    s = 0.0
    c = 0.0
    for i in range(x.shape[0]):
        term = x[i] * dw[i]
        t = s + term
        if abs(s) >= abs(term):
            c += (s - t) + term
        else:
            c += (term - t) + s
        s = t
    return s, c


def neumaier_dot_pair(x: np.ndarray, dw: np.ndarray) -> tuple[float, float]:
    """Compensated dot product as an (s, c) pair with value s + c.

    Left-to-right accumulation; deterministic for fixed inputs.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    dw = np.ascontiguousarray(dw, dtype=np.float64)
    if x.ndim != 1 or dw.ndim != 1 or x.shape[0] != dw.shape[0]:
        raise ContractError(f"need equal-length 1-d arrays, got {x.shape} and {dw.shape}")
    s, c = _neumaier_dot(x, dw)
    return float(s), float(c)


def compensated_dot(x: np.ndarray, dw: np.ndarray) -> float:
    s, c = neumaier_dot_pair(x, dw)
    return s + c


@dataclass(frozen=True)
class QuadratureInput:
    """Samples for one quadrature: n integrand values and n+1 integrator values.

    x[i] is the (possibly noise-perturbed) integrand evaluation at mesh point
    i, for i = 0..n-1; w[i] the integrator evaluation at mesh point i, for
    i = 0..n.
    """

    x: np.ndarray
    w: np.ndarray
    mesh: Mesh

    def __post_init__(self) -> None:
        x = np.asarray(self.x, dtype=np.float64)
        w = np.asarray(self.w, dtype=np.float64)
        if x.ndim != 1 or w.ndim != 1:
            raise ContractError("x and w must be one-dimensional")
        if w.size != x.size + 1:
            raise ContractError(f"need len(w) == len(x)+1, got {w.size} and {x.size}")
        if self.mesh.n != x.size:
            raise ContractError(f"mesh has {self.mesh.n} steps but x has {x.size} values")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "w", w)


def riemann_maruyama(qin: QuadratureInput) -> float:
    """Left-point quadrature value, compensated left-to-right."""
    s, c = neumaier_dot_pair(qin.x, np.diff(qin.w))
    return s + c
