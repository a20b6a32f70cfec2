"""Analytic disturbance model for noisy evaluations.

A disturbance p(t, y) perturbs an evaluation y at time t into
y + delta * p(t, y). Each catalogue entry carries a regularity class tag:

    K1           growth bound |p(t,y)| <= 1 + |y|
    K2(s)        C^{1,2} in (t,y), partial derivatives bounded by 1 + |y|^s
    K2bar(s)     C^{1,1} only (first y-derivative Lipschitz, no second)
    K3(a,b)      Hoelder: |p(t,x)-p(z,y)| <= |t-z|^a + |x-y|^b

Tags gate which error regime a disturbance may drive; the numeric growth
check below is advisory and never blocks a run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError, DomainError


@dataclass(frozen=True)
class ClassTag:
    family: str  # "K1" | "K2" | "K2bar" | "K3"
    s: float = 0.0
    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self) -> None:
        if self.family not in ("K1", "K2", "K2bar", "K3"):
            raise ConfigError(f"unknown disturbance class family {self.family!r}")
        if self.s < 0.0:
            raise ConfigError(f"growth exponent s must be >= 0, got {self.s}")
        if not (0.0 < self.alpha <= 1.0):
            raise ConfigError(f"time exponent alpha must be in (0, 1], got {self.alpha}")
        if not (0.0 < self.beta <= 2.0):
            raise ConfigError(f"space exponent beta must be in (0, 2], got {self.beta}")

    @property
    def smooth(self) -> bool:
        """True for the class whose noise contribution stays bounded in n."""
        return self.family == "K2"

    @property
    def blowup_eligible(self) -> bool:
        """True for classes whose worst-case error bound grows with n."""
        return self.family in ("K2bar", "K3")


@dataclass(frozen=True)
class DisturbanceFunction:
    """Named disturbance with its regularity tag.

    fn(t, y) must accept scalars or same-shape numpy arrays elementwise.
    """

    name: str
    class_tag: ClassTag
    fn: Callable = field(repr=False)

    def __call__(self, t, y):
        return self.fn(t, y)


def _p_one(t, y):
    # exact 1.0 everywhere; 0.0*y keeps array broadcasting
    return 1.0 + 0.0 * y


def _p_identity(t, y):
    return y + 0.0 * t


def _p_xt_squared(t, y):
    return y * t * t


def _p_linear_drift_t(t, y):
    # exactly t (plus broadcast), so increments of p telescope on the grid
    return t + 0.0 * y


def _p_sqrt_abs(t, y):
    return np.sqrt(np.abs(y)) + 0.0 * t


def _p_x_abs_x_half(t, y):
    return 0.5 * y * np.abs(y) + 0.0 * t


ONE = DisturbanceFunction("one", ClassTag("K2", s=0.0), _p_one)
IDENTITY = DisturbanceFunction("identity", ClassTag("K2", s=1.0), _p_identity)
XT_SQUARED = DisturbanceFunction("xt-squared", ClassTag("K2", s=1.0), _p_xt_squared)
LINEAR_DRIFT_T = DisturbanceFunction("linear-drift-t", ClassTag("K2", s=0.0), _p_linear_drift_t)
SQRT_ABS = DisturbanceFunction("sqrt-abs", ClassTag("K3", alpha=1.0, beta=0.5), _p_sqrt_abs)
X_ABS_X_HALF = DisturbanceFunction("x-abs-x-half", ClassTag("K2bar", s=1.0), _p_x_abs_x_half)

CATALOGUE = {
    p.name: p for p in (ONE, IDENTITY, XT_SQUARED, LINEAR_DRIFT_T, SQRT_ABS, X_ABS_X_HALF)
}


def get_disturbance(name: str) -> DisturbanceFunction:
    try:
        return CATALOGUE[name]
    except KeyError:
        raise ConfigError(
            f"unknown disturbance {name!r}; catalogue: {sorted(CATALOGUE)}"
        ) from None


def custom_disturbance(fn: Callable, class_tag: ClassTag, name: str = "custom") -> DisturbanceFunction:
    """Wrap a user-supplied p(t, y) with a declared class tag."""
    return DisturbanceFunction(name, class_tag, fn)


@dataclass(frozen=True)
class NoiseSpec:
    """Noise levels and disturbance shapes for the two evaluation channels.

    x-channel: x -> x + delta1 * p_x(t, x)
    w-channel: w -> w + delta2 * p_w(t, w)
    """

    delta1: float = 0.0
    delta2: float = 0.0
    p_x: DisturbanceFunction = ONE
    p_w: DisturbanceFunction = ONE

    def __post_init__(self) -> None:
        for label, d in (("delta1", self.delta1), ("delta2", self.delta2)):
            if not (math.isfinite(d) and d >= 0.0):
                raise DomainError(f"{label} must be finite and >= 0, got {d}")

    @property
    def exact(self) -> bool:
        return self.delta1 == 0.0 and self.delta2 == 0.0


EXACT_INFO = NoiseSpec(0.0, 0.0)


def perturb_x(x, t, spec: NoiseSpec):
    """Noisy integrand evaluation x + delta1 * p_x(t, x)."""
    return x + spec.delta1 * spec.p_x(t, x)


def perturb_w(w, t, spec: NoiseSpec):
    """Noisy integrator evaluation w + delta2 * p_w(t, w)."""
    return w + spec.delta2 * spec.p_w(t, w)


def check_growth_bound(
    p: DisturbanceFunction,
    t_grid: np.ndarray,
    y_grid: np.ndarray,
    tol: float = 1e-6,
) -> bool:
    """Advisory sampled check of the class bound; True means no violation seen.

    K1: |p| <= 1 + |y|. K2/K2bar: finite-difference first (and for K2 second)
    derivatives bounded by 1 + |y|^s. K3: Hoelder quotient on grid pairs.
    Never raises for an in-domain grid and never blocks a run.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    y_grid = np.asarray(y_grid, dtype=float)
    if t_grid.size == 0 or y_grid.size == 0:
        raise DomainError("growth check needs nonempty grids")
    tt, yy = np.meshgrid(t_grid, y_grid, indexing="ij")
    tag = p.class_tag
    if tag.family == "K1":
        return bool(np.all(np.abs(p(tt, yy)) <= 1.0 + np.abs(yy) + tol))
    if tag.family in ("K2", "K2bar"):
        h = 1e-5
        bound = 1.0 + np.abs(yy) ** tag.s + tol
        dpdt = (p(tt + h, yy) - p(tt - h, yy)) / (2.0 * h)
        dpdy = (p(tt, yy + h) - p(tt, yy - h)) / (2.0 * h)
        ok = np.all(np.abs(dpdt) <= bound) and np.all(np.abs(dpdy) <= bound)
        if tag.family == "K2":
            d2 = (p(tt, yy + h) - 2.0 * p(tt, yy) + p(tt, yy - h)) / (h * h)
            ok = ok and np.all(np.abs(d2) <= bound)
        return bool(ok)
    # K3: pairwise Hoelder bound along the sampled grid
    vals = p(tt, yy)
    dt = np.abs(tt[1:, :] - tt[:-1, :])
    dy = np.abs(yy[:, 1:] - yy[:, :-1])
    ok_t = np.all(np.abs(vals[1:, :] - vals[:-1, :]) <= dt**tag.alpha + tol)
    ok_y = np.all(np.abs(vals[:, 1:] - vals[:, :-1]) <= dy**tag.beta + tol)
    return bool(ok_t and ok_y)
