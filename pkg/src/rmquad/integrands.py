"""Integrand catalogue for the quadrature experiments.

Every integrand is a progressively measurable function of time and the
driver values at that same time, so evaluating on a grid needs only the
bundle channels at the grid indices.

Kinds:
    x1     W(t)                       closed-form integral available
    x2     W2(t)                      independent of the integrator
    x3     max(0, K - S(t)) * S(t)    put-payoff-weighted geometric motion
    x4     N(t) * exp(W(t))           Poisson count times exponential
    sde    exp(mu*(T - t)) * W2(t)    kernel form of a linear SDE solution
    const  level                      constant hook (exactness experiments)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AlignmentError, ConfigError, ContractError, DomainError
from .paths import TrajectoryBundle, evaluate_count

KINDS = ("x1", "x2", "x3", "x4", "sde", "const")


@dataclass(frozen=True)
class Integrand:
    kind: str
    strike: float = 9.0   # x3
    sigma: float = 1.0    # x3
    spot: float = 1.0     # x3
    rate: float = 5.0     # x4 Poisson intensity
    mu: float = 3.0       # sde kernel exponent
    level: float = 1.0    # const

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"unknown integrand kind {self.kind!r}; kinds: {KINDS}")

    @property
    def needs_w2(self) -> bool:
        return self.kind in ("x2", "sde")

    @property
    def needs_poisson(self) -> bool:
        return self.kind == "x4"

    def values_at(self, t, horizon, w=None, w2=None, counts=None):
        """Vectorized evaluation at times t from same-time driver values."""
        if self.kind == "x1":
            if w is None:
                raise ContractError("x1 needs the w channel")
            return w
        if self.kind == "x2":
            if w2 is None:
                raise ContractError("x2 needs the w2 channel")
            return w2
        if self.kind == "x3":
            if w is None:
                raise ContractError("x3 needs the w channel")
            s = self.spot * np.exp(-0.5 * self.sigma**2 * t + self.sigma * w)
            return np.maximum(0.0, self.strike - s) * s
        if self.kind == "x4":
            if w is None or counts is None:
                raise ContractError("x4 needs the w channel and arrival counts")
            return counts * np.exp(w)
        if self.kind == "sde":
            if w2 is None:
                raise ContractError("sde needs the w2 channel")
            return np.exp(self.mu * (horizon - t)) * w2
        return self.level + 0.0 * np.asarray(t, dtype=float)  # const

    def params_echo(self) -> dict:
        """Kind-relevant parameters, for report echoes and config files."""
        if self.kind == "x3":
            return {"strike": self.strike, "sigma": self.sigma, "spot": self.spot}
        if self.kind == "x4":
            return {"rate": self.rate}
        if self.kind == "sde":
            return {"mu": self.mu}
        if self.kind == "const":
            return {"level": self.level}
        return {}


def make_integrand(kind: str, **params) -> Integrand:
    """Build a catalogue integrand, rejecting parameters foreign to the kind."""
    allowed = {
        "x1": (),
        "x2": (),
        "x3": ("strike", "sigma", "spot"),
        "x4": ("rate",),
        "sde": ("mu",),
        "const": ("level",),
    }
    if kind not in allowed:
        raise ConfigError(f"unknown integrand kind {kind!r}; kinds: {KINDS}")
    bad = set(params) - set(allowed[kind])
    if bad:
        raise ConfigError(f"parameters {sorted(bad)} do not apply to integrand {kind!r}")
    return Integrand(kind=kind, **params)


def eval_integrand(integrand: Integrand, t: float, bundle: TrajectoryBundle) -> float:
    """Pointwise evaluation at a time on the bundle's fine grid."""
    n_fine = bundle.n_fine
    horizon = bundle.horizon
    if not (math.isfinite(t) and 0.0 <= t <= horizon):
        raise DomainError(f"t={t} outside [0, {horizon}]")
    dt = horizon / n_fine
    i = int(round(t / dt))
    i = min(max(i, 0), n_fine)
    if abs(t - bundle.fine_mesh.points[i]) > 2.0 * np.spacing(horizon):
        raise AlignmentError(f"t={t!r} is not a fine grid point")
    w = bundle.w[i] if integrand.kind in ("x1", "x3", "x4") else None
    w2 = bundle.w2[i] if integrand.needs_w2 else None
    counts = None
    if integrand.needs_poisson:
        counts = evaluate_count(bundle.poisson_arrivals, float(bundle.fine_mesh.points[i]), horizon)
    return float(integrand.values_at(float(bundle.fine_mesh.points[i]), horizon, w=w, w2=w2, counts=counts))


def exact_integral_x1(w_terminal: float, horizon: float) -> float:
    """Closed form of the Ito integral of W against itself on [0, horizon]."""
    if not (math.isfinite(horizon) and horizon > 0.0):
        raise DomainError(f"horizon must be positive and finite, got {horizon}")
    return 0.5 * w_terminal * w_terminal - 0.5 * horizon


def payoff(x: float, strike: float):
    """Put payoff max(0, strike - x); Lipschitz with constant 1."""
    return np.maximum(0.0, strike - x)
