"""Time meshes and sampled driver trajectories.

All randomness flows through one splittable scheme: a master seed plus a
(replicate_index, stream_tag) spawn key fed to numpy's SeedSequence, one
Generator per stream. Regenerating any stream with the same key is
bit-identical, independent of worker partitioning or evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numba import njit

from .errors import AlignmentError, ContractError, DomainError

# stream tags (second spawn-key component)
WIENER = 0
WIENER2 = 1
POISSON = 2
BOOTSTRAP = 3

DEFAULT_POISSON_RATE = 5.0


def stream_generator(seed: int, replicate_index: int, stream_tag: int) -> np.random.Generator:
    """Independent generator for one (replicate, channel) stream.

    SeedSequence performs the documented entropy mixing; PCG64DXSM is the
    bit generator numpy recommends for spawned parallel streams.
    """
    ss = np.random.SeedSequence(seed, spawn_key=(replicate_index, stream_tag))
    return np.random.Generator(np.random.PCG64DXSM(ss))


@dataclass(frozen=True)
class Mesh:
    """A strictly increasing time grid on [0, horizon].

    points[0] == 0.0 and points[-1] == horizon exactly.
    """

    horizon: float
    points: np.ndarray

    def __post_init__(self) -> None:
        if not (math.isfinite(self.horizon) and self.horizon > 0.0):
            raise DomainError(f"horizon must be positive and finite, got {self.horizon}")
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 1 or pts.size < 2:
            raise ContractError("mesh needs at least two points (one step)")
        if pts[0] != 0.0:
            raise ContractError(f"mesh must start at 0.0, got {pts[0]!r}")
        if pts[-1] != self.horizon:
            raise ContractError(f"mesh must end at horizon={self.horizon!r}, got {pts[-1]!r}")
        if not np.all(np.diff(pts) > 0.0):
            raise ContractError("mesh points must be strictly increasing")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        """Number of steps."""
        return self.points.size - 1

    @classmethod
    def uniform(cls, n: int, horizon: float) -> "Mesh":
        """Equidistant mesh with n steps, endpoints exact."""
        if not isinstance(n, (int, np.integer)) or n < 1:
            raise DomainError(f"step count must be a positive integer, got {n!r}")
        if not (math.isfinite(horizon) and horizon > 0.0):
            raise DomainError(f"horizon must be positive and finite, got {horizon}")
        return cls(horizon=float(horizon), points=np.linspace(0.0, float(horizon), int(n) + 1))


# No fastmath: compensation requires strict IEEE evaluation order.
@njit(cache=True)
def _neumaier_cumsum(inc: np.ndarray, out: np.ndarray):  # pragma: no cover - jitted
    s = 0.0
    c = 0.0
    for i in range(inc.shape[0]):
        term = inc[i]
        t = s + term
        if abs(s) >= abs(term):
            c += (s - t) + term
        else:
            c += (term - t) + s
        s = t
        out[i] = s + c


def sample_wiener_with_increments(
    seed: int, replicate_index: int, stream_tag: int, n_fine: int, horizon: float
) -> tuple:
    """Wiener path and its generating increments, (w, dw).

    dw holds the n_fine iid N(0, horizon/n_fine) increments as drawn from
    the (replicate_index, stream_tag) stream; w holds their compensated
    running sums with w[0] exactly 0.0, so each w[i] is within one ulp of
    the exact partial sum and in particular w[-1] agrees with a compensated
    total of dw at machine precision whatever its magnitude. The same key
    always reproduces the same pair bit for bit.
    """
    if not isinstance(n_fine, (int, np.integer)) or n_fine < 1:
        raise DomainError(f"n_fine must be a positive integer, got {n_fine!r}")
    if not (math.isfinite(horizon) and horizon > 0.0):
        raise DomainError(f"horizon must be positive and finite, got {horizon}")
    rng = stream_generator(seed, replicate_index, stream_tag)
    dw = rng.standard_normal(int(n_fine))
    dw *= math.sqrt(horizon / n_fine)
    w = np.empty(int(n_fine) + 1)
    w[0] = 0.0
    _neumaier_cumsum(dw, w[1:])
    return w, dw


def sample_wiener_fine(
    seed: int, replicate_index: int, stream_tag: int, n_fine: int, horizon: float
) -> np.ndarray:
    """Wiener path on the uniform n_fine-step grid, as n_fine+1 values."""
    return sample_wiener_with_increments(seed, replicate_index, stream_tag, n_fine, horizon)[0]


def sample_poisson_arrivals(
    seed: int, replicate_index: int, stream_tag: int, rate: float, horizon: float
) -> np.ndarray:
    """Arrival times of a homogeneous Poisson process on [0, horizon].

    Exponential gaps are drawn from the keyed stream and accumulated until
    the horizon is passed; the result is strictly increasing and may be
    empty. Deterministic per key.
    """
    if not (math.isfinite(rate) and rate > 0.0):
        raise DomainError(f"rate must be positive and finite, got {rate}")
    if not (math.isfinite(horizon) and horizon > 0.0):
        raise DomainError(f"horizon must be positive and finite, got {horizon}")
    rng = stream_generator(seed, replicate_index, stream_tag)
    mean_count = rate * horizon
    chunk = max(16, int(mean_count + 10.0 * math.sqrt(mean_count) + 10.0))
    gaps = rng.exponential(1.0 / rate, size=chunk)
    total = np.cumsum(gaps)
    while total[-1] <= horizon:
        gaps = rng.exponential(1.0 / rate, size=chunk)
        total = np.concatenate([total, total[-1] + np.cumsum(gaps)])
    arrivals = total[total <= horizon]
    arrivals.flags.writeable = False
    return arrivals


def evaluate_count(arrivals: np.ndarray, t: float, horizon: float | None = None) -> int:
    """Number of arrivals in [0, t] (right-continuous counting process)."""
    if not math.isfinite(t) or t < 0.0:
        raise DomainError(f"t must be finite and nonnegative, got {t}")
    if horizon is not None and t > horizon:
        raise DomainError(f"t={t} exceeds horizon={horizon}")
    return int(np.searchsorted(arrivals, t, side="right"))


@dataclass(frozen=True)
class TrajectoryBundle:
    """One realization of all driver processes on a shared fine grid.

    Channels are materialized lazily but are pure functions of
    (seed, replicate_index, n_fine, horizon, rate), so access order,
    caching, and worker placement cannot change their bits. Immutable;
    safe to share across readers.
    """

    seed: int
    replicate_index: int
    n_fine: int
    horizon: float
    rate: float = DEFAULT_POISSON_RATE

    def __post_init__(self) -> None:
        if not isinstance(self.n_fine, (int, np.integer)) or self.n_fine < 1:
            raise DomainError(f"n_fine must be a positive integer, got {self.n_fine!r}")
        if not (math.isfinite(self.horizon) and self.horizon > 0.0):
            raise DomainError(f"horizon must be positive and finite, got {self.horizon}")
        if not (math.isfinite(self.rate) and self.rate > 0.0):
            raise DomainError(f"rate must be positive and finite, got {self.rate}")

    @cached_property
    def fine_mesh(self) -> Mesh:
        return Mesh.uniform(self.n_fine, self.horizon)

    @cached_property
    def w(self) -> np.ndarray:
        """Primary Wiener path (integrator channel)."""
        out = sample_wiener_fine(self.seed, self.replicate_index, WIENER, self.n_fine, self.horizon)
        out.flags.writeable = False
        return out

    @cached_property
    def w2(self) -> np.ndarray:
        """Second, independent Wiener path (integrand channel)."""
        out = sample_wiener_fine(self.seed, self.replicate_index, WIENER2, self.n_fine, self.horizon)
        out.flags.writeable = False
        return out

    @cached_property
    def poisson_arrivals(self) -> np.ndarray:
        return sample_poisson_arrivals(self.seed, self.replicate_index, POISSON, self.rate, self.horizon)


def subsample(bundle: TrajectoryBundle, mesh: Mesh, channel: str = "w") -> np.ndarray:
    """Read a driver channel at the points of a coarser mesh.

    The mesh must divide the bundle's fine grid and its points must agree
    with the corresponding fine points to within a rounding unit; the
    returned values are the fine values at those indices (no interpolation),
    so coarse and fine quadratures read one trajectory.
    """
    if channel == "w":
        values = bundle.w
    elif channel == "w2":
        values = bundle.w2
    else:
        raise ContractError(f"unknown channel {channel!r}, expected 'w' or 'w2'")
    fine = bundle.fine_mesh
    if mesh.horizon != fine.horizon:
        raise AlignmentError(f"mesh horizon {mesh.horizon!r} != bundle horizon {fine.horizon!r}")
    if fine.n % mesh.n != 0:
        raise AlignmentError(f"coarse step count {mesh.n} does not divide fine step count {fine.n}")
    step = fine.n // mesh.n
    on_grid = fine.points[::step]
    tol = 2.0 * np.spacing(mesh.horizon)
    off = np.abs(mesh.points - on_grid)
    if np.any(off > tol):
        k = int(np.argmax(off))
        raise AlignmentError(
            f"mesh point {mesh.points[k]!r} is off the fine grid by {off[k]:.3e} (> {tol:.3e})"
        )
    return values[::step]
