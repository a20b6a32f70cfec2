"""Monte Carlo error experiments for noisy Riemann-Maruyama quadrature.

Estimator layout
----------------
Strong error at mesh size n is ((1/M) sum_j |I_j - A_j|^r)^(1/r) where I_j
is the exact integral (closed form for the x1 problem) or the
exact-information quadrature on a refine-times-finer mesh of the same
trajectory, and A_j the noisy coarse quadrature. Weak error is
|mean f(A_j) - mean f(I_j)| for a payoff f, over shared trajectories.

The noisy quadrature is evaluated in its bilinear components

    A = S_xw + d1*S_pw + d2*S_xz + d1*d2*S_pz,
    S_ab = sum_i a_i * (b_{i+1} - b_i),   Z_i = p_w(t_i, w_i),

which equals sum (x_i + d1 p_x(t_i, x_i)) ((w+d2 Z)_{i+1} - (w+d2 Z)_i)
exactly in real arithmetic. Evaluating the components separately keeps the
noise channels out of the main term's rounding: a disturbance with zero
increments (p_w = one) contributes exactly 0.0 and the result is
bit-identical to the exact-information run, and each channel's contribution
is exposed at its own floating-point scale instead of being absorbed into
the O(1) main term.

Deviations I_j - A_j are assembled from the unrounded Neumaier pairs of the
two main sums, so like-magnitude sums cancel exactly (Sterbenz) and the
deviation is accurate at its own scale, not at 0.5 ulp of the quadrature
magnitude. Replicate j of level k draws from streams keyed by the global
replicate index k*M + j, so results are bit-identical for any worker count.
"""

from __future__ import annotations

import math
import multiprocessing as mp
from concurrent import futures as cf
from dataclasses import dataclass, replace
from functools import partial
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, ContractError, DomainError, ResourceLimitError
from .integrands import Integrand, exact_integral_x1, make_integrand, payoff
from .noise import EXACT_INFO, NoiseSpec, get_disturbance
from .paths import (
    BOOTSTRAP,
    POISSON,
    WIENER,
    WIENER2,
    sample_poisson_arrivals,
    sample_wiener_fine,
    sample_wiener_with_increments,
    stream_generator,
)
from .quadrature import neumaier_dot_pair

BOOTSTRAP_RESAMPLES = 500
DEFAULT_DELTA_SWEEP = (0.0, 1e-4, 1e-3, 1e-2, 1e-1)
DEFAULT_FINE_STEP_CAP = 2**24
COUPLINGS = ("none", "n^-1/2")
REGIMES = ("floor", "coupled", "blowup")


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: a problem, a noise model, meshes, and run controls.

    threads is a runtime resource knob: it never changes results and is
    therefore not part of the report's config echo.
    """

    problem: Integrand
    noise: NoiseSpec = EXACT_INFO
    n_list: tuple = (4, 16, 64, 256)
    replicates: int = 2048
    refine: int = 1000
    seed: int = 0
    horizon: float = 1.0
    moment: float = 2.0
    coupling: str = "none"
    threads: int = 1
    fine_step_cap: int = DEFAULT_FINE_STEP_CAP

    def __post_init__(self) -> None:
        ns = tuple(int(n) for n in self.n_list)
        if len(ns) == 0:
            raise ConfigError("n_list must not be empty")
        if any(n < 1 for n in ns):
            raise ConfigError(f"mesh sizes must be >= 1, got {ns}")
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise ConfigError(f"n_list must be strictly increasing, got {ns}")
        object.__setattr__(self, "n_list", ns)
        if not isinstance(self.replicates, (int, np.integer)) or self.replicates < 2:
            raise ConfigError(f"replicates must be an integer >= 2, got {self.replicates!r}")
        if not isinstance(self.refine, (int, np.integer)) or self.refine < 1:
            raise ConfigError(f"refine must be an integer >= 1, got {self.refine!r}")
        if not (math.isfinite(self.horizon) and self.horizon > 0.0):
            raise ConfigError(f"horizon must be positive and finite, got {self.horizon}")
        if not (math.isfinite(self.moment) and self.moment >= 1.0):
            raise ConfigError(f"moment order must be >= 1, got {self.moment}")
        if self.coupling not in COUPLINGS:
            raise ConfigError(f"coupling must be one of {COUPLINGS}, got {self.coupling!r}")
        if not isinstance(self.threads, (int, np.integer)) or self.threads < 1:
            raise ConfigError(f"threads must be an integer >= 1, got {self.threads!r}")
        if self.fine_step_cap < 1:
            raise ConfigError("fine_step_cap must be positive")


@dataclass(frozen=True)
class LevelEstimate:
    n: int
    error: float
    stderr: float


@dataclass(frozen=True)
class ErrorReport:
    mode: str  # "strong_exact" | "strong_reference" | "weak"
    per_n: tuple
    fitted_slope: float
    config_echo: dict

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "config": dict(self.config_echo),
            "per_n": [
                {"n": le.n, "error": le.error, "stderr": le.stderr} for le in self.per_n
            ],
            "fitted_slope": self.fitted_slope,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ErrorReport":
        per = tuple(
            LevelEstimate(int(r["n"]), float(r["error"]), float(r["stderr"]))
            for r in d["per_n"]
        )
        slope = d.get("fitted_slope")
        return cls(
            mode=d["mode"],
            per_n=per,
            fitted_slope=float("nan") if slope is None else float(slope),
            config_echo=dict(d["config"]),
        )


def reports_equal_bits(a: ErrorReport, b: ErrorReport) -> bool:
    """Bit-level equality of the numerical content of two reports."""
    if a.mode != b.mode or len(a.per_n) != len(b.per_n):
        return False
    for la, lb in zip(a.per_n, b.per_n):
        if la.n != lb.n:
            return False
        if np.float64(la.error).tobytes() != np.float64(lb.error).tobytes():
            return False
        if np.float64(la.stderr).tobytes() != np.float64(lb.stderr).tobytes():
            return False
    return np.float64(a.fitted_slope).tobytes() == np.float64(b.fitted_slope).tobytes()


# --- config echo -----------------------------------------------------------

ECHO_KEYS = (
    "problem",
    "problem_params",
    "n_list",
    "replicates",
    "refine",
    "seed",
    "horizon",
    "moment",
    "coupling",
    "delta1",
    "delta2",
    "p_x",
    "p_w",
)


def config_echo(cfg: ExperimentConfig, **extra) -> dict:
    """Reproducibility echo: everything needed to rerun bit-identically."""
    echo = {
        "problem": cfg.problem.kind,
        "problem_params": cfg.problem.params_echo(),
        "n_list": list(cfg.n_list),
        "replicates": int(cfg.replicates),
        "refine": int(cfg.refine),
        "seed": int(cfg.seed),
        "horizon": float(cfg.horizon),
        "moment": float(cfg.moment),
        "coupling": cfg.coupling,
        "delta1": float(cfg.noise.delta1),
        "delta2": float(cfg.noise.delta2),
        "p_x": cfg.noise.p_x.name,
        "p_w": cfg.noise.p_w.name,
    }
    echo.update(extra)
    return echo


def config_from_echo(echo: dict, threads: int = 1) -> tuple[ExperimentConfig, dict]:
    """Rebuild an ExperimentConfig from an echo (or config file) mapping.

    Returns (config, extras) where extras holds non-config keys such as
    "strike". Unknown keys are rejected. Custom disturbances and custom
    payoffs cannot be reconstructed from names and raise ConfigError.
    """
    known_extra = ("strike", "payoff")
    unknown = set(echo) - set(ECHO_KEYS) - set(known_extra)
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    if echo.get("payoff", "put") != "put":
        raise ConfigError("only the 'put' payoff can be reconstructed from a config mapping")
    kind = echo.get("problem", "x1")
    params = dict(echo.get("problem_params", {}))
    problem = make_integrand(kind, **params)
    for key in ("p_x", "p_w"):
        if echo.get(key, "one") == "custom":
            raise ConfigError(f"{key} is a custom disturbance and cannot be reconstructed")
    noise = NoiseSpec(
        delta1=float(echo.get("delta1", 0.0)),
        delta2=float(echo.get("delta2", 0.0)),
        p_x=get_disturbance(echo.get("p_x", "one")),
        p_w=get_disturbance(echo.get("p_w", "one")),
    )
    cfg = ExperimentConfig(
        problem=problem,
        noise=noise,
        n_list=tuple(echo.get("n_list", (4, 16, 64, 256))),
        replicates=int(echo.get("replicates", 2048)),
        refine=int(echo.get("refine", 1000)),
        seed=int(echo.get("seed", 0)),
        horizon=float(echo.get("horizon", 1.0)),
        moment=float(echo.get("moment", 2.0)),
        coupling=echo.get("coupling", "none"),
        threads=threads,
    )
    extras = {k: echo[k] for k in known_extra if k in echo}
    return cfg, extras


# --- parallel driver --------------------------------------------------------


def run_parallel(task: Callable, blocks: Sequence[tuple], threads: int) -> list:
    """Run task(*block) over replicate blocks, results in block order.

    Per-replicate values depend only on (seed, global replicate index), so
    any worker count yields bit-identical aggregates. Worker failures
    propagate with the offending block attached.
    """
    if threads <= 1 or len(blocks) <= 1:
        return [task(*b) for b in blocks]
    try:
        ctx = mp.get_context("fork")
    except ValueError:  # platforms without fork
        ctx = mp.get_context()
    with cf.ProcessPoolExecutor(max_workers=threads, mp_context=ctx) as ex:
        futs = [ex.submit(task, *b) for b in blocks]
        out = []
        for blk, fut in zip(blocks, futs):
            try:
                out.append(fut.result())
            except Exception as exc:
                raise RuntimeError(f"worker failed on replicate block {blk}: {exc}") from exc
    return out


def _make_blocks(m: int, threads: int) -> list:
    if threads <= 1:
        return [(0, m)]
    chunk = max(1, math.ceil(m / (threads * 4)))
    return [(j, min(j + chunk, m)) for j in range(0, m, chunk)]


# --- per-level worker -------------------------------------------------------


def _noise_terms(nz: NoiseSpec, d1, d2, x, t_all, tm, w_all, dw):
    """Weighted noise components [(weight, s, c), ...] for one trajectory."""
    terms = []
    px = None
    if d1 != 0.0:
        px = nz.p_x(tm, x)
        sp, cp = neumaier_dot_pair(px, dw)
        terms.append((d1, sp, cp))
    if d2 != 0.0:
        dz = np.diff(nz.p_w(t_all, w_all))
        sz, cz = neumaier_dot_pair(x, dz)
        terms.append((d2, sz, cz))
        if d1 != 0.0:
            spz, cpz = neumaier_dot_pair(px, dz)
            terms.append((d1 * d2, spz, cpz))
    return terms


def _level_block(
    cfg: ExperimentConfig,
    mode: str,
    n: int,
    n_index: int,
    d1: float,
    d2: float,
    strike: float,
    payoff_fn,
    j0: int,
    j1: int,
):
    """Per-replicate outputs for replicates [j0, j1) at one mesh size.

    mode "exact": deviations I_j - A_j against the x1 closed form.
    mode "reference": deviations A_ref_j - A_j against the fine-mesh
    exact-information quadrature of the same trajectory.
    mode "weak": pair of payoff arrays (coarse noisy, fine reference).
    """
    T = cfg.horizon
    prob = cfg.problem
    nz = cfg.noise
    m = j1 - j0

    if mode == "exact":
        t = np.linspace(0.0, T, n + 1)
        tm = t[:-1]
        devs = np.empty(m)
        for k in range(m):
            g = n_index * cfg.replicates + (j0 + k)
            # generator increments, not diffs of the stored path: their
            # compensated total matches w[-1] at machine precision, which
            # the telescoping identities need
            w, dw = sample_wiener_with_increments(cfg.seed, g, WIENER, n, T)
            x = w[:-1]
            s, c = neumaier_dot_pair(x, dw)
            a = s + c
            for wt, sa, ca in _noise_terms(nz, d1, d2, x, t, tm, w, dw):
                a += wt * (sa + ca)
            devs[k] = exact_integral_x1(w[-1], T) - a
        return devs

    L = cfg.refine
    F = L * n
    t = np.linspace(0.0, T, F + 1)
    tc = t[::L]
    tcm = tc[:-1]
    # sde kernel is a pure function of time; hoist it out of the replicate loop
    kern = np.exp(prob.mu * (T - t[:-1])) if prob.kind == "sde" else None
    devs = np.empty(m)
    f_co = np.empty(m)
    f_ref = np.empty(m)
    for k in range(m):
        g = n_index * cfg.replicates + (j0 + k)
        w = sample_wiener_fine(cfg.seed, g, WIENER, F, T)
        if prob.kind == "sde":
            w2 = sample_wiener_fine(cfg.seed, g, WIENER2, F, T)
            x_fine = kern * w2[:-1]
        elif prob.needs_w2:
            w2 = sample_wiener_fine(cfg.seed, g, WIENER2, F, T)
            x_fine = prob.values_at(t[:-1], T, w=w[:-1], w2=w2[:-1])
        elif prob.needs_poisson:
            arrivals = sample_poisson_arrivals(cfg.seed, g, POISSON, prob.rate, T)
            counts = np.searchsorted(arrivals, t[:-1], side="right")
            x_fine = prob.values_at(t[:-1], T, w=w[:-1], counts=counts)
        else:
            x_fine = prob.values_at(t[:-1], T, w=w[:-1])
        s_ref, c_ref = neumaier_dot_pair(x_fine, np.diff(w))
        wc = w[::L]
        xc = x_fine[::L]
        dwc = np.diff(wc)
        s0, c0 = neumaier_dot_pair(xc, dwc)
        terms = _noise_terms(nz, d1, d2, xc, tc, tcm, wc, dwc)
        if mode == "reference":
            # difference of unrounded pairs: exact for like magnitudes
            dev = (s_ref - s0) + (c_ref - c0)
            for wt, sa, ca in terms:
                dev -= wt * (sa + ca)
            devs[k] = dev
        else:  # weak
            a = s0 + c0
            for wt, sa, ca in terms:
                a += wt * (sa + ca)
            a_ref = s_ref + c_ref
            if payoff_fn is None:
                f_co[k] = payoff(a, strike)
                f_ref[k] = payoff(a_ref, strike)
            else:
                f_co[k] = payoff_fn(a)
                f_ref[k] = payoff_fn(a_ref)
    if mode == "reference":
        return devs
    return f_co, f_ref


# --- estimators -------------------------------------------------------------


def _effective_deltas(cfg: ExperimentConfig, n: int) -> tuple[float, float]:
    if cfg.coupling == "n^-1/2":
        d = float(n) ** -0.5
        return d, d
    return cfg.noise.delta1, cfg.noise.delta2


def _check_cap(cfg: ExperimentConfig, with_refine: bool) -> None:
    factor = cfg.refine if with_refine else 1
    worst = max(cfg.n_list) * factor
    if worst > cfg.fine_step_cap:
        raise ResourceLimitError(
            f"finest grid needs {worst} steps (= {max(cfg.n_list)} x {factor}), "
            f"cap is {cfg.fine_step_cap}"
        )


def _moment_norm(devs: np.ndarray, r: float) -> float:
    return float(np.mean(np.abs(devs) ** r) ** (1.0 / r))


def _bootstrap_strong(devs: np.ndarray, cfg: ExperimentConfig, n_index: int) -> float:
    rng = stream_generator(cfg.seed, n_index, BOOTSTRAP)
    idx = rng.integers(0, devs.size, size=(BOOTSTRAP_RESAMPLES, devs.size))
    boots = np.mean(np.abs(devs[idx]) ** cfg.moment, axis=1) ** (1.0 / cfg.moment)
    return float(np.std(boots, ddof=1))


def _bootstrap_weak(diffs: np.ndarray, cfg: ExperimentConfig, n_index: int) -> float:
    rng = stream_generator(cfg.seed, n_index, BOOTSTRAP)
    idx = rng.integers(0, diffs.size, size=(BOOTSTRAP_RESAMPLES, diffs.size))
    boots = np.abs(np.mean(diffs[idx], axis=1))
    return float(np.std(boots, ddof=1))


def fit_slope(ns: Sequence[float], errors: Sequence[float]) -> float:
    """Least-squares slope of log error against log n, sign-flipped.

    A slope of 0.5 means the error decays like n^(-1/2).
    """
    ns = np.asarray(ns, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if ns.ndim != 1 or ns.shape != errors.shape:
        raise ContractError("need equal-length 1-d sequences")
    if ns.size < 3:
        raise ContractError(f"slope fit needs at least 3 levels, got {ns.size}")
    if np.any(ns <= 0.0) or np.any(np.diff(ns) <= 0.0):
        raise DomainError("mesh sizes must be positive and strictly increasing")
    if np.any(errors <= 0.0) or not np.all(np.isfinite(errors)):
        raise DomainError("errors must be positive and finite for a log-log fit")
    return float(-np.polyfit(np.log(ns), np.log(errors), 1)[0])


def _slope_or_nan(per_n: tuple) -> float:
    if len(per_n) >= 3 and all(le.error > 0.0 and math.isfinite(le.error) for le in per_n):
        return fit_slope([le.n for le in per_n], [le.error for le in per_n])
    return float("nan")


# --- experiment entry points -----------------------------------------------


def _strong_levels(cfg: ExperimentConfig, mode: str) -> tuple:
    per = []
    for i, n in enumerate(cfg.n_list):
        d1, d2 = _effective_deltas(cfg, n)
        task = partial(_level_block, cfg, mode, n, i, d1, d2, 0.0, None)
        parts = run_parallel(task, _make_blocks(cfg.replicates, cfg.threads), cfg.threads)
        devs = np.concatenate(parts)
        per.append(
            LevelEstimate(n, _moment_norm(devs, cfg.moment), _bootstrap_strong(devs, cfg, i))
        )
    return tuple(per)


def strong_error_exact_x1(cfg: ExperimentConfig) -> ErrorReport:
    """Strong error of the x1 problem against its closed-form integral."""
    if cfg.problem.kind != "x1":
        raise ConfigError(f"exact-oracle runs need the x1 problem, got {cfg.problem.kind!r}")
    _check_cap(cfg, with_refine=False)
    per = _strong_levels(cfg, "exact")
    return ErrorReport("strong_exact", per, _slope_or_nan(per), config_echo(cfg))


def strong_error_reference(cfg: ExperimentConfig) -> ErrorReport:
    """Strong error against the fine-mesh exact-information quadrature."""
    _check_cap(cfg, with_refine=True)
    per = _strong_levels(cfg, "reference")
    return ErrorReport("strong_reference", per, _slope_or_nan(per), config_echo(cfg))


def strong_error(cfg: ExperimentConfig) -> ErrorReport:
    """Dispatch: closed-form oracle for x1, reference mesh otherwise."""
    if cfg.problem.kind == "x1":
        return strong_error_exact_x1(cfg)
    return strong_error_reference(cfg)


def weak_error(cfg: ExperimentConfig, strike: float = 2.0, payoff_fn=None) -> ErrorReport:
    """Weak error |mean f(A_n) - mean f(A_ref)| over shared trajectories.

    f defaults to the put payoff at the given strike; payoff_fn overrides it
    (a custom payoff_fn must be picklable to run with threads > 1).
    """
    if not math.isfinite(strike):
        raise ConfigError(f"strike must be finite, got {strike}")
    _check_cap(cfg, with_refine=True)
    per = []
    for i, n in enumerate(cfg.n_list):
        d1, d2 = _effective_deltas(cfg, n)
        task = partial(_level_block, cfg, "weak", n, i, d1, d2, strike, payoff_fn)
        parts = run_parallel(task, _make_blocks(cfg.replicates, cfg.threads), cfg.threads)
        f_co = np.concatenate([p[0] for p in parts])
        f_ref = np.concatenate([p[1] for p in parts])
        diffs = f_co - f_ref
        est = abs(float(np.mean(diffs)))
        per.append(LevelEstimate(n, est, _bootstrap_weak(diffs, cfg, i)))
    per = tuple(per)
    extra = {"strike": float(strike), "payoff": "put" if payoff_fn is None else "custom"}
    return ErrorReport("weak", per, _slope_or_nan(per), config_echo(cfg, **extra))


def noise_regime_sweep(
    cfg: ExperimentConfig, regime: str, deltas: Sequence[float] | None = None
) -> list:
    """Run the configured problem across a noise regime.

    floor:   fixed deltas (one report per delta, both channels at delta),
             p_w must be K2-class.
    coupled: delta1 = delta2 = n^(-1/2) per mesh (one report), p_w K2-class.
    blowup:  fixed delta2 > 0 from the config (one report); p_w must be
             K2bar- or K3-class, the regimes whose worst-case bounds grow
             with n.
    """
    if regime not in REGIMES:
        raise ConfigError(f"unknown regime {regime!r}; regimes: {REGIMES}")
    tag = cfg.noise.p_w.class_tag
    if regime in ("floor", "coupled"):
        if not tag.smooth:
            raise ConfigError(
                f"{regime} regime needs a K2-class p_w, got {cfg.noise.p_w.name!r} "
                f"({tag.family})"
            )
    if regime == "floor":
        ds = DEFAULT_DELTA_SWEEP if deltas is None else tuple(float(d) for d in deltas)
        for d in ds:
            if not (math.isfinite(d) and d >= 0.0):
                raise ConfigError(f"sweep deltas must be finite and >= 0, got {d}")
        reports = []
        for d in ds:
            nz = NoiseSpec(d, d, cfg.noise.p_x, cfg.noise.p_w)
            reports.append(strong_error(replace(cfg, noise=nz, coupling="none")))
        return reports
    if deltas is not None:
        raise ConfigError(f"the {regime} regime does not take a delta sweep")
    if regime == "coupled":
        return [strong_error(replace(cfg, coupling="n^-1/2"))]
    # blowup
    if not tag.blowup_eligible:
        raise ConfigError(
            f"blowup regime needs a K2bar- or K3-class p_w, got {cfg.noise.p_w.name!r} "
            f"({tag.family})"
        )
    if cfg.noise.delta2 <= 0.0:
        raise ConfigError("blowup regime needs delta2 > 0")
    return [strong_error(replace(cfg, coupling="none"))]
