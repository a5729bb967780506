"""Exact Monte Carlo of finite-activity jump diffusions and pathwise
stochastic exponentials.

No time discretization: a terminal functional of a finite-activity path is a
measurable function of the Brownian terminal value, the jump list and the
scheduled-jump draws, all of which are sampled exactly.  Paths are keyed by
(seed, path index) through fixed-size tiles of counter-based streams, so
identical configurations give bit-identical output for any degree of
parallelism.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numkernel import NumericalError, RandomStream
from .levycalc import (
    AtomJumps,
    AtomLaw,
    GaussianJumps,
    GaussianLaw,
    LevyTriplet,
    PredictableJumpSchedule,
    RepresentingFunction,
    _sched_or_empty,
    mult_compensator,
)

__all__ = [
    "UnsupportedJumpMeasure",
    "IncompatibleJump",
    "SimConfig",
    "PathRecord",
    "PathBatch",
    "simulate",
    "pathwise_stoch_exp",
    "stoch_exp_terminal",
    "estimate",
    "sign_frequency",
    "empirical_char_fn",
    "ImportanceResult",
    "importance_weighted",
]

TILE = 4096


class UnsupportedJumpMeasure(NumericalError):
    """Simulation needs a finite-activity base measure; transform pathwise instead."""


class IncompatibleJump(NumericalError):
    """A realized jump fell outside the representing function's domain."""


@dataclass(frozen=True)
class SimConfig:
    n_paths: int
    seed: int
    horizon: float
    antithetic: bool = False

    def __post_init__(self):
        if self.n_paths < 1:
            raise ValueError("n_paths must be at least 1")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")


@dataclass(frozen=True)
class PathRecord:
    """Everything needed to evaluate any xi o X and E(xi o X) on one path.

    Sizes are i.i.d. given the count, so pairing the sorted times with the
    draw-order sizes is a valid joint sample of the path.
    """

    brownian_terminal: float
    jump_times: np.ndarray
    jump_sizes: np.ndarray
    scheduled_jumps: np.ndarray


class PathBatch:
    """Struct-of-arrays path storage; records() iterates PathRecord views."""

    def __init__(self, brownian, counts, sizes, times, sched_draws, horizon):
        self.brownian = brownian
        self.counts = counts
        self.sizes = sizes
        self.times = times
        self.offsets = np.concatenate([[0], np.cumsum(counts)])
        self.sched_draws = sched_draws  # shape (n_paths, n_scheduled)
        self.horizon = horizon

    def __len__(self):
        return len(self.brownian)

    def record(self, i: int) -> PathRecord:
        lo, hi = self.offsets[i], self.offsets[i + 1]
        return PathRecord(
            float(self.brownian[i]),
            self.times[lo:hi],
            self.sizes[lo:hi],
            self.sched_draws[i],
        )

    def records(self):
        for i in range(len(self)):
            yield self.record(i)


def _law_draws(law, u: np.ndarray) -> np.ndarray:
    from scipy.special import ndtri

    if isinstance(law, GaussianLaw):
        return law.mean + math.sqrt(law.var) * ndtri(u)
    if isinstance(law, AtomLaw):
        sizes = np.array([s for s, _ in law.atoms])
        cum = np.cumsum([p for _, p in law.atoms])
        return sizes[np.searchsorted(cum, u, side="right").clip(0, len(sizes) - 1)]
    raise UnsupportedJumpMeasure(f"cannot sample law {type(law)!r}")


def _jump_sampler(jumps):
    from scipy.special import ndtri

    if isinstance(jumps, GaussianJumps):
        lam = jumps.intensity
        draw = lambda u: jumps.mean + math.sqrt(jumps.var) * ndtri(u)
        return lam, draw
    if isinstance(jumps, AtomJumps):
        if not jumps.atoms:
            return 0.0, lambda u: np.empty(0)
        sizes = np.array([s for s, _ in jumps.atoms])
        weights = np.array([w for _, w in jumps.atoms])
        lam = float(weights.sum())
        cum = np.cumsum(weights) / lam if lam > 0 else np.ones_like(weights)
        draw = lambda u: sizes[np.searchsorted(cum, u, side="right").clip(0, len(sizes) - 1)]
        return lam, draw
    raise UnsupportedJumpMeasure(
        f"simulate() needs GaussianJumps or AtomJumps, got {type(jumps).__name__}; "
        "simulate the base process and transform pathwise"
    )


def simulate(t: LevyTriplet, sched: PredictableJumpSchedule | None,
             cfg: SimConfig) -> PathBatch:
    """Exact terminal-state sampling of the driving process plus schedule."""
    sched = _sched_or_empty(sched)
    lam, draw_sizes = _jump_sampler(t.jumps)
    T = cfg.horizon
    sigma = math.sqrt(t.sigma2)
    root = RandomStream(cfg.seed)

    n_base = (cfg.n_paths + 1) // 2 if cfg.antithetic else cfg.n_paths
    sched_times = [tau for tau, _ in sched.entries if tau <= T]
    sched_laws = [law for tau, law in sched.entries if tau <= T]

    brownian = np.empty(n_base)
    counts = np.empty(n_base, dtype=np.int64)
    sizes_parts = []
    times_parts = []
    sched_parts = [np.empty(n_base) for _ in sched_times]

    for tile_start in range(0, n_base, TILE):
        m = min(TILE, n_base - tile_start)
        tile = tile_start // TILE
        sl = slice(tile_start, tile_start + m)
        brownian[sl] = sigma * math.sqrt(T) * root.child("bm", tile).normals(m)
        if lam > 0:
            cnt = root.child("njumps", tile).poisson_batch(m, lam * T)
        else:
            cnt = np.zeros(m, dtype=np.int64)
        counts[sl] = cnt
        total = int(cnt.sum())
        if total:
            su = root.child("jsizes", tile).uniforms(total)
            sizes_parts.append(draw_sizes(su))
            raw_times = T * root.child("jtimes", tile).uniforms(total)
            # sort within each path segment
            owner = np.repeat(np.arange(m), cnt)
            times_parts.append(raw_times[np.lexsort((raw_times, owner))])
        for k, law in enumerate(sched_laws):
            u = root.child("sched", k, tile).uniforms(m)
            sched_parts[k][sl] = _law_draws(law, u)

    sizes = np.concatenate(sizes_parts) if sizes_parts else np.empty(0)
    times = np.concatenate(times_parts) if times_parts else np.empty(0)
    sched_draws = (np.column_stack(sched_parts) if sched_times
                   else np.empty((n_base, 0)))

    if cfg.antithetic:
        idx = np.repeat(np.arange(n_base), 2)[: cfg.n_paths]
        signs = np.where(np.arange(cfg.n_paths) % 2 == 0, 1.0, -1.0)
        counts_full = counts[idx]
        rep_offsets = np.concatenate([[0], np.cumsum(counts)])
        take = np.concatenate([
            np.arange(rep_offsets[i], rep_offsets[i + 1]) for i in idx
        ]) if sizes.size else np.empty(0, dtype=np.int64)
        return PathBatch(
            brownian[idx] * signs,
            counts_full,
            sizes[take] if sizes.size else sizes,
            times[take] if times.size else times,
            sched_draws[idx],
            T,
        )
    return PathBatch(brownian, counts, sizes, times, sched_draws, T)


def _segment_products(values: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """Per-path product over a ragged array, robust to empty segments."""
    n = len(counts)
    total = len(values)
    if total == 0:
        return np.ones(n, dtype=complex)
    offsets = np.concatenate([[0], np.cumsum(counts)])
    starts = offsets[:-1] + np.arange(n)
    padded = np.ones(total + n, dtype=complex)
    mask = np.ones(total + n, dtype=bool)
    mask[starts] = False
    padded[mask] = values
    return np.multiply.reduceat(padded, starts)


def stoch_exp_terminal(xi: RepresentingFunction, t: LevyTriplet,
                       batch: PathBatch, t_end: float | None = None,
                       dp_rep: RepresentingFunction | None = None) -> np.ndarray:
    """Pathwise E(xi o X) at the horizon for every path in the batch.

    The continuous part is xi'(0)(mu0 T + sigma W_T) + (1/2) xi''(0) sigma2 T
    with mu0 the drift re-expressed under the zero truncation; jumps
    contribute prod (1 + xi(jump)).
    """
    T = batch.horizon if t_end is None else t_end
    if t_end is not None and abs(t_end - batch.horizon) > 1e-12:
        raise ValueError("batch was simulated for a different horizon")
    mu0 = t.drift_no_compensation
    cont = (xi.d0 * (mu0 * T + batch.brownian)
            + 0.5 * (xi.d20 - xi.d0 * xi.d0) * t.sigma2 * T)
    jump_vals = np.asarray(xi(batch.sizes), dtype=complex)
    if np.any(np.isnan(jump_vals.real)):
        raise IncompatibleJump(f"{xi.label} undefined on a realized jump")
    prods = _segment_products(1.0 + jump_vals, batch.counts)
    rep_dp = dp_rep if dp_rep is not None else xi
    for k in range(batch.sched_draws.shape[1]):
        vals = np.asarray(rep_dp(batch.sched_draws[:, k]), dtype=complex)
        if np.any(np.isnan(vals.real)):
            raise IncompatibleJump(f"{rep_dp.label} undefined on a scheduled jump")
        prods = prods * (1.0 + vals)
    return np.exp(cont) * prods


def pathwise_stoch_exp(xi: RepresentingFunction, t: LevyTriplet,
                       path: PathRecord, t_end: float,
                       dp_rep: RepresentingFunction | None = None) -> complex:
    """Exact pathwise stochastic exponential of xi o X on a single path."""
    batch = PathBatch(
        np.array([path.brownian_terminal]),
        np.array([len(path.jump_sizes)], dtype=np.int64),
        np.asarray(path.jump_sizes, dtype=float),
        np.asarray(path.jump_times, dtype=float),
        np.asarray(path.scheduled_jumps, dtype=float).reshape(1, -1),
        t_end,
    )
    return complex(stoch_exp_terminal(xi, t, batch, t_end, dp_rep=dp_rep)[0])


def estimate(values) -> tuple:
    """Sample mean and standard error; complex samples use the total spread."""
    v = np.asarray(values)
    n = v.size
    if n < 2:
        raise ValueError("need at least 2 samples")
    mean = complex(v.mean())
    spread = float(np.sum(np.abs(v - mean) ** 2) / (n - 1))
    se = math.sqrt(spread / n)
    if np.isrealobj(v):
        return mean.real, se
    return mean, se


def sign_frequency(values) -> tuple:
    """Frequency of strictly negative values with its binomial standard error."""
    v = np.asarray(values, dtype=float)
    n = v.size
    p_hat = float(np.mean(v < 0.0))
    se = math.sqrt(max(p_hat * (1.0 - p_hat), 1.0 / n) / n)
    return p_hat, se


def empirical_char_fn(values, u_grid) -> tuple:
    """Empirical E[exp(iu v)] on a u grid, with per-point standard errors."""
    v = np.asarray(values, dtype=float)
    u = np.asarray(u_grid, dtype=float)
    n = v.size
    phases = np.exp(1j * np.outer(u, v))
    phi_hat = phases.mean(axis=1)
    spread = np.sum(np.abs(phases - phi_hat[:, None]) ** 2, axis=1) / (n - 1)
    return phi_hat, np.sqrt(spread / n)


@dataclass(frozen=True)
class ImportanceResult:
    mean: complex
    se: float
    weight_mean: float
    weight_se: float


def importance_weighted(tilt, functional, cfg: SimConfig) -> ImportanceResult:
    """Estimate E_Q[functional] as E_P[M_T functional] under a Girsanov tilt.

    functional maps a PathBatch to an array of per-path values.  The weights
    M_T are pathwise stochastic exponentials of the tilt entry divided by its
    multiplicative compensator; their mean is reported and should be near 1.
    """
    batch = simulate(tilt.underlying, tilt.sched, cfg)
    comp = mult_compensator(tilt.psi, tilt.underlying, tilt.sched, cfg.horizon)
    weights = stoch_exp_terminal(tilt.psi, tilt.underlying, batch) / comp
    if np.max(np.abs(weights.imag)) > 1e-12:
        raise NumericalError("importance weights must be real")
    weights = weights.real
    values = np.asarray(functional(batch))
    mean, se = estimate(weights * values)
    wmean, wse = estimate(weights)
    return ImportanceResult(mean, se, float(wmean), wse)
