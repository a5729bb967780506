"""Mellin and Fourier analysis of signed stochastic exponentials.

A signed exponential E(Y) with Y = xi o X can cross zero when jumps take
1 + xi below zero.  Its sign-split power transforms

    g_plus(alpha)  = E[|E(Y)_T|^alpha 1{E(Y)_T > 0}]
    g_minus(alpha) = E[|E(Y)_T|^alpha 1{E(Y)_T < 0}]

follow from the multiplicative compensators of the two branch entries
|1 + id|^alpha 1{id != -1} - 1 and |1 + id|^alpha sign(1 + id) - 1 applied to
Y.  On the imaginary axis alpha = iu they are conditional Fourier transforms
of log |E(Y)_T|, inverted here into sign-conditional subdensities and the
terminal wealth distribution of the mean-variance case study.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .numkernel import (
    DEFAULT_QUAD,
    DensityGrid,
    NumericalError,
    QuadratureSpec,
    integrate,
    invert_characteristic,
    normal_pdf,
)
from .levycalc import (
    AtomJumps,
    AtomLaw,
    GaussianJumps,
    GaussianLaw,
    LevyTriplet,
    PredictableJumpSchedule,
    RepresentingFunction,
    Truncation,
    _sched_or_empty,
    compose,
    drift_rate,
    exp_return,
    exponential,
    jump_total,
    modulus_power,
    mult_compensator,
    pushforward_triplet,
    rf_product,
    signed_power,
)

__all__ = [
    "ConditioningOnNull",
    "DegenerateDenominator",
    "MVParams",
    "SignedMellinModel",
    "GridSpec",
    "mellin_drift",
    "branch_compensator",
    "g_plus",
    "g_minus",
    "phi_plus",
    "phi_minus",
    "phi_grid",
    "subdensities",
    "terminal_wealth_density",
    "mv_optimal_fraction",
    "mv_power_rate",
    "mv_flip_rate",
    "mv_g_closed",
    "sign_boundary",
]


class ConditioningOnNull(NumericalError):
    """Conditioning on a sign event of probability zero."""


class DegenerateDenominator(NumericalError):
    """Second-moment rate vanished; no optimal fraction exists."""


@dataclass(frozen=True)
class MVParams:
    """Parameters of the mean-variance case study.

    Log price X is Levy with zero-truncation drift mu, volatility sigma and
    compound Poisson jumps with rate lam and N(0, gamma^2) sizes, over a
    horizon of T years.
    """

    mu: float = 0.2
    sigma: float = 0.2
    lam: float = 1.0
    gamma: float = 0.1
    T: float = 1.0

    def __post_init__(self):
        if self.sigma < 0 or self.lam < 0 or not self.gamma > 0 or not self.T > 0:
            raise ValueError("need sigma >= 0, lam >= 0, gamma > 0, T > 0")

    def triplet(self) -> LevyTriplet:
        return LevyTriplet(
            self.mu, self.sigma**2,
            GaussianJumps(self.lam, 0.0, self.gamma**2),
            Truncation.zero(),
        )


@dataclass(frozen=True)
class SignedMellinModel:
    """A signed stochastic exponential E(rep o X) observed at the horizon."""

    underlying: LevyTriplet
    rep: RepresentingFunction
    sched: PredictableJumpSchedule | None = None
    horizon: float = 1.0

    def __post_init__(self):
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")

    @classmethod
    def from_mv(cls, p: MVParams) -> "SignedMellinModel":
        return cls(p.triplet(), exp_return(mv_optimal_fraction(p)), None, p.T)


@dataclass(frozen=True)
class GridSpec:
    """Inversion grids: x covers the log modulus, u the Fourier window.

    The sign-conditional laws have an exp(x) left tail in log-modulus space
    (jumps landing near the sign boundary), so the x window reaches far left;
    [-16, 3] keeps the uncaptured tail mass below 1e-5 of each branch.
    """

    x_min: float = -16.0
    x_max: float = 3.0
    n_x: int = 2048
    u_max: float = 200.0
    n_u: int = 2**14

    def __post_init__(self):
        if not (self.x_max > self.x_min and self.n_x >= 8):
            raise ValueError("bad x grid")
        if not (self.u_max > 0 and self.n_u >= 64):
            raise ValueError("bad u grid")


def _branch_entry(alpha, branch: int) -> RepresentingFunction:
    if branch == 1:
        return modulus_power(alpha)
    if branch == 2:
        return signed_power(alpha)
    raise ValueError("branch must be 1 or 2")


@lru_cache(maxsize=64)
def _image_triplet(model: SignedMellinModel) -> LevyTriplet:
    # h = id 1{|id| <= 1} on the image process
    return pushforward_triplet(model.rep, model.underlying,
                               trunc=Truncation.bounded(1.0))


def mellin_drift(model: SignedMellinModel, alpha, branch: int,
                 quad: QuadratureSpec = DEFAULT_QUAD) -> complex:
    """Drift rate of the branch entry applied to Y = rep o X (qc part only).

    alpha B^{Y[h]} + (alpha/2)(alpha - 1) [Y,Y]^c rate + int (xi_j - alpha h) d nu^Y
    with h = id 1{|id| <= 1}; the schedule is handled separately.
    """
    return drift_rate(_branch_entry(alpha, branch), _image_triplet(model), quad)


def branch_compensator(model: SignedMellinModel, alpha, branch: int,
                       quad: QuadratureSpec = DEFAULT_QUAD) -> complex:
    """Multiplicative compensator of the branch entry applied to Y at T."""
    entry = _branch_entry(alpha, branch)
    return mult_compensator(
        entry, _image_triplet(model), model.sched, model.horizon,
        dp_rep=compose(entry, model.rep), quad=quad,
    )


def g_plus(model: SignedMellinModel, alpha,
           quad: QuadratureSpec = DEFAULT_QUAD) -> complex:
    """E[|E(Y)_T|^alpha on the positive sign event]."""
    return 0.5 * (branch_compensator(model, alpha, 1, quad)
                  + branch_compensator(model, alpha, 2, quad))


def g_minus(model: SignedMellinModel, alpha,
            quad: QuadratureSpec = DEFAULT_QUAD) -> complex:
    """E[|E(Y)_T|^alpha on the negative sign event]."""
    return 0.5 * (branch_compensator(model, alpha, 1, quad)
                  - branch_compensator(model, alpha, 2, quad))


def phi_plus(model: SignedMellinModel, u: float) -> complex:
    """Conditional characteristic function of log|E(Y)_T| given E(Y)_T > 0."""
    g0 = g_plus(model, 0.0).real
    if not g0 > 1e-14:
        raise ConditioningOnNull("P[E(Y)_T > 0] vanishes")
    return g_plus(model, 1j * u) / g0


def phi_minus(model: SignedMellinModel, u: float) -> complex:
    """Conditional characteristic function of log|E(Y)_T| given E(Y)_T < 0."""
    g0 = g_minus(model, 0.0).real
    if not g0 > 1e-14:
        raise ConditioningOnNull("P[E(Y)_T < 0] vanishes")
    return g_minus(model, 1j * u) / g0


# ---------------------------------------------------------------------------
# Batch evaluation of g(iu) on dense grids
# ---------------------------------------------------------------------------

_LOG_FLOOR = -45.0  # e^(-45) ~ 3e-20, beyond any tolerance in play


def _filon_moments(theta: np.ndarray):
    """M_m(theta) = int_{-1}^{1} t^m e^{i theta t} dt for m = 0, 1, 2."""
    theta = np.asarray(theta, dtype=float)
    small = np.abs(theta) < 0.01
    t2 = theta * theta
    m0 = np.where(small, 2.0 - t2 / 3.0 + t2 * t2 / 60.0, 0.0)
    m1i = np.where(small, 2.0 * (theta / 3.0 - theta * t2 / 30.0), 0.0)
    m2 = np.where(small, 2.0 * (1.0 / 3.0 - t2 / 10.0 + t2 * t2 / 168.0), 0.0)
    big = ~small
    if np.any(big):
        th = theta[big]
        s, c = np.sin(th), np.cos(th)
        m0b = 2.0 * s / th
        m1b = 2.0 * (s - th * c) / (th * th)
        m2b = 2.0 * ((th * th - 2.0) * s + 2.0 * th * c) / (th * th * th)
        m0 = m0.copy(); m1i = m1i.copy(); m2 = m2.copy()
        m0[big] = m0b
        m1i[big] = m1b
        m2[big] = m2b
    return m0, 1j * m1i, m2


def _filon_transform(ell0: float, h: float, w: np.ndarray,
                     u: np.ndarray) -> np.ndarray:
    """int w(l) e^{iul} dl for w sampled on the uniform grid ell0 + k h.

    Quadratic interpolation per panel; exact in the oscillation, so the error
    is set by the panel width alone, independent of u.
    """
    n = len(w)
    if n < 3 or n % 2 == 0:
        raise ValueError("need an odd number (>= 3) of weight samples")
    centers = ell0 + h * (2.0 * np.arange((n - 1) // 2) + 1.0)
    a0 = w[1::2]
    a1 = 0.5 * (w[2::2] - w[:-1:2])
    a2 = 0.5 * (w[2::2] - 2.0 * w[1::2] + w[:-1:2])
    coeff = np.column_stack([a0, a1, a2]).astype(complex)

    out = np.empty(len(u), dtype=complex)
    block = max(1, 2**21 // max(1, len(centers)))
    for i in range(0, len(u), block):
        uu = u[i : i + block]
        m0, m1, m2 = _filon_moments(uu * h)
        phases = np.exp(1j * np.outer(uu, centers))
        proj = phases @ coeff  # (block, 3)
        out[i : i + block] = h * (proj[:, 0] * m0 + proj[:, 1] * m1
                                  + proj[:, 2] * m2)
    return out


def _monotone_pieces(rep: RepresentingFunction, window):
    lo, hi = window
    roots = [r for r in rep.preimages(-1.0 + 0j) if lo < r < hi]
    edges = [lo, *sorted(roots), hi]
    return list(zip(edges[:-1], edges[1:])), set(roots)


def _log_modulus_transforms(rep: RepresentingFunction, mean: float, var: float,
                            scale: float, u: np.ndarray,
                            n_grid: int = 2**13 + 1):
    """(T_plus(u), T_minus(u)) with T_s(u) = int_{s(1+rep) > 0} |1+rep|^{iu} dens.

    dens is scale * N(mean, var).  Works for strictly monotone rep with an
    analytic inverse and derivative; the integral is rewritten in
    log-modulus space where the oscillation is uniform and handled by
    oscillation-exact panels.
    """
    half = 8.5 * math.sqrt(var)
    window = (mean - half, mean + half)
    pieces, roots = _monotone_pieces(rep, window)
    t_pos = np.zeros(len(u), dtype=complex)
    t_neg = np.zeros(len(u), dtype=complex)

    for p_lo, p_hi in pieces:
        mid = 0.5 * (p_lo + p_hi)
        one_plus_mid = 1.0 + float(np.real(rep(np.array([mid]))[0]))
        s = 1.0 if one_plus_mid > 0 else -1.0

        def lam(x):
            v = abs(1.0 + float(np.real(rep(np.array([x]))[0])))
            return math.log(v) if v > 0 else _LOG_FLOOR

        la = _LOG_FLOOR if p_lo in roots else lam(p_lo)
        lb = _LOG_FLOOR if p_hi in roots else lam(p_hi)
        ell_lo, ell_hi = min(la, lb), max(la, lb)
        ell_lo = max(ell_lo, _LOG_FLOOR)
        # stay a hair inside so exp/log round trips cannot leave the domain
        ell_hi -= 1e-9 * (1.0 + abs(ell_hi))
        if ell_hi - ell_lo < 1e-12:
            continue
        ell = np.linspace(ell_lo, ell_hi, n_grid)
        y = s * np.exp(ell) - 1.0
        x = np.array([rep.inverse_at(v)[0] for v in y])
        dxdl = np.exp(ell) / np.abs(np.asarray(rep.deriv(x), dtype=float))
        w = scale * normal_pdf(x, mean, var) * dxdl
        vals = _filon_transform(ell[0], ell[1] - ell[0], w, u)
        if s > 0:
            t_pos += vals
        else:
            t_neg += vals
    return t_pos, t_neg


def _fast_path_available(model: SignedMellinModel) -> bool:
    if model.rep.inverse_at is None or model.rep.deriv is None:
        return False
    if not isinstance(model.underlying.jumps, (GaussianJumps, AtomJumps)):
        return False
    if model.sched is not None:
        for _, law in model.sched.entries:
            if not isinstance(law, (GaussianLaw, AtomLaw)):
                return False
    return True


def _atom_transforms(rep, atoms, u):
    t_pos = np.zeros(len(u), dtype=complex)
    t_neg = np.zeros(len(u), dtype=complex)
    for size, weight in atoms:
        one_plus = 1.0 + float(np.real(rep(np.array([size]))[0]))
        if one_plus == 0.0:
            continue
        phase = np.exp(1j * u * math.log(abs(one_plus)))
        if one_plus > 0:
            t_pos += weight * phase
        else:
            t_neg += weight * phase
    return t_pos, t_neg


def _g_grid_fast(model: SignedMellinModel, u: np.ndarray):
    """(g_plus(iu), g_minus(iu)) arrays on a non-negative u grid."""
    trip = _image_triplet(model)
    zero_drift = trip.drift_no_compensation
    sig2 = trip.sigma2
    lam_tot = jump_total(model.underlying.jumps)
    T = model.horizon

    # beyond u_cut the diffusion factor damps |g| below 1e-18; skip the jump CF
    if sig2 > 0:
        u_cut = math.sqrt(2.0 * (42.0 + 2.0 * lam_tot * T) / (sig2 * T))
    else:
        u_cut = math.inf
    live = u <= u_cut
    ul = u[live]

    jumps = model.underlying.jumps
    if isinstance(jumps, GaussianJumps) and jumps.intensity > 0:
        t_pos, t_neg = _log_modulus_transforms(
            model.rep, jumps.mean, jumps.var, jumps.intensity, ul)
    elif isinstance(jumps, AtomJumps):
        t_pos, t_neg = _atom_transforms(model.rep, jumps.atoms, ul)
    else:
        t_pos = np.zeros(len(ul), complex)
        t_neg = np.zeros(len(ul), complex)

    al = 1j * ul
    base = al * zero_drift + 0.5 * al * (al - 1.0) * sig2
    b1 = base + (t_pos + t_neg - lam_tot)
    b2 = base + (t_pos - t_neg - lam_tot)
    e1 = np.exp(b1 * T)
    e2 = np.exp(b2 * T)

    for tau, law in _sched_or_empty(model.sched).upto(T):
        if isinstance(law, GaussianLaw):
            p_pos, p_neg = _log_modulus_transforms(
                model.rep, law.mean, law.var, 1.0, ul)
        else:
            p_pos, p_neg = _atom_transforms(model.rep, law.atoms, ul)
        e1 = e1 * (p_pos + p_neg)
        e2 = e2 * (p_pos - p_neg)

    gp = np.zeros(len(u), complex)
    gm = np.zeros(len(u), complex)
    gp[live] = 0.5 * (e1 + e2)
    gm[live] = 0.5 * (e1 - e2)
    return gp, gm


def _g_grid_slow(model: SignedMellinModel, u: np.ndarray):
    gp = np.array([g_plus(model, 1j * v) for v in u], dtype=complex)
    gm = np.array([g_minus(model, 1j * v) for v in u], dtype=complex)
    return gp, gm


def phi_grid(model: SignedMellinModel, sign: int, u) -> np.ndarray:
    """Conditional characteristic function on an arbitrary u grid.

    Vectorized companion of phi_plus / phi_minus; negative u filled in by
    conjugate symmetry.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    uu, inverse = np.unique(np.abs(u), return_inverse=True)
    if _fast_path_available(model):
        gp, gm = _g_grid_fast(model, uu)
    else:
        gp, gm = _g_grid_slow(model, uu)
    g = gp if sign > 0 else gm
    zero_idx = np.searchsorted(uu, 0.0)
    if zero_idx < len(uu) and uu[zero_idx] == 0.0:
        g0 = g[zero_idx].real
    else:
        g0 = (_g_grid_fast(model, np.array([0.0]))[0 if sign > 0 else 1][0].real
              if _fast_path_available(model)
              else (g_plus(model, 0.0) if sign > 0 else g_minus(model, 0.0)).real)
    if not g0 > 1e-14:
        raise ConditioningOnNull(
            f"P[E(Y)_T {'>' if sign > 0 else '<'} 0] vanishes")
    phi = g[inverse] / g0
    neg = u < 0
    phi[neg] = np.conj(phi[neg])
    return phi


def _sign_mass(model: SignedMellinModel, sign: int) -> float:
    return float((g_plus(model, 0.0) if sign > 0 else g_minus(model, 0.0)).real)


def _zero_grid(grid: GridSpec) -> DensityGrid:
    x = np.linspace(grid.x_min, grid.x_max, grid.n_x)
    return DensityGrid(x, np.zeros(grid.n_x), 0.0)


def subdensities(model: SignedMellinModel,
                 grid: GridSpec = GridSpec()) -> tuple:
    """Sign-conditional subdensities of log |E(Y)_T|, (negative, positive).

    Each subdensity integrates to the corresponding sign probability; the
    masses are checked against g(0) within 1e-3.
    """
    return _subdensities_cached(model, grid)


@lru_cache(maxsize=8)
def _subdensities_cached(model: SignedMellinModel, grid: GridSpec) -> tuple:
    out = []
    for sign in (-1, +1):
        mass_target = _sign_mass(model, sign)
        if mass_target <= 1e-14:
            out.append(_zero_grid(grid))
            continue
        phi = lambda us, s=sign: phi_grid(model, s, us)
        dens = invert_characteristic(
            phi, grid.u_max, grid.n_u, (grid.x_min, grid.x_max, grid.n_x))
        scaled = dens.scaled(mass_target)
        if abs(scaled.mass - mass_target) > 1e-3:
            raise NumericalError(
                f"subdensity mass {scaled.mass:.6f} disagrees with the sign "
                f"probability {mass_target:.6f} beyond 1e-3")
        out.append(scaled)
    return out[0], out[1]


def _window_mass(dens: DensityGrid, x_lo: float, x_hi: float) -> float:
    """Integral of a tabulated density over [x_lo, x_hi] within its grid."""
    if x_hi <= dens.x[0] or x_lo >= dens.x[-1]:
        return 0.0
    lo = max(x_lo, float(dens.x[0]))
    hi = min(x_hi, float(dens.x[-1]))
    xs = np.linspace(lo, hi, 4097)
    return float(np.trapezoid(np.interp(xs, dens.x, dens.p), xs))


def terminal_wealth_density(model: SignedMellinModel,
                            grid: GridSpec = GridSpec(),
                            wealth_grid: tuple = (-12.0, 3.0, 1024)) -> DensityGrid:
    """Density of 1 - E(Y)_T on a uniform wealth grid.

    Change of variables w = 1 - s e^x applied to the two log-modulus
    subdensities: the positive branch maps to w < 1, the negative to w > 1.
    """
    neg, pos = subdensities(model, grid)
    w_min, w_max, n_w = wealth_grid
    w = np.linspace(float(w_min), float(w_max), int(n_w))
    q = np.zeros_like(w)

    below = w < 1.0
    xb = np.full_like(w, -np.inf)
    xb[below] = np.log1p(-w[below])
    inside = below & (xb >= pos.x[0]) & (xb <= pos.x[-1])
    q[inside] += np.interp(xb[inside], pos.x, pos.p) / (1.0 - w[inside])

    above = w > 1.0
    xa = np.full_like(w, -np.inf)
    xa[above] = np.log(w[above] - 1.0)
    inside = above & (xa >= neg.x[0]) & (xa <= neg.x[-1])
    q[inside] += np.interp(xa[inside], neg.x, neg.p) / (w[inside] - 1.0)

    # exact change-of-variables mass over the window; the trapezoid of the
    # tabulated q is unstable in the steep region just around w = 1
    mass = 0.0
    if w[0] < 1.0:
        mass += _window_mass(pos, math.log1p(-min(w[-1], 1.0 - 1e-300)) if w[-1] < 1.0
                             else -math.inf, math.log1p(-w[0]))
    if w[-1] > 1.0:
        mass += _window_mass(neg, -math.inf if w[0] <= 1.0 else math.log(w[0] - 1.0),
                             math.log(w[-1] - 1.0))
    return DensityGrid(w, q, mass)


# ---------------------------------------------------------------------------
# Mean-variance case study closed forms
# ---------------------------------------------------------------------------


def sign_boundary(a: float) -> float:
    """Jump size x* where 1 - a(e^x - 1) changes sign."""
    if not a > 0:
        raise ValueError("sign boundary exists for positive fractions only")
    return math.log1p(1.0 / a)


def mv_optimal_fraction(p: MVParams, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Mean-variance optimal fraction: first over second moment rate of the
    arithmetic return.

    Closed form (mu + sigma^2/2 + lam(e^{gamma^2/2} - 1)) /
    (sigma^2 + lam(e^{2 gamma^2} - 2 e^{gamma^2/2} + 1)), cross-checked
    against the drift rates of (e^id - 1) o X and (e^id - 1)^2 o X.
    """
    g2 = p.gamma * p.gamma
    num = p.mu + 0.5 * p.sigma**2 + p.lam * math.expm1(0.5 * g2)
    den = p.sigma**2 + p.lam * (math.exp(2.0 * g2) - 2.0 * math.exp(0.5 * g2) + 1.0)
    if not den > 0:
        raise DegenerateDenominator("second moment rate of the return is zero")
    a = num / den

    trip = p.triplet()
    ret = exponential(1.0)
    num2 = drift_rate(ret, trip, quad).real
    den2 = drift_rate(rf_product(ret, ret), trip, quad).real
    if abs(num2 / den2 - a) > 1e-9 * max(1.0, abs(a)):
        raise NumericalError(
            f"optimal fraction routes disagree: {a!r} vs {num2 / den2!r}")
    return a


def mv_power_rate(p: MVParams, alpha,
                  quad: QuadratureSpec = DEFAULT_QUAD) -> complex:
    """Drift rate of the unsigned power entry for the mean-variance model.

    -alpha a (mu + (1+a) sigma^2 / 2) + alpha^2 (a sigma)^2 / 2
    + lam E[|1 - a(e^G - 1)|^alpha 1{!= 0} - 1], G ~ N(0, gamma^2),
    with the quadrature split at the vanishing modulus.
    """
    a = mv_optimal_fraction(p, quad)
    al = complex(alpha)
    xstar = sign_boundary(a)
    half = 8.5 * p.gamma

    def integrand(x):
        m = np.abs(1.0 - a * np.expm1(x))
        out = np.zeros(x.shape, dtype=complex)
        pos = m > 0
        out[pos] = np.exp(al * np.log(m[pos]))
        return (out - 1.0) * normal_pdf(x, 0.0, p.gamma**2)

    spec = replace(quad, split_points=(xstar,))
    tail = p.lam * integrate(integrand, -half, half, spec)
    return (-al * a * (p.mu + 0.5 * (1.0 + a) * p.sigma**2)
            + 0.5 * al * al * (a * p.sigma) ** 2 + tail)


def mv_flip_rate(p: MVParams, alpha,
                 quad: QuadratureSpec = DEFAULT_QUAD) -> complex:
    """Power-weighted rate of jumps across the sign boundary.

    lam E[|1 - a(e^G - 1)|^alpha 1{a(e^G - 1) > 1}], G ~ N(0, gamma^2).
    """
    a = mv_optimal_fraction(p, quad)
    al = complex(alpha)
    xstar = sign_boundary(a)
    half = 8.5 * p.gamma
    if xstar >= half:
        return 0j

    def integrand(x):
        m = np.abs(1.0 - a * np.expm1(x))
        out = np.zeros(x.shape, dtype=complex)
        pos = m > 0
        out[pos] = np.exp(al * np.log(m[pos]))
        return out * normal_pdf(x, 0.0, p.gamma**2)

    return p.lam * integrate(integrand, xstar, half, quad)


def mv_g_closed(p: MVParams, alpha, quad: QuadratureSpec = DEFAULT_QUAD) -> tuple:
    """(g_plus, g_minus) of the mean-variance model from the closed rates."""
    r1 = mv_power_rate(p, alpha, quad)
    r2 = mv_flip_rate(p, alpha, quad)
    e1 = cmath.exp(r1 * p.T)
    damp = cmath.exp(-2.0 * r2 * p.T)
    return 0.5 * e1 * (1.0 + damp), 0.5 * e1 * (1.0 - damp)
