"""Core calculus for jump diffusions driven through representing functions.

A real-valued Levy process X is described by a triplet (drift relative to a
truncation, diffusion variance rate, jump measure), optionally augmented by a
schedule of deterministic jump times with known laws.  A representing
function xi maps X to a new semimartingale xi o X whose increments are

    d(xi o X) = xi'(0) dX^c  +  (1/2) xi''(0) d[X, X]^c  +  xi(dJ) at jumps.

This module computes the additive drift of xi o X, the image triplet, the
multiplicative compensator

    exp(drift * t) * prod_{scheduled tau <= t} (1 + E[xi(jump at tau)]),

and expectations of stochastic exponentials, which for deterministic
characteristics coincide with the multiplicative compensator.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Union

import numpy as np

from .numkernel import (
    DEFAULT_QUAD,
    GAUSS_TAIL_SIGMAS,
    NAN,
    NaNEncountered,
    NumericalError,
    QuadratureSpec,
    integrate,
    normal_pdf,
)

__all__ = [
    "NotSpecial",
    "Incompatible",
    "NonIntegrable",
    "DegenerateJump",
    "RepresentingFunction",
    "identity",
    "affine",
    "exp_return",
    "exponential",
    "log1p_entry",
    "modulus_power",
    "signed_power",
    "indicator_at_minus_one",
    "modulus_entry",
    "rf_sum",
    "rf_product",
    "yor_product",
    "compose",
    "modulus_of",
    "generic_entry",
    "Truncation",
    "GaussianJumps",
    "AtomJumps",
    "TransformedJumps",
    "WeightedJumps",
    "JumpMeasure",
    "jump_expect",
    "jump_total",
    "GaussianLaw",
    "AtomLaw",
    "JumpLaw",
    "law_expect",
    "PredictableJumpSchedule",
    "EMPTY_SCHEDULE",
    "LevyTriplet",
    "is_special",
    "drift_rate",
    "pushforward_triplet",
    "dp_drift",
    "mult_compensator",
    "expected_stoch_exp",
    "levy_khintchin",
    "exponential_compensator",
    "expected_exp_utility",
]

_OVERFLOW = 1e300


class NotSpecial(NumericalError):
    """The image process has no integrable compensator."""


class Incompatible(NumericalError):
    """The representing function is undefined on a set the jumps charge."""


class NonIntegrable(NumericalError):
    """A scheduled-jump expectation does not exist."""


class DegenerateJump(NumericalError):
    """A compensator factor 1 + E[xi(jump)] vanished; the exponential dies."""


# ---------------------------------------------------------------------------
# Representing functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RepresentingFunction:
    """A catalog element xi with xi(0) = 0 and derivatives supplied at 0.

    eval is vectorized over real inputs and returns complex values, with the
    NaN sentinel outside the effective domain.  kinks lists input points where
    xi is non-smooth or discontinuous (quadrature splits there).  deriv and
    inverse_at are optional analytic helpers; inverse_at(y) returns the real
    solutions of xi(x) = y and is only provided for strictly monotone entries.
    """

    label: str
    fn: Callable[[np.ndarray], np.ndarray]
    d0: complex
    d20: complex
    kinks: tuple = ()
    deriv: Callable | None = None
    inverse_at: Callable | None = None

    def __post_init__(self):
        z = complex(np.asarray(self.fn(np.array([0.0])))[0])
        if not abs(z) < 1e-12:
            raise ValueError(f"{self.label}: representing functions must vanish at 0")
        for v in (self.d0, self.d20):
            v = complex(v)
            if not (math.isfinite(v.real) and math.isfinite(v.imag)):
                raise ValueError(f"{self.label}: derivatives at 0 must be finite")

    def __call__(self, x):
        arr = np.asarray(x, dtype=float)
        out = np.asarray(self.fn(arr), dtype=complex)
        return out

    def preimages(self, y: complex) -> tuple:
        if self.inverse_at is None:
            return ()
        return tuple(self.inverse_at(y))


def _as_complex(x) -> complex:
    return complex(x)


def identity() -> RepresentingFunction:
    return RepresentingFunction(
        "id",
        lambda x: x.astype(complex),
        1.0 + 0j,
        0j,
        deriv=lambda x: np.ones_like(x),
        inverse_at=lambda y: (complex(y).real,) if complex(y).imag == 0.0 else (),
    )


def affine(zeta) -> RepresentingFunction:
    """xi(x) = zeta * x."""
    z = _as_complex(zeta)
    inv = None
    drv = None
    if z.imag == 0.0 and z.real != 0.0:
        inv = lambda y: ((complex(y) / z).real,) if complex(y).imag == 0.0 else ()
        drv = lambda x: np.full_like(x, z.real)
    return RepresentingFunction(f"affine({zeta})", lambda x: z * x, z, 0j,
                                deriv=drv, inverse_at=inv)


def exp_return(a: float) -> RepresentingFunction:
    """xi(x) = -a (e^x - 1): position of size -a in an asset with log price X."""
    a = float(a)

    def fn(x):
        return -a * np.expm1(x) + 0j

    def inv(y):
        y = complex(y)
        if y.imag != 0.0 or a == 0.0:
            return ()
        t = 1.0 - y.real / a
        return (math.log(t),) if t > 0 else ()

    return RepresentingFunction(
        f"exp_return({a})", fn, -a + 0j, -a + 0j,
        deriv=lambda x: -a * np.exp(x), inverse_at=inv,
    )


def exponential(zeta) -> RepresentingFunction:
    """xi(x) = e^{zeta x} - 1, the entry behind exponential compensation."""
    z = _as_complex(zeta)

    def fn(x):
        return np.expm1(z * x)

    inv = None
    drv = None
    if z.imag == 0.0 and z.real != 0.0:
        zr = z.real

        def inv(y):
            y = complex(y)
            if y.imag != 0.0 or y.real <= -1.0:
                return ()
            return (math.log1p(y.real) / zr,)

        drv = lambda x: zr * np.exp(zr * x)
    return RepresentingFunction(f"exponential({zeta})", fn, z, z * z,
                                deriv=drv, inverse_at=inv)


def log1p_entry() -> RepresentingFunction:
    """xi(x) = log(1 + x) for x > -1, NaN sentinel elsewhere."""

    def fn(x):
        out = np.full(x.shape, NAN, dtype=complex)
        ok = x > -1.0
        out[ok] = np.log1p(x[ok])
        return out

    def inv(y):
        y = complex(y)
        if y.imag != 0.0:
            return ()
        return (math.expm1(y.real),)

    return RepresentingFunction("log1p", fn, 1.0 + 0j, -1.0 + 0j,
                                kinks=(-1.0,),
                                deriv=lambda x: 1.0 / (1.0 + x),
                                inverse_at=inv)


def _abs_power(x: np.ndarray, alpha: complex) -> np.ndarray:
    """|1 + x|^alpha with exact handling of the vanishing modulus."""
    m = np.abs(1.0 + x)
    out = np.zeros(x.shape, dtype=complex)
    pos = m > 0.0
    out[pos] = np.exp(alpha * np.log(m[pos]))
    return out


def modulus_power(alpha) -> RepresentingFunction:
    """xi(x) = |1 + x|^alpha 1{x != -1} - 1; branch entry for the modulus."""
    al = _as_complex(alpha)

    def fn(x):
        out = _abs_power(x, al)
        out[x == -1.0] = 0.0
        return out - 1.0

    return RepresentingFunction(f"modulus_power({alpha})", fn, al,
                                al * (al - 1.0), kinks=(-1.0,))


def signed_power(alpha) -> RepresentingFunction:
    """xi(x) = |1 + x|^alpha sign(1 + x) - 1; branch entry for the sign."""
    al = _as_complex(alpha)

    def fn(x):
        out = _abs_power(x, al)
        sign = np.where(x > -1.0, 1.0, -1.0)
        sign = np.where(x == -1.0, 0.0, sign)
        return sign * out - 1.0

    return RepresentingFunction(f"signed_power({alpha})", fn, al,
                                al * (al - 1.0), kinks=(-1.0,))


def indicator_at_minus_one() -> RepresentingFunction:
    """xi(x) = 1{x = -1}; counts jumps that annihilate 1 + x."""
    return RepresentingFunction(
        "indicator(-1)",
        lambda x: (x == -1.0).astype(complex),
        0j, 0j, kinks=(-1.0,),
    )


def modulus_entry() -> RepresentingFunction:
    """xi(x) = |1 + x| - 1."""
    return RepresentingFunction(
        "modulus", lambda x: np.abs(1.0 + x).astype(complex) - 1.0,
        1.0 + 0j, 0j, kinks=(-1.0,),
    )


def _mapped_kinks(outer_kinks, inner: RepresentingFunction) -> tuple:
    mapped = []
    for k in outer_kinks:
        mapped.extend(inner.preimages(k))
    return tuple(mapped)


def rf_sum(xi: RepresentingFunction, psi: RepresentingFunction) -> RepresentingFunction:
    return RepresentingFunction(
        f"({xi.label})+({psi.label})",
        lambda x, a=xi.fn, b=psi.fn: np.asarray(a(x), complex) + np.asarray(b(x), complex),
        xi.d0 + psi.d0, xi.d20 + psi.d20,
        kinks=tuple(xi.kinks) + tuple(psi.kinks),
    )


def rf_product(xi: RepresentingFunction, psi: RepresentingFunction) -> RepresentingFunction:
    # (xi psi)'(0) = 0 and (xi psi)''(0) = 2 xi'(0) psi'(0) since both vanish at 0
    return RepresentingFunction(
        f"({xi.label})*({psi.label})",
        lambda x, a=xi.fn, b=psi.fn: np.asarray(a(x), complex) * np.asarray(b(x), complex),
        0j, 2.0 * xi.d0 * psi.d0,
        kinks=tuple(xi.kinks) + tuple(psi.kinks),
    )


def yor_product(xi: RepresentingFunction, psi: RepresentingFunction) -> RepresentingFunction:
    """Entry with 1 + yor = (1 + xi)(1 + psi); stochastic exponentials multiply."""

    def fn(x, a=xi.fn, b=psi.fn):
        va = np.asarray(a(x), complex)
        vb = np.asarray(b(x), complex)
        return va + vb + va * vb

    return RepresentingFunction(
        f"yor[{xi.label},{psi.label}]", fn,
        xi.d0 + psi.d0, xi.d20 + psi.d20 + 2.0 * xi.d0 * psi.d0,
        kinks=tuple(xi.kinks) + tuple(psi.kinks),
    )


def compose(outer: RepresentingFunction, inner: RepresentingFunction) -> RepresentingFunction:
    """outer(inner(x)); chain-rule derivatives at 0."""

    def fn(x, o=outer.fn, i=inner.fn):
        mid = np.asarray(i(x), complex)
        if np.any(mid.imag != 0.0):
            raise Incompatible(
                f"cannot compose {outer.label} with complex-valued {inner.label}"
            )
        return np.asarray(o(mid.real), complex)

    inv = None
    if outer.inverse_at is not None and inner.inverse_at is not None:
        def inv(y, o=outer.inverse_at, i=inner.inverse_at):
            xs = []
            for mid in o(y):
                xs.extend(i(mid))
            return tuple(xs)

    return RepresentingFunction(
        f"{outer.label}o{inner.label}", fn,
        outer.d0 * inner.d0,
        outer.d20 * inner.d0 ** 2 + outer.d0 * inner.d20,
        kinks=tuple(inner.kinks) + _mapped_kinks(outer.kinks, inner),
        inverse_at=inv,
    )


def modulus_of(xi: RepresentingFunction) -> RepresentingFunction:
    """Entry with value |1 + xi(x)| - 1; |E(xi o X)| = E(modulus_of(xi) o X)."""

    def fn(x, a=xi.fn):
        return np.abs(1.0 + np.asarray(a(x), complex)).astype(complex) - 1.0

    a = xi.d0
    d0 = complex(a.real if isinstance(a, complex) else a).real
    d20 = (complex(xi.d20).real - complex(a * a).real + d0 * d0)
    return RepresentingFunction(
        f"|1+{xi.label}|-1", fn, d0 + 0j, d20 + 0j,
        kinks=tuple(xi.kinks) + _mapped_kinks((-1.0,), xi),
    )


def generic_entry(fn: Callable, label: str = "generic",
                  fd_step: float = 1e-5, kinks: tuple = ()) -> RepresentingFunction:
    """Catalog escape hatch with central-difference derivatives at 0.

    For experimentation only; acceptance-grade paths use analytic entries.
    """

    def wrapped(x):
        return np.asarray(fn(x), dtype=complex)

    h = fd_step
    pts = wrapped(np.array([-h, 0.0, h]))
    d0 = (pts[2] - pts[0]) / (2.0 * h)
    d20 = (pts[2] - 2.0 * pts[1] + pts[0]) / (h * h)
    return RepresentingFunction(label, wrapped, complex(d0), complex(d20), kinks=kinks)


# ---------------------------------------------------------------------------
# Truncation functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Truncation:
    """Truncation function h fixing how the drift is quoted.

    kind "identity" is h = id (needs a first moment, always finite here),
    "zero" is h = 0 (pure drift), "bounded" is h = id 1{|id| <= cutoff}.
    """

    kind: str
    cutoff: float = 1.0

    def __post_init__(self):
        if self.kind not in ("identity", "zero", "bounded"):
            raise ValueError(f"unknown truncation kind {self.kind!r}")
        if self.kind == "bounded" and not self.cutoff > 0:
            raise ValueError("bounded truncation needs cutoff > 0")

    @classmethod
    def identity(cls) -> "Truncation":
        return cls("identity")

    @classmethod
    def zero(cls) -> "Truncation":
        return cls("zero")

    @classmethod
    def bounded(cls, cutoff: float = 1.0) -> "Truncation":
        return cls("bounded", float(cutoff))

    @property
    def edges(self) -> tuple:
        if self.kind == "bounded":
            return (-self.cutoff, self.cutoff)
        return ()

    def __call__(self, x):
        x = np.asarray(x)
        if self.kind == "identity":
            return x.astype(complex)
        if self.kind == "zero":
            return np.zeros(x.shape, dtype=complex)
        return np.where(np.abs(x) <= self.cutoff, x, 0.0).astype(complex)


# ---------------------------------------------------------------------------
# Jump measures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GaussianJumps:
    """Compound-Poisson jumps: intensity * N(mean, var)."""

    intensity: float
    mean: float = 0.0
    var: float = 1.0

    def __post_init__(self):
        if self.intensity < 0:
            raise ValueError("jump intensity must be non-negative")
        if not self.var > 0:
            raise ValueError("jump variance must be positive")

    @property
    def window(self) -> tuple:
        half = GAUSS_TAIL_SIGMAS * math.sqrt(self.var)
        return (self.mean - half, self.mean + half)


@dataclass(frozen=True)
class AtomJumps:
    """Finitely many jump sizes with individual intensities."""

    atoms: tuple  # ((size, intensity), ...)

    def __post_init__(self):
        atoms = tuple((float(s), float(w)) for s, w in self.atoms)
        for s, w in atoms:
            if s == 0.0:
                raise ValueError("atom sizes must be nonzero")
            if w < 0:
                raise ValueError("atom intensities must be non-negative")
        object.__setattr__(self, "atoms", atoms)


@dataclass(frozen=True)
class TransformedJumps:
    """Lazy image of a base measure under a representing function.

    Integrals evaluate by change of variables, int f d(nu o xi^-1) =
    int f(xi(x)) nu(dx); no density algebra is ever attempted.
    """

    base: "JumpMeasure"
    map: RepresentingFunction


@dataclass(frozen=True)
class WeightedJumps:
    """Base measure reweighted by a non-negative density factor."""

    base: "JumpMeasure"
    weight: Callable[[np.ndarray], np.ndarray]
    weight_kinks: tuple = ()


JumpMeasure = Union[GaussianJumps, AtomJumps, TransformedJumps, WeightedJumps]


def _finite_real_kinks(kinks) -> list:
    out = []
    for k in kinks:
        kc = complex(k)
        if kc.imag == 0.0 and math.isfinite(kc.real):
            out.append(kc.real)
    return out


def jump_expect(nu: JumpMeasure, f: Callable, kinks: tuple = (),
                quad: QuadratureSpec = DEFAULT_QUAD) -> complex:
    """int f d nu over the jump sizes, with declared kinks of f in nu's space."""
    if isinstance(nu, AtomJumps):
        if not nu.atoms:
            return 0j
        xs = np.array([s for s, _ in nu.atoms])
        ws = np.array([w for _, w in nu.atoms])
        vals = np.asarray(f(xs), dtype=complex)
        if np.any(np.isnan(vals.real)):
            raise Incompatible("representing function undefined on a jump atom")
        return complex(np.sum(ws * vals))
    if isinstance(nu, GaussianJumps):
        if nu.intensity == 0.0:
            return 0j
        lo, hi = nu.window
        spec = replace(quad, split_points=tuple(_finite_real_kinks(kinks)))
        dens = lambda x: np.asarray(f(x), complex) * normal_pdf(x, nu.mean, nu.var)
        try:
            val = nu.intensity * integrate(dens, lo, hi, spec)
        except NaNEncountered as exc:
            raise Incompatible(str(exc)) from exc
        return val
    if isinstance(nu, WeightedJumps):
        g = lambda x, w=nu.weight, ff=f: np.asarray(ff(x), complex) * np.asarray(w(x), complex)
        return jump_expect(nu.base, g, tuple(kinks) + tuple(nu.weight_kinks), quad)
    if isinstance(nu, TransformedJumps):
        xi = nu.map
        inner_kinks = list(xi.kinks)
        for k in kinks:
            inner_kinks.extend(xi.preimages(k))
        # admissible transforms map real jumps to real jumps
        g = lambda x, ff=f, m=xi: np.asarray(ff(np.real(m(x))), complex)
        return jump_expect(nu.base, g, tuple(inner_kinks), quad)
    raise TypeError(f"unknown jump measure {type(nu)!r}")


def jump_total(nu: JumpMeasure) -> float:
    """Total jump intensity nu(R)."""
    if isinstance(nu, AtomJumps):
        return float(sum(w for _, w in nu.atoms))
    if isinstance(nu, GaussianJumps):
        return float(nu.intensity)
    if isinstance(nu, TransformedJumps):
        return jump_total(nu.base)
    if isinstance(nu, WeightedJumps):
        return float(jump_expect(nu, lambda x: np.ones_like(x, dtype=complex)).real)
    raise TypeError(f"unknown jump measure {type(nu)!r}")


# ---------------------------------------------------------------------------
# Scheduled jumps at deterministic predictable times
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GaussianLaw:
    mean: float
    var: float

    def __post_init__(self):
        if not self.var > 0:
            raise ValueError("law variance must be positive")

    @property
    def window(self) -> tuple:
        half = GAUSS_TAIL_SIGMAS * math.sqrt(self.var)
        return (self.mean - half, self.mean + half)


@dataclass(frozen=True)
class AtomLaw:
    atoms: tuple  # ((size, probability), ...)

    def __post_init__(self):
        atoms = tuple((float(s), float(p)) for s, p in self.atoms)
        total = sum(p for _, p in atoms)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"atom probabilities sum to {total}, expected 1")
        if any(p < 0 for _, p in atoms):
            raise ValueError("atom probabilities must be non-negative")
        object.__setattr__(self, "atoms", atoms)


JumpLaw = Union[GaussianLaw, AtomLaw]


def law_expect(law: JumpLaw, f: Callable, kinks: tuple = (),
               quad: QuadratureSpec = DEFAULT_QUAD) -> complex:
    """E[f(J)] for a scheduled-jump law J."""
    if isinstance(law, AtomLaw):
        xs = np.array([s for s, _ in law.atoms])
        ps = np.array([p for _, p in law.atoms])
        vals = np.asarray(f(xs), dtype=complex)
        if np.any(np.isnan(vals.real)):
            raise NonIntegrable("function undefined on a scheduled jump atom")
        return complex(np.sum(ps * vals))
    if isinstance(law, GaussianLaw):
        lo, hi = law.window
        spec = replace(quad, split_points=tuple(_finite_real_kinks(kinks)))
        dens = lambda x: np.asarray(f(x), complex) * normal_pdf(x, law.mean, law.var)
        try:
            val = integrate(dens, lo, hi, spec)
        except NaNEncountered as exc:
            raise NonIntegrable(str(exc)) from exc
        return val
    raise TypeError(f"unknown jump law {type(law)!r}")


@dataclass(frozen=True)
class PredictableJumpSchedule:
    """Deterministic jump times with per-time laws, strictly increasing."""

    entries: tuple  # ((time, law), ...)

    def __post_init__(self):
        entries = tuple((float(t), law) for t, law in self.entries)
        times = [t for t, _ in entries]
        if any(t <= 0 for t in times):
            raise ValueError("scheduled times must be strictly positive")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("scheduled times must be strictly increasing")
        object.__setattr__(self, "entries", entries)

    def upto(self, t_end: float) -> tuple:
        return tuple((t, law) for t, law in self.entries if t <= t_end)

    def __len__(self):
        return len(self.entries)


EMPTY_SCHEDULE = PredictableJumpSchedule(())


def _sched_or_empty(sched) -> PredictableJumpSchedule:
    return EMPTY_SCHEDULE if sched is None else sched


# ---------------------------------------------------------------------------
# Levy triplets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LevyTriplet:
    """Characteristics (b, sigma2, jumps) of a real Levy process, b quoted
    relative to the truncation trunc."""

    b: float
    sigma2: float
    jumps: JumpMeasure
    trunc: Truncation = field(default_factory=Truncation.zero)

    def __post_init__(self):
        if self.sigma2 < 0:
            raise ValueError("diffusion variance must be non-negative")

    def with_truncation(self, trunc: Truncation) -> "LevyTriplet":
        """Re-express the drift relative to another truncation function."""
        if trunc == self.trunc:
            return self
        h_old, h_new = self.trunc, trunc
        shift = jump_expect(
            self.jumps,
            lambda x: h_new(x) - h_old(x),
            kinks=h_old.edges + h_new.edges,
        )
        return LevyTriplet(self.b + shift.real, self.sigma2, self.jumps, trunc)

    @property
    def drift_no_compensation(self) -> float:
        """Drift rate of the continuous part alone (zero truncation)."""
        return self.with_truncation(Truncation.zero()).b


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def is_special(xi: RepresentingFunction, t: LevyTriplet,
               quad: QuadratureSpec = DEFAULT_QUAD) -> bool:
    """Whether xi o X has an additive compensator: int (|xi|^2 ^ |xi|) d nu < inf."""

    def crit(x):
        v = np.abs(np.asarray(xi(x), complex))
        # min(v^2, v) without squaring large values
        return np.where(v >= 1.0, v, v * np.minimum(v, 1.0)).astype(complex)

    try:
        val = jump_expect(t.jumps, crit, kinks=xi.kinks, quad=quad)
    except Incompatible:
        return False
    except NumericalError:
        return False
    return math.isfinite(val.real) and abs(val) < _OVERFLOW


def drift_rate(xi: RepresentingFunction, t: LevyTriplet,
               quad: QuadratureSpec = DEFAULT_QUAD) -> complex:
    """Drift rate of the quasi-left-continuous part of xi o X.

    Equals xi'(0) b + (1/2) xi''(0) sigma2 + int (xi(x) - xi'(0) h(x)) nu(dx),
    complex-valued in general.
    """
    h = t.trunc

    def integrand(x):
        return np.asarray(xi(x), complex) - xi.d0 * h(x)

    tail = jump_expect(t.jumps, integrand, kinks=tuple(xi.kinks) + h.edges, quad=quad)
    if not (math.isfinite(tail.real) and math.isfinite(tail.imag)) or abs(tail) > _OVERFLOW:
        raise NotSpecial(f"compensator integral diverged for {xi.label}")
    return xi.d0 * t.b + 0.5 * xi.d20 * t.sigma2 + tail


def pushforward_triplet(xi: RepresentingFunction, t: LevyTriplet,
                        trunc: Truncation | None = None,
                        quad: QuadratureSpec = DEFAULT_QUAD) -> LevyTriplet:
    """Triplet of Y = xi o X; jumps are the lazy push-forward of X's jumps.

    Requires real derivatives at 0 (real-valued image); complex exponents are
    handled through drift rates and cumulants, never through triplets.
    """
    if complex(xi.d0).imag != 0.0 or complex(xi.d20).imag != 0.0:
        raise ValueError("pushforward_triplet needs a real-valued entry; "
                         "complex exponents live in drift rates only")
    if not is_special(xi, t, quad):
        raise NotSpecial(f"{xi.label} o X is not special")
    h_y = trunc if trunc is not None else t.trunc
    h_x = t.trunc

    def integrand(x):
        img = np.real(np.asarray(xi(x), complex))
        return h_y(img) - xi.d0 * h_x(x)

    kinks = list(xi.kinks) + list(h_x.edges)
    for edge in h_y.edges:
        kinks.extend(xi.preimages(edge))
    corr = jump_expect(t.jumps, integrand, kinks=tuple(kinks), quad=quad)
    b_y = (xi.d0 * t.b + 0.5 * xi.d20 * t.sigma2 + corr).real
    d0 = complex(xi.d0).real
    jumps_y = t.jumps if xi.label == "id" else TransformedJumps(t.jumps, xi)
    return LevyTriplet(b_y, d0 * d0 * t.sigma2, jumps_y, h_y)


def dp_drift(xi: RepresentingFunction, sched: PredictableJumpSchedule | None,
             t_end: float, quad: QuadratureSpec = DEFAULT_QUAD) -> list:
    """Drift increments E[xi(jump)] at each scheduled time up to t_end."""
    out = []
    for tau, law in _sched_or_empty(sched).upto(t_end):
        inc = law_expect(law, xi, kinks=xi.kinks, quad=quad)
        if not (math.isfinite(inc.real) and math.isfinite(inc.imag)):
            raise NonIntegrable(f"E[xi(jump)] diverged at scheduled time {tau}")
        out.append((tau, inc))
    return out


def mult_compensator(xi: RepresentingFunction, t: LevyTriplet,
                     sched: PredictableJumpSchedule | None, t_end: float,
                     dp_rep: RepresentingFunction | None = None,
                     quad: QuadratureSpec = DEFAULT_QUAD) -> complex:
    """Multiplicative compensator of E(xi o X) at t_end.

    exp(drift * t_end) times prod over scheduled times of 1 + E[xi(jump)].
    dp_rep overrides the entry applied on the scheduled (discrete) component,
    for strategies that differ on predictable times.  Raises DegenerateJump
    when a factor vanishes; expected_stoch_exp handles that branch as 0.
    """
    rate = drift_rate(xi, t, quad)
    value = cmath.exp(rate * t_end)
    for tau, inc in dp_drift(dp_rep if dp_rep is not None else xi, sched, t_end, quad):
        factor = 1.0 + inc
        if abs(factor) <= 1e-12:
            raise DegenerateJump(
                f"1 + E[xi(jump)] = {factor!r} at scheduled time {tau}"
            )
        value *= factor
    return value


def expected_stoch_exp(xi: RepresentingFunction, t: LevyTriplet,
                       sched: PredictableJumpSchedule | None, t_end: float,
                       dp_rep: RepresentingFunction | None = None,
                       quad: QuadratureSpec = DEFAULT_QUAD) -> complex:
    """E[E(xi o X)_{t_end}] for deterministic characteristics.

    Equals the multiplicative compensator, and 0 from the first scheduled
    time whose factor 1 + E[xi(jump)] vanishes onwards.
    """
    try:
        return mult_compensator(xi, t, sched, t_end, dp_rep=dp_rep, quad=quad)
    except DegenerateJump:
        return 0j


def levy_khintchin(u: float, t: LevyTriplet,
                   sched: PredictableJumpSchedule | None, t_end: float,
                   quad: QuadratureSpec = DEFAULT_QUAD) -> complex:
    """E[exp(iuX_t)] via the compensator of (e^{iu id} - 1) o X.

    Same code path as expected_stoch_exp, so the generalized identity holds
    exactly by construction.
    """
    return expected_stoch_exp(exponential(1j * u), t, sched, t_end, quad=quad)


def exponential_compensator(zeta, t: LevyTriplet,
                            sched: PredictableJumpSchedule | None, t_end: float,
                            quad: QuadratureSpec = DEFAULT_QUAD) -> complex:
    """Multiplicative compensator of e^{zeta X}, entry e^{zeta id} - 1."""
    return mult_compensator(exponential(zeta), t, sched, t_end, quad=quad)


def expected_exp_utility(lam_continuous: float, lam_scheduled: float,
                         mu: float, sigma2: float, jumps: JumpMeasure,
                         theta: float, law: JumpLaw, horizon: float,
                         quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """E[exp(-lam . R_T)] for a position in an asset with log price L + V.

    L is a Levy process with drift rate mu (identity truncation), variance
    rate sigma2 and jump measure jumps; V jumps at predictable times arriving
    with rate theta, sizes distributed by law.  The position holds
    lam_continuous dollars outside the predictable times and lam_scheduled
    dollars on them.  Conditioning on the Poisson count of predictable times
    gives the closed form

        exp(b_qc T) * exp(theta T (E[exp(-lam_s (e^J - 1))] - 1)).
    """
    if theta < 0:
        raise ValueError("arrival rate theta must be non-negative")
    entry = compose(exponential(1.0), exp_return(lam_continuous))
    trip = LevyTriplet(mu, sigma2, jumps, Truncation.identity())
    b_qc = drift_rate(entry, trip, quad)
    tilt = lambda x: np.exp(-lam_scheduled * np.expm1(x))
    mean_factor = law_expect(law, tilt, quad=quad)
    if not math.isfinite(mean_factor.real):
        raise NonIntegrable("scheduled-jump utility factor diverged")
    value = cmath.exp(b_qc * horizon + theta * horizon * (mean_factor - 1.0))
    return float(value.real)
