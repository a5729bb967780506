"""Shared numerical primitives.

Complex-valued adaptive quadrature (Gauss-Kronrod 7/15 with worst-interval
bisection), characteristic-function inversion by the plain trapezoid rule,
normal special functions, and a counter-based random number generator whose
output is a pure function of (seed, stream, counter).

Everything in this module is a pure function of its inputs; random state is
an explicit value, never hidden, so concurrent use needs no coordination.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from heapq import heappush, heappop
from typing import Callable, Sequence

import numpy as np
from scipy.special import erfc, ndtri

__all__ = [
    "NAN",
    "GAUSS_TAIL_SIGMAS",
    "NumericalError",
    "NonConvergent",
    "NaNEncountered",
    "AsymmetricCharFn",
    "AliasingSuspected",
    "NegativeDensity",
    "QuadratureSpec",
    "DensityGrid",
    "integrate",
    "integrate_with_error",
    "invert_characteristic",
    "normal_cdf",
    "normal_pdf",
    "RandomStream",
    "rng_normal",
    "rng_poisson",
]

#: Non-number sentinel, distinct from every finite complex value.
NAN = complex(float("nan"), float("nan"))

#: N(m, g^2) mass beyond m +/- 8.5 g is below 1e-14, far under quadrature
#: tolerances; used to truncate Gaussian-weighted integrals to finite windows.
GAUSS_TAIL_SIGMAS = 8.5


class NumericalError(Exception):
    """A numerical procedure failed at runtime (CLI exit code 3)."""


class NonConvergent(NumericalError):
    """Subdivision budget exhausted before reaching the requested tolerance."""

    def __init__(self, message: str, value: complex = 0j, error: float = math.inf):
        super().__init__(message)
        self.value = value
        self.error = error


class NaNEncountered(NumericalError):
    """Integrand returned the NaN sentinel away from a declared split point."""


class AsymmetricCharFn(NumericalError):
    """phi(-u) != conj(phi(u)): not the characteristic function of a real law."""


class AliasingSuspected(NumericalError):
    """Characteristic function does not decay inside the integration window."""


class NegativeDensity(NumericalError):
    """Inverted density went below the ringing budget of -1e-8."""


# ---------------------------------------------------------------------------
# Adaptive Gauss-Kronrod quadrature
# ---------------------------------------------------------------------------

# Kronrod-15 nodes on [-1, 1] and weights; the embedded Gauss-7 rule uses the
# odd-indexed nodes.  Standard QUADPACK constants.
_XGK_HALF = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
])
_WGK_HALF = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG4_HALF = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
_XGK = np.concatenate([-_XGK_HALF[:-1], _XGK_HALF[::-1]])
_WGK = np.concatenate([_WGK_HALF[:-1], _WGK_HALF[::-1]])
_WG7 = np.concatenate([_WG4_HALF[:-1], _WG4_HALF[::-1]])


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and budget for :func:`integrate`.

    split_points are abscissae where the integrand is singular, kinked or
    starts oscillating without bound; each side of every split is integrated
    independently.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_subdivisions: int = 2000
    split_points: tuple = ()

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("quadrature tolerances must be strictly positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be at least 1")


DEFAULT_QUAD = QuadratureSpec()


def _eval_nodes(f, x: np.ndarray) -> np.ndarray:
    try:
        y = np.asarray(f(x), dtype=complex)
        if y.shape == x.shape:
            return y
    except (TypeError, ValueError):
        pass
    return np.array([complex(f(float(v))) for v in x], dtype=complex)


def _gk15(f, a: float, b: float):
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    x = c + h * _XGK
    y = _eval_nodes(f, x)
    if np.any(np.isnan(y.real) | np.isnan(y.imag)):
        bad = x[np.isnan(y.real) | np.isnan(y.imag)][0]
        raise NaNEncountered(f"integrand returned NaN at x={bad!r}")
    resk = h * np.sum(_WGK * y)
    resg = h * np.sum(_WG7 * y[1::2])
    # QUADPACK-style error sharpening via the mean absolute deviation.
    resasc = h * float(np.sum(_WGK * np.abs(y - resk / (b - a))))
    d = abs(resk - resg)
    if resasc > 0.0 and d > 0.0:
        err = resasc * min(1.0, (200.0 * d / resasc) ** 1.5)
    else:
        err = d
    return resk, err


def _to_finite(f, a: float, b: float, splits):
    """Map an infinite integration domain onto a finite one."""
    if a == -math.inf and b == math.inf:
        def g(t):
            t = np.asarray(t, dtype=float)
            den = 1.0 - t * t
            return f(t / den) * (1.0 + t * t) / (den * den)

        def fwd(x):
            if x == 0.0:
                return 0.0
            return (math.sqrt(1.0 + 4.0 * x * x) - 1.0) / (2.0 * x)

        return g, -1.0, 1.0, tuple(fwd(s) for s in splits)
    if b == math.inf:
        def g(t):
            t = np.asarray(t, dtype=float)
            den = 1.0 - t
            return f(a + t / den) / (den * den)

        return g, 0.0, 1.0, tuple((s - a) / (1.0 + s - a) for s in splits)
    if a == -math.inf:
        def g(t):
            t = np.asarray(t, dtype=float)
            den = 1.0 - t
            return f(b - t / den) / (den * den)

        return g, 0.0, 1.0, tuple((b - s) / (1.0 + b - s) for s in splits)
    return f, a, b, splits


def integrate_with_error(
    f: Callable, a: float, b: float, spec: QuadratureSpec = DEFAULT_QUAD
):
    """Integrate a complex-valued f over (a, b); returns (value, error_estimate).

    The integrand may be passed either vectorized over numpy arrays or as a
    scalar function.  Raises NonConvergent when the subdivision budget runs
    out, NaNEncountered when f yields NaN off the declared split set.
    """
    if math.isnan(a) or math.isnan(b):
        raise ValueError("integration bounds must not be NaN")
    if not a < b:
        raise ValueError(f"need a < b, got a={a}, b={b}")
    splits = tuple(s for s in spec.split_points if a < s < b)
    if math.isinf(a) or math.isinf(b):
        f, a, b, splits = _to_finite(f, a, b, splits)

    edges = [a]
    for s in sorted(set(splits)):
        if s > edges[-1]:
            edges.append(s)
    edges.append(b)
    heap = []
    tiebreak = 0
    total = 0j
    total_err = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, err = _gk15(f, lo, hi)
        total += val
        total_err += err
        heappush(heap, (-err, tiebreak, lo, hi, val, err))
        tiebreak += 1

    used = 0
    while total_err > max(spec.abs_tol, spec.rel_tol * abs(total)):
        if used >= spec.max_subdivisions:
            raise NonConvergent(
                f"quadrature did not converge after {used} subdivisions; "
                f"error estimate {total_err:.3e}",
                value=total,
                error=total_err,
            )
        _, _, lo, hi, val, err = heappop(heap)
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            # Interval at floating-point resolution; accept its estimate.
            heappush(heap, (0.0, tiebreak, lo, hi, val, 0.0))
            tiebreak += 1
            total_err -= err
            continue
        v1, e1 = _gk15(f, lo, mid)
        v2, e2 = _gk15(f, mid, hi)
        total += v1 + v2 - val
        total_err += e1 + e2 - err
        heappush(heap, (-e1, tiebreak, lo, mid, v1, e1))
        heappush(heap, (-e2, tiebreak + 1, mid, hi, v2, e2))
        tiebreak += 2
        used += 1
    return total, total_err


def integrate(
    f: Callable, a: float, b: float, spec: QuadratureSpec = DEFAULT_QUAD
) -> complex:
    """Adaptive quadrature of a complex-valued integrand over (a, b)."""
    value, _ = integrate_with_error(f, a, b, spec)
    return value


# ---------------------------------------------------------------------------
# Density inversion
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DensityGrid:
    """A density tabulated on uniformly spaced abscissae.

    mass is the trapezoid integral of p over the grid; imag_residue records
    the largest imaginary part discarded during inversion (diagnostic).
    """

    x: np.ndarray
    p: np.ndarray
    mass: float
    imag_residue: float = 0.0

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        p = np.asarray(self.p, dtype=float)
        if x.ndim != 1 or x.shape != p.shape or x.size < 2:
            raise ValueError("x and p must be 1-d arrays of equal length >= 2")
        dx = np.diff(x)
        if not np.allclose(dx, dx[0], rtol=1e-9, atol=0):
            raise ValueError("grid spacing must be constant")
        if np.any(p < 0):
            raise ValueError("densities must be non-negative after clipping")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "p", p)

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    def scaled(self, factor: float) -> "DensityGrid":
        return DensityGrid(self.x, self.p * factor, self.mass * factor,
                           self.imag_residue * abs(factor))


def _phi_values(phi, u: np.ndarray) -> np.ndarray:
    try:
        vals = np.asarray(phi(u), dtype=complex)
        if vals.shape == u.shape:
            return vals
    except (TypeError, ValueError):
        pass
    return np.array([complex(phi(float(v))) for v in u], dtype=complex)


def invert_characteristic(
    phi: Callable,
    u_max: float,
    n_points: int,
    x_grid: Sequence[float],
    check_aliasing: bool = False,
) -> DensityGrid:
    """Recover a density from its characteristic function.

    Evaluates p(x) = (1/2pi) int_{-U}^{U} exp(-iux) phi(u) du by the trapezoid
    rule on n_points nodes, on the uniform x grid (x_min, x_max, n_x).

    Preconditions checked: phi(0) = 1 within 1e-12 and conjugate symmetry
    phi(-u) = conj(phi(u)) within 1e-10 on sample points (AsymmetricCharFn
    otherwise).  Raises AliasingSuspected when phi has not decayed at the edge
    of the window, or, with check_aliasing=True, when doubling the window
    moves any density value by more than 1e-6.
    """
    x_min, x_max, n_x = x_grid
    n_x = int(n_x)
    if n_points < 8:
        raise ValueError("n_points too small")
    u = np.linspace(-u_max, u_max, int(n_points))
    vals = _phi_values(phi, u)

    at_zero = _phi_values(phi, np.array([0.0]))[0]
    if abs(at_zero - 1.0) > 1e-12:
        raise AsymmetricCharFn(f"phi(0) = {at_zero!r}, expected 1")
    probe = u[u > 0][:: max(1, (n_points // 2) // 16)][:16]
    sym_gap = np.abs(_phi_values(phi, -probe) - np.conj(_phi_values(phi, probe)))
    if sym_gap.size and sym_gap.max() > 1e-10:
        raise AsymmetricCharFn(
            f"phi(-u) differs from conj(phi(u)) by {sym_gap.max():.3e}"
        )
    edge = max(16, n_points // 50)
    edge_level = float(np.mean(np.abs(np.concatenate([vals[:edge], vals[-edge:]]))))
    if edge_level > 0.1:
        raise AliasingSuspected(
            f"|phi| averages {edge_level:.3g} at |u| = {u_max:g}; "
            "the inversion window does not capture the transform"
        )

    x = np.linspace(float(x_min), float(x_max), n_x)
    w = np.full(n_points, u[1] - u[0])
    w[0] *= 0.5
    w[-1] *= 0.5
    weighted = vals * w / (2.0 * math.pi)

    p_cplx = np.empty(n_x, dtype=complex)
    block = max(1, 2**22 // int(n_points))
    for i in range(0, n_x, block):
        xs = x[i : i + block]
        p_cplx[i : i + block] = np.exp(-1j * np.outer(xs, u)) @ weighted

    imag_residue = float(np.max(np.abs(p_cplx.imag))) if n_x else 0.0
    if imag_residue > 1e-8:
        raise NumericalError(
            f"imaginary residue {imag_residue:.3e} after inversion exceeds 1e-8"
        )
    p = p_cplx.real.copy()
    neg = p < 0
    if np.any(p[neg] < -1e-8):
        raise NegativeDensity(
            f"density reached {p.min():.3e}, below the -1e-8 ringing budget"
        )
    p[neg] = 0.0

    if check_aliasing:
        wide = invert_characteristic(phi, 2 * u_max, 2 * int(n_points) - 1,
                                     x_grid, check_aliasing=False)
        if np.max(np.abs(wide.p - p)) > 1e-6:
            raise AliasingSuspected(
                "doubling the u-window changed the density by more than 1e-6"
            )

    mass = float(np.trapezoid(p, x))
    return DensityGrid(x, p, mass, imag_residue)


# ---------------------------------------------------------------------------
# Normal special functions
# ---------------------------------------------------------------------------


def normal_cdf(x):
    """Standard normal distribution function, erfc-based (abs error ~1e-15)."""
    return 0.5 * erfc(-np.asarray(x, dtype=float) / math.sqrt(2.0))


def normal_pdf(x, mean: float = 0.0, var: float = 1.0):
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * (x - mean) ** 2 / var) / math.sqrt(2.0 * math.pi * var)


# ---------------------------------------------------------------------------
# Counter-based random numbers
# ---------------------------------------------------------------------------


def _mix64(z: int) -> int:
    # splitmix64 finalizer
    z = (z + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return z ^ (z >> 31)


def _route_word(item) -> int:
    if isinstance(item, (int, np.integer)):
        return int(item) & 0xFFFFFFFFFFFFFFFF
    if isinstance(item, str):
        h = 0x811C9DC5
        for byte in item.encode("utf8"):
            h = ((h ^ byte) * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
        return h
    raise TypeError(f"stream ids must be ints or strings, got {type(item)!r}")


@dataclass(frozen=True)
class RandomStream:
    """A named random stream.

    Output is a pure function of (seed, route, counter): identical arguments
    give identical values regardless of call order or parallel scheduling.
    Distinct child streams are statistically independent.
    """

    seed: int
    route: tuple = ()

    def child(self, *ids) -> "RandomStream":
        return RandomStream(self.seed, self.route + tuple(ids))

    def _key(self) -> int:
        h1 = _mix64(self.seed & 0xFFFFFFFFFFFFFFFF)
        h2 = _mix64(h1 ^ 0xD1B54A32D192ED03)
        for item in self.route:
            w = _route_word(item)
            h1 = _mix64(h1 ^ w)
            h2 = _mix64(h2 ^ _mix64(w))
        return (h1 << 64) | h2

    def uniforms(self, n: int, counter: int = 0) -> np.ndarray:
        """n doubles in (0, 1); draw j is uint64 number counter + j of the stream."""
        if n < 0 or counter < 0:
            raise ValueError("n and counter must be non-negative")
        if n == 0:
            return np.empty(0)
        bg = np.random.Philox(key=self._key())
        skip = counter % 4
        if counter // 4:
            bg.advance(counter // 4)
        raw = bg.random_raw(n + skip)[skip:]
        u = (raw >> np.uint64(11)) * 2.0**-53
        # keep strictly inside (0, 1) for inverse-CDF transforms
        return np.clip(u, 2.0**-55, 1.0 - 2.0**-53)

    def normals(self, n: int, counter: int = 0) -> np.ndarray:
        """Standard normals by inverse CDF; draw j depends only on counter + j."""
        return ndtri(self.uniforms(n, counter))

    def poisson(self, rate: float) -> int:
        """One Poisson draw by CDF inversion; consumes a single uniform."""
        return int(self.poisson_batch(1, rate)[0])

    def poisson_batch(self, n: int, rate: float) -> np.ndarray:
        if rate < 0:
            raise ValueError("Poisson rate must be non-negative")
        if rate == 0.0:
            return np.zeros(n, dtype=np.int64)
        if rate > 500.0:
            raise ValueError("Poisson inversion table supports rates up to 500")
        kmax = int(rate + 12.0 * math.sqrt(rate) + 25.0)
        k = np.arange(kmax + 1)
        from scipy.special import gammaln

        logpmf = k * math.log(rate) - rate - gammaln(k + 1.0)
        cdf = np.cumsum(np.exp(logpmf))
        u = self.uniforms(n)
        return np.searchsorted(cdf, u, side="right").astype(np.int64)


def rng_normal(stream: RandomStream, n: int, counter: int = 0) -> np.ndarray:
    """Counter-based standard normal draws from a stream."""
    return stream.normals(n, counter)


def rng_poisson(stream: RandomStream, rate: float) -> int:
    """Counter-based Poisson draw from a stream."""
    return stream.poisson(rate)
