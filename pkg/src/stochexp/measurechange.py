"""Girsanov machinery for tilts generated by a stochastic exponential.

A tilt entry psi with 1 + psi >= 0 defines the non-negative density process
Z = E(psi o X); normalizing by its multiplicative compensator gives the
martingale density M of a new measure Q.  Under Q the drift of any
represented process xi o X picks up the covariation with psi o X, realized
through the combined entry xi(1 + psi) = xi + xi psi on the common driver,
the jump measure gains the weight 1 + psi(x), and the scheduled-jump laws
tilt by the same weight renormalized to mass one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .numkernel import NumericalError, QuadratureSpec, DEFAULT_QUAD
from .levycalc import (
    AtomJumps,
    AtomLaw,
    DegenerateJump,
    GaussianJumps,
    JumpLaw,
    JumpMeasure,
    LevyTriplet,
    PredictableJumpSchedule,
    RepresentingFunction,
    TransformedJumps,
    WeightedJumps,
    _sched_or_empty,
    drift_rate,
    dp_drift,
    law_expect,
    rf_product,
    rf_sum,
)

__all__ = [
    "InvalidTilt",
    "GirsanovTilt",
    "TiltedLaw",
    "QCharacteristics",
    "q_characteristics",
    "q_mult_compensator",
    "q_expected_stoch_exp",
]


class InvalidTilt(NumericalError):
    """The tilt entry does not define a non-negative density process."""


def _support_points(jumps: JumpMeasure | None) -> np.ndarray:
    if jumps is None:
        return np.empty(0)
    if isinstance(jumps, AtomJumps):
        return np.array([s for s, _ in jumps.atoms])
    if isinstance(jumps, GaussianJumps):
        lo, hi = jumps.window
        return np.linspace(lo, hi, 513)
    if isinstance(jumps, (TransformedJumps, WeightedJumps)):
        return _support_points(jumps.base)
    raise TypeError(f"unknown jump measure {type(jumps)!r}")


def _law_points(law: JumpLaw) -> np.ndarray:
    if isinstance(law, AtomLaw):
        return np.array([s for s, _ in law.atoms])
    lo, hi = law.window
    return np.linspace(lo, hi, 513)


@dataclass(frozen=True)
class GirsanovTilt:
    """Measure change generated by Z = E(psi o X).

    psi must be real-valued with 1 + psi >= 0 on the jump support and on
    every scheduled law (psi = -1 on a jump set is allowed: Q kills those
    jumps), and no scheduled time may have E[1 + psi(jump)] = 0.
    """

    psi: RepresentingFunction
    underlying: LevyTriplet
    sched: PredictableJumpSchedule | None = None

    def __post_init__(self):
        if complex(self.psi.d0).imag != 0.0 or complex(self.psi.d20).imag != 0.0:
            raise InvalidTilt("tilt entries must be real-valued")
        pts = _support_points(self.underlying.jumps)
        if pts.size:
            vals = np.asarray(self.psi(pts), dtype=complex)
            if np.any(np.isnan(vals.real)):
                raise InvalidTilt("tilt entry undefined on the jump support")
            if np.max(np.abs(vals.imag)) > 1e-12:
                raise InvalidTilt("tilt entry must map jumps to real values")
            if np.min(1.0 + vals.real) < -1e-10:
                raise InvalidTilt(
                    f"1 + psi reaches {1.0 + vals.real.min():.3e} < 0 on the "
                    "jump support; the density process would change sign")
        for tau, law in _sched_or_empty(self.sched).entries:
            lv = np.asarray(self.psi(_law_points(law)), dtype=complex)
            if np.any(np.isnan(lv.real)) or np.min(1.0 + lv.real) < -1e-10:
                raise InvalidTilt(
                    f"1 + psi fails to be non-negative for the law at {tau}")
            norm = 1.0 + law_expect(law, self.psi, kinks=self.psi.kinks)
            if abs(norm) <= 1e-12:
                raise InvalidTilt(
                    f"E[1 + psi(jump)] = 0 at scheduled time {tau}; the "
                    "compensator jumps by -1")

    def weight(self) -> Callable:
        """Density weight x -> 1 + psi(x) on jump sizes."""
        psi = self.psi
        return lambda x: 1.0 + np.real(np.asarray(psi(x), dtype=complex))


@dataclass(frozen=True)
class TiltedLaw:
    """A scheduled-jump law reweighted by (1 + psi) / E[1 + psi]."""

    base: JumpLaw
    psi: RepresentingFunction
    normalizer: float

    def expect(self, f: Callable, kinks: tuple = (),
               quad: QuadratureSpec = DEFAULT_QUAD) -> complex:
        psi = self.psi
        g = lambda x: (np.asarray(f(x), complex)
                       * (1.0 + np.real(np.asarray(psi(x), complex))))
        return law_expect(self.base, g, tuple(kinks) + tuple(psi.kinks),
                          quad) / self.normalizer

    def as_atoms(self) -> AtomLaw:
        """Materialized tilted law; only defined for atomic bases."""
        if not isinstance(self.base, AtomLaw):
            raise TypeError("only atomic laws materialize exactly")
        sizes = np.array([s for s, _ in self.base.atoms])
        probs = np.array([p for _, p in self.base.atoms])
        w = 1.0 + np.real(np.asarray(self.psi(sizes), complex))
        tilted = probs * w
        tilted = tilted / tilted.sum()
        return AtomLaw(tuple(zip(sizes.tolist(), tilted.tolist())))


@dataclass(frozen=True)
class QCharacteristics:
    """Characteristics of xi o X under the tilted measure.

    q_schedule lists (time, tilted law, drift increment) per scheduled time;
    diffusion is unchanged by the measure change.
    """

    drift_rate: complex
    diffusion: float
    q_jumps: JumpMeasure
    q_schedule: tuple


def q_characteristics(xi: RepresentingFunction, tilt: GirsanovTilt,
                      quad: QuadratureSpec = DEFAULT_QUAD) -> QCharacteristics:
    """Full tilted characteristics of V = xi o X.

    The Q drift rate is the P drift rate of the entry xi(1 + psi); the jump
    measure is the push-forward under xi of the (1 + psi)-weighted measure;
    scheduled laws tilt by (1 + psi) with drift increments
    E[xi (1 + psi)] / E[1 + psi].
    """
    if complex(xi.d0).imag != 0.0 or complex(xi.d20).imag != 0.0:
        raise ValueError("q_characteristics describes a real process; use "
                         "q_expected_stoch_exp for complex exponents")
    combined = rf_sum(xi, rf_product(xi, tilt.psi))
    q_rate = drift_rate(combined, tilt.underlying, quad)

    weighted = WeightedJumps(tilt.underlying.jumps, tilt.weight(),
                             weight_kinks=tuple(tilt.psi.kinks))
    q_jumps = weighted if xi.label == "id" else TransformedJumps(weighted, xi)

    q_sched = []
    for tau, law in _sched_or_empty(tilt.sched).upto(math.inf):
        norm = (1.0 + law_expect(law, tilt.psi, kinks=tilt.psi.kinks, quad=quad)).real
        inc = law_expect(law, combined, kinks=combined.kinks, quad=quad) / norm
        q_sched.append((tau, TiltedLaw(law, tilt.psi, norm), inc))

    d0 = complex(xi.d0).real
    return QCharacteristics(q_rate, d0 * d0 * tilt.underlying.sigma2,
                            q_jumps, tuple(q_sched))


def q_mult_compensator(xi_w: RepresentingFunction, tilt: GirsanovTilt,
                       t_end: float,
                       quad: QuadratureSpec = DEFAULT_QUAD) -> complex:
    """Multiplicative compensator of E(xi_w o X) under the tilted measure.

    Ratio form: the compensator of the combined drift B^{L(Z)} + B^{L(W) +
    [L(W), L(Z)]} divided by the compensator of B^{L(Z)}; with a common
    driver both reduce to drift rates of catalog entries.
    """
    combined = rf_sum(xi_w, rf_product(xi_w, tilt.psi))
    rate = drift_rate(combined, tilt.underlying, quad)
    value = complex(np.exp(rate * t_end))
    for (tau, inc_w), (_, inc_z) in zip(
        dp_drift(combined, tilt.sched, t_end, quad),
        dp_drift(tilt.psi, tilt.sched, t_end, quad),
    ):
        denom = 1.0 + inc_z
        factor = (1.0 + inc_z + inc_w) / denom
        if abs(factor) <= 1e-12:
            raise DegenerateJump(
                f"tilted compensator factor vanished at scheduled time {tau}")
        value *= factor
    return value


def q_expected_stoch_exp(xi_v: RepresentingFunction, tilt: GirsanovTilt,
                         t_end: float,
                         quad: QuadratureSpec = DEFAULT_QUAD) -> complex:
    """E_Q[E(xi_v o X)_t]: independent increments persist under the tilt, so
    the expectation equals the tilted multiplicative compensator."""
    try:
        return q_mult_compensator(xi_v, tilt, t_end, quad)
    except DegenerateJump:
        return 0j
