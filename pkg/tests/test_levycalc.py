import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stochexp.levycalc import (
    AtomJumps,
    AtomLaw,
    DegenerateJump,
    GaussianJumps,
    GaussianLaw,
    LevyTriplet,
    PredictableJumpSchedule,
    Truncation,
    affine,
    compose,
    dp_drift,
    drift_rate,
    exp_return,
    expected_exp_utility,
    expected_stoch_exp,
    exponential,
    exponential_compensator,
    identity,
    indicator_at_minus_one,
    is_special,
    jump_expect,
    jump_total,
    law_expect,
    levy_khintchin,
    log1p_entry,
    modulus_entry,
    modulus_of,
    modulus_power,
    mult_compensator,
    pushforward_triplet,
    rf_product,
    rf_sum,
    signed_power,
    yor_product,
)

MV_TRIPLET = LevyTriplet(0.2, 0.04, GaussianJumps(1.0, 0.0, 0.01), Truncation.zero())
MV_A = 4.484438439009606


# ---------------------------------------------------------------------------
# Representing function catalog
# ---------------------------------------------------------------------------

CATALOG = [
    identity(),
    affine(1.7),
    affine(-0.5 + 0.25j),
    exp_return(MV_A),
    exponential(0.8),
    exponential(1j * 2.0),
    log1p_entry(),
    modulus_power(0.75),
    modulus_power(1j * 3.0),
    signed_power(0.75),
    modulus_entry(),
    indicator_at_minus_one(),
    yor_product(exp_return(1.2), exponential(0.4)),
    rf_sum(affine(0.3), exponential(0.2)),
    rf_product(exponential(1.0), exponential(1.0)),
    compose(exponential(1.0), exp_return(0.9)),
    modulus_of(exp_return(2.0)),
]


@pytest.mark.parametrize("entry", CATALOG, ids=lambda e: e.label)
def test_catalog_zero_at_zero(entry):
    assert abs(complex(entry(np.array([0.0]))[0])) < 1e-12


@pytest.mark.parametrize("entry", CATALOG, ids=lambda e: e.label)
def test_catalog_derivatives_match_finite_differences(entry):
    h = 1e-5
    pts = entry(np.array([-h, 0.0, h]))
    d0_fd = (pts[2] - pts[0]) / (2.0 * h)
    d20_fd = (pts[2] - 2.0 * pts[1] + pts[0]) / (h * h)
    assert abs(d0_fd - entry.d0) < 1e-6 * (1.0 + abs(entry.d0))
    assert abs(d20_fd - entry.d20) < 1e-4 * (1.0 + abs(entry.d20))


def test_modulus_power_exact_at_zero_exponent():
    xi = modulus_power(0.0)
    vals = xi(np.array([-2.0, -1.0, -0.5, 0.0, 3.0]))
    assert np.allclose(vals, [0.0, -1.0, 0.0, 0.0, 0.0])


def test_signed_power_signs():
    xi = signed_power(0.0)
    vals = xi(np.array([-2.0, -1.0, -0.5, 3.0]))
    assert np.allclose(vals, [-2.0, -1.0, 0.0, 0.0])


def test_log1p_domain_sentinel():
    xi = log1p_entry()
    vals = xi(np.array([-1.5, 0.5]))
    assert math.isnan(vals[0].real)
    assert abs(vals[1] - math.log(1.5)) < 1e-15


def test_inverse_at_round_trip():
    for entry, y in [(exp_return(2.0), -1.0), (exponential(0.5), 0.3),
                     (affine(1.5), 0.6), (log1p_entry(), -0.2)]:
        (x,) = entry.preimages(y)
        assert abs(complex(entry(np.array([x]))[0]) - y) < 1e-12


# ---------------------------------------------------------------------------
# Jump measures, truncations, laws
# ---------------------------------------------------------------------------


def test_jump_expect_gaussian_matches_moments():
    nu = GaussianJumps(1.5, 0.1, 0.04)
    mean = jump_expect(nu, lambda x: x.astype(complex))
    second = jump_expect(nu, lambda x: (x * x).astype(complex))
    assert abs(mean - 1.5 * 0.1) < 1e-12
    assert abs(second - 1.5 * (0.04 + 0.01)) < 1e-12


def test_jump_expect_transformed_change_of_variables():
    nu = GaussianJumps(2.0, 0.0, 0.09)
    from stochexp.levycalc import TransformedJumps

    image = TransformedJumps(nu, exp_return(1.3))
    direct = jump_expect(nu, lambda x: (np.expm1(x) ** 2).astype(complex))
    via_image = jump_expect(image, lambda y: ((y / 1.3) ** 2).astype(complex))
    assert abs(direct - via_image) < 1e-10


def test_jump_total_variants():
    assert jump_total(GaussianJumps(1.5, 0, 1)) == 1.5
    assert jump_total(AtomJumps(((1.0, 0.25), (-2.0, 0.5)))) == 0.75


def test_atom_validation():
    with pytest.raises(ValueError):
        AtomJumps(((0.0, 1.0),))
    with pytest.raises(ValueError):
        AtomLaw(((1.0, 0.4), (-1.0, 0.4)))


def test_truncation_roundtrip_identity():
    trip = LevyTriplet(0.3, 0.02, GaussianJumps(1.2, 0.05, 0.09),
                       Truncation.bounded(1.0))
    back = trip.with_truncation(Truncation.zero()).with_truncation(
        Truncation.bounded(1.0))
    assert abs(back.b - trip.b) < 1e-12
    ident = trip.with_truncation(Truncation.identity())
    assert abs(ident.b - (trip.b + jump_expect(
        trip.jumps, lambda x: x.astype(complex)).real
        + -jump_expect(trip.jumps, lambda x: np.where(np.abs(x) <= 1, x, 0.0
                                                      ).astype(complex)).real)) < 1e-12


@settings(max_examples=20, deadline=None)
@given(b=st.floats(-1, 1), lam=st.floats(0.1, 2), m=st.floats(-0.3, 0.3),
       v=st.floats(0.01, 0.25), cut=st.floats(0.2, 2))
def test_truncation_covariance_of_drift(b, lam, m, v, cut):
    # drift_rate is invariant under re-truncation of the input triplet
    xi = exponential(0.7)
    t0 = LevyTriplet(b, 0.04, GaussianJumps(lam, m, v), Truncation.zero())
    t1 = t0.with_truncation(Truncation.bounded(cut))
    t2 = t0.with_truncation(Truncation.identity())
    r0 = drift_rate(xi, t0)
    assert abs(drift_rate(xi, t1) - r0) < 1e-10 * (1 + abs(r0))
    assert abs(drift_rate(xi, t2) - r0) < 1e-10 * (1 + abs(r0))


# ---------------------------------------------------------------------------
# Push-forward triplets and drifts
# ---------------------------------------------------------------------------


def test_pushforward_identity_is_noop():
    out = pushforward_triplet(identity(), MV_TRIPLET)
    assert out.b == pytest.approx(MV_TRIPLET.b, abs=1e-12)
    assert out.sigma2 == MV_TRIPLET.sigma2
    assert out.jumps is MV_TRIPLET.jumps


def test_pushforward_linear_scaling_of_atoms():
    t = LevyTriplet(0.1, 0.0, AtomJumps(((1.0, 0.4),)), Truncation.bounded(1.0))
    out = pushforward_triplet(affine(2.0), t)
    # image atom at 2 falls outside the bounded window, so the whole
    # compensation moves into the drift
    assert out.b == pytest.approx(2.0 * 0.1 + 0.4 * (0.0 - 2.0 * 1.0), abs=1e-12)
    assert abs(jump_expect(out.jumps, lambda y: (y == 2.0).astype(complex)) - 0.4) < 1e-12


def test_pushforward_mv_drift_pinned():
    # frozen from an independent scipy.quad evaluation of
    # -a mu - a sigma^2/2 + lam E[h(-a(e^G - 1))], h = id 1{|id| <= 1}
    out = pushforward_triplet(exp_return(MV_A), MV_TRIPLET,
                              trunc=Truncation.bounded(1.0))
    assert out.b == pytest.approx(-0.9887923710977946, abs=1e-10)
    assert out.sigma2 == pytest.approx(MV_A**2 * 0.04, abs=1e-12)


def test_pushforward_rejects_complex_entries():
    with pytest.raises(ValueError):
        pushforward_triplet(exponential(1j), MV_TRIPLET)


def test_drift_rate_identity_recovers_full_compensator():
    t = LevyTriplet(0.3, 0.02, GaussianJumps(1.2, 0.05, 0.09), Truncation.zero())
    assert abs(drift_rate(identity(), t)
               - t.with_truncation(Truncation.identity()).b) < 1e-12


def test_drift_rate_exponential_on_brownian_cumulant():
    # classical Gaussian cumulant zeta mu + zeta^2 sigma^2 / 2
    t = LevyTriplet(0.12, 0.09, AtomJumps(()), Truncation.zero())
    for zeta in (0.5, -1.2, 2.0 + 1.0j):
        assert abs(drift_rate(exponential(zeta), t)
                   - (zeta * 0.12 + 0.5 * zeta**2 * 0.09)) < 1e-12


def test_drift_rate_mellin_branch_display():
    # alpha B^{Y[h]} + alpha(alpha-1)/2 [Y,Y]^c + int (xi_j - alpha h) d nu^Y
    alpha = 1j * 1.5
    t_y = pushforward_triplet(exp_return(MV_A), MV_TRIPLET,
                              trunc=Truncation.bounded(1.0))
    got = drift_rate(modulus_power(alpha), t_y)
    h = t_y.trunc
    xi = modulus_power(alpha)
    tail = jump_expect(t_y.jumps,
                       lambda y: np.asarray(xi(y), complex) - alpha * h(y),
                       kinks=(-1.0, 1.0))
    manual = alpha * t_y.b + 0.5 * alpha * (alpha - 1.0) * t_y.sigma2 + tail
    assert abs(got - manual) < 1e-12


def test_composition_consistency_on_drift_and_jumps():
    # representing through the image equals representing the composite
    inner = exp_return(1.1)
    outer = exponential(0.6)
    composite = compose(outer, inner)
    t_y = pushforward_triplet(inner, MV_TRIPLET)
    lhs = drift_rate(outer, t_y)
    rhs = drift_rate(composite, MV_TRIPLET)
    assert abs(lhs - rhs) < 1e-10
    t_img = pushforward_triplet(outer, t_y)
    t_direct = pushforward_triplet(composite, MV_TRIPLET)
    rng = np.random.default_rng(42)
    for _ in range(10):
        c = rng.uniform(0.5, 3.0)
        f = lambda y: np.exp(-c * np.abs(y)).astype(complex)
        assert abs(jump_expect(t_img.jumps, f)
                   - jump_expect(t_direct.jumps, f)) < 1e-9


def test_is_special_cases():
    assert is_special(exponential(1.0), MV_TRIPLET)
    assert is_special(identity(), MV_TRIPLET)
    huge_atom = LevyTriplet(0, 0, AtomJumps(((500.0, 0.3),)), Truncation.zero())
    assert is_special(exponential(1.0), huge_atom)


# ---------------------------------------------------------------------------
# Scheduled jumps
# ---------------------------------------------------------------------------


def test_schedule_validation():
    with pytest.raises(ValueError):
        PredictableJumpSchedule(((0.5, GaussianLaw(0, 1)), (0.5, GaussianLaw(0, 1))))
    with pytest.raises(ValueError):
        PredictableJumpSchedule(((0.0, GaussianLaw(0, 1)),))


def test_dp_drift_centered_atoms():
    sched = PredictableJumpSchedule(((0.5, AtomLaw(((1.0, 0.5), (-1.0, 0.5)))),))
    [(tau, inc)] = dp_drift(identity(), sched, 1.0)
    assert tau == 0.5
    assert abs(inc) < 1e-15


def test_dp_drift_indicator_expectation():
    sched = PredictableJumpSchedule(((0.25, AtomLaw(((-1.0, 0.3), (1.0, 0.7)))),))
    [(_, inc)] = dp_drift(indicator_at_minus_one(), sched, 1.0)
    assert inc == pytest.approx(0.3, abs=1e-15)


def test_dp_drift_gaussian_utility_factor_pinned():
    # E[exp(-(e^G - 1))] - 1 for G ~ N(0, 0.01); scipy.quad reference
    entry = compose(exponential(1.0), exp_return(1.0))
    sched = PredictableJumpSchedule(((1.0, GaussianLaw(0.0, 0.01)),))
    [(_, inc)] = dp_drift(entry, sched, 1.0)
    assert inc.real == pytest.approx(1.0000123138124557 - 1.0, abs=1e-12)


def test_dp_drift_respects_horizon():
    sched = PredictableJumpSchedule(
        ((0.5, AtomLaw(((1.0, 1.0),))), (1.5, AtomLaw(((2.0, 1.0),)))))
    assert len(dp_drift(identity(), sched, 1.0)) == 1


# ---------------------------------------------------------------------------
# Compensators and expectations
# ---------------------------------------------------------------------------


def test_mult_compensator_affine_on_brownian():
    t = LevyTriplet(0.15, 0.09, AtomJumps(()), Truncation.zero())
    got = mult_compensator(affine(0.8), t, None, 2.0)
    assert abs(got - math.exp(0.8 * 0.15 * 2.0)) < 1e-12


def test_exponential_compensator_lognormal_mean():
    t = LevyTriplet(0.15, 0.09, AtomJumps(()), Truncation.zero())
    got = exponential_compensator(0.8, t, None, 2.0)
    want = math.exp((0.8 * 0.15 + 0.5 * 0.64 * 0.09) * 2.0)
    assert abs(got - want) < 1e-12
    assert exponential_compensator(0.0, t, None, 5.0) == pytest.approx(1.0)


def test_mult_compensator_degenerate_jump():
    sched = PredictableJumpSchedule(((0.5, AtomLaw(((-1.0, 1.0),))),))
    with pytest.raises(DegenerateJump):
        mult_compensator(identity(), MV_TRIPLET, sched, 1.0)
    assert expected_stoch_exp(identity(), MV_TRIPLET, sched, 1.0) == 0j
    # before the degenerate time the compensator is alive
    assert abs(expected_stoch_exp(identity(), MV_TRIPLET, sched, 0.4)) > 0.5


def test_expected_stoch_exp_martingale_case():
    # driftless compensated jump diffusion: E[E(id o X)_t] = 1
    nu = GaussianJumps(1.3, 0.02, 0.04)
    b = -jump_expect(nu, lambda x: x.astype(complex)).real
    t = LevyTriplet(b, 0.05, nu, Truncation.zero())
    for horizon in (0.5, 1.0, 3.0):
        assert abs(expected_stoch_exp(identity(), t, None, horizon) - 1.0) < 1e-10


def test_levy_khintchin_closed_forms():
    u, t_end = 1.3, 0.7
    drift = LevyTriplet(0.4, 0.0, AtomJumps(()), Truncation.zero())
    assert abs(levy_khintchin(u, drift, None, t_end)
               - cmath.exp(1j * u * 0.4 * t_end)) < 1e-13
    poisson = LevyTriplet(0.0, 0.0, AtomJumps(((1.0, 2.0),)), Truncation.zero())
    assert abs(levy_khintchin(u, poisson, None, t_end)
               - cmath.exp(2.0 * t_end * (cmath.exp(1j * u) - 1.0))) < 1e-13


def test_levy_khintchin_matches_expected_stoch_exp_exactly():
    for u in (0.5, 2.0, -3.0):
        lhs = levy_khintchin(u, MV_TRIPLET, None, 1.0)
        rhs = expected_stoch_exp(exponential(1j * u), MV_TRIPLET, None, 1.0)
        assert lhs == rhs


def test_levy_khintchin_conjugate_symmetry_and_bound():
    sched = PredictableJumpSchedule(((0.3, GaussianLaw(0.01, 0.02)),))
    for u in np.linspace(0.0, 15.0, 16):
        plus = levy_khintchin(float(u), MV_TRIPLET, sched, 1.0)
        minus = levy_khintchin(float(-u), MV_TRIPLET, sched, 1.0)
        assert minus == plus.conjugate()
        assert abs(plus) <= 1.0 + 1e-12


def test_utility_zero_position_is_one():
    law = GaussianLaw(0.0, 0.01)
    val = expected_exp_utility(0.0, 0.0, 0.2, 0.04, GaussianJumps(1, 0, 0.01),
                               2.0, law, 1.0)
    assert val == pytest.approx(1.0, abs=1e-12)


def test_utility_no_schedule_reduces_to_compensator():
    law = GaussianLaw(0.0, 0.01)
    jumps = GaussianJumps(1.0, 0.0, 0.01)
    val = expected_exp_utility(1.0, 1.0, 0.2, 0.04, jumps, 0.0, law, 1.0)
    trip = LevyTriplet(0.2, 0.04, jumps, Truncation.identity())
    entry = compose(exponential(1.0), exp_return(1.0))
    want = mult_compensator(entry, trip, None, 1.0)
    assert val == pytest.approx(want.real, abs=1e-12)


def test_utility_compensator_product_form():
    # with two scheduled times the compensator is e^{b_qc t} times the
    # squared scheduled factor, entries differing on the two components
    law = GaussianLaw(0.0, 0.01)
    trip = LevyTriplet(0.2, 0.04, GaussianJumps(1.0, 0.0, 0.01),
                       Truncation.identity())
    entry_l = compose(exponential(1.0), exp_return(1.0))
    entry_v = compose(exponential(1.0), exp_return(1.3))
    sched = PredictableJumpSchedule(((0.3, law), (0.7, law)))
    got = mult_compensator(entry_l, trip, sched, 1.0, dp_rep=entry_v)
    factor = 1.0 + dp_drift(entry_v, sched, 1.0)[0][1]
    want = cmath.exp(drift_rate(entry_l, trip) * 1.0) * factor**2
    assert abs(got - want) < 1e-12


def test_utility_qc_drift_display_pinned():
    # -lam_L mu + sigma^2 lam_L (lam_L - 1)/2 + int (e^{-lam_L(e^x-1)} - 1
    #  + lam_L x) Pi(dx); scipy.quad reference for the tail
    entry = compose(exponential(1.0), exp_return(1.0))
    trip = LevyTriplet(0.2, 0.04, GaussianJumps(1.0, 0.0, 0.01),
                       Truncation.identity())
    assert drift_rate(entry, trip).real == pytest.approx(
        -0.19998768618754445, abs=1e-12)


def test_law_expect_kink_handling():
    law = GaussianLaw(0.0, 0.25)
    val = law_expect(law, lambda x: np.abs(x).astype(complex), kinks=(0.0,))
    assert val.real == pytest.approx(math.sqrt(2 * 0.25 / math.pi), abs=1e-12)


def test_levy_khintchin_against_empirical_char_fn():
    from stochexp.mcoracle import SimConfig, estimate, simulate

    batch = simulate(MV_TRIPLET, None, SimConfig(100_000, 2718, 1.0))
    sums = np.zeros(len(batch))
    np.add.at(sums, np.repeat(np.arange(len(batch)), batch.counts), batch.sizes)
    x_t = MV_TRIPLET.drift_no_compensation * 1.0 + batch.brownian + sums
    for u in (1.0, 2.0):
        mean, se = estimate(np.exp(1j * u * x_t))
        assert abs(complex(mean) - levy_khintchin(u, MV_TRIPLET, None, 1.0)) \
            <= 3.0 * se
