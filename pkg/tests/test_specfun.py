import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy import special

from laguerre_hardy.errors import DomainError
from laguerre_hardy.specfun import (
    OrderParam,
    System,
    asymptotic_envelope,
    bessel_i_scaled,
    ell_conv,
    ell_conv_derivative,
    ell_conv_derivative_table,
    ell_conv_table,
    ell_std,
    ell_std_derivative,
    ell_std_derivative_table,
    ell_std_table,
    laguerre_polynomial,
    log_bessel_i_scaled,
    plancherel_nu,
)


def ell_by_definition(k, alpha, u):
    """Normalization times L_k^alpha(u^2) e^{-u^2/2}, through log-gamma."""
    lognorm = 0.5 * (math.log(2.0) + math.lgamma(k + 1) - math.lgamma(k + alpha + 1))
    return math.exp(lognorm - 0.5 * u * u) * special.eval_genlaguerre(k, alpha, u * u)


class TestOrderParam:
    def test_claim_ranges(self):
        assert OrderParam(-0.5, "conv").supports_claims()
        assert not OrderParam(-0.7, "conv").supports_claims()
        assert OrderParam(0.0, "std").supports_claims()
        assert not OrderParam(-0.2, "standard").supports_claims()

    def test_evaluation_range(self):
        with pytest.raises(DomainError):
            OrderParam(-1.0)

    def test_system_aliases(self):
        assert System.parse("Convolution") is System.CONV
        assert System.parse("standard") is System.STD
        with pytest.raises(DomainError):
            System.parse("hermite")


class TestLaguerrePolynomial:
    def test_degree_zero(self):
        assert laguerre_polynomial(0, 0.7, 3.2) == 1.0

    def test_degree_one(self):
        assert laguerre_polynomial(1, 0.5, 2.0) == pytest.approx(-0.5, abs=1e-15)

    def test_degree_two(self):
        # L_2^0(x) = (x^2 - 4x + 2) / 2
        assert laguerre_polynomial(2, 0.0, 1.0) == pytest.approx(-0.5, abs=1e-15)

    @pytest.mark.parametrize("alpha", [-0.5, 0.0, 1.3, 4.0])
    def test_against_scipy(self, alpha):
        x = np.linspace(0, 30, 41)
        for k in (3, 10, 25):
            assert_allclose(laguerre_polynomial(k, alpha, x),
                            special.eval_genlaguerre(k, alpha, x), rtol=1e-10, atol=1e-10)

    def test_rejects_alpha(self):
        with pytest.raises(DomainError):
            laguerre_polynomial(2, -1.0, 1.0)


class TestEllConv:
    def test_small_argument_limit(self):
        assert ell_conv(0, 0.0, 1e-12) == pytest.approx(math.sqrt(2.0), rel=1e-12)

    def test_degree_one_closed_form(self):
        assert abs(ell_conv(1, 0.0, 1.0)) < 1e-15
        expected = math.sqrt(2) * (1 - 0.25) * math.exp(-0.125)
        assert ell_conv(1, 0.0, 0.5) == pytest.approx(expected, rel=1e-14)
        assert expected == pytest.approx(0.936029, abs=1e-6)

    def test_sequence_matches_definition(self):
        table = ell_conv_table(64, 0.5, np.array([2.3]))[:, 0]
        ref = np.array([ell_by_definition(k, 0.5, 2.3) for k in range(65)])
        assert_allclose(table, ref, rtol=1e-12)

    @pytest.mark.parametrize("alpha", [-0.5, 0.0, 0.5, 1.0, 2.5])
    def test_recurrence_against_definition(self, alpha):
        # relative to the local amplitude: near a zero of ell_k relative
        # error is meaningless, so compare against max |ell_k| nearby
        u = np.linspace(0.05, 6.0, 120)
        table = ell_conv_table(200, alpha, u)
        for k in (1, 7, 50, 120, 200):
            ref = np.array([ell_by_definition(k, alpha, x) for x in u])
            scale = np.maximum(np.abs(ref), np.max(np.abs(ref)) * 1e-2)
            assert np.max(np.abs(table[k] - ref) / scale) < 1e-10

    def test_high_precision_oracle(self):
        mpmath.mp.dps = 40
        k, alpha, u = 150, 1.5, 3.7
        ref = mpmath.sqrt(2 * mpmath.gamma(k + 1) / mpmath.gamma(k + alpha + 1)) \
            * mpmath.laguerre(k, alpha, u * u) * mpmath.exp(-u * u / 2)
        assert ell_conv(k, alpha, u) == pytest.approx(float(ref), rel=1e-11)

    def test_large_degree_finite(self):
        u = np.linspace(0.0, 700.0, 101)
        vals = ell_conv(100_000, 0.5, u)
        assert np.all(np.isfinite(vals))
        mpmath.mp.dps = 30
        k = 100_000
        origin = mpmath.sqrt(2 * mpmath.gamma(k + 1.5) / mpmath.gamma(k + 1)) / mpmath.gamma(1.5)
        # rounding drifts linearly at the double root u = 0; about 2e-9 at this degree
        assert vals[0] == pytest.approx(float(origin), rel=1e-8)
        assert np.max(np.abs(vals[1:])) < 1

    def test_table_shape(self):
        u = np.ones((3, 4))
        assert ell_conv_table(5, 0.0, u).shape == (6, 3, 4)

    def test_scalar_returns_float(self):
        assert isinstance(ell_conv(3, 0.0, 1.0), float)

    def test_domain(self):
        with pytest.raises(DomainError):
            ell_conv(1, -1.5, 1.0)
        with pytest.raises(DomainError):
            ell_conv(-1, 0.0, 1.0)
        with pytest.raises(DomainError):
            ell_conv(1, 0.0, -1.0)


class TestEllStd:
    def test_degree_zero(self):
        expected = 2 ** -0.5 * math.sqrt(2) * math.exp(-0.005)
        assert ell_std(0, 0.0, 0.01) == pytest.approx(expected, rel=1e-14)
        assert expected == pytest.approx(0.995012, abs=1e-6)

    def test_zero_at_one(self):
        assert abs(ell_std(1, 0.0, 1.0)) < 1e-15

    def test_substitution_identity(self):
        k, alpha, u = 7, 1.5, 0.9
        lhs = ell_std(k, alpha, u * u) * math.sqrt(2) * u ** -alpha
        assert lhs == pytest.approx(ell_conv(k, alpha, u), rel=1e-12)

    def test_against_scipy(self):
        u = np.linspace(0.1, 40, 50)
        for k in (0, 4, 30):
            ref = np.exp(0.5 * (special.gammaln(k + 1) - special.gammaln(k + 3.0))) \
                * u ** 1.0 * np.exp(-u / 2) * special.eval_genlaguerre(k, 2.0, u)
            assert_allclose(ell_std(k, 2.0, u), ref, rtol=1e-10, atol=1e-14)

    def test_table_matches_single(self):
        u = np.array([0.3, 2.0, 11.0])
        table = ell_std_table(12, 0.5, u)
        assert_allclose(table[12], ell_std(12, 0.5, u), rtol=1e-14)


def central_difference(f, x, h=1e-6):
    return (f(x + h) - f(x - h)) / (2 * h)


class TestDerivatives:
    def test_conv_degree_zero(self):
        assert ell_conv_derivative(0, 0.0, 1.0) == pytest.approx(-math.sqrt(2) * math.exp(-0.5), rel=1e-14)
        assert ell_conv_derivative(0, 0.0, 1.0) == pytest.approx(-0.857763, abs=1e-6)

    def test_conv_finite_difference(self):
        fd = central_difference(lambda x: ell_conv(5, 0.5, x), 1.1)
        assert ell_conv_derivative(5, 0.5, 1.1) == pytest.approx(fd, rel=1e-6)

    def test_std_finite_difference(self):
        fd = central_difference(lambda x: ell_std(3, 2.0, x), 0.7)
        assert ell_std_derivative(3, 2.0, 0.7) == pytest.approx(fd, rel=1e-6)

    @pytest.mark.parametrize("system", ["conv", "std"])
    def test_grid(self, system):
        f, df = (ell_conv, ell_conv_derivative) if system == "conv" else (ell_std, ell_std_derivative)
        worst = 0.0
        for k in (0, 1, 5, 17, 50):
            for alpha in (0.0, 1.5):
                for u in np.geomspace(0.1, 10, 9):
                    exact = df(k, alpha, u)
                    fd = central_difference(lambda x: f(k, alpha, x), u)
                    # finite differences are accurate to ~1e-10 absolutely
                    worst = max(worst, abs(exact - fd) / max(abs(exact), 1e-4))
        assert worst < 1e-6

    def test_tables_match(self):
        u = np.array([0.2, 1.0, 3.3])
        assert_allclose(ell_conv_derivative_table(8, 0.5, u)[8], ell_conv_derivative(8, 0.5, u), rtol=1e-13)
        assert_allclose(ell_std_derivative_table(8, 0.5, u)[8], ell_std_derivative(8, 0.5, u), rtol=1e-13)

    def test_std_derivative_requires_positive(self):
        with pytest.raises(DomainError):
            ell_std_derivative(2, 1.0, 0.0)


class TestBessel:
    def test_half_integer(self):
        assert bessel_i_scaled(0.5, 1.0) == pytest.approx(
            math.exp(-1) * math.sqrt(2 / math.pi) * math.sinh(1), rel=1e-13)
        assert bessel_i_scaled(-0.5, 50.0) == pytest.approx(
            math.exp(-50) * math.sqrt(2 / (50 * math.pi)) * math.cosh(50), rel=1e-13)
        assert bessel_i_scaled(-0.5, 50.0) == pytest.approx(0.0564190, abs=1e-7)

    def test_small_z_leading_term(self):
        z = 1e-10
        assert bessel_i_scaled(0.3, z) == pytest.approx((z / 2) ** 0.3 / math.gamma(1.3), rel=1e-9)

    @pytest.mark.parametrize("alpha", [-0.9, -0.5, 0.0, 0.3, 1.0, 2.5, 6.0, 10.0])
    def test_against_scipy(self, alpha):
        z = np.concatenate([np.geomspace(1e-8, 1e6, 300), [29.9, 30.0, 30.1, alpha**2 + 30.5]])
        assert_allclose(bessel_i_scaled(alpha, z), special.ive(alpha, z), rtol=1e-12)

    def test_half_integer_closed_forms_on_grid(self):
        z = np.geomspace(1e-3, 1e3, 200)
        assert_allclose(bessel_i_scaled(0.5, z), np.sqrt(2 / (np.pi * z)) * -np.expm1(-2 * z) / 2, rtol=1e-12)
        assert_allclose(bessel_i_scaled(-0.5, z), np.sqrt(2 / (np.pi * z)) * (1 + np.exp(-2 * z)) / 2, rtol=1e-12)
        i32 = np.sqrt(2 / (np.pi * z)) * ((1 + np.exp(-2 * z)) / 2 + np.expm1(-2 * z) / (2 * z))
        mask = z > 1e-1  # the closed form cancels for small z
        assert_allclose(bessel_i_scaled(1.5, z[mask]), i32[mask], rtol=1e-12)

    def test_finite_everywhere(self):
        z = np.array([0.0, 1e-300, 1.0, 1e10, 1e300])
        assert np.all(np.isfinite(bessel_i_scaled(1.0, z)))

    def test_zero(self):
        assert bessel_i_scaled(0.0, 0.0) == 1.0
        assert bessel_i_scaled(2.0, 0.0) == 0.0

    def test_log_form(self):
        assert log_bessel_i_scaled(3.0, 1e5) == pytest.approx(math.log(special.ive(3.0, 1e5)), rel=1e-13)

    def test_domain(self):
        with pytest.raises(DomainError):
            bessel_i_scaled(0.0, -1.0)

    @settings(max_examples=40, deadline=None)
    @given(alpha=st.floats(0.0, 8.0), z=st.lists(st.floats(1e-6, 1e5), min_size=2, max_size=30))
    def test_monotone_unscaled(self, alpha, z):
        # I_alpha itself is increasing for alpha >= 0; the scaled version is
        # not (e^{-z} I_0(z) decreases), so the property is checked on I_alpha
        z = np.sort(np.asarray(z))
        log_i = log_bessel_i_scaled(alpha, z) + z
        assert np.all(np.diff(log_i) >= -1e-12 * np.abs(log_i[1:]))


class TestEnvelope:
    def test_region_one(self):
        assert plancherel_nu(0.0, 10) == 42.0
        region, env = asymptotic_envelope(10, 0.0, 0.05, "conv")
        assert region == 1 and env == pytest.approx(1.0)

    def test_region_two(self):
        region, env = asymptotic_envelope(10, 0.0, 3.0, "conv")
        assert region == 2
        assert env == pytest.approx(3.0 ** -0.5 * 42 ** -0.25)

    def test_regions_std(self):
        nu = plancherel_nu(1.0, 5)
        tags = asymptotic_envelope(5, 1.0, np.array([0.5 / nu, 1.0, nu, 2 * nu]), "std")[0]
        assert list(tags) == [1, 2, 3, 4]

    def test_nu_floor(self):
        assert plancherel_nu(-0.9, 0) == 2.0

    @pytest.mark.parametrize("system,alpha", [("conv", -0.5), ("conv", 0.0), ("conv", 2.5),
                                              ("std", 0.0), ("std", 2.0), ("std", 3.0)])
    def test_domination(self, system, alpha):
        u = np.geomspace(1e-3, 1e2, 300)
        table = (ell_conv_table if system == "conv" else ell_std_table)(1000, alpha, u)
        worst = 0.0
        for k in np.unique(np.geomspace(1, 1000, 40).astype(int)):
            _, env = asymptotic_envelope(int(k), alpha, u, system)
            worst = max(worst, float(np.max(np.abs(table[k]) / env)))
        assert np.isfinite(worst) and worst < 4.0

    def test_custom_decay(self):
        _, a = asymptotic_envelope(1, 0.0, 50.0, "conv", gamma_decay=0.1)
        _, b = asymptotic_envelope(1, 0.0, 50.0, "conv", gamma_decay=0.5)
        assert a > b

    @pytest.mark.parametrize("alpha", [-0.5, 0.0, 1.0, 2.5])
    def test_sup_norm_growth(self, alpha):
        ks = np.array([64, 128, 256, 512, 1024, 2048])
        u = np.concatenate([np.geomspace(1e-3, 1, 200), np.linspace(1, 100, 4000)])
        table = ell_conv_table(int(ks.max()), alpha, u)
        sups = np.max(np.abs(table[ks]), axis=1)
        slope = np.polyfit(np.log(ks), np.log(sups), 1)[0]
        expected = abs(alpha / 2 + 1 / 6) - 1 / 6
        assert abs(slope - expected) < 0.1


@settings(max_examples=30, deadline=None)
@given(k=st.integers(0, 60), alpha=st.floats(-0.5, 5.0), u=st.floats(1e-3, 15.0))
def test_std_conv_substitution_property(k, alpha, u):
    lhs = ell_std(k, alpha, u)
    rhs = 2 ** -0.5 * u ** (alpha / 2) * ell_conv(k, alpha, math.sqrt(u))
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-300)


@settings(max_examples=30, deadline=None)
@given(alpha=st.floats(-0.9, 6.0), z=st.floats(1e-4, 1e4))
def test_bessel_recurrence_property(alpha, z):
    # I_{a-1} - I_{a+1} = (2a/z) I_a, written for a+1 >= ... shifted up by one
    a = alpha + 1.0
    lhs = bessel_i_scaled(a - 1, z) - bessel_i_scaled(a + 1, z)
    rhs = 2 * a / z * bessel_i_scaled(a, z)
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-300)
