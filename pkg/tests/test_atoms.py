import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from laguerre_hardy.atoms import (
    AtomSpec,
    CalibrationResult,
    _bound_constants,
    _calibration_degrees,
    atom_coefficients,
    atom_conv,
    atom_std,
    calibrate_c,
    check_atom,
    default_delta,
    l1_divergence_scan,
    sharpness_scan,
)
from laguerre_hardy.errors import CalibrationError, DomainError
from laguerre_hardy.hardy import LaguerreSetting
from laguerre_hardy.quadrature import QuadratureRule, inner_product, mu_ball, validate_atom
from laguerre_hardy.specfun import System, ell_conv_table, ell_std_table

SHORT_K = tuple(2**j for j in range(4, 11))


class TestCalibration:
    def test_conv_zero(self):
        cal = calibrate_c(0.0, "conv")
        assert isinstance(cal, CalibrationResult)
        assert 0 < cal.A <= cal.B and cal.ratio <= 4.0
        assert cal.B == pytest.approx(math.sqrt(2), rel=1e-3)

    def test_small_c_limits(self):
        ks = _calibration_degrees(4096)
        A, B = _bound_constants(0.0, System.CONV, 0.01, ks)
        assert A == pytest.approx(math.sqrt(2), rel=1e-3) and B == pytest.approx(math.sqrt(2), rel=1e-3)
        # L_k^0(c/k) is about 1 - c near the endpoint
        A, B = _bound_constants(0.0, System.STD, 1e-4, ks)
        assert A == pytest.approx(1.0, rel=1e-3) and B == pytest.approx(1.0, rel=1e-3)

    def test_monotone_in_c(self):
        ks = _calibration_degrees(1024)
        pairs = [_bound_constants(1.0, System.CONV, c, ks) for c in (0.2, 0.5, 0.9, 1.3)]
        As, Bs = zip(*pairs)
        assert all(a >= b for a, b in zip(As, As[1:]))
        assert all(a <= b for a, b in zip(Bs, Bs[1:]))

    @pytest.mark.parametrize("system,alpha", [("conv", -0.5), ("conv", 1.0), ("std", 1.0), ("std", 2.0)])
    def test_two_sided_bound(self, system, alpha):
        cal = calibrate_c(alpha, system)
        rng = np.random.default_rng(4)
        for k in (1, 2, 5, 16, 300, 4096):
            right = cal.c / math.sqrt(k) if system == "conv" else cal.c / k
            u = right * rng.uniform(1e-3, 1.0, 200)
            if system == "conv":
                vals = ell_conv_table(k, alpha, u)[k] / k ** (alpha / 2)
            else:
                vals = ell_std_table(k, alpha, u)[k] / (k * u) ** (alpha / 2)
            # degrees away from the sampled set may exceed the bounds slightly
            assert np.all(vals >= cal.A * (1 - 1e-2))
            assert np.all(vals <= cal.B * (1 + 1e-2))

    def test_cached(self):
        assert calibrate_c(0.0, "conv") is calibrate_c(0.0, "conv")

    def test_large_alpha_fails(self):
        # near the origin B/A is at least sqrt(Gamma(alpha+2)) ~ 4.9 at alpha = 3
        with pytest.raises(CalibrationError):
            calibrate_c(3.0, "std")
        cal = calibrate_c(3.0, "std", max_ratio=8)
        assert cal.ratio <= 8

    def test_domain(self):
        with pytest.raises(DomainError):
            calibrate_c(-0.7, "conv")
        with pytest.raises(DomainError):
            calibrate_c(0.0, "conv", k_max=10)


class TestAtomConv:
    def test_closed_form_example(self):
        atom = atom_conv(0.0, 100, 0.8, c=1.0)
        heights = [h for _, h in atom.pieces]
        assert heights[0] == pytest.approx((0.8**-2 - 1) * 100)
        assert heights[1] == pytest.approx(-100.0)
        rep = check_atom(atom)
        assert abs(rep.mean) <= 1e-10 * rep.l1_norm
        assert rep.l2_norm**2 == pytest.approx(100 * (0.8**-2 - 1) / 2, rel=1e-12)
        assert rep.mu_ball == pytest.approx(1 / 200, rel=1e-12)
        assert rep.is_atom

    def test_exact_mean(self):
        atom = atom_conv(1.5, 64, 0.9, c=0.7)
        m = atom.measure
        from laguerre_hardy.quadrature import mu_measure

        total = sum(h * mu_measure(m, box) for box, h in atom.pieces)
        scale = sum(abs(h) * mu_measure(m, box) for box, h in atom.pieces)
        assert abs(total) < 1e-14 * scale

    def test_near_boundary(self):
        atom = atom_conv(0.0, 50, 2**-0.5 + 1e-9, c=1.0)
        assert check_atom(atom).is_atom

    def test_bounds(self):
        with pytest.raises(DomainError, match="0.707"):
            atom_conv(0.0, 10, 0.7, c=1.0)
        with pytest.raises(DomainError):
            atom_conv(0.0, 10, 1.0, c=1.0)
        with pytest.raises(DomainError):
            atom_conv(0.0, 0, 0.8, c=1.0)

    def test_two_dimensional(self):
        atom = atom_conv((0.0, 0.0), 64, 0.9)
        rep = check_atom(atom)
        assert rep.is_atom and rep.slack > 0
        assert len(atom.pieces) == 4
        half = atom.c[0] / 16
        assert atom.ball.center == (half, half)
        assert atom.ball.radius == pytest.approx(math.sqrt(2) * half)

    def test_multi_d_bound(self):
        bound = (1 + 2.0**-1) ** -0.5
        atom_conv((0.0, 0.0), 16, bound, c=1.0)
        with pytest.raises(DomainError):
            atom_conv((0.0, 0.0), 16, bound - 1e-6, c=1.0)

    def test_default_delta(self):
        s = LaguerreSetting("conv", 0.0)
        assert default_delta(s) == pytest.approx((1 + 2**-0.5) / 2)

    def test_default_c_is_minimum(self):
        atom = atom_conv((0.0, 1.0), 32)
        assert atom.c[0] == pytest.approx(min(calibrate_c(0.0).c, calibrate_c(1.0).c))

    def test_callable_matches_pieces(self):
        atom = atom_conv(0.5, 40, 0.85, c=0.9)
        rep_pieces = check_atom(atom)
        cut = atom.axes[0][0][0][1]
        rep_call = validate_atom(atom, atom.measure, ball=atom.ball, breakpoints=[cut])
        assert rep_call.l2_norm == pytest.approx(rep_pieces.l2_norm, rel=1e-10)
        assert abs(rep_call.mean) < 1e-9 * rep_call.l1_norm

    def test_as_dict(self):
        d = atom_conv(0.0, 16, 0.8, c=1.0).as_dict()
        assert d["K"] == 16 and d["setting"]["system"] == "conv"


class TestAtomStd:
    def test_example_mean(self):
        atom = atom_std(1.0, 50, 0.1, c=1.0)
        (lo, cut), h0 = atom.axes[0][0]
        (_, end), h1 = atom.axes[0][1]
        assert h0 * (cut - lo) + h1 * (end - cut) == pytest.approx(0.0, abs=1e-14)
        assert check_atom(atom).is_atom

    def test_zero_pullback(self):
        conv = atom_conv(0.0, 100, 0.8, c=1.0)
        std = atom_std(0.0, 100, 0.8, c=1.0)
        for ((a, b), h), ((aa, bb), hh) in zip(conv.axes[0], std.axes[0]):
            assert (aa, bb) == pytest.approx((a * a, b * b)) and h == hh
        rep = check_atom(std)
        assert abs(rep.mean) <= 1e-10 * rep.l1_norm and rep.is_atom

    def test_delta_range(self):
        with pytest.raises(DomainError):
            atom_std(1.0, 10, 0.5, c=1.0)
        with pytest.raises(DomainError):
            atom_std((1.0, 2.0), 10, 0.1, c=1.0)

    def test_default_delta_flagged(self):
        atom = atom_std(1.0, 64)
        assert 0 < atom.delta <= 0.25
        assert "delta_source" in atom.meta

    def test_plain_c(self):
        atom = atom_std(1.0, 64, c=1.1)
        assert atom.c == (1.1,) and check_atom(atom).is_atom

    def test_relaxed_calibration(self):
        atom = atom_std(3.0, 64, c=calibrate_c(3.0, "std", max_ratio=8))
        assert check_atom(atom).is_atom
        table = atom_coefficients(atom)
        assert np.all(table.values[1:] > 0)

    def test_coefficient_positivity(self):
        atom = atom_std(1.0, 64)
        coef = atom_coefficients(atom).values
        k = np.arange(1, 65)
        assert np.all(coef[1:] > 0)
        # shape k^{1/2} K^{-1/2} up to constants
        scaled = coef[1:] / np.sqrt(k / 64)
        assert scaled.max() / scaled.min() < 10


class TestCoefficients:
    def test_against_inner_product(self):
        atom = atom_conv(0.0, 32, 0.8)
        table = atom_coefficients(atom)
        # independent check through the generic quadrature on the support
        fine = QuadratureRule(atom.ball.center[0] * 2, 2000, 16)
        ref = inner_product(atom, 5, atom.setting, fine)
        assert table[5] == pytest.approx(ref, rel=1e-10)

    def test_tensor_factorization(self):
        atom = atom_conv((0.0, 0.5), 32, 0.95)
        table = atom_coefficients(atom)
        one0 = atom_coefficients(atom_conv(0.0, 32, 0.95, c=atom.c[0])).values
        one1 = atom_coefficients(atom_conv(0.5, 32, 0.95, c=atom.c[0])).values
        for n in [(1, 1), (3, 7), (32, 2)]:
            assert table[n] == pytest.approx(one0[n[0]] * one1[n[1]], rel=1e-10)

    def test_conv_lower_growth(self):
        K = 64
        coef = atom_coefficients(atom_conv(0.0, K)).values[1:]
        k = np.arange(1, K + 1)
        assert np.all(coef > 0)
        scaled = coef / (k / K)
        assert scaled.min() > 0 and scaled.max() / scaled.min() < 20

    def test_quad_error_small(self):
        table = atom_coefficients(atom_conv(1.0, 256))
        assert table.quad_error < 1e-8 * np.max(np.abs(table.values))


class TestSharpness:
    def test_slope(self):
        fit = sharpness_scan(LaguerreSetting("conv", 0.0), 0.25, K_list=SHORT_K)
        assert abs(fit.slope - 0.25) < 0.05
        assert fit.grid["all_positive"]

    def test_slopes_increase(self):
        s = LaguerreSetting("conv", 0.0)
        slopes = [sharpness_scan(s, e, K_list=SHORT_K).slope for e in (0.1, 0.25, 0.4)]
        assert slopes[0] < slopes[1] < slopes[2]

    def test_bounded_at_zero(self):
        fit = sharpness_scan(LaguerreSetting("std", 1.0), 0.0, K_list=SHORT_K)
        assert fit.grid["spread"] <= 3.0

    def test_threads(self):
        s = LaguerreSetting("conv", 0.5)
        a = sharpness_scan(s, 0.25, K_list=SHORT_K[:5], threads=1)
        b = sharpness_scan(s, 0.25, K_list=SHORT_K[:5], threads=4)
        assert a.points == b.points

    def test_validation(self):
        s = LaguerreSetting("conv", 0.0)
        with pytest.raises(DomainError):
            sharpness_scan(s, 0.6)
        with pytest.raises(DomainError):
            sharpness_scan(s, 0.2, K_list=(16, 32, 64, 128))
        with pytest.raises(DomainError):
            sharpness_scan(s, 0.2, K_list=(16, 32, 64, 100, 200))


class TestL1Scan:
    def test_log_growth(self):
        scan = l1_divergence_scan(LaguerreSetting("conv", 0.0))
        assert scan.band <= 2.0
        assert scan.slope > 0

    def test_two_dimensional(self):
        scan = l1_divergence_scan(LaguerreSetting("conv", (0.0, 0.0)), K_list=tuple(2**j for j in range(4, 13)))
        assert scan.band <= 2.0

    def test_saturates(self):
        s = LaguerreSetting("conv", 0.0)
        base = l1_divergence_scan(s)
        raised = l1_divergence_scan(s, E=base.E + 0.25)
        assert raised.last_octave_increase < 0.05 < base.last_octave_increase

    def test_point_check(self):
        with pytest.raises(DomainError):
            l1_divergence_scan(LaguerreSetting("conv", 0.0), x=0.1)

    def test_as_fit(self):
        fit = l1_divergence_scan(LaguerreSetting("conv", 0.0), K_list=(16, 64, 256)).as_fit()
        assert len(fit.points) == 3


@settings(max_examples=20, deadline=None)
@given(alpha=st.floats(-0.5, 4.0), K=st.integers(1, 10_000), t=st.floats(0.01, 0.99), c=st.floats(0.1, 3.0))
def test_every_conv_atom_valid(alpha, K, t, c):
    lower = (1 + 2 ** (-alpha - 1)) ** (-1 / (2 * alpha + 2))
    delta = lower + t * (1 - lower)
    rep = check_atom(atom_conv(alpha, K, delta, c=c))
    assert rep.is_atom and rep.slack >= 0


@settings(max_examples=20, deadline=None)
@given(alpha=st.floats(0.1, 4.0), K=st.integers(1, 10_000), delta=st.floats(0.01, 0.49), c=st.floats(0.1, 3.0))
def test_every_std_atom_valid(alpha, K, delta, c):
    atom = atom_std(alpha, K, delta, c=CalibrationResult(c, 1.0, 2.0, (1, 4096), System.STD, alpha))
    rep = check_atom(atom)
    assert isinstance(atom, AtomSpec)
    assert rep.is_atom and rep.slack >= 0
    assert rep.mu_ball == pytest.approx(mu_ball(atom.measure, atom.ball), rel=1e-15)
