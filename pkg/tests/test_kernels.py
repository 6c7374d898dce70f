import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from laguerre_hardy.errors import DomainError
from laguerre_hardy.kernels import (
    KernelQuery,
    Variant,
    bessel_ratio,
    bessel_ratio_check,
    expected_norm_exponent,
    fit_loglog,
    kernel,
    kernel_bound,
    kernel_du,
    kernel_du_series,
    kernel_du_values,
    kernel_l2_norm,
    kernel_l2_norm_parseval,
    kernel_nd,
    kernel_series,
    kernel_values,
    scaling_fit,
    series_cap,
)
from laguerre_hardy.specfun import bessel_i_scaled, ell_conv, ell_conv_table


class TestKernelValue:
    def test_series_oracle_conv(self):
        q = KernelQuery("conv", 0.5, 0.5, 1.2, 0.7)
        ref = float(kernel_series("conv", 0.5, 0.5, 1.2, 0.7, 200))
        assert kernel(q) == pytest.approx(ref, rel=1e-10)

    def test_series_oracle_std(self):
        q = KernelQuery("std", 2.0, 0.3, 0.8, 1.1)
        ref = float(kernel_series("std", 2.0, 0.3, 0.8, 1.1, 200))
        assert kernel(q) == pytest.approx(ref, rel=1e-10)

    def test_small_r_limit(self):
        q = KernelQuery("conv", 0.0, 1e-8, 1.0, 1.0)
        assert kernel(q) == pytest.approx(2 * math.exp(-1), rel=1e-6)
        assert ell_conv(0, 0.0, 1.0) ** 2 == pytest.approx(2 * math.exp(-1), rel=1e-14)

    def test_symmetry(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            system = rng.choice(["conv", "std"])
            alpha, r = rng.uniform(0, 3), rng.uniform(0.01, 0.99)
            u, v = rng.uniform(0.01, 10, 2)
            assert kernel(KernelQuery(system, alpha, r, u, v)) == kernel(KernelQuery(system, alpha, r, v, u))

    def test_no_overflow_near_one(self):
        u = np.geomspace(1e-3, 50, 40)
        for system in ("conv", "std"):
            vals = kernel_values(system, 1.0, 0.9999, u, u[::-1])
            assert np.all(np.isfinite(vals)) and np.all(vals >= 0)
            diag = kernel_values(system, 1.0, 0.9999, u, u)
            assert np.all(np.isfinite(diag)) and np.all(diag > 0)

    def test_closed_form_definition_moderate(self):
        # direct formula with raw factors is safe away from r -> 1
        alpha, r, u, v = 1.5, 0.4, 0.9, 1.3
        z = 2 * math.sqrt(r) * u * v / (1 - r)
        raw = 2 / ((1 - r) * r ** (alpha / 2) * (u * v) ** alpha) \
            * math.exp(-0.5 * (1 + r) / (1 - r) * (u * u + v * v)) * bessel_i_scaled(alpha, z) * math.exp(z)
        assert kernel_values("conv", alpha, r, u, v) == pytest.approx(raw, rel=1e-13)

    def test_domain(self):
        with pytest.raises(DomainError):
            KernelQuery("conv", 0.0, 1.0, 1.0, 1.0)
        with pytest.raises(DomainError):
            KernelQuery("conv", 0.0, 0.5, 0.0, 1.0)
        with pytest.raises(DomainError):
            kernel_values("conv", 0.0, -0.1, 1.0, 1.0)

    def test_series_cap_grows(self):
        assert series_cap("conv", 0.0, 0.5) < series_cap("conv", 0.0, 0.9) < series_cap("conv", 0.0, 0.99)
        assert series_cap("conv", 0.0, 0.0) == 0

    @pytest.mark.parametrize("system", ["conv", "std"])
    def test_random_against_series(self, system):
        rng = np.random.default_rng(5)
        for _ in range(30):
            alpha = rng.choice([-0.5, 0.0, 1.0, 2.5]) if system == "conv" else rng.choice([0.0, 1.0, 3.0])
            r = float(rng.uniform(0.05, 0.8))
            u, v = rng.uniform(0.05, 4.0, 2)
            cap = series_cap(system, alpha, r)
            terms = ell_conv_table(cap, alpha, np.array([u, v])) if system == "conv" else None
            ref = kernel_series(system, alpha, r, u, v, cap)
            if terms is not None:
                scale = np.sum(r ** np.arange(cap + 1) * np.abs(terms[:, 0] * terms[:, 1]))
            else:
                scale = abs(ref)
            assert abs(kernel_values(system, alpha, r, u, v) - ref) <= 1e-12 * scale


class TestKernelDerivative:
    def test_finite_difference_conv(self):
        h = 1e-6
        fd = (kernel_values("conv", 0.5, 0.6, 1.5 + h, 0.4) - kernel_values("conv", 0.5, 0.6, 1.5 - h, 0.4)) / (2 * h)
        assert kernel_du(KernelQuery("conv", 0.5, 0.6, 1.5, 0.4)) == pytest.approx(float(fd), rel=1e-5)

    def test_finite_difference_std(self):
        h = 1e-6
        fd = (kernel_values("std", 2.0, 0.5, 2 + h, 1.0) - kernel_values("std", 2.0, 0.5, 2 - h, 1.0)) / (2 * h)
        assert kernel_du(KernelQuery("std", 2.0, 0.5, 2.0, 1.0)) == pytest.approx(float(fd), rel=1e-5)

    def test_series(self):
        got = kernel_du_values("conv", 0.5, 0.6, 1.5, 0.4)
        ref = kernel_du_series("conv", 0.5, 0.6, 1.5, 0.4, 300)
        assert got == pytest.approx(float(ref), rel=1e-8)

    def test_small_r_path(self):
        got = kernel_du_values("conv", 1.0, 1e-7, 0.8, 0.5)
        ref = kernel_du_series("conv", 1.0, 1e-7, 0.8, 0.5, 30)
        assert got == pytest.approx(float(ref), rel=1e-12)


class TestTensor:
    def test_product_matches_2d_series(self):
        from laguerre_hardy.specfun import ell_conv_table as tab

        alpha, r = (0.0, 1.0), 0.4
        x, y = (0.7, 1.2), (1.1, 0.3)
        cap = 80
        t0 = tab(cap, alpha[0], np.array([x[0], y[0]]))
        t1 = tab(cap, alpha[1], np.array([x[1], y[1]]))
        rk = r ** np.arange(cap + 1)
        # sum over multi-indices of r^{|n|} phi_n(x) phi_n(y)
        series = np.sum(rk * t0[:, 0] * t0[:, 1]) * np.sum(rk * t1[:, 0] * t1[:, 1])
        assert kernel_nd("conv", alpha, r, x, y) == pytest.approx(series, rel=1e-8)


class TestNorms:
    def test_parseval_conv(self):
        quad = kernel_l2_norm("conv", 0.0, 0.4, 1.0)
        series = kernel_l2_norm_parseval("conv", 0.0, 0.4, 1.0, kmax=400)
        assert quad == pytest.approx(series, rel=1e-8)

    def test_parseval_std(self):
        quad = kernel_l2_norm("std", 1.0, 0.5, 2.0)
        assert quad == pytest.approx(kernel_l2_norm_parseval("std", 1.0, 0.5, 2.0, kmax=400), rel=1e-8)

    def test_parseval_derivative(self):
        quad = kernel_l2_norm("conv", 1.0, 0.7, 0.8, Variant.DERIVATIVE)
        assert quad == pytest.approx(kernel_l2_norm_parseval("conv", 1.0, 0.7, 0.8, "derivative"), rel=1e-7)

    def test_blow_up(self):
        assert kernel_l2_norm("conv", 0.0, 0.99, 1.0) > kernel_l2_norm("conv", 0.0, 0.9, 1.0)

    def test_contraction(self):
        # partial sums of r^{2k}|c_k|^2 never exceed those of |c_k|^2
        rng = np.random.default_rng(2)
        coeffs = rng.normal(size=200) / np.arange(1, 201)
        for r in (0.3, 0.9, 0.999):
            damped = np.cumsum(r ** (2 * np.arange(200)) * coeffs**2)
            assert np.all(damped <= np.cumsum(coeffs**2))

    def test_expected_exponents(self):
        assert expected_norm_exponent("conv", 1.0, "value") == -1.0
        assert expected_norm_exponent("conv", 1.0, "derivative") == -1.5
        assert expected_norm_exponent("std", 3.0, "value") == -0.5
        assert expected_norm_exponent("std", 0.0, "derivative") == -1.5
        assert expected_norm_exponent("std", 1.0, "derivative") is None


class TestScalingFit:
    def test_fit_loglog_exact(self):
        x = np.geomspace(1e-3, 1e-1, 6)
        slope, intercept, resid = fit_loglog(x, 3 * x**-0.75)
        assert slope == pytest.approx(-0.75, abs=1e-12)
        assert intercept == pytest.approx(math.log(3), abs=1e-12)
        assert resid < 1e-12

    @pytest.mark.parametrize("system,alpha,variant,slope,tol", [
        ("conv", 0.0, "value", -0.5, 0.05),
        ("conv", 1.0, "derivative", -1.5, 0.1),
        ("std", 0.0, "derivative", -1.5, 0.1),
        ("std", 2.5, "value", -0.5, 0.05),
    ])
    def test_examples(self, system, alpha, variant, slope, tol):
        # the supremum of the standard derivative norm sits at small u,
        # so the default grid reaching down to 1e-4 is needed
        fit = scaling_fit(system, alpha, variant)
        assert abs(fit.slope - slope) <= tol
        assert len(fit.grid["one_minus_r"]) >= 5
        assert np.isfinite(fit.max_residual)

    def test_threads_deterministic(self):
        grid = tuple(np.geomspace(0.05, 20, 8))
        a = scaling_fit("conv", 0.0, "value", u_grid=grid, threads=1)
        b = scaling_fit("conv", 0.0, "value", u_grid=grid, threads=3)
        assert a.slope == b.slope and a.points == b.points

    def test_grid_validation(self):
        with pytest.raises(DomainError):
            scaling_fit("conv", 0.0, "value", one_minus_r=(0.1, 0.01))
        with pytest.raises(DomainError):
            scaling_fit("conv", 0.0, "value", u_grid=(1.0, 2.0))


class TestBesselRatio:
    def test_minus_half_closed_form(self):
        z = np.geomspace(1e-4, 1e4, 500)
        closed = 2 * z * np.exp(-2 * z) / -np.expm1(-2 * z)
        # I_{1/2} - I_{-1/2} cancels for large z, so the error is absolute
        assert_allclose(bessel_ratio(-0.5, z), closed, rtol=1e-10, atol=1e-12)
        assert bessel_ratio_check(-0.5, z) <= 1.0

    def test_half_at_one(self):
        i12 = math.sqrt(2 / math.pi) * math.sinh(1)
        i32 = math.sqrt(2 / math.pi) * (math.cosh(1) - math.sinh(1))
        assert float(bessel_ratio(0.5, 1.0)) == pytest.approx(abs(i32 - i12) / i32, rel=1e-12)

    @pytest.mark.parametrize("alpha,bound", [(-0.5, 5), (0.0, 5), (1.0, 5)])
    def test_bounded(self, alpha, bound):
        assert bessel_ratio_check(alpha, np.geomspace(1e-4, 1e4, 2001)) <= bound

    def test_small_z_limit(self):
        # ratio -> 2(alpha+1) as z -> 0, which exceeds 5 once alpha > 3/2
        assert bessel_ratio_check(3.0, [1e-6]) == pytest.approx(8.0, rel=1e-5)

    def test_large_z_limit(self):
        assert float(bessel_ratio(3.0, 1e6)) == pytest.approx(3.5, rel=1e-5)

    def test_domain(self):
        with pytest.raises(DomainError):
            bessel_ratio_check(-0.7, [1.0])
        with pytest.raises(DomainError):
            bessel_ratio_check(0.0, [0.0, 1.0])


class TestPointwiseBound:
    @pytest.mark.parametrize("system,alpha", [("conv", -0.5), ("conv", 0.0), ("conv", 1.5),
                                              ("std", 0.0), ("std", 2.0)])
    def test_constant_bounded(self, system, alpha):
        rng = np.random.default_rng(17)
        r = rng.uniform(0.05, 0.995, 400)
        u = np.exp(rng.uniform(np.log(1e-3), np.log(30), 400))
        v = np.exp(rng.uniform(np.log(1e-3), np.log(30), 400))
        vals = np.array([float(kernel_values(system, alpha, *q)) for q in zip(r, u, v)])
        bounds = np.array([float(kernel_bound(system, alpha, *q)) for q in zip(r, u, v)])
        # far from the diagonal both sides underflow to zero together
        assert np.all(vals[bounds == 0] == 0)
        live = bounds > 0
        assert np.max(vals[live] / bounds[live]) < 10.0


@settings(max_examples=30, deadline=None)
@given(alpha=st.floats(-0.5, 4.0), r=st.floats(1e-4, 0.9999), u=st.floats(1e-3, 30), v=st.floats(1e-3, 30))
def test_kernel_positive_finite(alpha, r, u, v):
    for system in ("conv", "std"):
        val = float(kernel_values(system, alpha, r, u, v))
        assert np.isfinite(val) and val >= 0
