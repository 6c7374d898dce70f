"""The acceptance suite: one function per criterion, each at its stated tolerance.

Every function returns a :class:`CriterionResult`; nothing here relaxes a
threshold. :func:`run_all` executes them in order.
"""

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .atoms import (
    atom_coefficients,
    atom_conv,
    atom_std,
    check_atom,
    l1_divergence_scan,
    sharpness_scan,
)
from .hardy import LaguerreSetting, admissible_exponent, beta_identity, kanjin_sum, setting_params
from .kernels import (
    Variant,
    bessel_ratio,
    expected_norm_exponent,
    kernel_du_values,
    kernel_values,
    scaling_fit,
    series_cap,
)
from .quadrature import gram_matrix
from .specfun import (
    System,
    ell_conv,
    ell_conv_derivative,
    ell_conv_table,
    ell_std,
    ell_std_derivative,
    ell_std_table,
)

__all__ = ["CriterionResult", "CRITERIA", "run_all"] + [f"criterion_{i}" for i in range(1, 12)]


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str
    data: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] criterion {self.number:2d} {self.title}: {self.detail} ({self.seconds:.1f}s)"


def _timed(number, title):
    def wrap(fn):
        def run(**kwargs):
            t0 = time.perf_counter()
            passed, detail, data = fn(**kwargs)
            return CriterionResult(number, title, bool(passed), detail, data,
                                   time.perf_counter() - t0)

        run.__name__ = fn.__name__
        run.__doc__ = fn.__doc__
        return run

    return wrap


ORTHO_CONV = (-0.5, 0.0, 0.5, 1.0, 2.5)
ORTHO_STD = (0.0, 0.5, 2.0, 3.0)


@_timed(1, "orthonormality")
def criterion_1(kmax=64, tol=1e-8):
    """Gram matrices of both systems up to degree 64 within ``1e-8`` of the identity."""
    t0 = time.perf_counter()
    worst = {}
    for system, alphas in ((System.CONV, ORTHO_CONV), (System.STD, ORTHO_STD)):
        for a in alphas:
            G, _ = gram_matrix(system, a, kmax)
            worst[f"{system.value}:{a:g}"] = float(np.max(np.abs(G - np.eye(kmax + 1))))
    elapsed = time.perf_counter() - t0
    dev = max(worst.values())
    passed = dev < tol and elapsed < 60.0
    return passed, f"max deviation {dev:.2e} (tol {tol:g}), budget 60s", worst


def _random_queries(rng, n, alphas, u_max):
    alpha = rng.choice(alphas, size=n)
    # half the radii log-uniform down to 1e-7, half uniform in (0, 0.9]
    r = np.where(rng.random(n) < 0.5, 10.0 ** rng.uniform(-7.0, math.log10(0.9), n),
                 rng.uniform(1e-3, 0.9, n))
    u = rng.uniform(0.02, u_max, n)
    v = rng.uniform(0.02, u_max, n)
    return alpha, r, u, v


def _series_mp(system, alpha, r, u, v, cap, dps):
    """The truncated kernel series in ``dps``-digit arithmetic.

    Used when the double-precision terms cancel too strongly to resolve the
    (positive, possibly tiny) kernel value.
    """
    import mpmath

    with mpmath.workdps(dps):
        a = mpmath.mpf(alpha)
        if system is System.CONV:
            xs, pre = (mpmath.mpf(u), mpmath.mpf(v)), mpmath.mpf(1)
        else:
            # L_k(u) L_k(v) = (uv)^{alpha/2} ell_k(sqrt u) ell_k(sqrt v) / 2
            xs = (mpmath.sqrt(mpmath.mpf(u)), mpmath.sqrt(mpmath.mpf(v)))
            pre = (mpmath.mpf(u) * mpmath.mpf(v)) ** (a / 2) / 2
        rows = []
        for x in xs:
            t = x * x
            prev, cur = mpmath.mpf(0), mpmath.sqrt(2 / mpmath.gamma(a + 1)) * mpmath.exp(-t / 2)
            vals = [cur]
            for j in range(cap):
                nxt = ((2 * j + a + 1 - t) * cur - mpmath.sqrt(j * (j + a)) * prev) / mpmath.sqrt((j + 1) * (j + 1 + a))
                prev, cur = cur, nxt
                vals.append(cur)
            rows.append(vals)
        rr = mpmath.mpf(r)
        total = mpmath.fsum(rr**k * p * q for k, (p, q) in enumerate(zip(*rows)))
        return float(pre * total)


@_timed(2, "kernel closed form vs series")
def criterion_2(n=1000, seed=20240601, tol=1e-8):
    """Closed-form kernels against truncated series on random queries with ``r <= 0.9``.

    The error is relative to the series value. The cap puts the neglected
    tail below ``1e-11`` times the kernel. Where the terms cancel by more
    than four digits the series is summed again in extended precision.
    """
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    worst = {}
    for system, alphas, u_max in ((System.CONV, ORTHO_CONV, 5.0), (System.STD, ORTHO_STD, 20.0)):
        alpha, r, u, v = _random_queries(rng, n, alphas, u_max)
        err, extended = 0.0, 0
        for a, rr, uu, vv in zip(alpha, r, u, v):
            closed = float(kernel_values(system, a, rr, uu, vv))
            cap = series_cap(system, a, rr, tol=min(1e-17, 1e-11 * closed))
            table = (ell_conv_table if system is System.CONV else ell_std_table)(
                cap, a, np.array([uu, vv]))
            terms = rr ** np.arange(cap + 1) * table[:, 0] * table[:, 1]
            series = float(np.sum(terms))
            cancel = float(np.sum(np.abs(terms))) / closed
            if cancel > 1e4:
                extended += 1
                series = _series_mp(system, float(a), float(rr), float(uu), float(vv), cap,
                                    30 + int(math.ceil(math.log10(cancel))))
            err = max(err, abs(closed - series) / abs(series))
        worst[system.value] = err
        worst[f"{system.value}_extended_precision_queries"] = extended
    elapsed = time.perf_counter() - t0
    e = max(worst[k] for k in ("conv", "std"))
    passed = e < tol and elapsed < 60.0
    detail = f"max relative error {e:.2e} (tol {tol:g}) over {2 * n} queries, budget 60s"
    return passed, detail, worst


def _fd(f, x, h):
    return (f(x + h) - f(x - h)) / (2.0 * h)


@_timed(3, "derivative formulas vs finite differences")
def criterion_3(n=100, seed=7, tol=1e-5, h=1e-5):
    """``kernel_du`` and both function-derivative formulas on random points."""
    rng = np.random.default_rng(seed)
    worst = {}
    # function derivatives
    for name, f, df, alphas in (
        ("ell_conv'", ell_conv, ell_conv_derivative, ORTHO_CONV),
        ("ell_std'", ell_std, ell_std_derivative, ORTHO_STD),
    ):
        err = 0.0
        for _ in range(n):
            k = int(rng.integers(0, 51))
            a = float(rng.choice(alphas))
            u = float(rng.uniform(0.1, 10.0))
            exact = df(k, a, u)
            approx = _fd(lambda x: ell_conv(k, a, x) if f is ell_conv else ell_std(k, a, x), u, h)
            err = max(err, abs(exact - approx) / abs(exact))
        worst[name] = err
    # kernel derivatives
    for system, alphas, u_max in ((System.CONV, ORTHO_CONV, 4.0), (System.STD, ORTHO_STD, 10.0)):
        err = 0.0
        for _ in range(n):
            a = float(rng.choice(alphas))
            r = float(rng.uniform(0.05, 0.9))
            u = float(rng.uniform(0.2, u_max))
            v = float(rng.uniform(0.2, u_max))
            exact = float(kernel_du_values(system, a, r, u, v))
            approx = _fd(lambda x: float(kernel_values(system, a, r, x, v)), u, h * max(1.0, u))
            err = max(err, abs(exact - approx) / abs(exact))
        worst[f"kernel_du:{system.value}"] = err
    e = max(worst.values())
    return e < tol, f"max relative deviation {e:.2e} (tol {tol:g})", worst


SCALING_CASES = (
    (System.CONV, Variant.VALUE, (-0.5, 0.0, 1.0, 2.5), 0.05),
    (System.CONV, Variant.DERIVATIVE, (-0.5, 0.0, 1.0, 2.5), 0.1),
    (System.STD, Variant.VALUE, (0.0, 1.0, 2.5), 0.05),
    (System.STD, Variant.DERIVATIVE, (0.0, 2.0, 3.0), 0.1),
)


@_timed(4, "kernel norm scaling laws")
def criterion_4(threads=1):
    """Log-log slopes of ``sup_u ||R_r(u, .)||`` against ``1 - r``."""
    t0 = time.perf_counter()
    rows = {}
    ok = True
    for system, variant, alphas, tol in SCALING_CASES:
        for a in alphas:
            fit = scaling_fit(system, a, variant, threads=threads)
            expected = expected_norm_exponent(system, a, variant)
            good = abs(fit.slope - expected) <= tol
            ok &= good
            rows[f"{system.value}:{variant.value}:{a:g}"] = {
                "slope": fit.slope, "expected": expected, "tol": tol, "passed": good,
            }
    elapsed = time.perf_counter() - t0
    worst = max(abs(r["slope"] - r["expected"]) / r["tol"] for r in rows.values())
    passed = ok and elapsed < 600.0
    return passed, f"{len(rows)} fits, worst |slope-expected|/tol = {worst:.2f}, budget 600s", rows


def _exponent_grid():
    F = Fraction
    grid = [
        ("conv", (F(0),)), ("conv", (F(-1, 2),)), ("conv", (F(1, 2),)), ("conv", (F(5, 2),)),
        ("conv", (F(1, 2), F(1))), ("conv", (F(0), F(0))), ("conv", (F(-1, 2), F(3))),
        ("conv", (F(1), F(2), F(3))), ("conv", (F(-1, 2), F(-1, 2), F(-1, 2), F(-1, 2))),
        ("conv", (F(7, 3), F(0), F(1, 4), F(9))),
        ("std", (F(0),)), ("std", (F(2),)), ("std", (F(5, 2),)), ("std", (F(2), F(3))),
        ("std", (F(0), F(0))), ("std", (F(0), F(2), F(7, 2))), ("std", (F(3), F(3), F(3), F(3))),
        ("std", (F(1),)), ("std", (F(1, 2), F(2))), ("std", (F(0), F(3, 2), F(0), F(4))),
    ]
    return grid


@_timed(5, "admissible exponent formula")
def criterion_5():
    """``gamma N/(N+2) + d/2`` equals ``d + |alpha|/2`` (conv) and ``d`` (std) exactly."""
    rows = {}
    ok = True
    for system, alpha in _exponent_grid():
        setting = LaguerreSetting(system, alpha)
        params = setting_params(setting)
        d = setting.d
        target = Fraction(d) + sum(alpha) / 2 if system == "conv" else Fraction(d)
        exact = isinstance(params.E, Fraction) and params.E == target
        if params.gamma is not None:
            exact &= admissible_exponent(params.gamma, params.N, d) == target
        ok &= exact
        rows[f"{system}:{','.join(str(a) for a in alpha)}"] = {
            "E": str(params.E), "target": str(target), "provenance": params.provenance,
            "passed": exact,
        }
    return ok, f"{sum(r['passed'] for r in rows.values())}/{len(rows)} exact", rows


SHARPNESS_SETTINGS = (
    (System.CONV, (0.0,)),
    (System.CONV, (1.0,)),
    (System.CONV, (0.0, 0.0)),
    (System.STD, (0.0,)),
    (System.STD, (1.0,)),
)
SHARPNESS_K = tuple(2 ** j for j in range(4, 13))


@_timed(6, "sharpness of the exponent")
def criterion_6(threads=1):
    """Reduced-exponent Hardy sums of the atom family grow like ``K^eps``."""
    t0 = time.perf_counter()
    rows = {}
    ok = True
    for system, alpha in SHARPNESS_SETTINGS:
        setting = LaguerreSetting(system, alpha)
        key = f"{system.value}:{','.join(f'{a:g}' for a in alpha)}"
        for eps in (0.1, 0.25):
            fit = sharpness_scan(setting, eps, SHARPNESS_K, threads=threads)
            good = abs(fit.slope - eps) <= 0.05 and fit.grid["all_positive"]
            ok &= good
            rows[f"{key}:eps={eps}"] = {"slope": fit.slope, "passed": good}
        fit0 = sharpness_scan(setting, 0.0, SHARPNESS_K, threads=threads)
        good = fit0.grid["spread"] <= 3.0
        ok &= good
        rows[f"{key}:eps=0"] = {"spread": fit0.grid["spread"], "passed": good}
    elapsed = time.perf_counter() - t0
    passed = ok and elapsed < 1200.0
    slopes = [r["slope"] for r in rows.values() if "slope" in r]
    n_ok = sum(r["passed"] for r in rows.values())
    detail = f"{n_ok}/{len(rows)} checks, slopes {min(slopes):.3f}..{max(slopes):.3f}, budget 1200s"
    return passed, detail, rows


L1_SETTINGS = ((0.0,), (0.0, 0.0))
L1_K = tuple(2 ** j for j in range(4, 17))


@_timed(7, "L1 divergence rate")
def criterion_7():
    """``sum |phi_n(x)|/|n|^E`` grows like ``log K`` and saturates at ``E + 1/4``."""
    rows = {}
    ok = True
    for alpha in L1_SETTINGS:
        setting = LaguerreSetting(System.CONV, alpha)
        scan = l1_divergence_scan(setting, 1e-4, L1_K)
        sat = l1_divergence_scan(setting, 1e-4, L1_K, E=scan.E + 0.25)
        good_band = scan.band <= 2.0
        good_sat = sat.last_octave_increase < 0.05
        ok &= good_band and good_sat
        rows[f"d={len(alpha)}"] = {
            "band": scan.band, "saturation_increase": sat.last_octave_increase,
            "passed": good_band and good_sat,
        }
    detail = ", ".join(f"{k}: band {v['band']:.3f}, last octave {v['saturation_increase']:.4f}"
                       for k, v in rows.items())
    return ok, detail, rows


BESSEL_ALPHAS = (-0.5, 0.0, 1.0, 3.0)


@_timed(8, "Bessel ratio bound")
def criterion_8(bound=5.0, points=2001):
    """``|I_{a+1} - I_a| z / I_{a+1} <= 5`` on ``[1e-4, 1e4]``; exact form at ``a = -1/2``."""
    z = np.geomspace(1e-4, 1e4, points)
    rows = {}
    ok = True
    for a in BESSEL_ALPHAS:
        m = float(np.max(bessel_ratio(a, z)))
        rows[f"alpha={a:g}"] = {"max_ratio": m, "passed": m <= bound}
        ok &= m <= bound
    ratio = bessel_ratio(-0.5, z)
    closed = 2.0 * z * np.exp(-2.0 * z) / -np.expm1(-2.0 * z)
    dev = float(np.max(np.abs(ratio - closed)))
    exact_ok = dev <= 1e-10 and float(ratio.max()) <= 1.0 + 1e-10
    rows["closed_form_dev"] = {"dev": dev, "max": float(ratio.max()), "passed": exact_ok}
    ok &= exact_ok
    maxima = ", ".join(f"{k} {v['max_ratio']:.3f}" for k, v in rows.items() if "max_ratio" in v)
    return ok, f"max ratios {maxima} (bound {bound:g}); closed form dev {dev:.1e}", rows


@_timed(9, "beta-function asymptotics")
def criterion_9(k=100):
    """``B(2k+1, E)`` against ``Gamma(E) (2k+1)^{-E}`` at ``k = 100``."""
    rows = {}
    ok = True
    for E in (0.5, 1.0, 1.75, 3.0):
        b = beta_identity(k, E)
        good = abs(b.ratio - 1.0) < 0.02
        if E == 1.0:
            # B(m, 1) = 1/m; log-gamma evaluation is exact up to rounding
            m = 2 * k + 1
            good &= math.isclose(b.exact, 1.0 / m, rel_tol=1e-13)
            good &= math.isclose(b.asymptotic, 1.0 / m, rel_tol=1e-13)
        ok &= good
        rows[f"E={E:g}"] = {"ratio": b.ratio, "passed": good}
    return ok, ", ".join(f"{k_}: {v['ratio']:.5f}" for k_, v in rows.items()), rows


ATOM_K = (16, 64, 256, 1024)
ATOM_CONV_ALPHAS = ((-0.5,), (0.0,), (0.5,), (1.0,), (2.5,), (0.0, 0.0), (0.5, 1.0))
ATOM_STD_ALPHAS = (0.0, 0.5, 1.0, 2.0, 2.5)


@_timed(10, "atom validity and coefficient signs")
def criterion_10():
    """Every atom on the grid is a (1,2)-atom with all-positive coefficients."""
    rows = {}
    ok = True
    atoms = [(f"conv:{a}", K, lambda a=a, K=K: atom_conv(a, K)) for a in ATOM_CONV_ALPHAS for K in ATOM_K]
    atoms += [(f"std:{a:g}", K, lambda a=a, K=K: atom_std(a, K)) for a in ATOM_STD_ALPHAS for K in ATOM_K]
    min_slack = math.inf
    for name, K, build in atoms:
        atom = build()
        report = check_atom(atom)
        table = atom_coefficients(atom)
        factors = table.factors if table.factors is not None else [table.values]
        positive = all(bool(np.all(f[1:K + 1] > 0)) for f in factors)
        good = report.is_atom and report.slack >= 0 and positive
        ok &= good
        min_slack = min(min_slack, report.slack * report.mu_ball ** 0.5)
        rows[f"{name}:K={K}"] = {"slack": report.slack, "positive": positive, "passed": good}
    return ok, f"{sum(r['passed'] for r in rows.values())}/{len(rows)} atoms valid, min relative slack {min_slack:.3f}", rows


KANJIN_U = tuple(np.geomspace(1e-4, 1e2, 601))


@_timed(11, "Kanjin sum stability")
def criterion_11(cap=10_000, threshold=0.01):
    """``sup_u sum_{k <= cap} |L_k^delta(u)|/(k+1)`` changes by less than 1% when the cap doubles."""
    u = np.asarray(KANJIN_U)
    rows = {}
    ok = True
    for delta in (2.0, 3.0):
        s1 = kanjin_sum(delta, u, cap)
        s2 = kanjin_sum(delta, u, 2 * cap)
        sup1, sup2 = float(np.max(s1)), float(np.max(s2))
        inc = sup2 / sup1 - 1.0
        good = math.isfinite(sup2) and inc < threshold
        ok &= good
        rows[f"delta={delta:g}"] = {
            "sup": sup1, "sup_doubled": sup2, "increase": inc, "argmax_u": float(u[np.argmax(s2)]),
            "passed": good,
        }
    detail = ", ".join(f"{k}: sup {v['sup']:.4f} -> {v['sup_doubled']:.4f} (+{100 * v['increase']:.2f}%)"
                       for k, v in rows.items())
    return ok, detail + f" (limit {100 * threshold:g}%)", rows


CRITERIA = tuple(globals()[f"criterion_{i}"] for i in range(1, 12))


def run_all(threads=1, echo=None):
    """Run every criterion; ``echo`` receives each result line as it completes."""
    results = []
    for fn in CRITERIA:
        kwargs = {"threads": threads} if fn.__name__ in ("criterion_4", "criterion_6") else {}
        res = fn(**kwargs)
        results.append(res)
        if echo is not None:
            echo(res.line())
    return results
