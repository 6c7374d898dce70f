r"""Kernels of the operators :math:`R_r f = \sum_n r^{|n|} \langle f, \phi_n\rangle \phi_n`.

One-dimensional closed forms, in both systems, are expressed through
:func:`~laguerre_hardy.specfun.log_bessel_i_scaled`. The Gaussian factor and
the growth of the Bessel function are merged into one non-positive exponent

.. math::
    -\frac{(1+r)(u-v)^2}{2(1-r)} - uv\,\frac{1-\sqrt r}{1+\sqrt r}

(with :math:`\sqrt u, \sqrt v` in place of :math:`u, v` for the standard
system), so the evaluation neither overflows nor cancels as ``r -> 1``.
"""

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, PrecisionError
from .quadrature import graded_edges, panel_nodes
from .specfun import (
    System,
    bessel_i_scaled,
    ell_conv_derivative_table,
    ell_conv_table,
    ell_std_derivative_table,
    ell_std_table,
    log_bessel_i_scaled,
)

__all__ = [
    "Variant",
    "KernelQuery",
    "ScalingFit",
    "kernel",
    "kernel_du",
    "kernel_values",
    "kernel_du_values",
    "kernel_series",
    "kernel_du_series",
    "kernel_nd",
    "series_cap",
    "kernel_l2_norm",
    "kernel_l2_norm_parseval",
    "expected_norm_exponent",
    "scaling_fit",
    "fit_loglog",
    "bessel_ratio",
    "bessel_ratio_check",
    "kernel_bound",
    "SMALL_R",
]

SMALL_R = 1e-6
_SMALL_R_TERMS = 8


class Variant(str, enum.Enum):
    VALUE = "value"
    DERIVATIVE = "derivative"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise DomainError(f"unknown kernel variant {value!r}") from None


@dataclass(frozen=True)
class KernelQuery:
    setting: System
    alpha: float
    r: float
    u: float
    v: float

    def __post_init__(self):
        object.__setattr__(self, "setting", System.parse(self.setting))
        _check_r(self.r)
        if not (self.u > 0 and self.v > 0):
            raise DomainError("kernel arguments must be positive")


@dataclass(frozen=True)
class ScalingFit:
    """Least-squares fit ``log y = slope * log x + intercept``."""

    slope: float
    intercept: float
    max_residual: float
    grid: dict = field(default_factory=dict)
    points: tuple = ()

    def as_dict(self):
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "max_residual": self.max_residual,
            "grid": self.grid,
        }


def _check_r(r):
    if not (0.0 <= r < 1.0):
        raise DomainError(f"r must lie in [0, 1), got {r!r}")


def _basis(system, kmax, alpha, x):
    if system is System.CONV:
        return ell_conv_table(kmax, alpha, x)
    return ell_std_table(kmax, alpha, x)


def _basis_du(system, kmax, alpha, x):
    if system is System.CONV:
        return ell_conv_derivative_table(kmax, alpha, x)
    return ell_std_derivative_table(kmax, alpha, x)


def kernel_series(system, alpha, r, u, v, kmax):
    """Truncated series ``sum_{k <= kmax} r^k phi_k(u) phi_k(v)``."""
    system = System.parse(system)
    u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
    pu = _basis(system, kmax, alpha, u)
    pv = _basis(system, kmax, alpha, v)
    rk = (r ** np.arange(kmax + 1)).reshape((-1,) + (1,) * u.ndim)
    return np.sum(rk * pu * pv, axis=0)


def kernel_du_series(system, alpha, r, u, v, kmax):
    """Truncated series ``sum_{k <= kmax} r^k phi_k'(u) phi_k(v)``."""
    system = System.parse(system)
    u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
    pu = _basis_du(system, kmax, alpha, u)
    pv = _basis(system, kmax, alpha, v)
    rk = (r ** np.arange(kmax + 1)).reshape((-1,) + (1,) * u.ndim)
    return np.sum(rk * pu * pv, axis=0)


def _sup_growth(system, alpha, derivative):
    # polynomial growth in k of sup|phi_k| and sup|phi_k'|
    if system is System.CONV:
        if derivative:
            return abs(alpha / 2 + 7 / 24) + 11 / 24
        return abs(alpha / 2 + 1 / 6) - 1 / 6
    return 1.0 if derivative else 0.0


def series_cap(system, alpha, r, tol=1e-17, derivative=False, kmax=20000):
    """Smallest degree at which ``r^k (1+k)^(2s+2)`` drops below ``tol``.

    ``s`` is the growth exponent of the sup norms, so the neglected tail of
    the kernel series is bounded by a constant multiple of ``tol``.
    """
    system = System.parse(system)
    if r == 0:
        return 0
    p = 2.0 * _sup_growth(system, alpha, derivative) + 2.0
    lr = math.log(r)
    k = 1
    while k < kmax and k * lr + p * math.log1p(k) > math.log(tol):
        k += 1
    return k


def kernel_values(system, alpha, r, u, v):
    """Closed-form kernel :math:`R_r^\\alpha(u, v)` on arrays ``u, v > 0``."""
    system = System.parse(system)
    _check_r(r)
    u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
    if np.any(u <= 0) or np.any(v <= 0):
        raise DomainError("kernel arguments must be positive")
    if r <= SMALL_R:
        return kernel_series(system, alpha, r, u, v, _SMALL_R_TERMS)
    sr = math.sqrt(r)
    om = 1.0 - r
    if system is System.CONV:
        a, b = u, v
        lead = math.log(2.0) - alpha * np.log(u * v)
    else:
        a, b = np.sqrt(u), np.sqrt(v)
        lead = 0.0
    ab = a * b
    expo = -(1.0 + r) * (a - b) ** 2 / (2.0 * om) - ab * om / (1.0 + sr) ** 2
    z = 2.0 * sr * ab / om
    logk = lead - math.log(om) - 0.5 * alpha * math.log(r) + expo + log_bessel_i_scaled(alpha, z)
    return np.exp(logk)


def kernel_du_values(system, alpha, r, u, v):
    """Closed-form :math:`\\partial_u R_r^\\alpha(u, v)` on arrays."""
    system = System.parse(system)
    _check_r(r)
    u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
    if np.any(u <= 0) or np.any(v <= 0):
        raise DomainError("kernel arguments must be positive")
    if r <= SMALL_R:
        return kernel_du_series(system, alpha, r, u, v, _SMALL_R_TERMS)
    om = 1.0 - r
    k0 = kernel_values(system, alpha, r, u, v)
    k1 = kernel_values(system, alpha + 1.0, r, u, v)
    if system is System.CONV:
        return (2.0 * r * u * v * v / om) * k1 - ((1.0 + r) * u / om) * k0
    return (r * np.sqrt(v / u) / om) * k1 + (alpha / (2.0 * u) - (1.0 + r) / (2.0 * om)) * k0


def kernel(q):
    """Kernel value for a :class:`KernelQuery`."""
    return float(kernel_values(q.setting, q.alpha, q.r, q.u, q.v))


def kernel_du(q):
    """Derivative in the first variable for a :class:`KernelQuery`."""
    return float(kernel_du_values(q.setting, q.alpha, q.r, q.u, q.v))


def kernel_nd(system, alpha, r, x, y):
    """Multi-dimensional kernel as the product of one-dimensional kernels."""
    alpha = np.atleast_1d(alpha)
    x = np.atleast_1d(np.asarray(x, float))
    y = np.atleast_1d(np.asarray(y, float))
    out = 1.0
    for a, xi, yi in zip(alpha, x, y):
        out = out * kernel_values(system, float(a), r, xi, yi)
    return out


# ---------------------------------------------------------------------------
# L2 norms in the second variable
# ---------------------------------------------------------------------------


def _integrand(system, alpha, r, u, variant):
    if variant is Variant.VALUE:
        fn = kernel_values
    else:
        fn = kernel_du_values
    if system is System.CONV:
        power = 2.0 * alpha + 1.0
        return lambda v: fn(system, alpha, r, u, v) ** 2 * np.power(v, power)
    # integrate in s = sqrt(v): dv = 2 s ds
    return lambda s: fn(system, alpha, r, u, s * s) ** 2 * 2.0 * s


def _norm_nodes(center, r, refine):
    width = math.sqrt((1.0 - r) / (1.0 + r))
    half = 14.0 * width
    lo, hi = max(center - half, 0.0), center + half
    n_panels = max(8, int(math.ceil((hi - lo) / (0.5 * width)))) * 2**refine
    edges = np.linspace(lo, hi, n_panels + 1)
    if lo == 0.0:
        edges = np.concatenate([graded_edges(0.0, edges[1], 20)[:-1], edges[1:]])
    else:
        # keep the diagonal on a panel edge
        edges = np.union1d(edges, [center])
    return panel_nodes(edges, 16)


def kernel_l2_norm(system, alpha, r, u, variant=Variant.VALUE, rtol=1e-6, max_refine=4):
    """``|| R_r(u, .) ||`` (or of ``d/du R_r(u, .)``) in ``L^2`` of the system's measure.

    The integration window is centred on the diagonal with half-width
    ``14 sqrt((1-r)/(1+r))`` (in ``sqrt(v)`` for the standard system),
    beyond which the integrand is below double precision relative to its
    peak. Panels are doubled until two successive values agree to ``rtol``.

    Raises
    ------
    PrecisionError
        If the refinement stalls above ``rtol``.
    """
    system = System.parse(system)
    variant = Variant.parse(variant)
    _check_r(r)
    if not u > 0:
        raise DomainError("u must be positive")
    f = _integrand(system, alpha, r, u, variant)
    center = u if system is System.CONV else math.sqrt(u)
    prev = None
    for refine in range(max_refine + 1):
        x, w = _norm_nodes(center, r, refine)
        x, w = x[x > 0], w[x > 0]
        cur = math.sqrt(float(np.sum(f(x) * w)))
        if prev is not None and abs(cur - prev) <= rtol * cur:
            return cur
        prev = cur
    raise PrecisionError(f"kernel norm did not converge at r={r}, u={u}")


def kernel_l2_norm_parseval(system, alpha, r, u, variant=Variant.VALUE, kmax=None):
    """Parseval form ``(sum_k r^{2k} phi_k(u)^2)^{1/2}`` (or with ``phi_k'``)."""
    system = System.parse(system)
    variant = Variant.parse(variant)
    deriv = variant is Variant.DERIVATIVE
    if kmax is None:
        kmax = series_cap(system, alpha, r * r, derivative=deriv)
    ua = np.asarray(u, float)
    table = _basis_du(system, kmax, alpha, ua) if deriv else _basis(system, kmax, alpha, ua)
    rk = (r ** (2 * np.arange(kmax + 1))).reshape((-1,) + (1,) * ua.ndim)
    out = np.sqrt(np.sum(rk * table**2, axis=0))
    return float(out) if ua.ndim == 0 else out


def expected_norm_exponent(system, alpha, variant):
    """Exponent ``e`` of the bound ``sup_u || . || <~ (1-r)^e``, or None.

    None means no bound is claimed (standard derivative with
    ``0 < alpha < 2``).
    """
    system = System.parse(system)
    variant = Variant.parse(variant)
    if system is System.CONV:
        if variant is Variant.VALUE:
            return -(alpha + 1.0) / 2.0
        return -(alpha + 2.0) / 2.0
    if variant is Variant.VALUE:
        return -0.5
    if alpha == 0 or alpha >= 2:
        return -1.5
    return None


def fit_loglog(x, y):
    """Least-squares line through ``(log x, log y)``; returns (slope, intercept, max residual)."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    A = np.vstack([lx, np.ones_like(lx)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - (slope * lx + intercept)
    return float(slope), float(intercept), float(np.max(np.abs(resid)))


DEFAULT_ONE_MINUS_R = tuple(np.geomspace(1e-1, 1e-3, 7))
DEFAULT_U_GRID = tuple(np.geomspace(1e-4, 20.0, 49))


def scaling_fit(system, alpha, variant, one_minus_r=DEFAULT_ONE_MINUS_R,
                u_grid=DEFAULT_U_GRID, threads=1):
    """Fit the slope of ``log sup_u ||R_r(u,.)||`` against ``log(1-r)``.

    Parameters
    ----------
    one_minus_r : sequence of float
        At least six values of ``1 - r`` in ``[1e-3, 1e-1]``.
    u_grid : sequence of float
        At least eight points covering ``[0.05, 20]``.
    threads : int
        Worker threads over ``r``; results do not depend on it.
    """
    system = System.parse(system)
    variant = Variant.parse(variant)
    t = np.asarray(one_minus_r, float)
    ug = np.asarray(u_grid, float)
    if len(t) < 6 or t.min() < 1e-3 * (1 - 1e-9) or t.max() > 1e-1 * (1 + 1e-9):
        raise DomainError("need at least six values of 1-r in [1e-3, 1e-1]")
    if len(ug) < 8 or ug.min() > 0.05 or ug.max() < 20.0:
        raise DomainError("u grid needs at least eight points covering [0.05, 20]")

    def sweep(tt):
        return [kernel_l2_norm(system, alpha, 1.0 - tt, uu, variant) for uu in ug]

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(sweep, t))
    else:
        rows = [sweep(tt) for tt in t]
    sups = np.array([max(row) for row in rows])
    slope, intercept, resid = fit_loglog(t, sups)
    points = tuple((float(tt), float(uu), float(val)) for tt, row in zip(t, rows)
                   for uu, val in zip(ug, row))
    grid = {
        "one_minus_r": [float(x) for x in t],
        "u_min": float(ug.min()),
        "u_max": float(ug.max()),
        "u_points": int(len(ug)),
        "sup": [float(s) for s in sups],
    }
    return ScalingFit(slope, intercept, resid, grid, points)


# ---------------------------------------------------------------------------
# Bessel ratio and pointwise kernel bounds
# ---------------------------------------------------------------------------


def bessel_ratio(alpha, z):
    """``|I_{alpha+1}(z) - I_alpha(z)| * z / I_{alpha+1}(z)`` on arrays."""
    z = np.asarray(z, float)
    i0 = bessel_i_scaled(alpha, z)
    i1 = bessel_i_scaled(alpha + 1.0, z)
    return np.abs(i1 - i0) * z / i1


def bessel_ratio_check(alpha, z_grid):
    """Maximum of :func:`bessel_ratio` over ``z_grid`` (``alpha >= -1/2``)."""
    if alpha < -0.5:
        raise DomainError("the ratio bound is stated for alpha >= -1/2")
    z = np.asarray(z_grid, float)
    if np.any(z <= 0):
        raise DomainError("z grid must be positive")
    return float(np.max(bessel_ratio(alpha, z)))


def kernel_bound(system, alpha, r, u, v):
    """Two-branch pointwise upper bound for the kernel (up to a constant)."""
    system = System.parse(system)
    u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
    om = 1.0 - r
    sr = math.sqrt(r)
    if system is System.CONV:
        near = v <= om / (2.0 * sr * u)
        b1 = om ** (-alpha - 1.0) * np.exp(-0.5 * (1 + r) / om * (u * u + v * v))
        b2 = (om ** -0.5 * r ** (-alpha / 2 - 0.25) * (u * v) ** (-alpha - 0.5)
              * np.exp(-0.5 * (1 + r) / om * (v - u) ** 2 - u * v * om / (1 + sr) ** 2))
    else:
        near = v <= om * om / (4.0 * r * u)
        b1 = om ** (-alpha - 1.0) * (u * v) ** (alpha / 2) * np.exp(-0.5 * (1 + r) / om * (u + v))
        b2 = (om ** -0.5 * r ** (-alpha / 2 - 0.25) * (u * v) ** -0.25
              * np.exp(-0.5 * (1 + r) / om * (np.sqrt(v) - np.sqrt(u)) ** 2
                       - np.sqrt(u * v) * om / (1 + sr) ** 2))
    return np.where(near, b1, b2)
