r"""Laguerre polynomials, Laguerre function systems and scaled Bessel functions.

Two orthonormal systems on :math:`(0, \infty)` are provided:

* functions of convolution type
  :math:`\ell_k^\alpha(u) = (2\Gamma(k+1)/\Gamma(k+\alpha+1))^{1/2}
  L_k^\alpha(u^2) e^{-u^2/2}`, orthonormal against
  :math:`d\mu_\alpha(u) = u^{2\alpha+1} du`;
* standard functions
  :math:`\mathcal{L}_k^\alpha(u) = 2^{-1/2} u^{\alpha/2} \ell_k^\alpha(u^{1/2})`,
  orthonormal against Lebesgue measure.

Both are evaluated through a normalized three-term recurrence whose iterates
stay :math:`O(1)` in the oscillatory region. The Gaussian factor is carried
as a separate logarithmic scale so that nothing overflows or underflows
before the final multiplication.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "System",
    "OrderParam",
    "plancherel_nu",
    "laguerre_polynomial",
    "ell_conv",
    "ell_conv_table",
    "ell_std",
    "ell_std_table",
    "ell_conv_derivative",
    "ell_conv_derivative_table",
    "ell_std_derivative",
    "ell_std_derivative_table",
    "bessel_i_scaled",
    "log_bessel_i_scaled",
    "asymptotic_envelope",
    "DEFAULT_GAMMA_DECAY",
    "DEFAULT_GAMMA_DECAY_STD",
]

# Rescale recurrence iterates once they leave [1e-100, 1e100].
_RESCALE = 1e100
_LOG_RESCALE = math.log(_RESCALE)

# Branch point of the scaled Bessel evaluation (see bessel_i_scaled).
_BESSEL_SERIES_MAX_Z = 30.0
_BESSEL_ASYM_TERMS = 20

DEFAULT_GAMMA_DECAY = 0.25
# Past u = 3 nu / 2 the standard functions decay only like exp(-0.07 u) for
# large k, so a uniform bound needs a smaller rate there.
DEFAULT_GAMMA_DECAY_STD = 0.0625


class System(str, enum.Enum):
    """Which Laguerre function system is meant."""

    CONV = "conv"
    STD = "std"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {
            "conv": cls.CONV,
            "convolution": cls.CONV,
            "convolutiontype": cls.CONV,
            "std": cls.STD,
            "standard": cls.STD,
        }
        try:
            return aliases[key]
        except KeyError:
            raise DomainError(f"unknown Laguerre system {value!r}") from None


@dataclass(frozen=True)
class OrderParam:
    """Type index of a single axis together with its system.

    Evaluation is defined for ``alpha > -1``; :meth:`supports_claims` tells
    whether the norm and Hardy-type results apply (``alpha >= -1/2`` for
    the convolution system, ``alpha >= 0`` for the standard one).
    """

    alpha: float
    system: System = System.CONV

    def __post_init__(self):
        object.__setattr__(self, "system", System.parse(self.system))
        _check_alpha(self.alpha)

    def supports_claims(self):
        if self.system is System.CONV:
            return self.alpha >= -0.5
        return self.alpha >= 0.0


def _check_alpha(alpha):
    if not np.isfinite(alpha) or alpha <= -1.0:
        raise DomainError(f"type index must satisfy alpha > -1, got {alpha!r}")


def _check_k(k):
    if int(k) != k or k < 0:
        raise DomainError(f"degree must be a non-negative integer, got {k!r}")
    return int(k)


def _as_nonneg_array(x, name):
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise DomainError(f"{name} must be non-negative")
    return arr


def _out(arr, like):
    """Return a Python float when the caller passed a scalar."""
    if np.ndim(like) == 0:
        return float(arr)
    return arr


def plancherel_nu(alpha, k):
    """Transition scale ``max(4k + 2 alpha + 2, 2)`` of the asymptotic regimes."""
    return max(4.0 * k + 2.0 * alpha + 2.0, 2.0)


def laguerre_polynomial(k, alpha, x):
    """Generalized Laguerre polynomial :math:`L_k^\\alpha(x)`.

    Parameters
    ----------
    k : int
        Degree, ``k >= 0``.
    alpha : float
        Type index, ``alpha > -1``.
    x : float or array_like
        Evaluation points, ``x >= 0``.

    Returns
    -------
    float or numpy.ndarray
        Values of the polynomial, computed by the classical recurrence
        ``(k+1) L_{k+1} = (2k + alpha + 1 - x) L_k - (k + alpha) L_{k-1}``.
    """
    k = _check_k(k)
    _check_alpha(alpha)
    xa = _as_nonneg_array(x, "x")
    prev = np.zeros_like(xa)
    cur = np.ones_like(xa)
    for j in range(k):
        nxt = ((2 * j + alpha + 1 - xa) * cur - (j + alpha) * prev) / (j + 1)
        prev, cur = cur, nxt
    return _out(cur, x)


def _apply_scale(cur, log_scale):
    # exp(log_scale) may underflow on its own while the product is representable
    half = np.exp(0.5 * log_scale)
    return (cur * half) * half


def _conv_recurrence(kmax, alpha, u, store, rows=None):
    """Run the normalized recurrence up to degree ``kmax``.

    Returns either the full table of shape ``(kmax + 1,) + u.shape``, the
    rows listed in ``rows`` (sorted degrees), or the last row only.
    """
    x = u * u
    log_scale = -0.5 * x + 0.5 * math.log(2.0) - 0.5 * math.lgamma(alpha + 1.0)
    prev = np.zeros_like(x)
    cur = np.ones_like(x)
    table = None
    if rows is not None:
        wanted = {int(k): i for i, k in enumerate(rows)}
        picked = np.empty((len(wanted),) + x.shape)
        if 0 in wanted:
            picked[wanted[0]] = _apply_scale(cur, log_scale)
    if store:
        table = np.empty((kmax + 1,) + x.shape)
        table[0] = _apply_scale(cur, log_scale)
    for j in range(kmax):
        a = (2.0 * j + alpha + 1.0) - x
        b = math.sqrt(j * (j + alpha))
        nxt = (a * cur - b * prev) / math.sqrt((j + 1.0) * (j + 1.0 + alpha))
        prev, cur = cur, nxt
        big = np.abs(cur) > _RESCALE
        if big.any():
            cur = np.where(big, cur / _RESCALE, cur)
            prev = np.where(big, prev / _RESCALE, prev)
            log_scale = log_scale + np.where(big, _LOG_RESCALE, 0.0)
        if store:
            table[j + 1] = _apply_scale(cur, log_scale)
        elif rows is not None and j + 1 in wanted:
            picked[wanted[j + 1]] = _apply_scale(cur, log_scale)
    if store:
        return table
    if rows is not None:
        return picked
    return _apply_scale(cur, log_scale)


def ell_conv(k, alpha, u):
    """Laguerre function of convolution type :math:`\\ell_k^\\alpha(u)`.

    Parameters
    ----------
    k : int
        Degree.
    alpha : float
        Type index, ``alpha > -1``.
    u : float or array_like
        Points in ``[0, inf)``.
    """
    k = _check_k(k)
    _check_alpha(alpha)
    ua = _as_nonneg_array(u, "u")
    return _out(_conv_recurrence(k, alpha, ua, store=False), u)


def ell_conv_table(kmax, alpha, u):
    """All :math:`\\ell_k^\\alpha(u)` for ``k = 0..kmax``, shape ``(kmax+1,) + u.shape``."""
    kmax = _check_k(kmax)
    _check_alpha(alpha)
    ua = _as_nonneg_array(u, "u")
    return _conv_recurrence(kmax, alpha, ua, store=True)


def _std_prefactor(alpha, u):
    with np.errstate(divide="ignore"):
        return math.sqrt(0.5) * np.power(u, 0.5 * alpha)


def ell_std(k, alpha, u):
    """Standard Laguerre function :math:`\\mathcal{L}_k^\\alpha(u)`."""
    k = _check_k(k)
    _check_alpha(alpha)
    ua = _as_nonneg_array(u, "u")
    val = _std_prefactor(alpha, ua) * _conv_recurrence(k, alpha, np.sqrt(ua), store=False)
    return _out(val, u)


def ell_std_table(kmax, alpha, u):
    """All :math:`\\mathcal{L}_k^\\alpha(u)` for ``k = 0..kmax``."""
    kmax = _check_k(kmax)
    _check_alpha(alpha)
    ua = _as_nonneg_array(u, "u")
    return _std_prefactor(alpha, ua) * _conv_recurrence(kmax, alpha, np.sqrt(ua), store=True)


def ell_conv_derivative(k, alpha, u):
    """Derivative of :math:`\\ell_k^\\alpha` in ``u``.

    Uses ``-2 sqrt(k) u ell_{k-1}^{alpha+1}(u) - u ell_k^alpha(u)``; the first
    term is exactly zero for ``k = 0``.
    """
    k = _check_k(k)
    _check_alpha(alpha)
    ua = _as_nonneg_array(u, "u")
    val = -ua * _conv_recurrence(k, alpha, ua, store=False)
    if k > 0:
        val = val - 2.0 * math.sqrt(k) * ua * _conv_recurrence(k - 1, alpha + 1.0, ua, store=False)
    return _out(val, u)


def ell_conv_derivative_table(kmax, alpha, u):
    """Derivatives of :math:`\\ell_k^\\alpha` for ``k = 0..kmax``."""
    kmax = _check_k(kmax)
    _check_alpha(alpha)
    ua = _as_nonneg_array(u, "u")
    base = _conv_recurrence(kmax, alpha, ua, store=True)
    out = -ua * base
    if kmax > 0:
        shifted = _conv_recurrence(kmax - 1, alpha + 1.0, ua, store=True)
        ks = np.sqrt(np.arange(1, kmax + 1, dtype=float)).reshape((-1,) + (1,) * ua.ndim)
        out[1:] -= 2.0 * ks * ua * shifted
    return out


def ell_std_derivative(k, alpha, u):
    """Derivative of :math:`\\mathcal{L}_k^\\alpha` in ``u``, for ``u > 0``.

    ``-sqrt(k) L_{k-1}^{alpha+1}(u) / sqrt(u) - L_k^alpha(u) / 2
    + alpha / (2u) L_k^alpha(u)``.
    """
    k = _check_k(k)
    _check_alpha(alpha)
    ua = _as_nonneg_array(u, "u")
    if np.any(ua <= 0):
        raise DomainError("derivative of the standard functions needs u > 0")
    base = _std_prefactor(alpha, ua) * _conv_recurrence(k, alpha, np.sqrt(ua), store=False)
    val = (0.5 * alpha / ua - 0.5) * base
    if k > 0:
        shifted = _std_prefactor(alpha + 1.0, ua) * _conv_recurrence(
            k - 1, alpha + 1.0, np.sqrt(ua), store=False
        )
        val = val - math.sqrt(k) * shifted / np.sqrt(ua)
    return _out(val, u)


def ell_std_derivative_table(kmax, alpha, u):
    """Derivatives of :math:`\\mathcal{L}_k^\\alpha` for ``k = 0..kmax``."""
    kmax = _check_k(kmax)
    _check_alpha(alpha)
    ua = _as_nonneg_array(u, "u")
    if np.any(ua <= 0):
        raise DomainError("derivative of the standard functions needs u > 0")
    base = ell_std_table(kmax, alpha, ua)
    out = (0.5 * alpha / ua - 0.5) * base
    if kmax > 0:
        shifted = ell_std_table(kmax - 1, alpha + 1.0, ua)
        ks = np.sqrt(np.arange(1, kmax + 1, dtype=float)).reshape((-1,) + (1,) * ua.ndim)
        out[1:] -= ks * shifted / np.sqrt(ua)
    return out


# ---------------------------------------------------------------------------
# Exponentially scaled modified Bessel function of the first kind
# ---------------------------------------------------------------------------


def _log_ive_series(alpha, z):
    # positive terms only, so no cancellation; z > 0
    q = 0.25 * z * z
    term = np.ones_like(z)
    total = np.ones_like(z)
    j = 0
    while True:
        j += 1
        term = term * q / (j * (j + alpha))
        total = total + term
        if j > 2 and np.all(term <= 1e-17 * total):
            break
    return -z + alpha * np.log(0.5 * z) - math.lgamma(alpha + 1.0) + np.log(total)


def _log_ive_asymptotic(alpha, z):
    mu = 4.0 * alpha * alpha
    term = np.ones_like(z)
    total = np.ones_like(z)
    active = np.ones(z.shape, dtype=bool)
    for j in range(1, _BESSEL_ASYM_TERMS + 1):
        nxt = -term * (mu - (2 * j - 1) ** 2) / (8.0 * j * z)
        # stop each point at its smallest term
        active &= np.abs(nxt) < np.abs(term)
        if not active.any():
            break
        total = np.where(active, total + nxt, total)
        term = np.where(active, nxt, term)
        active &= np.abs(term) > 1e-17 * np.abs(total)
    return -0.5 * np.log(2.0 * math.pi * z) + np.log(total)


def log_bessel_i_scaled(alpha, z):
    """Natural logarithm of :math:`e^{-z} I_\\alpha(z)`.

    Returns ``-inf`` at ``z = 0`` for ``alpha > 0`` and ``+inf`` for
    ``alpha < 0``.
    """
    _check_alpha(alpha)
    za = _as_nonneg_array(z, "z")
    out = np.empty_like(za)
    zero = za == 0
    if alpha == 0:
        out[zero] = 0.0
    else:
        out[zero] = -np.inf if alpha > 0 else np.inf
    # the large-argument expansion needs z well beyond alpha^2
    asym = za > max(_BESSEL_SERIES_MAX_Z, alpha * alpha + _BESSEL_SERIES_MAX_Z)
    series = ~zero & ~asym
    if series.any():
        out[series] = _log_ive_series(alpha, za[series])
    if asym.any():
        out[asym] = _log_ive_asymptotic(alpha, za[asym])
    return _out(out, z)


def bessel_i_scaled(alpha, z):
    """Exponentially scaled modified Bessel function :math:`e^{-z} I_\\alpha(z)`.

    Parameters
    ----------
    alpha : float
        Order, ``alpha > -1``.
    z : float or array_like
        Argument, ``z >= 0``.

    Notes
    -----
    The ascending series is summed for moderate ``z`` and the large-argument
    expansion, truncated at its smallest term and after at most 20 terms,
    is used beyond. Both are evaluated in log form.
    """
    return _out(np.exp(log_bessel_i_scaled(alpha, z)), z)


# ---------------------------------------------------------------------------
# Pointwise envelopes
# ---------------------------------------------------------------------------


def asymptotic_envelope(k, alpha, u, system=System.CONV, gamma_decay=None):
    """Region tag and envelope value of the pointwise asymptotic bounds.

    Regions are numbered 1..4 from the origin outwards. For the
    convolution system the breakpoints in ``u`` are ``nu**-0.5``,
    ``sqrt(nu/2)`` and ``sqrt(3 nu / 2)``; for the standard system they are
    ``1/nu``, ``nu/2`` and ``3 nu / 2``. The decay rate in region 4 is
    not known explicitly and is taken from ``gamma_decay``; the default is
    ``DEFAULT_GAMMA_DECAY`` (convolution type) or ``DEFAULT_GAMMA_DECAY_STD``.

    Returns
    -------
    tuple
        ``(region, envelope)``; ints/floats for scalar ``u``, arrays otherwise.
    """
    k = _check_k(k)
    _check_alpha(alpha)
    system = System.parse(system)
    if gamma_decay is None:
        gamma_decay = DEFAULT_GAMMA_DECAY if system is System.CONV else DEFAULT_GAMMA_DECAY_STD
    ua = np.asarray(u, dtype=float)
    if np.any(ua <= 0):
        raise DomainError("envelope is defined for u > 0")
    nu = plancherel_nu(alpha, k)
    if system is System.CONV:
        b1, b2, b3 = nu ** -0.5, math.sqrt(nu / 2.0), math.sqrt(1.5 * nu)
        t = ua * ua
        env = np.select(
            [ua <= b1, ua <= b2, ua <= b3],
            [
                np.full_like(ua, nu ** (alpha / 2.0)),
                ua ** (-alpha - 0.5) * nu ** -0.25,
                ua ** (-alpha) * (nu * (nu ** (1.0 / 3.0) + np.abs(t - nu))) ** -0.25,
            ],
            ua ** (-alpha) * np.exp(-gamma_decay * ua),
        )
    else:
        b1, b2, b3 = 1.0 / nu, nu / 2.0, 1.5 * nu
        env = np.select(
            [ua <= b1, ua <= b2, ua <= b3],
            [
                (ua * nu) ** (alpha / 2.0),
                (ua * nu) ** -0.25,
                (nu * (nu ** (1.0 / 3.0) + np.abs(ua - nu))) ** -0.25,
            ],
            np.exp(-gamma_decay * ua),
        )
    region = np.select([ua <= b1, ua <= b2, ua <= b3], [1, 2, 3], 4)
    if np.ndim(u) == 0:
        return int(region), float(env)
    return region, env
