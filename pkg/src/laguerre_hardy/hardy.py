"""Expansion coefficients, Hardy-type sums and the admissible exponent.

The general result bounds ``sum_n |<f, phi_n>| (|n|+1)^{-E}`` by the
Hardy-space norm of ``f`` with ``E = gamma*N/(N+2) + d/2``, where ``gamma``
is the growth exponent of the kernel gradient norms in ``(1-r)^{-1}`` and
``N`` the lower growth exponent of ball measures.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import NamedTuple, Optional

import numpy as np
from scipy.signal import fftconvolve

from .errors import DomainError
from .quadrature import QuadratureRule, check_resolution
from .specfun import System, ell_conv_table, ell_std_table

__all__ = [
    "LaguerreSetting",
    "GeneralParams",
    "CoefficientTable",
    "HardySum",
    "BetaIdentity",
    "AskeyCheck",
    "admissible_exponent",
    "setting_params",
    "coefficients",
    "hardy_sum",
    "beta_identity",
    "askey_transfer_check",
    "kanjin_sum",
]


@dataclass(frozen=True)
class LaguerreSetting:
    """System, per-axis type index and dimension of an expansion."""

    system: System
    alpha: tuple

    def __post_init__(self):
        object.__setattr__(self, "system", System.parse(self.system))
        alpha = self.alpha
        if isinstance(alpha, (int, float, Fraction)):
            alpha = (alpha,)
        alpha = tuple(alpha)
        if not alpha:
            raise DomainError("alpha needs at least one component")
        lower = -0.5 if self.system is System.CONV else 0.0
        if any(a < lower for a in alpha):
            raise DomainError(
                f"{self.system.value} setting requires every alpha_i >= {lower}, got {alpha}"
            )
        object.__setattr__(self, "alpha", alpha)

    @property
    def d(self):
        return len(self.alpha)

    @property
    def alpha_length(self):
        """``|alpha| = alpha_1 + ... + alpha_d``."""
        return sum(self.alpha)

    def as_dict(self):
        return {"system": self.system.value, "alpha": [float(a) for a in self.alpha], "d": self.d}


@dataclass(frozen=True)
class GeneralParams:
    gamma: Optional[object]
    N: object
    d: int
    E: object
    provenance: str = "kernel-gradient"

    def as_dict(self):
        def conv(x):
            return None if x is None else (str(x) if isinstance(x, Fraction) else float(x))

        return {
            "gamma": conv(self.gamma),
            "N": conv(self.N),
            "d": self.d,
            "E": conv(self.E),
            "E_float": float(self.E),
            "provenance": self.provenance,
        }


def _exact(*values):
    return all(isinstance(v, Rational) for v in values)


def admissible_exponent(gamma, N, d):
    """``gamma*N/(N+2) + d/2``; exact when every input is rational."""
    if not (gamma > 0 and N > 0):
        raise DomainError("gamma and N must be positive")
    if _exact(gamma, N, d):
        gamma, N = Fraction(gamma), Fraction(N)
        return gamma * N / (N + 2) + Fraction(d, 2)
    return float(gamma) * float(N) / (float(N) + 2.0) + 0.5 * d


def setting_params(setting):
    """Kernel-gradient exponent, ball exponent and admissible exponent of a setting.

    For the standard system with some ``alpha_i`` in ``(0, 2)`` no gradient
    bound is available; the exponent ``E = d`` then comes from the
    ``L^1`` coefficient-transfer argument and ``gamma`` is ``None``.
    """
    d = setting.d
    alen = setting.alpha_length
    exact = _exact(*setting.alpha)
    half = Fraction(1, 2) if exact else 0.5
    if setting.system is System.CONV:
        gamma = (alen + d + 1) * half
        N = 2 * alen + 2 * d
        return GeneralParams(gamma, N, d, admissible_exponent(gamma, N, d))
    if all(a == 0 or a >= 2 for a in setting.alpha):
        gamma = 1 + d * half
        return GeneralParams(gamma, d, d, admissible_exponent(gamma, d, d))
    E = Fraction(d) if exact else float(d)
    return GeneralParams(None, d, d, E, provenance="l1-transfer")


@dataclass(frozen=True)
class CoefficientTable:
    """Expansion coefficients ``<f, phi_n>`` for ``0 <= n_i <= cap``.

    Tensor-product inputs keep their one-dimensional ``factors`` and only
    materialize :attr:`values` on demand.
    """

    cap: int
    d: int
    quad_error: float = 0.0
    factors: Optional[tuple] = None
    _values: Optional[np.ndarray] = field(default=None, repr=False)

    @classmethod
    def from_values(cls, values, quad_error=0.0):
        values = np.asarray(values, dtype=float)
        if len(set(values.shape)) != 1:
            raise DomainError("coefficient table must be square")
        if not np.all(np.isfinite(values)):
            raise DomainError("coefficient table has non-finite entries")
        return cls(values.shape[0] - 1, values.ndim, quad_error, None, values)

    @classmethod
    def from_factors(cls, factors, quad_error=0.0):
        factors = tuple(np.asarray(f, dtype=float) for f in factors)
        if len({len(f) for f in factors}) != 1:
            raise DomainError("tensor factors must share one cap")
        if not all(np.all(np.isfinite(f)) for f in factors):
            raise DomainError("coefficient factors have non-finite entries")
        return cls(len(factors[0]) - 1, len(factors), quad_error, factors, None)

    @classmethod
    def unit(cls, index, cap):
        index = tuple(np.atleast_1d(index))
        values = np.zeros((cap + 1,) * len(index))
        values[index] = 1.0
        return cls.from_values(values)

    @property
    def values(self):
        if self._values is not None:
            return self._values
        out = self.factors[0]
        for f in self.factors[1:]:
            out = np.multiply.outer(out, f)
        return out

    def __getitem__(self, n):
        n = tuple(np.atleast_1d(n))
        if self.factors is not None:
            return float(np.prod([f[k] for f, k in zip(self.factors, n)]))
        return float(self._values[n])

    def shell_abs_sums(self, positive_only=False):
        """``sum_{|n| = s} |c_n|`` for ``s = 0..d*cap``, in lexicographic order."""
        if self.factors is not None:
            parts = [np.abs(f) for f in self.factors]
            if positive_only:
                parts = [np.concatenate([[0.0], p[1:]]) for p in parts]
            out = parts[0]
            for p in parts[1:]:
                out = _nonneg_convolve(out, p)
            return out
        vals = np.abs(self._values)
        if positive_only:
            vals = vals[(slice(1, None),) * self.d]
            offset = self.d
        else:
            offset = 0
        lengths = np.indices(vals.shape).sum(axis=0) + offset
        out = np.zeros(self.d * self.cap + 1)
        np.add.at(out, lengths.ravel(), vals.ravel())
        return out


_DIRECT_CONVOLVE_MAX = 4096


def _nonneg_convolve(a, b):
    """Convolution of non-negative sequences; FFT based for long inputs."""
    if min(len(a), len(b)) <= _DIRECT_CONVOLVE_MAX:
        return np.convolve(a, b)
    return np.clip(fftconvolve(a, b), 0.0, None)


class HardySum(NamedTuple):
    shells: np.ndarray
    partial: np.ndarray
    total: float


def hardy_sum(table, E, shift=1, positive_only=False):
    """Shell-wise ``sum_n |c_n| / (|n| + shift)^E`` over the whole table.

    Parameters
    ----------
    table : CoefficientTable
    E : float
        Exponent.
    shift : int
        ``1`` for the Hardy sum itself; ``0`` together with
        ``positive_only=True`` gives the sum over ``n_i >= 1`` with
        ``|n|^{-E}`` weights.
    positive_only : bool
        Restrict to multi-indices with every component at least one.

    Returns
    -------
    HardySum
        Per-shell contributions, their running sums and the total. Nothing
        is extrapolated beyond the cap.
    """
    abs_shells = table.shell_abs_sums(positive_only=positive_only)
    s = np.arange(len(abs_shells), dtype=float) + shift
    with np.errstate(divide="ignore", invalid="ignore"):
        weights = np.where(s > 0, s ** -float(E), 0.0)
    shells = abs_shells * weights
    partial = np.cumsum(shells)
    return HardySum(shells, partial, float(partial[-1]))


def _basis_table(system, kmax, alpha, x):
    if system is System.CONV:
        return ell_conv_table(kmax, alpha, x)
    return ell_std_table(kmax, alpha, x)


def _axis_moments(system, alpha, kmax, fvals, x, w):
    power = 2.0 * alpha + 1.0 if system is System.CONV else 0.0
    table = _basis_table(system, kmax, alpha, x)
    return table @ (fvals * w * np.power(x, power))


def coefficients(f, setting, cap, rule=None):
    """All coefficients ``<f, phi_n>`` with ``n_i <= cap``.

    Parameters
    ----------
    f : callable or sequence of callables
        A callable gets an array of shape ``(n,)`` (``d = 1``) or ``(d, n)``;
        a sequence is a tensor product of one-dimensional factors.
    setting : LaguerreSetting
    cap : int
    rule : QuadratureRule, optional
        Defaults to :meth:`QuadratureRule.for_basis` for ``cap``.

    Returns
    -------
    CoefficientTable
        ``quad_error`` is the largest change under panel doubling.
    """
    system = setting.system
    alpha = [float(a) for a in setting.alpha]
    if rule is None:
        rule = QuadratureRule.for_basis(system, max(alpha), cap)
    check_resolution(system, alpha, cap, rule)

    def compute(rl):
        x, w = rl.nodes()
        if callable(f) and setting.d == 1:
            return [_axis_moments(system, alpha[0], cap, np.asarray(f(x), float), x, w)]
        if not callable(f):
            if len(f) != setting.d:
                raise DomainError("tensor factors do not match the dimension")
            return [_axis_moments(system, a, cap, np.asarray(fi(x), float), x, w)
                    for fi, a in zip(f, alpha)]
        if setting.d != 2:
            raise DomainError("general callables are supported for d <= 2; pass tensor factors")
        X1, X2 = np.meshgrid(x, x, indexing="ij")
        F = np.asarray(f(np.stack([X1.ravel(), X2.ravel()])), float).reshape(X1.shape)
        power = [(2 * a + 1 if system is System.CONV else 0.0) for a in alpha]
        T1 = _basis_table(system, cap, alpha[0], x) * (w * x ** power[0])
        T2 = _basis_table(system, cap, alpha[1], x) * (w * x ** power[1])
        return T1 @ F @ T2.T

    coarse = compute(rule)
    fine = compute(rule.refined())
    if isinstance(fine, list):
        err = max(float(np.max(np.abs(a - b))) for a, b in zip(fine, coarse))
        if len(fine) == 1:
            return CoefficientTable.from_values(fine[0], quad_error=err)
        return CoefficientTable.from_factors(fine, quad_error=err)
    return CoefficientTable.from_values(fine, quad_error=float(np.max(np.abs(fine - coarse))))


class BetaIdentity(NamedTuple):
    exact: float
    asymptotic: float

    @property
    def ratio(self):
        return self.exact / self.asymptotic


def beta_identity(k, E):
    """``B(2k+1, E)`` and its large-``k`` form ``Gamma(E) (2k+1)^{-E}``.

    ``B(2k+1, E) = int_0^1 r^{2k} (1-r)^{E-1} dr`` turns the weight
    ``(k+1)^{-E}`` into an average over ``r`` of ``r^{2k}``.
    """
    if int(k) != k or k < 0:
        raise DomainError("k must be a non-negative integer")
    if not E > 0:
        raise DomainError("E must be positive")
    m = 2 * int(k) + 1
    exact = math.exp(math.lgamma(m) + math.lgamma(E) - math.lgamma(m + E))
    asymptotic = math.exp(math.lgamma(E) - E * math.log(m))
    return BetaIdentity(exact, asymptotic)


class AskeyCheck(NamedTuple):
    k: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray

    @property
    def ratio(self):
        return self.lhs / self.rhs


def askey_transfer_check(g, beta, kmax, jmax=None, rule=None):
    """Compare both sides of the coefficient-transfer inequality.

    ``|<g, L_k^beta>|`` against
    ``|<g, L_{k-1}^{beta+2}>| + sum_{j=k}^{jmax} |<g, L_j^{beta+2}>| (k/j)^{beta/2} / j``
    for ``k = 1..kmax``.
    """
    if beta < 0:
        raise DomainError("beta must be non-negative")
    jmax = jmax if jmax is not None else 4 * kmax
    if rule is None:
        rule = QuadratureRule.for_basis(System.STD, beta + 2.0, jmax)
    x, w = rule.nodes()
    gv = np.asarray(g(x), float)
    lhs_all = np.abs(ell_std_table(kmax, beta, x) @ (gv * w))
    up = np.abs(ell_std_table(jmax, beta + 2.0, x) @ (gv * w))
    ks = np.arange(1, kmax + 1)
    js = np.arange(1, jmax + 1, dtype=float)
    rhs = np.empty(kmax)
    for i, k in enumerate(ks):
        j = js[k - 1:]
        rhs[i] = up[k - 1] + np.sum(up[k:] * (k / j) ** (beta / 2.0) / j)
    return AskeyCheck(ks, lhs_all[1:], rhs)


def kanjin_sum(delta, u, cap):
    """``sum_{k=0}^{cap} |L_k^delta(u)| / (k+1)`` for every point of ``u``."""
    ua = np.atleast_1d(np.asarray(u, float))
    weights = 1.0 / (np.arange(cap + 1) + 1.0)
    total = weights @ np.abs(ell_std_table(cap, delta, ua))
    return float(total[0]) if np.ndim(u) == 0 else total
