"""Counterexample atoms, calibration of their scale, and the growth scans.

For ``K`` large the atom lives on a ball of radius ``~ c K^{-1/2}``
(convolution type) or ``~ c/K`` (standard), where every basis function of
degree ``k <= K`` is comparable to its small-argument power law. The
coefficients ``<a, phi_k>`` then all have one sign and a size that makes
the Hardy sums grow like ``K^eps`` once the exponent is lowered by ``eps``.
"""

import functools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import CalibrationError, DomainError
from .hardy import CoefficientTable, LaguerreSetting, hardy_sum, setting_params
from .kernels import ScalingFit, fit_loglog
from .quadrature import (
    BallSpec,
    RadialMeasure,
    graded_edges,
    panel_nodes,
    validate_atom,
)
from .specfun import System, _conv_recurrence, ell_conv_table, ell_std_table, plancherel_nu

__all__ = [
    "AtomSpec",
    "CalibrationResult",
    "calibrate_c",
    "default_delta",
    "atom_conv",
    "atom_std",
    "atom_coefficients",
    "check_atom",
    "sharpness_scan",
    "l1_divergence_scan",
    "L1Scan",
]

#: ratio B/A allowed by the calibration
MAX_BOUND_RATIO = 4.0
_CALIB_POINTS = 32
_CALIB_LOWER = 1e-3


@dataclass(frozen=True)
class CalibrationResult:
    """Constant ``c`` with ``A <= phi_k(u) / (power law) <= B`` on the small-argument range."""

    c: float
    A: float
    B: float
    k_range: tuple
    system: System = System.CONV
    alpha: float = 0.0

    @property
    def ratio(self):
        return self.B / self.A

    def as_dict(self):
        return {
            "c": self.c,
            "A": self.A,
            "B": self.B,
            "k_range": list(self.k_range),
            "system": self.system.value,
            "alpha": self.alpha,
        }


@dataclass(frozen=True)
class AtomSpec:
    """Piecewise-constant function on boxes, with its supporting ball.

    ``pieces`` is a tuple of ``(box, height)`` where ``box`` holds one
    ``(lo, hi)`` interval per axis. The tensor structure is kept in
    ``axes``: one tuple of ``((lo, hi), height)`` per coordinate.
    """

    setting: LaguerreSetting
    K: int
    delta: float
    c: tuple
    pieces: tuple
    ball: BallSpec
    axes: tuple = field(default=(), repr=False)
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def measure(self):
        if self.setting.system is System.CONV:
            return RadialMeasure(self.setting.alpha)
        return RadialMeasure.lebesgue(self.setting.d)

    def __call__(self, x):
        """Evaluate at points of shape ``(n,)`` (``d = 1``) or ``(d, n)``."""
        x = np.asarray(x, dtype=float)
        pts = x.reshape(1, -1) if self.setting.d == 1 else x
        out = np.ones(pts.shape[1])
        for axis, xi in zip(self.axes, pts):
            vals = np.zeros_like(xi)
            for (lo, hi), h in axis:
                # first piece is closed at the origin side only through lo = 0
                vals = np.where((xi > lo) & (xi <= hi), h, vals)
            out *= vals
        return out.reshape(x.shape[-1:]) if self.setting.d == 1 else out

    def as_dict(self):
        return {
            "setting": self.setting.as_dict(),
            "K": self.K,
            "delta": self.delta,
            "c": list(self.c),
            "pieces": [[list(map(list, box)), h] for box, h in self.pieces],
            "ball": {"center": list(self.ball.center), "radius": self.ball.radius},
            "meta": self.meta,
        }


# ---------------------------------------------------------------------------
# Calibration
# ---------------------------------------------------------------------------


def _calibration_degrees(k_max):
    small = np.arange(1, min(k_max, 16) + 1)
    geo = np.unique(np.round(np.geomspace(16, k_max, 40)).astype(int)) if k_max > 16 else []
    return np.unique(np.concatenate([small, geo])).astype(int)


def _bound_constants(alpha, system, c, ks):
    """``(A, B)`` over the sampled degrees for a candidate ``c``.

    The samples are the limit ``u -> 0+`` followed by log-spaced points
    over three decades below the right endpoint. Including the limit keeps
    ``A`` non-increasing and ``B`` non-decreasing in ``c``.
    """
    t = np.concatenate([[0.0], np.geomspace(_CALIB_LOWER, 1.0, _CALIB_POINTS)])
    kf = ks.astype(float)
    if system is System.CONV:
        u = c * t[None, :] / np.sqrt(kf)[:, None]
        arg = u
    else:
        u = c * t[None, :] / kf[:, None]
        arg = np.sqrt(u)
    # one recurrence over all sample points, keeping only the tested degrees
    picked = _conv_recurrence(int(ks.max()), alpha, arg.ravel(), store=False, rows=ks)
    idx = np.arange(len(ks))
    vals = picked.reshape((len(ks),) + u.shape)[idx, idx]
    if system is System.CONV:
        ratio = vals / kf[:, None] ** (alpha / 2.0)
    else:
        # L_k(u) / (ku)^{alpha/2} = 2^{-1/2} ell_k(sqrt u) / k^{alpha/2}
        ratio = math.sqrt(0.5) * vals / kf[:, None] ** (alpha / 2.0)
    return float(ratio.min()), float(ratio.max())


@functools.lru_cache(maxsize=None)
def _calibrate(alpha, system, k_max, iterations, max_ratio):
    ks = _calibration_degrees(k_max)
    lo, hi = 1e-3, 4.0 if system is System.CONV else 16.0

    def ok(c):
        A, B = _bound_constants(alpha, system, c, ks)
        return A > 0 and B <= max_ratio * A

    if not ok(lo):
        raise CalibrationError(
            f"no c with B/A <= {max_ratio:g} for alpha={alpha} ({system.value}); "
            f"small-argument B/A is at least sqrt(Gamma(alpha+2)) = "
            f"{math.sqrt(math.gamma(alpha + 2.0)):.3g}"
        )
    if ok(hi):
        lo = hi
    else:
        for _ in range(iterations):
            mid = 0.5 * (lo + hi)
            lo, hi = (mid, hi) if ok(mid) else (lo, mid)
    A, B = _bound_constants(alpha, system, lo, ks)
    return CalibrationResult(lo, A, B, (1, int(k_max)), system, alpha)


def calibrate_c(alpha, system=System.CONV, k_max=4096, iterations=30, max_ratio=MAX_BOUND_RATIO):
    """Largest ``c`` (on a bisection grid) with ``B/A <= max_ratio``.

    Convolution type: ``A k^{alpha/2} <= ell_k(u) <= B k^{alpha/2}`` for
    ``0 < u < c k^{-1/2}``. Standard: ``A (ku)^{alpha/2} <= L_k(u) <= B (ku)^{alpha/2}``
    for ``0 < u < c/k``. Each tested degree is sampled at the limit ``u -> 0+`` and
    at 32 log-spaced points covering three decades below the right endpoint; the degrees are
    ``1..16`` plus 40 geometric values up to ``k_max``.

    Near the origin the ratio at degree ``k`` is proportional to
    ``sqrt(Gamma(k+alpha+1)/Gamma(k+1)) / k^{alpha/2}``, which is
    ``sqrt(Gamma(alpha+2))`` at ``k = 1`` and tends to 1. With the default
    ``max_ratio = 4`` calibration therefore fails for ``alpha`` above about
    2.75, raising :class:`CalibrationError`.

    Results are cached per ``(alpha, system, k_max, max_ratio)``.
    """
    system = System.parse(system)
    lower = -0.5 if system is System.CONV else 0.0
    if alpha < lower:
        raise DomainError(f"alpha must be >= {lower} for the {system.value} system")
    if int(k_max) < 64:
        raise DomainError("k_max must be at least 64")
    if not max_ratio > 1:
        raise DomainError("max_ratio must exceed 1")
    return _calibrate(float(alpha), system, int(k_max), int(iterations), float(max_ratio))


# ---------------------------------------------------------------------------
# Atom construction
# ---------------------------------------------------------------------------


def _conv_lower_delta(alphas):
    d = len(alphas)
    return max((1.0 + d ** (-a - 1.0)) ** (-1.0 / (2.0 * a + 2.0)) for a in alphas)


def default_delta(setting, calib=None):
    """Default ``delta`` for the atom of ``setting``.

    Convolution type: midpoint between the admissibility bound and 1.
    Standard, ``alpha > 0``: ``(A/(2B))^{2/alpha}`` from the calibration,
    capped at ``1/4``. Standard, ``alpha = 0``: the convolution-type default
    for ``alpha = 0``.
    """
    if not isinstance(setting, LaguerreSetting):
        setting = LaguerreSetting(*setting)
    if setting.system is System.CONV:
        return 0.5 * (1.0 + _conv_lower_delta([float(a) for a in setting.alpha]))
    alpha = float(setting.alpha[0])
    if alpha == 0:
        return 0.5 * (1.0 + _conv_lower_delta([0.0]))
    calib = calib or calibrate_c(alpha, System.STD)
    return min((calib.A / (2.0 * calib.B)) ** (2.0 / alpha), 0.25)


def _tensor_pieces(axes):
    pieces = [((), 1.0)]
    for axis in axes:
        pieces = [(box + (iv,), h * hh) for box, h in pieces for iv, hh in axis]
    return tuple(pieces)


def _per_axis_c(c, alphas, system):
    if c is None:
        return tuple(calibrate_c(a, system).c for a in alphas)
    if isinstance(c, CalibrationResult):
        c = c.c
    cs = tuple(float(x) for x in np.atleast_1d(c))
    if len(cs) == 1:
        cs = cs * len(alphas)
    if len(cs) != len(alphas) or any(x <= 0 for x in cs):
        raise DomainError("need one positive c per axis")
    return cs


def _conv_axis(alpha, K, delta, c):
    p = 2.0 * alpha + 2.0
    s = (math.sqrt(K) / c) ** p
    cut = c * delta / math.sqrt(K)
    end = c / math.sqrt(K)
    return (((0.0, cut), (delta ** -p - 1.0) * s), ((cut, end), -s))


def atom_conv(alpha, K, delta=None, c=None):
    """Counterexample atom for the convolution-type system.

    Parameters
    ----------
    alpha : float or sequence of float
        Type index per axis, each ``>= -1/2``.
    K : int
        Scale; the support is ``(0, c K^{-1/2})^d``.
    delta : float, optional
        Breakpoint fraction. Must satisfy
        ``max_i (1 + d^{-alpha_i-1})^{-1/(2 alpha_i + 2)} <= delta < 1``
        (strict on the left for ``d = 1``).
    c : float, sequence or CalibrationResult, optional
        Scale constant, common to all axes; when omitted it is the smallest
        of the per-axis calibrated values.
    """
    setting = LaguerreSetting(System.CONV, alpha)
    alphas = [float(a) for a in setting.alpha]
    K = int(K)
    if K < 1:
        raise DomainError("K must be a positive integer")
    d = setting.d
    bound = _conv_lower_delta(alphas)
    if delta is None:
        delta = default_delta(setting)
    delta = float(delta)
    ok_low = delta > bound if d == 1 else delta >= bound
    if not (ok_low and delta < 1.0):
        raise DomainError(
            f"delta={delta} outside the admissible range; need {bound:.6g} "
            f"{'<' if d == 1 else '<='} delta < 1"
        )
    cs = _per_axis_c(c, alphas, System.CONV)
    if c is None:
        # a smaller c keeps every per-axis calibration valid
        cs = (min(cs),) * d
    if len(set(cs)) != 1:
        raise DomainError("multi-dimensional atoms need a common c on every axis")
    axes = tuple(_conv_axis(a, K, delta, ci) for a, ci in zip(alphas, cs))
    half = cs[0] / (2.0 * math.sqrt(K))
    ball = BallSpec((half,) * d, math.sqrt(d) * half)
    return AtomSpec(setting, K, delta, cs, _tensor_pieces(axes), ball, axes,
                    {"delta_lower_bound": bound})


def atom_std(alpha, K, delta=None, c=None):
    """Counterexample atom for the standard system (one dimension).

    For ``alpha > 0`` the atom is ``-K/c`` on ``(0, c delta/K)`` and
    ``delta K / (c (1-delta))`` on ``(c delta/K, c/K)`` with ``0 < delta < 1/2``.
    For ``alpha = 0`` it is the ``sqrt``-pullback ``u -> a(sqrt(u))`` of the
    convolution-type atom with ``alpha = 0``, and ``c`` is that atom's constant.

    ``c`` may be a number or a :class:`CalibrationResult`; its bound
    constants ``A, B`` set the default ``delta``.
    """
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    if alpha.size != 1:
        raise DomainError("atom_std is one-dimensional")
    alpha = float(alpha[0])
    setting = LaguerreSetting(System.STD, (alpha,))
    K = int(K)
    if K < 1:
        raise DomainError("K must be a positive integer")
    if alpha == 0:
        base = atom_conv(0.0, K, delta, c)
        axis = tuple(((lo * lo, hi * hi), h) for (lo, hi), h in base.axes[0])
        end = axis[-1][0][1]
        ball = BallSpec((end / 2.0,), end / 2.0)
        return AtomSpec(setting, K, base.delta, base.c, _tensor_pieces((axis,)), ball, (axis,),
                        {"path": "sqrt-pullback", **base.meta})
    if isinstance(c, CalibrationResult):
        calib = c
    elif c is None:
        calib = calibrate_c(alpha, System.STD)
    else:
        ks = _calibration_degrees(4096)
        A, B = _bound_constants(alpha, System.STD, float(c), ks)
        calib = CalibrationResult(float(c), A, B, (1, 4096), System.STD, alpha)
    (c,) = _per_axis_c(calib.c, [alpha], System.STD)
    flagged = delta is None
    if delta is None:
        delta = default_delta(setting, calib)
    delta = float(delta)
    if not 0.0 < delta < 0.5:
        raise DomainError(f"delta={delta} outside the admissible range 0 < delta < 1/2")
    cut, end = c * delta / K, c / K
    axis = (((0.0, cut), -K / c), ((cut, end), delta * K / (c * (1.0 - delta))))
    ball = BallSpec((end / 2.0,), end / 2.0)
    meta = {"path": "direct"}
    if flagged:
        meta["delta_source"] = "calibrated (A/(2B))^(2/alpha), capped at 1/4"
    return AtomSpec(setting, K, delta, (c,), _tensor_pieces((axis,)), ball, (axis,), meta)


def check_atom(atom, rule=None):
    """:func:`validate_atom` under the atom's own measure."""
    return validate_atom(atom, atom.measure, rule=rule)


# ---------------------------------------------------------------------------
# Coefficients
# ---------------------------------------------------------------------------


def _piece_nodes(system, alpha, lo, hi, cap, m, refine):
    nu = plancherel_nu(alpha, cap)
    phase = math.sqrt(nu) * (hi - lo) if system is System.CONV else math.sqrt(nu * hi)
    panels = (4 + int(math.ceil(2.0 * phase))) * refine
    edges = np.linspace(lo, hi, panels + 1)
    if lo == 0.0:
        edges = np.concatenate([graded_edges(0.0, edges[1], 20)[:-1], edges[1:]])
    return panel_nodes(edges, m)


def _axis_coefficients(system, alpha, axis, cap, m, refine):
    out = np.zeros(cap + 1)
    power = 2.0 * alpha + 1.0 if system is System.CONV else 0.0
    table_fn = ell_conv_table if system is System.CONV else ell_std_table
    for (lo, hi), h in axis:
        x, w = _piece_nodes(system, alpha, lo, hi, cap, m, refine)
        out += h * (table_fn(cap, alpha, x) @ (w * np.power(x, power)))
    return out


def atom_coefficients(atom, cap=None, nodes_per_panel=16):
    """Coefficient table ``<a, phi_n>`` for ``n_i <= cap`` (default ``K``).

    Each axis factor is integrated piece by piece with panel edges at the
    breakpoints and geometric grading at the origin.
    """
    cap = atom.K if cap is None else int(cap)
    system = atom.setting.system
    alphas = [float(a) for a in atom.setting.alpha]
    coarse = [_axis_coefficients(system, a, ax, cap, nodes_per_panel, 1)
              for a, ax in zip(alphas, atom.axes)]
    fine = [_axis_coefficients(system, a, ax, cap, nodes_per_panel, 2)
            for a, ax in zip(alphas, atom.axes)]
    err = max(float(np.max(np.abs(f - g))) for f, g in zip(fine, coarse))
    if len(fine) == 1:
        return CoefficientTable.from_values(fine[0], quad_error=err)
    return CoefficientTable.from_factors(fine, quad_error=err)


# ---------------------------------------------------------------------------
# Scans
# ---------------------------------------------------------------------------


def _build_atom(setting, K, delta):
    if setting.system is System.CONV:
        return atom_conv(setting.alpha, K, delta)
    if setting.d != 1:
        raise DomainError("standard-system atoms are one-dimensional")
    return atom_std(setting.alpha[0], K, delta)


def _check_geometric(K_list, minimum=5):
    Ks = np.asarray(K_list, dtype=int)
    if Ks.ndim != 1 or len(Ks) < minimum or np.any(Ks < 1):
        raise DomainError(f"need at least {minimum} positive values of K")
    ratios = Ks[1:] / Ks[:-1]
    if not np.allclose(ratios, ratios[0], rtol=1e-6) or ratios[0] <= 1:
        raise DomainError("K values must form an increasing geometric sequence")
    return Ks


DEFAULT_K_LIST = tuple(2 ** j for j in range(4, 13))


def sharpness_scan(setting, epsilon, K_list=DEFAULT_K_LIST, delta=None, threads=1):
    """Growth of the reduced-exponent Hardy sum over the atom family.

    For each ``K`` the atom is coefficient-expanded to cap ``K`` and
    ``sum_{n in {1..K}^d} |<a, phi_n>| / |n|^{E - epsilon}`` is evaluated, with
    ``E`` the admissible exponent of ``setting``. The log-log slope against
    ``K`` is fitted on the upper half of ``K_list``.

    Returns
    -------
    ScalingFit
        ``grid`` holds every ``K``, its total, the smallest coefficient sign
        indicator and the total spread ``max/min``.
    """
    if not isinstance(setting, LaguerreSetting):
        setting = LaguerreSetting(*setting)
    if not 0 <= epsilon <= 0.5:
        raise DomainError("epsilon must lie in [0, 1/2]")
    Ks = _check_geometric(K_list)
    E = float(setting_params(setting).E)

    def one(K):
        atom = _build_atom(setting, int(K), delta)
        table = atom_coefficients(atom)
        signs_ok = all(bool(np.all(f[1:] > 0)) for f in
                       (table.factors if table.factors is not None else [table.values]))
        total = hardy_sum(table, E - epsilon, shift=0, positive_only=True).total
        return total, signs_ok, table.quad_error

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(one, Ks))
    else:
        rows = [one(K) for K in Ks]
    totals = np.array([r[0] for r in rows])
    half = len(Ks) // 2
    slope, intercept, resid = fit_loglog(Ks[half:], totals[half:])
    grid = {
        "K": [int(k) for k in Ks],
        "totals": [float(t) for t in totals],
        "fit_K": [int(k) for k in Ks[half:]],
        "E": E,
        "epsilon": float(epsilon),
        "spread": float(totals.max() / totals.min()),
        "all_positive": bool(all(r[1] for r in rows)),
        "quad_error": float(max(r[2] for r in rows)),
    }
    points = tuple((int(k), float(t)) for k, t in zip(Ks, totals))
    return ScalingFit(slope, intercept, resid, grid, points)


@dataclass(frozen=True)
class L1Scan:
    """Point-evaluation sums against ``log K``."""

    K: tuple
    sums: tuple
    slope: float
    intercept: float
    band: float
    last_octave_increase: float
    E: float

    @property
    def ratios(self):
        return tuple(s / math.log(k) for k, s in zip(self.K, self.sums))

    def as_fit(self):
        grid = {
            "K": list(self.K),
            "sums": list(self.sums),
            "ratios": list(self.ratios),
            "band": self.band,
            "last_octave_increase": self.last_octave_increase,
            "E": self.E,
        }
        resid = np.asarray(self.sums) - (self.slope * np.log(self.K) + self.intercept)
        return ScalingFit(self.slope, self.intercept, float(np.max(np.abs(resid))), grid,
                          tuple(zip(self.K, self.sums)))


DEFAULT_L1_K_LIST = tuple(2 ** j for j in range(4, 17))


def l1_divergence_scan(setting, x=1e-4, K_list=DEFAULT_L1_K_LIST, E=None, c=None):
    """``sum_{n in {1..K}^d} |phi_n(x)| / |n|^E`` as a function of ``K``.

    ``E`` defaults to the admissible exponent. The point ``x`` (scalar or
    per-axis) must satisfy ``x_i < c (d max K)^{-1/2}`` in the
    convolution-type system, or ``x_i < c/(d max K)`` in the standard one.
    """
    if not isinstance(setting, LaguerreSetting):
        setting = LaguerreSetting(*setting)
    system = setting.system
    alphas = [float(a) for a in setting.alpha]
    d = setting.d
    Ks = np.asarray(K_list, dtype=int)
    if len(Ks) < 2 or np.any(np.diff(Ks) <= 0) or Ks[0] < 2:
        raise DomainError("K values must increase and start at 2 or more")
    xs = np.broadcast_to(np.asarray(x, dtype=float), (d,))
    kmax = int(Ks.max())
    cs = _per_axis_c(c, alphas, system)
    for xi, ci in zip(xs, cs):
        limit = ci / math.sqrt(d * kmax) if system is System.CONV else ci / (d * kmax)
        if not 0 < xi < limit:
            raise DomainError(
                f"x={xi} outside the small-argument region (0, {limit:.3g})"
            )
    E = float(setting_params(setting).E) if E is None else float(E)
    table_fn = ell_conv_table if system is System.CONV else ell_std_table
    values = [np.abs(table_fn(kmax, a, np.array([xi]))[:, 0]) for a, xi in zip(alphas, xs)]
    sums = []
    for K in Ks:
        table = CoefficientTable.from_factors([v[: K + 1] for v in values])
        sums.append(hardy_sum(table, E, shift=0, positive_only=True).total)
    sums = np.array(sums)
    logK = np.log(Ks.astype(float))
    slope, intercept = np.polyfit(logK, sums, 1)
    ratios = sums / logK
    octave = np.searchsorted(Ks, Ks[-1] // 2)
    if Ks[octave] == Ks[-1] // 2:
        last = float(sums[-1] / sums[octave] - 1.0)
    else:
        last = float(sums[-1] / sums[-2] - 1.0)
    return L1Scan(tuple(int(k) for k in Ks), tuple(float(s) for s in sums), float(slope),
                  float(intercept), float(ratios.max() / ratios.min()), last, E)
