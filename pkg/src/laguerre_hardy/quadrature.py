r"""Weighted measures, composite Gauss-Legendre rules and atom checks.

The measure on :math:`(0,\infty)^d` is :math:`d\mu_\alpha(x) = x^{2\alpha+1} dx`
(per axis). Lebesgue measure is the special case ``alpha = -1/2`` on every
axis, which is how the standard Laguerre system is handled.
"""

import functools
import itertools
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DomainError, EvaluationError, PrecisionError, StructuralError
from .specfun import System, ell_conv_table, ell_std_table, plancherel_nu

__all__ = [
    "RadialMeasure",
    "QuadratureRule",
    "BallSpec",
    "AtomReport",
    "QuadResult",
    "gauss_legendre",
    "panel_nodes",
    "mu_measure",
    "mu_ball",
    "integrate",
    "inner_product",
    "validate_atom",
    "basis_tail_mass",
    "gram_matrix",
    "TOL_MEAN",
    "TOL_REL",
]

TOL_MEAN = 1e-10
TOL_REL = 1e-8

# ratio between consecutive geometric panels near the origin
_GRADING_RATIO = 0.25


@dataclass(frozen=True)
class RadialMeasure:
    """Product measure ``prod_i x_i^(2 alpha_i + 1) dx_i`` on the open orthant."""

    alpha: tuple

    def __post_init__(self):
        alpha = tuple(float(a) for a in np.atleast_1d(self.alpha))
        if not alpha:
            raise DomainError("measure needs at least one axis")
        if any(a <= -1.0 for a in alpha):
            raise DomainError("measure exponent 2*alpha+1 must exceed -1")
        object.__setattr__(self, "alpha", alpha)

    @classmethod
    def lebesgue(cls, d=1):
        return cls((-0.5,) * d)

    @property
    def d(self):
        return len(self.alpha)

    @property
    def powers(self):
        return tuple(2.0 * a + 1.0 for a in self.alpha)

    def is_doubling(self):
        return all(a >= -0.5 for a in self.alpha)


@functools.lru_cache(maxsize=64)
def gauss_legendre(m):
    """Read-only Gauss-Legendre nodes and weights on ``[-1, 1]``."""
    x, w = np.polynomial.legendre.leggauss(int(m))
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def panel_nodes(edges, m):
    """Composite rule with ``m`` Gauss-Legendre nodes on every panel.

    Parameters
    ----------
    edges : array_like
        Increasing panel boundaries.
    m : int
        Nodes per panel.

    Returns
    -------
    tuple of numpy.ndarray
        ``(nodes, weights)``, flattened in panel order.
    """
    edges = np.asarray(edges, dtype=float)
    gx, gw = gauss_legendre(m)
    lo, hi = edges[:-1, None], edges[1:, None]
    half = 0.5 * (hi - lo)
    nodes = (lo + half * (gx + 1.0)).ravel()
    weights = (half * gw).ravel()
    return nodes, weights


def graded_edges(a, b, levels, ratio=_GRADING_RATIO):
    """Panel edges on ``[a, b]`` refined geometrically towards ``a``."""
    if levels <= 0:
        return np.array([a, b], dtype=float)
    t = ratio ** np.arange(levels, -1, -1, dtype=float)
    return np.concatenate([[a], a + (b - a) * t])


@dataclass(frozen=True)
class QuadratureRule:
    """Composite Gauss-Legendre rule on ``(0, truncation]``.

    Attributes
    ----------
    truncation : float
        Upper integration limit on every axis.
    panels : int
        Number of equal panels (equal in ``u`` for ``spacing="uniform"``,
        equal in ``sqrt(u)`` for ``spacing="sqrt"``).
    nodes_per_panel : int
        Gauss-Legendre nodes per panel.
    grading : int
        Number of geometric sub-panels carved out of the first panel, which
        resolves algebraic endpoint behaviour at the origin.
    """

    truncation: float
    panels: int
    nodes_per_panel: int
    kind: str = "GaussLegendreComposite"
    spacing: str = "uniform"
    grading: int = 0
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.truncation > 0:
            raise DomainError("truncation must be positive")
        if self.panels < 1 or self.nodes_per_panel < 1:
            raise DomainError("panels and nodes_per_panel must be positive")
        if self.panels * self.nodes_per_panel < 2:
            raise DomainError("a rule needs at least two nodes")
        if self.spacing not in ("uniform", "sqrt"):
            raise DomainError(f"unknown spacing {self.spacing!r}")
        if self.kind != "GaussLegendreComposite":
            raise DomainError(f"unknown rule kind {self.kind!r}")

    @classmethod
    def for_basis(cls, system, alpha, kmax, density=8.0, nodes_per_panel=16, grading=20):
        """Rule resolving all basis functions of degree ``<= kmax``.

        The truncation is ``sqrt(3 nu / 2) + 10`` (convolution type) or
        ``3 nu / 2 + 40`` (standard), and the node density in the
        oscillatory variable is at least ``density * sqrt(nu)``.
        """
        system = System.parse(system)
        alpha = max(np.atleast_1d(alpha))
        nu = plancherel_nu(alpha, kmax)
        if system is System.CONV:
            truncation = math.sqrt(1.5 * nu) + 10.0
            length = truncation
            spacing = "uniform"
        else:
            truncation = 1.5 * nu + 40.0
            length = math.sqrt(truncation)
            spacing = "sqrt"
        n_nodes = density * math.sqrt(nu) * length
        panels = max(1, int(math.ceil(n_nodes / nodes_per_panel)))
        return cls(truncation, panels, nodes_per_panel, spacing=spacing, grading=grading)

    def refined(self):
        """The same rule with twice as many panels."""
        return QuadratureRule(
            self.truncation,
            2 * self.panels,
            self.nodes_per_panel,
            kind=self.kind,
            spacing=self.spacing,
            grading=self.grading,
        )

    @property
    def nodes_per_unit(self):
        """Node density in the natural variable (``u``, or ``sqrt(u)``)."""
        length = self.truncation if self.spacing == "uniform" else math.sqrt(self.truncation)
        return self.panels * self.nodes_per_panel / length

    def edges(self):
        if self.spacing == "uniform":
            edges = np.linspace(0.0, self.truncation, self.panels + 1)
        else:
            edges = np.linspace(0.0, math.sqrt(self.truncation), self.panels + 1) ** 2
        first = graded_edges(0.0, edges[1], self.grading)
        return np.concatenate([first, edges[2:]])

    def nodes(self):
        """Read-only ``(nodes, weights)`` on ``(0, truncation]``."""
        if "nw" not in self._cache:
            x, w = panel_nodes(self.edges(), self.nodes_per_panel)
            x.setflags(write=False)
            w.setflags(write=False)
            self._cache["nw"] = (x, w)
        return self._cache["nw"]

    def as_dict(self):
        return {
            "kind": self.kind,
            "truncation": self.truncation,
            "panels": self.panels,
            "nodes_per_panel": self.nodes_per_panel,
            "spacing": self.spacing,
            "grading": self.grading,
        }


@dataclass(frozen=True)
class BallSpec:
    """Euclidean ball; only its intersection with the open orthant matters."""

    center: tuple
    radius: float

    def __post_init__(self):
        center = tuple(float(c) for c in np.atleast_1d(self.center))
        if any(c <= 0 for c in center):
            raise DomainError("ball center must lie in the open orthant")
        if not self.radius > 0:
            raise DomainError("ball radius must be positive")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def d(self):
        return len(self.center)

    def contains(self, points, rtol=1e-12):
        """Whether ``points`` (shape ``(..., d)``) lie in the closed ball."""
        pts = np.asarray(points, dtype=float)
        dist = np.sqrt(np.sum((pts - np.asarray(self.center)) ** 2, axis=-1))
        return dist <= self.radius * (1.0 + rtol)


@dataclass(frozen=True)
class AtomReport:
    mean: float
    l2_norm: float
    mu_ball: float
    is_atom: bool
    slack: float
    l1_norm: float = float("nan")

    def as_dict(self):
        return {
            "mean": self.mean,
            "l2_norm": self.l2_norm,
            "mu_ball": self.mu_ball,
            "is_atom": self.is_atom,
            "slack": self.slack,
            "l1_norm": self.l1_norm,
        }


class QuadResult(NamedTuple):
    value: float
    error: float


# ---------------------------------------------------------------------------
# Measures of boxes and balls
# ---------------------------------------------------------------------------


def _interval_measure(p, a, b):
    """``int_a^b x^p dx`` for ``0 <= a <= b``, vectorized."""
    q = p + 1.0
    return (np.power(b, q) - np.power(a, q)) / q


def mu_measure(measure, box):
    """Exact measure of a box ``prod_i (a_i, b_i]``.

    Parameters
    ----------
    measure : RadialMeasure
    box : sequence of (float, float)
        One interval per axis, ``0 <= a_i < b_i``.
    """
    box = [tuple(map(float, iv)) for iv in box]
    if len(box) != measure.d:
        raise DomainError("box dimension does not match the measure")
    total = 1.0
    for p, (a, b) in zip(measure.powers, box):
        if a < 0 or not b > a:
            raise DomainError(f"invalid interval ({a}, {b}]")
        total *= float(_interval_measure(p, a, b))
    return total


def _subset_norms(values):
    vals = np.asarray(values, dtype=float)
    out = []
    for r in range(1, len(vals) + 1):
        for idx in itertools.combinations(range(len(vals)), r):
            out.append(math.sqrt(float(np.sum(vals[list(idx)] ** 2))))
    return out


def _ball_measure(powers, center, rho, m):
    """Measure of ``B(center, rho)`` intersected with the orthant.

    The first coordinate is parametrized as ``c1 + rho*sin(theta)``; the
    slice at fixed ``theta`` is a ball of radius ``rho*cos(theta)`` in one
    dimension less, handled recursively. Panels are split wherever the
    slice starts touching a coordinate face, so every panel integrand is
    smooth.
    """
    rho = float(rho)
    if rho <= 0.0:
        return 0.0
    if len(center) == 1:
        c = center[0]
        return float(_interval_measure(powers[0], max(c - rho, 0.0), c + rho))
    c1, rest = center[0], center[1:]
    lo = -0.5 * math.pi if c1 >= rho else math.asin(-c1 / rho)
    cuts = {lo, 0.5 * math.pi}
    for val in _subset_norms(rest):
        if val < rho:
            t = math.acos(val / rho)
            for s in (t, -t):
                if lo < s < 0.5 * math.pi:
                    cuts.add(s)
    cuts = sorted(cuts)
    p1 = powers[0]
    needs_grading = c1 < rho and p1 != int(p1)
    total = 0.0
    for i, (a, b) in enumerate(zip(cuts[:-1], cuts[1:])):
        levels = 16 if (needs_grading and i == 0) else 0
        edges = graded_edges(a, b, levels)
        edges = np.concatenate([np.linspace(e0, e1, 3)[:-1] for e0, e1 in zip(edges[:-1], edges[1:])] + [[b]])
        theta, w = panel_nodes(edges, m)
        x1 = np.maximum(c1 + rho * np.sin(theta), 0.0)
        h = rho * np.cos(theta)
        if len(rest) == 1:
            c2 = rest[0]
            inner = _interval_measure(powers[1], np.maximum(c2 - h, 0.0), c2 + h)
        else:
            inner = np.array([_ball_measure(powers[1:], rest, hh, m) for hh in h])
        total += float(np.sum(w * np.power(x1, p1) * inner * h))
    return total


def mu_ball(measure, ball, rule=None, rtol=1e-8):
    """Measure of ``ball`` intersected with the open orthant.

    Exact for ``d = 1``. For ``d >= 2`` the ball is sliced recursively and
    the slices are integrated by Gauss-Legendre rules; the node count is
    doubled until two successive values agree to ``rtol``.
    """
    if ball.d != measure.d:
        raise DomainError("ball dimension does not match the measure")
    if measure.d == 1:
        c, rho = ball.center[0], ball.radius
        return mu_measure(measure, [(max(c - rho, 0.0), c + rho)])
    m = rule.nodes_per_panel if rule is not None else 16
    prev = _ball_measure(measure.powers, ball.center, ball.radius, m)
    for _ in range(5):
        m *= 2
        cur = _ball_measure(measure.powers, ball.center, ball.radius, m)
        if abs(cur - prev) <= rtol * abs(cur):
            return cur
        prev = cur
    raise PrecisionError("ball measure did not converge")


# ---------------------------------------------------------------------------
# Integration
# ---------------------------------------------------------------------------


def _weighted_nodes(measure, rule):
    x, w = rule.nodes()
    axes = []
    for p in measure.powers:
        axes.append((x, w * np.power(x, p)))
    return axes


def _tensor_quadrature(f, measure, rule):
    axes = _weighted_nodes(measure, rule)
    if measure.d == 1:
        x, w = axes[0]
        vals = np.asarray(f(x), dtype=float)
        pts = x
    else:
        grids = np.meshgrid(*[a[0] for a in axes], indexing="ij")
        wgrid = functools.reduce(np.multiply.outer, [a[1] for a in axes])
        pts = np.stack([g.ravel() for g in grids])
        vals = np.asarray(f(pts), dtype=float).reshape(wgrid.shape)
        w = wgrid
    bad = ~np.isfinite(vals)
    if bad.any():
        idx = np.flatnonzero(bad.ravel())[0]
        node = pts[idx] if measure.d == 1 else pts[:, idx]
        raise EvaluationError(f"integrand is not finite at node {node!r}", node=node)
    return float(np.sum(vals * w))


def integrate(f, measure, rule):
    """Integrate ``f`` against ``measure`` over ``(0, truncation]^d``.

    ``f`` receives an array of shape ``(n,)`` in one dimension and
    ``(d, n)`` otherwise. The error estimate is the change under panel
    doubling.

    Returns
    -------
    QuadResult
    """
    coarse = _tensor_quadrature(f, measure, rule)
    fine = _tensor_quadrature(f, measure, rule.refined())
    return QuadResult(fine, abs(fine - coarse))


def _basis_table(system, kmax, alpha, x):
    if system is System.CONV:
        return ell_conv_table(kmax, alpha, x)
    return ell_std_table(kmax, alpha, x)


def _measure_of(setting):
    system = System.parse(setting.system)
    alpha = tuple(np.atleast_1d(setting.alpha))
    if system is System.CONV:
        return RadialMeasure(alpha)
    return RadialMeasure.lebesgue(len(alpha))


def check_resolution(system, alpha, kmax, rule):
    """Raise :class:`PrecisionError` if ``rule`` cannot resolve degree ``kmax``."""
    system = System.parse(system)
    nu = plancherel_nu(max(np.atleast_1d(alpha)), kmax)
    need = 8.0 * math.sqrt(nu)
    have = rule.nodes_per_unit
    if system is System.STD and rule.spacing == "uniform":
        need *= 0.5
    if have < need:
        raise PrecisionError(
            f"rule has {have:.1f} nodes per unit, degree {kmax} needs {need:.1f}"
        )


def inner_product(f, n, setting, rule):
    """Inner product of ``f`` with the basis function of multi-index ``n``.

    Parameters
    ----------
    f : callable or sequence of callables
        A sequence is read as a tensor product ``f_1(x_1) ... f_d(x_d)``
        and reduces to one-dimensional quadratures.
    n : int or sequence of int
    setting : LaguerreSetting
    rule : QuadratureRule
    """
    system = System.parse(setting.system)
    alpha = tuple(np.atleast_1d(setting.alpha))
    n = tuple(int(k) for k in np.atleast_1d(n))
    if len(n) != len(alpha):
        raise DomainError("multi-index length does not match the setting")
    check_resolution(system, alpha, max(n), rule)
    measure = _measure_of(setting)
    x, w = rule.nodes()
    if callable(f) and len(alpha) > 1:

        def integrand(pts):
            prod = np.asarray(f(pts), dtype=float)
            for i, (k, a) in enumerate(zip(n, alpha)):
                prod = prod * _basis_table(system, k, a, pts[i])[-1]
            return prod

        return _tensor_quadrature(integrand, measure, rule)
    factors = [f] if callable(f) else list(f)
    if len(factors) != len(alpha):
        raise DomainError("tensor factors do not match the dimension")
    total = 1.0
    for fi, k, a, p in zip(factors, n, alpha, measure.powers):
        vals = np.asarray(fi(x), dtype=float)
        if not np.all(np.isfinite(vals)):
            idx = int(np.flatnonzero(~np.isfinite(vals))[0])
            raise EvaluationError(f"integrand is not finite at node {x[idx]!r}", node=x[idx])
        phi = _basis_table(system, k, a, x)[-1]
        total *= float(np.sum(vals * phi * w * np.power(x, p)))
    return total


def gram_matrix(system, alpha, kmax, rule=None):
    """Quadrature Gram matrix ``<phi_j, phi_k>`` for ``j, k <= kmax``.

    Returns
    -------
    (ndarray, QuadratureRule)
        The ``(kmax+1, kmax+1)`` matrix and the rule used.
    """
    system = System.parse(system)
    if rule is None:
        rule = QuadratureRule.for_basis(system, alpha, kmax)
    check_resolution(system, alpha, kmax, rule)
    x, w = rule.nodes()
    table = _basis_table(system, kmax, alpha, x)
    power = 2.0 * alpha + 1.0 if system is System.CONV else 0.0
    weighted = table * (w * np.power(x, power))
    return weighted @ table.T, rule


def basis_tail_mass(system, alpha, kmax, rule, extent=2.0):
    """Largest ``int_T^{extent*T} phi_k^2`` over ``k <= kmax`` beyond the truncation."""
    system = System.parse(system)
    T = rule.truncation
    if system is System.CONV:
        edges = np.linspace(T, extent * T, 200)
        power = 2.0 * alpha + 1.0
    else:
        edges = np.linspace(math.sqrt(T), math.sqrt(extent * T), 200) ** 2
        power = 0.0
    x, w = panel_nodes(edges, 16)
    table = _basis_table(system, kmax, alpha, x)
    return float(np.max(table**2 @ (w * x**power)))


# ---------------------------------------------------------------------------
# Atom validation
# ---------------------------------------------------------------------------


def _box_corners(box):
    return np.array(list(itertools.product(*box)), dtype=float)


def _report(mean, l2, l1, mu_b, tol_mean, tol_rel):
    bound = mu_b ** -0.5
    is_atom = abs(mean) <= tol_mean * max(l1, 1e-300) and l2 <= bound * (1.0 + tol_rel)
    return AtomReport(
        mean=float(mean),
        l2_norm=float(l2),
        mu_ball=float(mu_b),
        is_atom=bool(is_atom),
        slack=float(bound - l2),
        l1_norm=float(l1),
    )


def validate_atom(atom, measure, rule=None, ball=None, breakpoints=None,
                  tol_mean=TOL_MEAN, tol_rel=TOL_REL):
    """Check the (1,2)-atom conditions for ``atom``.

    Parameters
    ----------
    atom : AtomSpec or callable
        Either an object with ``pieces`` (``[(box, height), ...]``, disjoint
        boxes) and ``ball``, or a callable together with ``ball``.
    measure : RadialMeasure
    rule : QuadratureRule, optional
        Node count for ball measures and for callable atoms.
    ball : BallSpec, optional
        Required for callables; overrides ``atom.ball`` otherwise.
    breakpoints : sequence of float, optional
        Panel edges for a one-dimensional callable (its jump points).

    Returns
    -------
    AtomReport

    Raises
    ------
    StructuralError
        If the support is not contained in the ball.
    """
    if hasattr(atom, "pieces"):
        ball = ball or atom.ball
        mean = l2sq = l1 = 0.0
        for box, height in atom.pieces:
            if not np.all(ball.contains(_box_corners(box))):
                raise StructuralError(f"piece {box} leaks outside the ball")
            vol = mu_measure(measure, box)
            mean += height * vol
            l2sq += height * height * vol
            l1 += abs(height) * vol
        return _report(mean, math.sqrt(l2sq), l1, mu_ball(measure, ball, rule), tol_mean, tol_rel)

    if ball is None:
        raise DomainError("a callable atom needs an explicit ball")
    if measure.d != 1:
        return _validate_callable_nd(atom, measure, ball, rule, tol_mean, tol_rel)
    c, rho = ball.center[0], ball.radius
    lo, hi = max(c - rho, 0.0), c + rho
    # support check on a probe grid around the ball
    probe = np.linspace(max(c - 2 * rho, 1e-300), c + 2 * rho, 4001)
    outside = (probe < lo) | (probe > hi)
    if np.any(np.asarray(atom(probe[outside]), dtype=float) != 0):
        raise StructuralError("callable atom is non-zero outside its ball")
    edges = sorted({lo, hi, *(b for b in (breakpoints or ()) if lo < b < hi)})
    m = rule.nodes_per_panel if rule is not None else 32
    fine_edges = []
    for i, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
        levels = 20 if (i == 0 and a == 0.0) else 0
        fine_edges.append(graded_edges(a, b, levels)[:-1])
    fine_edges = np.concatenate(fine_edges + [[edges[-1]]])
    x, w = panel_nodes(fine_edges, m)
    w = w * np.power(x, measure.powers[0])
    vals = np.asarray(atom(x), dtype=float)
    mean = float(np.sum(vals * w))
    l2 = math.sqrt(float(np.sum(vals**2 * w)))
    l1 = float(np.sum(np.abs(vals) * w))
    return _report(mean, l2, l1, mu_ball(measure, ball, rule), tol_mean, tol_rel)


def _validate_callable_nd(atom, measure, ball, rule, tol_mean, tol_rel):
    m = rule.nodes_per_panel if rule is not None else 16
    panels = rule.panels if rule is not None else 64
    axes = []
    for c, p in zip(ball.center, measure.powers):
        lo, hi = max(c - ball.radius, 0.0), c + ball.radius
        x, w = panel_nodes(np.linspace(lo, hi, panels + 1), m)
        axes.append((x, w * np.power(x, p)))
    grids = np.meshgrid(*[a[0] for a in axes], indexing="ij")
    wgrid = functools.reduce(np.multiply.outer, [a[1] for a in axes])
    pts = np.stack([g.ravel() for g in grids])
    vals = np.asarray(atom(pts), dtype=float).reshape(wgrid.shape)
    inside = ball.contains(pts.T).reshape(wgrid.shape)
    if np.any(vals[~inside] != 0):
        raise StructuralError("callable atom is non-zero outside its ball")
    mean = float(np.sum(vals * wgrid))
    l2 = math.sqrt(float(np.sum(vals**2 * wgrid)))
    l1 = float(np.sum(np.abs(vals) * wgrid))
    return _report(mean, l2, l1, mu_ball(measure, ball, rule), tol_mean, tol_rel)
