"""Command-line experiment runner.

Every subcommand writes ``<name>.csv`` (header row, floats with 17
significant digits) and ``<name>.manifest.json`` into the output directory
(``--out``, overridden by the ``LAGUERRE_HARDY_OUT`` environment variable).

Exit codes: 0 all checks passed, 1 a check failed, 2 usage or domain
error, 3 numerical or precision error.
"""

import argparse
import csv
import io
import json
import math
import os
import platform
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .atoms import (
    atom_coefficients,
    atom_conv,
    atom_std,
    check_atom,
    l1_divergence_scan,
    sharpness_scan,
)
from .errors import (
    CalibrationError,
    DomainError,
    EvaluationError,
    PrecisionError,
    StructuralError,
)
from .hardy import (
    LaguerreSetting,
    askey_transfer_check,
    beta_identity,
    hardy_sum,
    kanjin_sum,
    setting_params,
)
from .kernels import (
    Variant,
    bessel_ratio,
    expected_norm_exponent,
    kernel_du_values,
    kernel_du_series,
    kernel_series,
    kernel_values,
    scaling_fit,
    series_cap,
)
from .kernels import DEFAULT_ONE_MINUS_R, DEFAULT_U_GRID
from .quadrature import gram_matrix
from .specfun import (
    System,
    asymptotic_envelope,
    ell_conv,
    ell_conv_derivative,
    ell_conv_table,
    ell_std,
    ell_std_derivative,
    ell_std_table,
)

MANIFEST_SCHEMA = 1
ENV_OUT = "LAGUERRE_HARDY_OUT"

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class Outcome:
    """What a subcommand hands back to the runner."""

    def __init__(self, header, rows, checks=None, results=None, rules=None,
                 tolerances=None, message=None):
        self.header = list(header)
        self.rows = rows
        self.checks = checks or {}
        self.results = results or {}
        self.rules = rules or []
        self.tolerances = tolerances or {}
        self.message = message


# ---------------------------------------------------------------------------
# Formatting
# ---------------------------------------------------------------------------


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def render_csv(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    if obj is None or isinstance(obj, (str, int)):
        return obj
    return str(obj)


# ---------------------------------------------------------------------------
# Argument helpers
# ---------------------------------------------------------------------------


def float_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated reals, got {text!r}") from exc


def int_list(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _scalar_alpha(values):
    if len(values) != 1:
        raise DomainError("this subcommand takes a single alpha")
    return values[0]


def _basis(system):
    return (ell_conv, ell_conv_table) if system is System.CONV else (ell_std, ell_std_table)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_eval(args):
    """CSV: k, u, value."""
    system = System.parse(args.system)
    alpha = _scalar_alpha(args.alpha)
    if args.derivative:
        f = ell_conv_derivative if system is System.CONV else ell_std_derivative
    else:
        f = _basis(system)[0]
    rows = [(args.k, u, f(args.k, alpha, u)) for u in args.u]
    msg = "\n".join(_fmt(r[2]) for r in rows)
    return Outcome(["k", "u", "value"], rows, message=msg)


def cmd_ortho_check(args):
    """CSV: shell, max_deviation (shell = max(j, k))."""
    system = System.parse(args.system)
    alpha = _scalar_alpha(args.alpha)
    G, rule = gram_matrix(system, alpha, args.kmax)
    dev = np.abs(G - np.eye(args.kmax + 1))
    rows = []
    for s in range(args.kmax + 1):
        rows.append((s, float(max(dev[s, : s + 1].max(), dev[: s + 1, s].max()))))
    worst = max(r[1] for r in rows)
    return Outcome(["shell", "max_deviation"], rows,
                   checks={"orthonormal": worst < args.tol},
                   results={"max_deviation": worst},
                   rules=[rule.as_dict()], tolerances={"tol": args.tol},
                   message=f"max deviation {worst:.3e}")


def cmd_envelope_check(args):
    """CSV: k, region, max_ratio (per degree and region)."""
    system = System.parse(args.system)
    alpha = _scalar_alpha(args.alpha)
    u = np.geomspace(args.umin, args.umax, args.points)
    table = _basis(system)[1](args.kmax, alpha, u)
    rows = []
    worst = 0.0
    for k in range(1, args.kmax + 1):
        region, env = asymptotic_envelope(k, alpha, u, system, args.gamma_decay)
        ratio = np.abs(table[k]) / env
        for g in (1, 2, 3, 4):
            sel = region == g
            if np.any(sel):
                m = float(ratio[sel].max())
                worst = max(worst, m)
                rows.append((k, g, m))
    ok = math.isfinite(worst) and worst <= args.bound
    return Outcome(["k", "region", "max_ratio"], rows,
                   checks={"envelope_dominates": ok},
                   results={"max_ratio": worst},
                   tolerances={"bound": args.bound, "gamma_decay": args.gamma_decay},
                   message=f"max |phi_k|/envelope = {worst:.4f}")


def cmd_kernel_eval(args):
    """CSV: r, u, v, value, series (series only for r <= 0.9)."""
    system = System.parse(args.system)
    alpha = _scalar_alpha(args.alpha)
    variant = Variant.parse(args.variant)
    deriv = variant is Variant.DERIVATIVE
    value = float((kernel_du_values if deriv else kernel_values)(system, alpha, args.r, args.u, args.v))
    series = float("nan")
    checks = {}
    if args.r <= 0.9:
        cap = series_cap(system, alpha, args.r, derivative=deriv)
        fn = kernel_du_series if deriv else kernel_series
        series = float(fn(system, alpha, args.r, args.u, args.v, cap))
        checks["series_agrees"] = abs(value - series) <= args.tol * max(abs(value), abs(series), 1e-300)
    return Outcome(["r", "u", "v", "value", "series"], [(args.r, args.u, args.v, value, series)],
                   checks=checks, results={"value": value, "series": series},
                   tolerances={"tol": args.tol}, message=_fmt(value))


def cmd_kernel_scan(args):
    """CSV: one_minus_r, u, norm. The fitted slope goes to the manifest."""
    system = System.parse(args.system)
    alpha = _scalar_alpha(args.alpha)
    variant = Variant.parse(args.variant)
    fit = scaling_fit(system, alpha, variant, args.one_minus_r, args.u_grid, threads=args.threads)
    expected = expected_norm_exponent(system, alpha, variant)
    tol = args.tol if args.tol is not None else (0.05 if variant is Variant.VALUE else 0.1)
    checks = {}
    if expected is not None:
        checks["slope_within_tol"] = abs(fit.slope - expected) <= tol
    results = dict(fit.as_dict(), expected=expected)
    msg = f"slope {fit.slope:.4f}" + (f" (expected {expected:g} +/- {tol:g})" if expected is not None
                                       else " (no claimed exponent)")
    return Outcome(["one_minus_r", "u", "norm"], list(fit.points), checks=checks, results=results,
                   tolerances={"slope": tol}, message=msg)


def cmd_bessel_ratio(args):
    """CSV: alpha, z, ratio."""
    z = np.geomspace(args.zmin, args.zmax, args.points)
    rows, checks, results = [], {}, {}
    for a in args.alpha:
        ratio = bessel_ratio(a, z)
        rows.extend((a, zz, rr) for zz, rr in zip(z, ratio))
        m = float(np.max(ratio))
        results[f"max_ratio[{a:g}]"] = m
        checks[f"bounded[{a:g}]"] = m <= args.bound
        if a == -0.5:
            closed = 2.0 * z * np.exp(-2.0 * z) / -np.expm1(-2.0 * z)
            dev = float(np.max(np.abs(ratio - closed)))
            results["closed_form_dev"] = dev
            checks["closed_form[-0.5]"] = dev <= 1e-10 and m <= 1.0 + 1e-10
    msg = ", ".join(f"{k} = {v:.6g}" for k, v in results.items())
    return Outcome(["alpha", "z", "ratio"], rows, checks=checks, results=results,
                   tolerances={"bound": args.bound, "closed_form": 1e-10}, message=msg)


def cmd_exponent(args):
    """CSV: system, alpha, d, gamma, N, E, provenance."""
    from fractions import Fraction

    alpha = [Fraction(str(a)).limit_denominator(10**6) if args.exact else a for a in args.alpha]
    setting = LaguerreSetting(args.system, tuple(alpha))
    p = setting_params(setting)
    target = (setting.d + setting.alpha_length / 2) if setting.system is System.CONV else setting.d
    ok = p.E == target if args.exact else math.isclose(float(p.E), float(target), rel_tol=1e-15)
    info = p.as_dict()
    row = (setting.system.value, ";".join(str(a) for a in alpha), setting.d,
           info["gamma"] if info["gamma"] is not None else "", info["N"], info["E"], p.provenance)
    return Outcome(["system", "alpha", "d", "gamma", "N", "E", "provenance"], [row],
                   checks={"exponent_identity": bool(ok)}, results=info,
                   message=f"gamma={info['gamma']} N={info['N']} E={info['E']} ({p.provenance})")


def _atom_for(args):
    setting = LaguerreSetting(args.system, tuple(args.alpha))
    if setting.system is System.CONV:
        return atom_conv(setting.alpha, args.K, args.delta, args.c)
    if setting.d != 1:
        raise DomainError("standard-system atoms are one-dimensional")
    return atom_std(setting.alpha[0], args.K, args.delta, args.c)


def cmd_hardy_sum(args):
    """CSV: shell, shell_sum, partial_sum for the atom's coefficient table."""
    atom = _atom_for(args)
    table = atom_coefficients(atom, args.cap)
    E = args.E if args.E is not None else float(setting_params(atom.setting).E)
    hs = hardy_sum(table, E)
    rows = [(s, a, b) for s, (a, b) in enumerate(zip(hs.shells, hs.partial))]
    return Outcome(["shell", "shell_sum", "partial_sum"], rows,
                   results={"total": hs.total, "E": E, "quad_error": table.quad_error,
                            "atom": atom.as_dict()},
                   message=f"total {hs.total:.12g} at E={E:g}")


def cmd_atom_build(args):
    """CSV: piece, lo_1, hi_1, ..., height."""
    atom = _atom_for(args)
    d = atom.setting.d
    header = ["piece"] + [f"{s}_{i + 1}" for i in range(d) for s in ("lo", "hi")] + ["height"]
    rows = [(i, *[x for iv in box for x in iv], h) for i, (box, h) in enumerate(atom.pieces)]
    return Outcome(header, rows, results={"atom": atom.as_dict()},
                   message=f"{len(rows)} pieces, ball center {atom.ball.center}, radius {atom.ball.radius:.6g}")


def cmd_atom_check(args):
    """CSV: mean, l1_norm, l2_norm, mu_ball, slack, is_atom, all_positive."""
    atom = _atom_for(args)
    report = check_atom(atom)
    table = atom_coefficients(atom)
    factors = table.factors if table.factors is not None else [table.values]
    positive = all(bool(np.all(f[1:] > 0)) for f in factors)
    row = (report.mean, report.l1_norm, report.l2_norm, report.mu_ball, report.slack,
           report.is_atom, positive)
    return Outcome(["mean", "l1_norm", "l2_norm", "mu_ball", "slack", "is_atom", "all_positive"], [row],
                   checks={"is_atom": report.is_atom and report.slack >= 0, "all_positive": positive},
                   results={"report": report.as_dict(), "atom": atom.as_dict()},
                   message=f"is_atom={report.is_atom} slack={report.slack:.6g} all_positive={positive}")


def cmd_sharpness(args):
    """CSV: K, total."""
    setting = LaguerreSetting(args.system, tuple(args.alpha))
    fit = sharpness_scan(setting, args.epsilon, args.K_list, args.delta, threads=args.threads)
    if args.epsilon > 0:
        checks = {"slope_within_tol": abs(fit.slope - args.epsilon) <= args.tol}
    else:
        checks = {"bounded": fit.grid["spread"] <= args.spread}
    checks["all_positive"] = fit.grid["all_positive"]
    return Outcome(["K", "total"], list(fit.points), checks=checks, results=fit.as_dict(),
                   tolerances={"slope": args.tol, "spread": args.spread},
                   message=f"slope {fit.slope:.4f}, spread {fit.grid['spread']:.3f}")


def cmd_l1_divergence(args):
    """CSV: K, sum, sum_over_logK."""
    setting = LaguerreSetting(args.system, tuple(args.alpha))
    base = float(setting_params(setting).E)
    scan = l1_divergence_scan(setting, args.x, args.K_list, E=base + args.e_shift)
    if args.e_shift == 0:
        checks = {"log_band": scan.band <= args.band}
    else:
        checks = {"saturates": scan.last_octave_increase < args.saturation}
    rows = [(k, s, q) for k, s, q in zip(scan.K, scan.sums, scan.ratios)]
    return Outcome(["K", "sum", "sum_over_logK"], rows, checks=checks, results=scan.as_fit().as_dict(),
                   tolerances={"band": args.band, "saturation": args.saturation},
                   message=f"band {scan.band:.3f}, last-octave increase {scan.last_octave_increase:.4f}")


def cmd_beta_identity(args):
    """CSV: k, E, exact, asymptotic, ratio."""
    rows, checks = [], {}
    for E in args.E:
        b = beta_identity(args.k, E)
        rows.append((args.k, E, b.exact, b.asymptotic, b.ratio))
        ok = abs(b.ratio - 1.0) < args.tol
        if E == 1.0:
            m = 2 * args.k + 1
            ok &= math.isclose(b.exact, 1.0 / m, rel_tol=1e-13)
        checks[f"E={E:g}"] = ok
    return Outcome(["k", "E", "exact", "asymptotic", "ratio"], rows, checks=checks,
                   tolerances={"ratio": args.tol},
                   message=", ".join(f"E={r[1]:g}: {r[4]:.6f}" for r in rows))


_ASKEY_FUNCTIONS = {
    "indicator": lambda u: (u < 1.0).astype(float),
    "uexp": lambda u: u * np.exp(-u),
    "bump": lambda u: np.exp(-((u - 5.0) ** 2)),
}


def cmd_askey_check(args):
    """CSV: k, lhs, rhs, ratio."""
    g = _ASKEY_FUNCTIONS[args.g]
    res = askey_transfer_check(g, args.beta, args.kmax)
    rows = list(zip(res.k, res.lhs, res.rhs, res.ratio))
    m = float(np.max(res.ratio))
    return Outcome(["k", "lhs", "rhs", "ratio"], rows, checks={"ratio_bounded": m <= args.bound},
                   results={"max_ratio": m}, tolerances={"bound": args.bound},
                   message=f"max lhs/rhs = {m:.4f}")


def cmd_kanjin_sum(args):
    """CSV: u, sum_cap, sum_doubled."""
    u = np.geomspace(args.umin, args.umax, args.points)
    s1 = kanjin_sum(args.delta, u, args.cap)
    s2 = kanjin_sum(args.delta, u, 2 * args.cap)
    inc = float(np.max(s2) / np.max(s1) - 1.0)
    return Outcome(["u", "sum_cap", "sum_doubled"], list(zip(u, s1, s2)),
                   checks={"stable_under_doubling": inc < args.threshold},
                   results={"sup": float(np.max(s1)), "sup_doubled": float(np.max(s2)), "increase": inc},
                   tolerances={"threshold": args.threshold},
                   message=f"sup {np.max(s1):.6f} -> {np.max(s2):.6f} (+{100 * inc:.3f}%)")


def cmd_all(args):
    """CSV: criterion, title, passed, seconds, detail."""
    from .acceptance import run_all

    echo = None if args.quiet else (lambda line: print(line, flush=True))
    results = run_all(threads=args.threads, echo=echo)
    rows = [(r.number, r.title, r.passed, r.seconds, r.detail) for r in results]
    checks = {f"criterion_{r.number}": r.passed for r in results}
    return Outcome(["criterion", "title", "passed", "seconds", "detail"], rows, checks=checks,
                   results={f"criterion_{r.number}": r.data for r in results},
                   message=f"{sum(r.passed for r in results)}/{len(results)} criteria passed")


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _add_setting(p, vector=True, default_alpha="0"):
    p.add_argument("--system", default="conv", help="conv (convolution type) or std (standard)")
    p.add_argument("--alpha", type=float_list, default=float_list(default_alpha),
                   help="type index; comma-separated for several axes" if vector else "type index")


def _add_atom(p):
    _add_setting(p)
    p.add_argument("--K", type=int, default=64, help="atom scale")
    p.add_argument("--delta", type=float, default=None, help="breakpoint fraction (default: per setting)")
    p.add_argument("--c", type=float, default=None, help="scale constant (default: calibrated)")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="laguerre_hardy_out",
                        help=f"output directory (overridden by ${ENV_OUT})")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                        help="worker threads for scans (results do not depend on it)")
    common.add_argument("--seed", type=int, default=0, help="reserved; no command uses randomness")
    common.add_argument("--quiet", action="store_true", help="do not print the summary")

    parser = argparse.ArgumentParser(
        prog="laguerre-hardy",
        description="Numerical checks of Hardy-type inequalities for Laguerre expansions.",
        epilog="Exit codes: 0 ok, 1 check failed, 2 usage/domain error, 3 numerical error.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    def add(name, func, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text,
                           description=f"{help_text}\n\n{func.__doc__}",
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        p.set_defaults(func=func)
        return p

    p = add("eval", cmd_eval, "evaluate a Laguerre function or its derivative")
    _add_setting(p, vector=False)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--u", type=float_list, required=True, help="comma-separated points")
    p.add_argument("--derivative", action="store_true")

    p = add("ortho-check", cmd_ortho_check, "Gram matrix deviation from the identity")
    _add_setting(p, vector=False)
    p.add_argument("--kmax", type=int, default=64)
    p.add_argument("--tol", type=float, default=1e-8)

    p = add("envelope-check", cmd_envelope_check, "pointwise envelope domination")
    _add_setting(p, vector=False)
    p.add_argument("--kmax", type=int, default=1000)
    p.add_argument("--umin", type=float, default=1e-3)
    p.add_argument("--umax", type=float, default=1e2)
    p.add_argument("--points", type=int, default=400)
    p.add_argument("--gamma-decay", type=float, default=None,
                   help="decay rate past the turning region (default: per system)")
    p.add_argument("--bound", type=float, default=4.0, help="allowed constant C")

    p = add("kernel-eval", cmd_kernel_eval, "evaluate R_r(u, v) or its u-derivative")
    _add_setting(p, vector=False)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--u", type=float, required=True)
    p.add_argument("--v", type=float, required=True)
    p.add_argument("--variant", default="value", help="value or derivative")
    p.add_argument("--tol", type=float, default=1e-8)

    p = add("kernel-scan", cmd_kernel_scan, "fit the (1-r) scaling of kernel norms")
    _add_setting(p, vector=False)
    p.add_argument("--variant", default="value", help="value or derivative")
    p.add_argument("--one-minus-r", type=float_list, default=list(DEFAULT_ONE_MINUS_R))
    p.add_argument("--u-grid", type=float_list, default=list(DEFAULT_U_GRID))
    p.add_argument("--tol", type=float, default=None, help="slope tolerance (default 0.05 / 0.1)")

    p = add("bessel-ratio", cmd_bessel_ratio, "ratio |I_{a+1} - I_a| z / I_{a+1} on a z grid")
    p.add_argument("--alpha", type=float_list, default=[-0.5, 0.0, 1.0, 3.0])
    p.add_argument("--zmin", type=float, default=1e-4)
    p.add_argument("--zmax", type=float, default=1e4)
    p.add_argument("--points", type=int, default=2001)
    p.add_argument("--bound", type=float, default=5.0)

    p = add("exponent", cmd_exponent, "kernel and ball exponents and the admissible exponent")
    _add_setting(p)
    p.add_argument("--exact", action=argparse.BooleanOptionalAction, default=True,
                   help="rational arithmetic (default on)")

    p = add("hardy-sum", cmd_hardy_sum, "Hardy sum of an atom's coefficients, by shells")
    _add_atom(p)
    p.add_argument("--cap", type=int, default=None, help="coefficient cap (default K)")
    p.add_argument("--E", type=float, default=None, help="exponent (default admissible)")

    p = add("atom-build", cmd_atom_build, "construct a counterexample atom")
    _add_atom(p)

    p = add("atom-check", cmd_atom_check, "validate an atom and its coefficient signs")
    _add_atom(p)

    p = add("sharpness", cmd_sharpness, "K^eps growth of reduced-exponent Hardy sums")
    _add_setting(p)
    p.add_argument("--epsilon", type=float, default=0.25)
    p.add_argument("--K-list", type=int_list, default=[2 ** j for j in range(4, 13)])
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--tol", type=float, default=0.05)
    p.add_argument("--spread", type=float, default=3.0, help="max/min totals allowed at eps = 0")

    p = add("l1-divergence", cmd_l1_divergence, "log K growth of point-evaluation sums")
    _add_setting(p)
    p.add_argument("--x", type=float_list, default=[1e-4])
    p.add_argument("--K-list", type=int_list, default=[2 ** j for j in range(4, 17)])
    p.add_argument("--e-shift", type=float, default=0.0, help="added to the admissible exponent")
    p.add_argument("--band", type=float, default=2.0)
    p.add_argument("--saturation", type=float, default=0.05)

    p = add("beta-identity", cmd_beta_identity, "B(2k+1, E) against Gamma(E)(2k+1)^-E")
    p.add_argument("--k", type=int, default=100)
    p.add_argument("--E", type=float_list, default=[0.5, 1.0, 1.75, 3.0])
    p.add_argument("--tol", type=float, default=0.02)

    p = add("askey-check", cmd_askey_check, "coefficient-transfer inequality on a sample function")
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--kmax", type=int, default=64)
    p.add_argument("--g", choices=sorted(_ASKEY_FUNCTIONS), default="indicator")
    p.add_argument("--bound", type=float, default=4.0)

    p = add("kanjin-sum", cmd_kanjin_sum, "stability of sum_k |L_k^delta(u)|/(k+1) under cap doubling")
    p.add_argument("--delta", type=float, default=2.0)
    p.add_argument("--cap", type=int, default=10_000)
    p.add_argument("--umin", type=float, default=1e-4)
    p.add_argument("--umax", type=float, default=1e2)
    p.add_argument("--points", type=int, default=601)
    p.add_argument("--threshold", type=float, default=0.01)

    add("all", cmd_all, "run the full acceptance suite")
    return parser


# ---------------------------------------------------------------------------
# Runner
# ---------------------------------------------------------------------------


def _params(args):
    skip = {"func", "out", "quiet", "command"}
    return {k: _jsonable(v) for k, v in vars(args).items() if k not in skip}


def _write(out_dir, name, outcome, manifest):
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / f"{name}.csv").write_text(render_csv(outcome.header, outcome.rows), encoding="utf-8")
    (out_dir / f"{name}.manifest.json").write_text(
        json.dumps(_jsonable(manifest), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    out_dir = Path(os.environ.get(ENV_OUT) or args.out)
    started = datetime.now(timezone.utc).isoformat()
    t0 = time.perf_counter()
    error = None
    try:
        outcome = args.func(args)
        code = EXIT_OK if all(outcome.checks.values()) else EXIT_CHECK
    except (DomainError, StructuralError) as exc:
        error, code = exc, EXIT_USAGE
    except (PrecisionError, EvaluationError, CalibrationError, ArithmeticError) as exc:
        error, code = exc, EXIT_NUMERIC
    if error is not None:
        print(f"error: {type(error).__name__}: {error}", file=sys.stderr)
        return code
    manifest = {
        "schema": MANIFEST_SCHEMA,
        "command_line": ["laguerre-hardy", *argv],
        "subcommand": args.command,
        "params": _params(args),
        "tolerances": outcome.tolerances,
        "rules": outcome.rules,
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "started_utc": started,
        "wall_clock_s": time.perf_counter() - t0,
        "checks": outcome.checks,
        "passed": code == EXIT_OK,
        "results": outcome.results,
        "csv": f"{args.command}.csv",
    }
    _write(out_dir, args.command, outcome, manifest)
    if not args.quiet:
        if outcome.message:
            print(outcome.message)
        for name, ok in outcome.checks.items():
            print(f"{'PASS' if ok else 'FAIL'} {name}")
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
