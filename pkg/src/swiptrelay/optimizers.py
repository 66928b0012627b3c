"""Rate-maximizing solvers for the ideal, PS and TS relaying protocols.

Ideal
    Closed form.  With ``t = lam/(1-lam)`` the arm equality and the
    stationary point of the second arm both reduce to Lambert-W equations;
    the optimum is the larger of the two roots (lower branch for the
    crossing, principal branch for the stationary point).
PS
    For a fixed splitting ratio the problem is the ideal one with
    ``a -> a'(rho)`` and ``c -> rho*c``, so each rho on an epsilon-grid over
    ``[0, rho_th)`` is solved in closed form; the best grid point is then
    sharpened by a golden-section pass over its neighbouring cells.
TS
    At the optimum both arms are equal, which pins ``alpha1`` as a
    principal-branch Lambert-W function of ``alpha3``.  The remaining
    one-dimensional objective ``alpha1(alpha3) * C_SR`` is scanned over
    ``(0, 1]`` with step epsilon and sharpened the same way.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from . import protocols
from .channel import ChannelState, RateCoefficients, SystemParams, coefficients
from .protocols import IdealParams, Method, NoCooperation, PSParams, TSParams
from .specfun import WBranch, lambert_w, lambert_w0_of_exp, lambert_wm1_of_negexp

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_LAM_MAX = math.nextafter(1.0, 0.0)


class Protocol(enum.Enum):
    IDEAL = "Ideal"
    PS = "PS"
    TS = "TS"
    DIRECT = "DirectLink"


class NumericFailure(ArithmeticError):
    """A closed-form argument left the Lambert-W domain beyond round-off."""


class InfeasibleAlpha(ValueError):
    """``alpha1(alpha3)`` violates ``alpha1 >= 0`` or ``alpha1 + alpha3 <= 1``."""


class EmptyScan(RuntimeError):
    """No feasible grid point in a linear search."""


@dataclass(frozen=True)
class ProtocolSolution:
    protocol: Protocol
    method: Method
    rate: float
    lambda_star: Optional[float] = None
    rho_star: Optional[float] = None
    alpha_star: Optional[tuple] = None
    relay_power: Optional[float] = None
    diagnostics: dict = field(default_factory=dict, compare=False)


def _direct(method, coeffs_b, reason, **diag):
    return ProtocolSolution(
        Protocol.DIRECT, Method(method), float(coeffs_b), relay_power=0.0, diagnostics={"reason": reason, **diag}
    )


# ---------------------------------------------------------------------------
# ideal protocol


def _lambda_candidates(a, b, c, m, method):
    """Crossing point and stationary point (as time fractions) for a, c > 0."""
    a, b, c, m = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, b, c, m)))
    shift = 1.0 if Method(method) is Method.IA else 1.0 + m
    if Method(method) is Method.IA:
        ln_neg_arg = np.log(a / c) - b - a / c
    else:
        ln_neg_arg = np.log(a / c) - a * (1.0 + m) / c
    if np.any(ln_neg_arg > -1.0 + 1e-12):
        raise NumericFailure("crossing-point Lambert-W argument below -1/e")
    z = lambert_wm1_of_negexp(np.minimum(ln_neg_arg, -1.0))
    t1 = -z / a - shift / c
    lam1 = np.clip(t1, 0.0, None) / (1.0 + np.clip(t1, 0.0, None))

    # stationary point: s = shift * e^(u+1) with u = W0((c/shift - 1)/e)
    u = lambert_w(WBranch.PRINCIPAL, (c / shift - 1.0) / np.e)
    g = np.expm1(u + 1.0)
    lam2 = g / (g + c / shift)
    return lam1, lam2


def ideal_lambda_star(a, b, c, m, method: Method):
    """Vectorized optimal time fraction.

    Returns ``(lam_star, lam1, lam2, clamped)``; entries with ``c == 0``
    take the smallest maximizer ``b/(a+b)`` and carry NaN candidates.
    Entries with ``a <= 0`` are NaN (no cooperation).
    """
    a, b, c, m = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, b, c, m)))
    lam = np.full(a.shape, np.nan)
    lam1 = np.full(a.shape, np.nan)
    lam2 = np.full(a.shape, np.nan)
    coop = a > 0.0
    flat = coop & (c == 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        lam[flat] = b[flat] / (a[flat] + b[flat])
    curved = coop & (c > 0.0)
    if np.any(curved):
        l1, l2 = _lambda_candidates(a[curved], b[curved], c[curved], m[curved], method)
        lam1[curved], lam2[curved] = l1, l2
        lam[curved] = np.maximum(l1, l2)
    outside = coop & ~((lam > 0.0) & (lam < 1.0))
    clamped = curved & outside
    # b = 0 with c = 0 puts the smallest maximizer at lam = 0 itself
    lam = np.where(outside, np.clip(lam, np.finfo(float).tiny, _LAM_MAX), lam)
    return lam, lam1, lam2, clamped


def crossing_residual(lam, method: Method, coeffs: RateCoefficients) -> float:
    first, second = protocols.ideal_arms(lam, method, coeffs)
    return float(abs(first - second))


def optimize_ideal(coeffs: RateCoefficients, method: Method) -> ProtocolSolution:
    """Optimal broadcast fraction for the ideal receiver.

    ``relay_power`` is left ``None`` because it needs the raw channel;
    :func:`solve` fills it in.
    """
    method = Method(method)
    if coeffs.a <= 0.0:
        return _direct(method, coeffs.b, "S->R capacity does not exceed S->D capacity")
    if coeffs.c == 0.0 and coeffs.b == 0.0:
        return _direct(method, 0.0, "no direct link and no harvested power")
    lam, lam1, lam2, clamped = (float(v) for v in ideal_lambda_star(coeffs.a, coeffs.b, coeffs.c, coeffs.m, method))
    diag = {"evaluations": 1, "lambda1": lam1, "lambda2": lam2, "lambda2_clamped": bool(clamped)}
    if coeffs.c > 0.0 and 0.0 < lam1 < 1.0:
        diag["crossing_residual"] = crossing_residual(lam1, method, coeffs)
    rate = protocols.rate_ideal(lam, method, coeffs)
    return ProtocolSolution(Protocol.IDEAL, method, rate, lambda_star=lam, diagnostics=diag)


# ---------------------------------------------------------------------------
# golden-section refinement shared by the PS and TS scans


def _golden_max(f, lo, hi, tol=1e-10):
    """Maximize a unimodal ``f`` on ``[lo, hi]``; returns (x, f(x), evaluations)."""
    c = hi - _GOLDEN * (hi - lo)
    d = lo + _GOLDEN * (hi - lo)
    fc, fd = f(c), f(d)
    n = 2
    while hi - lo > tol:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - _GOLDEN * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _GOLDEN * (hi - lo)
            fd = f(d)
        n += 1
    return (c, fc, n) if fc >= fd else (d, fd, n)


# ---------------------------------------------------------------------------
# PS protocol


def _ps_profile(rho, method, channel, sys):
    """Best rate (and its lambda) for each splitting ratio in ``rho``."""
    co = protocols.ps_coefficients(rho, channel, sys)
    lam, _, _, _ = ideal_lambda_star(co.a, co.b, co.c, co.m, method)
    rate = np.full(np.shape(lam), -np.inf)
    ok = np.isfinite(lam)
    if np.any(ok):
        sub = RateCoefficients(
            np.broadcast_to(co.a, lam.shape)[ok], co.b, np.broadcast_to(co.c, lam.shape)[ok], co.m
        )
        rate[ok] = protocols.rate_ideal(lam[ok], method, sub)
    return lam, rate


def optimize_ps_fixed_rho(channel: ChannelState, sys: SystemParams, method: Method, rho: float) -> ProtocolSolution:
    """Best time fraction for a given splitting ratio."""
    method = Method(method)
    b = coefficients(channel, sys).b
    try:
        rho_th = protocols.ps_rho_threshold(channel)
    except NoCooperation as exc:
        return _direct(method, b, str(exc))
    if rho >= rho_th:
        return _direct(method, b, f"rho={rho!r} is not below the threshold {rho_th!r}")
    lam, _ = _ps_profile(np.array([rho]), method, channel, sys)
    return _ps_solution(method, float(lam[0]), float(rho), channel, sys, {"rho_threshold": rho_th, "fixed": True})


def _ps_solution(method, lam, rho, channel, sys, diag):
    rate = protocols.rate_ps(lam, rho, method, channel, sys)
    p_r = protocols.relay_power(PSParams(lam, rho), channel, sys)
    return ProtocolSolution(Protocol.PS, method, rate, lambda_star=lam, rho_star=rho, relay_power=p_r, diagnostics=diag)


def optimize_ps(channel: ChannelState, sys: SystemParams, method: Method, refine: bool = True) -> ProtocolSolution:
    """Two-step PS solver: closed-form lambda per rho, linear search on rho."""
    method = Method(method)
    b = coefficients(channel, sys).b
    try:
        rho_th = protocols.ps_rho_threshold(channel)
    except NoCooperation as exc:
        return _direct(method, b, str(exc))
    eps = sys.epsilon
    n = math.ceil(rho_th / eps)
    grid = eps * np.arange(n)
    grid = grid[grid < rho_th]
    lam, rate = _ps_profile(grid, method, channel, sys)
    if not np.any(np.isfinite(rate)):
        return _direct(method, b, "no feasible splitting ratio on the grid")
    k = int(np.argmax(rate))
    best_rho, best_lam, best_rate = float(grid[k]), float(lam[k]), float(rate[k])
    diag = {"rho_threshold": rho_th, "grid_size": n, "scan_evals": int(grid.size), "refine_evals": 0}

    if refine:
        lo = max(0.0, best_rho - eps)
        hi = min(np.nextafter(rho_th, 0.0), best_rho + eps)

        def profile(r):
            return float(_ps_profile(np.array([r]), method, channel, sys)[1][0])

        r, fr, evals = _golden_max(profile, lo, hi, tol=1e-9)
        diag["refine_evals"] = evals
        if fr > best_rate:
            best_rho, best_rate = float(r), fr
            best_lam = float(_ps_profile(np.array([r]), method, channel, sys)[0][0])
    return _ps_solution(method, best_lam, best_rho, channel, sys, diag)


# ---------------------------------------------------------------------------
# TS protocol


def _alpha1_curve(alpha3, method, coeffs):
    """``alpha1`` that equalizes both arms at each ``alpha3`` (no feasibility check)."""
    alpha3 = np.asarray(alpha3, dtype=float)
    C, b, c, m = coeffs.c_sr, coeffs.b, coeffs.c, coeffs.m
    ratio = C / c
    rest = (1.0 - alpha3) / alpha3
    if Method(method) is Method.IA:
        ln_arg = math.log(ratio) - b / alpha3 + C * rest + ratio
        offset = alpha3 / c
    else:
        ln_arg = math.log(ratio) - b * rest + C * rest + ratio * (1.0 + m)
        offset = (1.0 + m) * alpha3 / c
    w = lambert_w0_of_exp(ln_arg)
    return -alpha3 * w / C + 1.0 - alpha3 + offset


def ts_alpha1_of_alpha3(alpha3: float, method: Method, coeffs: RateCoefficients) -> float:
    """Listening fraction that makes both TS arms equal for a given
    collaboration fraction.

    Raises :class:`InfeasibleAlpha` when the result leaves the simplex.
    """
    if not 0.0 < alpha3 <= 1.0:
        raise ValueError(f"alpha3 must lie in (0, 1], got {alpha3!r}")
    if not coeffs.c > 0.0:
        raise ValueError("alpha1(alpha3) needs c > 0")
    alpha1 = float(_alpha1_curve(alpha3, method, coeffs))
    if alpha1 < 0.0 or alpha1 + alpha3 > 1.0:
        raise InfeasibleAlpha(f"alpha1={alpha1!r} infeasible at alpha3={alpha3!r}")
    return alpha1


def _ts_objective(alpha3, method, coeffs):
    a1 = _alpha1_curve(alpha3, method, coeffs)
    feasible = (a1 >= 0.0) & (a1 + alpha3 <= 1.0 + 1e-12)
    return np.where(feasible, a1 * coeffs.c_sr, -np.inf), a1


def _ts_solution(method, alpha, channel, sys, diag):
    a1, a2, a3 = alpha
    rate = protocols.rate_ts(alpha, method, channel, sys)
    first, second = protocols.ts_arms(alpha, method, channel, sys)
    diag = {**diag, "arm_residual": abs(first - second)}
    p_r = protocols.relay_power(TSParams(a1, a2, a3), channel, sys)
    return ProtocolSolution(Protocol.TS, method, rate, alpha_star=(a1, a2, a3), relay_power=p_r, diagnostics=diag)


def _close_simplex(a1, a3):
    a1 = min(max(a1, 0.0), 1.0 - a3)
    return (a1, max(0.0, 1.0 - a1 - a3), a3)


def optimize_ts(channel: ChannelState, sys: SystemParams, method: Method, refine: bool = True) -> ProtocolSolution:
    """Linear search over the collaboration fraction on the equal-arm curve."""
    method = Method(method)
    co = coefficients(channel, sys)
    if co.a <= 0.0:
        return _direct(method, co.b, "S->R capacity does not exceed S->D capacity")
    if co.c == 0.0:
        return _direct(method, co.b, "no power reaches D through the relay")
    eps = sys.epsilon
    n = int(round(1.0 / eps))
    grid = eps * np.arange(1, n + 1)
    grid[-1] = min(grid[-1], 1.0)
    obj, a1 = _ts_objective(grid, method, co)
    if not np.any(np.isfinite(obj)):
        raise EmptyScan("no feasible alpha3 on the TS search grid")
    k = int(np.argmax(obj))
    best_a3, best_a1, best_obj = float(grid[k]), float(a1[k]), float(obj[k])
    diag = {"grid_size": n, "scan_evals": int(grid.size), "refine_evals": 0}

    if refine:
        lo = max(best_a3 - eps, 1e-12)
        hi = min(best_a3 + eps, 1.0)

        def objective(x):
            return float(_ts_objective(np.array([x]), method, co)[0][0])

        x, fx, evals = _golden_max(objective, lo, hi, tol=1e-10)
        diag["refine_evals"] = evals
        if fx > best_obj:
            best_a3, best_obj = float(x), fx
            best_a1 = float(_alpha1_curve(best_a3, method, co))
    return _ts_solution(method, _close_simplex(best_a1, best_a3), channel, sys, diag)


def optimize_ts_fixed_alpha2(channel: ChannelState, sys: SystemParams, method: Method, alpha2: float) -> ProtocolSolution:
    """Best split of the remaining time when the harvesting fraction is fixed."""
    method = Method(method)
    if not 0.0 <= alpha2 < 1.0:
        raise ValueError(f"alpha2 must lie in [0, 1), got {alpha2!r}")
    co = coefficients(channel, sys)
    if co.a <= 0.0:
        return _direct(method, co.b, "S->R capacity does not exceed S->D capacity")
    span = 1.0 - alpha2

    def gap(a3):
        first, second = protocols.ts_arms((span - a3, alpha2, a3), method, channel, sys)
        return first - second

    lo = min(1e-12, span / 2)
    if gap(lo) <= 0.0:
        # the relay link limits the rate for any collaboration time
        alpha = (span - lo, alpha2, lo)
    else:
        a3 = brentq(gap, lo, span, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
        alpha = (span - a3, alpha2, a3)
    return _ts_solution(method, alpha, channel, sys, {"fixed": True})


# ---------------------------------------------------------------------------


def solve(protocol: Protocol, method: Method, channel: ChannelState, sys: SystemParams) -> ProtocolSolution:
    """Dispatch to the optimizer for ``protocol`` with relay power filled in."""
    protocol, method = Protocol(protocol), Method(method)
    if protocol is Protocol.IDEAL:
        sol = optimize_ideal(coefficients(channel, sys), method)
        if sol.protocol is Protocol.IDEAL:
            sol = replace(sol, relay_power=protocols.relay_power(IdealParams(sol.lambda_star), channel, sys))
        return sol
    if protocol is Protocol.PS:
        return optimize_ps(channel, sys, method)
    if protocol is Protocol.TS:
        return optimize_ts(channel, sys, method)
    return _direct(method, coefficients(channel, sys).b, "requested")


def verify_solution(sol: ProtocolSolution, channel: ChannelState, sys: SystemParams) -> float:
    """Re-evaluate ``sol`` with the forward evaluator; returns the rate."""
    if sol.protocol is Protocol.IDEAL:
        return protocols.rate_ideal(sol.lambda_star, sol.method, coefficients(channel, sys))
    if sol.protocol is Protocol.PS:
        return protocols.rate_ps(sol.lambda_star, sol.rho_star, sol.method, channel, sys)
    if sol.protocol is Protocol.TS:
        return protocols.rate_ts(sol.alpha_star, sol.method, channel, sys)
    return coefficients(channel, sys).b
