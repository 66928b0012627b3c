"""Brute-force verifiers for the closed-form and scan-based solvers.

Nothing here touches Lambert-W or the optimizers: rates come straight
from the forward evaluators in :mod:`swiptrelay.protocols`, maximized by
exhaustive grids and (optionally) a golden-section polish, and roots come
from bisection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect

from . import protocols
from .channel import ChannelState, RateCoefficients, SystemParams, coefficients
from .optimizers import Protocol, ProtocolSolution
from .protocols import Method, NoCooperation


class BracketError(ValueError):
    """The arm difference does not change sign over the search interval."""


@dataclass(frozen=True)
class GridSpec:
    resolution: float = 1e-3
    refine: bool = False

    def __post_init__(self):
        if not 0.0 < self.resolution <= 0.1:
            raise ValueError(f"GridSpec.resolution must lie in (0, 0.1], got {self.resolution!r}")


def _interior(res):
    n = int(math.ceil(1.0 / res))
    pts = res * np.arange(1, n)
    return pts[pts < 1.0]


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def _polish(f, lo, hi, xtol=1e-15):
    """Golden-section maximization on ``[lo, hi]`` down to ``xtol`` (absolute).

    Kept separate from the optimizers' own refinement on purpose.
    """
    x1 = hi - _INV_PHI * (hi - lo)
    x2 = lo + _INV_PHI * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(200):
        if hi - lo <= xtol:
            break
        if f1 >= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _INV_PHI * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _INV_PHI * (hi - lo)
            f2 = f(x2)
    return (float(x1), float(f1)) if f1 >= f2 else (float(x2), float(f2))


def _ideal_grid(method, coeffs, grid):
    lam = _interior(grid.resolution)
    rate = protocols.rate_ideal(lam, method, coeffs)
    k = int(np.argmax(rate))
    best_lam, best = float(lam[k]), float(rate[k])
    if grid.refine:
        lo, hi = max(best_lam - grid.resolution, 1e-15), min(best_lam + grid.resolution, 1.0 - 1e-15)
        x, fx = _polish(lambda v: protocols.rate_ideal(v, method, coeffs), lo, hi)
        if fx > best:
            best_lam, best = x, fx
    return ProtocolSolution(Protocol.IDEAL, method, best, lambda_star=best_lam, diagnostics={"resolution": grid.resolution})


def _best_lambda(f, res):
    # rate is min(increasing, concave) in lambda, hence unimodal on (0, 1)
    lam = _interior(res)
    vals = f(lam)
    k = int(np.argmax(vals))
    x, fx = _polish(f, max(lam[k] - res, 1e-15), min(lam[k] + res, 1.0 - 1e-15))
    return (x, fx) if fx > vals[k] else (float(lam[k]), float(vals[k]))


def _ps_grid(method, channel, sys, grid):
    b = coefficients(channel, sys).b
    try:
        rho_th = protocols.ps_rho_threshold(channel)
    except NoCooperation:
        return ProtocolSolution(Protocol.DIRECT, method, b, relay_power=0.0)
    res = grid.resolution
    rho = res * np.arange(int(math.ceil(rho_th / res)) + 1)
    rho = rho[rho < rho_th]
    lam = _interior(res)
    L, R = np.meshgrid(lam, rho)
    rate = protocols.rate_ps(L, R, method, channel, sys)
    k = np.unravel_index(int(np.argmax(rate)), rate.shape)
    best_lam, best_rho, best = float(L[k]), float(R[k]), float(rate[k])
    if grid.refine:
        def profile(r):
            return _best_lambda(lambda v: protocols.rate_ps(v, r, method, channel, sys), res)

        # same flat-ridge caveat as TS: scan the lambda-maximized profile first
        prof = [profile(r)[1] for r in rho]
        start = float(rho[int(np.argmax(prof))])
        lo, hi = max(start - res, 0.0), min(start + res, math.nextafter(rho_th, 0.0))
        r, fr = _polish(lambda v: profile(v)[1], lo, hi)
        for cand in (r, start):
            lam_c, f_c = profile(cand)
            if f_c > best:
                best_lam, best_rho, best = lam_c, cand, f_c
    return ProtocolSolution(Protocol.PS, method, best, lambda_star=best_lam, rho_star=best_rho, diagnostics={"resolution": res})


def _ts_grid(method, channel, sys, grid):
    res = grid.resolution
    n = int(round(1.0 / res))
    a1 = res * np.arange(n + 1)
    a3 = res * np.arange(1, n + 1)
    A1, A3 = np.meshgrid(a1, a3)
    A2 = 1.0 - A1 - A3
    ok = A2 >= -1e-12
    A1, A3, A2 = A1[ok], A3[ok], np.maximum(A2[ok], 0.0)
    rate = protocols.rate_ts((A1, A2, A3), method, channel, sys)
    k = int(np.argmax(rate))
    best_alpha, best = (float(A1[k]), float(A2[k]), float(A3[k])), float(rate[k])
    corner = protocols.rate_ts((1.0, 0.0, 0.0), method, channel, sys)
    if corner > best:
        best_alpha, best = (1.0, 0.0, 0.0), corner
    if grid.refine:
        def profile(x3):
            # for fixed alpha3 the rate is min(increasing, decreasing) in alpha1
            span = 1.0 - x3
            f = lambda x1: protocols.rate_ts((x1, max(span - x1, 0.0), x3), method, channel, sys)
            return _polish(f, 0.0, span)

        # the simplex ridge is flat along alpha3, so locate the best
        # alpha1-maximized profile value on the whole alpha3 grid first
        prof = [profile(x3)[1] for x3 in a3]
        start = float(a3[int(np.argmax(prof))])
        lo, hi = max(start - res, 1e-12), min(start + res, 1.0)
        x3, _ = _polish(lambda v: profile(v)[1], lo, hi)
        for cand in (x3, start):
            x1, f = profile(cand)
            if f > best:
                best_alpha, best = (x1, max(1.0 - cand - x1, 0.0), cand), f
    return ProtocolSolution(Protocol.TS, method, best, alpha_star=best_alpha, diagnostics={"resolution": res})


def grid_max(protocol: Protocol, method: Method, channel: ChannelState, sys: SystemParams, grid: GridSpec) -> ProtocolSolution:
    """Exhaustive maximization of a protocol's rate.

    Ideal scans lambda, PS scans (lambda, rho in [0, rho_th)), TS scans the
    alpha simplex.  Ties go to the first (smallest-parameter) grid point.
    """
    protocol, method = Protocol(protocol), Method(method)
    if protocol is Protocol.IDEAL:
        return _ideal_grid(method, coefficients(channel, sys), grid)
    if protocol is Protocol.PS:
        return _ps_grid(method, channel, sys, grid)
    if protocol is Protocol.TS:
        return _ts_grid(method, channel, sys, grid)
    return ProtocolSolution(Protocol.DIRECT, method, coefficients(channel, sys).b, relay_power=0.0)


def ideal_grid_max(method: Method, coeffs: RateCoefficients, grid: GridSpec) -> ProtocolSolution:
    """Ideal-protocol oracle straight from the coefficients."""
    return _ideal_grid(Method(method), coeffs, grid)


def _bisect(f, lo, hi):
    flo, fhi = f(lo), f(hi)
    if not (flo < 0.0 < fhi or fhi < 0.0 < flo):
        raise BracketError(f"no sign change on [{lo!r}, {hi!r}] (F={flo!r}, {fhi!r})")
    return bisect(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)


def bisect_arm_equality(protocol: Protocol, method: Method, coeffs: RateCoefficients, alpha3: float | None = None,
                        channel: ChannelState | None = None, sys: SystemParams | None = None) -> float:
    """Root of ``first arm - second arm`` by bisection.

    Ideal and PS (pass the primed coefficients) solve in lambda over (0, 1).
    TS solves in alpha1 over ``[0, 1 - alpha3]`` at fixed ``alpha3`` and
    needs ``channel`` and ``sys``.
    """
    protocol, method = Protocol(protocol), Method(method)
    if protocol in (Protocol.IDEAL, Protocol.PS):
        if coeffs.a <= 0.0:
            raise BracketError("infeasible instance (a <= 0)")

        def F(lam):
            first, second = protocols.ideal_arms(lam, method, coeffs)
            return first - second

        tiny = 1e-15
        return _bisect(F, tiny, 1.0 - tiny)
    if protocol is Protocol.TS:
        if alpha3 is None or channel is None or sys is None:
            raise ValueError("TS bisection needs alpha3, channel and sys")
        span = 1.0 - alpha3

        def G(a1):
            first, second = protocols.ts_arms((a1, max(span - a1, 0.0), alpha3), method, channel, sys)
            return first - second

        return _bisect(G, 0.0, span)
    raise ValueError(f"no arm equality for {protocol}")


def sign_changes(protocol: Protocol, method: Method, coeffs: RateCoefficients, points: int = 10_000) -> int:
    """Number of sign changes of the arm difference over a uniform lambda grid."""
    lam = (np.arange(points) + 0.5) / points
    first, second = protocols.ideal_arms(lam, Method(method), coeffs)
    s = np.sign(first - second)
    s = s[s != 0]
    return int(np.count_nonzero(np.diff(s)))
