"""Real-valued Lambert-W on its two real branches.

``lambert_w`` inverts ``w * exp(w) = x`` on the principal branch (w >= -1)
or the lower branch (w <= -1).  Arguments may be scalars or numpy arrays;
scalars come back as ``float``.

Two log-argument variants cover arguments that cannot be represented as
doubles: ``lambert_w0_of_exp`` takes ``ln(x)`` for x > 0 and
``lambert_wm1_of_negexp`` takes ``ln(-x)`` for x < 0.
"""

from __future__ import annotations

import enum

import numpy as np

INV_E = float(np.exp(-1.0))

_CLAMP_SLACK = 1e-15
_MAX_ITER = 50
_STEP_TOL = 1e-13
# above this the principal branch is solved in log form
_LOG_FORM_X = 1e3
# below this ln(-x) the lower branch is solved in log form
_LOG_FORM_LNX = -40.0


class WBranch(enum.Enum):
    PRINCIPAL = 0
    LOWER = -1


def _prepare(x):
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 0
    return np.atleast_1d(arr).copy(), scalar


def _finish(w, scalar):
    return float(w[0]) if scalar else w


def _branch_point_series(x, sign):
    # expansion in p = sign * sqrt(2(ex + 1)) about w = -1
    p = sign * np.sqrt(np.maximum(2.0 * (np.e * x + 1.0), 0.0))
    return -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3


def _halley(w, x):
    """Halley iteration on ``w e^w - x``; elements already at w = -1 are kept."""
    active = w != -1.0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for _ in range(_MAX_ITER):
            ew = np.exp(w)
            f = w * ew - x
            wp1 = w + 1.0
            denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
            step = np.where(active & (denom != 0.0) & np.isfinite(denom), f / denom, 0.0)
            w = w - step
            if np.all(np.abs(step) <= _STEP_TOL * np.maximum(1.0, np.abs(w))):
                break
    return w


def _w0_log_form(ln_x):
    # w + ln(w) = ln_x for ln_x >= 1 (w >= 1)
    lx = np.log(ln_x)
    w = ln_x - lx + lx / ln_x
    for _ in range(_MAX_ITER):
        g = w + np.log(w) - ln_x
        g1 = 1.0 + 1.0 / w
        g2 = -1.0 / (w * w)
        step = g / (g1 - g * g2 / (2.0 * g1))
        w = np.maximum(w - step, 0.5)
        if np.all(np.abs(step) <= _STEP_TOL * np.abs(w)):
            break
    return w


def _wm1_log_form(ln_negx):
    # u - ln(u) = -ln_negx with u = -w > 1
    target = -ln_negx
    u = target + np.log(target)
    for _ in range(_MAX_ITER):
        g = u - np.log(u) - target
        g1 = 1.0 - 1.0 / u
        g2 = 1.0 / (u * u)
        step = g / (g1 - g * g2 / (2.0 * g1))
        u = np.maximum(u - step, 1.0)
        if np.all(np.abs(step) <= _STEP_TOL * u):
            break
    return -u


def lambert_w(branch: WBranch, x):
    """Real Lambert-W ``W_k(x)`` for ``k`` in {0, -1}.

    Parameters
    ----------
    branch : WBranch
        ``PRINCIPAL`` (defined for x >= -1/e) or ``LOWER`` (-1/e <= x < 0).
    x : float or array_like

    Returns
    -------
    float or ndarray
        ``w`` with ``w * exp(w) == x``; principal values are >= -1 and
        lower-branch values are <= -1.

    Raises
    ------
    ValueError
        If any ``x`` lies below -1/e by more than 1e-15, is NaN, or is
        non-negative on the lower branch.
    """
    branch = WBranch(branch)
    x, scalar = _prepare(x)
    if np.any(np.isnan(x)):
        raise ValueError("lambert_w: NaN argument")
    if np.any(x < -INV_E - _CLAMP_SLACK):
        raise ValueError(f"lambert_w: argument below -1/e (min {x.min()!r})")
    x = np.maximum(x, -INV_E)
    at_branch_point = x == -INV_E

    if branch is WBranch.PRINCIPAL:
        if np.any(np.isinf(x)):
            raise ValueError("lambert_w: infinite argument")
        w = np.empty_like(x)
        big = x > _LOG_FORM_X
        if np.any(big):
            w[big] = _w0_log_form(np.log(x[big]))
        small = ~big
        if np.any(small):
            xs = x[small]
            near = xs < -0.3
            l1 = np.log1p(np.where(near, 0.0, xs))
            guess = np.where(near, _branch_point_series(xs, 1.0), l1 * (1.0 - np.log1p(l1) / (2.0 + l1)))
            guess[xs == 0.0] = 0.0
            w[small] = _halley(guess, xs)
        w = np.maximum(w, -1.0)
    else:
        if np.any(x >= 0.0):
            raise ValueError("lambert_w: lower branch needs x < 0")
        near = x < -0.25
        with np.errstate(divide="ignore", invalid="ignore"):
            l1 = np.log(-x)
            l2 = np.log(-l1)
            asym = l1 - l2 + l2 / l1
        guess = np.where(near, _branch_point_series(x, -1.0), asym)
        tiny = np.log(-x) < _LOG_FORM_LNX
        w = _halley(np.where(tiny, -2.0, guess), x)
        if np.any(tiny):
            w[tiny] = _wm1_log_form(np.log(-x[tiny]))
        w = np.minimum(w, -1.0)

    w[at_branch_point] = -1.0
    return _finish(w, scalar)


def lambert_w0_of_exp(ln_x):
    """Principal ``W(exp(ln_x))`` without forming ``exp(ln_x)``.

    Needed where the argument is a huge exponential (for instance
    ``e^{1e4}``) whose logarithm is perfectly ordinary.
    """
    ln_x, scalar = _prepare(ln_x)
    if not np.all(np.isfinite(ln_x)):
        raise ValueError("lambert_w0_of_exp: non-finite log-argument")
    w = np.empty_like(ln_x)
    big = ln_x >= 1.0
    if np.any(big):
        w[big] = _w0_log_form(ln_x[big])
    if np.any(~big):
        w[~big] = lambert_w(WBranch.PRINCIPAL, np.exp(ln_x[~big]))
    return _finish(w, scalar)


def lambert_wm1_of_negexp(ln_negx):
    """Lower-branch ``W(-exp(ln_negx))`` for ``ln_negx <= -1``.

    Tiny negative arguments such as ``-e^{-5000}`` underflow as doubles but
    have a lower-branch value near ``ln_negx - ln(-ln_negx)``.
    """
    ln_negx, scalar = _prepare(ln_negx)
    if not np.all(np.isfinite(ln_negx)):
        raise ValueError("lambert_wm1_of_negexp: invalid log-argument")
    if np.any(ln_negx > -1.0 + _CLAMP_SLACK * np.e):
        raise ValueError("lambert_wm1_of_negexp: argument below -1/e")
    ln_negx = np.minimum(ln_negx, -1.0)
    w = np.empty_like(ln_negx)
    tiny = ln_negx < _LOG_FORM_LNX
    if np.any(tiny):
        w[tiny] = _wm1_log_form(ln_negx[tiny])
    if np.any(~tiny):
        w[~tiny] = lambert_w(WBranch.LOWER, -np.exp(ln_negx[~tiny]))
    return _finish(w, scalar)
