"""Reference systems without energy harvesting.

Both non-SWIPT baselines give the relay its own battery but share one
energy budget with the source: ``P_S_tilde + (1 - lam) * P_R_tilde <= P_S``.
The inner power split is solved by a scan with step ``epsilon * P_S``; the
budget is always spent in full, so ``P_R_tilde`` follows from ``P_S_tilde``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelState, SystemParams, capacity
from .protocols import Method, collab_capacity

_LAMBDA_CHUNK = 64


@dataclass(frozen=True)
class BaselineAllocation:
    P_S_tilde: float
    P_R_tilde: float
    lam: float
    rate: float


def rate_direct(channel: ChannelState, sys: SystemParams) -> float:
    """Direct S->D transmission at full power, no relay."""
    return capacity(sys.P_S * channel.H_SD / channel.sigma_D2)


def nonswipt_rate(lam, p_s, p_r, method: Method, channel: ChannelState):
    """Rate of a battery-powered relay with the given powers (arrays broadcast)."""
    lam, p_s, p_r = (np.asarray(v, dtype=float) for v in (lam, p_s, p_r))
    m = p_s * channel.H_SD / channel.sigma_D2
    first = lam * np.log1p(p_s * channel.H_SR / channel.sigma_R2)
    second = lam * np.log1p(m) + (1.0 - lam) * collab_capacity(method, m, p_r * channel.H_RD / channel.sigma_D2)
    return np.minimum(first, second)


def _power_grid(sys):
    n = int(round(1.0 / sys.epsilon))
    return sys.P_S * np.arange(n + 1) / n


def _check_budget(alloc: BaselineAllocation, sys: SystemParams) -> BaselineAllocation:
    used = alloc.P_S_tilde + (1.0 - alloc.lam) * alloc.P_R_tilde
    if used > sys.P_S * (1.0 + 1e-12) + 1e-9 or alloc.P_S_tilde < 0.0 or alloc.P_R_tilde < 0.0:
        raise AssertionError(f"baseline allocation {alloc} breaks the power budget {sys.P_S}")
    return alloc


def optimize_nonswipt_rc(channel: ChannelState, sys: SystemParams, method: Method) -> BaselineAllocation:
    """Rateless-coded relaying with a battery relay.

    Outer linear search over lambda (step epsilon), inner scan over the
    source power; ties go to the smallest lambda, then the smallest source
    power.
    """
    method = Method(method)
    n = int(round(1.0 / sys.epsilon))
    lams = np.arange(1, n) / n
    p_s = _power_grid(sys)
    best = (-np.inf, 0, 0)
    for start in range(0, lams.size, _LAMBDA_CHUNK):
        lam = lams[start:start + _LAMBDA_CHUNK, None]
        p_r = (sys.P_S - p_s[None, :]) / (1.0 - lam)
        rate = nonswipt_rate(lam, p_s[None, :], p_r, method, channel)
        i, j = np.unravel_index(int(np.argmax(rate)), rate.shape)
        if rate[i, j] > best[0]:
            best = (float(rate[i, j]), start + i, j)
    rate, i, j = best
    lam = float(lams[i])
    alloc = BaselineAllocation(float(p_s[j]), float((sys.P_S - p_s[j]) / (1.0 - lam)), lam, rate)
    return _check_budget(alloc, sys)


def rate_nonswipt_norc(channel: ChannelState, sys: SystemParams) -> BaselineAllocation:
    """Conventional two-slot relaying: equal phases, MRC at the destination."""
    p_s = _power_grid(sys)
    p_r = 2.0 * (sys.P_S - p_s)
    rate = nonswipt_rate(0.5, p_s, p_r, Method.EA, channel)
    j = int(np.argmax(rate))
    return _check_budget(BaselineAllocation(float(p_s[j]), float(p_r[j]), 0.5, float(rate[j])), sys)
