"""Forward evaluators: relay power and end-to-end rate for fixed parameters.

Every rate is ``min(first arm, second arm)`` where the first arm is the
information the relay collects before switching to collaboration and the
second is what the destination collects over the whole frame.  The frame
length is normalized to one, so rates are nats per unit time.

Evaluators accept numpy arrays for the decision variables so that oracles
and scans can evaluate whole grids at once.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .channel import ChannelState, RateCoefficients, SystemParams, capacity, coefficients

SIMPLEX_TOL = 1e-9


class Method(enum.Enum):
    """Destination receiving strategy."""

    IA = "IA"  # mutual-information accumulation, separate codebooks
    EA = "EA"  # energy accumulation (MRC)


class NoCooperation(Exception):
    """The relay can never decode before the destination."""


@dataclass(frozen=True)
class IdealParams:
    lam: float


@dataclass(frozen=True)
class PSParams:
    lam: float
    rho: float


@dataclass(frozen=True)
class TSParams:
    alpha1: float
    alpha2: float
    alpha3: float

    @property
    def alpha(self):
        return (self.alpha1, self.alpha2, self.alpha3)


def _check_lambda(lam):
    lam = np.asarray(lam, dtype=float)
    if np.any(~(lam > 0.0)) or np.any(~(lam < 1.0)):
        raise ValueError("time fraction lambda must lie strictly inside (0, 1)")
    return lam


def _check_rho(rho):
    rho = np.asarray(rho, dtype=float)
    if np.any(~(rho >= 0.0)) or np.any(~(rho <= 1.0)):
        raise ValueError("power-splitting ratio rho must lie in [0, 1]")
    return rho


def _check_simplex(alpha):
    a1, a2, a3 = (np.asarray(v, dtype=float) for v in alpha)
    if np.any(a1 < 0) or np.any(a2 < 0) or np.any(a3 < 0):
        raise ValueError("time fractions alpha must be non-negative")
    if np.any(np.abs(a1 + a2 + a3 - 1.0) > SIMPLEX_TOL):
        raise ValueError("time fractions alpha must sum to one")
    if np.any((a3 == 0.0) & (a2 > 0.0)):
        raise ValueError("alpha3 = 0 with alpha2 > 0 leaves the harvested energy unused (undefined relay power)")
    return a1, a2, a3


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def collab_capacity(method: Method, m, relay_snr):
    """Collaboration-phase capacity J given the source SNR ``m`` at the
    destination and the relay's SNR at the destination."""
    if Method(method) is Method.IA:
        return np.log1p(m) + np.log1p(relay_snr)
    return np.log1p(m + relay_snr)


def relay_power(params, channel: ChannelState, sys: SystemParams) -> float:
    """Transmit power available at the relay during collaboration."""
    harvest = sys.eta * channel.H_SR * sys.P_S
    if isinstance(params, IdealParams):
        if params.lam == 0.0:
            raise ZeroDivisionError("lambda = 0 leaves no broadcast phase")
        return harvest / (1.0 / params.lam - 1.0)
    if isinstance(params, PSParams):
        if params.lam == 0.0:
            raise ZeroDivisionError("lambda = 0 leaves no broadcast phase")
        return params.rho * harvest / (1.0 / params.lam - 1.0)
    if isinstance(params, TSParams):
        if params.alpha3 == 0.0:
            if params.alpha2 == 0.0:
                return 0.0
            raise ZeroDivisionError("alpha3 = 0 with energy harvested")
        return params.alpha2 * harvest / params.alpha3
    raise TypeError(f"unknown protocol parameters {params!r}")


def ideal_arms(lam, method: Method, coeffs: RateCoefficients):
    """The two arms of the ideal-protocol rate, in terms of (a, b, c, m)."""
    lam = _check_lambda(lam)
    t = lam / (1.0 - lam)
    j = collab_capacity(method, coeffs.m, coeffs.c * t)
    return _scalar(lam * (coeffs.a + coeffs.b)), _scalar(lam * coeffs.b + (1.0 - lam) * j)


def rate_ideal(lam, method: Method, coeffs: RateCoefficients):
    first, second = ideal_arms(lam, method, coeffs)
    return _scalar(np.minimum(first, second))


def c_sr_ps(rho, channel: ChannelState, sys: SystemParams):
    """S->R capacity when a fraction ``rho`` of the received power is harvested."""
    rho = _check_rho(rho)
    keep = 1.0 - rho
    return _scalar(capacity(keep * sys.P_S * channel.H_SR / (keep * channel.sigma_a2 + channel.sigma_b2)))


def ps_coefficients(rho, channel: ChannelState, sys: SystemParams) -> RateCoefficients:
    """Coefficients with ``a`` and ``c`` replaced by their PS counterparts
    ``a' = C_SR^PS(rho) - C_SD`` and ``c' = rho * c``."""
    base = coefficients(channel, sys)
    rho = _check_rho(rho)
    return RateCoefficients(
        a=_scalar(c_sr_ps(rho, channel, sys) - base.b), b=base.b, c=_scalar(rho * base.c), m=base.m
    )


def ps_arms(lam, rho, method: Method, channel: ChannelState, sys: SystemParams):
    lam = _check_lambda(lam)
    coeffs = ps_coefficients(rho, channel, sys)
    return ideal_arms(lam, method, coeffs)


def rate_ps(lam, rho, method: Method, channel: ChannelState, sys: SystemParams):
    first, second = ps_arms(lam, rho, method, channel, sys)
    return _scalar(np.minimum(first, second))


def ts_arms(alpha, method: Method, channel: ChannelState, sys: SystemParams):
    a1, a2, a3 = _check_simplex(alpha)
    base = coefficients(channel, sys)
    with np.errstate(divide="ignore", invalid="ignore"):
        relay_snr = np.where(a3 > 0.0, base.c * a2 / np.where(a3 > 0.0, a3, 1.0), 0.0)
    j = collab_capacity(method, base.m, relay_snr)
    first = a1 * base.c_sr
    second = (a1 + a2) * base.b + a3 * j
    return _scalar(first), _scalar(second)


def rate_ts(alpha, method: Method, channel: ChannelState, sys: SystemParams):
    first, second = ts_arms(alpha, method, channel, sys)
    return _scalar(np.minimum(first, second))


def ps_rho_threshold(channel: ChannelState) -> float:
    """Largest power-splitting ratio at which the relay still out-decodes D.

    Raises :class:`NoCooperation` when the S->R link SNR does not exceed the
    S->D link SNR even with nothing harvested.
    """
    denom = channel.H_SR * channel.sigma_D2 - channel.H_SD * channel.sigma_a2
    if denom <= 0.0 or channel.H_SR * channel.sigma_D2 <= channel.H_SD * channel.sigma_R2:
        raise NoCooperation("S->R SNR does not exceed S->D SNR; the relay never decodes first")
    return 1.0 - channel.H_SD * channel.sigma_b2 / denom
