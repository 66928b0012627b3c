"""Link gains, capacities and the shorthand rate coefficients.

Everything here is linear; dB values are converted at the CLI/config
boundary with :func:`db_to_linear`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class DegenerateGeometryError(ValueError):
    """Relay placed on top of the source."""


def db_to_linear(x_db):
    out = np.power(10.0, np.asarray(x_db, dtype=float) / 10.0)
    return float(out) if out.ndim == 0 else out


def linear_to_db(x):
    return 10.0 * np.log10(x)


@dataclass(frozen=True)
class ChannelState:
    """Link power gains and receiver noise powers.

    ``sigma_R2`` is derived as ``sigma_a2 + sigma_b2``.
    """

    H_SD: float
    H_SR: float
    H_RD: float
    sigma_a2: float = 1.0
    sigma_b2: float = 1.0
    sigma_D2: float = 2.0
    sigma_R2: float = field(init=False)

    def __post_init__(self):
        for name in ("H_SD", "H_SR", "H_RD", "sigma_a2", "sigma_b2", "sigma_D2"):
            value = getattr(self, name)
            if not value >= 0.0:
                raise ValueError(f"ChannelState.{name} must be >= 0, got {value!r}")
        object.__setattr__(self, "sigma_R2", self.sigma_a2 + self.sigma_b2)
        if not (self.sigma_R2 > 0.0 and self.sigma_D2 > 0.0):
            raise ValueError("ChannelState noise powers sigma_R2 and sigma_D2 must be > 0")

    def without_direct_link(self) -> "ChannelState":
        return ChannelState(0.0, self.H_SR, self.H_RD, self.sigma_a2, self.sigma_b2, self.sigma_D2)


@dataclass(frozen=True)
class SystemParams:
    P_S: float
    eta: float = 1.0
    epsilon: float = 1e-3

    def __post_init__(self):
        if not self.P_S > 0.0:
            raise ValueError(f"SystemParams.P_S must be > 0, got {self.P_S!r}")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"SystemParams.eta must lie in [0, 1], got {self.eta!r}")
        if not 0.0 < self.epsilon <= 0.1:
            raise ValueError(f"SystemParams.epsilon must lie in (0, 0.1], got {self.epsilon!r}")


@dataclass(frozen=True)
class RateCoefficients:
    """Shorthand used by the closed-form solutions.

    a = C_SR - C_SD, b = C_SD, c = eta*H_SR*H_RD*P_S/sigma_D2 and
    m = P_S*H_SD/sigma_D2 (so b = ln(1+m)).  Rates are in nats.
    """

    a: float
    b: float
    c: float
    m: float

    @property
    def c_sr(self) -> float:
        return self.a + self.b


@dataclass(frozen=True)
class Topology:
    """Relay placement: distance ratio ``zeta = d_RD/d_SR``, angle ``theta``
    at the relay between R->D and R->S (radians) and pathloss exponent."""

    zeta: float
    theta: float = math.pi
    kappa: float = 4.0

    def __post_init__(self):
        if not self.zeta > 0.0:
            raise ValueError(f"Topology.zeta must be > 0, got {self.zeta!r}")
        if not self.kappa > 0.0:
            raise ValueError(f"Topology.kappa must be > 0, got {self.kappa!r}")

    @classmethod
    def on_line(cls, d_sr: float, kappa: float = 4.0) -> "Topology":
        """Relay between S and D at normalized distance ``d_sr`` from S."""
        if not 0.0 < d_sr < 1.0:
            raise ValueError(f"d_sr must lie in (0, 1), got {d_sr!r}")
        return cls((1.0 - d_sr) / d_sr, math.pi, kappa)


def gains_from_geometry(topology: Topology) -> tuple[float, float]:
    """Gain ratios ``(G_SR, G_RD)`` relative to the S-D link (d_SD = 1)."""
    z, th, k = topology.zeta, topology.theta, topology.kappa
    bracket = 1.0 + z * z - 2.0 * z * math.cos(th)
    if bracket <= 1e-12:
        raise DegenerateGeometryError(f"relay coincides with the source (zeta={z!r}, theta={th!r})")
    g_sr = bracket ** (k / 2.0)
    return g_sr, g_sr / z ** k


def gains_from_position(x: float, y: float, kappa: float = 4.0) -> tuple[float, float]:
    """Absolute ``(H_SR, H_RD)`` for a relay at (x, y), S at origin, D at (1, 0).

    A relay sitting on D gets ``H_RD = inf``.
    """
    d_sr = math.hypot(x, y)
    d_rd = math.hypot(x - 1.0, y)
    if d_sr <= 1e-6:
        raise DegenerateGeometryError(f"relay coincides with the source at ({x!r}, {y!r})")
    h_rd = math.inf if d_rd == 0.0 else d_rd ** -kappa
    return d_sr ** -kappa, h_rd


def channel_from_topology(topology: Topology, sigma_a2=1.0, sigma_b2=1.0, sigma_D2=2.0, H_SD=1.0) -> ChannelState:
    g_sr, g_rd = gains_from_geometry(topology)
    return ChannelState(H_SD, g_sr * H_SD, g_rd * H_SD, sigma_a2, sigma_b2, sigma_D2)


def capacity(snr):
    """Shannon capacity ``ln(1 + snr)`` in nats."""
    if np.ndim(snr):
        snr = np.asarray(snr, dtype=float)
        if np.any(snr < 0.0):
            raise ValueError("capacity: negative SNR")
        return np.log1p(snr)
    if snr < 0.0:
        raise ValueError(f"capacity: negative SNR {snr!r}")
    return math.log1p(snr)


def c_sd(channel: ChannelState, sys: SystemParams) -> float:
    return capacity(sys.P_S * channel.H_SD / channel.sigma_D2)


def c_sr(channel: ChannelState, sys: SystemParams) -> float:
    return capacity(sys.P_S * channel.H_SR / channel.sigma_R2)


def coefficients(channel: ChannelState, sys: SystemParams) -> RateCoefficients:
    m = sys.P_S * channel.H_SD / channel.sigma_D2
    b = capacity(m)
    c = sys.eta * channel.H_SR * channel.H_RD * sys.P_S / channel.sigma_D2 if sys.eta > 0 else 0.0
    return RateCoefficients(a=c_sr(channel, sys) - b, b=b, c=c, m=m)


def random_channel(rng: np.random.Generator, sigma_a2=1.0, sigma_b2=1.0, sigma_D2=2.0) -> ChannelState:
    """Unit-mean exponential (Rayleigh power) gains; for property tests only."""
    h = rng.exponential(1.0, size=3)
    return ChannelState(float(h[0]), float(h[1]), float(h[2]), sigma_a2, sigma_b2, sigma_D2)
