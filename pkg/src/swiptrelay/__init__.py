"""Achievable-rate optimization for SWIPT-enabled rateless-coded relaying.

The usual entry point is :func:`swiptrelay.optimizers.solve`::

    from swiptrelay import ChannelState, SystemParams, Protocol, Method, solve
    sol = solve(Protocol.PS, Method.IA, ChannelState(1.0, 29.6, 9.4), SystemParams(10.0))
"""

from .channel import ChannelState, RateCoefficients, SystemParams, Topology, channel_from_topology, coefficients
from .optimizers import Protocol, ProtocolSolution, solve
from .protocols import Method
from .specfun import WBranch, lambert_w

__all__ = [
    "ChannelState",
    "Method",
    "Protocol",
    "ProtocolSolution",
    "RateCoefficients",
    "SystemParams",
    "Topology",
    "WBranch",
    "channel_from_topology",
    "coefficients",
    "lambert_w",
    "solve",
]
