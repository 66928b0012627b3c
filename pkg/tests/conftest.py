import math

import numpy as np
import pytest

from swiptrelay.channel import SystemParams, Topology, channel_from_topology, coefficients, db_to_linear, random_channel


def feasible_instances(n, seed=2024, db_range=(0.0, 40.0)):
    """``n`` seeded (channel, sys, coeffs) triples with a > 0 and c > 0."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        ch = random_channel(rng)
        sys = SystemParams(db_to_linear(rng.uniform(*db_range)))
        co = coefficients(ch, sys)
        if co.a > 0.0 and co.c > 0.0:
            out.append((ch, sys, co))
    return out


@pytest.fixture(scope="session")
def eval_setup():
    """Evaluation topology: zeta = 4/3, theta = pi, kappa = 4, H_SD = 1."""
    return channel_from_topology(Topology(4.0 / 3.0, math.pi, 4.0))
