import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swiptrelay.channel import (
    ChannelState,
    DegenerateGeometryError,
    SystemParams,
    Topology,
    capacity,
    channel_from_topology,
    coefficients,
    db_to_linear,
    gains_from_geometry,
    gains_from_position,
    linear_to_db,
    random_channel,
)

G_SR_PAPER = 2401.0 / 81.0
G_RD_PAPER = G_SR_PAPER / (4.0 / 3.0) ** 4


@pytest.mark.parametrize(
    "zeta, expected",
    [(1.0, (16.0, 16.0)), (4.0 / 3.0, (G_SR_PAPER, G_RD_PAPER)), (2.0, (81.0, 81.0 / 16.0))],
)
def test_gains_from_geometry(zeta, expected):
    g_sr, g_rd = gains_from_geometry(Topology(zeta, math.pi, 4.0))
    assert g_sr == pytest.approx(expected[0], rel=1e-14)
    assert g_rd == pytest.approx(expected[1], rel=1e-14)


def test_eval_setup_in_db():
    g_sr, g_rd = gains_from_geometry(Topology(4.0 / 3.0))
    assert linear_to_db(g_sr) == pytest.approx(14.719071411783776, abs=1e-12)
    assert linear_to_db(g_rd) == pytest.approx(9.721521947451778, abs=1e-12)


def test_degenerate_geometry():
    with pytest.raises(DegenerateGeometryError):
        gains_from_geometry(Topology(1.0, 0.0))
    with pytest.raises(DegenerateGeometryError):
        gains_from_position(0.0, 0.0)


def test_position_matches_line_geometry():
    for d in (0.1, 0.25, 0.5, 0.8):
        h_sr, h_rd = gains_from_position(d, 0.0)
        g_sr, g_rd = gains_from_geometry(Topology.on_line(d))
        assert h_sr == pytest.approx(g_sr, rel=1e-12)
        assert h_rd == pytest.approx(g_rd, rel=1e-12)


def test_relay_on_destination():
    h_sr, h_rd = gains_from_position(1.0, 0.0)
    assert h_sr == 1.0 and math.isinf(h_rd)


@settings(max_examples=100, deadline=None)
@given(st.floats(min_value=1e-3, max_value=1e3), st.floats(min_value=0.5, max_value=6.0))
def test_on_line_gain_is_inverse_distance_power(zeta, kappa):
    g_sr, _ = gains_from_geometry(Topology(zeta, math.pi, kappa))
    d_sr = 1.0 / (1.0 + zeta)
    assert g_sr == pytest.approx(d_sr ** -kappa, rel=1e-10)


def test_capacity():
    assert capacity(0.0) == 0.0
    assert capacity(math.e - 1.0) == pytest.approx(1.0, rel=1e-15)
    assert capacity(1.0) == pytest.approx(math.log(2.0), rel=1e-15)
    np.testing.assert_allclose(capacity(np.array([0.0, 1.0])), [0.0, math.log(2.0)])
    with pytest.raises(ValueError):
        capacity(-1e-3)
    with pytest.raises(ValueError):
        capacity(np.array([1.0, -1.0]))


def test_db_round_trip():
    assert db_to_linear(10.0) == pytest.approx(10.0)
    assert db_to_linear(0.0) == 1.0
    x = np.array([-30.0, 0.0, 14.72, 60.0])
    np.testing.assert_allclose(linear_to_db(db_to_linear(x)), x, atol=1e-12)


def test_channel_state_validation():
    ch = ChannelState(1.0, 2.0, 3.0)
    assert ch.sigma_R2 == ch.sigma_a2 + ch.sigma_b2 == 2.0
    with pytest.raises(ValueError):
        ChannelState(-1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        ChannelState(1.0, 1.0, 1.0, sigma_D2=0.0)
    with pytest.raises(ValueError):
        ChannelState(1.0, 1.0, 1.0, sigma_a2=0.0, sigma_b2=0.0)


def test_system_params_validation():
    with pytest.raises(ValueError):
        SystemParams(0.0)
    with pytest.raises(ValueError):
        SystemParams(1.0, eta=1.5)
    with pytest.raises(ValueError):
        SystemParams(1.0, epsilon=0.0)


def test_coefficients_eval_setup():
    ch = channel_from_topology(Topology(4.0 / 3.0))
    co = coefficients(ch, SystemParams(10.0))
    assert co.m == pytest.approx(5.0)
    assert co.b == pytest.approx(math.log(6.0), rel=1e-15)
    assert co.c == pytest.approx(10.0 * G_SR_PAPER * G_RD_PAPER / 2.0, rel=1e-14)
    assert co.c == pytest.approx(1390.1, rel=1e-4)
    assert co.a == pytest.approx(math.log(1.0 + 10.0 * G_SR_PAPER / 2.0) - math.log(6.0), rel=1e-14)


def test_coefficients_dead_and_equal_links():
    co = coefficients(ChannelState(1.0, 0.0, 1.0), SystemParams(10.0))
    assert co.a == pytest.approx(-co.b) and co.c == 0.0
    # H_SR / sigma_R2 == H_SD / sigma_D2
    co = coefficients(ChannelState(1.0, 1.0, 1.0), SystemParams(10.0))
    assert co.a == 0.0


def test_no_harvesting_gives_zero_c():
    co = coefficients(ChannelState(1.0, 5.0, 5.0), SystemParams(10.0, eta=0.0))
    assert co.c == 0.0


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(min_value=1e-3, max_value=1e4))
def test_coefficients_homogeneity(seed, p_s):
    ch = random_channel(np.random.default_rng(seed))
    one, two = coefficients(ch, SystemParams(p_s)), coefficients(ch, SystemParams(2.0 * p_s))
    assert two.m == 2.0 * one.m
    assert two.c == pytest.approx(2.0 * one.c, rel=1e-15)
    assert one.b == math.log1p(one.m)
    assert two.b >= one.b and two.a + two.b >= one.a + one.b
    assert (one.a > 0) == (ch.H_SR / ch.sigma_R2 > ch.H_SD / ch.sigma_D2)
