"""End-to-end acceptance checks.

Each test prints one ``PASS``/``FAIL`` line for its criterion and then
asserts it, so ``pytest -v`` shows both the verdict and the measured margin.
"""

import math
import time

import numpy as np
import pytest

from conftest import feasible_instances
from swiptrelay import oracle, protocols
from swiptrelay.baselines import optimize_nonswipt_rc, rate_nonswipt_norc
from swiptrelay.channel import SystemParams, Topology, c_sd, channel_from_topology, coefficients, db_to_linear, gains_from_geometry, linear_to_db
from swiptrelay.optimizers import Protocol, optimize_ideal, optimize_ps, optimize_ps_fixed_rho, optimize_ts, optimize_ts_fixed_alpha2, solve
from swiptrelay.protocols import Method
from swiptrelay.specfun import WBranch, lambert_w

INV_E = math.exp(-1.0)
POINTS_DB = (0.0, 10.0, 20.0, 30.0, 40.0)
SWEEP_DB = tuple(float(p) for p in range(0, 41, 2))
SWIPT = (Protocol.IDEAL, Protocol.PS, Protocol.TS)


def _verdict(capsys, n, ok, detail):
    with capsys.disabled():
        print(f"\n{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def sweep(eval_setup):
    """Optimized and fixed-parameter solutions over the 0-40 dB sweep."""
    out = {}
    for p_db in SWEEP_DB:
        sys = SystemParams(db_to_linear(p_db))
        for method in Method:
            for proto in (*SWIPT, Protocol.DIRECT):
                out[p_db, method, proto.value] = solve(proto, method, eval_setup, sys)
            out[p_db, method, "PS-fixed"] = optimize_ps_fixed_rho(eval_setup, sys, method, 0.8)
            out[p_db, method, "TS-fixed"] = optimize_ts_fixed_alpha2(eval_setup, sys, method, 1.0 / 3.0)
    return out


def test_closed_form_vs_oracle(capsys):
    start = time.perf_counter()
    grid = oracle.GridSpec(1e-5, refine=True)
    worst_rate = worst_lam = 0.0
    for ch, sys, co in feasible_instances(1000, seed=2024):
        for method in Method:
            sol = optimize_ideal(co, method)
            ref = oracle.ideal_grid_max(method, co, grid)
            worst_rate = max(worst_rate, abs(sol.rate - ref.rate) / ref.rate)
            worst_lam = max(worst_lam, abs(sol.lambda_star - ref.lambda_star))
    elapsed = time.perf_counter() - start
    ok = worst_rate <= 1e-7 and worst_lam <= 1e-4 and elapsed < 60.0
    _verdict(capsys, 1, ok, f"max rel rate gap {worst_rate:.2e} (<=1e-7), max |dlambda| {worst_lam:.2e} (<=1e-4), "
                            f"{elapsed:.1f}s (<60s)")


def test_ps_vs_2d_oracle(capsys, eval_setup):
    start = time.perf_counter()
    grid = oracle.GridSpec(1e-3)
    worst = 0.0
    for p_db in POINTS_DB:
        sys = SystemParams(db_to_linear(p_db))
        for method in Method:
            got = optimize_ps(eval_setup, sys, method).rate
            ref = oracle.grid_max(Protocol.PS, method, eval_setup, sys, grid).rate
            worst = max(worst, abs(got - ref) / ref)
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-3 and elapsed < 30.0
    _verdict(capsys, 2, ok, f"max rel gap {worst:.2e} (<=1e-3), {elapsed:.1f}s (<30s)")


def test_ts_vs_simplex_oracle(capsys, eval_setup):
    start = time.perf_counter()
    grid = oracle.GridSpec(2e-3)
    worst = worst_res = 0.0
    for p_db in POINTS_DB:
        sys = SystemParams(db_to_linear(p_db))
        for method in Method:
            sol = optimize_ts(eval_setup, sys, method)
            ref = oracle.grid_max(Protocol.TS, method, eval_setup, sys, grid).rate
            worst = max(worst, abs(sol.rate - ref) / ref)
            first, second = protocols.ts_arms(sol.alpha_star, method, eval_setup, sys)
            worst_res = max(worst_res, abs(first - second))
    elapsed = time.perf_counter() - start
    ok = worst <= 2e-3 and worst_res <= 1e-6 and elapsed < 60.0
    _verdict(capsys, 3, ok, f"max rel gap {worst:.2e} (<=2e-3), arm residual {worst_res:.2e} (<=1e-6), "
                            f"{elapsed:.1f}s (<60s)")


def test_protocol_ordering(capsys, sweep):
    worst = math.inf
    for p_db in SWEEP_DB:
        for method in Method:
            r = [sweep[p_db, method, name].rate for name in ("Ideal", "PS", "TS", "DirectLink")]
            worst = min(worst, *(r[i] - r[i + 1] for i in range(3)))
    strict = min(sweep[10.0, m, "PS"].rate - sweep[10.0, m, "TS"].rate for m in Method)
    ok = worst >= -1e-9 and strict > 1e-6
    _verdict(capsys, 4, ok, f"min consecutive margin {worst:.2e} (>=-1e-9), PS-TS at 10 dB {strict:.3e} (>1e-6)")


def test_ia_dominates_ea(capsys, sweep):
    worst = min(sweep[p, Method.IA, proto.value].rate - sweep[p, Method.EA, proto.value].rate
                for p in SWEEP_DB for proto in SWIPT)
    _verdict(capsys, 5, worst >= -1e-9, f"min IA-EA margin {worst:.2e} (>=-1e-9)")


def test_fixed_parameters_inferior(capsys, sweep):
    worst = min(min(sweep[p, m, "PS"].rate - sweep[p, m, "PS-fixed"].rate,
                    sweep[p, m, "TS"].rate - sweep[p, m, "TS-fixed"].rate)
                for p in SWEEP_DB for m in Method)
    _verdict(capsys, 6, worst >= -1e-6, f"min optimized-minus-fixed margin {worst:.2e} (>=-1e-6)")


def test_gain_limit(capsys, eval_setup):
    powers = tuple(float(p) for p in range(0, 61, 2))
    lowest, worst_rise, at_60 = math.inf, 0.0, {}
    for method in Method:
        for proto in SWIPT:
            gains = []
            for p_db in powers:
                sys = SystemParams(db_to_linear(p_db))
                gains.append(solve(proto, method, eval_setup, sys).rate / c_sd(eval_setup, sys))
            gains = np.array(gains)
            lowest = min(lowest, gains.min())
            tail = gains[int(np.argmax(gains)):]
            worst_rise = max(worst_rise, float(np.max(np.diff(tail), initial=0.0)))
            at_60[f"{proto.value}/{method.value}"] = gains[-1]
    top = max(at_60.values())
    ok = lowest >= 1.0 and worst_rise <= 1e-3 and top <= 1.05
    detail = ", ".join(f"{k} {v:.3f}" for k, v in at_60.items())
    _verdict(capsys, 7, ok, f"min gain {lowest:.4f} (>=1), max rise after peak {worst_rise:.1e} (<=1e-3), "
                            f"gain at 60 dB: {detail} (<=1.05)")


def test_eh_parameter_ordering(capsys, sweep):
    rho = min(sweep[p, Method.EA, "PS"].rho_star - sweep[p, Method.IA, "PS"].rho_star for p in SWEEP_DB)
    a2 = min(sweep[p, Method.EA, "TS"].alpha_star[1] - sweep[p, Method.IA, "TS"].alpha_star[1] for p in SWEEP_DB)
    ok = rho >= -1e-3 and a2 >= -1e-3
    _verdict(capsys, 8, ok, f"min rho*(EA)-rho*(IA) {rho:.2e}, min alpha2*(EA)-alpha2*(IA) {a2:.2e} (>=-1e-3)")


def test_topology_gains(capsys):
    g_sr, g_rd = (float(linear_to_db(g)) for g in gains_from_geometry(Topology(4.0 / 3.0, math.pi, 4.0)))
    ok = round(g_sr, 2) == 14.72 and round(g_rd, 2) == 9.72 and abs(g_sr - 15) <= 0.5 and abs(g_rd - 10) <= 0.5
    _verdict(capsys, 9, ok, f"G_SR {g_sr:.2f} dB, G_RD {g_rd:.2f} dB")


def test_direct_link_effect(capsys):
    sys = SystemParams(10.0)
    worst, at_half = math.inf, math.inf
    for d in np.round(np.arange(0.1, 0.91, 0.1), 12):
        with_link = channel_from_topology(Topology((1.0 - d) / d))
        without = with_link.without_direct_link()
        for method in Method:
            for proto in SWIPT:
                gap = solve(proto, method, with_link, sys).rate - solve(proto, method, without, sys).rate
                worst = min(worst, gap)
                if d == 0.5:
                    at_half = min(at_half, gap)
    ok = worst >= 0.0 and at_half > 1e-6
    _verdict(capsys, 10, ok, f"min gain from direct link {worst:.3e} (>=0), at d=0.5 {at_half:.3e} (>1e-6)")


def test_swipt_beats_nonswipt(capsys):
    ch = channel_from_topology(Topology((1.0 - 0.3) / 0.3))
    sys = SystemParams(10.0)
    swipt = solve(Protocol.IDEAL, Method.IA, ch, sys).rate
    rc = optimize_nonswipt_rc(ch, sys, Method.IA).rate
    norc = rate_nonswipt_norc(ch, sys).rate
    ok = swipt >= rc - 1e-3 and norc <= rc
    _verdict(capsys, 11, ok, f"SWIPT RC {swipt:.4f} >= non-SWIPT RC {rc:.4f} >= non-SWIPT non-RC {norc:.4f}")


def _second_arm(lam, method, co):
    return protocols.ideal_arms(lam, method, co)[1]


def test_numerical_analysis_suite(capsys):
    rng = np.random.default_rng(12)
    x0 = np.concatenate([-INV_E + np.geomspace(1e-14, INV_E, 5000), np.geomspace(1e-12, 1e12, 5000)])
    xm = -np.concatenate([np.geomspace(1e-300, INV_E, 5000), rng.uniform(1e-300, INV_E, 5000)])
    rt = 0.0
    for branch, x in ((WBranch.PRINCIPAL, x0), (WBranch.LOWER, xm)):
        w = lambert_w(branch, x)
        rt = max(rt, float(np.max(np.abs(w * np.exp(w) - x) / np.maximum(1.0, np.abs(x)))))

    lam = np.linspace(1e-3, 1 - 1e-3, 1000)
    h = 1e-4
    cases = feasible_instances(200, seed=12)
    d2max = -math.inf
    changes = set()
    for ch, sys, co in cases:
        for method in Method:
            d2 = _second_arm(lam + h, method, co) - 2 * _second_arm(lam, method, co) + _second_arm(lam - h, method, co)
            d2max = max(d2max, float(d2.max()))
            changes.add(oracle.sign_changes(Protocol.IDEAL, method, co, points=10_000))

    bad = 0
    for ch, sys, co in cases:
        # principal branch where the lower one belongs
        x = -(co.a / co.c) * math.exp(-co.b - co.a / co.c)
        t = -lambert_w(WBranch.PRINCIPAL, x) / co.a - 1.0 / co.c
        lam_bad = t / (1.0 + t)
        if not 0.0 < lam_bad < 1.0:
            bad += 1
            continue
        first, second = protocols.ideal_arms(lam_bad, Method.IA, co)
        bad += abs(first - second) > 1e-3
    frac = bad / len(cases)
    ok = rt <= 1e-12 and d2max <= 1e-8 and changes == {1} and frac >= 0.95
    _verdict(capsys, 12, ok, f"W round trip {rt:.1e} (<=1e-12), max second difference {d2max:.1e} (<=1e-8), "
                             f"sign changes {sorted(changes)} (==[1]), wrong-branch failures {frac:.1%} (>=95%)")


def test_complexity_scaling(capsys, eval_setup):
    counts = {}
    for eps in (1e-2, 1e-3, 1e-4):
        sys = SystemParams(db_to_linear(20.0), epsilon=eps)
        ideal = optimize_ideal(coefficients(eval_setup, sys), Method.IA).diagnostics
        counts[eps] = (
            optimize_ps(eval_setup, sys, Method.IA).diagnostics["scan_evals"],
            optimize_ts(eval_setup, sys, Method.IA).diagnostics["scan_evals"],
            ideal["evaluations"],
        )
    worst = 0.0
    for eps, (ps, ts, _) in counts.items():
        rho_th = protocols.ps_rho_threshold(eval_setup)
        worst = max(worst, abs(ps * eps / rho_th - 1.0), abs(ts * eps - 1.0))
    ideal_const = len({c[2] for c in counts.values()}) == 1
    ok = worst <= 0.10 and ideal_const
    detail = ", ".join(f"eps={e:g}: PS {c[0]}, TS {c[1]}" for e, c in counts.items())
    _verdict(capsys, 13, ok, f"{detail}; max deviation from 1/eps scaling {worst:.1%} (<=10%), "
                             f"ideal evaluations constant: {ideal_const}")
