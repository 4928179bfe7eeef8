"""Acceptance suite: one test per criterion, one PASS/FAIL line each.

Lines are printed as the tests run and collected again in the pytest
terminal summary under "acceptance criteria".
"""

import itertools
import math
import os
import time

import numpy as np
import pytest

from admot.bpdn import SolverProblem, convex_opt, oracle_solve
from admot.bpsk import BpskMedium, PolarGains, matched_filter, synthesize_received
from admot.channel import NoiseModel, gains_at_snr, sparse_variation
from admot.core import RoundConfig, SimulatedMedium, admot_round, relative_error
from admot.general import Duplex, Topology, relay_listen_counts, run_admot_general
from admot.harness import cli
from admot.harness.config import SweepConfig
from admot.harness.experiments import sweep_scaling
from admot.harness.validate import (nonincreasing_in_d, validate_lemma3,
                                    validate_theorem2)
from admot.probe import Alphabet, generate
from admot.streams import stream
from conftest import report

CONFIGS = os.path.join(os.path.dirname(__file__), os.pardir, "configs")


def _config(name):
    return os.path.join(CONFIGS, name)


# 1 -----------------------------------------------------------------------------

def _tiny_instance(i):
    rng = stream(2024, "instance", i)
    n = 2 + i % 2
    m = 1 + (i // 2) % 2
    sigma = 0.5 * ((i // 4) % 2)
    # entry magnitudes bounded away from 0 keep the exhaustive grid finite
    A = rng.uniform(0.5, 2.0, (m, n)) * rng.choice([-1.0, 1.0], (m, n))
    y = rng.uniform(0.5, 2.0, m) * rng.choice([-1.0, 1.0], m)
    return SolverProblem(A, y, sigma, feasibility_tol=1e-7)


def test_criterion_1_solver_matches_oracle():
    t0 = time.perf_counter()
    worst_gap, worst_res, ok = -np.inf, -np.inf, True
    for i in range(50):
        prob = _tiny_instance(i)
        n = prob.A.shape[1]
        step = 0.02 if (n == 3 and prob.sigma > 0) else 0.005
        orc = oracle_solve(prob, grid_step=step)
        sol = convex_opt(prob)
        excess = np.linalg.norm(prob.A @ sol.x_star - prob.y) - prob.sigma
        gap = sol.l1_norm - orc.l1_norm
        worst_gap, worst_res = max(worst_gap, gap), max(worst_res, excess)
        ok &= excess <= 1e-6 and gap <= 1e-2
    dt = time.perf_counter() - t0
    ok &= dt < 60
    report(1, ok, f"50 instances, max residual excess {worst_res:.2e}, "
                  f"max l1 - oracle {worst_gap:.2e}, {dt:.1f}s")
    assert ok


# 2 -----------------------------------------------------------------------------

def test_criterion_2_lemma3():
    t0 = time.perf_counter()
    r20, r40 = (validate_lemma3(m, 100_000, seed=7) for m in (20, 40))
    ok = r20.within_bound and r40.within_bound
    ok &= abs(r20.frequency - 0.0050) <= 0.0010 and abs(r20.frequency - r20.oracle) <= 0.0010
    dt = time.perf_counter() - t0
    ok &= dt < 60
    report(2, ok, f"m=20 freq {r20.frequency:.5f} (bound {r20.bound:.5f}, oracle "
                  f"{r20.oracle:.5f}), m=40 freq {r40.frequency:.5f} (bound {r40.bound:.5f}), "
                  f"{dt:.1f}s")
    assert ok


# 3 -----------------------------------------------------------------------------

def test_criterion_3_theorem2():
    t0 = time.perf_counter()
    rows = validate_theorem2([16, 32, 64], [0.0, 4.0, 8.0], 10_000, n=64, seed=11)
    mono = nonincreasing_in_d(rows)
    ok = all(r.passed for r in rows) and mono
    dt = time.perf_counter() - t0
    ok &= dt < 300
    worst = max(rows, key=lambda r: max(r.freq_upper, r.freq_lower) / r.bound)
    report(3, ok, f"9 cells pass={sum(r.passed for r in rows)}, nonincreasing={mono}, "
                  f"tightest d={worst.d} phi={worst.phi:g}: "
                  f"{max(worst.freq_upper, worst.freq_lower):.5f} <= {worst.bound:.5f}, "
                  f"{dt:.1f}s")
    assert ok


# 4 -----------------------------------------------------------------------------

def recovery_trials(trials=100, n=128, k=3, m=60):
    errors = []
    for t in range(trials):
        rng = stream(1, "instance", t)
        H_hat = gains_at_snr(n, 20, rng)
        H = H_hat + sparse_variation(n, k, 100, rng)
        phi = generate(t, m, n)
        res = admot_round(H_hat, phi, RoundConfig(m),
                          SimulatedMedium(H, NoiseModel(), stream(1, "noise", t)))
        errors.append(relative_error(res.h_star, H))
    return np.array(errors)


def _write_errors(errors, path):
    with open(path, "w") as fh:
        fh.write("trial,relative_error\n")
        for t, e in enumerate(errors):
            fh.write(f"{t},{float(e)!r}\n")


def test_criterion_4_recovery(tmp_path):
    t0 = time.perf_counter()
    errors = recovery_trials()
    _write_errors(errors, tmp_path / "recovery.csv")
    good = int(np.count_nonzero(errors <= 0.05))
    dt = time.perf_counter() - t0
    ok = good >= 95 and dt < 300
    report(4, ok, f"{good}/100 trials with relative error <= 0.05 "
                  f"(median {np.median(errors):.4f}, max {errors.max():.4f}), {dt:.1f}s")
    assert ok


# 5 -----------------------------------------------------------------------------

def test_criterion_5_scaling():
    t0 = time.perf_counter()
    cfg = SweepConfig(n=256, k=(2, 4, 8, 16), trials=20, success_rate=0.9, seed=5)
    points = sweep_scaling(cfg)
    ratios = [p.ratio for p in points]
    below = all(p.bracketed and p.m_min < 256 for p in points)
    spread = max(ratios) / min(ratios) if below else float("inf")
    dt = time.perf_counter() - t0
    ok = below and spread <= 3 and dt < 900
    report(5, ok, ", ".join(f"k={p.k}: m_min={p.m_min} ratio={p.ratio:.3f}" for p in points)
           + f"; spread {spread:.2f}, {dt:.1f}s")
    assert ok


# 6 and 10 --------------------------------------------------------------------

def _run_monitor(config, out):
    code = cli.main(["monitor", config, str(out)])
    avg = {}
    with open(out / "overhead.csv") as fh:
        next(fh)
        for line in fh:
            x, a, *_ = line.strip().split(",")
            avg[float(x)] = float(a)
    first = {}
    for x in avg:
        with open(out / f"rounds_x{x:g}.csv") as fh:
            next(fh)
            first[x] = int(next(fh).split(",")[1])
    return code, avg, first


@pytest.fixture(scope="module")
def desk_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("desk")
    t0 = time.perf_counter()
    result = _run_monitor(_config("monitor_desk.json"), out)
    return out, time.perf_counter() - t0, result


def test_criterion_6_desk_reproduction(desk_run):
    _, dt, (code, avg, first) = desk_run
    xs = sorted(avg)
    ordered = all(avg[a] > avg[b] for a, b in zip(xs, xs[1:]))
    below = all(v < 100 for v in avg.values())
    first_ok = all(m >= 90 for m in first.values())
    ok = ordered and below and first_ok and dt < 600 and code == 0
    report(6, ok, " > ".join(f"x{x:g}: {avg[x]:.1f}" for x in xs)
           + f" slots (n=100), first rounds {sorted(first.values())}, {dt:.1f}s")
    assert ok


def test_criterion_10_determinism(desk_run, tmp_path):
    out, _, _ = desk_run
    again = tmp_path / "desk"
    _run_monitor(_config("monitor_desk.json"), again)
    names = sorted(p.name for p in out.glob("*.csv"))
    same_monitor = names == sorted(p.name for p in again.glob("*.csv")) and all(
        (out / nm).read_bytes() == (again / nm).read_bytes() for nm in names)
    a, b = recovery_trials(20), recovery_trials(20)
    _write_errors(a, tmp_path / "a.csv")
    _write_errors(b, tmp_path / "b.csv")
    same_recovery = (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    ok = same_monitor and same_recovery
    report(10, ok, f"{len(names)} monitor CSVs identical={same_monitor}, "
                   f"recovery CSV identical={same_recovery}")
    assert ok


# 7 -----------------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_7_full_scale(tmp_path):
    """Non-gating: a miss is reported and marked xfail rather than failed."""
    t0 = time.perf_counter()
    code, avg, _ = _run_monitor(_config("monitor_full.json"), tmp_path)
    dt = time.perf_counter() - t0
    targets = {80.0: 320, 90.0: 252, 98.0: 140}
    rel = {x: (avg[x] - t) / t for x, t in targets.items()}
    ok = all(abs(r) <= 0.3 for r in rel.values())
    report(7, ok, ", ".join(f"x{x:g}: {avg[x]:.1f} vs {targets[x]} ({rel[x]:+.1%})"
                            for x in sorted(targets)) + f", {dt / 60:.1f} min (non-gating)")
    if not ok:
        pytest.xfail("full-scale averages outside the 30% envelope (non-gating)")


# 8 -----------------------------------------------------------------------------

def test_criterion_8_bpsk():
    t0 = time.perf_counter()
    n, k, m = 32, 2, 96
    worst_a = worst_t = 0.0
    for trial in range(10):
        rng = stream(8, "instance", trial)
        H_hat = gains_at_snr(n, 20, rng)
        delta = sparse_variation(n, k, 100, rng)
        truth = PolarGains.from_complex(H_hat + delta)
        prior = PolarGains.from_complex(H_hat)
        medium = BpskMedium(truth, noise=NoiseModel(), rng=stream(8, "noise", trial))
        res = admot_round(prior.h_cos + 1j * prior.h_sin, generate(100 + trial, m, n),
                          RoundConfig(m), medium)
        est = PolarGains.from_complex(res.h_star.real - 1j * res.h_star.imag)
        varied = np.flatnonzero(delta)
        da = np.abs(est.amplitude[varied] - truth.amplitude[varied]) / truth.amplitude[varied]
        dth = np.abs(np.angle(np.exp(1j * (est.phase[varied] - truth.phase[varied]))))
        worst_a, worst_t = max(worst_a, da.max()), max(worst_t, dth.max())

    # noiseless matched filter against the closed forms
    rng = stream(8, "instance", 99)
    gains = PolarGains(rng.uniform(0.1, 20, n), rng.uniform(-math.pi, math.pi, n))
    phi = generate(8, 16, n).entries
    _, y = synthesize_received(phi, gains)
    yc, ys = matched_filter(y)
    closed = max(np.abs(yc - phi @ (gains.amplitude * np.cos(gains.phase))).max(),
                 np.abs(ys - phi @ (gains.amplitude * np.sin(gains.phase))).max())
    dt = time.perf_counter() - t0
    ok = worst_a <= 0.05 and worst_t <= 0.05 and closed <= 1e-3 and dt < 120
    report(8, ok, f"10 trials m={m}: worst amplitude error {worst_a:.2%}, worst phase "
                  f"error {worst_t:.4f} rad; filter vs closed form {closed:.1e}, {dt:.1f}s")
    assert ok


# 9 -----------------------------------------------------------------------------

TWO_RELAY = Topology(1, 2, 1, Duplex.HALF)


def _two_relay_case(seed):
    rng = stream(9, "instance", seed)
    states, priors = {}, {}
    for node in TWO_RELAY.listeners:
        H = rng.normal(size=3) * 3 + 1j * rng.normal(size=3) * 3
        fixed = TWO_RELAY.self_index(node)
        if fixed is not None:
            H[fixed] = 0
        free = [i for i in range(3) if i != fixed]
        prior = H.copy()
        prior[free[rng.integers(len(free))]] -= complex(*rng.choice([-4.0, -2.0, 3.0, 5.0], 2))
        states[node], priors[node] = H, prior
    return states, priors


def _oracle_certified(view, delta, fixed):
    keep = [i for i in range(3) if i != fixed]
    A = view.phi[:, keep].astype(float)
    for part in (delta.real[keep], delta.imag[keep]):
        orc = oracle_solve(SolverProblem(A, A @ part, 0.0), grid_step=0.01)
        if not orc.info["unique"] or not np.allclose(orc.x_star, part, atol=0.03):
            return False
    return True


def test_criterion_9_general():
    t0 = time.perf_counter()
    certified = exact = 0
    self_zero = True
    for seed in itertools.count():
        if certified >= 30 or seed >= 2000:
            break
        states, priors = _two_relay_case(seed)
        phi = generate(900 + seed, 6, 3, Alphabet.TERNARY)
        res = run_admot_general(TWO_RELAY, phi, states, priors, NoiseModel(False), sigma=0.0)
        for node in TWO_RELAY.relays:
            if node in res.estimates:
                i = TWO_RELAY.self_index(node)
                self_zero &= res.estimates[node].h_star[i] == 0
        for node in TWO_RELAY.listeners:
            view = res.views[node]
            if view.m_beta == 0 or node not in res.estimates:
                continue
            if _oracle_certified(view, states[node] - priors[node], TWO_RELAY.self_index(node)):
                certified += 1
                exact += np.allclose(res.estimates[node].h_star, states[node], atol=1e-4)
    counts = relay_listen_counts(9, 300, 1, 2, 10_000)
    frac = float(np.mean(counts >= 100))
    dt = time.perf_counter() - t0
    ok = certified >= 30 and exact == certified and self_zero and frac >= 0.999 and dt < 300
    report(9, ok, f"{exact}/{certified} oracle-certified node recoveries exact, relay self "
                  f"channel zero={self_zero}, m_beta >= 100 in {frac:.2%} of 10000 trials "
                  f"(min {counts.min()}), {dt:.1f}s")
    assert ok
