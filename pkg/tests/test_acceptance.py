"""End-to-end acceptance criteria; each prints one PASS/FAIL line."""

import math
import time
from collections import Counter
from pathlib import Path

import numpy as np
import pytest

from modeconsensus.algorithms import (
    RunSettings, Scenario, candidate_positions, oracle_mode, run_algorithm1, run_algorithm2,
    run_algorithm3, run_linear, state_count,
)
from modeconsensus.bounds import select_gains, spectral_checks, time_bound_x, time_bound_y, time_bound_z
from modeconsensus.network import build_network, build_ring, random_connected_edges
from modeconsensus.protocols import GainSet, build_system, equilibrium, rnd
from modeconsensus.scenario import load_config, run

from conftest import HIST, reference_labels

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"

# tolerances and targets
T_Y_REF = 1.562          # T_y(n_bar=50, h_y=1e3), seconds
T_Z_REF = 345.4          # T_z(beta=0.02, n_bar=50, |Omega|=10), seconds
CHATTER_DT = 4.95e-6     # largest admissible step on the reference ring
LEADER_SUM_TOL = 1e-9
DEVIATION_LIMIT = math.sqrt(2) / 4
DESK_WALL_LIMIT = 30.0   # seconds


@pytest.fixture(scope="module")
def reference():
    tl, tab = build_ring(40, reference_labels(), n_bar=50, universe=list(range(1, 11)))
    return Scenario(tl, tab, select_gains(50, 10, "paper-exact", n=40), RunSettings(seed=11))


@pytest.mark.criterion(1, "direct algorithm on the 40-agent ring: frequencies, mode 4, lock within T_y")
def test_direct_reference(reference, criterion):
    g = reference.gains
    assert (g.gamma_y, g.h_y) == (6.4e4, 1e3)
    t_y = time_bound_y(50, g.h_y)
    run = run_algorithm1(reference)
    finals = np.stack([sub.trajectory.final[:40, 0] for sub in run.subruns], axis=1)
    per_agent_ok = bool(np.all(rnd(finals) == np.array(HIST)))
    slowest = max(sub.lock.lock_time for sub in run.subruns)
    criterion(per_agent_ok, "every agent's rounded frequency vector equals the histogram")
    criterion(run.mode == 4, f"mode {run.mode}")
    criterion(abs(t_y - T_Y_REF) < 5e-4 and slowest <= t_y, f"slowest lock {slowest:.4g} s <= T_y {t_y:.4g} s")
    assert per_agent_ok and run.mode == 4 and slowest <= t_y and abs(t_y - T_Y_REF) < 5e-4


@pytest.mark.criterion(2, "size estimation on the 40-agent ring locks to 40 within T_x")
def test_size_reference(reference, criterion):
    assert reference.gains.gamma_x == 1.25e5
    sub = run_linear(reference, "size")
    t_x = time_bound_x(50, reference.gains.h_x)
    ok = sub.value == 40 and sub.lock.lock_time <= t_x
    criterion(ok, f"value {sub.value} at {sub.lock.lock_time:.4g} s, T_x {t_x:.4g} s")
    assert ok


@pytest.mark.criterion(3, "a-priori K=3 on the 40-agent ring, plus desk ring N=10 within T_z in < 30 s")
def test_apriori_reference_and_desk(reference, criterion):
    run = run_algorithm2(reference, K=3)
    cands = [(c.position, c.label, c.frequency) for c in run.candidates]
    t_z = time_bound_z(50, 10, reference.gains.beta)
    kth = [s for s in run.subruns if s.kind == "kth"]
    ok_ref = (cands == [(14, 3, 7), (28, 4, 16)] and run.mode == 4 and abs(t_z - T_Z_REF) < 0.05
              and all(s.dt <= CHATTER_DT for s in kth) and all(s.lock.within_bound for s in kth))
    criterion(ok_ref, f"candidates {cands}, mode {run.mode}, k-th locks "
                      f"{[round(s.lock.lock_time, 4) for s in kth]} s <= {t_z:.1f} s, dt {kth[0].dt:.3g}")

    labels = [1, 2, 2, 3, 3, 3, 3, 4, 4, 1]
    tl, tab = build_ring(10, labels, n_bar=10)
    desk_gains = select_gains(10, 4, "desk")
    t_z_desk = time_bound_z(10, 4, desk_gains.beta)
    started = time.perf_counter()
    desk = run_algorithm2(Scenario(tl, tab, desk_gains, RunSettings(seed=2)), f_star=4)
    wall = time.perf_counter() - started
    kth = [s for s in desk.subruns if s.kind == "kth"]
    ok_desk = (desk.mode == 3 and all(s.lock.lock_time <= t_z_desk for s in kth) and wall < DESK_WALL_LIMIT
               and not desk.failures and not desk.mismatches)
    criterion(ok_desk, f"desk mode {desk.mode}, k-th locks {[round(s.lock.lock_time, 3) for s in kth]} s "
                       f"<= {t_z_desk:.2f} s, wall {wall:.3g} s")
    assert ok_ref and ok_desk


@pytest.mark.criterion(4, "adaptive K on the 40-agent ring: K 1->2->3, mode 4")
def test_adaptive_reference(reference, criterion):
    run = run_algorithm3(reference)
    k2 = next(r for r in run.rounds if r.K == 2)
    cands2 = [(c.position, c.label, c.frequency) for c in k2.candidates]
    final_F = run.rounds[-1].F
    ok = (run.K_trace == [1, 2, 3] and cands2 == [(20, 4, 16), (40, 10, 1)]
          and final_F == 16 and final_F >= math.ceil(40 / 3) == 14 and run.mode == 4)
    criterion(ok, f"K trace {run.K_trace}, K=2 candidates {cands2}, F={final_F}, mode {run.mode}")
    assert ok


@pytest.mark.criterion(5, "spectral and equilibrium properties on 100 random connected graphs")
def test_spectral_suite(criterion):
    rng = np.random.default_rng(2024)
    failures = []
    for trial in range(100):
        n = int(rng.integers(3, 13))
        edges = random_connected_edges(n, float(rng.uniform(0.05, 0.8)), rng)
        labels = [int(v) for v in rng.integers(1, 3, n)]
        tl, tab = build_network(n, edges, labels, universe=[1, 2])
        gamma = float(n**3)
        checks = spectral_checks(tl.last, gamma)
        gains = GainSet(1.0, gamma, 1.0, gamma, 1.0, 1.0, 1.0)
        s = build_system("frequency", tl.last, tab, gains, n_bar=n, attribute=2)
        y = equilibrium(s)[:, 0]
        lam2 = checks[0]
        lam_min = float(np.linalg.eigvalsh(s.coupling_matrix)[0])
        if not (lam2.lhs >= 4 / n**2 and lam_min >= 1 / (4 * n) and all(c.passed for c in checks)):
            failures.append(f"graph {trial}: spectral")
        if abs(y[0] - s.b.sum()) > LEADER_SUM_TOL or np.max(np.abs(y - y[0])) >= DEVIATION_LIMIT:
            failures.append(f"graph {trial}: equilibrium")
    criterion(not failures, ", ".join(failures[:5]))
    assert not failures


@pytest.mark.criterion(6, "pigeonhole candidate property on 500 random multisets, with and without truncation")
def test_pigeonhole_bruteforce(criterion):
    rng = np.random.default_rng(6)
    misses = 0
    for _ in range(500):
        n = int(rng.integers(1, 13))
        omega = int(rng.integers(1, 7))
        levels = sorted(int(v) for v in rng.integers(1, omega + 1, n))
        counts = Counter(levels)
        for K in range(1, n + 1):
            step = math.ceil(n / K)
            full = [j * step for j in range(1, K + 1)]
            literal = full[:-1] if step > n / K else full
            for positions in (full, literal, candidate_positions(n, K)):
                hit = {levels[p - 1] for p in positions if p <= n}
                misses += sum(1 for a, c in counts.items() if c >= step and a not in hit)
    criterion(misses == 0, f"{misses} misses")
    assert misses == 0


@pytest.mark.criterion(7, "50 random desk scenarios: all three algorithms return a true mode")
def test_oracle_equivalence(criterion):
    bad = []
    for trial in range(50):
        rng = np.random.default_rng(700 + trial)
        n = int(rng.integers(2, 11))
        omega = int(rng.integers(1, 6))
        labels = [int(v) for v in rng.integers(1, omega + 1, n)]
        tl, tab = build_network(n, random_connected_edges(n, 0.3, rng), labels, n_bar=10,
                                universe=list(range(1, omega + 1)))
        sc = Scenario(tl, tab, select_gains(10, omega, "desk"), RunSettings(seed=trial))
        _, best = oracle_mode(labels)
        for name, result in (("direct", run_algorithm1(sc)), ("apriori-K", run_algorithm2(sc, f_star=best)),
                             ("adaptive-K", run_algorithm3(sc))):
            if labels.count(result.mode) != best or result.failures:
                bad.append(f"trial {trial} {name}")
    criterion(not bad, ", ".join(bad[:5]))
    assert not bad


@pytest.mark.criterion(8, "plug-and-play: three spaced changes, post-change modes and admissible boxes")
@pytest.mark.parametrize("name", ["plug-and-play", "plug-and-play-combined"])
def test_plug_and_play(name, tmp_path, criterion):
    cfg = load_config(SCENARIOS / f"{name}.yaml")
    assert len(cfg.events) == 3 and cfg.gains.preset == "desk"
    summary = run(cfg, tmp_path)
    verdicts = {v.name: v for v in summary.verdicts}
    wanted = ["dwell-time", "segment-modes-match-oracle", "states-in-admissible-boxes", "locks-within-bounds"]
    ok = all(verdicts[w].passed for w in wanted) and summary.passed
    modes = [m for _, m in summary.result.segment_modes]
    criterion(ok, f"{name}: segment modes {modes}, " + ", ".join(f"{w}={verdicts[w].passed}" for w in wanted))
    assert ok


@pytest.mark.criterion(9, "state-variable budget table")
def test_state_budget(criterion):
    rows = {
        "K=2": (state_count("apriori-K", 2), 5),
        "K=5": (state_count("apriori-K", 5), 11),
        **{f"K*={k}": (state_count("adaptive-K", k), k * (k + 1) + 1) for k in range(1, 6)},
    }
    ok = all(got == want for got, want in rows.values())
    criterion(ok, ", ".join(f"{k}:{got}" for k, (got, _) in rows.items()))
    assert ok
