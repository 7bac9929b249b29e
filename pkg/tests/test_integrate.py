import numpy as np
import pytest

from modeconsensus.bounds import select_gains, time_bound_y
from modeconsensus.errors import LocalInitError, NumericalRefusal
from modeconsensus.integrate import (
    LockDetector, Trajectory, detect_lock, integrate_fixed_step, max_stable_dt, propagate_linear_exact,
    run_piecewise, sample_grid,
)
from modeconsensus.network import ScenarioEvent, apply_event, apply_events, build_path, build_ring
from modeconsensus.protocols import GainSet, build_system, equilibrium

MILD = GainSet(h_x=1.0, gamma_x=8.0, h_y=1.0, gamma_y=8.0, beta=0.25, g=4.0, gamma_z=60.0)


def _traj(values, times=None):
    values = np.asarray(values, dtype=float)
    times = np.arange(values.shape[0]) * 0.01 if times is None else np.asarray(times)
    states = values[:, :, None]
    return Trajectory(times, states, "size", ["x"], np.ones(values.shape[:2], bool))


def test_exact_at_zero_and_at_infinity(ring40):
    tl, tab = ring40
    g = select_gains(50, 10, "paper-exact", n=40)
    s = build_system("frequency", tl.last, tab, g, n_bar=50, attribute=4)
    y0 = np.random.default_rng(1).uniform(-0.5, 50.5, (50, 1))
    np.testing.assert_allclose(propagate_linear_exact(s, y0, 0.0), y0, atol=1e-12)
    far = propagate_linear_exact(s, y0, 10 * time_bound_y(50, 1e3))
    np.testing.assert_allclose(far[:40], equilibrium(s)[:40], atol=1e-9)
    np.testing.assert_array_equal(far[40:], y0[40:])


def test_exact_matches_small_step_on_c4():
    tl, tab = build_ring(4, [1, 2, 1, 1])
    s = build_system("frequency", tl.last, tab, MILD, n_bar=4, attribute=1)
    y0 = np.array([[0.2], [3.0], [-0.4], [1.7]])
    step = integrate_fixed_step(s, y0, 1e-7, 0.01, sample_every=0.01)
    np.testing.assert_allclose(step.final, propagate_linear_exact(s, y0, 0.01), atol=1e-5)


def test_chatter_budget_reference_values(ring40):
    tl, tab = ring40
    s = build_system("kth", tl.last, tab, select_gains(50, 10, "paper-exact"), n_bar=50, k=14)
    required = 0.25 / (2.5e4 * 2 + 10 * 51)
    assert required == pytest.approx(4.94951494753514e-6, rel=1e-12)
    assert max_stable_dt(s) <= required
    with pytest.raises(NumericalRefusal) as info:
        integrate_fixed_step(s, np.ones((50, 1)), 5e-6, 1e-4)
    assert info.value.required_dt == pytest.approx(required)


def test_orphan_only_network_is_constant():
    tl, tab = build_path(2, [1, 2], n_bar=3)
    s = build_system("kth", tl.last, tab, MILD, n_bar=3, k=1)
    y0 = np.array([[1.0], [2.0], [7.0]])
    traj = integrate_fixed_step(s, y0, max_stable_dt(s), 0.05)
    np.testing.assert_array_equal(traj.states[:, 2, 0], 7.0)


def test_kth_path_locks_to_oracle():
    tl, tab = build_path(4, [3, 1, 4, 2])
    s = build_system("kth", tl.last, tab, MILD, n_bar=4, k=2)
    y0 = np.array([[4.0], [1.0], [3.0], [0.6]])
    traj = integrate_fixed_step(s, y0, max_stable_dt(s), 30.0)
    lock = detect_lock(traj, 0.5, final=True)
    assert lock.locked and lock.value() == 2


def test_kth_early_stop_with_certificate():
    tl, tab = build_path(4, [3, 1, 4, 2])
    s = build_system("kth", tl.last, tab, MILD, n_bar=4, k=3)
    stop = LockDetector(0.2, certificate=lambda key: s.kth_certificate(key[0]))
    traj = integrate_fixed_step(s, np.full((4, 1), 1.0), max_stable_dt(s), 60.0, early_stop=stop)
    assert traj.stopped_early and traj.times[-1] < 60
    assert detect_lock(traj, 0.2, final=True).value() == 3


def test_kernel_matches_numpy_backend():
    tl, tab = build_ring(5, [1, 3, 2, 2, 3])
    rng = np.random.default_rng(4)
    for kind, kw in [("kth", {"k": 3}), ("combined", {"K": 2})]:
        s = build_system(kind, tl.last, tab, MILD, n_bar=5, **kw)
        y0 = rng.uniform(0.5, 4.5, (5, s.dim))
        dt = max_stable_dt(s)
        a = integrate_fixed_step(s, y0, dt, 200 * dt, backend="numba")
        b = integrate_fixed_step(s, y0, dt, 200 * dt, backend="numpy")
        np.testing.assert_allclose(a.final, b.final, atol=1e-9)


def test_detect_lock_basic_cases():
    const = _traj(np.full((20, 3), 4.0))
    rep = detect_lock(const, 0.05)
    assert rep.lock_time == 0.0 and list(rep.locked_values) == [4]
    alt = _traj([[1.0] * 3 if t % 2 else [2.0] * 3 for t in range(20)])
    assert detect_lock(alt, 0.05).lock_time is None
    split = _traj(np.tile([1.0, 1.0, 2.0], (20, 1)))
    assert not detect_lock(split, 0.05).locked


def test_detect_lock_final_ignores_plateaus():
    vals = [[3.0] * 2] * 10 + [[3.0, 5.0]] * 3 + [[4.0] * 2] * 10
    tr = _traj(vals)
    assert detect_lock(tr, 0.05).value() == 3
    rep = detect_lock(tr, 0.05, final=True)
    assert rep.value() == 4 and rep.lock_time == pytest.approx(0.13)


def test_frequency_lock_reference_ring(ring40):
    tl, tab = ring40
    g = select_gains(50, 10, "paper-exact", n=40)
    s = build_system("frequency", tl.last, tab, g, n_bar=50, attribute=4)
    y0 = np.random.default_rng(2).uniform(-0.5, 50.5, (50, 1))
    traj = run_piecewise(tl, [s], y0, 1.7)
    rep = detect_lock(traj, 0.05, final=True, bound=time_bound_y(50, 1e3))
    assert rep.value() == 16 and rep.within_bound


def test_sample_grid():
    grid = sample_grid(2.0, max_spacing=0.01)
    assert grid[0] == 0 and grid[-1] == 2.0
    assert np.all(np.diff(grid) > 0) and np.diff(grid).max() <= 0.01 + 1e-12


def test_piecewise_without_events_equals_single_segment():
    tl, tab = build_ring(5, [1, 2, 1, 2, 2])
    s = build_system("frequency", tl.last, tab, MILD, n_bar=5, attribute=2)
    y0 = np.linspace(0, 4, 5)[:, None]
    traj = run_piecewise(tl, [s], y0, 0.5)
    np.testing.assert_allclose(traj.states, propagate_linear_exact(s, y0, traj.times), atol=1e-12)


def test_join_keeps_other_states_continuous():
    tl, tab = build_ring(4, [1, 2, 1, 2], n_bar=5)
    ev = ScenarioEvent(0.3, "node-join", nodes=(5,), edges=((5, 1),), attribute=1, init=2.0, init_box=(-0.5, 5.5))
    tl, tab = apply_events(tl, tab, [ev])
    systems = [build_system("frequency", seg, tab, MILD, n_bar=5, attribute=1) for seg in tl.segments]
    y0 = np.array([[1.0], [0.0], [3.0], [2.0], [0.0]])
    traj = run_piecewise(tl, systems, y0, 0.6)
    t_ev, before = traj.event_states[0]
    first_after = traj.states[traj.times >= t_ev][0]
    np.testing.assert_allclose(first_after[:4], before[:4], atol=1e-12)
    assert first_after[4, 0] == 2.0


def test_join_without_init_is_refused():
    tl, tab = build_ring(4, [1, 2, 1, 2], n_bar=5)
    tl = apply_event(tl, ScenarioEvent(0.3, "node-join", nodes=(5,), edges=((5, 1),), attribute=1))
    tab = tab.apply_event(tl.events[0])
    systems = [build_system("size", seg, tab, MILD, n_bar=5) for seg in tl.segments]
    with pytest.raises(LocalInitError):
        run_piecewise(tl, systems, np.ones((5, 1)), 0.6)


def test_attribute_change_shifts_equilibrium_by_one():
    tl, tab = build_ring(5, [1, 2, 1, 2, 2])
    ev = ScenarioEvent(1.0, "attribute-change", nodes=(3,), attribute=2)
    tl, tab = apply_events(tl, tab, [ev])
    before, after = (equilibrium(build_system("frequency", seg, tab, MILD, n_bar=5, attribute=2))[0, 0]
                     for seg in tl.segments)
    assert after - before == pytest.approx(1.0, abs=1e-12)


def test_monotone_lock_in_window():
    tl, tab = build_ring(6, [1, 1, 2, 2, 2, 3])
    s = build_system("frequency", tl.last, tab, MILD, n_bar=6, attribute=2)
    traj = run_piecewise(tl, [s], np.zeros((6, 1)), 20.0)
    wide = detect_lock(traj, 0.5)
    narrow = detect_lock(traj, 0.1)
    assert narrow.lock_time <= wide.lock_time
