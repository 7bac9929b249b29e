import numpy as np
import pytest

from modeconsensus.bounds import select_gains
from modeconsensus.errors import GainViolation, UnknownAttributeError
from modeconsensus.network import ScenarioEvent, apply_event, build_path, build_ring
from modeconsensus.protocols import (
    GainSet, boxes, build_system, combined_estimate, combined_rhs, equilibrium, indicator, phi_k, rnd,
)

GAINS = GainSet(h_x=1.0, gamma_x=8.0, h_y=1.0, gamma_y=8.0, beta=0.1, g=10.0, gamma_z=100.0)


def test_indicator(ring40):
    _, tab = ring40
    assert indicator(4, 4) == 1
    assert indicator(4, 7) == 0
    assert sum(indicator(4, tab.label_at(i)) for i in range(1, 41)) == 16
    with pytest.raises(UnknownAttributeError):
        indicator(11, 4, tab)


def test_phi_branches():
    assert phi_k(5.0, 5, 40, 14, 0.02, 10) == 0.0
    assert phi_k(2.0, 5, 40, 14, 0.02, 10) == pytest.approx(-140.06)
    assert phi_k(9.0, 5, 40, 28, 0.02, 10) == pytest.approx(130.08)


def test_phi_jump_size():
    eps = 1e-9
    lo = phi_k(3 - eps, 3, 10, 4, 0.1, 2.0)
    hi = phi_k(3 + eps, 3, 10, 4, 0.1, 2.0)
    assert hi - lo == pytest.approx(2.0 * 11, abs=1e-6)


def test_rounding_is_half_up():
    np.testing.assert_array_equal(rnd(np.array([0.5, 1.5, 2.49, -0.5, -0.51])), [1, 2, 2, 0, -1])


def test_boxes():
    assert boxes(50) == {"x": (0.5, 50.5), "y": (-0.5, 50.5), "z": (0.5, 50.5)}


def test_size_system(ring40):
    tl, tab = ring40
    s = build_system("size", tl.last, tab, GAINS, n_bar=50)
    np.testing.assert_array_equal(s.b, np.ones((40, 1)))
    M = s.coupling_matrix
    assert M[0, 0] == pytest.approx(GAINS.gamma_x * 2 + 1)
    assert M[1, 1] == pytest.approx(GAINS.gamma_x * 2)
    np.testing.assert_allclose(s.drift, -GAINS.h_x * M)


def test_frequency_without_holders_has_zero_equilibrium():
    tl, tab = build_ring(4, [1, 1, 2, 2], universe=[1, 2, 3])
    s = build_system("frequency", tl.last, tab, GAINS, n_bar=4, attribute=3)
    np.testing.assert_array_equal(s.b, 0)
    np.testing.assert_allclose(equilibrium(s), 0, atol=1e-15)


def test_counter_input_is_unit_vector(ring40):
    tl, tab = ring40
    s = build_system("counter", tl.last, tab, GAINS, n_bar=50)
    assert s.b.shape == (40, 10)
    np.testing.assert_array_equal(s.b.sum(1), 1)
    for i in range(1, 41):
        assert s.b[i - 1, tab.level(tab.label_at(i)) - 1] == 1


def test_frequency_equilibrium_reference_ring(ring40):
    tl, tab = ring40
    g = select_gains(50, 10, "paper-exact", n=40)
    s = build_system("frequency", tl.last, tab, g, n_bar=50, attribute=4)
    y = equilibrium(s)
    assert y[0, 0] == pytest.approx(16, abs=1e-9)
    assert np.all(np.isnan(y[40:]))
    assert np.all(rnd(y[:40, 0]) == 16)


def test_two_node_equilibrium():
    tl, tab = build_path(2, [1, 1])
    s = build_system("frequency", tl.last, tab, GAINS, n_bar=2, attribute=1)
    y = equilibrium(s)[:, 0]
    # (8L + e1 e1^T) y = (1, 1) solved by hand: y1 = 2, y2 = 17/8
    np.testing.assert_allclose(y, [2.0, 2.125], atol=1e-12)
    assert abs(y[1] - y[0]) <= np.sqrt(2) * 8 / (4 * 8)


def test_orphan_derivative_is_zero():
    tl, tab = build_ring(5, [1, 2, 1, 2, 1], n_bar=6)
    tl = apply_event(tl, ScenarioEvent(1.0, "edge-remove", edges=((2, 3), (3, 4))))
    rng = np.random.default_rng(0)
    for kind, kw in [("size", {}), ("frequency", {"attribute": 1}), ("counter", {}), ("kth", {"k": 2}),
                     ("combined", {"K": 2})]:
        s = build_system(kind, tl.last, tab, GAINS, n_bar=6, **kw)
        f = s.rhs(rng.uniform(0, 5, (6, s.dim)))
        np.testing.assert_array_equal(f[2], 0)
        np.testing.assert_array_equal(f[5], 0)


def test_kth_rhs_matches_definition():
    tl, tab = build_path(3, [1, 2, 3])
    s = build_system("kth", tl.last, tab, GAINS, n_bar=3, k=2)
    z = np.array([[1.5], [2.0], [0.7]])
    f = s.rhs(z)[:, 0]
    exp0 = -phi_k(1.5, 1, 3, 2, 0.1, 10.0) + 100 * np.sign(2.0 - 1.5)
    exp1 = -phi_k(2.0, 2, 3, 2, 0.1, 10.0) + 100 * (np.sign(1.5 - 2.0) + np.sign(0.7 - 2.0))
    exp2 = -phi_k(0.7, 3, 3, 2, 0.1, 10.0) + 100 * np.sign(2.0 - 0.7)
    np.testing.assert_allclose(f, [exp0, exp1, exp2])


def test_combined_drift_vanishes_at_targets():
    # path 1-2-3-4 with levels [1,2,2,3]; K=2 -> positions 2 and 4 -> values 2 and 3
    tl, tab = build_path(4, [1, 2, 2, 3])
    s = build_system("combined", tl.last, tab, GAINS, n_bar=4, K=2)
    x = np.full(4, 4.0)
    Z = np.tile([2.0, 3.0], (4, 1))
    Y = np.tile([2.0, 1.0], (4, 1))
    dx, dZ, dY, mhat = combined_rhs(x, Z, Y, s.adjacency, s.levels[s.slots], s.leader_vec, GAINS, 2, 4)
    # agents sitting on their own level have phi = 0 and equal neighbours give sgn(0) = 0
    assert dZ[1, 0] == 0 and dZ[2, 0] == 0 and dZ[3, 1] == 0
    np.testing.assert_array_equal(mhat, [2, 2, 2, 2])


def test_combined_indicator_and_leader_damping():
    tl, tab = build_path(2, [1, 2])
    s = build_system("combined", tl.last, tab, GAINS, n_bar=2, K=1)
    x = np.array([2.0, 2.0])
    Z = np.array([[2.2], [2.2]])
    Y = np.zeros((2, 1))
    dx, _, dY, _ = combined_rhs(x, Z, Y, s.adjacency, s.levels[s.slots], s.leader_vec, GAINS, 1, 2)
    np.testing.assert_allclose(dx, [GAINS.h_x * (-2 + 1), GAINS.h_x * 1])
    np.testing.assert_allclose(dY[:, 0], [0, GAINS.h_y])


def test_combined_truncates_to_k_minus_one_slots():
    tl, tab = build_path(3, [1, 2, 3])
    s = build_system("combined", tl.last, tab, GAINS, n_bar=3, K=2)
    state = np.zeros((3, 5))
    state[:, 0] = 3.0  # ceil(3/2)=2 > 3/2: only one live slot
    state[:, 1:3] = [1.0, 1.0]
    f = s.rhs(state)
    np.testing.assert_array_equal(f[:, 2], 0)
    np.testing.assert_array_equal(f[:, 4], 0)


def test_strict_mode_raises():
    tl, tab = build_ring(4, [1, 2, 1, 2])
    with pytest.raises(GainViolation):
        build_system("size", tl.last, tab, GAINS, n_bar=4, strict=True)
    build_system("kth", tl.last, tab, select_gains(4, 2, "paper-strict"), n_bar=4, k=2, strict=True)


def test_kth_k_range():
    tl, tab = build_ring(4, [1, 2, 1, 2])
    with pytest.raises(ValueError):
        build_system("kth", tl.last, tab, GAINS, n_bar=4, k=5)


def test_combined_estimate_resolves_rounded_ties():
    Z = np.array([[1.0, 2.0, 4.0], [1.0, 2.0, 4.0]])
    Y = np.array([[3.002, 2.999, 2.0], [2.998, 3.001, 2.0]])
    mask = np.ones_like(Y, dtype=bool)
    np.testing.assert_array_equal(combined_estimate(Z, Y, mask), [1, 1])
    np.testing.assert_array_equal(combined_estimate(Z, Y, mask, "highest-index"), [2, 2])
    mask[:, 0] = False
    np.testing.assert_array_equal(combined_estimate(Z, Y, mask), [2, 2])
