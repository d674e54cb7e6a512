import numpy as np
import pytest

from qwgrid.grid import Direction, GridGeometry, MarkedSet, basis_state, random_state, uniform_state
from qwgrid.spectral import dense_step_operator
from qwgrid.walk import (
    MarkedProbabilityTrace,
    NormTrace,
    OverlapTrace,
    grover_coin,
    grover_matrix,
    run,
    shift,
    step,
    t_max,
)


@pytest.mark.parametrize(
    "v,expected",
    [
        ([0.5, 0.5, 0.5, 0.5], [0.5, 0.5, 0.5, 0.5]),
        ([1, 0, 0, 0], [-0.5, 0.5, 0.5, 0.5]),
        ([0.5, -0.5, 0.5, -0.5], [-0.5, 0.5, -0.5, 0.5]),
    ],
)
def test_grover_coin_examples(v, expected):
    assert np.allclose(grover_coin(v), expected, atol=1e-15)


def test_grover_matrix_is_unitary_reflection():
    D = grover_matrix()
    assert np.allclose(D @ D, np.eye(4))
    assert np.allclose(D, D.T)


def test_basis_step_example():
    geom = GridGeometry(8)
    s = step(basis_state(geom, (2, 3), Direction.UP))
    # UP component moves to y-1 and arrives as DOWN
    assert s.amplitude(2, 2, Direction.DOWN) == pytest.approx(-0.5)
    assert s.amplitude(2, 4, Direction.UP) == pytest.approx(0.5)
    assert s.amplitude(3, 3, Direction.LEFT) == pytest.approx(0.5)
    assert s.amplitude(1, 3, Direction.RIGHT) == pytest.approx(0.5)
    assert np.count_nonzero(s.amplitudes) == 4


def test_shift_twice_is_identity():
    geom = GridGeometry(6)
    s = random_state(geom, np.random.default_rng(1))
    ref = s.amplitudes.copy()
    shift(shift(s))
    assert np.array_equal(s.amplitudes, ref)
    s2 = step(step(s.copy(), coin=False), coin=False)
    assert np.array_equal(s2.amplitudes, ref)


def test_step_is_linear():
    geom = GridGeometry(8)
    rng = np.random.default_rng(2)
    a, b = random_state(geom, rng), random_state(geom, rng)
    m = MarkedSet.of((1, 5))
    combo = a.copy()
    combo.amplitudes = 0.3 * a.amplitudes - 1.7j * b.amplitudes
    lhs = step(combo, m).amplitudes
    rhs = 0.3 * step(a.copy(), m).amplitudes - 1.7j * step(b.copy(), m).amplitudes
    assert np.allclose(lhs, rhs, atol=1e-14)


@pytest.mark.parametrize("n", [2, 4])
def test_dense_oracle_agreement(n):
    geom = GridGeometry(n)
    rng = np.random.default_rng(n)
    for marked in (MarkedSet(), MarkedSet.of((0, 0)), MarkedSet.of((1, 1), (0, 1))):
        U = dense_step_operator(geom, marked)
        for _ in range(5):
            s = random_state(geom, rng)
            expected = (U @ s.amplitudes.ravel()).reshape(geom.shape)
            assert np.max(np.abs(step(s, marked).amplitudes - expected)) < 1e-12


def test_run_t0_returns_copy():
    geom = GridGeometry(4)
    s = random_state(geom, np.random.default_rng(3))
    out = run(s, MarkedSet.of((0, 0)), 0)
    assert out is not s
    assert np.array_equal(out.amplitudes, s.amplitudes)


def test_run_rejects_negative_t():
    with pytest.raises(ValueError):
        run(uniform_state(GridGeometry(4)), MarkedSet(), -1)


def test_stationarity_small():
    geom = GridGeometry(8)
    s = run(uniform_state(geom), MarkedSet(), 57)
    assert np.max(np.abs(s.amplitudes - uniform_state(geom).amplitudes)) < 1e-9


def test_per_step_unitarity():
    geom = GridGeometry(8)
    s = random_state(geom, np.random.default_rng(4))
    m = MarkedSet.of((2, 2), (5, 1))
    for _ in range(50):
        before = s.norm()
        step(s, m)
        assert abs(s.norm() - before) < 1e-12


def test_observers_see_each_step():
    geom = GridGeometry(16)
    m = MarkedSet.of((0, 0))
    ov, mp, nt = OverlapTrace(), MarkedProbabilityTrace(m), NormTrace()
    T = t_max(geom)
    run(uniform_state(geom), m, T, [ov, mp, nt])
    assert len(ov.values) == len(mp.values) == len(nt.values) == T
    # the overlap with the start state dips well below 1 during the search
    assert min(ov.values) < 0.5
    assert max(abs(v - 1) for v in nt.values) < 1e-12


def test_t_max_formula():
    assert t_max(GridGeometry(64)) == 370
    assert t_max(GridGeometry(128)) == 798
