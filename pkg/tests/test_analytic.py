import math

import numpy as np
import pytest

from qwgrid import analytic
from qwgrid.errors import UsageError
from qwgrid.grid import GridGeometry, MarkedSet
from qwgrid.search import run_search


def test_f_hand_values_n2():
    g = GridGeometry(2)
    assert analytic.eval_f(g, 0, 0) == pytest.approx(5 / 4, abs=1e-15)
    assert analytic.eval_f_prime(g, 0, 0) == pytest.approx(5 / 2, abs=1e-15)


@pytest.mark.parametrize("n", [8, 64])
def test_complex_form_matches_real_form(n):
    geom = GridGeometry(n)
    rng = np.random.default_rng(n)
    for _ in range(10):
        j, jp = (int(v) for v in rng.integers(0, n, 2))
        real = analytic.eval_f(geom, j, jp)
        cplx = analytic.eval_f_complex(geom, j, jp)
        scale = abs(analytic.eval_f(geom, 0, 0))
        assert abs(cplx.real - real) <= 1e-6 * scale
        assert abs(cplx.imag) <= 1e-6 * scale


def test_periodicity_and_parity():
    geom = GridGeometry(16)
    for j, jp in [(1, 2), (5, 0), (7, 9)]:
        f = analytic.eval_f(geom, j, jp)
        assert analytic.eval_f(geom, j + 16, jp - 32) == pytest.approx(f, abs=1e-12)
        assert analytic.eval_f(geom, (-j) % 16, jp) == pytest.approx(f, abs=1e-9)
        fp = analytic.eval_f_prime(geom, j, jp)
        assert analytic.eval_f_prime(geom, (-j) % 16, jp) == pytest.approx(fp, abs=1e-9)


@pytest.mark.parametrize("kind", ["f", "fprime"])
@pytest.mark.parametrize("n", [2, 8, 32])
def test_table_matches_pointwise_and_fft(n, kind):
    geom = GridGeometry(n)
    t = analytic.f_table(geom, kind)
    point = analytic.eval_f if kind == "f" else analytic.eval_f_prime
    for j, jp in [(0, 0), (1, 0), (0, 1), (n - 1, n // 2)]:
        assert t(j, jp) == pytest.approx(point(geom, j, jp), abs=1e-9 * max(1, abs(t(0, 0))))
    fft = analytic.f_table_fft(geom, kind)
    assert np.allclose(fft.values, t.values, atol=1e-9 * np.abs(t.values).max())
    assert np.allclose(t.values, t.values.T, atol=1e-9 * np.abs(t.values).max())


def test_g_two_ways_and_telescoping():
    geom = GridGeometry(32)
    t = analytic.f_table(geom)
    g = t.g()
    assert g[1, 0] == pytest.approx(analytic.eval_g(geom, 1, 0), abs=1e-9)
    assert g[1, 0] == pytest.approx(t(1, 0) - t(0, 0), abs=1e-12)
    assert abs(g.sum()) < 1e-9 * np.abs(g).max()


def test_cache_round_trip(tmp_path):
    geom = GridGeometry(256)
    t = analytic.f_table(geom, cache_dir=tmp_path)
    path = tmp_path / "f_256.npz"
    assert path.exists()
    again = analytic.f_table(geom, cache_dir=tmp_path)
    assert np.array_equal(again.values, t.values)
    assert again.checksum() == t.checksum()


def test_cache_corruption_detected(tmp_path):
    t = analytic.FTable(4, np.arange(16.0).reshape(4, 4))
    path = tmp_path / "t.npz"
    t.save(path)
    with np.load(path) as d:
        parts = dict(d)
    parts["values"] = parts["values"].copy()
    parts["values"][0, 0] += 1e-12
    np.savez(path, **parts)
    with pytest.raises(ValueError, match="checksum"):
        analytic.FTable.load(path)


def test_small_tables_not_cached(tmp_path):
    analytic.f_table(GridGeometry(64), cache_dir=tmp_path)
    assert not list(tmp_path.iterdir())


@pytest.mark.parametrize("n", [16, 32, 64, 128, 256])
def test_f_vs_fprime_constant_observed(n):
    assert analytic.claim2_constant(GridGeometry(n)) <= 0.5


def test_cosine_sum_examples():
    assert analytic.proposition1_sum(2) == pytest.approx(-0.5, abs=1e-15)
    for n in (4, 16, 64, 256, 1024, 4096):
        s = analytic.proposition1_sum(n)
        assert math.log(n) - 2 * math.pi <= s <= math.log(n) + 1


def test_scaled_cosine_sum_reduces_at_eps_zero():
    for n in (16, 64, 256):
        assert analytic.proposition2_sum(n, 0.0) == pytest.approx(analytic.proposition1_sum(n), abs=1e-12)


def test_scaled_cosine_sum_bounded():
    errs = [analytic.proposition2_sum(n, 0.5) - 0.5 * math.log(n) for n in (64, 256, 1024)]
    assert max(abs(e) for e in errs) < 3
    for eps in (0.25, 0.75):
        assert abs(analytic.proposition2_sum(256, eps) - (1 - eps) * math.log(256)) < 3


def test_argument_validation():
    with pytest.raises(UsageError):
        analytic.claim3_error(64, 4, 0.0)
    with pytest.raises(UsageError):
        analytic.proposition2_sum(64, 1.0)
    with pytest.raises(UsageError):
        analytic.f_table(GridGeometry(4), kind="h")


def test_log_law_error_definition():
    n, j = 256, 16
    err = analytic.claim3_error(n, j, 1.0)
    fp = analytic.eval_f_prime(GridGeometry(n), j, j)
    assert err == pytest.approx(fp - math.pi / 2 * math.log(n / j))


def test_ampsum_positive():
    for n in (16, 64):
        assert analytic.ampsum_ratio(GridGeometry(n)) > 0


def test_up_amplitude_check_on_simulated_state():
    geom = GridGeometry(64)
    res = run_search(geom, MarkedSet.of((0, 0)))
    rep = analytic.lemma1_check(res.final_state, res.marked)
    assert rep.correlation >= 0.9
    assert rep.inequality_ratios["all"] >= 1.0
    with pytest.raises(UsageError):
        analytic.lemma1_check(res.final_state, MarkedSet.of((1, 0)))


@pytest.mark.parametrize("eps", [0.25, 0.5, 0.75])
@pytest.mark.parametrize("beta", [0.5, 1.0])
def test_fprime_log_growth_has_coefficient_2pi(eps, beta):
    # f' sums over the full momentum square, so the logarithm carries 2 pi, not pi/2
    errs = []
    for n in (256, 512, 1024):
        j = analytic.j_for_exponent(n, eps)
        fp = analytic.eval_f_prime(GridGeometry(n), j, int(round(j * beta)))
        errs.append(fp - 2 * math.pi * math.log(n / j))
    assert max(errs) - min(errs) < 1.0
