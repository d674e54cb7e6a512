import math

import numpy as np
import pytest

from qwgrid.errors import UsageError
from qwgrid.grid import Direction, GridGeometry, MarkedSet, basis_state, torus_l1_distance, uniform_state
from qwgrid.search import (
    MeasurementSampler,
    RadiusRule,
    Strategy,
    classical_postprocess,
    distance_profile,
    first_peak,
    neighborhood_probability,
    postprocess_trials,
    run_search,
    sample_measurement,
    scaling_sweep,
    trial_rng,
    uniform_neighborhood_baseline,
)


@pytest.fixture(scope="module")
def search16():
    return run_search(GridGeometry(16), MarkedSet.of((0, 0)))


def test_strategy_parsing():
    assert Strategy.parse("fixed:12") == Strategy("fixed", 12)
    assert str(Strategy.parse("min-overlap")) == "min-overlap"
    for bad in ("fixed", "fixed:-1", "random"):
        with pytest.raises(UsageError):
            Strategy.parse(bad)


def test_radius_rules():
    g = GridGeometry(64)
    assert RadiusRule().radius(g) == 8
    assert RadiusRule("epsilon-box", 0.25).radius(g) == 8
    assert RadiusRule("epsilon-box", 0.5).radius(g) == 64
    assert RadiusRule("step-count").radius(g) == math.ceil((g.N * math.log(g.N)) ** 0.25)
    assert RadiusRule("epsilon-box", 0.3).metric == "linf"
    with pytest.raises(UsageError):
        RadiusRule("epsilon-box")


def test_uniform_profile():
    geom = GridGeometry(8)
    prof = distance_profile(uniform_state(geom), (0, 0))
    for r in (1, 2, 3):
        assert prof.total_prob[r] == pytest.approx(4 * r / 64)
    assert abs(prof.total_prob.sum() - 1) < 1e-9
    assert prof.site_count.sum() == geom.N


def test_neighborhood_probability_edges():
    geom = GridGeometry(8)
    s = uniform_state(geom)
    s.amplitudes[:, 3, 2] *= 3
    s.amplitudes /= s.norm()
    assert neighborhood_probability(s, (2, 3), 8) == pytest.approx(1, abs=1e-9)
    assert neighborhood_probability(s, (2, 3), 8, "linf") == pytest.approx(1, abs=1e-9)
    p0 = float(np.sum(np.abs(s.amplitudes[:, 3, 2]) ** 2))
    assert neighborhood_probability(s, (2, 3), 0) == pytest.approx(p0)


def test_uniform_baseline_small():
    geom = GridGeometry(1024)
    b = uniform_neighborhood_baseline(geom, 32)
    assert b == pytest.approx((2 * 32 * 32 + 2 * 32 + 1) / geom.N)


def test_fixed_zero_returns_start(search16):
    geom = GridGeometry(16)
    res = run_search(geom, MarkedSet.of((0, 0)), Strategy.fixed(0))
    assert res.t_star == 0
    assert np.array_equal(res.final_state.amplitudes, uniform_state(geom).amplitudes)
    assert res.profile.pr0 == pytest.approx(1 / geom.N)


def test_fixed_beyond_horizon_rejected():
    with pytest.raises(UsageError):
        run_search(GridGeometry(8), MarkedSet.of((0, 0)), Strategy.fixed(10**6))


def test_search_needs_marked_site():
    with pytest.raises(UsageError):
        run_search(GridGeometry(8), MarkedSet())


def test_search_traces_consistent(search16):
    r = search16
    assert len(r.marked_prob_trace) == r.t_max + 1
    assert r.marked_prob_trace[r.t_star] == pytest.approx(r.profile.pr0, rel=1e-12)
    assert r.marked_prob_trace[r.t_star] == r.marked_prob_trace.max()
    assert r.profile.pr0 > 20 / r.geometry.N
    assert abs(r.profile.total_prob.sum() - 1) < 1e-9
    assert r.norm_drift < 1e-10


def test_min_overlap_strategy():
    r = run_search(GridGeometry(16), MarkedSet.of((3, 4)), "min-overlap")
    assert r.overlap_trace[r.t_star] == r.overlap_trace[1:].min()
    assert r.overlap_trace[r.t_star] < 0.5


def test_translation_invariance():
    g = GridGeometry(16)
    a = run_search(g, MarkedSet.of((0, 0)))
    b = run_search(g, MarkedSet.of((5, 9)))
    assert a.t_star == b.t_star
    shifted = np.roll(a.final_state.amplitudes, (9, 5), axis=(1, 2))
    assert np.allclose(shifted, b.final_state.amplitudes, atol=1e-12)


def test_first_peak_simple():
    t = np.linspace(0, 3 * np.pi, 301)
    trace = np.sin(t) ** 2 * (1 + 0.01 * t)
    # the later peak is higher but the first excursion above 90% is the first hump
    assert first_peak(trace) == pytest.approx(50, abs=2)


def test_sampler_basis_state():
    geom = GridGeometry(8)
    s = basis_state(geom, (3, 5), Direction.LEFT)
    for seed in range(20):
        assert sample_measurement(s, seed) == ((3, 5), Direction.LEFT)


def test_sampler_uniform_three_sigma():
    geom = GridGeometry(4)
    sampler = MeasurementSampler(uniform_state(geom))
    n = 100_000
    idx = sampler.sample_many(trial_rng(7, 0), n)
    sites = idx % geom.N
    counts = np.bincount(sites, minlength=geom.N)
    p = 1 / geom.N
    sigma = math.sqrt(n * p * (1 - p))
    assert np.all(np.abs(counts - n * p) < 3.5 * sigma)


def test_trial_rng_is_reproducible():
    a = trial_rng(5, 17).random(4)
    b = trial_rng(5, 17).random(4)
    c = trial_rng(5, 18).random(4)
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_postprocess_examples():
    geom = GridGeometry(32)
    m = MarkedSet.of((0, 0))
    assert classical_postprocess((0, 0), m, 0, geom) == (True, 1)
    assert classical_postprocess((3, 2), m, 4, geom) == (False, 41)


def test_postprocess_matches_brute_force():
    geom = GridGeometry(12)
    rng = np.random.default_rng(11)
    for _ in range(200):
        m = MarkedSet.of(*{(int(rng.integers(12)), int(rng.integers(12))) for _ in range(2)})
        outcome = (int(rng.integers(12)), int(rng.integers(12)))
        radius = int(rng.integers(0, 7))
        found, checked = classical_postprocess(outcome, m, radius, geom)
        truth = any(torus_l1_distance(outcome, s, geom) <= radius for s in m)
        assert found == truth
        assert checked <= 2 * radius * radius + 2 * radius + 1


def test_postprocess_count_formula_large():
    geom = GridGeometry(1024)
    found, checked = classical_postprocess((500, 500), MarkedSet.of((0, 0)), 32, geom)
    assert not found and checked == 2113


def test_postprocess_trials_deterministic(search16):
    a = postprocess_trials(search16, 30, master_seed=3)
    b = postprocess_trials(search16, 30, master_seed=3)
    assert a == b
    for t in a:
        assert t.found == (t.distance <= RadiusRule().radius(search16.geometry))


def test_sweep_without_trials_has_no_success():
    rows = scaling_sweep([8, 16], trials=0)
    assert [r.n for r in rows] == [8, 16]
    assert all(r.success is None for r in rows)


def test_sweep_worker_count_does_not_change_results():
    a = scaling_sweep([8, 16, 24], trials=20, master_seed=4, workers=1)
    b = scaling_sweep([8, 16, 24], trials=20, master_seed=4, workers=2)
    assert [(r.t_star, r.pr0, r.success) for r in a] == [(r.t_star, r.pr0, r.success) for r in b]


def test_sweep_rejects_small_sizes():
    with pytest.raises(UsageError):
        scaling_sweep([4])
