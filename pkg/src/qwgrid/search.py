"""Search pipeline: evolve, choose the stopping time, measure, post-process.

Also computes the distance-profile statistics (probability by torus-L1
distance from the marked site) and the neighbourhood probabilities used to
check that measurement lands close to the marked site with constant
probability.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from qwgrid.errors import UsageError
from qwgrid.grid import (
    Direction,
    GridGeometry,
    MarkedSet,
    Site,
    WalkState,
    as_sites,
    distance_map,
    fourth_root_radius,
    uniform_state,
)
from qwgrid.walk import step, t_max


@dataclass(frozen=True)
class Strategy:
    """Stopping-time rule.

    ``max-marked`` picks the step in ``[1, T_max]`` with the largest
    probability on the marked sites, ``min-overlap`` the step with the
    smallest ``|<psi(t)|psi(0)>|``, and ``fixed`` a given step.
    """

    kind: str = "max-marked"
    t: Optional[int] = None

    KINDS = ("max-marked", "min-overlap", "fixed")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise UsageError(f"unknown strategy {self.kind!r}; expected one of {self.KINDS}")
        if self.kind == "fixed" and (self.t is None or self.t < 0):
            raise UsageError("fixed strategy needs a step count t >= 0")

    @classmethod
    def max_marked(cls) -> "Strategy":
        return cls("max-marked")

    @classmethod
    def min_overlap(cls) -> "Strategy":
        return cls("min-overlap")

    @classmethod
    def fixed(cls, t: int) -> "Strategy":
        return cls("fixed", int(t))

    @classmethod
    def parse(cls, text: str) -> "Strategy":
        """``max-marked``, ``min-overlap`` or ``fixed:T``."""
        text = text.strip()
        if text.startswith("fixed"):
            _, _, t = text.partition(":")
            try:
                return cls.fixed(int(t))
            except ValueError:
                raise UsageError(f"bad fixed strategy {text!r}; use fixed:T") from None
        return cls(text)

    def __str__(self):
        return f"fixed:{self.t}" if self.kind == "fixed" else self.kind


@dataclass(frozen=True)
class RadiusRule:
    """Neighbourhood used for post-processing.

    ``fourth-root``: torus-L1 ball of radius ``ceil(N**(1/4))``.
    ``epsilon-box``: torus-Linf box of radius ``ceil(N**eps)``.
    ``step-count``: torus-L1 ball of radius ``ceil((N ln N)**(1/4))``, i.e.
    about ``sqrt(N log N)`` sites (informational only).
    """

    kind: str = "fourth-root"
    eps: Optional[float] = None

    KINDS = ("fourth-root", "epsilon-box", "step-count")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise UsageError(f"unknown radius rule {self.kind!r}; expected one of {self.KINDS}")
        if self.kind == "epsilon-box" and not (self.eps is not None and 0.0 < self.eps < 1.0):
            raise UsageError("epsilon-box needs 0 < eps < 1")

    @property
    def metric(self) -> str:
        return "linf" if self.kind == "epsilon-box" else "l1"

    def radius(self, geom: GridGeometry) -> int:
        if self.kind == "fourth-root":
            return fourth_root_radius(geom)
        if self.kind == "epsilon-box":
            return _ceil_guarded(geom.N ** self.eps)
        return _ceil_guarded((geom.N * math.log(geom.N)) ** 0.25)

    def __str__(self):
        return f"epsilon-box:{self.eps}" if self.kind == "epsilon-box" else self.kind


def _ceil_guarded(x: float) -> int:
    # N**0.5 etc. can land a hair above an exact integer
    r = round(x)
    return int(r) if abs(x - r) < 1e-9 else int(math.ceil(x))


@dataclass
class DistanceProfile:
    """Probability aggregated by torus-L1 distance from a centre (or a set of centres)."""

    radii: np.ndarray
    total_prob: np.ndarray
    site_count: np.ndarray

    @property
    def mean_prob(self) -> np.ndarray:
        return self.total_prob / self.site_count

    @property
    def pr0(self) -> float:
        return float(self.total_prob[0])

    def within(self, radius: int) -> float:
        return float(self.total_prob[: radius + 1].sum())

    def power_law_slope(self, r_lo: int, r_hi: int) -> float:
        """Least-squares slope of ``log mean_prob[R]`` against ``log R`` for ``R in [r_lo, r_hi]``."""
        r = np.arange(r_lo, r_hi + 1)
        slope, _ = np.polyfit(np.log(r), np.log(self.mean_prob[r]), 1)
        return float(slope)

    def rows(self) -> List[Tuple[int, float, int, float]]:
        mean = self.mean_prob
        return [
            (int(r), float(self.total_prob[i]), int(self.site_count[i]), float(mean[i]))
            for i, r in enumerate(self.radii)
        ]


def distance_profile(state: WalkState, center: Union[Site, MarkedSet, Iterable[Site]]) -> DistanceProfile:
    """Exact per-radius aggregation over all sites.

    With several centres the distance of a site is the minimum over them.
    """
    geom = state.geometry
    dist = _min_distance_map(geom, as_sites(center), "l1")
    probs = state.site_probabilities()
    counts = np.bincount(dist.ravel())
    total = np.bincount(dist.ravel(), weights=probs.ravel(), minlength=counts.size)
    return DistanceProfile(radii=np.arange(counts.size), total_prob=total, site_count=counts)


def _min_distance_map(geom: GridGeometry, centers: Sequence[Site], metric: str) -> np.ndarray:
    if not centers:
        raise UsageError("at least one centre is required")
    dist = distance_map(geom, centers[0], metric)
    for c in centers[1:]:
        dist = np.minimum(dist, distance_map(geom, c, metric))
    return dist


def neighborhood_probability(
    state: WalkState,
    center: Union[Site, MarkedSet, Iterable[Site]],
    radius: int,
    metric: str = "l1",
) -> float:
    """Probability mass on sites within ``radius`` (torus ``l1`` or ``linf``) of ``center``."""
    if radius < 0:
        raise UsageError(f"radius must be >= 0, got {radius}")
    dist = _min_distance_map(state.geometry, as_sites(center), metric)
    return float(state.site_probabilities()[dist <= radius].sum())


def uniform_neighborhood_baseline(geom: GridGeometry, radius: int) -> float:
    """``(2R^2 + 2R + 1) / N``: the uniform-state mass of an L1 ball."""
    return (2 * radius * radius + 2 * radius + 1) / geom.N


@dataclass
class SearchResult:
    geometry: GridGeometry
    marked: MarkedSet
    strategy: Strategy
    t_max: int
    t_star: int
    final_state: WalkState
    overlap_trace: np.ndarray
    marked_prob_trace: np.ndarray
    profile: DistanceProfile
    norm_drift: float = 0.0

    def neighborhood_probability(self, rule: RadiusRule = RadiusRule()) -> float:
        return neighborhood_probability(
            self.final_state, self.marked, rule.radius(self.geometry), rule.metric
        )

    def first_peak(self) -> int:
        return first_peak(self.marked_prob_trace)

    def to_dict(self) -> Dict:
        return {
            "n": self.geometry.n,
            "N": self.geometry.N,
            "marked": [list(s) for s in self.marked],
            "strategy": str(self.strategy),
            "t_max": self.t_max,
            "t_star": self.t_star,
            "pr0": self.profile.pr0,
            "norm_drift": self.norm_drift,
            "overlap_trace": [float(v) for v in self.overlap_trace],
            "marked_prob_trace": [float(v) for v in self.marked_prob_trace],
        }


def run_search(
    geom: GridGeometry,
    marked: MarkedSet,
    strategy: Union[Strategy, str] = Strategy(),
) -> SearchResult:
    """Evolve from the uniform state for ``T_max`` steps and keep the state at ``t_star``.

    Traces are indexed by step: ``trace[t]`` is the value after ``t`` steps,
    ``t = 0 .. T_max``.  Only the state at the chosen step is stored.
    """
    if isinstance(strategy, str):
        strategy = Strategy.parse(strategy)
    if len(marked) == 0:
        raise UsageError("search needs at least one marked site")
    marked.validate(geom)
    horizon = t_max(geom)
    if strategy.kind == "fixed" and strategy.t > horizon:
        raise UsageError(f"fixed step {strategy.t} exceeds T_max = {horizon}")

    ys, xs = marked.index_arrays()
    state = uniform_state(geom)
    amps_sum_scale = 1.0 / (2.0 * geom.n)

    overlap = np.empty(horizon + 1)
    marked_p = np.empty(horizon + 1)

    def record(t):
        a = state.amplitudes
        overlap[t] = abs(a.sum()) * amps_sum_scale
        v = a[:, ys, xs]
        marked_p[t] = np.sum(v.real * v.real + v.imag * v.imag)

    record(0)
    best_t = 0
    best_state = state.copy() if strategy.kind == "fixed" and strategy.t == 0 else None
    best_val = None
    for t in range(1, horizon + 1):
        step(state, marked)
        record(t)
        if strategy.kind == "max-marked":
            better = best_val is None or marked_p[t] > best_val
            val = marked_p[t]
        elif strategy.kind == "min-overlap":
            better = best_val is None or overlap[t] < best_val
            val = overlap[t]
        else:
            better = t == strategy.t
            val = None
        if better:
            best_t, best_val = t, val
            best_state = state.copy()

    final = best_state
    return SearchResult(
        geometry=geom,
        marked=marked,
        strategy=strategy,
        t_max=horizon,
        t_star=best_t,
        final_state=final,
        overlap_trace=overlap,
        marked_prob_trace=marked_p,
        profile=distance_profile(final, marked),
        norm_drift=abs(state.norm() - 1.0),
    )


def first_peak(trace: Sequence[float]) -> int:
    """Step of the first major maximum of a marked-probability trace.

    The trace rises to its first peak, falls and rises again with a period
    of roughly twice that peak time.  The first major peak is the maximum
    of the first excursion above 90% of the global maximum.
    """
    p = np.asarray(trace)
    top = p.max()
    start = int(np.argmax(p >= 0.9 * top))
    below = np.nonzero(p[start:] < 0.5 * top)[0]
    stop = start + int(below[0]) if below.size else p.size
    return start + int(np.argmax(p[start:stop]))


class MeasurementSampler:
    """Samples computational-basis outcomes from a fixed state.

    The cumulative distribution is built once in storage order ``(d, y, x)``;
    each draw consumes one uniform double from the supplied generator.
    """

    def __init__(self, state: WalkState):
        a = state.amplitudes
        self.geometry = state.geometry
        self._cdf = np.cumsum((a.real * a.real + a.imag * a.imag).ravel())

    def sample(self, rng: np.random.Generator) -> Tuple[Site, Direction]:
        u = rng.random() * self._cdf[-1]
        flat = int(np.searchsorted(self._cdf, u, side="right"))
        flat = min(flat, self._cdf.size - 1)
        n = self.geometry.n
        d, rem = divmod(flat, n * n)
        y, x = divmod(rem, n)
        return (x, y), Direction(d)

    def sample_many(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Flat storage indices of ``size`` draws."""
        u = rng.random(size) * self._cdf[-1]
        idx = np.searchsorted(self._cdf, u, side="right")
        return np.minimum(idx, self._cdf.size - 1)


def trial_rng(master_seed: int, trial_index: int) -> np.random.Generator:
    """PCG64 generator seeded by hashing ``(master_seed, trial_index)`` through SeedSequence."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(master_seed), int(trial_index)])))


def sample_measurement(state: WalkState, rng_seed: int) -> Tuple[Site, Direction]:
    return MeasurementSampler(state).sample(trial_rng(rng_seed, 0))


def _l1_ball_offsets(radius: int) -> List[Tuple[int, int]]:
    offsets = [(0, 0)]
    for r in range(1, radius + 1):
        for dx in range(-r, r + 1):
            dy = r - abs(dx)
            offsets.append((dx, dy))
            if dy:
                offsets.append((dx, -dy))
    return offsets


def classical_postprocess(
    outcome_site: Site, marked: MarkedSet, radius: int, geom: GridGeometry
) -> Tuple[bool, int]:
    """Check the torus-L1 ball around a measured site for a marked site.

    Sites are visited ring by ring outward from the outcome and the scan
    stops at the first marked site.  Returns ``(found, sites_checked)``;
    ``sites_checked <= 2R^2 + 2R + 1``.
    """
    if radius < 0:
        raise UsageError(f"radius must be >= 0, got {radius}")
    n = geom.n
    x0, y0 = outcome_site
    seen = set()
    for dx, dy in _l1_ball_offsets(radius):
        site = ((x0 + dx) % n, (y0 + dy) % n)
        if site in seen:
            continue
        seen.add(site)
        if site in marked:
            return True, len(seen)
    return False, len(seen)


@dataclass
class PostprocessTrial:
    trial: int
    site: Site
    direction: Direction
    distance: int
    found: bool
    sites_checked: int


def postprocess_trials(
    result: SearchResult,
    trials: int,
    rule: RadiusRule = RadiusRule(),
    master_seed: int = 0,
    trial_offset: int = 0,
) -> List[PostprocessTrial]:
    """Measure ``result.final_state`` ``trials`` times and post-process each outcome."""
    geom = result.geometry
    sampler = MeasurementSampler(result.final_state)
    radius = rule.radius(geom)
    dist = _min_distance_map(geom, result.marked.sites, "l1")
    out = []
    for i in range(trials):
        site, d = sampler.sample(trial_rng(master_seed, trial_offset + i))
        if rule.metric == "l1":
            found, checked = classical_postprocess(site, result.marked, radius, geom)
        else:
            found, checked = _box_postprocess(site, result.marked, radius, geom)
        out.append(PostprocessTrial(i, site, d, int(dist[site[1], site[0]]), found, checked))
    return out


def _box_postprocess(outcome_site: Site, marked: MarkedSet, radius: int, geom: GridGeometry):
    n = geom.n
    x0, y0 = outcome_site
    seen = set()
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            site = ((x0 + dx) % n, (y0 + dy) % n)
            if site in seen:
                continue
            seen.add(site)
            if site in marked:
                return True, len(seen)
    return False, len(seen)


@dataclass
class SweepRow:
    n: int
    t_star: int
    pr0: float
    nbhd_prob: float
    pr0_lnN: float
    success: Optional[float] = None
    radius: int = 0
    t_first_peak: int = 0
    extra: Dict = field(default_factory=dict)

    COLUMNS = ("n", "t_star", "pr0", "nbhd_prob", "pr0_lnN", "success")


def _sweep_one(args) -> SweepRow:
    n, rule, trials, master_seed, strategy, trial_offset = args
    geom = GridGeometry(n)
    marked = MarkedSet.of((0, 0))
    res = run_search(geom, marked, strategy)
    nb = res.neighborhood_probability(rule)
    success = None
    if trials > 0:
        done = postprocess_trials(res, trials, rule, master_seed, trial_offset)
        success = sum(t.found for t in done) / trials
    return SweepRow(
        n=n,
        t_star=res.t_star,
        pr0=res.profile.pr0,
        nbhd_prob=nb,
        pr0_lnN=res.profile.pr0 * math.log(geom.N),
        success=success,
        radius=rule.radius(geom),
        t_first_peak=res.first_peak(),
    )


def scaling_sweep(
    sizes: Sequence[int],
    radius_rule: RadiusRule = RadiusRule(),
    trials: int = 0,
    master_seed: int = 0,
    strategy: Strategy = Strategy(),
    workers: int = 1,
) -> List[SweepRow]:
    """One row per grid size, each from a single marked site at the origin.

    Sizes run as independent jobs (in a process pool when ``workers > 1``).
    Trial ``i`` of the ``k``-th size draws from ``trial_rng(master_seed, k*trials + i)``,
    so results do not depend on the worker count.
    """
    for n in sizes:
        if n < 8 or n % 2:
            raise UsageError(f"sweep sizes must be even and >= 8, got {n}")
    jobs = [(int(n), radius_rule, trials, master_seed, strategy, k * trials) for k, n in enumerate(sizes)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            return list(pool.map(_sweep_one, jobs))
    return [_sweep_one(j) for j in jobs]


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("QWGRID_WORKERS", "1")))
    except ValueError:
        return 1
