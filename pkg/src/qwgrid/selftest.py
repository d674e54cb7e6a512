"""Small-n oracle checks runnable without pytest (``qwgrid selftest``)."""

from __future__ import annotations

import math

import numpy as np

from qwgrid import analytic, spectral
from qwgrid.grid import GridGeometry, MarkedSet, random_state, uniform_state
from qwgrid.walk import run, shift, step


def _dense_equivalence():
    rng = np.random.default_rng(12345)
    worst = 0.0
    for n in (2, 4):
        geom = GridGeometry(n)
        for marked in (MarkedSet(), MarkedSet.of((0, 0)), MarkedSet.of((1, 0), (0, 1))):
            U = spectral.dense_step_operator(geom, marked)
            for _ in range(5):
                s = random_state(geom, rng)
                expect = (U @ s.amplitudes.ravel()).reshape(geom.shape)
                worst = max(worst, float(np.max(np.abs(step(s.copy(), marked).amplitudes - expect))))
    return worst < 1e-12, f"max |step - dense| = {worst:.3g}"


def _stationarity():
    geom = GridGeometry(8)
    s = run(uniform_state(geom), MarkedSet(), 200)
    dev = float(np.max(np.abs(s.amplitudes - uniform_state(geom).amplitudes)))
    return dev < 1e-9, f"max deviation after 200 unmarked steps = {dev:.3g}"


def _shift_involution():
    geom = GridGeometry(4)
    s = random_state(geom, np.random.default_rng(7))
    twice = shift(shift(s.copy()))
    return bool(np.array_equal(twice.amplitudes, s.amplitudes)), "shift o shift == identity"


def _eigen():
    check = spectral.verify_eigenpairs(GridGeometry(4))
    ok = check.max_residual < 1e-10 and check.max_phase_mismatch < 1e-9 and check.completeness_ok
    return ok, f"n=4 residual {check.max_residual:.3g}, phase mismatch {check.max_phase_mismatch:.3g}"


def _f_small():
    geom = GridGeometry(2)
    f00 = analytic.eval_f(geom, 0, 0)
    fp00 = analytic.eval_f_prime(geom, 0, 0)
    return math.isclose(f00, 1.25) and math.isclose(fp00, 2.5), f"f(0,0)={f00}, f'(0,0)={fp00} at n=2"


def _unitarity():
    geom = GridGeometry(8)
    s = run(uniform_state(geom), MarkedSet.of((3, 5)), 1000)
    drift = abs(s.norm() - 1.0)
    return drift < 1e-10, f"norm drift after 1000 marked steps = {drift:.3g}"


CHECKS = [
    ("dense-oracle equivalence", _dense_equivalence),
    ("stationarity", _stationarity),
    ("shift involution", _shift_involution),
    ("unitarity", _unitarity),
    ("eigenpairs", _eigen),
    ("lattice sums n=2", _f_small),
]


def run_selftest(verbose: bool = True) -> int:
    failed = 0
    for name, fn in CHECKS:
        ok, detail = fn()
        failed += not ok
        if verbose:
            print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    return 1 if failed else 0
