"""Eigen-analysis of the unmarked walk step and the predicted final search state.

Conventions
-----------
Momentum pairs ``(k, l)`` range over ``{0..n-1}^2`` with ``w = exp(2 pi i/n)``.
The eigenvectors are ``Phi(k, l) = xi_k (x) xi_l (x) v`` with ``xi_k`` on the
row axis ``y`` (the axis UP/DOWN move along) and ``xi_l`` on the column
axis ``x``; coin components are in the storage order ``(DOWN, UP, RIGHT, LEFT)``.
With this placement one step maps ``Phi+`` to ``exp(+i theta) Phi+`` and
``Phi-`` to ``exp(-i theta) Phi-``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from qwgrid.errors import DegeneratePairError, PoleError, ResourceLimitError, UsageError
from qwgrid.grid import GridGeometry, MarkedSet, Site, WalkState
from qwgrid.walk import grover_matrix, step

DENSE_MAX_N = 16
_DEGENERATE_TOL = 1e-12


def theta(geom: GridGeometry, k: int, l: int) -> float:
    """Eigenphase in ``[0, pi]`` with ``cos theta = (cos 2 pi k/n + cos 2 pi l/n) / 2``."""
    n = geom.n
    if k % n == 0 and l % n == 0:
        raise UsageError("(k, l) = (0, 0) carries eigenvalue 1 and has no eigenphase pair")
    c = 0.5 * (math.cos(2 * math.pi * k / n) + math.cos(2 * math.pi * l / n))
    return math.acos(max(-1.0, min(1.0, c)))


def theta_grid(geom: GridGeometry) -> np.ndarray:
    """All eigenphases as an ``(n, n)`` array ``[k, l]``; entry ``[0, 0]`` is 0."""
    n = geom.n
    c = np.cos(2 * np.pi * np.arange(n) / n)
    return np.arccos(np.clip(0.5 * (c[:, None] + c[None, :]), -1.0, 1.0))


def is_degenerate(theta_value: float) -> bool:
    return abs(math.sin(theta_value)) < _DEGENERATE_TOL


@dataclass(frozen=True)
class SpectralPair:
    k: int
    l: int
    theta: float
    v_plus: Optional[np.ndarray]
    v_minus: Optional[np.ndarray]

    @property
    def degenerate(self) -> bool:
        return self.v_plus is None


def coin_vectors(geom: GridGeometry, k: int, l: int) -> Tuple[np.ndarray, np.ndarray]:
    th = theta(geom, k, l)
    if is_degenerate(th):
        raise DegeneratePairError(f"sin(theta) = 0 for (k, l) = ({k}, {l}); coin vectors undefined")
    n = geom.n
    wk = np.exp(2j * np.pi * k / n)
    wl = np.exp(2j * np.pi * l / n)
    em, ep = np.exp(-1j * th), np.exp(1j * th)
    pref = 1j / (2 * math.sqrt(2) * math.sin(th))
    v_plus = pref * np.array([em - wk, em - 1 / wk, em - wl, em - 1 / wl])
    v_minus = pref * np.array([wk - ep, 1 / wk - ep, wl - ep, 1 / wl - ep])
    return v_plus, v_minus


def spectral_pair(geom: GridGeometry, k: int, l: int) -> SpectralPair:
    th = theta(geom, k, l)
    if is_degenerate(th):
        return SpectralPair(k, l, th, None, None)
    vp, vm = coin_vectors(geom, k, l)
    return SpectralPair(k, l, th, vp, vm)


def fourier_site_vector(n: int, k: int) -> np.ndarray:
    i = np.arange(n)
    return np.exp(2j * np.pi * ((k * i) % n) / n) / math.sqrt(n)


def eigenvector(geom: GridGeometry, k: int, l: int, sign: int) -> WalkState:
    """``Phi+`` (``sign=+1``) or ``Phi-`` (``sign=-1``) as a walk state."""
    if sign not in (1, -1):
        raise UsageError("sign must be +1 or -1")
    vp, vm = coin_vectors(geom, k, l)
    v = vp if sign > 0 else vm
    pos = np.outer(fourier_site_vector(geom.n, k), fourier_site_vector(geom.n, l))  # [y, x]
    return WalkState(geom, v[:, None, None] * pos[None, :, :])


def site_coin_product(geom: GridGeometry, k: int, l: int, coin: np.ndarray) -> WalkState:
    pos = np.outer(fourier_site_vector(geom.n, k), fourier_site_vector(geom.n, l))
    return WalkState(geom, np.asarray(coin)[:, None, None] * pos[None, :, :])


def psi0_coin() -> np.ndarray:
    return np.full(4, 0.5, dtype=np.complex128)


def ab_coefficients(theta_value: float, alpha: float) -> Tuple[complex, complex]:
    """Expansion coefficients of the final state on ``Phi+`` and ``Phi-``.

    ``a = 1 + (i/2) cot((alpha+theta)/2) + (i/2) cot((theta-alpha)/2)``,
    ``b = 1 + (i/2) cot((alpha-theta)/2) + (i/2) cot((-alpha-theta)/2)``.
    """
    if alpha < 0:
        raise UsageError("alpha must be >= 0")

    def cot(x):
        s = math.sin(x)
        if abs(s) < 1e-12:
            raise PoleError(f"cot argument {x!r} is at a pole")
        return math.cos(x) / s

    a = 1 + 0.5j * cot((alpha + theta_value) / 2) + 0.5j * cot((-alpha + theta_value) / 2)
    b = 1 + 0.5j * cot((alpha - theta_value) / 2) + 0.5j * cot((-alpha - theta_value) / 2)
    return a, b


def dense_step_operator(geom: GridGeometry, marked: MarkedSet = MarkedSet()) -> np.ndarray:
    """Explicit ``4N x 4N`` matrix of one walk step, columns in storage order.

    Built from index arithmetic alone (no call into the step kernel) so it can
    serve as an independent oracle.  Guarded to ``n <= 16``.
    """
    n = geom.n
    if n > DENSE_MAX_N:
        raise ResourceLimitError(f"dense operator limited to n <= {DENSE_MAX_N}, got n={n}")
    marked.validate(geom)
    N = geom.N
    dim = 4 * N

    def idx(d, x, y):
        return d * N + (y % n) * n + (x % n)

    coin = np.zeros((dim, dim))
    D = grover_matrix()
    for y in range(n):
        for x in range(n):
            block = -np.eye(4) if (x, y) in marked else D
            for d_out in range(4):
                for d_in in range(4):
                    coin[idx(d_out, x, y), idx(d_in, x, y)] = block[d_out, d_in]

    # shift: (DOWN=0, UP=1, RIGHT=2, LEFT=3)
    moves = {1: (0, 0, -1), 0: (1, 0, +1), 3: (2, -1, 0), 2: (3, +1, 0)}
    shift = np.zeros((dim, dim))
    for y in range(n):
        for x in range(n):
            for d_in, (d_out, dx, dy) in moves.items():
                shift[idx(d_out, x + dx, y + dy), idx(d_in, x, y)] = 1.0
    return (shift @ coin).astype(np.complex128)


@dataclass
class EigenCheck:
    n: int
    max_residual: float
    residuals: List[Dict]
    degenerate_pairs: List[Tuple[int, int]]
    max_phase_mismatch: Optional[float] = None
    unmatched_dense: Optional[int] = None
    plus_one_count: Optional[int] = None
    minus_one_count: Optional[int] = None
    completeness_ok: Optional[bool] = None

    def to_dict(self) -> Dict:
        return {
            "n": self.n,
            "max_residual": self.max_residual,
            "degenerate_pairs": [list(p) for p in self.degenerate_pairs],
            "max_phase_mismatch": self.max_phase_mismatch,
            "unmatched_dense": self.unmatched_dense,
            "plus_one_count": self.plus_one_count,
            "minus_one_count": self.minus_one_count,
            "completeness_ok": self.completeness_ok,
            "pairs": self.residuals,
        }


def verify_eigenpairs(geom: GridGeometry, dense: bool = True) -> EigenCheck:
    """Check ``U Phi+- = exp(+-i theta) Phi+-`` with the step kernel for every pair.

    With ``dense=True`` (``n <= 16``) the eigenvalue multiset of the explicit
    matrix is also matched against the closed form: every nondegenerate
    ``exp(+-i theta)`` must appear, and all remaining eigenvalues must be +-1.
    """
    n = geom.n
    residuals = []
    degenerate = []
    worst = 0.0
    formula_phases = []
    for k in range(n):
        for l in range(n):
            if k == 0 and l == 0:
                continue
            pair = spectral_pair(geom, k, l)
            if pair.degenerate:
                degenerate.append((k, l))
                continue
            entry = {"k": k, "l": l, "theta": pair.theta}
            for sign in (1, -1):
                phi = eigenvector(geom, k, l, sign)
                out = step(phi.copy())
                r = float(np.max(np.abs(out.amplitudes - np.exp(sign * 1j * pair.theta) * phi.amplitudes)))
                entry["plus" if sign > 0 else "minus"] = r
                worst = max(worst, r)
                formula_phases.append(sign * pair.theta)
            residuals.append(entry)

    check = EigenCheck(n=n, max_residual=worst, residuals=residuals, degenerate_pairs=degenerate)
    if dense:
        U = dense_step_operator(geom)
        ev = np.linalg.eigvals(U)
        remaining = list(ev)
        mismatch = 0.0
        for ph in sorted(formula_phases):
            target = np.exp(1j * ph)
            dists = np.abs(np.array(remaining) - target)
            i = int(np.argmin(dists))
            mismatch = max(mismatch, float(dists[i]))
            remaining.pop(i)
        # everything the pair formula does not cover (psi_start included) must be +-1
        remaining = np.array(remaining)
        plus = int(np.sum(np.abs(remaining - 1) < 1e-9))
        minus = int(np.sum(np.abs(remaining + 1) < 1e-9))
        check.max_phase_mismatch = mismatch
        check.unmatched_dense = remaining.size - plus - minus
        check.plus_one_count = plus
        check.minus_one_count = minus
        check.completeness_ok = (
            check.unmatched_dense == 0
            and plus >= 1
            and len(formula_phases) + plus + minus == 4 * geom.N
        )
    return check


@dataclass
class FinalStatePrediction:
    geometry: GridGeometry
    amplitudes: np.ndarray  # unnormalised, (4, n, n)
    marked_site: Site

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> WalkState:
        return WalkState(self.geometry, self.amplitudes / self.norm)


def predict_final_state(geom: GridGeometry, marked_site: Site = (0, 0), sign: int = -1) -> FinalStatePrediction:
    """Assemble ``psi_good + sign * sum_{k,l} i cot(theta/2) / sqrt(2N) (Phi+ - Phi-)``.

    The sum skips ``(0, 0)`` and degenerate pairs (where ``cot(theta/2) = 0``
    anyway).  ``sign=-1`` is the orientation that matches this shift with
    ``Phi+`` carrying ``exp(+i theta)``; ``sign=+1`` is the mirror-image
    assembly.  The state is built for a marked site at the origin and then
    translated cyclically.
    """
    if sign not in (1, -1):
        raise UsageError("sign must be +1 or -1")
    n, N = geom.n, geom.N
    if not geom.contains(marked_site):
        raise UsageError(f"marked site {marked_site} outside the grid")
    th = theta_grid(geom)
    k = np.arange(n)[:, None]
    l = np.arange(n)[None, :]
    skip = np.abs(np.sin(th)) < _DEGENERATE_TOL
    skip[0, 0] = True
    sin_safe = np.where(skip, 1.0, np.sin(th))
    wk = np.exp(2j * np.pi * k / n) * np.ones((1, n))
    wl = np.exp(2j * np.pi * l / n) * np.ones((n, 1))
    # (v+ - v-) = i/(2 sqrt2 sin) * [2 cos theta - 2 w^k, 2 cos theta - 2 w^-k, ...]
    pref = 1j / (2 * math.sqrt(2) * sin_safe)
    c2 = 2 * np.cos(th)
    diff = pref[None] * np.stack([c2 - 2 * wk, c2 - 2 / wk, c2 - 2 * wl, c2 - 2 / wl])
    coef = np.zeros((n, n), dtype=np.complex128)
    coef[~skip] = 1j / np.tan(th[~skip] / 2) / math.sqrt(2 * N)
    # amplitude at (y, x) = sum_{k,l} coef * diff * w^{k y + l x} / n
    amps = np.fft.ifft2(coef[None] * diff, axes=(1, 2)) * (N / n)
    amps *= sign
    amps[:, 0, 0] += 0.5
    amps = np.roll(amps, shift=(marked_site[1], marked_site[0]), axis=(1, 2))
    return FinalStatePrediction(geom, amps, marked_site)


def predict_final_state_by_sum(geom: GridGeometry, sign: int = -1) -> FinalStatePrediction:
    """Slow reference assembly from :func:`eigenvector` (marked site at the origin)."""
    N = geom.N
    amps = np.zeros(geom.shape, dtype=np.complex128)
    amps[:, 0, 0] = 0.5
    for k in range(geom.n):
        for l in range(geom.n):
            if k == 0 and l == 0:
                continue
            th = theta(geom, k, l)
            if is_degenerate(th):
                continue
            c = sign * 1j / math.tan(th / 2) / math.sqrt(2 * N)
            amps += c * (eigenvector(geom, k, l, 1).amplitudes - eigenvector(geom, k, l, -1).amplitudes)
    return FinalStatePrediction(geom, amps, (0, 0))


def up_plane_first_component(geom: GridGeometry, sign: int = -1) -> float:
    """Constant part of the predicted UP amplitude away from the marked site.

    Off the marked site the assembled UP plane is exactly
    ``-sign/(2N) + sign * (f(y-1, x) - f(y, x)) / N``.
    """
    return -sign / (2.0 * geom.N)


def compare_prediction(result, sign: int = -1) -> Dict:
    """Overlap and UP-plane correlation between a search result and the prediction."""
    geom = result.geometry
    if len(result.marked) != 1:
        raise UsageError("prediction comparison needs exactly one marked site")
    site = result.marked.sites[0]
    pred = predict_final_state(geom, site, sign)
    p = pred.normalized()
    ov = complex(np.vdot(p.amplitudes, result.final_state.amplitudes))
    up_sim = result.final_state.amplitudes[1].real
    up_pred = p.amplitudes[1].real
    mask = np.ones_like(up_sim, dtype=bool)
    mask[site[1], site[0]] = False
    corr = float(np.corrcoef(up_sim[mask], up_pred[mask])[0, 1])
    scale = float(np.dot(up_sim[mask], up_pred[mask]) / np.dot(up_pred[mask], up_pred[mask]))
    return {
        "n": geom.n,
        "t_star": result.t_star,
        "sign": sign,
        "overlap": abs(ov),
        "overlap_signed": ov.real,
        "prediction_norm": pred.norm,
        "prediction_norm_sq_over_lnN": pred.norm**2 / math.log(geom.N),
        "up_plane_correlation": corr,
        "fitted_scale": scale,
        "first_component": up_plane_first_component(geom, sign),
    }


def min_max_theta(geom: GridGeometry) -> Tuple[float, float]:
    th = theta_grid(geom)
    ok = np.abs(np.sin(th)) >= _DEGENERATE_TOL
    ok[0, 0] = False
    return float(th[ok].min()), float(th[ok].max())
