"""Lattice sums f, f', g over momentum space and checks of their asymptotics.

Index sets: ``S`` is ``{0..n-1}^2`` minus the origin; ``S'`` is
``{-n/2 .. n/2-1}^2`` minus the origin.  Both give the same real ``f``
because the summand is ``n``-periodic in ``k`` and ``l``.

Coordinates: the first argument ``j`` of ``f(j, j')`` runs along the axis
the UP/DOWN coin directions move on, i.e. the row ``y`` of a
:class:`~qwgrid.grid.WalkState`; ``j'`` is the column ``x``.  Tables are
therefore indexed ``values[y, x]`` exactly like a coin plane.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Union

import numpy as np

from qwgrid.errors import UsageError
from qwgrid.grid import GridGeometry, MarkedSet, WalkState, distance_map


def _momenta(n: int) -> np.ndarray:
    return np.arange(-(n // 2), n // 2)


def _weights(n: int, kind: str) -> np.ndarray:
    """Summand denominators' reciprocals on ``S'`` (origin weight set to 0)."""
    k = _momenta(n)
    K, L = np.meshgrid(k, k, indexing="ij")
    if kind == "f":
        den = 2.0 - np.cos(2 * np.pi * K / n) - np.cos(2 * np.pi * L / n)
    elif kind == "fprime":
        den = (K * K + L * L).astype(float)
    else:
        raise UsageError(f"unknown table kind {kind!r}")
    w = np.zeros_like(den)
    nz = (K != 0) | (L != 0)
    w[nz] = 1.0 / den[nz]
    return w


def eval_f(geom: GridGeometry, j: int, jp: int) -> float:
    """Real cosine form of f over ``S'``, summed directly (O(N))."""
    n = geom.n
    k = _momenta(n)
    K, L = np.meshgrid(k, k, indexing="ij")
    phase = 2 * np.pi * ((K * j + L * jp) % n) / n
    return float(np.sum(np.cos(phase) * _weights(n, "f")))


def eval_f_complex(geom: GridGeometry, j: int, jp: int) -> complex:
    """f summed over ``S`` with complex ``w**(kj + lj')``; the imaginary part should cancel."""
    n = geom.n
    k = np.arange(n)
    K, L = np.meshgrid(k, k, indexing="ij")
    den = 2.0 - np.cos(2 * np.pi * K / n) - np.cos(2 * np.pi * L / n)
    den[0, 0] = np.inf
    w = np.exp(2j * np.pi * ((K * j + L * jp) % n) / n)
    return complex(np.sum(w / den))


def eval_f_prime(geom: GridGeometry, j: int, jp: int) -> float:
    n = geom.n
    k = _momenta(n)
    K, L = np.meshgrid(k, k, indexing="ij")
    phase = 2 * np.pi * ((K * j + L * jp) % n) / n
    return float(np.sum(np.cos(phase) * _weights(n, "fprime")))


def eval_g(geom: GridGeometry, j: int, jp: int) -> float:
    return eval_f(geom, j, jp) - eval_f(geom, (j - 1) % geom.n, jp)


@dataclass
class FTable:
    """Full ``n x n`` table of f (or f') with ``values[j, j'] = f(j, j')``."""

    n: int
    values: np.ndarray
    kind: str = "f"

    def __call__(self, j: int, jp: int) -> float:
        return float(self.values[j % self.n, jp % self.n])

    def g(self) -> np.ndarray:
        """``g[j, j'] = f(j, j') - f(j-1, j')`` with periodic ``j``."""
        return self.values - np.roll(self.values, 1, axis=0)

    def checksum(self) -> str:
        return _checksum(self.n, self.kind, self.values)

    def save(self, path: Union[str, Path]) -> None:
        """Write the cache file (see README, "FTable cache format")."""
        np.savez(
            path,
            format=np.array("qwgrid.ftable/1"),
            n=np.array(self.n, dtype=np.int64),
            kind=np.array(self.kind),
            values=np.ascontiguousarray(self.values, dtype="<f8"),
            sha256=np.array(self.checksum()),
        )

    @classmethod
    def load(cls, path: Union[str, Path]) -> "FTable":
        with np.load(path, allow_pickle=False) as data:
            if str(data["format"]) != "qwgrid.ftable/1":
                raise ValueError(f"{path}: not an FTable cache file")
            n = int(data["n"])
            kind = str(data["kind"])
            values = np.array(data["values"], dtype=np.float64)
            stored = str(data["sha256"])
        if values.shape != (n, n):
            raise ValueError(f"{path}: table shape {values.shape} does not match n={n}")
        if _checksum(n, kind, values) != stored:
            raise ValueError(f"{path}: checksum mismatch, cache file is corrupt")
        return cls(n, values, kind)


def _checksum(n: int, kind: str, values: np.ndarray) -> str:
    h = hashlib.sha256()
    h.update(f"{kind}:{n}:".encode())
    h.update(np.ascontiguousarray(values, dtype="<f8").tobytes())
    return h.hexdigest()


def _separable_table(n: int, kind: str) -> np.ndarray:
    # cos(a+b) = cos a cos b - sin a sin b turns the double sum into two matrix products
    k = _momenta(n)
    j = np.arange(n)
    arg = 2 * np.pi * (np.outer(k, j) % n) / n
    c, s = np.cos(arg), np.sin(arg)
    w = _weights(n, kind)
    return c.T @ w @ c - s.T @ w @ s


def f_table(geom: GridGeometry, kind: str = "f", cache_dir: Optional[Union[str, Path]] = None) -> FTable:
    """Table of f (``kind='f'``) or f' (``kind='fprime'``).

    With ``cache_dir`` set, tables for ``n >= 256`` are read from / written to
    ``<cache_dir>/<kind>_<n>.npz``.
    """
    path = None
    if cache_dir is not None and geom.n >= 256:
        path = Path(cache_dir) / f"{kind}_{geom.n}.npz"
        if path.exists():
            return FTable.load(path)
    table = FTable(geom.n, _separable_table(geom.n, kind), kind)
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        table.save(path)
    return table


def f_table_fft(geom: GridGeometry, kind: str = "f") -> FTable:
    """Same table via a 2D FFT of the weights (O(N log N))."""
    n = geom.n
    w = np.fft.ifftshift(_weights(n, kind))  # move k = 0 to index 0
    return FTable(n, np.real(np.fft.fft2(w)).copy(), kind)


def claim2_constant(geom: GridGeometry) -> float:
    """``max |f - n^2/(2 pi^2) f'| / n^2`` over the whole table."""
    n = geom.n
    f = _separable_table(n, "f")
    fp = _separable_table(n, "fprime")
    return float(np.max(np.abs(f - n * n / (2 * np.pi**2) * fp)) / (n * n))


def claim3_error(n: int, j: int, beta: float) -> float:
    """``f'(j, round(j beta)) - (pi/2) ln(n/j)``."""
    if not 0.0 < beta <= 1.0:
        raise UsageError(f"beta must lie in (0, 1], got {beta}")
    jp = int(round(j * beta))
    return eval_f_prime(GridGeometry(n), j, jp) - 0.5 * np.pi * math.log(n / j)


def j_for_exponent(n: int, eps: float) -> int:
    return int(round(n**eps))


def proposition1_sum(n: int) -> float:
    """``sum_{k=1}^{n} cos(2 pi k / n) / k``."""
    if n < 2:
        raise UsageError("n must be >= 2")
    k = np.arange(1, n + 1)
    return float(np.sum(np.cos(2 * np.pi * k / n) / k))


def proposition2_sum(n: int, eps: float) -> float:
    """``sum_{k=1}^{n} cos(2 pi n^(eps-1) k) / k`` with a real exponent."""
    if n < 4:
        raise UsageError("n must be >= 4")
    if not 0.0 <= eps < 1.0:
        raise UsageError(f"eps must lie in [0, 1), got {eps}")
    k = np.arange(1, n + 1)
    return float(np.sum(np.cos(2 * np.pi * n ** (eps - 1.0) * k) / k))


def ampsum(geom: GridGeometry, M: Optional[int] = None, table: Optional[FTable] = None) -> float:
    """``sum_{0<j,j'<M} g(j,j')^2``; ``M`` defaults to ``ceil(sqrt(n))``."""
    if M is None:
        M = math.isqrt(geom.n - 1) + 1
    table = table or f_table(geom)
    g = table.g()
    return float(np.sum(g[1:M, 1:M] ** 2))


def ampsum_ratio(geom: GridGeometry, M: Optional[int] = None, table: Optional[FTable] = None) -> float:
    """``ampsum / (n^2 ln M)``."""
    if M is None:
        M = math.isqrt(geom.n - 1) + 1
    return ampsum(geom, M, table) / (geom.n**2 * math.log(M))


@dataclass
class AmplitudePrediction:
    """``C * g`` on a region, referenced to a marked site at the origin."""

    region: np.ndarray  # boolean [y, x] mask
    predicted: np.ndarray  # C * g on the full grid, [y, x]
    scale: float


@dataclass
class Lemma1Report:
    n: int
    correlation: float  # Pearson(|alpha_up|, |g|) on the correlation region
    signed_correlation: float
    fitted_scale: float  # least-squares C in alpha_up ~ C g
    scaled_constant: float  # |C| N sqrt(ln N)
    inequality_ratios: Dict[str, float] = field(default_factory=dict)
    prediction: Optional[AmplitudePrediction] = None

    def to_dict(self) -> Dict:
        return {
            "n": self.n,
            "correlation": self.correlation,
            "signed_correlation": self.signed_correlation,
            "fitted_scale": self.fitted_scale,
            "scaled_constant": self.scaled_constant,
            "inequality_ratios": dict(self.inequality_ratios),
        }


def lemma1_check(
    state: WalkState,
    marked: MarkedSet,
    r_min: int = 1,
    r_max: Optional[int] = None,
    table: Optional[FTable] = None,
) -> Lemma1Report:
    """Compare the simulated UP amplitudes with ``C g(j, j')``.

    ``C`` is fitted by least squares on sites at torus-L1 distance
    ``r_min..r_max`` (default ``1..n/4``) from the marked site.  The reported
    inequality ratios are ``sum |alpha_up|^2 / (C^2 sum g^2)`` over each test
    region; a value >= 1 means the inequality holds with the ``o(1)`` term
    dropped.
    """
    geom = state.geometry
    if tuple(marked.sites) != ((0, 0),):
        raise UsageError("lemma1_check needs exactly one marked site at (0, 0)")
    n, N = geom.n, geom.N
    if r_max is None:
        r_max = n // 4
    table = table or f_table(geom)
    g = table.g()
    up = state.amplitudes[1]
    if np.max(np.abs(up.imag)) > 1e-9 * max(1.0, np.max(np.abs(up.real))):
        raise UsageError("UP amplitudes are not real; state was not produced by the search walk")
    up = up.real

    dist = distance_map(geom, (0, 0))
    region = (dist >= r_min) & (dist <= r_max)
    a, gv = up[region], g[region]
    corr = float(np.corrcoef(np.abs(a), np.abs(gv))[0, 1])
    signed = float(np.corrcoef(a, gv)[0, 1])
    c = float(np.dot(a, gv) / np.dot(gv, gv))

    regions = {
        "all": np.ones_like(region),
        "all_but_marked": dist >= 1,
        "fit_region": region,
        "fourth_root_ball": (dist >= 1) & (dist <= math.isqrt(n - 1) + 1),
    }
    ratios = {
        name: float(np.sum(up[m] ** 2) / (c * c * np.sum(g[m] ** 2))) for name, m in regions.items()
    }
    return Lemma1Report(
        n=n,
        correlation=corr,
        signed_correlation=signed,
        fitted_scale=c,
        scaled_constant=abs(c) * N * math.sqrt(math.log(N)),
        inequality_ratios=ratios,
        prediction=AmplitudePrediction(region=region, predicted=c * g, scale=c),
    )


def claims_sweep(sizes=(64, 128, 256, 512), eps_values=(0.25, 0.5, 0.75), betas=(0.5, 1.0)):
    """Rows ``(quantity, n, param, value, reference, error)`` for the asymptotic statements."""
    rows = []
    for n in sizes:
        geom = GridGeometry(n)
        c2 = claim2_constant(geom)
        rows.append(("claim2_c", n, "", c2, 0.5, c2 - 0.5))
        p1 = proposition1_sum(n)
        rows.append(("prop1", n, "", p1, math.log(n), p1 - math.log(n)))
        for eps in eps_values:
            p2 = proposition2_sum(n, eps)
            ref = (1 - eps) * math.log(n)
            rows.append(("prop2", n, f"eps={eps}", p2, ref, p2 - ref))
            j = j_for_exponent(n, eps)
            for beta in betas:
                err = claim3_error(n, j, beta)
                fp = err + 0.5 * np.pi * math.log(n / j)
                rows.append(("claim3", n, f"eps={eps};beta={beta}", fp, fp - err, err))
        if n <= 512:
            M = math.isqrt(n - 1) + 1
            r = ampsum_ratio(geom, M)
            rows.append(("ampsum_ratio", n, f"M={M}", r, 0.0, r))
    return rows
