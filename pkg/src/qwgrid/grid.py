"""Torus geometry, coin directions and the walk state container.

Storage layout: amplitudes live in a ``(4, n, n)`` complex array indexed
``[d, y, x]``, i.e. four contiguous row-major planes in the coin order
``(DOWN, UP, RIGHT, LEFT)``.  ``x`` is the column, ``y`` is the row.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Tuple, Union

import numpy as np

from qwgrid.errors import UsageError

Site = Tuple[int, int]


class Direction(enum.IntEnum):
    """Coin register values; the integer value is the plane index."""

    DOWN = 0
    UP = 1
    RIGHT = 2
    LEFT = 3

    @property
    def opposite(self) -> "Direction":
        return _OPPOSITE[self]

    @property
    def symbol(self) -> str:
        return _SYMBOLS[self]

    @classmethod
    def parse(cls, text: str) -> "Direction":
        key = text.strip()
        for d in cls:
            if key.upper() == d.name or key == d.symbol:
                return d
        raise UsageError(f"unknown direction {text!r}")


_OPPOSITE = {
    Direction.DOWN: Direction.UP,
    Direction.UP: Direction.DOWN,
    Direction.RIGHT: Direction.LEFT,
    Direction.LEFT: Direction.RIGHT,
}
_SYMBOLS = {Direction.DOWN: "⇓", Direction.UP: "⇑", Direction.RIGHT: "⇒", Direction.LEFT: "⇐"}


@dataclass(frozen=True)
class GridGeometry:
    """An ``n x n`` torus with ``N = n**2`` sites.  ``n`` must be even."""

    n: int

    def __post_init__(self):
        if isinstance(self.n, bool) or not isinstance(self.n, (int, np.integer)):
            raise UsageError(f"grid side must be an integer, got {self.n!r}")
        if self.n < 2:
            raise UsageError(f"grid side must be >= 2, got {self.n}")
        if self.n % 2:
            raise UsageError(f"grid side must be even, got {self.n}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def N(self) -> int:
        return self.n * self.n

    @property
    def shape(self) -> Tuple[int, int, int]:
        return (4, self.n, self.n)

    def contains(self, site: Site) -> bool:
        x, y = site
        return 0 <= x < self.n and 0 <= y < self.n

    def sites(self) -> Iterator[Site]:
        for y in range(self.n):
            for x in range(self.n):
                yield (x, y)


def wrap(c: int, n: int) -> int:
    """Map an integer coordinate onto ``[0, n)``."""
    if n < 1:
        raise UsageError(f"modulus must be >= 1, got {n}")
    return c % n


def axis_distance(a: int, b: int, n: int) -> int:
    d = abs(a - b) % n
    return min(d, n - d)


def torus_l1_distance(a: Site, b: Site, geom: GridGeometry) -> int:
    return axis_distance(a[0], b[0], geom.n) + axis_distance(a[1], b[1], geom.n)


def torus_linf_distance(a: Site, b: Site, geom: GridGeometry) -> int:
    return max(axis_distance(a[0], b[0], geom.n), axis_distance(a[1], b[1], geom.n))


def distance_map(geom: GridGeometry, center: Site, metric: str = "l1") -> np.ndarray:
    """Integer ``(n, n)`` array (indexed ``[y, x]``) of torus distances to ``center``."""
    n = geom.n
    idx = np.arange(n)
    dx = np.abs(idx - center[0])
    dx = np.minimum(dx, n - dx)
    dy = np.abs(idx - center[1])
    dy = np.minimum(dy, n - dy)
    if metric == "l1":
        return dy[:, None] + dx[None, :]
    if metric == "linf":
        return np.maximum(dy[:, None], dx[None, :])
    raise UsageError(f"unknown metric {metric!r} (expected 'l1' or 'linf')")


@dataclass(frozen=True)
class MarkedSet:
    """Sites whose coin is replaced by ``-I``."""

    sites: Tuple[Site, ...] = ()

    def __post_init__(self):
        seen = []
        for s in self.sites:
            x, y = (int(s[0]), int(s[1]))
            if (x, y) in seen:
                raise UsageError(f"duplicate marked site {(x, y)}")
            seen.append((x, y))
        object.__setattr__(self, "sites", tuple(seen))

    @classmethod
    def of(cls, *sites: Site) -> "MarkedSet":
        return cls(tuple(sites))

    def __len__(self) -> int:
        return len(self.sites)

    def __iter__(self) -> Iterator[Site]:
        return iter(self.sites)

    def __contains__(self, site) -> bool:
        return tuple(site) in self.sites

    def validate(self, geom: GridGeometry) -> None:
        for s in self.sites:
            if not geom.contains(s):
                raise UsageError(f"marked site {s} outside the {geom.n}x{geom.n} grid")

    def index_arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        """``(ys, xs)`` arrays for fancy indexing into a plane."""
        if not self.sites:
            return np.empty(0, dtype=np.intp), np.empty(0, dtype=np.intp)
        xs, ys = zip(*self.sites)
        return np.array(ys, dtype=np.intp), np.array(xs, dtype=np.intp)


class WalkState:
    """Amplitude tensor of the walk plus its geometry.

    The array is owned by the state; :func:`qwgrid.walk.step` updates it in
    place using a private scratch buffer of the same shape.
    """

    __slots__ = ("geometry", "amplitudes", "_scratch")

    def __init__(self, geometry: GridGeometry, amplitudes: np.ndarray):
        amplitudes = np.asarray(amplitudes, dtype=np.complex128)
        if amplitudes.shape != geometry.shape:
            raise UsageError(f"amplitude shape {amplitudes.shape} does not match {geometry.shape}")
        self.geometry = geometry
        self.amplitudes = amplitudes
        self._scratch = None

    def copy(self) -> "WalkState":
        return WalkState(self.geometry, self.amplitudes.copy())

    def amplitude(self, x: int, y: int, d: Union[Direction, int]) -> complex:
        return complex(self.amplitudes[int(d), y, x])

    def norm(self) -> float:
        return float(np.sqrt(self.norm_squared()))

    def norm_squared(self) -> float:
        a = self.amplitudes
        return float(np.sum(a.real * a.real + a.imag * a.imag))

    def site_probabilities(self) -> np.ndarray:
        """``(n, n)`` array ``[y, x]`` of probabilities marginalised over the coin."""
        a = self.amplitudes
        return np.sum(a.real * a.real + a.imag * a.imag, axis=0)

    def __repr__(self):
        return f"WalkState(n={self.geometry.n}, norm={self.norm():.12g})"


def uniform_state(geom: GridGeometry) -> WalkState:
    """Equal superposition over all sites and directions."""
    return WalkState(geom, np.full(geom.shape, 1.0 / (2.0 * geom.n), dtype=np.complex128))


def basis_state(geom: GridGeometry, site: Site, d: Union[Direction, int]) -> WalkState:
    _check_site(geom, site)
    amps = np.zeros(geom.shape, dtype=np.complex128)
    amps[int(d), site[1], site[0]] = 1.0
    return WalkState(geom, amps)


def random_state(geom: GridGeometry, rng: np.random.Generator) -> WalkState:
    amps = rng.standard_normal(geom.shape) + 1j * rng.standard_normal(geom.shape)
    amps /= np.linalg.norm(amps)
    return WalkState(geom, amps)


def overlap(a: WalkState, b: WalkState) -> complex:
    """Inner product ``<a|b>`` (conjugate-linear in ``a``)."""
    if a.geometry != b.geometry:
        raise UsageError(f"geometry mismatch: n={a.geometry.n} vs n={b.geometry.n}")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def site_probability(s: WalkState, site: Site) -> float:
    _check_site(s.geometry, site)
    v = s.amplitudes[:, site[1], site[0]]
    return float(np.sum(v.real * v.real + v.imag * v.imag))


def sites_at_distance(geom: GridGeometry, center: Site, radius: int) -> int:
    """Brute-force count of sites at exact torus-L1 distance ``radius``."""
    return int(np.count_nonzero(distance_map(geom, center) == radius))


def fourth_root_radius(geom: GridGeometry) -> int:
    """``ceil(N**(1/4))`` computed exactly as ``ceil(sqrt(n))``."""
    r = math.isqrt(geom.n)
    return r if r * r == geom.n else r + 1


def _check_site(geom: GridGeometry, site: Site) -> None:
    if not geom.contains(site):
        raise UsageError(f"site {tuple(site)} outside the {geom.n}x{geom.n} grid")


def as_sites(centers: Union[Site, MarkedSet, Iterable[Site]]) -> Tuple[Site, ...]:
    if isinstance(centers, MarkedSet):
        return centers.sites
    centers = tuple(centers)
    if len(centers) == 2 and all(isinstance(c, (int, np.integer)) for c in centers):
        return ((int(centers[0]), int(centers[1])),)
    return tuple((int(c[0]), int(c[1])) for c in centers)
