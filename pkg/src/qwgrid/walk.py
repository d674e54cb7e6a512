"""One step of the perturbed coined walk and multi-step evolution.

A step is coin then shift.  The coin is Grover's diffusion ``D = J/2 - I``
on unmarked sites and ``-I`` on marked sites.  The shift moves each
direction component one site and flips it to the opposite direction::

    |x, y, UP>    -> |x, y-1, DOWN>
    |x, y, DOWN>  -> |x, y+1, UP>
    |x, y, LEFT>  -> |x-1, y, RIGHT>
    |x, y, RIGHT> -> |x+1, y, LEFT>

with all coordinates taken modulo ``n``.
"""

from __future__ import annotations

from typing import Callable, Iterable, List, Optional

import numpy as np

from qwgrid.grid import Direction, GridGeometry, MarkedSet, WalkState

Observer = Callable[[int, WalkState], None]

_D, _U, _R, _L = Direction.DOWN, Direction.UP, Direction.RIGHT, Direction.LEFT


def grover_coin(v) -> np.ndarray:
    """Apply ``D`` to a 4-vector of coin amplitudes."""
    v = np.asarray(v, dtype=np.complex128)
    return 0.5 * v.sum() - v


def grover_matrix() -> np.ndarray:
    return 0.5 * np.ones((4, 4)) - np.eye(4)


def apply_coin(amps: np.ndarray, marked: MarkedSet = MarkedSet()) -> None:
    """In-place coin on a ``(4, n, n)`` array."""
    half = amps.sum(axis=0)
    half *= 0.5
    np.subtract(half[None, :, :], amps, out=amps)
    if len(marked):
        ys, xs = marked.index_arrays()
        # D v - s/2 = -v
        amps[:, ys, xs] -= half[ys, xs]


def apply_shift(amps: np.ndarray, out: np.ndarray) -> None:
    """Write the shifted copy of ``amps`` into ``out`` (distinct arrays)."""
    # new DOWN at y comes from UP at y+1
    out[_D, :-1] = amps[_U, 1:]
    out[_D, -1] = amps[_U, 0]
    # new UP at y comes from DOWN at y-1
    out[_U, 1:] = amps[_D, :-1]
    out[_U, 0] = amps[_D, -1]
    # new RIGHT at x comes from LEFT at x+1
    out[_R, :, :-1] = amps[_L, :, 1:]
    out[_R, :, -1] = amps[_L, :, 0]
    # new LEFT at x comes from RIGHT at x-1
    out[_L, :, 1:] = amps[_R, :, :-1]
    out[_L, :, 0] = amps[_R, :, -1]


def shift(state: WalkState) -> WalkState:
    """Shift only (no coin), in place.  Applying it twice is the identity."""
    _swap_through_scratch(state)
    return state


def step(state: WalkState, marked: MarkedSet = MarkedSet(), *, coin: bool = True) -> WalkState:
    """Advance ``state`` by one walk step in place and return it.

    ``coin=False`` skips the coin; it exists for testing the shift alone.
    """
    if len(marked):
        marked.validate(state.geometry)
    if coin:
        apply_coin(state.amplitudes, marked)
    _swap_through_scratch(state)
    return state


def _swap_through_scratch(state: WalkState) -> None:
    scratch = state._scratch
    if scratch is None or scratch.shape != state.amplitudes.shape:
        scratch = np.empty_like(state.amplitudes)
    apply_shift(state.amplitudes, scratch)
    state._scratch = state.amplitudes
    state.amplitudes = scratch


def run(
    initial: WalkState,
    marked: MarkedSet = MarkedSet(),
    t: int = 0,
    observers: Iterable[Observer] = (),
) -> WalkState:
    """Evolve a copy of ``initial`` for ``t`` steps.

    Each observer is called as ``observer(step_index, state)`` after every
    step, in the order given.  Observers must not modify the state.
    """
    if t < 0:
        raise ValueError(f"step count must be >= 0, got {t}")
    marked.validate(initial.geometry)
    observers = list(observers)
    state = initial.copy()
    for i in range(1, t + 1):
        apply_coin(state.amplitudes, marked)
        _swap_through_scratch(state)
        for obs in observers:
            obs(i, state)
    return state


class OverlapTrace:
    """Records ``|<psi(t)|reference>|`` after each step (reference defaults to psi(0))."""

    def __init__(self, reference: Optional[WalkState] = None):
        self.reference = reference
        self.values: List[float] = []

    def __call__(self, t: int, state: WalkState) -> None:
        if self.reference is None:
            # <psi|psi0> with psi0 uniform and real
            value = abs(state.amplitudes.sum()) / (2.0 * state.geometry.n)
        else:
            value = abs(np.vdot(state.amplitudes, self.reference.amplitudes))
        self.values.append(float(value))


class MarkedProbabilityTrace:
    """Records the total probability on the marked sites after each step."""

    def __init__(self, marked: MarkedSet):
        self.marked = marked
        self._ys, self._xs = marked.index_arrays()
        self.values: List[float] = []

    def __call__(self, t: int, state: WalkState) -> None:
        v = state.amplitudes[:, self._ys, self._xs]
        self.values.append(float(np.sum(v.real * v.real + v.imag * v.imag)))


class NormTrace:
    def __init__(self):
        self.values: List[float] = []

    def __call__(self, t: int, state: WalkState) -> None:
        self.values.append(state.norm())


def t_max(geom: GridGeometry) -> int:
    """Scan horizon ``ceil(2 sqrt(N ln N))``."""
    return int(np.ceil(2.0 * np.sqrt(geom.N * np.log(geom.N))))
