"""Complex state vectors, time grids, trajectories and moving frames.

Units: hbar = 1, phases in radians, principal values in (-pi, pi].
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DimensionMismatchError, GeophaseError, UndefinedPhaseError

PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)

OVERLAP_FLOOR = 1e-12


def wrap_phase(x):
    """Map angles to the principal interval (-pi, pi]."""
    y = np.pi - np.mod(np.pi - np.asarray(x, dtype=float), 2 * np.pi)
    return float(y) if np.ndim(y) == 0 else y


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def as_vector(s) -> np.ndarray:
    if isinstance(s, ComplexState):
        return s.amplitudes
    return np.asarray(s, dtype=complex)


@dataclass(frozen=True, eq=False)
class ComplexState:
    """Unit-norm complex vector of dimension d >= 2.

    The constructor normalizes its input, so the norm invariant holds for
    every instance. Zero vectors are rejected.
    """

    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if a.size < 2:
            raise DimensionMismatchError(f"state dimension must be >= 2, got {a.size}")
        n = np.linalg.norm(a)
        if not np.isfinite(n) or n == 0:
            raise GeophaseError("cannot normalize a zero or non-finite vector")
        object.__setattr__(self, "amplitudes", _frozen(a / n))

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def __array__(self, dtype=None, copy=None):
        return self.amplitudes if dtype is None else self.amplitudes.astype(dtype)

    def __repr__(self):
        return f"ComplexState({np.array2string(self.amplitudes, precision=6)})"

    def rephased(self, alpha: float) -> "ComplexState":
        return ComplexState(np.exp(1j * alpha) * self.amplitudes)


def inner_product(a, b) -> complex:
    """<a|b>, conjugate-linear in the first argument."""
    u, v = as_vector(a), as_vector(b)
    if u.shape != v.shape:
        raise DimensionMismatchError(f"incompatible states: {u.shape} vs {v.shape}")
    return complex(np.vdot(u, v))


def bloch_vector(s) -> np.ndarray:
    """Polarization vector (<sx>, <sy>, <sz>) of a spin-1/2 state."""
    v = as_vector(s)
    if v.shape != (2,):
        raise DimensionMismatchError("bloch_vector is defined for spin-1/2 (d = 2) states only")
    v = v / np.linalg.norm(v)
    a, b = v
    cross = np.conj(a) * b
    return np.array([2 * cross.real, 2 * cross.imag, abs(a) ** 2 - abs(b) ** 2])


def arg_overlap(a, b) -> float:
    z = inner_product(a, b)
    if abs(z) <= OVERLAP_FLOOR:
        raise UndefinedPhaseError(f"overlap magnitude {abs(z):.3g} too small for a relative phase")
    return float(np.angle(z))


@dataclass(frozen=True)
class TimeGrid:
    """Uniform partition of [t_start, t_end] into ``steps`` intervals."""

    t_start: float
    t_end: float
    steps: int

    def __post_init__(self):
        if not (np.isfinite(self.t_start) and np.isfinite(self.t_end)):
            raise GeophaseError("grid endpoints must be finite")
        if not self.t_end > self.t_start:
            raise GeophaseError(f"t_end ({self.t_end}) must exceed t_start ({self.t_start})")
        if int(self.steps) != self.steps or self.steps < 2:
            raise GeophaseError(f"steps must be an integer >= 2, got {self.steps}")
        object.__setattr__(self, "steps", int(self.steps))
        object.__setattr__(self, "t_start", float(self.t_start))
        object.__setattr__(self, "t_end", float(self.t_end))

    @property
    def dt(self) -> float:
        return (self.t_end - self.t_start) / self.steps

    @property
    def period(self) -> float:
        return self.t_end - self.t_start

    @property
    def nodes(self) -> np.ndarray:
        k = np.arange(self.steps + 1)
        return self.t_start + k * self.dt

    @property
    def midpoints(self) -> np.ndarray:
        return self.t_start + (np.arange(self.steps) + 0.5) * self.dt

    def __len__(self):
        return self.steps + 1


def _unit_rows(states: np.ndarray, tol: float) -> np.ndarray:
    norms = np.linalg.norm(states, axis=-1)
    if np.max(np.abs(norms - 1.0)) > tol:
        raise GeophaseError(f"states are not normalized (max deviation {np.max(np.abs(norms - 1)):.3g})")
    return states


@dataclass(frozen=True, eq=False)
class Trajectory:
    """One state per grid node, stored as an (N+1, d) array."""

    grid: TimeGrid
    states: np.ndarray
    spec_id: Optional[str] = None

    def __post_init__(self):
        s = np.array(self.states, dtype=complex)
        if s.ndim != 2 or s.shape[1] < 2:
            raise DimensionMismatchError(f"states must have shape (N+1, d>=2), got {s.shape}")
        if s.shape[0] != self.grid.steps + 1:
            raise DimensionMismatchError(
                f"{s.shape[0]} states for a grid with {self.grid.steps + 1} nodes"
            )
        _unit_rows(s, 1e-9)
        object.__setattr__(self, "states", _frozen(s))

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self.grid.nodes

    def state(self, k: int) -> ComplexState:
        return ComplexState(self.states[k])

    def __len__(self):
        return self.states.shape[0]

    def with_states(self, states: np.ndarray, spec_id=None) -> "Trajectory":
        return Trajectory(self.grid, states, self.spec_id if spec_id is None else spec_id)


@dataclass(frozen=True, eq=False)
class FrameTrajectory:
    """d orthonormal vectors per node: ``vectors[k, n]`` is row n at node k."""

    grid: TimeGrid
    vectors: np.ndarray
    check_tol: float = field(default=1e-10, repr=False)

    def __post_init__(self):
        v = np.array(self.vectors, dtype=complex)
        if v.ndim != 3 or v.shape[1] != v.shape[2]:
            raise DimensionMismatchError(f"frame must have shape (N+1, d, d), got {v.shape}")
        if v.shape[0] != self.grid.steps + 1:
            raise DimensionMismatchError("frame length does not match grid")
        err = orthonormality_error(v)
        if err > self.check_tol:
            raise GeophaseError(f"frame is not orthonormal (deviation {err:.3g})")
        object.__setattr__(self, "vectors", _frozen(v))

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def track(self, n: int) -> np.ndarray:
        return self.vectors[:, n, :]

    def periodicity_error(self) -> float:
        return float(np.max(np.abs(self.vectors[-1] - self.vectors[0])))


def orthonormality_error(vectors: np.ndarray) -> float:
    gram = np.einsum("kni,kmi->knm", vectors.conj(), vectors)
    eye = np.eye(vectors.shape[1])
    return float(np.max(np.abs(gram - eye)))


def consecutive_overlaps(states: np.ndarray) -> np.ndarray:
    """<psi_k|psi_{k+1}> for k = 0..N-1."""
    return np.einsum("ki,ki->k", states[:-1].conj(), states[1:])
