"""Total, dynamical, Aharonov-Anandan and Berry phases from sampled tracks.

Sign conventions (hbar = 1):

* connection integral  C[u] = oint <u| i d/dt |u> dt  ~  -sum_k arg <u_k|u_{k+1}>
* total phase phi = arg <psi(0)|psi(T)>
* dynamical phase D = int <psi|H|psi> dt
* phi = beta - D
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegeneracyError, NotCyclicError, OpenLoopError, UnderResolvedError
from .hamiltonians import EigenFrame, HamiltonianSpec, eigen_frame, evaluate_many
from .propagator import CyclicityVerdict, check_cyclic
from .state import OVERLAP_FLOOR, Trajectory, as_vector, consecutive_overlaps, wrap_phase

CLOSED_LOOP_TOL = 1e-12


def _track_array(track) -> np.ndarray:
    if isinstance(track, Trajectory):
        return track.states
    arr = np.asarray(track)
    if arr.dtype == object or arr.ndim != 2:
        arr = np.array([as_vector(s) for s in track])
    return arr.astype(complex, copy=False)


def _checked_overlaps(states: np.ndarray) -> np.ndarray:
    ov = consecutive_overlaps(states)
    k = int(np.argmin(np.abs(ov)))
    if abs(ov[k]) <= OVERLAP_FLOOR:
        raise UnderResolvedError(f"consecutive states {k} and {k + 1} are (nearly) orthogonal")
    return ov


def phase_increments(states) -> np.ndarray:
    """arg <u_k|u_{k+1}> for every grid interval."""
    return np.angle(_checked_overlaps(_track_array(states)))


def connection_integral(track) -> float:
    """Discrete oint <u|i d/dt|u> dt along the sampled track (not wrapped)."""
    return float(-np.sum(phase_increments(track)))


def dynamical_phase(traj: Trajectory, spec: HamiltonianSpec) -> float:
    """Trapezoid rule for int <psi|H|psi> dt over the trajectory grid."""
    h = evaluate_many(spec, traj.times)
    if h.shape[1] != traj.dim:
        raise ValueError("Hamiltonian and trajectory dimensions differ")
    e = np.einsum("ki,kij,kj->k", traj.states.conj(), h, traj.states).real
    return float(np.trapezoid(e, dx=traj.grid.dt))


def _aa_unwrapped(traj: Trajectory, verdict: CyclicityVerdict) -> float:
    if not verdict.is_cyclic:
        raise NotCyclicError(
            f"trajectory is not cyclic (|<psi(0)|psi(T)>| = {verdict.overlap_magnitude:.9f})"
        )
    return verdict.total_phase - float(np.sum(phase_increments(traj.states)))


def aa_phase(traj: Trajectory, verdict: Optional[CyclicityVerdict] = None) -> float:
    """Non-adiabatic phase in Bargmann form, wrapped.

    beta = phi - sum_k arg <psi_k|psi_{k+1}>
         = -arg(<psi_0|psi_1> ... <psi_{N-1}|psi_N> <psi_N|psi_0>)  (mod 2 pi)

    which is unchanged by any per-node rephasing of the trajectory.
    """
    if verdict is None:
        verdict = check_cyclic(traj)
    return wrap_phase(_aa_unwrapped(traj, verdict))


def _berry_unwrapped(frame: EigenFrame, track_index: int) -> float:
    if frame.closure_error > CLOSED_LOOP_TOL:
        raise OpenLoopError(
            f"parameter loop is open: |H(t_end) - H(t_start)| = {frame.closure_error:.3g}"
        )
    v = frame.frame.track(track_index)
    closed = np.concatenate([v, v[:1]])
    return float(-np.sum(phase_increments(closed)))


def berry_phase(frame: EigenFrame, track_index: int) -> float:
    """-arg of the closed overlap product of one eigenvector track, wrapped."""
    return wrap_phase(_berry_unwrapped(frame, track_index))


@dataclass(frozen=True)
class PhaseReport:
    total_phase: float
    dynamical: float
    aa_phase: float
    aa_phase_unwrapped: float
    berry_phase: Optional[float]
    berry_phase_unwrapped: Optional[float]
    berry_track: Optional[int]
    decomposition_residual: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _try_eigen_frame(spec: HamiltonianSpec, traj: Trajectory) -> Optional[EigenFrame]:
    try:
        ef = eigen_frame(spec, traj.grid)
    except DegeneracyError:
        return None
    return ef if ef.closure_error <= CLOSED_LOOP_TOL else None


def phase_report(
    traj: Trajectory, spec: HamiltonianSpec, verdict: Optional[CyclicityVerdict] = None
) -> PhaseReport:
    """phi, D, beta and (when the parameter loop closes) the Berry phase.

    The Berry phase is taken on the eigenvector track with the largest
    overlap with psi(0).
    """
    if verdict is None:
        verdict = check_cyclic(traj)
    beta_u = _aa_unwrapped(traj, verdict)
    dyn = dynamical_phase(traj, spec)
    phi = verdict.total_phase
    gamma = gamma_u = track = None
    ef = _try_eigen_frame(spec, traj)
    if ef is not None:
        track = int(np.argmax(np.abs(ef.frame.vectors[0].conj() @ traj.states[0])))
        gamma_u = _berry_unwrapped(ef, track)
        gamma = wrap_phase(gamma_u)
    residual = abs(wrap_phase(phi - beta_u + dyn))
    return PhaseReport(phi, dyn, wrap_phase(beta_u), beta_u, gamma, gamma_u, track, residual)


def pancharatnam_overlap(traj: Trajectory, t_index: int) -> complex:
    """<psibar(0)|psibar(t_k)> for the parallel-transported lift.

    Equals exp(-i sum_{j<k} arg <psi_j|psi_{j+1}>) <psi_0|psi_k>; at k = N of a
    cyclic trajectory its argument is the non-adiabatic phase.
    """
    k = int(t_index)
    if not 0 <= k < len(traj):
        raise IndexError(f"t_index {k} outside 0..{len(traj) - 1}")
    if k == 0:
        return complex(np.vdot(traj.states[0], traj.states[0]))
    inc = phase_increments(traj.states[: k + 1])
    return complex(np.exp(-1j * np.sum(inc)) * np.vdot(traj.states[0], traj.states[k]))


def wrapped_difference(a: float, b: float) -> float:
    return abs(wrap_phase(a - b))

