"""Moving orthonormal frame built on the periodic representative of a cyclic
trajectory, its effective Hamiltonian, and amplitude reconstruction.

Row 0 of the frame is w_1(t) = exp(-i phi t / T) psi(t). The remaining rows
span the orthogonal complement; they are continued node to node by the
unitary that maximizes the real part of consecutive overlaps, and the
endpoint mismatch is removed by spreading the closure unitary uniformly in
time, which makes every row periodic.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm, logm

from .errors import GridMismatchError, NotCyclicError, UnderResolvedError
from .hamiltonians import HamiltonianSpec, evaluate_many
from .phases import connection_integral, phase_increments
from .propagator import CyclicityVerdict, check_cyclic
from .state import FrameTrajectory, Trajectory, wrap_phase

MIN_COMPLEMENT_OVERLAP = 0.5


@dataclass(frozen=True, eq=False)
class EffectiveHamiltonianTrack:
    """``matrices[k, n, m]`` = <w_n|H|w_m> - <w_n|i d/dt|w_m> at node k."""

    matrices: np.ndarray

    def max_offdiagonal(self) -> float:
        d = self.matrices.shape[1]
        mask = ~np.eye(d, dtype=bool)
        return float(np.max(np.abs(self.matrices[:, mask])))

    def diagonal(self) -> np.ndarray:
        return np.real(np.diagonal(self.matrices, axis1=1, axis2=2))


def _complement_start(w1: np.ndarray) -> np.ndarray:
    """Orthonormal rows spanning the complement of w1, from the standard basis."""
    d = w1.size
    q, _ = np.linalg.qr(np.column_stack([w1, np.eye(d, dtype=complex)]))
    comp = q[:, 1:d].T.copy()
    # QR may flip signs arbitrarily; fix each row so its largest entry is real positive
    for r in comp:
        j = int(np.argmax(np.abs(r)))
        r *= np.exp(-1j * np.angle(r[j]))
    return comp


def _continue_complement_2d(w1: np.ndarray) -> np.ndarray:
    comp = np.stack([-w1[:, 1].conj(), w1[:, 0].conj()], axis=1)
    ov = np.einsum("ki,ki->k", comp[:-1].conj(), comp[1:])
    if np.min(np.abs(ov)) < MIN_COMPLEMENT_OVERLAP:
        raise UnderResolvedError("complement continuation broke down: grid too coarse")
    cum = np.concatenate([[0.0], np.cumsum(np.angle(ov))])
    return (comp * np.exp(-1j * cum)[:, None])[:, None, :]


def _continue_complement(w1: np.ndarray) -> np.ndarray:
    n, d = w1.shape
    comp = np.empty((n, d - 1, d), dtype=complex)
    comp[0] = _complement_start(w1[0])
    for k in range(1, n):
        proj = comp[k - 1] - np.outer(comp[k - 1] @ w1[k].conj(), w1[k])
        # Lowdin step: closest orthonormal set to the projected previous rows
        u, sv, vh = np.linalg.svd(proj, full_matrices=False)
        if sv[-1] < MIN_COMPLEMENT_OVERLAP:
            raise UnderResolvedError(f"complement continuation broke down at node {k}")
        comp[k] = u @ vh
    return comp


def build_w_frame(traj: Trajectory, verdict: CyclicityVerdict | None = None) -> FrameTrajectory:
    if verdict is None:
        verdict = check_cyclic(traj)
    if not verdict.is_cyclic:
        raise NotCyclicError("w-frame needs a cyclic trajectory")
    tau = (traj.times - traj.grid.t_start) / traj.grid.period
    w1 = traj.states * np.exp(-1j * verdict.total_phase * tau)[:, None]
    w1 /= np.linalg.norm(w1, axis=1)[:, None]  # strip propagation roundoff in the norm
    w1[-1] = w1[0]  # exact periodicity; differs from the formula by < cyclic_tol
    d = traj.dim
    comp = _continue_complement_2d(w1) if d == 2 else _continue_complement(w1)
    closure = comp[-1] @ comp[0].conj().T  # comp[N] = closure @ comp[0]
    if d == 2:
        chi = np.angle(closure[0, 0])
        comp = comp * np.exp(-1j * chi * tau)[:, None, None]
    else:
        gen = logm(closure)
        for k in range(1, len(tau)):
            comp[k] = expm(-tau[k] * gen) @ comp[k]
    comp[-1] = comp[0]
    return FrameTrajectory(traj.grid, np.concatenate([w1[:, None, :], comp], axis=1))


def frame_connection(frame: FrameTrajectory, hermitian: bool = True) -> np.ndarray:
    """<w_n|i d/dt|w_m> per node by periodic central differences.

    With ``hermitian`` the anti-Hermitian part of the derivative overlap is
    kept, which makes the result exactly Hermitian at every node.
    """
    v = frame.vectors[:-1]  # node N duplicates node 0
    dt = frame.grid.dt
    dv = (np.roll(v, -1, axis=0) - np.roll(v, 1, axis=0)) / (2 * dt)
    a = np.einsum("kni,kmi->knm", v.conj(), dv)
    if hermitian:
        a = 0.5 * (a - np.conj(np.swapaxes(a, 1, 2)))
    conn = 1j * a
    return np.concatenate([conn, conn[:1]])


def effective_hamiltonian(frame: FrameTrajectory, spec: HamiltonianSpec) -> EffectiveHamiltonianTrack:
    if spec.family == "custom":
        ts = spec.sample_times
        if frame.grid.t_start < ts[0] - 1e-9 or frame.grid.t_end > ts[-1] + 1e-9:
            raise GridMismatchError("frame grid extends beyond the Hamiltonian samples")
    if spec.dim != frame.dim:
        raise GridMismatchError("frame and Hamiltonian dimensions differ")
    h = evaluate_many(spec, frame.grid.nodes)
    v = frame.vectors
    proj = np.einsum("kni,kij,kmj->knm", v.conj(), h, v)
    return EffectiveHamiltonianTrack(proj - frame_connection(frame))


def reconstruct_amplitude(frame: FrameTrajectory, spec: HamiltonianSpec, track_index: int = 0) -> Trajectory:
    """psi(t) = w(t) exp(-i int_0^t [<w|H|w> - <w|i d/dt|w>] dt).

    Uses only frame data and H: the energy term by the trapezoid rule, the
    connection term by accumulated overlap phases.
    """
    w = frame.track(track_index)
    h = evaluate_many(spec, frame.grid.nodes)
    e = np.einsum("ki,kij,kj->k", w.conj(), h, w).real
    dt = frame.grid.dt
    energy = np.concatenate([[0.0], np.cumsum(0.5 * (e[1:] + e[:-1]) * dt)])
    geom = np.concatenate([[0.0], np.cumsum(phase_increments(w))])  # = -int <w|i dw/dt>
    states = w * np.exp(-1j * (energy + geom))[:, None]
    return Trajectory(frame.grid, states, spec.spec_id)


def frame_holonomy(frame: FrameTrajectory, track_index: int = 0) -> float:
    """Connection integral of one (periodic) frame row, wrapped."""
    return wrap_phase(connection_integral(frame.track(track_index)))


def write_frame_csv(frame: FrameTrajectory, path) -> None:
    """Columns: t, then for each row n and component i: w{n}_{i}_re, w{n}_{i}_im."""
    d = frame.dim
    header = ["t"]
    for n in range(d):
        for i in range(d):
            header += [f"w{n}_{i}_re", f"w{n}_{i}_im"]
    flat = frame.vectors.reshape(frame.vectors.shape[0], -1)
    cols = np.empty((flat.shape[0], 1 + 2 * flat.shape[1]))
    cols[:, 0] = frame.grid.nodes
    cols[:, 1::2] = flat.real
    cols[:, 2::2] = flat.imag
    np.savetxt(path, cols, delimiter=",", header=",".join(header), comments="", fmt="%.17g")
