"""Unitary time evolution with the exponential midpoint rule.

Each step applies exp(-i H(t_mid) dt). For d = 2 the exponential is taken in
closed form through the Pauli decomposition; for larger d through the
eigendecomposition of the Hermitian generator. Steps are applied as
psi + (U - I) psi so that the norm does not drift with step count.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NonHermitianError
from .hamiltonians import HERMITIAN_TOL, HamiltonianSpec, evaluate_many, hermiticity_error
from .state import ComplexState, TimeGrid, Trajectory, as_vector

DEFAULT_CYCLIC_TOL = 1e-6
DEFAULT_STEP_PHASE = 1.6e-4


def default_steps(spec: HamiltonianSpec, duration: float, minimum: int = 1000) -> int:
    """Steps such that rate_scale * dt <= DEFAULT_STEP_PHASE."""
    return max(minimum, int(np.ceil(duration * spec.rate_scale / DEFAULT_STEP_PHASE)))


def _generator_times(grid: TimeGrid) -> np.ndarray:
    return grid.midpoints


def _expm1i(x):
    """exp(-i x) - 1 without cancellation for small x."""
    return -2.0 * np.sin(0.5 * x) ** 2 - 1j * np.sin(x)


def step_increments(h: np.ndarray, dt: float) -> np.ndarray:
    """exp(-i h dt) - I for a stack of Hermitian matrices h, shape (K, d, d).

    Stepping as psi + (U - I) psi keeps the rounding of entries close to 1
    out of the update; forming U itself biases |det U| by about -1e-16 per
    step, which adds up to ~1e-12 norm drift over 1e5 steps.
    """
    herm = hermiticity_error(h)
    if herm > HERMITIAN_TOL * max(1.0, float(np.max(np.abs(h)))):
        raise NonHermitianError(f"generator is not Hermitian (deviation {herm:.3g})")
    if h.shape[-1] == 2:
        h0 = 0.5 * (h[:, 0, 0] + h[:, 1, 1]).real
        hz = 0.5 * (h[:, 0, 0] - h[:, 1, 1]).real
        hx = h[:, 0, 1].real
        hy = -h[:, 0, 1].imag
        r = np.sqrt(hx**2 + hy**2 + hz**2)
        cm1 = -2.0 * np.sin(0.5 * r * dt) ** 2  # cos(r dt) - 1
        s = dt * np.sinc(r * dt / np.pi)  # sin(r dt) / r
        gm1 = _expm1i(h0 * dt)
        g = 1.0 + gm1
        # U = g M with M = cos(r dt) I - i sin(r dt) n.sigma, so U - I = (g - 1) M + (M - I)
        d00 = cm1 - 1j * s * hz
        d11 = cm1 + 1j * s * hz
        out = np.empty(h.shape, dtype=complex)
        out[:, 0, 0] = gm1 * (1.0 + d00) + d00
        out[:, 1, 1] = gm1 * (1.0 + d11) + d11
        out[:, 0, 1] = g * (-1j * s * (hx - 1j * hy))
        out[:, 1, 0] = g * (-1j * s * (hx + 1j * hy))
        return out
    e, v = np.linalg.eigh(h)
    return np.einsum("kij,kj,klj->kil", v, _expm1i(e * dt), v.conj())


def step_unitaries(h: np.ndarray, dt: float) -> np.ndarray:
    """exp(-i h dt) for a stack of Hermitian matrices h, shape (K, d, d)."""
    return step_increments(h, dt) + np.eye(h.shape[-1])


def step(spec: HamiltonianSpec, state, t_from: float, t_to: float) -> ComplexState:
    if not t_to > t_from:
        raise ValueError("t_to must exceed t_from")
    dt = t_to - t_from
    h = evaluate_many(spec, [t_from + 0.5 * dt])
    psi = as_vector(state)
    return ComplexState(psi + step_increments(h, dt)[0] @ psi)


def _apply_sequence(du: np.ndarray, psi0: np.ndarray) -> np.ndarray:
    """psi_{k+1} = psi_k + du[k] psi_k with du[k] = U_k - I."""
    n, d = du.shape[0], psi0.size
    out = np.empty((n + 1, d), dtype=complex)
    out[0] = psi0
    if d == 2:
        # scalar loop: ~20x faster than per-step numpy calls for 2x2
        a, b = du[:, 0, 0].tolist(), du[:, 0, 1].tolist()
        c, e = du[:, 1, 0].tolist(), du[:, 1, 1].tolist()
        x, y = complex(psi0[0]), complex(psi0[1])
        xs, ys = [x], [y]
        for k in range(n):
            x, y = x + (a[k] * x + b[k] * y), y + (c[k] * x + e[k] * y)
            xs.append(x)
            ys.append(y)
        out[:, 0] = xs
        out[:, 1] = ys
        return out
    psi = psi0
    for k in range(n):
        psi = psi + du[k] @ psi
        out[k + 1] = psi
    return out


def propagate(spec: HamiltonianSpec, initial, grid: TimeGrid) -> Trajectory:
    """Evolve ``initial`` across every grid interval; states[0] is the input."""
    psi0 = ComplexState(as_vector(initial)).amplitudes
    if psi0.size != spec.dim:
        raise ValueError(f"state dimension {psi0.size} does not match Hamiltonian dimension {spec.dim}")
    h = evaluate_many(spec, _generator_times(grid))
    return Trajectory(grid, _apply_sequence(step_increments(h, grid.dt), psi0), spec.spec_id)


@dataclass(frozen=True)
class CyclicityVerdict:
    is_cyclic: bool
    overlap_magnitude: float
    total_phase: Optional[float]
    cyclic_tol: float = DEFAULT_CYCLIC_TOL


def check_cyclic(traj: Trajectory, cyclic_tol: float = DEFAULT_CYCLIC_TOL) -> CyclicityVerdict:
    """Does psi(T) = e^{i phi} psi(0) hold up to ``cyclic_tol`` in overlap magnitude?"""
    z = complex(np.vdot(traj.states[0], traj.states[-1]))
    mag = min(abs(z), 1.0)
    cyclic = mag >= 1.0 - cyclic_tol
    return CyclicityVerdict(cyclic, mag, float(np.angle(z)) if cyclic else None, cyclic_tol)


def norm_drift(traj: Trajectory) -> float:
    return float(np.max(np.abs(np.linalg.norm(traj.states, axis=1) - 1.0)))
