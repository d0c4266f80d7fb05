"""Superposition tests for Schrodinger amplitudes and for their
parallel-transported representatives, interference intensities, the
resonance condition for superposed rotating-field solutions, and the
adiabatic interference conditions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import DimensionMismatchError, GeophaseError, GridMismatchError
from .gauge import _central_derivative, generator_residual, nonlinear_residual, parallel_transport_representative
from .hamiltonians import HamiltonianSpec, alpha_tilt, eigen_frame, evaluate_many
from .state import TimeGrid, Trajectory, as_vector


@dataclass(frozen=True)
class SuperpositionSpec:
    c1: complex
    c2: complex

    def __post_init__(self):
        n = abs(self.c1) ** 2 + abs(self.c2) ** 2
        if abs(n - 1.0) > 1e-12:
            raise GeophaseError(f"|c1|^2 + |c2|^2 = {n!r}, expected 1")

    @classmethod
    def mixing(cls, angle: float, relative_phase: float = 0.0) -> "SuperpositionSpec":
        """(cos(angle/2), e^{i relative_phase} sin(angle/2))."""
        return cls(complex(math.cos(angle / 2)), complex(np.exp(1j * relative_phase) * math.sin(angle / 2)))


def superpose(t1: Trajectory, t2: Trajectory, s: SuperpositionSpec) -> Trajectory:
    """Nodewise c1 psi1 + c2 psi2, not renormalized.

    The Trajectory constructor rejects the result if its norm deviates from 1
    by more than 1e-9, which happens when the constituents are not
    orthogonal solutions of one linear equation.
    """
    if t1.grid != t2.grid:
        raise GridMismatchError("constituent trajectories live on different grids")
    if t1.dim != t2.dim:
        raise DimensionMismatchError("constituent trajectories differ in dimension")
    return Trajectory(t1.grid, s.c1 * t1.states + s.c2 * t2.states, t1.spec_id)


def linear_residual(traj: Trajectory, spec: HamiltonianSpec) -> float:
    """max_k || i dpsi/dt - H psi || by central differences."""
    return generator_residual(traj, spec)


def common_shift_residual(traj: Trajectory, spec: HamiltonianSpec) -> float:
    """max_k min_lambda || i dpsi/dt - (H - lambda) psi ||.

    Zero exactly when psi solves a Schrodinger equation shifted by some real
    scalar lambda(t), i.e. when it belongs to the phase-equivalence class of
    a solution. Evaluated as the component of (i dpsi/dt - H psi)
    orthogonal to psi.
    """
    s = traj.states
    if s.shape[0] < 3:
        raise ValueError("need at least 3 nodes for a central difference")
    mid = s[1:-1]
    h = evaluate_many(spec, traj.times[1:-1])
    r = 1j * _central_derivative(s, traj.grid.dt) - np.einsum("kij,kj->ki", h, mid)
    coef = np.einsum("ki,ki->k", mid.conj(), r) / np.einsum("ki,ki->k", mid.conj(), mid)
    return float(np.max(np.linalg.norm(r - coef[:, None] * mid, axis=1)))


@dataclass(frozen=True)
class NonlinearSuperpositionResult:
    """``condition_gap``: max_k |<psi1|H|psi1> - <psi2|H|psi2>|.
    ``residual``: nonlinear residual of c1 psibar1 + c2 psibar2.
    ``shift_residual``: the same superposition against every shifted linear
    equation (see ``common_shift_residual``).
    """

    condition_gap: float
    residual: float
    shift_residual: float


def _expectations(traj: Trajectory, spec: HamiltonianSpec) -> np.ndarray:
    h = evaluate_many(spec, traj.times)
    return np.einsum("ki,kij,kj->k", traj.states.conj(), h, traj.states).real


def nonlinear_superposition_test(
    t1: Trajectory, t2: Trajectory, s: SuperpositionSpec, spec: HamiltonianSpec
) -> NonlinearSuperpositionResult:
    gap = float(np.max(np.abs(_expectations(t1, spec) - _expectations(t2, spec))))
    b1 = parallel_transport_representative(t1)
    b2 = parallel_transport_representative(t2)
    sup = superpose(b1, b2, s)
    return NonlinearSuperpositionResult(gap, nonlinear_residual(sup, spec), common_shift_residual(sup, spec))


def interference_intensity(a, b) -> float:
    """||a + b||^2, equal to 2 + 2 Re<a|b> for unit vectors."""
    u, v = as_vector(a), as_vector(b)
    if u.shape != v.shape:
        raise DimensionMismatchError("interfering states differ in dimension")
    return float(np.linalg.norm(u + v) ** 2)


# resonance ----------------------------------------------------------------


@dataclass(frozen=True)
class ResonanceResult:
    n_value: float
    m_value: float
    n_residual: float
    m_residual: float

    def resonant(self, tol: float = 1e-6) -> bool:
        return self.n_residual < tol and self.m_residual < tol


def level_splitting(mu_b: float, omega: float, theta: float) -> float:
    """2 mu_b cos(alpha) + omega cos(theta - alpha): difference of the two phase rates."""
    a = alpha_tilt(mu_b, omega, theta)
    return 2 * mu_b * math.cos(a) + omega * math.cos(theta - a)


def resonance_check(mu_b: float, omega: float, theta: float, period: float) -> ResonanceResult:
    """Distances of T omega / 2 pi and T [2 mu_b cos a + omega cos(theta - a)] / 2 pi to integers."""
    if not period > 0:
        raise GeophaseError("period must be positive")
    n = period * omega / (2 * math.pi)
    m = period * level_splitting(mu_b, omega, theta) / (2 * math.pi)
    return ResonanceResult(n, m, abs(n - round(n)), abs(m - round(m)))


def resonant_mu_b(omega: float, theta: float, m: int, n: int = 1) -> float:
    """Field strength that makes T = 2 pi n / omega satisfy both resonance conditions.

    Root of splitting(mu_b) - m omega / n. The splitting equals omega at
    mu_b = 0, stays below omega until its minimum and then grows without
    bound, so a target above omega has exactly one positive root.
    """
    target = m * omega / n
    if target <= omega:
        raise GeophaseError(f"m/n = {m}/{n} must exceed 1 for a positive field strength")

    def f(mu):
        return level_splitting(mu, omega, theta) - target

    hi = target
    while f(hi) < 0:
        hi *= 2
    return brentq(f, 1e-12 * target, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)


# adiabatic interference conditions ---------------------------------------------


@dataclass(frozen=True)
class AdiabaticConditions:
    """``pointwise_gap`` = max_t |E1 - E2|, ``integrated_gap`` = |int E1 - int E2|.

    ``strong`` holds when the energies agree at every node, ``weak`` when
    only their integrals over the period agree.
    """

    pointwise_gap: float
    integrated_gap: float
    strong: bool
    weak: bool


def adiabatic_interference_conditions(
    spec: HamiltonianSpec, grid: TimeGrid, tracks: tuple[int, int] = (0, 1), tol: float = 1e-9
) -> AdiabaticConditions:
    """Energy tracks follow eigenvector continuity, so crossing levels keep their labels."""
    ef = eigen_frame(spec, grid, gap_tol=None)
    e1, e2 = ef.energies[:, tracks[0]], ef.energies[:, tracks[1]]
    pointwise = float(np.max(np.abs(e1 - e2)))
    integrated = float(abs(np.trapezoid(e1 - e2, dx=grid.dt)))
    return AdiabaticConditions(pointwise, integrated, pointwise <= tol, integrated <= tol)
