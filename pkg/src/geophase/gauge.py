"""Gauge actions on amplitudes and frames, and the parallel-transport lift."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .hamiltonians import HamiltonianSpec, evaluate_many
from .phases import phase_increments
from .state import FrameTrajectory, TimeGrid, Trajectory

FOURIER_MODES = 8


@dataclass(frozen=True, eq=False)
class GaugeFunction:
    """alpha(t) = c0 + drift * tau + sum_m [a_m cos(2 pi m tau) + b_m sin(2 pi m tau)]

    with tau = (t - t_start) / (t_end - t_start). The function is periodic
    over the interval exactly when ``drift`` is zero.
    """

    t_start: float
    t_end: float
    constant: float = 0.0
    cos_coeffs: np.ndarray = field(default_factory=lambda: np.zeros(0))
    sin_coeffs: np.ndarray = field(default_factory=lambda: np.zeros(0))
    drift: float = 0.0
    seed: int | None = None

    def __post_init__(self):
        a = np.asarray(self.cos_coeffs, dtype=float)
        b = np.asarray(self.sin_coeffs, dtype=float)
        if a.shape != b.shape:
            raise ValueError("cos and sin coefficient arrays must match")
        object.__setattr__(self, "cos_coeffs", a)
        object.__setattr__(self, "sin_coeffs", b)

    @property
    def periodic(self) -> bool:
        return self.drift == 0.0

    def __call__(self, t):
        tau = (np.asarray(t, dtype=float) - self.t_start) / (self.t_end - self.t_start)
        m = np.arange(1, self.cos_coeffs.size + 1)
        arg = 2 * np.pi * np.multiply.outer(tau, m)
        return self.constant + self.drift * tau + np.cos(arg) @ self.cos_coeffs + np.sin(arg) @ self.sin_coeffs

    def derivative(self, t):
        tau = (np.asarray(t, dtype=float) - self.t_start) / (self.t_end - self.t_start)
        m = np.arange(1, self.cos_coeffs.size + 1)
        arg = 2 * np.pi * np.multiply.outer(tau, m)
        w = 2 * np.pi * m
        dtau = self.drift + (-np.sin(arg) * w) @ self.cos_coeffs + (np.cos(arg) * w) @ self.sin_coeffs
        return dtau / (self.t_end - self.t_start)

    @classmethod
    def constant_phase(cls, grid: TimeGrid, value: float) -> "GaugeFunction":
        return cls(grid.t_start, grid.t_end, constant=value)

    @classmethod
    def linear(cls, grid: TimeGrid, rate: float, offset: float = 0.0) -> "GaugeFunction":
        """alpha(t) = offset + rate * (t - t_start)."""
        return cls(grid.t_start, grid.t_end, constant=offset, drift=rate * grid.period)


def random_gauge(
    grid: TimeGrid,
    seed: int,
    periodic: bool = True,
    modes: int = FOURIER_MODES,
) -> GaugeFunction:
    """Smooth random gauge: coefficients uniform in [-1, 1] from ``seed``.

    Non-periodic draws add a drift term so alpha(t_end) != alpha(t_start).
    """
    rng = np.random.default_rng(seed)
    coeffs = rng.uniform(-1.0, 1.0, size=2 * modes + 2)
    drift = 0.0
    if not periodic:
        drift = coeffs[-1] + np.copysign(1.0, coeffs[-1])
    return GaugeFunction(
        grid.t_start,
        grid.t_end,
        constant=coeffs[0] * np.pi,
        cos_coeffs=coeffs[1 : modes + 1],
        sin_coeffs=coeffs[modes + 1 : 2 * modes + 1],
        drift=drift,
        seed=seed,
    )


def rephase_trajectory(traj: Trajectory, g: GaugeFunction) -> Trajectory:
    """psi(t_k) -> exp(i alpha(t_k)) psi(t_k)."""
    phase = np.exp(1j * g(traj.times))
    return traj.with_states(traj.states * phase[:, None])


def rephase_frame(frame: FrameTrajectory, gauges: Sequence[GaugeFunction]) -> FrameTrajectory:
    """w_n(t_k) -> exp(i alpha_n(t_k)) w_n(t_k), one gauge function per row."""
    if len(gauges) != frame.dim:
        raise ValueError(f"need {frame.dim} gauge functions, got {len(gauges)}")
    t = frame.grid.nodes
    phases = np.stack([np.exp(1j * g(t)) for g in gauges], axis=1)
    return FrameTrajectory(frame.grid, frame.vectors * phases[:, :, None])


def parallel_transport_representative(traj: Trajectory) -> Trajectory:
    """Lift with real-positive consecutive overlaps.

    psibar_k = exp(-i sum_{j<k} arg <psi_j|psi_{j+1}>) psi_k, the discrete
    form of exp(i int <psi|i d/dt|psi> dt) psi. psibar_0 = psi_0.
    """
    inc = phase_increments(traj.states)
    cum = np.concatenate([[0.0], np.cumsum(inc)])
    return traj.with_states(traj.states * np.exp(-1j * cum)[:, None])


def _central_derivative(states: np.ndarray, dt: float) -> np.ndarray:
    return (states[2:] - states[:-2]) / (2 * dt)


def nonlinear_residual(bar_traj: Trajectory, spec: HamiltonianSpec) -> float:
    """max_k || i dpsi/dt - [H - <psi|H|psi>/<psi|psi>] psi ||  over interior nodes."""
    s = bar_traj.states
    if s.shape[0] < 3:
        raise ValueError("need at least 3 nodes for a central difference")
    h = evaluate_many(spec, bar_traj.times[1:-1])
    mid = s[1:-1]
    hpsi = np.einsum("kij,kj->ki", h, mid)
    expect = np.einsum("ki,ki->k", mid.conj(), hpsi).real / np.einsum("ki,ki->k", mid.conj(), mid).real
    r = 1j * _central_derivative(s, bar_traj.grid.dt) - (hpsi - expect[:, None] * mid)
    return float(np.max(np.linalg.norm(r, axis=1)))


def density_invariance(traj: Trajectory, g: GaugeFunction) -> float:
    """Largest entrywise change of |psi><psi| under ``rephase_trajectory``."""
    s = traj.states
    r = rephase_trajectory(traj, g).states
    rho = np.einsum("ki,kj->kij", s, s.conj())
    rho2 = np.einsum("ki,kj->kij", r, r.conj())
    return float(np.max(np.abs(rho2 - rho)))


def generator_residual(traj: Trajectory, spec: HamiltonianSpec, g: GaugeFunction | None = None) -> float:
    """max_k || i dpsi/dt - (H - alpha'(t)) psi || over interior nodes.

    With ``g`` None this is the plain linear Schrodinger residual.
    """
    s = traj.states
    if s.shape[0] < 3:
        raise ValueError("need at least 3 nodes for a central difference")
    t = traj.times[1:-1]
    h = evaluate_many(spec, t)
    hpsi = np.einsum("kij,kj->ki", h, s[1:-1])
    if g is not None:
        hpsi = hpsi - g.derivative(t)[:, None] * s[1:-1]
    r = 1j * _central_derivative(s, traj.grid.dt) - hpsi
    return float(np.max(np.linalg.norm(r, axis=1)))
