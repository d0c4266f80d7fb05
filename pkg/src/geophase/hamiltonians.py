"""Time-dependent Hermitian generators, instantaneous eigenframes and
closed-form spin-1/2 oracles.

Built-in families use H(t) = -mu_b * n(t).sigma with |n| = 1:

* ``static_spin``: n = (0, 0, 1). ``theta`` is not a field parameter here; it
  fixes the polar angle of the precessing initial state (w_plus, w_minus).
* ``rotating_spin``: n = (sin(theta) cos(omega t), sin(theta) sin(omega t), cos(theta)).
* ``custom``: Hermitian samples interpolated linearly entrywise, then
  re-symmetrized.

Branch ``plus`` is the state aligned with the field (energy -mu_b); ``minus``
is the anti-aligned one.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import (
    DegeneracyError,
    ExtrapolationError,
    GeophaseError,
    NoOracleError,
    UndefinedTiltError,
)
from .state import PAULI, FrameTrajectory, TimeGrid, Trajectory, wrap_phase

FAMILIES = ("static_spin", "rotating_spin", "custom")
BRANCHES = ("plus", "minus")

HERMITIAN_TOL = 1e-12
DEFAULT_GAP_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class HamiltonianSpec:
    family: str
    params: Mapping[str, float] = field(default_factory=dict)
    sample_times: Optional[np.ndarray] = None
    sample_matrices: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise GeophaseError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        params = {k: float(v) for k, v in dict(self.params).items()}
        object.__setattr__(self, "params", params)
        if self.family == "custom":
            self._init_custom()
            return
        mu_b = params.get("mu_b")
        if mu_b is None or not mu_b > 0:
            raise GeophaseError("mu_b must be given and positive")
        theta = params.get("theta")
        if theta is not None and not 0.0 <= theta <= math.pi:
            raise GeophaseError(f"theta must lie in [0, pi], got {theta}")
        if self.family == "rotating_spin":
            if theta is None:
                raise GeophaseError("rotating_spin requires theta")
            omega = params.get("omega")
            if omega is None or not omega > 0:
                raise GeophaseError("omega must be given and positive")

    def _init_custom(self):
        if self.sample_times is None or self.sample_matrices is None:
            raise GeophaseError("custom family needs sample_times and sample_matrices")
        t = np.array(self.sample_times, dtype=float)
        m = np.array(self.sample_matrices, dtype=complex)
        if t.ndim != 1 or t.size < 2:
            raise GeophaseError("custom family needs at least two samples")
        if m.shape[0] != t.size or m.ndim != 3 or m.shape[1] != m.shape[2] or m.shape[1] < 2:
            raise GeophaseError(f"sample matrices have shape {m.shape}, expected ({t.size}, d, d)")
        if np.any(np.diff(t) <= 0):
            raise GeophaseError("sample times must be strictly increasing")
        herm = np.max(np.abs(m - np.conj(np.swapaxes(m, 1, 2))))
        if herm > HERMITIAN_TOL * max(1.0, np.max(np.abs(m))):
            raise GeophaseError(f"custom samples are not Hermitian (deviation {herm:.3g})")
        t.setflags(write=False)
        m.setflags(write=False)
        object.__setattr__(self, "sample_times", t)
        object.__setattr__(self, "sample_matrices", m)

    # constructors -------------------------------------------------------
    @classmethod
    def static_spin(cls, mu_b: float, theta: Optional[float] = None) -> "HamiltonianSpec":
        p = {"mu_b": mu_b}
        if theta is not None:
            p["theta"] = theta
        return cls("static_spin", p)

    @classmethod
    def rotating_spin(cls, mu_b: float, omega: float, theta: float) -> "HamiltonianSpec":
        return cls("rotating_spin", {"mu_b": mu_b, "omega": omega, "theta": theta})

    @classmethod
    def custom(cls, times, matrices) -> "HamiltonianSpec":
        return cls("custom", {}, np.asarray(times, dtype=float), np.asarray(matrices, dtype=complex))

    @classmethod
    def sampled(cls, func, grid: TimeGrid) -> "HamiltonianSpec":
        """Custom spec built by sampling ``func(t)`` at every grid node."""
        t = grid.nodes
        return cls.custom(t, np.array([func(x) for x in t]))

    # properties ---------------------------------------------------------
    @property
    def dim(self) -> int:
        return 2 if self.family != "custom" else self.sample_matrices.shape[1]

    @property
    def spec_id(self) -> str:
        if self.family == "custom":
            return f"custom(d={self.dim},samples={self.sample_times.size})"
        inner = ",".join(f"{k}={v!r}" for k, v in sorted(self.params.items()))
        return f"{self.family}({inner})"

    @property
    def natural_period(self) -> float:
        if self.family == "static_spin":
            return math.pi / self.params["mu_b"]
        if self.family == "rotating_spin":
            return 2 * math.pi / self.params["omega"]
        return float(self.sample_times[-1] - self.sample_times[0])

    @property
    def rate_scale(self) -> float:
        """Fastest angular rate in the problem, used to choose default grids."""
        if self.family == "static_spin":
            return self.params["mu_b"]
        if self.family == "rotating_spin":
            return self.params["mu_b"] + self.params["omega"]
        return float(np.max(np.linalg.norm(self.sample_matrices, ord=2, axis=(1, 2))))

    def theta(self) -> float:
        if "theta" not in self.params:
            raise GeophaseError(f"{self.family} spec has no theta parameter")
        return self.params["theta"]


def field_direction(spec: HamiltonianSpec, t):
    """Unit field direction n(t), shape (..., 3)."""
    t = np.asarray(t, dtype=float)
    if spec.family == "static_spin":
        out = np.zeros(t.shape + (3,))
        out[..., 2] = 1.0
        return out
    th, om = spec.params["theta"], spec.params["omega"]
    return np.stack(
        [
            np.sin(th) * np.cos(om * t),
            np.sin(th) * np.sin(om * t),
            np.full(t.shape, np.cos(th)),
        ],
        axis=-1,
    )


def evaluate_many(spec: HamiltonianSpec, times) -> np.ndarray:
    """H(t) for an array of times, shape (len(times), d, d)."""
    t = np.atleast_1d(np.asarray(times, dtype=float))
    if spec.family != "custom":
        n = field_direction(spec, t)
        return -spec.params["mu_b"] * np.einsum("ka,aij->kij", n, PAULI)
    ts, ms = spec.sample_times, spec.sample_matrices
    eps = 1e-9 * max(1.0, ts[-1] - ts[0])
    if np.any(t < ts[0] - eps) or np.any(t > ts[-1] + eps):
        bad = t[(t < ts[0] - eps) | (t > ts[-1] + eps)][0]
        raise ExtrapolationError(f"t = {bad} outside sampled range [{ts[0]}, {ts[-1]}]")
    tc = np.clip(t, ts[0], ts[-1])
    i = np.clip(np.searchsorted(ts, tc, side="right") - 1, 0, ts.size - 2)
    w = ((tc - ts[i]) / (ts[i + 1] - ts[i]))[:, None, None]
    h = (1 - w) * ms[i] + w * ms[i + 1]
    return 0.5 * (h + np.conj(np.swapaxes(h, 1, 2)))


def evaluate(spec: HamiltonianSpec, t: float) -> np.ndarray:
    return evaluate_many(spec, [t])[0]


def hermiticity_error(h: np.ndarray) -> float:
    return float(np.max(np.abs(h - np.conj(np.swapaxes(h, -1, -2)))))


# eigenframes ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EigenFrame:
    """Instantaneous eigenvectors continued smoothly over a grid.

    ``frame.vectors[k, n]`` is eigenvector n at node k and ``energies[k, n]``
    its eigenvalue. ``closure_error`` is max |H(t_end) - H(t_start)|.
    """

    frame: FrameTrajectory
    energies: np.ndarray
    closure_error: float

    @property
    def grid(self) -> TimeGrid:
        return self.frame.grid


def _phase_continue(vecs: np.ndarray) -> np.ndarray:
    """Rephase each track so consecutive overlaps are real and positive."""
    ov = np.einsum("kni,kni->kn", vecs[:-1].conj(), vecs[1:])
    steps = np.angle(ov)
    cum = np.concatenate([np.zeros((1, vecs.shape[1])), np.cumsum(steps, axis=0)])
    return vecs * np.exp(-1j * cum)[:, :, None]


def eigen_frame(
    spec: HamiltonianSpec, grid: TimeGrid, gap_tol: Optional[float] = DEFAULT_GAP_TOL
) -> EigenFrame:
    """Eigenvectors at every node, tracked by overlap and phase-continued.

    Tracks are ordered by ascending energy at ``t_start``; labels then follow
    eigenvector continuity rather than re-sorting. With ``gap_tol=None`` the
    degeneracy check is skipped (tracks may cross).
    """
    hs = evaluate_many(spec, grid.nodes)
    energies, vecs = np.linalg.eigh(hs)
    vecs = np.swapaxes(vecs, 1, 2).copy()  # rows are eigenvectors
    d = vecs.shape[1]
    if gap_tol is not None and d > 1:
        gaps = np.min(np.diff(energies, axis=1), axis=1)
        k = int(np.argmin(gaps))
        if gaps[k] <= gap_tol:
            raise DegeneracyError(
                f"eigenvalue gap {gaps[k]:.3g} <= {gap_tol:g} at node {k} (t = {grid.nodes[k]:.6g})"
            )
    # permutation tracking: needed only where sorted order disagrees with continuity
    mag = np.abs(np.einsum("kni,kmi->knm", vecs[:-1].conj(), vecs[1:])) ** 2
    if not np.all(np.diagonal(mag, axis1=1, axis2=2) > 0.5):
        for k in range(1, vecs.shape[0]):
            m = np.abs(vecs[k - 1].conj() @ vecs[k].T) ** 2
            _, perm = linear_sum_assignment(-m)
            vecs[k] = vecs[k][perm]
            energies[k] = energies[k][perm]
    vecs = _phase_continue(vecs)
    closure = float(np.max(np.abs(hs[-1] - hs[0])))
    return EigenFrame(FrameTrajectory(grid, vecs), energies, closure)


def eigen_residual(spec: HamiltonianSpec, ef: EigenFrame) -> float:
    hs = evaluate_many(spec, ef.grid.nodes)
    v = ef.frame.vectors
    hv = np.einsum("kij,knj->kni", hs, v)
    return float(np.max(np.linalg.norm(hv - ef.energies[:, :, None] * v, axis=-1)))


# closed forms -------------------------------------------------------------


def alpha_tilt(mu_b: float, omega: float, theta: float) -> float:
    """Tilt angle that diagonalizes the rotating-frame effective Hamiltonian.

    tan(alpha) = omega sin(theta) / (2 mu_b + omega cos(theta)).
    """
    num = omega * math.sin(theta)
    den = 2 * mu_b + omega * math.cos(theta)
    scale = 1e-12 * (2 * abs(mu_b) + abs(omega))
    if abs(num) <= scale and abs(den) <= scale:
        raise UndefinedTiltError("tilt undefined: numerator and denominator both vanish")
    return math.atan2(num, den)


def _branch_sign(branch: str) -> int:
    if branch not in BRANCHES:
        raise GeophaseError(f"branch must be one of {BRANCHES}, got {branch!r}")
    return 1 if branch == "plus" else -1


def eigenvectors(theta: float, azimuth) -> np.ndarray:
    """v_plus, v_minus for a field at polar angle theta and azimuth, shape (..., 2, 2)."""
    az = np.asarray(azimuth, dtype=float)
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    e = np.exp(-1j * az)
    vp = np.stack([c * e, np.full(az.shape, s, dtype=complex)], axis=-1)
    vm = np.stack([s * e, np.full(az.shape, -c, dtype=complex)], axis=-1)
    return np.stack([vp, vm], axis=-2)


def analytic_w_frame(
    spec: HamiltonianSpec, grid: TimeGrid, alpha: Optional[float] = None
) -> FrameTrajectory:
    """Closed-form periodic frame (w_plus, w_minus) on the grid.

    static_spin: w_plus = cos(theta/2) v_+ + sin(theta/2) e^{-2i mu_b t} v_-,
    w_minus = -sin(theta/2) e^{2i mu_b t} v_+ + cos(theta/2) v_-.
    rotating_spin: eigenvectors tilted by alpha (default ``alpha_tilt``).
    """
    t = grid.nodes
    if spec.family == "static_spin":
        th, mu = spec.theta(), spec.params["mu_b"]
        c, s = math.cos(th / 2), math.sin(th / 2)
        e = np.exp(-2j * mu * t)
        wp = np.stack([np.full(t.shape, c, dtype=complex), s * e], axis=-1)
        wm = np.stack([-s * np.conj(e), np.full(t.shape, c, dtype=complex)], axis=-1)
        return FrameTrajectory(grid, np.stack([wp, wm], axis=1))
    if spec.family == "rotating_spin":
        p = spec.params
        a = alpha_tilt(p["mu_b"], p["omega"], p["theta"]) if alpha is None else alpha
        return FrameTrajectory(grid, eigenvectors(p["theta"] - a, p["omega"] * t))
    raise NoOracleError("no closed-form frame for custom specs")


def analytic_energies(spec: HamiltonianSpec) -> tuple[float, float]:
    """Constant phase rates (E_plus, E_minus) with psi_pm(t) = w_pm(t) exp(-i E_pm t)."""
    p = spec.params
    mu = p["mu_b"]
    if spec.family == "static_spin":
        return -mu, mu
    if spec.family == "rotating_spin":
        om, th = p["omega"], p["theta"]
        a = alpha_tilt(mu, om, th)
        c = math.cos(th - a)
        return -mu * math.cos(a) - 0.5 * om * (1 + c), mu * math.cos(a) - 0.5 * om * (1 - c)
    raise NoOracleError("no closed-form amplitudes for custom specs")


def analytic_amplitude(spec: HamiltonianSpec, grid: TimeGrid, branch: str = "plus") -> Trajectory:
    """Exact Schrodinger solution psi_pm(t) = w_pm(t) exp(-i E_pm t) with psi(0) = w_pm(0)."""
    n = 0 if _branch_sign(branch) > 0 else 1
    frame = analytic_w_frame(spec, grid)
    e = analytic_energies(spec)[n]
    t = grid.nodes - grid.t_start
    states = frame.track(n) * np.exp(-1j * e * t)[:, None]
    return Trajectory(grid, states, spec.spec_id)


def initial_state(spec: HamiltonianSpec, tag: str) -> np.ndarray:
    """Named initial states at t = 0: w_plus, w_minus, v_plus, v_minus."""
    if spec.family == "custom":
        raise NoOracleError("named initial states need a built-in family")
    grid = TimeGrid(0.0, 1.0, 2)
    if tag in ("w_plus", "w_minus"):
        if spec.family == "static_spin" and "theta" not in spec.params:
            raise GeophaseError("w_plus/w_minus for static_spin need theta")
        return analytic_w_frame(spec, grid).vectors[0, 0 if tag == "w_plus" else 1].copy()
    if tag in ("v_plus", "v_minus"):
        if spec.family == "static_spin":
            return np.array([1, 0] if tag == "v_plus" else [0, 1], dtype=complex)
        return eigenvectors(spec.params["theta"], 0.0)[0 if tag == "v_plus" else 1].copy()
    raise GeophaseError(f"unknown initial-state tag {tag!r}")


@dataclass(frozen=True)
class AnalyticPhases:
    """Closed-form phases for one branch.

    ``aa_phase_unwrapped`` is the connection integral of the periodic
    representative; ``solid_angle`` is signed by the traversal direction of
    the polarization vector, so that aa_phase = -solid_angle / 2 (mod 2 pi).
    """

    total_phase: float
    dynamical: float
    aa_phase: float
    aa_phase_unwrapped: float
    berry_phase: Optional[float]
    solid_angle: float
    period: float
    alpha: Optional[float] = None


def analytic_phase_report(spec: HamiltonianSpec, branch: str = "plus") -> AnalyticPhases:
    sign = _branch_sign(branch)
    p = spec.params
    if spec.family == "static_spin":
        th, mu = spec.theta(), p["mu_b"]
        period = math.pi / mu
        beta = sign * math.pi * (1 - math.cos(th))
        dyn = -sign * math.pi * math.cos(th)
        # polarization azimuth runs as -2 mu_b t: clockwise
        pol = th if sign > 0 else math.pi - th
        omega_signed = -2 * math.pi * (1 - math.cos(pol))
        return AnalyticPhases(
            wrap_phase(beta - dyn), dyn, wrap_phase(beta), beta, 0.0, omega_signed, period
        )
    if spec.family == "rotating_spin":
        mu, om, th = p["mu_b"], p["omega"], p["theta"]
        a = alpha_tilt(mu, om, th)
        period = 2 * math.pi / om
        beta = math.pi * (1 + sign * math.cos(th - a))
        dyn = -sign * mu * math.cos(a) * period
        gamma = wrap_phase(math.pi * (1 + sign * math.cos(th)))
        pol = th - a if sign > 0 else math.pi - (th - a)
        omega_signed = 2 * math.pi * (1 - math.cos(pol))
        return AnalyticPhases(
            wrap_phase(beta - dyn), dyn, wrap_phase(beta), beta, gamma, omega_signed, period, a
        )
    raise NoOracleError("no analytic phase oracle for custom specs")


def analytic_interference(spec: HamiltonianSpec, branch: str = "plus") -> float:
    """|psi(T) + psi(0)|^2 = 2 + 2 cos(total phase) for the exact cyclic solution."""
    return 2.0 + 2.0 * math.cos(analytic_phase_report(spec, branch).total_phase)


def literal_interference(spec: HamiltonianSpec) -> float:
    """Interference of psi_plus written with an unsigned solid angle (the "literal" form).

    static: 2 + 2 cos(pi cos(theta) - Omega/2), Omega = 2 pi (1 - cos theta).
    rotating: 2 + 2 cos(mu_b cos(alpha) T - Omega/2), Omega = 2 pi (1 - cos(theta - alpha)).
    The static expression depends on theta while the exact value does not;
    both are reported side by side.
    """
    p = spec.params
    if spec.family == "static_spin":
        th = spec.theta()
        solid = 2 * math.pi * (1 - math.cos(th))
        return 2.0 + 2.0 * math.cos(math.pi * math.cos(th) - 0.5 * solid)
    if spec.family == "rotating_spin":
        mu, om, th = p["mu_b"], p["omega"], p["theta"]
        a = alpha_tilt(mu, om, th)
        solid = 2 * math.pi * (1 - math.cos(th - a))
        return 2.0 + 2.0 * math.cos(mu * math.cos(a) * 2 * math.pi / om - 0.5 * solid)
    raise NoOracleError("no literal interference formula for custom specs")


# custom ingestion --------------------------------------------------------


def _parse_matrix(entries, where: str) -> np.ndarray:
    flat = np.asarray(entries, dtype=float)
    if flat.ndim != 2 or flat.shape[1] != 2:
        raise GeophaseError(f"{where}: matrix must be a list of [re, im] pairs")
    d = int(round(math.sqrt(flat.shape[0])))
    if d * d != flat.shape[0] or d < 2:
        raise GeophaseError(f"{where}: {flat.shape[0]} entries is not a square matrix with d >= 2")
    return (flat[:, 0] + 1j * flat[:, 1]).reshape(d, d)


def parse_custom_samples(records) -> HamiltonianSpec:
    """Build a custom spec from ``[{"t": ..., "matrix": [[re, im], ...]}, ...]``.

    Matrix entries are row-major. A mapping with a ``samples`` key is accepted too.
    """
    if isinstance(records, Mapping):
        records = records.get("samples")
    if not isinstance(records, list) or len(records) < 2:
        raise GeophaseError("custom samples: need a list of at least two records")
    times, mats = [], []
    for i, rec in enumerate(records):
        if not isinstance(rec, Mapping) or "t" not in rec or "matrix" not in rec:
            raise GeophaseError(f"custom samples[{i}]: record needs 't' and 'matrix'")
        times.append(float(rec["t"]))
        mats.append(_parse_matrix(rec["matrix"], f"custom samples[{i}]"))
    if len({m.shape for m in mats}) != 1:
        raise GeophaseError("custom samples: matrices differ in dimension")
    return HamiltonianSpec.custom(times, np.array(mats))


def load_custom_samples(path) -> HamiltonianSpec:
    return parse_custom_samples(json.loads(Path(path).read_text()))


def dump_custom_samples(spec: HamiltonianSpec) -> list:
    out = []
    for t, m in zip(spec.sample_times, spec.sample_matrices):
        flat = m.reshape(-1)
        out.append({"t": float(t), "matrix": [[float(z.real), float(z.imag)] for z in flat]})
    return out
