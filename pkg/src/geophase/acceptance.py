"""Built-in verification suite: one function per acceptance criterion.

Every criterion takes ``steps_factor`` which scales all grid sizes; values
below 1 coarsen the grids and are used to confirm that the suite detects
truncation growth.
"""
from __future__ import annotations

import math
import sys
import time
import traceback
from dataclasses import dataclass, field

import numpy as np

from .gauge import (
    nonlinear_residual,
    parallel_transport_representative,
    random_gauge,
    rephase_frame,
    rephase_trajectory,
)
from .hamiltonians import (
    HamiltonianSpec,
    alpha_tilt,
    analytic_amplitude,
    analytic_energies,
    analytic_w_frame,
    eigen_frame,
    initial_state,
)
from .phases import aa_phase, berry_phase, phase_report
from .propagator import check_cyclic, default_steps, norm_drift, propagate
from .state import TimeGrid, wrap_phase
from .superposition import (
    SuperpositionSpec,
    nonlinear_superposition_test,
    resonance_check,
    resonant_mu_b,
    superpose,
)
from .wframe import build_w_frame, effective_hamiltonian, reconstruct_amplitude

STATIC_THETAS = (0.0, math.pi / 6, math.pi / 4, math.pi / 3, math.pi / 2, 2 * math.pi / 3, 5 * math.pi / 6, math.pi)
ROTATING_THETAS = (math.pi / 6, math.pi / 3, math.pi / 2)
ROTATING_RATIOS = (0.1, 1.0, 10.0)
TIME_BUDGET = 60.0


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str
    metrics: dict = field(default_factory=dict)

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:2d} {self.title}: {self.detail}"


def _n(base: int, factor: float) -> int:
    return max(2, int(round(base * factor)))


def _static_runs(factor: float):
    out = []
    for th in STATIC_THETAS:
        spec = HamiltonianSpec.static_spin(1.0, th)
        grid = TimeGrid(0.0, math.pi, _n(20000, factor))
        traj = propagate(spec, initial_state(spec, "w_plus"), grid)
        out.append((th, spec, traj))
    return out


def _rotating_runs(factor: float):
    out = []
    for th in ROTATING_THETAS:
        for r in ROTATING_RATIOS:
            spec = HamiltonianSpec.rotating_spin(1.0, r, th)
            grid = TimeGrid(0.0, spec.natural_period, _n(40000, factor))
            traj = propagate(spec, initial_state(spec, "w_plus"), grid)
            out.append((th, r, spec, traj))
    return out


def criterion_1(steps_factor: float = 1.0) -> CriterionResult:
    tol = 1e-6
    worst, slowest = 0.0, 0.0
    for th in STATIC_THETAS:
        t0 = time.perf_counter()
        spec = HamiltonianSpec.static_spin(1.0, th)
        grid = TimeGrid(0.0, math.pi, _n(20000, steps_factor))
        traj = propagate(spec, initial_state(spec, "w_plus"), grid)
        beta = aa_phase(traj)
        slowest = max(slowest, time.perf_counter() - t0)
        worst = max(worst, abs(wrap_phase(beta - math.pi * (1 - math.cos(th)))))
    ok = worst <= tol and slowest < 1.0
    return CriterionResult(
        1, "static-spin AA phase", ok,
        f"max |d beta| = {worst:.2e} (tol {tol:g}), slowest point {slowest:.2f} s (limit 1 s)",
        {"max_error": worst, "slowest_seconds": slowest},
    )


def criterion_2(steps_factor: float = 1.0) -> CriterionResult:
    tol = 1e-8
    worst = 0.0
    for _, _, traj in _static_runs(steps_factor):
        v = check_cyclic(traj)
        worst = max(worst, abs(wrap_phase(v.total_phase - math.pi)) if v.is_cyclic else math.inf)
    return CriterionResult(2, "static-spin total phase", worst <= tol,
                           f"max |phi - pi| = {worst:.2e} (tol {tol:g})", {"max_error": worst})


def criterion_3(steps_factor: float = 1.0) -> CriterionResult:
    tol = 1e-5
    worst = 0.0
    for th, r, spec, traj in _rotating_runs(steps_factor):
        a = alpha_tilt(1.0, r, th)
        worst = max(worst, abs(wrap_phase(aa_phase(traj) - math.pi * (1 + math.cos(th - a)))))
    return CriterionResult(3, "rotating-spin AA phase", worst <= tol,
                           f"max |d beta| = {worst:.2e} over 9 points (tol {tol:g})", {"max_error": worst})


def criterion_4(steps_factor: float = 1.0) -> CriterionResult:
    tol = 1e-8
    off = diag = 0.0
    specs = [HamiltonianSpec.rotating_spin(1.0, r, th) for th in ROTATING_THETAS for r in ROTATING_RATIOS]
    specs += [HamiltonianSpec.static_spin(1.0, th) for th in (math.pi / 6, math.pi / 3, math.pi / 2)]
    for spec in specs:
        grid = TimeGrid(0.0, spec.natural_period, _n(100000, steps_factor))
        heff = effective_hamiltonian(analytic_w_frame(spec, grid), spec)
        mu = spec.params["mu_b"]
        off = max(off, heff.max_offdiagonal() / mu)
        diag = max(diag, float(np.max(np.abs(heff.diagonal() - np.array(analytic_energies(spec))))))
    ok = off <= tol and diag <= tol
    return CriterionResult(4, "effective-Hamiltonian diagonalization", ok,
                           f"max |H12|/mu_b = {off:.2e}, max diagonal error = {diag:.2e} (tol {tol:g})",
                           {"offdiagonal": off, "diagonal": diag})


def criterion_5(steps_factor: float = 1.0) -> CriterionResult:
    tol = 1e-7
    worst = 0.0
    for _, spec, traj in _static_runs(steps_factor):
        worst = max(worst, phase_report(traj, spec).decomposition_residual)
    for _, _, spec, traj in _rotating_runs(steps_factor):
        worst = max(worst, phase_report(traj, spec).decomposition_residual)
    return CriterionResult(5, "decomposition identity", worst <= tol,
                           f"max |wrap(phi - beta + D)| = {worst:.2e} over 17 runs (tol {tol:g})",
                           {"max_residual": worst})


def _beta_gamma_gap(omega: float, steps: int) -> float:
    spec = HamiltonianSpec.rotating_spin(1.0, omega, math.pi / 3)
    grid = TimeGrid(0.0, spec.natural_period, steps)
    rep = phase_report(propagate(spec, initial_state(spec, "w_plus"), grid), spec)
    return abs(wrap_phase(rep.aa_phase - rep.berry_phase))


def criterion_6(steps_factor: float = 1.0) -> CriterionResult:
    n = _n(100000, steps_factor)
    g1, g2 = _beta_gamma_gap(0.01, n), _beta_gamma_gap(0.02, n)
    ratio = g1 / g2
    return CriterionResult(6, "adiabatic limit", 0.4 <= ratio <= 0.6,
                           f"|beta-gamma| = {g1:.4e} (omega 0.01) / {g2:.4e} (omega 0.02) = {ratio:.4f} (want [0.4, 0.6])",
                           {"gap_001": g1, "gap_002": g2, "ratio": ratio})


def criterion_7(steps_factor: float = 1.0) -> CriterionResult:
    tol = 0.02
    spec = HamiltonianSpec.rotating_spin(1.0, 1000.0, math.pi / 3)
    grid = TimeGrid(0.0, spec.natural_period, _n(40000, steps_factor))
    beta = aa_phase(propagate(spec, initial_state(spec, "w_plus"), grid))
    return CriterionResult(7, "extreme non-adiabatic limit", abs(beta) <= tol,
                           f"|wrap(beta)| = {abs(beta):.4e} (tol {tol:g})", {"beta": beta})


def criterion_8(steps_factor: float = 1.0, count: int = 100) -> CriterionResult:
    tol_phase, tol_recon = 1e-8, 1e-9
    beta_shift = gamma_shift = recon = 0.0
    specs = [HamiltonianSpec.static_spin(1.0, math.pi / 3), HamiltonianSpec.rotating_spin(1.0, 1.0, math.pi / 3)]
    for si, spec in enumerate(specs):
        grid = TimeGrid(0.0, spec.natural_period, _n(20000, steps_factor))
        traj = propagate(spec, initial_state(spec, "w_plus"), grid)
        beta = aa_phase(traj)
        ef = eigen_frame(spec, grid)
        gammas = [berry_phase(ef, n) for n in range(2)]
        frame = build_w_frame(traj)
        base = reconstruct_amplitude(frame, spec).states
        for j in range(count):
            seed = 1000 * si + j
            g = random_gauge(grid, seed)
            beta_shift = max(beta_shift, abs(wrap_phase(aa_phase(rephase_trajectory(traj, g)) - beta)))
            gs = [random_gauge(grid, 10**6 + 2 * seed + n) for n in range(2)]
            ef_g = type(ef)(rephase_frame(ef.frame, gs), ef.energies, ef.closure_error)
            for n in range(2):
                gamma_shift = max(gamma_shift, abs(wrap_phase(berry_phase(ef_g, n) - gammas[n])))
            hs = [random_gauge(grid, 2 * 10**6 + 2 * seed + n, periodic=False) for n in range(2)]
            rec = reconstruct_amplitude(rephase_frame(frame, hs), spec).states
            recon = max(recon, float(np.max(np.abs(rec - np.exp(1j * hs[0](0.0)) * base))))
    ok = beta_shift <= tol_phase and gamma_shift <= tol_phase and recon <= tol_recon
    return CriterionResult(
        8, "gauge-invariance fuzzing", ok,
        f"beta shift {beta_shift:.1e}, gamma shift {gamma_shift:.1e} (tol {tol_phase:g}); "
        f"reconstruction deviation {recon:.1e} (tol {tol_recon:g}); {count} draws x 2 models",
        {"beta_shift": beta_shift, "gamma_shift": gamma_shift, "reconstruction": recon},
    )


def criterion_9(steps_factor: float = 1.0) -> CriterionResult:
    tol_res, tol_cov = 1e-6, 1e-10
    res = cov = 0.0
    specs = [HamiltonianSpec.static_spin(1.0, math.pi / 3), HamiltonianSpec.rotating_spin(1.0, 1.0, math.pi / 3)]
    for i, spec in enumerate(specs):
        T = spec.natural_period
        grid = TimeGrid(0.0, T, _n(default_steps(spec, T), steps_factor))
        traj = propagate(spec, initial_state(spec, "w_plus"), grid)
        bar = parallel_transport_representative(traj)
        res = max(res, nonlinear_residual(bar, spec))
        for j in range(10):
            g = random_gauge(grid, 3 * 10**6 + 10 * i + j, periodic=False)
            bar_g = parallel_transport_representative(rephase_trajectory(traj, g))
            cov = max(cov, float(np.max(np.abs(bar_g.states - np.exp(1j * g(0.0)) * bar.states))))
    ok = res <= tol_res and cov <= tol_cov
    return CriterionResult(9, "parallel-transport representative", ok,
                           f"nonlinear residual {res:.2e} (tol {tol_res:g}); covariance {cov:.1e} (tol {tol_cov:g})",
                           {"residual": res, "covariance": cov})


def criterion_10(steps_factor: float = 1.0) -> CriterionResult:
    # c = (1, i)/sqrt(2): the cross term of <H> vanishes on the equator
    s = SuperpositionSpec(complex(1 / math.sqrt(2)), 1j / math.sqrt(2))
    out = {}
    for th in (math.pi / 3, math.pi / 2):
        spec = HamiltonianSpec.static_spin(1.0, th)
        grid = TimeGrid(0.0, math.pi, _n(20000, steps_factor))
        tp = propagate(spec, initial_state(spec, "w_plus"), grid)
        tm = propagate(spec, initial_state(spec, "w_minus"), grid)
        out[th] = nonlinear_superposition_test(tp, tm, s, spec)
    a, b = out[math.pi / 3], out[math.pi / 2]
    ok = a.residual >= 1e-3 and b.condition_gap < 1e-12 and b.residual <= 1e-5
    return CriterionResult(
        10, "superposition dichotomy", ok,
        f"theta=pi/3: gap {a.condition_gap:.3f}, residual {a.residual:.3e} (want >= 1e-3); "
        f"theta=pi/2: gap {b.condition_gap:.1e}, residual {b.residual:.1e} (want <= 1e-5)",
        {"gap_60": a.condition_gap, "residual_60": a.residual, "gap_90": b.condition_gap, "residual_90": b.residual},
    )


def _superposition_overlap(spec: HamiltonianSpec, mixing: float, steps: int) -> float:
    grid = TimeGrid(0.0, spec.natural_period, steps)
    tp = propagate(spec, initial_state(spec, "w_plus"), grid)
    tm = propagate(spec, initial_state(spec, "w_minus"), grid)
    return check_cyclic(superpose(tp, tm, SuperpositionSpec.mixing(mixing))).overlap_magnitude


def generic_resonance_draws(seed: int = 20240611, count: int = 17):
    """Seeded (mu_b, theta, mixing) triples, omega = 1, far from resonance."""
    rng = np.random.default_rng(seed)
    draws = []
    while len(draws) < count:
        mu = float(rng.uniform(0.2, 3.0))
        th = float(rng.uniform(0.2, math.pi - 0.2))
        mix = float(rng.uniform(math.pi / 4, 3 * math.pi / 4))
        if resonance_check(mu, 1.0, th, 2 * math.pi).m_residual >= 0.05:
            draws.append((mu, th, mix))
    return draws


def criterion_11(steps_factor: float = 1.0) -> CriterionResult:
    tol = 1e-6
    worst_res = 0.0
    for m in (2, 3, 4):
        mu = resonant_mu_b(1.0, math.pi / 3, m)
        spec = HamiltonianSpec.rotating_spin(mu, 1.0, math.pi / 3)
        worst_res = max(worst_res, 1.0 - _superposition_overlap(spec, math.pi / 2, _n(40000, steps_factor)))
    worst_gen = 0.0
    for mu, th, mix in generic_resonance_draws():
        spec = HamiltonianSpec.rotating_spin(mu, 1.0, th)
        worst_gen = max(worst_gen, _superposition_overlap(spec, mix, _n(20000, steps_factor)))
    ok = worst_res <= tol and worst_gen < 1.0 - 1e-3
    return CriterionResult(
        11, "resonance", ok,
        f"resonant sets: max 1-|overlap| = {worst_res:.1e} (tol {tol:g}); "
        f"17 generic: max |overlap| = {worst_gen:.6f} (want < {1 - 1e-3:g})",
        {"resonant_defect": worst_res, "generic_max_overlap": worst_gen},
    )


def convergence_errors(spec: HamiltonianSpec, steps=(2000, 4000, 8000)) -> list:
    """Max nodewise error against the closed-form amplitude for each grid size."""
    errs = []
    for n in steps:
        grid = TimeGrid(0.0, spec.natural_period, n)
        num = propagate(spec, initial_state(spec, "w_plus"), grid)
        exact = analytic_amplitude(spec, grid, "plus")
        errs.append(float(np.max(np.abs(num.states - exact.states))))
    return errs


def criterion_12(steps_factor: float = 1.0) -> CriterionResult:
    tol_drift = 1e-9
    spec = HamiltonianSpec.rotating_spin(1.0, 1.0, math.pi / 3)
    drift = norm_drift(propagate(spec, initial_state(spec, "w_plus"), TimeGrid(0.0, spec.natural_period, 100000)))
    ratios = []
    base = tuple(_n(n, steps_factor) for n in (2000, 4000, 8000))
    for th in ROTATING_THETAS:
        e = convergence_errors(HamiltonianSpec.rotating_spin(1.0, 1.0, th), base)
        ratios += [e[0] / e[1], e[1] / e[2]]
    ok = drift <= tol_drift and all(3.5 <= r <= 4.5 for r in ratios)
    return CriterionResult(
        12, "unitarity and convergence", ok,
        f"norm drift {drift:.1e} over 1e5 steps (tol {tol_drift:g}); "
        f"error ratios per halving {min(ratios):.3f}..{max(ratios):.3f} (want [3.5, 4.5])",
        {"drift": drift, "ratios": ratios},
    )


CRITERIA = (
    criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
    criterion_7, criterion_8, criterion_9, criterion_10, criterion_11, criterion_12,
)


def run_all(steps_factor: float = 1.0, out=None) -> tuple[list, bool]:
    """Run criteria 1-12 then the timing criterion 13; returns (results, internal_error)."""
    out = sys.stdout if out is None else out
    results, internal = [], False
    t0 = time.perf_counter()
    for i, fn in enumerate(CRITERIA, start=1):
        try:
            r = fn(steps_factor)
        except Exception as exc:  # reported, then mapped to exit 2
            internal = True
            traceback.print_exc(file=sys.stderr)
            r = CriterionResult(i, fn.__name__, False, f"internal error: {type(exc).__name__}: {exc}")
        results.append(r)
        print(r.line(), file=out, flush=True)
    elapsed = time.perf_counter() - t0
    r13 = CriterionResult(13, "verify wall time", elapsed <= TIME_BUDGET and not internal and all(r.passed for r in results),
                          f"{elapsed:.1f} s (limit {TIME_BUDGET:g} s), criteria 1-12 {'all pass' if all(r.passed for r in results) else 'not all pass'}",
                          {"seconds": elapsed})
    results.append(r13)
    print(r13.line(), file=out, flush=True)
    return results, internal


def verify(steps_factor: float = 1.0, out=None) -> int:
    """Exit status: 0 all pass, 1 any failure, 2 internal error."""
    out = sys.stdout if out is None else out
    results, internal = run_all(steps_factor, out)
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} criteria passed", file=out)
    if internal:
        return 2
    return 0 if passed == len(results) else 1
