import math

import numpy as np
import pytest

from geophase import (
    HamiltonianSpec,
    TimeGrid,
    aa_phase,
    analytic_w_frame,
    berry_phase,
    connection_integral,
    dynamical_phase,
    eigen_frame,
    initial_state,
    pancharatnam_overlap,
    phase_report,
    propagate,
    wrap_phase,
)
from geophase.errors import NotCyclicError, OpenLoopError, UnderResolvedError

BETA_ROT = -0.766771830142341
D_ROT = -5.9370520586186295
PHI_ROT = -1.1129050787032977


def test_connection_integral_examples():
    assert connection_integral(np.tile([0.6, 0.8j], (50, 1))) == 0.0
    spec = HamiltonianSpec.rotating_spin(1.0, 1.0, math.pi / 3)
    v = analytic_w_frame(spec, TimeGrid(0.0, 2 * math.pi, 40000), alpha=0.0).track(0)
    assert connection_integral(v) == pytest.approx(math.pi * 1.5, abs=2e-6)
    st = HamiltonianSpec.static_spin(1.0, math.pi / 3)
    w = analytic_w_frame(st, TimeGrid(0.0, math.pi, 20000)).track(0)
    assert connection_integral(w) == pytest.approx(math.pi / 2, abs=1e-8)


def test_connection_integral_under_resolved():
    with pytest.raises(UnderResolvedError):
        connection_integral(np.array([[1, 0], [0, 1]], dtype=complex))


def test_static_report(static_plus):
    spec, traj = static_plus
    r = phase_report(traj, spec)
    assert abs(wrap_phase(r.total_phase - math.pi)) < 1e-8
    assert r.dynamical == pytest.approx(-math.pi / 2, abs=1e-7)
    assert r.aa_phase == pytest.approx(math.pi / 2, abs=1e-6)
    assert r.berry_phase == pytest.approx(0.0, abs=1e-12)
    assert r.decomposition_residual < 1e-7


def test_rotating_report(rotating_plus):
    spec, traj = rotating_plus
    r = phase_report(traj, spec)
    assert r.total_phase == pytest.approx(PHI_ROT, abs=1e-6)
    assert r.dynamical == pytest.approx(D_ROT, abs=1e-6)
    assert r.aa_phase == pytest.approx(BETA_ROT, abs=1e-6)
    assert r.berry_phase == pytest.approx(wrap_phase(1.5 * math.pi), abs=1e-5)
    assert r.decomposition_residual < 1e-7


def test_aa_phase_trivial_cases():
    spec = HamiltonianSpec.static_spin(1.0, 0.0)
    traj = propagate(spec, initial_state(spec, "w_plus"), TimeGrid(0.0, math.pi, 1000))
    assert aa_phase(traj) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(NotCyclicError):
        rot = HamiltonianSpec.rotating_spin(1.0, 1.0, math.pi / 3)
        aa_phase(propagate(rot, [1, 0], TimeGrid(0.0, 2 * math.pi, 2000)))


def test_aa_phase_invariant_under_nodewise_phases(rotating_plus):
    _, traj = rotating_plus
    rng = np.random.default_rng(0)
    noise = np.exp(1j * rng.uniform(-0.3, 0.3, len(traj)))
    noise[-1] = noise[0]
    assert abs(wrap_phase(aa_phase(traj.with_states(traj.states * noise[:, None])) - aa_phase(traj))) < 1e-12


def test_berry_phase_examples_and_open_loop():
    for th in (math.pi / 6, math.pi / 2):
        spec = HamiltonianSpec.rotating_spin(1.0, 1.0, th)
        ef = eigen_frame(spec, TimeGrid(0.0, 2 * math.pi, 4000))
        assert abs(wrap_phase(berry_phase(ef, 0) - math.pi * (1 + math.cos(th)))) < 1e-5
    spec = HamiltonianSpec.rotating_spin(1.0, 1.0, 1.0)
    with pytest.raises(OpenLoopError):
        berry_phase(eigen_frame(spec, TimeGrid(0.0, 3.0, 400)), 0)


def test_berry_phase_exactly_gauge_invariant():
    spec = HamiltonianSpec.rotating_spin(1.0, 1.0, 1.0)
    ef = eigen_frame(spec, TimeGrid(0.0, 2 * math.pi, 2000))
    rng = np.random.default_rng(7)
    ph = np.exp(1j * rng.uniform(-math.pi, math.pi, (2001, 2)))
    g = type(ef)(type(ef.frame)(ef.grid, ef.frame.vectors * ph[:, :, None]), ef.energies, ef.closure_error)
    for n in range(2):
        assert abs(wrap_phase(berry_phase(g, n) - berry_phase(ef, n))) < 1e-12


def test_dynamical_phase_zero_hamiltonian():
    spec = HamiltonianSpec.custom([0.0, 1.0], [np.zeros((2, 2))] * 2)
    traj = propagate(spec, [1, 0], TimeGrid(0.0, 1.0, 10))
    assert dynamical_phase(traj, spec) == 0.0


def test_pancharatnam_overlap(static_plus):
    spec, traj = static_plus
    assert pancharatnam_overlap(traj, 0) == pytest.approx(1.0)
    z = pancharatnam_overlap(traj, len(traj) - 1)
    assert abs(z) == pytest.approx(1.0, abs=1e-11)
    assert np.angle(z) == pytest.approx(math.pi / 2, abs=1e-6)
    zero = HamiltonianSpec.custom([0.0, 1.0], [np.zeros((2, 2))] * 2)
    assert pancharatnam_overlap(propagate(zero, [0.6, 0.8], TimeGrid(0.0, 1.0, 5)), 3) == pytest.approx(1.0)


def test_adiabatic_gap_linear_in_omega():
    gaps = []
    for om in (0.02, 0.01):
        spec = HamiltonianSpec.rotating_spin(1.0, om, math.pi / 3)
        r = phase_report(propagate(spec, initial_state(spec, "w_plus"), TimeGrid(0.0, 2 * math.pi / om, 60000)), spec)
        gaps.append(abs(wrap_phase(r.aa_phase - r.berry_phase)))
    # closed forms: 0.023385533938662655 and 0.011736831191776645
    assert gaps[0] == pytest.approx(0.023385533938662655, abs=1e-5)
    assert gaps[1] == pytest.approx(0.011736831191776645, abs=1e-5)
    assert 0.4 <= gaps[1] / gaps[0] <= 0.6
