import math

import numpy as np
import pytest

from geophase import (
    HamiltonianSpec,
    TimeGrid,
    aa_phase,
    analytic_energies,
    analytic_w_frame,
    build_w_frame,
    effective_hamiltonian,
    frame_holonomy,
    propagate,
    random_gauge,
    reconstruct_amplitude,
    rephase_frame,
    wrap_phase,
)
from geophase.errors import GridMismatchError, NotCyclicError
from geophase.state import orthonormality_error
from geophase.wframe import write_frame_csv


def test_static_frame_matches_closed_form(static_plus):
    spec, traj = static_plus
    frame = build_w_frame(traj)
    exact = analytic_w_frame(spec, traj.grid)
    for n in range(2):
        ov = np.einsum("ki,ki->k", exact.track(n).conj(), frame.track(n))
        assert np.allclose(np.abs(ov), 1.0, atol=1e-9)
        assert np.ptp(np.angle(ov)) < 1e-6  # one constant phase per row
    assert orthonormality_error(frame.vectors) < 1e-12
    assert frame.periodicity_error() <= 1e-10


def test_frame_holonomy_values(static_plus):
    spec, traj = static_plus
    frame = build_w_frame(traj)
    assert frame_holonomy(frame, 0) == pytest.approx(math.pi / 2, abs=1e-6)
    assert frame_holonomy(frame, 1) == pytest.approx(-math.pi / 2, abs=1e-6)
    assert abs(wrap_phase(frame_holonomy(frame, 0) - aa_phase(traj))) < 1e-8


def test_stationary_input_gives_constant_frame():
    spec = HamiltonianSpec.static_spin(1.0)
    traj = propagate(spec, [1, 0], TimeGrid(0.0, math.pi, 500))
    frame = build_w_frame(traj)
    assert np.max(np.abs(frame.vectors - frame.vectors[0])) < 1e-12
    assert frame_holonomy(frame, 0) == pytest.approx(0.0, abs=1e-12)


def test_three_level_frame():
    rng = np.random.default_rng(2)
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    h = a + a.conj().T
    spec = HamiltonianSpec.custom([0.0, 1.0], [h, h])
    e, v = np.linalg.eigh(h)
    psi0 = v[:, 0]
    traj = propagate(spec, psi0, TimeGrid(0.0, 1.0, 2000))
    frame = build_w_frame(traj)
    assert orthonormality_error(frame.vectors) < 1e-12
    assert frame.periodicity_error() <= 1e-10
    rec = reconstruct_amplitude(frame, spec)
    assert np.max(np.abs(rec.states - traj.states)) < 1e-9


def test_non_cyclic_rejected():
    spec = HamiltonianSpec.rotating_spin(1.0, 1.0, 1.0)
    with pytest.raises(NotCyclicError):
        build_w_frame(propagate(spec, [1, 0], TimeGrid(0.0, 2 * math.pi, 1000)))


def test_effective_hamiltonian_analytic_frames():
    st = HamiltonianSpec.static_spin(1.0, math.pi / 3)
    grid = TimeGrid(0.0, math.pi, 100000)
    heff = effective_hamiltonian(analytic_w_frame(st, grid), st)
    assert heff.max_offdiagonal() < 1e-8
    assert np.allclose(heff.diagonal(), [-1.0, 1.0], atol=1e-8)
    rot = HamiltonianSpec.rotating_spin(1.0, 1.0, math.pi / 3)
    grid = TimeGrid(0.0, 2 * math.pi, 100000)
    heff = effective_hamiltonian(analytic_w_frame(rot, grid), rot)
    assert heff.max_offdiagonal() < 1e-8
    assert np.allclose(heff.diagonal(), analytic_energies(rot), atol=1e-8)


def test_effective_hamiltonian_wrong_tilt():
    rot = HamiltonianSpec.rotating_spin(1.0, 1.0, math.pi / 3)
    grid = TimeGrid(0.0, 2 * math.pi, 20000)
    heff = effective_hamiltonian(analytic_w_frame(rot, grid, alpha=0.0), rot)
    assert heff.max_offdiagonal() == pytest.approx(0.5 * math.sin(math.pi / 3), rel=1e-6)


def test_effective_hamiltonian_grid_mismatch():
    spec = HamiltonianSpec.custom([0.0, 1.0], [np.eye(2)] * 2)
    traj = propagate(HamiltonianSpec.static_spin(1.0), [1, 0], TimeGrid(0.0, 2.0, 200))
    with pytest.raises(GridMismatchError):
        effective_hamiltonian(build_w_frame(traj), spec)


@pytest.mark.parametrize("which", ["static", "rotating"])
def test_reconstruction_matches_propagation(which, static_plus, rotating_plus):
    spec, traj = static_plus if which == "static" else rotating_plus
    rec = reconstruct_amplitude(build_w_frame(traj), spec)
    assert np.max(np.abs(rec.states - traj.states)) < 1e-6


def test_reconstruction_under_frame_gauge(rotating_plus):
    spec, traj = rotating_plus
    frame = build_w_frame(traj)
    base = reconstruct_amplitude(frame, spec).states
    gs = [random_gauge(traj.grid, 40 + n, periodic=False) for n in range(2)]
    rec = reconstruct_amplitude(rephase_frame(frame, gs), spec).states
    assert np.max(np.abs(rec - np.exp(1j * gs[0](0.0)) * base)) < 1e-9


def test_frame_csv_header(tmp_path, static_plus):
    _, traj = static_plus
    p = tmp_path / "f.csv"
    write_frame_csv(build_w_frame(traj), p)
    lines = p.read_text().splitlines()
    assert lines[0] == "t,w0_0_re,w0_0_im,w0_1_re,w0_1_im,w1_0_re,w1_0_im,w1_1_re,w1_1_im"
    assert len(lines) == len(traj) + 1
