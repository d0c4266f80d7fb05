import math

import numpy as np
import pytest

from geophase import (
    HamiltonianSpec,
    SuperpositionSpec,
    TimeGrid,
    adiabatic_interference_conditions,
    check_cyclic,
    common_shift_residual,
    initial_state,
    interference_intensity,
    level_splitting,
    linear_residual,
    nonlinear_superposition_test,
    propagate,
    resonance_check,
    resonant_mu_b,
    superpose,
)
from geophase.errors import GeophaseError, GridMismatchError

# roots of splitting(mu_b) = m omega at omega = 1, theta = pi/3, from the quadratic closed form
RESONANT = {2: 0.6513878188659972, 3: 1.1861406616345072, 4: 1.7025624189766635}


@pytest.fixture(scope="module")
def static_pair():
    out = {}
    for th in (math.pi / 3, math.pi / 2):
        spec = HamiltonianSpec.static_spin(1.0, th)
        grid = TimeGrid(0.0, math.pi, 20000)
        out[th] = (spec, propagate(spec, initial_state(spec, "w_plus"), grid),
                   propagate(spec, initial_state(spec, "w_minus"), grid))
    return out


def test_superpose_examples(static_pair):
    spec, tp, tm = static_pair[math.pi / 3]
    assert np.array_equal(superpose(tp, tm, SuperpositionSpec(1, 0)).states, tp.states)
    s = superpose(tp, tm, SuperpositionSpec.mixing(1.1))
    assert np.max(np.abs(np.linalg.norm(s.states, axis=1) - 1)) < 1e-10
    assert linear_residual(s, spec) < 1e-6
    with pytest.raises(GridMismatchError):
        superpose(tp, propagate(spec, [1, 0], TimeGrid(0.0, 1.0, 10)), SuperpositionSpec(1, 0))
    with pytest.raises(GeophaseError):
        SuperpositionSpec(1, 1)


def test_linear_residual_detects_rephasing(static_plus):
    spec, traj = static_plus
    t = traj.times
    kicked = traj.with_states(traj.states * np.exp(1j * np.sin(2 * t))[:, None])
    assert linear_residual(traj, spec) < 1e-6
    assert linear_residual(kicked, spec) == pytest.approx(2.0, rel=1e-3)
    assert common_shift_residual(kicked, spec) < 1e-6


def test_nonlinear_superposition_dichotomy(static_pair):
    c = SuperpositionSpec(1 / math.sqrt(2), 1j / math.sqrt(2))
    spec, tp, tm = static_pair[math.pi / 3]
    r = nonlinear_superposition_test(tp, tm, c, spec)
    assert r.condition_gap == pytest.approx(1.0, abs=1e-9)
    assert r.residual > 1e-3 and r.shift_residual > 1e-3
    spec, tp, tm = static_pair[math.pi / 2]
    r = nonlinear_superposition_test(tp, tm, c, spec)
    assert r.condition_gap < 1e-12
    assert r.residual < 1e-5 and r.shift_residual < 1e-5


def test_equal_energy_superposition_with_real_mixing(static_pair):
    # the representatives superpose into a shifted solution, while the mean
    # energy subtracted by the literal equation picks up a cross term
    spec, tp, tm = static_pair[math.pi / 2]
    r = nonlinear_superposition_test(tp, tm, SuperpositionSpec.mixing(math.pi / 2), spec)
    assert r.shift_residual < 1e-5
    assert r.residual > 0.5


def test_single_component_superposition(static_pair):
    spec, tp, tm = static_pair[math.pi / 3]
    assert nonlinear_superposition_test(tp, tm, SuperpositionSpec(1, 0), spec).residual < 1e-6


def test_interference_intensity(static_plus):
    a = np.array([0.6, 0.8j])
    assert interference_intensity(a, a) == pytest.approx(4.0)
    assert interference_intensity(a, -a) == pytest.approx(0.0)
    _, traj = static_plus
    assert interference_intensity(traj.states[0], traj.states[-1]) < 1e-12


def test_resonance_check_values():
    r = resonance_check(1.0, 1.0, math.pi / 3, 2 * math.pi)
    assert r.n_residual == pytest.approx(0.0, abs=1e-15)
    assert r.m_value == pytest.approx(math.sqrt(7), abs=1e-14)
    assert r.m_residual == pytest.approx(3 - math.sqrt(7), abs=1e-14)
    assert level_splitting(1.0, 1.0, math.pi / 3) == pytest.approx(math.sqrt(7), abs=1e-14)
    with pytest.raises(GeophaseError):
        resonance_check(1.0, 1.0, 1.0, 0.0)


@pytest.mark.parametrize("m", [2, 3, 4])
def test_resonant_mu_b(m):
    mu = resonant_mu_b(1.0, math.pi / 3, m)
    assert mu == pytest.approx(RESONANT[m], rel=1e-13)
    assert resonance_check(mu, 1.0, math.pi / 3, 2 * math.pi).resonant(1e-12)


def test_resonant_superposition_is_cyclic():
    spec = HamiltonianSpec.rotating_spin(RESONANT[3], 1.0, math.pi / 3)
    grid = TimeGrid(0.0, 2 * math.pi, 40000)
    tp = propagate(spec, initial_state(spec, "w_plus"), grid)
    tm = propagate(spec, initial_state(spec, "w_minus"), grid)
    assert check_cyclic(superpose(tp, tm, SuperpositionSpec.mixing(math.pi / 2))).is_cyclic
    generic = HamiltonianSpec.rotating_spin(1.0, 1.0, math.pi / 3)
    tp = propagate(generic, initial_state(generic, "w_plus"), grid)
    tm = propagate(generic, initial_state(generic, "w_minus"), grid)
    v = check_cyclic(superpose(tp, tm, SuperpositionSpec.mixing(math.pi / 2)))
    assert not v.is_cyclic and v.overlap_magnitude < 1 - 1e-3
    assert check_cyclic(tp).is_cyclic


def test_adiabatic_interference_conditions():
    st = HamiltonianSpec.static_spin(1.0)
    r = adiabatic_interference_conditions(st, TimeGrid(0.0, math.pi, 100))
    assert r.pointwise_gap == pytest.approx(2.0) and not r.strong and not r.weak
    grid = TimeGrid(0.0, 1.0, 2000)
    osc = HamiltonianSpec.sampled(lambda t: math.sin(2 * math.pi * t) * np.diag([1.0, -1.0]), grid)
    r = adiabatic_interference_conditions(osc, grid)
    assert r.pointwise_gap == pytest.approx(2.0, abs=1e-5)
    assert r.integrated_gap < 1e-12 and r.weak and not r.strong
    flat = HamiltonianSpec.custom([0.0, 1.0], [np.eye(2)] * 2)
    r = adiabatic_interference_conditions(flat, TimeGrid(0.0, 1.0, 10))
    assert r.pointwise_gap == 0.0 and r.integrated_gap == 0.0 and r.strong
