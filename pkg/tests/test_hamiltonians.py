import json
import math

import numpy as np
import pytest

from geophase import (
    HamiltonianSpec,
    TimeGrid,
    alpha_tilt,
    analytic_energies,
    analytic_phase_report,
    analytic_w_frame,
    eigen_frame,
    evaluate,
    evaluate_many,
    initial_state,
    literal_interference,
    load_custom_samples,
    parse_custom_samples,
)
from geophase.errors import (
    DegeneracyError,
    ExtrapolationError,
    GeophaseError,
    NoOracleError,
    UndefinedTiltError,
)
from geophase.hamiltonians import dump_custom_samples, eigen_residual, hermiticity_error

# closed forms at mu_b = omega = 1, theta = pi/3, evaluated independently
ALPHA = 0.3334731722518321
BETA_ROT = -0.766771830142341
D_ROT = -5.9370520586186295
PHI_ROT = -1.1129050787032977


def test_evaluate_examples():
    assert np.allclose(evaluate(HamiltonianSpec.static_spin(1.0), 0.3), [[-1, 0], [0, 1]])
    assert np.allclose(evaluate(HamiltonianSpec.rotating_spin(1.0, 1.0, math.pi / 2), 0.0), [[0, -1], [-1, 0]])


def test_rotating_eigenvalues_are_field_energies():
    spec = HamiltonianSpec.rotating_spin(1.3, 0.7, 1.1)
    ef = eigen_frame(spec, TimeGrid(0.0, spec.natural_period, 200))
    assert np.allclose(ef.energies, [[-1.3, 1.3]] * 201, atol=1e-12)
    assert eigen_residual(spec, ef) < 1e-10


def test_parameter_validation():
    for args in [("static_spin", {"mu_b": -1}), ("rotating_spin", {"mu_b": 1, "omega": 0, "theta": 1}),
                 ("rotating_spin", {"mu_b": 1, "omega": 1, "theta": 4.0}), ("bogus", {})]:
        with pytest.raises(GeophaseError):
            HamiltonianSpec(*args)


def test_eigen_frame_matches_closed_form_up_to_phase():
    spec = HamiltonianSpec.rotating_spin(1.0, 1.0, math.pi / 3)
    grid = TimeGrid(0.0, 2 * math.pi, 400)
    ef = eigen_frame(spec, grid)
    exact = analytic_w_frame(spec, grid, alpha=0.0)
    for n in range(2):
        ov = np.abs(np.einsum("ki,ki->k", exact.track(n).conj(), ef.frame.track(n)))
        assert np.allclose(ov, 1.0, atol=1e-12)
    # phase-continued: consecutive overlaps real positive
    ov = np.einsum("kni,kni->kn", ef.frame.vectors[:-1].conj(), ef.frame.vectors[1:])
    assert np.max(np.abs(np.angle(ov))) < 1e-12
    assert ef.closure_error < 1e-12


def test_eigen_frame_degeneracy_names_node():
    spec = HamiltonianSpec.custom([0.0, 1.0], [np.zeros((2, 2)), np.diag([1.0, -1.0])])
    with pytest.raises(DegeneracyError, match="node 0"):
        eigen_frame(spec, TimeGrid(0.0, 1.0, 10))


def test_eigen_frame_follows_crossing_levels():
    spec = HamiltonianSpec.sampled(lambda t: math.sin(2 * math.pi * t) * np.diag([1.0, -1.0]), TimeGrid(0.0, 1.0, 1000))
    ef = eigen_frame(spec, TimeGrid(0.0, 1.0, 1000), gap_tol=None)
    t = np.linspace(0, 1, 1001)
    e = ef.energies
    assert np.allclose(np.sort(np.abs(e), axis=1), np.abs(np.sin(2 * np.pi * t))[:, None], atol=1e-12)
    # labels never jump: each track is a smooth +-sin curve
    assert np.max(np.abs(np.diff(e[:, 0]))) < 0.01


def test_alpha_tilt_value_and_undefined_case():
    assert alpha_tilt(1.0, 1.0, math.pi / 3) == pytest.approx(ALPHA, abs=1e-15)
    assert alpha_tilt(1.0, 0.0, 0.5) == 0.0
    with pytest.raises(UndefinedTiltError):
        alpha_tilt(1.0, 2.0, math.pi)


def test_analytic_phase_oracles():
    st = analytic_phase_report(HamiltonianSpec.static_spin(1.0, math.pi / 3))
    assert (st.total_phase, st.dynamical, st.aa_phase) == pytest.approx((math.pi, -math.pi / 2, math.pi / 2))
    rot = analytic_phase_report(HamiltonianSpec.rotating_spin(1.0, 1.0, math.pi / 3))
    assert rot.alpha == pytest.approx(ALPHA, abs=1e-15)
    assert rot.aa_phase == pytest.approx(BETA_ROT, abs=1e-13)
    assert rot.dynamical == pytest.approx(D_ROT, abs=1e-13)
    assert rot.total_phase == pytest.approx(PHI_ROT, abs=1e-13)
    assert rot.berry_phase == pytest.approx(-math.pi / 2, abs=1e-13)  # wrap(3 pi / 2)
    # beta = -Omega / 2 (mod 2 pi) in both models and both branches
    for spec in (HamiltonianSpec.static_spin(1.0, 0.9), HamiltonianSpec.rotating_spin(1.0, 2.0, 0.9)):
        for b in ("plus", "minus"):
            r = analytic_phase_report(spec, b)
            d = r.aa_phase + 0.5 * r.solid_angle
            assert abs(math.remainder(d, 2 * math.pi)) < 1e-12


def test_analytic_energies_match_frame_diagonal():
    e_plus, e_minus = analytic_energies(HamiltonianSpec.rotating_spin(1.0, 1.0, math.pi / 3))
    c = math.cos(math.pi / 3 - ALPHA)
    assert e_plus == pytest.approx(-math.cos(ALPHA) - 0.5 * (1 + c))
    assert e_minus == pytest.approx(math.cos(ALPHA) - 0.5 * (1 - c))


def test_literal_interference_differs_from_exact_static_value():
    spec = HamiltonianSpec.static_spin(1.0, math.pi / 3)
    # exact: phi = pi, intensity 0; the literal form gives 2 + 2 cos(pi/2 - pi/2) = 4
    assert literal_interference(spec) == pytest.approx(4.0)


def test_initial_state_tags():
    spec = HamiltonianSpec.static_spin(1.0, math.pi / 3)
    assert np.allclose(initial_state(spec, "w_plus"), [math.cos(math.pi / 6), math.sin(math.pi / 6)])
    assert np.allclose(initial_state(spec, "v_minus"), [0, 1])
    with pytest.raises(GeophaseError):
        initial_state(HamiltonianSpec.static_spin(1.0), "w_plus")
    with pytest.raises(NoOracleError):
        initial_state(HamiltonianSpec.custom([0, 1], [np.eye(2)] * 2), "w_plus")


def test_custom_interpolation_and_extrapolation():
    spec = HamiltonianSpec.custom([0.0, 1.0], [np.diag([1.0, -1.0]), np.array([[0, 1j], [-1j, 0]])])
    h = evaluate(spec, 0.25)
    assert np.allclose(h, [[0.75, 0.25j], [-0.25j, -0.75]])
    assert hermiticity_error(evaluate_many(spec, np.linspace(0, 1, 7))) == 0.0
    with pytest.raises(ExtrapolationError):
        evaluate(spec, 1.1)
    with pytest.raises(GeophaseError):
        HamiltonianSpec.custom([0.0, 1.0], [np.array([[0, 1], [0, 0]])] * 2)


def test_custom_samples_round_trip(tmp_path):
    records = [{"t": 0.0, "matrix": [[1, 0], [0, 0.5], [0, -0.5], [-1, 0]]},
               {"t": 2.0, "matrix": [[0, 0], [1, 0], [1, 0], [0, 0]]}]
    p = tmp_path / "h.json"
    p.write_text(json.dumps({"samples": records}))
    spec = load_custom_samples(p)
    assert spec.dim == 2 and spec.natural_period == 2.0
    assert np.allclose(evaluate(spec, 0.0), [[1, 0.5j], [-0.5j, -1]])
    assert dump_custom_samples(parse_custom_samples(dump_custom_samples(spec))) == dump_custom_samples(spec)
    with pytest.raises(GeophaseError):
        parse_custom_samples([{"t": 0, "matrix": [[1, 0]] * 3}, {"t": 1, "matrix": [[1, 0]] * 3}])
