"""The suite must notice a degraded stepper or under-resolved grids."""
import io

import geophase.propagator as propagator
from geophase import acceptance as acc


def test_coarse_grids_fail_decomposition_criterion():
    assert not acc.criterion_5(steps_factor=0.01).passed
    assert acc.verify(steps_factor=0.01, out=io.StringIO()) == 1


def test_left_endpoint_stepper_fails_convergence(monkeypatch):
    monkeypatch.setattr(propagator, "_generator_times", lambda grid: grid.nodes[:-1])
    r = acc.criterion_12()
    assert not r.passed
    assert max(r.metrics["ratios"]) < 3.0


def test_internal_error_maps_to_exit_two(monkeypatch):
    def boom(steps_factor=1.0):
        raise RuntimeError("boom")

    monkeypatch.setattr(acc, "CRITERIA", (boom,) + acc.CRITERIA[1:2])
    assert acc.verify(out=io.StringIO()) == 2
