"""Scenario ingestion, execution, report assembly and CSV output.

A scenario is a JSON object::

    {
      "model": "static_spin" | "rotating_spin" | "custom",
      "params": {"mu_b": 1.0, "omega": 1.0, "theta": 1.047},
      "samples": "file.json" | [...],         # custom only
      "grid": {"t_end": 6.28, "steps": 40000}, # both optional
      "initial": "w_plus" | {"amplitudes": [[re, im], ...]},
      "analyses": ["phases", {"kind": "superpose", "mixing_angle": 1.57}],
      "seed": 0,
      "tolerances": {"phase": 1e-6}
    }

Reports are plain dicts with every default spelled out, so that identical
inputs serialize to byte-identical JSON.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping, Optional

import numpy as np

from .errors import GeophaseError, NoOracleError, ScenarioError
from .gauge import (
    density_invariance,
    parallel_transport_representative,
    random_gauge,
    rephase_frame,
    rephase_trajectory,
)
from .hamiltonians import (
    FAMILIES,
    HamiltonianSpec,
    analytic_energies,
    analytic_phase_report,
    analytic_w_frame,
    eigen_frame,
    initial_state,
    literal_interference,
    parse_custom_samples,
)
from .phases import CLOSED_LOOP_TOL, aa_phase, berry_phase, dynamical_phase, phase_report
from .propagator import DEFAULT_CYCLIC_TOL, check_cyclic, default_steps, norm_drift, propagate
from .state import TimeGrid, Trajectory, wrap_phase
from .superposition import (
    SuperpositionSpec,
    interference_intensity,
    linear_residual,
    nonlinear_superposition_test,
    resonance_check,
    superpose,
)
from .wframe import build_w_frame, effective_hamiltonian, frame_holonomy, reconstruct_amplitude

ANALYSES = ("phases", "frame", "superpose", "interfere", "resonance", "gauge_fuzz")
INITIAL_TAGS = ("w_plus", "w_minus", "v_plus", "v_minus")
MIN_STEPS = 100
TRIVIAL_LIMIT_RATIO = 100.0

DEFAULT_TOLERANCES = {
    "phase": 1e-6,
    "decomposition": 1e-7,
    "residual": 1e-6,
    "frame": 1e-6,
    "reconstruction": 1e-6,
    "gauge": 1e-8,
    "trivial_limit": 0.02,
    "interference": 1e-6,
    "cyclic": DEFAULT_CYCLIC_TOL,
}

ANALYSIS_DEFAULTS = {
    "phases": {},
    "frame": {},
    "superpose": {"mixing_angle": math.pi / 2, "relative_phase": 0.0},
    "interfere": {},
    "resonance": {"mixing_angle": math.pi / 2},
    "gauge_fuzz": {"count": 100},
}

FAMILY_PARAMS = {
    "static_spin": (("mu_b",), ("theta",)),
    "rotating_spin": (("mu_b", "omega", "theta"), ()),
    "custom": ((), ()),
}


# scenario ----------------------------------------------------------------


@dataclass(frozen=True)
class Scenario:
    model: str
    params: dict
    t_end: Optional[float] = None
    steps: Optional[int] = None
    initial: Any = "w_plus"
    analyses: tuple = ()
    seed: int = 0
    tolerances: dict = field(default_factory=dict)
    samples: Any = None
    base_dir: Optional[str] = None

    @classmethod
    def from_dict(cls, data: Mapping, base_dir=None) -> "Scenario":
        if not isinstance(data, Mapping):
            raise ScenarioError("<root>", "scenario must be a JSON object")
        known = {"model", "params", "grid", "initial", "analyses", "seed", "tolerances", "samples", "name"}
        extra = sorted(set(data) - known)
        if extra:
            raise ScenarioError(extra[0], "unknown field")
        model = data.get("model")
        if model not in FAMILIES:
            raise ScenarioError("model", f"must be one of {list(FAMILIES)}, got {model!r}")
        params = _check_params(model, data.get("params", {}))
        grid = data.get("grid", {})
        if not isinstance(grid, Mapping):
            raise ScenarioError("grid", "must be an object")
        bad = sorted(set(grid) - {"t_end", "steps"})
        if bad:
            raise ScenarioError(f"grid.{bad[0]}", "unknown field")
        t_end = grid.get("t_end")
        if t_end is not None:
            t_end = _real(t_end, "grid.t_end")
            if not t_end > 0:
                raise ScenarioError("grid.t_end", "must be positive")
        steps = grid.get("steps")
        if steps is not None:
            if isinstance(steps, bool) or not isinstance(steps, int):
                raise ScenarioError("grid.steps", "must be an integer")
            if steps < MIN_STEPS:
                raise ScenarioError("grid.steps", f"must be at least {MIN_STEPS}, got {steps}")
        initial = _check_initial(model, data.get("initial", "w_plus" if model != "custom" else None))
        analyses = tuple(_check_analysis(a, i) for i, a in enumerate(data.get("analyses", ["phases"])))
        seed = data.get("seed", 0)
        if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
            raise ScenarioError("seed", "must be a non-negative integer")
        tol = data.get("tolerances", {})
        if not isinstance(tol, Mapping):
            raise ScenarioError("tolerances", "must be an object")
        for k, v in tol.items():
            if k not in DEFAULT_TOLERANCES:
                raise ScenarioError(f"tolerances.{k}", "unknown tolerance")
            if not _real(v, f"tolerances.{k}") > 0:
                raise ScenarioError(f"tolerances.{k}", "must be positive")
        samples = data.get("samples")
        if model == "custom" and samples is None:
            raise ScenarioError("samples", "custom model needs samples (file path or inline list)")
        if model != "custom" and samples is not None:
            raise ScenarioError("samples", "only the custom model takes samples")
        s = cls(model, params, t_end, steps, initial, analyses, seed, dict(tol), samples,
                None if base_dir is None else str(base_dir))
        s.initial_vector(s.hamiltonian())  # surfaces sample and initial-state errors at load time
        return s

    @classmethod
    def load(cls, path) -> "Scenario":
        p = Path(path)
        try:
            data = json.loads(p.read_text())
        except OSError as exc:
            raise ScenarioError("<file>", f"cannot read {p}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ScenarioError("<file>", f"invalid JSON: {exc}") from None
        return cls.from_dict(data, base_dir=p.parent)

    def with_param(self, name: str, value: float) -> "Scenario":
        params = dict(self.params)
        params[name] = float(value)
        return replace(self, params=_check_params(self.model, params))

    def with_analyses(self, analyses) -> "Scenario":
        return replace(self, analyses=tuple(_check_analysis(a, i) for i, a in enumerate(analyses)))

    def hamiltonian(self) -> HamiltonianSpec:
        if self.model != "custom":
            return HamiltonianSpec(self.model, self.params)
        records = self.samples
        if isinstance(records, str):
            path = Path(records)
            if not path.is_absolute() and self.base_dir is not None:
                path = Path(self.base_dir) / path
            try:
                records = json.loads(path.read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ScenarioError("samples", f"cannot load {path}: {exc}") from None
        try:
            spec = parse_custom_samples(records)
        except GeophaseError as exc:
            raise ScenarioError("samples", str(exc)) from None
        if spec.sample_times[0] > 0:
            raise ScenarioError("samples", "samples must start at or before t = 0")
        return spec

    def resolved_grid(self, spec: HamiltonianSpec) -> TimeGrid:
        t_end = self.t_end
        if t_end is None:
            t_end = spec.sample_times[-1] if spec.family == "custom" else spec.natural_period
        steps = self.steps if self.steps is not None else default_steps(spec, t_end)
        return TimeGrid(0.0, float(t_end), int(steps))

    def initial_vector(self, spec: HamiltonianSpec) -> np.ndarray:
        if isinstance(self.initial, str):
            try:
                return initial_state(spec, self.initial)
            except GeophaseError as exc:
                raise ScenarioError("initial", str(exc)) from None
        v = np.array([complex(re, im) for re, im in self.initial], dtype=complex)
        if v.size != spec.dim:
            raise ScenarioError("initial", f"{v.size} amplitudes for a {spec.dim}-dimensional model")
        return v

    def tolerance(self, name: str) -> float:
        return float(self.tolerances.get(name, DEFAULT_TOLERANCES[name]))

    def to_dict(self) -> dict:
        out = {"model": self.model, "params": dict(self.params)}
        if self.samples is not None:
            out["samples"] = self.samples
        grid = {}
        if self.t_end is not None:
            grid["t_end"] = self.t_end
        if self.steps is not None:
            grid["steps"] = self.steps
        out["grid"] = grid
        out["initial"] = self.initial if isinstance(self.initial, str) else {"amplitudes": [list(p) for p in self.initial]}
        out["analyses"] = [dict(a) for a in self.analyses]
        out["seed"] = self.seed
        out["tolerances"] = dict(self.tolerances)
        return out


def _real(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(where, f"must be a number, got {value!r}")
    v = float(value)
    if not math.isfinite(v):
        raise ScenarioError(where, "must be finite")
    return v


def _check_params(model: str, params) -> dict:
    if not isinstance(params, Mapping):
        raise ScenarioError("params", "must be an object")
    required, optional = FAMILY_PARAMS[model]
    out = {}
    for k, v in params.items():
        if k not in required + optional:
            raise ScenarioError(f"params.{k}", f"not a parameter of {model}")
        out[k] = _real(v, f"params.{k}")
    for k in required:
        if k not in out:
            raise ScenarioError(f"params.{k}", f"required for {model}")
    for k in ("mu_b", "omega"):
        if k in out and not out[k] > 0:
            raise ScenarioError(f"params.{k}", f"must be positive, got {out[k]!r}")
    if "theta" in out and not 0.0 <= out["theta"] <= math.pi:
        raise ScenarioError("params.theta", f"must lie in [0, pi], got {out['theta']!r}")
    return out


def _check_initial(model: str, initial):
    if isinstance(initial, str):
        if initial not in INITIAL_TAGS:
            raise ScenarioError("initial", f"tag must be one of {list(INITIAL_TAGS)}, got {initial!r}")
        if model == "custom":
            raise ScenarioError("initial", "custom models need explicit amplitudes")
        return initial
    if isinstance(initial, Mapping) and "amplitudes" in initial:
        amps = initial["amplitudes"]
        if not isinstance(amps, list) or len(amps) < 2:
            raise ScenarioError("initial.amplitudes", "need a list of at least two [re, im] pairs")
        pairs = []
        for i, p in enumerate(amps):
            if not isinstance(p, list) or len(p) != 2:
                raise ScenarioError(f"initial.amplitudes[{i}]", "must be a [re, im] pair")
            pairs.append((_real(p[0], f"initial.amplitudes[{i}]"), _real(p[1], f"initial.amplitudes[{i}]")))
        norm = sum(a * a + b * b for a, b in pairs)
        if abs(norm - 1.0) > 1e-9:
            raise ScenarioError("initial.amplitudes", f"squared norm {norm!r} differs from 1 by more than 1e-9")
        return tuple(pairs)
    raise ScenarioError("initial", "must be a tag or {\"amplitudes\": [[re, im], ...]}")


def _check_analysis(entry, index: int) -> dict:
    where = f"analyses[{index}]"
    if isinstance(entry, str):
        entry = {"kind": entry}
    if not isinstance(entry, Mapping) or "kind" not in entry:
        raise ScenarioError(where, "must be a name or an object with 'kind'")
    kind = entry["kind"]
    if kind not in ANALYSES:
        raise ScenarioError(f"{where}.kind", f"must be one of {list(ANALYSES)}, got {kind!r}")
    out = {"kind": kind, **ANALYSIS_DEFAULTS[kind]}
    for k, v in entry.items():
        if k == "kind":
            continue
        if k not in ANALYSIS_DEFAULTS[kind]:
            raise ScenarioError(f"{where}.{k}", f"unknown option for {kind}")
        if k == "count":
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                raise ScenarioError(f"{where}.count", "must be a positive integer")
            out[k] = v
        else:
            out[k] = _real(v, f"{where}.{k}")
    return out


# report assembly -------------------------------------------------------------


def _f(x) -> Optional[float]:
    return None if x is None else float(x)


def _row(quantity, numeric, analytic, tolerance, wrapped=False) -> dict:
    """Comparison row; ``analytic`` None makes it an upper-bound check on ``numeric``."""
    if analytic is None:
        diff = abs(numeric)
    elif wrapped:
        diff = abs(wrap_phase(numeric - analytic))
    else:
        diff = abs(numeric - analytic)
    return {
        "quantity": quantity,
        "numeric": float(numeric),
        "analytic": _f(analytic),
        "diff": float(diff),
        "tolerance": float(tolerance),
        "pass": bool(diff <= tolerance),
    }


def _bound_row(quantity, value, tolerance, at_least=False) -> dict:
    """Row asserting value <= tolerance (or >= with ``at_least``)."""
    ok = value >= tolerance if at_least else value <= tolerance
    return {
        "quantity": quantity,
        "numeric": float(value),
        "analytic": None,
        "diff": float(value),
        "tolerance": float(tolerance),
        "bound": "lower" if at_least else "upper",
        "pass": bool(ok),
    }


def _branch(s: Scenario) -> Optional[str]:
    if s.initial == "w_plus":
        return "plus"
    if s.initial == "w_minus":
        return "minus"
    return None


def _oracle_available(s: Scenario, spec: HamiltonianSpec, grid: TimeGrid) -> bool:
    if spec.family == "custom" or _branch(s) is None:
        return False
    if spec.family == "static_spin" and "theta" not in spec.params:
        return False
    return abs(grid.t_end - spec.natural_period) <= 1e-12 * spec.natural_period


class _Context:
    """Shared, lazily computed pieces of one scenario run."""

    def __init__(self, s: Scenario):
        self.s = s
        self.spec = s.hamiltonian()
        self.grid = s.resolved_grid(self.spec)
        self.traj = propagate(self.spec, s.initial_vector(self.spec), self.grid)
        self.verdict = check_cyclic(self.traj, s.tolerance("cyclic"))
        self.oracle = _oracle_available(s, self.spec, self.grid)
        self.rows: list = []
        self.residuals: dict = {}
        self.verdicts: dict = {}
        self.sections: dict = {}
        self.notes: list = []
        self._report = None
        self._frame = None

    def phases(self):
        if self._report is None:
            self._report = phase_report(self.traj, self.spec, self.verdict)
        return self._report

    def frame(self):
        if self._frame is None:
            self._frame = build_w_frame(self.traj, self.verdict)
        return self._frame

    def partner(self) -> Trajectory:
        tags = {"w_plus": "w_minus", "w_minus": "w_plus", "v_plus": "v_minus", "v_minus": "v_plus"}
        if self.spec.family == "custom" or not isinstance(self.s.initial, str):
            raise NoOracleError("superposition partner needs a named initial state of a built-in model")
        return propagate(self.spec, initial_state(self.spec, tags[self.s.initial]), self.grid)


def _run_phases(ctx: _Context, opts: dict) -> None:
    if not ctx.verdict.is_cyclic:
        ctx.notes.append("phases: trajectory is not cyclic; only the dynamical phase is reported")
        ctx.sections["phases"] = {"dynamical": dynamical_phase(ctx.traj, ctx.spec)}
        return
    rep = ctx.phases()
    ctx.sections["phases"] = {k: _f(v) if k != "berry_track" else v for k, v in rep.as_dict().items()}
    s = ctx.s
    ctx.rows.append(_bound_row("decomposition_residual", rep.decomposition_residual, s.tolerance("decomposition")))
    ctx.residuals["decomposition"] = rep.decomposition_residual
    if not ctx.oracle:
        ctx.notes.append("phases: no closed-form oracle for this scenario; numeric values only")
        return
    an = analytic_phase_report(ctx.spec, _branch(s))
    ctx.sections["analytic"] = {
        "total_phase": an.total_phase,
        "dynamical": an.dynamical,
        "aa_phase": an.aa_phase,
        "aa_phase_unwrapped": an.aa_phase_unwrapped,
        "berry_phase": an.berry_phase,
        "solid_angle": an.solid_angle,
        "alpha": an.alpha,
    }
    tol = s.tolerance("phase")
    ctx.rows.append(_row("total_phase", rep.total_phase, an.total_phase, tol, wrapped=True))
    ctx.rows.append(_row("dynamical", rep.dynamical, an.dynamical, tol))
    ctx.rows.append(_row("aa_phase", rep.aa_phase, an.aa_phase, tol, wrapped=True))
    if rep.berry_phase is not None and an.berry_phase is not None:
        # the eigen-track chosen for gamma is the one closest to psi(0), which
        # for w_minus starting states is the anti-aligned eigenvector
        ctx.rows.append(_row("berry_phase", rep.berry_phase, _berry_oracle(ctx, rep.berry_track), tol, wrapped=True))
    p = ctx.spec.params
    if ctx.spec.family == "rotating_spin" and p["omega"] / p["mu_b"] >= TRIVIAL_LIMIT_RATIO:
        ctx.rows.append(_row("aa_phase_trivial_limit", rep.aa_phase, 0.0, s.tolerance("trivial_limit"), wrapped=True))


def _berry_oracle(ctx: _Context, track: int) -> float:
    """Closed-form Berry phase for eigen-track ``track`` (0 = lower energy = aligned)."""
    if ctx.spec.family == "static_spin":
        return 0.0
    return analytic_phase_report(ctx.spec, "plus" if track == 0 else "minus").berry_phase


def _run_frame(ctx: _Context, opts: dict) -> None:
    s = ctx.s
    if not ctx.verdict.is_cyclic:
        ctx.notes.append("frame: trajectory is not cyclic; no w-frame exists")
        ctx.verdicts["frame_built"] = False
        return
    frame = ctx.frame()
    heff = effective_hamiltonian(frame, ctx.spec)
    recon = reconstruct_amplitude(frame, ctx.spec)
    recon_err = float(np.max(np.abs(recon.states - ctx.traj.states)))
    hol = frame_holonomy(frame, 0)
    beta = aa_phase(ctx.traj, ctx.verdict)
    ctx.sections["frame"] = {
        "holonomy": [frame_holonomy(frame, n) for n in range(frame.dim)],
        "max_offdiagonal": heff.max_offdiagonal(),
        "mean_diagonal": [float(x) for x in heff.diagonal().mean(axis=0)],
        "periodicity_error": frame.periodicity_error(),
    }
    ctx.verdicts["frame_built"] = True
    ctx.rows.append(_row("frame_holonomy_vs_aa_phase", hol, beta, 1e-8, wrapped=True))
    ctx.rows.append(_bound_row("frame_periodicity_error", frame.periodicity_error(), 1e-10))
    ctx.rows.append(_bound_row("reconstruction_error", recon_err, s.tolerance("reconstruction")))
    ctx.residuals["reconstruction"] = recon_err
    if ctx.spec.family != "custom" and ("theta" in ctx.spec.params):
        if abs(ctx.grid.t_end - ctx.spec.natural_period) <= 1e-12 * ctx.spec.natural_period:
            af = analytic_w_frame(ctx.spec, ctx.grid)
            ah = effective_hamiltonian(af, ctx.spec)
            scale = ctx.spec.params["mu_b"]
            ctx.rows.append(_bound_row("analytic_frame_offdiagonal", ah.max_offdiagonal(), s.tolerance("frame") * scale))
            diag = ah.diagonal()
            expect = np.array(analytic_energies(ctx.spec))
            ctx.rows.append(
                _bound_row("analytic_frame_diagonal_error", float(np.max(np.abs(diag - expect))), s.tolerance("frame") * scale)
            )


def _superposition_spec(opts: dict) -> SuperpositionSpec:
    return SuperpositionSpec.mixing(opts["mixing_angle"], opts.get("relative_phase", 0.0))


def _run_superpose(ctx: _Context, opts: dict) -> None:
    s = ctx.s
    other = ctx.partner()
    sp = _superposition_spec(opts)
    sup = superpose(ctx.traj, other, sp)
    lin = linear_residual(sup, ctx.spec)
    nl = nonlinear_superposition_test(ctx.traj, other, sp, ctx.spec)
    cyc = check_cyclic(sup, s.tolerance("cyclic"))
    ctx.sections["superpose"] = {
        "c1": [sp.c1.real, sp.c1.imag],
        "c2": [sp.c2.real, sp.c2.imag],
        "linear_residual": lin,
        "condition_gap": nl.condition_gap,
        "nonlinear_residual": nl.residual,
        "shift_residual": nl.shift_residual,
        "cyclic": cyc.is_cyclic,
        "overlap_magnitude": cyc.overlap_magnitude,
    }
    ctx.residuals["superposition_linear"] = lin
    ctx.residuals["superposition_nonlinear"] = nl.residual
    ctx.rows.append(_bound_row("superposition_linear_residual", lin, s.tolerance("residual")))
    ctx.verdicts["representatives_superpose"] = bool(nl.residual <= 1e-5)


def _run_interfere(ctx: _Context, opts: dict) -> None:
    s = ctx.s
    psi0, psit = ctx.traj.states[0], ctx.traj.states[-1]
    inten = interference_intensity(psi0, psit)
    bar = parallel_transport_representative(ctx.traj).states
    bar_inten = interference_intensity(bar[0], bar[-1])
    # dynamical part removed: the parallel-transported pair interferes through beta alone
    sec = {
        "intensity": inten,
        "parallel_transport_intensity": bar_inten,
        "intensity_difference": bar_inten - inten,
    }
    if ctx.verdict.is_cyclic:
        expect = 2.0 + 2.0 * math.cos(ctx.verdict.total_phase)
        ctx.rows.append(_row("interference_vs_total_phase", inten, expect, 1e-8))
        beta = aa_phase(ctx.traj, ctx.verdict)
        ctx.rows.append(_row("parallel_transport_interference_vs_aa_phase", bar_inten, 2.0 + 2.0 * math.cos(beta), 1e-8))
    if ctx.oracle:
        an = 2.0 + 2.0 * math.cos(analytic_phase_report(ctx.spec, _branch(s)).total_phase)
        sec["analytic"] = an
        ctx.rows.append(_row("interference", inten, an, s.tolerance("interference")))
        if _branch(s) == "plus":
            lit = literal_interference(ctx.spec)
            sec["literal_formula"] = lit
            sec["literal_formula_discrepancy"] = abs(lit - an)
    ctx.sections["interfere"] = sec


def _run_resonance(ctx: _Context, opts: dict) -> None:
    if ctx.spec.family != "rotating_spin":
        raise NoOracleError("resonance analysis needs the rotating_spin model")
    p = ctx.spec.params
    res = resonance_check(p["mu_b"], p["omega"], p["theta"], ctx.grid.period)
    other = ctx.partner()
    sup = superpose(ctx.traj, other, SuperpositionSpec.mixing(opts["mixing_angle"]))
    cyc = check_cyclic(sup, ctx.s.tolerance("cyclic"))
    predicted = res.resonant(ctx.s.tolerance("cyclic"))
    ctx.sections["resonance"] = {
        "n_value": res.n_value,
        "m_value": res.m_value,
        "n_residual": res.n_residual,
        "m_residual": res.m_residual,
        "predicted_cyclic": predicted,
        "superposition_cyclic": cyc.is_cyclic,
        "overlap_magnitude": cyc.overlap_magnitude,
    }
    ctx.verdicts["resonant"] = predicted
    if predicted:
        ctx.rows.append(_bound_row("resonant_superposition_overlap_defect", 1.0 - cyc.overlap_magnitude, ctx.s.tolerance("cyclic")))


def _run_gauge_fuzz(ctx: _Context, opts: dict) -> None:
    s = ctx.s
    tol = s.tolerance("gauge")
    count = opts["count"]
    grid = ctx.grid
    sec = {"count": count, "seed": s.seed}
    if ctx.verdict.is_cyclic:
        beta = aa_phase(ctx.traj, ctx.verdict)
        worst = 0.0
        for j in range(count):
            g = random_gauge(grid, s.seed * 100003 + j)
            r = rephase_trajectory(ctx.traj, g)
            worst = max(worst, abs(wrap_phase(aa_phase(r) - beta)))
        sec["aa_phase_shift"] = worst
        ctx.rows.append(_bound_row("gauge_aa_phase_shift", worst, tol))
    ef = None
    try:
        ef = eigen_frame(ctx.spec, grid)
    except GeophaseError:
        pass
    if ef is not None and ef.closure_error <= CLOSED_LOOP_TOL:
        worst = 0.0
        base = [berry_phase(ef, n) for n in range(ef.frame.dim)]
        for j in range(count):
            gs = [random_gauge(grid, s.seed * 100003 + 50000 + j * ef.frame.dim + n) for n in range(ef.frame.dim)]
            rf = replace(ef, frame=rephase_frame(ef.frame, gs))
            worst = max(worst, max(abs(wrap_phase(berry_phase(rf, n) - base[n])) for n in range(ef.frame.dim)))
        sec["berry_phase_shift"] = worst
        ctx.rows.append(_bound_row("gauge_berry_phase_shift", worst, tol))
    bar = parallel_transport_representative(ctx.traj)
    cov = dens = 0.0
    for j in range(min(count, 10)):
        g = random_gauge(grid, s.seed * 100003 + 90000 + j, periodic=False)
        bar_g = parallel_transport_representative(rephase_trajectory(ctx.traj, g))
        cov = max(cov, float(np.max(np.abs(bar_g.states - np.exp(1j * g(grid.t_start)) * bar.states))))
        dens = max(dens, density_invariance(ctx.traj, g))
    sec["transport_covariance"] = cov
    sec["density_invariance"] = dens
    ctx.rows.append(_bound_row("transport_covariance", cov, 1e-10))
    ctx.rows.append(_bound_row("density_invariance", dens, 1e-14))
    if ctx.verdict.is_cyclic:
        frame = ctx.frame()
        base = reconstruct_amplitude(frame, ctx.spec).states
        worst = 0.0
        for j in range(count):
            gs = [
                random_gauge(grid, s.seed * 100003 + 70000 + j * frame.dim + n, periodic=False)
                for n in range(frame.dim)
            ]
            rec = reconstruct_amplitude(rephase_frame(frame, gs), ctx.spec).states
            worst = max(worst, float(np.max(np.abs(rec - np.exp(1j * gs[0](grid.t_start)) * base))))
        sec["frame_reconstruction_deviation"] = worst
        ctx.rows.append(_bound_row("gauge_frame_reconstruction", worst, 1e-9))
    ctx.sections["gauge_fuzz"] = sec


RUNNERS = {
    "phases": _run_phases,
    "frame": _run_frame,
    "superpose": _run_superpose,
    "interfere": _run_interfere,
    "resonance": _run_resonance,
    "gauge_fuzz": _run_gauge_fuzz,
}


@dataclass
class RunResult:
    report: dict
    trajectory: Trajectory
    frame: Optional[object] = None

    @property
    def passed(self) -> bool:
        return self.report["pass"]


def execute(s: Scenario) -> RunResult:
    ctx = _Context(s)
    for a in s.analyses:
        try:
            RUNNERS[a["kind"]](ctx, a)
        except NoOracleError as exc:
            ctx.notes.append(f"{a['kind']}: {exc}")
    ctx.residuals["linear"] = linear_residual(ctx.traj, ctx.spec)
    ctx.residuals["norm_drift"] = norm_drift(ctx.traj)
    ctx.verdicts["cyclic"] = ctx.verdict.is_cyclic
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(s.tolerances)
    report = {
        "scenario": s.to_dict(),
        "settings": {
            "spec_id": ctx.spec.spec_id,
            "t_start": ctx.grid.t_start,
            "t_end": ctx.grid.t_end,
            "steps": ctx.grid.steps,
            "seed": s.seed,
            "tolerances": tol,
            "analyses": [dict(a) for a in s.analyses],
        },
        "cyclicity": {
            "is_cyclic": ctx.verdict.is_cyclic,
            "overlap_magnitude": ctx.verdict.overlap_magnitude,
            "total_phase": ctx.verdict.total_phase,
        },
        **ctx.sections,
        "comparisons": ctx.rows,
        "residuals": ctx.residuals,
        "verdicts": ctx.verdicts,
        "notes": ctx.notes,
        "pass": all(r["pass"] for r in ctx.rows),
    }
    return RunResult(report, ctx.traj, ctx._frame)


def run_scenario(s: Scenario) -> dict:
    return execute(s).report


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2) + "\n"


# sweeps ----------------------------------------------------------------------

SWEEP_COLUMNS = (
    "index",
    "value",
    "mu_b",
    "omega",
    "theta",
    "total_phase",
    "dynamical",
    "aa_phase",
    "berry_phase",
    "aa_phase_analytic",
    "beta_minus_gamma",
    "decomposition_residual",
    "condition_gap",
    "nonlinear_residual",
    "pass",
    "error",
)


def _sweep_row(args) -> dict:
    template, axis, index, value = args
    row = {c: "" for c in SWEEP_COLUMNS}
    row["index"] = index
    row["value"] = repr(float(value))
    try:
        s = template.with_param(axis, value)
        for k in ("mu_b", "omega", "theta"):
            if k in s.params:
                row[k] = repr(s.params[k])
        rep = run_scenario(s)
        ph = rep.get("phases", {})
        for k in ("total_phase", "dynamical", "aa_phase", "berry_phase", "decomposition_residual"):
            if ph.get(k) is not None:
                row[k] = repr(ph[k])
        if "analytic" in rep:
            row["aa_phase_analytic"] = repr(rep["analytic"]["aa_phase"])
        if ph.get("aa_phase") is not None and ph.get("berry_phase") is not None:
            row["beta_minus_gamma"] = repr(abs(wrap_phase(ph["aa_phase"] - ph["berry_phase"])))
        sup = rep.get("superpose", {})
        if sup:
            row["condition_gap"] = repr(sup["condition_gap"])
            row["nonlinear_residual"] = repr(sup["nonlinear_residual"])
        row["pass"] = "true" if rep["pass"] else "false"
    except GeophaseError as exc:
        row["pass"] = "false"
        row["error"] = str(exc)
    return row


def run_sweep(template: Scenario, axis: str, values, jobs: int = 1) -> list:
    """One row per value, in input order; failures are recorded per row."""
    required, optional = FAMILY_PARAMS[template.model]
    if axis not in required + optional:
        raise ScenarioError("axis", f"{axis!r} is not a parameter of {template.model}")
    if not any(a["kind"] == "phases" for a in template.analyses):
        template = template.with_analyses([{"kind": "phases"}] + [dict(a) for a in template.analyses])
    tasks = [(template, axis, i, float(v)) for i, v in enumerate(values)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(_sweep_row, tasks))
    return [_sweep_row(t) for t in tasks]


def sweep_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def trajectory_csv(traj: Trajectory, path) -> None:
    """Columns: t, re_0, im_0, ..., re_{d-1}, im_{d-1}; 17 significant digits."""
    d = traj.dim
    header = ["t"] + [f"{p}_{i}" for i in range(d) for p in ("re", "im")]
    cols = np.empty((len(traj), 1 + 2 * d))
    cols[:, 0] = traj.times
    cols[:, 1::2] = traj.states.real
    cols[:, 2::2] = traj.states.imag
    np.savetxt(path, cols, delimiter=",", header=",".join(header), comments="", fmt="%.17g")
