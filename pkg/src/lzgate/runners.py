"""One computation per mode, shared by plain runs and sweep points.

Every runner takes a validated :class:`~lzgate.config.RunConfig` and
returns a :class:`ModeResult`: a JSON-ready ``detail`` object and a list of
flat scalar ``rows`` whose keys are exactly ``MODE_COLUMNS[mode]``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from lzgate.analysis import (
    GateReport,
    LzParams,
    analyze_gate,
    lz_numeric,
    lz_probability,
    phase_readout,
    simulate_phase_readout,
    superposition_state,
)
from lzgate.calibration import KnobBounds, calibrate, predicted_lz
from lzgate.config import RunConfig, make_rng
from lzgate.device import RULE_NAMES, design_check, gate_params_from_device
from lzgate.dynamics import propagate, unitarity_defect
from lzgate.errors import InvalidArgument
from lzgate.schedules import build_cn_schedule, check_regime
from lzgate.units import EnergyValue

_DERIVED_NAMES = ("EC", "EJ", "Ct", "lambda", "eta_m", "omega_m", "deltaV", "Ic", "Pd", "Pl", "alpha", "screening_length")

MODE_COLUMNS: dict[str, tuple[str, ...]] = {
    "simulate": GateReport.SCALARS + ("n_steps", "unitarity_defect"),
    "calibrate": GateReport.SCALARS + ("evaluations", "iterations", "converged", "eps1_level", "eps2_tail_area"),
    "lz-verify": ("omega", "u", "tau", "exponent", "p_analytic", "p_numeric", "rel_error"),
    "design-check": tuple(f"ratio_{n}" for n in RULE_NAMES) + _DERIVED_NAMES + ("passed",),
    "measure-phase": ("p1", "phi", "q1", "q2", "q1_closed", "q2_closed", "max_abs_error", "random_cases", "random_max_abs_error"),
}


@dataclass
class ModeResult:
    detail: dict[str, Any]
    rows: list[dict[str, Any]] = field(default_factory=list)


def run_simulate(cfg: RunConfig) -> ModeResult:
    p = cfg.cn_params()
    schedule = build_cn_schedule(p, margin=cfg.margin)
    U, info = propagate(schedule, tol=cfg.tol, full_output=True)
    report = analyze_gate(U, predicted_lz(p))
    row = report.scalars()
    row.update(n_steps=info.n_steps, unitarity_defect=unitarity_defect(U))
    detail = {
        "cn_params": p.to_dict(),
        "regime": check_regime(p.eps, p.u, p.eta, p.omega, cfg.margin, tau=p.tau).to_dict(),
        "report": report.to_dict(),
        "propagation": {"n_steps": info.n_steps, "max_step": info.max_step, "delta": info.delta, "refinements": info.refinements},
        "unitary": {"real": U.real.tolist(), "imag": U.imag.tolist()},
    }
    return ModeResult(detail, [row])


def run_calibrate(cfg: RunConfig) -> ModeResult:
    p = cfg.cn_params()
    c = cfg.section("calibration")
    bounds = KnobBounds(
        eps1_level=tuple(c.get("eps1_bounds", KnobBounds.eps1_level)),
        eps2_tail_area=tuple(c.get("tail_bounds", KnobBounds.eps2_tail_area)),
    )
    result = calibrate(
        build_cn_schedule(p, margin=cfg.margin),
        bounds,
        tol=c.get("fidelity_tol", 1e-4),
        chi_tol=c.get("chi_tol", 1e-3),
        max_evals=int(c.get("max_evals", 60)),
        prop_tol=cfg.tol,
        margin=cfg.margin,
    )
    row = result.report.scalars()
    row.update(
        evaluations=result.evaluations,
        iterations=result.iterations,
        converged=result.converged,
        eps1_level=result.knobs["eps1_level"],
        eps2_tail_area=result.knobs["eps2_tail_area"],
    )
    detail = {
        "cn_params": result.schedule.cn_params.to_dict(),
        "initial_report": result.initial_report.to_dict(),
        "report": result.report.to_dict(),
        "evaluations": result.evaluations,
        "iterations": result.iterations,
        "converged": result.converged,
        "knobs": dict(result.knobs),
    }
    return ModeResult(detail, [row])


def _as_list(v) -> list[float]:
    return [float(x) for x in (v if isinstance(v, list) else [v])]


def lz_grid(lz: dict) -> list[LzParams]:
    """Cartesian grid of ``omega x u x (tau | exponent)`` from an ``lz`` section."""
    out = []
    for omega, u in itertools.product(_as_list(lz["omega"]), _as_list(lz["u"])):
        if "tau" in lz:
            taus = _as_list(lz["tau"])
        else:
            if not (omega > 0 and u > 0):
                raise InvalidArgument(f"lz omega and u must be positive, got omega={omega!r}, u={u!r}")
            taus = [k * u / (math.pi * omega**2) for k in _as_list(lz["exponent"])]
        out.extend(LzParams(omega, u, tau) for tau in taus)
    return out


def run_lz_verify(cfg: RunConfig) -> ModeResult:
    lz = cfg.section("lz")
    offset = float(lz.get("eps_offset", 0.0))
    rows = []
    for p in lz_grid(lz):
        analytic = lz_probability(p)
        numeric = lz_numeric(p, offset, tol=cfg.tol)
        rows.append(
            {
                "omega": p.omega,
                "u": p.u,
                "tau": p.tau,
                "exponent": p.exponent,
                "p_analytic": analytic,
                "p_numeric": numeric,
                "rel_error": abs(numeric - analytic) / analytic if analytic > 0 else math.inf,
            }
        )
    return ModeResult({"eps_offset": offset, "rows": rows}, rows)


def run_design_check(cfg: RunConfig) -> ModeResult:
    device = cfg.device_params()
    report = design_check(device, cfg.margin)
    detail = report.to_dict()
    e_ref = cfg.data.get("e_ref")
    if e_ref is not None and report.passed:
        detail["gate_params"] = gate_params_from_device(device, EnergyValue.kelvin(e_ref), cfg.margin).to_dict()
    detail["table"] = report.table()
    return ModeResult(detail, [report.scalars()])


def _readout_errors(p1: float, phi: float, qubit: int, control: np.ndarray) -> tuple[float, float, float]:
    qubit_state = superposition_state(p1, phi)
    state = np.kron(control, qubit_state) if qubit == 1 else np.kron(qubit_state, control)
    q1, q2 = simulate_phase_readout(state, qubit)
    closed = phase_readout(p1, phi)
    return q1, q2, max(abs(q1 - closed.q1), abs(q2 - closed.q2))


def run_measure_phase(cfg: RunConfig) -> ModeResult:
    ph = cfg.section("phase")
    p1, phi, qubit = float(ph["p1"]), float(ph["phi"]), int(ph.get("qubit", 1))
    q1, q2, err = _readout_errors(p1, phi, qubit, np.array([1.0, 0.0]))
    closed = phase_readout(p1, phi)
    n = int(ph.get("random_cases", 0))
    rng = make_rng(cfg.seed)
    worst = 0.0
    for _ in range(n):
        rp1 = float(rng.uniform(0.0, 1.0))
        rphi = float(rng.uniform(-math.pi, math.pi))
        spectator = rng.normal(size=2) + 1j * rng.normal(size=2)
        spectator /= np.linalg.norm(spectator)
        worst = max(worst, _readout_errors(rp1, rphi, qubit, spectator)[2])
    row = {
        "p1": p1,
        "phi": phi,
        "q1": q1,
        "q2": q2,
        "q1_closed": closed.q1,
        "q2_closed": closed.q2,
        "max_abs_error": err,
        "random_cases": n,
        "random_max_abs_error": worst,
    }
    return ModeResult({"qubit": qubit, **row}, [row])


RUNNERS: dict[str, Callable[[RunConfig], ModeResult]] = {
    "simulate": run_simulate,
    "calibrate": run_calibrate,
    "lz-verify": run_lz_verify,
    "design-check": run_design_check,
    "measure-phase": run_measure_phase,
}


def run_mode(cfg: RunConfig) -> ModeResult:
    return RUNNERS[cfg.mode](cfg)
