"""Phase calibration of a CNOT schedule.

Input-side single-qubit Z phases are removed analytically by
:func:`lzgate.analysis.corrected_fidelity`.  What remains is the
entangling-phase mismatch ``chi``, which has to be nulled with physical
knobs: the constant control bias ``eps1_level`` and the area of the
``eps2`` bump that closes the schedule.  The bump runs after ``omega2`` and
``eta`` are off, so it is a pure target Z rotation applied after the gate
and shifts ``chi`` by ``-4 x area``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize

from lzgate.analysis import GateReport, LzParams, analyze_gate, lz_probability
from lzgate.dynamics import propagate
from lzgate.errors import InvalidArgument
from lzgate.schedules import DEFAULT_MARGIN, CnParams, GateSchedule, build_cn_schedule, check_regime

log = logging.getLogger(__name__)

KNOBS = ("eps1_level", "eps2_tail_area")


@dataclass(frozen=True)
class KnobBounds:
    """Absolute search bounds of the two calibration knobs.

    A zero-width interval freezes the knob at the schedule's current value.
    """

    eps1_level: tuple[float, float] = (-0.25, 0.25)
    eps2_tail_area: tuple[float, float] = (-math.pi / 2, math.pi / 2)

    def __post_init__(self):
        for name in KNOBS:
            lo, hi = (float(v) for v in getattr(self, name))
            if not (math.isfinite(lo) and math.isfinite(hi)) or hi < lo:
                raise InvalidArgument(f"bounds for {name} must be a finite (low, high) pair, got {(lo, hi)}")
            object.__setattr__(self, name, (lo, hi))

    def width(self, name: str) -> float:
        lo, hi = getattr(self, name)
        return hi - lo


@dataclass
class CalibrationResult:
    schedule: GateSchedule
    report: GateReport
    initial_report: GateReport
    evaluations: int
    iterations: int
    converged: bool
    knobs: dict[str, float] = field(default_factory=dict)

    @property
    def best_effort(self) -> bool:
        return not self.converged


def predicted_lz(p: CnParams) -> float:
    return lz_probability(LzParams(p.omega, p.u, p.tau))


def simulate_gate(p: CnParams, tol: float = 1e-6, margin: float = DEFAULT_MARGIN):
    """Build, propagate and analyse one CNOT run; returns ``(schedule, U, report)``."""
    schedule = build_cn_schedule(p, margin=margin)
    U = propagate(schedule, tol=tol)
    return schedule, U, analyze_gate(U, predicted_lz(p))


def calibrate(
    schedule: GateSchedule,
    knobs: KnobBounds | None = None,
    tol: float = 1e-4,
    *,
    chi_tol: float = 1e-3,
    max_evals: int = 60,
    prop_tol: float = 1e-6,
    margin: float = DEFAULT_MARGIN,
    propagator: Callable[[GateSchedule], np.ndarray] | None = None,
) -> CalibrationResult:
    """Tune ``eps1_level`` and the ``eps2`` tail area so that the gate is a CNOT.

    Nelder-Mead minimises ``(1 - fidelity_cal) + chi**2``, re-propagating
    the schedule at every evaluation.  The search stops as soon as
    ``fidelity_cal >= 1 - tol`` and ``|chi| <= chi_tol``.  The tail area is
    seeded with the first-order estimate ``area + chi / 4``.

    Parameters
    ----------
    schedule
        A schedule produced by :func:`build_cn_schedule` (it must carry its
        ``cn_params``).
    propagator
        Replaces the default ``propagate(schedule, tol=prop_tol)``.

    Returns
    -------
    CalibrationResult
        ``converged`` is False when the evaluation budget ran out; the best
        point found is returned in that case.
    """
    p = schedule.cn_params
    if p is None:
        raise InvalidArgument("calibrate needs a schedule built by build_cn_schedule")
    regime = check_regime(p.eps, p.u, p.eta, p.omega, margin, tau=p.tau)
    if not regime.passed:
        raise InvalidArgument(f"schedule fails the regime check: {', '.join(regime.failing)}")
    knobs = KnobBounds() if knobs is None else knobs
    if propagator is None:
        propagator = lambda s: propagate(s, tol=prop_tol)  # noqa: E731
    p_lz = predicted_lz(p)

    def satisfied(rep: GateReport) -> bool:
        return rep.fidelity_cal >= 1.0 - tol and abs(rep.chi) <= chi_tol

    def objective_of(rep: GateReport) -> float:
        return (1.0 - rep.fidelity_cal) + rep.chi**2

    initial = analyze_gate(propagator(schedule), p_lz)
    current = {k: getattr(p, k) for k in KNOBS}
    state = {"evals": 1, "best": (objective_of(initial), schedule, initial, dict(current))}
    if satisfied(initial):
        return CalibrationResult(schedule, initial, initial, 1, 0, True, current)

    free = [k for k in KNOBS if knobs.width(k) > 0]
    if not free:
        return CalibrationResult(schedule, initial, initial, 1, 0, False, current)

    seed = dict(current)
    seed["eps2_tail_area"] = current["eps2_tail_area"] + initial.chi / 4
    x0 = np.array([np.clip(seed[k], *getattr(knobs, k)) for k in free])
    bounds = [getattr(knobs, k) for k in free]

    class _Done(Exception):
        pass

    def evaluate(x):
        values = dict(current)
        values.update(zip(free, (float(v) for v in x)))
        trial = build_cn_schedule(p.replace(**values), margin=margin)
        rep = analyze_gate(propagator(trial), p_lz)
        state["evals"] += 1
        f = objective_of(rep)
        log.debug("calibrate eval %d: %s -> chi=%.3e F_cal=%.9f", state["evals"], values, rep.chi, rep.fidelity_cal)
        if f < state["best"][0]:
            state["best"] = (f, trial, rep, values)
        if satisfied(rep):
            raise _Done
        if state["evals"] >= max_evals:
            raise _Done
        return f

    # simplex steps point into the box so that the first vertices stay feasible
    simplex = [x0]
    for i, k in enumerate(free):
        lo, hi = getattr(knobs, k)
        step = 0.02 * (hi - lo)
        v = x0.copy()
        v[i] = x0[i] + step if x0[i] + step <= hi else x0[i] - step
        simplex.append(v)
    iterations = 0
    try:
        res = minimize(
            evaluate,
            x0,
            method="Nelder-Mead",
            bounds=bounds,
            options={"initial_simplex": np.array(simplex), "maxfev": max_evals, "xatol": 1e-10, "fatol": 1e-14},
        )
        iterations = int(res.nit)
    except _Done:
        iterations = max(1, state["evals"] - 1)
    _, best_schedule, best_report, best_values = state["best"]
    return CalibrationResult(
        best_schedule,
        best_report,
        initial,
        state["evals"],
        iterations,
        satisfied(best_report),
        best_values,
    )
