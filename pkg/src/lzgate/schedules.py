"""Time profiles of the Hamiltonian coefficients and the CNOT protocol.

A :class:`GateSchedule` holds one list of :class:`PulseSegment` per
coefficient (``eps1, eps2, omega1, omega2, eta``).  The lists tile a common
interval and every profile is continuous.

:func:`build_cn_schedule` lays out the three-step gate:

1. ``eps2`` and ``eta`` ramp up with the target tunneling still off, then
   ``omega2`` ramps up at fixed bias;
2. ``eps2`` follows ``eps + u tanh((t - t_c) / tau)`` through the sweep
   window;
3. the ramps are undone in reverse order, followed by a short ``eps2`` bump
   whose area is the target-phase calibration knob.

``eps1`` is held constant throughout and ``omega1`` is identically zero.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Mapping, Sequence

import numpy as np

from lzgate.dynamics import COEFFICIENT_NAMES, HamiltonianSample
from lzgate.errors import InvalidArgument, OutOfRange, RegimeViolation

CONTINUITY_ATOL = 1e-9
SWEEP_WIDTH_IN_TAU = 16.0
DEFAULT_MARGIN = 3.0


class SegmentKind(str, enum.Enum):
    CONSTANT = "constant"
    LINEAR_RAMP = "linear-ramp"
    TANH_SWEEP = "tanh-sweep"
    RAISED_COSINE_RAMP = "raised-cosine-ramp"


_N_PARAMS = {
    SegmentKind.CONSTANT: 1,  # value
    SegmentKind.LINEAR_RAMP: 2,  # start value, end value
    SegmentKind.RAISED_COSINE_RAMP: 2,  # start value, end value
    SegmentKind.TANH_SWEEP: 4,  # offset, amplitude, tau, center
}


@dataclass(frozen=True)
class PulseSegment:
    kind: SegmentKind
    t_start: float
    t_end: float
    params: tuple[float, ...]

    def __post_init__(self):
        try:
            kind = SegmentKind(self.kind)
        except ValueError:
            raise InvalidArgument(f"unknown segment kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        object.__setattr__(self, "t_start", float(self.t_start))
        object.__setattr__(self, "t_end", float(self.t_end))
        if len(self.params) != _N_PARAMS[kind]:
            raise InvalidArgument(f"{kind.value} segment takes {_N_PARAMS[kind]} params, got {len(self.params)}")
        if not all(math.isfinite(v) for v in (self.t_start, self.t_end, *self.params)):
            raise InvalidArgument(f"non-finite value in {kind.value} segment")
        if not self.t_end > self.t_start:
            raise InvalidArgument(f"segment needs t_end > t_start, got [{self.t_start}, {self.t_end}]")
        if kind is SegmentKind.TANH_SWEEP and not self.params[2] > 0:
            raise InvalidArgument(f"tanh-sweep needs tau > 0, got {self.params[2]}")

    @classmethod
    def constant(cls, t_start, t_end, value):
        return cls(SegmentKind.CONSTANT, t_start, t_end, (value,))

    @classmethod
    def linear(cls, t_start, t_end, v0, v1):
        return cls(SegmentKind.LINEAR_RAMP, t_start, t_end, (v0, v1))

    @classmethod
    def raised_cosine(cls, t_start, t_end, v0, v1):
        return cls(SegmentKind.RAISED_COSINE_RAMP, t_start, t_end, (v0, v1))

    @classmethod
    def tanh_sweep(cls, t_start, t_end, offset, amplitude, tau, center):
        return cls(SegmentKind.TANH_SWEEP, t_start, t_end, (offset, amplitude, tau, center))

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start

    def value(self, t):
        """Segment value at ``t`` (scalar or array); no range check."""
        t = np.asarray(t, dtype=float)
        p = self.params
        if self.kind is SegmentKind.CONSTANT:
            return np.full(t.shape, p[0])
        if self.kind is SegmentKind.TANH_SWEEP:
            return p[0] + p[1] * np.tanh((t - p[3]) / p[2])
        s = np.clip((t - self.t_start) / self.duration, 0.0, 1.0)
        if self.kind is SegmentKind.RAISED_COSINE_RAMP:
            s = 0.5 - 0.5 * np.cos(np.pi * s)
        return p[0] + (p[1] - p[0]) * s

    @property
    def start_value(self) -> float:
        return float(self.value(self.t_start))

    @property
    def end_value(self) -> float:
        return float(self.value(self.t_end))

    def reversed_negated(self, pivot: float) -> "PulseSegment":
        """The segment of ``-f(pivot - t)``, i.e. mirrored in time and sign-flipped."""
        a, b = pivot - self.t_end, pivot - self.t_start
        p = self.params
        if self.kind is SegmentKind.CONSTANT:
            return PulseSegment.constant(a, b, -p[0])
        if self.kind is SegmentKind.TANH_SWEEP:
            return PulseSegment.tanh_sweep(a, b, -p[0], p[1], p[2], pivot - p[3])
        return PulseSegment(self.kind, a, b, (-p[1], -p[0]))

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind.value, "t_start": self.t_start, "t_end": self.t_end, "params": list(self.params)}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "PulseSegment":
        return cls(d["kind"], d["t_start"], d["t_end"], tuple(d["params"]))


@dataclass(frozen=True)
class CnParams:
    """Natural-unit parameters of the three-step CNOT schedule.

    ``hold`` is the length of the tanh sweep window and defaults to
    ``16 * tau``.  ``eps1_level`` and ``eps2_tail_area`` are the phase knobs
    used by calibration.
    """

    eps: float
    u: float
    eta: float
    omega: float
    tau: float
    ramp: float
    hold: float | None = None
    eps1_level: float = 0.0
    eps2_tail_area: float = 0.0

    @property
    def sweep_duration(self) -> float:
        return SWEEP_WIDTH_IN_TAU * self.tau if self.hold is None else self.hold

    @property
    def adiabaticity(self) -> float:
        """Landau-Zener exponent ``pi tau omega**2 / u``."""
        return math.pi * self.tau * self.omega**2 / self.u

    def replace(self, **changes) -> "CnParams":
        d = asdict(self)
        d.update(changes)
        return CnParams(**d)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "CnParams":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise InvalidArgument(f"unknown CnParams field(s): {', '.join(sorted(unknown))}")
        return cls(**d)


def _tiles(name: str, segs: Sequence[PulseSegment]) -> None:
    if not segs:
        raise InvalidArgument(f"profile {name} has no segments")
    for left, right in zip(segs[:-1], segs[1:]):
        scale = max(1.0, abs(left.t_end), abs(right.t_start))
        if abs(left.t_end - right.t_start) > 1e-12 * scale:
            raise InvalidArgument(
                f"profile {name}: gap or overlap between segments at t = {left.t_end} / {right.t_start}"
            )
        jump = abs(left.end_value - right.start_value)
        if jump > CONTINUITY_ATOL * max(1.0, abs(left.end_value)):
            raise InvalidArgument(f"profile {name}: discontinuity of {jump:.3e} at t = {left.t_end}")


@dataclass(frozen=True)
class GateSchedule:
    """Piecewise profiles of all five Hamiltonian coefficients.

    Construction checks coverage (every profile tiles the same interval)
    and continuity.  The CNOT-specific invariants (boundary idleness of
    ``omega2``/``eta`` and ``omega1 == 0``) are checked by
    :meth:`check_cn_invariants`, since single-qubit pulses such as the
    quarter rotation legitimately violate them.
    """

    eps1: tuple[PulseSegment, ...]
    eps2: tuple[PulseSegment, ...]
    omega1: tuple[PulseSegment, ...]
    omega2: tuple[PulseSegment, ...]
    eta: tuple[PulseSegment, ...]
    cn_params: CnParams | None = field(default=None, compare=False)

    def __post_init__(self):
        for name in COEFFICIENT_NAMES:
            segs = tuple(getattr(self, name))
            object.__setattr__(self, name, segs)
            _tiles(name, segs)
        starts = {getattr(self, n)[0].t_start for n in COEFFICIENT_NAMES}
        ends = {getattr(self, n)[-1].t_end for n in COEFFICIENT_NAMES}
        span = max(ends) - min(starts)
        if max(starts) - min(starts) > 1e-12 * span or max(ends) - min(ends) > 1e-12 * span:
            raise InvalidArgument("profiles do not cover a common interval")
        ends_arrays = {}
        for name in COEFFICIENT_NAMES:
            ends_arrays[name] = np.array([s.t_end for s in getattr(self, name)])
        object.__setattr__(self, "_ends", ends_arrays)

    @classmethod
    def constant(cls, t_start: float, t_end: float, **coefficients: float) -> "GateSchedule":
        """Schedule with every coefficient constant; unspecified ones are zero."""
        unknown = set(coefficients) - set(COEFFICIENT_NAMES)
        if unknown:
            raise InvalidArgument(f"unknown coefficient(s): {', '.join(sorted(unknown))}")
        return cls(
            **{n: (PulseSegment.constant(t_start, t_end, coefficients.get(n, 0.0)),) for n in COEFFICIENT_NAMES}
        )

    @property
    def t_start(self) -> float:
        return self.eps1[0].t_start

    @property
    def t_end(self) -> float:
        return self.eps1[-1].t_end

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start

    def profile(self, name: str) -> tuple[PulseSegment, ...]:
        if name not in COEFFICIENT_NAMES:
            raise InvalidArgument(f"unknown coefficient {name!r}")
        return getattr(self, name)

    def breakpoints(self) -> list[float]:
        """Sorted segment junction times, including both ends."""
        points = {self.t_start, self.t_end}
        for name in COEFFICIENT_NAMES:
            points.update(s.t_end for s in getattr(self, name))
        return sorted(points)

    def _check_range(self, t: np.ndarray) -> None:
        slack = 1e-12 * max(1.0, abs(self.t_start), abs(self.t_end))
        if t.size and (t.min() < self.t_start - slack or t.max() > self.t_end + slack):
            raise OutOfRange(f"time outside schedule interval [{self.t_start}, {self.t_end}]")

    def profile_values(self, name: str, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        self._check_range(t)
        segs = self.profile(name)
        idx = np.minimum(np.searchsorted(self._ends[name], t, side="left"), len(segs) - 1)
        out = np.empty(t.shape)
        for k in np.unique(idx):
            mask = idx == k
            out[mask] = segs[k].value(t[mask])
        return out

    def coefficients(self, t) -> np.ndarray:
        """Coefficient rows ``(eps1, eps2, omega1, omega2, eta)`` of shape (n, 5)."""
        return np.stack([self.profile_values(n, t) for n in COEFFICIENT_NAMES], axis=-1)

    def eval(self, t: float) -> HamiltonianSample:
        """The five coefficient values at time ``t``."""
        row = self.coefficients(np.array([float(t)]))[0]
        return HamiltonianSample(*(float(v) for v in row))

    def reversed_negated(self) -> "GateSchedule":
        """Schedule with ``H'(t) = -H(t_start + t_end - t)``; it undoes this one."""
        pivot = self.t_start + self.t_end
        return GateSchedule(
            **{n: tuple(s.reversed_negated(pivot) for s in reversed(getattr(self, n))) for n in COEFFICIENT_NAMES}
        )

    def idle_at_boundaries(self, atol: float = 1e-12) -> bool:
        """True when ``omega2`` and ``eta`` vanish at both ends."""
        ends = np.array([self.t_start, self.t_end])
        return bool(
            np.all(np.abs(self.profile_values("omega2", ends)) <= atol)
            and np.all(np.abs(self.profile_values("eta", ends)) <= atol)
        )

    def omega1_suppressed(self) -> bool:
        return all(s.kind is SegmentKind.CONSTANT and s.params[0] == 0.0 for s in self.omega1)

    def check_cn_invariants(self) -> None:
        if not self.idle_at_boundaries():
            raise InvalidArgument("omega2 and eta must vanish at both ends of a CNOT schedule")
        if not self.omega1_suppressed():
            raise InvalidArgument("omega1 must be identically zero in a CNOT schedule")

    def to_dict(self) -> dict[str, Any]:
        return {
            "t_start": self.t_start,
            "t_end": self.t_end,
            "profiles": {n: [s.to_dict() for s in getattr(self, n)] for n in COEFFICIENT_NAMES},
            "cn_params": None if self.cn_params is None else self.cn_params.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "GateSchedule":
        profiles = d["profiles"]
        missing = set(COEFFICIENT_NAMES) - set(profiles)
        if missing:
            raise InvalidArgument(f"schedule is missing profile(s): {', '.join(sorted(missing))}")
        cn = d.get("cn_params")
        return cls(
            **{n: tuple(PulseSegment.from_dict(s) for s in profiles[n]) for n in COEFFICIENT_NAMES},
            cn_params=None if cn is None else CnParams.from_dict(cn),
        )


# -- operating regime ---------------------------------------------------------


@dataclass(frozen=True)
class RegimeCheck:
    """Margins of the crossing-selectivity inequalities, in units of omega.

    ``ratios`` maps a label to its value; every ratio must reach
    ``margin``.  The adiabaticity entry is the Landau-Zener exponent and is
    present only when ``tau`` was supplied.
    """

    ratios: dict[str, float]
    margin: float

    @property
    def failing(self) -> tuple[str, ...]:
        # relative slack so that ratios landing on the threshold up to rounding pass
        return tuple(k for k, v in self.ratios.items() if not v >= self.margin * (1 - 1e-12))

    @property
    def passed(self) -> bool:
        return not self.failing

    def to_dict(self) -> dict[str, Any]:
        return {"ratios": dict(self.ratios), "margin": self.margin, "passed": self.passed, "failing": list(self.failing)}


def check_regime(eps: float, u: float, eta: float, omega: float, margin: float = DEFAULT_MARGIN, tau: float | None = None) -> RegimeCheck:
    """Evaluate the three inequalities that make the sweep control-selective.

    With control ``1`` the target bias runs from ``eps - u - eta`` to
    ``eps + u - eta`` and must cross zero; with control ``0`` it runs from
    ``eps - u + eta`` to ``eps + u + eta`` and must stay positive.
    """
    if not omega > 0:
        raise InvalidArgument(f"check_regime needs omega > 0, got {omega!r}")
    ratios = {
        "eta+u-eps": (eta + u - eps) / omega,
        "eps+u-eta": (eps + u - eta) / omega,
        "eps+eta-u": (eps + eta - u) / omega,
    }
    if tau is not None:
        ratios["adiabaticity"] = math.pi * tau * omega**2 / u
    return RegimeCheck(ratios, margin)


def build_cn_schedule(p: CnParams, margin: float = DEFAULT_MARGIN) -> GateSchedule:
    """Lay out the three-step CNOT schedule described in the module docstring.

    Raises
    ------
    RegimeViolation
        If a parameter is non-positive or a regime ratio is below ``margin``.
    """
    for name in ("eps", "u", "eta", "omega", "tau", "ramp"):
        value = getattr(p, name)
        if not (math.isfinite(value) and value > 0):
            reason = {
                "eta": "no interaction, the crossing cannot depend on the control qubit",
                "omega": "zero gap, adiabaticity exponent is 0 and p_LZ = 1",
            }.get(name, "must be positive")
            raise RegimeViolation(f"{name} = {value!r}: {reason}", failing=(name,))
    hold = p.sweep_duration
    if not (math.isfinite(hold) and hold > 0):
        raise RegimeViolation(f"hold = {hold!r}: must be positive", failing=("hold",))
    for name in ("eps1_level", "eps2_tail_area"):
        if not math.isfinite(getattr(p, name)):
            raise InvalidArgument(f"{name} must be finite")
    check = check_regime(p.eps, p.u, p.eta, p.omega, margin, tau=p.tau)
    if not check.passed:
        detail = ", ".join(f"{k} = {check.ratios[k]:.4g}" for k in check.failing)
        raise RegimeViolation(f"operating regime violated at margin {margin:g}: {detail}", check.failing, check)

    r = p.ramp
    t1, t2 = r, 2 * r
    t3 = t2 + hold
    t4, t5, t6 = t3 + r, t3 + 2 * r, t3 + 3 * r
    center = t2 + hold / 2
    e_start = p.eps + p.u * math.tanh(-hold / (2 * p.tau))
    e_end = p.eps + p.u * math.tanh(hold / (2 * p.tau))
    bump = 2 * p.eps2_tail_area / r  # peak of the tail bump with the requested area

    S = PulseSegment
    eps2 = (
        S.raised_cosine(0.0, t1, 0.0, e_start),
        S.constant(t1, t2, e_start),
        S.tanh_sweep(t2, t3, p.eps, p.u, p.tau, center),
        S.constant(t3, t4, e_end),
        S.raised_cosine(t4, t5, e_end, 0.0),
        S.raised_cosine(t5, t5 + r / 2, 0.0, bump),
        S.raised_cosine(t5 + r / 2, t6, bump, 0.0),
    )
    eta = (
        S.raised_cosine(0.0, t1, 0.0, p.eta),
        S.constant(t1, t4, p.eta),
        S.raised_cosine(t4, t5, p.eta, 0.0),
        S.constant(t5, t6, 0.0),
    )
    omega2 = (
        S.constant(0.0, t1, 0.0),
        S.raised_cosine(t1, t2, 0.0, p.omega),
        S.constant(t2, t3, p.omega),
        S.raised_cosine(t3, t4, p.omega, 0.0),
        S.constant(t4, t6, 0.0),
    )
    schedule = GateSchedule(
        eps1=(S.constant(0.0, t6, p.eps1_level),),
        eps2=eps2,
        omega1=(S.constant(0.0, t6, 0.0),),
        omega2=omega2,
        eta=eta,
        cn_params=p,
    )
    schedule.check_cn_invariants()
    return schedule


def sweep_window(schedule: GateSchedule) -> tuple[float, float]:
    """Start and end of the tanh segment of ``eps2``."""
    for seg in schedule.eps2:
        if seg.kind is SegmentKind.TANH_SWEEP:
            return seg.t_start, seg.t_end
    raise InvalidArgument("schedule has no tanh sweep in eps2")
