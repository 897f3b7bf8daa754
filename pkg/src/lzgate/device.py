"""Josephson junction array parameters mapped onto gate parameters.

All inputs and outputs are SI (farad, ohm, joule, metre, watt) unless a
function says otherwise.  Temperatures and gaps are energies in joules;
use :func:`lzgate.units.kelvin_to_joule` to enter them in kelvin.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Mapping, Sequence

from lzgate.errors import DesignRuleViolation, InvalidArgument
from lzgate.schedules import CnParams
from lzgate.units import CONSTANTS, EnergyLike, _reference_joule, energy_to_angular_frequency, kelvin_to_joule

E = CONSTANTS.e
HBAR = CONSTANTS.hbar
PERTURBATIVE_FACTOR_LIMIT = 0.5


def _positive(**values):
    for name, v in values.items():
        if not (math.isfinite(v) and v > 0):
            raise InvalidArgument(f"{name} must be positive, got {v!r}")


def _non_negative(**values):
    for name, v in values.items():
        if not (math.isfinite(v) and v >= 0):
            raise InvalidArgument(f"{name} must be non-negative, got {v!r}")


def charging_energy(n: int, Q0: float, C: float) -> float:
    """Electrostatic energy ``(2 e n - Q0)**2 / 2C`` with ``n`` Cooper pairs transferred."""
    _positive(C=C)
    return (2 * E * n - Q0) ** 2 / (2 * C)


def elementary_charging_energy(C: float) -> float:
    """``E_C = e**2 / 2C``."""
    _positive(C=C)
    return E**2 / (2 * C)


def capacitance_for_charging_energy(EC: float) -> float:
    """Junction capacitance giving ``E_C = e**2 / 2C``."""
    _positive(EC=EC)
    return E**2 / (2 * EC)


def bias_detuning(Q0: float, C: float) -> float:
    """Level splitting ``2e (e - Q0) / C`` of the n = 0, 1 pair.

    Equals ``U(1) - U(0)``, positive for ``Q0 < e``.
    """
    _positive(C=C)
    return 2 * E * (E - Q0) / C


def josephson_energy(RT: float, Delta: float) -> float:
    """``E_J = pi hbar Delta / (4 e**2 R_T)`` for equal gaps; the tunneling amplitude is ``E_J / 2``."""
    _positive(RT=RT, Delta=Delta)
    return math.pi * HBAR * Delta / (4 * E**2 * RT)


def tunnel_resistance_for(EJ: float, Delta: float) -> float:
    """Invert :func:`josephson_energy` for the tunnel resistance."""
    _positive(EJ=EJ, Delta=Delta)
    return math.pi * HBAR * Delta / (4 * E**2 * EJ)


def total_island_capacitance(C: float, C0: float) -> float:
    """``C_t = sqrt(C0**2 + 4 C C0)`` of an internal array island."""
    _non_negative(C=C, C0=C0)
    return math.sqrt(C0**2 + 4 * C * C0)


def tunneling_amplitude(EJ: float, intermediates: Sequence[float] = ()) -> float:
    """Amplitude for moving a Cooper pair across ``m = len(intermediates) + 1`` junctions.

    ``Omega = (E_J / 2) * prod_k E_J / (2 E_k)`` over the energies of the
    intermediate charge configurations.  A warning is issued when a factor
    exceeds 0.5, where the lowest-order formula is unreliable.
    """
    _positive(EJ=EJ)
    omega = EJ / 2
    for k, Ek in enumerate(intermediates, start=1):
        if not (math.isfinite(Ek) and Ek > 0):
            raise InvalidArgument(f"intermediate energy E_{k} must be positive, got {Ek!r}")
        factor = EJ / (2 * Ek)
        if factor > PERTURBATIVE_FACTOR_LIMIT:
            warnings.warn(
                f"E_J / 2E_{k} = {factor:.3g} > {PERTURBATIVE_FACTOR_LIMIT}: sequential-tunneling product is not perturbative",
                RuntimeWarning,
                stacklevel=2,
            )
        omega *= factor
    return omega


def screening_factor(C: float, C0: float, Ct: float | None = None) -> float:
    """``lambda = 2C / (2C + C0 + C_t)``."""
    _positive(C=C)
    _non_negative(C0=C0)
    Ct = total_island_capacitance(C, C0) if Ct is None else Ct
    return 2 * C / (2 * C + C0 + Ct)


def interaction_eta(C: float, C0: float, Ct: float | None = None, m: int = 0) -> float:
    """Screened interaction ``(2e)**2 / C_t * lambda**m`` of two pairs ``m`` junctions apart.

    The screening factor itself is :func:`screening_factor`.
    """
    if m < 0 or int(m) != m:
        raise InvalidArgument(f"separation m must be a non-negative integer, got {m!r}")
    _positive(C=C, C0=C0)
    Ct = total_island_capacitance(C, C0) if Ct is None else Ct
    _positive(Ct=Ct)
    return (2 * E) ** 2 / Ct * screening_factor(C, C0, Ct) ** int(m)


def coupling_delta_v(C: float, C0: float, Ci: float, Ct: float | None = None) -> float:
    """Extra voltage ``8 e C_i / ((C0 + C_t + 2C)(C0 + C_t + 4 C_i))`` across the target junction."""
    _positive(C=C, C0=C0)
    _non_negative(Ci=Ci)
    Ct = total_island_capacitance(C, C0) if Ct is None else Ct
    return 8 * E * Ci / ((C0 + Ct + 2 * C) * (C0 + Ct + 4 * Ci))


def dipole_power(omega: float, d: float) -> float:
    """Dipole radiation ``e**2 omega**4 d**2 / (4 pi eps0 c**3)`` in watts."""
    _non_negative(omega=omega, d=d)
    return E**2 * omega**4 * d**2 / (4 * math.pi * CONSTANTS.eps0 * CONSTANTS.c**3)


def line_power(C0: float, C: float, omega: float, rho: float) -> float:
    """Loss into the gate electrode ``(e C0 / C)**2 omega**2 rho`` in watts."""
    _positive(C=C)
    _non_negative(C0=C0, omega=omega, rho=rho)
    return (E * C0 / C) ** 2 * omega**2 * rho


def cycle_error_alpha(C0: float, C: float, rho: float) -> float:
    """Per-cycle decoherence error ``(C0/C)**2 rho / (hbar / e**2)``."""
    _positive(C=C)
    _non_negative(C0=C0, rho=rho)
    return (C0 / C) ** 2 * rho / CONSTANTS.resistance_scale


def critical_current(EJ: float) -> float:
    """``I_c = 2 e E_J / hbar`` in ampere."""
    _non_negative(EJ=EJ)
    return 2 * E * EJ / HBAR


# -- parameter sets -----------------------------------------------------------


@dataclass(frozen=True)
class DeviceParams:
    """Physical parameters of the two-array gate.

    ``intermediates`` are the energies of the intermediate charge
    configurations used by :func:`tunneling_amplitude` for the control
    qubit separation ``m``; when omitted each is taken as ``E_C``.
    """

    C: float
    C0: float
    Ci: float
    Cstar: float
    RT: float
    Delta: float
    T: float
    rho: float
    d: float
    N: int
    m: int
    intermediates: tuple[float, ...] | None = None

    def __post_init__(self):
        _positive(C=self.C, C0=self.C0, Ci=self.Ci, Cstar=self.Cstar, RT=self.RT, Delta=self.Delta, rho=self.rho, d=self.d)
        _non_negative(T=self.T)
        if int(self.N) != self.N or self.N < 2:
            raise InvalidArgument(f"N must be an integer >= 2, got {self.N!r}")
        if int(self.m) != self.m or self.m < 1:
            raise InvalidArgument(f"m must be an integer >= 1, got {self.m!r}")
        if not self.m < self.N:
            raise InvalidArgument(f"m = {self.m} must be smaller than N = {self.N}")
        if self.Cstar < self.C0:
            raise InvalidArgument("Cstar (total stray capacitance) cannot be smaller than C0")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "m", int(self.m))
        if self.intermediates is not None:
            inter = tuple(float(v) for v in self.intermediates)
            if len(inter) != self.m - 1:
                raise InvalidArgument(f"expected m - 1 = {self.m - 1} intermediate energies, got {len(inter)}")
            object.__setattr__(self, "intermediates", inter)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        if d["intermediates"] is not None:
            d["intermediates"] = list(d["intermediates"])
        return d

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "DeviceParams":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise InvalidArgument(f"unknown DeviceParams field(s): {', '.join(sorted(unknown))}")
        d = dict(d)
        if d.get("Cstar") is None:
            d["Cstar"] = d.get("C0")
        if d.get("intermediates") is not None:
            d["intermediates"] = tuple(d["intermediates"])
        return cls(**d)


def reference_device(**overrides) -> DeviceParams:
    """The illustrative operating point: T = 30 mK, E_J = 1 K, E_C = 3 K, Delta = 20 K.

    C follows from E_C = e**2/2C (about 0.31 fF), C0/C = 0.1, rho = 300 ohm,
    70 nm electrodes, and the tunnel resistance is chosen for E_J = 1 K.
    """
    C = capacitance_for_charging_energy(kelvin_to_joule(3.0))
    Delta = kelvin_to_joule(20.0)
    values = dict(
        C=C,
        C0=0.1 * C,
        Ci=0.1 * C,
        Cstar=0.1 * C,
        RT=tunnel_resistance_for(kelvin_to_joule(1.0), Delta),
        Delta=Delta,
        T=kelvin_to_joule(0.030),
        rho=300.0,
        d=70e-9,
        N=20,
        m=3,
    )
    values.update(overrides)
    return DeviceParams(**values)


@dataclass(frozen=True)
class DerivedDevice:
    EC: float
    EJ: float
    Ct: float
    lam: float
    eta_m: float
    omega_m: float
    deltaV: float
    Ic: float
    Pd: float
    Pl: float
    alpha: float
    screening_length: float

    def to_dict(self) -> dict[str, float]:
        return {("lambda" if k == "lam" else k): v for k, v in asdict(self).items()}


def derive(p: DeviceParams) -> DerivedDevice:
    EC = elementary_charging_energy(p.C)
    EJ = josephson_energy(p.RT, p.Delta)
    Ct = total_island_capacitance(p.C, p.C0)
    intermediates = p.intermediates if p.intermediates is not None else (EC,) * (p.m - 1)
    omega_j = energy_to_angular_frequency(EJ)
    return DerivedDevice(
        EC=EC,
        EJ=EJ,
        Ct=Ct,
        lam=screening_factor(p.C, p.C0, Ct),
        eta_m=interaction_eta(p.C, p.C0, Ct, p.m),
        omega_m=tunneling_amplitude(EJ, intermediates),
        deltaV=coupling_delta_v(p.C, p.C0, p.Ci, Ct),
        Ic=critical_current(EJ),
        Pd=dipole_power(omega_j, p.d),
        Pl=line_power(p.C0, p.C, omega_j, p.rho),
        alpha=cycle_error_alpha(p.C0, p.C, p.rho),
        screening_length=math.sqrt(p.C / p.Cstar),
    )


@dataclass(frozen=True)
class RuleCheck:
    name: str
    ratio: float
    margin: float

    @property
    def passed(self) -> bool:
        # ratios that land on the threshold up to rounding count as passing
        return self.ratio >= self.margin * (1 - 1e-9)


@dataclass(frozen=True)
class DesignReport:
    params: DeviceParams
    derived: DerivedDevice
    rules: tuple[RuleCheck, ...]
    margin: float

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rules)

    @property
    def failing(self) -> tuple[str, ...]:
        return tuple(r.name for r in self.rules if not r.passed)

    def ratio(self, name: str) -> float:
        for r in self.rules:
            if r.name == name:
                return r.ratio
        raise KeyError(name)

    def to_dict(self) -> dict[str, Any]:
        return {
            "params": self.params.to_dict(),
            "derived": self.derived.to_dict(),
            "rules": [{"name": r.name, "ratio": r.ratio, "margin": r.margin, "passed": r.passed} for r in self.rules],
            "margin": self.margin,
            "passed": self.passed,
        }

    def scalars(self) -> dict[str, Any]:
        out: dict[str, Any] = {f"ratio_{r.name}": r.ratio for r in self.rules}
        out.update(self.derived.to_dict())
        out["passed"] = self.passed
        return out

    def table(self) -> str:
        """Aligned plain-text rendering of the rule ratios and derived values."""
        units = {
            "EC": "J",
            "EJ": "J",
            "Ct": "F",
            "lambda": "",
            "eta_m": "J",
            "omega_m": "J",
            "deltaV": "V",
            "Ic": "A",
            "Pd": "W",
            "Pl": "W",
            "alpha": "",
            "screening_length": "islands",
        }
        rows = [("rule", "ratio", "margin", "status")]
        for r in self.rules:
            rows.append((r.name, f"{r.ratio:.4g}", f"{r.margin:g}", "pass" if r.passed else "FAIL"))
        w = [max(len(row[i]) for row in rows) for i in range(4)]
        lines = ["  ".join(cell.ljust(w[i]) for i, cell in enumerate(row)).rstrip() for row in rows]
        lines.append("")
        derived = self.derived.to_dict()
        width = max(len(k) for k in derived)
        for k, v in derived.items():
            lines.append(f"{k.ljust(width)}  {v:.4e} {units[k]}".rstrip())
        lines.append("")
        lines.append(f"design check: {'PASS' if self.passed else 'FAIL'} at margin {self.margin:g}")
        return "\n".join(lines)


RULE_NAMES = ("EJ/T", "EC/EJ", "Delta/EC", "N/screening_length")


def design_check(p: DeviceParams, margin: float = 3.0) -> DesignReport:
    """Check ``T << E_J << E_C << Delta`` and ``N >> sqrt(C/C*)`` at the given margin."""
    if not margin > 0:
        raise InvalidArgument(f"margin must be positive, got {margin!r}")
    derived = derive(p)
    ratios = (
        derived.EJ / p.T if p.T > 0 else math.inf,
        derived.EC / derived.EJ,
        p.Delta / derived.EC,
        p.N / derived.screening_length,
    )
    return DesignReport(p, derived, tuple(RuleCheck(n, r, margin) for n, r in zip(RULE_NAMES, ratios)), margin)


@dataclass(frozen=True)
class DeviceGateParams:
    """Gate-level energies of a device in units of ``e_ref``.

    ``omega`` is the adjacent-island amplitude ``E_J/2`` of the target,
    ``eta`` the screened interaction at separation ``m`` and
    ``coupling_bias = 2 e deltaV`` the shift of the target bias produced by
    the control Cooper pair.
    """

    omega: float
    eta: float
    coupling_bias: float
    e_ref: float
    report: DesignReport = field(compare=False, repr=False)

    def to_cn_params(self, eps: float, u: float, tau: float, ramp: float, **extra) -> CnParams:
        return CnParams(eps=eps, u=u, eta=self.eta, omega=self.omega, tau=tau, ramp=ramp, **extra)

    def to_dict(self) -> dict[str, float]:
        return {"omega": self.omega, "eta": self.eta, "coupling_bias": self.coupling_bias, "e_ref": self.e_ref}


def gate_params_from_device(p: DeviceParams, e_ref: EnergyLike, margin: float = 3.0) -> DeviceGateParams:
    """Natural-unit gate energies for a device that passes :func:`design_check`.

    Raises
    ------
    DesignRuleViolation
        With the report attached, if any design rule fails.
    """
    ref = _reference_joule(e_ref)
    report = design_check(p, margin)
    if not report.passed:
        raise DesignRuleViolation(f"design check failed: {', '.join(report.failing)}", report)
    dv = report.derived
    # deltaV across the target junction moves its induced charge by C deltaV,
    # which shifts bias_detuning by 2e deltaV
    coupling = 2 * E * dv.deltaV
    return DeviceGateParams(
        omega=(dv.EJ / 2) / ref,
        eta=dv.eta_m / ref,
        coupling_bias=coupling / ref,
        e_ref=ref,
        report=report,
    )
