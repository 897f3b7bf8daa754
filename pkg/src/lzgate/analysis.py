"""Landau-Zener analytics, CNOT verification and phase readout."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Any

import numpy as np
from scipy.optimize import minimize_scalar

from lzgate.dynamics import PAULI_X, PAULI_Y, PAULI_Z, is_unitary, propagate, unitarity_defect
from lzgate.errors import InvalidArgument
from lzgate.schedules import GateSchedule, PulseSegment

CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]],
    dtype=complex,
)

# exp(i pi sigma_x / 4) and exp(i pi sigma_y / 4)
QUARTER_X = (np.eye(2) + 1j * PAULI_X) / math.sqrt(2)
QUARTER_Y = (np.eye(2) + 1j * PAULI_Y) / math.sqrt(2)

LZ_WINDOW_IN_TAU = 8.0


def wrap_phase(phi: float) -> float:
    """Wrap an angle to ``(-pi, pi]``."""
    w = math.remainder(phi, 2 * math.pi)
    return math.pi if w == -math.pi else w


# -- Landau-Zener -------------------------------------------------------------


@dataclass(frozen=True)
class LzParams:
    omega: float
    u: float
    tau: float

    def __post_init__(self):
        for name in ("omega", "u", "tau"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise InvalidArgument(f"LzParams.{name} must be positive, got {v!r}")

    @property
    def exponent(self) -> float:
        return math.pi * self.tau * self.omega**2 / self.u


def lz_probability(p: LzParams) -> float:
    """Closed-form diabatic transition probability ``exp(-pi tau omega**2 / u)``."""
    return math.exp(-p.exponent)


def lz_schedule(p: LzParams, eps_offset: float = 0.0) -> GateSchedule:
    """Target-only schedule ``eps2 = eps_offset + u tanh(t/tau)``, ``omega2 = omega`` on ``[-8 tau, 8 tau]``."""
    t0, t1 = -LZ_WINDOW_IN_TAU * p.tau, LZ_WINDOW_IN_TAU * p.tau
    zero = (PulseSegment.constant(t0, t1, 0.0),)
    return GateSchedule(
        eps1=zero,
        eps2=(PulseSegment.tanh_sweep(t0, t1, eps_offset, p.u, p.tau, 0.0),),
        omega1=zero,
        omega2=(PulseSegment.constant(t0, t1, p.omega),),
        eta=zero,
    )


def _two_level_eigenbasis(bias: float, omega: float) -> np.ndarray:
    _, V = np.linalg.eigh(bias * PAULI_Z + omega * PAULI_X)
    return V


def lz_numeric(p: LzParams, eps_offset: float = 0.0, tol: float = 1e-6) -> float:
    """Numerically propagated transition probability of the tanh sweep.

    The two-level system starts in the lower eigenstate at ``-8 tau``
    (the state adiabatically connected to ``|0>``, which is the lower
    diabatic level there) and the returned value is the population found in
    the upper eigenstate at ``+8 tau``, i.e. the probability of having
    stayed on the initial diabatic level.  Measuring in the endpoint
    eigenbasis rather than the bare ``|0>, |1>`` basis removes an
    ``O(omega/u)`` interference term that is not part of the crossing
    dynamics.
    """
    if not abs(eps_offset) < p.u:
        raise InvalidArgument(f"the sweep does not pass the crossing: |eps_offset| = {abs(eps_offset)} >= u = {p.u}")
    schedule = lz_schedule(p, eps_offset)
    U = propagate(schedule, tol=tol)[:2, :2]  # control |0> block, target subspace
    first = schedule.eval(schedule.t_start)
    last = schedule.eval(schedule.t_end)
    lower_start = _two_level_eigenbasis(first.eps2, p.omega)[:, 0]
    upper_end = _two_level_eigenbasis(last.eps2, p.omega)[:, 1]
    return float(abs(np.vdot(upper_end, U @ lower_start)) ** 2)


# -- gate verification --------------------------------------------------------


def average_gate_fidelity(U: np.ndarray, target: np.ndarray = CNOT) -> float:
    """``(|Tr(V^dagger U)|^2 + d) / (d (d + 1))`` for unitary ``U`` and target ``V``."""
    d = U.shape[0]
    overlap = abs(np.trace(target.conj().T @ U)) ** 2
    return float((overlap + d) / (d * (d + 1)))


def correction_diagonal(gamma: float, alpha: float, beta: float) -> np.ndarray:
    """``e^{i gamma} diag(e^{i(a+b)}, e^{i(a-b)}, e^{i(-a+b)}, e^{i(-a-b)})``."""
    return np.exp(1j * (gamma + np.array([alpha + beta, alpha - beta, -alpha + beta, -alpha - beta])))


def corrected_fidelity(U: np.ndarray, target: np.ndarray = CNOT) -> tuple[float, tuple[float, float, float]]:
    """Best average fidelity of ``U @ D`` over the single-qubit Z family ``D``.

    The correction acts on the input side.  For ``m = diag(V^dagger U)`` the
    trace is ``e^{ia}(m0 w + m1) + e^{-ia}(m2 w + m3)`` up to a global phase
    with ``w = e^{2ib}``; maximising over ``a`` leaves the one-dimensional
    problem ``max_w |m0 w + m1| + |m2 w + m3|``.

    Returns the fidelity and the optimal ``(gamma, alpha, beta)``.
    """
    m = np.diag(target.conj().T @ U)

    def objective(psi):
        w = np.exp(1j * psi)
        return -(np.abs(m[0] * w + m[1]) + np.abs(m[2] * w + m[3]))

    grid = np.linspace(0.0, 2 * np.pi, 720, endpoint=False)
    values = objective(grid)
    k = int(np.argmin(values))
    step = grid[1] - grid[0]
    res = minimize_scalar(objective, bounds=(grid[k] - step, grid[k] + step), method="bounded", options={"xatol": 1e-12})
    psi = float(res.x) if res.fun <= values[k] else float(grid[k])
    beta = psi / 2
    w = np.exp(1j * psi)
    A = m[0] * w + m[1]
    B = m[2] * w + m[3]
    alpha = (np.angle(B) - np.angle(A)) / 2 if abs(A) and abs(B) else 0.0
    gamma = -float(np.angle(np.exp(1j * (alpha - beta)) * A))
    D = correction_diagonal(gamma, alpha, beta)
    fid = average_gate_fidelity(U * D[None, :], target)
    return fid, (gamma, float(alpha), beta)


def entangling_phase_mismatch(U: np.ndarray) -> float:
    """``chi = phi_00 - phi_01 - phi_10->11 + phi_11->10`` wrapped to ``(-pi, pi]``.

    The single combination of the four path phases that no input-side
    single-qubit Z correction can remove.
    """
    phi = np.angle([U[0, 0], U[1, 1], U[3, 2], U[2, 3]])
    return wrap_phase(phi[0] - phi[1] - phi[2] + phi[3])


@dataclass(frozen=True)
class GateReport:
    p_lz_pred: float
    flip_error_10: float
    flip_error_11: float
    leak_error_00: float
    leak_error_01: float
    phases: tuple[float, float, float, float]  # 00->00, 01->01, 10->11, 11->10
    chi: float
    fidelity_raw: float
    fidelity_cal: float

    SCALARS = (
        "p_lz_pred",
        "flip_error_10",
        "flip_error_11",
        "leak_error_00",
        "leak_error_01",
        "phase_00",
        "phase_01",
        "phase_10_11",
        "phase_11_10",
        "chi",
        "fidelity_raw",
        "fidelity_cal",
    )

    def scalars(self) -> dict[str, float]:
        d = asdict(self)
        phases = d.pop("phases")
        out = {k: d[k] for k in ("p_lz_pred", "flip_error_10", "flip_error_11", "leak_error_00", "leak_error_01")}
        out.update(zip(("phase_00", "phase_01", "phase_10_11", "phase_11_10"), phases))
        out.update(chi=d["chi"], fidelity_raw=d["fidelity_raw"], fidelity_cal=d["fidelity_cal"])
        return out

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["phases"] = list(self.phases)
        return d


def analyze_gate(U: np.ndarray, p_lz_pred: float) -> GateReport:
    """Compare a simulated propagator with the ideal CNOT."""
    U = np.asarray(U, dtype=complex)
    if U.shape != (4, 4) or not is_unitary(U):
        defect = unitarity_defect(U) if U.shape == (4, 4) else float("nan")
        raise InvalidArgument(f"analyze_gate needs a 4x4 unitary (max |U^dag U - I| = {defect:.3e})")
    if not 0.0 <= p_lz_pred <= 1.0:
        raise InvalidArgument(f"p_lz_pred must be a probability, got {p_lz_pred!r}")
    elems = np.array([U[0, 0], U[1, 1], U[3, 2], U[2, 3]])
    errors = np.clip(1.0 - np.abs(elems) ** 2, 0.0, 1.0)
    fid_raw = min(1.0, average_gate_fidelity(U))
    fid_cal, _ = corrected_fidelity(U)
    fid_cal = min(1.0, max(fid_cal, fid_raw))
    return GateReport(
        p_lz_pred=float(p_lz_pred),
        flip_error_10=float(errors[2]),
        flip_error_11=float(errors[3]),
        leak_error_00=float(errors[0]),
        leak_error_01=float(errors[1]),
        phases=tuple(float(a) for a in np.angle(elems)),
        chi=entangling_phase_mismatch(U),
        fidelity_raw=fid_raw,
        fidelity_cal=fid_cal,
    )


# -- phase readout ------------------------------------------------------------


def embed_single_qubit(gate: np.ndarray, qubit: int) -> np.ndarray:
    """Lift a 2x2 gate onto qubit 0 (control) or 1 (target)."""
    if qubit == 0:
        return np.kron(gate, np.eye(2))
    if qubit == 1:
        return np.kron(np.eye(2), gate)
    raise InvalidArgument(f"qubit index must be 0 (control) or 1 (target), got {qubit!r}")


def quarter_x_rotation(qubit: int = 1) -> np.ndarray:
    """``exp(i pi sigma_x / 4)`` on ``qubit``, identity on the other."""
    return embed_single_qubit(QUARTER_X, qubit)


def quarter_x_pulse(qubit: int = 1, omega: float = 0.1, t_start: float = 0.0) -> GateSchedule:
    """Constant tunneling pulse realising :func:`quarter_x_rotation`.

    Under ``H = omega sigma_x`` the propagator is ``exp(-i omega t sigma_x)``,
    so the rotation needs a pulse area of ``-pi/4``: the amplitude is
    ``-omega`` for a duration ``pi / (4 omega)``.
    """
    if not omega > 0:
        raise InvalidArgument(f"pulse amplitude must be positive, got {omega!r}")
    t_end = t_start + math.pi / (4 * omega)
    name = {0: "omega1", 1: "omega2"}.get(qubit)
    if name is None:
        raise InvalidArgument(f"qubit index must be 0 or 1, got {qubit!r}")
    coeffs = {name: -omega}
    return GateSchedule.constant(t_start, t_end, **coeffs)


@dataclass(frozen=True)
class PhaseMeasurement:
    p1: float
    p2: float
    phi: float
    q1: float
    q2: float


def phase_readout(p1: float, phi: float) -> PhaseMeasurement:
    """Occupations after the quarter rotation: ``q1,2 = 1/2 -/+ sqrt(p1 p2) sin(phi)``."""
    if not 0.0 <= p1 <= 1.0:
        raise InvalidArgument(f"p1 must lie in [0, 1], got {p1!r}")
    p2 = 1.0 - p1
    shift = math.sqrt(p1 * p2) * math.sin(phi)
    return PhaseMeasurement(p1, p2, phi, 0.5 - shift, 0.5 + shift)


def superposition_state(p1: float, phi: float) -> np.ndarray:
    """Qubit state ``sqrt(p1)|0> + sqrt(1 - p1) e^{i phi}|1>``."""
    if not 0.0 <= p1 <= 1.0:
        raise InvalidArgument(f"p1 must lie in [0, 1], got {p1!r}")
    return np.array([math.sqrt(p1), math.sqrt(1.0 - p1) * np.exp(1j * phi)])


def _qubit_marginals(psi: np.ndarray, qubit: int) -> tuple[float, float]:
    probs = np.abs(psi.reshape(2, 2)) ** 2
    marg = probs.sum(axis=1 - qubit)
    return float(marg[0]), float(marg[1])


def _readout(state, qubit: int, rotation: np.ndarray) -> tuple[float, float]:
    psi = np.asarray(state, dtype=complex)
    if psi.shape == (2,):
        out = rotation @ psi
        probs = np.abs(out) ** 2
        return float(probs[0]), float(probs[1])
    if psi.shape == (4,):
        return _qubit_marginals(embed_single_qubit(rotation, qubit) @ psi, qubit)
    raise InvalidArgument(f"state must have 2 or 4 amplitudes, got shape {psi.shape}")


def simulate_phase_readout(state, qubit: int = 1) -> tuple[float, float]:
    """Apply the quarter x rotation to ``qubit`` of ``state`` and return its occupations.

    ``state`` is a single-qubit pair of amplitudes or a two-qubit state
    vector; for the latter the marginal probabilities of ``qubit`` are
    returned.
    """
    return _readout(state, qubit, QUARTER_X)


def simulate_y_readout(state, qubit: int = 1) -> tuple[float, float]:
    """As :func:`simulate_phase_readout` with ``exp(i pi sigma_y / 4)``.

    Gives ``1/2 + sqrt(p1 p2) cos(phi)`` for the first occupation, which
    fixes the branch that the x readout alone leaves open.
    """
    return _readout(state, qubit, QUARTER_Y)


def recover_phase(p1: float, q1_x: float, q1_y: float | None = None) -> float:
    """Phase difference from readout data.

    With only the x readout the result is ``arcsin`` of the measured shift
    (branch ``[-pi/2, pi/2]``); adding the y readout resolves the full
    ``(-pi, pi]`` angle.
    """
    if not 0.0 <= p1 <= 1.0:
        raise InvalidArgument(f"p1 must lie in [0, 1], got {p1!r}")
    coherence = math.sqrt(p1 * (1.0 - p1))
    if coherence == 0.0:
        raise InvalidArgument("phase is undefined when one occupation is zero")
    sin_phi = (0.5 - q1_x) / coherence
    if q1_y is None:
        return math.asin(max(-1.0, min(1.0, sin_phi)))
    cos_phi = (q1_y - 0.5) / coherence
    return math.atan2(sin_phi, cos_phi)
