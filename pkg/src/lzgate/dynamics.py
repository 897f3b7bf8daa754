"""Two-qubit Hamiltonian assembly and time-ordered propagation.

Basis ordering is ``|00>, |01>, |10>, |11>`` with the first index the
control qubit and the second the target.  ``sigma_z |0> = +|0>`` and
``sigma_z |1> = -|1>``.

Propagation uses the midpoint exponential rule (second order Magnus):
``U = prod_k exp(-i H(t_k + h/2) h)``, each factor computed from the
eigendecomposition of the real symmetric Hamiltonian, so every step is
unitary to machine precision whatever the step size.
"""

from __future__ import annotations

import math
from dataclasses import astuple, dataclass
from typing import Iterator, Sequence

import numpy as np

from lzgate.errors import InvalidArgument, NumericalFailure, StiffnessFailure

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]])
PAULI_Y = np.array([[0.0, -1j], [1j, 0.0]])
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]])
IDENTITY2 = np.eye(2)

BASIS_LABELS = ("00", "01", "10", "11")

# operator for each coefficient, in HamiltonianSample field order
COEFFICIENT_NAMES = ("eps1", "eps2", "omega1", "omega2", "eta")
OPERATORS = np.stack(
    [
        np.kron(PAULI_Z, IDENTITY2),
        np.kron(IDENTITY2, PAULI_Z),
        np.kron(PAULI_X, IDENTITY2),
        np.kron(IDENTITY2, PAULI_X),
        np.kron(PAULI_Z, PAULI_Z),
    ]
)

NORM_STEP_LIMIT = 0.1  # max ||H||_2 * h for the initial grid
UNITARITY_ATOL = 1e-9
_CHUNK = 1 << 15
_PROBES_PER_INTERVAL = 257


@dataclass(frozen=True)
class HamiltonianSample:
    """Coefficients of the two-qubit Hamiltonian at one instant (natural units)."""

    eps1: float = 0.0
    eps2: float = 0.0
    omega1: float = 0.0
    omega2: float = 0.0
    eta: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=float)


def assemble_hamiltonian(s: HamiltonianSample) -> np.ndarray:
    """Return the real symmetric 4x4 matrix for one coefficient sample.

    ``H = eps1 Z1 + eps2 Z2 + omega1 X1 + omega2 X2 + eta Z1 Z2``
    """
    coeffs = s.as_array() if isinstance(s, HamiltonianSample) else np.asarray(s, dtype=float)
    if coeffs.shape != (5,):
        raise InvalidArgument(f"expected 5 coefficients, got shape {coeffs.shape}")
    if not np.all(np.isfinite(coeffs)):
        bad = [n for n, v in zip(COEFFICIENT_NAMES, coeffs) if not math.isfinite(v)]
        raise InvalidArgument(f"non-finite Hamiltonian coefficient(s): {', '.join(bad)}")
    return np.tensordot(coeffs, OPERATORS, axes=1)


def assemble_hamiltonians(coeffs: np.ndarray) -> np.ndarray:
    """Vectorised :func:`assemble_hamiltonian` for coefficient rows of shape (n, 5)."""
    coeffs = np.asarray(coeffs, dtype=float)
    if not np.all(np.isfinite(coeffs)):
        raise InvalidArgument("non-finite Hamiltonian coefficients in schedule samples")
    return np.einsum("nk,kij->nij", coeffs, OPERATORS)


def _eigh(H: np.ndarray):
    try:
        return np.linalg.eigh(H)
    except np.linalg.LinAlgError as exc:
        if H.ndim == 2:
            raise NumericalFailure(f"eigensolver failed on\n{H!r}", matrix=H) from exc
        for m in H:
            try:
                np.linalg.eigh(m)
            except np.linalg.LinAlgError:
                raise NumericalFailure(f"eigensolver failed on\n{m!r}", matrix=m) from exc
        raise NumericalFailure("eigensolver failed on a batch of matrices") from exc


def step_unitaries(H: np.ndarray, h) -> np.ndarray:
    """Batched ``exp(-i H_k h_k)`` for Hermitian ``H`` of shape (n, d, d)."""
    w, V = _eigh(H)
    h = np.asarray(h, dtype=float)
    phases = np.exp(-1j * w * h[..., None])
    return (V * phases[..., None, :]) @ np.swapaxes(V.conj(), -1, -2)


def step_unitary(H: np.ndarray, h: float) -> np.ndarray:
    """Return ``exp(-i H h)`` by spectral decomposition of the Hermitian ``H``."""
    if not h > 0:
        raise InvalidArgument(f"time step must be positive, got {h!r}")
    H = np.asarray(H)
    if not np.allclose(H, H.conj().T, atol=1e-12, rtol=0):
        raise InvalidArgument("step_unitary needs a Hermitian matrix")
    return step_unitaries(H[None], np.array([h]))[0]


def _ordered_product(U: np.ndarray) -> np.ndarray:
    """Time-ordered product ``U[n-1] ... U[1] U[0]`` by pairwise reduction."""
    dim = U.shape[-1]
    while len(U) > 1:
        if len(U) % 2:
            U = np.concatenate([U, np.eye(dim, dtype=U.dtype)[None]])
        U = U[1::2] @ U[0::2]
    return U[0]


def unitarity_defect(u: np.ndarray) -> float:
    """``max |U^dagger U - I|`` entrywise."""
    u = np.asarray(u)
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


def is_unitary(u: np.ndarray, atol: float = UNITARITY_ATOL) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return unitarity_defect(u) < atol and abs(abs(np.linalg.det(u)) - 1.0) < atol


def basis_state(label: str) -> np.ndarray:
    """Computational basis state, e.g. ``basis_state("10")``."""
    try:
        k = BASIS_LABELS.index(label)
    except ValueError:
        raise InvalidArgument(f"unknown basis label {label!r}; expected one of {BASIS_LABELS}")
    psi = np.zeros(4, dtype=complex)
    psi[k] = 1.0
    return psi


def as_state(amplitudes: Sequence[complex], atol: float = 1e-9) -> np.ndarray:
    """Validate a normalised two-qubit state vector."""
    psi = np.asarray(amplitudes, dtype=complex)
    if psi.shape != (4,):
        raise InvalidArgument(f"a two-qubit state has 4 amplitudes, got shape {psi.shape}")
    norm = float(np.vdot(psi, psi).real)
    if abs(norm - 1.0) > atol:
        raise InvalidArgument(f"state is not normalised (norm^2 = {norm!r})")
    return psi


# -- step grids ---------------------------------------------------------------


@dataclass(frozen=True)
class Interval:
    """A sub-interval of a propagation with a uniform step count."""

    start: float
    end: float
    n_steps: int

    @property
    def step(self) -> float:
        return (self.end - self.start) / self.n_steps

    def refined(self, factor: int) -> "Interval":
        return Interval(self.start, self.end, self.n_steps * factor)


@dataclass(frozen=True)
class PropagationInfo:
    n_steps: int
    max_step: float
    delta: float  # max entry change against the previous (coarser) run
    refinements: int


def _check_window(schedule, t0, t1):
    t0 = schedule.t_start if t0 is None else float(t0)
    t1 = schedule.t_end if t1 is None else float(t1)
    if not t1 > t0:
        raise InvalidArgument(f"propagation window needs t1 > t0, got [{t0}, {t1}]")
    return t0, t1


def initial_grid(schedule, t0: float | None = None, t1: float | None = None) -> list[Interval]:
    """Step grid honouring ``max ||H||_2 h <= 0.1`` between schedule breakpoints.

    The spectral norm is probed on a dense set of points per interval and
    padded by the largest change between neighbouring probes.
    """
    t0, t1 = _check_window(schedule, t0, t1)
    cuts = [t0] + [b for b in schedule.breakpoints() if t0 < b < t1] + [t1]
    grid = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        if b - a <= 0:
            continue
        probes = np.linspace(a, b, _PROBES_PER_INTERVAL)
        norms = np.max(np.abs(np.linalg.eigvalsh(assemble_hamiltonians(schedule.coefficients(probes)))), axis=1)
        norm_max = float(norms.max() + np.max(np.abs(np.diff(norms))))
        n = max(1, math.ceil((b - a) * norm_max / NORM_STEP_LIMIT))
        grid.append(Interval(a, b, n))
    return grid


def _midpoint_chunks(grid: Sequence[Interval]) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    for iv in grid:
        h = iv.step
        for first in range(0, iv.n_steps, _CHUNK):
            k = np.arange(first, min(iv.n_steps, first + _CHUNK))
            yield iv.start + (k + 0.5) * h, np.full(k.shape, h)


def propagate_grid(schedule, grid: Sequence[Interval]) -> np.ndarray:
    """Midpoint-exponential propagator on an explicit step grid."""
    U = np.eye(4, dtype=complex)
    for t_mid, h in _midpoint_chunks(grid):
        H = assemble_hamiltonians(schedule.coefficients(t_mid))
        U = _ordered_product(step_unitaries(H, h)) @ U
    return U


def propagate(
    schedule,
    t0: float | None = None,
    t1: float | None = None,
    tol: float = 1e-6,
    *,
    max_steps: int = 50_000_000,
    full_output: bool = False,
):
    """Propagator over ``[t0, t1]`` (defaults: the whole schedule).

    Starting from :func:`initial_grid`, all steps are halved until two
    successive runs differ by less than ``tol`` in every matrix entry; the
    finer result is returned.

    Parameters
    ----------
    schedule
        Any object with ``t_start``, ``t_end``, ``breakpoints()`` and
        vectorised ``coefficients(t) -> (n, 5)``; normally a
        :class:`lzgate.schedules.GateSchedule`.
    tol
        Convergence tolerance, in ``(0, 1e-3]``.
    max_steps
        Budget on the step count of a single run.

    Raises
    ------
    StiffnessFailure
        If the step would fall below ``1e-12 (t1 - t0)`` or exceed the budget.
    """
    if not 0 < tol <= 1e-3:
        raise InvalidArgument(f"tol must lie in (0, 1e-3], got {tol!r}")
    t0, t1 = _check_window(schedule, t0, t1)
    grid = initial_grid(schedule, t0, t1)
    previous = propagate_grid(schedule, grid)
    refinements = 0
    while True:
        grid = [iv.refined(2) for iv in grid]
        n_steps = sum(iv.n_steps for iv in grid)
        max_step = max(iv.step for iv in grid)
        if max_step < 1e-12 * (t1 - t0):
            raise StiffnessFailure(f"step underflow (h = {max_step:.3e}) before reaching tol = {tol:g}")
        if n_steps > max_steps:
            raise StiffnessFailure(f"step budget exceeded ({n_steps} > {max_steps}) before reaching tol = {tol:g}")
        current = propagate_grid(schedule, grid)
        refinements += 1
        delta = float(np.max(np.abs(current - previous)))
        if delta < tol:
            break
        previous = current
    if full_output:
        return current, PropagationInfo(n_steps, max_step, delta, refinements)
    return current
