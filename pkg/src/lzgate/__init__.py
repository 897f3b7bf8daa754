"""Simulation and design analysis of an adiabatic level-crossing CNOT gate.

The gate couples two charge qubits (Cooper pairs in Josephson junction
arrays) through a switchable ``sigma_z sigma_z`` interaction and sweeps the
bias of the target qubit so that it passes through an avoided crossing only
when the control qubit is in state ``1``.

Subpackages/modules
-------------------
units        physical constants and natural-unit conversions
dynamics     Hamiltonian assembly and time-ordered propagation
schedules    pulse segments and the three-step CNOT schedule
analysis     Landau-Zener analytics, gate reports, phase readout
calibration  phase calibration of a CNOT schedule
device       junction-array parameters mapped to gate parameters
cli          ``lzgate`` command-line harness
"""

from lzgate.errors import (
    ConfigError,
    DesignRuleViolation,
    InvalidArgument,
    LzGateError,
    NumericalFailure,
    OutOfRange,
    RegimeViolation,
    StiffnessFailure,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DesignRuleViolation",
    "InvalidArgument",
    "LzGateError",
    "NumericalFailure",
    "OutOfRange",
    "RegimeViolation",
    "StiffnessFailure",
    "__version__",
]
