"""Magic measures of a single qubit: robustness of magic, T/H fidelities and thresholds."""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

from .ssdmaps import QubitDensityMatrix

SQRT3 = math.sqrt(3.0)
#: T-type distillation threshold on the unclamped robustness.
R_STAR = 3.0 / math.sqrt(7.0)
#: Matching fidelity threshold to the nearest T state.
F_STAR = 0.5 * (1.0 + math.sqrt(3.0 / 7.0))
#: Robustness above which H-type distillation is guaranteed.
R_H_STAR = 1.5
#: Fidelity threshold to the nearest H state.
F_H_STAR = 0.5 * (1.0 + 1.0 / math.sqrt(2.0))


@dataclass(frozen=True)
class BlochVector:
    ax: float
    ay: float
    az: float

    def l1(self) -> float:
        return abs(self.ax) + abs(self.ay) + abs(self.az)

    def max_pair(self) -> float:
        x, y, z = abs(self.ax), abs(self.ay), abs(self.az)
        return max(x + y, y + z, x + z)

    def as_tuple(self):
        return (self.ax, self.ay, self.az)


@dataclass(frozen=True)
class MagicReport:
    rom: float
    rom_raw: float
    fidelity_T: float
    fidelity_H: float
    t_distillable: bool
    h_distillable: bool
    h_rom_sufficient: bool

    def to_json(self) -> dict:
        return asdict(self)


def bloch(q: QubitDensityMatrix) -> BlochVector:
    """Pauli expectation values ``(2 Re rho01, -2 Im rho01, rho00 - rho11)``."""
    return BlochVector(2.0 * q.rho01.real, -2.0 * q.rho01.imag, q.rho00 - q.rho11)


def rom_single(q: QubitDensityMatrix):
    """Robustness of magic of a qubit.

    Returns
    -------
    rom : float
        ``max(1, rom_raw)``; stabilizer states have robustness 1.
    rom_raw : float
        ``2|Re rho01| + 2|Im rho01| + |rho00 - rho11|``, the l1 norm of the Bloch vector.
    """
    raw = 2.0 * abs(q.rho01.real) + 2.0 * abs(q.rho01.imag) + abs(q.rho00 - q.rho11)
    return max(1.0, raw), raw


def fidelity_T_max(q: QubitDensityMatrix) -> float:
    """Largest fidelity to any of the eight T-type states, ``1/2 + |a|_1 / (2 sqrt 3)``."""
    return 0.5 + rom_single(q)[1] / (2.0 * SQRT3)


def fidelity_H_max(q: QubitDensityMatrix) -> float:
    """Largest fidelity to any of the twelve H-type states."""
    return 0.5 * (1.0 + bloch(q).max_pair() / math.sqrt(2.0))


def classify(q: QubitDensityMatrix) -> MagicReport:
    """Full magic summary. Threshold tests are strict and use the unclamped robustness."""
    rom, raw = rom_single(q)
    b = bloch(q)
    return MagicReport(
        rom=rom,
        rom_raw=raw,
        fidelity_T=0.5 + raw / (2.0 * SQRT3),
        fidelity_H=0.5 * (1.0 + b.max_pair() / math.sqrt(2.0)),
        t_distillable=raw > R_STAR,
        h_distillable=b.max_pair() > 1.0,
        h_rom_sufficient=raw > R_H_STAR,
    )


def from_bloch(ax: float, ay: float, az: float) -> QubitDensityMatrix:
    """Qubit state with the given Bloch vector (inverse of :func:`bloch`)."""
    return QubitDensityMatrix(0.5 * (1 + az), 0.5 * (1 - az), complex(0.5 * ax, -0.5 * ay))
