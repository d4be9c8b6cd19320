"""Per-unit bases and phasor helpers shared by all models.

Conventions used throughout the package:
  - voltages are per-unit phasors (Python complex) on a common voltage base,
  - network quantities live on the system MVA base,
  - machine and converter parameters live on the unit's own MVA base.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

# AC quantities are plain complex numbers in a synchronously rotating frame.
Phasor = complex


@dataclass(frozen=True)
class BaseSystem:
    """Nominal frequency and the system apparent-power base."""

    f_nom: float = 60.0       # Hz
    s_base: float = 1000.0    # MVA

    def __post_init__(self):
        if self.f_nom <= 0:
            raise ValueError(f"f_nom must be positive, got {self.f_nom}")
        if self.s_base <= 0:
            raise ValueError(f"s_base must be positive, got {self.s_base}")

    @property
    def omega_nom(self) -> float:
        """Nominal angular frequency in rad/s."""
        return 2.0 * math.pi * self.f_nom


def to_system_base(p_unit_pu: float, s_unit: float, base: BaseSystem) -> float:
    """Rebase a per-unit quantity from a unit's own MVA base to the system base."""
    if s_unit <= 0:
        raise ValueError(f"unit rating must be positive, got {s_unit} MVA")
    return p_unit_pu * s_unit / base.s_base


def from_system_base(p_sys_pu: float, s_unit: float, base: BaseSystem) -> float:
    """Rebase a per-unit quantity from the system base to a unit's own MVA base."""
    if s_unit <= 0:
        raise ValueError(f"unit rating must be positive, got {s_unit} MVA")
    return p_sys_pu * base.s_base / s_unit


def z_base_ohm(v_base_kv: float, base: BaseSystem) -> float:
    """Base impedance in ohms for a voltage level: V^2 / S."""
    return v_base_kv ** 2 / base.s_base


def polar(magnitude: float, angle_rad: float) -> Phasor:
    """Phasor from magnitude and angle."""
    return magnitude * complex(math.cos(angle_rad), math.sin(angle_rad))
