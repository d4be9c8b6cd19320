"""Gradual replacement of synchronous machines by collocated grid-forming
converters: rating split as a function of the penetration ratio.

At penetration eta each original machine of rating S0 becomes a collocated
pair with S_gfc = eta*S0 and S_sm = (1-eta)*S0; dispatch splits in the same
proportion, and the per-unit dynamic constants (H, turbine and control time
constants) are unchanged because they do not depend on plant size.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .gfc import GfcParams
from .sm import SmParams


@dataclass(frozen=True)
class GenUnit:
    """A generation node: originally one SM, generally an SM-GFC pair."""

    id: int
    bus: int
    s_sm0: float              # original machine rating, MVA
    s_sm: float               # current machine rating, MVA
    s_gfc: float              # current converter rating, MVA
    p0: float                 # total dispatch of the pair, MW
    v_setpoint: float = 1.0
    slack: bool = False
    sm_params: SmParams = SmParams()
    gfc_params: GfcParams = GfcParams()

    def __post_init__(self):
        if self.s_sm0 <= 0:
            raise ValueError(f"unit {self.id}: original rating must be positive")
        if self.s_sm < 0 or self.s_gfc < 0:
            raise ValueError(f"unit {self.id}: ratings must be non-negative")
        if abs(self.s_sm + self.s_gfc - self.s_sm0) > 1e-9 * self.s_sm0:
            raise ValueError(
                f"unit {self.id}: SM and GFC ratings must sum to the original")

    @property
    def p_sm(self) -> float:
        """Machine share of the dispatch, MW (proportional to rating)."""
        return self.p0 * self.s_sm / self.s_sm0

    @property
    def p_gfc(self) -> float:
        return self.p0 * self.s_gfc / self.s_sm0

    @property
    def has_sm(self) -> bool:
        return self.s_sm > 0.0

    @property
    def has_gfc(self) -> bool:
        return self.s_gfc > 0.0


def original_unit(id: int, bus: int, rating: float, p0: float,
                  v_setpoint: float = 1.0, slack: bool = False,
                  sm_params: SmParams = SmParams(),
                  gfc_params: GfcParams = GfcParams()) -> GenUnit:
    """All-SM unit (eta = 0 configuration)."""
    return GenUnit(id=id, bus=bus, s_sm0=rating, s_sm=rating, s_gfc=0.0,
                   p0=p0, v_setpoint=v_setpoint, slack=slack,
                   sm_params=sm_params, gfc_params=gfc_params)


def compute_eta(units: list[GenUnit]) -> float:
    """Ratio of converter-based generation rating to total rating."""
    if not units:
        raise ValueError("need at least one unit")
    total = sum(u.s_sm + u.s_gfc for u in units)
    if total <= 0:
        raise ValueError("total rating must be positive")
    return sum(u.s_gfc for u in units) / total


def apply_transition(units0: list[GenUnit], eta: float) -> list[GenUnit]:
    """Rescale every unit's SM/GFC split to penetration ratio eta.

    Must be applied to the original (all-SM rating) units so the split is
    always relative to s_sm0.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    scaled = []
    for u in units0:
        s_gfc = eta * u.s_sm0
        # complement from the original rating so the pair sums exactly
        scaled.append(replace(u, s_gfc=s_gfc, s_sm=u.s_sm0 - s_gfc))
    return scaled
