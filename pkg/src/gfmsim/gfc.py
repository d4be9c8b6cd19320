"""Grid-forming converter under droop control.

The converter appears to the network as a voltage source of magnitude v_mag
and angle theta behind the coupling reactance x_c (filter plus transformer).
Active-power droop steers the internal frequency; reactive-power droop sets
the voltage magnitude; a controllable DC current source with a proportional
regulator feeds the DC-link capacitor.

`theta` is the absolute internal angle (it advances at omega_nom in steady
state); the network solve subtracts omega_nom*t to obtain the phasor angle in
the synchronous frame.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .units import BaseSystem, Phasor


@dataclass(frozen=True)
class DcLinkParams:
    c_dc: float = 0.05      # capacitance time constant, s
    g_dc: float = 0.01      # loss conductance, pu
    k_dc: float = 50.0      # proportional gain, pu current per pu voltage
    v_dc_ref: float = 1.0   # pu
    i_dc_max: float = 1.2   # source current limit, pu

    def __post_init__(self):
        if self.c_dc <= 0:
            raise ValueError("DC capacitance must be positive")
        if self.i_dc_max <= 0:
            raise ValueError("DC current limit must be positive")
        if self.v_dc_ref <= 0:
            raise ValueError("DC voltage reference must be positive")


@dataclass(frozen=True)
class GfcParams:
    """Control constants on the converter's own base (rating-independent)."""

    droop: float = 0.05               # pu frequency per pu power
    omega_f: float = 2.0 * math.pi * 5.0  # power filter cutoff, rad/s
    d_q: float = 0.02                 # voltage per pu reactive power
    x_c: float = 0.15                 # coupling reactance, pu
    dc: DcLinkParams = DcLinkParams()

    def __post_init__(self):
        if self.droop <= 0:
            raise ValueError("droop gain must be positive")
        if self.omega_f <= 0:
            raise ValueError("power filter cutoff must be positive")
        if self.x_c <= 0:
            raise ValueError("coupling reactance must be positive")


@dataclass
class GfcState:
    theta: float   # internal angle, rad (absolute)
    p_f: float     # filtered active power, pu
    q_f: float     # filtered reactive power, pu
    v_dc: float    # DC-link voltage, pu

    def as_array(self) -> np.ndarray:
        return np.array([self.theta, self.p_f, self.q_f, self.v_dc])


@dataclass(frozen=True)
class GfcInputs:
    p: float   # instantaneous active power delivered, pu unit base
    q: float   # instantaneous reactive power delivered, pu unit base


@dataclass(frozen=True)
class GfcSetpoints:
    p_star: float
    q_star: float
    v_star: float


class GfcBlock:
    """Vectorized group of converters. State row: [theta, p_f, q_f, v_dc]."""

    N_STATES = 4

    def __init__(self, params: list[GfcParams], base: BaseSystem):
        if not params:
            raise ValueError("GfcBlock needs at least one converter")
        self.n = len(params)
        self.n_states = self.N_STATES
        self.base = base
        self.params = list(params)

        def arr(f):
            return np.array([f(p) for p in params], dtype=float)

        self.droop = arr(lambda p: p.droop)
        self.omega_f = arr(lambda p: p.omega_f)
        self.d_q = arr(lambda p: p.d_q)
        self.x_c = arr(lambda p: p.x_c)
        self.c_dc = arr(lambda p: p.dc.c_dc)
        self.g_dc = arr(lambda p: p.dc.g_dc)
        self.k_dc = arr(lambda p: p.dc.k_dc)
        self.v_dc_ref = arr(lambda p: p.dc.v_dc_ref)
        self.i_dc_max = arr(lambda p: p.dc.i_dc_max)

        # setpoints, filled by init_equilibrium
        self.p_star = np.zeros(self.n)
        self.q_star = np.zeros(self.n)
        self.v_star = np.zeros(self.n)
        self.i_dc_star = np.zeros(self.n)

    def dc_source_current(self, v_dc: np.ndarray) -> np.ndarray:
        i_cmd = self.i_dc_star + self.k_dc * (self.v_dc_ref - v_dc)
        return np.clip(i_cmd, 0.0, self.i_dc_max)

    def derivatives(self, x: np.ndarray, p, q,
                    out: np.ndarray | None = None) -> np.ndarray:
        p_f = x[:, 1]
        q_f = x[:, 2]
        v_dc = x[:, 3]
        if out is None:
            out = np.empty_like(x)
        out[:, 0] = self.base.omega_nom * (1.0 + self.droop * (self.p_star - p_f))
        out[:, 1] = self.omega_f * (p - p_f)
        out[:, 2] = self.omega_f * (q - q_f)
        i_dc = self.dc_source_current(v_dc)
        out[:, 3] = (i_dc - self.g_dc * v_dc - p / v_dc) / self.c_dc
        return out

    def internal_frequency(self, x: np.ndarray) -> np.ndarray:
        """Commanded internal frequency, pu."""
        return 1.0 + self.droop * (self.p_star - x[:, 1])

    def voltage_magnitude(self, x: np.ndarray) -> np.ndarray:
        return self.v_star + self.d_q * (self.q_star - x[:, 2])

    def source_voltage(self, x: np.ndarray, t: float) -> np.ndarray:
        """Internal voltage phasors in the synchronous frame at time t."""
        return self.voltage_magnitude(x) * np.exp(
            1j * (x[:, 0] - self.base.omega_nom * t))

    def init_equilibrium(self, k: int, p_pu: float, q_pu: float,
                         v_term: Phasor, t: float = 0.0) -> np.ndarray:
        """Steady state of converter k delivering (p, q) pu at v_term; stores
        the droop setpoints so all offsets are zero at t."""
        i = np.conj(complex(p_pu, q_pu) / v_term) if v_term != 0 else 0j
        e = v_term + 1j * self.x_c[k] * i
        self.p_star[k] = p_pu
        self.q_star[k] = q_pu
        self.v_star[k] = abs(e)
        self.i_dc_star[k] = p_pu / self.v_dc_ref[k]
        v_dc = solve_dc_equilibrium(
            p_pu, self.i_dc_star[k], self.k_dc[k], self.g_dc[k],
            self.v_dc_ref[k], self.i_dc_max[k])
        row = np.zeros(self.n_states)
        row[0] = cmath.phase(e) + self.base.omega_nom * t
        row[1] = p_pu
        row[2] = q_pu
        row[3] = v_dc
        return row


def solve_dc_equilibrium(p: float, i_dc_star: float, k_dc: float, g_dc: float,
                         v_dc_ref: float, i_dc_max: float) -> float:
    """DC-link voltage satisfying i_dc(v) = g_dc*v + p/v with the proportional
    source law; closed-form root of (k_dc+g_dc) v^2 - (i*+k_dc*v_ref) v + p = 0."""
    a = k_dc + g_dc
    b = i_dc_star + k_dc * v_dc_ref
    disc = b * b - 4.0 * a * p
    if disc < 0:
        raise ValueError("no DC-link equilibrium for the requested power")
    v_dc = (b + math.sqrt(disc)) / (2.0 * a)
    i_req = i_dc_star + k_dc * (v_dc_ref - v_dc)
    if not (0.0 <= i_req <= i_dc_max):
        raise ValueError(
            f"required DC source current {i_req:.3f} pu outside [0, {i_dc_max}]")
    return v_dc


def _single_block(params: GfcParams, base: BaseSystem) -> GfcBlock:
    return GfcBlock([params], base)


def gfc_derivatives(state: GfcState, inputs: GfcInputs, params: GfcParams,
                    setpoints: GfcSetpoints, base: BaseSystem) -> GfcState:
    """Time derivatives of one converter's state."""
    if state.v_dc <= 0:
        raise ValueError(f"DC-link voltage must stay positive, got {state.v_dc}")
    block = _single_block(params, base)
    block.p_star[0] = setpoints.p_star
    block.q_star[0] = setpoints.q_star
    block.v_star[0] = setpoints.v_star
    block.i_dc_star[0] = setpoints.p_star / params.dc.v_dc_ref
    dx = block.derivatives(state.as_array()[None, :],
                           np.array([inputs.p]), np.array([inputs.q]))[0]
    return GfcState(theta=dx[0], p_f=dx[1], q_f=dx[2], v_dc=dx[3])


def gfc_voltage_magnitude(state: GfcState, params: GfcParams,
                          setpoints: GfcSetpoints) -> float:
    """Commanded internal voltage magnitude (algebraic reactive droop)."""
    return setpoints.v_star + params.d_q * (setpoints.q_star - state.q_f)


def init_gfc_equilibrium(p_pu: float, q_pu: float, v_term: Phasor,
                         params: GfcParams, base: BaseSystem
                         ) -> tuple[GfcState, GfcSetpoints]:
    """Converter state and setpoints with all derivatives zero at the given
    operating point (unit-base pu)."""
    block = _single_block(params, base)
    row = block.init_equilibrium(0, p_pu, q_pu, v_term)
    state = GfcState(theta=row[0], p_f=row[1], q_f=row[2], v_dc=row[3])
    return state, GfcSetpoints(p_star=block.p_star[0], q_star=block.q_star[0],
                               v_star=block.v_star[0])
