"""Reduced-order synchronous machine: one-axis flux-decay model with hydro
turbine, governor, AVR and a multi-band PSS.

Frame conventions (non-salient, x_q = x_d'):
  - the machine is a voltage source e_q' at rotor angle `delta` behind x_d',
  - phasor current I maps to the rotor frame via i_d + j*i_q = j*I*exp(-j*delta),
  - airgap power p_e = e_q' * i_q equals terminal active power (lossless stator).

The hydro turbine (1 - T_w s)/(1 + 0.5 T_w s) is realized with one state q_t:
  (T_w/2) * dq_t/dt = g - q_t,   p_m = 3*q_t - 2*g
which is gain-matched at DC (p_m -> g) and gives the water-hammer initial
power swing of -2 per unit gate step.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace

import numpy as np

from .units import BaseSystem, Phasor


@dataclass(frozen=True)
class PssBand:
    f_center: float          # Hz
    gain: float              # pu output per pu speed deviation at f_center
    q_factor: float = 0.7
    enabled: bool = True

    def __post_init__(self):
        if self.f_center <= 0:
            raise ValueError("band center frequency must be positive")
        if self.q_factor <= 0:
            raise ValueError("band quality factor must be positive")


@dataclass(frozen=True)
class PssConfig:
    bands: tuple[PssBand, ...]
    v_pss_max: float = 0.1   # output clamp, pu

    def __post_init__(self):
        if not self.bands:
            raise ValueError("PSS configuration needs at least one band")
        if self.v_pss_max <= 0:
            raise ValueError("v_pss_max must be positive")

    @property
    def n_bands(self) -> int:
        return len(self.bands)


# Default original tuning: low/intermediate/high bands for global, inter-area
# and local modes. Gains are assumptions, configurable via the case file.
ORIGINAL_PSS = PssConfig(
    bands=(
        PssBand(f_center=0.2, gain=5.0),
        PssBand(f_center=0.9, gain=10.0),
        PssBand(f_center=12.0, gain=2.0),
    ),
    v_pss_max=0.1,
)

PSS_PROFILES = ("original", "high_penetration", "disabled")


def make_pss_profile(kind: str, base_config: PssConfig | None = None) -> PssConfig:
    """PSS tuning profile.

    original          -- the base band set unchanged.
    high_penetration  -- intermediate band moved to 1.2 Hz, high band removed,
                         remaining gains divided by 5.
    disabled          -- all bands off.
    """
    cfg = base_config if base_config is not None else ORIGINAL_PSS
    if kind == "original":
        return cfg
    if kind == "high_penetration":
        if cfg.n_bands < 2:
            raise ValueError("high_penetration profile needs at least two bands")
        bands = [
            replace(cfg.bands[0], gain=cfg.bands[0].gain / 5.0),
            replace(cfg.bands[1], f_center=1.2, gain=cfg.bands[1].gain / 5.0),
        ]
        bands += [replace(b, enabled=False) for b in cfg.bands[2:]]
        return PssConfig(bands=tuple(bands), v_pss_max=cfg.v_pss_max)
    if kind == "disabled":
        return PssConfig(
            bands=tuple(replace(b, enabled=False) for b in cfg.bands),
            v_pss_max=cfg.v_pss_max,
        )
    raise ValueError(f"unknown PSS profile {kind!r}, expected one of {PSS_PROFILES}")


@dataclass(frozen=True)
class GovernorParams:
    droop: float = 0.05   # pu frequency per pu power, unit base
    t_g: float = 0.5      # gate servo time constant, s

    def __post_init__(self):
        if self.droop <= 0:
            raise ValueError("governor droop must be positive")
        if self.t_g <= 0:
            raise ValueError("governor time constant must be positive")


@dataclass(frozen=True)
class TurbineParams:
    t_w: float = 1.0      # water starting time, s

    def __post_init__(self):
        if self.t_w <= 0:
            raise ValueError("water starting time must be positive")


@dataclass(frozen=True)
class AvrParams:
    k_a: float = 200.0
    t_a: float = 0.02
    e_fd_min: float = 0.0
    e_fd_max: float = 5.0

    def __post_init__(self):
        if self.k_a <= 0 or self.t_a <= 0:
            raise ValueError("AVR gain and time constant must be positive")
        if self.e_fd_min >= self.e_fd_max:
            raise ValueError("field voltage limits must be ordered")


@dataclass(frozen=True)
class SmParams:
    """Dynamic constants on the machine's own base; identical for all plants
    regardless of rating (ratings live on the GenUnit)."""

    h: float = 4.0            # inertia constant, s
    d: float = 0.0            # damping, pu
    x_d: float = 1.8          # d-axis synchronous reactance, pu
    x_d_prime: float = 0.3    # d-axis transient reactance, pu
    t_d0_prime: float = 8.0   # open-circuit transient time constant, s
    governor: GovernorParams = GovernorParams()
    turbine: TurbineParams = TurbineParams()
    avr: AvrParams = AvrParams()
    pss: PssConfig = ORIGINAL_PSS

    def __post_init__(self):
        if self.h <= 0:
            raise ValueError("inertia constant must be positive")
        if not (self.x_d > self.x_d_prime > 0):
            raise ValueError("need x_d > x_d' > 0")
        if self.t_d0_prime <= 0:
            raise ValueError("T_d0' must be positive")


@dataclass
class SmState:
    delta: float          # rotor angle relative to the synchronous frame, rad
    d_omega: float        # speed deviation, pu
    e_q_prime: float      # transient EMF, pu
    e_fd: float           # field voltage, pu
    g: float              # gate servo state, pu
    q_t: float            # turbine state, pu
    pss_x1: np.ndarray    # band filter states, shape (n_bands,)
    pss_x2: np.ndarray

    def as_array(self) -> np.ndarray:
        return np.concatenate([
            [self.delta, self.d_omega, self.e_q_prime, self.e_fd, self.g, self.q_t],
            self.pss_x1, self.pss_x2,
        ])


@dataclass(frozen=True)
class SmInputs:
    p_e: float   # electrical (airgap) power, pu unit base
    v_t: float   # terminal voltage magnitude, pu
    i_d: float   # d-axis stator current, pu unit base


@dataclass(frozen=True)
class SmSetpoints:
    v_ref: float   # AVR voltage reference, pu
    g_ref: float   # governor gate reference, pu


def turbine_power(g, q_t):
    """Mechanical power of the hydro turbine realization."""
    return 3.0 * q_t - 2.0 * g


class SmBlock:
    """Vectorized group of machines sharing one state layout.

    State row: [delta, d_omega, e_q', e_fd, g, q_t, x1_0..x1_{B-1}, x2_0..x2_{B-1}]
    """

    def __init__(self, params: list[SmParams], base: BaseSystem):
        if not params:
            raise ValueError("SmBlock needs at least one machine")
        n_bands = {p.pss.n_bands for p in params}
        if len(n_bands) != 1:
            raise ValueError("all machines in a block must share the PSS band count")
        self.n = len(params)
        self.n_bands = n_bands.pop()
        self.n_states = 6 + 2 * self.n_bands
        self.base = base
        self.params = list(params)

        def arr(f):
            return np.array([f(p) for p in params], dtype=float)

        self.h = arr(lambda p: p.h)
        self.d = arr(lambda p: p.d)
        self.x_d = arr(lambda p: p.x_d)
        self.x_dp = arr(lambda p: p.x_d_prime)
        self.t_d0p = arr(lambda p: p.t_d0_prime)
        self.droop = arr(lambda p: p.governor.droop)
        self.t_g = arr(lambda p: p.governor.t_g)
        self.t_w = arr(lambda p: p.turbine.t_w)
        self.k_a = arr(lambda p: p.avr.k_a)
        self.t_a = arr(lambda p: p.avr.t_a)
        self.e_fd_min = arr(lambda p: p.avr.e_fd_min)
        self.e_fd_max = arr(lambda p: p.avr.e_fd_max)
        self.v_pss_max = arr(lambda p: p.pss.v_pss_max)

        self.band_omega0 = np.array(
            [[2.0 * math.pi * b.f_center for b in p.pss.bands] for p in params])
        self.band_alpha = np.array(
            [[2.0 * math.pi * b.f_center / b.q_factor for b in p.pss.bands]
             for p in params])
        self.band_gain = np.array(
            [[b.gain if b.enabled else 0.0 for b in p.pss.bands] for p in params])

        # operating-point references, filled by init_equilibrium
        self.v_ref = np.zeros(self.n)
        self.g_ref = np.zeros(self.n)

    def pss_output(self, x2: np.ndarray) -> np.ndarray:
        u = np.einsum("ij,ij->i", self.band_gain * self.band_alpha, x2)
        return np.clip(u, -self.v_pss_max, self.v_pss_max)

    def derivatives(self, x: np.ndarray, p_e, v_t, i_d,
                    out: np.ndarray | None = None) -> np.ndarray:
        b = self.n_bands
        d_omega = x[:, 1]
        e_q = x[:, 2]
        e_fd = x[:, 3]
        g = x[:, 4]
        q_t = x[:, 5]
        x1 = x[:, 6:6 + b]
        x2 = x[:, 6 + b:]
        if out is None:
            out = np.empty_like(x)
        out[:, 0] = self.base.omega_nom * d_omega
        out[:, 1] = (turbine_power(g, q_t) - p_e - self.d * d_omega) / (2.0 * self.h)
        out[:, 2] = (e_fd - e_q - (self.x_d - self.x_dp) * i_d) / self.t_d0p
        u_pss = self.pss_output(x2)
        d_efd = (self.k_a * (self.v_ref - v_t + u_pss) - e_fd) / self.t_a
        # non-windup limiter on the field voltage
        d_efd = np.where((e_fd >= self.e_fd_max) & (d_efd > 0), 0.0, d_efd)
        d_efd = np.where((e_fd <= self.e_fd_min) & (d_efd < 0), 0.0, d_efd)
        out[:, 3] = d_efd
        out[:, 4] = (self.g_ref - d_omega / self.droop - g) / self.t_g
        out[:, 5] = (g - q_t) * (2.0 / self.t_w)
        out[:, 6:6 + b] = x2
        out[:, 6 + b:] = (-self.band_omega0 ** 2 * x1 - self.band_alpha * x2
                          + d_omega[:, None])
        return out

    def init_equilibrium(self, k: int, p_pu: float, q_pu: float,
                         v_term: Phasor) -> np.ndarray:
        """Steady state of machine k delivering (p, q) pu on its own base at
        terminal voltage v_term; also stores v_ref/g_ref for that machine."""
        i = np.conj(complex(p_pu, q_pu) / v_term) if v_term != 0 else 0j
        e = v_term + 1j * self.x_dp[k] * i
        delta = cmath.phase(e)
        e_q = abs(e)
        i_d = (1j * i * cmath.exp(-1j * delta)).real
        e_fd = e_q + (self.x_d[k] - self.x_dp[k]) * i_d
        if not (self.e_fd_min[k] <= e_fd <= self.e_fd_max[k]):
            raise ValueError(
                f"infeasible operating point: e_fd={e_fd:.3f} outside "
                f"[{self.e_fd_min[k]}, {self.e_fd_max[k]}]")
        self.v_ref[k] = abs(v_term) + e_fd / self.k_a[k]
        self.g_ref[k] = p_pu
        row = np.zeros(self.n_states)
        row[0] = delta
        row[2] = e_q
        row[3] = e_fd
        row[4] = p_pu
        row[5] = p_pu
        return row

    def source_voltage(self, x: np.ndarray) -> np.ndarray:
        """Internal EMF phasors e_q' * exp(j*delta)."""
        return x[:, 2] * np.exp(1j * x[:, 0])

    def machine_frame_inputs(self, x: np.ndarray, v_term: np.ndarray,
                             i_unit: np.ndarray):
        """(p_e, v_t, i_d) per machine from terminal phasors and unit-base
        currents."""
        delta = x[:, 0]
        i_m = 1j * i_unit * np.exp(-1j * delta)
        i_d = i_m.real
        i_q = i_m.imag
        p_e = x[:, 2] * i_q
        return p_e, np.abs(v_term), i_d


def _single_block(params: SmParams, base: BaseSystem) -> SmBlock:
    return SmBlock([params], base)


def sm_derivatives(state: SmState, inputs: SmInputs, params: SmParams,
                   base: BaseSystem, setpoints: SmSetpoints) -> SmState:
    """Time derivatives of one machine's state (returned in an SmState-shaped
    container). Pure function of its arguments."""
    vals = [inputs.p_e, inputs.v_t, inputs.i_d]
    if any(not math.isfinite(v) for v in vals):
        raise ValueError(f"non-finite machine inputs: {inputs}")
    block = _single_block(params, base)
    block.v_ref[0] = setpoints.v_ref
    block.g_ref[0] = setpoints.g_ref
    x = state.as_array()[None, :]
    dx = block.derivatives(x, np.array([inputs.p_e]), np.array([inputs.v_t]),
                           np.array([inputs.i_d]))[0]
    b = params.pss.n_bands
    return SmState(delta=dx[0], d_omega=dx[1], e_q_prime=dx[2], e_fd=dx[3],
                   g=dx[4], q_t=dx[5], pss_x1=dx[6:6 + b], pss_x2=dx[6 + b:])


def pss_output(pss_x2: np.ndarray, config: PssConfig) -> float:
    """Stabilizing signal from the band filter states (clamped sum)."""
    u = 0.0
    for i, band in enumerate(config.bands):
        if band.enabled:
            alpha = 2.0 * math.pi * band.f_center / band.q_factor
            u += band.gain * alpha * pss_x2[i]
    return float(np.clip(u, -config.v_pss_max, config.v_pss_max))


def init_sm_equilibrium(p_pu: float, q_pu: float, v_term: Phasor,
                        params: SmParams, base: BaseSystem
                        ) -> tuple[SmState, SmSetpoints]:
    """Machine state and references with all derivatives zero at the given
    power-flow operating point (unit-base pu)."""
    block = _single_block(params, base)
    row = block.init_equilibrium(0, p_pu, q_pu, v_term)
    b = params.pss.n_bands
    state = SmState(delta=row[0], d_omega=row[1], e_q_prime=row[2], e_fd=row[3],
                    g=row[4], q_t=row[5], pss_x1=row[6:6 + b], pss_x2=row[6 + b:])
    return state, SmSetpoints(v_ref=block.v_ref[0], g_ref=block.g_ref[0])
