"""Grid topology, admittance matrices, power-flow initialization and the
per-step linear network solve.

The network is a positive-sequence phasor model: pi-section lines, constant
impedance loads (folded into the bus admittance matrix), a constant-current
HVDC injection and generating units that appear as voltage sources behind
coupling reactances.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .units import BaseSystem, Phasor, z_base_ohm

REGIONS = ("North", "Northwest", "South")


class NetworkError(Exception):
    pass


class DisconnectedNetworkError(NetworkError):
    pass


class SingularNetworkError(NetworkError):
    pass


class PowerFlowError(NetworkError):
    pass


class VoltageCollapseError(PowerFlowError):
    pass


@dataclass(frozen=True)
class Bus:
    id: int
    region: str
    v_nom: float  # kV

    def __post_init__(self):
        if self.region not in REGIONS:
            raise ValueError(f"unknown region {self.region!r} on bus {self.id}")
        if self.v_nom <= 0:
            raise ValueError(f"bus {self.id}: v_nom must be positive")


@dataclass(frozen=True)
class Line:
    from_bus: int
    to_bus: int
    length: float       # km
    r_per_km: float     # ohm/km
    x_per_km: float     # ohm/km
    b_per_km: float     # S/km (total shunt susceptance per km)
    circuits: int = 1   # identical parallel circuits

    def __post_init__(self):
        if self.length <= 0:
            raise ValueError("line length must be positive")
        if self.x_per_km <= 0:
            raise ValueError("line x_per_km must be positive")
        if self.from_bus == self.to_bus:
            raise ValueError("line endpoints must differ")
        if self.circuits < 1:
            raise ValueError("line needs at least one circuit")


@dataclass(frozen=True)
class Load:
    bus: int
    p_nom: float  # MW consumed at the fold voltage
    q_nom: float  # MVAr consumed at the fold voltage

    def __post_init__(self):
        if self.p_nom < 0:
            raise ValueError("load p_nom must be non-negative")


@dataclass(frozen=True)
class HvdcInjection:
    bus: int
    p_inject: float  # MW delivered into the grid
    active: bool = True

    def __post_init__(self):
        if self.p_inject < 0:
            raise ValueError("HVDC p_inject must be non-negative")


@dataclass
class NetworkModel:
    buses: list[Bus]
    lines: list[Line]
    loads: list[Load] = field(default_factory=list)
    hvdc: HvdcInjection | None = None

    def __post_init__(self):
        ids = [b.id for b in self.buses]
        if len(set(ids)) != len(ids):
            raise ValueError("bus ids must be unique")
        self._index = {bus_id: i for i, bus_id in enumerate(ids)}
        for ln in self.lines:
            for end in (ln.from_bus, ln.to_bus):
                if end not in self._index:
                    raise ValueError(f"line references unknown bus {end}")
        for ld in self.loads:
            if ld.bus not in self._index:
                raise ValueError(f"load references unknown bus {ld.bus}")
        if self.hvdc is not None and self.hvdc.bus not in self._index:
            raise ValueError(f"HVDC references unknown bus {self.hvdc.bus}")

    @property
    def n_bus(self) -> int:
        return len(self.buses)

    def bus_index(self, bus_id: int) -> int:
        return self._index[bus_id]

    def bus_v_nom(self, bus_id: int) -> float:
        return self.buses[self._index[bus_id]].v_nom


def fold_load(load: Load, v_set: Phasor, base: BaseSystem) -> complex:
    """Shunt admittance (system pu) consuming (p_nom, q_nom) at voltage v_set."""
    vmag2 = abs(v_set) ** 2
    if vmag2 == 0:
        raise ValueError("cannot fold a load at zero voltage")
    s_pu = complex(load.p_nom, load.q_nom) / base.s_base
    return s_pu.conjugate() / vmag2


def line_admittances(line: Line, v_nom_kv: float, base: BaseSystem) -> tuple[complex, complex]:
    """Series admittance and total shunt admittance (system pu) of a pi line,
    all parallel circuits lumped."""
    z_base = z_base_ohm(v_nom_kv, base)
    z_series = complex(line.r_per_km, line.x_per_km) * line.length / z_base
    if z_series == 0:
        raise NetworkError("zero-impedance line")
    y_series = line.circuits / z_series
    # b_per_km is in siemens; per-unit shunt = B_SI * Z_base
    y_shunt = 1j * line.b_per_km * line.length * z_base * line.circuits
    return y_series, y_shunt


def build_ybus(
    net: NetworkModel,
    base: BaseSystem,
    include_loads: bool = True,
    load_voltages: np.ndarray | None = None,
) -> np.ndarray:
    """Bus admittance matrix in system pu.

    Constant-impedance loads are folded onto the diagonal, each at the voltage
    in `load_voltages` (per-bus phasor array; defaults to 1.0 pu).
    """
    n = net.n_bus
    y = np.zeros((n, n), dtype=complex)
    for ln in net.lines:
        v_from = net.bus_v_nom(ln.from_bus)
        v_to = net.bus_v_nom(ln.to_bus)
        if v_from != v_to:
            raise NetworkError(
                f"line {ln.from_bus}-{ln.to_bus} joins different voltage levels"
            )
        y_series, y_shunt = line_admittances(ln, v_from, base)
        i, j = net.bus_index(ln.from_bus), net.bus_index(ln.to_bus)
        y[i, i] += y_series + y_shunt / 2
        y[j, j] += y_series + y_shunt / 2
        y[i, j] -= y_series
        y[j, i] -= y_series
    if include_loads:
        for ld in net.loads:
            k = net.bus_index(ld.bus)
            v_set = 1.0 + 0j if load_voltages is None else load_voltages[k]
            y[k, k] += fold_load(ld, v_set, base)
    _check_connected(net)
    return y


def _check_connected(net: NetworkModel) -> None:
    n = net.n_bus
    if n == 0:
        raise NetworkError("empty network")
    adjacency = [[] for _ in range(n)]
    for ln in net.lines:
        i, j = net.bus_index(ln.from_bus), net.bus_index(ln.to_bus)
        adjacency[i].append(j)
        adjacency[j].append(i)
    seen = {0}
    stack = [0]
    while stack:
        for j in adjacency[stack.pop()]:
            if j not in seen:
                seen.add(j)
                stack.append(j)
    if len(seen) != n:
        missing = [net.buses[i].id for i in range(n) if i not in seen]
        raise DisconnectedNetworkError(f"buses not connected to bus 0: {missing}")


# ---------------------------------------------------------------------------
# Power flow
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GenDispatch:
    """Power-flow boundary condition of one generating unit (SM-GFC pair)."""

    bus: int
    p_mw: float
    v_setpoint: float
    slack: bool = False


@dataclass
class PowerFlowSolution:
    v: np.ndarray           # per-bus voltage phasors, pu
    gen_p: np.ndarray       # per-dispatch-entry injected P, system pu
    gen_q: np.ndarray       # per-dispatch-entry injected Q, system pu
    residual_norm: float
    iterations: int

    def gen_s(self, k: int) -> complex:
        return complex(self.gen_p[k], self.gen_q[k])


def solve_power_flow(
    net: NetworkModel,
    dispatch: list[GenDispatch],
    base: BaseSystem,
    tol: float = 1e-8,
    max_iter: int = 50,
) -> PowerFlowSolution:
    """Newton-Raphson power flow from a flat start.

    Loads enter as constant-PQ withdrawals at their nominal values; the dynamic
    model later folds them to constant impedance at the solved voltages, which
    keeps the t=0 operating point identical. Generator buses are PV, the unit
    flagged `slack` sets the angle reference and absorbs the mismatch.
    """
    slack_entries = [d for d in dispatch if d.slack]
    if len(slack_entries) != 1:
        raise PowerFlowError(f"exactly one slack unit required, got {len(slack_entries)}")
    n = net.n_bus
    y = build_ybus(net, base, include_loads=False)

    s_spec = np.zeros(n, dtype=complex)
    for ld in net.loads:
        s_spec[net.bus_index(ld.bus)] -= complex(ld.p_nom, ld.q_nom) / base.s_base
    if net.hvdc is not None and net.hvdc.active:
        s_spec[net.bus_index(net.hvdc.bus)] += net.hvdc.p_inject / base.s_base

    v_set = np.ones(n)
    is_gen = np.zeros(n, dtype=bool)
    slack_idx = -1
    for d in dispatch:
        k = net.bus_index(d.bus)
        if is_gen[k]:
            raise PowerFlowError(f"two dispatch entries on bus {d.bus}")
        is_gen[k] = True
        v_set[k] = d.v_setpoint
        if d.slack:
            slack_idx = k
        else:
            s_spec[k] += d.p_mw / base.s_base

    pv = np.array([net.bus_index(d.bus) for d in dispatch if not d.slack], dtype=int)
    pq = np.array([k for k in range(n) if not is_gen[k]], dtype=int)
    pvpq = np.concatenate([pv, pq]).astype(int)

    v = v_set.astype(complex)  # flat start: setpoint magnitudes, zero angles

    def mismatch(v):
        s_calc = v * np.conj(y @ v)
        d = s_spec - s_calc
        return np.concatenate([d[pvpq].real, d[pq].imag])

    converged = False
    for it in range(1, max_iter + 1):
        f = mismatch(v)
        norm = np.max(np.abs(f)) if f.size else 0.0
        if norm < tol:
            converged = True
            break
        i_bus = y @ v
        dv_norm = v / np.abs(v)
        ds_dva = 1j * np.diag(v) @ np.conj(np.diag(i_bus) - y @ np.diag(v))
        ds_dvm = np.diag(dv_norm * np.conj(i_bus)) \
            + np.diag(v) @ np.conj(y @ np.diag(dv_norm))
        j11 = ds_dva[np.ix_(pvpq, pvpq)].real
        j12 = ds_dvm[np.ix_(pvpq, pq)].real
        j21 = ds_dva[np.ix_(pq, pvpq)].imag
        j22 = ds_dvm[np.ix_(pq, pq)].imag
        jac = np.block([[j11, j12], [j21, j22]])
        try:
            dx = np.linalg.solve(jac, f)
        except np.linalg.LinAlgError as exc:
            raise PowerFlowError(f"singular Jacobian at iteration {it}") from exc
        n_a = len(pvpq)
        ang = np.angle(v)
        mag = np.abs(v)
        ang[pvpq] += dx[:n_a]
        mag[pq] += dx[n_a:]
        if np.any(mag <= 0) or np.any(~np.isfinite(mag)):
            raise PowerFlowError("power flow diverged (non-physical voltage)")
        v = mag * np.exp(1j * ang)

    if not converged:
        raise PowerFlowError(f"no convergence after {max_iter} iterations (norm {norm:.3e})")
    vmag = np.abs(v)
    if np.any(vmag < 0.8):
        k = int(np.argmin(vmag))
        raise VoltageCollapseError(f"bus {net.buses[k].id} at {vmag[k]:.3f} pu")
    if np.any(vmag > 1.2):
        k = int(np.argmax(vmag))
        raise PowerFlowError(f"overvoltage: bus {net.buses[k].id} at {vmag[k]:.3f} pu")

    # Generator injections from the solved state: bus injection plus local
    # withdrawals that are not the generator (loads, HVDC).
    s_inj = v * np.conj(y @ v)
    gen_p = np.zeros(len(dispatch))
    gen_q = np.zeros(len(dispatch))
    for i, d in enumerate(dispatch):
        k = net.bus_index(d.bus)
        s_gen = s_inj[k]
        for ld in net.loads:
            if net.bus_index(ld.bus) == k:
                s_gen += complex(ld.p_nom, ld.q_nom) / base.s_base
        if net.hvdc is not None and net.hvdc.active and net.bus_index(net.hvdc.bus) == k:
            s_gen -= net.hvdc.p_inject / base.s_base
        gen_p[i] = s_gen.real
        gen_q[i] = s_gen.imag
    return PowerFlowSolution(v=v, gen_p=gen_p, gen_q=gen_q,
                             residual_norm=float(norm), iterations=it)


# ---------------------------------------------------------------------------
# Per-step linear solve: sources behind coupling admittances
# ---------------------------------------------------------------------------

class AugmentedNetwork:
    """Bus admittance matrix with source coupling admittances folded in,
    LU-factorized once and reused for every derivative evaluation."""

    def __init__(self, ybus: np.ndarray, source_bus_idx: np.ndarray,
                 source_admittance: np.ndarray):
        self.n_bus = ybus.shape[0]
        self.source_bus_idx = np.asarray(source_bus_idx, dtype=int)
        self.source_admittance = np.asarray(source_admittance, dtype=complex)
        y_aug = ybus.astype(complex).copy()
        np.add.at(y_aug, (self.source_bus_idx, self.source_bus_idx),
                  self.source_admittance)
        self.y_aug = y_aug
        # scatter matrix: bus injection vector from per-source currents
        scatter = np.zeros((self.n_bus, len(self.source_bus_idx)))
        scatter[self.source_bus_idx, np.arange(len(self.source_bus_idx))] = 1.0
        self._scatter = scatter
        try:
            self._lu = lu_factor(y_aug, check_finite=False)
        except Exception as exc:  # LinAlgError for exactly singular input
            raise SingularNetworkError(str(exc)) from exc
        diag_u = np.abs(np.diag(self._lu[0]))
        if not np.all(np.isfinite(diag_u)) or np.any(diag_u < 1e-12):
            raise SingularNetworkError("augmented admittance matrix is singular")

    def solve(self, e_src: np.ndarray, i_extra: np.ndarray | None = None):
        """Bus voltages and per-source terminal currents for the given internal
        source voltages (plus optional extra bus current injections)."""
        i_inj = self._scatter @ (self.source_admittance * e_src)
        if i_extra is not None:
            i_inj = i_inj + i_extra
        v = lu_solve(self._lu, i_inj, check_finite=False)
        i_src = self.source_admittance * (e_src - v[self.source_bus_idx])
        return v, i_src

    def injection_vector(self, e_src: np.ndarray, i_extra: np.ndarray | None = None):
        i_inj = self._scatter @ (self.source_admittance * e_src)
        if i_extra is not None:
            i_inj = i_inj + i_extra
        return i_inj


def network_solve(aug: AugmentedNetwork, e_src: np.ndarray,
                  i_extra: np.ndarray | None = None):
    """Functional form of the per-step algebraic solve."""
    return aug.solve(e_src, i_extra)


def line_losses(net: NetworkModel, base: BaseSystem, v: np.ndarray) -> float:
    """Total series active-power loss (system pu) at bus voltages v."""
    total = 0.0
    for ln in net.lines:
        y_series, _ = line_admittances(ln, net.bus_v_nom(ln.from_bus), base)
        i, j = net.bus_index(ln.from_bus), net.bus_index(ln.to_bus)
        i_line = (v[i] - v[j]) * y_series
        total += (abs(i_line) ** 2 / y_series.conjugate()).real
    return total
