"""Loading of grid case files (topology, unit ratings, dynamic parameters and
scenario defaults) from JSON.

The bundled `data/quebec7.json` describes the studied 7-unit grid; every
modeling assumption that is not hard physics lives in that file so it can be
inspected and edited without touching code.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .gfc import DcLinkParams, GfcParams
from .network import Bus, HvdcInjection, Line, Load, NetworkModel
from .sm import AvrParams, GovernorParams, PssBand, PssConfig, SmParams, TurbineParams
from .transition import GenUnit, original_unit
from .units import BaseSystem


@dataclass
class GridCase:
    name: str
    base: BaseSystem
    network: NetworkModel
    units: list[GenUnit]          # all-SM originals (eta = 0)
    defaults: dict
    pss_base: PssConfig           # band set the retuning profiles derive from


def bundled_case_path() -> Path:
    """Path of the packaged quebec7 case file."""
    return Path(resources.files("gfmsim").joinpath("data/quebec7.json"))


def _parse_pss(d: dict) -> PssConfig:
    bands = tuple(
        PssBand(f_center=b["f_center_hz"], gain=b["gain"],
                q_factor=b.get("q_factor", 0.7), enabled=b.get("enabled", True))
        for b in d["bands"]
    )
    return PssConfig(bands=bands, v_pss_max=d.get("v_pss_max", 0.1))


def _parse_sm_params(d: dict, pss: PssConfig) -> SmParams:
    gov = d.get("governor", {})
    tur = d.get("turbine", {})
    avr = d.get("avr", {})
    return SmParams(
        h=d["h"], d=d.get("d", 0.0), x_d=d["x_d"], x_d_prime=d["x_d_prime"],
        t_d0_prime=d["t_d0_prime"],
        governor=GovernorParams(droop=gov.get("droop", 0.05),
                                t_g=gov.get("t_g", 0.5)),
        turbine=TurbineParams(t_w=tur.get("t_w", 1.0)),
        avr=AvrParams(k_a=avr.get("k_a", 200.0), t_a=avr.get("t_a", 0.02),
                      e_fd_min=avr.get("e_fd_min", 0.0),
                      e_fd_max=avr.get("e_fd_max", 5.0)),
        pss=pss,
    )


def _parse_gfc_params(d: dict) -> GfcParams:
    dc = d.get("dc", {})
    return GfcParams(
        droop=d.get("droop", 0.05),
        omega_f=2.0 * math.pi * d.get("omega_f_hz", 5.0),
        d_q=d.get("d_q", 0.02),
        x_c=d.get("x_c", 0.15),
        dc=DcLinkParams(c_dc=dc.get("c_dc", 0.05), g_dc=dc.get("g_dc", 0.01),
                        k_dc=dc.get("k_dc", 50.0),
                        v_dc_ref=dc.get("v_dc_ref", 1.0),
                        i_dc_max=dc.get("i_dc_max", 1.2)),
    )


def load_case(path: str | Path | None = None) -> GridCase:
    """Parse a case file; defaults to the bundled quebec7 grid."""
    path = bundled_case_path() if path is None else Path(path)
    with open(path) as f:
        raw = json.load(f)

    base = BaseSystem(f_nom=raw["base"]["f_nom_hz"],
                      s_base=raw["base"]["s_base_mva"])
    buses = [Bus(id=b["id"], region=b["region"], v_nom=b["v_nom_kv"])
             for b in raw["buses"]]
    lines = [Line(from_bus=ln["from"], to_bus=ln["to"], length=ln["length_km"],
                  r_per_km=ln["r_per_km"], x_per_km=ln["x_per_km"],
                  b_per_km=ln["b_per_km"], circuits=ln.get("circuits", 1))
             for ln in raw["lines"]]
    loads = [Load(bus=ld["bus"], p_nom=ld["p_mw"], q_nom=ld.get("q_mvar", 0.0))
             for ld in raw.get("loads", [])]
    hvdc = None
    if "hvdc" in raw and raw["hvdc"]:
        hvdc = HvdcInjection(bus=raw["hvdc"]["bus"], p_inject=raw["hvdc"]["p_mw"],
                             active=raw["hvdc"].get("active", True))
    net = NetworkModel(buses=buses, lines=lines, loads=loads, hvdc=hvdc)

    pss_base = _parse_pss(raw["sm_params"]["pss"])
    sm_params = _parse_sm_params(raw["sm_params"], pss_base)
    gfc_params = _parse_gfc_params(raw.get("gfc_params", {}))

    units = [
        original_unit(id=g["id"], bus=g["bus"], rating=g["s_rating_mva"],
                      p0=g["p_dispatch_mw"], v_setpoint=g.get("v_setpoint", 1.0),
                      slack=g.get("slack", False), sm_params=sm_params,
                      gfc_params=gfc_params)
        for g in raw["generators"]
    ]
    if sum(1 for u in units if u.slack) != 1:
        raise ValueError("case file must flag exactly one slack unit")

    return GridCase(name=raw.get("name", path.stem), base=base, network=net,
                    units=units, defaults=raw.get("defaults", {}),
                    pss_base=pss_base)
