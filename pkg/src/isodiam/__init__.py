"""Isodiametric deficits, nearly optimal sets and their stability rates."""

from .geomcore import cap_area, constant_C, inverse_cap_area, psi, sphere_area, unit_ball_volume
from .profiles import DeficitReport, RadialProfile, best_symdiff, diameter, isodiametric_deficit, r_in, r_out, report, volume

__all__ = [
    "DeficitReport",
    "RadialProfile",
    "best_symdiff",
    "cap_area",
    "constant_C",
    "diameter",
    "inverse_cap_area",
    "isodiametric_deficit",
    "psi",
    "r_in",
    "r_out",
    "report",
    "sphere_area",
    "unit_ball_volume",
    "volume",
]

__version__ = "0.1.0"
