"""Elevation-dependent propagation geometry shared by the optical and RF bands."""
from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class GeometryParams:
    """Static link geometry. All lengths in km."""

    earth_radius_km: float = 6371.0
    sat_altitude_km: float = 500.0
    atm_height_km: float = 10.0   # effective optical atmosphere, 8-10 km
    rain_height_km: float = 3.0

    def __post_init__(self) -> None:
        for name in ("earth_radius_km", "sat_altitude_km"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        # zero heights mean "layer disabled"
        for name in ("atm_height_km", "rain_height_km"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.atm_height_km >= self.sat_altitude_km:
            raise ValueError("atm_height_km must be below sat_altitude_km")


@dataclass(frozen=True)
class LinkGeometry:
    """Distances seen by the link at one elevation angle."""

    elevation_rad: float
    slant_range_km: float
    atm_path_km: float
    rain_path_km: float


def _check_elevation(theta_rad: float) -> None:
    if not 0.0 < theta_rad <= math.pi / 2:
        raise ValueError(f"elevation must be in (0, pi/2] rad, got {theta_rad!r}")


def slant_range(theta_rad: float, geo: GeometryParams) -> float:
    """Satellite-to-ground line-of-sight distance in km.

    sqrt((R_E + h_sat)^2 - (R_E cos(theta))^2) - R_E sin(theta)
    """
    _check_elevation(theta_rad)
    re = geo.earth_radius_km
    rs = re + geo.sat_altitude_km
    return math.sqrt(rs * rs - (re * math.cos(theta_rad)) ** 2) - re * math.sin(theta_rad)


def _effective_path(theta_rad: float, height_km: float, earth_radius_km: float) -> float:
    if height_km == 0.0:
        return 0.0
    s = math.sin(theta_rad)
    return height_km / (s + math.sqrt(s * s + 2.0 * height_km / earth_radius_km))


def atmospheric_path(theta_rad: float, geo: GeometryParams) -> float:
    """Effective atmospheric path length in km.

    h_atm / (sin(theta) + sqrt(sin^2(theta) + 2 h_atm / R_E)), implemented as
    written; note this yields ~h_atm/2 at zenith rather than h_atm.
    """
    _check_elevation(theta_rad)
    return _effective_path(theta_rad, geo.atm_height_km, geo.earth_radius_km)


def rain_path(theta_rad: float, geo: GeometryParams) -> float:
    """Effective rain-layer path in km; same functional form as atmospheric_path."""
    _check_elevation(theta_rad)
    return _effective_path(theta_rad, geo.rain_height_km, geo.earth_radius_km)


def link_geometry(theta_rad: float, geo: GeometryParams) -> LinkGeometry:
    """Bundle all elevation-dependent distances for one pass geometry."""
    return LinkGeometry(
        elevation_rad=theta_rad,
        slant_range_km=slant_range(theta_rad, geo),
        atm_path_km=atmospheric_path(theta_rad, geo),
        rain_path_km=rain_path(theta_rad, geo),
    )
