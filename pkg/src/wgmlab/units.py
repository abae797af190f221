"""Unit conventions and conversions.

Internal canonical units are SI: lengths in meters, all rates and
detunings as angular frequencies in rad/s.  Everything crossing a file or
CLI boundary uses MHz of ordinary frequency and the length units embedded
in the key names (nm, um).  The single conversion factor between the two
rate conventions is 2*pi*1e6.
"""

import math

SPEED_OF_LIGHT = 299_792_458.0  # m/s

_RAD_S_PER_MHZ = 2.0 * math.pi * 1.0e6


def mhz_to_rad_s(value_mhz: float) -> float:
    """Ordinary frequency in MHz -> angular rate in rad/s."""
    return value_mhz * _RAD_S_PER_MHZ


def rad_s_to_mhz(value_rad_s: float) -> float:
    """Angular rate in rad/s -> ordinary frequency in MHz."""
    return value_rad_s / _RAD_S_PER_MHZ
