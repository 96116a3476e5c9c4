"""Physical constants and unit conversions.

Internal units: hbar = 1, time in ns, angular frequency in rad/ns.
"""

from __future__ import annotations

import math

from scipy import constants as _c

HBAR = _c.hbar  # J s
K_B = _c.k  # J/K
E_CHARGE = _c.e  # C

# conversion factors into rad/ns or ns, keyed by the annotation used in config files
FREQUENCY_UNITS = {
    "rad_per_ns": 1.0,
    "Grad_per_s": 1.0,
    "Mrad_per_s": 1e-3,
    "krad_per_s": 1e-6,
    "rad_per_s": 1e-9,
    "GHz_times_2pi": 2 * math.pi,
    "MHz_times_2pi": 2 * math.pi * 1e-3,
    "kHz_times_2pi": 2 * math.pi * 1e-6,
}
TIME_UNITS = {"ns": 1.0, "us": 1e3, "ms": 1e6, "s": 1e9}
TEMPERATURE_UNITS = {"K": 1.0, "mK": 1e-3}


def thermal_occupation(omega: float, temperature: float) -> float:
    """Bose-Einstein occupation of a mode at ``omega`` [rad/ns] and ``temperature`` [K]."""
    if temperature <= 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    if omega <= 0:
        raise ValueError(f"omega must be positive, got {omega}")
    x = HBAR * omega * 1e9 / (K_B * temperature)
    return 1.0 / math.expm1(x) if x < 700 else 0.0
