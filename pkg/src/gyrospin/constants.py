"""Physical constants in SI units (CODATA 2018) and NV defaults.

All frequencies inside the library are angular (rad/s). Cyclic inputs are
converted exactly once at the configuration boundary.
"""

import math

HBAR = 1.054571817e-34      # J s
KB = 1.380649e-23           # J / K
C_LIGHT = 299792458.0       # m / s
EPSILON0 = 8.8541878128e-12  # F / m
AMU = 1.66053906660e-27     # kg

# NV electronic spin defaults: free-electron gyromagnetic ratio and the
# ground-state zero-field splitting.
GAMMA0_DEFAULT = 2 * math.pi * 28.024e9   # rad s^-1 T^-1
DNV_DEFAULT = 2 * math.pi * 2.87e9        # rad s^-1

DIAMOND_DENSITY = 3500.0    # kg / m^3, bulk diamond
