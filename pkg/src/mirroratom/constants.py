"""Physical constants (SI), hard-coded for reproducible derived values.

c, h and e are exact in the 2019 SI; hbar is the CODATA-listed 10-digit
truncation of h/(2*pi); the flux quantum follows from h and e.
"""

import math

SPEED_OF_LIGHT = 2.99792458e8      # m/s, exact
PLANCK_H = 6.62607015e-34          # J*s, exact
HBAR = 1.054571817e-34             # J*s, CODATA truncation of h/(2*pi)
ELEMENTARY_CHARGE = 1.602176634e-19  # C, exact
FLUX_QUANTUM = PLANCK_H / (2.0 * ELEMENTARY_CHARGE)  # Wb

TWO_PI = 2.0 * math.pi
