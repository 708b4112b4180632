"""Physical constants and species defaults (SI units)."""

import math

from scipy import constants as _c

HBAR = _c.hbar
ELEMENTARY_CHARGE = _c.e
EPSILON_0 = _c.epsilon_0
ATOMIC_MASS = _c.atomic_mass

# q^2 / (4 pi eps0) for a singly charged ion, J*m
COULOMB_CONSTANT = ELEMENTARY_CHARGE**2 / (4.0 * math.pi * EPSILON_0)

YB171_MASS_U = 170.936323
YB171_MASS = YB171_MASS_U * ATOMIC_MASS

RAMAN_WAVELENGTH = 355e-9
# counter-propagating 355 nm beams at 90 degrees: |dk| = sqrt(2) * 2 pi / lambda
DEFAULT_COUPLING_WAVENUMBER = math.sqrt(2.0) * 2.0 * math.pi / RAMAN_WAVELENGTH

DEFAULT_NBAR = 0.1
