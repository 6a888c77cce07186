"""
constants.py

Physical constants in the unit system used throughout the package.

Lengths are in micrometres, times in picoseconds and frequencies in THz, so the
speed of light is expressed in um/ps. Prefactors that only set the overall scale
of the correlation signals (hbar, mu0) are kept in SI.
"""

import scipy.constants as sc

# um / ps
C_UM_PER_PS = sc.c * 1e6 / 1e12

HBAR = sc.hbar
H_PLANCK = sc.h
MU0 = sc.mu_0
K_B = sc.k

THZ = 1e12

# Gaussian pulse envelope peak (2/pi)^(3/2)
ENVELOPE_PEAK = (2.0 / sc.pi) ** 1.5

# Autocorrelation deconvolution factors
AC_FACTORS = {
    'sech2': 1.543,
    'gauss': 2.0 ** 0.5,
}
