"""Physical constants (SI units, CODATA 2018 exact/recommended values)."""

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class PhysicalConstants:
    """Bundle of the physical constants used by the package.

    All values are SI.  ``gamma_e`` is the electron gyromagnetic ratio in
    rad/s/T, fixed to 2*pi*28 GHz/T (the conventional EPR magnitude).
    """

    hbar: float = 1.054571817e-34       # J s
    h: float = 6.62607015e-34           # J s (exact)
    mu0: float = 1.25663706212e-6       # T m / A
    kb: float = 1.380649e-23            # J / K (exact)
    e_charge: float = 1.602176634e-19   # C (exact)
    gamma_e: float = TWO_PI * 28.0e9    # rad / s / T


CONSTANTS = PhysicalConstants()

HBAR = CONSTANTS.hbar
PLANCK = CONSTANTS.h
MU0 = CONSTANTS.mu0
KB = CONSTANTS.kb
E_CHARGE = CONSTANTS.e_charge
GAMMA_E = CONSTANTS.gamma_e
