"""
SI constants used to express analogue temperatures in Kelvin.
Since the 2019 SI revision these are exact, so the CODATA values shipped
with scipy.constants are pinned by definition.
"""
from scipy import constants as sc


CODATA = 'CODATA 2018'
HBAR = sc.hbar
K_B = sc.Boltzmann
C0 = sc.speed_of_light

CONSTANTS = {
    'codata': CODATA,
    'hbar': HBAR,
    'k_B': K_B,
    'c0': C0,
}


__all__ = ['C0', 'CODATA', 'CONSTANTS', 'HBAR', 'K_B']
