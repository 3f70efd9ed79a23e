"""
Parameter sweeps, power-law fits and the predicted exponent table
"""
from kerrvac.scaling.sweeps import *  # noqa: F401,F403
