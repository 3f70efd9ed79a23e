"""
Refractive index perturbations: pulse profiles, trajectories and
the Kerr conversion
"""
from kerrvac.profiles.pulses import *  # noqa: F401,F403
