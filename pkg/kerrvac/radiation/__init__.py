"""
Photon pairs created by refractive index perturbations: the two-photon
amplitude, its integrated observables, emission rates of moving pulses
and the Monte-Carlo oracle
"""
from kerrvac.radiation.utilities import *  # noqa: F401,F403
from kerrvac.radiation.amplitude import *  # noqa: F401,F403
from kerrvac.radiation.montecarlo import *  # noqa: F401,F403
from kerrvac.radiation.observables import *  # noqa: F401,F403
from kerrvac.radiation.moving import *  # noqa: F401,F403
