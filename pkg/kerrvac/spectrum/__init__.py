"""
Fourier spectra δñ(ω, k) of refractive index perturbations, in closed
form and on grids, plus their file formats
"""
from kerrvac.spectrum.transforms import *  # noqa: F401,F403
from kerrvac.spectrum.utilities import *  # noqa: F401,F403
