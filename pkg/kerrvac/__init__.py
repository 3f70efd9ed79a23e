"""
kerrvac is a python package and CLI tool that computes the photon pairs
created out of the quantum vacuum by space-time dependent refractive index
perturbations in a dielectric.
"""
import logging


__version__ = '0.1.0'

# Library modules log through logging.getLogger('KERRVAC').
# The CLI attaches its handlers to the same name.
logging.getLogger('KERRVAC').addHandler(logging.NullHandler())
