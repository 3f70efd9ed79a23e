"""
CLI tool package
"""
from .utilities import *  # noqa: F401,F403
