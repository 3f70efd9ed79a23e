"""
Analogue gravity estimates: medium Lorentz boosts, horizons of
trans-luminal pulses and the Unruh effect of accelerated ones
"""
from kerrvac.analogue.constants import *  # noqa: F401,F403
from kerrvac.analogue.boosts import *  # noqa: F401,F403
from kerrvac.analogue.horizons import *  # noqa: F401,F403
from kerrvac.analogue.unruh import *  # noqa: F401,F403
