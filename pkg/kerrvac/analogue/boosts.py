"""
Lorentz transformations of the medium, with the medium light speed
c = 1/n0 as invariant speed. A pulse moving slower than c has a rest frame
where it is a stationary perturbation; faster pulses have none.
"""
import math

import numpy as np

from kerrvac.exceptions import KerrvacError, NoValidBoostError, WrongVariantError
from kerrvac.profiles import MOVING, STATIC, BoostedProfile


# Pulses slower than this fraction of c count as at rest
REST_TOLERANCE = 1e-12


def boost_matrix(u, c):
    """
    4x4 matrix mapping events (t, x, y, z) of a frame moving with velocity
    u onto the frame it moves in

    :type u: Tuple[float, float, float]
    :param u: Velocity of the new frame
    :type c: float
    :param c: Invariant speed
    :rtype: numpy.ndarray
    :raises: NoValidBoostError
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (3,) or not np.all(np.isfinite(u)):
        raise KerrvacError('A boost velocity must be a finite 3-vector')
    speed = float(np.linalg.norm(u))
    if speed >= c:
        raise NoValidBoostError(
            'Boost speed {u:.6g} reaches the medium light speed {c:.6g}'.format(
                u=speed, c=c
            ),
            context_dict={'speed': speed, 'c': c},
        )
    out = np.eye(4)
    if speed == 0:
        return out
    gamma = 1.0 / math.sqrt(1.0 - (speed / c) ** 2)
    n = u / speed
    out[0, 0] = gamma
    out[0, 1:] = gamma * u / c ** 2
    out[1:, 0] = gamma * u
    out[1:, 1:] += (gamma - 1.0) * np.outer(n, n)
    return out


def _worldline_velocity(matrix, velocity):
    """
    Velocity in the new frame of a worldline r = v t of the base frame
    """
    inverse = np.linalg.inv(matrix)
    events = np.array([[0.0, 0.0, 0.0, 0.0], [1.0, *velocity]])
    mapped = events @ inverse.T
    step = mapped[1] - mapped[0]
    return tuple(float(v) for v in step[1:] / step[0])


def boost_profile(p, u):
    """
    The profile seen from a frame moving with velocity u relative to its
    own. Boosts compose, and boosting by -u undoes a boost by u.

    :type p: Union[PulseProfile, BoostedProfile]
    :param p: A static or uniformly moving profile, possibly boosted already
    :type u: Tuple[float, float, float]
    :param u: Velocity of the new frame, slower than c = 1/n0
    :rtype: BoostedProfile
    :returns: The profile in the new frame with the pulse velocity there
    :raises: NoValidBoostError, WrongVariantError
    """
    if isinstance(p, BoostedProfile):
        base, previous = p.base, np.asarray(p.matrix)
    else:
        base, previous = p, np.eye(4)
    if base.variant not in (STATIC, MOVING):
        raise WrongVariantError(
            'Only static and uniformly moving profiles can be boosted',
            context_dict={'variant': base.variant},
        )
    matrix = previous @ boost_matrix(u, base.c)
    velocity = _worldline_velocity(matrix, base.velocity)
    speed = math.sqrt(sum(v * v for v in velocity))
    frame = 'rest' if speed <= REST_TOLERANCE * base.c else 'boosted'
    return BoostedProfile(
        base=base,
        matrix=tuple(tuple(float(v) for v in row) for row in matrix),
        velocity=velocity,
        frame=frame,
    )


def rest_frame(p):
    """
    Boost a pulse slower than the medium light speed to its rest frame

    :raises: NoValidBoostError when the pulse is not slower than c
    """
    if p.variant != MOVING:
        raise WrongVariantError('Only uniformly moving pulses have a rest frame')
    return boost_profile(p, p.velocity)


__all__ = ['boost_matrix', 'boost_profile', 'rest_frame']
