"""
Complete elliptic integrals and Jacobi elliptic functions through the
arithmetic-geometric mean.

The AGM converges quadratically at any modulus, and K(1 − p) is taken from p
itself, so the antiferroelectric modulus equation stays cheap and exact down
to p ~ 1e-200. scipy.special computes the same functions and is their
cross-check.
"""

import logging
import math
from typing import Tuple

import numpy as np

logger = logging.getLogger(__name__)

_MAX_STEPS = 64


def agm(a: float, b: float, tol: float = 1e-16) -> float:
    """Arithmetic-geometric mean of two non-negative numbers."""
    for _ in range(_MAX_STEPS):
        if abs(a - b) <= tol * a:
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return a


def ellipk(m: float) -> float:
    """Complete elliptic integral of the first kind K(m), parameter convention."""
    if not 0.0 <= m < 1.0:
        raise ValueError(f"Parameter must lie in [0, 1), got {m}")
    return math.pi / (2.0 * agm(1.0, math.sqrt(1.0 - m)))


def ellipk_complement(p: float) -> float:
    """K(1 − p), evaluated from p directly so that small p keeps full precision."""
    if not 0.0 < p <= 1.0:
        raise ValueError(f"Complementary parameter must lie in (0, 1], got {p}")
    return math.pi / (2.0 * agm(1.0, math.sqrt(p)))


def ellipj(u, m: float, tol: float = 1e-16) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Jacobi sn, cn, dn by descending Landen transformation.

    Args:
        u: argument, scalar or array
        m: parameter in [0, 1)
        tol: stopping threshold on c_n

    Returns:
        (sn, cn, dn) with the shape of ``u``
    """
    if not 0.0 <= m < 1.0:
        raise ValueError(f"Parameter must lie in [0, 1), got {m}")
    u = np.asarray(u, dtype=float)
    a = [1.0]
    c = [math.sqrt(m)]
    b = math.sqrt(1.0 - m)
    while abs(c[-1]) > tol and len(a) < _MAX_STEPS:
        a_next = 0.5 * (a[-1] + b)
        # c_{n+1} = (a_n − b_n)/2 written without cancellation
        c.append(c[-1] ** 2 / (4.0 * a_next))
        b = math.sqrt(a[-1] * b)
        a.append(a_next)
    n = len(a) - 1
    phi = (2.0 ** n) * a[n] * u
    for k in range(n, 0, -1):
        phi = 0.5 * (phi + np.arcsin(c[k] / a[k] * np.sin(phi)))
    sn = np.sin(phi)
    cn = np.cos(phi)
    dn = np.sqrt(1.0 - m * sn ** 2)
    return sn, cn, dn
