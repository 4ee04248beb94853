"""
Finite Bethe equations and the transfer-matrix eigenvalue they give.

Roots of the n-particle sector solve

    z_j^N = (−1)^{n−1} e^{2NH} ∏_k (1 − 2Δz_j + z_j z_k) / (1 − 2Δz_k + z_j z_k)

with the branch choice k_j = j/N of the largest eigenvalue. In log form
these are the density equations on n midpoint nodes with α = n/N, so the
contour Newton core solves them too.
"""

import logging
import math
from typing import Tuple

import numpy as np

from ..model.params import ModelParams
from ..utils.errors import NewtonDivergence, NoConvergence
from .density import newton_contour

logger = logging.getLogger(__name__)

MAX_SITES = 64


def branch_functions(p: ModelParams, z) -> Tuple[np.ndarray, np.ndarray]:
    """F1(z) = (abz − b² + c²)/(a(az − b)) and F2(z) = (ab + (c² − a²)z)/(b(b − az))."""
    a, b, c = p.a, p.b, p.c
    z = np.asarray(z, dtype=complex)
    first = (a * b * z - b * b + c * c) / (a * (a * z - b))
    second = (a * b + (c * c - a * a) * z) / (b * (b - a * z))
    return first, second


def bethe_residual(p: ModelParams, n_sites: int, roots: np.ndarray) -> float:
    """Largest relative mismatch of the multiplicative Bethe equations."""
    z = np.asarray(roots, dtype=complex)
    n = len(z)
    if n == 0:
        return 0.0
    d = p.delta
    zk, zj = z[:, None], z[None, :]
    ratio = (1 - 2 * d * zk + zk * zj) / (1 - 2 * d * zj + zk * zj)
    # Compare N ln z with the log of the right-hand side modulo 2πi
    lhs = n_sites * np.log(z)
    rhs = (1j * math.pi * (n - 1) + 2 * n_sites * p.H) + np.sum(np.log(ratio), axis=1)
    gap = lhs - rhs
    gap = gap.real + 1j * (np.mod(gap.imag + math.pi, 2 * math.pi) - math.pi)
    return float(np.max(np.abs(gap)))


def solve_bethe_roots(p: ModelParams, n_sites: int, n_roots: int, tol: float = 1e-10,
                      delta_step: float = 0.1, max_iter: int = 100) -> np.ndarray:
    """
    Bethe roots of the largest eigenvalue in a sector.

    Newton starts from the Δ = 0 roots e^{2H} e^{iπ(2j − n − 1)/N} and follows
    Δ in steps of at most ``delta_step``.

    Args:
        p: model parameters
        n_sites: row length N <= 64
        n_roots: sector n <= N/2
        tol: residual threshold on the Bethe equations

    Returns:
        Roots ordered along the contour, closed under conjugation

    Raises:
        ValueError: If N or n is out of range
        NewtonDivergence: If Newton fails at some continuation step
    """
    if not 1 <= n_sites <= MAX_SITES:
        raise ValueError(f"Row length must be between 1 and {MAX_SITES}, got {n_sites}")
    if not 0 <= n_roots <= n_sites / 2:
        raise ValueError(f"Sector must satisfy 0 <= n <= N/2, got n={n_roots}, N={n_sites}")
    if n_roots == 0:
        return np.zeros(0, dtype=complex)
    alpha = n_roots / n_sites
    s = (np.arange(1, n_roots + 1) - 0.5) / n_roots
    w = np.full(n_roots, 1.0 / n_roots)
    u = 2.0 * p.H + 1j * math.pi * alpha * (2.0 * s - 1.0)

    d = p.delta
    steps = max(1, math.ceil(abs(d) / delta_step))
    for t in np.linspace(0.0, 1.0, steps + 1)[1:]:
        try:
            # Scaled residual: N times the log-form mismatch
            result = newton_contour(t * d, p.H, alpha, s, w, u, tol=max(tol * 1e-2 / n_sites, 5e-14),
                                    max_iter=max_iter)
        except NoConvergence as e:
            raise NewtonDivergence(f"Bethe Newton failed at Δ = {t * d:.6g}: {e}") from e
        u = result.u
    roots = np.exp(u)
    residual = bethe_residual(p, n_sites, roots)
    logger.debug(f"Bethe roots N={n_sites} n={n_roots}: residual {residual:.3e}")
    if residual > tol:
        raise NewtonDivergence(f"Bethe residual {residual:.3e} above {tol:.1e}")
    return roots


def bethe_eigenvalue(p: ModelParams, n_sites: int, roots: np.ndarray) -> float:
    """
    Λ = a^N e^{NH+(N−2n)V} ∏ F1(z_j) + b^N e^{−NH+(N−2n)V} ∏ F2(z_j).

    The imaginary part cancels for conjugation-closed roots.
    """
    z = np.asarray(roots, dtype=complex)
    n = len(z)
    first, second = branch_functions(p, z)
    N, H, V = n_sites, p.H, p.V
    value = (p.a ** N * math.exp(N * H + (N - 2 * n) * V) * np.prod(first)
             + p.b ** N * math.exp(-N * H + (N - 2 * n) * V) * np.prod(second))
    if abs(value.imag) > 1e-8 * abs(value):
        logger.warning(f"Eigenvalue has imaginary part {value.imag:.3e}")
    return float(value.real)
