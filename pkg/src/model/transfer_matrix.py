"""
Row-to-row transfer matrix on a periodic row of N vertical edges.

Basis states are bit strings of vertical edge occupations (bit k = site k,
1 = thick). The matrix maps the row above a line of vertices to the row
below it, tracing over the horizontal edge that closes the row.
Sector n counts the thin vertical edges and is preserved.
"""

import logging
import math
from functools import lru_cache
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np

from ..utils.errors import PowerIterationStall
from .lattice import _PATTERNS, BoundaryValue, VertexType
from .params import ModelParams, VertexWeights

logger = logging.getLogger(__name__)

MAX_SITES = 14


@lru_cache(maxsize=None)
def _site_moves(n_sites: int) -> Tuple[Tuple[Tuple[VertexType, int, int, np.ndarray, np.ndarray], ...], ...]:
    # For every site and legal vertex: (type, west, east, source states, target states)
    states = np.arange(2 ** n_sites)
    moves = []
    for k in range(n_sites):
        bit = (states >> k) & 1
        site = []
        for (west, south, east, north), label in _PATTERNS.items():
            src = states[bit == north]
            tgt = src ^ ((north ^ south) << k)
            site.append((label, west, east, src, tgt))
        moves.append(tuple(site))
    return tuple(moves)


def _weight_map(p: ModelParams) -> Dict[VertexType, float]:
    w = p.weights()
    return dict(zip(VertexType.ordered(), w.as_tuple()))


def apply_transfer(p: ModelParams, n_sites: int, x: np.ndarray) -> np.ndarray:
    """
    Matrix-free product T·x.

    Args:
        p: model parameters
        n_sites: row length N
        x: vector of length 2^N

    Returns:
        T·x
    """
    weights = _weight_map(p)
    size = 2 ** n_sites
    # v[state, current horizontal edge, initial horizontal edge]
    v = np.zeros((size, 2, 2))
    v[:, 0, 0] = x
    v[:, 1, 1] = x
    for site in _site_moves(n_sites):
        out = np.zeros_like(v)
        for label, west, east, src, tgt in site:
            out[tgt, east, :] += weights[label] * v[src, west, :]
        v = out
    return v[:, 0, 0] + v[:, 1, 1]


def dense_transfer_matrix(p: ModelParams, n_sites: int) -> np.ndarray:
    """Full 2^N × 2^N matrix assembled column by column."""
    size = 2 ** n_sites
    return np.column_stack([apply_transfer(p, n_sites, col) for col in np.eye(size)])


def sector_states(n_sites: int, n_thin: int) -> np.ndarray:
    """Basis states with exactly ``n_thin`` thin vertical edges."""
    states = np.arange(2 ** n_sites)
    thick = np.array([bin(s).count("1") for s in states])
    return states[thick == n_sites - n_thin]


def transfer_matrix_lambda(p: ModelParams, n_sites: int, n_thin: int, tol: float = 1e-13,
                           max_iter: int = 20000, return_vector: bool = False):
    """
    Largest eigenvalue of the transfer matrix in a sector by power iteration.

    The restriction to a sector is nonnegative with a positive diagonal, so its
    Perron root is simple and dominant.

    Args:
        p: model parameters
        n_sites: row length N <= 14
        n_thin: number of thin vertical edges
        tol: convergence threshold on the eigen-residual
        max_iter: iteration cap

    Returns:
        Λ, or (Λ, eigenvector restricted to the sector) when ``return_vector``

    Raises:
        ValueError: If the row is too long or the sector is empty
        PowerIterationStall: If the iteration does not settle
    """
    if not 1 <= n_sites <= MAX_SITES:
        raise ValueError(f"Row length must be between 1 and {MAX_SITES}, got {n_sites}")
    if not 0 <= n_thin <= n_sites:
        raise ValueError(f"Sector {n_thin} does not exist for N = {n_sites}")
    support = sector_states(n_sites, n_thin)
    x = np.zeros(2 ** n_sites)
    x[support] = 1.0 / math.sqrt(len(support))
    lam = 0.0
    residual = float("inf")
    for iteration in range(1, max_iter + 1):
        y = apply_transfer(p, n_sites, x)
        lam = float(np.linalg.norm(y))
        y /= lam
        residual = float(np.linalg.norm(y - x))
        x = y
        if residual < tol:
            logger.debug(f"Power iteration N={n_sites} n={n_thin}: Λ={lam:.15g} after {iteration} steps")
            break
    else:
        raise PowerIterationStall(max_iter, residual)
    if return_vector:
        return lam, x[support]
    return lam


def largest_eigenvalue(p: ModelParams, n_sites: int, **kwargs) -> Tuple[float, int]:
    """
    Largest eigenvalue over all sectors.

    Returns:
        (Λ_max, sector attaining it)
    """
    best = max((transfer_matrix_lambda(p, n_sites, n, **kwargs), n) for n in range(n_sites + 1))
    return best


def finite_size_free_energy(p: ModelParams, n_sites: int, **kwargs) -> float:
    """−ln Λ_max / N."""
    lam, _ = largest_eigenvalue(p, n_sites, **kwargs)
    return -math.log(lam) / n_sites


def transfer_matrix_free_energy(p: ModelParams, sizes: Sequence[int] = (6, 8, 10, 12),
                                degree: int = 2, **kwargs) -> Tuple[float, List[float]]:
    """
    Thermodynamic free energy extrapolated in 1/N.

    Args:
        p: model parameters
        sizes: row lengths
        degree: degree of the polynomial in 1/N

    Returns:
        (extrapolated f, finite-size values)
    """
    values = [finite_size_free_energy(p, n, **kwargs) for n in sizes]
    inv = 1.0 / np.asarray(sizes, dtype=float)
    coeffs = np.polyfit(inv, values, deg=min(degree, len(sizes) - 1))
    f_inf = float(coeffs[-1])
    logger.info(f"Transfer-matrix free energy {f_inf:.10g} from sizes {list(sizes)}")
    return f_inf, values


def fixed_boundary_partition_function(weights: Union[ModelParams, VertexWeights], b: BoundaryValue):
    """
    Partition function at q = 1 for fixed outer heights, row by row.

    Rows of vertical edges are propagated from the south side to the north
    side; the west and east horizontal edges of each row are fixed by the
    boundary. Exact when the weights are ``Fraction`` instances.

    Args:
        weights: model parameters or explicit six weights
        b: boundary value

    Returns:
        Z, the sum of weights over all completions of ``b``
    """
    b.validate()
    w = weights.weights() if isinstance(weights, ModelParams) else weights
    by_type = dict(zip(VertexType.ordered(), w.as_tuple()))
    south = np.diff(b.south)
    north = np.diff(b.north[::-1])
    west = np.diff(b.west[::-1])
    east = np.diff(b.east)
    row = {sum(int(e) << k for k, e in enumerate(south)): 1}
    for j in range(b.m):
        following: Dict[int, object] = {}
        for state, value in row.items():
            # (horizontal edge entering the next site, north bits so far) -> weight
            partial = {(int(west[j]), 0): value}
            for i in range(b.n):
                s = (state >> i) & 1
                step: Dict[Tuple[int, int], object] = {}
                for (carry, bits), val in partial.items():
                    for (pw, ps, pe, pn), label in _PATTERNS.items():
                        if pw == carry and ps == s:
                            key = (pe, bits | (pn << i))
                            step[key] = step.get(key, 0) + val * by_type[label]
                partial = step
            for (carry, bits), val in partial.items():
                if carry == east[j]:
                    following[bits] = following.get(bits, 0) + val
        row = following
    target = sum(int(e) << k for k, e in enumerate(north))
    z = row.get(target, 0)
    logger.debug(f"Row transfer over a {b.n}x{b.m} boundary: Z = {z}")
    return z
