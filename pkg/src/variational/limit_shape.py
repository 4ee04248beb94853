"""
Minimizer of I[φ] = ∫ σ(∇φ) dx dy + λ ∫ φ dx dy over height functions with
fixed boundary values.

The domain [0, 1] × [0, m/n] carries a node grid of spacing δ = 1/n. Every
cell is split into two triangles on which φ is linear; each triangle's
gradient is a pair of forward differences, so the constraint ∇φ ∈ [0, 1]²
is the box 0 <= edge difference <= δ on every grid edge. The gradient is
(φ_x, φ_y) = (v, h), and σ is read from a surface tension table.

Nodes are updated by projected coordinate descent: within one of three
colour classes (i − j mod 3) nodes share no triangle, so a whole class is
minimized at once by a vectorized golden-section search on its box.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from ..model.lattice import BoundaryValue
from ..model.params import ModelParams
from ..thermo.antiferro import antiferro_boundary
from ..utils.errors import InfeasibleBoundary, NonConvergence
from .surface_tension import SurfaceTensionTable

logger = logging.getLogger(__name__)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
FEASIBILITY_TOL = 1e-12


class RegionLabel(str, Enum):
    """Per-node classification of a minimizer."""
    BOUNDARY = "boundary"
    SMOOTH = "interior-smooth"
    FROZEN = "frozen"
    FACET = "facet"


@dataclass(frozen=True)
class BoundaryData:
    """Boundary values φ0 given as a function evaluated on the perimeter."""
    func: Callable[[np.ndarray, np.ndarray], np.ndarray]
    height: float = 1.0
    name: str = "custom"

    def on_grid(self, n: int, m: Optional[int] = None) -> np.ndarray:
        """(n+1)×(m+1) array with φ0 on the perimeter and NaN inside."""
        m = grid_rows(n, self.height) if m is None else m
        x, y = grid_coordinates(n, m)
        values = np.full((n + 1, m + 1), np.nan)
        rim = np.zeros((n + 1, m + 1), dtype=bool)
        rim[0, :] = rim[-1, :] = rim[:, 0] = rim[:, -1] = True
        values[rim] = np.asarray(self.func(x[rim], y[rim]), dtype=float)
        return values


def grid_rows(n: int, height: float) -> int:
    m = int(round(n * height))
    if m < 1:
        raise InfeasibleBoundary(f"Domain height {height} is below one grid spacing")
    return m


def grid_coordinates(n: int, m: int) -> Tuple[np.ndarray, np.ndarray]:
    delta = 1.0 / n
    return np.meshgrid(np.arange(n + 1) * delta, np.arange(m + 1) * delta, indexing="ij")


def dwbc_boundary_field() -> BoundaryData:
    """Domain wall boundary values: 0 on the south and west sides, φ = y on the east, φ = x on the north."""
    return BoundaryData(func=lambda x, y: np.minimum(x, y), name="dwbc")


def affine_boundary_field(slope_x: float, slope_y: float, height: float = 1.0) -> BoundaryData:
    """Trace of φ = slope_x·x + slope_y·y."""
    if not (0.0 <= slope_x <= 1.0 and 0.0 <= slope_y <= 1.0):
        raise InfeasibleBoundary(f"Affine slope ({slope_x}, {slope_y}) outside [0, 1]²")
    return BoundaryData(func=lambda x, y: slope_x * x + slope_y * y, height=height,
                        name=f"affine({slope_x},{slope_y})")


def lattice_boundary_field(b: BoundaryValue) -> BoundaryData:
    """Lattice boundary heights divided by N, interpolated linearly along each side."""
    b.validate()
    n, m = b.n, b.m
    south = np.asarray(b.south, dtype=float) / n
    east = np.asarray(b.east, dtype=float) / n
    north = np.asarray(b.north[::-1], dtype=float) / n
    west = np.asarray(b.west[::-1], dtype=float) / n
    xs = np.arange(n + 1) / n
    ys = np.arange(m + 1) / n
    height = m / n

    def func(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.empty_like(x)
        for k, (xv, yv) in enumerate(zip(x, y)):
            if np.isclose(yv, 0.0):
                out[k] = np.interp(xv, xs, south)
            elif np.isclose(xv, 1.0):
                out[k] = np.interp(yv, ys, east)
            elif np.isclose(yv, height):
                out[k] = np.interp(xv, xs, north)
            else:
                out[k] = np.interp(yv, ys, west)
        return out

    return BoundaryData(func=func, height=height, name=f"lattice({n}x{m})")


def _obstacles(phi0: np.ndarray, delta: float) -> Tuple[np.ndarray, np.ndarray]:
    rim = ~np.isnan(phi0)
    bi, bj = np.nonzero(rim)
    bh = phi0[rim]
    n1, m1 = phi0.shape
    ii, jj = np.meshgrid(np.arange(n1), np.arange(m1), indexing="ij")
    di = bi[None, None, :] - ii[..., None]
    dj = bj[None, None, :] - jj[..., None]
    up = (np.maximum(di, 0) + np.maximum(dj, 0)) * delta
    down = (np.maximum(-di, 0) + np.maximum(-dj, 0)) * delta
    lower = (bh[None, None, :] - up).max(axis=2)
    upper = (bh[None, None, :] + down).min(axis=2)
    return lower, upper


def obstacles(boundary: BoundaryData, n: int, m: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Discrete φ_min and φ_max: the lowest and highest grid functions with the
    given trace and edge differences in [0, δ].

    Raises:
        InfeasibleBoundary: If no such function exists
    """
    phi0 = boundary.on_grid(n, m)
    lower, upper = _obstacles(phi0, 1.0 / n)
    rim = ~np.isnan(phi0)
    if np.any(lower > upper + FEASIBILITY_TOL):
        raise InfeasibleBoundary(f"Boundary '{boundary.name}' admits no monotone 1-Lipschitz extension")
    if np.any(np.abs(lower[rim] - phi0[rim]) > FEASIBILITY_TOL) or np.any(np.abs(upper[rim] - phi0[rim]) > FEASIBILITY_TOL):
        raise InfeasibleBoundary(f"Boundary '{boundary.name}' violates the slope bounds along the perimeter")
    return lower, upper


def phi_min(boundary: BoundaryData, n: int, m: Optional[int] = None) -> np.ndarray:
    return obstacles(boundary, n, m)[0]


def phi_max(boundary: BoundaryData, n: int, m: Optional[int] = None) -> np.ndarray:
    return obstacles(boundary, n, m)[1]


# Triangle gradients as forward differences; lower triangles have their right
# angle at (i, j), upper triangles at (i+1, j+1)

def triangle_gradients(phi: np.ndarray, delta: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(ux, uy) of the lower and upper triangles of every cell, each shape (n, m)."""
    lower_x = (phi[1:, :-1] - phi[:-1, :-1]) / delta
    lower_y = (phi[:-1, 1:] - phi[:-1, :-1]) / delta
    upper_x = (phi[1:, 1:] - phi[:-1, 1:]) / delta
    upper_y = (phi[1:, 1:] - phi[1:, :-1]) / delta
    return lower_x, lower_y, upper_x, upper_y


# Triangles touching node (i, j): (cell offset, upper?, ∂(ux, uy)/∂φ·δ)
_STAR = (
    ((0, 0), False, (-1.0, -1.0)),
    ((-1, 0), False, (1.0, 0.0)),
    ((0, -1), False, (0.0, 1.0)),
    ((-1, -1), True, (1.0, 1.0)),
    ((0, -1), True, (-1.0, 0.0)),
    ((-1, 0), True, (0.0, -1.0)),
)


def _star_gradients(phi: np.ndarray, delta: float, ii: np.ndarray, jj: np.ndarray):
    lx, ly, ux, uy = triangle_gradients(phi, delta)
    out = []
    for (di, dj), upper, dg in _STAR:
        ci, cj = ii + di, jj + dj
        gx = (ux if upper else lx)[ci, cj]
        gy = (uy if upper else ly)[ci, cj]
        out.append((gx, gy, dg))
    return out


def _sigma(table: SurfaceTensionTable, ux: np.ndarray, uy: np.ndarray, penalty: float) -> np.ndarray:
    return table.evaluate_many(uy, ux, penalty=penalty)


@dataclass(eq=False)
class LimitShapeField:
    """Discrete minimizer on the node grid, indexed [i, j] with x = iδ, y = jδ."""
    params: ModelParams
    n: int
    m: int
    phi: np.ndarray
    phi0: np.ndarray
    lam: float
    sweeps: int = 0
    max_change: float = 0.0
    value: float = float("nan")
    residual: Optional[np.ndarray] = None
    regions: Optional[np.ndarray] = None
    meta: Dict = field(default_factory=dict)

    @property
    def spacing(self) -> float:
        return 1.0 / self.n

    def coordinates(self) -> Tuple[np.ndarray, np.ndarray]:
        return grid_coordinates(self.n, self.m)

    def gradients(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        return triangle_gradients(self.phi, self.spacing)

    def rows(self) -> List[Tuple[float, float, float, str]]:
        """CSV rows x, y, phi, region."""
        x, y = self.coordinates()
        regions = self.regions if self.regions is not None else np.full(self.phi.shape, RegionLabel.SMOOTH.value)
        return [(float(x[i, j]), float(y[i, j]), float(self.phi[i, j]), str(regions[i, j]))
                for j in range(self.m + 1) for i in range(self.n + 1)]

    def residual_norm(self) -> float:
        """Max |EL residual| over interior-smooth nodes."""
        if self.residual is None or self.regions is None:
            return float("nan")
        mask = (self.regions == RegionLabel.SMOOTH.value) & np.isfinite(self.residual)
        return float(np.max(np.abs(self.residual[mask]))) if mask.any() else 0.0

    def summary(self) -> Dict:
        return {
            "lambda": self.lam, "n": self.n, "m": self.m, "sweeps": self.sweeps,
            "max_change": self.max_change, "functional": self.value,
            "residual_norm": self.residual_norm(), **self.meta,
        }


def functional_value(phi: np.ndarray, table: SurfaceTensionTable, lam: float, penalty: float = 1e3) -> float:
    """Σ_T σ(∇φ)·δ²/2 + λ ∫ φ with the integral exact for piecewise-linear φ."""
    delta = 1.0 / (phi.shape[0] - 1)
    lx, ly, ux, uy = triangle_gradients(phi, delta)
    area = 0.5 * delta * delta
    surface = area * (np.sum(_sigma(table, lx, ly, penalty)) + np.sum(_sigma(table, ux, uy, penalty)))
    lower_mean = (phi[:-1, :-1] + phi[1:, :-1] + phi[:-1, 1:]) / 3.0
    upper_mean = (phi[1:, 1:] + phi[:-1, 1:] + phi[1:, :-1]) / 3.0
    volume = area * (np.sum(lower_mean) + np.sum(upper_mean))
    return float(surface + lam * volume)


def _colour_classes(n: int, m: int) -> List[Tuple[np.ndarray, np.ndarray]]:
    ii, jj = np.meshgrid(np.arange(1, n), np.arange(1, m), indexing="ij")
    ii, jj = ii.ravel(), jj.ravel()
    colour = (ii - jj) % 3
    return [(ii[colour == c], jj[colour == c]) for c in range(3)]


def _update_class(phi: np.ndarray, table: SurfaceTensionTable, lam: float, ii: np.ndarray, jj: np.ndarray,
                  iterations: int, penalty: float) -> float:
    if ii.size == 0:
        return 0.0
    delta = 1.0 / (phi.shape[0] - 1)
    lo = np.maximum.reduce([phi[ii - 1, jj], phi[ii, jj - 1], phi[ii + 1, jj] - delta, phi[ii, jj + 1] - delta])
    hi = np.minimum.reduce([phi[ii - 1, jj] + delta, phi[ii, jj - 1] + delta, phi[ii + 1, jj], phi[ii, jj + 1]])
    hi = np.maximum(hi, lo)
    current = phi[ii, jj].copy()
    star = _star_gradients(phi, delta, ii, jj)

    def energy(x: np.ndarray) -> np.ndarray:
        shift = (x - current) / delta
        total = np.zeros_like(x)
        for gx, gy, (dx, dy) in star:
            total += _sigma(table, gx + dx * shift, gy + dy * shift, penalty)
        return 0.5 * total + lam * x

    a, b = lo.copy(), hi.copy()
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = energy(c), energy(d)
    for _ in range(iterations):
        # Keep [a, d] where f(c) < f(d), else [c, b]
        left = fc < fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        x = np.where(left, b - GOLDEN * (b - a), a + GOLDEN * (b - a))
        fx = energy(x)
        c, d, fc, fd = (np.where(left, x, d), np.where(left, c, x),
                        np.where(left, fx, fd), np.where(left, fc, fx))
    candidates = np.stack([0.5 * (a + b), lo, hi])
    values = np.stack([energy(x) for x in candidates])
    best = np.clip(candidates[np.argmin(values, axis=0), np.arange(ii.size)], lo, hi)
    phi[ii, jj] = best
    return float(np.max(np.abs(best - current)))


def _is_feasible(phi: np.ndarray, phi0: np.ndarray, delta: float) -> bool:
    rim = ~np.isnan(phi0)
    dx = np.diff(phi, axis=0)
    dy = np.diff(phi, axis=1)
    tol = 1e-10
    return (np.allclose(phi[rim], phi0[rim], atol=tol)
            and dx.min() >= -tol and dx.max() <= delta + tol
            and dy.min() >= -tol and dy.max() <= delta + tol)


def _prolong(coarse: np.ndarray) -> np.ndarray:
    nc, mc = coarse.shape
    fine = np.empty((2 * nc - 1, 2 * mc - 1))
    fine[::2, ::2] = coarse
    fine[1::2, ::2] = 0.5 * (coarse[:-1, :] + coarse[1:, :])
    fine[::2, 1::2] = 0.5 * (coarse[:, :-1] + coarse[:, 1:])
    fine[1::2, 1::2] = 0.25 * (coarse[:-1, :-1] + coarse[1:, :-1] + coarse[:-1, 1:] + coarse[1:, 1:])
    return fine


def minimize_functional(p: ModelParams, boundary: BoundaryData, lam: float, n: int,
                        table: SurfaceTensionTable, m: Optional[int] = None,
                        tol: float = 1e-8, max_sweeps: int = 20000, penalty: float = 1e3,
                        start: Optional[np.ndarray] = None, nested: bool = True,
                        region_tol: float = 1e-6) -> LimitShapeField:
    """
    Minimize the discrete functional by projected coordinate descent.

    Args:
        p: weights, used for facet labelling
        boundary: boundary values φ0
        lam: volume coefficient; λ > 0 pushes φ down
        n: cells along x
        table: surface tension table
        m: cells along y, from the boundary height by default
        tol: stop when a sweep moves no node by more than this
        max_sweeps: sweep cap
        penalty: slope of the linear continuation of σ outside [0, 1]²
        start: feasible initial grid function; the obstacle midpoint by default
        nested: start from the prolonged solution on the grid with n/2 cells

    Raises:
        InfeasibleBoundary: If φ0 has no admissible extension or ``start`` is infeasible
        NonConvergence: If the sweep cap is reached
    """
    m = grid_rows(n, boundary.height) if m is None else m
    delta = 1.0 / n
    phi0 = boundary.on_grid(n, m)
    lower, upper = obstacles(boundary, n, m)

    phi = None
    if start is not None:
        phi = np.array(start, dtype=float)
        if phi.shape != phi0.shape or not _is_feasible(phi, phi0, delta):
            raise InfeasibleBoundary("Initial grid function violates the boundary values or slope bounds")
    elif nested and n % 2 == 0 and m % 2 == 0 and min(n, m) >= 8:
        coarse = minimize_functional(p, boundary, lam, n // 2, table, m // 2, tol=tol * 10,
                                     max_sweeps=max_sweeps, penalty=penalty, nested=True, region_tol=region_tol)
        guess = _prolong(coarse.phi)
        guess[~np.isnan(phi0)] = phi0[~np.isnan(phi0)]
        if _is_feasible(guess, phi0, delta):
            phi = guess
        else:
            logger.debug(f"Prolonged start infeasible on n={n}; using the obstacle midpoint")
    if phi is None:
        phi = 0.5 * (lower + upper)

    classes = _colour_classes(n, m)
    span = max(delta, 1e-300)
    iterations = max(10, int(math.ceil(math.log(tol * 1e-2 / span) / math.log(GOLDEN))))
    change = math.inf
    sweep = 0
    while sweep < max_sweeps:
        sweep += 1
        change = max(_update_class(phi, table, lam, ii, jj, iterations, penalty) for ii, jj in classes)
        if sweep % 100 == 0:
            logger.debug(f"n={n} sweep {sweep}: max change {change:.3e}")
        if change < tol:
            break
    else:
        raise NonConvergence(sweep, change)

    field_ = LimitShapeField(params=p, n=n, m=m, phi=phi, phi0=phi0, lam=lam, sweeps=sweep, max_change=change,
                             meta={"boundary": boundary.name, "tol": tol, "penalty": penalty})
    field_.value = functional_value(phi, table, lam, penalty)
    field_.regions = label_regions(field_, table, tol=region_tol)
    field_.residual = el_residual(field_, table)
    logger.info(f"Limit shape n={n} λ={lam}: {sweep} sweeps, functional {field_.value:.10g}")
    return field_


def el_residual(field_: LimitShapeField, table: SurfaceTensionTable) -> np.ndarray:
    """
    div(∇σ∘∇φ) − λ at interior nodes, NaN on the perimeter.

    The divergence is the nodal derivative of the discrete surface energy
    divided by the node area; σ's gradient comes from the table.
    """
    n, m = field_.n, field_.m
    delta = field_.spacing
    out = np.full((n + 1, m + 1), np.nan)
    ii, jj = np.meshgrid(np.arange(1, n), np.arange(1, m), indexing="ij")
    ii, jj = ii.ravel(), jj.ravel()
    if ii.size == 0:
        return out
    total = np.zeros(ii.size)
    for gx, gy, (dx, dy) in _star_gradients(field_.phi, delta, ii, jj):
        gh, gv = table.gradient_many(gy, gx)
        # ∂σ/∂φ_x = σ_v, ∂σ/∂φ_y = σ_h
        total += 0.5 * (gv * dx + gh * dy)
    out[ii, jj] = -total / delta - field_.lam
    return out


def label_regions(field_: LimitShapeField, table: SurfaceTensionTable, tol: float = 1e-6) -> np.ndarray:
    """
    Node labels: perimeter, frozen where a touching triangle has its gradient
    on the edge of [0, 1]², facet where all touching gradients sit within one
    grid spacing of (½, ½) at Δ < −1 with their conjugate fields inside the
    antiferroelectric curve, interior-smooth otherwise.
    """
    n, m = field_.n, field_.m
    delta = field_.spacing
    labels = np.full((n + 1, m + 1), RegionLabel.BOUNDARY.value, dtype=object)
    ii, jj = np.meshgrid(np.arange(1, n), np.arange(1, m), indexing="ij")
    ii, jj = ii.ravel(), jj.ravel()
    if ii.size == 0:
        return labels
    star = _star_gradients(field_.phi, delta, ii, jj)
    on_edge = np.zeros(ii.size, dtype=bool)
    near_half = np.ones(ii.size, dtype=bool)
    for gx, gy, _ in star:
        edge_gap = np.minimum.reduce([gx, 1 - gx, gy, 1 - gy])
        on_edge |= edge_gap < tol
        near_half &= np.hypot(gx - 0.5, gy - 0.5) < delta
    facet = near_half & (field_.params.delta < -1)
    if facet.any():
        curve = antiferro_boundary(field_.params)
        idx = np.flatnonzero(facet)
        for gx, gy, _ in star:
            gh, gv = table.gradient_many(gy[idx], gx[idx])
            # σ's gradient is twice the conjugate fields
            inside = np.array([curve.contains(0.5 * H, 0.5 * V)[0] for H, V in zip(gh, gv)], dtype=bool)
            facet[idx[~inside]] = False
    labels[ii, jj] = np.where(on_edge, RegionLabel.FROZEN.value,
                              np.where(facet, RegionLabel.FACET.value, RegionLabel.SMOOTH.value))
    return labels


def kkt_residual(field_: LimitShapeField, table: SurfaceTensionTable) -> float:
    """Largest projected EL residual: components pushing into an active bound are dropped."""
    r = el_residual(field_, table)
    phi, delta = field_.phi, field_.spacing
    n, m = field_.n, field_.m
    worst = 0.0
    for i in range(1, n):
        for j in range(1, m):
            value = r[i, j]
            if not np.isfinite(value):
                continue
            lo = max(phi[i - 1, j], phi[i, j - 1], phi[i + 1, j] - delta, phi[i, j + 1] - delta)
            hi = min(phi[i - 1, j] + delta, phi[i, j - 1] + delta, phi[i + 1, j], phi[i, j + 1])
            # Energy slope is −r; a node at its lower bound may have −r > 0
            if phi[i, j] <= lo + 1e-12 and value < 0:
                continue
            if phi[i, j] >= hi - 1e-12 and value > 0:
                continue
            worst = max(worst, abs(value))
    return worst
