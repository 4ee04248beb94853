"""
Surface tension σ(h, v), the Legendre transform of the free energy.

σ(h, v) = sup_{H,V} [(2h − 1)H + (2v − 1)V + f(H, V)].

The V-dependence of every branch is linear with slope 2α − 1, so the sup
over V pins α = 1 − v and leaves a one-dimensional problem in H:

    σ(h, v) = max_H [(2h − 1)H + F(1 − v, H)],

where F(α, H) is the branch minimum at V = 0. The maximizer solves
h = ½ − ½ ∂_H F and gives ∇σ = (2H*, 2V*) with V* = −½ ∂_α F.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.interpolate import RectBivariateSpline
from scipy.optimize import brentq, minimize

from ..model.params import ModelParams
from ..thermo.asymptotics import interface_g, interface_v
from ..thermo.free_energy import BetheFreeEnergy, default_evaluator
from ..utils.errors import ExpansionInvalid, NotOnInterface, RootBracketFailure, SupDiverges

logger = logging.getLogger(__name__)

H_MAX = 12.0


@dataclass(frozen=True)
class SigmaValue:
    """σ with its gradient and the conjugate fields attaining the sup.

    On the boundary of the unit square the closed form is used; the normal
    derivative is infinite there and the gradient and fields are NaN.
    """
    value: float
    gradient: Tuple[float, float]
    fields: Tuple[float, float]
    closed_form: bool = False


def sigma_boundary_line(p: ModelParams, h: float, v: float) -> Optional[float]:
    """Closed-form σ on the edges of [0, 1]², None in the interior."""
    ln_ratio, ln_b = math.log(p.b / p.a), math.log(p.b)
    if h == 1.0:
        return v * ln_ratio - ln_b
    if v == 1.0:
        return h * ln_ratio - ln_b
    if h == 0.0:
        return (1.0 - v) * ln_ratio - ln_b
    if v == 0.0:
        return (1.0 - h) * ln_ratio - ln_b
    return None


def _boundary_ratio(h: float, v: float) -> float:
    sine = math.sin(math.pi * (1.0 - v))
    if sine <= 0:
        return math.inf
    return (1.0 - h) / sine


def sigma_boundary_expansion(p: ModelParams, h: float, v: float, max_ratio: float = 0.1) -> float:
    """
    Two-term expansion of σ near the edge h = 1.

    σ ≈ (1−h) ln((πab/c²)(1−h)/sin π(1−v)) − (1−h) + v ln(b/a) − ln b

    Raises:
        ExpansionInvalid: If (1−h)/sin π(1−v) exceeds ``max_ratio``
    """
    ratio = _boundary_ratio(h, v)
    if not 0 <= ratio <= max_ratio:
        raise ExpansionInvalid(f"(1−h)/sin π(1−v) = {ratio:.3g} exceeds {max_ratio}")
    base = v * math.log(p.b / p.a) - math.log(p.b)
    if h == 1.0:
        return base
    gap = 1.0 - h
    return gap * math.log(math.pi * p.a * p.b / p.c ** 2 * ratio) - gap + base


def conjugate_fields_near_boundary(p: ModelParams, h: float, v: float, max_ratio: float = 0.1) -> Tuple[float, float]:
    """
    Leading-order fields conjugate to (h, v) near h = 1.

    H ≈ −½ ln((πab/c²)(1−h)/sin π(1−v)), V ≈ ½ ln(b/a) + (π/2)(1−h) cot π(1−v)
    """
    ratio = _boundary_ratio(h, v)
    if not 0 < ratio <= max_ratio:
        raise ExpansionInvalid(f"(1−h)/sin π(1−v) = {ratio:.3g} outside (0, {max_ratio}]")
    H = -0.5 * math.log(math.pi * p.a * p.b / p.c ** 2 * ratio)
    V = 0.5 * math.log(p.b / p.a) + 0.5 * math.pi * (1.0 - h) / math.tan(math.pi * (1.0 - v))
    return H, V


def corner_slope_map(p: ModelParams, H0: float, V0: float, tol: float = 1e-9) -> float:
    """
    Direction (1−h)/(1−v) in which slopes conjugate to (H0, V0) approach the corner (1, 1).

    Raises:
        NotOnInterface: If (H0, V0) is not on the A1 interface
    """
    g = interface_g(p, H0, V0)
    if abs(g) > tol:
        raise NotOnInterface(f"g(H0, V0) = {g:.3e} exceeds {tol:.1e}")
    ratio = p.b / p.a
    return (1.0 - ratio * math.exp(-2 * V0)) / (1.0 - ratio * math.exp(-2 * H0))


@dataclass(frozen=True)
class CornerAsymptotic:
    """Corner value of σ with the interface point used and the number of candidate roots."""
    value: float
    H0: float
    V0: float
    roots: int

    @property
    def ambiguous(self) -> bool:
        return self.roots > 1


def sigma_corner_asymptotic(p: ModelParams, h: float, v: float, samples: int = 400) -> CornerAsymptotic:
    """
    σ ≈ −ln a − 2(1−h)H0 − 2(1−v)V0 near (1, 1).

    (H0, V0) is the A1 interface point whose corner slope equals (1−h)/(1−v),
    found by scanning the interface and refining each sign change.

    Raises:
        RootBracketFailure: If no interface point has the requested slope
    """
    if not (h < 1 and v < 1):
        raise ExpansionInvalid("Corner asymptotic needs h < 1 and v < 1")
    target = (1.0 - h) / (1.0 - v)
    ratio = p.b / p.a

    def mismatch(u_log: float) -> float:
        H0 = 0.5 * math.log(math.exp(u_log) + ratio)
        return math.log(corner_slope_map(p, H0, interface_v(p, H0), tol=1e-6)) - math.log(target)

    grid = np.linspace(-18.0, 18.0, samples)
    values = [mismatch(float(x)) for x in grid]
    brackets = [(grid[i], grid[i + 1]) for i in range(len(grid) - 1) if values[i] * values[i + 1] <= 0]
    if not brackets:
        raise RootBracketFailure(f"No A1 interface point with corner slope {target:.6g}")
    if len(brackets) > 1:
        logger.warning(f"{len(brackets)} interface points share corner slope {target:.6g}; using the first")
    u_log = brentq(mismatch, *brackets[0], xtol=1e-14)
    H0 = 0.5 * math.log(math.exp(u_log) + ratio)
    V0 = interface_v(p, H0)
    value = -math.log(p.a) - 2 * (1 - h) * H0 - 2 * (1 - v) * V0
    return CornerAsymptotic(value=value, H0=H0, V0=V0, roots=len(brackets))


def _slope_at(evaluator: BetheFreeEnergy, q: ModelParams, alpha: float, H: float) -> float:
    return 0.5 - 0.5 * evaluator.fixed_alpha_h_derivative(q.with_fields(H, 0.0), alpha)


def sigma(p: ModelParams, h: float, v: float, evaluator: Optional[BetheFreeEnergy] = None,
          h_max: float = H_MAX, xtol: float = 1e-12) -> SigmaValue:
    """
    σ(h, v) with its gradient and conjugate fields.

    Args:
        p: weights (fields ignored)
        h, v: slope in [0, 1]²
        evaluator: free-energy evaluator
        h_max: largest |H| searched before the sup is declared infinite
        xtol: root tolerance on H*

    Raises:
        ValueError: If (h, v) lies outside the unit square
        SupDiverges: If the maximizing H runs past ``h_max``
    """
    if not (0.0 <= h <= 1.0 and 0.0 <= v <= 1.0):
        raise ValueError(f"Slope ({h}, {v}) outside the unit square")
    closed = sigma_boundary_line(p, h, v)
    if closed is not None:
        nan = float("nan")
        return SigmaValue(value=closed, gradient=(nan, nan), fields=(nan, nan), closed_form=True)

    evaluator = evaluator or default_evaluator()
    alpha = 1.0 - v
    q = p.with_fields(0.0, 0.0)

    def excess(H: float) -> float:
        return _slope_at(evaluator, q, alpha, H) - h

    lo, hi, width = -0.5, 0.5, 0.5
    f_lo, f_hi = excess(lo), excess(hi)
    while f_lo > 0:
        hi, f_hi = lo, f_lo
        width *= 2
        lo = hi - width
        if lo < -h_max:
            raise SupDiverges(f"No finite maximizer for (h, v) = ({h}, {v}) with H >= {-h_max}")
        f_lo = excess(lo)
    while f_hi < 0:
        lo, f_lo = hi, f_hi
        width *= 2
        hi = lo + width
        if hi > h_max:
            raise SupDiverges(f"No finite maximizer for (h, v) = ({h}, {v}) with H <= {h_max}")
        f_hi = excess(hi)
    H_star = brentq(excess, lo, hi, xtol=xtol) if f_lo != 0 else lo

    at_star = q.with_fields(H_star, 0.0)
    value = (2 * h - 1) * H_star + evaluator.fixed_alpha(at_star, alpha)
    V_star = -0.5 * evaluator.fixed_alpha_alpha_derivative(at_star, alpha)
    logger.debug(f"σ({h:.6g}, {v:.6g}) = {value:.12g} at H*={H_star:.8g}, V*={V_star:.8g}")
    return SigmaValue(value=value, gradient=(2 * H_star, 2 * V_star), fields=(H_star, V_star))


@dataclass(eq=False)
class SurfaceTensionTable:
    """σ and its gradient sampled on a uniform (n+1)×(n+1) grid over [0, 1]², indexed [i_h, i_v]."""
    params: ModelParams
    grid: np.ndarray
    sigma: np.ndarray
    dsdh: np.ndarray
    dsdv: np.ndarray
    H_star: np.ndarray
    V_star: np.ndarray
    meta: Dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.grid) - 1

    def _locate(self, x: float) -> Tuple[int, float]:
        n = self.size
        pos = min(max(x, 0.0), 1.0) * n
        i = min(int(pos), n - 1)
        return i, pos - i

    def _bilinear(self, table: np.ndarray, h: float, v: float) -> float:
        i, s = self._locate(h)
        j, t = self._locate(v)
        return float((1 - s) * (1 - t) * table[i, j] + s * (1 - t) * table[i + 1, j]
                     + (1 - s) * t * table[i, j + 1] + s * t * table[i + 1, j + 1])

    def evaluate(self, h: float, v: float) -> float:
        """Bilinear σ, clamped to the unit square."""
        return self._bilinear(self.sigma, h, v)

    def gradient(self, h: float, v: float) -> Tuple[float, float]:
        """Bilinear ∇σ; NaN in cells touching the boundary."""
        return self._bilinear(self.dsdh, h, v), self._bilinear(self.dsdv, h, v)

    def evaluate_extended(self, h: float, v: float, penalty: float = 1e3) -> float:
        """σ continued outside [0, 1]² by a linear penalty on the distance to the square."""
        outside = max(0.0, -h) + max(0.0, h - 1.0) + max(0.0, -v) + max(0.0, v - 1.0)
        return self.evaluate(h, v) + penalty * outside

    def _bilinear_many(self, table: np.ndarray, h: np.ndarray, v: np.ndarray) -> np.ndarray:
        n = self.size
        i = np.minimum((h * n).astype(int), n - 1)
        j = np.minimum((v * n).astype(int), n - 1)
        s, t = h * n - i, v * n - j
        return ((1 - s) * (1 - t) * table[i, j] + s * (1 - t) * table[i + 1, j]
                + (1 - s) * t * table[i, j + 1] + s * t * table[i + 1, j + 1])

    def evaluate_many(self, h: np.ndarray, v: np.ndarray, penalty: float = 1e3) -> np.ndarray:
        """Vectorized ``evaluate_extended``."""
        h = np.asarray(h, dtype=float)
        v = np.asarray(v, dtype=float)
        hc, vc = np.clip(h, 0.0, 1.0), np.clip(v, 0.0, 1.0)
        outside = np.abs(h - hc) + np.abs(v - vc)
        return self._bilinear_many(self.sigma, hc, vc) + penalty * outside

    def gradient_many(self, h: np.ndarray, v: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Vectorized ``gradient``, clamped to the unit square."""
        hc = np.clip(np.asarray(h, dtype=float), 0.0, 1.0)
        vc = np.clip(np.asarray(v, dtype=float), 0.0, 1.0)
        return self._bilinear_many(self.dsdh, hc, vc), self._bilinear_many(self.dsdv, hc, vc)

    @classmethod
    def from_function(cls, p: ModelParams, n: int, func, gradient=None) -> "SurfaceTensionTable":
        """
        Table sampled from a known σ(h, v), e.g. an analytic surface tension.

        ``gradient`` maps (h, v) to (σ_h, σ_v); boundary gradients stay NaN.
        """
        grid = np.linspace(0.0, 1.0, n + 1)
        hh, vv = np.meshgrid(grid, grid, indexing="ij")
        sig = np.vectorize(func, otypes=[float])(hh, vv)
        dh = np.full_like(sig, np.nan)
        dv = np.full_like(sig, np.nan)
        if gradient is not None:
            for i in range(1, n):
                for j in range(1, n):
                    dh[i, j], dv[i, j] = gradient(grid[i], grid[j])
        return cls(params=p, grid=grid, sigma=sig, dsdh=dh, dsdv=dv, H_star=dh / 2, V_star=dv / 2,
                   meta={"source": "function"})

    def interior_spline(self) -> RectBivariateSpline:
        """Bicubic spline through the interior nodes."""
        inner = self.grid[1:-1]
        return RectBivariateSpline(inner, inner, self.sigma[1:-1, 1:-1])

    def rows(self) -> List[Tuple[float, ...]]:
        """CSV rows h, v, sigma, dsdh, dsdv, Hstar, Vstar."""
        out = []
        for i, h in enumerate(self.grid):
            for j, v in enumerate(self.grid):
                out.append((float(h), float(v), float(self.sigma[i, j]), float(self.dsdh[i, j]),
                            float(self.dsdv[i, j]), float(self.H_star[i, j]), float(self.V_star[i, j])))
        return out

    def header(self) -> Dict:
        return {"params": self.params.to_dict(), "n": self.size, **self.meta}


CSV_HEADER = ("h", "v", "sigma", "dsdh", "dsdv", "Hstar", "Vstar")


def build_table(p: ModelParams, n: int, evaluator: Optional[BetheFreeEnergy] = None,
                h_max: float = H_MAX) -> SurfaceTensionTable:
    """
    Sample σ on the (n+1)×(n+1) grid.

    Interior nodes are solved on the fundamental domain h >= v, h + v <= 1
    and filled in by σ(h, v) = σ(v, h) = σ(1−h, 1−v); edges use the closed forms.
    """
    if n < 2:
        raise ValueError(f"Table needs at least 2 intervals, got {n}")
    evaluator = evaluator or default_evaluator()
    grid = np.linspace(0.0, 1.0, n + 1)
    shape = (n + 1, n + 1)
    sig, dh, dv, hs, vs = (np.full(shape, np.nan) for _ in range(5))
    for i in range(n + 1):
        for j in range(n + 1):
            closed = sigma_boundary_line(p, float(grid[i]), float(grid[j]))
            if closed is not None:
                sig[i, j] = closed

    def put(i: int, j: int, value: float, gh: float, gv: float, H: float, V: float) -> None:
        sig[i, j], dh[i, j], dv[i, j], hs[i, j], vs[i, j] = value, gh, gv, H, V

    solved = 0
    for i in range(1, n):
        for j in range(1, n):
            if not (i >= j and i + j <= n):
                continue
            res = sigma(p, float(grid[i]), float(grid[j]), evaluator=evaluator, h_max=h_max)
            gh, gv = res.gradient
            H, V = res.fields
            put(i, j, res.value, gh, gv, H, V)
            put(j, i, res.value, gv, gh, V, H)
            put(n - i, n - j, res.value, -gh, -gv, -H, -V)
            put(n - j, n - i, res.value, -gv, -gh, -V, -H)
            solved += 1
    logger.info(f"Surface tension table n={n} built from {solved} solved nodes")
    return SurfaceTensionTable(params=p, grid=grid, sigma=sig, dsdh=dh, dsdv=dv, H_star=hs, V_star=vs,
                               meta={"solved_nodes": solved, "h_max": h_max})


def inverse_legendre(table: SurfaceTensionTable, H: float, V: float) -> float:
    """
    f(H, V) = min_{h,v} [σ(h, v) − (2h − 1)H − (2v − 1)V] over the interior spline.

    The discrete minimum over nodes seeds a bounded quasi-Newton refinement.
    """
    spline = table.interior_spline()
    inner = table.grid[1:-1]
    hh, vv = np.meshgrid(inner, inner, indexing="ij")
    objective_grid = table.sigma[1:-1, 1:-1] - (2 * hh - 1) * H - (2 * vv - 1) * V
    i, j = np.unravel_index(int(np.nanargmin(objective_grid)), objective_grid.shape)

    def objective(x):
        h, v = x
        value = spline.ev(h, v) - (2 * h - 1) * H - (2 * v - 1) * V
        grad = np.array([spline.ev(h, v, dx=1) - 2 * H, spline.ev(h, v, dy=1) - 2 * V])
        return float(value), grad

    bounds = [(inner[0], inner[-1])] * 2
    res = minimize(objective, x0=np.array([inner[i], inner[j]]), jac=True, method="L-BFGS-B", bounds=bounds,
                   options={"ftol": 1e-15, "gtol": 1e-12})
    return float(res.fun)
