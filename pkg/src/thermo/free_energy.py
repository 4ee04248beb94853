"""
Free energy f(H, V) = −lim ln Z / (NM) in every phase.

Frozen phases have linear free energies. At Δ = 0 the free energy is a
double integral that reduces to one dimension. Elsewhere in the disordered
phase f is the minimum over the fraction α and over two logarithm branches
of

    f1(α) = −ln a − H − (1 − 2α)V − α ∫₀¹ ln|F1(z(s))| ds,
    f2(α) = −ln b + H − (1 − 2α)V − α ∫₀¹ ln|F2(z(s))| ds,

with F1(z) = (abz − b² + c²)/(a(az − b)), F2(z) = (ab + (c² − a²)z)/(b(b − az))
and z(s) the contour from the density equation. Only the integral depends
on the contour, and the contour depends on (Δ, H, α) but not on V.
"""

import logging
import math
from collections import OrderedDict
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
from numpy.polynomial import legendre
from scipy import integrate
from scipy.optimize import minimize_scalar

from ..model.params import ModelParams
from ..utils.errors import NotFreeFermion, NumericalError, QuadratureFailure, WrongRegime
from .density import EPS_FF, DensitySolution, DensitySolver
from .phases import PhaseLabel, classify_phase, linear_free_energies

logger = logging.getLogger(__name__)


# Free fermion point

def free_fermion_theta(p: ModelParams) -> float:
    """θ* ∈ [0, π] where |a1 + b1e^{iθ}| and |b2 − a2e^{iθ}| cross."""
    w = p.weights()
    cos_theta = (w.a2 ** 2 + w.b2 ** 2 - w.a1 ** 2 - w.b1 ** 2) / (2 * (w.a1 * w.b1 + w.a2 * w.b2))
    if cos_theta >= 1.0:
        return 0.0
    if cos_theta <= -1.0:
        return math.pi
    return math.acos(cos_theta)


def _free_fermion_1d(p: ModelParams) -> float:
    w = p.weights()
    theta = free_fermion_theta(p)

    def upper(t):
        return math.log(abs(w.a1 + w.b1 * complex(math.cos(t), math.sin(t))))

    def lower(t):
        return math.log(abs(w.b2 - w.a2 * complex(math.cos(t), math.sin(t))))

    total = 0.0
    if theta > 0:
        total += integrate.quad(upper, 0.0, theta, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
    if theta < math.pi:
        total += integrate.quad(lower, theta, math.pi, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
    return -total / math.pi


def free_fermion_double_integral(p: ModelParams, epsabs: float = 1e-10) -> float:
    """−(1/4π²)∬ ln|a1 − a2e^{i(θ+φ)} + b1e^{iθ} + b2e^{iφ}| dθ dφ by adaptive quadrature."""
    w = p.weights()

    def integrand(phi, theta):
        value = (w.a1 - w.a2 * np.exp(1j * (theta + phi)) + w.b1 * np.exp(1j * theta)
                 + w.b2 * np.exp(1j * phi))
        return math.log(max(abs(value), 1e-300))

    value, _ = integrate.dblquad(integrand, -math.pi, math.pi, -math.pi, math.pi,
                                 epsabs=epsabs, epsrel=1e-10)
    return -value / (4 * math.pi ** 2)


def free_energy_free_fermion(p: ModelParams, eps_ff: float = EPS_FF, check: bool = True,
                             check_tol: float = 1e-7) -> float:
    """
    Free energy at Δ = 0 from the reduced one-dimensional integral.

    Args:
        p: parameters with |Δ| <= eps_ff
        eps_ff: free-fermion tolerance on Δ
        check: also evaluate the double integral and compare
        check_tol: allowed disagreement between the two evaluations

    Raises:
        NotFreeFermion: If |Δ| > eps_ff
        QuadratureFailure: If the two evaluations disagree
    """
    if abs(p.delta) > eps_ff:
        raise NotFreeFermion(f"Δ = {p.delta} is not within {eps_ff} of zero")
    value = _free_fermion_1d(p)
    if check:
        reference = free_fermion_double_integral(p)
        if abs(reference - value) > check_tol:
            raise QuadratureFailure(f"1-D value {value!r} and 2-D value {reference!r} disagree")
        logger.debug(f"Free-fermion quadratures agree to {abs(reference - value):.2e}")
    return value


def free_fermion_alpha(p: ModelParams) -> float:
    """α* from cos πα = (a² sinh(2H+2V) − b² sinh(2H−2V)) / (2ab cosh 2V), clipped to [0, 1]."""
    a, b, H, V = p.a, p.b, p.H, p.V
    x = (a * a * math.sinh(2 * H + 2 * V) - b * b * math.sinh(2 * H - 2 * V)) / (2 * a * b * math.cosh(2 * V))
    return math.acos(min(1.0, max(-1.0, x))) / math.pi


# Zero-field closed forms

def zero_field_free_energy(p: ModelParams) -> float:
    """
    Zero-field free energy for |Δ| < 1 by Fourier transform.

    With Δ = −cos μ and tan(w/2) = ((a − b)/(a + b)) tan(μ/2),
    f = −ln a − ∫ sinh((π−μ)x) sinh((μ−w)x) / (2x sinh(πx) cosh(μx)) dx over ℝ.
    The fields of ``p`` are ignored.

    Raises:
        WrongRegime: If |Δ| >= 1
    """
    d = p.delta
    if not abs(d) < 1:
        raise WrongRegime(f"Fourier solution needs |Δ| < 1, got {d}")
    mu = math.acos(-d)
    w = 2.0 * math.atan((p.a - p.b) / (p.a + p.b) * math.tan(mu / 2.0))
    A, B = math.pi - mu, mu - w
    sign = 1.0 if B >= 0 else -1.0
    B = abs(B)
    decay = A + B - math.pi - mu

    def integrand(x):
        return (math.exp(decay * x) * -math.expm1(-2 * A * x) * -math.expm1(-2 * B * x)
                / (2 * x * -math.expm1(-2 * math.pi * x) * (1 + math.exp(-2 * mu * x))))

    value, _ = integrate.quad(integrand, 0.0, math.inf, epsabs=1e-14, epsrel=1e-12, limit=400)
    return -math.log(p.a) - 2.0 * sign * value


def antiferro_zero_field_free_energy(p: ModelParams, tol: float = 1e-17) -> float:
    """
    Zero-field free energy for Δ < −1.

    With Δ = −cosh λ and a ∝ sinh((λ−v)/2), b ∝ sinh((λ+v)/2),
    −f = ln a + (λ+v)/2 + Σ_{m≥1} e^{−mλ} sinh(m(λ+v)) / (m cosh mλ).
    The value is constant over the antiferroelectric region.

    Raises:
        WrongRegime: If Δ >= −1
    """
    d = p.delta
    if not d < -1:
        raise WrongRegime(f"Antiferroelectric series needs Δ < −1, got {d}")
    lam = math.acosh(-d)
    half = math.atanh(math.sinh(lam) / (p.a / p.b + math.cosh(lam)))
    v = 2.0 * half - lam
    total = math.log(p.a) + 0.5 * (lam + v)
    m = 1
    while True:
        # e^{−mλ} sinh(m(λ+v)) / cosh(mλ), written with decaying exponentials only
        term = (math.exp(m * (v - lam)) * -math.expm1(-2 * m * (lam + v))
                / (m * (1 + math.exp(-2 * m * lam))))
        total += term
        if abs(term) < tol or m > 100000:
            break
        m += 1
    return -total


# Contour integrals

def _integral_log_abs(star: complex) -> float:
    """∫₀¹ ln|s − s*| ds."""
    def xlogx(x: complex) -> complex:
        return 0.0 if x == 0 else x * np.log(x)
    return float((xlogx(1 - star) + xlogx(-star)).real - 1.0)


def _preimages(sol: DensitySolution, point: complex, coeffs: np.ndarray,
               iterations: int = 40) -> List[complex]:
    # Complex s with z(s) = point near the closest nodes, by Newton on the interpolant
    z = sol.contour
    order = np.argsort(np.abs(z - point))
    starts = {int(order[0]), len(z) - 1 - int(order[0])}
    deriv = legendre.legder(coeffs)
    roots: List[complex] = []
    for k in starts:
        x = complex(2.0 * sol.s[k] - 1.0)
        for _ in range(iterations):
            step = (legendre.legval(x, coeffs) - point) / legendre.legval(x, deriv)
            x -= step
            if abs(step) < 1e-14:
                break
        s = 0.5 * (x + 1.0)
        converged = abs(legendre.legval(x, coeffs) - point) < 1e-11 * max(1.0, abs(point))
        if converged and abs(s.imag) < 0.5 and -0.5 < s.real < 1.5:
            if all(abs(s - r) > 1e-8 for r in roots):
                roots.append(s)
    return roots


def log_potential(sol: DensitySolution, point: complex, coeffs: Optional[np.ndarray] = None) -> float:
    """
    ∫₀¹ ln|z(s) − point| ds along the contour.

    Logarithmic singularities from points on or near the contour are
    subtracted in the counting variable and integrated exactly.
    """
    z = sol.contour
    if coeffs is None:
        coeffs = sol.legendre_coefficients()
    roots = _preimages(sol, point, coeffs)
    if not roots:
        return float(np.dot(sol.weights, np.log(np.abs(z - point))))
    distance = np.abs(z - point)
    hit = distance < 1e-13 * max(1.0, abs(point))
    values = np.log(np.where(hit, 1.0, distance))
    for star in roots:
        gap = np.abs(sol.s - star)
        values = values - np.log(np.where(hit, 1.0, gap))
    if hit.any():
        # Node on the singular point: the remainder tends to ln|z'(s*)|
        slope = np.abs(sol.dz_ds(sol.s[hit]))
        values[hit] = np.log(slope)
        for star in roots:
            gap = np.abs(sol.s[hit] - star)
            far = gap > 1e-10
            values[hit] -= np.where(far, np.log(np.where(far, gap, 1.0)), 0.0)
    return float(np.dot(sol.weights, values) + sum(_integral_log_abs(star) for star in roots))


def branch_integrals(sol: DensitySolution) -> Tuple[float, float]:
    """(∫ ln|F1(z)| ds, ∫ ln|F2(z)| ds) along the contour."""
    p = sol.params
    a, b, c = p.a, p.b, p.c
    coeffs = sol.legendre_coefficients()
    pole = log_potential(sol, b / a, coeffs)
    first = math.log(b / a) + log_potential(sol, (b * b - c * c) / (a * b), coeffs) - pole
    gap = a * a - c * c
    if abs(gap) <= 1e-12 * a * a:
        second = -pole
    else:
        second = math.log(abs(gap) / (a * b)) + log_potential(sol, a * b / gap, coeffs) - pole
    return first, second


# Disordered phase

@dataclass(frozen=True, eq=False)
class FreeEnergyResult:
    """Free energy with the minimizing fraction α and logarithm branch.

    ``branch`` is 0 when the value comes from a closed form. ``extrapolated``
    marks minima that lie beyond the last α where the contour could be solved.
    """
    f: float
    alpha: float
    branch: int
    phase: Optional[PhaseLabel] = None
    extrapolated: bool = False
    solution: Optional[DensitySolution] = None

    def to_dict(self) -> dict:
        out = {
            "f": self.f,
            "alpha": self.alpha,
            "branch": self.branch,
            "phase": self.phase.value if self.phase else None,
            "extrapolated": self.extrapolated,
        }
        if self.solution is not None:
            out.update({k: v for k, v in self.solution.to_dict().items() if k in ("contour", "residuals")})
        return out


class BetheFreeEnergy:
    """
    α-minimized free energy from the density solver, with cached contours.

    Contours are cached per (a, b, c, H, α) since V only enters linearly.
    """

    def __init__(self, solver: Optional[DensitySolver] = None, alpha_scan: int = 20,
                 alpha_xtol: float = 1e-7, fd_step: float = 1e-5, cache_size: int = 256):
        """
        Initialize the evaluator.

        Args:
            solver: density solver, a default one when omitted
            alpha_scan: number of α intervals in the coarse scan
            alpha_xtol: bracket tolerance of the bounded α minimization
            fd_step: step of the central differences in H and α
            cache_size: number of contours kept
        """
        self.solver = solver or DensitySolver()
        self.alpha_scan = alpha_scan
        self.alpha_xtol = alpha_xtol
        self.fd_step = fd_step
        self.cache_size = cache_size
        self._cache: "OrderedDict[tuple, Tuple[DensitySolution, float, float]]" = OrderedDict()

    @classmethod
    def from_config(cls, config: Dict) -> "BetheFreeEnergy":
        solver_cfg = config.get("solver", {})
        solver = DensitySolver(
            nodes=solver_cfg.get("nodes", 129),
            tol=solver_cfg.get("newton_tol", 1e-12),
            max_iter=solver_cfg.get("newton_max_iter", 60),
            alpha_step=solver_cfg.get("alpha_step", 0.05),
            eps_sep=solver_cfg.get("eps_sep", 1e-3),
            eps_ff=config.get("phase", {}).get("eps_ff", EPS_FF),
        )
        return cls(solver=solver, alpha_scan=solver_cfg.get("alpha_scan", 20),
                   alpha_xtol=solver_cfg.get("alpha_xtol", 1e-7), fd_step=solver_cfg.get("fd_step", 1e-5))

    def _nearest(self, p: ModelParams, alpha: float) -> Optional[DensitySolution]:
        best, best_gap = None, math.inf
        for (a, b, c, H, al), (sol, _, _) in self._cache.items():
            if (a, b, c) != (p.a, p.b, p.c):
                continue
            gap = abs(H - p.H) + abs(al - alpha)
            if gap < best_gap:
                best, best_gap = sol, gap
        return best

    def contour(self, p: ModelParams, alpha: float) -> Tuple[DensitySolution, float, float]:
        """Solved contour and both branch integrals at the fields of ``p``."""
        key = (p.a, p.b, p.c, p.H, alpha)
        if key in self._cache:
            self._cache.move_to_end(key)
            return self._cache[key]
        sol = self.solver.solve(p, alpha, guess=self._nearest(p, alpha))
        entry = (sol, *branch_integrals(sol))
        self._cache[key] = entry
        if len(self._cache) > self.cache_size:
            self._cache.popitem(last=False)
        return entry

    def branch_values(self, p: ModelParams, alpha: float) -> Tuple[float, float]:
        """(f1, f2) at fixed α."""
        H, V = p.H, p.V
        if alpha == 0.0:
            lin = linear_free_energies(p)
            return lin[PhaseLabel.FROZEN_A1], lin[PhaseLabel.FROZEN_B2]
        _, first, second = self.contour(p, alpha)
        tail = -(1.0 - 2.0 * alpha) * V
        return (-math.log(p.a) - H + tail - alpha * first,
                -math.log(p.b) + H + tail - alpha * second)

    def fixed_alpha(self, p: ModelParams, alpha: float) -> float:
        """min over branches at fixed α."""
        return min(self.branch_values(p, alpha))

    def minimize(self, p: ModelParams) -> FreeEnergyResult:
        """
        Minimize over α and branch.

        A coarse scan with continuation locates the minimum, then a bounded
        scalar minimization refines it. The scan stops at the first α where
        the contour cannot be solved; a minimum sitting at that edge is
        extrapolated quadratically.
        """
        grid: List[float] = [0.0]
        values: List[float] = [self.fixed_alpha(p, 0.0)]
        truncated = False
        for alpha in np.linspace(0.0, 1.0, self.alpha_scan + 1)[1:]:
            try:
                values.append(self.fixed_alpha(p, float(alpha)))
            except NumericalError as e:
                logger.warning(f"α scan truncated at α={alpha:.4g} for {p.to_dict()}: {e}")
                truncated = True
                break
            grid.append(float(alpha))
            logger.debug(f"α={alpha:.4f} f={values[-1]:.12g}")
        k = int(np.argmin(values))

        if truncated and k == len(grid) - 1 and len(grid) >= 3:
            coeffs = np.polyfit(grid[-3:], values[-3:], 2)
            vertex = -coeffs[1] / (2 * coeffs[0]) if coeffs[0] > 0 else grid[-1]
            vertex = min(max(vertex, grid[-1]), 1.0)
            f = float(np.polyval(coeffs, vertex))
            logger.warning(f"Minimum extrapolated to α={vertex:.6g}")
            return FreeEnergyResult(f=f, alpha=float(vertex), branch=self._branch(p, grid[-1]), extrapolated=True)

        lo = grid[k - 1] if k > 0 else 0.0
        hi = grid[k + 1] if k + 1 < len(grid) else grid[k]
        best_alpha, best_f = grid[k], values[k]
        if hi > lo:
            def objective(alpha: float) -> float:
                try:
                    return self.fixed_alpha(p, alpha)
                except NumericalError:
                    return best_f + 1.0

            res = minimize_scalar(objective, bounds=(max(lo, 1e-9), hi), method="bounded",
                                  options={"xatol": self.alpha_xtol})
            if res.fun < best_f:
                best_alpha, best_f = float(res.x), float(res.fun)
        solution = self.contour(p, best_alpha)[0] if best_alpha > 0 else None
        return FreeEnergyResult(f=best_f, alpha=best_alpha, branch=self._branch(p, best_alpha), solution=solution)

    def _branch(self, p: ModelParams, alpha: float) -> int:
        f1, f2 = self.branch_values(p, alpha)
        return 1 if f1 <= f2 else 2

    def gradient(self, p: ModelParams) -> Tuple[float, float]:
        """
        (∂f/∂H, ∂f/∂V).

        ∂f/∂V = −(1 − 2α*) exactly; ∂f/∂H is a central difference of the
        branch minimum at frozen α*, which is exact to second order because
        f is stationary in α.
        """
        result = self.minimize(p)
        alpha = result.alpha
        f_v = -(1.0 - 2.0 * alpha)
        delta = self.fd_step
        if alpha == 0.0:
            return (-1.0 if result.branch == 1 else 1.0), f_v
        if result.extrapolated:
            up = self.minimize(p.with_fields(p.H + delta, p.V)).f
            down = self.minimize(p.with_fields(p.H - delta, p.V)).f
        else:
            up = self.fixed_alpha(p.with_fields(p.H + delta, p.V), alpha)
            down = self.fixed_alpha(p.with_fields(p.H - delta, p.V), alpha)
        return (up - down) / (2 * delta), f_v

    def slope(self, p: ModelParams) -> Tuple[float, float]:
        """(h, v) = (½ − ½∂f/∂H, ½ − ½∂f/∂V), clipped to [0, 1]."""
        f_h, f_v = self.gradient(p)
        h = min(1.0, max(0.0, 0.5 - 0.5 * f_h))
        v = min(1.0, max(0.0, 0.5 - 0.5 * f_v))
        return h, v

    def fixed_alpha_h_derivative(self, p: ModelParams, alpha: float) -> float:
        """∂/∂H of the branch minimum at fixed α."""
        delta = self.fd_step
        up = self.fixed_alpha(p.with_fields(p.H + delta, p.V), alpha)
        down = self.fixed_alpha(p.with_fields(p.H - delta, p.V), alpha)
        return (up - down) / (2 * delta)

    def fixed_alpha_alpha_derivative(self, p: ModelParams, alpha: float) -> float:
        """∂/∂α of the V-free branch minimum at fixed H, one-sided near α = 1."""
        delta = self.fd_step
        q = p.with_fields(p.H, 0.0)
        if alpha + delta <= 1.0:
            up = self.fixed_alpha(q, alpha + delta)
            down = self.fixed_alpha(q, alpha - delta)
            return (up - down) / (2 * delta)
        values = [self.fixed_alpha(q, alpha - j * delta) for j in range(3)]
        return (3 * values[0] - 4 * values[1] + values[2]) / (2 * delta)


_DEFAULT: Optional[BetheFreeEnergy] = None


def default_evaluator() -> BetheFreeEnergy:
    """Shared evaluator with default settings."""
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = BetheFreeEnergy()
    return _DEFAULT


def free_energy_disordered(p: ModelParams, evaluator: Optional[BetheFreeEnergy] = None) -> float:
    """Free energy from the density equation, minimized over α and branch."""
    return (evaluator or default_evaluator()).minimize(p).f


_FROZEN_ALPHA = {
    PhaseLabel.FROZEN_A1: 0.0,
    PhaseLabel.FROZEN_B2: 0.0,
    PhaseLabel.FROZEN_A2: 1.0,
    PhaseLabel.FROZEN_B1: 1.0,
}


def free_energy(p: ModelParams, evaluator: Optional[BetheFreeEnergy] = None,
                eps_phase: float = 1e-9) -> FreeEnergyResult:
    """
    Free energy in whichever phase the fields of ``p`` fall.

    Frozen phases use the linear forms, the antiferroelectric region the
    zero-field series, Δ = 0 the one-dimensional integral, and the
    disordered phase the density solver.
    """
    evaluator = evaluator or default_evaluator()
    phase = classify_phase(p, eps_phase=eps_phase).label
    if phase.is_frozen:
        return FreeEnergyResult(f=linear_free_energies(p)[phase], alpha=_FROZEN_ALPHA[phase], branch=0, phase=phase)
    if phase is PhaseLabel.ANTIFERRO_A:
        return FreeEnergyResult(f=antiferro_zero_field_free_energy(p), alpha=0.5, branch=0, phase=phase)
    if abs(p.delta) <= evaluator.solver.eps_ff:
        return FreeEnergyResult(f=free_energy_free_fermion(p, check=False), alpha=free_fermion_alpha(p),
                                branch=0, phase=phase)
    result = evaluator.minimize(p)
    return FreeEnergyResult(f=result.f, alpha=result.alpha, branch=result.branch, phase=phase,
                            extrapolated=result.extrapolated, solution=result.solution)


def free_energy_gradient(p: ModelParams, evaluator: Optional[BetheFreeEnergy] = None) -> Tuple[float, float]:
    """(∂f/∂H, ∂f/∂V) at the fields of ``p``."""
    phase = classify_phase(p).label
    if phase.is_frozen:
        signs = {
            PhaseLabel.FROZEN_A1: (-1.0, -1.0),
            PhaseLabel.FROZEN_A2: (1.0, 1.0),
            PhaseLabel.FROZEN_B1: (-1.0, 1.0),
            PhaseLabel.FROZEN_B2: (1.0, -1.0),
        }
        return signs[phase]
    if phase is PhaseLabel.ANTIFERRO_A:
        return 0.0, 0.0
    return (evaluator or default_evaluator()).gradient(p)


def slope(p: ModelParams, evaluator: Optional[BetheFreeEnergy] = None) -> Tuple[float, float]:
    """Slope (h, v) of the Gibbs measure at the fields of ``p``."""
    f_h, f_v = free_energy_gradient(p, evaluator)
    return min(1.0, max(0.0, 0.5 - 0.5 * f_h)), min(1.0, max(0.0, 0.5 - 0.5 * f_v))


def hessian(p: ModelParams, step: float = 1e-3, evaluator: Optional[BetheFreeEnergy] = None) -> np.ndarray:
    """Central-difference Hessian of f in (H, V)."""
    evaluator = evaluator or default_evaluator()

    def f(dh: float, dv: float) -> float:
        return evaluator.minimize(p.with_fields(p.H + dh, p.V + dv)).f

    center = f(0.0, 0.0)
    f_hh = (f(step, 0.0) - 2 * center + f(-step, 0.0)) / step ** 2
    f_vv = (f(0.0, step) - 2 * center + f(0.0, -step)) / step ** 2
    f_hv = (f(step, step) - f(step, -step) - f(-step, step) + f(-step, -step)) / (4 * step ** 2)
    return np.array([[f_hh, f_hv], [f_hv, f_vv]])
