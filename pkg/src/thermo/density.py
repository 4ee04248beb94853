"""
Discretized Bethe density equation.

The contour C is parameterized by the counting fraction s ∈ [0, 1]: a
fraction s of the roots lies on C before z(s). Writing u = ln z, the
condensed Bethe equations read

    u(s) = 2H + iπα(2s − 1) + α ∫₀¹ L(z(s), z(s')) ds',
    L(z, w) = ln[(1 − 2Δz + zw) / (1 − 2Δw + zw)],

with the branch of L continued from L(z, z) = 0. The density with respect
to z is ρ(z) = 1/z + α ∫ K(z, z(s')) ds', so that ρ dz = 2πiα ds is purely
imaginary along C and integrates to α. At Δ = 0 the kernel vanishes and C
is the arc e^{2H}e^{iπα(2s−1)} with ρ = 1/z.

Nodes are Gauss-Legendre points in s; the same Newton core also solves the
finite Bethe equations on midpoint nodes.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np
from numpy.polynomial import legendre

from ..model.params import ModelParams
from ..utils.errors import ContourCollision, NoConvergence

logger = logging.getLogger(__name__)

EPS_FF = 1e-12
EPS_SEP = 1e-3


def gauss_nodes(count: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = legendre.leggauss(count)
    return 0.5 * (x + 1.0), 0.5 * w


def kernel_matrices(z: np.ndarray, delta: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Log-kernel L(z_k, z_j) and density kernel K(z_k, z_j) at the nodes.

    L is continued along each row from its zero on the diagonal by summing
    principal increments between neighbouring nodes.
    """
    zk = z[:, None]
    zj = z[None, :]
    prod = zk * zj
    num = 1.0 - 2.0 * delta * zk + prod
    den = 1.0 - 2.0 * delta * zj + prod
    ratio = num / den
    steps = np.angle(ratio[:, 1:] / ratio[:, :-1])
    phase = np.concatenate([np.zeros((len(z), 1)), np.cumsum(steps, axis=1)], axis=1)
    phase -= np.diag(phase)[:, None]
    log_kernel = np.log(np.abs(ratio)) + 1j * phase
    density_kernel = (2.0 * delta - zj) / num + zj / den
    return log_kernel, density_kernel


@dataclass
class NewtonResult:
    u: np.ndarray
    log_kernel: np.ndarray
    density_kernel: np.ndarray
    jacobian: np.ndarray
    iterations: int
    residual: float


def _residual(u, delta, H, alpha, s, w):
    z = np.exp(u)
    log_kernel, density_kernel = kernel_matrices(z, delta)
    forcing = 2.0 * H + 1j * math.pi * alpha * (2.0 * s - 1.0)
    F = u - forcing - alpha * (log_kernel @ w)
    return F, z, log_kernel, density_kernel


def _jacobian(z, density_kernel, alpha, w):
    diag = 1.0 + alpha * z * (density_kernel @ w)
    return np.diag(diag) - alpha * density_kernel.T * (w * z)[None, :]


def newton_contour(delta: float, H: float, alpha: float, s: np.ndarray, w: np.ndarray,
                   u0: np.ndarray, tol: float = 1e-12, max_iter: int = 60) -> NewtonResult:
    """
    Damped complex Newton iteration for the condensed Bethe equations.

    Args:
        delta: anisotropy Δ
        H: horizontal field
        alpha: fraction of roots
        s: counting-fraction nodes, symmetric under s → 1 − s
        w: quadrature weights
        u0: initial ln z at the nodes

    Returns:
        NewtonResult at convergence

    Raises:
        NoConvergence: If the residual does not fall below ``tol``
    """
    u = np.array(u0, dtype=complex)
    F, z, log_kernel, density_kernel = _residual(u, delta, H, alpha, s, w)
    residual = float(np.max(np.abs(F)))
    iterations = 0
    while residual > tol:
        if iterations >= max_iter or not np.isfinite(residual):
            raise NoConvergence(iterations, residual, what="contour Newton")
        J = _jacobian(z, density_kernel, alpha, w)
        step = np.linalg.solve(J, -F)
        t = 1.0
        while True:
            trial = u + t * step
            # Conjugation pairs s ↔ 1 − s
            trial = 0.5 * (trial + np.conj(trial[::-1]))
            F_new, z_new, lk_new, dk_new = _residual(trial, delta, H, alpha, s, w)
            new_residual = float(np.max(np.abs(F_new)))
            if np.isfinite(new_residual) and (new_residual < (1.0 - 0.25 * t) * residual or t < 1e-3):
                break
            t *= 0.5
        u, F, z, log_kernel, density_kernel = trial, F_new, z_new, lk_new, dk_new
        residual = new_residual
        iterations += 1
        logger.debug(f"contour Newton it={iterations} step={t:.3g} residual={residual:.3e}")
    J = _jacobian(z, density_kernel, alpha, w)
    return NewtonResult(u=u, log_kernel=log_kernel, density_kernel=density_kernel,
                        jacobian=J, iterations=iterations, residual=residual)


def singular_curve_distance(z: np.ndarray, delta: float) -> float:
    """Smallest distance from the nodes to the images z1(w) = 1/(2Δ − w), z2(w) = 2Δ − 1/w."""
    z1 = 1.0 / (2.0 * delta - z)
    z2 = 2.0 * delta - 1.0 / z
    d1 = np.abs(z[:, None] - z1[None, :])
    d2 = np.abs(z[:, None] - z2[None, :])
    return float(min(d1.min(), d2.min()))


@dataclass(frozen=True, eq=False)
class DensitySolution:
    """Contour nodes, density values and diagnostics for one (Δ, H, α)."""
    params: ModelParams
    alpha: float
    s: np.ndarray
    weights: np.ndarray
    log_contour: np.ndarray
    rho: np.ndarray
    endpoint: complex
    residuals: Dict[str, float] = field(default_factory=dict)
    jacobian: Optional[np.ndarray] = None
    log_kernel: Optional[np.ndarray] = None

    @property
    def contour(self) -> np.ndarray:
        return np.exp(self.log_contour)

    @property
    def nodes(self) -> int:
        return len(self.s)

    def legendre_coefficients(self) -> np.ndarray:
        """Complex Legendre coefficients of z(s) in x = 2s − 1."""
        x = 2.0 * self.s - 1.0
        z = self.contour
        deg = len(x) - 1
        return legendre.legfit(x, z.real, deg) + 1j * legendre.legfit(x, z.imag, deg)

    def z_at(self, s) -> np.ndarray:
        """Interpolated contour point(s); s may be complex."""
        return legendre.legval(2.0 * np.asarray(s) - 1.0, self.legendre_coefficients())

    def dz_ds(self, s=None) -> np.ndarray:
        """Derivative dz/ds of the interpolant, at the nodes by default."""
        coeffs = legendre.legder(self.legendre_coefficients())
        where = self.s if s is None else np.asarray(s)
        return 2.0 * legendre.legval(2.0 * where - 1.0, coeffs)

    def to_dict(self) -> dict:
        z = self.contour
        return {
            "alpha": self.alpha,
            "contour": [[float(v.real), float(v.imag)] for v in z],
            "rho": [[float(v.real), float(v.imag)] for v in self.rho],
            "endpoint": [float(self.endpoint.real), float(self.endpoint.imag)],
            "residuals": dict(self.residuals),
        }


def _endpoint(z: np.ndarray, w: np.ndarray, delta: float, H: float, alpha: float,
              guess: complex, iterations: int = 200) -> complex:
    # Fixed point at s = 0 with the log-kernel continued from the first node
    z0 = z[0]
    base = np.log(np.abs((1 - 2 * delta * z0 + z0 * z) / (1 - 2 * delta * z + z0 * z)))
    ratio0 = (1 - 2 * delta * z0 + z0 * z) / (1 - 2 * delta * z + z0 * z)
    steps = np.angle(ratio0[1:] / ratio0[:-1])
    phase0 = np.concatenate([[0.0], np.cumsum(steps)])
    L0 = base + 1j * phase0
    xi = guess
    for _ in range(iterations):
        ratio = (1 - 2 * delta * xi + xi * z) / (1 - 2 * delta * z + xi * z)
        L = L0 + np.log(ratio / ratio0)
        nxt = np.exp(2.0 * H - 1j * math.pi * alpha + alpha * np.dot(w, L))
        if abs(nxt - xi) < 1e-15 * max(1.0, abs(xi)):
            return complex(nxt)
        xi = nxt
    return complex(xi)


class DensitySolver:
    """Solves the density equation on Gauss-Legendre nodes with α continuation."""

    def __init__(self, nodes: int = 129, tol: float = 1e-12, max_iter: int = 60,
                 alpha_step: float = 0.05, eps_sep: float = EPS_SEP, eps_ff: float = EPS_FF):
        """
        Initialize the solver.

        Args:
            nodes: number of Gauss-Legendre nodes (2K + 1)
            tol: Newton tolerance on the fixed-point residual
            max_iter: Newton iteration cap per solve
            alpha_step: largest α increment during continuation
            eps_sep: minimal allowed distance to the kernel's singular curves
            eps_ff: |Δ| below which the kernel is treated as zero
        """
        self.nodes = nodes
        self.tol = tol
        self.max_iter = max_iter
        self.alpha_step = alpha_step
        self.eps_sep = eps_sep
        self.eps_ff = eps_ff
        self.s, self.w = gauss_nodes(nodes)

    def _arc(self, H: float, alpha: float) -> np.ndarray:
        return 2.0 * H + 1j * math.pi * alpha * (2.0 * self.s - 1.0)

    def _newton(self, delta: float, H: float, alpha: float, u0: np.ndarray) -> NewtonResult:
        return newton_contour(delta, H, alpha, self.s, self.w, u0, tol=self.tol, max_iter=self.max_iter)

    def solve(self, p: ModelParams, alpha: float, guess: Optional[DensitySolution] = None) -> DensitySolution:
        """
        Solve for the contour and density at fraction ``alpha``.

        Args:
            p: model parameters (only Δ and H enter)
            alpha: fraction of roots, 0 < α <= 1
            guess: nearby solution used as a warm start

        Returns:
            DensitySolution

        Raises:
            ValueError: If α is outside (0, 1]
            NoConvergence: If Newton fails even with reduced continuation steps
            ContourCollision: If the contour meets a singular curve
        """
        if not 0.0 < alpha <= 1.0:
            raise ValueError(f"α must lie in (0, 1], got {alpha}")
        delta, H = p.delta, p.H
        free = abs(delta) <= self.eps_ff
        if free:
            delta = 0.0

        result = None
        if guess is not None and guess.nodes == self.nodes:
            # Radial shift of the warm start to the new field
            shifted = guess.log_contour + 2.0 * (H - guess.params.H)
            try:
                result = self._continue(delta, H, guess.alpha, shifted, alpha)
            except NoConvergence:
                logger.debug("Warm start failed, restarting from the free-fermion arc")
        if result is None:
            start_alpha = min(alpha, self.alpha_step)
            start = self._newton(delta, H, start_alpha, self._arc(H, start_alpha))
            result = self._continue(delta, H, start_alpha, start.u, alpha)

        z = np.exp(result.u)
        if not free:
            distance = singular_curve_distance(z, delta)
            if distance < self.eps_sep:
                raise ContourCollision(distance, self.eps_sep)
        return self._package(p, alpha, delta, result)

    def _continue(self, delta: float, H: float, alpha0: float, u0: np.ndarray, alpha: float) -> NewtonResult:
        current, u = alpha0, u0
        step = self.alpha_step
        while True:
            target = alpha if abs(alpha - current) <= step else current + math.copysign(step, alpha - current)
            # Shift the forcing term to the new α as the predictor
            predictor = u + 1j * math.pi * (target - current) * (2.0 * self.s - 1.0)
            try:
                result = self._newton(delta, H, target, predictor)
            except NoConvergence:
                if step < 1e-3 or target == current:
                    raise
                step *= 0.5
                logger.debug(f"Continuation step reduced to {step:.3g} at α={current:.6g}")
                continue
            current, u = target, result.u
            if current == alpha:
                return result

    def _package(self, p: ModelParams, alpha: float, delta: float, result: NewtonResult) -> DensitySolution:
        z = np.exp(result.u)
        rho = 1.0 / z + alpha * (result.density_kernel @ self.w)
        interim = DensitySolution(params=p, alpha=alpha, s=self.s, weights=self.w, log_contour=result.u,
                                  rho=rho, endpoint=complex(z[0]))
        dz = interim.dz_ds()
        flux = rho * dz
        total = np.dot(self.w, flux) / (2j * math.pi)
        endpoint = _endpoint(z, self.w, delta, p.H, alpha, complex(interim.z_at(0.0)))
        residuals = {
            "fixed_point": result.residual,
            "normalization": float(abs(total.real - alpha)),
            "alpha_imag": float(abs(total.imag)),
            "c_condition": float(np.max(np.abs(flux.real) / np.abs(flux))),
            "newton_iterations": float(result.iterations),
        }
        return DensitySolution(params=p, alpha=alpha, s=self.s, weights=self.w, log_contour=result.u,
                               rho=rho, endpoint=endpoint, residuals=residuals,
                               jacobian=result.jacobian, log_kernel=result.log_kernel)


def solve_density(p: ModelParams, alpha: float, guess: Optional[DensitySolution] = None,
                  solver: Optional[DensitySolver] = None) -> DensitySolution:
    """Solve the density equation with a default or supplied solver."""
    solver = solver or DensitySolver()
    return solver.solve(p, alpha, guess=guess)
