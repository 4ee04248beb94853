"""
Boundary of the antiferroelectric region for Δ < −1.

The curve is parameterized by s ∈ [−2η, 2η) as (Ξ(s), Ξ(η − θ0 + s)) with
Ξ(φ) = arccosh(1/dn(K(ν)φ/π | 1 − ν)) continued as an odd function and
ν fixed by ηK(ν) = πK'(ν).
"""

import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.optimize import bisect

from ..model.params import ModelParams
from ..utils.elliptic import ellipj, ellipk, ellipk_complement
from ..utils.errors import EllipticRootFailure, WrongRegime

logger = logging.getLogger(__name__)


def solve_modulus(eta: float, tol: float = 1e-13) -> float:
    """
    Complementary parameter p = 1 − ν of the root of ηK(ν) = πK'(ν).

    Bisection runs in log p, with K(ν) = K(1 − p) evaluated from p directly.

    Raises:
        EllipticRootFailure: If the root cannot be bracketed
    """
    if eta <= 0:
        raise EllipticRootFailure(f"η must be positive, got {eta}")

    def balance(log_p: float) -> float:
        p = math.exp(log_p)
        return eta * ellipk_complement(p) - math.pi * ellipk(p)

    lo, hi = math.log(1e-300), math.log1p(-1e-15)
    try:
        log_p = bisect(balance, lo, hi, xtol=tol, maxiter=400)
    except (ValueError, RuntimeError) as e:
        raise EllipticRootFailure(f"Could not solve ηK(ν) = πK'(ν) for η = {eta}: {e}") from e
    return math.exp(log_p)


def xi(phi, p: float, k_nu: float) -> np.ndarray:
    """
    Ξ(φ) in the stable form asinh(√p·sn/dn).

    Args:
        phi: angle(s)
        p: complementary parameter 1 − ν
        k_nu: K(ν)
    """
    sn, _, dn = ellipj(k_nu * np.asarray(phi, dtype=float) / math.pi, p)
    return np.arcsinh(math.sqrt(p) * sn / dn)


def theta0(p: ModelParams, eta: float) -> float:
    """Shift θ0 from e^{θ0} = (1 + M e^η)/(M + e^η), M = max(b/a, a/b)."""
    big = max(p.b / p.a, p.a / p.b)
    return math.log((1.0 + big * math.exp(eta)) / (big + math.exp(eta)))


@dataclass(frozen=True, eq=False)
class AntiferroBoundary:
    """Sampled closed boundary of the antiferroelectric region."""
    eta: float
    theta0: float
    nu: float
    p: float
    k_nu: float
    V0: float
    s: np.ndarray
    H: np.ndarray
    V: np.ndarray

    def point(self, s) -> Tuple[np.ndarray, np.ndarray]:
        """Curve point(s) at parameter s."""
        return (xi(s, self.p, self.k_nu), xi(self.eta - self.theta0 + np.asarray(s, dtype=float), self.p, self.k_nu))

    def xi(self, phi) -> np.ndarray:
        return xi(phi, self.p, self.k_nu)

    def residuals(self) -> np.ndarray:
        """Algebraic curve residual at every sample."""
        return algebraic_residual(self.H, self.V, self.p, self.V0)

    def contains(self, H: float, V: float) -> Tuple[bool, float]:
        """
        Winding-number membership test.

        Returns:
            (inside, distance to the nearest sample)
        """
        dz = (self.H - H) + 1j * (self.V - V)
        distance = float(np.min(np.abs(dz)))
        angles = np.unwrap(np.angle(np.append(dz, dz[0])))
        winding = (angles[-1] - angles[0]) / (2 * math.pi)
        return abs(winding) > 0.5, distance

    def rows(self):
        """CSV rows (s, H, V)."""
        return [(float(s), float(h), float(v)) for s, h, v in zip(self.s, self.H, self.V)]


def algebraic_residual(H, V, p: float, V0: float):
    """
    Residual of the real algebraic form of the boundary curve.

    Factors 1 − ν cosh²x are written as p cosh²x − sinh²x.
    """
    H = np.asarray(H, dtype=float)
    V = np.asarray(V, dtype=float)
    ch_h, ch_v, ch0 = np.cosh(H), np.cosh(V), math.cosh(V0)
    sh_h, sh0 = np.sinh(H), math.sinh(V0)
    f0 = p * ch0 ** 2 - sh0 ** 2
    fh = p * ch_h ** 2 - sh_h ** 2
    lhs = (f0 * ch_h ** 2 + sh0 ** 2 - p * ch0 * ch_h * ch_v) ** 2
    rhs = f0 * sh0 ** 2 * ch_v ** 2 * sh_h ** 2 * fh
    return lhs - rhs


def antiferro_boundary(p: ModelParams, samples: int = 512, tol: float = 1e-13) -> AntiferroBoundary:
    """
    Sample the antiferroelectric boundary curve.

    Args:
        p: parameters with Δ < −1
        samples: number of curve points over one period
        tol: bisection tolerance in log p

    Raises:
        WrongRegime: If Δ >= −1
        EllipticRootFailure: If the modulus equation has no bracketed root
    """
    d = p.delta
    if not d < -1:
        raise WrongRegime(f"Antiferroelectric boundary needs Δ < −1, got {d}")
    eta = math.acosh(-d)
    comp = solve_modulus(eta, tol=tol)
    k_nu = ellipk_complement(comp)
    shift = theta0(p, eta)
    s = np.linspace(-2 * eta, 2 * eta, samples, endpoint=False)
    H = xi(s, comp, k_nu)
    V = xi(eta - shift + s, comp, k_nu)
    V0 = float(xi(eta - shift, comp, k_nu))
    logger.debug(f"Antiferro curve: η={eta:.6g}, 1-ν={comp:.6e}, θ0={shift:.6g}, V0={V0:.6g}")
    return AntiferroBoundary(eta=eta, theta0=shift, nu=1.0 - comp, p=comp, k_nu=k_nu, V0=V0, s=s, H=H, V=V)


def small_eta_xi(phi, eta: float) -> np.ndarray:
    """Leading small-η form Ξ(φ) ≈ 4 e^{−π²/2η} sin(πφ/2η)."""
    return 4.0 * math.exp(-math.pi ** 2 / (2 * eta)) * np.sin(math.pi * np.asarray(phi, dtype=float) / (2 * eta))


def small_eta_theta0(p: ModelParams, eta: float) -> float:
    """Leading small-η form θ0 ≈ η·|b − a|/(a + b)."""
    return eta * abs(p.b - p.a) / (p.a + p.b)
