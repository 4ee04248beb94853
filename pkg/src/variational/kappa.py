"""
Crease profiles of the minimizer for large |λ|.

Near a line where two planes of φ_min (λ → +∞) or φ_max (λ → −∞) meet,
the rescaled minimizer is l·(r, s) + κ(d·(r, s)) with d = k − l the jump of
the gradient. The derivative g = κ′ solves

    Σ_i d_i ∂σ/∂u_i(l + g d) = sign(λ)·t + C.

Gradients of the height function are (φ_x, φ_y) = (v, h), so the left side
is 2(d_x V + d_y H) at the conjugate fields; on creases with |d_x| = |d_y| = 1
those fields lie on the line (H, V) = τ(d_y, d_x) with τ = (sign·t + C)/4.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.optimize import bisect

from ..model.params import ModelParams
from ..thermo.antiferro import antiferro_boundary, small_eta_theta0, small_eta_xi
from ..thermo.free_energy import BetheFreeEnergy, free_energy, slope
from ..thermo.phases import PhaseLabel, classify_phase, linear_free_energies
from ..utils.errors import RootBracketFailure, WrongRegime

logger = logging.getLogger(__name__)

Plane = Tuple[int, int]

# Frozen phase whose slope (v, h) equals a plane gradient (φ_x, φ_y)
_PLANE_PHASE = {
    (0, 0): PhaseLabel.FROZEN_A2,
    (1, 1): PhaseLabel.FROZEN_A1,
    (1, 0): PhaseLabel.FROZEN_B2,
    (0, 1): PhaseLabel.FROZEN_B1,
}


def _crease(k: Plane, l: Plane) -> Tuple[int, int]:
    if any(x not in (0, 1) for x in (*k, *l)):
        raise ValueError(f"Plane gradients must have entries in {{0, 1}}, got {k} and {l}")
    d = (k[0] - l[0], k[1] - l[1])
    if d == (0, 0):
        raise ValueError("Planes must differ")
    if 0 in d:
        raise WrongRegime(f"σ is linear along the edge segment for d = {d}; no smooth crease profile")
    return d


def crease_fields(k: Plane, l: Plane, t: float, C: float = 0.0, sign: int = 1) -> Tuple[float, float]:
    """Conjugate fields (H, V) on the crease at profile coordinate t."""
    d = _crease(k, l)
    tau = (sign * t + C) / 4.0
    return tau * d[1], tau * d[0]


@dataclass(eq=False)
class KappaProfile:
    """κ and g = κ′ sampled on a grid of t."""
    k: Plane
    l: Plane
    C: float
    sign: int
    t: np.ndarray
    g: np.ndarray
    kappa: np.ndarray
    phases: List[PhaseLabel] = field(default_factory=list)

    def facet(self, tol: float = 1e-9) -> Optional[Tuple[float, float]]:
        """Extent in t of the antiferroelectric flat stretch with g = ½, if any."""
        flat = [i for i, (g, ph) in enumerate(zip(self.g, self.phases))
                if abs(g - 0.5) <= tol and ph is PhaseLabel.ANTIFERRO_A]
        if not flat:
            return None
        return float(self.t[flat[0]]), float(self.t[flat[-1]])

    def ode_residual(self) -> np.ndarray:
        """
        κ″·S(κ′) − 1 on interior points where g moves.

        κ″ comes from the sampled κ and S = dΣ/dg from the sampled (t, g) pairs.
        """
        kappa2 = np.gradient(np.gradient(self.kappa, self.t), self.t)
        dg = np.gradient(self.g, self.t)
        moving = np.abs(dg) > 1e-6
        moving[:2] = moving[-2:] = False
        S = np.full_like(self.t, np.nan)
        S[moving] = self.sign / dg[moving]
        return self.sign * kappa2[moving] * S[moving] - 1.0

    def rows(self) -> List[Tuple[float, float, float]]:
        return [(float(t), float(g), float(k)) for t, g, k in zip(self.t, self.g, self.kappa)]


def kappa_closed_form(p: ModelParams, k: Plane, l: Plane, t, C: float = 0.0, sign: int = 1,
                      evaluator: Optional[BetheFreeEnergy] = None) -> np.ndarray:
    """
    κ(t) = c0·t − sign·f(H(t), V(t)) + const with c0 = (d_x + d_y − 2 l·d)/4.

    The constant makes κ vanish on the l side, where f is the linear free
    energy of the frozen phase with slope l.
    """
    d = _crease(k, l)
    c0 = (d[0] + d[1] - 2 * (l[0] * d[0] + l[1] * d[1])) / 4.0
    H0, V0 = crease_fields(k, l, 0.0, C, sign)
    f_plane = linear_free_energies(p.with_fields(H0, V0))[_PLANE_PHASE[l]]
    const = sign * f_plane
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty_like(ts)
    for i, tv in enumerate(ts):
        H, V = crease_fields(k, l, float(tv), C, sign)
        out[i] = c0 * tv - sign * free_energy(p.with_fields(H, V), evaluator).f + const
    return out if np.ndim(t) else out[0]


def kappa_profile(p: ModelParams, k: Plane, l: Plane, C: float = 0.0, t: Optional[Sequence[float]] = None,
                  sign: int = 1, evaluator: Optional[BetheFreeEnergy] = None) -> KappaProfile:
    """
    Solve for g(t) on a grid and integrate it to κ.

    g is read off the slope at the conjugate fields of each t, which is the
    monotone inverse of Σ_i d_i ∂σ/∂u_i along the segment l + g·d. κ is
    fixed to zero at the grid end on the l side.

    Args:
        p: weights (fields ignored)
        k, l: gradients of the two planes, entries in {0, 1}
        C: integration constant
        t: profile grid, default 201 points on [−6, 6]
        sign: sign of λ
    """
    if sign not in (1, -1):
        raise ValueError(f"sign must be ±1, got {sign}")
    d = _crease(k, l)
    ts = np.linspace(-6.0, 6.0, 201) if t is None else np.asarray(t, dtype=float)
    g = np.empty_like(ts)
    phases = []
    for i, tv in enumerate(ts):
        H, V = crease_fields(k, l, float(tv), C, sign)
        q = p.with_fields(H, V)
        phases.append(classify_phase(q).label)
        h, v = slope(q, evaluator)
        g[i] = ((v - l[0]) * d[0] + (h - l[1]) * d[1]) / 2.0
    if sign > 0:
        kappa = cumulative_trapezoid(g, ts, initial=0.0)
    else:
        kappa = cumulative_trapezoid(g[::-1], ts[::-1], initial=0.0)[::-1]
    logger.debug(f"κ profile d={d} sign={sign}: g in [{g.min():.4f}, {g.max():.4f}]")
    return KappaProfile(k=k, l=l, C=C, sign=sign, t=ts, g=g, kappa=kappa, phases=phases)


def dw_kappa(p: ModelParams, t, lam_sign: int = 1, evaluator: Optional[BetheFreeEnergy] = None) -> np.ndarray:
    """
    Domain-wall crease profile with C = 0.

    λ > 0: κ(t) = t/2 − f(t/4, t/4) − ln a across the φ_min crease x + y = 1.
    λ < 0: κ(t) = t/2 + f(−t/4, t/4) + ln b across the φ_max crease x = y.
    """
    if lam_sign > 0:
        return kappa_closed_form(p, (1, 1), (0, 0), t, 0.0, 1, evaluator)
    return kappa_closed_form(p, (0, 1), (1, 0), t, 0.0, -1, evaluator)


def dw_lambda_asymptotic(p: ModelParams, lam: float, x0: float, r: float, s: float,
                         evaluator: Optional[BetheFreeEnergy] = None) -> float:
    """
    Leading large-|λ| minimizer for domain-wall boundary values.

    λ > 0: at (x0 + r/λ, 1 − x0 + s/λ), φ_min + (κ₊(r + s) − max(0, r + s))/λ.
    λ < 0: at (x0 + r/|λ|, x0 + s/|λ|), φ_max + (κ₋(s − r) − min(0, s − r))/|λ|.
    """
    if lam == 0:
        raise ValueError("λ must be nonzero")
    mu = abs(lam)
    if lam > 0:
        x, y = x0 + r / mu, 1.0 - x0 + s / mu
        t = r + s
        return max(0.0, x + y - 1.0) + (float(dw_kappa(p, t, 1, evaluator)) - max(0.0, t)) / mu
    x, y = x0 + r / mu, x0 + s / mu
    t = s - r
    return min(x, y) + (float(dw_kappa(p, t, -1, evaluator)) - min(0.0, t)) / mu


def _require_antiferro(p: ModelParams) -> float:
    d = p.delta
    if not d < -1:
        raise WrongRegime(f"Facets need Δ < −1, got {d}")
    return math.acosh(-d)


def facet_width(p: ModelParams) -> float:
    """
    R = √2·|Ξ((η + θ0)/2)|, the distance from the origin to the diagonal
    point of the antiferroelectric curve.

    Raises:
        WrongRegime: If Δ >= −1
    """
    _require_antiferro(p)
    curve = antiferro_boundary(p)
    return math.sqrt(2.0) * abs(float(curve.xi(0.5 * (curve.eta + curve.theta0))))


def facet_width_small_eta(p: ModelParams) -> float:
    """R ≈ 4√2 e^{−π²/2η} sin(π max(a, b)/(2(a + b))) as η → 0."""
    eta = _require_antiferro(p)
    return math.sqrt(2.0) * abs(float(small_eta_xi(0.5 * (eta + small_eta_theta0(p, eta)), eta)))


def facet_interval(p: ModelParams, t_max: float = 20.0, xtol: float = 1e-10) -> Tuple[float, float]:
    """
    Flat stretch of the domain-wall κ₊ profile, found by bisecting the
    antiferroelectric membership along H = V = t/4.

    Its length is 8·R/√2 in the t normalization used here.

    Raises:
        WrongRegime: If Δ >= −1
        RootBracketFailure: If the diagonal leaves the region nowhere inside |t| <= t_max
    """
    _require_antiferro(p)

    def inside(t: float) -> float:
        q = p.with_fields(t / 4.0, t / 4.0)
        return 1.0 if classify_phase(q).label is PhaseLabel.ANTIFERRO_A else -1.0

    if inside(0.0) < 0:
        raise RootBracketFailure("Origin is outside the antiferroelectric region")
    if inside(t_max) > 0 or inside(-t_max) > 0:
        raise RootBracketFailure(f"Antiferroelectric region extends past |t| = {t_max}")
    upper = bisect(inside, 0.0, t_max, xtol=xtol)
    lower = bisect(inside, -t_max, 0.0, xtol=xtol)
    return lower, upper


def exit_exponent(t: np.ndarray, kappa: np.ndarray, edge: float, window: float = 0.5) -> float:
    """
    Exponent of κ(t) − κ(edge) − ½(t − edge) just past a facet edge, from a
    log-log least-squares fit over (edge, edge + window].
    """
    t = np.asarray(t, dtype=float)
    kappa = np.asarray(kappa, dtype=float)
    k_edge = float(np.interp(edge, t, kappa))
    mask = (t > edge) & (t <= edge + window)
    excess = np.abs(kappa[mask] - k_edge - 0.5 * (t[mask] - edge))
    keep = excess > 0
    if keep.sum() < 3:
        raise RootBracketFailure("Too few points past the facet edge for an exponent fit")
    slope_fit, _ = np.polyfit(np.log(t[mask][keep] - edge), np.log(excess[keep]), 1)
    return float(slope_fit)
