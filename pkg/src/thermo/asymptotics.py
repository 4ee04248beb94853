"""
Asymptotic formulas near phase boundaries.

Covers the tentacle of the disordered region at large H, the cubic
correction near the frozen interface, the tricritical point for Δ > 1 and
its five-vertex limit.
"""

import logging
import math
from dataclasses import dataclass
from typing import Tuple

from ..model.params import ModelParams, VertexWeights
from ..utils.errors import NotOnInterface, OutOfTentacle, RayOutOfCorner, WrongRegime
from .phases import PhaseLabel, frozen_interface_v, linear_free_energies

logger = logging.getLogger(__name__)


# Tentacle

def tentacle_v(p: ModelParams, H: float, beta: float) -> float:
    """V = ½ ln(b/a) + β (c²/2ab) e^{−2H} across the tentacle."""
    return 0.5 * math.log(p.b / p.a) + beta * p.c ** 2 / (2 * p.a * p.b) * math.exp(-2 * H)


def tentacle_free_energy(p: ModelParams, H: float, beta: float) -> float:
    """
    Large-H free energy inside the tentacle.

    f = −½ ln(ab) − H − (c²/2ab) e^{−2H} (β + (2/π)√(1−β²) − (2/π) β arccos β)

    Raises:
        OutOfTentacle: If |β| > 1
        WrongRegime: If a <= b
    """
    if not -1.0 <= beta <= 1.0:
        raise OutOfTentacle(f"β must lie in [−1, 1], got {beta}")
    if not p.a > p.b:
        raise WrongRegime(f"Tentacle formula needs a > b, got a={p.a}, b={p.b}")
    shape = beta + (2 / math.pi) * math.sqrt(1 - beta * beta) - (2 / math.pi) * beta * math.acos(beta)
    return -0.5 * math.log(p.a * p.b) - H - p.c ** 2 / (2 * p.a * p.b) * math.exp(-2 * H) * shape


def tentacle_alpha(beta: float) -> float:
    """Fraction α = arccos(β)/π of thin vertical edges across the tentacle."""
    if not -1.0 <= beta <= 1.0:
        raise OutOfTentacle(f"β must lie in [−1, 1], got {beta}")
    return math.acos(beta) / math.pi


# Frozen A1 interface g(H, V) = 0

def interface_g(p: ModelParams, H: float, V: float) -> float:
    """g = ln(b/a + k/(e^{2H} − b/a)) − 2V with k = c²/a²; g <= 0 in A1."""
    ratio, k = p.b / p.a, (p.c / p.a) ** 2
    u = math.exp(2 * H) - ratio
    if u <= 0:
        raise NotOnInterface(f"No A1 interface at H = {H}")
    return math.log(ratio + k / u) - 2 * V


def interface_derivatives(p: ModelParams, H: float) -> Tuple[float, float]:
    """(∂_H g, ∂²_H g); g is linear in V with ∂_V g = −2."""
    ratio, k = p.b / p.a, (p.c / p.a) ** 2
    E = math.exp(2 * H)
    u = E - ratio
    if u <= 0:
        raise NotOnInterface(f"No A1 interface at H = {H}")
    Q = ratio + k / u
    D = u * (u * ratio + k)
    g_h = -2 * k * E / (u * u * Q)
    g_hh = 4 * k * E * (E * (2 * u * ratio + k) - D) / D ** 2
    return g_h, g_hh


def interface_v(p: ModelParams, H: float) -> float:
    """V0 with g(H, V0) = 0."""
    V = frozen_interface_v(p, H, PhaseLabel.FROZEN_A1)
    if V is None:
        raise NotOnInterface(f"No A1 interface at H = {H}")
    return V


@dataclass(frozen=True)
class ScalingConstants:
    """Constants of the cubic correction at an interface point."""
    g_h: float
    g_hh: float
    kappa: float
    theta: float


def scaling_constants(p: ModelParams, H0: float) -> ScalingConstants:
    """κ = (16/3π) ∂²_H g and θ = (4 + (∂_H g)²) / (2 ∂²_H g) at H0."""
    g_h, g_hh = interface_derivatives(p, H0)
    return ScalingConstants(g_h=g_h, g_hh=g_hh, kappa=16.0 / (3 * math.pi) * g_hh,
                            theta=(4.0 + g_h * g_h) / (2 * g_hh))


def scaling_point(p: ModelParams, H0: float, V0: float, r: float, s: float, t: float) -> Tuple[float, float]:
    """(H0, V0) + r²s(∂_H g, −2) + rt(2, ∂_H g)."""
    g_h, _ = interface_derivatives(p, H0)
    return H0 + r * r * s * g_h + 2 * r * t, V0 - 2 * r * r * s + r * t * g_h


def scaling_eta(p: ModelParams, H0: float, s: float, t: float) -> float:
    """η(s, t) = −κ (θs + t²)^{3/2}, zero on the frozen side."""
    k = scaling_constants(p, H0)
    inside = k.theta * s + t * t
    return -k.kappa * inside ** 1.5 if inside > 0 else 0.0


def boundary_scaling(p: ModelParams, H0: float, V0: float, r: float, s: float, t: float,
                     tol: float = 1e-9) -> float:
    """
    f_lin + η(s, t) r³ at the scaled point near the interface.

    Args:
        p: weights (fields ignored)
        H0, V0: point on the A1 interface
        r, s, t: scaling coordinates

    Raises:
        NotOnInterface: If |g(H0, V0)| > tol
    """
    g = interface_g(p, H0, V0)
    if abs(g) > tol:
        raise NotOnInterface(f"g(H0, V0) = {g:.3e} exceeds {tol:.1e}")
    H, V = scaling_point(p, H0, V0, r, s, t)
    f_lin = linear_free_energies(p.with_fields(H, V))[PhaseLabel.FROZEN_A1]
    return f_lin + scaling_eta(p, H0, s, t) * r ** 3


# Tricritical point

def _require_ferro(p: ModelParams) -> float:
    d = p.delta
    if not d > 1:
        raise WrongRegime(f"Tricritical point needs Δ > 1, got {d}")
    return d


def tricritical_angle(p: ModelParams) -> float:
    """arccos(c² / (c² + 2 min(a, b)² (Δ² − 1)))."""
    d = _require_ferro(p)
    c2 = p.c ** 2
    return math.acos(c2 / (c2 + 2 * min(p.a, p.b) ** 2 * (d * d - 1)))


def tricritical_point(p: ModelParams) -> Tuple[float, float]:
    """(H, V) where two frozen phases meet the disordered region at a corner."""
    d = _require_ferro(p)
    H = 0.5 * math.acosh(d)
    return (H, -H) if p.a > p.b else (H, H)


def numeric_tricritical_angle(p: ModelParams, step: float = 1e-6) -> float:
    """Angle between the two interface tangents at the tricritical point by central differences."""
    H, _ = tricritical_point(p)
    labels = (PhaseLabel.FROZEN_A1, PhaseLabel.FROZEN_A2) if p.a > p.b else (PhaseLabel.FROZEN_B1, PhaseLabel.FROZEN_B2)
    slopes = []
    for label in labels:
        up = frozen_interface_v(p, H + step, label)
        down = frozen_interface_v(p, H - step, label)
        slopes.append((up - down) / (2 * step))
    s1, s2 = slopes
    cos_angle = (1 + s1 * s2) / math.sqrt((1 + s1 * s1) * (1 + s2 * s2))
    return math.acos(min(1.0, max(-1.0, cos_angle)))


# Five-vertex limit

def five_vertex_weights(lam: float, l: float, m: float) -> VertexWeights:
    """Limit ratios e^{λ+l+m} : e^{λ−l−m} : (e^λ − e^{−λ})e^{l−m} : 0 : 1 : 1."""
    return VertexWeights(
        a1=math.exp(lam + l + m),
        a2=math.exp(lam - l - m),
        b1=(math.exp(lam) - math.exp(-lam)) * math.exp(l - m),
        b2=0.0,
        c1=1.0,
        c2=1.0,
    )


def five_vertex_phase(gamma: float, l: float, m: float) -> PhaseLabel:
    """Frozen region A1, A2, B1 of the five-vertex amoeba or Disordered."""
    if not 0 < gamma < 1:
        raise WrongRegime(f"γ must lie in (0, 1), got {gamma}")
    if l <= 0:
        if m >= -l:
            return PhaseLabel.FROZEN_A1
        return PhaseLabel.FROZEN_A2
    if math.exp(2 * m) >= 1 - gamma * (1 - math.exp(-2 * l)):
        return PhaseLabel.FROZEN_A1
    if math.exp(2 * m) <= 1 - (1 - math.exp(-2 * l)) / gamma:
        return PhaseLabel.FROZEN_A2
    edge = 1.0 / (1.0 - gamma)
    if math.exp(2 * l) > edge and (math.exp(2 * l) - edge) * (math.exp(-2 * m) - edge) >= gamma * edge ** 2:
        return PhaseLabel.FROZEN_B1
    return PhaseLabel.DISORDERED


def five_vertex_coefficients(gamma: float, k: float) -> Tuple[float, float]:
    """
    Coefficients (c1, c2) of f(l, −kl) = c1 l + c2 l^{5/3} near the tricritical point.

    Raises:
        RayOutOfCorner: If k is outside [γ, 1/γ] or γ outside (0, 1)
    """
    if not 0 < gamma < 1:
        raise RayOutOfCorner(f"γ must lie in (0, 1), got {gamma}")
    if not gamma <= k <= 1 / gamma:
        raise RayOutOfCorner(f"Ray slope {k} outside [{gamma}, {1 / gamma}]")
    root_k, root_g = math.sqrt(k), math.sqrt(gamma)
    c1 = (-(1 + k) * (1 + gamma) + 4 * math.sqrt(k * gamma)) / (1 - gamma)
    # Real 4/3 powers of the possibly negative bases
    top = ((root_k - 1 / root_g) ** 2) ** (2.0 / 3.0)
    bottom = ((root_k - root_g) ** 2) ** (2.0 / 3.0)
    if bottom == 0:
        raise RayOutOfCorner("c2 diverges on the ray k = γ")
    c2 = (6 * math.pi) ** (2.0 / 3.0) * 2 * gamma ** (5.0 / 6.0) * (1 - gamma) * k ** 1.5 * top / (5 * bottom)
    return c1, c2


def five_vertex_tricritical(gamma: float, k: float, l: float) -> float:
    """c1(k, γ) l + c2(k, γ) l^{5/3}."""
    c1, c2 = five_vertex_coefficients(gamma, k)
    return c1 * l + c2 * abs(l) ** (5.0 / 3.0) * math.copysign(1.0, l)
