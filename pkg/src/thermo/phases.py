"""
Δ regimes, weight parameterizations and the phase diagram in the (H, V) plane.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..model.params import ModelParams
from ..utils.errors import DegenerateParam, WrongPhase

logger = logging.getLogger(__name__)

EPS_PHASE = 1e-9


class Regime(str, Enum):
    GT1_A = "GT1_a"
    GT1_B = "GT1_b"
    ABS_LT1 = "ABS_LT1"
    LT_NEG1 = "LT_NEG1"


class PhaseLabel(str, Enum):
    FROZEN_A1 = "FrozenA1"
    FROZEN_A2 = "FrozenA2"
    FROZEN_B1 = "FrozenB1"
    FROZEN_B2 = "FrozenB2"
    DISORDERED = "Disordered"
    ANTIFERRO_A = "AntiferroA"

    @property
    def is_frozen(self) -> bool:
        return self in FROZEN_LABELS


FROZEN_LABELS = (PhaseLabel.FROZEN_A1, PhaseLabel.FROZEN_A2, PhaseLabel.FROZEN_B1, PhaseLabel.FROZEN_B2)


@dataclass(frozen=True)
class DeltaRegime:
    """Δ, its regime and the constants of the matching weight parameterization.

    ``constants`` holds r and λ plus η (hyperbolic regimes) or γ (|Δ| < 1).
    """
    delta: float
    regime: Regime
    constants: Dict[str, float] = field(default_factory=dict)
    degenerate: bool = False


def delta(p: ModelParams) -> DeltaRegime:
    """
    Anisotropy, regime label and parameterization constants.

    Args:
        p: model parameters

    Returns:
        DeltaRegime

    Raises:
        DegenerateParam: At Δ = ±1 exactly; the unparameterized regime is attached
    """
    a, b, c = p.a, p.b, p.c
    d = p.delta
    if d > 1:
        regime = Regime.GT1_A if a > b else Regime.GT1_B
    elif d < -1:
        regime = Regime.LT_NEG1
    elif abs(d) < 1:
        regime = Regime.ABS_LT1
    else:
        regime = Regime.GT1_A if a > b else Regime.GT1_B
        if d < 0:
            regime = Regime.LT_NEG1
    if math.isclose(abs(d), 1.0, rel_tol=0.0, abs_tol=1e-14):
        raise DegenerateParam(d, DeltaRegime(delta=d, regime=regime, degenerate=True))

    if regime is Regime.GT1_A:
        # a = r sinh(λ+η), b = r sinh λ, c = r sinh η
        eta = math.acosh(d)
        lam = math.atanh(math.sinh(eta) / (a / b - math.cosh(eta)))
        constants = {"eta": eta, "lambda": lam, "r": c / math.sinh(eta)}
    elif regime is Regime.GT1_B:
        # a = r sinh(λ−η), b = r sinh λ, c = r sinh η
        eta = math.acosh(d)
        lam = math.atanh(math.sinh(eta) / (math.cosh(eta) - a / b))
        constants = {"eta": eta, "lambda": lam, "r": c / math.sinh(eta)}
    elif regime is Regime.ABS_LT1:
        if d >= 0:
            # a = r sin(λ−γ), b = r sin λ, c = r sin γ, Δ = cos γ
            gamma = math.acos(d)
            lam = math.atan2(math.sin(gamma), math.cos(gamma) - a / b)
        else:
            # a = r sin(γ−λ), Δ = −cos γ
            gamma = math.acos(-d)
            lam = math.atan2(math.sin(gamma), a / b + math.cos(gamma))
        constants = {"gamma": gamma, "lambda": lam, "r": c / math.sin(gamma)}
    else:
        # a = r sinh(η−λ), b = r sinh λ, c = r sinh η, Δ = −cosh η
        eta = math.acosh(-d)
        lam = math.atanh(b * math.sinh(eta) / (a + b * math.cosh(eta)))
        constants = {"eta": eta, "lambda": lam, "r": c / math.sinh(eta)}
    logger.debug(f"Δ = {d:.12g}, regime {regime.value}, constants {constants}")
    return DeltaRegime(delta=d, regime=regime, constants=constants)


def reconstruct_weights(regime: DeltaRegime) -> Tuple[float, float, float]:
    """Weights (a, b, c) rebuilt from a regime's parameterization constants."""
    k = regime.constants
    r, lam = k["r"], k["lambda"]
    if regime.regime is Regime.GT1_A:
        eta = k["eta"]
        return r * math.sinh(lam + eta), r * math.sinh(lam), r * math.sinh(eta)
    if regime.regime is Regime.GT1_B:
        eta = k["eta"]
        return r * math.sinh(lam - eta), r * math.sinh(lam), r * math.sinh(eta)
    if regime.regime is Regime.LT_NEG1:
        eta = k["eta"]
        return r * math.sinh(eta - lam), r * math.sinh(lam), r * math.sinh(eta)
    gamma = k["gamma"]
    if regime.delta >= 0:
        return r * math.sin(lam - gamma), r * math.sin(lam), r * math.sin(gamma)
    return r * math.sin(gamma - lam), r * math.sin(lam), r * math.sin(gamma)


def linear_free_energies(p: ModelParams) -> Dict[PhaseLabel, float]:
    """Free energies of the four frozen configurations at the fields of ``p``."""
    a, b, H, V = p.a, p.b, p.H, p.V
    return {
        PhaseLabel.FROZEN_A1: -math.log(a) - H - V,
        PhaseLabel.FROZEN_A2: -math.log(a) + H + V,
        PhaseLabel.FROZEN_B1: -math.log(b) - H + V,
        PhaseLabel.FROZEN_B2: -math.log(b) + H - V,
    }


def free_energy_frozen(p: ModelParams, label: PhaseLabel) -> float:
    """
    Linear free energy of a frozen phase.

    Raises:
        WrongPhase: If ``label`` is not a frozen phase
    """
    if not label.is_frozen:
        raise WrongPhase(f"{label.value} is not a frozen phase")
    return linear_free_energies(p)[label]


def _product_margin(x: float, y: float, ratio: float, rhs: float) -> Tuple[float, bool]:
    # (x − ratio)(y − ratio) − rhs with the side condition x > ratio
    return (x - ratio) * (y - ratio) - rhs, x > ratio


def frozen_margins(p: ModelParams) -> Dict[PhaseLabel, Tuple[float, bool]]:
    """
    Signed margins of the four frozen inequalities.

    Returns:
        label -> (margin, side condition); the point is in the phase when the
        side condition holds and margin >= 0
    """
    a, b, c, H, V = p.a, p.b, p.c, p.H, p.V
    return {
        PhaseLabel.FROZEN_A1: _product_margin(math.exp(2 * H), math.exp(2 * V), b / a, (c / a) ** 2),
        PhaseLabel.FROZEN_A2: _product_margin(math.exp(-2 * H), math.exp(-2 * V), b / a, (c / a) ** 2),
        PhaseLabel.FROZEN_B1: _product_margin(math.exp(2 * H), math.exp(-2 * V), a / b, (c / b) ** 2),
        PhaseLabel.FROZEN_B2: _product_margin(math.exp(-2 * H), math.exp(2 * V), a / b, (c / b) ** 2),
    }


@dataclass(frozen=True)
class PhaseResult:
    """Phase label with a flag for points within ε_phase of a boundary."""
    label: PhaseLabel
    on_boundary: bool = False


def _ferro_line_phases(p: ModelParams, d: float) -> Dict[PhaseLabel, Tuple[float, bool]]:
    # Extra linear pieces for Δ > 1: A1/A2 split by V + H = 0 (a > b + c),
    # B1/B2 split by V − H = 0 (b > a + c), both while cosh 2H <= Δ
    if math.cosh(2 * p.H) > d:
        return {}
    if p.a > p.b:
        s = p.V + p.H
        return {PhaseLabel.FROZEN_A1: (s, True), PhaseLabel.FROZEN_A2: (-s, True)}
    s = p.V - p.H
    return {PhaseLabel.FROZEN_B1: (s, True), PhaseLabel.FROZEN_B2: (-s, True)}


def classify_phase(p: ModelParams, eps_phase: float = EPS_PHASE,
                   antiferro_samples: int = 2048) -> PhaseResult:
    """
    Phase of the translation-invariant Gibbs measure at the fields of ``p``.

    Args:
        p: model parameters
        eps_phase: margin below which a point is flagged as on a boundary
        antiferro_samples: curve samples used for the Δ < −1 membership test

    Returns:
        PhaseResult with exactly one label
    """
    d = p.delta
    margins = frozen_margins(p)
    if d > 1:
        line = _ferro_line_phases(p, d)
        if line:
            # Inside the band cosh 2H <= Δ the line splits the two ferroelectric phases
            for label in line:
                margins[label] = line[label]
            other = [lab for lab in FROZEN_LABELS if lab not in line]
            for lab in other:
                margin, side = margins[lab]
                if side and margin >= 0:
                    return PhaseResult(lab, on_boundary=abs(margin) <= eps_phase)
            label, (margin, _) = max(line.items(), key=lambda item: item[1][0])
            return PhaseResult(label, on_boundary=abs(margin) <= eps_phase)

    near = False
    for label in FROZEN_LABELS:
        margin, side = margins[label]
        if side and margin >= 0:
            return PhaseResult(label, on_boundary=margin <= eps_phase)
        if side and abs(margin) <= eps_phase:
            near = True

    if d < -1:
        from .antiferro import antiferro_boundary
        curve = antiferro_boundary(p, samples=antiferro_samples)
        inside, distance = curve.contains(p.H, p.V)
        if inside:
            return PhaseResult(PhaseLabel.ANTIFERRO_A, on_boundary=distance <= eps_phase)
        near = near or distance <= eps_phase
    return PhaseResult(PhaseLabel.DISORDERED, on_boundary=near)


def phase_grid(p: ModelParams, h_values: np.ndarray, v_values: np.ndarray,
               eps_phase: float = EPS_PHASE) -> List[List[PhaseResult]]:
    """Phase labels on a rectangular (H, V) grid, indexed [i_H][i_V]."""
    return [[classify_phase(p.with_fields(float(H), float(V)), eps_phase=eps_phase) for V in v_values]
            for H in h_values]


def frozen_interface_v(p: ModelParams, H: float, label: PhaseLabel) -> Optional[float]:
    """
    V on the equality curve of a frozen inequality at a given H.

    Returns:
        The boundary V, or None when the side condition fails at this H
    """
    a, b, c = p.a, p.b, p.c
    if label is PhaseLabel.FROZEN_A1:
        x = math.exp(2 * H) - b / a
        return 0.5 * math.log(b / a + (c / a) ** 2 / x) if x > 0 else None
    if label is PhaseLabel.FROZEN_A2:
        x = math.exp(-2 * H) - b / a
        return -0.5 * math.log(b / a + (c / a) ** 2 / x) if x > 0 else None
    if label is PhaseLabel.FROZEN_B1:
        x = math.exp(2 * H) - a / b
        return -0.5 * math.log(a / b + (c / b) ** 2 / x) if x > 0 else None
    if label is PhaseLabel.FROZEN_B2:
        x = math.exp(-2 * H) - a / b
        return 0.5 * math.log(a / b + (c / b) ** 2 / x) if x > 0 else None
    raise WrongPhase(f"{label.value} has no frozen interface")


def phase_boundary_curves(p: ModelParams, h_min: float, h_max: float,
                          samples: int = 400) -> Dict[PhaseLabel, np.ndarray]:
    """
    Polylines of the four frozen interfaces inside an H window.

    Returns:
        label -> array of (H, V) rows where the interface exists
    """
    curves = {}
    for label in FROZEN_LABELS:
        rows = []
        for H in np.linspace(h_min, h_max, samples):
            V = frozen_interface_v(p, float(H), label)
            if V is not None:
                rows.append((float(H), V))
        curves[label] = np.array(rows).reshape(-1, 2)
    return curves
