"""
Tests for Δ regimes and the (H, V) phase diagram.
"""

import math

import numpy as np
import pytest

from src.model.params import ModelParams
from src.thermo.phases import (
    FROZEN_LABELS,
    PhaseLabel,
    Regime,
    classify_phase,
    delta,
    free_energy_frozen,
    frozen_interface_v,
    frozen_margins,
    linear_free_energies,
    phase_boundary_curves,
    phase_grid,
    reconstruct_weights,
)
from src.utils.errors import DegenerateParam, WrongPhase


@pytest.mark.parametrize("weights,regime", [
    ((1.0, 2.0, 2.0), Regime.ABS_LT1),
    ((1.0, 1.0, 1.6), Regime.ABS_LT1),
    ((2.0, 1.0, 0.8), Regime.GT1_A),
    ((1.0, 2.0, 0.8), Regime.GT1_B),
    ((1.0, 2.0, 6.0), Regime.LT_NEG1),
])
def test_parameterization_reproduces_weights(weights, regime):
    result = delta(ModelParams(*weights))
    assert result.regime is regime
    assert reconstruct_weights(result) == pytest.approx(weights, rel=1e-10)


def test_antiferro_delta(antiferro_params):
    assert delta(antiferro_params).delta == pytest.approx(-31 / 4)


def test_degenerate_delta_is_reported():
    with pytest.raises(DegenerateParam) as info:
        delta(ModelParams(2.0, 1.0, 1.0))
    assert info.value.delta == pytest.approx(1.0)
    assert info.value.regime.degenerate


@pytest.mark.parametrize("H,V,label", [
    (3.0, 3.0, PhaseLabel.FROZEN_A1),
    (-3.0, -3.0, PhaseLabel.FROZEN_A2),
    (3.0, -3.0, PhaseLabel.FROZEN_B1),
    (-3.0, 3.0, PhaseLabel.FROZEN_B2),
    (0.0, 0.0, PhaseLabel.DISORDERED),
])
def test_classify_disordered_regime(disordered_params, H, V, label):
    result = classify_phase(disordered_params.with_fields(H, V))
    assert result.label is label
    assert not result.on_boundary


def test_ferroelectric_line_splits_a_phases(ferro_params):
    assert classify_phase(ferro_params.with_fields(0.0, 0.5)).label is PhaseLabel.FROZEN_A1
    assert classify_phase(ferro_params.with_fields(0.0, -0.5)).label is PhaseLabel.FROZEN_A2
    on_line = classify_phase(ferro_params)
    assert on_line.label.is_frozen
    assert on_line.on_boundary


def test_antiferro_origin(antiferro_params):
    assert classify_phase(antiferro_params).label is PhaseLabel.ANTIFERRO_A
    assert classify_phase(antiferro_params.with_fields(4.0, 4.0)).label is PhaseLabel.FROZEN_A1


@pytest.mark.parametrize("label", FROZEN_LABELS)
@pytest.mark.parametrize("H", [-2.0, 0.5, 2.0])
def test_interface_lies_on_the_equality_curve(disordered_params, label, H):
    V = frozen_interface_v(disordered_params, H, label)
    if V is None:
        assert not frozen_margins(disordered_params.with_fields(H, 0.0))[label][1]
        return
    margin, side = frozen_margins(disordered_params.with_fields(H, V))[label]
    assert side
    assert margin == pytest.approx(0.0, abs=1e-9)
    result = classify_phase(disordered_params.with_fields(H, V), eps_phase=1e-6)
    assert result.on_boundary


def test_phase_boundary_curves(disordered_params):
    curves = phase_boundary_curves(disordered_params, -3.0, 3.0, samples=50)
    assert set(curves) == set(FROZEN_LABELS)
    for rows in curves.values():
        assert rows.shape[1] == 2
        assert 0 < len(rows) <= 50


def test_phase_grid_has_one_label_per_point(disordered_params):
    hs = np.linspace(-2.0, 2.0, 5)
    grid = phase_grid(disordered_params, hs, hs)
    assert len(grid) == 5 and all(len(row) == 5 for row in grid)
    labels = {cell.label for row in grid for cell in row}
    assert PhaseLabel.DISORDERED in labels
    assert labels <= set(PhaseLabel)


def test_linear_free_energies(disordered_params):
    p = disordered_params.with_fields(0.3, 0.2)
    f = linear_free_energies(p)
    assert f[PhaseLabel.FROZEN_A1] == pytest.approx(-0.5)
    assert f[PhaseLabel.FROZEN_B1] == pytest.approx(-math.log(2.0) - 0.1)
    assert free_energy_frozen(p, PhaseLabel.FROZEN_B2) == pytest.approx(-math.log(2.0) + 0.1)
    with pytest.raises(WrongPhase):
        free_energy_frozen(p, PhaseLabel.DISORDERED)
    with pytest.raises(WrongPhase):
        frozen_interface_v(p, 0.0, PhaseLabel.ANTIFERRO_A)
