"""
Tests for the free energy in every phase.
"""

import math

import numpy as np
import pytest

from src.model.params import ModelParams
from src.model.transfer_matrix import transfer_matrix_free_energy
from src.thermo.density import DensitySolver
from src.thermo.free_energy import (
    BetheFreeEnergy,
    _free_fermion_1d,
    antiferro_zero_field_free_energy,
    free_energy,
    free_energy_free_fermion,
    free_fermion_double_integral,
    free_energy_gradient,
    free_fermion_alpha,
    hessian,
    slope,
    zero_field_free_energy,
)
from src.thermo.phases import PhaseLabel, classify_phase, frozen_interface_v, linear_free_energies
from src.utils.errors import NotFreeFermion, WrongRegime

FREE_FERMION_POINTS = [
    ModelParams(1.0, 1.0, math.sqrt(2.0)),
    ModelParams(1.0, 1.5, math.sqrt(3.25), H=0.1, V=-0.2),
    ModelParams(1.3, 0.7, math.sqrt(2.18), H=-0.15, V=0.1),
]


@pytest.mark.parametrize("p", FREE_FERMION_POINTS[:2])
def test_free_fermion_quadratures_agree(p):
    # check=True also evaluates the double integral and raises on disagreement
    assert free_energy_free_fermion(p, check=True) == pytest.approx(_free_fermion_1d(p))


def _free_fermion_sample(count=20, seed=2024):
    rng = np.random.default_rng(seed)
    points = []
    while len(points) < count:
        a, b = rng.uniform(0.5, 2.0, size=2)
        H, V = rng.uniform(-0.6, 0.6, size=2)
        p = ModelParams(float(a), float(b), math.hypot(a, b), H=float(H), V=float(V))
        if classify_phase(p).label is PhaseLabel.DISORDERED:
            points.append(p)
    # Just inside each frozen boundary
    for a, b, H, label in [(1.0, 1.0, 1.0, PhaseLabel.FROZEN_A1), (1.0, 1.5, -1.2, PhaseLabel.FROZEN_A2),
                           (1.5, 1.0, 1.2, PhaseLabel.FROZEN_B1), (1.0, 1.0, -1.0, PhaseLabel.FROZEN_B2)]:
        p = ModelParams(a, b, math.hypot(a, b), H=H)
        V = frozen_interface_v(p, H, label)
        inward = -0.02 if label in (PhaseLabel.FROZEN_A1, PhaseLabel.FROZEN_B2) else 0.02
        points.append(p.with_fields(H, V + inward))
    return points


@pytest.mark.slow
@pytest.mark.parametrize("p", _free_fermion_sample(), ids=lambda p: f"a={p.a:.3f},b={p.b:.3f},H={p.H:.3f},V={p.V:.3f}")
def test_free_fermion_paths_agree_pairwise(p):
    assert classify_phase(p).label is PhaseLabel.DISORDERED
    one_d = free_energy_free_fermion(p, check=False)
    two_d = free_fermion_double_integral(p)
    contour = BetheFreeEnergy().minimize(p).f
    assert one_d == pytest.approx(two_d, abs=1e-6)
    assert contour == pytest.approx(one_d, abs=1e-6)
    assert contour == pytest.approx(two_d, abs=1e-6)


def test_free_fermion_requires_zero_delta(disordered_params):
    with pytest.raises(NotFreeFermion):
        free_energy_free_fermion(disordered_params)


@pytest.mark.parametrize("p", FREE_FERMION_POINTS)
def test_contour_solver_reproduces_free_fermion(p, fast_evaluator):
    assert fast_evaluator.minimize(p).f == pytest.approx(_free_fermion_1d(p), abs=1e-6)


def test_ice_entropy():
    assert zero_field_free_energy(ModelParams(1.0, 1.0, 1.0)) == pytest.approx(-1.5 * math.log(4.0 / 3.0), rel=1e-8)


@pytest.mark.parametrize("a,b", [(1.0, 1.0), (1.0, 2.0)])
def test_fourier_form_at_the_free_fermion_point(a, b):
    p = ModelParams(a, b, math.hypot(a, b))
    assert zero_field_free_energy(p) == pytest.approx(_free_fermion_1d(p), abs=1e-8)


def test_closed_forms_check_their_regime(disordered_params, ferro_params):
    with pytest.raises(WrongRegime):
        zero_field_free_energy(ferro_params)
    with pytest.raises(WrongRegime):
        antiferro_zero_field_free_energy(disordered_params)


def test_zero_field_disordered_value(disordered_params, fast_evaluator):
    result = fast_evaluator.minimize(disordered_params)
    assert result.alpha == pytest.approx(0.5, abs=1e-4)
    assert result.f == pytest.approx(zero_field_free_energy(disordered_params), abs=1e-6)


def test_transfer_matrix_anchor(disordered_params, fast_evaluator):
    f_tm, _ = transfer_matrix_free_energy(disordered_params, sizes=(6, 8, 10))
    assert fast_evaluator.minimize(disordered_params).f == pytest.approx(f_tm, rel=1e-2)


@pytest.mark.slow
def test_transfer_matrix_anchor_full_sizes(disordered_params):
    f_tm, values = transfer_matrix_free_energy(disordered_params, sizes=(6, 8, 10, 12))
    assert len(values) == 4
    assert free_energy(disordered_params).f == pytest.approx(f_tm, rel=1e-2)


def test_antiferro_series(antiferro_params):
    result = free_energy(antiferro_params)
    assert result.phase is PhaseLabel.ANTIFERRO_A
    assert result.alpha == 0.5
    # Dominated by the all-c configurations
    assert math.log(6.0) < -result.f < math.log(6.0) + 0.02


def test_frozen_phase_uses_the_linear_form(disordered_params):
    p = disordered_params.with_fields(3.0, 3.0)
    result = free_energy(p)
    assert result.phase is PhaseLabel.FROZEN_A1
    assert result.f == pytest.approx(-6.0)
    assert result.alpha == 0.0 and result.branch == 0
    assert free_energy_gradient(p) == (-1.0, -1.0)
    assert slope(p) == (1.0, 1.0)


def test_closed_forms_skip_the_contour_solver(mocker, disordered_params, antiferro_params, fast_evaluator):
    spy = mocker.spy(fast_evaluator, "minimize")
    free_energy(disordered_params.with_fields(-3.0, -3.0), fast_evaluator)
    free_energy(antiferro_params, fast_evaluator)
    free_energy_gradient(disordered_params.with_fields(3.0, -3.0), fast_evaluator)
    assert spy.call_count == 0


def test_free_fermion_route(free_fermion_params):
    result = free_energy(free_fermion_params)
    assert result.branch == 0
    assert result.alpha == pytest.approx(free_fermion_alpha(free_fermion_params))
    assert result.alpha == pytest.approx(0.5)


def test_arrow_reversal_symmetry(disordered_params, fast_evaluator):
    f_plus = fast_evaluator.minimize(disordered_params.with_fields(0.2, 0.1)).f
    f_minus = fast_evaluator.minimize(disordered_params.with_fields(-0.2, -0.1)).f
    assert f_plus == pytest.approx(f_minus, abs=1e-6)


def test_continuity_at_the_frozen_interface(disordered_params, fast_evaluator):
    H = 1.0
    V = frozen_interface_v(disordered_params, H, PhaseLabel.FROZEN_A1) - 1e-3
    p = disordered_params.with_fields(H, V)
    f_lin = linear_free_energies(p)[PhaseLabel.FROZEN_A1]
    assert abs(free_energy(p, evaluator=fast_evaluator).f - f_lin) <= 1e-4


def test_zero_field_slope_is_half(disordered_params, fast_evaluator):
    h, v = slope(disordered_params, fast_evaluator)
    assert h == pytest.approx(0.5, abs=1e-4)
    assert v == pytest.approx(0.5, abs=1e-4)


def test_free_energy_is_concave_in_the_fields(disordered_params, fast_evaluator):
    m = hessian(disordered_params.with_fields(0.1, 0.05), evaluator=fast_evaluator)
    assert m[0, 1] == pytest.approx(m[1, 0])
    assert np.all(np.linalg.eigvalsh(m) < 0)


def test_result_serializes(disordered_params, fast_evaluator):
    data = fast_evaluator.minimize(disordered_params).to_dict()
    assert set(data) >= {"f", "alpha", "branch", "phase", "extrapolated", "contour", "residuals"}


def test_evaluator_from_config():
    evaluator = BetheFreeEnergy.from_config({"solver": {"nodes": 33, "alpha_scan": 10}, "phase": {"eps_ff": 1e-10}})
    assert isinstance(evaluator.solver, DensitySolver)
    assert evaluator.solver.nodes == 33
    assert evaluator.solver.eps_ff == 1e-10
    assert evaluator.alpha_scan == 10
