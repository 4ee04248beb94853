"""
Tests for the surface tension and its tables.
"""

import math

import numpy as np
import pytest

from src.thermo.free_energy import _free_fermion_1d, slope
from src.thermo.asymptotics import interface_v
from src.variational.surface_tension import (
    CSV_HEADER,
    build_table,
    conjugate_fields_near_boundary,
    corner_slope_map,
    inverse_legendre,
    sigma,
    sigma_boundary_expansion,
    sigma_boundary_line,
    sigma_corner_asymptotic,
)
from src.utils.errors import ExpansionInvalid, NotOnInterface, SupDiverges


def test_boundary_line_closed_form(disordered_params):
    result = sigma(disordered_params, 1.0, 0.3)
    assert result.closed_form
    assert result.value == pytest.approx(0.3 * math.log(2.0) - math.log(2.0))
    assert math.isnan(result.gradient[0])
    assert sigma_boundary_line(disordered_params, 0.4, 0.0) == pytest.approx(0.6 * math.log(2.0) - math.log(2.0))
    assert sigma_boundary_line(disordered_params, 0.4, 0.6) is None


def test_slope_outside_the_square(disordered_params):
    with pytest.raises(ValueError):
        sigma(disordered_params, 1.2, 0.5)


@pytest.mark.parametrize("h,v", [(0.5, 0.5), (0.3, 0.6), (0.75, 0.4)])
def test_legendre_conjugacy_at_the_free_fermion_point(free_fermion_params, fast_evaluator, h, v):
    """σ(h, v) = (2h − 1)H + (2v − 1)V + f(H, V) at the returned fields, and ∇f maps them back to (h, v)."""
    result = sigma(free_fermion_params, h, v, evaluator=fast_evaluator)
    H, V = result.fields
    at = free_fermion_params.with_fields(H, V)
    assert result.value == pytest.approx((2 * h - 1) * H + (2 * v - 1) * V + _free_fermion_1d(at), abs=1e-5)
    assert result.gradient == pytest.approx((2 * H, 2 * V))
    assert slope(at, fast_evaluator) == pytest.approx((h, v), abs=1e-4)


def test_symmetries(disordered_params, fast_evaluator):
    base = sigma(disordered_params, 0.3, 0.6, evaluator=fast_evaluator).value
    assert sigma(disordered_params, 0.6, 0.3, evaluator=fast_evaluator).value == pytest.approx(base, abs=1e-5)
    assert sigma(disordered_params, 0.7, 0.4, evaluator=fast_evaluator).value == pytest.approx(base, abs=1e-5)


def test_center_is_the_zero_field_point(disordered_params, fast_evaluator):
    result = sigma(disordered_params, 0.5, 0.5, evaluator=fast_evaluator)
    assert result.fields == pytest.approx((0.0, 0.0), abs=1e-5)
    assert result.value == pytest.approx(fast_evaluator.minimize(disordered_params).f, abs=1e-6)


def test_sup_diverges_with_a_small_field_window(disordered_params, fast_evaluator):
    with pytest.raises(SupDiverges):
        sigma(disordered_params, 0.95, 0.5, evaluator=fast_evaluator, h_max=0.2)


def test_boundary_expansion(free_fermion_params, fast_evaluator):
    h, v = 0.99, 0.5
    exact = sigma(free_fermion_params, h, v, evaluator=fast_evaluator)
    assert sigma_boundary_expansion(free_fermion_params, h, v) == pytest.approx(exact.value, abs=2e-3)
    H, V = conjugate_fields_near_boundary(free_fermion_params, h, v)
    assert H == pytest.approx(exact.fields[0], abs=0.1)
    assert sigma_boundary_expansion(free_fermion_params, 1.0, v) == pytest.approx(0.0)
    with pytest.raises(ExpansionInvalid):
        sigma_boundary_expansion(free_fermion_params, 0.5, 0.5)


def test_corner_asymptotic_matches_its_slope(disordered_params):
    h, v = 0.98, 0.96
    corner = sigma_corner_asymptotic(disordered_params, h, v)
    assert corner.roots >= 1
    assert corner_slope_map(disordered_params, corner.H0, corner.V0) == pytest.approx((1 - h) / (1 - v), rel=1e-8)
    assert corner.V0 == pytest.approx(interface_v(disordered_params, corner.H0))
    with pytest.raises(ExpansionInvalid):
        sigma_corner_asymptotic(disordered_params, 1.0, 0.5)
    with pytest.raises(NotOnInterface):
        corner_slope_map(disordered_params, 1.0, 5.0)


def test_table_fills_by_symmetry(free_fermion_params, fast_evaluator):
    table = build_table(free_fermion_params, 4, evaluator=fast_evaluator)
    assert table.size == 4
    assert table.meta["solved_nodes"] == 4
    assert not np.isnan(table.sigma).any()
    assert table.sigma[1, 3] == table.sigma[3, 1]
    assert table.sigma[3, 3] == table.sigma[1, 1]
    assert table.dsdh[3, 3] == -table.dsdh[1, 1]
    assert np.isnan(table.dsdh[0, 2])
    assert len(table.rows()) == 25 and len(CSV_HEADER) == 7
    assert table.header()["n"] == 4
    with pytest.raises(ValueError):
        build_table(free_fermion_params, 1)


def test_function_table_interpolation(quadratic_table):
    assert quadratic_table.evaluate(0.5, 0.5) == pytest.approx(0.0)
    assert quadratic_table.evaluate(0.25, 0.75) == pytest.approx(0.125)
    assert quadratic_table.evaluate_extended(1.1, 0.5, penalty=10.0) == pytest.approx(0.25 + 1.0)
    h = np.array([0.1, 0.5, 1.2])
    v = np.array([0.3, 0.5, -0.1])
    many = quadratic_table.evaluate_many(h, v)
    single = [quadratic_table.evaluate_extended(a, b) for a, b in zip(h, v)]
    assert many == pytest.approx(single)
    gh, gv = quadratic_table.gradient(0.5, 0.5)
    assert (gh, gv) == pytest.approx((0.0, 0.0))
    assert math.isnan(quadratic_table.gradient(0.01, 0.5)[0])


def test_inverse_legendre_recovers_the_free_energy(quadratic_table):
    # For σ = (h − ½)² + (v − ½)², f(H, V) = −H² − V²
    assert inverse_legendre(quadratic_table, 0.1, -0.2) == pytest.approx(-0.05, abs=1e-8)
