"""
Tests for the finite Bethe equations.
"""

import math

import numpy as np
import pytest

from src.model.params import ModelParams
from src.model.transfer_matrix import transfer_matrix_lambda
from src.thermo.bethe_roots import bethe_eigenvalue, bethe_residual, branch_functions, solve_bethe_roots


@pytest.mark.parametrize("p,n_sites,n_roots", [
    (ModelParams(1.0, 1.0, math.sqrt(3.0)), 8, 4),
    (ModelParams(1.0, 2.0, 2.0), 6, 3),
    (ModelParams(1.0, 1.0, math.sqrt(2.0)), 6, 2),
])
def test_eigenvalue_matches_the_transfer_matrix(p, n_sites, n_roots):
    roots = solve_bethe_roots(p, n_sites, n_roots)
    assert len(roots) == n_roots
    assert bethe_residual(p, n_sites, roots) < 1e-10
    assert np.allclose(np.sort_complex(np.conj(roots)), np.sort_complex(roots))
    expected = transfer_matrix_lambda(p, n_sites, n_roots)
    assert bethe_eigenvalue(p, n_sites, roots) == pytest.approx(expected, rel=1e-8)


def test_free_fermion_roots_sit_on_the_arc():
    p = ModelParams(1.0, 1.0, math.sqrt(2.0), H=0.1)
    roots = solve_bethe_roots(p, 6, 3)
    assert np.allclose(np.abs(roots), math.exp(0.2))


def test_empty_sector():
    p = ModelParams(1.0, 2.0, 1.5, H=0.2, V=-0.1)
    roots = solve_bethe_roots(p, 5, 0)
    assert len(roots) == 0
    assert bethe_eigenvalue(p, 5, roots) == pytest.approx(transfer_matrix_lambda(p, 5, 0), rel=1e-12)


def test_sector_range():
    p = ModelParams(1.0, 2.0, 2.0)
    with pytest.raises(ValueError):
        solve_bethe_roots(p, 6, 4)
    with pytest.raises(ValueError):
        solve_bethe_roots(p, 0, 0)


def test_branch_functions_at_known_points():
    p = ModelParams(1.0, 2.0, 2.0)
    first, second = branch_functions(p, 0.0)
    assert first == pytest.approx((-4.0 + 4.0) / (1.0 * -2.0))
    assert second == pytest.approx(2.0 / 4.0)
