"""
Pytest configuration and fixtures.
"""

import math
import os
import shutil
import tempfile
from typing import Generator
import pytest

from src.model.lattice import dwbc_boundary
from src.model.params import ModelParams
from src.thermo.density import DensitySolver
from src.thermo.free_energy import BetheFreeEnergy
from src.variational.surface_tension import SurfaceTensionTable


@pytest.fixture
def temp_dir() -> Generator[str, None, None]:
    """
    Create a temporary directory for test files.

    Yields:
        Path to temporary directory
    """
    temp_dir = tempfile.mkdtemp()
    yield temp_dir
    shutil.rmtree(temp_dir)


@pytest.fixture
def test_output_dir(temp_dir: str) -> str:
    """
    Create a test output directory.

    Args:
        temp_dir: Temporary directory path

    Returns:
        Path to test output directory
    """
    output_dir = os.path.join(temp_dir, "output")
    os.makedirs(output_dir, exist_ok=True)
    return output_dir


@pytest.fixture
def sample_json_data() -> dict:
    """
    Provide sample JSON data for testing.

    Returns:
        Dictionary shaped like a run summary
    """
    return {
        "params": {"a": 1.0, "b": 2.0, "c": 2.0, "H": 0.0, "V": 0.0},
        "sizes": [6, 8, 10, 12],
        "values": [-1.01, -1.005, -1.003, -1.002],
    }


@pytest.fixture
def free_fermion_params() -> ModelParams:
    """a = b = 1, c = √2, so Δ = 0."""
    return ModelParams(1.0, 1.0, math.sqrt(2.0))


@pytest.fixture
def disordered_params() -> ModelParams:
    """(1, 2, 2): Δ = 1/4."""
    return ModelParams(1.0, 2.0, 2.0)


@pytest.fixture
def ferro_params() -> ModelParams:
    """(2, 1, 0.8): Δ = 1.09."""
    return ModelParams(2.0, 1.0, 0.8)


@pytest.fixture
def antiferro_params() -> ModelParams:
    """(1, 2, 6): Δ = −7.75."""
    return ModelParams(1.0, 2.0, 6.0)


@pytest.fixture
def fast_evaluator() -> BetheFreeEnergy:
    """Density solver with few nodes for quick checks."""
    return BetheFreeEnergy(solver=DensitySolver(nodes=65))


@pytest.fixture
def dwbc_small():
    """Domain wall boundaries for N = 1..4."""
    return {n: dwbc_boundary(n) for n in range(1, 5)}


@pytest.fixture
def quadratic_table(free_fermion_params) -> SurfaceTensionTable:
    """
    Separable convex σ(h, v) = (h − ½)² + (v − ½)² on a 33×33 grid.

    Bilinear interpolation of this σ is exact along grid lines, which keeps
    limit-shape checks independent of the Bethe solver.
    """
    def sigma(h, v):
        return (h - 0.5) ** 2 + (v - 0.5) ** 2

    def gradient(h, v):
        return 2 * (h - 0.5), 2 * (v - 0.5)

    return SurfaceTensionTable.from_function(free_fermion_params, 32, sigma, gradient)
