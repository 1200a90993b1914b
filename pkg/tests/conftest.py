"""Shared fixtures: small chains, drive protocols and imaginary-time grids."""

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from xy_correlators.driven import DriveProtocol, TimeGrid
from xy_correlators.spectrum import ChainParams


@pytest.fixture
def ising_params():
    return ChainParams(n_sites=8, r=1.0, h=0.5)


@pytest.fixture
def xy_params():
    return ChainParams(n_sites=8, r=0.6, h=1.3)


@pytest.fixture(params=[
    (8, 1.0, 0.5),
    (8, 0.6, 1.3),
    (10, 0.3, 0.7),
    (6, 1.0, 2.0),
    (12, 0.8, -0.4),
], ids=lambda p: f"N{p[0]}-r{p[1]}-h{p[2]}")
def parameter_set(request):
    n_sites, r, h = request.param
    return ChainParams(n_sites, r, h)


@pytest.fixture
def linear_drive():
    return DriveProtocol.linear(0.5)


@pytest.fixture
def linear_grid():
    return TimeGrid.from_sigma_window(0.5, (0.0, 2.0), 256)


@pytest.fixture
def run_file(tmp_path):
    def write(text: str, name: str = 'run.cfg') -> str:
        path = tmp_path / name
        path.write_text(text)
        return str(path)
    return write
