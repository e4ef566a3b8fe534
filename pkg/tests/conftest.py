"""
Pytest configuration and fixtures
"""
import tempfile
from pathlib import Path
from typing import Generator

import pytest

from czgrid.geometry import GroupPoint
from czgrid.grid import DyadicGrid, DyadicSetId, build_grid
from czgrid.step_function import Window


@pytest.fixture
def temp_dir() -> Generator[Path, None, None]:
    """
    Create a temporary directory for result files

    Yields:
        Path to temporary directory
    """
    with tempfile.TemporaryDirectory() as tmpdir:
        yield Path(tmpdir)


@pytest.fixture(scope="session")
def grid_n1() -> DyadicGrid:
    """
    The n = 1 grid navigable on levels [-8, 12]

    Returns:
        Built grid, shared across the session (resolution is cached)
    """
    return build_grid(n=1, j_lo=-8, j_hi=12)


@pytest.fixture(scope="session")
def grid_n2() -> DyadicGrid:
    """
    The n = 2 grid navigable on levels [-4, 8]

    Returns:
        Built grid, shared across the session
    """
    return build_grid(n=2, j_lo=-4, j_hi=8)


@pytest.fixture
def root_n1(grid_n1: DyadicGrid) -> DyadicSetId:
    """The level-0 set [0, 32) × [0, 2) of the n = 1 grid"""
    return grid_n1.locate(GroupPoint((0.5,), 0.5), 0)


@pytest.fixture
def window_n1(grid_n1: DyadicGrid, root_n1: DyadicSetId) -> Window:
    """Uniform window of depth 3 under root_n1"""
    return Window.uniform(grid_n1, root_n1, -3)


@pytest.fixture
def config_file(temp_dir: Path) -> Path:
    """
    A small experiment configuration file

    Returns:
        Path to a `key = value` file sized for fast command runs
    """
    path = temp_dir / "czgrid.conf"
    path.write_text(
        "# fast settings\n"
        "n = 1\n"
        "j_lo = -6\n"
        "j_hi = 10\n"
        "trials = 6\n"
        "mc_samples = 2000\n"
        "base_depth = 3\n"
        "window_depth = 2\n"
        "alpha_grid = 0.25, 0.5\n"
        "p_list = 2\n"
        "b_list = 0.5\n"
        "c_list = 0.25\n"
        "require_stability = false\n",
        encoding="utf-8",
    )
    return path
