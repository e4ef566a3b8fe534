"""
Unit tests for atoms, dyadic BMO estimates and the H¹ counterexample
"""
import math

import numpy as np
import pytest

from czgrid.errors import GridConfigurationError, InvalidFunctionError
from czgrid.geometry import GroupPoint
from czgrid.grid import DyadicGrid, DyadicSetId, build_grid
from czgrid.hardy_bmo import (
    Atom,
    ShiftedLogProfile,
    bmo_dyadic_lower,
    bmo_dyadic_upper_log,
    closed_form_pairing,
    counterexample_atom,
    counterexample_pair,
    fit_pairings,
    graded_log_quadrature,
    numeric_pairing,
    required_j_lo,
    run_counterexample,
    validate_atom,
)
from czgrid.step_function import StepFunction, Window

SCALES = [-5, -10, -20]


@pytest.fixture(scope="module")
def deep_grid() -> DyadicGrid:
    return build_grid(1, required_j_lo(SCALES), 12)


class TestAtoms:
    """Tests for atom validation"""

    def test_balanced_halves(self, grid_n1: DyadicGrid, root_n1: DyadicSetId):
        window = Window(grid_n1, root_n1, grid_n1.children(root_n1))
        f = StepFunction(window, [1 / 64, -1 / 64])
        report = validate_atom(Atom(grid_n1.resolve(root_n1), f))
        assert report.valid
        assert report.sup_bound == pytest.approx(1 / 64)
        assert report.violations == []

    def test_nonzero_mean(self, grid_n1: DyadicGrid, root_n1: DyadicSetId):
        f = StepFunction.constant(Window(grid_n1, root_n1, [root_n1]), 1 / 64)
        report = validate_atom(Atom(grid_n1.resolve(root_n1), f))
        assert not report.valid
        assert any("integral" in v for v in report.violations)

    def test_sup_too_large(self, grid_n1: DyadicGrid, root_n1: DyadicSetId):
        window = Window(grid_n1, root_n1, grid_n1.children(root_n1))
        f = 1.01 * StepFunction(window, [1 / 64, -1 / 64])
        report = validate_atom(Atom(grid_n1.resolve(root_n1), f))
        assert not report.valid
        assert any("sup norm" in v for v in report.violations)

    def test_value_off_support(self, grid_n1: DyadicGrid, root_n1: DyadicSetId):
        parent = grid_n1.parent_id(root_n1)
        window = Window(grid_n1, parent, grid_n1.children(parent))
        f = StepFunction(window, [1 / 128, -1 / 128])
        report = validate_atom(Atom(grid_n1.resolve(root_n1), f))
        assert not report.valid
        assert any("outside the support" in v for v in report.violations)


class TestLogProfile:
    """Tests for χ_{x>face} log(x − face)"""

    def test_values(self):
        h = ShiftedLogProfile(32.0)
        np.testing.assert_allclose(h(np.array([10.0, 32.0, 33.0, 32.0 + math.e])), [0.0, 0.0, 0.0, 1.0])

    def test_integral(self):
        h = ShiftedLogProfile(32.0)
        assert h.integral(32.0, 33.0) == pytest.approx(-1.0)
        assert h.integral(0.0, 16.0) == 0.0

    @pytest.mark.parametrize("side", [2.0**-5, 1.0, 16.0, 1024.0])
    def test_oscillation_at_face(self, side):
        """Intervals starting at the face all have oscillation 2/e"""
        h = ShiftedLogProfile(32.0)
        assert h.oscillation(32.0, 32.0 + side) == pytest.approx(2 / math.e)

    def test_oscillation_left_of_face(self):
        assert ShiftedLogProfile(32.0).oscillation(0.0, 32.0) == 0.0

    def test_oscillation_right_of_face(self):
        assert ShiftedLogProfile(32.0).oscillation(33.0, 34.0) <= math.log(2) / 2

    def test_empty_interval(self):
        with pytest.raises(InvalidFunctionError):
            ShiftedLogProfile(32.0).oscillation(3.0, 3.0)

    @pytest.mark.parametrize("h", [1e-3, 0.5, 3.0, 1000.0])
    def test_quadrature(self, h):
        assert graded_log_quadrature(h) == pytest.approx(h * math.log(h) - h, rel=1e-10)


class TestBMO:
    """Tests for the dyadic BMO bounds"""

    def test_upper_bound(self):
        estimate = bmo_dyadic_upper_log(32.0)
        assert math.isfinite(estimate.value)
        assert estimate.value >= 2 / math.e
        assert estimate.value >= ShiftedLogProfile(32.0).oscillation(0.0, 64.0)
        assert len(estimate.derivation) == 6

    def test_face_must_be_power_of_two(self):
        with pytest.raises(InvalidFunctionError):
            bmo_dyadic_upper_log(24.0)
        with pytest.raises(InvalidFunctionError):
            bmo_dyadic_upper_log(0.0)

    def test_lower_below_upper(self, grid_n1: DyadicGrid):
        upper = bmo_dyadic_upper_log(32.0).value
        right = grid_n1.locate(GroupPoint((40.0,), 0.5), 0)
        probe = grid_n1.descendants(right, -3) + [right, grid_n1.parent_id(right)]
        lower = bmo_dyadic_lower(ShiftedLogProfile(32.0), probe, grid_n1)
        assert 0 < lower <= upper + 1e-12

    def test_lower_on_step_function(self, grid_n1: DyadicGrid, root_n1: DyadicSetId):
        f = StepFunction.constant(Window(grid_n1, root_n1, [root_n1]), 1.0)
        assert bmo_dyadic_lower(f, [grid_n1.parent_id(root_n1)]) == pytest.approx(0.5)
        assert bmo_dyadic_lower(f, [root_n1]) == 0.0

    def test_lower_rejects(self, grid_n1: DyadicGrid, grid_n2: DyadicGrid, root_n1: DyadicSetId):
        with pytest.raises(InvalidFunctionError):
            bmo_dyadic_lower(ShiftedLogProfile(32.0), [])
        with pytest.raises(InvalidFunctionError):
            bmo_dyadic_lower(ShiftedLogProfile(32.0), [root_n1])
        root_n2 = grid_n2.locate(GroupPoint((0.5, 0.5), 0.5), 0)
        with pytest.raises(InvalidFunctionError):
            bmo_dyadic_lower(ShiftedLogProfile(32.0), [root_n2], grid_n2)


class TestCounterexample:
    """Tests for the atoms whose pairing with the log profile grows"""

    def test_required_j_lo(self):
        assert required_j_lo(SCALES) == -83
        assert required_j_lo([-5]) == -38

    @pytest.mark.parametrize("ell", SCALES)
    def test_pair(self, deep_grid: DyadicGrid, ell):
        r_id, e_id, union = counterexample_pair(deep_grid, ell)
        R, E = deep_grid.resolve(r_id), deep_grid.resolve(e_id)
        assert R.cube.k == E.cube.k == ell
        assert R.cube.upper()[0] == E.cube.lower()[0] == 32
        assert (R.t, R.r) == (E.t, E.r)
        assert union.is_admissible()
        assert union.measure() == 2 * R.measure()

    @pytest.mark.parametrize("ell", SCALES)
    def test_atom_is_valid(self, deep_grid: DyadicGrid, ell):
        atom, _, _ = counterexample_atom(deep_grid, ell)
        assert validate_atom(atom).valid

    def test_closed_form(self):
        assert closed_form_pairing(-5) == pytest.approx(2.2329, abs=1e-4)
        assert closed_form_pairing(-10) == pytest.approx(3.9657, abs=1e-4)
        assert closed_form_pairing(-20) == pytest.approx(7.4315, abs=1e-4)

    def test_numeric_matches_closed_form(self, deep_grid: DyadicGrid):
        records = run_counterexample(deep_grid, SCALES)
        assert [r.ell for r in records] == SCALES
        for record in records:
            assert record.relative_error <= 1e-9
            assert record.atom_valid
            assert record.h1_upper == 1.0
            assert record.h1d_lower == pytest.approx(record.pairing / record.bmo_upper)
        lowers = [r.h1d_lower for r in records]
        assert lowers == sorted(lowers)

    def test_pairing_is_linear(self, deep_grid: DyadicGrid):
        atom, _, _ = counterexample_atom(deep_grid, -10)
        profile = ShiftedLogProfile(32.0)
        doubled = Atom(atom.support, 2.0 * atom.function)
        assert numeric_pairing(doubled, profile) == pytest.approx(2 * numeric_pairing(atom, profile))

    def test_fit(self, deep_grid: DyadicGrid):
        summary = fit_pairings(run_counterexample(deep_grid, SCALES))
        assert summary.records == 3
        assert summary.slope == pytest.approx(math.log(2) / 2, abs=1e-9)
        assert summary.slope == pytest.approx(summary.expected_slope, abs=1e-9)
        assert summary.max_relative_error <= 1e-9

    def test_single_scale_has_no_slope(self, deep_grid: DyadicGrid):
        summary = fit_pairings(run_counterexample(deep_grid, [-5]))
        assert summary.records == 1
        assert summary.slope is None

    def test_shallow_grid(self, grid_n1: DyadicGrid):
        with pytest.raises(GridConfigurationError):
            counterexample_pair(grid_n1, -20)

    def test_needs_one_dimension(self, grid_n2: DyadicGrid):
        with pytest.raises(GridConfigurationError):
            counterexample_pair(grid_n2, -5)

    def test_scale_below_face(self, deep_grid: DyadicGrid):
        with pytest.raises(GridConfigurationError):
            run_counterexample(deep_grid, [5])
