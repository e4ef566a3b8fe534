"""
Unit tests for the dyadic grid
"""
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from czgrid.czset import CZSet, DyadicCube, ParentKind, is_subset
from czgrid.errors import GridConfigurationError, HorizonError, InvalidSetIdError
from czgrid.geometry import GroupPoint
from czgrid.grid import Band, DyadicGrid, DyadicSetId, Half, build_chain, build_grid
from czgrid.grid_checks import allowed_parent_ratios


class TestChains:
    """Tests for the chains of both halves"""

    def test_upper_chain_prefix(self):
        """L doubles 32 → 4096 at (t, r) = (1, 1), then one VerticalUp step to (2, 2)"""
        chain = build_chain(Half.UPPER, 10)
        assert [e.k for e in chain[:8]] == list(range(5, 13))
        assert all(e.ext == ParentKind.HORIZONTAL for e in chain[:7])
        assert all((e.t, e.r) == (1, 1) for e in chain[:8])
        assert chain[7].ext == ParentKind.VERTICAL_UP
        assert (chain[8].k, chain[8].t, chain[8].r) == (12, 2, 2)

    def test_lower_chain_prefix(self):
        """L doubles 4 → 1024 at (t, r) = (−1, 1), then one VerticalDown step to (−3, 3)"""
        chain = build_chain(Half.LOWER, 10)
        assert [e.k for e in chain[:9]] == list(range(2, 11))
        assert chain[8].ext == ParentKind.VERTICAL_DOWN
        assert (chain[9].k, chain[9].t, chain[9].r) == (10, -3, 3)

    def test_upper_strips_grow(self, grid_n1: DyadicGrid):
        chain = grid_n1.chain(Half.UPPER)
        for a, b in zip(chain, chain[1:]):
            assert b.t + b.r >= a.t + a.r
            if a.ext == ParentKind.VERTICAL_UP:
                assert b.t + b.r > a.t + a.r

    def test_strip_sets_admissible(self, grid_n1: DyadicGrid):
        for half in Half:
            for entry in grid_n1.chain(half):
                entry.czset((0,))

    def test_coverage_reaches_extent(self, grid_n1: DyadicGrid):
        assert grid_n1.coverage(Half.UPPER) >= 8
        assert grid_n1.coverage(Half.LOWER) >= 8

    def test_deterministic(self):
        a = build_grid(n=1, j_lo=-2, j_hi=6)
        b = build_grid(n=1, j_lo=-2, j_hi=6)
        assert a.chain_records() == b.chain_records()

    def test_invalid_horizon(self):
        with pytest.raises(GridConfigurationError):
            DyadicGrid(1, 1, 4)
        with pytest.raises(GridConfigurationError):
            DyadicGrid(0, -1, 4)


class TestLocate:
    """Tests for point location"""

    def test_origin_level_zero(self, grid_n1: DyadicGrid):
        set_id = grid_n1.locate(GroupPoint((0.0,), 0.0), 0)
        assert grid_n1.resolve(set_id) == CZSet(DyadicCube(5, (0,)), 1, 1)
        assert set_id.text() == "omega1:N:0:0:"

    @pytest.mark.parametrize("j", [-8, -3, 0, 5, 12])
    def test_negative_x_covered(self, grid_n1: DyadicGrid, j):
        p = GroupPoint((-1.0,), 3.0)
        set_id = grid_n1.locate(p, j)
        assert set_id.half == Half.UPPER
        assert set_id.level == j
        assert grid_n1.resolve(set_id).contains(p)

    @given(
        x=st.floats(min_value=-300.0, max_value=300.0, allow_nan=False),
        t=st.floats(min_value=-7.5, max_value=7.5, allow_nan=False),
        j=st.integers(min_value=-8, max_value=11),
    )
    @settings(max_examples=150, deadline=None)
    def test_nesting(self, grid_n1: DyadicGrid, x, t, j):
        """The level-j set of a point lies inside its level-(j+1) set"""
        p = GroupPoint((x,), t)
        lower = grid_n1.locate(p, j)
        upper = grid_n1.locate(p, j + 1)
        assert grid_n1.resolve(lower).contains(p)
        assert is_subset(grid_n1.resolve(lower), grid_n1.resolve(upper))
        assert grid_n1.parent_id(lower) == upper

    def test_two_dimensions(self, grid_n2: DyadicGrid):
        p = GroupPoint((3.5, -70.0), -1.25)
        for j in range(-4, 9):
            set_id = grid_n2.locate(p, j)
            assert set_id.half == Half.LOWER
            assert grid_n2.resolve(set_id).contains(p)

    def test_horizon(self, grid_n1: DyadicGrid):
        with pytest.raises(HorizonError) as exc_info:
            grid_n1.locate(GroupPoint((0.0,), 0.0), 13)
        assert exc_info.value.required_level == 13
        with pytest.raises(HorizonError):
            grid_n1.locate(GroupPoint((0.0,), 0.0), -9)
        with pytest.raises(HorizonError):
            grid_n1.locate(GroupPoint((0.0,), 1e6), 0)


class TestTree:
    """Tests for children, parents and ancestors"""

    @pytest.mark.parametrize(
        "x, t, j", [(0.5, 0.5, 0), (-3.0, 3.0, 4), (5.0, -1.0, 2), (100.0, -5.0, 9), (7.0, 1.5, -5)]
    )
    def test_children_partition(self, grid_n1: DyadicGrid, x, t, j):
        set_id = grid_n1.locate(GroupPoint((x,), t), j)
        kids = grid_n1.children(set_id)
        assert len(kids) in (2, 2**grid_n1.n)
        assert sum(grid_n1.measure(k) for k in kids) == grid_n1.measure(set_id)
        for kid in kids:
            assert grid_n1.parent_id(kid) == set_id
            assert kid.level == set_id.level - 1
            fraction = grid_n1.measure(kid) / grid_n1.measure(set_id)
            assert Fraction(1, 3) <= fraction <= Fraction(2, 3)

    def test_vertical_down_third(self, grid_n1: DyadicGrid):
        """The Ω₂ VerticalDown pair splits its parent 2/3 and 1/3"""
        set_id = DyadicSetId(Half.LOWER, 9, Band.N, (0,))
        kids = grid_n1.children(set_id)
        fractions = [grid_n1.measure(k) / grid_n1.measure(set_id) for k in kids]
        assert fractions == [Fraction(2, 3), Fraction(1, 3)]
        assert kids[0].band == Band.TILDE

    def test_parent_ratios(self, grid_n1: DyadicGrid):
        allowed = allowed_parent_ratios(1)
        for x, t in [(0.5, 0.5), (-40.0, 3.0), (5.0, -1.0), (9.0, -4.5)]:
            node = grid_n1.locate(GroupPoint((x,), t), -8)
            while node.level < grid_n1.j_hi:
                up = grid_n1.parent_id(node)
                ratio = grid_n1.measure(up) / grid_n1.measure(node)
                assert ratio in allowed
                assert ratio >= Fraction(3, 2)
                node = up

    def test_ancestor_and_descendants(self, grid_n1: DyadicGrid):
        root = grid_n1.locate(GroupPoint((0.5,), 0.5), 0)
        below = grid_n1.descendants(root, -3)
        assert sum(grid_n1.measure(d) for d in below) == grid_n1.measure(root)
        assert all(grid_n1.ancestor(d, 0) == root for d in below)
        assert all(grid_n1.is_ancestor(root, d) for d in below)
        assert not grid_n1.is_ancestor(below[0], root)

    def test_horizon_errors(self, grid_n1: DyadicGrid):
        top = grid_n1.locate(GroupPoint((0.5,), 0.5), 12)
        with pytest.raises(HorizonError):
            grid_n1.parent_id(top)
        bottom = grid_n1.locate(GroupPoint((0.5,), 0.5), -8)
        with pytest.raises(HorizonError):
            grid_n1.children(bottom)

    def test_extended_grid_agrees(self, grid_n1: DyadicGrid):
        wider = grid_n1.extended(j_lo=-10, j_hi=14)
        p = GroupPoint((12.0,), -0.75)
        for j in range(-8, 13):
            assert wider.locate(p, j) == grid_n1.locate(p, j)
        assert wider.locate(p, 14).level == 14


class TestEnumerateLevel:
    """Tests for the finite views of a level"""

    def test_own_level(self, grid_n1: DyadicGrid):
        window = grid_n1.locate(GroupPoint((0.5,), 0.5), 0)
        assert grid_n1.enumerate_level(0, window) == [window]

    def test_vertical_up_halves(self, grid_n1: DyadicGrid):
        """[0, 4096) × [0, 4) one level down is its two VerticalUp halves"""
        window = DyadicSetId(Half.UPPER, 8, Band.N, (0,))
        assert grid_n1.resolve(window) == CZSet(DyadicCube(12, (0,)), 2, 2)
        halves = grid_n1.enumerate_level(7, window)
        assert len(halves) == 2
        assert {h.band for h in halves} == {Band.N, Band.TILDE}

    @pytest.mark.parametrize("depth", [1, 2, 4])
    def test_partition_below(self, grid_n1: DyadicGrid, depth):
        window = grid_n1.locate(GroupPoint((-20.0,), -3.0), 2)
        found = grid_n1.enumerate_level(2 - depth, window)
        assert sum(grid_n1.measure(s) for s in found) == grid_n1.measure(window)
        assert len(set(found)) == len(found)

    def test_arbitrary_window(self, grid_n1: DyadicGrid):
        """Sets meeting a non-grid window all intersect it and cover it"""
        window = CZSet(DyadicCube(5, (1,)), 0, 1)
        found = grid_n1.enumerate_level(0, window)
        assert {f.half for f in found} == {Half.UPPER, Half.LOWER}
        for point in [GroupPoint((40.0,), -0.5), GroupPoint((60.0,), 0.9)]:
            assert sum(grid_n1.resolve(f).contains(point) for f in found) == 1


class TestSetIds:
    """Tests for the textual form of set addresses"""

    def test_round_trip(self, grid_n1: DyadicGrid):
        set_id = grid_n1.locate(GroupPoint((-5.0,), 2.5), -4)
        assert DyadicSetId.from_text(set_id.text()) == set_id

    @pytest.mark.parametrize("text", ["omega3:N:0:0:", "omega1:N:0:0", "omega1:X:0:0:", "omega1:N:a:0:"])
    def test_malformed(self, text):
        with pytest.raises(InvalidSetIdError):
            DyadicSetId.from_text(text)

    def test_out_of_range_child(self, grid_n1: DyadicGrid):
        root = grid_n1.locate(GroupPoint((0.5,), 0.5), 0)
        with pytest.raises(InvalidSetIdError):
            grid_n1.resolve(root.child(7))
