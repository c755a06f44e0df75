import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from striptrial.grid_design import (
    RANDOMISED,
    SYSTEMATIC,
    DesignError,
    TreatmentLevels,
    allocate_treatments,
    build_grid,
    design_to_csv,
)


class TestBuildGrid:
    def test_default_dimensions(self):
        grid = build_grid(93, 20)
        assert grid.n == 1860
        assert grid.coords.shape == (1860, 2)

    def test_single_plot(self):
        grid = build_grid(1, 1)
        assert grid.n == 1
        assert grid.coords.tolist() == [[1.0, 1.0]]

    def test_2x3_enumeration(self):
        grid = build_grid(2, 3)
        expected = [(1, 1), (2, 1), (1, 2), (2, 2), (1, 3), (2, 3)]
        assert [tuple(map(int, c)) for c in grid.coords] == expected

    def test_coords_unique_on_lattice(self):
        grid = build_grid(7, 5)
        coords = {tuple(c) for c in grid.coords}
        assert len(coords) == grid.n
        assert all(1 <= r <= 7 and 1 <= g <= 5 for r, g in coords)

    @pytest.mark.parametrize("dims", [(0, 5), (5, 0), (-1, 3)])
    def test_invalid_dimensions(self, dims):
        with pytest.raises(DesignError):
            build_grid(*dims)


class TestTreatmentLevels:
    def test_too_few(self):
        with pytest.raises(DesignError):
            TreatmentLevels((35.0,))

    def test_not_increasing(self):
        with pytest.raises(DesignError):
            TreatmentLevels((0.0, 70.0, 35.0))

    def test_alternative_middle_level_expressible(self):
        assert TreatmentLevels((0, 35, 75, 105, 140)).levels[2] == 75.0


class TestAllocate:
    def test_systematic_cycles_ascending(self, levels):
        grid = build_grid(93, 20)
        plan = allocate_treatments(grid, levels, SYSTEMATIC)
        per_range = plan.treatment.reshape(20, 93)
        assert np.all(per_range == per_range[:, :1])  # constant within strip
        rates = per_range[:, 0]
        expected = np.tile(levels.levels, 4)
        assert np.array_equal(rates, expected)

    def test_randomised_one_block_is_permutation(self, levels, rng):
        grid = build_grid(4, 5)
        plan = allocate_treatments(grid, levels, RANDOMISED, rng)
        rates = sorted(plan.treatment.reshape(5, 4)[:, 0])
        assert rates == list(levels.levels)

    def test_randomised_block_frequency(self, levels):
        # each level lands in range 1 with relative frequency 0.2 +/- 0.02
        grid = build_grid(2, 20)
        hits = {lv: 0 for lv in levels.levels}
        rng = np.random.default_rng(777)
        n_draws = 10_000
        for _ in range(n_draws):
            plan = allocate_treatments(grid, levels, RANDOMISED, rng)
            hits[plan.treatment[0]] += 1
        for lv, count in hits.items():
            assert abs(count / n_draws - 0.2) < 0.02, lv

    def test_counts_per_level(self, levels, rng):
        grid = build_grid(93, 20)
        for kind in (RANDOMISED, SYSTEMATIC):
            plan = allocate_treatments(grid, levels, kind, rng)
            for lv in levels.levels:
                assert np.count_nonzero(plan.treatment == lv) == 93 * 4

    def test_indivisible_ranges_rejected(self, levels, rng):
        grid = build_grid(5, 7)
        with pytest.raises(DesignError):
            allocate_treatments(grid, levels, RANDOMISED, rng)

    def test_randomised_requires_rng(self, levels):
        with pytest.raises(DesignError):
            allocate_treatments(build_grid(2, 5), levels, RANDOMISED)

    def test_systematic_is_pure(self, levels):
        grid = build_grid(10, 10)
        a = allocate_treatments(grid, levels, SYSTEMATIC)
        b = allocate_treatments(grid, levels, SYSTEMATIC)
        assert np.array_equal(a.treatment, b.treatment)

    def test_randomised_seed_reproducible(self, levels):
        grid = build_grid(10, 10)
        a = allocate_treatments(grid, levels, RANDOMISED, np.random.default_rng(5))
        b = allocate_treatments(grid, levels, RANDOMISED, np.random.default_rng(5))
        assert np.array_equal(a.treatment, b.treatment)

    @settings(max_examples=25, deadline=None)
    @given(
        n_rows=st.integers(1, 20),
        n_blocks=st.integers(1, 4),
        seed=st.integers(0, 2**32 - 1),
        kind=st.sampled_from([RANDOMISED, SYSTEMATIC]),
    )
    def test_block_invariant_property(self, n_rows, n_blocks, seed, kind):
        lv = TreatmentLevels((0.0, 35.0, 70.0, 105.0, 140.0))
        grid = build_grid(n_rows, 5 * n_blocks)
        plan = allocate_treatments(grid, lv, kind, np.random.default_rng(seed))
        per_range = plan.treatment.reshape(grid.n_ranges, n_rows)[:, 0]
        for b in range(n_blocks):
            block = sorted(per_range[5 * b : 5 * b + 5])
            assert block == list(lv.levels)


class TestCsv:
    def test_design_csv_schema(self, levels):
        grid = build_grid(2, 5)
        plan = allocate_treatments(grid, levels, SYSTEMATIC)
        lines = design_to_csv(grid, plan).strip().split("\n")
        assert lines[0] == "row,range,rate"
        assert len(lines) == grid.n + 1
        assert lines[1] == "1,1,0.0"
        assert lines[3] == "1,2,35.0"
