"""Scorer tests: coverage oracles, convolution oracles, pooling identities."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import ndimage

from qrefine.errors import ImageSizeError, ShapeMismatchError
from qrefine.iqa import (
    DefaultScorer,
    ScorerConfig,
    cell_score,
    global_quality,
    immerkaer_sigma,
    map_from_text,
    map_to_text,
    pool_patches,
    score_cells,
    split_patches,
)
from qrefine.corpus import make_clean_image


def oracle_cell_score(cell, tau_s=2e-3, tau_n=2e-2):
    """Independent scalar reimplementation: explicit loops, no shared code."""
    cell = np.asarray(cell, dtype=np.float64)
    h, w = cell.shape
    lap_kernel = [[0, 1, 0], [1, -4, 1], [0, 1, 0]]
    imm_kernel = [[1, -2, 1], [-2, 4, -2], [1, -2, 1]]
    lap_vals, imm_sum = [], 0.0
    for y in range(1, h - 1):
        for x in range(1, w - 1):
            lap = sum(
                lap_kernel[dy][dx] * cell[y + dy - 1, x + dx - 1]
                for dy in range(3)
                for dx in range(3)
            )
            imm = sum(
                imm_kernel[dy][dx] * cell[y + dy - 1, x + dx - 1]
                for dy in range(3)
                for dx in range(3)
            )
            lap_vals.append(lap)
            imm_sum += abs(imm)
    lap_vals = np.asarray(lap_vals)
    var = float(np.mean((lap_vals - lap_vals.mean()) ** 2))
    s = var / (var + tau_s)
    sigma_n = math.sqrt(math.pi / 2) * imm_sum / (6 * (w - 2) * (h - 2))
    p = sigma_n / (sigma_n + tau_n)
    return s * (1 - p)


class TestSplitPatches:
    def test_even_split(self):
        rects = split_patches(8, 8, 2)
        assert rects == [(0, 4, 0, 4), (0, 4, 4, 8), (4, 8, 0, 4), (4, 8, 4, 8)]

    def test_floor_rule_on_odd_size(self):
        rects = split_patches(9, 9, 2)
        rows = {(r0, r1) for r0, r1, _, _ in rects}
        assert rows == {(0, 4), (4, 9)}

    def test_exact_coverage_counter(self):
        # every pixel covered exactly once on an awkward size
        counter = np.zeros((100, 60), dtype=int)
        for r0, r1, c0, c1 in split_patches(100, 60, 8):
            counter[r0:r1, c0:c1] += 1
        assert counter.min() == 1 and counter.max() == 1

    def test_too_many_patches_rejected(self):
        with pytest.raises(ImageSizeError):
            split_patches(6, 100, 8)


class TestCellScore:
    def test_constant_cell_scores_zero(self):
        assert cell_score(np.full((8, 8), 0.4, dtype=np.float32)) == 0.0

    def test_checkerboard_matches_oracle_and_is_low(self):
        yy, xx = np.indices((16, 16))
        board = ((yy + xx) % 2).astype(np.float32)
        got = cell_score(board)
        want = oracle_cell_score(board)
        assert abs(got - want) < 1e-6
        assert got < 0.1  # alternating texture reads as pure noise

    def test_step_edge_matches_convolution_oracle(self):
        cell = np.zeros((12, 12), dtype=np.float32)
        cell[:, 6:] = 1.0
        assert abs(cell_score(cell) - oracle_cell_score(cell)) < 1e-6

    def test_random_cells_match_oracle(self, rng):
        for _ in range(5):
            cell = rng.random((7, 9)).astype(np.float32)
            assert abs(cell_score(cell) - oracle_cell_score(cell)) < 1e-6

    def test_tiny_cell_rejected(self):
        with pytest.raises(ImageSizeError):
            cell_score(np.zeros((2, 5), dtype=np.float32))

    def test_immerkaer_recovers_noise_level(self, rng):
        # the estimator should land near the true sigma on pure noise
        sigma = 0.05
        noise = (0.5 + rng.normal(0, sigma, (128, 128))).astype(np.float32)
        est = immerkaer_sigma(noise)
        assert abs(est - sigma) / sigma < 0.15


class TestScoreCells:
    def test_uniform_image_scores_zero(self):
        img = np.full((64, 64, 3), 0.5, dtype=np.float32)
        grid = score_cells(img, ScorerConfig(n=2))
        np.testing.assert_array_equal(grid, 0.0)

    def test_sharp_left_beats_blurred_right(self, rng):
        img = make_clean_image(5, 128, 128)
        blurred = ndimage.gaussian_filter(img, sigma=(3.0, 3.0, 0.0), mode="nearest")
        combo = img.copy()
        combo[:, 64:] = blurred[:, 64:]
        grid = score_cells(combo, ScorerConfig(n=2, cells_per_patch_side=2))
        left, right = grid[:, :2], grid[:, 2:]
        assert left.min() > right.max()

    def test_values_in_unit_interval(self, rng):
        img = rng.random((64, 64, 3)).astype(np.float32)
        grid = score_cells(img, ScorerConfig(n=2))
        assert grid.min() >= 0.0 and grid.max() <= 1.0

    def test_cells_too_small_rejected(self):
        img = np.zeros((16, 16, 3), dtype=np.float32)
        with pytest.raises(ImageSizeError):
            score_cells(img, ScorerConfig(n=4, cells_per_patch_side=2))


class TestPoolPatches:
    def test_single_patch_takes_largest_cell(self):
        cells = np.array([[0.1, 0.2], [0.3, 0.4]], dtype=np.float32)
        pooled = pool_patches(cells, 2)
        np.testing.assert_array_equal(pooled, [[np.float32(0.4)]])

    def test_all_equal_cells(self):
        cells = np.full((4, 4), 0.7, dtype=np.float32)
        np.testing.assert_array_equal(pool_patches(cells, 2), np.float32(0.7))

    def test_matches_exhaustive_block_max(self, rng):
        cells = rng.random((8, 8)).astype(np.float32)
        pooled = pool_patches(cells, 2)
        for i in range(4):
            for j in range(4):
                block = cells[2 * i : 2 * i + 2, 2 * j : 2 * j + 2]
                assert pooled[i, j] == block.max()

    def test_indivisible_grid_rejected(self):
        with pytest.raises(ShapeMismatchError):
            pool_patches(np.zeros((5, 5)), 2)

    @settings(deadline=None, max_examples=25)
    @given(st.integers(0, 10**6))
    def test_pooled_between_mean_and_max(self, seed):
        rng = np.random.default_rng(seed)
        cells = rng.random((4, 4)).astype(np.float32)
        pooled = pool_patches(cells, 2)
        for i in range(2):
            for j in range(2):
                block = cells[2 * i : 2 * i + 2, 2 * j : 2 * j + 2]
                assert pooled[i, j] >= block.mean() - 1e-7
                assert pooled[i, j] <= block.max() + 1e-7


class TestGlobalQuality:
    def test_mean_of_known_grid(self):
        assert global_quality(np.array([[0.2, 0.4], [0.6, 0.8]])) == pytest.approx(0.5)

    def test_zeros(self):
        assert global_quality(np.zeros((3, 3))) == 0.0

    def test_matches_summation_oracle(self, rng):
        grid = rng.random((8, 8))
        total = 0.0
        for row in grid:
            for v in row:
                total += float(v)
        assert abs(global_quality(grid) - total / 64) < 1e-6

    def test_permutation_invariant(self, rng):
        grid = rng.random((8, 8))
        shuffled = rng.permutation(grid.ravel()).reshape(8, 8)
        assert global_quality(grid) == pytest.approx(global_quality(shuffled))


class TestScorerResponses:
    def test_monotone_blur_response(self):
        img = make_clean_image(11, 128, 128)
        cfg = ScorerConfig(n=4, cells_per_patch_side=2)
        means = []
        for sigma in (1.0, 2.5):
            blurred = ndimage.gaussian_filter(img, sigma=(sigma, sigma, 0.0), mode="nearest")
            means.append(score_cells(np.clip(blurred, 0, 1), cfg).mean())
        assert means[0] > means[1]

    def test_monotone_noise_response(self, rng):
        img = make_clean_image(12, 128, 128)
        cfg = ScorerConfig(n=4, cells_per_patch_side=2)
        means = []
        for sigma in (0.05, 0.15):
            noisy = np.clip(img + rng.normal(0, sigma, img.shape), 0, 1).astype(np.float32)
            means.append(score_cells(noisy, cfg).mean())
        assert means[0] > means[1]

    def test_default_scorer_contract(self):
        img = make_clean_image(13, 64, 64)
        scorer = DefaultScorer(ScorerConfig(n=2))
        first = scorer.score_map(img)
        second = scorer.score_map(img)
        np.testing.assert_array_equal(first, second)
        assert first.shape == (2, 2)
        assert first.min() >= 0.0 and first.max() <= 1.0


class TestMapSerialization:
    def test_text_round_trip(self, rng):
        grid = (rng.random((4, 4)) * 1000).round() / 1000
        parsed = map_from_text(map_to_text(grid))
        np.testing.assert_allclose(parsed, grid, atol=1e-6)

    def test_malformed_grid_rejected(self):
        with pytest.raises(ValueError):
            map_from_text("0.1 0.2\n0.3\n")
