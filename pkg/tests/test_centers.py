import math

import numpy as np
import pytest

from atcl.centers import (
    CenterBank,
    accumulate_center_delta,
    apply_center_update,
    hard_negatives,
    init_centers,
    nearest_negative,
)
from atcl.errors import InvalidShape, ZeroVector
from atcl.geometry import l2_normalize

from oracles import literal_center_delta

THREE = CenterBank(np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]]))


def random_records(rng, M, K, n, p_active=0.7):
    U = l2_normalize(rng.normal(size=(M, n)))
    labels = rng.integers(1, K + 1, size=M)
    hard = np.array([rng.choice([j for j in range(1, K + 1) if j != y]) for y in labels])
    alpha = rng.uniform(0, math.pi, size=M)
    beta = rng.uniform(0, math.pi, size=M)
    active = rng.random(M) < p_active
    return U, labels, hard, alpha, beta, active


class TestInit:
    def test_seeded(self):
        a = init_centers(3, 4, seed=7)
        b = init_centers(3, 4, seed=7)
        np.testing.assert_array_equal(a.centers, b.centers)
        assert not np.array_equal(a.centers, init_centers(3, 4, seed=8).centers)

    def test_unit_norm(self):
        bank = init_centers(12, 9, seed=1)
        np.testing.assert_allclose(np.linalg.norm(bank.centers, axis=1), 1, atol=1e-9)

    @pytest.mark.parametrize("K,n", [(1, 8), (4, 1)])
    def test_invalid_shape(self, K, n):
        with pytest.raises(InvalidShape):
            init_centers(K, n, seed=0)

    def test_free_bank_keeps_scale(self):
        bank = init_centers(5, 6, seed=0, unit=False)
        assert np.all(np.linalg.norm(bank.centers, axis=1) < 0.1)

    def test_bank_is_read_only(self):
        bank = init_centers(3, 3, seed=0)
        with pytest.raises(ValueError):
            bank.centers[0, 0] = 5.0


class TestNearestNegative:
    def test_picks_closest_other(self):
        idx, angle = nearest_negative(THREE, l2_normalize([0.9, 0.1]), 1)
        assert idx == 2
        assert angle == pytest.approx(math.acos(0.1 / math.hypot(0.9, 0.1)))

    def test_two_classes(self):
        bank = init_centers(2, 5, seed=3)
        rng = np.random.default_rng(0)
        for _ in range(20):
            assert nearest_negative(bank, l2_normalize(rng.normal(size=5)), 1)[0] == 2

    def test_tie_goes_to_smallest_index(self):
        idx, angle = nearest_negative(THREE, np.array([0.0, 1.0]), 2)
        assert idx == 1
        assert angle == pytest.approx(math.pi / 2)

    def test_never_own_label(self):
        rng = np.random.default_rng(5)
        bank = init_centers(6, 4, seed=2)
        U = l2_normalize(rng.normal(size=(200, 4)))
        labels = rng.integers(1, 7, size=200)
        hard, beta = hard_negatives(bank, U, labels)
        assert np.all(hard != labels)
        # exhaustive check of the minimum
        for u, y, h, b in zip(U, labels, hard, beta):
            others = [math.acos(np.clip(u @ bank.center(j), -1, 1)) for j in range(1, 7) if j != y]
            assert b == pytest.approx(min(others), abs=1e-12)


class TestCenterDelta:
    def test_inactive_batch_gives_zero(self):
        rng = np.random.default_rng(0)
        U, labels, hard, alpha, beta, _ = random_records(rng, 8, 4, 3)
        delta = accumulate_center_delta(init_centers(4, 3, 0), U, labels, hard, alpha, beta,
                                        np.zeros(8, bool))
        assert np.all(delta == 0)

    def test_single_active_sample(self):
        delta = accumulate_center_delta(
            THREE, np.array([[0.0, 1.0]]), np.array([1]), np.array([2]),
            np.array([math.pi / 2]), np.array([math.pi / 4]), np.array([True]))
        np.testing.assert_allclose(delta[0], [0, -0.5], atol=1e-15)
        np.testing.assert_allclose(delta[1], [0, 1 / math.sin(math.pi / 4) / 2], atol=1e-15)
        np.testing.assert_array_equal(delta[2], [0, 0])

    def test_two_same_class_samples_average_over_three(self):
        u = np.array([[0.6, 0.8], [0.6, 0.8]])
        alpha = np.array([0.5, 0.5])
        delta = accumulate_center_delta(THREE, u, np.array([1, 1]), np.array([3, 3]), alpha,
                                        np.array([1.0, 1.0]), np.array([True, True]))
        np.testing.assert_allclose(delta[0], -2 * u[0] / math.sin(0.5) / 3)
        np.testing.assert_allclose(delta[2], 2 * u[0] / math.sin(1.0) / 3)

    def test_matches_literal_loop(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            K, n, M = rng.integers(2, 7), rng.integers(2, 9), rng.integers(1, 25)
            rec = random_records(rng, M, K, n)
            got = accumulate_center_delta(init_centers(K, n, 0), *rec)
            np.testing.assert_array_equal(got, literal_center_delta(K, *rec))

    def test_permutation_invariant(self):
        rng = np.random.default_rng(2)
        rec = random_records(rng, 30, 5, 4)
        bank = init_centers(5, 4, 0)
        perm = rng.permutation(30)
        a = accumulate_center_delta(bank, *rec)
        b = accumulate_center_delta(bank, *(r[perm] for r in rec))
        np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-14)

    def test_sin_floor_bounds_update(self):
        delta = accumulate_center_delta(THREE, np.array([[1.0, 0.0]]), np.array([1]),
                                        np.array([2]), np.array([0.0]), np.array([math.pi]),
                                        np.array([True]))
        assert np.all(np.isfinite(delta))
        assert np.abs(delta).max() == pytest.approx(0.5e7)


class TestApplyUpdate:
    def test_zero_delta_and_zero_lr(self):
        bank = init_centers(4, 3, seed=0)
        same = apply_center_update(bank, np.zeros((4, 3)), 0.1)
        np.testing.assert_allclose(same.centers, bank.centers, atol=1e-15)
        moved = apply_center_update(bank, np.ones((4, 3)), 0.0)
        np.testing.assert_array_equal(moved.centers, bank.centers)

    def test_direct_arithmetic(self):
        bank = CenterBank(np.array([[1.0, 0.0], [0.0, 1.0]]))
        delta = np.array([[0.0, -1.0], [0.0, 0.0]])
        out = apply_center_update(bank, delta, 1.0)
        np.testing.assert_allclose(out.centers[0], [math.sqrt(2) / 2, math.sqrt(2) / 2])

    def test_annihilated_center(self):
        bank = CenterBank(np.array([[1.0, 0.0], [0.0, 1.0]]))
        with pytest.raises(ZeroVector):
            apply_center_update(bank, np.array([[1.0, 0.0], [0.0, 0.0]]), 1.0)

    def test_stays_unit(self):
        rng = np.random.default_rng(4)
        bank = init_centers(5, 6, seed=0)
        for _ in range(20):
            bank = apply_center_update(bank, rng.normal(size=(5, 6)), 0.3)
            np.testing.assert_allclose(np.linalg.norm(bank.centers, axis=1), 1, atol=1e-9)


def test_update_shrinks_positive_angle_and_grows_negative_angle():
    rng = np.random.default_rng(9)
    checked = 0
    while checked < 200:
        K, n = rng.integers(2, 6), rng.integers(2, 10)
        bank = init_centers(K, n, seed=int(rng.integers(1 << 30)))
        u = l2_normalize(rng.normal(size=(1, n)))
        y = np.array([rng.integers(1, K + 1)])
        alpha = math.acos(np.clip(u[0] @ bank.center(y[0]), -1, 1))
        hard, beta = hard_negatives(bank, u, y)
        if min(math.sin(alpha), math.sin(beta[0])) < 1e-3:
            continue
        delta = accumulate_center_delta(bank, u, y, hard, np.array([alpha]), beta,
                                        np.array([True]))
        new = apply_center_update(bank, delta, 1e-3)
        new_hard, _ = hard_negatives(new, u, y)
        if new_hard[0] != hard[0]:
            continue
        new_alpha = math.acos(np.clip(u[0] @ new.center(y[0]), -1, 1))
        new_beta = math.acos(np.clip(u[0] @ new.center(hard[0]), -1, 1))
        assert new_alpha < alpha
        assert new_beta > beta[0]
        checked += 1
