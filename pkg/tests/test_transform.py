import numpy as np
import pytest

from frustra.errors import ConfigError, DataError
from frustra.transform import (SplitSpec, YeoJohnsonScaler, balanced_split, fit_lambda,
                               read_params, skewness, write_params, yeo_johnson,
                               yeo_johnson_inverse)


class TestSplitSpec:
    def test_fractions_must_sum_to_one(self):
        with pytest.raises(ConfigError):
            SplitSpec(0.5, 0.2, 0.2, seed=0)

    def test_fractions_must_be_positive(self):
        with pytest.raises(ConfigError):
            SplitSpec(1.0, -0.1, 0.1, seed=0)


class TestBalancedSplit:
    def _labels(self, n0, n1):
        return np.array([0] * n0 + [1] * n1)

    def test_sizes_floor_floor_remainder(self):
        y = self._labels(100, 250)
        split = balanced_split(y, SplitSpec(seed=1))
        assert split.train_idx.shape[0] == 140  # 2 * floor(0.7 * 100)
        assert split.val_idx.shape[0] == 30     # 2 * floor(0.15 * 100)
        assert split.test_idx.shape[0] == 30    # 2 * remainder

    def test_each_split_is_class_balanced(self):
        y = self._labels(473, 101)
        split = balanced_split(y, SplitSpec(seed=3))
        for idx in (split.train_idx, split.val_idx, split.test_idx):
            part = y[idx]
            assert np.sum(part == 0) == np.sum(part == 1)

    def test_splits_are_disjoint_and_capped(self):
        y = self._labels(50, 80)
        split = balanced_split(y, SplitSpec(seed=9))
        all_idx = np.concatenate([split.train_idx, split.val_idx, split.test_idx])
        assert len(set(all_idx.tolist())) == all_idx.shape[0]
        assert all_idx.shape[0] == 100  # 2 * min(class counts)

    def test_same_seed_reproduces_membership(self):
        y = self._labels(100, 100)
        a = balanced_split(y, SplitSpec(seed=42))
        b = balanced_split(y, SplitSpec(seed=42))
        assert np.array_equal(a.train_idx, b.train_idx)
        assert np.array_equal(a.val_idx, b.val_idx)
        assert np.array_equal(a.test_idx, b.test_idx)

    def test_different_seed_changes_membership(self):
        y = self._labels(100, 100)
        a = balanced_split(y, SplitSpec(seed=1))
        b = balanced_split(y, SplitSpec(seed=2))
        assert not np.array_equal(a.train_idx, b.train_idx)

    def test_membership_is_function_of_ids_not_row_order(self, rng):
        y = self._labels(40, 40)
        ids = [f"id{i:03d}" for i in range(80)]
        split = balanced_split(y, SplitSpec(seed=5), ids=ids)
        train_ids = {ids[i] for i in split.train_idx}

        perm = rng.permutation(80)
        y_perm = y[perm]
        ids_perm = [ids[i] for i in perm]
        split_perm = balanced_split(y_perm, SplitSpec(seed=5), ids=ids_perm)
        train_ids_perm = {ids_perm[i] for i in split_perm.train_idx}
        assert train_ids == train_ids_perm

    def test_duplicate_ids_rejected(self):
        y = self._labels(10, 10)
        with pytest.raises(DataError):
            balanced_split(y, SplitSpec(seed=0), ids=["x"] * 20)

    def test_tiny_class_rejected(self):
        with pytest.raises(DataError):
            balanced_split(self._labels(9, 100), SplitSpec(seed=0))

    def test_single_class_rejected(self):
        with pytest.raises(DataError):
            balanced_split(np.zeros(100, dtype=int), SplitSpec(seed=0))


class TestYeoJohnsonTransform:
    def test_lambda_one_is_exact_identity(self, rng):
        x = rng.uniform(0, 100, 1000)
        assert np.array_equal(yeo_johnson(x, 1.0), x)

    def test_lambda_one_identity_on_negatives_too(self, rng):
        x = rng.uniform(-50, 50, 1000)
        assert np.array_equal(yeo_johnson(x, 1.0), x)

    def test_known_branch_values(self):
        # lambda 0 on y >= 0 is log1p; lambda 2 on y < 0 is -log1p(-y)
        assert yeo_johnson(np.array([np.e - 1.0]), 0.0)[0] == pytest.approx(1.0)
        assert yeo_johnson(np.array([-(np.e - 1.0)]), 2.0)[0] == pytest.approx(-1.0)

    def test_strictly_monotone(self, rng):
        for lam in (-2.0, -0.5, 0.0, 0.37, 1.0, 1.8, 2.0, 3.5):
            x = np.sort(rng.uniform(-20, 20, 500))
            t = yeo_johnson(x, lam)
            assert np.all(np.diff(t) > 0), lam

    def test_inverse_round_trip_within_1e9(self, rng):
        for lam in (-3.0, -1.0, 0.0, 0.5, 1.0, 1.5, 2.0, 4.0):
            x = rng.uniform(-30, 30, 2000)
            back = yeo_johnson_inverse(yeo_johnson(x, lam), lam)
            assert np.max(np.abs(back - x)) < 1e-9, lam


class TestFitLambda:
    def test_gaussian_recovers_identity(self, rng):
        x = rng.standard_normal(10_000)
        assert abs(fit_lambda(x) - 1.0) < 0.1

    def test_log_normal_needs_shrinking_lambda(self, rng):
        x = np.exp(rng.standard_normal(5000))
        lam = fit_lambda(x)
        assert lam < 0.5  # strong right skew pulls lambda well below identity

    def test_reduces_skew(self, rng):
        x = np.exp(rng.standard_normal(5000))
        t = yeo_johnson(x, fit_lambda(x))
        assert abs(skewness(t)) <= abs(skewness(x)) + 0.05

    def test_non_finite_rejected(self):
        with pytest.raises(DataError):
            fit_lambda(np.array([1.0, np.nan]))


class TestYeoJohnsonScaler:
    def test_train_matrix_standardized(self, rng):
        X = np.column_stack([
            np.exp(rng.standard_normal(4000)),
            rng.uniform(-1, 1, 4000),
            rng.standard_normal(4000) * 5 + 3,
        ])
        scaler = YeoJohnsonScaler().fit(X)
        Z = scaler.transform(X)
        assert np.max(np.abs(Z.mean(axis=0))) < 1e-9
        assert np.max(np.abs(Z.std(axis=0) - 1.0)) < 1e-9

    def test_never_refits_on_new_data(self, rng):
        X_train = rng.standard_normal((500, 2))
        X_test = rng.standard_normal((500, 2)) + 10.0
        scaler = YeoJohnsonScaler().fit(X_train)
        Z_test = scaler.transform(X_test)
        # transformed test data is NOT centered: train parameters were reused
        assert np.min(np.abs(Z_test.mean(axis=0))) > 1.0

    def test_constant_feature_passthrough(self, rng):
        X = np.column_stack([np.full(100, 7.0), rng.standard_normal(100)])
        scaler = YeoJohnsonScaler().fit(X)
        assert scaler.zero_variance_.tolist() == [True, False]
        Z = scaler.transform(X)
        assert np.array_equal(Z[:, 0], X[:, 0])

    def test_inverse_transform_round_trips(self, rng):
        X = np.column_stack([np.exp(rng.standard_normal(1000)),
                             rng.uniform(-5, 5, 1000)])
        scaler = YeoJohnsonScaler().fit(X)
        back = scaler.inverse_transform(scaler.transform(X))
        assert np.max(np.abs(back - X)) < 1e-8

    def test_column_mismatch_rejected(self, rng):
        scaler = YeoJohnsonScaler().fit(rng.standard_normal((50, 3)))
        with pytest.raises(DataError):
            scaler.transform(rng.standard_normal((50, 2)))

    def test_non_finite_rejected(self):
        with pytest.raises(DataError):
            YeoJohnsonScaler().fit(np.array([[1.0], [np.inf]]))

    def test_params_file_round_trip(self, tmp_path, rng):
        X = np.column_stack([np.exp(rng.standard_normal(500)), np.full(500, 2.0)])
        scaler = YeoJohnsonScaler().fit(X)
        path = tmp_path / "params.csv"
        write_params(scaler, ("a", "b"), path, meta={"config_hash": "h"})
        loaded, names = read_params(path)
        assert names == ("a", "b")
        assert np.array_equal(loaded.lambdas_, scaler.lambdas_)
        assert np.array_equal(loaded.means_, scaler.means_)
        assert np.array_equal(loaded.stds_, scaler.stds_)
        assert np.array_equal(loaded.zero_variance_, scaler.zero_variance_)
        assert np.array_equal(loaded.transform(X), scaler.transform(X))

    def test_skew_does_not_increase_per_feature(self, rng):
        X = np.column_stack([
            np.exp(rng.standard_normal(3000)),          # strong right skew
            -np.exp(rng.standard_normal(3000)),         # strong left skew
            rng.standard_normal(3000),                  # already symmetric
            rng.integers(0, 2, 3000).astype(float),     # two-point mass
        ])
        scaler = YeoJohnsonScaler().fit(X)
        for j in range(X.shape[1]):
            if scaler.zero_variance_[j]:
                continue
            t = yeo_johnson(X[:, j], scaler.lambdas_[j])
            assert abs(skewness(t)) <= abs(skewness(X[:, j])) + 0.05, j
