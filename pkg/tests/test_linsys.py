import numpy as np
import pytest
import scipy.sparse as sp

from hotv.linsys import (
    LinearOperator,
    load_operator_csv,
    normalize_system,
    power_iteration,
    random_sampling_operator,
    save_operator_csv,
    spectral_norm,
)


class TestLinearOperator:
    def test_adjoint_consistency_random_probes(self):
        rng = np.random.default_rng(3)
        mat = sp.random(17, 29, density=0.3, random_state=5, format="csr")
        op = LinearOperator.from_matrix(mat)
        for _ in range(100):
            x = rng.standard_normal(29)
            y = rng.standard_normal(17)
            assert float(op.forward(x) @ y) == pytest.approx(
                float(x @ op.adjoint(y)), rel=1e-12
            )

    def test_dimension_checks(self):
        op = LinearOperator.identity(4)
        with pytest.raises(ValueError):
            op.forward(np.zeros(5))
        with pytest.raises(ValueError):
            op.adjoint(np.zeros(5))

    def test_matrix_free(self):
        op = LinearOperator(3, 3, matvec=lambda x: 2 * x, rmatvec=lambda y: 2 * y)
        np.testing.assert_array_equal(op.forward(np.ones(3)), 2 * np.ones(3))
        with pytest.raises(ValueError):
            op.triplets()

    def test_scaled(self):
        op = LinearOperator.diagonal([1.0, 2.0, 4.0]).scaled(0.5)
        np.testing.assert_array_equal(op.forward(np.ones(3)), [0.5, 1.0, 2.0])


class TestRandomSamplingOperator:
    def test_full_density_is_dense_in_unit_interval(self):
        op = random_sampling_operator(8, 6, 1.0, seed=1)
        dense = op.matrix.toarray()
        assert np.all((dense > 0) & (dense < 1))

    def test_nonzero_fraction_near_density(self):
        op = random_sampling_operator(64, 256, 0.1, seed=123)
        frac = op.matrix.nnz / (64 * 256)
        assert 0.07 <= frac <= 0.13

    def test_same_seed_bit_identical(self):
        a = random_sampling_operator(32, 48, 0.2, seed=77)
        b = random_sampling_operator(32, 48, 0.2, seed=77)
        for x, y in zip(a.triplets(), b.triplets()):
            np.testing.assert_array_equal(x, y)

    def test_different_seed_differs(self):
        a = random_sampling_operator(32, 48, 0.2, seed=77)
        b = random_sampling_operator(32, 48, 0.2, seed=78)
        assert a.matrix.nnz != b.matrix.nnz or np.any(
            a.matrix.toarray() != b.matrix.toarray()
        )

    def test_density_validation(self):
        with pytest.raises(ValueError):
            random_sampling_operator(4, 4, 0.0, seed=0)
        with pytest.raises(ValueError):
            random_sampling_operator(4, 4, 1.5, seed=0)


class TestSpectralNorm:
    def test_identity(self):
        assert spectral_norm(LinearOperator.identity(10)) == pytest.approx(
            1.0, rel=1e-6
        )

    def test_diagonal(self):
        op = LinearOperator.diagonal([3.0, 1.0])
        assert spectral_norm(op, tol=1e-10, max_iter=2000) == pytest.approx(
            3.0, rel=1e-8
        )

    def test_matches_dense_eigendecomposition(self):
        op = random_sampling_operator(32, 48, 0.3, seed=9)
        dense = op.matrix.toarray()
        expected = float(np.sqrt(np.linalg.eigvalsh(dense.T @ dense).max()))
        got = spectral_norm(op, tol=1e-12, max_iter=5000)
        assert got == pytest.approx(expected, rel=1e-8)

    def test_estimates_monotone_nondecreasing(self):
        op = random_sampling_operator(24, 40, 0.2, seed=4)
        res = power_iteration(op, tol=1e-12, max_iter=300)
        ests = np.array(res.estimates)
        assert np.all(np.diff(ests) >= -1e-12)

    def test_zero_operator_flagged(self):
        op = LinearOperator.from_matrix(sp.csr_matrix((5, 5)))
        with pytest.warns(UserWarning):
            assert spectral_norm(op) == 0.0

    def test_nonconvergence_flagged(self):
        op = random_sampling_operator(24, 40, 0.2, seed=4)
        with pytest.warns(UserWarning):
            spectral_norm(op, tol=1e-15, max_iter=2)


class TestNormalizeSystem:
    def test_already_normalized_fixed_point(self):
        op = LinearOperator.identity(6)
        b = np.arange(6.0)
        sys1 = normalize_system(op, b)
        assert sys1.scale == pytest.approx(1.0, rel=1e-6)
        np.testing.assert_allclose(sys1.data, b, rtol=1e-6)

    def test_scalar_case(self):
        op = LinearOperator.diagonal([5.0])
        sys1 = normalize_system(op, np.array([10.0]), tol=1e-10)
        assert sys1.scale == pytest.approx(5.0, rel=1e-8)
        np.testing.assert_allclose(sys1.data, [2.0], rtol=1e-8)
        np.testing.assert_allclose(
            sys1.operator.forward(np.ones(1)), [1.0], rtol=1e-8
        )

    def test_resulting_norm_is_one(self):
        op = random_sampling_operator(20, 30, 0.4, seed=11)
        sys1 = normalize_system(op, np.zeros(20), tol=1e-10)
        dense = sys1.operator.matrix.toarray()
        norm = np.sqrt(np.linalg.eigvalsh(dense.T @ dense).max())
        assert abs(norm - 1.0) < 1e-6

    def test_idempotent_up_to_tol(self):
        op = random_sampling_operator(20, 30, 0.4, seed=11)
        b = np.random.default_rng(0).standard_normal(20)
        sys1 = normalize_system(op, b, tol=1e-10)
        sys2 = normalize_system(sys1.operator, sys1.data, tol=1e-10)
        assert sys2.scale == pytest.approx(1.0, abs=1e-6)
        np.testing.assert_allclose(sys2.data, sys1.data, rtol=1e-6)

    def test_zero_operator_rejected(self):
        op = LinearOperator.from_matrix(sp.csr_matrix((5, 5)))
        with pytest.warns(UserWarning):
            with pytest.raises(ValueError):
                normalize_system(op, np.zeros(5))


class TestCsvRoundTrip:
    def test_bit_exact(self, tmp_path):
        op = random_sampling_operator(13, 21, 0.3, seed=2)
        path = tmp_path / "op.csv"
        save_operator_csv(op, path)
        back = load_operator_csv(path)
        assert back.shape == op.shape
        for x, y in zip(op.triplets(), back.triplets()):
            np.testing.assert_array_equal(x, y)

    def test_header(self, tmp_path):
        op = random_sampling_operator(4, 5, 0.5, seed=3)
        path = tmp_path / "op.csv"
        save_operator_csv(op, path)
        first = path.read_text().splitlines()[0]
        assert first == f"4,5,{op.matrix.nnz}"
