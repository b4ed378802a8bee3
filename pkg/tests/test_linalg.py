import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oas_codebook.errors import InvalidArgumentError, SingularMatrixError
from oas_codebook.linalg import Codebook, SensingMatrix, generate_codebook, pseudo_inverse, sel


class TestGenerateCodebook:
    def test_full_scale_statistics(self):
        var = 1 / np.sqrt(50)
        cb = generate_codebook(1000, 200, var, seed=7)
        assert cb.vectors.shape == (1000, 200)
        entries = cb.vectors.ravel()
        assert abs(entries.var() - var) <= 0.05 * var
        assert abs(entries.mean()) <= 3 * np.sqrt(var / entries.size)

    def test_scalar_codebook_is_reproducible(self):
        a = generate_codebook(1, 1, 1.0, seed=0)
        b = generate_codebook(1, 1, 1.0, seed=0)
        assert a.vectors.shape == (1, 1)
        assert a.vectors[0, 0] == b.vectors[0, 0]

    def test_seed_contract(self):
        a = generate_codebook(3, 4, 0.25, seed=1)
        b = generate_codebook(3, 4, 0.25, seed=1)
        c = generate_codebook(3, 4, 0.25, seed=2)
        np.testing.assert_array_equal(a.vectors, b.vectors)
        assert not np.array_equal(a.vectors, c.vectors)

    @pytest.mark.parametrize("S,N,var", [(0, 4, 1.0), (3, 0, 1.0), (3, 4, 0.0), (3, 4, -1.0)])
    def test_rejects_bad_arguments(self, S, N, var):
        with pytest.raises(InvalidArgumentError):
            generate_codebook(S, N, var, seed=0)

    def test_entries_are_read_only(self):
        cb = generate_codebook(2, 2, 1.0, seed=0)
        with pytest.raises(ValueError):
            cb.vectors[0, 0] = 1.0

    def test_save_load_round_trip(self, tmp_path):
        cb = generate_codebook(5, 7, 0.3, seed=11)
        path = tmp_path / "cb.txt"
        cb.save(path)
        assert path.read_text().startswith("# 5 7 0.3 11")
        back = Codebook.load(path)
        np.testing.assert_array_equal(back.vectors, cb.vectors)
        assert (back.entry_variance, back.seed) == (0.3, 11)

    def test_load_rejects_shape_mismatch(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("# 2 3 1.0 0\n1 2 3\n")
        with pytest.raises(InvalidArgumentError):
            Codebook.load(path)


class TestSel:
    def test_displayed_example(self):
        # {1, 3} in 1-based indexing
        P = sel([0, 2], 4).to_dense()
        np.testing.assert_array_equal(P, [[1, 0, 0, 0], [0, 0, 1, 0]])

    def test_full_selection_is_identity(self):
        np.testing.assert_array_equal(sel(range(5), 5).to_dense(), np.eye(5))

    def test_single_index(self):
        np.testing.assert_array_equal(sel([1], 2).to_dense(), [[0, 1]])

    @pytest.mark.parametrize("idx", [[0, 0], [4], [-1]])
    def test_rejects_invalid_sets(self, idx):
        with pytest.raises(InvalidArgumentError):
            sel(idx, 4)

    def test_gather_scatter_match_dense(self):
        P = sel([3, 0, 2], 5)
        x = np.arange(5.0)
        np.testing.assert_array_equal(P.apply(x), P.to_dense() @ x)
        v = np.array([1.0, 2.0, 3.0])
        np.testing.assert_array_equal(P.adjoint(v), P.to_dense().T @ v)
        A = np.arange(15.0).reshape(3, 5)
        np.testing.assert_array_equal(P.columns_of(A), A @ P.to_dense().T)

    @given(st.integers(1, 12).flatmap(
        lambda n: st.tuples(st.just(n), st.permutations(range(n)).flatmap(
            lambda p: st.integers(0, n).map(lambda k: list(p[:k]))))))
    def test_orthonormal_rows_and_partition(self, case):
        N, idx = case
        P = sel(idx, N)
        E = P.complement()
        Pd, Ed = P.to_dense(), E.to_dense()
        np.testing.assert_array_equal(Pd @ Pd.T, np.eye(len(idx)))
        np.testing.assert_array_equal(Pd.T @ Pd + Ed.T @ Ed, np.eye(N))


class TestPseudoInverse:
    def test_identity(self):
        np.testing.assert_allclose(pseudo_inverse(np.eye(3)), np.eye(3), atol=1e-15)

    def test_scalar_column(self):
        np.testing.assert_allclose(pseudo_inverse([[2.0], [0.0]]), [[0.5, 0.0]], atol=1e-15)

    def test_matches_independent_least_squares(self):
        rng = np.random.default_rng(3)
        Q = rng.standard_normal((8, 4))
        F = pseudo_inverse(Q)
        oracle = np.linalg.lstsq(Q, np.eye(8), rcond=None)[0]
        np.testing.assert_allclose(F, oracle, atol=1e-12)
        assert np.max(np.abs(F @ Q - np.eye(4))) <= 1e-8

    def test_rank_deficient_raises_with_condition(self):
        Q = np.ones((5, 2))
        with pytest.raises(SingularMatrixError) as info:
            pseudo_inverse(Q)
        assert info.value.condition > 1e10

    def test_wide_matrix_rejected(self):
        with pytest.raises(InvalidArgumentError):
            pseudo_inverse(np.ones((2, 3)))

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 30), st.integers(0, 10), st.integers(0, 2**32 - 1))
    def test_left_inverse_property(self, L, extra, seed):
        Q = np.random.default_rng(seed).standard_normal((L + extra, L))
        F = pseudo_inverse(Q)
        assert np.max(np.abs(F @ Q - np.eye(L))) <= 1e-8


def test_sensing_matrix_rows_match_codebook():
    cb = generate_codebook(6, 3, 1.0, seed=4)
    A = SensingMatrix.from_codebook(cb, [5, 0, 2])
    for row, i in zip(A.rows, A.source_indices):
        np.testing.assert_array_equal(row, cb.vectors[i])
    with pytest.raises(InvalidArgumentError):
        SensingMatrix.from_codebook(cb, [1, 1])
