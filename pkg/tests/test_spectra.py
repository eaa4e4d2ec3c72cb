import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spikeout import (
    CapabilityError,
    DataError,
    DirectionSpec,
    MixtureModelSpec,
    ab_split_eigenvalues,
    build_variable_specific,
    generate,
    sample_covariance_spectrum,
)
from spikeout.rng import stream


def random_matrix(seed, d, n, scale=1.0):
    return scale * stream(seed, "x").standard_normal((d, n))


class TestSpectrumBasics:
    def test_identity_columns(self):
        dec = sample_covariance_spectrum(np.eye(2))
        np.testing.assert_allclose(dec.eigenvalues, [0.5, 0.5], atol=1e-15)

    def test_single_row(self):
        dec = sample_covariance_spectrum(np.array([[2.0, -2.0]]))
        np.testing.assert_allclose(dec.eigenvalues, [4.0], atol=1e-14)

    def test_primal_and_dual_paths_agree(self):
        x = random_matrix(42, 5, 4)
        primal = sample_covariance_spectrum(x, method="primal")
        dual = sample_covariance_spectrum(x, method="dual")
        np.testing.assert_allclose(primal.eigenvalues, dual.eigenvalues, atol=1e-10)
        for i in range(min(primal.n_retained, dual.n_retained)):
            a, b = primal.eigenvectors[:, i], dual.eigenvectors[:, i]
            assert min(np.abs(a - b).max(), np.abs(a + b).max()) < 1e-8

    def test_default_method_follows_shape(self):
        assert sample_covariance_spectrum(random_matrix(0, 6, 3)).method == "dual"
        assert sample_covariance_spectrum(random_matrix(0, 3, 6)).method == "primal"

    def test_rejects_non_finite(self):
        x = np.array([[1.0, np.nan]])
        with pytest.raises(DataError):
            sample_covariance_spectrum(x)

    def test_rank_deficient_matrix_reports_zeros(self):
        col = np.arange(1.0, 5.0)[:, None]
        x = np.hstack([col, 2 * col, -col])
        dec = sample_covariance_spectrum(x)
        assert dec.n_retained == 1
        assert dec.eigenvalues[0] > 0
        np.testing.assert_array_equal(dec.eigenvalues[1:], 0.0)

    def test_zero_matrix(self):
        dec = sample_covariance_spectrum(np.zeros((3, 2)))
        np.testing.assert_array_equal(dec.eigenvalues, 0.0)
        assert dec.n_retained == 0

    def test_sign_convention(self):
        dec = sample_covariance_spectrum(random_matrix(7, 8, 5))
        for i in range(dec.n_retained):
            col = dec.eigenvectors[:, i]
            assert col[np.abs(col).argmax()] > 0

    def test_centered_flag_removes_means(self):
        x = random_matrix(3, 4, 30) + 100.0
        dec = sample_covariance_spectrum(x, centered=True)
        assert dec.eigenvalues[0] < 50  # the mean offset must not dominate
        centered = x - x.mean(axis=1, keepdims=True)
        expected = np.linalg.eigvalsh(centered @ centered.T / 29)[::-1]
        np.testing.assert_allclose(dec.eigenvalues, np.maximum(expected, 0), atol=1e-9)

    def test_csv_exports(self, tmp_path):
        dec = sample_covariance_spectrum(random_matrix(1, 3, 3))
        dec.write_eigenvalues_csv(tmp_path / "spectrum.csv")
        lines = (tmp_path / "spectrum.csv").read_text().splitlines()
        assert lines[0] == "index,eigenvalue"
        assert len(lines) == 4
        dec.write_eigenvectors_csv(tmp_path / "vec.csv")
        assert (tmp_path / "vec.csv").read_text().splitlines()[0].startswith("pc_1")


class TestSpectrumInvariants:
    @given(seed=st.integers(0, 10_000), d=st.integers(1, 12), n=st.integers(1, 12))
    @settings(max_examples=40)
    def test_sorted_orthonormal_residual(self, seed, d, n):
        x = random_matrix(seed, d, n)
        dec = sample_covariance_spectrum(x)
        lam = dec.eigenvalues
        assert np.all(np.diff(lam) <= 1e-12)
        assert np.all(lam >= 0)
        v = dec.eigenvectors
        if dec.n_retained:
            gram = v.T @ v
            assert np.abs(gram - np.eye(dec.n_retained)).max() <= 1e-8
            sigma_v = x @ (x.T @ v) / n
            resid = np.linalg.norm(sigma_v - v * lam[: dec.n_retained], axis=0)
            assert resid.max() <= 1e-6 * max(lam[0], 1.0)

    @given(seed=st.integers(0, 10_000), d=st.integers(1, 12), n=st.integers(1, 12))
    @settings(max_examples=40)
    def test_trace_identity(self, seed, d, n):
        x = random_matrix(seed, d, n)
        dec = sample_covariance_spectrum(x)
        total = float(np.sum(x**2)) / n
        assert abs(dec.eigenvalues.sum() - total) <= 1e-8 * max(total, 1.0)

    @given(seed=st.integers(0, 10_000))
    @settings(max_examples=25)
    def test_scale_equivariance(self, seed):
        x = random_matrix(seed, 6, 5)
        base = sample_covariance_spectrum(x)
        scaled = sample_covariance_spectrum(3.0 * x)
        np.testing.assert_allclose(
            scaled.eigenvalues, 9.0 * base.eigenvalues, rtol=1e-8, atol=1e-12
        )
        for i in range(base.n_retained):
            a, b = base.eigenvectors[:, i], scaled.eigenvectors[:, i]
            assert min(np.abs(a - b).max(), np.abs(a + b).max()) < 1e-8

    @given(seed=st.integers(0, 10_000), d=st.integers(2, 30), n=st.integers(2, 30))
    @settings(max_examples=40)
    def test_primal_dual_equivalence_relative(self, seed, d, n):
        x = random_matrix(seed, d, n)
        p = sample_covariance_spectrum(x, method="primal").eigenvalues
        q = sample_covariance_spectrum(x, method="dual").eigenvalues
        scale = max(p[0], 1e-300)
        assert np.abs(p - q).max() <= 1e-10 * scale


class TestABSplit:
    def test_rank_one_spike_part(self):
        ds = generate(build_variable_specific(6, {1}, 9.0, 0.3), 8, 5)
        eig_a, _ = ab_split_eigenvalues(ds, 1)
        y1 = ds.coefficients[0]
        assert abs(eig_a[0] - float(y1 @ y1) / 8) <= 1e-12 * max(eig_a[0], 1.0)
        assert np.abs(eig_a[1:]).max() <= 1e-10  # rank bound: at most K nonzero

    def test_rank_bound(self):
        ds = generate(build_variable_specific(10, {1, 2}, 9.0, 0.3), 12, 5)
        eig_a, _ = ab_split_eigenvalues(ds, 3)
        assert np.abs(eig_a[3:]).max() <= 1e-9

    @given(seed=st.integers(0, 10_000), k=st.integers(1, 4))
    @settings(max_examples=25)
    def test_weyl_sandwich_brackets_sample_eigenvalues(self, seed, k):
        spec = MixtureModelSpec(
            directions=tuple(DirectionSpec(10.0 * (5 - i), 10.0 * (5 - i), 0.0) for i in range(5))
            + (DirectionSpec(1.0, 1.0, 0.0),) * 7
        )
        ds = generate(spec, 9, seed)
        eig_a, eig_b = ab_split_eigenvalues(ds, k)
        dec = sample_covariance_spectrum(ds.X)
        lam = dec.eigenvalues
        m = min(len(lam), len(eig_a))
        for i in range(m):
            assert eig_a[i] + eig_b[-1] <= lam[i]
            assert lam[i] <= eig_a[i] + eig_b[0]

    def test_requires_retained_coefficients(self):
        ds = generate(build_variable_specific(4, {1}, 9.0, 0.3), 5, 0,
                      retain_coefficients=False)
        with pytest.raises(CapabilityError):
            ab_split_eigenvalues(ds, 1)

    def test_k_range_validated(self):
        ds = generate(build_variable_specific(4, {1}, 9.0, 0.3), 5, 0)
        from spikeout import ConfigurationError

        with pytest.raises(ConfigurationError):
            ab_split_eigenvalues(ds, 0)
        with pytest.raises(ConfigurationError):
            ab_split_eigenvalues(ds, 4)


def test_extreme_noise_eigenvalues_approach_support_edges():
    # d=500, n=1000 noise: medians over 20 seeds near (1 -+ sqrt(0.5))^2
    from spikeout.harness import noise_bulk

    report = noise_bulk(d=500, n=1000, seed=0, replications=20)
    assert report.passed, [c.summary_line() for c in report.checks]
