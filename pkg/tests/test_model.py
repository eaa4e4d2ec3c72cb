import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spikeout import (
    Basis,
    ConfigurationError,
    DirectionSpec,
    MixtureModelSpec,
    build_scale_mixture,
    build_shifted,
    build_variable_specific,
    draw_memberships,
    generate,
)
from spikeout.rng import derive_seed


class TestBuilders:
    def test_variable_specific_marks_listed_variables(self):
        spec = build_variable_specific(3, {2}, tau2=100.0, w=0.1)
        assert spec.directions[1] == DirectionSpec(1.0, 100.0, 0.1)
        assert spec.directions[0] == DirectionSpec(1.0, 1.0, 0.0)
        assert spec.directions[2] == DirectionSpec(1.0, 1.0, 0.0)
        assert spec.basis.kind == "standard"

    def test_variable_specific_empty_set_has_no_outlier_components(self):
        spec = build_variable_specific(5, set(), 100.0, 0.1)
        assert spec.outlier_components == ()

    def test_variable_specific_rejects_out_of_range_index(self):
        with pytest.raises(ConfigurationError):
            build_variable_specific(3, {4}, 100.0, 0.1)

    def test_scale_mixture_couples_all_directions(self):
        spec = build_scale_mixture(4, 1.0, 9.0, 0.05)
        assert all(s == DirectionSpec(1.0, 9.0, 0.05, group=0) for s in spec.directions)
        assert spec.membership_mode == "coupled"
        assert len({s.group for s in spec.directions}) == 1

    def test_scale_mixture_outlier_sample_is_rescaled_everywhere(self):
        spec = build_scale_mixture(4, 1.0, 9.0, 0.5)
        for seed in range(5):
            ds = generate(spec, 6, seed)
            sets = [tuple(ds.membership(i)) for i in range(1, 5)]
            assert len(set(sets)) == 1

    def test_scale_mixture_rejects_wrong_variance_order(self):
        with pytest.raises(ConfigurationError):
            build_scale_mixture(4, 9.0, 1.0, 0.05)

    def test_shifted_degenerate_no_shift(self):
        spec = build_shifted(2, (3.0, 4.0), 0.0, 0.0, 0.0, (1.0, 1.0))
        u = spec.basis.resolve(2)
        np.testing.assert_allclose(u[:, 0], [0.6, 0.8], atol=1e-12)
        assert spec.directions[0] == DirectionSpec(1.0, 1.0, 0.0)

    def test_shifted_variances_add_base_variance_along_mu(self):
        # sigma^2 * ||mu||^2 + v1 with mu=(1,0), v1=1: (1*1+1, 4*1+1) = (2, 5)
        spec = build_shifted(2, (1.0, 0.0), 1.0, 4.0, 0.1, (1.0, 1.0))
        assert spec.directions[0] == DirectionSpec(2.0, 5.0, 0.1)
        assert spec.directions[1] == DirectionSpec(1.0, 1.0, 0.0)

    def test_shifted_rejects_zero_mu(self):
        with pytest.raises(ConfigurationError):
            build_shifted(2, (0.0, 0.0), 1.0, 4.0, 0.1, (1.0, 1.0))

    def test_shifted_basis_is_orthonormal_and_starts_at_mu(self):
        mu = np.array([1.0, -2.0, 0.5, 3.0])
        spec = build_shifted(4, mu, 1.0, 4.0, 0.1, (1.0, 2.0, 3.0, 4.0))
        u = spec.basis.resolve(4)
        np.testing.assert_allclose(u.T @ u, np.eye(4), atol=1e-12)
        np.testing.assert_allclose(u[:, 0], mu / np.linalg.norm(mu), atol=1e-12)


class TestSpecValidation:
    def test_direction_weight_range(self):
        with pytest.raises(ConfigurationError):
            DirectionSpec(1.0, 1.0, 1.5)
        with pytest.raises(ConfigurationError):
            DirectionSpec(-1.0, 1.0, 0.0)

    def test_explicit_basis_must_be_orthonormal(self):
        with pytest.raises(ConfigurationError):
            Basis(kind="explicit", matrix=np.array([[1.0, 0.1], [0.0, 1.0]]))

    def test_coupled_group_needs_shared_weight(self):
        dirs = (DirectionSpec(1, 9, 0.1, group=0), DirectionSpec(1, 9, 0.2, group=0))
        with pytest.raises(ConfigurationError):
            MixtureModelSpec(directions=dirs, membership_mode="coupled")

    def test_index_sets(self):
        spec = build_variable_specific(4, {2, 4}, 50.0, 0.1)
        assert spec.outlier_components == (2, 4)
        assert spec.main_components == (1, 3)


class TestGenerate:
    def test_all_main_directions_have_empty_memberships(self):
        spec = MixtureModelSpec(directions=(DirectionSpec(1, 1, 0),) * 4)
        ds = generate(spec, 17, 3)
        assert ds.memberships == {}
        assert not ds.outlier_mask.any()

    @given(seed=st.integers(0, 2**31), d=st.integers(1, 6), n=st.integers(1, 8))
    @settings(max_examples=25)
    def test_generation_is_deterministic(self, seed, d, n):
        spec = build_variable_specific(d, {1}, 25.0, 0.3)
        a = generate(spec, n, seed)
        b = generate(spec, n, seed)
        np.testing.assert_array_equal(a.X, b.X)
        assert set(a.memberships) == set(b.memberships)
        for i in a.memberships:
            np.testing.assert_array_equal(a.membership(i), b.membership(i))

    def test_memberships_match_cheap_draw(self):
        spec = build_variable_specific(20, {3, 7}, 25.0, 0.3)
        for seed in range(4):
            ds = generate(spec, 50, seed)
            cheap = draw_memberships(spec, 50, seed)
            assert set(cheap) == set(ds.memberships)
            for i in cheap:
                np.testing.assert_array_equal(cheap[i], ds.membership(i))

    def test_membership_draws_ignore_variance_levels(self):
        # Same seed, different tau2: membership patterns must be identical.
        a = generate(build_variable_specific(10, {2}, 25.0, 0.3), 40, 9)
        b = generate(build_variable_specific(10, {2}, 400.0, 0.3), 40, 9)
        np.testing.assert_array_equal(a.membership(2), b.membership(2))

    def test_toy_membership_count_is_binomial(self):
        # direction 10 with w=0.02, n=200: mean count over 1000 seeds near 4
        from spikeout.harness import toy_model_spec

        spec = toy_model_spec()
        counts = [len(draw_memberships(spec, 200, s).get(10, ())) for s in range(1000)]
        assert 3.0 <= np.mean(counts) <= 5.0

    def test_weight_one_marks_every_sample(self):
        spec = MixtureModelSpec(directions=(DirectionSpec(0.0, 5.0, 1.0),))
        ds = generate(spec, 9, 0)
        np.testing.assert_array_equal(ds.membership(1), np.arange(1, 10))

    def test_rejects_nonpositive_n(self):
        spec = build_variable_specific(2, set(), 2.0, 0.1)
        with pytest.raises(ConfigurationError):
            generate(spec, 0, 1)

    def test_column_variance_matches_small_branch(self):
        # w=0, tau1=v: mean square of coefficients within 3*sqrt(2/n) of v
        n, v = 100_000, 2.5
        spec = MixtureModelSpec(directions=(DirectionSpec(v, v, 0.0),))
        ds = generate(spec, n, 11)
        observed = float(np.mean(ds.coefficients[0] ** 2))
        assert abs(observed / v - 1) <= 3 * np.sqrt(2 / n)

    @pytest.mark.parametrize("noise", ["gaussian", "rademacher", "uniform"])
    def test_population_variance_of_outlier_direction(self, noise):
        # mean square converges to (1-w) tau1 + w tau2
        n = 100_000
        spec = MixtureModelSpec(
            directions=(DirectionSpec(1.0, 50.0, 0.1),), noise_dist=noise
        )
        ds = generate(spec, n, 5)
        target = 0.9 * 1.0 + 0.1 * 50.0
        observed = float(np.mean(ds.coefficients[0] ** 2))
        assert abs(observed / target - 1) <= 0.05

    def test_noise_distributions_have_zero_mean_unit_variance(self):
        for noise in ("gaussian", "rademacher", "uniform"):
            spec = MixtureModelSpec(
                directions=(DirectionSpec(1.0, 1.0, 0.0),), noise_dist=noise
            )
            y = generate(spec, 200_000, 7).coefficients[0]
            assert abs(y.mean()) < 0.01
            assert abs(np.mean(y**2) - 1.0) < 0.01

    def test_basis_isometry(self):
        spec = MixtureModelSpec(
            directions=tuple(DirectionSpec(float(i + 1), float(i + 1), 0.0) for i in range(40)),
            basis=Basis(kind="random", seed=4),
        )
        ds = generate(spec, 25, 2)
        nx = np.linalg.norm(ds.X, axis=0)
        ny = np.linalg.norm(ds.coefficients, axis=0)
        np.testing.assert_allclose(nx, ny, rtol=1e-8)

    def test_reconstruction_from_coefficients(self):
        spec = MixtureModelSpec(
            directions=tuple(DirectionSpec(1.0, 4.0, 0.2) for _ in range(12)),
            basis=Basis(kind="random", seed=8),
        )
        ds = generate(spec, 10, 3)
        u = spec.basis.resolve(12)
        np.testing.assert_allclose(ds.X, u @ ds.coefficients, atol=1e-12)

    def test_retention_threshold(self):
        spec = build_variable_specific(4, {1}, 9.0, 0.2)
        assert generate(spec, 5, 0).coefficients is not None
        assert generate(spec, 5, 0, retain_coefficients=False).coefficients is None

    def test_dataset_is_read_only(self):
        ds = generate(build_variable_specific(3, {1}, 9.0, 0.2), 5, 0)
        with pytest.raises(ValueError):
            ds.X[0, 0] = 1.0


class TestSerialization:
    def test_spec_json_roundtrip(self):
        spec = build_scale_mixture(3, 1.0, 9.0, 0.05)
        doc = spec.to_json()
        clone = MixtureModelSpec.from_json(json.loads(json.dumps(doc)))
        assert clone.membership_mode == "coupled"
        assert clone.directions == spec.directions
        np.testing.assert_array_equal(generate(clone, 7, 1).X, generate(spec, 7, 1).X)

    def test_spec_json_declared_d_mismatch(self):
        doc = build_variable_specific(2, set(), 2.0, 0.1).to_json()
        doc["d"] = 5
        with pytest.raises(ConfigurationError):
            MixtureModelSpec.from_json(doc)

    def test_matrix_csv_layout(self, tmp_path):
        ds = generate(build_variable_specific(2, {1}, 9.0, 0.5), 3, 1)
        path = tmp_path / "dataset.csv"
        ds.write_matrix_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "sample_1,sample_2,sample_3"
        assert len(lines) == 3  # header + one row per dimension
        parsed = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
        np.testing.assert_array_equal(parsed, ds.X)

    def test_memberships_json_is_one_based(self, tmp_path):
        spec = MixtureModelSpec(directions=(DirectionSpec(0.0, 5.0, 1.0),))
        ds = generate(spec, 4, 0)
        path = tmp_path / "memberships.json"
        ds.write_memberships_json(path)
        doc = json.loads(path.read_text())
        assert doc == {"1": [1, 2, 3, 4]}

    def test_explicit_basis_roundtrip(self):
        spec = build_shifted(3, (1.0, 2.0, 2.0), 1.0, 4.0, 0.1, (1.0, 1.0, 1.0))
        clone = MixtureModelSpec.from_json(spec.to_json())
        np.testing.assert_allclose(clone.basis.resolve(3), spec.basis.resolve(3), atol=1e-15)
