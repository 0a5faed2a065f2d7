"""Tests for Schur transforms, inversions, direction design and the reconstruction pipeline."""

import math
from functools import lru_cache

import numpy as np
import pytest

from src.angular.half_int import HalfInt
from src.angular.rotations import AXIS_X, AXIS_Y, AXIS_Z, Direction
from src.angular.special_functions import clebsch_gordan, harmonic_row, spherical_harmonic
from src.fock.correlations import CorrelationMatrix, correlation_matrix
from src.fock.states import pure_layer_state, random_layer_state, single_layer, vacuum_state
from src.polarization.forward import IntensityMomentSet, intensity_moments
from src.polarization.sampling import measure_direction, spawn_seeds
from src.reconstruction.directions import (DirectionSet, axis_directions, design_directions, direction_sets,
                                           legendre_gram, min_line_angle)
from src.reconstruction.inversion import continuous_inversion, discrete_inversion, first_order_inversion
from src.reconstruction.pipeline import (EXACT, LEAST_SQUARES, project_psd, reconstruct_correlations)
from src.reconstruction.quadrature import FOUR_PI, QuadratureGrid, default_grid, product_grid
from src.reconstruction.schur import (AXIS, CANONICAL, MultipoleVector, inverse_schur_G, inverse_schur_I,
                                      schur_multipoles, schur_transform_G, schur_transform_I)
from src.utils.exceptions import (ConditioningError, InsufficientDataError, InvalidInputError,
                                  VanishingCoefficientError)
from tests.conftest import random_direction, random_mixture

H_PHOTON = single_layer(pure_layer_state("1/2", [1, 0]))


@lru_cache(maxsize=None)
def _designed(L: int) -> DirectionSet:
    return design_directions(L, seed=0)


def _noiseless_records(state, K: HalfInt):
    """Exact records at the designed directions of every order L <= 2K"""
    records = []
    for L in range(K.twice_value + 1):
        for direction in _designed(L).directions:
            records.append(intensity_moments(state, K, direction.euler(0.0), order=L))
    return records


def _sampler(state, K):
    return lambda direction: intensity_moments(state, K, direction.euler(0.0))


class TestQuadrature:
    """Tests for the product quadrature on the sphere."""

    def test_weights_sum_to_four_pi(self):
        grid = default_grid("3/2")
        assert math.fsum(grid.weights) == pytest.approx(FOUR_PI, abs=1e-12)
        assert len(grid) == 4 * 8

    def test_constant_harmonic(self):
        grid = default_grid(1)
        assert grid.integrate(lambda d: spherical_harmonic(0, 0, d)) == pytest.approx(math.sqrt(FOUR_PI), abs=1e-12)

    def test_harmonic_gram_is_identity(self):
        """Test orthonormality of Y_Lm for L <= 6 under the K=3 default grid."""
        grid = default_grid(3)
        labels = [(L, m) for L in range(7) for m in range(-L, L + 1)]
        Y = np.array([[spherical_harmonic(L, m, d) for L, m in labels] for d in grid.directions])
        gram = Y.conj().T @ (grid.weights[:, None] * Y)
        np.testing.assert_allclose(gram, np.eye(len(labels)), atol=1e-12)

    def test_invalid_grids(self):
        with pytest.raises(InvalidInputError):
            product_grid(0, 3)
        with pytest.raises(InvalidInputError):
            QuadratureGrid(((AXIS_Z, 1.0),))
        with pytest.raises(InvalidInputError):
            QuadratureGrid(((AXIS_Z, FOUR_PI + 1.0), (AXIS_X, -1.0)))


class TestSchurTransforms:
    """Tests for the Clebsch-Gordan transforms of moments and correlations."""

    def test_zero_moments(self):
        record = IntensityMomentSet(HalfInt(2), AXIS_Z, [0.0, 0.0, 0.0])
        for L in range(3):
            assert schur_transform_I(record, L) == 0.0

    def test_monopole_of_first_order(self):
        """Test the K=1/2, L=0 transform weighs both moments by 1/sqrt(2)."""
        record = IntensityMomentSet(HalfInt(1), Direction(0.4, 1.0), [0.3, 0.7])
        assert schur_transform_I(record, 0) == pytest.approx((0.3 + 0.7) / math.sqrt(2), abs=1e-15)
        assert clebsch_gordan("1/2", "1/2", "1/2", "-1/2", 0, 0) == pytest.approx(1 / math.sqrt(2))

    def test_moment_round_trip(self, rng):
        for twice_k in range(7):
            K = HalfInt(twice_k)
            record = IntensityMomentSet(K, AXIS_Z, rng.uniform(0, 3, size=K.dimension))
            transformed = [schur_transform_I(record, L) for L in range(twice_k + 1)]
            np.testing.assert_allclose(inverse_schur_I(K, transformed), record.values, atol=1e-12)

    def test_order_out_of_range(self):
        record = IntensityMomentSet(HalfInt(1), AXIS_Z, [0.5, 0.5])
        with pytest.raises(InvalidInputError):
            schur_transform_I(record, 2)
        with pytest.raises(InvalidInputError):
            schur_transform_G(CorrelationMatrix.zeros("1/2"), 1, 2)

    def test_zero_correlations(self):
        for vector in schur_multipoles(CorrelationMatrix.zeros("3/2")):
            assert vector.norm() == 0.0

    def test_forward_consistency(self, rng):
        """Test multipoles reproduce the transformed moments at 20 directions."""
        state = random_mixture(rng, 4)
        for twice_k in range(1, 5):
            K = HalfInt(twice_k)
            multipoles = schur_multipoles(correlation_matrix(state, K))
            for _ in range(20):
                d = random_direction(rng)
                record = intensity_moments(state, K, d.euler(0.0))
                for vector in multipoles:
                    L = vector.L
                    synthesized = math.sqrt(FOUR_PI / (2 * L + 1)) * np.vdot(harmonic_row(L, d), vector.components)
                    assert abs(synthesized - schur_transform_I(record, L)) < 1e-10

    def test_correlation_round_trip(self, rng):
        """Test inverse(forward(G)) = G for arbitrary complex matrices."""
        for twice_k in range(7):
            K = HalfInt(twice_k)
            entries = rng.standard_normal((K.dimension,) * 2) + 1j * rng.standard_normal((K.dimension,) * 2)
            G = CorrelationMatrix(K, entries)
            assert inverse_schur_G(schur_multipoles(G)).max_abs_difference(G) < 1e-12

    def test_state_round_trip(self, rng):
        """Test 100 random states up to S=2."""
        for _ in range(100):
            state = random_mixture(rng, 4)
            for twice_k in range(5):
                G = correlation_matrix(state, HalfInt(twice_k))
                assert inverse_schur_G(schur_multipoles(G), G.K).max_abs_difference(G) < 1e-11

    def test_zero_multipoles(self):
        G = inverse_schur_G([MultipoleVector.zeros(L) for L in range(3)])
        assert np.all(G.entries == 0)

    def test_monopole_only(self):
        """Test a lone L=0 multipole maps to the scaled identity."""
        K = HalfInt(2)
        vectors = [MultipoleVector(0, [1.0]), MultipoleVector.zeros(1), MultipoleVector.zeros(2)]
        G = inverse_schur_G(vectors, K)
        np.testing.assert_allclose(G.entries, np.eye(3) / math.sqrt(3), atol=1e-14)

    def test_incomplete_set(self):
        with pytest.raises(InsufficientDataError) as info:
            inverse_schur_G([MultipoleVector.zeros(0), MultipoleVector.zeros(2)], HalfInt(2))
        assert info.value.missing_orders == [1]

    def test_multipole_vector_validation(self):
        with pytest.raises(InvalidInputError):
            MultipoleVector(1, [0.0, 1.0])
        with pytest.raises(InvalidInputError):
            MultipoleVector(2, np.zeros(5), AXIS).canonical()
        assert MultipoleVector(2, np.arange(5)).component(-2) == 0.0

    def test_axis_convention_round_trip(self, rng):
        vector = MultipoleVector(1, rng.standard_normal(3) + 1j * rng.standard_normal(3))
        back = vector.to_axis_convention().canonical()
        assert back.convention == CANONICAL
        np.testing.assert_allclose(back.components, vector.components, atol=1e-15)


class TestContinuousInversion:
    """Tests for inversion from moments integrated over the sphere."""

    def test_vacuum(self):
        G = continuous_inversion(_sampler(vacuum_state(), HalfInt(2)), HalfInt(2))
        assert np.max(np.abs(G.entries)) < 1e-14

    def test_spin_three_halves(self):
        state = single_layer(random_layer_state("3/2", 4, seed=31))
        K = HalfInt(3)
        G = continuous_inversion(_sampler(state, K), K)
        assert G.max_abs_difference(correlation_matrix(state, K)) < 1e-9

    def test_every_admissible_q(self, rng):
        """Test q-independence on noiseless data up to S=3/2."""
        state = random_mixture(rng, 3)
        for twice_k in range(1, 4):
            K = HalfInt(twice_k)
            truth = correlation_matrix(state, K)
            for q in K.projections():
                couplings = [clebsch_gordan(K, q, K, -q, L, 0) for L in range(twice_k + 1)]
                if min(abs(c) for c in couplings) < 1e-12:
                    with pytest.raises(VanishingCoefficientError):
                        continuous_inversion(_sampler(state, K), K, q)
                    continue
                G = continuous_inversion(_sampler(state, K), K, q)
                assert G.max_abs_difference(truth) < 1e-8

    def test_vanishing_coefficient_rejected(self):
        """Test K=1, q=0 is refused because L=1 couples with zero weight."""
        with pytest.raises(VanishingCoefficientError) as info:
            continuous_inversion(_sampler(H_PHOTON, HalfInt(2)), HalfInt(2), 0)
        assert info.value.order == 1

    def test_invalid_q(self):
        with pytest.raises(InvalidInputError):
            continuous_inversion(_sampler(H_PHOTON, HalfInt(2)), HalfInt(2), "1/2")


class TestFirstOrderInversion:
    """Tests for the closed-form dipole inversion."""

    def test_zero(self):
        assert first_order_inversion(0, 0, 0).norm() == 0.0

    def test_first_column(self):
        vector = first_order_inversion(1, 0, 0)
        assert vector.convention == AXIS
        expected = (-1 / math.sqrt(3), 0.0, 1 / math.sqrt(3))
        for value, target in zip((vector.component(1), vector.component(0), vector.component(-1)), expected):
            assert abs(value - target) < 1e-15

    def test_matches_discrete_axes(self, rng):
        for _ in range(5):
            values = rng.standard_normal(3)
            closed = first_order_inversion(*values).canonical()
            general = discrete_inversion(values, axis_directions())
            np.testing.assert_allclose(closed.components, general.components, atol=1e-12)


class TestDirections:
    """Tests for measurement-direction design."""

    def test_monopole_direction(self):
        dirs = design_directions(0)
        assert dirs.directions == (AXIS_Z,)

    def test_axes(self):
        dirs = design_directions(1)
        assert dirs.min_angle_deg == pytest.approx(90.0, abs=1e-6)
        np.testing.assert_allclose(dirs.gram(), np.eye(3), atol=1e-15)

    def test_second_order(self):
        dirs = design_directions(2)
        assert len(dirs.directions) == 5
        assert dirs.min_angle_deg >= 63.43
        assert dirs.cond_P < 100

    @pytest.mark.slow
    def test_higher_orders_well_conditioned(self):
        for L in (3, 4):
            dirs = _designed(L)
            assert len(dirs.directions) == 2 * L + 1
            assert dirs.cond_P < 100

    @pytest.mark.slow
    def test_deterministic(self):
        assert design_directions(3, seed=4) == design_directions(3, seed=4)

    def test_direction_sets(self):
        sets = direction_sets(2)
        assert [s.L for s in sets] == [0, 1, 2]

    def test_wrong_count(self):
        with pytest.raises(InvalidInputError):
            DirectionSet(1, (AXIS_X, AXIS_Y))

    def test_coincident_lines(self):
        """Test antipodal directions count as the same line."""
        with pytest.raises(ConditioningError) as info:
            DirectionSet(1, (AXIS_X, AXIS_Y, Direction(math.pi / 2, math.pi)))
        assert info.value.order == 1

    def test_gram_symmetry(self, rng):
        dirs = [random_direction(rng) for _ in range(5)]
        gram = legendre_gram(2, dirs)
        np.testing.assert_allclose(gram, gram.T, atol=1e-15)
        assert np.all(np.diag(gram) == 1.0)
        assert 0.0 < min_line_angle(dirs) <= math.pi / 2


class TestDiscreteInversion:
    """Tests for the per-order inversion over 2L+1 directions."""

    def test_zero(self):
        for L in range(3):
            assert discrete_inversion(np.zeros(2 * L + 1), _designed(L)).norm() == 0.0

    def test_synthetic_recovery(self, rng):
        """Test multipoles of a known state are recovered from synthesized moments."""
        state = single_layer(random_layer_state(1, 3, seed=41))
        for vector in schur_multipoles(correlation_matrix(state, 1)):
            dirs = _designed(vector.L)
            scale = math.sqrt(FOUR_PI / (2 * vector.L + 1))
            values = [(scale * np.vdot(harmonic_row(vector.L, d), vector.components)).real for d in dirs.directions]
            recovered = discrete_inversion(values, dirs)
            np.testing.assert_allclose(recovered.components, vector.components, atol=1e-10)

    def test_wrong_length(self):
        with pytest.raises(InvalidInputError):
            discrete_inversion([1.0, 2.0], axis_directions())

    def test_ill_conditioned(self):
        nearly = DirectionSet(1, (AXIS_Z, AXIS_X, Direction(math.pi / 2, 1e-7)))
        with pytest.raises(ConditioningError) as info:
            discrete_inversion([1.0, 1.0, 1.0], nearly)
        assert info.value.order == 1

    def test_agrees_with_continuous(self, rng):
        state = random_mixture(rng, 2)
        K = HalfInt(2)
        exact, _ = reconstruct_correlations(_noiseless_records(state, K), K)
        continuous = continuous_inversion(_sampler(state, K), K)
        assert exact.max_abs_difference(continuous) < 1e-8


class TestExactPipeline:
    """Tests for noiseless reconstruction chained through the per-order inversions."""

    def test_round_trip_low_orders(self, rng):
        for _ in range(5):
            state = random_mixture(rng, 2)
            for twice_k in range(3):
                K = HalfInt(twice_k)
                G, diagnostics = reconstruct_correlations(_noiseless_records(state, K), K)
                assert G.max_abs_difference(correlation_matrix(state, K)) < 1e-8
                assert G.is_hermitian(1e-10)
                assert diagnostics.mode == EXACT
                assert diagnostics.residual < 1e-10
                assert sorted(diagnostics.cond_P) == list(range(twice_k + 1))

    @pytest.mark.slow
    def test_round_trip_all_orders(self, rng):
        """Test every K <= S for states up to S=3."""
        for max_twice in range(7):
            state = random_mixture(rng, max_twice)
            for twice_k in range(max_twice + 1):
                K = HalfInt(twice_k)
                G, _ = reconstruct_correlations(_noiseless_records(state, K), K)
                assert G.max_abs_difference(correlation_matrix(state, K)) < 1e-8

    def test_orders_are_isolated(self, rng):
        """Test reconstructing one order ignores records of the others."""
        state = random_mixture(rng, 2)
        alone = _noiseless_records(state, HalfInt(1))
        mixed = _noiseless_records(state, HalfInt(2)) + alone
        G_alone, _ = reconstruct_correlations(alone, HalfInt(1))
        G_mixed, _ = reconstruct_correlations(mixed, HalfInt(1))
        assert np.array_equal(G_alone.entries, G_mixed.entries)

    def test_duplicate_direction(self):
        K = HalfInt(1)
        records = [intensity_moments(H_PHOTON, K, AXIS_Z.euler(), order=0)]
        records += [intensity_moments(H_PHOTON, K, d.euler(), order=1) for d in (AXIS_X, AXIS_X, AXIS_Z)]
        with pytest.raises(ConditioningError) as info:
            reconstruct_correlations(records, K)
        assert info.value.order == 1

    def test_missing_order(self):
        K = HalfInt(1)
        records = [intensity_moments(H_PHOTON, K, AXIS_Z.euler(), order=0)]
        with pytest.raises(InsufficientDataError) as info:
            reconstruct_correlations(records, K)
        assert info.value.missing_orders == [1]

    def test_bad_arguments(self):
        records = _noiseless_records(H_PHOTON, HalfInt(1))
        with pytest.raises(InvalidInputError):
            reconstruct_correlations(records, HalfInt(1), mode="bayesian")
        with pytest.raises(InvalidInputError):
            reconstruct_correlations(records, HalfInt(1), lam=-1.0)
        with pytest.raises(InsufficientDataError):
            reconstruct_correlations(records, HalfInt(2))


class TestLeastSquares:
    """Tests for the weighted least-squares reconstruction."""

    def test_noiseless_recovery(self, rng):
        state = random_mixture(rng, 2)
        K = HalfInt(2)
        G, diagnostics = reconstruct_correlations(_noiseless_records(state, K), K, mode="lsq")
        assert G.max_abs_difference(correlation_matrix(state, K)) < 1e-10
        assert diagnostics.mode == LEAST_SQUARES
        assert diagnostics.dof == 9 * 3 - 9
        assert diagnostics.chi2 < 1e-16

    def test_rank_deficient(self):
        K = HalfInt(1)
        records = [intensity_moments(H_PHOTON, K, AXIS_Z.euler())]
        with pytest.raises(ConditioningError):
            reconstruct_correlations(records, K, mode="lsq")

    def test_regularized_rank_deficient(self):
        K = HalfInt(1)
        records = [intensity_moments(H_PHOTON, K, AXIS_Z.euler())]
        G, diagnostics = reconstruct_correlations(records, K, mode="lsq", lam=1e-3)
        assert diagnostics.regularization == 1e-3
        assert G.is_hermitian()

    def _single_photon_fit(self, seed: int):
        K = HalfInt(1)
        directions = [AXIS_Z, AXIS_X, AXIS_Y, AXIS_Z]
        orders = [0, 1, 1, 1]
        seeds = spawn_seeds(seed, len(directions))
        records = [measure_direction(H_PHOTON, K, d, 250000, s, order=L)
                   for d, s, L in zip(directions, seeds, orders)]
        G, diagnostics = reconstruct_correlations(records, K, mode="lsq")
        truth = np.diag([1.0, 0.0])
        z_real = np.abs(G.entries.real - truth) / np.maximum(diagnostics.std_errors_real, 1e-300)
        z_imag = np.abs(G.entries.imag) / np.maximum(diagnostics.std_errors_imag, 1e-300)
        np.fill_diagonal(z_imag, 0.0)
        return max(np.max(z_real), np.max(z_imag))

    def test_zero_variance_records_keep_shot_floor(self):
        """Test deterministic z records report errors at the 1/shots level, not zero."""
        K = HalfInt(1)
        seeds = spawn_seeds(4, 4)
        records = [measure_direction(H_PHOTON, K, d, 250000, s, order=L)
                   for d, s, L in zip([AXIS_Z, AXIS_X, AXIS_Y, AXIS_Z], seeds, [0, 1, 1, 1])]
        assert not records[0].covariance.any()
        _, diagnostics = reconstruct_correlations(records, K, mode="lsq")
        diagonal = np.diag(diagnostics.std_errors_real)
        assert np.all(diagonal > 1e-7)
        assert np.all(diagonal < 1e-4)

    def test_single_photon_shots(self):
        """Test 10^6 shots on |1,0> land within a few reported standard errors of diag(1, 0)."""
        assert self._single_photon_fit(seed=12) < 5.0

    @pytest.mark.slow
    def test_single_photon_coverage(self):
        """Test 3-sigma coverage in at least 95% of 40 seeded repetitions."""
        hits = sum(self._single_photon_fit(seed) < 3.0 for seed in range(40))
        assert hits >= 38

    def test_z_scores(self, rng):
        """Test per-entry z-scores over 50 noisy repetitions."""
        state = random_mixture(rng, 2)
        K = HalfInt(1)
        truth = correlation_matrix(state, K).entries
        z = []
        for repetition in spawn_seeds(3, 50):
            seeds = iter(spawn_seeds(repetition, 4))
            records = [measure_direction(state, K, d, 4000, next(seeds), order=L)
                       for L in range(2) for d in _designed(L).directions]
            G, diagnostics = reconstruct_correlations(records, K, mode="lsq")
            z.extend(np.diag((G.entries.real - truth.real) / diagnostics.std_errors_real))
            z.append((G.entries[0, 1].real - truth[0, 1].real) / diagnostics.std_errors_real[0, 1])
            z.append((G.entries[0, 1].imag - truth[0, 1].imag) / diagnostics.std_errors_imag[0, 1])
        z = np.array(z)
        assert abs(np.mean(z)) < 0.5
        assert 0.5 <= np.std(z, ddof=1) <= 2.0

    def test_psd_projection(self):
        G = CorrelationMatrix(HalfInt(1), np.diag([1.0, -0.1]))
        projected = project_psd(G)
        np.testing.assert_allclose(projected.entries, np.diag([1.0, 0.0]), atol=1e-15)
        assert projected.min_eigenvalue() >= 0.0
