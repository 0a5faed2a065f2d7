"""Tests for the wave-plate gadget, the forward intensity model and shot sampling."""

import math

import numpy as np
import pytest

from src.angular.half_int import HalfInt
from src.angular.rotations import Direction, EulerAngles
from src.fock.correlations import CorrelationMatrix, correlation_matrix
from src.fock.states import (photon_number_distribution, pure_layer_state, random_layer_state, single_layer,
                             vacuum_state)
from src.fock.tensors import TensorIndex
from src.polarization.forward import (IntensityMomentSet, intensity_moment_direct, intensity_moment_multipole,
                                      intensity_moments, multipole_weights, rotate_state)
from src.polarization.sampling import (estimate_intensity, estimate_moments, measure_direction, measure_directions,
                                       sample_counts, spawn_seeds)
from src.polarization.waveplates import (ModeUnitary, PlateKind, PlateSetting, euler_to_su2, gadget_decompose,
                                         gadget_unitary, plate_unitary, su2_to_euler)
from src.utils.exceptions import InvalidInputError
from tests.conftest import random_direction, random_euler, random_mixture

H_PHOTON = single_layer(pure_layer_state("1/2", [1, 0]))


def _haar_su2(rng) -> ModeUnitary:
    ginibre = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    q, r = np.linalg.qr(ginibre)
    return ModeUnitary(q * (np.diag(r) / np.abs(np.diag(r)))[None, :])


class TestPlates:
    """Tests for single retarders and the quarter-half-quarter gadget."""

    def test_angle_wraps_modulo_pi(self):
        assert PlateSetting.half(math.pi + 0.25).angle == pytest.approx(0.25)
        assert PlateSetting.quarter(-0.25).angle == pytest.approx(math.pi - 0.25)
        assert PlateSetting("half", 0.1).kind is PlateKind.HALF

    def test_quarter_at_zero_is_diagonal(self):
        u = plate_unitary(PlateSetting.quarter(0.0)).matrix
        assert abs(u[0, 1]) < 1e-15 and abs(u[1, 0]) < 1e-15

    def test_two_quarters_make_a_half(self, rng):
        """Test retardance addition at equal fast-axis angles."""
        for angle in rng.uniform(0, math.pi, size=5):
            quarter = plate_unitary(PlateSetting.quarter(angle))
            assert (quarter @ quarter).distance(plate_unitary(PlateSetting.half(angle))) < 1e-12

    def test_unitarity_and_determinant(self, rng):
        for angle in rng.uniform(0, math.pi, size=10):
            for plate in (PlateSetting.quarter(angle), PlateSetting.half(angle)):
                u = plate_unitary(plate)
                assert np.max(np.abs(u.matrix.conj().T @ u.matrix - np.eye(2))) < 1e-14
                assert abs(u.determinant() - 1.0) < 1e-13

    def test_gadget_at_zero_is_phase(self):
        u = gadget_unitary(PlateSetting.quarter(0), PlateSetting.half(0), PlateSetting.quarter(0)).matrix
        assert abs(u[0, 1]) < 1e-15 and abs(u[1, 0]) < 1e-15

    def test_gadget_determinant(self, rng):
        for angles in rng.uniform(0, math.pi, size=(10, 3)):
            u = gadget_unitary(PlateSetting.quarter(angles[0]), PlateSetting.half(angles[1]),
                               PlateSetting.quarter(angles[2]))
            assert abs(u.determinant() - 1.0) < 1e-13

    def test_gadget_rejects_wrong_kinds(self):
        with pytest.raises(InvalidInputError):
            gadget_unitary(PlateSetting.half(0), PlateSetting.half(0), PlateSetting.quarter(0))

    def test_non_unitary_rejected(self):
        with pytest.raises(InvalidInputError):
            ModeUnitary(np.array([[1.0, 1.0], [0.0, 1.0]]))


class TestGadgetDecomposition:
    """Tests for recovering plate angles from a target SU(2) element."""

    def test_identity(self):
        target = ModeUnitary(np.eye(2))
        assert gadget_unitary(*gadget_decompose(target)).distance(target) < 1e-9

    def test_half_plate_target(self):
        target = plate_unitary(PlateSetting.half(math.pi / 8))
        assert gadget_unitary(*gadget_decompose(target)).distance(target) < 1e-10

    def test_random_targets(self, rng):
        for _ in range(10):
            target = _haar_su2(rng)
            assert gadget_unitary(*gadget_decompose(target)).distance(target) < 1e-9

    def test_euler_targets(self, rng):
        """Test every rotation the measurement needs is realized by the plates."""
        for _ in range(5):
            target = euler_to_su2(random_euler(rng))
            assert gadget_unitary(*gadget_decompose(target, seed=3)).distance(target) < 1e-9

    @pytest.mark.slow
    def test_universality(self, rng):
        """Test 100 Haar-random targets decompose below 1e-9."""
        for _ in range(100):
            target = _haar_su2(rng)
            assert gadget_unitary(*gadget_decompose(target)).distance(target) < 1e-9


class TestSu2ToEuler:
    """Tests for reading Euler angles off a 2x2 unitary."""

    def test_identity(self):
        g = su2_to_euler(ModeUnitary(np.eye(2)))
        assert g.as_tuple() == pytest.approx((0.0, 0.0, 0.0), abs=1e-15)

    def test_round_trip(self):
        g = su2_to_euler(euler_to_su2(EulerAngles(0.3, 1.1, -0.7)))
        assert g.phi == pytest.approx(0.3, abs=1e-12)
        assert g.theta == pytest.approx(1.1, abs=1e-12)
        assert g.psi == pytest.approx(2 * math.pi - 0.7, abs=1e-12)

    def test_degenerate_theta(self):
        """Test theta = 0 recovers phi + psi with psi = 0."""
        g = su2_to_euler(euler_to_su2(EulerAngles(0.4, 0.0, 0.3)))
        assert g.theta == 0.0
        assert g.psi == 0.0
        assert g.phi == pytest.approx(0.7, abs=1e-12)

    def test_random_round_trip(self, rng):
        for _ in range(20):
            u = euler_to_su2(random_euler(rng))
            assert euler_to_su2(su2_to_euler(u)).distance(u) < 1e-12


class TestRotateState:
    """Tests for conjugating a state by the gadget rotation."""

    def test_identity(self, rng):
        state = random_mixture(rng, 4)
        rotated = rotate_state(state, EulerAngles.identity())
        for before, after in zip(state.layers, rotated.layers):
            assert np.max(np.abs(before.rho - after.rho)) < 1e-15

    def test_layer_weights_preserved(self, rng):
        state = random_mixture(rng, 4)
        rotated = rotate_state(state, random_euler(rng))
        for before, after in zip(state.layers, rotated.layers):
            assert after.weight == pytest.approx(before.weight, abs=1e-12)
            assert np.trace(after.rho).real == pytest.approx(1.0, abs=1e-12)

    def test_single_photon_rotation(self, rng):
        """Test |1,0> rotated about y keeps H with probability cos^2(theta/2)."""
        for theta in rng.uniform(0, math.pi, size=5):
            table = photon_number_distribution(rotate_state(H_PHOTON, EulerAngles(0.0, theta, 0.0)))
            assert table[(1, 0)] == pytest.approx(math.cos(theta / 2) ** 2, abs=1e-12)


class TestIntensityMomentSet:
    """Tests for the measurement record type."""

    def test_validation(self):
        d = Direction(0.3, 0.2)
        with pytest.raises(InvalidInputError):
            IntensityMomentSet(HalfInt(1), d, [1.0])
        with pytest.raises(InvalidInputError):
            IntensityMomentSet(HalfInt(1), d, [-0.1, 1.0])
        with pytest.raises(InvalidInputError):
            IntensityMomentSet(HalfInt(1), d, [0.1, 1.0], std_errors=[0.1])
        with pytest.raises(InvalidInputError):
            IntensityMomentSet(HalfInt(1), d, [0.1, 1.0], shots=0)
        with pytest.raises(InvalidInputError):
            IntensityMomentSet(HalfInt(1), d, [0.1, 1.0], covariance=np.eye(3))
        with pytest.raises(InvalidInputError):
            IntensityMomentSet(HalfInt(1), d, [0.1, 1.0], covariance=[[1.0, 0.5], [0.0, 1.0]])
        record = IntensityMomentSet(HalfInt(1), d, [0.1, 1.0], covariance=[[0.2, -0.1], [-0.1, 0.2]])
        assert not record.covariance.flags.writeable

    def test_accessors(self):
        record = IntensityMomentSet(HalfInt(1), Direction(0.3, 0.2), [0.25, 0.75], std_errors=[0.01, 0.02],
                                    shots=100)
        assert record.value("1/2") == 0.25
        assert record.value("-1/2") == 0.75
        assert record.error("-1/2") == 0.02
        assert not record.is_noiseless
        assert record.euler.theta == pytest.approx(0.3)
        with pytest.raises(InvalidInputError):
            record.value(1)


class TestIntensityMoments:
    """Tests for the direct and multipole forms of I_Kq."""

    def test_identity_gives_diagonal(self, rng):
        state = random_mixture(rng, 4)
        for twice_k in range(5):
            K = HalfInt(twice_k)
            G = correlation_matrix(state, K)
            for a, idx in enumerate(TensorIndex.family(K)):
                value = intensity_moment_direct(state, idx, EulerAngles.identity())
                assert value == pytest.approx(G.entries[a, a].real, abs=1e-12)

    def test_single_photon_direct(self, rng):
        idx = TensorIndex.of("1/2", "1/2")
        for theta in rng.uniform(0, math.pi, size=5):
            value = intensity_moment_direct(H_PHOTON, idx, EulerAngles(0.0, theta, 0.0))
            assert value == pytest.approx(math.cos(theta / 2) ** 2, abs=1e-12)

    def test_single_photon_multipole(self, rng):
        G = correlation_matrix(H_PHOTON, "1/2")
        for _ in range(5):
            d = random_direction(rng)
            value = intensity_moment_multipole(G, "1/2", d)
            assert value == pytest.approx(math.cos(d.theta / 2) ** 2, abs=1e-12)

    def test_psi_independence(self, rng):
        state = random_mixture(rng, 4)
        d = random_direction(rng)
        for idx in TensorIndex.family(HalfInt(2)):
            values = [intensity_moment_direct(state, idx, d.euler(psi)) for psi in np.linspace(0, 2 * math.pi, 9)]
            assert max(values) - min(values) < 1e-12

    def test_zero_matrix(self, rng):
        G = CorrelationMatrix.zeros(1)
        for q in HalfInt(2).projections():
            assert intensity_moment_multipole(G, q, random_direction(rng)) == 0.0

    def test_multipole_matches_direct_spin_one(self, rng):
        """Test 50 random directions on a random S=1 state at K=1."""
        state = single_layer(random_layer_state(1, 3, seed=17))
        G = correlation_matrix(state, 1)
        for _ in range(50):
            d = random_direction(rng)
            for idx in TensorIndex.family(1):
                direct = intensity_moment_direct(state, idx, d.euler(0.0))
                assert abs(direct - intensity_moment_multipole(G, idx.q, d)) < 1e-10

    def _check_equivalence(self, rng, n_states):
        for _ in range(n_states):
            state = random_mixture(rng, 6)
            for twice_k in range(state.max_spin.twice_value + 1):
                K = HalfInt(twice_k)
                G = correlation_matrix(state, K)
                for _ in range(20):
                    d = random_direction(rng)
                    moments = intensity_moments(state, K, d.euler(0.0))
                    for idx in TensorIndex.family(K):
                        assert abs(moments.value(idx.q) - intensity_moment_multipole(G, idx.q, d)) < 1e-10

    def test_direct_equals_multipole(self, rng):
        self._check_equivalence(rng, 3)

    @pytest.mark.slow
    def test_direct_equals_multipole_many_states(self, rng):
        """Test the two forward forms agree for 100 random states up to S=3."""
        self._check_equivalence(rng, 100)

    def test_moments_non_negative(self, rng):
        for _ in range(20):
            state = random_mixture(rng, 5)
            moments = intensity_moments(state, HalfInt(int(rng.integers(0, 6))), random_euler(rng))
            assert np.min(moments.values) >= -1e-12
            assert moments.is_noiseless

    def test_multipole_weights_orthonormal(self):
        """Test the (L, m) weight matrices form an orthonormal basis."""
        for twice_k in range(5):
            K = HalfInt(twice_k)
            labels = [(L, m) for L in range(twice_k + 1) for m in range(-L, L + 1)]
            stack = np.array([multipole_weights(K, L, m).ravel() for L, m in labels])
            np.testing.assert_allclose(stack @ stack.T, np.eye(len(labels)), atol=1e-12)


class TestSampling:
    """Tests for shot sampling and moment estimation."""

    def test_vacuum_counts(self):
        counts = sample_counts(vacuum_state(), EulerAngles(0.2, 0.3, 0.4), 50, seed=1)
        assert counts.shape == (50, 2)
        assert np.all(counts == 0)

    def test_rotated_photon_fraction(self):
        """Test |1,0> at theta = pi/2 splits evenly within 5 sigma."""
        counts = sample_counts(H_PHOTON, EulerAngles(0.0, math.pi / 2, 0.0), 10000, seed=2)
        fraction = float(np.mean(counts[:, 0] == 1))
        assert abs(fraction - 0.5) < 5 * math.sqrt(0.25 / 10000)

    def test_same_seed_same_counts(self, rng):
        state = random_mixture(rng, 3)
        g = random_euler(rng)
        assert np.array_equal(sample_counts(state, g, 200, seed=9), sample_counts(state, g, 200, seed=9))

    def test_shots_must_be_positive(self):
        with pytest.raises(InvalidInputError):
            sample_counts(H_PHOTON, EulerAngles.identity(), 0, seed=0)

    def test_estimate_from_vacuum(self):
        estimate, error = estimate_intensity(np.zeros((10, 2)), TensorIndex.of(1, 0))
        assert (estimate, error) == (0.0, 0.0)

    def test_estimate_constant_sample(self):
        estimate, error = estimate_intensity([(2, 0)] * 10, TensorIndex.of(1, 1))
        assert estimate == 1.0
        assert error == 0.0

    def test_estimate_requires_counts(self):
        with pytest.raises(InvalidInputError):
            estimate_intensity([], TensorIndex.of("1/2", "1/2"))

    def test_estimate_converges(self, rng):
        """Test 10^5 draws land within 5 standard errors of the exact moment."""
        state = single_layer(random_layer_state(1, 3, seed=23))
        d = random_direction(rng)
        record = measure_direction(state, 1, d, 100000, seed=4)
        exact = intensity_moments(state, 1, d.euler(0.0))
        for idx in TensorIndex.family(1):
            assert abs(record.value(idx.q) - exact.value(idx.q)) < 5 * record.error(idx.q)

    @pytest.mark.slow
    def test_estimator_unbiased(self, rng):
        """Test the mean over 100 repetitions sits within 5 sigma of the exact moment."""
        state = single_layer(random_layer_state(1, 3, seed=29))
        d = random_direction(rng)
        exact = intensity_moments(state, 1, d.euler(0.0))
        records = [measure_direction(state, 1, d, 1000, seed=s) for s in spawn_seeds(5, 100)]
        for idx in TensorIndex.family(1):
            estimates = np.array([r.value(idx.q) for r in records])
            sigma = np.std(estimates, ddof=1) / math.sqrt(len(estimates))
            assert abs(np.mean(estimates) - exact.value(idx.q)) < 5 * sigma

    def test_spawned_seeds(self):
        seeds = spawn_seeds(7, 5)
        assert seeds == spawn_seeds(7, 5)
        assert len(set(seeds)) == 5

    def test_measure_directions_tags_order(self, rng):
        dirs = [random_direction(rng) for _ in range(3)]
        records = measure_directions(H_PHOTON, "1/2", dirs, 100, seed=1, order=1)
        assert [r.order for r in records] == [1, 1, 1]
        assert all(r.shots == 100 for r in records)

    def test_moment_covariance_single_photon(self):
        """Test one-photon moments of K = 1/2 are perfectly anticorrelated."""
        counts = sample_counts(H_PHOTON, EulerAngles(0.0, math.pi / 2, 0.0), 2000, seed=3)
        means, covariance = estimate_moments(counts, "1/2")
        assert covariance.shape == (2, 2)
        assert means.sum() == pytest.approx(1.0)
        np.testing.assert_allclose(covariance[0, 1], -covariance[0, 0], rtol=1e-12)
        np.testing.assert_allclose(np.diag(covariance), np.diag(covariance)[::-1], rtol=1e-12)

    def test_moment_errors_match_scalar_estimate(self, rng):
        state = single_layer(random_layer_state(1, 3, seed=31))
        counts = sample_counts(state, random_euler(rng), 500, seed=6)
        means, covariance = estimate_moments(counts, 1)
        for position, idx in enumerate(TensorIndex.family(1)):
            estimate, error = estimate_intensity(counts, idx)
            assert means[position] == pytest.approx(estimate, rel=1e-12)
            assert math.sqrt(covariance[position, position]) == pytest.approx(error, rel=1e-9)

    def test_moment_covariance_single_shot(self):
        means, covariance = estimate_moments([(1, 1)], 1)
        np.testing.assert_array_equal(means, [0.0, 1.0, 0.0])
        assert not covariance.any()

    def test_measure_direction_carries_covariance(self, rng):
        record = measure_direction(H_PHOTON, "1/2", random_direction(rng), 300, seed=8)
        assert record.covariance.shape == (2, 2)
        np.testing.assert_allclose(np.sqrt(np.diag(record.covariance)), record.std_errors)
