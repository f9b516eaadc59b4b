"""
Tests for tomographic readout and density reconstruction.
"""

import functools
import math

import numpy as np
import pytest

from weakstrong.core.analytic import MeasurementConfig, pointer_shift, transition_factor
from weakstrong.core.exceptions import (
    InsufficientKRange,
    KOutOfRange,
    LinearRegimeViolated,
    RankDeficient,
    ValidationError,
)
from weakstrong.core.fock import expectation_z, run_protocol
from weakstrong.core.tomography import (
    DensityEstimate,
    TomographyDataset,
    TomographyRecord,
    default_k_grid,
    extract_mean_z,
    fit_slope,
    infer_transition_factor,
    l1_distance,
    readout_channels,
    readout_observable,
    reconstruct_fourier,
    reconstruct_least_squares,
    reference_density,
    resample_dataset,
    sample_dataset,
    smoothing_strength,
    usable_records,
)
from weakstrong.services.sweep_service import CAT_PANELS

DIMENSION = 64
ACCEPTANCE_SEEDS = range(20)


def characteristic_function(theta, gamma_big, ks):
    """Closed-form <cos kz> and <sin kz> of the post-selected pointer."""
    ks = np.asarray(ks, dtype=float)
    overlap = math.exp(-0.5 * gamma_big**2)
    norm = 1.0 - math.cos(2.0 * theta) * overlap
    envelope = np.exp(-0.5 * ks**2)
    cos_channel = envelope * (np.cos(ks * gamma_big) - math.cos(2.0 * theta) * overlap) / norm
    sin_channel = -math.sin(2.0 * theta) * envelope * np.sin(ks * gamma_big) / norm
    return cos_channel, sin_channel


@functools.lru_cache(maxsize=None)
def exact_panel(gamma_big, theta):
    """Noiseless readout of one panel, shared by the finite-shot tests."""
    config = MeasurementConfig.natural(theta, gamma_big)
    return sample_dataset(config, shots_per_point=None, dimension=DIMENSION)


def median_l1(method, exact, shots, seeds=ACCEPTANCE_SEEDS):
    """Median L1 error of ``method`` over seeded resamplings of ``exact``."""
    distances = []
    for seed in seeds:
        estimate = method(resample_dataset(exact, shots, seed))
        reference = reference_density(exact.source_config, estimate.z_grid)
        distances.append(l1_distance(estimate, reference))
    return float(np.median(distances))


@pytest.fixture
def ground_motional():
    """Motional ground state in a small Fock basis."""
    vector = np.zeros(32, dtype=complex)
    vector[0] = 1.0
    return vector


class TestReadout:
    """Test the exact readout of <cos kz> and <sin kz>."""

    def test_zero_wavenumber(self, ground_motional):
        """At k = 0 the cosine channel is 1 and the sine channel 0."""
        assert readout_observable(ground_motional, 0.0, "sigma_z") == pytest.approx(1.0)
        assert readout_observable(ground_motional, 0.0, "sigma_y") == pytest.approx(0.0, abs=1e-14)

    def test_ground_state_characteristic_function(self, ground_motional):
        """The ground state gives exp(-k^2 / 2) and no sine component."""
        for k in (0.5, 1.3, 2.0):
            assert readout_observable(ground_motional, k, "sigma_z") == pytest.approx(
                math.exp(-0.5 * k * k), abs=1e-10
            )
            assert abs(readout_observable(ground_motional, k, "sigma_y")) < 1e-10

    def test_cat_state_channels(self):
        """Both channels of a post-selected pointer match the closed form."""
        config = MeasurementConfig.natural(0.5, 2.0)
        motional, _ = run_protocol(config, DIMENSION)
        ks = np.linspace(0.0, 3.0, 7)

        cos_channel, sin_channel = readout_channels(motional, ks, config)
        expected_cos, expected_sin = characteristic_function(0.5, 2.0, ks)
        np.testing.assert_allclose(cos_channel, expected_cos, atol=1e-8)
        np.testing.assert_allclose(sin_channel, expected_sin, atol=1e-8)

    def test_slope_is_mean_position(self):
        """d<sin kz>/dk at k = 0 equals <z>."""
        config = MeasurementConfig.natural(0.3, 0.8)
        motional, _ = run_protocol(config, DIMENSION)
        step = 1e-5

        slope = (
            readout_observable(motional, step, "sigma_y", config)
            - readout_observable(motional, -step, "sigma_y", config)
        ) / (2.0 * step)
        assert slope == pytest.approx(expectation_z(motional), abs=1e-8)

    def test_out_of_range(self, ground_motional):
        """Wavenumbers beyond 6 / delta_z are rejected."""
        with pytest.raises(KOutOfRange):
            readout_observable(ground_motional, 7.0, "sigma_z")

    def test_unknown_basis(self, ground_motional):
        """Only the sigma_z and sigma_y preparations exist."""
        with pytest.raises(ValidationError):
            readout_observable(ground_motional, 1.0, "sigma_x")


class TestRecords:
    """Test record and dataset invariants."""

    def test_estimate_and_variance(self):
        record = TomographyRecord(0.5, "sigma_z", 100, 75)

        assert record.estimate == pytest.approx(0.5)
        assert record.variance == pytest.approx((0.75 + 1e-6) / 100)

    def test_ups_bounded_by_shots(self):
        with pytest.raises(ValidationError):
            TomographyRecord(0.5, "sigma_z", 10, 11)

    def test_noiseless_needs_expectation(self):
        with pytest.raises(ValidationError):
            TomographyRecord(0.5, "sigma_z", 0, 0)

    def test_k_strictly_increasing(self):
        config = MeasurementConfig.natural(0.5, 1.0)
        records = (
            TomographyRecord(0.5, "sigma_z", 10, 5),
            TomographyRecord(0.5, "sigma_z", 10, 5),
        )

        with pytest.raises(ValidationError):
            TomographyDataset(records, 1, config)

    def test_dict_round_trip(self):
        """A sampled dataset survives serialization unchanged."""
        config = MeasurementConfig.natural(0.5, 1.0)
        dataset = sample_dataset(config, default_k_grid(5, 2.0), 100, seed=3, dimension=32)

        assert TomographyDataset.from_dict(dataset.to_dict()) == dataset


class TestSampling:
    """Test seeded shot sampling."""

    def test_seed_reproducible(self):
        config = MeasurementConfig.natural(0.3, 1.0)
        first = sample_dataset(config, shots_per_point=1000, seed=11, dimension=DIMENSION)
        second = sample_dataset(config, shots_per_point=1000, seed=11, dimension=DIMENSION)
        third = sample_dataset(config, shots_per_point=1000, seed=12, dimension=DIMENSION)

        assert first.to_dict() == second.to_dict()
        assert first.to_dict() != third.to_dict()

    def test_record_layout(self):
        """Each k carries one record per basis."""
        config = MeasurementConfig.natural(0.3, 1.0)
        dataset = sample_dataset(config, shots_per_point=1000, dimension=DIMENSION)

        assert len(dataset.channel("sigma_z")) == 41
        assert len(dataset.channel("sigma_y")) == 41
        assert dataset.channel("sigma_z")[0].ups_observed == 1000

    def test_noiseless_records(self):
        config = MeasurementConfig.natural(0.3, 1.0)
        dataset = sample_dataset(config, shots_per_point=None, dimension=DIMENSION)

        assert dataset.noiseless
        assert all(record.shots == 0 for record in dataset.records)

    def test_invalid_shots(self):
        with pytest.raises(ValidationError):
            sample_dataset(MeasurementConfig.natural(0.3, 1.0), shots_per_point=0)

    def test_resample_matches_direct_sampling(self):
        """Resampling exact channels draws the same counts as sampling the protocol."""
        config = MeasurementConfig.natural(0.3, 1.0)
        exact = sample_dataset(config, shots_per_point=None, dimension=DIMENSION)
        direct = sample_dataset(config, shots_per_point=500, seed=9, dimension=DIMENSION)

        assert resample_dataset(exact, 500, seed=9) == direct

    def test_resample_needs_noiseless_records(self):
        config = MeasurementConfig.natural(0.3, 1.0)
        sampled = sample_dataset(config, shots_per_point=100, dimension=32)

        with pytest.raises(ValidationError):
            resample_dataset(sampled, 100, seed=1)


class TestFourierReconstruction:
    """Test direct Fourier inversion."""

    def test_ground_state(self):
        config = MeasurementConfig.natural(math.pi / 2, 0.0)
        estimate = reconstruct_fourier(
            sample_dataset(config, shots_per_point=None, dimension=DIMENSION)
        )

        assert l1_distance(estimate, reference_density(config, estimate.z_grid)) < 1e-3
        assert not estimate.negative_excursion

    def test_single_wavepacket(self):
        config = MeasurementConfig.natural(math.pi / 4, 2.0)
        estimate = reconstruct_fourier(
            sample_dataset(config, shots_per_point=None, dimension=DIMENSION)
        )
        peak = estimate.z_grid[np.argmax(estimate.density)]

        assert peak == pytest.approx(-2.0, abs=0.1)
        assert estimate.mass() == pytest.approx(1.0)

    def test_finite_shots_flag_negative_excursions(self):
        """At 10^3 shots the inverted density usually dips below zero."""
        config = MeasurementConfig.natural(0.02, 2.9)
        flagged = sum(
            reconstruct_fourier(
                sample_dataset(config, shots_per_point=1000, seed=seed, dimension=DIMENSION)
            ).negative_excursion
            for seed in range(10)
        )

        assert flagged >= 5

    def test_short_k_range(self):
        config = MeasurementConfig.natural(0.3, 1.0)
        dataset = sample_dataset(
            config, default_k_grid(11, 1.5), shots_per_point=None, dimension=32
        )

        with pytest.raises(InsufficientKRange):
            reconstruct_fourier(dataset)


class TestLeastSquaresReconstruction:
    """Test the constrained least-squares estimator."""

    @pytest.mark.parametrize("gamma_big,theta", CAT_PANELS)
    def test_noiseless_panels(self, gamma_big, theta):
        exact = exact_panel(gamma_big, theta)
        estimate = reconstruct_least_squares(exact)

        assert np.all(estimate.density >= 0.0)
        assert estimate.mass() == pytest.approx(1.0, abs=1e-12)
        reference = reference_density(exact.source_config, estimate.z_grid)
        assert l1_distance(estimate, reference) < 1e-2

    def test_sampled_mass_is_exact(self):
        """Finite shots still give a nonnegative density of unit trapezoid mass."""
        estimate = reconstruct_least_squares(resample_dataset(exact_panel(2.9, 0.02), 100, 3))

        assert np.all(estimate.density >= 0.0)
        assert estimate.mass() == pytest.approx(1.0, abs=1e-12)

    def test_grid_larger_than_records(self):
        config = MeasurementConfig.natural(0.3, 1.0)
        dataset = sample_dataset(config, shots_per_point=None, dimension=32)

        with pytest.raises(RankDeficient):
            reconstruct_least_squares(dataset, np.linspace(-6.0, 6.0, 101))

    def test_grid_too_narrow(self):
        config = MeasurementConfig.natural(0.02, 2.9)
        dataset = sample_dataset(config, shots_per_point=None, dimension=DIMENSION)

        with pytest.raises(ValidationError):
            reconstruct_least_squares(dataset, np.linspace(-3.0, 3.0, 41))

    def test_no_usable_wavenumbers(self):
        """A single shot per point leaves nothing above the noise floor past k = 1.4."""
        config = MeasurementConfig.natural(0.3, 1.0)
        dataset = sample_dataset(
            config, default_k_grid(5, 4.0), shots_per_point=1, dimension=32
        )

        with pytest.raises(RankDeficient):
            reconstruct_least_squares(dataset, np.linspace(-5.0, 5.0, 9))

    def test_nonpositive_corner(self):
        with pytest.raises(ValidationError) as excinfo:
            reconstruct_least_squares(exact_panel(1.0, 1.5), corner=0.0)
        assert excinfo.value.field == "corner"

    def test_smoothing_strength_halves_corner_mode(self):
        corner, dz, dk = 6.0, 0.1, 0.125
        strength = smoothing_strength(corner, dz, dk)

        assert strength * corner**4 * dz**3 * dk / math.pi == pytest.approx(1.0)
        assert smoothing_strength(2.0 * corner, dz, dk) == pytest.approx(strength / 16.0)

    def test_l1_of_reference_is_zero(self):
        config = MeasurementConfig.natural(0.3, 1.0)
        z = np.linspace(-6.0, 6.0, 61)
        reference = reference_density(config, z)

        assert l1_distance(DensityEstimate(z, reference, 0.0, "analytic"), reference) == 0.0


class TestUsableRecords:
    """Test the shot-noise floor on readout wavenumbers."""

    def test_sampled_cutoff(self):
        """At 10^3 shots the cutoff sits at k^2 = ln(1000) + 2, about k = 2.98."""
        records = [
            TomographyRecord(0.0, "sigma_z", 1000, 1000),
            TomographyRecord(2.9, "sigma_z", 1000, 500),
            TomographyRecord(3.1, "sigma_y", 1000, 500),
        ]

        assert [record.k for record in usable_records(records)] == [2.9]

    def test_noiseless_records_kept(self):
        records = [
            TomographyRecord(0.0, "sigma_y", 0, 0, expectation=0.0),
            TomographyRecord(5.0, "sigma_z", 0, 0, expectation=0.0),
        ]

        assert [record.k for record in usable_records(records)] == [5.0]

    def test_more_shots_reach_further(self):
        ks = default_k_grid()
        few = [TomographyRecord(float(k), "sigma_z", 100, 50) for k in ks]
        many = [TomographyRecord(float(k), "sigma_z", 100_000, 50_000) for k in ks]

        assert len(usable_records(few)) < len(usable_records(many))


@pytest.mark.slow
class TestReconstructionStatistics:
    """Seeded acceptance runs of both estimators over the eight panels."""

    @pytest.mark.parametrize("gamma_big,theta", CAT_PANELS)
    def test_least_squares_acceptance(self, gamma_big, theta):
        """At 10^4 shots the least-squares median L1 error stays below 0.05."""
        exact = exact_panel(gamma_big, theta)

        assert median_l1(reconstruct_least_squares, exact, 10_000) < 0.05

    @pytest.mark.parametrize("gamma_big,theta", CAT_PANELS)
    def test_least_squares_beats_fourier(self, gamma_big, theta):
        """At 10^3 shots least squares is no worse than direct inversion."""
        exact = exact_panel(gamma_big, theta)

        least_squares = median_l1(reconstruct_least_squares, exact, 1000)
        fourier = median_l1(reconstruct_fourier, exact, 1000)
        assert least_squares <= fourier

    def test_error_falls_with_shots(self):
        """The median error shrinks along the 10^2 to 10^5 shot ladder."""
        exact = exact_panel(1.0, 1.5)

        errors = [
            median_l1(reconstruct_least_squares, exact, shots)
            for shots in (100, 1000, 10_000, 100_000)
        ]
        assert errors == sorted(errors, reverse=True)
        assert errors[-1] < errors[0]


class TestMeanPosition:
    """Test <z> extraction and the inferred transition factor."""

    def test_noiseless_fixed_point(self):
        config = MeasurementConfig.natural(math.pi / 4, 1.0)
        mean_z, std_error = extract_mean_z(
            config, np.linspace(-0.05, 0.05, 11), shots_per_point=None, dimension=DIMENSION
        )

        assert mean_z == pytest.approx(-1.0, abs=1e-5)
        assert std_error == 0.0

    def test_ground_state_has_zero_mean(self):
        config = MeasurementConfig.natural(math.pi / 2, 0.0)
        mean_z, _ = extract_mean_z(config, shots_per_point=None, dimension=32)

        assert abs(mean_z) < 1e-12

    def test_sampled_mean_within_error_bars(self):
        """Most seeds land within three standard errors of the exact shift."""
        config = MeasurementConfig.natural(0.3, 0.5)
        exact = pointer_shift(config)
        hits = 0
        for seed in (1, 2, 3):
            mean_z, std_error = extract_mean_z(
                config, seed=seed, dimension=DIMENSION, linearity_alpha=None
            )
            hits += abs(mean_z - exact) <= 3.0 * std_error

        assert hits >= 2

    def test_reuses_supplied_pointer_state(self):
        """Passing the protocol output gives the same fit as running it again."""
        config = MeasurementConfig.natural(0.3, 0.5)
        motional, _ = run_protocol(config, DIMENSION)

        kwargs = {"seed": 4, "dimension": DIMENSION, "linearity_alpha": None}
        supplied = extract_mean_z(config, motional=motional, **kwargs)
        rerun = extract_mean_z(config, **kwargs)
        assert supplied == rerun

    def test_asymmetric_fit_grid(self):
        with pytest.raises(ValidationError):
            extract_mean_z(MeasurementConfig.natural(0.3, 0.5), [0.0, 0.1, 0.2])

    def test_fit_grid_beyond_linear_regime(self):
        with pytest.raises(KOutOfRange):
            extract_mean_z(
                MeasurementConfig.natural(0.3, 0.5),
                np.linspace(-0.5, 0.5, 11),
                dimension=DIMENSION,
            )

    def test_curvature_detected(self):
        """A strongly curved sine channel fails the linearity test."""
        config = MeasurementConfig.natural(0.3, 0.5)
        shots = 1_000_000
        records = []
        for k in np.linspace(-0.3, 0.3, 21):
            value = 0.9 * math.sin(10.0 * k)
            ups = int(round(shots * 0.5 * (1.0 + value)))
            records.append(TomographyRecord(float(k), "sigma_y", shots, ups))
        dataset = TomographyDataset(tuple(records), 0, config)

        with pytest.raises(LinearRegimeViolated):
            fit_slope(dataset, odd_terms=1, linearity_alpha=0.01)

    def test_noiseless_transition_factor(self):
        config = MeasurementConfig.natural(0.5, 1.0)
        estimate = infer_transition_factor(
            config, np.linspace(-0.05, 0.05, 11), shots_per_point=None, dimension=DIMENSION
        )

        assert estimate.factor == pytest.approx(transition_factor(1.0), abs=1e-5)
        assert estimate.interval == (estimate.factor, estimate.factor)
        assert estimate.direct == pytest.approx(math.exp(-0.5))


if __name__ == "__main__":
    pytest.main([__file__])
