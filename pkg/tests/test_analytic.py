"""
Tests for the closed-form pointer model.
"""

import math

import numpy as np
import pytest
from scipy import integrate

from weakstrong.core.analytic import (
    PHYSICAL_DELTA_Z,
    MeasurementConfig,
    PhaseSpaceGrid,
    amplification,
    cat_wavefunction,
    density_normalization,
    expectation_value,
    gamma_from_transition_factor,
    invert_transition_factor,
    make_cat_state,
    pointer_shift,
    postselection_overlap,
    probability_density,
    relative_shift,
    success_probability,
    transition_factor,
    weak_value,
    wigner,
    wigner_from_wavefunction,
    wigner_marginal,
    wigner_point,
)
from weakstrong.core.exceptions import (
    DegenerateState,
    GridTooCoarse,
    NonInvertible,
    PoleError,
    ValidationError,
)
from weakstrong.services.sweep_service import CAT_PANELS, transition_gammas


class TestMeasurementConfig:
    """Test operating-point construction."""

    def test_natural_profile(self):
        config = MeasurementConfig.natural(0.5, 1.0)

        assert config.delta_z == 1.0
        assert config.gamma0_t == 1.0
        assert config.coupling_gamma0 * config.t == pytest.approx(1.0)

    def test_physical_profile(self):
        config = MeasurementConfig.physical(0.02, 0.04)

        assert config.delta_z == PHYSICAL_DELTA_Z
        assert config.gamma0_t == pytest.approx(0.04 * 9.47e-9)
        assert config.units == "physical"

    def test_from_duration(self):
        config = MeasurementConfig.from_duration(0.3, t=1e-5)

        assert config.gamma_big == pytest.approx(config.eta * config.omega_rabi * 1e-5)
        assert config.t == pytest.approx(1e-5)

    def test_with_point_keeps_scales(self):
        config = MeasurementConfig.physical(0.02, 0.04).with_point(0.5, 1.0)

        assert (config.theta, config.gamma_big) == (0.5, 1.0)
        assert config.delta_z == PHYSICAL_DELTA_Z
        assert config.units == "physical"

    @pytest.mark.parametrize("theta", [-0.1, 2.0, float("nan")])
    def test_theta_out_of_range(self, theta):
        with pytest.raises(ValidationError) as excinfo:
            MeasurementConfig.natural(theta, 1.0)
        assert excinfo.value.field == "theta"

    def test_negative_gamma(self):
        with pytest.raises(ValidationError):
            MeasurementConfig.natural(0.5, -1.0)

    def test_unknown_units(self):
        with pytest.raises(ValidationError):
            MeasurementConfig(theta=0.5, gamma_big=1.0, units="imperial")


class TestWeakAndExpectationValues:
    """Test the two asymptotes of the pointer shift."""

    def test_weak_value(self):
        assert weak_value(0.5) == pytest.approx(-1.0 / math.tan(0.5), rel=1e-14)
        assert weak_value(math.pi / 4) == pytest.approx(-1.0)

    def test_weak_value_pole(self):
        with pytest.raises(PoleError):
            weak_value(0.0)

    def test_expectation_value(self):
        assert expectation_value(math.pi / 4) == pytest.approx(-1.0)
        assert expectation_value(0.3) == pytest.approx(-math.sin(0.6))

    def test_transition_factor_anchors(self):
        assert f"{transition_factor(1.0):.3g}" == "0.607"
        assert f"{transition_factor(2.9):.3g}" == "0.0149"

    def test_gamma_from_transition_factor(self):
        assert gamma_from_transition_factor(transition_factor(1.7)) == pytest.approx(1.7)

    def test_gamma_from_invalid_factor(self):
        with pytest.raises(NonInvertible):
            gamma_from_transition_factor(1.5)


class TestPointerShift:
    """Test the pointer centroid and its inversion."""

    @pytest.mark.parametrize("gamma_big", [0.01, 0.1, 1.0, 2.9, 10.0])
    def test_fixed_point_at_quarter_pi(self, gamma_big):
        """At 45 degrees the shift is -gamma0 t for every coupling strength."""
        config = MeasurementConfig.natural(math.pi / 4, gamma_big)

        assert pointer_shift(config) / config.gamma0_t == pytest.approx(-1.0, abs=1e-8)

    def test_weak_asymptote(self):
        """Vanishing coupling recovers the weak value."""
        config = MeasurementConfig.natural(0.3, 1e-3)

        assert abs(relative_shift(config) + 1.0 / math.tan(0.3)) < 1e-4

    def test_strong_asymptote(self):
        """Strong coupling recovers the expectation value."""
        config = MeasurementConfig.natural(0.3, 8.0)

        assert abs(relative_shift(config) + math.sin(0.6)) < 1e-4

    def test_relative_shift_at_zero_coupling_is_weak_value(self):
        config = MeasurementConfig.natural(0.4, 0.0)

        assert relative_shift(config) == pytest.approx(weak_value(0.4), rel=1e-12)

    @pytest.mark.parametrize("theta", [0.02, 0.3, 0.6])
    def test_monotone_in_gamma_below_quarter_pi(self, theta):
        """Below 45 degrees the shift moves steadily from the weak to the strong value."""
        shifts = np.array(
            [
                relative_shift(MeasurementConfig.natural(theta, gamma_big))
                for gamma_big in np.linspace(0.01, 4.0, 200)
            ]
        )

        assert np.all(np.diff(shifts) > 0.0)
        assert np.all(shifts > weak_value(theta))
        assert np.all(shifts < expectation_value(theta))

    def test_transition_round_trip(self):
        """Shifts computed from Gamma invert back to exp(-Gamma^2 / 2)."""
        for gamma_big in transition_gammas():
            config = MeasurementConfig.natural(0.5, gamma_big)
            inferred = invert_transition_factor(pointer_shift(config), 0.5, config.gamma0_t)

            assert abs(inferred - transition_factor(gamma_big)) < 1e-10

    def test_inversion_at_quarter_pi(self):
        with pytest.raises(NonInvertible):
            invert_transition_factor(-1.0, math.pi / 4, 1.0)

    def test_inversion_of_zero_shift(self):
        with pytest.raises(NonInvertible):
            invert_transition_factor(0.0, 0.5, 1.0)

    def test_degenerate_state(self):
        """Orthogonal post-selection without coupling has nothing to normalize."""
        config = MeasurementConfig.natural(0.0, 0.0)

        with pytest.raises(DegenerateState):
            make_cat_state(config)
        with pytest.raises(DegenerateState):
            pointer_shift(config)


class TestAmplification:
    """Test the nearly orthogonal post-selection regime."""

    def test_physical_shift_near_ten_nanometres(self):
        config = MeasurementConfig.physical(0.02, 0.04)
        shift = pointer_shift(config)

        assert 9.0e-9 <= abs(shift) <= 10.0e-9
        assert amplification(config) == pytest.approx(25.0, rel=0.05)

    def test_success_probability(self):
        config = MeasurementConfig.physical(0.02, 0.04)
        expected = 0.5 * (1.0 - math.cos(0.04) * math.exp(-0.5 * 0.04**2))

        assert success_probability(config) == pytest.approx(expected, rel=1e-10)
        assert 3.8e-4 <= postselection_overlap(0.02) <= 4.2e-4

    def test_success_probability_at_quarter_pi(self):
        assert success_probability(MeasurementConfig.natural(math.pi / 4, 1.0)) == (
            pytest.approx(0.5, abs=1e-12)
        )


class TestCatState:
    """Test the post-selected pointer state."""

    @pytest.mark.parametrize("theta,gamma_big", [(0.02, 2.9), (1.5, 1.0), (0.3, 0.5)])
    def test_density_normalized(self, theta, gamma_big):
        cat = make_cat_state(MeasurementConfig.natural(theta, gamma_big))

        assert density_normalization(cat) == pytest.approx(1.0, abs=1e-8)

    def test_physical_density_normalized(self):
        cat = make_cat_state(MeasurementConfig.physical(0.02, 0.04))

        assert density_normalization(cat) == pytest.approx(1.0, abs=1e-8)

    def test_eigenstate_projection_is_single_wavepacket(self):
        config = MeasurementConfig.natural(math.pi / 4, 2.9)
        cat = make_cat_state(config)

        assert probability_density(cat, -2.9) == pytest.approx(1.0 / math.sqrt(2 * math.pi))
        # only the Gaussian tail of the packet at -2.9 remains, 5.8 widths out
        tail = math.exp(-0.5 * 5.8**2) / math.sqrt(2 * math.pi)
        assert probability_density(cat, 2.9) == pytest.approx(tail, rel=1e-6)
        assert probability_density(cat, 2.9) < 1e-6 * probability_density(cat, -2.9)

    def test_interference_at_origin(self):
        """Nearly orthogonal post-selection cancels the overlap; nearly parallel adds it."""
        nearly_orthogonal = make_cat_state(MeasurementConfig.natural(0.02, 1.0))
        nearly_parallel = make_cat_state(MeasurementConfig.natural(1.5, 1.0))

        assert probability_density(nearly_orthogonal, 0.0) < 0.01 * probability_density(
            nearly_orthogonal, -1.0
        )
        assert probability_density(nearly_parallel, 0.0) > probability_density(
            nearly_parallel, 1.0
        )

    def test_centroid_matches_pointer_shift(self):
        config = MeasurementConfig.natural(0.5, 2.0)
        cat = make_cat_state(config)
        z = np.linspace(-12.0, 12.0, 4001)

        centroid = integrate.trapezoid(z * probability_density(cat, z), z)
        assert centroid == pytest.approx(pointer_shift(config), abs=1e-8)

    def test_wavefunction_is_real_amplitude(self):
        cat = make_cat_state(MeasurementConfig.natural(0.3, 0.5))
        z = np.linspace(-3.0, 3.0, 7)

        np.testing.assert_allclose(cat_wavefunction(cat, z) ** 2, probability_density(cat, z))


class TestWigner:
    """Test the phase-space representation."""

    @pytest.mark.parametrize("gamma_big,theta", CAT_PANELS)
    def test_marginal_and_normalization(self, gamma_big, theta):
        """Integrating out p gives the position density."""
        config = MeasurementConfig.natural(theta, gamma_big)
        grid = PhaseSpaceGrid.for_config(config)
        values = wigner(config, grid)
        cat = make_cat_state(config)

        marginal = wigner_marginal(values, grid)
        np.testing.assert_allclose(
            marginal, probability_density(cat, grid.z_values), rtol=0.0, atol=1e-6
        )
        total = integrate.trapezoid(marginal, grid.z_values)
        assert total == pytest.approx(1.0, abs=1e-6)

    @pytest.mark.parametrize("z,p", [(0.0, 0.0), (0.0, 1.0), (0.5, 0.3), (-2.9, 0.0), (1.0, -2.0)])
    def test_matches_defining_integral(self, z, p):
        config = MeasurementConfig.natural(0.02, 2.9)
        cat = make_cat_state(config)

        assert wigner_from_wavefunction(cat, z, p) == pytest.approx(
            wigner_point(config, z, p), abs=1e-6
        )

    def test_fringes_go_negative(self):
        config = MeasurementConfig.natural(0.02, 2.9)
        p_values = np.linspace(0.0, 2.0, 201)

        assert np.min(wigner_point(config, 0.0, p_values)) < 0.0

    def test_grid_shape(self):
        config = MeasurementConfig.natural(0.5, 1.0)
        grid = PhaseSpaceGrid(-5.0, 5.0, 81, -4.0, 4.0, 65)

        assert wigner(config, grid).shape == (81, 65)

    def test_coarse_z_grid(self):
        config = MeasurementConfig.natural(0.5, 1.0)

        with pytest.raises(GridTooCoarse):
            wigner(config, PhaseSpaceGrid(-5.0, 5.0, 11, -8.0, 8.0, 129))

    def test_coarse_p_grid_aliases_fringes(self):
        """Fringes of period 2 pi / Gamma need enough p samples."""
        config = MeasurementConfig.natural(0.5, 10.0)
        grid = PhaseSpaceGrid(-16.0, 16.0, 257, -8.0, 8.0, 65)

        with pytest.raises(GridTooCoarse):
            wigner(config, grid)


if __name__ == "__main__":
    pytest.main([__file__])
