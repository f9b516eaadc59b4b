"""
Tests for text utilities.
"""

import math

import pytest

from weakstrong.utils.text_utils import (
    format_check_summary,
    format_length,
    format_number,
    format_point_report,
    format_probability,
    format_reconstruct_summary,
    format_transition_table,
)


class TestTextUtils:
    """Test report formatting utilities."""

    def test_format_length(self):
        """Test natural and physical length display."""
        assert format_length(-1.0, "natural") == "-1.000000 delta_z"
        assert format_length(-9.4737e-9, "physical") == "-9.4737 nm"

    def test_format_number_markers(self):
        """Test missing and infinite values."""
        assert format_number(None) == "n/a"
        assert format_number(math.nan) == "n/a"
        assert format_number(math.inf) == "inf"
        assert format_number(-math.inf) == "-inf"
        assert format_number(0.5, 3) == "0.500"

    def test_format_probability(self):
        """Test that small probabilities switch to scientific notation."""
        assert format_probability(7.9947e-4) == "7.9947e-04"
        assert format_probability(0.5) == "0.500000"
        assert format_probability(0.0) == "0.000000"

    def test_point_report(self):
        """Test the single-point report layout."""
        report = format_point_report(
            {
                "theta": math.pi / 4,
                "gamma_big": 1.0,
                "engine": "analytic",
                "units": "natural",
                "weak_value": -1.0,
                "expectation_value": -1.0,
                "shift": -1.0,
                "shift_over_gamma0t": -1.0,
                "success_probability": 0.5,
                "transition_factor": math.exp(-0.5),
            }
        )

        assert "shift / gamma0 t      -1.000000" in report
        assert "transition factor     0.606531" in report
        assert "fidelity" not in report

    def test_point_report_without_weak_value(self):
        """Test that theta = 0 reports the weak value as n/a."""
        report = format_point_report(
            {
                "theta": 0.0,
                "gamma_big": 1.0,
                "expectation_value": 0.0,
                "shift": 0.0,
                "shift_over_gamma0t": 0.0,
                "success_probability": 0.1,
                "transition_factor": 0.6,
                "fidelity": 1.0,
            }
        )

        assert "weak value            n/a" in report
        assert "cat-state fidelity" in report

    def test_check_summary(self):
        """Test PASS and FAIL verdicts."""
        passed = format_check_summary(1e-9, (0.02, 2.9), 1e-6)
        failed = format_check_summary(1e-3, (0.02, 2.9), 1e-6, 0.999)

        assert passed.startswith("PASS")
        assert failed.startswith("FAIL")
        assert "theta=0.02, Gamma=2.9" in failed
        assert "min fidelity" in failed

    def test_reconstruct_summary(self):
        """Test the reconstruction summary line."""
        text = format_reconstruct_summary(
            {"fourier": 1.5e-3, "least_squares": 2.0e-3}, ["fourier negative excursion"]
        )

        assert text == (
            "L1 fourier=1.500e-03 least_squares=2.000e-03 (fourier negative excursion)"
        )

    def test_transition_table(self):
        """Test the transition-factor table."""
        table = format_transition_table(
            [{"gamma_big": 1.0, "direct": math.exp(-0.5), "inferred": math.nan, "std": 0.0}]
        )
        lines = table.splitlines()

        assert lines[0].split() == ["Gamma", "direct", "inferred", "std"]
        assert lines[1].split() == ["1.0000", "0.6065306597", "n/a", "0.000000"]


if __name__ == "__main__":
    pytest.main([__file__])
