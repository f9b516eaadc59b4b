"""
Text formatting utilities for the weak-to-strong simulator.

This module turns computed observables into the plain-text reports printed by
the command-line interface.
"""

import math
from typing import Any, Dict, List, Optional, Sequence, Tuple

NANOMETRE = 1e-9


def format_length(value: float, units: str) -> str:
    """
    Format a length for display.

    Args:
        value: Length in the config's units (delta_z or metres)
        units: "natural" or "physical"

    Returns:
        "<value> delta_z" or "<value> nm"
    """
    if units == "physical":
        return f"{value / NANOMETRE:.4f} nm"
    return f"{value:.6f} delta_z"


def format_number(value: Optional[float], digits: int = 6) -> str:
    """Fixed-point text, with explicit markers for missing and infinite values."""
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "n/a"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.{digits}f}"


def format_probability(value: float) -> str:
    """Probabilities below 1e-3 in scientific notation, others fixed-point."""
    if 0.0 < abs(value) < 1e-3:
        return f"{value:.4e}"
    return f"{value:.6f}"


def format_point_report(values: Dict[str, Any]) -> str:
    """
    Build the single-point report.

    Args:
        values: Keys theta, gamma_big, engine, units, weak_value,
            expectation_value, shift, shift_over_gamma0t, success_probability,
            transition_factor and optionally fidelity

    Returns:
        Multi-line report text
    """
    units = values.get("units", "natural")
    lines = [
        f"theta                 {format_number(values['theta'])} rad",
        f"Gamma                 {format_number(values['gamma_big'])}",
        f"engine                {values.get('engine', 'analytic')}",
        f"weak value            {format_number(values.get('weak_value'))}",
        f"expectation value     {format_number(values['expectation_value'])}",
        f"shift / gamma0 t      {format_number(values['shift_over_gamma0t'])}",
        f"shift                 {format_length(values['shift'], units)}",
        f"success probability   {format_probability(values['success_probability'])}",
        f"transition factor     {format_number(values['transition_factor'])}",
    ]
    if values.get("fidelity") is not None:
        lines.append(f"cat-state fidelity    {values['fidelity']:.12f}")
    return "\n".join(lines)


def format_check_summary(
    max_deviation: float,
    worst: Tuple[float, float],
    tolerance: float,
    min_fidelity: Optional[float] = None,
) -> str:
    """One-line engine cross-check verdict."""
    theta, gamma_big = worst
    verdict = "PASS" if max_deviation < tolerance else "FAIL"
    text = (
        f"{verdict}: max relative deviation {max_deviation:.3e} "
        f"(tolerance {tolerance:.1e}) at theta={theta:.6g}, Gamma={gamma_big:.6g}"
    )
    if min_fidelity is not None:
        text += f"; min fidelity {min_fidelity:.12f}"
    return text


def format_reconstruct_summary(distances: Dict[str, float], flags: Sequence[str]) -> str:
    """Summary line for a reconstruction run, e.g. 'L1 fourier=... least_squares=...'."""
    parts = [f"{method}={distance:.3e}" for method, distance in distances.items()]
    text = "L1 " + " ".join(parts)
    if flags:
        text += " (" + ", ".join(flags) + ")"
    return text


def format_transition_table(rows: List[Dict[str, float]]) -> str:
    """Aligned text table of Gamma, exp(-Gamma^2/2), the inferred factor and its std."""
    lines = [f"{'Gamma':>10} {'direct':>14} {'inferred':>14} {'std':>12}"]
    for row in rows:
        lines.append(
            f"{row['gamma_big']:>10.4f} {row['direct']:>14.10f} "
            f"{format_number(row.get('inferred'), 10):>14} "
            f"{format_number(row.get('std'), 6):>12}"
        )
    return "\n".join(lines)
