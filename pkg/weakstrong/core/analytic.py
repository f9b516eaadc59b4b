"""
Closed-form model of the pre-selected, coupled and post-selected pointer.

A qubit prepared in |down> is coupled to a Gaussian pointer through
H = gamma0 * sigma_x * p for a time t and then post-selected onto
|f> = cos(theta)|up> - sin(theta)|down>. The surviving pointer is a two-Gaussian
cat state whose centroid interpolates between the weak value -cot(theta)
and the expectation value -sin(2 theta), governed by the overlap
exp(-Gamma^2 / 2) of the two wavepackets.

Positions are in the length unit of ``MeasurementConfig.delta_z``; phase-space
grids are dimensionless (z in units of delta_z, p in units of hbar / 2 delta_z).
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy import integrate

from .exceptions import (
    DegenerateState,
    GridTooCoarse,
    NonInvertible,
    PoleError,
    ValidationError,
)

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

# Physical preset of the trapped-ion pointer
PHYSICAL_DELTA_Z = 9.47e-9  # metres
DEFAULT_ETA = 0.08
DEFAULT_OMEGA_RABI = 2.0 * math.pi * 19e3  # rad/s
AXIAL_TRAP_FREQUENCY = 2.0 * math.pi * 1.41e6  # rad/s, reported only

DEGENERACY_FLOOR = 1e-15
MAX_GRID_SPACING = 0.25


def _check_theta(theta: float) -> None:
    if not math.isfinite(theta) or theta < 0.0 or theta > math.pi / 2:
        raise ValidationError(
            f"theta must lie in [0, pi/2], got {theta!r}", field="theta"
        )


def _check_gamma(gamma_big: float) -> None:
    if not math.isfinite(gamma_big) or gamma_big < 0.0:
        raise ValidationError(
            f"gamma must be a finite value >= 0, got {gamma_big!r}", field="gamma"
        )


@dataclass(frozen=True)
class MeasurementConfig:
    """
    Operating point (theta, Gamma) plus the constants that fix its scale.

    ``coupling_gamma0`` and ``t`` are derived in ``__post_init__`` so that
    gamma0 = eta * Omega * delta_z and Gamma = gamma0 * t / delta_z always hold.
    Use ``from_duration`` when the coupling time is the input instead of Gamma.
    """

    theta: float
    gamma_big: float
    delta_z: float = 1.0
    eta: float = DEFAULT_ETA
    omega_rabi: float = DEFAULT_OMEGA_RABI
    units: str = "natural"
    coupling_gamma0: float = field(init=False)
    t: float = field(init=False)

    def __post_init__(self) -> None:
        _check_theta(self.theta)
        _check_gamma(self.gamma_big)
        for name in ("delta_z", "eta", "omega_rabi"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0.0:
                raise ValidationError(f"{name} must be > 0, got {value!r}", field=name)
        if self.units not in ("natural", "physical"):
            raise ValidationError(
                f"units must be 'natural' or 'physical', got {self.units!r}",
                field="units",
            )
        gamma0 = self.eta * self.omega_rabi * self.delta_z
        object.__setattr__(self, "coupling_gamma0", gamma0)
        object.__setattr__(self, "t", self.gamma_big * self.delta_z / gamma0)

    @classmethod
    def natural(cls, theta: float, gamma_big: float) -> "MeasurementConfig":
        """Natural units: hbar = 1, delta_z = 1, so Gamma equals gamma0 * t."""
        return cls(theta=theta, gamma_big=gamma_big)

    @classmethod
    def physical(cls, theta: float, gamma_big: float) -> "MeasurementConfig":
        """Trapped-ion preset with delta_z = 9.47 nm (lengths in metres)."""
        return cls(
            theta=theta,
            gamma_big=gamma_big,
            delta_z=PHYSICAL_DELTA_Z,
            units="physical",
        )

    @classmethod
    def from_duration(
        cls,
        theta: float,
        t: float,
        delta_z: float = 1.0,
        eta: float = DEFAULT_ETA,
        omega_rabi: float = DEFAULT_OMEGA_RABI,
        units: str = "natural",
    ) -> "MeasurementConfig":
        """Build a config from the coupling duration t (seconds)."""
        if not math.isfinite(t) or t < 0.0:
            raise ValidationError(f"t must be >= 0, got {t!r}", field="t")
        return cls(
            theta=theta,
            gamma_big=eta * omega_rabi * t,
            delta_z=delta_z,
            eta=eta,
            omega_rabi=omega_rabi,
            units=units,
        )

    @property
    def gamma0_t(self) -> float:
        """Displacement of each wavepacket, in length units."""
        return self.gamma_big * self.delta_z

    def with_point(self, theta: float, gamma_big: float) -> "MeasurementConfig":
        """Same constants, different operating point."""
        return MeasurementConfig(
            theta=theta,
            gamma_big=gamma_big,
            delta_z=self.delta_z,
            eta=self.eta,
            omega_rabi=self.omega_rabi,
            units=self.units,
        )


@dataclass(frozen=True)
class CatState:
    """Unnormalized two-Gaussian pointer state and its normalization."""

    coeff_plus: float
    coeff_minus: float
    displacement: float
    norm: float
    width: float
    overlap: float

    @property
    def norm_squared(self) -> float:
        return self.norm * self.norm


@dataclass(frozen=True)
class PhaseSpaceGrid:
    """
    Uniform (z, p) grid with z in units of delta_z and p in units of hbar / 2 delta_z.
    """

    z_min: float
    z_max: float
    n_z: int
    p_min: float
    p_max: float
    n_p: int

    def __post_init__(self) -> None:
        if self.n_z < 2 or self.n_p < 2:
            raise ValidationError("grid needs at least 2 points per axis", field="grid")
        if not (self.z_max > self.z_min and self.p_max > self.p_min):
            raise ValidationError("grid max must exceed grid min", field="grid")

    @classmethod
    def for_config(
        cls, config: MeasurementConfig, spacing: float = 0.125, margin: float = 6.0
    ) -> "PhaseSpaceGrid":
        """Symmetric grid covering both wavepackets plus ``margin`` widths."""
        z_half = config.gamma_big + margin
        p_half = 8.0
        n_z = 2 * int(math.ceil(z_half / spacing)) + 1
        n_p = 2 * int(math.ceil(p_half / spacing)) + 1
        return cls(-z_half, z_half, n_z, -p_half, p_half, n_p)

    @property
    def z_values(self) -> np.ndarray:
        return np.linspace(self.z_min, self.z_max, self.n_z)

    @property
    def p_values(self) -> np.ndarray:
        return np.linspace(self.p_min, self.p_max, self.n_p)

    @property
    def dz(self) -> float:
        return (self.z_max - self.z_min) / (self.n_z - 1)

    @property
    def dp(self) -> float:
        return (self.p_max - self.p_min) / (self.n_p - 1)


def weak_value(theta: float) -> float:
    """
    Weak value of sigma_x for |i> = |down> and the post-selected |f>.

    Args:
        theta: Post-selection angle in radians, 0 < theta <= pi/2

    Returns:
        -cot(theta)

    Raises:
        PoleError: At theta = 0, where <f|i> vanishes
    """
    _check_theta(theta)
    if theta == 0.0:
        raise PoleError(
            "weak value diverges at theta = 0 (orthogonal post-selection)",
            field="theta",
        )
    return -math.cos(theta) / math.sin(theta)


def expectation_value(theta: float) -> float:
    """Post-selected expectation value of sigma_x, -sin(2 theta)."""
    _check_theta(theta)
    return -math.sin(2.0 * theta)


def transition_factor(gamma_big: float) -> float:
    """Overlap of the two displaced wavepackets, exp(-Gamma^2 / 2)."""
    _check_gamma(gamma_big)
    return math.exp(-0.5 * gamma_big * gamma_big)


def gamma_from_transition_factor(factor: float) -> float:
    """Invert exp(-Gamma^2 / 2) for 0 < factor <= 1."""
    if not (0.0 < factor <= 1.0):
        raise NonInvertible(
            f"transition factor must lie in (0, 1], got {factor!r}", field="factor"
        )
    return math.sqrt(-2.0 * math.log(factor))


def _denominator(theta: float, gamma_big: float) -> float:
    # 1 - cos(2 theta) exp(-Gamma^2/2), written to avoid cancellation near 0
    return 2.0 * math.sin(theta) ** 2 - math.cos(2.0 * theta) * math.expm1(
        -0.5 * gamma_big * gamma_big
    )


def make_cat_state(config: MeasurementConfig) -> CatState:
    """
    Build the post-selected pointer state.

    The post-selected amplitudes -(sin + cos)/2 and (cos - sin)/2 equal
    sin(theta + pi/4)/sqrt(2) and cos(theta + pi/4)/sqrt(2); the common 1/sqrt(2)
    is carried by ``success_probability`` instead of the state.

    Raises:
        DegenerateState: If the state norm squared falls below 1e-15
    """
    theta = config.theta
    norm_squared = _denominator(theta, config.gamma_big)
    if norm_squared < DEGENERACY_FLOOR:
        raise DegenerateState(
            f"post-selected pointer norm^2 = {norm_squared:.3e} at "
            f"theta={theta}, gamma={config.gamma_big}"
        )
    return CatState(
        coeff_plus=-math.sin(theta + math.pi / 4),
        coeff_minus=math.cos(theta + math.pi / 4),
        displacement=config.gamma0_t,
        norm=math.sqrt(norm_squared),
        width=config.delta_z,
        overlap=transition_factor(config.gamma_big),
    )


def pointer_shift(config: MeasurementConfig) -> float:
    """
    Centroid of the post-selected pointer, in length units.

    Returns:
        -gamma0 t sin(2 theta) / (1 - cos(2 theta) exp(-Gamma^2 / 2))

    Raises:
        DegenerateState: When the denominator is below 1e-15
    """
    return config.gamma0_t * relative_shift(config)


def relative_shift(config: MeasurementConfig) -> float:
    """
    <dz> / gamma0 t, finite also at Gamma = 0 where it equals the weak value.

    Raises:
        DegenerateState: When the denominator is below 1e-15
    """
    denominator = _denominator(config.theta, config.gamma_big)
    if denominator < DEGENERACY_FLOOR:
        raise DegenerateState(
            f"pointer shift undefined: denominator {denominator:.3e} at "
            f"theta={config.theta}, gamma={config.gamma_big}"
        )
    return -math.sin(2.0 * config.theta) / denominator


def amplification(config: MeasurementConfig) -> float:
    """|<dz>| / gamma0 t, the signal amplification of the pointer."""
    if config.gamma_big == 0.0:
        raise DegenerateState("amplification undefined without coupling")
    return abs(pointer_shift(config)) / config.gamma0_t


def invert_transition_factor(shift: float, theta: float, gamma0_t: float) -> float:
    """
    Infer exp(-Gamma^2 / 2) from a measured pointer shift.

    Args:
        shift: Measured centroid <dz>_theta (length units)
        theta: Post-selection angle used for the measurement
        gamma0_t: Coupling displacement gamma0 t (same length units)

    Returns:
        (shift + gamma0 t sin 2 theta) / (shift cos 2 theta)

    Raises:
        NonInvertible: At theta = pi/4 (no transition information) or zero shift
    """
    _check_theta(theta)
    cos_2theta = math.cos(2.0 * theta)
    if abs(cos_2theta) < 1e-12:
        raise NonInvertible(
            "theta = pi/4 projects onto an eigenstate; the shift does not "
            "depend on the transition factor",
            field="theta",
        )
    if shift == 0.0:
        raise NonInvertible("a zero shift cannot be inverted", field="shift")
    return (shift + gamma0_t * math.sin(2.0 * theta)) / (shift * cos_2theta)


def success_probability(config: MeasurementConfig) -> float:
    """Probability that the post-selection succeeds, (1 - cos 2 theta e^-G^2/2) / 2."""
    return 0.5 * _denominator(config.theta, config.gamma_big)


def postselection_overlap(theta: float) -> float:
    """|<f|i>|^2 = sin^2(theta): the success rate in the Gamma -> 0 limit."""
    _check_theta(theta)
    return math.sin(theta) ** 2


def _ground_wavefunction(z: ArrayLike, width: float) -> ArrayLike:
    return (2.0 * math.pi * width * width) ** -0.25 * np.exp(-z * z / (4.0 * width * width))


def cat_wavefunction(cat: CatState, z: ArrayLike) -> ArrayLike:
    """Normalized real amplitude of the cat state at position z."""
    z = np.asarray(z, dtype=float)
    plus = _ground_wavefunction(z + cat.displacement, cat.width)
    minus = _ground_wavefunction(z - cat.displacement, cat.width)
    return (cat.coeff_plus * plus + cat.coeff_minus * minus) / cat.norm


def probability_density(cat: CatState, z: ArrayLike) -> ArrayLike:
    """
    Position probability density of the normalized cat state.

    Args:
        cat: State from ``make_cat_state``
        z: Position(s) in length units

    Returns:
        |c+ phi(z + gamma0 t) + c- phi(z - gamma0 t)|^2 / norm^2, per unit length
    """
    amplitude = cat_wavefunction(cat, z)
    density = amplitude * amplitude
    return float(density) if np.ndim(density) == 0 else density


def _check_grid(config: MeasurementConfig, grid: PhaseSpaceGrid) -> None:
    if grid.dz > MAX_GRID_SPACING:
        raise GridTooCoarse(
            f"z spacing {grid.dz:.4g} exceeds delta_z/4", field="grid"
        )
    # fringes cos(Gamma p) need at least four samples per period
    p_limit = MAX_GRID_SPACING
    if config.gamma_big > 0.0:
        p_limit = min(p_limit, math.pi / (2.0 * config.gamma_big))
    if grid.dp > p_limit:
        raise GridTooCoarse(
            f"p spacing {grid.dp:.4g} would alias fringes (limit {p_limit:.4g})",
            field="grid",
        )


def _ground_wigner(z: ArrayLike, p: ArrayLike) -> ArrayLike:
    return np.exp(-0.5 * (z * z + p * p)) / (2.0 * math.pi)


def wigner_point(config: MeasurementConfig, z: ArrayLike, p: ArrayLike) -> ArrayLike:
    """
    Wigner function of the cat state at dimensionless (z, p).

    Normalized so that its integral over dz dp (in grid units) is one.
    """
    cat = make_cat_state(config)
    shift = config.gamma_big
    z = np.asarray(z, dtype=float)
    p = np.asarray(p, dtype=float)
    value = (
        cat.coeff_plus**2 * _ground_wigner(z + shift, p)
        + cat.coeff_minus**2 * _ground_wigner(z - shift, p)
        - math.cos(2.0 * config.theta) * np.cos(shift * p) * _ground_wigner(z, p)
    ) / cat.norm_squared
    return float(value) if np.ndim(value) == 0 else value


def wigner(config: MeasurementConfig, grid: PhaseSpaceGrid) -> np.ndarray:
    """
    Evaluate the cat-state Wigner function on a phase-space grid.

    Args:
        config: Operating point
        grid: Phase-space grid (z in delta_z, p in hbar / 2 delta_z)

    Returns:
        Matrix of shape (n_z, n_p); row i is z_values[i]

    Raises:
        GridTooCoarse: When the spacing would alias the interference fringes
    """
    _check_grid(config, grid)
    z_mesh, p_mesh = np.meshgrid(grid.z_values, grid.p_values, indexing="ij")
    return np.asarray(wigner_point(config, z_mesh, p_mesh))


def wigner_marginal(values: np.ndarray, grid: PhaseSpaceGrid) -> np.ndarray:
    """Integrate a Wigner matrix over p, giving the density per unit delta_z."""
    return integrate.trapezoid(values, grid.p_values, axis=1)


def wigner_from_wavefunction(cat: CatState, z: float, p: float) -> float:
    """
    Wigner function from its defining integral over the cat wavefunction.

    Used as an independent quadrature check of ``wigner_point``; arguments are in
    the same dimensionless units.
    """
    root_width = math.sqrt(cat.width)

    def amplitude(x: float) -> float:
        return float(cat_wavefunction(cat, x * cat.width)) * root_width

    def integrand(y: float) -> float:
        return amplitude(z + 0.5 * y) * amplitude(z - 0.5 * y) * math.cos(0.5 * p * y)

    reach = 2.0 * abs(z) + 4.0 * cat.displacement / cat.width + 60.0
    value, error = integrate.quad(
        integrand, -reach, reach, limit=400, epsabs=1e-13, epsrel=1e-11
    )
    logger.debug("Wigner quadrature at (%g, %g): %g +/- %g", z, p, value, error)
    return value / (4.0 * math.pi)


def density_normalization(cat: CatState) -> float:
    """Adaptive-quadrature integral of the density (should be one)."""
    reach = cat.displacement + 20.0 * cat.width
    value, _ = integrate.quad(
        lambda x: probability_density(cat, x),
        -reach,
        reach,
        points=sorted({-cat.displacement, 0.0, cat.displacement}),
        epsabs=1e-10,
        limit=200,
    )
    return value
