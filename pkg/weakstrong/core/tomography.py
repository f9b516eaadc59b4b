"""
Characteristic-function readout of the motional pointer.

The readout maps the pointer position onto the qubit with
U_z = exp(-i k z sigma_x / 2), so that measuring sigma_z afterwards samples
O(k) = cos(k z) sigma_z + sin(k z) sigma_y. Preparing the qubit in the sigma_z
(sigma_y) eigenstate selects <cos kz> (<sin kz>). From those records the density
is rebuilt either by Fourier inversion or by a nonnegative, unit-mass
least-squares fit, and <z> is taken from the small-k slope of the sin channel.

Wavenumbers are in units of 1 / delta_z and positions in units of delta_z.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, linalg, optimize, stats

from . import fock
from .analytic import (
    MeasurementConfig,
    invert_transition_factor,
    make_cat_state,
    probability_density,
    transition_factor,
)
from .exceptions import (
    DegenerateState,
    InsufficientKRange,
    KOutOfRange,
    LinearRegimeViolated,
    RankDeficient,
    SolverFailure,
    ValidationError,
)

logger = logging.getLogger(__name__)

BASES = ("sigma_z", "sigma_y")
K_MAX = 6.0
MIN_FOURIER_K = 2.0
LINEAR_K_LIMIT = 0.3
WEIGHT_EPSILON = 1e-6
NEGATIVE_EXCURSION = 0.01
NOISE_FLOOR_MARGIN = 2.0
CORNER_FACTOR = 2.0
KKT_TOLERANCE = 1e-8
ITERATION_BUDGET = 100_000
BRACKET_STEPS = 60

# Qubit preparations in the (down, up) basis: +1 eigenstates of sigma_z and sigma_y
_PREPARATIONS = {
    "sigma_z": np.array([0.0, 1.0], dtype=complex),
    "sigma_y": np.array([1.0, -1j], dtype=complex) / math.sqrt(2.0),
}


def default_k_grid(points: int = 41, k_max: float = 5.0) -> np.ndarray:
    """Uniform readout wavenumbers on [0, k_max]."""
    return np.linspace(0.0, k_max, points)


def default_fit_grid(points: int = 21, k_max: float = LINEAR_K_LIMIT) -> np.ndarray:
    """Symmetric wavenumbers for the slope fit."""
    return np.linspace(-k_max, k_max, points)


def default_z_grid(config: MeasurementConfig, points: int = 201) -> np.ndarray:
    """Positions on [-(Gamma + 5), Gamma + 5] in units of delta_z."""
    half = config.gamma_big + 5.0
    return np.linspace(-half, half, points)


@dataclass(frozen=True)
class TomographyRecord:
    """
    One readout setting and its outcome counts.

    ``shots == 0`` marks a noiseless record whose exact mean is held in
    ``expectation``.
    """

    k: float
    basis: str
    shots: int
    ups_observed: int
    expectation: Optional[float] = None

    def __post_init__(self) -> None:
        if self.basis not in BASES:
            raise ValidationError(f"unknown basis {self.basis!r}", field="basis")
        if not 0 <= self.ups_observed <= self.shots:
            raise ValidationError(
                f"ups_observed={self.ups_observed} outside [0, {self.shots}]",
                field="ups_observed",
            )
        if self.shots == 0 and self.expectation is None:
            raise ValidationError(
                "noiseless records need an exact expectation", field="expectation"
            )

    @property
    def noiseless(self) -> bool:
        return self.shots == 0

    @property
    def estimate(self) -> float:
        """Sample mean of O(k): 2 ups / shots - 1, or the exact value."""
        if self.noiseless:
            return float(self.expectation)
        return 2.0 * self.ups_observed / self.shots - 1.0

    @property
    def variance(self) -> float:
        """Binomial variance of ``estimate``; zero for noiseless records."""
        if self.noiseless:
            return 0.0
        g = self.estimate
        return (1.0 - g * g + WEIGHT_EPSILON) / self.shots

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "k": self.k,
            "basis": self.basis,
            "shots": self.shots,
            "ups": self.ups_observed,
        }
        if self.expectation is not None:
            data["expectation"] = self.expectation
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TomographyRecord":
        return cls(
            k=float(data["k"]),
            basis=str(data["basis"]),
            shots=int(data["shots"]),
            ups_observed=int(data["ups"]),
            expectation=data.get("expectation"),
        )


def config_to_dict(config: MeasurementConfig) -> Dict[str, Any]:
    """Serializable constructor arguments of a MeasurementConfig."""
    return {
        "theta": config.theta,
        "gamma_big": config.gamma_big,
        "delta_z": config.delta_z,
        "eta": config.eta,
        "omega_rabi": config.omega_rabi,
        "units": config.units,
    }


def config_from_dict(data: Dict[str, Any]) -> MeasurementConfig:
    return MeasurementConfig(**data)


@dataclass(frozen=True)
class TomographyDataset:
    """Sampled O(k) records for one operating point."""

    records: Tuple[TomographyRecord, ...]
    seed: Optional[int]
    source_config: MeasurementConfig

    def __post_init__(self) -> None:
        records = tuple(self.records)
        object.__setattr__(self, "records", records)
        for basis in BASES:
            ks = [record.k for record in records if record.basis == basis]
            if any(later <= earlier for earlier, later in zip(ks, ks[1:])):
                raise ValidationError(
                    f"k values must be strictly increasing within {basis}",
                    field="records",
                )

    def channel(self, basis: str) -> List[TomographyRecord]:
        return [record for record in self.records if record.basis == basis]

    @property
    def noiseless(self) -> bool:
        return all(record.noiseless for record in self.records)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config": config_to_dict(self.source_config),
            "seed": self.seed,
            "records": [record.to_dict() for record in self.records],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TomographyDataset":
        return cls(
            records=tuple(TomographyRecord.from_dict(item) for item in data["records"]),
            seed=data.get("seed"),
            source_config=config_from_dict(data["config"]),
        )


@dataclass(frozen=True)
class DensityEstimate:
    """Reconstructed density on a uniform grid (per unit delta_z)."""

    z_grid: np.ndarray
    density: np.ndarray
    residual: float
    method: str
    negative_excursion: bool = False

    def mass(self) -> float:
        return float(integrate.trapezoid(self.density, self.z_grid))


@dataclass(frozen=True)
class TransitionEstimate:
    """Transition factor inferred from a tomographic <z>."""

    factor: float
    std: float
    interval: Tuple[float, float]
    mean_z: float
    std_error: float
    gamma_big: float

    @property
    def direct(self) -> float:
        """exp(-Gamma^2 / 2) of the operating point the data came from."""
        return transition_factor(self.gamma_big)


def _check_k(k: float) -> None:
    if not math.isfinite(k) or abs(k) > K_MAX:
        raise KOutOfRange(f"|k| = {abs(k):.4g} exceeds {K_MAX} / delta_z", field="k")


class ReadoutChain:
    """
    The bichromatic readout U_z = exp(-i k z sigma_x / 2) for one motional basis.

    The phi_+ = pi/2, phi_- = pi coupling is diagonalized once; a pulse of length
    k / (eta Omega) then realizes wavenumber k, negative k running backwards.
    """

    def __init__(self, dimension: int, rabi: float, lamb_dicke: float):
        spec = fock.HamiltonianSpec.bichromatic(0.5 * math.pi, math.pi, rabi, lamb_dicke)
        self.rate = lamb_dicke * rabi
        self.propagator = fock.Propagator(fock.build_hamiltonian(spec, dimension))

    @classmethod
    def for_config(
        cls, dimension: int, config: Optional[MeasurementConfig] = None
    ) -> "ReadoutChain":
        if config is None:
            return cls(dimension, fock.DEFAULT_OMEGA_RABI, fock.DEFAULT_ETA)
        return cls(dimension, config.omega_rabi, config.eta)

    def measure(self, motional: np.ndarray, k: float, basis: str) -> float:
        """<sigma_z> after preparing ``basis`` and applying U_z(k)."""
        _check_k(k)
        if basis not in BASES:
            raise ValidationError(f"unknown basis {basis!r}", field="basis")
        state = fock.JointState.product(_PREPARATIONS[basis], motional)
        return self.propagator.apply(state, k / self.rate).sigma_z()


def readout_observable(
    motional: np.ndarray,
    k: float,
    basis: str,
    config: Optional[MeasurementConfig] = None,
) -> float:
    """
    Exact <O(k)> by running the readout pulse in the Fock engine.

    Args:
        motional: Normalized Fock amplitudes of the pointer
        k: Wavenumber in units of 1 / delta_z, |k| <= 6
        basis: "sigma_z" for <cos kz> or "sigma_y" for <sin kz>
        config: Supplies eta and Omega for the pulse (defaults otherwise)

    Raises:
        KOutOfRange: When |k| exceeds the usable readout range
    """
    _check_k(k)
    chain = ReadoutChain.for_config(np.asarray(motional).size, config)
    return chain.measure(motional, k, basis)


def readout_channels(
    motional: np.ndarray,
    k_grid: Sequence[float],
    config: Optional[MeasurementConfig] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Exact <cos kz> and <sin kz> on ``k_grid`` through one shared readout chain."""
    ks = [float(k) for k in k_grid]
    for k in ks:
        _check_k(k)
    chain = ReadoutChain.for_config(np.asarray(motional).size, config)
    cos_channel = np.array([chain.measure(motional, k, "sigma_z") for k in ks])
    sin_channel = np.array([chain.measure(motional, k, "sigma_y") for k in ks])
    return cos_channel, sin_channel


def _record_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


def sample_motional(
    motional: np.ndarray,
    config: MeasurementConfig,
    k_grid: Sequence[float],
    shots_per_point: Optional[int],
    seed: int,
) -> TomographyDataset:
    """Sample both channels of an arbitrary motional state."""
    _check_shots(shots_per_point)
    ks = sorted(float(k) for k in k_grid)
    cos_channel, sin_channel = readout_channels(motional, ks, config)

    records = []
    for basis, channel in (("sigma_z", cos_channel), ("sigma_y", sin_channel)):
        for k, value in zip(ks, channel):
            value = float(np.clip(value, -1.0, 1.0))
            records.append(TomographyRecord(k, basis, 0, 0, expectation=value))
    exact = TomographyDataset(tuple(records), seed, config)
    if shots_per_point is None:
        return exact
    return resample_dataset(exact, shots_per_point, seed)


def _check_shots(shots_per_point: Optional[int]) -> None:
    if shots_per_point is not None and shots_per_point < 1:
        raise ValidationError(
            f"shots_per_point must be >= 1, got {shots_per_point}", field="shots"
        )


def resample_dataset(
    exact: TomographyDataset, shots_per_point: int, seed: int
) -> TomographyDataset:
    """
    Draw finite-shot counts from a noiseless dataset.

    Record ``i`` uses the stream seeded by (seed, i), so resampling the exact
    channels gives the same counts as ``sample_dataset`` with that seed.

    Raises:
        ValidationError: If ``exact`` holds sampled records or shots < 1
    """
    _check_shots(shots_per_point)
    if not exact.noiseless:
        raise ValidationError("resampling needs noiseless records", field="records")
    records = []
    for index, record in enumerate(exact.records):
        probability = 0.5 * (1.0 + record.estimate)
        ups = int(_record_rng(seed, index).binomial(shots_per_point, probability))
        records.append(TomographyRecord(record.k, record.basis, shots_per_point, ups))
    return TomographyDataset(tuple(records), seed, exact.source_config)


def sample_dataset(
    config: MeasurementConfig,
    k_grid: Optional[Sequence[float]] = None,
    shots_per_point: Optional[int] = 10_000,
    seed: int = 2020,
    dimension: int = 128,
) -> TomographyDataset:
    """
    Simulate the readout of the post-selected pointer with finite shots.

    Record ``i`` draws from its own stream seeded by (seed, i), so the dataset
    does not depend on evaluation order.

    Args:
        config: Operating point of the measurement
        k_grid: Readout wavenumbers (defaults to 41 points on [0, 5])
        shots_per_point: Shots per (k, basis); None records exact means
        seed: Base seed stored with the dataset
        dimension: Fock truncation used for the protocol and readout

    Returns:
        TomographyDataset with a sigma_z and a sigma_y record per k
    """
    if k_grid is None:
        k_grid = default_k_grid()
    motional, _ = fock.run_protocol(config, dimension)
    dataset = sample_motional(motional, config, k_grid, shots_per_point, seed)
    logger.debug(
        "Sampled %d records (shots=%s, seed=%s)",
        len(dataset.records),
        shots_per_point,
        seed,
    )
    return dataset


def _folded_channel(
    records: Sequence[TomographyRecord], value_at_zero: float
) -> Tuple[np.ndarray, np.ndarray]:
    # keep k >= 0; the real-density symmetry fixes the k < 0 half
    pairs = sorted((r.k, r.estimate) for r in records if r.k >= 0.0)
    if not pairs or pairs[0][0] > 0.0:
        pairs.insert(0, (0.0, value_at_zero))
    ks, values = zip(*pairs)
    return np.array(ks), np.array(values)


def _design_matrix(records: Sequence[TomographyRecord], z_grid: np.ndarray) -> np.ndarray:
    dz = z_grid[1] - z_grid[0]
    rows = []
    for record in records:
        phase = record.k * z_grid
        rows.append((np.cos(phase) if record.basis == "sigma_z" else np.sin(phase)) * dz)
    return np.array(rows)


def _rms_misfit(dataset: TomographyDataset, z_grid: np.ndarray, density: np.ndarray) -> float:
    model = _design_matrix(dataset.records, z_grid) @ density
    observed = np.array([record.estimate for record in dataset.records])
    return float(np.sqrt(np.mean((model - observed) ** 2)))


def _check_z_grid(z_grid: np.ndarray) -> np.ndarray:
    z_grid = np.asarray(z_grid, dtype=float)
    if z_grid.ndim != 1 or z_grid.size < 3:
        raise ValidationError("z_grid needs at least 3 points", field="z_grid")
    steps = np.diff(z_grid)
    if np.any(steps <= 0.0) or not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
        raise ValidationError("z_grid must be uniform and increasing", field="z_grid")
    return z_grid


def reconstruct_fourier(
    dataset: TomographyDataset, z_grid: Optional[np.ndarray] = None
) -> DensityEstimate:
    """
    Invert the sampled characteristic function by trapezoid quadrature.

    G(z) = 2 * integral_0^K [c(k) cos kz + s(k) sin kz] dk and the density is
    G / 2 pi, renormalized to unit mass on ``z_grid``.

    Raises:
        InsufficientKRange: When either channel stops short of k = 2
    """
    z_grid = _check_z_grid(
        default_z_grid(dataset.source_config) if z_grid is None else z_grid
    )
    cos_k, cos_values = _folded_channel(dataset.channel("sigma_z"), 1.0)
    sin_k, sin_values = _folded_channel(dataset.channel("sigma_y"), 0.0)
    k_reach = min(cos_k[-1], sin_k[-1])
    if k_reach < MIN_FOURIER_K:
        raise InsufficientKRange(
            f"k range reaches {k_reach:.3g} / delta_z, need >= {MIN_FOURIER_K}",
            field="k_grid",
        )

    phase_cos = np.outer(z_grid, cos_k)
    phase_sin = np.outer(z_grid, sin_k)
    g_cos = integrate.trapezoid(cos_values * np.cos(phase_cos), cos_k, axis=1)
    g_sin = integrate.trapezoid(sin_values * np.sin(phase_sin), sin_k, axis=1)
    density = (g_cos + g_sin) / math.pi

    mass = integrate.trapezoid(density, z_grid)
    if mass <= 0.0:
        raise DegenerateState(f"Fourier density has non-positive mass {mass:.3e}")
    density = density / mass

    peak = float(np.max(density))
    negative = bool(np.min(density) < -NEGATIVE_EXCURSION * peak)
    if negative:
        logger.debug("Fourier density dips to %.3e (peak %.3e)", np.min(density), peak)
    return DensityEstimate(
        z_grid=z_grid,
        density=density,
        residual=_rms_misfit(dataset, z_grid, density),
        method="fourier",
        negative_excursion=negative,
    )


def _second_difference(points: int) -> np.ndarray:
    return np.diff(np.eye(points), n=2, axis=0)


def usable_records(records: Sequence[TomographyRecord]) -> List[TomographyRecord]:
    """
    Records whose signal can clear the shot-noise floor.

    Every pointer state here is a superposition of displaced ground states, so
    its characteristic function is bounded by exp(-k^2 / 2). A sampled record is
    kept while that envelope stays above exp(-NOISE_FLOOR_MARGIN / 2) times the
    shot noise 1 / sqrt(shots), that is k^2 <= ln(shots) + NOISE_FLOOR_MARGIN.
    Noiseless records are always kept. Records at k = 0 are dropped: the cosine
    one is the normalization, imposed exactly, and the sine one is zero.
    """
    kept = []
    for record in records:
        if record.k == 0.0:
            continue
        if record.noiseless or record.k**2 <= math.log(record.shots) + NOISE_FLOOR_MARGIN:
            kept.append(record)
    return kept


def _record_weights(records: Sequence[TomographyRecord]) -> np.ndarray:
    values = []
    for r in records:
        if r.noiseless:
            values.append(1.0 / (1.0 - r.estimate**2 + WEIGHT_EPSILON))
        else:
            # a record cannot resolve a variance below one count in its shots
            floor = max(WEIGHT_EPSILON, 1.0 / r.shots)
            values.append(r.shots / (1.0 - r.estimate**2 + floor))
    weights = np.array(values)
    return weights / np.median(weights)


def smoothing_strength(corner: float, dz: float, dk: float) -> float:
    """
    Second-difference weight that halves a density mode at wavenumber ``corner``.

    Against median-normalized record weights on a k grid of spacing ``dk``, the
    penalty on a mode cos(kz) relative to its data term is
    strength * k^4 * dz^3 * dk / pi, so the fit responds as 1 / (1 + (k / corner)^4).
    """
    return math.pi / (corner**4 * dz**3 * dk)


def _kkt_residual(matrix: np.ndarray, rhs: np.ndarray, solution: np.ndarray) -> float:
    gradient = matrix.T @ (matrix @ solution - rhs)
    active = solution <= 0.0
    violation = np.where(active, np.maximum(-gradient, 0.0), np.abs(gradient))
    scale = np.linalg.norm(matrix) * np.linalg.norm(rhs)
    return float(np.max(violation) / scale) if scale > 0.0 else 0.0


def _unit_mass_nnls(
    matrix: np.ndarray, rhs: np.ndarray, quadrature: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Minimize |matrix @ x - rhs| over x >= 0 subject to quadrature @ x = 1.

    With matrix^T c = quadrature, the multiplier term mu * (quadrature @ x)
    folds into the right-hand side, so each trial mu is a plain NNLS problem.
    The mass of its solution falls monotonically with mu and brentq finds the
    root.

    Returns:
        Tuple of (solution, shifted right-hand side it is optimal for)

    Raises:
        SolverFailure: If an NNLS solve or the multiplier search fails
    """
    direction, _, _, _ = linalg.lstsq(matrix.T, quadrature)
    curvature = float(direction @ direction)
    if not curvature > 0.0:
        raise SolverFailure("mass constraint lies outside the row space of the fit")

    def solve(mu: float) -> np.ndarray:
        try:
            solution, _ = optimize.nnls(
                matrix, rhs - mu * direction, maxiter=ITERATION_BUDGET
            )
        except RuntimeError as e:
            raise SolverFailure(f"nonnegative least squares did not converge: {e}") from e
        return solution

    def excess(mu: float) -> float:
        return float(quadrature @ solve(mu)) - 1.0

    mu = 0.0
    start = excess(mu)
    if start != 0.0:
        # unconstrained estimate of the multiplier, widened until the mass crosses 1
        step = abs(start) / curvature
        sign = math.copysign(1.0, start)
        low, high = 0.0, sign * step
        for _ in range(BRACKET_STEPS):
            if excess(high) * start <= 0.0:
                break
            low, step = high, 2.0 * step
            high = sign * step
        else:
            raise SolverFailure("could not bracket the mass multiplier")
        try:
            mu = optimize.brentq(
                excess,
                min(low, high),
                max(low, high),
                xtol=1e-14 * step,
                maxiter=ITERATION_BUDGET,
            )
        except (RuntimeError, ValueError) as e:
            raise SolverFailure(f"mass multiplier search failed: {e}") from e
    logger.debug("Mass multiplier %.6e (unconstrained mass %.6f)", mu, start + 1.0)
    shifted = rhs - mu * direction
    return solve(mu), shifted


def reconstruct_least_squares(
    dataset: TomographyDataset,
    z_grid: Optional[np.ndarray] = None,
    corner: Optional[float] = None,
) -> DensityEstimate:
    """
    Constrained least-squares density: rho >= 0 with unit mass.

    Minimizes sum_r w_r (model_r(rho) - g_r)^2 + strength * |D2 rho|^2 over
    rho >= 0 with the trapezoid mass of rho held at exactly 1. Weights are
    w_r = shots_r / (1 - g_r^2 + eps), normalized by their median. Only the
    records from ``usable_records`` enter the sum; the second-difference
    penalty settles the modes they leave open and is scaled by
    ``smoothing_strength`` so that it only bites above ``corner``.

    Args:
        dataset: Sampled records
        z_grid: Uniform grid spanning at least +/-(Gamma + 4); defaults to an odd
            number of points no larger than the record count
        corner: Wavenumber at which the smoothing halves a mode; defaults to
            twice the largest usable |k|

    Returns:
        DensityEstimate with method "least_squares"

    Raises:
        RankDeficient: If the grid has more points than there are records, or
            fewer than two wavenumbers clear the noise floor
        SolverFailure: If the solver does not converge or fails the KKT check
    """
    records = dataset.records
    if z_grid is None:
        points = min(201, len(records))
        z_grid = default_z_grid(dataset.source_config, points - (1 - points % 2))
    z_grid = _check_z_grid(z_grid)
    if z_grid.size > len(records):
        raise RankDeficient(
            f"{z_grid.size} grid points but only {len(records)} records", field="z_grid"
        )
    reach = dataset.source_config.gamma_big + 4.0
    if z_grid[0] > -reach + 1e-12 * reach or z_grid[-1] < reach - 1e-12 * reach:
        raise ValidationError(
            f"z_grid must span +/-{reach:.4g} delta_z", field="z_grid"
        )

    usable = usable_records(records)
    ks = np.unique(np.abs([record.k for record in usable]))
    if ks.size < 2:
        raise RankDeficient(
            f"only {ks.size} wavenumbers clear the shot-noise floor", field="k_grid"
        )
    if corner is None:
        corner = CORNER_FACTOR * float(ks[-1])
    if not corner > 0.0:
        raise ValidationError(f"corner must be positive, got {corner}", field="corner")

    dz = z_grid[1] - z_grid[0]
    strength = smoothing_strength(corner, dz, float(np.median(np.diff(ks))))
    root_weights = np.sqrt(_record_weights(usable))
    observed = np.array([record.estimate for record in usable])
    matrix = np.vstack(
        [
            root_weights[:, None] * _design_matrix(usable, z_grid),
            math.sqrt(strength) * _second_difference(z_grid.size),
        ]
    )
    rhs = np.concatenate([root_weights * observed, np.zeros(z_grid.size - 2)])
    quadrature = np.full(z_grid.size, dz)
    quadrature[[0, -1]] *= 0.5

    density, shifted = _unit_mass_nnls(matrix, rhs, quadrature)
    kkt = _kkt_residual(matrix, shifted, density)
    logger.debug(
        "NNLS on %d of %d records, corner %.3g / delta_z, relative KKT residual %.3e",
        len(usable),
        len(records),
        corner,
        kkt,
    )
    if kkt > KKT_TOLERANCE:
        raise SolverFailure(f"KKT residual {kkt:.3e} above {KKT_TOLERANCE}")

    mass = float(quadrature @ density)
    if mass <= 0.0:
        raise SolverFailure("least-squares density has zero mass")
    # brentq leaves the mass within rounding of 1
    density = density / mass
    return DensityEstimate(
        z_grid=z_grid,
        density=density,
        residual=_rms_misfit(dataset, z_grid, density),
        method="least_squares",
    )


def reference_density(config: MeasurementConfig, z_grid: np.ndarray) -> np.ndarray:
    """Analytic cat-state density on a grid in delta_z units (per unit delta_z)."""
    cat = make_cat_state(config)
    z_grid = np.asarray(z_grid, dtype=float)
    return np.asarray(probability_density(cat, z_grid * config.delta_z)) * config.delta_z


def l1_distance(estimate: DensityEstimate, reference: np.ndarray) -> float:
    """Trapezoid integral of |estimate - reference| over the estimate's grid."""
    return float(
        integrate.trapezoid(np.abs(estimate.density - np.asarray(reference)), estimate.z_grid)
    )


def _odd_design(ks: np.ndarray, terms: int) -> np.ndarray:
    return np.column_stack([ks ** (2 * power + 1) for power in range(terms)])


def _weighted_fit(
    design: np.ndarray, values: np.ndarray, weights: np.ndarray
) -> Tuple[np.ndarray, float]:
    root = np.sqrt(weights)
    coefficients, _, _, _ = linalg.lstsq(root[:, None] * design, root * values)
    residual = root * (design @ coefficients - values)
    return coefficients, float(residual @ residual)


def fit_slope(
    dataset: TomographyDataset,
    odd_terms: int = 2,
    linearity_alpha: Optional[float] = 0.01,
) -> Tuple[float, float]:
    """
    Slope at k = 0 of the sigma_y channel and its standard error.

    An odd polynomial with ``odd_terms`` terms (k, k^3, ...) is fitted with
    inverse-variance weights. For sampled data an F-test on adding the next odd
    term guards the small-k regime.

    Raises:
        LinearRegimeViolated: If the extra term is significant at ``linearity_alpha``
    """
    records = dataset.channel("sigma_y")
    ks = np.array([record.k for record in records])
    if ks.size <= odd_terms + 1:
        raise ValidationError(
            f"need more than {odd_terms + 1} sigma_y records for the slope fit",
            field="k_fit_grid",
        )
    if np.max(np.abs(ks)) > LINEAR_K_LIMIT + 1e-12:
        raise KOutOfRange(
            f"slope fit needs |k| <= {LINEAR_K_LIMIT} / delta_z", field="k_fit_grid"
        )
    values = np.array([record.estimate for record in records])
    noiseless = dataset.noiseless
    weights = (
        np.ones_like(ks) if noiseless else 1.0 / np.array([r.variance for r in records])
    )

    design = _odd_design(ks, odd_terms)
    coefficients, rss = _weighted_fit(design, values, weights)
    if noiseless:
        return float(coefficients[0]), 0.0

    covariance = linalg.inv(design.T @ (weights[:, None] * design))
    std_error = math.sqrt(covariance[0, 0])

    if linearity_alpha is not None:
        _, rss_extended = _weighted_fit(_odd_design(ks, odd_terms + 1), values, weights)
        dof = ks.size - odd_terms - 1
        statistic = (rss - rss_extended) / (rss_extended / dof) if rss_extended > 0 else 0.0
        p_value = float(stats.f.sf(statistic, 1, dof))
        logger.debug("Linearity F=%.3f p=%.3g", statistic, p_value)
        if p_value < linearity_alpha:
            raise LinearRegimeViolated(
                f"k^{2 * odd_terms + 1} term significant (p={p_value:.3g}); "
                "narrow the k range",
                field="k_fit_grid",
            )
    return float(coefficients[0]), std_error


def extract_mean_z(
    config: MeasurementConfig,
    k_fit_grid: Optional[Sequence[float]] = None,
    shots_per_point: Optional[int] = 10_000,
    seed: int = 2020,
    dimension: int = 128,
    odd_terms: int = 2,
    linearity_alpha: Optional[float] = 0.01,
    motional: Optional[np.ndarray] = None,
) -> Tuple[float, float]:
    """
    Estimate <z> from the small-k slope of <sin kz>.

    Args:
        config: Operating point
        k_fit_grid: Symmetric wavenumbers with |k| <= 0.3 (default 21 points)
        shots_per_point: Shots per k; None gives exact channel values
        seed: Base seed
        dimension: Fock truncation
        odd_terms: Number of odd polynomial terms in the fit
        linearity_alpha: Significance of the linearity test, None to skip it
        motional: Post-selected pointer already produced by ``fock.run_protocol``
            for ``config``; the protocol is run when omitted

    Returns:
        Tuple of (mean_z, std_error) in length units
    """
    if k_fit_grid is None:
        k_fit_grid = default_fit_grid()
    ks = np.sort(np.asarray(k_fit_grid, dtype=float))
    if not np.allclose(ks, -ks[::-1], rtol=0.0, atol=1e-12):
        raise ValidationError("k_fit_grid must be symmetric about 0", field="k_fit_grid")

    if motional is None:
        motional, _ = fock.run_protocol(config, dimension)
    chain = ReadoutChain.for_config(motional.size, config)
    records = []
    for k in ks:
        value = float(np.clip(chain.measure(motional, float(k), "sigma_y"), -1.0, 1.0))
        records.append(TomographyRecord(float(k), "sigma_y", 0, 0, expectation=value))
    dataset = TomographyDataset(tuple(records), seed, config)
    if shots_per_point is not None:
        dataset = resample_dataset(dataset, shots_per_point, seed)
    slope, std_error = fit_slope(dataset, odd_terms, linearity_alpha)
    return slope * config.delta_z, std_error * config.delta_z


def infer_transition_factor(
    config: MeasurementConfig,
    k_fit_grid: Optional[Sequence[float]] = None,
    shots_per_point: Optional[int] = 10_000,
    seed: int = 2020,
    dimension: int = 128,
    z_score: float = 1.0,
    linearity_alpha: Optional[float] = 0.01,
) -> TransitionEstimate:
    """
    Infer exp(-Gamma^2 / 2) from a tomographic <z>.

    The standard deviation is propagated linearly; ``interval`` maps
    mean_z +/- z_score * std_error through the (monotone) inversion and is
    unbounded when that range includes a zero shift.

    Raises:
        NonInvertible: At theta = pi/4 or for a zero shift
    """
    mean_z, std_error = extract_mean_z(
        config,
        k_fit_grid,
        shots_per_point,
        seed,
        dimension,
        linearity_alpha=linearity_alpha,
    )
    gamma0_t = config.gamma0_t
    factor = invert_transition_factor(mean_z, config.theta, gamma0_t)
    offset = gamma0_t * math.sin(2.0 * config.theta)
    cos_2theta = math.cos(2.0 * config.theta)
    std = abs(offset / (mean_z * mean_z * cos_2theta)) * std_error

    low_shift = mean_z - z_score * std_error
    high_shift = mean_z + z_score * std_error
    if std_error == 0.0:
        interval = (factor, factor)
    elif low_shift <= 0.0 <= high_shift:
        interval = (-math.inf, math.inf)
    else:
        ends = sorted(
            invert_transition_factor(shift, config.theta, gamma0_t)
            for shift in (low_shift, high_shift)
        )
        interval = (ends[0], ends[1])
    return TransitionEstimate(
        factor=factor,
        std=std,
        interval=interval,
        mean_z=mean_z,
        std_error=std_error,
        gamma_big=config.gamma_big,
    )
