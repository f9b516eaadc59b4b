"""
Sweep service for parameter scans, engine cross-checks and phase-space panels.

A SweepSpec describes which (theta, Gamma) points to evaluate and with which
engine. Points are evaluated independently (optionally on a thread pool) and
merged back in sweep-axis order; failures at a point land in the row's error
column instead of aborting the sweep.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .. import __version__
from ..core import analytic, fock, tomography
from ..core.analytic import MeasurementConfig, PhaseSpaceGrid
from ..core.exceptions import NonInvertible, PoleError, ValidationError, WeakStrongError
from ..core.tomography import DensityEstimate, TomographyDataset
from ..utils.config import config
from ..utils.file_utils import config_hash, utc_timestamp

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
SWEEP_COLUMNS = (
    "theta",
    "gamma_big",
    "engine",
    "shift_over_gamma0t",
    "weak_value",
    "expectation_value",
    "transition_factor_inferred",
    "transition_factor_std",
    "success_probability",
    "std_error",
    "delta_shift",
    "error",
)
SWEEP_KINDS = ("theta_sweep", "gamma_sweep", "grid", "cat_panels")
ENGINES = ("analytic", "fock", "both")
# other accepted spellings of a sweep kind
KIND_ALIASES = {"figure3_panels": "cat_panels"}
FACTOR_BAND = (-0.05, 1.05)

# (Gamma, theta) of the eight reconstructed cat-state panels
CAT_PANELS: Tuple[Tuple[float, float], ...] = (
    (0.04, 0.02),
    (0.1, math.pi / 4),
    (0.1, 1.5),
    (1.0, 0.02),
    (1.0, 1.5),
    (2.9, 0.02),
    (2.9, math.pi / 4),
    (2.9, 1.5),
)
DISPLACEMENT_CURVES = (0.04, 0.1, 0.5, 1.0, 2.0, 2.9)
TRANSITION_THETA = 0.5

CHECK_THETAS = (0.02, 0.3, math.pi / 4, 1.0, 1.5)
CHECK_GAMMAS = (0.04, 0.5, 1.0, 2.0, 2.9)
QUICK_CHECK_THETAS = (0.02, math.pi / 4, 1.5)
QUICK_CHECK_GAMMAS = (0.04, 1.0, 2.9)


def transition_gammas(points: int = 30) -> Tuple[float, ...]:
    """Gamma values from the weak (0.02) to the strong (3.0) coupling regime."""
    return tuple(float(value) for value in np.linspace(0.02, 3.0, points))


def displacement_thetas(points: int = 60) -> Tuple[float, ...]:
    return tuple(float(value) for value in np.linspace(0.02, 1.55, points))


def as_float(value: Any, name: str) -> float:
    """A run-config value as a float, or ValidationError naming ``name``."""
    if not isinstance(value, bool):
        try:
            return float(value)
        except (TypeError, ValueError):
            pass
    raise ValidationError(f"{name} must be a number, got {value!r}", field=name)


def as_int(value: Any, name: str) -> int:
    """A run-config value as a whole number, or ValidationError naming ``name``."""
    if not isinstance(value, bool):
        try:
            number = int(value)
        except (TypeError, ValueError, OverflowError):
            pass
        else:
            if not isinstance(value, float) or value == number:
                return number
    raise ValidationError(f"{name} must be a whole number, got {value!r}", field=name)


def as_floats(values: Any, name: str) -> Tuple[float, ...]:
    """A run-config list of numbers as a tuple of floats."""
    if isinstance(values, (str, bytes, dict)) or not hasattr(values, "__iter__"):
        raise ValidationError(f"{name} must be a list of numbers", field=name)
    return tuple(as_float(value, name) for value in values)


def _as_panels(panels: Any) -> Tuple[Tuple[float, float], ...]:
    if isinstance(panels, (str, bytes, dict)) or not hasattr(panels, "__iter__"):
        raise ValidationError("panels must be a list of [Gamma, theta] pairs", field="panels")
    pairs = []
    for panel in panels:
        values = as_floats(panel, "panels")
        if len(values) != 2:
            raise ValidationError(
                f"panel {panel!r} is not a [Gamma, theta] pair", field="panels"
            )
        pairs.append((values[0], values[1]))
    return tuple(pairs)


@dataclass(frozen=True)
class TomographySettings:
    """Shot budget and wavenumber grids for tomographic readout inside a sweep."""

    shots: Optional[int] = 10_000
    seed: int = 2020
    k_grid: Optional[Tuple[float, ...]] = None
    k_fit_grid: Optional[Tuple[float, ...]] = None
    linearity_alpha: Optional[float] = 0.01

    def __post_init__(self) -> None:
        if self.shots is not None:
            object.__setattr__(self, "shots", as_int(self.shots, "shots"))
            if self.shots < 1:
                raise ValidationError(f"shots must be >= 1, got {self.shots}", field="shots")
        object.__setattr__(self, "seed", as_int(self.seed, "seed"))
        if self.linearity_alpha is not None:
            alpha = as_float(self.linearity_alpha, "linearity_alpha")
            object.__setattr__(self, "linearity_alpha", alpha)
        for name in ("k_grid", "k_fit_grid"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, as_floats(value, name))

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        for name in ("k_grid", "k_fit_grid"):
            if data[name] is not None:
                data[name] = list(data[name])
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TomographySettings":
        return cls(
            shots=data.get("shots", config.DEFAULT_SHOTS),
            seed=data.get("seed", config.DEFAULT_SEED),
            k_grid=data.get("k_grid"),
            k_fit_grid=data.get("k_fit_grid"),
            linearity_alpha=data.get("linearity_alpha", 0.01),
        )


def _check_point(theta: float, gamma_big: float) -> None:
    if not (math.isfinite(theta) and 0.0 <= theta <= math.pi / 2):
        raise ValidationError(f"theta {theta!r} outside [0, pi/2]", field="theta")
    if not (math.isfinite(gamma_big) and gamma_big >= 0.0):
        raise ValidationError(f"gamma {gamma_big!r} must be >= 0", field="gamma")


@dataclass(frozen=True)
class SweepSpec:
    """
    What to evaluate, with which engine, and where to put it.

    For ``theta_sweep`` every Gamma in ``gamma_values`` is one curve over
    ``theta_values``; ``gamma_sweep`` is the converse; ``grid`` is the full
    product; ``cat_panels`` uses ``panels`` as (Gamma, theta) pairs.
    """

    kind: str
    theta_values: Tuple[float, ...] = ()
    gamma_values: Tuple[float, ...] = ()
    engine: str = "analytic"
    tomography: Optional[TomographySettings] = None
    output_path: Optional[str] = None
    tolerance: Optional[float] = None
    units: str = "natural"
    truncation_dim: int = 128
    panels: Tuple[Tuple[float, float], ...] = field(default=CAT_PANELS)

    def __post_init__(self) -> None:
        object.__setattr__(self, "theta_values", as_floats(self.theta_values, "theta_values"))
        object.__setattr__(self, "gamma_values", as_floats(self.gamma_values, "gamma_values"))
        object.__setattr__(self, "panels", _as_panels(self.panels))
        object.__setattr__(
            self, "truncation_dim", as_int(self.truncation_dim, "truncation_dim")
        )
        if self.tolerance is not None:
            object.__setattr__(self, "tolerance", as_float(self.tolerance, "tolerance"))
        if isinstance(self.kind, str) and self.kind in KIND_ALIASES:
            object.__setattr__(self, "kind", KIND_ALIASES[self.kind])
        if self.kind not in SWEEP_KINDS:
            raise ValidationError(f"unknown sweep kind {self.kind!r}", field="kind")
        if self.engine not in ENGINES:
            raise ValidationError(f"unknown engine {self.engine!r}", field="engine")
        if self.units not in ("natural", "physical"):
            raise ValidationError(f"unknown units {self.units!r}", field="units")
        if self.engine == "both" and self.tolerance is None:
            raise ValidationError(
                "engine 'both' needs a tolerance for the pairwise comparison",
                field="tolerance",
            )
        if self.tolerance is not None and not self.tolerance > 0.0:
            raise ValidationError("tolerance must be positive", field="tolerance")
        if self.truncation_dim < fock.MIN_DIMENSION:
            raise ValidationError(
                f"truncation_dim must be >= {fock.MIN_DIMENSION}", field="truncation_dim"
            )
        if self.kind == "cat_panels":
            if not self.panels:
                raise ValidationError("cat_panels needs at least one panel", field="panels")
        elif not self.theta_values or not self.gamma_values:
            raise ValidationError(
                "theta_values and gamma_values must be non-empty",
                field="theta_values" if not self.theta_values else "gamma_values",
            )
        for theta, gamma_big in self.points():
            _check_point(theta, gamma_big)

    @classmethod
    def displacement_curves(cls, engine: str = "analytic", **kwargs: Any) -> "SweepSpec":
        """Pointer displacement versus theta for the default set of Gamma curves."""
        return cls(
            kind="theta_sweep",
            theta_values=displacement_thetas(),
            gamma_values=DISPLACEMENT_CURVES,
            engine=engine,
            **kwargs,
        )

    @classmethod
    def transition_curve(cls, engine: str = "analytic", **kwargs: Any) -> "SweepSpec":
        """Transition factor versus Gamma at theta = 0.5."""
        return cls(
            kind="gamma_sweep",
            theta_values=(TRANSITION_THETA,),
            gamma_values=transition_gammas(),
            engine=engine,
            **kwargs,
        )

    def points(self) -> List[Tuple[float, float]]:
        """(theta, Gamma) pairs in sweep-axis order."""
        if self.kind == "theta_sweep":
            return [(t, g) for g in self.gamma_values for t in sorted(self.theta_values)]
        if self.kind == "gamma_sweep":
            return [(t, g) for t in self.theta_values for g in sorted(self.gamma_values)]
        if self.kind == "grid":
            return [
                (t, g) for t in sorted(self.theta_values) for g in sorted(self.gamma_values)
            ]
        return [(t, g) for g, t in self.panels]

    def make_config(self, theta: float, gamma_big: float) -> MeasurementConfig:
        if self.units == "physical":
            return MeasurementConfig.physical(theta, gamma_big)
        return MeasurementConfig.natural(theta, gamma_big)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "theta_values": list(self.theta_values),
            "gamma_values": list(self.gamma_values),
            "engine": self.engine,
            "tomography": self.tomography.to_dict() if self.tomography else None,
            "output_path": self.output_path,
            "tolerance": self.tolerance,
            "units": self.units,
            "truncation_dim": self.truncation_dim,
            "panels": [list(panel) for panel in self.panels],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SweepSpec":
        """
        Build a spec from a parsed JSON run config.

        Raises:
            ValidationError: On unknown keys or invalid values
        """
        known = {
            "kind",
            "theta_values",
            "gamma_values",
            "engine",
            "tomography",
            "output_path",
            "tolerance",
            "units",
            "truncation_dim",
            "panels",
        }
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValidationError(
                f"unknown config keys: {', '.join(unknown)}", field=unknown[0]
            )
        if "kind" not in data:
            raise ValidationError("config needs a 'kind'", field="kind")
        tomography_block = data.get("tomography")
        if tomography_block is not None and not isinstance(tomography_block, dict):
            raise ValidationError("tomography must be an object", field="tomography")
        return cls(
            kind=data["kind"],
            theta_values=data.get("theta_values", ()),
            gamma_values=data.get("gamma_values", ()),
            engine=data.get("engine", "analytic"),
            tomography=(
                TomographySettings.from_dict(tomography_block)
                if tomography_block is not None
                else None
            ),
            output_path=data.get("output_path"),
            tolerance=data.get("tolerance"),
            units=data.get("units", "natural"),
            truncation_dim=data.get("truncation_dim", config.TRUNCATION_DIM),
            panels=data.get("panels", CAT_PANELS),
        )

    def digest(self) -> str:
        return config_hash(self.to_dict())


@dataclass(frozen=True)
class SweepRow:
    """One evaluated (theta, Gamma, engine) point; NaN marks an absent value."""

    theta: float
    gamma_big: float
    engine: str
    shift_over_gamma0t: float = math.nan
    weak_value: float = math.nan
    expectation_value: float = math.nan
    transition_factor_inferred: float = math.nan
    transition_factor_std: float = math.nan
    success_probability: float = math.nan
    std_error: float = math.nan
    delta_shift: float = math.nan
    error: str = ""

    def values(self) -> Tuple[Any, ...]:
        return tuple(getattr(self, column) for column in SWEEP_COLUMNS)

    def to_dict(self) -> Dict[str, Any]:
        return {
            column: (None if isinstance(value, float) and math.isnan(value) else value)
            for column, value in zip(SWEEP_COLUMNS, self.values())
        }


@dataclass(frozen=True)
class SweepResult:
    rows: Tuple[SweepRow, ...]
    metadata: Dict[str, Any]

    def table(self) -> List[Tuple[Any, ...]]:
        return [row.values() for row in self.rows]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "metadata": dict(self.metadata),
            "columns": list(SWEEP_COLUMNS),
            "rows": [row.to_dict() for row in self.rows],
        }

    def check_invariants(self, tolerance: Optional[float] = None) -> List[str]:
        """
        List violated result invariants (empty when the table is sound).

        Checks the transition-factor band, the pairwise engine deltas against
        ``tolerance`` and that rows follow the sweep's point order.
        """
        problems = []
        low, high = FACTOR_BAND
        for row in self.rows:
            factor = row.transition_factor_inferred
            if not math.isnan(factor) and not low <= factor <= high:
                problems.append(
                    f"theta={row.theta:.6g}, Gamma={row.gamma_big:.6g} ({row.engine}): "
                    f"inferred factor {factor:.4g} outside [{low}, {high}]"
                )
            if (
                tolerance is not None
                and not math.isnan(row.delta_shift)
                and abs(row.delta_shift) > tolerance
            ):
                problems.append(
                    f"theta={row.theta:.6g}, Gamma={row.gamma_big:.6g}: engines differ "
                    f"by {row.delta_shift:.3e}"
                )
        order = self.metadata.get("points")
        if order is not None:
            per_point = 2 if self.metadata.get("engine") == "both" else 1
            expected = [list(point) for point in order for _ in range(per_point)]
            if [[row.theta, row.gamma_big] for row in self.rows] != expected:
                problems.append("rows are not in sweep-axis order")
        return problems


@dataclass
class PanelResult:
    """Analytic and reconstructed phase-space data for one (Gamma, theta) panel."""

    gamma_big: float
    theta: float
    z_grid: np.ndarray
    analytic_density: np.ndarray
    wigner_grid: PhaseSpaceGrid
    wigner: np.ndarray
    dataset: Optional[TomographyDataset] = None
    reconstructions: Dict[str, DensityEstimate] = field(default_factory=dict)
    l1_errors: Dict[str, float] = field(default_factory=dict)

    @property
    def label(self) -> str:
        return f"G{self.gamma_big:g}-t{self.theta:.4f}"


@dataclass(frozen=True)
class CheckReport:
    """Outcome of the analytic versus Fock engine comparison."""

    max_deviation: float
    worst: Tuple[float, float]
    min_fidelity: float
    deviations: Tuple[Tuple[float, float, float], ...]

    def passed(self, tolerance: float) -> bool:
        return self.max_deviation < tolerance


def _row_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def _safe(function: Any, *args: Any) -> float:
    try:
        return function(*args)
    except (PoleError, NonInvertible):
        return math.nan


class SweepService:
    """Service for evaluating sweeps and panels."""

    def __init__(self, max_workers: int = 1, truncation_dim: Optional[int] = None):
        """
        Initialize the sweep service.

        Args:
            max_workers: Thread pool size for independent points
            truncation_dim: Fock basis size override for every spec
        """
        self.max_workers = max(1, max_workers)
        self.truncation_dim = truncation_dim

    def _dimension(self, spec: SweepSpec) -> int:
        return self.truncation_dim or spec.truncation_dim

    def _evaluate_engine(
        self, spec: SweepSpec, engine: str, config_point: MeasurementConfig, index: int
    ) -> SweepRow:
        theta, gamma_big = config_point.theta, config_point.gamma_big
        base = SweepRow(
            theta=theta,
            gamma_big=gamma_big,
            engine=engine,
            weak_value=_safe(analytic.weak_value, theta),
            expectation_value=analytic.expectation_value(theta),
        )
        try:
            success = analytic.success_probability(config_point)
            std_error = math.nan
            if engine == "analytic":
                relative = analytic.relative_shift(config_point)
            else:
                if gamma_big == 0.0:
                    raise ValidationError("shift / gamma0 t is undefined at Gamma = 0")
                dimension = self._dimension(spec)
                motional, success = fock.run_protocol(config_point, dimension)
                if spec.tomography is not None:
                    settings = spec.tomography
                    shift, std_error = tomography.extract_mean_z(
                        config_point,
                        settings.k_fit_grid,
                        settings.shots,
                        _row_seed(settings.seed, index),
                        dimension,
                        linearity_alpha=settings.linearity_alpha,
                        motional=motional,
                    )
                else:
                    shift = fock.expectation_z(motional, config_point.delta_z)
                relative = shift / config_point.gamma0_t

            factor = factor_std = math.nan
            if gamma_big > 0.0:
                shift = relative * config_point.gamma0_t
                factor = _safe(
                    analytic.invert_transition_factor, shift, theta, config_point.gamma0_t
                )
                if not math.isnan(factor) and not math.isnan(std_error):
                    offset = config_point.gamma0_t * math.sin(2.0 * theta)
                    factor_std = abs(
                        offset / (shift * shift * math.cos(2.0 * theta))
                    ) * std_error
            return replace(
                base,
                shift_over_gamma0t=relative,
                transition_factor_inferred=factor,
                transition_factor_std=factor_std,
                success_probability=success,
                std_error=(
                    std_error / config_point.gamma0_t
                    if not math.isnan(std_error)
                    else math.nan
                ),
            )
        except WeakStrongError as e:
            logger.warning(
                "⚠️ Point theta=%.6g, Gamma=%.6g (%s) failed: %s",
                theta,
                gamma_big,
                engine,
                e,
            )
            return replace(base, error=f"{type(e).__name__}: {e}")

    def _evaluate_point(
        self, spec: SweepSpec, index: int, point: Tuple[float, float]
    ) -> List[SweepRow]:
        theta, gamma_big = point
        config_point = spec.make_config(theta, gamma_big)
        if spec.engine != "both":
            return [self._evaluate_engine(spec, spec.engine, config_point, index)]
        analytic_row = self._evaluate_engine(spec, "analytic", config_point, index)
        fock_row = self._evaluate_engine(spec, "fock", config_point, index)
        delta = fock_row.shift_over_gamma0t - analytic_row.shift_over_gamma0t
        if not math.isnan(delta) and abs(delta) > spec.tolerance:
            logger.warning(
                "⚠️ Engines differ by %.3e at theta=%.6g, Gamma=%.6g",
                delta,
                theta,
                gamma_big,
            )
        return [replace(analytic_row, delta_shift=delta), replace(fock_row, delta_shift=delta)]

    def run(self, spec: SweepSpec) -> SweepResult:
        """
        Evaluate every point of a sweep.

        Args:
            spec: Validated sweep description

        Returns:
            SweepResult with rows in sweep-axis order and run metadata
        """
        points = spec.points()
        logger.info(
            "🔬 Running %s over %d points (%s engine)", spec.kind, len(points), spec.engine
        )
        with ThreadPoolExecutor(max_workers=self.max_workers) as pool:
            batches = list(
                pool.map(
                    lambda item: self._evaluate_point(spec, item[0], item[1]),
                    enumerate(points),
                )
            )
        rows = tuple(row for batch in batches for row in batch)
        failures = sum(1 for row in rows if row.error)
        if failures:
            logger.warning("⚠️ %d of %d rows carry errors", failures, len(rows))
        else:
            logger.info("✅ Sweep complete: %d rows", len(rows))
        metadata = {
            "schema_version": SCHEMA_VERSION,
            "config_hash": spec.digest(),
            "timestamp": utc_timestamp(),
            "version": __version__,
            "kind": spec.kind,
            "engine": spec.engine,
            "units": spec.units,
            "points": [list(point) for point in points],
        }
        return SweepResult(rows, metadata)

    def panel(
        self,
        config_point: MeasurementConfig,
        settings: Optional[TomographySettings] = None,
        dimension: int = 128,
        seed_index: int = 0,
    ) -> PanelResult:
        """
        Analytic density and Wigner grid of one panel, plus reconstructions.

        Raises:
            WeakStrongError: From the underlying analytic, Fock or tomography step
        """
        z_grid = tomography.default_z_grid(config_point)
        grid = PhaseSpaceGrid.for_config(config_point)
        result = PanelResult(
            gamma_big=config_point.gamma_big,
            theta=config_point.theta,
            z_grid=z_grid,
            analytic_density=tomography.reference_density(config_point, z_grid),
            wigner_grid=grid,
            wigner=analytic.wigner(config_point, grid),
        )
        if settings is None:
            return result

        dataset = tomography.sample_dataset(
            config_point,
            settings.k_grid,
            settings.shots,
            _row_seed(settings.seed, seed_index),
            dimension,
        )
        result.dataset = dataset
        for estimate in (
            tomography.reconstruct_fourier(dataset, z_grid),
            tomography.reconstruct_least_squares(dataset),
        ):
            reference = tomography.reference_density(config_point, estimate.z_grid)
            result.reconstructions[estimate.method] = estimate
            result.l1_errors[estimate.method] = tomography.l1_distance(estimate, reference)
        return result

    def panels(self, spec: SweepSpec) -> List[PanelResult]:
        """Evaluate every panel of a spec in order."""
        results = []
        for index, (theta, gamma_big) in enumerate(spec.points()):
            results.append(
                self.panel(
                    spec.make_config(theta, gamma_big),
                    spec.tomography,
                    self._dimension(spec),
                    index,
                )
            )
            logger.info("✅ Panel Gamma=%g, theta=%.4f done", gamma_big, theta)
        return results

    def engine_check(self, grid: str = "full", dimension: Optional[int] = None) -> CheckReport:
        """
        Compare the Fock protocol against the closed-form shift on a (theta, Gamma) grid.

        Args:
            grid: "full" (5 x 5) or "quick" (3 x 3)
            dimension: Fock truncation (defaults to the configured one)

        Returns:
            CheckReport with the worst relative deviation and lowest fidelity
        """
        if grid not in ("full", "quick"):
            raise ValidationError(f"unknown check grid {grid!r}", field="grid")
        if grid == "full":
            thetas, gammas = CHECK_THETAS, CHECK_GAMMAS
        else:
            thetas, gammas = QUICK_CHECK_THETAS, QUICK_CHECK_GAMMAS
        dimension = dimension or self.truncation_dim or config.TRUNCATION_DIM
        deviations = []
        min_fidelity = 1.0
        for theta in thetas:
            for gamma_big in gammas:
                config_point = MeasurementConfig.natural(theta, gamma_big)
                expected = analytic.pointer_shift(config_point)
                shift, match = fock.protocol_shift(config_point, dimension)
                deviation = abs(shift - expected) / abs(expected)
                deviations.append((theta, gamma_big, deviation))
                if match is not None:
                    min_fidelity = min(min_fidelity, match)
        worst = max(deviations, key=lambda item: item[2])
        return CheckReport(
            max_deviation=worst[2],
            worst=(worst[0], worst[1]),
            min_fidelity=min_fidelity,
            deviations=tuple(deviations),
        )

    def transition_curve(
        self,
        gammas: Optional[Sequence[float]] = None,
        theta: float = TRANSITION_THETA,
        settings: Optional[TomographySettings] = None,
        dimension: Optional[int] = None,
        z_score: float = 1.0,
    ) -> List[Dict[str, float]]:
        """
        Direct and inferred transition factors along a Gamma axis.

        Each row holds gamma_big, direct, inferred, std and the interval ends
        ci_low and ci_high (equal to inferred for exact evaluation).
        """
        gammas = transition_gammas() if gammas is None else gammas
        dimension = dimension or self.truncation_dim or config.TRUNCATION_DIM
        rows = []
        for index, gamma_big in enumerate(sorted(gammas)):
            config_point = MeasurementConfig.natural(theta, gamma_big)
            row = {
                "gamma_big": float(gamma_big),
                "direct": analytic.transition_factor(gamma_big),
            }
            if settings is None:
                shift = analytic.pointer_shift(config_point)
                row["inferred"] = analytic.invert_transition_factor(
                    shift, theta, config_point.gamma0_t
                )
                row["std"] = 0.0
                row["ci_low"] = row["ci_high"] = row["inferred"]
            else:
                estimate = tomography.infer_transition_factor(
                    config_point,
                    settings.k_fit_grid,
                    settings.shots,
                    _row_seed(settings.seed, index),
                    dimension,
                    z_score=z_score,
                    linearity_alpha=settings.linearity_alpha,
                )
                row["inferred"] = estimate.factor
                row["std"] = estimate.std
                row["ci_low"], row["ci_high"] = estimate.interval
            rows.append(row)
        return rows


def run_sweep(spec: SweepSpec, max_workers: Optional[int] = None) -> SweepResult:
    """Evaluate a sweep with the configured worker count."""
    return create_sweep_service(max_workers).run(spec)


def cat_panels(spec: SweepSpec) -> List[PanelResult]:
    """Per-panel analytic density, Wigner grid and optional reconstructions."""
    return create_sweep_service().panels(spec)


# Factory function
def create_sweep_service(max_workers: Optional[int] = None) -> SweepService:
    """
    Create a sweep service instance.

    Args:
        max_workers: Thread pool size; defaults to WEAKSTRONG_MAX_WORKERS

    Returns:
        SweepService instance
    """
    return SweepService(max_workers=max_workers or config.MAX_WORKERS)
