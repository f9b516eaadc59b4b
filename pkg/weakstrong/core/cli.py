"""
Command-line front end for the weak-to-strong simulator.

Subcommands: point, sweep, transition, reconstruct, wigner and check. Exit
codes are 0 on success, 1 when ``check`` exceeds its tolerance, 2 for usage or
validation errors and 3 for computational failures.
"""

import argparse
import logging
import math
import os
import sys
from typing import Any, Dict, Optional, Sequence

from .. import __version__
from ..services.data_service import create_data_service
from ..services.sweep_service import (
    ENGINES,
    KIND_ALIASES,
    SWEEP_KINDS,
    SweepSpec,
    TomographySettings,
    as_float,
    as_floats,
    as_int,
    create_sweep_service,
)
from ..utils.config import config
from ..utils.file_utils import config_hash, render_csv
from ..utils.text_utils import (
    format_check_summary,
    format_number,
    format_point_report,
    format_reconstruct_summary,
    format_transition_table,
)
from . import analytic, fock, tomography
from .analytic import MeasurementConfig, PhaseSpaceGrid
from .exceptions import ComputationError, ValidationError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_COMPUTATION = 3

TRANSITION_COLUMNS = ("gamma_big", "direct", "inferred", "std", "ci_low", "ci_high")

FIELD_FLAGS = {
    "theta": "--theta",
    "gamma": "--gamma",
    "gamma_big": "--gamma",
    "units": "--units",
    "engine": "--engine",
    "shots": "--shots",
    "seed": "--seed",
    "tolerance": "--tolerance",
    "grid": "--grid",
    "shift": "--shift",
    "config": "--config",
    "truncation_dim": "--truncation-dim",
}


def configure_logging(level: Optional[str] = None) -> None:
    """Send log records to stderr so stdout only carries reports."""
    numeric = getattr(logging, level.upper(), logging.INFO) if level else config.log_level()
    logging.basicConfig(
        level=numeric,
        format="%(message)s",
        stream=sys.stderr,
        force=True,
    )


def _flag_for(error: ValidationError) -> str:
    if error.field is None:
        return "input"
    return FIELD_FLAGS.get(error.field, f"--{error.field.replace('_', '-')}")


def build_parser() -> argparse.ArgumentParser:
    """Parse command line arguments."""
    parser = argparse.ArgumentParser(
        prog="weakstrong",
        description="Simulate the weak-to-strong transition of a post-selected pointer",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  weakstrong point --theta 0.02 --gamma 0.04 --units physical
  weakstrong point --deg --theta 45 --gamma 1 --engine both
  weakstrong sweep --config sample_sweep.json
  weakstrong transition --shift -1.2 --gamma0t 1 --theta 0.5
  weakstrong reconstruct --config sample_reconstruct.json
  weakstrong check --grid quick
        """,
    )
    parser.add_argument("--version", action="version", version=f"weakstrong {__version__}")
    parser.add_argument("--log-level", default=None, help="Logging level (default from env)")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run config; explicit flags override it")
    common.add_argument("--out", help="Output root (default ./out)")
    common.add_argument("--deg", action="store_true", help="Read --theta in degrees")
    common.add_argument(
        "--units", choices=("natural", "physical"), default=None, help="Unit profile"
    )

    subparsers = parser.add_subparsers(dest="command", required=True)

    point = subparsers.add_parser("point", parents=[common], help="Single operating point")
    point.add_argument("--theta", type=float, help="Post-selection angle")
    point.add_argument("--gamma", type=float, help="Interference factor Gamma")
    point.add_argument("--engine", choices=("analytic", "fock", "both"), default=None)
    point.add_argument("--truncation-dim", type=int, default=None)

    sweep = subparsers.add_parser("sweep", parents=[common], help="Parameter sweep")
    sweep.add_argument(
        "--kind", choices=SWEEP_KINDS + tuple(KIND_ALIASES)
    )
    sweep.add_argument("--theta", type=float, nargs="+", help="Theta values")
    sweep.add_argument("--gamma", type=float, nargs="+", help="Gamma values")
    sweep.add_argument("--engine", choices=("analytic", "fock", "both"), default=None)
    sweep.add_argument("--tolerance", type=float, default=None)
    sweep.add_argument("--shots", type=int, default=None, help="Enable tomography (0 = exact)")
    sweep.add_argument("--seed", type=int, default=None)
    sweep.add_argument("--workers", type=int, default=None)

    transition = subparsers.add_parser(
        "transition", parents=[common], help="Invert a shift or tabulate the factor curve"
    )
    transition.add_argument("--theta", type=float, help="Post-selection angle (default 0.5)")
    transition.add_argument("--shift", type=float, help="Measured pointer shift")
    transition.add_argument("--gamma0t", type=float, help="Coupling displacement gamma0 t")
    transition.add_argument(
        "--shots", type=int, default=None, help="Tomographic <z> (0 = exact)"
    )
    transition.add_argument("--seed", type=int, default=None)

    reconstruct = subparsers.add_parser(
        "reconstruct", parents=[common], help="Tomographic density reconstruction"
    )
    reconstruct.add_argument("--theta", type=float)
    reconstruct.add_argument("--gamma", type=float)
    reconstruct.add_argument(
        "--shots", type=int, default=None, help="Shots per point (0 = exact)"
    )
    reconstruct.add_argument("--seed", type=int, default=None)

    wigner = subparsers.add_parser("wigner", parents=[common], help="Wigner function grid")
    wigner.add_argument("--theta", type=float)
    wigner.add_argument("--gamma", type=float)
    wigner.add_argument("--spacing", type=float, default=0.125)

    check = subparsers.add_parser("check", help="Analytic vs Fock engine cross-check")
    check.add_argument("--tolerance", type=float, default=None)
    check.add_argument("--grid", choices=("full", "quick"), default="full")
    check.add_argument("--truncation-dim", type=int, default=None)

    return parser


class CommandRunner:
    """Runs one parsed invocation against the services."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.file_values: Dict[str, Any] = {}
        config_path = getattr(args, "config", None)
        if config_path:
            data_service = create_data_service(os.getcwd())
            loaded = data_service.load_run_config(config_path)
            if loaded is None:
                raise ValidationError(
                    f"cannot read config file {config_path!r}", field="config"
                )
            self.file_values = loaded
        self.data_service = create_data_service(os.getcwd(), getattr(args, "out", None))

    def value(self, flag: str, key: Optional[str] = None, default: Any = None) -> Any:
        """Explicit flag, else config-file entry, else ``default``."""
        explicit = getattr(self.args, flag, None)
        if explicit is not None:
            return explicit
        return self.file_values.get(key or flag, default)

    def theta(self, default: Optional[float] = None) -> float:
        explicit = getattr(self.args, "theta", None)
        if explicit is not None:
            return math.radians(explicit) if self.args.deg else explicit
        value = self.file_values.get("theta", default)
        if value is None:
            raise ValidationError("--theta is required", field="theta")
        return as_float(value, "theta")

    def gamma(self) -> float:
        value = self.value("gamma", "gamma_big")
        if value is None:
            raise ValidationError("--gamma is required", field="gamma")
        return as_float(value, "gamma")

    def measurement(self, theta: float, gamma_big: float) -> MeasurementConfig:
        units = self.value("units", default="natural")
        if units not in ("natural", "physical"):
            raise ValidationError(f"unknown units {units!r}", field="units")
        if units == "physical":
            return MeasurementConfig.physical(theta, gamma_big)
        return MeasurementConfig.natural(theta, gamma_big)

    def run_dir(self, command: str, params: Dict[str, Any]) -> str:
        return self.data_service.run_dir(config_hash({"command": command, **params}))

    def point(self) -> int:
        measurement = self.measurement(self.theta(), self.gamma())
        engine = self.value("engine", default="analytic")
        if engine not in ENGINES:
            raise ValidationError(f"unknown engine {engine!r}", field="engine")
        dimension = as_int(
            self.value("truncation_dim", default=config.TRUNCATION_DIM), "truncation_dim"
        )
        values: Dict[str, Any] = {
            "theta": measurement.theta,
            "gamma_big": measurement.gamma_big,
            "engine": engine,
            "units": measurement.units,
            "weak_value": analytic.weak_value(measurement.theta),
            "expectation_value": analytic.expectation_value(measurement.theta),
            "success_probability": analytic.success_probability(measurement),
            "transition_factor": analytic.transition_factor(measurement.gamma_big),
        }
        relative = analytic.relative_shift(measurement)
        if engine in ("fock", "both"):
            if measurement.gamma_big == 0.0:
                raise ValidationError("the Fock engine needs Gamma > 0", field="gamma")
            shift, match = fock.protocol_shift(measurement, dimension)
            values["fidelity"] = match
            if engine == "fock":
                relative = shift / measurement.gamma0_t
            else:
                values["delta_shift"] = shift / measurement.gamma0_t - relative
        values["shift_over_gamma0t"] = relative
        values["shift"] = relative * measurement.gamma0_t
        print(format_point_report(values))
        if "delta_shift" in values:
            print(f"fock - analytic        {values['delta_shift']:.3e}")
        return EXIT_OK

    def _sweep_spec(self) -> SweepSpec:
        data = dict(self.file_values)
        for flag, key in (
            ("kind", "kind"),
            ("theta", "theta_values"),
            ("gamma", "gamma_values"),
            ("engine", "engine"),
            ("tolerance", "tolerance"),
            ("units", "units"),
        ):
            explicit = getattr(self.args, flag, None)
            if explicit is not None:
                data[key] = explicit
        if self.args.deg and self.args.theta is not None:
            data["theta_values"] = [math.radians(t) for t in self.args.theta]
        if self.args.shots is not None or self.args.seed is not None:
            block = dict(data.get("tomography") or {})
            if self.args.shots is not None:
                block["shots"] = self.args.shots or None
            if self.args.seed is not None:
                block["seed"] = self.args.seed
            data["tomography"] = block
        data.setdefault("kind", "theta_sweep")
        if data["kind"] == "theta_sweep":
            defaults = SweepSpec.displacement_curves()
        else:
            defaults = SweepSpec.transition_curve()
        data.setdefault("theta_values", list(defaults.theta_values))
        data.setdefault("gamma_values", list(defaults.gamma_values))
        return SweepSpec.from_dict(data)

    def sweep(self) -> int:
        spec = self._sweep_spec()
        service = create_sweep_service(self.args.workers)
        run_dir = self.data_service.run_dir(spec.digest())
        if spec.kind == "cat_panels":
            saved = self.data_service.save_panels(service.panels(spec), run_dir)
        else:
            result = service.run(spec)
            for problem in result.check_invariants(spec.tolerance):
                logger.warning("⚠️ %s", problem)
            saved = self.data_service.save_sweep(result, run_dir)
        if not saved:
            return EXIT_COMPUTATION
        print(run_dir)
        return EXIT_OK

    def transition(self) -> int:
        theta = self.theta(default=0.5)
        shift = self.value("shift")
        if shift is not None:
            gamma0_t = self.value("gamma0t")
            if gamma0_t is None:
                raise ValidationError("--gamma0t is required with --shift", field="gamma0t")
            factor = analytic.invert_transition_factor(
                as_float(shift, "shift"), theta, as_float(gamma0_t, "gamma0t")
            )
            print(f"transition factor     {format_number(factor, 10)}")
            try:
                gamma_big = analytic.gamma_from_transition_factor(factor)
                print(f"inferred Gamma        {gamma_big:.6f}")
            except ValidationError:
                print("inferred Gamma        n/a (factor outside (0, 1])")
            return EXIT_OK

        shots = self.value("shots")
        settings = None
        if shots is not None:
            settings = TomographySettings(
                shots=as_int(shots, "shots") or None,
                seed=self.value("seed", default=config.DEFAULT_SEED),
                linearity_alpha=None,
            )
        rows = create_sweep_service().transition_curve(theta=theta, settings=settings)
        params = {"theta": theta, "shots": shots, "seed": self.value("seed")}
        path = os.path.join(self.run_dir("transition", params), "transition.csv")
        table = render_csv(
            TRANSITION_COLUMNS,
            [[row[column] for column in TRANSITION_COLUMNS] for row in rows],
        )
        if not self.data_service.write_bundle({path: table}):
            return EXIT_COMPUTATION
        print(format_transition_table(rows))
        print(path)
        return EXIT_OK

    def reconstruct(self) -> int:
        if not self.file_values and self.args.theta is None:
            raise ValidationError(
                "reconstruct needs --config or --theta/--gamma", field="config"
            )
        measurement = self.measurement(self.theta(), self.gamma())
        block = self.file_values.get("tomography") or {}
        if not isinstance(block, dict):
            raise ValidationError("tomography must be an object", field="tomography")
        shots = self.args.shots
        if shots is None:
            shots = block.get("shots", config.DEFAULT_SHOTS)
        if shots is not None:
            shots = as_int(shots, "shots")
        seed = self.args.seed
        if seed is None:
            seed = as_int(block.get("seed", config.DEFAULT_SEED), "seed")
        k_grid = block.get("k_grid")
        if k_grid is not None:
            k_grid = list(as_floats(k_grid, "k_grid"))
        dimension = as_int(
            self.file_values.get("truncation_dim", config.TRUNCATION_DIM), "truncation_dim"
        )

        dataset = tomography.sample_dataset(
            measurement, k_grid, shots or None, seed, dimension
        )
        estimates = [
            tomography.reconstruct_fourier(dataset),
            tomography.reconstruct_least_squares(dataset),
        ]
        distances = {}
        flags = []
        for estimate in estimates:
            reference = tomography.reference_density(measurement, estimate.z_grid)
            distances[estimate.method] = tomography.l1_distance(estimate, reference)
            if estimate.negative_excursion:
                flags.append(f"{estimate.method} negative excursion")

        params = {
            "config": tomography.config_to_dict(measurement),
            "shots": shots,
            "seed": seed,
            "k_grid": k_grid,
            "truncation_dim": dimension,
        }
        run_dir = self.run_dir("reconstruct", params)
        if not self.data_service.save_reconstruction(dataset, estimates, run_dir):
            return EXIT_COMPUTATION
        print(format_reconstruct_summary(distances, flags))
        print(run_dir)
        return EXIT_OK

    def wigner(self) -> int:
        measurement = self.measurement(self.theta(), self.gamma())
        grid = PhaseSpaceGrid.for_config(measurement, spacing=self.args.spacing)
        values = analytic.wigner(measurement, grid)
        params = {
            "theta": measurement.theta,
            "gamma_big": measurement.gamma_big,
            "spacing": self.args.spacing,
        }
        path = os.path.join(self.run_dir("wigner", params), "wigner.csv")
        if not self.data_service.save_wigner(grid, values, path):
            return EXIT_COMPUTATION
        print(path)
        return EXIT_OK

    def check(self) -> int:
        tolerance = self.args.tolerance
        if tolerance is None:
            tolerance = config.CHECK_TOLERANCE
        if not tolerance > 0.0:
            raise ValidationError("tolerance must be positive", field="tolerance")
        report = create_sweep_service().engine_check(self.args.grid, self.args.truncation_dim)
        print(
            format_check_summary(
                report.max_deviation, report.worst, tolerance, report.min_fidelity
            )
        )
        return EXIT_OK if report.passed(tolerance) else EXIT_CHECK_FAILED


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Entry point for the ``weakstrong`` command.

    Args:
        argv: Arguments without the program name (defaults to sys.argv[1:])

    Returns:
        Process exit code
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    configure_logging(args.log_level)
    for problem in config.validate_config():
        logger.warning("⚠️ %s", problem)

    try:
        runner = CommandRunner(args)
        return getattr(runner, args.command)()
    except ValidationError as e:
        print(f"❌ {_flag_for(e)}: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ComputationError as e:
        print(f"❌ computation failed: {e}", file=sys.stderr)
        return EXIT_COMPUTATION
    except KeyboardInterrupt:
        print("\n🛑 Operation cancelled by user", file=sys.stderr)
        return EXIT_COMPUTATION


if __name__ == "__main__":
    sys.exit(main())
