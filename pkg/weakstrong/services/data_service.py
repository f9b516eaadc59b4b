"""
Data service for persisting run artifacts.

This module renders datasets, density estimates, sweep tables and Wigner grids
to their on-disk formats and writes them as one bundle per run directory.
"""

import logging
import os
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..core.analytic import PhaseSpaceGrid
from ..core.tomography import DensityEstimate, TomographyDataset
from ..utils.config import config
from ..utils.file_utils import (
    atomic_write_text,
    canonical_json,
    create_output_filename,
    ensure_directory_exists,
    format_csv_value,
    load_json_file,
    remove_files,
    render_csv,
)
from .sweep_service import SWEEP_COLUMNS, PanelResult, SweepResult

logger = logging.getLogger(__name__)

WIGNER_HEADER = ("z_min", "z_max", "n_z", "p_min", "p_max", "n_p")
PANEL_COLUMNS = ("gamma_big", "theta", "l1_fourier", "l1_least_squares")


def render_dataset(dataset: TomographyDataset) -> str:
    """Dataset JSON: {config, seed, records: [{k, basis, shots, ups}]}."""
    return canonical_json(dataset.to_dict())


def render_density(estimate: DensityEstimate) -> str:
    """Two-column CSV (z, density)."""
    return render_csv(
        ("z", "density"),
        zip((float(z) for z in estimate.z_grid), (float(d) for d in estimate.density)),
    )


def render_sweep_csv(result: SweepResult) -> str:
    return render_csv(SWEEP_COLUMNS, result.table())


def render_sweep_json(result: SweepResult) -> str:
    return canonical_json(result.to_dict())


def render_wigner(grid: PhaseSpaceGrid, values: np.ndarray) -> str:
    """
    Wigner matrix as CSV with a two-line grid header.

    Line 1 names the grid fields, line 2 holds their values, and each following
    line is one z row of n_p values.
    """
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.n_z, grid.n_p):
        raise ValueError(f"Wigner matrix shape {values.shape} does not match the grid")
    spec = (grid.z_min, grid.z_max, grid.n_z, grid.p_min, grid.p_max, grid.n_p)
    lines = [",".join(WIGNER_HEADER), ",".join(format_csv_value(v) for v in spec)]
    lines.extend(",".join(repr(float(v)) for v in row) for row in values)
    return "\r\n".join(lines) + "\r\n"


def parse_wigner(text: str) -> Tuple[PhaseSpaceGrid, np.ndarray]:
    """Inverse of ``render_wigner``."""
    lines = [line for line in text.splitlines() if line]
    fields = lines[1].split(",")
    grid = PhaseSpaceGrid(
        z_min=float(fields[0]),
        z_max=float(fields[1]),
        n_z=int(fields[2]),
        p_min=float(fields[3]),
        p_max=float(fields[4]),
        n_p=int(fields[5]),
    )
    values = np.array([[float(v) for v in line.split(",")] for line in lines[2:]])
    return grid, values


class DataService:
    """Service for writing and reading run artifacts."""

    def __init__(self, base_dir: str, output_root: Optional[str] = None):
        """
        Initialize the data service.

        Args:
            base_dir: Base directory for the project
            output_root: Explicit output directory, overriding the configured one
        """
        self.base_dir = base_dir
        self.output_root = output_root

    def run_dir(self, run_hash: str) -> str:
        """Create and return the directory for a run keyed by its config hash."""
        if self.output_root is not None:
            path = os.path.join(self.output_root, run_hash)
        else:
            path = config.get_output_dir(self.base_dir, run_hash)
        ensure_directory_exists(path)
        return path

    def write_bundle(self, files: Dict[str, str]) -> bool:
        """
        Write several text artifacts, all or none.

        Args:
            files: Mapping of path to content

        Returns:
            True if every file was written; otherwise the ones already written
            are removed and False is returned
        """
        written: List[str] = []
        for path, content in files.items():
            if not atomic_write_text(content, path):
                logger.error("❌ Could not write %s; removing partial outputs", path)
                remove_files(written)
                return False
            written.append(path)
        for path in written:
            logger.info("📁 Saved %s", os.path.basename(path))
        return True

    def save_sweep(self, result: SweepResult, run_dir: str) -> bool:
        """Write sweep.csv and sweep.json into the run directory."""
        return self.write_bundle(
            {
                os.path.join(run_dir, "sweep.csv"): render_sweep_csv(result),
                os.path.join(run_dir, "sweep.json"): render_sweep_json(result),
            }
        )

    def save_panels(self, panels: Sequence[PanelResult], run_dir: str) -> bool:
        """
        Write every panel's densities, Wigner grid and dataset plus a panels.csv
        summary of the reconstruction errors.
        """
        files: Dict[str, str] = {}
        rows: List[List[Any]] = []
        for panel in panels:
            base = f"panel-{panel.label}"

            def panel_path(tag: str, extension: str = "csv") -> str:
                return os.path.join(run_dir, create_output_filename(base, tag, extension))

            analytic = DensityEstimate(panel.z_grid, panel.analytic_density, 0.0, "analytic")
            files[panel_path("analytic")] = render_density(analytic)
            files[panel_path("wigner")] = render_wigner(panel.wigner_grid, panel.wigner)
            for method, estimate in panel.reconstructions.items():
                files[panel_path(method)] = render_density(estimate)
            if panel.dataset is not None:
                files[panel_path("dataset", "json")] = render_dataset(panel.dataset)
            rows.append(
                [
                    panel.gamma_big,
                    panel.theta,
                    panel.l1_errors.get("fourier"),
                    panel.l1_errors.get("least_squares"),
                ]
            )
        files[os.path.join(run_dir, "panels.csv")] = render_csv(PANEL_COLUMNS, rows)
        return self.write_bundle(files)

    def save_reconstruction(
        self,
        dataset: TomographyDataset,
        estimates: Sequence[DensityEstimate],
        run_dir: str,
    ) -> bool:
        """Write dataset.json and one <method>.csv per estimate."""
        files = {os.path.join(run_dir, "dataset.json"): render_dataset(dataset)}
        for estimate in estimates:
            files[os.path.join(run_dir, f"{estimate.method}.csv")] = render_density(estimate)
        return self.write_bundle(files)

    def save_wigner(self, grid: PhaseSpaceGrid, values: np.ndarray, file_path: str) -> bool:
        return self.write_bundle({file_path: render_wigner(grid, values)})

    def load_run_config(self, file_path: str) -> Optional[Dict[str, Any]]:
        """Load a JSON run config; None if it is missing or not a JSON object."""
        data = load_json_file(file_path)
        if data is not None and not isinstance(data, dict):
            logger.warning("⚠️ Run config %s is not a JSON object", file_path)
            return None
        return data


# Factory function
def create_data_service(base_dir: str, output_root: Optional[str] = None) -> DataService:
    """
    Create a data service instance.

    Args:
        base_dir: Base directory for the project
        output_root: Optional explicit output directory

    Returns:
        DataService instance
    """
    return DataService(base_dir, output_root)
