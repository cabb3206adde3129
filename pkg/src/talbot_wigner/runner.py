"""Pipeline orchestration: carpet -> sinogram -> reconstruction -> report files."""
from __future__ import annotations

import platform
from dataclasses import dataclass
from importlib import metadata
from pathlib import Path
from typing import Optional

from . import io
from .config import RunConfig
from .optics import Grid1D
from .propagation import Carpet, apply_visibility, detector_sample, simulate
from .tomography import (NegativityReport, Sinogram, build_sinogram, cross_section, negativity_report,
                         reconstruct)
from .wigner import WignerMap

STAGES = ("carpet", "sinogram", "wigner")


class StageError(RuntimeError):
    """A numerical stage failed; ``stage`` names it."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


@dataclass(frozen=True)
class RunManifest:
    config: dict
    versions: dict
    files: dict
    negativity: Optional[dict]

    def as_dict(self) -> dict:
        return {"config": self.config, "versions": self.versions, "files": self.files,
                "negativity": self.negativity, "random_free": True}


@dataclass(frozen=True)
class PipelineResult:
    carpet: Carpet
    measured: Carpet
    sinogram: Optional[Sinogram] = None
    wigner: Optional[WignerMap] = None
    report: Optional[NegativityReport] = None


def run_stage(name: str, fn, *args):
    try:
        return fn(*args)
    except (ValueError, ArithmeticError, KeyError) as exc:
        raise StageError(name, str(exc)) from exc


def versions() -> dict:
    out = {"python": platform.python_version()}
    for pkg in ("artifact", "numpy", "scipy", "numba"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = "unknown"
    return out


def _measure(carpet: Carpet, cfg: RunConfig) -> Carpet:
    measured = detector_sample(carpet, cfg.get("detector.dx"))
    return apply_visibility(measured, cfg.get("beam.visibility"))


def run_pipeline(cfg: RunConfig, until: str = "wigner") -> PipelineResult:
    """Run the numerical stages up to ``until`` (one of STAGES) in memory."""
    if until not in STAGES:
        raise ValueError(f"unknown stage {until!r}")
    carpet = run_stage("carpet", simulate, cfg.scenario_spec())
    measured = run_stage("detector", _measure, carpet, cfg)
    if until == "carpet":
        return PipelineResult(carpet, measured)
    sino = run_stage("sinogram", build_sinogram, measured, cfg.sinogram_config())
    if until == "sinogram":
        return PipelineResult(carpet, measured, sino)
    wmap = run_stage("reconstruct", reconstruct, sino, cfg.reconstruction_config())
    report = run_stage("report", negativity_report, wmap)
    return PipelineResult(carpet, measured, sino, wmap, report)


def _grid_dict(g: Grid1D) -> dict:
    return {"x_min": g.x_min, "x_max": g.x_max, "dx": g.dx, "size": g.size, "unit": g.unit}


def _write_carpet(out: Path, res: PipelineResult) -> None:
    c = res.carpet
    io.write_matrix_csv(out / "carpet.csv", "z", c.x_grid.points, c.z_values, c.density)
    io.write_pgm(out / "carpet.pgm", c.density)
    io.write_json(out / "carpet.json", {"x_grid": _grid_dict(c.x_grid), "n_z": int(c.z_values.size),
                                        "z_range": [float(c.z_values[0]), float(c.z_values[-1])],
                                        "periodic": c.period is not None,
                                        "provenance": c.provenance,
                                        "detector_grid": _grid_dict(res.measured.x_grid)})


def _write_sinogram(out: Path, cfg: RunConfig, s: Sinogram) -> None:
    io.write_matrix_csv(out / "sinogram.csv", "theta", s.x_grid.points, s.angles, s.rows)
    io.write_json(out / "sinogram.json", {"x_grid": _grid_dict(s.x_grid), "n_angles": int(s.angles.size),
                                          "theta_range": [float(s.angles[0]), float(s.angles[-1])],
                                          "symmetric_extension_used": s.symmetric_extension_used,
                                          "sinogram": cfg.values["sinogram"],
                                          "detector": cfg.values["detector"]})


def write_wigner(out: Path, w: WignerMap, report: NegativityReport, extra: dict) -> None:
    io.write_matrix_csv(out / "wigner.csv", "nu", w.x_grid.points, w.nu_grid.points, w.values)
    # nu increases upwards in the image
    io.write_pgm(out / "wigner.pgm", w.values[::-1], symmetric=True)
    io.write_columns_csv(out / "cross_section.csv", ["x", "W"], w.x_grid.points, cross_section(w, 0.5))
    meta = dict(w.metadata, x_grid=_grid_dict(w.x_grid), nu_grid=_grid_dict(w.nu_grid),
                negativity=report.as_dict(), **extra)
    io.write_json(out / "wigner.json", meta)


def write_manifest(out: Path, cfg: dict, negativity: Optional[dict]) -> RunManifest:
    files = {}
    for p in sorted(out.rglob("*")):
        if p.is_file() and p != out / "manifest.json":
            files[p.relative_to(out).as_posix()] = io.sha256_file(p)
    man = RunManifest(cfg, versions(), files, negativity)
    io.write_json(out / "manifest.json", man.as_dict())
    return man


def _run_point(cfg: RunConfig, out: Path, until: str) -> RunManifest:
    out.mkdir(parents=True, exist_ok=True)
    res = run_pipeline(cfg, until)
    try:
        _write_carpet(out, res)
        if res.sinogram is not None:
            _write_sinogram(out, cfg, res.sinogram)
        if res.wigner is not None:
            write_wigner(out, res.wigner, res.report, {"reconstruction": cfg.values["reconstruction"]})
    except OSError as exc:
        raise StageError("io", str(exc)) from exc
    neg = res.report.as_dict() if res.report is not None else None
    return write_manifest(out, cfg.as_dict(), neg)


def run_scenario(cfg: RunConfig, out_dir: Optional[str] = None, until: str = "wigner") -> RunManifest:
    """Run every sweep point of ``cfg`` and write its artifacts under ``out_dir``.

    Without a sweep the files go straight into ``out_dir``. With a sweep each
    point gets a subdirectory holding its own manifest, and the top-level
    manifest lists the per-point negativity summaries.
    """
    out = Path(out_dir or cfg.output_dir)
    points = cfg.sweep_points()
    if len(points) == 1 and not points[0][0]:
        return _run_point(cfg, out, until)
    out.mkdir(parents=True, exist_ok=True)
    summary = []
    for i, (label, point) in enumerate(points):
        man = _run_point(point, out / f"{i:02d}_{label}", until)
        summary.append({"label": label, "value": point.get(cfg.get("sweep.key")),
                        "negativity": man.negativity})
    return write_manifest(out, cfg.as_dict(), {"sweep": summary})
