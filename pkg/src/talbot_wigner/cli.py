"""Command-line front end: ``talbot-wigner {carpet,sinogram,reconstruct,run,presets}``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import io
from .config import ConfigError, list_presets, load_config
from .optics import Grid1D
from .runner import StageError, run_scenario, run_stage, write_manifest, write_wigner
from .tomography import Sinogram, negativity_report, reconstruct

EXIT_OK, EXIT_CONFIG, EXIT_STAGE = 0, 2, 3


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML config file")
    p.add_argument("--preset", help="scenario preset used when the config names none")
    p.add_argument("--out", help="output directory (overrides output.dir)")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config entry, e.g. --set beam.visibility=0.5")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="talbot-wigner",
                                     description="Talbot carpet simulation and Wigner tomography")
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb, text in (("carpet", "simulate the near-field carpet"),
                       ("sinogram", "carpet plus rescaled marginals"),
                       ("run", "full pipeline including the reconstruction")):
        _add_common(sub.add_parser(verb, help=text))
    rec = sub.add_parser("reconstruct", help="reconstruct the WDF, optionally from a sinogram CSV")
    _add_common(rec)
    rec.add_argument("--sinogram", help="sinogram.csv written by an earlier run")
    sub.add_parser("presets", help="list scenario presets")
    return parser


def _load_sinogram(path: str) -> Sinogram:
    corner, xs, angles, rows = io.read_matrix_csv(Path(path))
    if corner != "theta":
        raise ValueError(f"{path} is not a sinogram CSV")
    grid = Grid1D(float(xs[0]), float(xs[-1]), float((xs[-1] - xs[0]) / (xs.size - 1)))
    # 9-digit cells: restore exact unit row integrals
    rows = rows / (rows.sum(axis=1, keepdims=True) * grid.dx)
    return Sinogram(grid, angles, rows)


def _reconstruct_file(cfg, path: str, out: Path) -> None:
    sino = run_stage("sinogram", _load_sinogram, path)
    wmap = run_stage("reconstruct", reconstruct, sino, cfg.reconstruction_config())
    report = run_stage("report", negativity_report, wmap)
    out.mkdir(parents=True, exist_ok=True)
    write_wigner(out, wmap, report, {"reconstruction": cfg.values["reconstruction"], "sinogram_file": path})
    write_manifest(out, cfg.as_dict(), report.as_dict())


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.verb == "presets":
        for name, desc in list_presets():
            print(f"{name:26s} {desc}")
        return EXIT_OK
    try:
        cfg = load_config(args.config, args.set, args.preset)
        out = Path(args.out or cfg.output_dir)
        if args.verb == "reconstruct" and args.sinogram:
            _reconstruct_file(cfg, args.sinogram, out)
        else:
            until = {"carpet": "carpet", "sinogram": "sinogram"}.get(args.verb, "wigner")
            man = run_scenario(cfg, str(out), until)
            if man.negativity and "min_value" in man.negativity:
                print(f"min W = {man.negativity['min_value']:.6g}  "
                      f"negative volume = {man.negativity['negative_volume']:.6g}")
        print(f"wrote {out}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StageError as exc:
        print(f"stage error: {exc}", file=sys.stderr)
        return EXIT_STAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
