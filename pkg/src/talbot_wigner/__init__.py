"""Talbot-regime matter-wave carpets and Wigner-function tomography."""
from .optics import BeamSpec, GratingSpec, Grid1D, VdwSpec, talbot_distance
from .propagation import (Carpet, ScenarioSpec, apply_visibility, carpet_finite, carpet_infinite,
                          detector_sample, fringe_visibility, incoherent_average, simulate)
from .tomography import (NegativityReport, ReconstructionConfig, Sinogram, SinogramConfig,
                         build_sinogram, negativity_report, reconstruct, theta_of_z, z_of_theta)
from .wigner import DeltaPeakSet, WignerMap, wdf_delta_comb, wdf_infinite_exact, wdf_numerical

__all__ = [
    "BeamSpec", "GratingSpec", "Grid1D", "VdwSpec", "talbot_distance",
    "Carpet", "ScenarioSpec", "apply_visibility", "carpet_finite", "carpet_infinite",
    "detector_sample", "fringe_visibility", "incoherent_average", "simulate",
    "NegativityReport", "ReconstructionConfig", "Sinogram", "SinogramConfig",
    "build_sinogram", "negativity_report", "reconstruct", "theta_of_z", "z_of_theta",
    "DeltaPeakSet", "WignerMap", "wdf_delta_comb", "wdf_infinite_exact", "wdf_numerical",
]
