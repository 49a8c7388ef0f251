"""Time-dependent Casimir-Polder potential of a two-level atom near a surface."""

from .greens import DipoleSpec, green_envelope, green_perfect_closed, green_reflected
from .materials import SurfaceModel, epsilon, preset, reflection
from .plasmon import dispersion_lossless, dispersion_lossy, near_field_pole, residue_rp
from .potentials import (AtomSurfaceConfig, DipoleChange, StarkShift, decay_time,
                         delta_u_res, delta_u_res_near_field, dress, kernel_contour,
                         kernel_oracle, u_dyn_contour, u_dyn_oracle, u_partial_dipole,
                         u_partial_stark, u_static)

__version__ = "0.1.0"

__all__ = [
    "AtomSurfaceConfig",
    "DipoleChange",
    "DipoleSpec",
    "StarkShift",
    "SurfaceModel",
    "decay_time",
    "delta_u_res",
    "delta_u_res_near_field",
    "dispersion_lossless",
    "dispersion_lossy",
    "dress",
    "epsilon",
    "green_envelope",
    "green_perfect_closed",
    "green_reflected",
    "kernel_contour",
    "kernel_oracle",
    "near_field_pole",
    "preset",
    "reflection",
    "residue_rp",
    "u_dyn_contour",
    "u_dyn_oracle",
    "u_partial_dipole",
    "u_partial_stark",
    "u_static",
]
