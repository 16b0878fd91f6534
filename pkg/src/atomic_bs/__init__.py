"""Two-photon scattering on a two-level atom coupled to a 1D waveguide."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # pragma: no cover - running from a source tree
    __version__ = "0.0.0"

from .core import (GridWarning, Grid1D, Grid2D, JointDistribution2D, Pulse, PulseKind,
                   ScatterParams, pulse_spectral_amplitude, pulse_time_profile)
from .linear_reference import (SinglePhotonResponse, interference_locus, linear_coincidence,
                               linear_joint_spectrum, single_photon_reflection_coefficient)
from .moments import (MomentTrace, MomentVector, delay_scan, excitation_probability,
                      integrate_moments)
from .amplitude import (AtomResponse, atom_response, joint_spectrum, joint_time_distribution,
                        marginal_time_distribution, path_decomposition)

__all__ = [
    "AtomResponse", "Grid1D", "Grid2D", "GridWarning", "JointDistribution2D", "MomentTrace",
    "MomentVector", "Pulse", "PulseKind", "ScatterParams", "SinglePhotonResponse",
    "atom_response", "delay_scan", "excitation_probability", "integrate_moments",
    "interference_locus", "joint_spectrum", "joint_time_distribution", "linear_coincidence",
    "linear_joint_spectrum", "marginal_time_distribution", "path_decomposition",
    "pulse_spectral_amplitude", "pulse_time_profile", "single_photon_reflection_coefficient",
]
