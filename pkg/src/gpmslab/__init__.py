"""Generalized pseudomodes for a lossy 1D dielectric slab."""
from gpmslab.slab import QnmSet, SlabCavity, exact_spectral, pole_spectral
from gpmslab.hermitization import HermitizationSolution, solve_hermitization
from gpmslab.gpm import GpmParameters, build_gpm, from_solution, gpm_spectral

__all__ = ["SlabCavity", "QnmSet", "exact_spectral", "pole_spectral", "HermitizationSolution",
           "solve_hermitization", "GpmParameters", "build_gpm", "from_solution", "gpm_spectral"]
__version__ = "0.1.0"
