"""spikelab: ground states and spike asymptotics for a two-component
critical elliptic system on domains in R^4.

Subpackages follow the pipeline: params -> grids -> energy -> nehari ->
groundstate -> asymptotics / placement -> cli.  The hot numerical kernels
live in spikelab._kernels (compiled extension with a numpy fallback).
"""

from ._kernels import BACKEND_NAME, HAVE_COMPILED

__version__ = "0.1.0"

__all__ = ["__version__", "BACKEND_NAME", "HAVE_COMPILED"]
