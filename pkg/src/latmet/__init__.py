"""latmet: two-type Kawasaki lattice gas metastability toolkit."""

__version__ = "0.1.0"

from .geometry import LatticeGeometry
from .model import Configuration, ModelParams

__all__ = ["LatticeGeometry", "ModelParams", "Configuration", "__version__"]
