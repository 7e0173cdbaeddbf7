"""Human-alignment diagnostics for embedding spaces."""

from ._alignkit import *  # noqa: F401,F403
from ._alignkit import AlignkitError, Measure

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
