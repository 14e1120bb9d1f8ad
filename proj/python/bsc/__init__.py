"""Spectral toolkit for bilinear Schrodinger control on the unit interval.

The compiled core lives in the _bsc extension module; this package re-exports
its public surface.
"""

from _bsc import *  # noqa: F401,F403
from _bsc import __version__  # noqa: F401
