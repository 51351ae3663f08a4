"""Simulation and analysis toolkit for two-hop opportunistic relaying.

``kernels.BACKEND`` reports whether the compiled kernels or the numpy
fallback were selected at import.
"""

from . import analytics, core, genie, kernels, montecarlo, scheduler
from .analytics import *  # noqa: F401,F403
from .core import *  # noqa: F401,F403
from .genie import *  # noqa: F401,F403
from .montecarlo import *  # noqa: F401,F403
from .scheduler import *  # noqa: F401,F403

__version__ = "0.1.0"
