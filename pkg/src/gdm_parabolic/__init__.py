"""Implicit Euler gradient schemes for linear parabolic problems with a
general time boundary condition, with error functionals, interpolators
and randomised checks of the stability inequalities."""

from .core import *  # noqa: F401,F403
from .discretisations import *  # noqa: F401,F403
from .exact import *  # noqa: F401,F403
from .interpolation import *  # noqa: F401,F403
from .lemmas import *  # noqa: F401,F403
from .metrics import *  # noqa: F401,F403
from .solver import *  # noqa: F401,F403
from .experiments import ExperimentConfig, run_case, run_lemmas  # noqa: F401
from .svgplot import emit_plot  # noqa: F401

__version__ = '0.1.0'
