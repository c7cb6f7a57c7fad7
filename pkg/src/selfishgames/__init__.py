"""Exact equilibrium analysis for selfish bin packing, scheduling and covering games."""

from .core import *  # noqa: F401,F403
from .core import MODELS, OBJECTIVES, GameInstance, Packing, Rational, Value
from .equilibria import *  # noqa: F401,F403
from .binpack import *  # noqa: F401,F403
from .binpack import TIE_POLICIES
from .scheduling import *  # noqa: F401,F403
from .covering import *  # noqa: F401,F403
from .oracles import *  # noqa: F401,F403

__version__ = "0.1.0"
