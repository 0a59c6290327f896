"""Nonlinear potential theory on weighted graphs."""
from .graph import *  # noqa: F401,F403
from .solvers import *  # noqa: F401,F403
from .models import *  # noqa: F401,F403
from .capacity import *  # noqa: F401,F403
from .metrics import *  # noqa: F401,F403
from .khasminskii import *  # noqa: F401,F403
from .suite import *  # noqa: F401,F403

__version__ = "0.1.0"
