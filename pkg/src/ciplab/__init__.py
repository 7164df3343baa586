"""Duality laboratory for convex infinite programs."""
__version__ = "0.1.0"

from . import extreal, model, minimize  # noqa: F401
from . import duality  # noqa: F401  (imported before haar, which uses its Multiplier)
from . import haar, corpus  # noqa: F401
