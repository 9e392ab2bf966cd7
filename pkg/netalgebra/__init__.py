# src/netalgebra/__init__.py

__version__ = "1.0.0"

from . import modules  # noqa: E402
from . import engine  # noqa: E402
from . import banner  # noqa: E402
from . import cli  # noqa: E402
