"""Weighted l1 compressed sensing with partial support information."""
from .errors import DimensionError, DomainError, FormatError, InfeasibleError, ResourceError
from .model import *  # noqa: F401,F403
from .operators import *  # noqa: F401,F403
from .solver import *  # noqa: F401,F403
from .theory import *  # noqa: F401,F403
from .experiments import *  # noqa: F401,F403
from .streaming import *  # noqa: F401,F403
from .fileio import read_raw_frames, read_wav, write_raw_frames, write_wav

__version__ = "0.1.0"
