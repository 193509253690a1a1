"""Exact Ewens sampling formula combinatorics and estimators of the expected size indices R_i."""
__version__ = '0.1.0'

from .errors import *
from .config import ClipPolicy, ExperimentConfig
from .partition import *
from .likelihood import *
from .estimators import *
