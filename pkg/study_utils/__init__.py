"""Monte Carlo study of the size-index estimators, result files and the command-line tool."""
from .montecarlo import *
from .reporting import *
