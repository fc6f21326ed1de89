"""Numerics for hairs, endpoints and gauge Hausdorff measures of lam*exp(z)."""
from .dynamics import Params, eval_E, find_fixed_points, inverse_branch, itinerary_of
from .errors import DomainError, FatouEscape, RegimeError, ResolutionError, TowerRequired
from .gauge import GaugeProfile, GaugeSpec, check_condp, check_condp2
from .tower import RealDominantComplex, TowerReal

__version__ = "0.1.0"
