"""Numerical lab for the Gaussian entire function, its covariant derivative and their landmarks."""
from .errors import GefLabError
from .field import GefSample, eval_jet, sample_gef
from .landmarks import LandmarkSet, find_critical_points, find_landmarks, find_zeros
from .rng import stream

__all__ = ["GefLabError", "GefSample", "LandmarkSet", "eval_jet", "find_critical_points",
           "find_landmarks", "find_zeros", "sample_gef", "stream"]
