"""Small argument-checking helpers shared by the public entry points."""
import math
from numbers import Integral, Real

from .exceptions import InvalidParameterError


def check_count(value, name, minimum=0):
    if isinstance(value, bool) or not isinstance(value, Integral):
        raise InvalidParameterError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise InvalidParameterError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_real(value, name, *, low=None, high=None, low_inclusive=True, high_inclusive=True):
    if isinstance(value, bool) or not isinstance(value, Real) or math.isnan(value):
        raise InvalidParameterError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    if low is not None:
        if value < low or (not low_inclusive and value == low):
            op = ">=" if low_inclusive else ">"
            raise InvalidParameterError(f"{name} must be {op} {low}, got {value}")
    if high is not None:
        if value > high or (not high_inclusive and value == high):
            op = "<=" if high_inclusive else "<"
            raise InvalidParameterError(f"{name} must be {op} {high}, got {value}")
    return value


def check_positive(value, name):
    return check_real(value, name, low=0.0, low_inclusive=False)


def check_fraction(value, name):
    return check_real(value, name, low=0.0, high=1.0)
