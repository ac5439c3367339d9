"""Module docstring."""
import math
from os import path


def area(r):
    """Area of a circle."""
    return math.pi * r * r
