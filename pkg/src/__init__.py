"""
Shape Decomposition Package

This package provides tools for decomposing a signal into generalized modes
alpha(t) s(p(t)): a synchrosqueezed wave packet transform that estimates the
instantaneous phases and amplitudes, and a recursive regression loop that
recovers the periodic shape of every mode.
"""

__version__ = "2.0.0"
__author__ = "Shape Decomposition contributors"
