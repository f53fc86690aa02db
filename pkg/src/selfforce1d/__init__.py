"""Scalar field in one space dimension coupled to a point charge with bare mass.

Closed-form field and force, particle dynamics in characteristic variables,
and independent finite-difference and balance-law oracles.
"""

__version__ = "0.1.0"
