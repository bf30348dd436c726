"""Tests of the independent component model.

Estimate an unmixing matrix, compute a characteristic-function statistic of
the residuals, and calibrate it by columnwise permutation or bootstrap.
"""

__version__ = "0.1.0"
