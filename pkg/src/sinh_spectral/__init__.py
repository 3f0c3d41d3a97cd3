"""Spectral data of periodic solutions of the sinh-Gordon equation.

Forward map from periodic Cauchy data to the monodromy and its spectral
data, the inverse map from a divisor back to the monodromy, finite type
projection, isospectral flows and the Jacobi coordinates of truncated
curves.
"""

__version__ = "0.1.0"
