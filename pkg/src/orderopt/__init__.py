"""Stochastic descent driven by pairwise comparisons.

Library layout:

- linalg: symmetric eigensolver, SPD inverse and square root
- rand: reproducible counter-based random streams, sphere/ball noise models
- oracle: strongly convex quadratics and the sign comparison oracle
- optimizer: the descent recursion with running Ruppert-Polyak averaging
- theory: asymptotic covariance formulas and the optimal step-size constant
- experiments: Monte Carlo harness, covariance reports, CSV/JSON interchange
- cli: simulate / theory / compare / estimate subcommands
"""

__version__ = "0.1.0"
