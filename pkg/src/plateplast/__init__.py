"""Quasistatic perfect plasticity in thin periodic composite plates.

Library + CLI solving the rescaled three-dimensional thin-plate problem
with a periodic two-phase microstructure and its two limiting two-scale
models (vanishing and diverging thickness-to-period ratio), with built-in
verification of energy balance, stress admissibility, the maximum plastic
work inequality, and two-scale convergence at desk scale.
"""

__version__ = "0.1.0"
