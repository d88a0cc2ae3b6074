"""Tug-of-war with noise: the DPP for the normalized p-Laplacian, 1 < p < inf.

Modules
-------
kernel      closed-form kernel constants and a Monte Carlo oracle
averaging   quadrature of the directional average I^z_eps
grid        domains, lattices, sampled fields, stencils
solver      DPP fixed-point solver and comparison checks
extremal    Pucci-type extremal operators
game        Monte Carlo game simulation
harness     expansion, Hoelder and convergence studies
config, reporting, cli   command-line plumbing
"""

__version__ = "0.1.0"

from .kernel import KernelParams, MomentTable, gamma_constant, moment_table, monomial_integral  # noqa: E402
