"""Young-measure linear programs for nonlinear PDEs.

Modules
-------
model        flux, entropy and energy of the supported PDE families
grid         time, space and phase grids, flattening, Dirac initialization
assembly     sparse LP data (per-step, global, collocation, Allen-Cahn)
ipm          primal-dual interior-point LP solver
moments      mean field, energies and defects of a computed measure
reference    exact and finite-volume reference solutions, error tables
complexity   cost models of classical and quantum LP algorithms
experiments  named experiments, the per-step LP chain and convergence studies
cli          the ``ymlp`` command
"""

__version__ = "0.1.0"
