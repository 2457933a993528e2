"""Estimator front end for the discrete Dirichlet solver."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import (check_exterior, check_interior_values, check_points,
                          check_positive, check_power_field)
from .calculus import energy
from .powers import ConstantField, KernelSpec
from .solver import SolverConfig, solve_dirichlet


class NonlocalDirichletSolver(BaseEstimator):
    """Minimise the nonlocal energy for given exterior data.

    Parameters
    ----------
    order, exponent : PowerField, optional
        Variable order ``s(x, y)`` and exponent ``p(x, y)``.  Default to the
        constants ``s = 0.5`` and ``p = 2``.
    lam : float
        Comparability constant of the kernel, used when ``kernel`` is None.
    kernel : KernelSpec, optional
    rtol, max_iter, init, n_jobs
        Forwarded to :class:`~varfrac.solver.SolverConfig`.

    Attributes
    ----------
    result_ : SolveResult
    solution_ : DiscreteFunction
    energy_ : float
    n_iter_ : int
    converged_ : bool
    trace_ : list of (iteration, energy, grad_norm, step)
    """

    def __init__(self, order=None, exponent=None, kernel=None, lam=1.0, rtol=1e-9,
                 max_iter=20000, init="exterior-mean", n_jobs=1):
        self.order = order
        self.exponent = exponent
        self.kernel = kernel
        self.lam = lam
        self.rtol = rtol
        self.max_iter = max_iter
        self.init = init
        self.n_jobs = n_jobs

    def _resolve(self, n):
        order = ConstantField("order", 0.5) if self.order is None else self.order
        exponent = ConstantField("exponent", 2.0) if self.exponent is None else self.exponent
        check_power_field(order, "order")
        check_power_field(exponent, "exponent")
        kernel = KernelSpec(lam=float(self.lam), n=n) if self.kernel is None else self.kernel
        if kernel.n != n:
            raise ValueError(f"kernel dimension {kernel.n} does not match the mesh ({n})")
        return order, exponent, kernel

    def fit(self, X, y=None, initial=None):
        """Solve for the exterior data ``X`` (an :class:`ExteriorModel`).

        ``initial`` optionally gives the interior starting values.
        """
        exterior = check_exterior(X)
        mesh = exterior.mesh
        check_positive(self.max_iter, "max_iter", integer=True)
        check_positive(self.n_jobs, "n_jobs", integer=True)
        order, exponent, kernel = self._resolve(mesh.n)
        init = "user" if initial is not None else self.init
        config = SolverConfig(rtol=float(self.rtol), max_iter=int(self.max_iter), init=init,
                              n_jobs=int(self.n_jobs))
        start = None if initial is None else check_interior_values(initial, mesh)
        result = solve_dirichlet(mesh, order, exponent, kernel, exterior, config, initial=start)
        self.order_, self.exponent_, self.kernel_ = order, exponent, kernel
        self.mesh_ = mesh
        self.result_ = result
        self.solution_ = result.solution
        self.energy_ = result.energy
        self.n_iter_ = result.iterations
        self.converged_ = result.converged
        self.trace_ = list(result.trace)
        return self

    def predict(self, X):
        """Solution value at the cell containing (nearest to) each point."""
        check_is_fitted(self, "solution_")
        pts = check_points(X, self.mesh_.n)
        idx = self.mesh_.nearest_cell(pts)
        if np.any(idx < 0):
            raise ValueError("some points lie outside the meshed region")
        return self.solution_.values[idx]

    def transform(self, X):
        """Solution values as a column, for use in pipelines."""
        return self.predict(X)[:, None]

    def energy_of(self, v):
        """Discrete energy of another function on the fitted mesh."""
        check_is_fitted(self, "solution_")
        return energy(v, self.order_, self.exponent_, self.kernel_, n_jobs=int(self.n_jobs))

    def score(self, X=None, y=None):
        """Negative minimal energy; larger is better."""
        check_is_fitted(self, "solution_")
        return -float(self.energy_)
