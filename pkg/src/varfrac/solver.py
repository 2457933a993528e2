"""Discrete Dirichlet problem: minimise the energy over interior values.

The minimiser is found by a projected spectral (Barzilai-Borwein) gradient
method with Armijo backtracking, so every accepted step decreases the
energy up to a rounding allowance of a few ulps of its value.  Iterates are clipped to the range of the exterior
data, which never increases the energy (truncation by constants is a
contraction of every pair difference), so the discrete maximum principle
holds exactly for every iterate.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .calculus import PairSystem
from .errors import ConfigurationError
from .exterior import DiscreteFunction, ExteriorModel, tail_space_member
from .quadrature import pairwise_sum

INIT_KINDS = ("zero", "exterior-mean", "user")


@dataclass(frozen=True)
class SolverConfig:
    rtol: float = 1e-9
    max_iter: int = 20000
    armijo: float = 1e-4
    backtrack: float = 0.5
    init: str = "exterior-mean"
    n_jobs: int = 1
    max_backtracks: int = 60

    def __post_init__(self):
        if not self.rtol > 0:
            raise ConfigurationError("solver tolerance must be positive")
        if int(self.max_iter) < 1:
            raise ConfigurationError("max_iter must be at least 1")
        if not 0 < self.armijo < 1:
            raise ConfigurationError("armijo parameter must lie in (0, 1)")
        if not 0 < self.backtrack < 1:
            raise ConfigurationError("backtrack factor must lie in (0, 1)")
        if self.init not in INIT_KINDS:
            raise ConfigurationError(f"init must be one of {INIT_KINDS}, got {self.init!r}")


@dataclass(frozen=True)
class DirichletProblem:
    mesh: object
    order: object
    exponent: object
    kernel: object
    exterior: ExteriorModel


@dataclass(frozen=True, eq=False)
class SolveResult:
    problem: DirichletProblem
    solution: DiscreteFunction
    energy: float
    grad_norm: float
    tolerance: float
    iterations: int
    converged: bool
    wall_time: float
    trace: list = field(default_factory=list)  # (iteration, energy, grad_norm, step)
    tail_space_hypothesis: bool = True

    @property
    def u(self):
        return self.solution


def _continuum_gap_condition(mesh, order, exponent):
    """Exponent gap condition under which the minimiser is a tail-space member."""
    n = mesh.n
    s_lo, p_lo, p_hi = order.lower, exponent.lower, exponent.upper
    if s_lo * p_lo >= n:
        return True
    return bool(p_hi - 1.0 < n * p_lo / (n - s_lo * p_lo))


def solve_dirichlet(mesh, order, exponent, kernel, exterior: ExteriorModel,
                    config: SolverConfig | None = None, initial=None, system=None):
    """Minimise the discrete energy with the exterior data held fixed.

    Returns a :class:`SolveResult`; ``converged`` is set only when the
    gradient sup-norm reaches ``rtol`` times the initial gradient sup-norm.
    """
    config = SolverConfig() if config is None else config
    start = time.perf_counter()
    problem = DirichletProblem(mesh, order, exponent, kernel, exterior)
    far_s = order.far_profile(mesh.centers[mesh.interior])
    far_p = exponent.far_profile(mesh.centers[mesh.interior])
    if not tail_space_member(exterior.far, far_s, far_p):
        raise ConfigurationError(
            f"far field {exterior.far.describe()} is not in the tail space for these powers")
    if system is None:
        system = PairSystem(mesh, order, exponent, kernel, exterior.collar_values, exterior.far,
                            n_jobs=config.n_jobs)
    lo, hi = exterior.value_range()
    n_int = mesh.interior.size

    if initial is not None:
        u = np.asarray(initial, dtype=float).copy()
        if u.shape != (n_int,):
            raise ConfigurationError(f"initial guess needs {n_int} interior values")
    elif config.init == "zero":
        u = np.zeros(n_int)
    elif config.init == "exterior-mean":
        u = np.full(n_int, exterior.mean())
    else:
        raise ConfigurationError("init = 'user' requires an initial guess")
    u = np.clip(u, lo, hi)

    e, g = system.energy_and_gradient(u)
    if not np.isfinite(e):
        raise ConfigurationError("energy is not finite at the initial guess")
    g0 = float(np.max(np.abs(g))) if g.size else 0.0
    tol = config.rtol * g0 if g0 > 0 else config.rtol
    trace = [(0, e, g0, 0.0)]
    gnorm = g0
    step = 1.0 / max(g0, 1e-300)
    it = 0
    converged = gnorm <= tol
    while not converged and it < config.max_iter:
        it += 1
        accepted = False
        alpha = step
        # energies closer than a few ulps cannot be ordered reliably
        rounding = 8.0 * np.finfo(float).eps * abs(e)
        for _ in range(config.max_backtracks):
            trial = np.clip(u - alpha * g, lo, hi)
            d = trial - u
            if not np.any(d):
                break
            e_new = system.energy(trial)
            if e_new <= e + config.armijo * float(pairwise_sum(g * d)) + rounding:
                accepted = True
                break
            alpha *= config.backtrack
        if not accepted:
            break
        e_new, g_new = system.energy_and_gradient(trial)
        s_vec = trial - u
        y_vec = g_new - g
        sy = float(pairwise_sum(s_vec * y_vec))
        ss = float(pairwise_sum(s_vec * s_vec))
        step = ss / sy if sy > 0 else alpha * 2.0
        u, e, g = trial, e_new, g_new
        gnorm = float(np.max(np.abs(g)))
        trace.append((it, e, gnorm, alpha))
        converged = gnorm <= tol
    solution = exterior.discrete(u)
    return SolveResult(problem, solution, float(e), float(gnorm), float(tol), it, bool(converged),
                       time.perf_counter() - start, trace,
                       _continuum_gap_condition(mesh, order, exponent))


def assemble_linear_system(mesh, order, exponent, kernel, exterior: ExteriorModel):
    """Symmetric matrix ``A`` and right side ``b`` with ``grad E(u) = A u - b`` for ``p = 2``.

    ``A`` is assembled from pairwise kernel values; the far-field column
    sums reuse the far quadrature nodes of the nonlinear solver.
    """
    from .powers import kernel_eval

    if not exponent.is_constant or exponent.lower != 2.0:
        raise ConfigurationError("linear_oracle needs the exponent field p = 2")
    rows = mesh.interior
    ext = mesh.exterior
    m = mesh.measure
    xi = mesh.centers[rows]
    n_int = rows.size
    A = np.zeros((n_int, n_int))
    b = np.zeros(n_int)
    iu, ju = np.triu_indices(n_int, k=1)
    if iu.size:
        kij = kernel_eval(kernel, order, exponent, xi[iu], xi[ju]) * m * m
        A[iu, ju] = -kij
        A[ju, iu] = -kij
    A[np.arange(n_int), np.arange(n_int)] = -A.sum(axis=1)
    if ext.size:
        xe = mesh.centers[ext]
        ke = kernel_eval(kernel, order, exponent, xi[:, None, :], xe[None, :, :]) * m * m
        A[np.arange(n_int), np.arange(n_int)] += ke.sum(axis=1)
        b += ke @ exterior.collar_values
    system = PairSystem(mesh, order, exponent, kernel, exterior.collar_values, exterior.far)
    w = np.exp(system.far_log_w)
    A[np.arange(n_int), np.arange(n_int)] += w.sum(axis=1)
    b += np.sum(w * system.far_values, axis=1)
    return A, b


def linear_oracle(mesh, order, exponent, kernel, exterior: ExteriorModel):
    """Direct dense solve of the ``p = 2`` system; an independent check of the solver."""
    A, b = assemble_linear_system(mesh, order, exponent, kernel, exterior)
    return exterior.discrete(np.linalg.solve(A, b))


@dataclass(frozen=True)
class ProbeReport:
    trials: int
    min_gap: float
    failures: int
    slack: float
    epsilons: tuple

    @property
    def passed(self):
        return self.failures == 0


def minimality_probe(result: SolveResult, trials=30, seed=0, u=None, epsilons=(1e-3, 1e-2, 1e-1)):
    """Random interior perturbations of size ``eps`` never lower the energy beyond slack."""
    pb = result.problem
    system = PairSystem(pb.mesh, pb.order, pb.exponent, pb.kernel, pb.exterior.collar_values,
                        pb.exterior.far)
    base = result.solution.interior_values if u is None else np.asarray(u, dtype=float)
    e0 = system.energy(base)
    slack = 1e-12 * (1.0 + abs(e0))
    rng = np.random.default_rng(seed)
    gaps = []
    for t in range(int(trials)):
        eps = epsilons[t % len(epsilons)]
        phi = rng.uniform(-1.0, 1.0, size=base.size)
        peak = np.max(np.abs(phi)) if phi.size else 0.0
        phi = eps * phi / peak if peak > 0 else phi
        gaps.append(system.energy(base + phi) - e0)
    gaps = np.array(gaps) if gaps else np.zeros(1)
    return ProbeReport(int(trials), float(gaps.min()), int(np.sum(gaps < -slack)), slack,
                       tuple(epsilons))


def exterior_mean_function(result: SolveResult):
    """The constant fill with the exterior mean, as a discrete function."""
    ext = result.problem.exterior
    return ext.discrete(np.full(result.problem.mesh.interior.size, ext.mean()))


__all__ = ["SolverConfig", "SolveResult", "DirichletProblem", "solve_dirichlet",
           "linear_oracle", "assemble_linear_system", "minimality_probe", "ProbeReport"]
