"""Discrete nonlocal calculus with variable powers.

All pairwise sums use cell-centre (midpoint) quadrature with the diagonal
pairs removed.  Pairs with a point beyond ``R_max`` are closed by the far
quadrature of :mod:`varfrac.quadrature`, with the powers frozen at their
far profile ``p(x, y*)`` (independent of ``y`` once ``|y| > r_pow``).
Row sums use :func:`varfrac.quadrature.pairwise_sum`, so every number is
bit-reproducible and independent of ``n_jobs``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import ConfigurationError, DivergenceError, EmptyBallError
from .exterior import DiscreteFunction
from .mesh import BallIndex
from .powers import KernelSpec, eval_powers
from .quadrature import kernel_far_nodes, pairwise_sum


@dataclass(frozen=True)
class SeminormValue:
    value: float
    region: str
    refine: int = 0

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True)
class TailValue:
    """A tail-type integral split into its mesh and far-field parts."""

    value: float
    quadrature_part: float
    analytic_part: float
    center: tuple = ()
    r: float = math.nan
    rho: float = math.nan

    def __float__(self):
        return float(self.value)


def _abs_pow(a, q):
    """``|a|^q`` with ``0^q = 0`` for ``q > 0``; ``q`` may be an array."""
    a = np.abs(a)
    if np.ndim(q) == 0:
        return np.power(a, float(q))
    with np.errstate(divide="ignore"):
        return np.where(a > 0, np.exp(q * np.log(np.where(a > 0, a, 1.0))), 0.0)


def _map_rows(fn, n_rows, n_jobs=1):
    """Evaluate ``fn(rows)`` on row slices, optionally on worker threads."""
    n_jobs = max(1, int(n_jobs or 1))
    if n_jobs == 1 or n_rows < 2 * n_jobs:
        return fn(slice(0, n_rows))
    edges = np.linspace(0, n_rows, n_jobs + 1).astype(int)
    slices = [slice(a, b) for a, b in zip(edges[:-1], edges[1:]) if b > a]
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        parts = list(pool.map(fn, slices))
    if isinstance(parts[0], tuple):
        return tuple(np.concatenate(p) for p in zip(*parts))
    return np.concatenate(parts)


def _check_far_constancy(mesh, order, exponent):
    r_pow = max(order.r_pow, exponent.r_pow)
    if r_pow > mesh.r_max:
        raise ConfigurationError(
            f"R_pow = {r_pow:g} exceeds R_max = {mesh.r_max:g}; the far closure needs R_pow <= R_max")


def _region_cells(v, region):
    if region is None:
        return v.mesh.interior, "interior"
    if isinstance(region, BallIndex):
        label = "interior" if not np.isfinite(region.radius) else (
            f"B({','.join(f'{c:g}' for c in region.center)};{region.radius:g})")
        return region.cells, label
    return np.asarray(region, dtype=np.int64), "cells"


# --------------------------------------------------------------------------
# seminorms


def _pair_arrays(mesh, order, exponent, rows, cols):
    x = mesh.centers[rows][:, None, :]
    y = mesh.centers[cols][None, :, :]
    s = eval_powers(order, x, y)
    p = eval_powers(exponent, x, y)
    dist = np.linalg.norm(x - y, axis=-1)
    return s, p, dist


def _subcell_offsets(n, k):
    off = (np.arange(k) + 0.5) / k - 0.5
    grids = np.meshgrid(*([off] * n), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


def _interpolant(v):
    mesh = v.mesh
    axes = mesh.interior_axes()
    if any(a.size < 2 for a in axes):
        vals = v.interior_values
        return lambda pts: np.full(pts.shape[:-1], vals[0])
    grid_vals = v.interior_values.reshape(mesh.shape)
    interp = RegularGridInterpolator(axes, grid_vals, method="linear",
                                     bounds_error=False, fill_value=None)
    return lambda pts: interp(pts.reshape(-1, mesh.n)).reshape(pts.shape[:-1])


def gagliardo_seminorm(v: DiscreteFunction, region=None, order=None, exponent=None, refine=0):
    """``sum_{i != j in region} |v_i - v_j|^p |x_i - x_j|^-(n + s p) m_i m_j``.

    With ``refine = l >= 1`` every pair of lattice-adjacent cells (and every
    cell with itself) is recomputed on ``2^l`` subcells per axis, using the
    piecewise-linear interpolant of the interior values and the powers
    frozen at the pair of parent centres.
    """
    mesh = v.mesh
    cells, label = _region_cells(v, region)
    if cells.size == 0:
        raise EmptyBallError("seminorm region is empty")
    s, p, dist = _pair_arrays(mesh, order, exponent, cells, cells)
    vals = v.values[cells]
    diff = vals[:, None] - vals[None, :]
    with np.errstate(divide="ignore"):
        kern = np.where(dist > 0, np.power(np.where(dist > 0, dist, 1.0), -(mesh.n + s * p)), 0.0)
    terms = _abs_pow(diff, p) * kern * mesh.measure ** 2
    refine = int(refine)
    if refine > 0:
        g = mesh.grid[cells]
        cheb = np.max(np.abs(g[:, None, :] - g[None, :, :]), axis=-1)
        near_i, near_j = np.nonzero(cheb <= 1)
        terms[near_i, near_j] = 0.0
        k = 2 ** refine
        offs = _subcell_offsets(mesh.n, k) * mesh.h
        interp = _interpolant(v)
        sub_pts = mesh.centers[cells][:, None, :] + offs[None, :, :]      # (C, k^n, n)
        sub_vals = interp(sub_pts)                                         # (C, k^n)
        sub_m = (mesh.h / k) ** mesh.n
        dx = offs[:, None, :] - offs[None, :, :]
        base = (mesh.grid[cells][near_j] - mesh.grid[cells][near_i]) * mesh.h  # (P, n)
        # process pairs in blocks to bound memory
        block = max(1, 2 ** 20 // (offs.shape[0] ** 2))
        for start in range(0, near_i.size, block):
            ii = near_i[start:start + block]
            jj = near_j[start:start + block]
            sep = base[start:start + block][:, None, None, :] - dx[None, :, :, :]
            d = np.linalg.norm(sep, axis=-1)                               # (B, K, K)
            dv = sub_vals[ii][:, :, None] - sub_vals[jj][:, None, :]
            pp = p[ii, jj][:, None, None]
            ss = s[ii, jj][:, None, None]
            with np.errstate(divide="ignore"):
                kk = np.where(d > 0, np.power(np.where(d > 0, d, 1.0), -(mesh.n + ss * pp)), 0.0)
            sub = _abs_pow(dv, pp) * kk * sub_m ** 2
            terms[ii, jj] = pairwise_sum(sub.reshape(sub.shape[0], -1))
    value = float(pairwise_sum(pairwise_sum(terms)))
    return SeminormValue(value, label, refine)


def _far_setup(mesh, order, exponent, points, center=None, q_kind="energy", far=None,
               theta=None, center_kernel=True):
    """Far nodes for a family of evaluation points.

    ``q_kind`` selects the integrand growth used for the Laguerre rate:
    ``"energy"`` for ``|v - F|^p`` and ``"tail"`` for ``|F|^(p-1)``.
    """
    s_far = order.far_profile(points)
    p_far = exponent.far_profile(points)
    sigma = s_far * p_far
    decay = far.decay
    if q_kind == "energy":
        rate = sigma + min(0.0, decay) * p_far if np.isfinite(decay) else sigma
        what = "energy/seminorm"
    elif q_kind == "tail":
        rate = sigma + decay * (p_far - 1.0) if np.isfinite(decay) else sigma
        what = "tail"
    else:
        raise ValueError(q_kind)
    if np.any(~(rate > 0)):
        raise DivergenceError(
            f"{what}: far field {far.describe()} grows too fast: need growth*"
            f"{'p' if q_kind == 'energy' else '(p-1)'} < s*p at the far powers")
    z = points if center is None else np.broadcast_to(center, points.shape)
    nodes = kernel_far_nodes(far, mesh.r_max, z, sigma, rate, center_kernel=center_kernel)
    return nodes, s_far, p_far


def crossregion_seminorm(v: DiscreteFunction, order, exponent):
    """Ordered sum over ``C_Omega``: interior pairs plus twice the interior-exterior pairs."""
    mesh = v.mesh
    _check_far_constancy(mesh, order, exponent)
    rows = mesh.interior
    cols = np.arange(mesh.n_cells)
    s, p, dist = _pair_arrays(mesh, order, exponent, rows, cols)
    diff = v.values[rows][:, None] - v.values[None, :]
    with np.errstate(divide="ignore"):
        kern = np.where(dist > 0, np.power(np.where(dist > 0, dist, 1.0), -(mesh.n + s * p)), 0.0)
    weight = np.where(mesh.is_interior[None, :], 1.0, 2.0)
    terms = weight * _abs_pow(diff, p) * kern * mesh.measure ** 2
    quad = pairwise_sum(terms)
    pts = mesh.centers[rows]
    nodes, _, p_far = _far_setup(mesh, order, exponent, pts, far=v.far)
    far_part = 2.0 * mesh.measure * nodes.integrate_power(
        v.values[rows][:, None] - nodes.values, p_far)
    total = float(pairwise_sum(quad + far_part))
    return SeminormValue(total, "C_Omega", 0)


# --------------------------------------------------------------------------
# tails


def _weighted_integral(v, xs, z_points, order, exponent, include, shift, far_center,
                       center_kernel=True):
    """``sum_j |v_j|^(p(x,y_j)+shift) w(y_j) m + far`` for each ``x`` in ``xs``.

    The weight is ``|y - z|^-(n+sp)`` (or ``(1+|y|)^-(n+sp)`` when
    ``center_kernel`` is false); ``include`` masks the cells used per ``x``.
    """
    mesh = v.mesh
    x = xs[:, None, :]
    y = mesh.centers[None, :, :]
    s = eval_powers(order, x, y)
    p = eval_powers(exponent, x, y)
    if center_kernel:
        d = np.linalg.norm(y - z_points[:, None, :], axis=-1)
    else:
        d = 1.0 + np.linalg.norm(mesh.centers, axis=-1)[None, :]
    with np.errstate(divide="ignore"):
        kern = np.where(d > 0, np.power(np.where(d > 0, d, 1.0), -(mesh.n + s * p)), 0.0)
    vals = np.broadcast_to(v.values[None, :], kern.shape)
    terms = np.where(include, _abs_pow(vals, p + shift) * kern, 0.0) * mesh.measure
    quad = pairwise_sum(terms)
    nodes, _, p_far = _far_setup(mesh, order, exponent, xs, center=far_center, q_kind="tail",
                                 far=v.far, center_kernel=center_kernel)
    analytic = nodes.integrate_power(nodes.values, p_far + shift)
    return quad, analytic


def _ball_points(mesh, x0, rho):
    x0 = np.asarray(x0, dtype=float).reshape(mesh.n)
    inside = mesh.interior[np.linalg.norm(mesh.centers[mesh.interior] - x0, axis=1) < rho]
    if inside.size == 0:
        raise EmptyBallError(f"B_{rho:g}({x0.tolist()}) contains no interior cell centre")
    return x0, inside


def tail(v: DiscreteFunction, x0, r, rho, order, exponent):
    """Nonlocal tail ``sup_{x in B_rho(x0)} int_{|y - x0| >= r} |v|^(p-1) |y - x0|^-(n+sp) dy``.

    The sup runs over interior cell centres in ``B_rho(x0)``.  Requires
    ``B_r(x0)`` to lie inside the collar ball so the far region is disjoint
    from the excluded ball.
    """
    mesh = v.mesh
    _check_far_constancy(mesh, order, exponent)
    if r <= 0:
        raise ValueError("tail inner radius must be positive")
    x0, inside = _ball_points(mesh, x0, rho)
    if np.linalg.norm(x0) + r > mesh.r_max + 1e-12:
        raise ConfigurationError(
            f"tail needs |x0| + r <= R_max (got {np.linalg.norm(x0) + r:g} > {mesh.r_max:g})")
    xs = mesh.centers[inside]
    include = (np.linalg.norm(mesh.centers - x0, axis=1) >= r)[None, :]
    include = np.broadcast_to(include, (xs.shape[0], mesh.n_cells))
    quad, analytic = _weighted_integral(v, xs, np.broadcast_to(x0, xs.shape), order, exponent,
                                        include, -1.0, x0)
    total = quad + analytic
    k = int(np.argmax(total))
    return TailValue(float(total[k]), float(quad[k]), float(analytic[k]),
                     tuple(float(c) for c in x0), float(r), float(rho))


def tail_space_seminorm(v: DiscreteFunction, order, exponent, region=None):
    """``max_x int |v(y)|^(p(x,y)-1) (1+|y|)^-(n+sp) dy`` over interior centres ``x``."""
    mesh = v.mesh
    _check_far_constancy(mesh, order, exponent)
    cells, _ = _region_cells(v, region)
    xs = mesh.centers[cells]
    include = np.ones((xs.shape[0], mesh.n_cells), dtype=bool)
    quad, analytic = _weighted_integral(v, xs, xs, order, exponent, include, -1.0, None,
                                        center_kernel=False)
    total = quad + analytic
    k = int(np.argmax(total))
    return TailValue(float(total[k]), float(quad[k]), float(analytic[k]))


def kernel_integral(v: DiscreteFunction, cells, order, exponent, shift=-1.0):
    """``int |v(y)|^(p(x,y)+shift) |x - y|^-(n+sp) dy`` for each ``x`` in ``cells``.

    The self cell is excluded (principal value).  Used for the cross term of
    the Caccioppoli inequality.
    """
    mesh = v.mesh
    xs = mesh.centers[cells]
    include = np.ones((xs.shape[0], mesh.n_cells), dtype=bool)
    include[np.arange(cells.size), cells] = False
    quad, analytic = _weighted_integral(v, xs, xs, order, exponent, include, shift, None)
    return quad + analytic


# --------------------------------------------------------------------------
# energy


class PairSystem:
    """Precomputed pair weights for the discrete energy over ``C_Omega``.

    Rows are interior cells, columns all cells.  The far field adds per-row
    quadrature nodes.  The collar values are fixed; only interior values vary.
    """

    def __init__(self, mesh, order, exponent, kernel: KernelSpec, exterior_values, far,
                 n_jobs=1):
        _check_far_constancy(mesh, order, exponent)
        if kernel.n != mesh.n:
            raise ConfigurationError(f"kernel dimension {kernel.n} != mesh dimension {mesh.n}")
        self.mesh = mesh
        self.far = far
        self.n_jobs = n_jobs
        rows = mesh.interior
        self.rows = rows
        x = mesh.centers[rows][:, None, :]
        y = mesh.centers[None, :, :]
        self.P = eval_powers(exponent, x, y)
        s = eval_powers(order, x, y)
        dist = np.linalg.norm(x - y, axis=-1)
        theta = kernel.theta(x, y)
        with np.errstate(divide="ignore"):
            kern = np.where(dist > 0, np.power(np.where(dist > 0, dist, 1.0),
                                               -(mesh.n + s * self.P)), 0.0)
        self.W = theta * kern * mesh.measure ** 2
        self.half = np.where(mesh.is_interior, 0.5, 1.0)[None, :]
        self.constant_p = float(self.P.flat[0]) if exponent.is_constant else None
        base = mesh.centers[rows]
        nodes, _, self.p_far = _far_setup(mesh, order, exponent, base, far=far)
        r_star = 2.0 * max(mesh.r_max, order.r_pow, exponent.r_pow) + 1.0
        self.theta_far = kernel.far_theta(base, r_star)
        self.far_values = nodes.values
        self.far_log_w = nodes.log_w + np.log(self.theta_far)[:, None] + math.log(mesh.measure)
        values = np.zeros(mesh.n_cells)
        values[mesh.exterior] = exterior_values
        self.base_values = values

    @classmethod
    def from_function(cls, v, order, exponent, kernel, n_jobs=1):
        return cls(v.mesh, order, exponent, kernel, v.exterior_values, v.far, n_jobs)

    @property
    def n_unknowns(self):
        return self.rows.size

    def full_values(self, u):
        values = self.base_values.copy()
        values[self.rows] = u
        return values

    def _rows(self, u, values, rows, want_grad):
        diff = u[rows][:, None] - values[None, :]
        a = np.abs(diff)
        p = self.P[rows] if self.constant_p is None else self.constant_p
        q = _abs_pow(a, p - 1.0)                            # |d|^(p-1), 0 at d = 0
        W = self.W[rows]
        e_terms = self.half * W * q * a / p
        energy = pairwise_sum(e_terms)
        fd = u[rows][:, None] - self.far_values[rows]
        fa = np.abs(fd)
        pf = self.p_far[rows][:, None]
        lw = self.far_log_w[rows]
        with np.errstate(divide="ignore"):
            logs = np.where(fa > 0, (pf - 1.0) * np.log(np.where(fa > 0, fa, 1.0)) + lw, -np.inf)
        fq = np.exp(logs)
        energy = energy + pairwise_sum(fq * fa / pf)
        if not want_grad:
            return energy
        grad = pairwise_sum(W * q * np.sign(diff)) + pairwise_sum(fq * np.sign(fd))
        return energy, grad

    def energy_split(self, u):
        """``(mesh_part, far_part)`` of the energy; the far part is the quadrature beyond R_max."""
        u = np.asarray(u, dtype=float)
        values = self.full_values(u)
        rows = np.arange(u.size)
        a = np.abs(u[:, None] - values[None, :])
        p = self.P if self.constant_p is None else self.constant_p
        near = pairwise_sum(pairwise_sum(self.half * self.W * _abs_pow(a, p) / p))
        fa = np.abs(u[rows][:, None] - self.far_values)
        with np.errstate(divide="ignore"):
            logs = np.where(fa > 0, self.p_far[:, None] * np.log(np.where(fa > 0, fa, 1.0))
                            + self.far_log_w, -np.inf)
        far = pairwise_sum(pairwise_sum(np.exp(logs) / self.p_far[:, None]))
        return float(near), float(far)

    def row_energy(self, u):
        u = np.asarray(u, dtype=float)
        values = self.full_values(u)
        return _map_rows(lambda rows: self._rows(u, values, rows, False), u.size, self.n_jobs)

    def energy(self, u):
        return float(pairwise_sum(self.row_energy(u)))

    def energy_and_gradient(self, u):
        u = np.asarray(u, dtype=float)
        values = self.full_values(u)
        e_rows, grad = _map_rows(lambda rows: self._rows(u, values, rows, True), u.size,
                                 self.n_jobs)
        return float(pairwise_sum(e_rows)), grad

    def gradient(self, u):
        return self.energy_and_gradient(u)[1]


def energy(v: DiscreteFunction, order, exponent, kernel, n_jobs=1):
    """Discrete energy: half the ordered-pair sum of ``|dv|^p K m m / p`` over ``C_Omega``."""
    system = PairSystem.from_function(v, order, exponent, kernel, n_jobs)
    return system.energy(v.interior_values)


def energy_gradient(v: DiscreteFunction, order, exponent, kernel, n_jobs=1):
    """Gradient of :func:`energy` with respect to the interior cell values."""
    system = PairSystem.from_function(v, order, exponent, kernel, n_jobs)
    return system.gradient(v.interior_values)


__all__ = [
    "SeminormValue", "TailValue", "PairSystem", "gagliardo_seminorm", "crossregion_seminorm",
    "tail", "tail_space_seminorm", "kernel_integral", "energy", "energy_gradient",
]
