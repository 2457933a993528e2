"""Uniform cell meshes of a box domain with a truncated exterior collar."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, EmptyBallError


@dataclass(frozen=True, eq=False)
class Mesh:
    """Cells of width ``h`` covering ``Omega = [lo, hi]`` and the collar ``|y| < r_max``.

    The lattice is aligned with ``lo``.  Interior cells tile the box exactly;
    collar cells are the lattice cells outside the box whose centers lie in
    the open ball of radius ``r_max``.  Cells are ordered lexicographically
    by their integer grid coordinates.
    """

    n: int
    lo: np.ndarray
    hi: np.ndarray
    h: float
    r_max: float
    grid: np.ndarray        # (N, n) integer lattice coordinates
    centers: np.ndarray     # (N, n)
    is_interior: np.ndarray  # (N,) bool

    @property
    def n_cells(self):
        return self.centers.shape[0]

    @property
    def interior(self):
        return np.flatnonzero(self.is_interior)

    @property
    def exterior(self):
        return np.flatnonzero(~self.is_interior)

    @property
    def measure(self):
        return self.h ** self.n

    @property
    def measures(self):
        return np.full(self.n_cells, self.measure)

    @property
    def diameter(self):
        return float(np.linalg.norm(self.hi - self.lo))

    @property
    def shape(self):
        """Number of interior cells along each axis."""
        return tuple(int(k) for k in np.rint((self.hi - self.lo) / self.h))

    @property
    def volume(self):
        return float(np.prod(self.hi - self.lo))

    def interior_axes(self):
        """Cell-center coordinates of the interior lattice along each axis."""
        return [self.lo[d] + (np.arange(k) + 0.5) * self.h for d, k in enumerate(self.shape)]

    def nearest_cell(self, points):
        """Index of the cell whose box contains each point, or -1 if none."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        k = np.floor((points - self.lo) / self.h).astype(np.int64)
        lookup = {tuple(g): i for i, g in enumerate(self.grid)}
        return np.array([lookup.get(tuple(row), -1) for row in k], dtype=np.int64)

    def rebuild(self, h=None, r_max=None):
        return build_mesh((self.lo, self.hi), self.h if h is None else h,
                          self.r_max if r_max is None else r_max, self.n)


def build_mesh(box, h, r_max, n):
    """Build the uniform mesh of ``box = (lo, hi)`` with collar radius ``r_max``."""
    if n not in (1, 2):
        raise ConfigurationError(f"dimension n = {n} not supported (n must be 1 or 2)")
    lo = np.broadcast_to(np.asarray(box[0], dtype=float), (n,)).copy()
    hi = np.broadcast_to(np.asarray(box[1], dtype=float), (n,)).copy()
    h = float(h)
    if not np.all(hi > lo):
        raise ConfigurationError("box must have hi > lo in every coordinate")
    if h <= 0:
        raise ConfigurationError("cell width h must be positive")
    extent = hi - lo
    if np.any(h > extent):
        raise ConfigurationError(f"h = {h:g} is larger than the box extent {extent.min():g}")
    counts = extent / h
    if np.any(np.abs(counts - np.rint(counts)) > 1e-9 * np.maximum(1.0, counts)):
        raise ConfigurationError("box extent must be an integer multiple of h")
    counts = np.rint(counts).astype(np.int64)
    corners = np.array(list(itertools.product(*zip(lo, hi))))
    circumradius = float(np.max(np.linalg.norm(corners, axis=1)))
    if r_max < circumradius:
        raise ConfigurationError(
            f"R_max = {r_max:g} is smaller than the box circumradius {circumradius:g}")

    ranges = []
    for d in range(n):
        kmin = int(np.floor((-r_max - lo[d]) / h)) - 1
        kmax = int(np.ceil((r_max - lo[d]) / h)) + 1
        ranges.append(np.arange(kmin, kmax + 1))
    mesh_grid = np.stack([g.ravel() for g in np.meshgrid(*ranges, indexing="ij")], axis=-1)
    centers = lo + (mesh_grid + 0.5) * h
    inside = np.all((mesh_grid >= 0) & (mesh_grid < counts), axis=1)
    collar = ~inside & (np.linalg.norm(centers, axis=1) < r_max)
    keep = inside | collar
    # meshgrid with indexing="ij" over sorted ranges is already lexicographic
    return Mesh(n=n, lo=lo, hi=hi, h=h, r_max=float(r_max), grid=mesh_grid[keep],
                centers=centers[keep], is_interior=inside[keep])


@dataclass(frozen=True, eq=False)
class BallIndex:
    """Interior cells of the open ball ``B_r(x0)`` with sampled power bounds."""

    center: np.ndarray
    radius: float
    cells: np.ndarray
    s_lo: float
    s_hi: float
    p_lo: float
    p_hi: float
    doubling: float = 2.0

    @property
    def size(self):
        return int(self.cells.size)


def _pair_extrema(field, pts):
    prof = field.separable_profile(pts)
    if prof is not None:
        i, j = int(np.argmin(prof)), int(np.argmax(prof))
        lo = float(field.raw(pts[i], pts[i]))
        hi = float(field.raw(pts[j], pts[j]))
        return lo, hi
    vals = field.raw(pts[:, None, :], pts[None, :, :])
    return float(vals.min()), float(vals.max())


def power_bounds(mesh, x0, radius, order=None, exponent=None):
    """Sampled ``(s-, s+, p-, p+)`` over pairs of cell centers in ``B_radius(x0)``.

    All cells are sampled, collar cells included, because enlarged balls may
    leave the domain.  When no center falls in the ball, ``x0`` itself is used.
    """
    x0 = np.asarray(x0, dtype=float).reshape(mesh.n)
    dist = np.linalg.norm(mesh.centers - x0, axis=1)
    pts = mesh.centers[dist < radius]
    if pts.shape[0] == 0:
        pts = x0[None, :]
    s_lo, s_hi = _pair_extrema(order, pts) if order is not None else (np.nan, np.nan)
    p_lo, p_hi = _pair_extrema(exponent, pts) if exponent is not None else (np.nan, np.nan)
    return s_lo, s_hi, p_lo, p_hi


def ball_index(mesh, x0, r, order=None, exponent=None, doubling=2.0):
    """Interior cells with ``|center - x0| < r`` plus power bounds over ``B_{doubling r}``."""
    if r <= 0:
        raise ValueError("ball radius must be positive")
    x0 = np.asarray(x0, dtype=float).reshape(mesh.n)
    interior = mesh.interior
    dist = np.linalg.norm(mesh.centers[interior] - x0, axis=1)
    cells = interior[dist < r]
    if cells.size == 0:
        raise EmptyBallError(f"ball B_{r:g}({x0.tolist()}) contains no cell centers")
    bounds = power_bounds(mesh, x0, doubling * r, order, exponent)
    return BallIndex(x0, float(r), cells, *bounds, doubling=float(doubling))


def full_region(mesh, order=None, exponent=None):
    """The whole interior as a region, with power bounds over interior pairs."""
    pts = mesh.centers[mesh.interior]
    s = _pair_extrema(order, pts) if order is not None else (np.nan, np.nan)
    p = _pair_extrema(exponent, pts) if exponent is not None else (np.nan, np.nan)
    center = 0.5 * (mesh.lo + mesh.hi)
    return BallIndex(center, np.inf, mesh.interior, s[0], s[1], p[0], p[1], doubling=1.0)
