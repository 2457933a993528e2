"""Variable powers s(x, y), p(x, y) and Lambda-comparable kernels.

Every field is a symmetric two-point function that becomes independent of
``y`` once ``|y| > r_pow``; the far-field closures in :mod:`varfrac.calculus`
rely on that.  Points are arrays whose last axis is the space dimension.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import ConfigurationError, SingularityError

ORDER = "order"
EXPONENT = "exponent"

# interval allowed by the structural conditions on each role, open at both ends
_STRUCTURAL = {ORDER: (0.0, 1.0), EXPONENT: (1.0, math.inf)}
_SYMBOL = {ORDER: "s", EXPONENT: "p"}


def _as_points(x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    return x


def _norm(x):
    return np.sqrt(np.sum(x * x, axis=-1))


class PowerField:
    """Base class of the order and exponent fields.

    Subclasses implement :meth:`raw`.  Calling the field evaluates it and
    raises :class:`ConfigurationError` if a value leaves the declared bounds.
    """

    kind = "abstract"

    def __init__(self, role, lower, upper, r_pow):
        if role not in _STRUCTURAL:
            raise ConfigurationError(f"unknown field role {role!r}")
        self.role = role
        self.lower = float(lower)
        self.upper = float(upper)
        self.r_pow = float(r_pow)
        sym = _SYMBOL[role]
        lo, hi = _STRUCTURAL[role]
        if not self.lower > lo:
            raise ConfigurationError(
                f"{sym}- = {self.lower:g} violates the bound {sym}- > {lo:g}")
        if not self.upper < hi:
            raise ConfigurationError(
                f"{sym}+ = {self.upper:g} violates the bound {sym}+ < {hi:g}")
        if self.lower > self.upper:
            raise ConfigurationError(
                f"{sym}- = {self.lower:g} exceeds {sym}+ = {self.upper:g}")
        if self.r_pow < 0:
            raise ConfigurationError("r_pow must be nonnegative")

    def raw(self, x, y):
        raise NotImplementedError

    def __call__(self, x, y):
        return eval_powers(self, x, y)

    @property
    def symbol(self):
        return _SYMBOL[self.role]

    @property
    def far_value(self):
        """Value taken when both points lie beyond ``r_pow``."""
        far = np.full(1, 2.0 * self.r_pow + 1.0)
        return float(self.raw(far, far))

    def far_profile(self, x):
        """``p(x, y)`` for any ``|y| > r_pow``; independent of ``y`` by construction."""
        x = _as_points(x)
        ystar = np.zeros(x.shape[-1])
        ystar[0] = 2.0 * self.r_pow + 1.0
        return self.raw(x, ystar)

    def separable_profile(self, x):
        """Return ``h(x)`` when the field is ``c + h(x) + h(y)``, else ``None``."""
        return None

    @property
    def is_constant(self):
        return False

    def landmarks(self):
        """Points where the field attains extreme local behaviour; always sampled."""
        return np.zeros((0, 1))


class ConstantField(PowerField):
    kind = "constant"

    def __init__(self, role, value):
        self.value = float(value)
        super().__init__(role, self.value, self.value, 0.0)

    def raw(self, x, y):
        x, y = _as_points(x), _as_points(y)
        shape = np.broadcast_shapes(x.shape[:-1], y.shape[:-1])
        return np.full(shape, self.value)

    def separable_profile(self, x):
        return np.zeros(_as_points(x).shape[:-1])

    @property
    def is_constant(self):
        return True


class SeparableField(PowerField):
    """``base + scale * (min(|x - c|, cap) + min(|y - c|, cap))``."""

    kind = "separable"

    def __init__(self, role, base, scale, cap, center=None, n=1):
        self.base = float(base)
        self.scale = float(scale)
        self.cap = float(cap)
        if self.cap <= 0:
            raise ConfigurationError("separable field needs cap > 0")
        self.center = np.zeros(n) if center is None else np.asarray(center, dtype=float)
        span = 2.0 * self.scale * self.cap
        super().__init__(role, self.base + min(0.0, span), self.base + max(0.0, span),
                         float(_norm(self.center)) + self.cap)

    def separable_profile(self, x):
        return self.scale * np.minimum(_norm(_as_points(x) - self.center), self.cap)

    def landmarks(self):
        return self.center.reshape(1, -1)

    def raw(self, x, y):
        return self.base + (self.separable_profile(x) + self.separable_profile(y))


class LogModulatedField(PowerField):
    """Field whose oscillation over any ball of radius ``r`` is ``lam / ln(1/r)``.

    ``base + lam/2 * (psi(|x - a|) + psi(|y - a|))`` with
    ``psi(t) = 1 / ln(2 / min(t, t_c))`` and ``t_c = 2 e^-2``, which is concave
    and increasing on ``[0, t_c]``.  The modulus equals ``lam / ln(1/r)`` for
    ``r <= e^-2`` and ``lam / 2`` above, so the log-Hoelder constant is ``lam``.
    """

    kind = "log-modulated"
    T_CAP = 2.0 * math.exp(-2.0)

    def __init__(self, role, base, lam, center=None, n=1):
        self.base = float(base)
        self.lam = float(lam)
        if self.lam < 0:
            raise ConfigurationError("log-modulated field needs lam >= 0")
        self.center = np.zeros(n) if center is None else np.asarray(center, dtype=float)
        super().__init__(role, self.base, self.base + 0.5 * self.lam,
                         float(_norm(self.center)) + self.T_CAP)

    def separable_profile(self, x):
        t = np.minimum(_norm(_as_points(x) - self.center), self.T_CAP)
        with np.errstate(divide="ignore"):
            psi = np.where(t > 0, 1.0 / np.log(2.0 / np.where(t > 0, t, 1.0)), 0.0)
        return 0.5 * self.lam * psi

    def landmarks(self):
        return self.center.reshape(1, -1)

    def raw(self, x, y):
        return self.base + (self.separable_profile(x) + self.separable_profile(y))


class TabulatedField(PowerField):
    """Bilinear interpolation of samples ``table[i, j] = f(nodes[i], nodes[j])``.

    The table is indexed by the first coordinate of each point.  Any pair with
    a point outside the ball of radius ``r_pow`` takes ``far``.  With
    ``symmetrize`` the evaluation is ``(f(x, y) + f(y, x)) / 2``, which is
    symmetric bit for bit.
    """

    kind = "tabulated"

    def __init__(self, role, nodes, table, far, r_pow, lower=None, upper=None,
                 symmetrize=True):
        self.nodes = np.asarray(nodes, dtype=float)
        self.table = np.asarray(table, dtype=float)
        k = self.nodes.size
        if self.table.shape != (k, k) or k < 2:
            raise ConfigurationError("tabulated field needs a square table with >= 2 nodes")
        if np.any(np.diff(self.nodes) <= 0):
            raise ConfigurationError("tabulated nodes must be strictly increasing")
        if np.max(np.abs(self.nodes)) > r_pow:
            raise ConfigurationError("tabulated nodes must lie inside [-r_pow, r_pow]")
        self.far = float(far)
        self.symmetrize = bool(symmetrize)
        self._interp = RegularGridInterpolator((self.nodes, self.nodes), self.table,
                                               method="linear")
        samples = np.append(self.table.ravel(), self.far)
        super().__init__(role,
                         np.min(samples) if lower is None else lower,
                         np.max(samples) if upper is None else upper,
                         r_pow)

    def _lookup(self, x, y):
        a = np.clip(x[..., 0], self.nodes[0], self.nodes[-1])
        b = np.clip(y[..., 0], self.nodes[0], self.nodes[-1])
        a, b = np.broadcast_arrays(a, b)
        pts = np.stack([a.ravel(), b.ravel()], axis=-1)
        return self._interp(pts).reshape(a.shape)

    def raw(self, x, y):
        x, y = _as_points(x), _as_points(y)
        if self.symmetrize:
            inner = 0.5 * (self._lookup(x, y) + self._lookup(y, x))
        else:
            inner = self._lookup(x, y)
        outside = (_norm(x) > self.r_pow) | (_norm(y) > self.r_pow)
        return np.where(outside, self.far, inner)


def eval_powers(field: PowerField, x, y):
    """Evaluate ``field`` at point pairs, enforcing its declared bounds."""
    values = field.raw(x, y)
    sym = field.symbol
    lo, hi = _STRUCTURAL[field.role]
    if values.size:
        vmin, vmax = float(np.min(values)), float(np.max(values))
        if not np.all(np.isfinite(values)):
            raise ConfigurationError(f"{field.kind} {field.role} field produced non-finite values")
        if vmin <= lo:
            raise ConfigurationError(f"{sym} = {vmin:g} violates the bound {sym}- > {lo:g}")
        if vmax >= hi:
            raise ConfigurationError(f"{sym} = {vmax:g} violates the bound {sym}+ < {hi:g}")
        tol = 1e-12 * max(1.0, abs(field.upper))
        if vmin < field.lower - tol:
            raise ConfigurationError(
                f"{sym} = {vmin:g} below the declared bound {sym}- = {field.lower:g}")
        if vmax > field.upper + tol:
            raise ConfigurationError(
                f"{sym} = {vmax:g} above the declared bound {sym}+ = {field.upper:g}")
    return values


# --------------------------------------------------------------------------
# kernels


class Perturbation:
    """Multiplicative factor theta(x, y) applied to the prototype kernel."""

    kind = "abstract"

    def __call__(self, x, y):
        raise NotImplementedError

    def bounds(self):
        return (1.0, 1.0)


class UnitPerturbation(Perturbation):
    kind = "none"

    def __call__(self, x, y):
        x, y = _as_points(x), _as_points(y)
        return np.ones(np.broadcast_shapes(x.shape[:-1], y.shape[:-1]))


class ConstantPerturbation(Perturbation):
    kind = "constant"

    def __init__(self, value):
        self.value = float(value)

    def __call__(self, x, y):
        x, y = _as_points(x), _as_points(y)
        return np.full(np.broadcast_shapes(x.shape[:-1], y.shape[:-1]), self.value)

    def bounds(self):
        return (self.value, self.value)


class CheckerboardPerturbation(Perturbation):
    """``low`` or ``high`` by the parity of the summed lattice indices of x and y."""

    kind = "checkerboard"

    def __init__(self, width, low, high):
        self.width = float(width)
        self.low = float(low)
        self.high = float(high)
        if self.width <= 0:
            raise ConfigurationError("checkerboard width must be positive")

    def __call__(self, x, y):
        x, y = _as_points(x), _as_points(y)
        ix = np.floor(x / self.width).sum(axis=-1)
        iy = np.floor(y / self.width).sum(axis=-1)
        return np.where(np.mod(ix + iy, 2.0) == 0, self.low, self.high)

    def bounds(self):
        return (min(self.low, self.high), max(self.low, self.high))


class TabulatedPerturbation(Perturbation):
    """Tabulated theta over first coordinates, symmetrized, ``far`` outside ``radius``."""

    kind = "tabulated"

    def __init__(self, nodes, table, far=1.0, radius=None):
        self.nodes = np.asarray(nodes, dtype=float)
        self.table = np.asarray(table, dtype=float)
        self.far = float(far)
        self.radius = float(np.max(np.abs(self.nodes)) if radius is None else radius)
        self._interp = RegularGridInterpolator((self.nodes, self.nodes), self.table,
                                               method="linear")

    def _lookup(self, x, y):
        a = np.clip(x[..., 0], self.nodes[0], self.nodes[-1])
        b = np.clip(y[..., 0], self.nodes[0], self.nodes[-1])
        a, b = np.broadcast_arrays(a, b)
        return self._interp(np.stack([a.ravel(), b.ravel()], -1)).reshape(a.shape)

    def __call__(self, x, y):
        x, y = _as_points(x), _as_points(y)
        inner = 0.5 * (self._lookup(x, y) + self._lookup(y, x))
        outside = (_norm(x) > self.radius) | (_norm(y) > self.radius)
        return np.where(outside, self.far, inner)

    def bounds(self):
        vals = np.append(self.table.ravel(), self.far)
        return (float(vals.min()), float(vals.max()))


@dataclass(frozen=True)
class KernelSpec:
    """``K(x, y) = theta(x, y) |x - y|^-(n + s p)`` with theta in [1/lam, lam]."""

    lam: float = 1.0
    perturbation: Perturbation = field(default_factory=UnitPerturbation)
    n: int = 1

    def __post_init__(self):
        if self.lam < 1.0:
            raise ConfigurationError(f"Lambda = {self.lam:g} must be >= 1")
        if self.n not in (1, 2):
            raise ConfigurationError(f"dimension n = {self.n} not supported")

    def theta(self, x, y):
        return self.perturbation(x, y)

    def far_theta(self, x, r_far):
        x = _as_points(x)
        ystar = np.zeros(x.shape[-1])
        ystar[0] = r_far
        return self.perturbation(x, ystar)


def kernel_eval(kernel: KernelSpec, order: PowerField, exponent: PowerField, x, y):
    """Evaluate ``K(x, y)``; raises :class:`SingularityError` on the diagonal."""
    x, y = _as_points(x), _as_points(y)
    dist = _norm(x - y)
    if np.any(dist == 0):
        raise SingularityError("kernel requested at x = y")
    s = eval_powers(order, x, y)
    p = eval_powers(exponent, x, y)
    return kernel.theta(x, y) * dist ** (-(x.shape[-1] + s * p))


# --------------------------------------------------------------------------
# validation and moduli


@dataclass
class ValidationReport:
    checks: list  # (name, passed, detail)

    @property
    def passed(self):
        return all(ok for _, ok, _ in self.checks)

    def failures(self):
        return [name for name, ok, _ in self.checks if not ok]


def _sample_points(n, radius, count, rng):
    return rng.uniform(-radius, radius, size=(count, n))


def _far_points(n, r_pow, count, rng):
    direction = rng.normal(size=(count, n))
    direction /= _norm(direction)[:, None]
    radii = r_pow * rng.uniform(1.01, 3.0, size=count) + 1e-9
    return direction * radii[:, None]


def validate_power_config(order, exponent, kernel, n_samples=256, seed=0):
    """Sampled checks of symmetry, bounds, comparability and far constancy.

    Failures are reported, never raised.
    """
    rng = np.random.default_rng(seed)
    n = kernel.n
    r_pow = max(order.r_pow, exponent.r_pow)
    radius = 1.5 * max(2.0 * r_pow, 1.0)
    x = _sample_points(n, radius, n_samples, rng)
    y = _sample_points(n, radius, n_samples, rng)
    checks = []
    for fld in (order, exponent):
        sym = fld.symbol
        a, b = fld.raw(x, y), fld.raw(y, x)
        bad = int(np.count_nonzero(a != b))
        checks.append((f"symmetry[{sym}]", bad == 0, f"{bad} asymmetric pairs"))
        try:
            eval_powers(fld, x, y)
            eval_powers(fld, x, x)
            checks.append((f"bounds[{sym}]", True,
                           f"[{fld.lower:g}, {fld.upper:g}]"))
        except ConfigurationError as exc:
            checks.append((f"bounds[{sym}]", False, str(exc)))
        xf = _far_points(n, fld.r_pow, n_samples, rng)
        yf = _far_points(n, fld.r_pow, n_samples, rng)
        far = fld.raw(xf, yf)
        ok = bool(np.allclose(far, fld.far_value, rtol=0, atol=1e-12))
        checks.append((f"far-constancy[{sym}]", ok,
                       f"constant {fld.far_value:g} beyond r_pow = {fld.r_pow:g}"))
    theta = np.concatenate([kernel.theta(x, y), kernel.theta(x, x[::-1])])
    lo, hi = 1.0 / kernel.lam, kernel.lam
    ok = bool(np.all((theta >= lo * (1 - 1e-12)) & (theta <= hi * (1 + 1e-12))))
    checks.append(("comparability", ok,
                   f"theta in [{theta.min():g}, {theta.max():g}], allowed [{lo:g}, {hi:g}]"))
    sym_theta = bool(np.all(kernel.theta(x, y) == kernel.theta(y, x)))
    checks.append(("symmetry[K]", sym_theta, "theta(x,y) = theta(y,x)"))
    return ValidationReport(checks)


@dataclass
class ModulusReport:
    radii: np.ndarray
    omega_s: np.ndarray
    omega_p: np.ndarray
    c_lh: float

    @property
    def product_log(self):
        return (self.omega_s + self.omega_p) * np.log(1.0 / self.radii)


def _sample_lattice(mesh, samples_per_cell):
    centers = mesh.centers[mesh.interior]
    k = int(samples_per_cell)
    if k <= 1:
        return centers
    offsets = (np.arange(k) + 0.5) / k - 0.5
    grids = np.meshgrid(*([offsets] * mesh.n), indexing="ij")
    local = np.stack([g.ravel() for g in grids], axis=-1) * mesh.h
    return (centers[:, None, :] + local[None, :, :]).reshape(-1, mesh.n)


def _pair_oscillation(fld, pts):
    prof = fld.separable_profile(pts)
    if prof is not None:
        return 2.0 * float(prof.max() - prof.min()) if pts.shape[0] else 0.0
    vals = fld.raw(pts[:, None, :], pts[None, :, :])
    return float(vals.max() - vals.min())


def ball_oscillation(fld, pts, lo, hi, r):
    """Max over admissible centers of the field's oscillation on ``B_r x B_r``.

    The field's landmarks are added to the sample points.  Candidate centers
    are the sample points (plus the box center) whose ball fits inside the
    box ``[lo, hi]``.
    """
    marks = np.asarray(fld.landmarks(), dtype=float)
    if marks.size and marks.shape[1] == pts.shape[1]:
        inside_box = np.all((marks >= lo) & (marks <= hi), axis=-1)
        pts = np.vstack([pts, marks[inside_box]])
    centers = np.vstack([pts, 0.5 * (lo + hi)])
    fits = np.all((centers - lo >= r) & (hi - centers >= r), axis=-1)
    centers = centers[fits]
    if centers.shape[0] == 0:
        raise ConfigurationError(f"no ball of radius {r:g} fits inside the domain")
    prof = fld.separable_profile(pts)
    best = 0.0
    for c in centers:
        inside = _norm(pts - c) < r
        if not np.any(inside):
            continue
        if prof is not None:
            sub = prof[inside]
            osc = 2.0 * float(sub.max() - sub.min())
        else:
            osc = _pair_oscillation(fld, pts[inside])
        best = max(best, osc)
    return best


def modulus_profile(order, exponent, mesh, radii, samples_per_cell=1, order_scope="ball"):
    """Sampled moduli of continuity near the diagonal and the log-Hoelder constant.

    ``order_scope="global"`` takes the order oscillation over every pair of
    mesh points plus the far value, independent of ``r``.  Reported moduli
    are the running maximum over increasing radii, so they are monotone.
    """
    radii = np.asarray(sorted(float(r) for r in radii))
    if radii.size == 0:
        raise ValueError("modulus_profile needs at least one radius")
    if np.any(radii <= 0) or np.any(radii >= 0.5):
        raise ValueError("radii must lie in (0, 1/2)")
    pts = _sample_lattice(mesh, samples_per_cell)
    omega_p = np.array([ball_oscillation(exponent, pts, mesh.lo, mesh.hi, r) for r in radii])
    if order_scope == "ball":
        omega_s = np.array([ball_oscillation(order, pts, mesh.lo, mesh.hi, r) for r in radii])
    elif order_scope == "global":
        allpts = mesh.centers
        vals = order.raw(allpts[:, None, :], allpts[None, :, :])
        top = max(float(vals.max()), order.far_value)
        bot = min(float(vals.min()), order.far_value)
        omega_s = np.full(radii.shape, top - bot)
    else:
        raise ValueError(f"unknown order_scope {order_scope!r}")
    omega_p = np.maximum.accumulate(omega_p)
    omega_s = np.maximum.accumulate(omega_s)
    c_lh = float(np.max((omega_p + omega_s) * np.log(1.0 / radii)))
    return ModulusReport(radii, omega_s, omega_p, c_lh)
