"""Exterior data: far-field models, collar values and discrete functions."""

from __future__ import annotations

import math

import numpy as np

from .errors import ConfigurationError


class FarField:
    """Exterior data for ``|y| > R_max``.

    Far fields are evaluated in polar form ``y = exp(log_t) * omega`` so that
    quadrature nodes far out in radius never overflow.

    Attributes
    ----------
    radial : bool
        Value depends on ``|y|`` only.
    decay : float
        ``|F(y)| <= C |y|^-decay`` for large ``|y|``; negative means growth.
    """

    kind = "abstract"
    radial = True
    decay = 0.0

    def polar(self, log_t, omega):
        raise NotImplementedError

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        t = np.linalg.norm(y, axis=-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            omega = y / t[..., None]
            return self.polar(np.log(t), omega)

    def value_range(self, r_min):
        """``(inf, sup)`` of the field over ``|y| >= r_min``."""
        raise NotImplementedError

    def describe(self):
        return self.kind


class ZeroFar(FarField):
    kind = "zero"
    decay = math.inf

    def polar(self, log_t, omega):
        return np.zeros(np.shape(log_t))

    def value_range(self, r_min):
        return (0.0, 0.0)


class ConstantFar(FarField):
    kind = "constant"

    def __init__(self, value):
        self.value = float(value)
        self.decay = math.inf if self.value == 0 else 0.0

    def polar(self, log_t, omega):
        return np.full(np.shape(log_t), self.value)

    def value_range(self, r_min):
        return (self.value, self.value)

    def describe(self):
        return f"constant({self.value:g})"


class PowerFar(FarField):
    """``A |y|^-gamma``.  A negative ``gamma`` describes growth."""

    kind = "power"

    def __init__(self, amplitude, gamma):
        self.amplitude = float(amplitude)
        self.gamma = float(gamma)
        self.decay = self.gamma

    def polar(self, log_t, omega):
        return self.amplitude * np.exp(-self.gamma * np.asarray(log_t, dtype=float))

    def value_range(self, r_min):
        edge = self.amplitude * r_min ** (-self.gamma)
        if self.gamma > 0:
            far = 0.0
        elif self.gamma == 0:
            far = self.amplitude
        else:
            far = math.copysign(math.inf, self.amplitude)
        return (min(edge, far), max(edge, far))

    def describe(self):
        return f"power(A={self.amplitude:g}, gamma={self.gamma:g})"


class SignFar(FarField):
    """``B sign(y_1)``: bounded, non-radial exterior data."""

    kind = "sign"
    radial = False

    def __init__(self, bound):
        self.bound = float(bound)
        self.decay = math.inf if self.bound == 0 else 0.0

    def polar(self, log_t, omega):
        return self.bound * np.sign(np.asarray(omega)[..., 0]) + 0.0 * np.asarray(log_t)

    def value_range(self, r_min):
        return (-abs(self.bound), abs(self.bound))

    def describe(self):
        return f"sign(B={self.bound:g})"


class MappedFar(FarField):
    """Pointwise image ``fn(F)`` of another far field.

    ``fn`` must be monotone on the range of the base field, which holds for
    the truncations and shifts used by the estimate checks.
    """

    kind = "mapped"

    def __init__(self, base, fn, label="mapped", decay=None):
        self.base = base
        self.fn = fn
        self.label = label
        self.radial = base.radial
        self.decay = min(base.decay, 0.0) if decay is None else float(decay)

    def polar(self, log_t, omega):
        return self.fn(self.base.polar(log_t, omega))

    def value_range(self, r_min):
        lo, hi = self.base.value_range(r_min)
        lo, hi = np.asarray(self.fn(np.array([lo, hi])), dtype=float)
        return (float(min(lo, hi)), float(max(lo, hi)))

    def describe(self):
        return f"{self.label}[{self.base.describe()}]"


def tail_space_member(far, far_order, far_exponent):
    """Sufficient test for tail-space membership of the far data.

    Bounded fields (zero, constant, sign, decaying powers) always qualify.
    A growing power ``|y|^g`` qualifies when ``g (p - 1) < s p`` for the far
    values of the powers.
    """
    if far.decay >= 0:
        return True
    growth = -far.decay
    return bool(np.all(growth * (np.asarray(far_exponent) - 1.0)
                       < np.asarray(far_order) * np.asarray(far_exponent)))


class ExteriorModel:
    """Collar values on the mesh plus the far field beyond ``R_max``.

    Without explicit collar values the far model is sampled at collar centers.
    """

    def __init__(self, mesh, far, collar_values=None):
        self.mesh = mesh
        self.far = far
        ext = mesh.exterior
        if collar_values is None:
            pts = mesh.centers[ext]
            if np.any(np.linalg.norm(pts, axis=1) == 0) and not isinstance(far, (ZeroFar, ConstantFar)):
                raise ConfigurationError("a collar center sits at the origin; give collar values")
            values = far(pts) if ext.size else np.zeros(0)
        else:
            values = np.asarray(collar_values, dtype=float)
            if values.ndim == 0:
                values = np.full(ext.size, float(values))
        if values.shape != (ext.size,):
            raise ConfigurationError(
                f"expected {ext.size} collar values, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ConfigurationError("collar values must be finite")
        self.collar_values = values

    def value_range(self):
        """``(min, max)`` of the exterior data over collar and far field."""
        lo, hi = self.far.value_range(self.mesh.r_max)
        if self.collar_values.size:
            lo = min(lo, float(self.collar_values.min()))
            hi = max(hi, float(self.collar_values.max()))
        return lo, hi

    def mean(self):
        if self.collar_values.size:
            return float(np.mean(self.collar_values))
        lo, hi = self.far.value_range(self.mesh.r_max)
        return 0.5 * (lo + hi) if np.isfinite(lo + hi) else 0.0

    def discrete(self, interior_values=0.0):
        values = np.zeros(self.mesh.n_cells)
        values[self.mesh.exterior] = self.collar_values
        values[self.mesh.interior] = interior_values
        return DiscreteFunction(self.mesh, values, self.far)

    def scaled(self, factor):
        return ExteriorModel(self.mesh, MappedFar(self.far, lambda f: factor * f,
                                                  f"scale({factor:g})", decay=self.far.decay),
                             factor * self.collar_values)


class DiscreteFunction:
    """Values on every mesh cell (interior and collar) plus the far field."""

    def __init__(self, mesh, values, far=None):
        values = np.array(values, dtype=float)
        if values.shape != (mesh.n_cells,):
            raise ConfigurationError(
                f"expected {mesh.n_cells} cell values, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ConfigurationError("discrete function values must be finite")
        self.mesh = mesh
        self.values = values
        self.values.setflags(write=False)
        self.far = ZeroFar() if far is None else far

    @classmethod
    def from_callable(cls, mesh, fn, far=None):
        return cls(mesh, fn(mesh.centers), far)

    @property
    def interior_values(self):
        return self.values[self.mesh.interior]

    @property
    def exterior_values(self):
        return self.values[self.mesh.exterior]

    def with_interior(self, interior_values):
        values = self.values.copy()
        values[self.mesh.interior] = interior_values
        return DiscreteFunction(self.mesh, values, self.far)

    def map(self, fn, label="mapped", decay=None):
        """Apply an elementwise function to the cell values and the far field."""
        return DiscreteFunction(self.mesh, fn(self.values),
                                MappedFar(self.far, fn, label, decay))

    def exterior_model(self):
        return ExteriorModel(self.mesh, self.far, self.exterior_values)

    def __neg__(self):
        return self.map(np.negative, "neg", decay=self.far.decay)

    def __add__(self, c):
        c = float(c)
        return self.map(lambda v: v + c, f"shift({c:g})")

    def __mul__(self, c):
        c = float(c)
        return self.map(lambda v: c * v, f"scale({c:g})", decay=self.far.decay)

    __rmul__ = __mul__
