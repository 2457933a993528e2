"""Both sides of the regularity estimates, evaluated on discrete data.

Every check returns an :class:`InequalityReport` that itemises the
right-hand side as printed.  Terms carrying the unknown constant are kept
in ``rhs_terms`` (each at unit constant); terms without a constant are kept
in ``fixed_terms``.  The fitted constant is the smallest ``c >= 0`` with
``lhs <= c * sum(rhs_terms) + sum(fixed_terms)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .calculus import (_ball_points, _weighted_integral, gagliardo_seminorm, kernel_integral,
                       tail, tail_space_seminorm)
from .errors import ConfigurationError, EmptyBallError
from .exterior import DiscreteFunction
from .mesh import ball_index, power_bounds
from .powers import ConstantField, ball_oscillation, eval_powers
from .quadrature import pairwise_sum

OUTSIDE_N = "outside stated hypothesis n >= 2"


def _fmt(x):
    return format(float(x), ".17g")


@dataclass
class InequalityReport:
    name: str
    lhs: float
    rhs_terms: dict = field(default_factory=dict)
    fixed_terms: dict = field(default_factory=dict)
    gates: list = field(default_factory=list)       # (name, passed, detail)
    params: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    evaluated: bool = True

    @property
    def fitted_c(self):
        if not self.evaluated:
            return math.nan
        scaled = float(sum(self.rhs_terms.values()))
        excess = float(self.lhs) - float(sum(self.fixed_terms.values()))
        if excess <= 0:
            return 0.0
        if scaled <= 0:
            return math.inf
        return excess / scaled

    @property
    def gates_passed(self):
        return all(ok for _, ok, _ in self.gates)

    @property
    def finite(self):
        vals = [self.lhs, *self.rhs_terms.values(), *self.fixed_terms.values()]
        return self.evaluated and all(np.isfinite(v) for v in vals)

    @property
    def status(self):
        if not (self.gates_passed and self.finite and np.isfinite(self.fitted_c)):
            return "FAIL"
        return "INFO" if self.notes else "PASS"

    def holds(self, c):
        return self.lhs <= c * sum(self.rhs_terms.values()) + sum(self.fixed_terms.values())

    def to_row(self):
        terms = {**self.rhs_terms, **{f"{k}*": v for k, v in self.fixed_terms.items()}}
        return {
            "check": self.name,
            "params": ";".join(f"{k}={_param(v)}" for k, v in sorted(self.params.items())),
            "lhs": _fmt(self.lhs),
            "rhs_terms": ";".join(f"{k}={_fmt(v)}" for k, v in terms.items()),
            "fitted_c": _fmt(self.fitted_c),
            "gates": ";".join(f"{g}:{'PASS' if ok else 'FAIL'}" for g, ok, _ in self.gates),
            "status": self.status,
        }


def _param(v):
    if isinstance(v, (list, tuple, np.ndarray)):
        return "(" + ",".join(_param(x) for x in np.ravel(v)) + ")"
    if isinstance(v, (float, np.floating)):
        return _fmt(v)
    return str(v)


def _note_dimension(report, n):
    if n < 2:
        report.notes.append(OUTSIDE_N)
    return report


def _unpack(result):
    pb = result.problem
    return result.solution, pb.mesh, pb.order, pb.exponent, pb.kernel


def omega(field_, mesh, r):
    """Sampled modulus over balls ``B_r`` inside the box; all interior pairs if none fits."""
    pts = mesh.centers[mesh.interior]
    try:
        return ball_oscillation(field_, pts, mesh.lo, mesh.hi, r)
    except ConfigurationError:
        vals = field_.raw(pts[:, None, :], pts[None, :, :])
        return float(vals.max() - vals.min())


def _compact_inside(mesh, x0, radius):
    x0 = np.asarray(x0, dtype=float)
    return bool(np.all(x0 - radius > mesh.lo - 1e-12) and np.all(x0 + radius < mesh.hi + 1e-12))


# --------------------------------------------------------------------------
# iteration lemma and algebraic inequality


@dataclass(frozen=True)
class IterationResult:
    threshold: float
    sequence: tuple
    converged: bool
    diverged: bool


def degiorgi_iterate(b1, b2, beta, y0, cap=50):
    """Iterate ``y_{i+1} = b1 b2^i y_i^(1+beta)`` for ``cap`` steps."""
    if not (b1 > 0 and b2 > 1 and beta > 0 and y0 >= 0):
        raise ValueError("need b1 > 0, b2 > 1, beta > 0 and y0 >= 0")
    threshold = b1 ** (-1.0 / beta) * b2 ** (-1.0 / beta ** 2)
    seq = [float(y0)]
    diverged = False
    y = float(y0)
    for i in range(int(cap)):
        try:
            y = b1 * b2 ** i * y ** (1.0 + beta)
        except OverflowError:
            y = math.inf
        if not math.isfinite(y):
            diverged = True
            seq.append(math.inf)
            break
        seq.append(y)
    converged = (not diverged) and seq[-1] < 1e-10
    return IterationResult(threshold, tuple(seq), converged, diverged)


def algebraic_inequality_check(p, a, b, eps):
    """``a^p - b^p <= eps a^p + ((p-1)/eps)^(p-1) (a-b)^p`` for ``a >= b >= 0``."""
    if not (p > 1 and a >= b >= 0 and eps > 0):
        raise ValueError("need p > 1, a >= b >= 0 and eps > 0")
    lhs = a ** p - b ** p
    t1 = eps * a ** p
    t2 = ((p - 1.0) / eps) ** (p - 1.0) * (a - b) ** p
    report = InequalityReport("algebraic", lhs, fixed_terms={"eps_a^p": t1, "young": t2},
                              params={"p": p, "a": a, "b": b, "eps": eps})
    # rounding of the two sides only
    tol = 8 * np.finfo(float).eps * max(a ** p, t1 + t2)
    report.gates.append(("printed-inequality", bool(lhs <= t1 + t2 + tol), ""))
    return report


# --------------------------------------------------------------------------
# embedding and Sobolev-Poincare


def _region(mesh, region):
    if region is None:
        return mesh.interior, mesh.diameter
    return region.cells, min(2.0 * region.radius, mesh.diameter)


def embedding_check(v: DiscreteFunction, region, s1, s2, p1, p2):
    """Lower-order seminorm controlled by a higher-order one plus the support size."""
    mesh = v.mesh
    cells, diam = _region(mesh, region)
    x = mesh.centers[cells][:, None, :]
    y = mesh.centers[cells][None, :, :]
    gap = eval_powers(s2, x, y) - eval_powers(s1, x, y)
    q1 = eval_powers(p1, x, y)
    if np.any(gap <= 0):
        raise ConfigurationError("embedding check needs s1 < s2 everywhere")
    if np.any(q1 > eval_powers(p2, x, y)):
        raise ConfigurationError("embedding check needs p1 <= p2 everywhere")
    d1, d2 = float(gap.min()), float(gap.max())
    p1_lo, p1_hi = float(q1.min()), float(q1.max())
    big_m = diam ** (d1 * p1_lo) if diam <= 1 else diam ** (d2 * p1_hi)
    lhs = gagliardo_seminorm(v, cells, s1, p1).value
    rho2 = gagliardo_seminorm(v, cells, s2, p2).value
    support = float(np.count_nonzero(v.values[cells] != 0) * mesh.measure)
    report = InequalityReport(
        "embedding", lhs,
        rhs_terms={"support": big_m * support / (d1 * p1_lo)},
        fixed_terms={"M*rho2": big_m * rho2},
        params={"d1": d1, "d2": d2, "diam": diam, "M": big_m})
    return _note_dimension(report, mesh.n)


def sobolev_poincare_check(v: DiscreteFunction, ball, s, p, t=None, q=None):
    """Fractional Sobolev-Poincare inequality on a ball with constant powers."""
    mesh = v.mesh
    n = mesh.n
    s, p = float(s), float(p)
    if not 0 < s < 1:
        raise ConfigurationError("Sobolev-Poincare check needs 0 < s < 1")
    if s * p >= n:
        raise ConfigurationError(f"Sobolev-Poincare check needs s p < n (s p = {s * p:g}, n = {n})")
    cells = ball.cells
    radius = ball.radius if np.isfinite(ball.radius) else 0.5 * mesh.diameter
    vol = cells.size * mesh.measure
    p_star = n * p / (n - s * p)
    vals = v.values[cells]
    mean_dev = float(np.mean(np.abs(vals - np.mean(vals)) ** p_star))

    def averaged(order_, exp_):
        rho = gagliardo_seminorm(v, cells, ConstantField("order", order_),
                                 ConstantField("exponent", exp_)).value
        return rho / vol

    first = InequalityReport("sobolev_poincare", mean_dev ** (p / p_star),
                             rhs_terms={"r^sp*avg": radius ** (s * p) * averaged(s, p)},
                             params={"s": s, "p": p, "p_star": p_star, "r": radius})
    _note_dimension(first, n)
    if t is None and q is None:
        return first
    t, q = float(t), float(q)
    if not (s < t < 1 and q > p):
        raise ConfigurationError("second form needs s < t < 1 and q > p")
    second = InequalityReport("sobolev_poincare_tq", mean_dev ** (q / p_star),
                              rhs_terms={"r^tq*avg": radius ** (t * q) * averaged(t, q)},
                              params={"s": s, "p": p, "t": t, "q": q, "p_star": p_star,
                                      "r": radius})
    return first, _note_dimension(second, n)


# --------------------------------------------------------------------------
# Caccioppoli and logarithmic estimates


def _truncation(u, k, sign):
    if sign > 0:
        return u.map(lambda w: np.maximum(w - k, 0.0), f"(u-{k:g})+")
    return u.map(lambda w: np.maximum(k - w, 0.0), f"(u-{k:g})-")


def caccioppoli_check(result, x0, rho, r, k, sign=1, form="final"):
    """Caccioppoli inequality for the truncations ``w = (u - k)_+-``.

    ``form="final"`` evaluates the last printed right-hand side (level-set
    mass and tail); ``form="intermediate"`` the homogeneous middle one.
    The cross term on the left uses ``(k - u(y))_+-`` exactly as printed.
    """
    u, mesh, order, exponent, kernel = _unpack(result)
    if not 0 < rho < r:
        raise ValueError("need 0 < rho < r")
    sign = 1 if sign > 0 else -1
    x0 = np.asarray(x0, dtype=float).reshape(mesh.n)
    w = _truncation(u, k, sign)
    cross = u.map(lambda v: np.maximum(sign * (k - v), 0.0), "(k-u)")
    ball_rho = ball_index(mesh, x0, rho, order, exponent, doubling=1.0)
    ball_r = ball_index(mesh, x0, r, order, exponent, doubling=1.0)
    s2, p1, p2 = ball_r.s_hi, ball_r.p_lo, ball_r.p_hi
    n = mesh.n
    m = mesh.measure

    semi = gagliardo_seminorm(w, ball_rho, order, exponent).value
    wv = w.values[ball_rho.cells]
    if np.any(wv > 0):
        inner = kernel_integral(cross, ball_rho.cells, order, exponent, shift=-1.0)
        cross_term = float(pairwise_sum(wv * inner) * m)
    else:
        cross_term = 0.0
    lhs = semi + cross_term

    w_r = w.values[ball_r.cells]
    if form == "final":
        level = w_r > 0
        mass = float(pairwise_sum(np.where(level, w_r ** p2 + 1.0, 0.0)) * m)
        t1 = r ** (p2 - s2 * p2) / (r - rho) ** p2 * mass
        tw = tail(w, x0, r, r, order, exponent)
        t2 = (r / (r - rho)) ** (n + s2 * p2) * tw.value * float(pairwise_sum(w_r) * m)
        terms, fixed = {"level_set": t1, "tail": t2}, {}
    elif form == "intermediate":
        x = mesh.centers[ball_r.cells]
        s_, p_, = eval_powers(order, x[:, None], x[None]), eval_powers(exponent, x[:, None], x[None])
        dist = np.linalg.norm(x[:, None] - x[None], axis=-1)
        big = np.maximum(w_r[:, None], w_r[None, :])
        with np.errstate(divide="ignore"):
            kern = np.where(dist > 0, np.power(np.where(dist > 0, dist, 1.0),
                                               -(n + s_ * p_ - p1)), 0.0)
        t1 = float(pairwise_sum(pairwise_sum(big ** p_ * kern))) * m * m / (r - rho) ** p1
        include = np.broadcast_to(np.linalg.norm(mesh.centers - x0, axis=1) >= r,
                                  (x.shape[0], mesh.n_cells))
        quad, analytic = _weighted_integral(w, x, np.broadcast_to(x0, x.shape), order, exponent,
                                            include, -1.0, x0)
        t2 = (r / (r - rho)) ** (n + s2 * p2) * float(pairwise_sum(w_r * (quad + analytic)) * m)
        # the energy term is printed without the constant
        terms, fixed = {"tail": t2}, {"energy": t1}
    else:
        raise ValueError(f"unknown form {form!r}")

    report = InequalityReport(
        f"caccioppoli{'+' if sign > 0 else '-'}" + ("" if form == "final" else "_mid"), lhs,
        rhs_terms=terms, fixed_terms=fixed,
        params={"x0": x0, "rho": rho, "r": r, "k": k, "s2": s2, "p2": p2,
                "seminorm": semi, "cross": cross_term})
    wp = omega(exponent, mesh, r)
    bound = (1.0 - order.upper) * exponent.lower / (2.0 * order.upper)
    report.gates.append(("r<=1/2", r <= 0.5, f"r = {r:g}"))
    report.gates.append(("omega_p<=(1-s+)p-/(2s+)", wp <= bound, f"{wp:g} <= {bound:g}"))
    report.gates.append(("B_2r-inside", _compact_inside(mesh, x0, 2 * r), ""))
    return _note_dimension(report, n)


def log_estimate_check(result, x0, rho, r, d, a=None, b=math.e):
    """Logarithmic estimate and its truncated-log corollary for ``u >= 0`` on ``B_r``.

    Returns ``(lemma_report, corollary_report)``.
    """
    u, mesh, order, exponent, kernel = _unpack(result)
    n = mesh.n
    x0 = np.asarray(x0, dtype=float).reshape(mesh.n)
    if not 0 < rho < r / 2:
        raise ValueError("need 0 < rho < r/2")
    if d <= 0:
        raise ValueError("need d > 0")
    ball_r = ball_index(mesh, x0, r, order, exponent, doubling=1.0)
    if np.any(u.values[ball_r.cells] < 0):
        raise ValueError("log estimate needs u >= 0 on B_r")
    ball_rho = ball_index(mesh, x0, rho, order, exponent, doubling=2.0)
    s1, s2, p1, p2 = ball_rho.s_lo, ball_rho.s_hi, ball_rho.p_lo, ball_rho.p_hi
    s3, s4, p3, p4 = ball_r.s_lo, ball_r.s_hi, ball_r.p_lo, ball_r.p_hi
    cells = ball_rho.cells
    x = mesh.centers[cells]
    vals = u.values[cells]
    logs = np.log(d + vals)
    diff = logs[:, None] - logs[None, :]
    s_ = eval_powers(order, x[:, None], x[None])
    p_ = eval_powers(exponent, x[:, None], x[None])
    dist = np.linalg.norm(x[:, None] - x[None], axis=-1)
    theta = kernel.theta(x[:, None], x[None])
    with np.errstate(divide="ignore"):
        kern = np.where(dist > 0, theta * np.power(np.where(dist > 0, dist, 1.0), -(n + s_ * p_)),
                        0.0)
    lhs = float(pairwise_sum(pairwise_sum(np.abs(diff) ** p2 * kern))) * mesh.measure ** 2

    sup_r = float(np.max(np.abs(u.values[ball_r.cells])))
    shifted = u.map(lambda v: np.maximum(-v, 0.0) + sup_r, "u-+|u|")
    tv = tail(shifted, x0, r, 2 * rho, order, exponent).value
    dd = max(d, 1.0 / d) ** (p4 - p3)
    lemma = InequalityReport(
        "log_estimate", lhs,
        rhs_terms={"rho_term": rho ** (n - s2 * p1 + p1 - p2),
                   "d_term": dd * rho ** (n - s4 * p4),
                   "tail": rho ** n / d ** (p2 - 1) * tv},
        params={"x0": x0, "rho": rho, "r": r, "d": d, "s1": s1, "s2": s2, "s3": s3, "s4": s4,
                "p1": p1, "p2": p2, "p3": p3, "p4": p4})
    interior_sup = float(np.max(np.abs(u.interior_values)))
    wp = omega(exponent, mesh, r)
    bound = math.log(2.0) / math.log(1.0 + interior_sup) if interior_sup > 0 else math.inf
    gate = ("omega_p<=ln2/ln(1+|u|)", wp <= bound, f"{wp:g} <= {bound:g}")
    lemma.gates.append(gate)
    lemma.gates.append(("r<1", r < 1, f"r = {r:g}"))

    a = float(np.max(vals)) if a is None else float(a)
    if not (a > 0 and b > 1):
        raise ValueError("corollary needs a > 0 and b > 1")
    v = np.minimum(np.maximum(math.log(a + d) - np.log(vals + d), 0.0), math.log(b))
    mean_dev = float(np.mean(np.abs(v - np.mean(v)) ** p2))
    corollary = InequalityReport(
        "log_corollary", mean_dev,
        rhs_terms={"rho_term": rho ** ((s1 - s2) * p1 + p1 - p2),
                   "d_term": dd * rho ** (s1 * p1 - s4 * p4),
                   "tail": rho ** (s1 * p1) / d ** (p2 - 1) * tv},
        params={"x0": x0, "rho": rho, "r": r, "d": d, "a": a, "b": b})
    corollary.gates.extend(lemma.gates)
    return _note_dimension(lemma, n), _note_dimension(corollary, n)


# --------------------------------------------------------------------------
# local boundedness


def linf_parameters(s_minus, p2, n):
    """``sigma = max(2 s- - 1, 3 s- / 4)`` and ``sigma_0 = sigma p2 / n``."""
    sigma = max(2.0 * s_minus - 1.0, 0.75 * s_minus)
    return sigma, sigma * p2 / n


def linf_bound_check(result, x0, r, delta=1.0):
    """Sup of ``|u|`` on ``B_{r/2}`` against the local boundedness estimate."""
    u, mesh, order, exponent, kernel = _unpack(result)
    n = mesh.n
    if not 0 < delta <= 1:
        raise ValueError("need 0 < delta <= 1")
    x0 = np.asarray(x0, dtype=float).reshape(mesh.n)
    s_lo, s2_, p1, p2 = power_bounds(mesh, x0, 2 * r, order, exponent)
    s2 = s2_
    sigma, sigma0 = linf_parameters(order.lower, p2, n)
    positivity = 1.0 - p2 / p1 + sigma0
    half = ball_index(mesh, x0, r / 2, order, exponent)
    ball_r = ball_index(mesh, x0, r, order, exponent, doubling=1.0)
    lhs = float(np.max(np.abs(u.values[half.cells])))
    params = {"x0": x0, "r": r, "delta": delta, "sigma": sigma, "sigma0": sigma0,
              "p1": p1, "p2": p2, "s2": s2}
    wp = omega(exponent, mesh, r)
    s_minus, s_plus, p_minus = order.lower, order.upper, exponent.lower
    g42 = (1.0 - s_plus) * p_minus / (2.0 * s_plus)
    g51 = min(s_minus / 4.0, 3.0 * s_minus * p_minus ** 2 / (4.0 * n), p_minus / 4.0)
    gates = [("r<=1/2", r <= 0.5, f"r = {r:g}"),
             ("omega_p<=(1-s+)p-/(2s+)", wp <= g42, f"{wp:g} <= {g42:g}"),
             ("omega_p<=min(s-/4,3s-p-^2/(4n),p-/4)", wp <= g51, f"{wp:g} <= {g51:g}"),
             ("exponent-positivity", positivity > 0, f"1 - p2/p1 + sigma0 = {positivity:g}"),
             ("B_2r-inside", _compact_inside(mesh, x0, 2 * r), "")]
    if positivity <= 0:
        report = InequalityReport("linf_bound", lhs, gates=gates, params=params, evaluated=False)
        return _note_dimension(report, n)
    expo = sigma0 / (p2 * positivity)
    avg = float(np.mean(np.abs(u.values[ball_r.cells]) ** p2))
    bracket = delta ** (-(p2 - 1) / sigma0) * r ** ((sigma * p1 - s2 * p2) / sigma0) * avg
    tv = tail(u.map(np.abs, "|u|"), x0, r / 2, r, order, exponent).value
    report = InequalityReport(
        "linf_bound", lhs,
        rhs_terms={"average": bracket ** expo},
        fixed_terms={"tail": delta * (r ** (s2 * p2) * tv) ** (1.0 / (p2 - 1)),
                     "delta": delta ** ((p2 - 1) / p2)},
        gates=gates, params=params)
    return _note_dimension(report, n)


# --------------------------------------------------------------------------
# oscillation decay


@dataclass
class OscillationProfile:
    center: tuple
    r: float
    sigma: float
    radii: np.ndarray
    theta: np.ndarray
    counts: np.ndarray
    k0: float
    alpha: float
    alpha_defined: bool
    alpha_bound: float
    warnings: list = field(default_factory=list)
    min_cells: int = 4

    @property
    def k_j(self):
        alpha = self.alpha if self.alpha_defined else 0.0
        return self.sigma ** (alpha * np.arange(self.radii.size)) * self.k0

    @property
    def nonincreasing(self):
        return bool(np.all(np.diff(self.theta) <= 0))

    @property
    def decay_holds(self):
        return bool(self.alpha_defined and np.all(self.theta <= self.k_j))

    @property
    def bounded_by_sup(self):
        return bool(self.theta.size == 0 or self.theta[0] <= self.k0)

    def to_report(self):
        ratio = float(np.max(self.theta / self.k_j)) if self.theta.size else math.nan
        report = InequalityReport(
            "oscillation", ratio, rhs_terms={"max_theta_over_K": 1.0},
            params={"x0": np.array(self.center), "r": self.r, "sigma": self.sigma,
                    "alpha": self.alpha, "alpha_bound": self.alpha_bound, "K0": self.k0,
                    "rungs": int(self.radii.size)},
            notes=list(self.warnings))
        report.gates.append(("alpha-defined", self.alpha_defined, ""))
        report.gates.append(("alpha>0", self.alpha_defined and self.alpha > 0, f"{self.alpha:g}"))
        report.gates.append(("theta-nonincreasing", self.nonincreasing, ""))
        report.gates.append(("theta<=sigma^(alpha j)K0", self.decay_holds, ""))
        return report


def oscillation_profile(result, x0, r, sigma, length=None, min_cells=4):
    """Oscillation of ``u`` on the ladder ``B_{r_j}``, ``r_j = sigma^j r / 2``."""
    u, mesh, order, exponent, kernel = _unpack(result)
    if not 0 < sigma < 0.25:
        raise ValueError("sigma must lie in (0, 1/4)")
    x0 = np.asarray(x0, dtype=float).reshape(mesh.n)
    interior = mesh.interior
    dist = np.linalg.norm(mesh.centers[interior] - x0, axis=1)
    radii, theta, counts, warnings = [], [], [], []
    j = 0
    while length is None or j < length:
        rj = sigma ** j * r / 2.0
        cells = interior[dist < rj]
        if cells.size < min_cells:
            warnings.append(f"ladder truncated at j = {j}: {cells.size} cells < {min_cells}")
            break
        vals = u.values[cells]
        radii.append(rj)
        theta.append(float(vals.max() - vals.min()))
        counts.append(cells.size)
        j += 1
    radii, theta = np.array(radii), np.array(theta)
    _, ball_r = _ball_points(mesh, x0, r)
    sup_r = float(np.max(np.abs(u.values[ball_r])))
    s0 = float(order.raw(x0, x0))
    p0 = float(exponent.raw(x0, x0))
    shifted = u.map(lambda v: np.abs(v) + sup_r, "|u|+|u|_inf")
    tv = tail(shifted, x0, r, r, order, exponent).value
    k0 = 2.0 * sup_r + (r ** (s0 * p0) * tv) ** (1.0 / (exponent.lower - 1.0)) + 1.0
    positive = theta > 0
    alpha, defined = math.nan, False
    if radii.size >= 3 and np.all(positive):
        slope = np.polyfit(np.log(radii), np.log(theta), 1)[0]
        alpha, defined = float(slope), True
    elif radii.size < 3:
        warnings.append(f"alpha undefined: {radii.size} populated rungs (< 3)")
    else:
        warnings.append("alpha undefined: zero oscillation on a rung")
    bound = alpha_bound(order.lower, order.upper, exponent.lower, exponent.upper, sigma)
    return OscillationProfile(tuple(float(c) for c in x0), float(r), float(sigma), radii, theta,
                              np.array(counts), k0, alpha, defined, bound, warnings, min_cells)


def alpha_bound(s_minus, s_plus, p_minus, p_plus, sigma):
    """Admissible Hoelder exponent bound."""
    ln_sigma = math.log(sigma)
    terms = (s_minus * p_minus / (2.0 * (p_plus - 1.0)),
             math.log(0.5) / ln_sigma,
             math.log(1.0 - sigma ** (s_plus * p_plus / (p_plus - 1.0))) / ln_sigma,
             s_minus)
    return float(min(terms))


def sigma_bound(s_minus, p_minus, p_plus):
    return 6.0 ** (-4.0 * (p_plus - 1.0) / (s_minus * p_minus))


@dataclass
class GateReport:
    name: str
    values: dict
    gates: list = field(default_factory=list)
    params: dict = field(default_factory=dict)

    @property
    def status(self):
        return "PASS" if all(ok for _, ok, _ in self.gates) else "FAIL"

    def to_row(self):
        return {
            "check": self.name,
            "params": ";".join(f"{k}={_param(v)}" for k, v in sorted(self.params.items())),
            "lhs": "nan",
            "rhs_terms": ";".join(f"{k}={_fmt(v)}" for k, v in self.values.items()),
            "fitted_c": "nan",
            "gates": ";".join(f"{g}:{'PASS' if ok else 'FAIL'}" for g, ok, _ in self.gates),
            "status": self.status,
        }


def alpha_sigma_gates(order, exponent, sigma, r=None, result=None):
    """Admissible ``alpha`` and ``sigma`` bounds, and the radius gates when data are given."""
    s_minus, s_plus = order.lower, order.upper
    p_minus, p_plus = exponent.lower, exponent.upper
    a_bound = alpha_bound(s_minus, s_plus, p_minus, p_plus, sigma)
    s_bound = sigma_bound(s_minus, p_minus, p_plus)
    g42 = (1.0 - s_plus) * p_minus / (2.0 * s_plus)
    values = {"alpha_bound": a_bound, "sigma_bound": s_bound, "caccioppoli_omega_bound": g42}
    report = GateReport("alpha_sigma", values, params={"sigma": sigma})
    report.gates.append(("sigma<=6^(-4(p+-1)/(s-p-))", sigma <= s_bound, f"{sigma:g} <= {s_bound:g}"))
    if r is not None:
        report.params["r"] = r
        r_bound = sigma ** (s_plus * p_plus / (s_minus * (p_plus - 1.0)) - 1.0)
        values["r_bound"] = r_bound
        report.gates.append(("r<=sigma^(s+p+/(s-(p+-1))-1)", r <= r_bound, f"{r:g} <= {r_bound:g}"))
    if result is not None and r is not None:
        u, mesh, *_ = _unpack(result)
        wp = omega(exponent, mesh, r)
        ws = omega(order, mesh, r)
        tail_sem = tail_space_seminorm(u, order, exponent).value
        sup_u = float(np.max(np.abs(u.interior_values)))
        r_omega = float(np.max(np.linalg.norm(mesh.centers[mesh.interior], axis=1)))
        big = tail_sem + sup_u + 1.0 / sigma + r_omega
        omega_bound = min(s_minus * p_minus / (2.0 * s_plus), (1.0 - s_plus) * p_minus,
                          math.log(2.0) / math.log(big) if big > 1 else math.inf)
        values.update({"omega_p": wp, "omega_s": ws, "omega_p_bound": omega_bound,
                       "omega_s_bound": math.log(2.0) / math.log(1.0 / sigma)})
        report.gates.append(("omega_p-smallness", wp <= omega_bound, f"{wp:g} <= {omega_bound:g}"))
        report.gates.append(("omega_s<=ln2/ln(1/sigma)", ws <= values["omega_s_bound"], ""))
    return report


__all__ = [
    "InequalityReport", "IterationResult", "OscillationProfile", "GateReport", "degiorgi_iterate",
    "algebraic_inequality_check", "embedding_check", "sobolev_poincare_check",
    "caccioppoli_check", "log_estimate_check", "linf_bound_check", "linf_parameters",
    "oscillation_profile", "alpha_sigma_gates", "alpha_bound", "sigma_bound", "omega",
    "EmptyBallError",
]
