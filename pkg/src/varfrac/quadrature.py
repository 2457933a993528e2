"""Quadrature for integrals over the far region ``|y| > R``.

Writing ``y = R e^tau omega`` turns

    int_{|y|>R} phi(y) |y - z|^-(n + sigma) dy
        = int_0^inf (R e^tau)^-sigma int_S |omega - z e^-tau / R|^-(n + sigma)
              phi(R e^tau omega) dS dtau

into a Laplace-type integral in ``tau``, handled by Gauss-Laguerre with a
rate matched to the decay of the integrand.  Off-centre kernels add graded
Gauss-Legendre panels on ``[0, 1]`` where the kernel factor is sharp.  For
an origin-centred kernel and a pure power ``phi`` the rule is exact.  Weights are returned as
logarithms so the caller can combine them with large or tiny integrands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import hyp2f1, roots_laguerre, roots_legendre

from .errors import DivergenceError

N_TAU = 48
N_ANGLE = 24


@lru_cache(maxsize=None)
def _laguerre(k):
    x, w = roots_laguerre(k)
    return x, w


@lru_cache(maxsize=None)
def _half_circle_rule(k):
    """Gauss-Legendre angles on the two half circles split at ``omega_1 = 0``."""
    x, w = roots_legendre(k)
    first = 0.5 * math.pi * x                 # (-pi/2, pi/2): omega_1 > 0
    second = math.pi + 0.5 * math.pi * x      # (pi/2, 3pi/2): omega_1 < 0
    angles = np.concatenate([first, second])
    weights = np.concatenate([w, w]) * 0.5 * math.pi
    return angles, weights


def sphere_measure(n):
    return 2.0 if n == 1 else 2.0 * math.pi


@dataclass(frozen=True)
class FarNodes:
    """Per-point quadrature nodes: ``int ~= sum_k exp(log_w[m, k]) phi(values[m, k])``."""

    values: np.ndarray   # (M, K) far-field values at the nodes
    log_w: np.ndarray    # (M, K) log weights

    def integrate(self, phi_values):
        return np.sum(np.exp(self.log_w) * phi_values, axis=-1)

    def integrate_power(self, base, q, scale=1.0):
        """``sum_k w_k * scale_m * |base_mk|^q_m`` with ``0^q = 0`` and no overflow."""
        q = np.asarray(q, dtype=float)
        if q.ndim == 1:
            q = q[:, None]
        a = np.abs(base)
        with np.errstate(divide="ignore"):
            logs = q * np.log(np.where(a > 0, a, 1.0)) + self.log_w
        terms = np.where(a > 0, np.exp(logs), 0.0)
        return np.asarray(scale) * pairwise_sum(terms)


def check_rate(rate, what):
    rate = np.asarray(rate, dtype=float)
    if np.any(~(rate > 0)):
        worst = float(np.min(rate))
        raise DivergenceError(
            f"{what}: far-field integral diverges (growth * exponent >= s*p, margin {worst:g})")
    return rate


N_PANEL = 8
T_SPLIT = 1.0


def _graded_panels(rho_max):
    """Gauss-Legendre nodes on ``[0, T_SPLIT]`` graded geometrically toward 0.

    Near ``tau = 0`` the factor ``|omega - z e^-tau / R|^-(n+sigma)`` varies
    on the scale ``1 - |z| / R``; the smallest panel resolves that scale.
    """
    scale = max(1.0 - rho_max, 1e-6) / 4.0
    levels = int(np.clip(math.ceil(math.log2(T_SPLIT / scale)), 1, 24))
    edges = np.concatenate([[0.0], T_SPLIT * 2.0 ** -np.arange(levels, -1, -1)])
    x, w = roots_legendre(N_PANEL)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = (0.5 * (b - a) * x[None, :] + 0.5 * (a + b)).ravel()
    weights = (0.5 * (b - a) * w[None, :]).ravel()
    return nodes, weights


def _tau_rule(r_far, sigma, rate, rho_max, n_tau):
    """``(tau, log_w)`` with ``int_0^inf (R e^tau)^-sigma g(tau) dtau ~ sum exp(log_w) g(tau)``."""
    m = sigma.shape[0]
    xi, wl = _laguerre(n_tau)
    if rho_max <= 0:
        tau = xi[None, :] / rate[:, None]
        log_w = (np.log(wl)[None, :] - np.log(rate)[:, None]
                 + (rate - sigma)[:, None] * tau - sigma[:, None] * math.log(r_far))
        return tau, log_w
    gt, gw = _graded_panels(rho_max)
    head_tau = np.broadcast_to(gt, (m, gt.size))
    head_w = np.log(gw)[None, :] - sigma[:, None] * (head_tau + math.log(r_far))
    tail_tau = T_SPLIT + xi[None, :] / rate[:, None]
    tail_w = (np.log(wl)[None, :] - np.log(rate)[:, None] + xi[None, :]
              - sigma[:, None] * (tail_tau + math.log(r_far)))
    return np.concatenate([head_tau, tail_tau], axis=1), np.concatenate([head_w, tail_w], axis=1)


def kernel_far_nodes(far, r_far, z, sigma, rate, center_kernel=True,
                     n_tau=N_TAU, n_angle=N_ANGLE):
    """Nodes for ``int_{|y|>R} phi(F(y)) |y - z_m|^-(n+sigma_m) dy``.

    Parameters
    ----------
    far : FarField
    r_far : float
        Truncation radius ``R``; every ``|z_m| < R``.
    z : (M, n) array
        Kernel centres.
    sigma : (M,) array
        Kernel exponents ``s p`` frozen at the far values.
    rate : (M,) array
        Exponential rate of the full integrand in ``tau``; ``sigma`` for
        bounded ``phi``, larger when ``phi(F)`` decays.
    center_kernel : bool
        ``False`` replaces ``|y - z|`` by ``1 + |y|`` (the tail-space weight).
    """
    z = np.atleast_2d(np.asarray(z, dtype=float))
    m, n = z.shape
    sigma = np.broadcast_to(np.asarray(sigma, dtype=float), (m,))
    rate = np.broadcast_to(np.asarray(rate, dtype=float), (m,))
    check_rate(rate, "far quadrature")
    rho_max = float(np.max(np.linalg.norm(z, axis=1))) / r_far if center_kernel else 0.0
    tau, base_log_w = _tau_rule(r_far, sigma, rate, rho_max, n_tau)     # (M, T)
    n_tau = tau.shape[1]
    log_t = math.log(r_far) + tau

    if not center_kernel:
        # (t / (1 + t))^(n + sigma) t^-sigma, the sphere integral averaged
        log_ratio = -np.log1p(np.exp(-log_t))
        lw = base_log_w + (n + sigma)[:, None] * log_ratio
        if far.radial or n == 1:
            omega = np.zeros((m, n_tau, n))
            omega[..., 0] = 1.0
            vals = far.polar(log_t, omega)
            if n == 1:
                vals = np.concatenate([vals, far.polar(log_t, -omega)], axis=1)
                return FarNodes(vals, np.concatenate([lw, lw], axis=1))
            return FarNodes(vals, lw + math.log(sphere_measure(n)))
        angles, aw = _half_circle_rule(n_angle)
        omega = np.stack([np.cos(angles), np.sin(angles)], axis=-1)      # (A, 2)
        vals = far.polar(log_t[:, :, None], omega[None, None, :, :])
        lw = lw[:, :, None] + np.log(aw)[None, None, :]
        return FarNodes(vals.reshape(m, -1), lw.reshape(m, -1))

    nu = n + sigma                                                      # (M,)
    if n == 1:
        zeta = z[:, 0][:, None] * np.exp(-tau) / r_far                 # (M, T)
        parts_v, parts_w = [], []
        for sign in (1.0, -1.0):
            omega = np.full((m, n_tau, 1), sign)
            parts_v.append(far.polar(log_t, omega))
            parts_w.append(base_log_w - nu[:, None] * np.log(np.abs(sign - zeta)))
        return FarNodes(np.concatenate(parts_v, axis=1), np.concatenate(parts_w, axis=1))

    if far.radial:
        rho = np.linalg.norm(z, axis=1)[:, None] * np.exp(-tau) / r_far    # (M, T)
        a = 1.0 + rho * rho
        b = 2.0 * rho
        half = 0.5 * nu[:, None]          # exponent of 1 + rho^2 - 2 rho cos(phi)
        ang = 2.0 * math.pi * a ** (-half) * hyp2f1(0.5 * half, 0.5 * half + 0.5, 1.0, (b / a) ** 2)
        omega = np.zeros((m, n_tau, n))
        omega[..., 0] = 1.0
        return FarNodes(far.polar(log_t, omega), base_log_w + np.log(ang))

    angles, aw = _half_circle_rule(n_angle)
    omega = np.stack([np.cos(angles), np.sin(angles)], axis=-1)          # (A, 2)
    scaled = z[:, None, :] * (np.exp(-tau) / r_far)[:, :, None]          # (M, T, 2)
    diff = omega[None, None, :, :] - scaled[:, :, None, :]               # (M, T, A, 2)
    log_dist = 0.5 * np.log(np.sum(diff * diff, axis=-1))
    lw = (base_log_w[:, :, None] + np.log(aw)[None, None, :]
          - nu[:, None, None] * log_dist)
    vals = far.polar(log_t[:, :, None], omega[None, None, :, :])
    return FarNodes(vals.reshape(m, -1), lw.reshape(m, -1))


# --------------------------------------------------------------------------
# deterministic reduction


def pairwise_sum(a, axis=-1):
    """Sum along ``axis`` by a fixed binary tree (pad to even width, add halves).

    The association order depends only on the length of the axis, so the
    result is bit-reproducible whatever the memory layout or row chunking.
    """
    a = np.moveaxis(np.asarray(a, dtype=float), axis, -1)
    if a.shape[-1] == 0:
        return np.zeros(a.shape[:-1])
    while a.shape[-1] > 1:
        w = a.shape[-1]
        if w % 2:
            a = np.concatenate([a, np.zeros(a.shape[:-1] + (1,))], axis=-1)
            w += 1
        a = a[..., : w // 2] + a[..., w // 2:]
    return a[..., 0]
