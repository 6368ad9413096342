"""Spectral-diffusion averaging and detector-jitter convolution.

Both are Gaussian smearings: spectral diffusion over the emitter detuning,
detector jitter over the coincidence delay.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DegeneracyError, ParameterError

DEFAULT_SD_NODES = 41


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Hermite rule for expectations over a standard normal variable."""

    nodes: tuple
    weights: tuple

    @classmethod
    def gauss_hermite(cls, n_nodes=None):
        n_nodes = DEFAULT_SD_NODES if n_nodes is None else n_nodes
        if n_nodes < 1 or n_nodes % 2 == 0:
            raise ParameterError(f"node count must be a positive odd integer, got {n_nodes}")
        return _gauss_hermite(n_nodes)

    @property
    def size(self):
        return len(self.nodes)


@lru_cache(maxsize=None)
def _gauss_hermite(n_nodes):
    x, w = np.polynomial.hermite_e.hermegauss(n_nodes)
    x[n_nodes // 2] = 0.0
    return QuadratureRule(tuple(x), tuple(w / w.sum()))


def average_sd(f, sigma_sd, rule=None, center=0.0):
    """Average f(delta) over a normal distribution of detunings.

    ``f`` receives a detuning (rad/ns) and may return a scalar or an array;
    arrays are averaged elementwise. With ``sigma_sd == 0`` the result is
    ``f(center)``.
    """
    if sigma_sd < 0 or not math.isfinite(sigma_sd):
        raise ParameterError(f"sigma_sd must be finite and >= 0, got {sigma_sd}")
    if sigma_sd == 0:
        return _checked(f(center))
    rule = rule or QuadratureRule.gauss_hermite()
    total = None
    for x, w in zip(rule.nodes, rule.weights):
        val = _checked(f(center + sigma_sd * x))
        total = w * val if total is None else total + w * val
    return total


def _checked(val):
    arr = np.asarray(val)
    if not np.all(np.isfinite(arr)):
        raise DegeneracyError("integrand is not finite on the quadrature nodes")
    return val


@lru_cache(maxsize=None)
def _legendre(order):
    return np.polynomial.legendre.leggauss(order)


def _irf_sum(g, sigma, tau, breakpoints, width, order, panels):
    x, w = _legendre(order)
    lo = tau - width * sigma
    hi = tau + width * sigma
    cuts = np.stack([lo] + [np.clip(b, lo, hi) for b in sorted(breakpoints)] + [hi], axis=-1)
    frac = np.arange(panels + 1) / panels
    # (ntau, npieces, panels + 1) panel edges; breakpoints are always edges
    edges = cuts[:, :-1, None] + (cuts[:, 1:] - cuts[:, :-1])[..., None] * frac
    left = edges[..., :-1].reshape(len(tau), -1)
    right = edges[..., 1:].reshape(len(tau), -1)
    half = 0.5 * (right - left)
    mid = 0.5 * (right + left)
    t = mid[..., None] + half[..., None] * x  # (ntau, npanel, order)
    kernel = np.exp(-0.5 * ((t - tau[:, None, None]) / sigma) ** 2) / (math.sqrt(2 * math.pi) * sigma)
    kernel /= math.erf(width / math.sqrt(2))  # renormalize the truncated Gaussian
    vals = np.asarray(g(t.reshape(-1)))
    vals = _checked(vals).reshape(t.shape + vals.shape[1:])
    weights = (half[..., None] * w * kernel).reshape(t.shape + (1,) * (vals.ndim - 3))
    return (weights * vals).sum(axis=(1, 2))


def convolve_irf(g, sigma_irf, tau, breakpoints=(0.0,), width=6.0, order=24, tol=1e-10, max_levels=8):
    """Gaussian detector-jitter convolution (P_IRF * g)(tau).

    ``g`` maps a 1-D array of delays to values of shape ``(len(t), ...)``.
    The integral over ``tau +- width * sigma_irf`` uses composite
    Gauss-Legendre panels; points in ``breakpoints`` (kinks of g, e.g. the
    cusp at zero delay) are always panel edges. The panel count doubles
    until successive estimates agree to ``tol`` relative to their magnitude.
    """
    if sigma_irf < 0 or not math.isfinite(sigma_irf):
        raise ParameterError(f"sigma_irf must be finite and >= 0, got {sigma_irf}")
    tau_arr = np.atleast_1d(np.asarray(tau, dtype=float))
    scalar = np.ndim(tau) == 0
    # a window narrower than the float spacing around tau cannot be resolved
    if width * sigma_irf <= np.finfo(float).eps * max(1.0, np.max(np.abs(tau_arr), initial=0.0)):
        out = _checked(np.asarray(g(tau_arr)))
        return out[0] if scalar else out
    prev = _irf_sum(g, sigma_irf, tau_arr, breakpoints, width, order, 1)
    for level in range(1, max_levels + 1):
        cur = _irf_sum(g, sigma_irf, tau_arr, breakpoints, width, order, 2**level)
        scale = max(np.max(np.abs(cur)), np.finfo(float).tiny)
        if np.max(np.abs(cur - prev)) <= tol * scale:
            break
        prev = cur
    return cur[0] if scalar else cur
