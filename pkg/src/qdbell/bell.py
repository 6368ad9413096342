"""CHSH correlations from central-peak coincidence rates.

Each interferometer output port is emulated by a second phase setting
shifted by pi, so one correlation value needs four central-peak rates at
zero delay.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegeneracyError, ParameterError
from .franson import center_peak_G2
from .params import EmitterParams

SQRT2 = math.sqrt(2.0)
TSIRELSON = 2.0 * SQRT2


@dataclass(frozen=True)
class ChshSettings:
    """Two phase settings per interferometer; partners sit at +pi.

    With phi_b = pi/4 the second setting phi_b' must be -pi/4 (7pi/4) for
    the four correlations to add up to 2 sqrt(2); the settings
    (0, pi/2, pi/4, 3pi/4) make the CHSH sum cancel identically.
    """

    phi_a: float = 0.0
    phi_a_prime: float = math.pi / 2
    phi_b: float = math.pi / 4
    phi_b_prime: float = 7 * math.pi / 4

    def __post_init__(self):
        for name in ("phi_a", "phi_a_prime", "phi_b", "phi_b_prime"):
            if not math.isfinite(getattr(self, name)):
                raise ParameterError(f"{name} must be finite")

    def pairs(self):
        """The four (phi_a, phi_b) pairs in CHSH order with their signs."""
        return (
            (self.phi_a, self.phi_b, 1),
            (self.phi_a, self.phi_b_prime, 1),
            (self.phi_a_prime, self.phi_b, -1),
            (self.phi_a_prime, self.phi_b_prime, 1),
        )


def _correlations(p: EmitterParams, phi_a, phi_b, tau=0.0):
    """E for arrays of phase pairs from one batched rate evaluation."""
    phi_a = np.atleast_1d(np.asarray(phi_a, dtype=float))
    phi_b = np.atleast_1d(np.asarray(phi_b, dtype=float))
    phi_a, phi_b = np.broadcast_arrays(phi_a, phi_b)
    pi = math.pi
    # ++, --, +-, -+ ports for every pair
    all_a = np.concatenate([phi_a, phi_a + pi, phi_a, phi_a + pi])
    all_b = np.concatenate([phi_b, phi_b + pi, phi_b + pi, phi_b])
    g = center_peak_G2(p, tau=tau, phi_a=all_a, phi_b=all_b).reshape(4, -1)
    total = g.sum(axis=0)
    if np.any(total <= 0):
        raise DegeneracyError("coincidence rates vanish; correlation undefined", point=p)
    return (g[0] + g[1] - g[2] - g[3]) / total


def correlation_E(p: EmitterParams, phi_a, phi_b) -> float:
    """CHSH correlation E(phi_a, phi_b) at zero delay."""
    return float(_correlations(p, phi_a, phi_b)[0])


def chsh_S(p: EmitterParams, s: ChshSettings | None = None) -> float:
    """|E(a,b) + E(a,b') - E(a',b) + E(a',b')| from the full rate model."""
    s = s or ChshSettings()
    pa, pb, sign = (np.array(x, dtype=float) for x in zip(*s.pairs()))
    E = _correlations(p, pa, pb)
    return float(abs(np.sum(sign * E)))


# Closed forms for a single imperfection on resonance, weak drive.


def s_limit_n(n):
    """Exact S versus photon number with beta = 1, no dephasing."""
    n = np.asarray(n, dtype=float)
    if np.any(n < 0):
        raise ParameterError("n must be >= 0")
    return TSIRELSON * (1 - 4 * n) ** 2 / (1 + 8 * n + 32 * n**2)


def s_limit_beta(beta):
    """Exact S versus coupling efficiency for n -> 0, no dephasing."""
    b = np.asarray(beta, dtype=float)
    if np.any((b < 0) | (b > 1)):
        raise ParameterError("beta must lie in [0, 1]")
    return TSIRELSON * (1 - 2 * b) ** 2 / (2 - 8 * b + 10 * b**2 - 4 * b**3 + b**4)


def s_limit_gd(gamma_d, gamma):
    """Exact S versus pure dephasing for beta = 1, n -> 0."""
    gd = np.asarray(gamma_d, dtype=float)
    if gamma <= 0 or np.any(gd < 0):
        raise ParameterError("need gamma > 0 and gamma_d >= 0")
    return TSIRELSON * (gamma - 2 * gd) ** 2 / (gamma**2 + 8 * gd**2 + 4 * gamma * gd)


def s_maclaurin(n, beta, gamma_d, gamma):
    """First-order expansion of S in n, gamma_d and 1 - beta, as published."""
    if gamma <= 0:
        raise ParameterError("gamma must be > 0")
    return (
        TSIRELSON
        + 32 * SQRT2 * (beta - 2) * n
        + gamma_d * (224 * SQRT2 * (4 - 3 * beta) * n / gamma - 16 * SQRT2 * (2 * beta + 3) / gamma)
    )
