"""Emitter parameter record and unit conversions.

Internally every rate is an angular frequency in rad/ns and every time is in
ns. Configuration-facing helpers accept ordinary frequencies in GHz (that is,
rate / 2pi) and detector jitter in ps.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

from .errors import ParameterError

TWO_PI = 2.0 * math.pi


def ghz_to_rad_ns(f_ghz: float) -> float:
    return TWO_PI * f_ghz


def rad_ns_to_ghz(w: float) -> float:
    return w / TWO_PI


def _check_finite(name, value):
    if not math.isfinite(value):
        raise ParameterError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class EmitterParams:
    """Two-level emitter coupled to a waveguide, weakly driven by a cw laser.

    Attributes
    ----------
    gamma_total : float
        Total decay rate Gamma [rad/ns].
    beta : float
        Fraction of the decay going into the waveguide mode.
    gamma_d : float
        Pure dephasing rate [rad/ns].
    delta : float
        Emitter-laser detuning (emitter minus laser) [rad/ns].
    n_photons : float
        Mean number of incident photons per lifetime.
    sigma_sd : float
        Standard deviation of the spectral-diffusion detuning spread [rad/ns].
    sigma_irf : float
        Standard deviation of the Gaussian detector jitter [ns].
    """

    gamma_total: float
    beta: float
    gamma_d: float = 0.0
    delta: float = 0.0
    n_photons: float = 0.0
    sigma_sd: float = 0.0
    sigma_irf: float = 0.0

    def __post_init__(self):
        for f in dataclasses.fields(self):
            _check_finite(f.name, getattr(self, f.name))
        if self.gamma_total <= 0:
            raise ParameterError(f"gamma_total must be > 0, got {self.gamma_total}")
        if not 0.0 <= self.beta <= 1.0:
            raise ParameterError(f"beta must lie in [0, 1], got {self.beta}")
        for name in ("gamma_d", "n_photons", "sigma_sd", "sigma_irf"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be >= 0, got {getattr(self, name)}")

    @classmethod
    def from_ghz(
        cls,
        gamma_ghz,
        beta,
        gamma_d_ghz=0.0,
        delta_ghz=0.0,
        n=0.0,
        sigma_sd_ghz=0.0,
        sigma_irf_ps=0.0,
    ):
        """Build from frequencies quoted as rate/2pi in GHz and jitter in ps."""
        return cls(
            gamma_total=ghz_to_rad_ns(gamma_ghz),
            beta=beta,
            gamma_d=ghz_to_rad_ns(gamma_d_ghz),
            delta=ghz_to_rad_ns(delta_ghz),
            n_photons=n,
            sigma_sd=ghz_to_rad_ns(sigma_sd_ghz),
            sigma_irf=sigma_irf_ps * 1e-3,
        )

    def replace(self, **changes) -> "EmitterParams":
        return dataclasses.replace(self, **changes)

    @property
    def rabi(self) -> float:
        return rabi_from_n(self)

    @property
    def lifetime(self) -> float:
        """Radiative lifetime 1/Gamma [ns]."""
        return 1.0 / self.gamma_total

    def ideal(self) -> "EmitterParams":
        """Same Gamma and drive with every imperfection switched off."""
        return self.replace(beta=1.0, gamma_d=0.0, delta=0.0, sigma_sd=0.0, sigma_irf=0.0)


def rabi_from_n(p: EmitterParams) -> float:
    """Rabi frequency Omega = Gamma * sqrt(2 beta n) [rad/ns]."""
    if p.n_photons == 0:
        return 0.0
    if p.beta == 0:
        raise ParameterError("beta = 0 cannot carry a finite photon flux (n > 0)")
    return p.gamma_total * math.sqrt(2.0 * p.beta * p.n_photons)


def n_from_rabi(omega: float, beta: float, gamma: float) -> float:
    """Inverse of :func:`rabi_from_n`: n = Omega^2 / (2 beta Gamma^2)."""
    if gamma <= 0:
        raise ParameterError(f"gamma must be > 0, got {gamma}")
    if omega < 0:
        raise ParameterError(f"omega must be >= 0, got {omega}")
    if omega == 0:
        return 0.0
    if beta <= 0:
        raise ParameterError("beta = 0 cannot carry a finite photon flux")
    return omega**2 / (2.0 * beta * gamma**2)


# Fitted parameter sets. "filtered" is the notch-filtered g2 data set, "unfiltered"
# the transmission-map characterization.
FILTERED = EmitterParams.from_ghz(
    2.3, 0.96, gamma_d_ghz=0.01, n=0.0024, sigma_sd_ghz=0.16, sigma_irf_ps=100.0
)
UNFILTERED = EmitterParams.from_ghz(
    2.3, 0.92, gamma_d_ghz=0.01, n=0.0024, sigma_sd_ghz=0.39, sigma_irf_ps=100.0
)
TRANSMISSION_MAP_FIT = EmitterParams.from_ghz(2.3, 0.92, gamma_d_ghz=0.01, sigma_sd_ghz=0.39)

PRESETS = {
    "filtered": FILTERED,
    "unfiltered": UNFILTERED,
}
