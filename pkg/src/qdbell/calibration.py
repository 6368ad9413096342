"""Conversions between measured laser power, Rabi frequency and photon number."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.constants import h as PLANCK

from .errors import ParameterError

DEFAULT_NU_THZ = 318.6702
DEFAULT_TAU_QD_NS = 0.069


@dataclass(frozen=True)
class PowerCalibration:
    """Power-to-drive calibration.

    eta : float
        Loss factor in Omega = 2 sqrt(eta P) [ns^-2 uW^-1].
    nu_thz : float
        Optical frequency of the transition [THz].
    tau_qd : float
        Emitter lifetime used for the pump-power conversion [ns].
    """

    eta: float
    nu_thz: float = DEFAULT_NU_THZ
    tau_qd: float = DEFAULT_TAU_QD_NS

    def __post_init__(self):
        for name in ("eta", "nu_thz", "tau_qd"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ParameterError(f"{name} must be finite and > 0, got {v}")


def _power(P_uW):
    P = np.asarray(P_uW, dtype=float)
    if np.any(P < 0) or not np.all(np.isfinite(P)):
        raise ParameterError("power must be finite and >= 0")
    return P


def rabi_from_power(P_uW, cal: PowerCalibration):
    """Omega = 2 sqrt(eta P) [rad/ns]."""
    return 2.0 * np.sqrt(cal.eta * _power(P_uW))


def n_from_power(P_uW, cal: PowerCalibration, beta, gamma):
    """Photons per lifetime n = Omega^2 / (2 beta Gamma^2) = 2 eta P / (beta Gamma^2)."""
    if beta <= 0 or gamma <= 0:
        raise ParameterError("need beta > 0 and gamma > 0")
    return 2.0 * cal.eta * _power(P_uW) / (beta * gamma**2)


def power_from_n(n, cal: PowerCalibration, beta, gamma):
    """Inverse of :func:`n_from_power` [uW]."""
    n = np.asarray(n, dtype=float)
    if np.any(n < 0):
        raise ParameterError("n must be >= 0")
    if beta <= 0 or gamma <= 0:
        raise ParameterError("need beta > 0 and gamma > 0")
    return n * beta * gamma**2 / (2.0 * cal.eta)


def pump_power_from_n(n, cal: PowerCalibration):
    """Pump power in the waveguide P = n h nu / tau_QD [pW]."""
    n = np.asarray(n, dtype=float)
    if np.any(n < 0):
        raise ParameterError("n must be >= 0")
    watts = n * PLANCK * cal.nu_thz * 1e12 / (cal.tau_qd * 1e-9)
    return watts * 1e12
