"""Single- and two-photon scattering off the waveguide-coupled emitter.

Offsets called ``delta`` here are photon frequencies relative to the emitter
resonance; ``Delta`` in the two-photon functions is the offset of one photon
of a pair from the pump (the other sits at -Delta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import dynamics
from .errors import DegeneracyError, ParameterError
from .imperfections import QuadratureRule, average_sd
from .params import TWO_PI, EmitterParams

DEFAULT_LASER_LINEWIDTH = TWO_PI * 100e-6  # 100 kHz in rad/ns


def reflection_coeff(omega_offset, p: EmitterParams):
    """r = -beta Gamma / (Gamma - 2 i delta)."""
    d = np.asarray(omega_offset, dtype=float)
    return -p.beta * p.gamma_total / (p.gamma_total - 2j * d)


def transmission_coeff(omega_offset, p: EmitterParams):
    """t = 1 + r."""
    return 1.0 + reflection_coeff(omega_offset, p)


@dataclass(frozen=True)
class TwoPhotonSpectrum:
    delta_grid: np.ndarray
    amplitude: np.ndarray

    @property
    def intensity(self):
        return np.abs(self.amplitude) ** 2


def two_photon_amplitude(p: EmitterParams, photon_offset, pump_offset=0.0):
    """Bound-state amplitude T_Delta for a pump ``pump_offset`` from resonance.

    T = 4/(pi beta Gamma) r(dp) r(dp + Delta) r(dp - Delta) with dp the pump
    offset, which on resonance reduces to the Lorentzian
    -4 beta^2 / (pi Gamma (1 + 4 Delta^2 / Gamma^2)).
    """
    D = np.asarray(photon_offset, dtype=float)
    if p.beta == 0:
        return np.zeros(D.shape, dtype=complex)
    r = lambda x: reflection_coeff(x, p)  # noqa: E731
    return 4.0 / (math.pi * p.beta * p.gamma_total) * r(pump_offset) * r(pump_offset + D) * r(pump_offset - D)


def two_photon_spectrum(p: EmitterParams, delta_grid) -> TwoPhotonSpectrum:
    """T_Delta on a grid of photon-pump offsets [rad/ns], pump on resonance."""
    D = np.asarray(delta_grid, dtype=float)
    if not np.all(np.isfinite(D)):
        raise ParameterError("offset grid must be finite")
    G = p.gamma_total
    amp = -4 * p.beta**2 / (math.pi * G * (1 + 4 * D**2 / G**2))
    return TwoPhotonSpectrum(D, amp.astype(complex))


def _peak_normalized(x):
    m = np.max(x)
    return x / m if m > 0 else x


def joint_spectral_intensity(p: EmitterParams, grid_a, grid_b, laser_linewidth=DEFAULT_LASER_LINEWIDTH):
    """Peak-normalized JSI on (Delta_a rows, Delta_b columns) [rad/ns].

    Along the antidiagonal the profile is |T_Delta|^2 at Delta = (Da - Db)/2;
    across it, energy conservation is smeared by a Gaussian pump line of
    FWHM ``laser_linewidth`` in Da + Db.
    """
    Da = np.asarray(grid_a, dtype=float)[:, None]
    Db = np.asarray(grid_b, dtype=float)[None, :]
    if laser_linewidth <= 0:
        raise ParameterError("laser linewidth must be > 0")
    lor = two_photon_spectrum(p, 0.5 * (Da - Db)).intensity
    pump = np.exp(-4 * math.log(2) * ((Da + Db) / laser_linewidth) ** 2)
    return _peak_normalized(lor * pump)


def joint_temporal_intensity(p: EmitterParams, t_grid, t_prime_grid, coherence_time=None):
    """Peak-normalized |A(t, t')|^2 of the scattered pair [ns grids].

    The relative-time dependence exp(-Gamma |t - t'|) is the Fourier
    transform of the Lorentzian amplitude. A finite pump ``coherence_time``
    limits the ridge along t = t' with a Gaussian in (t + t')/2; by default
    the pump is monochromatic and the ridge is flat.
    """
    t = np.asarray(t_grid, dtype=float)[:, None]
    tp = np.asarray(t_prime_grid, dtype=float)[None, :]
    out = np.exp(-p.gamma_total * np.abs(t - tp))
    if coherence_time is not None:
        if coherence_time <= 0:
            raise ParameterError("coherence time must be > 0")
        out = out * np.exp(-0.5 * (0.5 * (t + tp) / coherence_time) ** 2)
    if p.beta == 0:
        return np.zeros(np.broadcast(t, tp).shape)
    return _peak_normalized(out)


def _transmission_rows(gamma, gamma_d, beta, n, detunings):
    """Transmission for one drive strength over many emitter detunings."""
    omega = gamma * math.sqrt(2 * beta * n)
    M = dynamics.liouvillian(gamma, gamma_d, detunings, omega)
    rho = dynamics.unvec(dynamics.steady_state_vectors(M, omega, gamma))
    alpha = dynamics.DRIVE_PHASE * omega / math.sqrt(2 * beta * gamma)
    k = math.sqrt(beta * gamma / 2)
    # a = alpha - k sigma_ge; Tr(a rho a^+) expanded in the (e, g) basis
    ree = rho[..., 0, 0].real
    reg = rho[..., 0, 1]
    flux = abs(alpha) ** 2 - 2 * k * (np.conj(alpha) * reg).real + k**2 * ree
    return flux / abs(alpha) ** 2


def transmission_intensity(p: EmitterParams, detuning=None):
    """Transmitted over incident flux, averaged over spectral diffusion."""
    if p.n_photons <= 0:
        raise ParameterError("transmission needs n > 0")
    if p.beta == 0:
        return 1.0
    center = p.delta if detuning is None else float(detuning)
    return float(
        average_sd(
            lambda d: _transmission_rows(p.gamma_total, p.gamma_d, p.beta, p.n_photons, np.array([d]))[0],
            p.sigma_sd,
            center=center,
        )
    )


def transmission_map(p: EmitterParams, detuning_grid, n_grid, rule=None):
    """Transmission on (n rows, detuning columns); detunings in rad/ns."""
    det = np.asarray(detuning_grid, dtype=float)
    ns = np.asarray(n_grid, dtype=float)
    if det.ndim != 1 or ns.ndim != 1 or det.size == 0 or ns.size == 0:
        raise ParameterError("grids must be non-empty 1-D arrays")
    if not (np.all(np.isfinite(det)) and np.all(np.isfinite(ns))):
        raise ParameterError("grids must be finite")
    if np.any(ns <= 0):
        raise ParameterError("transmission needs n > 0")
    if p.beta == 0:
        return np.ones((ns.size, det.size))
    if p.sigma_sd == 0:
        offsets, weights = np.zeros(1), np.ones(1)
    else:
        rule = rule or QuadratureRule.gauss_hermite()
        offsets = p.sigma_sd * np.asarray(rule.nodes)
        weights = np.asarray(rule.weights)
    # all quadrature nodes of one drive level go through a single batched solve
    shifted = det[None, :] + offsets[:, None]
    out = np.empty((ns.size, det.size))
    for i, n in enumerate(ns):
        rows = _transmission_rows(p.gamma_total, p.gamma_d, p.beta, n, shifted)
        if not np.all(np.isfinite(rows)):
            raise DegeneracyError("transmission is not finite on the quadrature nodes", point=p)
        out[i] = weights @ rows
    return out
