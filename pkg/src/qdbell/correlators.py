"""Two-time correlation functions of the transmitted field.

Multi-time expectation values are evaluated with the quantum regression
theorem: operators acting at the earlier time dress the steady state, the
dressed "seed" is propagated with the same coefficient matrix, and the
later-time operators close the trace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import numpy as np

from . import dynamics
from .dynamics import Propagator, field_operator, steady_state, vec
from .errors import DegeneracyError, ParameterError
from .imperfections import average_sd, convolve_irf
from .params import EmitterParams, rabi_from_n


def _product(ops):
    return reduce(np.matmul, ops, dynamics.IDENTITY)


@dataclass(frozen=True)
class RegressionSeed:
    """Operators placed left and right of the steady state at the earlier time."""

    left_ops: tuple = ()
    right_ops: tuple = ()

    def apply(self, rho):
        return _product(self.left_ops) @ rho @ _product(self.right_ops)


class FieldCorrelator:
    """Steady state, field operator and cached propagator for one detuning."""

    def __init__(self, p: EmitterParams, delta=None):
        self.params = p
        self.delta = p.delta if delta is None else float(delta)
        self.M = dynamics.build_liouvillian(p, self.delta)
        self.rho = steady_state(p, self.delta)
        self.a = field_operator(p)
        self.ad = self.a.conj().T
        self.propagator = Propagator(self.M, dynamics.drive_scaling(rabi_from_n(p), p.gamma_total))

    def single(self, left=(), right=()):
        """Tr(L rho R) at a single time."""
        return np.trace(_product(left) @ self.rho @ _product(right))

    def trace(self, seed_left, seed_right, final_left, final_right, tau):
        """Tr(L_final exp(M tau)[L_seed rho R_seed] R_final) for tau >= 0."""
        tau = np.asarray(tau, dtype=float)
        if not np.all(np.isfinite(tau)):
            raise ParameterError("delay must be finite")
        if np.any(tau < 0):
            raise ParameterError("regression delay must be >= 0")
        seed = _product(seed_left) @ self.rho @ _product(seed_right)
        # Tr(L X R) = sum_ij (R L)_ji X_ij
        w = (_product(final_right) @ _product(final_left)).T.reshape(4)
        return self.propagator.expectation(w, vec(seed), tau)

    def bitime(self, late_left, early_left, early_right, late_right, tau):
        """Tr(X(t+tau) Y(t) rho Z(t) W(t+tau)) for either sign of tau.

        Left-of-rho operators are annihilation-type and right-of-rho
        creation-type, so each side may be reordered freely; for tau < 0 the
        roles of the two times are exchanged.
        """
        tau = np.asarray(tau, dtype=float)
        pos = self.trace(early_left, early_right, late_left, late_right, np.abs(tau))
        if np.all(tau >= 0):
            return pos
        neg = self.trace(late_left, late_right, early_left, early_right, np.abs(tau))
        return np.where(tau >= 0, pos, neg)

    def flux(self):
        return self.single([self.a], [self.ad]).real

    def coherent(self):
        return self.single([self.a])

    def intensity_correlation(self, tau):
        """Unnormalized G2(tau) = <a^+(t) a^+(t+tau) a(t+tau) a(t)>, any sign of tau."""
        a, ad = [self.a], [self.ad]
        return self.bitime(a, a, ad, ad, tau).real

    def first_order(self, tau):
        """<a^+(t) a(t+tau)> for tau >= 0."""
        return self.trace([], [self.ad], [self.a], [], tau)


def two_time_trace(p: EmitterParams, seed: RegressionSeed, final_left, final_right, tau):
    """Tr(prod(final_left) exp(M tau)[seed(rho_ss)] prod(final_right))."""
    corr = FieldCorrelator(p)
    return corr.trace(seed.left_ops, seed.right_ops, final_left, final_right, tau)


def flux(p: EmitterParams) -> float:
    """Mean transmitted photon flux Tr(a rho_ss a^+) [photons/ns]."""
    return FieldCorrelator(p).flux()


def _check_driven(p):
    if p.n_photons == 0:
        raise DegeneracyError("transmitted flux is zero for an undriven emitter", point=p)


def g2_hbt(p: EmitterParams, tau):
    """Normalized second-order correlation of the transmitted light.

    Spectral diffusion is averaged in the numerator and in the normalization
    (the tau -> infinity value of the averaged numerator); detector jitter is
    convolved over the delay. Both smearings are linear, so the jitter is
    applied per detuning and one correlator serves each quadrature node.
    """
    _check_driven(p)
    tau_arr = np.atleast_1d(np.asarray(tau, dtype=float))

    def at_detuning(d):
        corr = FieldCorrelator(p, d)
        num = convolve_irf(corr.intensity_correlation, p.sigma_irf, tau_arr)
        return np.append(num, corr.flux() ** 2)

    avg = average_sd(at_detuning, p.sigma_sd, center=p.delta)
    norm = avg[-1]
    if norm <= 0:
        raise DegeneracyError("transmitted flux is zero", point=p)
    out = avg[:-1] / norm
    return out[0] if np.ndim(tau) == 0 else out


@dataclass(frozen=True)
class EmissionSpectrum:
    """Stationary spectrum of the transmitted field.

    ``incoherent`` is the density (per rad/ns) of the inelastic part,
    ``coherent_weight`` the area of the elastic delta line at the laser
    frequency, and ``display`` adds that line as a Gaussian one grid step wide.
    """

    omega: np.ndarray
    incoherent: np.ndarray
    coherent_weight: float
    flux: float
    display: np.ndarray

    @property
    def incoherent_weight(self):
        return self.flux - self.coherent_weight


def incoherent_spectrum(corr: FieldCorrelator, omega):
    """(1/pi) Re int_0^inf e^{i omega tau} [g1(tau) - |<a>|^2] dtau via the resolvent."""
    omega = np.asarray(omega, dtype=float)
    c = corr.coherent()
    seed = vec(corr.rho @ corr.ad) - np.conj(c) * vec(corr.rho)
    w = corr.a.T.reshape(4)  # Tr(a X)
    # Bordered system fixes the solution to the traceless (decaying) subspace.
    K = np.zeros(omega.shape + (5, 5), dtype=complex)
    K[..., :4, :4] = corr.M + 1j * omega[..., None, None] * np.eye(4)
    K[..., :4, 4] = vec(corr.rho)
    K[..., 4, :4] = dynamics.TRACE_ROW
    rhs = np.zeros(omega.shape + (5,), dtype=complex)
    rhs[..., :4] = -seed
    x = np.linalg.solve(K, rhs[..., None])[..., 0]
    return (x[..., :4] @ w).real / math.pi


def emission_spectrum(p: EmitterParams, omega_grid) -> EmissionSpectrum:
    """Emission spectrum on a grid of offsets from the laser frequency [rad/ns].

    The incoherent part is the one-sided Fourier transform of the normally
    ordered first-order correlation with its constant (coherent) part
    removed; it is averaged over spectral diffusion.
    """
    omega = np.asarray(omega_grid, dtype=float)
    if omega.size == 0:
        raise ParameterError("omega grid is empty")
    if not np.all(np.isfinite(omega)):
        raise ParameterError("omega grid must be finite")

    if p.n_photons == 0:
        zeros = np.zeros_like(omega)
        return EmissionSpectrum(omega, zeros, 0.0, 0.0, zeros.copy())

    def parts(d):
        corr = FieldCorrelator(p, d)
        return np.concatenate(
            [incoherent_spectrum(corr, omega), [abs(corr.coherent()) ** 2, corr.flux()]]
        )

    avg = average_sd(parts, p.sigma_sd, center=p.delta)
    inc, coh, fl = avg[:-2], float(avg[-2]), float(avg[-1])
    display = inc.copy()
    if omega.size > 1:
        step = float(np.median(np.diff(np.sort(omega))))
        display += coh * np.exp(-0.5 * (omega / step) ** 2) / (math.sqrt(2 * math.pi) * step)
    return EmissionSpectrum(omega, inc, coh, fl, display)
