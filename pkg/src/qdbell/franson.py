"""Coincidences behind a pair of unbalanced Mach-Zehnder interferometers.

Each photon of a transmitted pair passes an interferometer with a short and
a long arm; the long arm adds a delay and a phase (phi_a or phi_b). The
coincidence histogram then shows three peaks: a central one at zero delay,
where the short-short and long-long paths interfere, and two side peaks at
plus and minus the interferometer delay.

All coincidence rates are given up to a global positive constant: the
beamsplitter prefactors are dropped because every shipped observable is a
ratio or is reported in arbitrary units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .correlators import FieldCorrelator
from .errors import DegeneracyError, ParameterError
from .imperfections import average_sd, convolve_irf
from .params import EmitterParams

DEFAULT_DELAY_NS = 3.6
VISIBILITY_POINTS = 64
PEAK_LABELS = ("side_minus", "center", "side_plus")


def reduce_phase(phi):
    """Map an angle onto [0, 2pi)."""
    phi = np.asarray(phi, dtype=float)
    if not np.all(np.isfinite(phi)):
        raise ParameterError("interferometer phases must be finite")
    out = np.mod(phi, 2 * math.pi)
    # mod can round up to exactly 2pi for tiny negative inputs
    out = np.where(out >= 2 * math.pi, 0.0, out)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class PhasePair:
    """Long-arm phases of the two interferometers, stored in [0, 2pi)."""

    phi_a: float
    phi_b: float

    def __post_init__(self):
        object.__setattr__(self, "phi_a", reduce_phase(self.phi_a))
        object.__setattr__(self, "phi_b", reduce_phase(self.phi_b))

    def orthogonal(self):
        """Phases of the complementary output ports (both shifted by pi)."""
        return PhasePair(self.phi_a + math.pi, self.phi_b + math.pi)


@dataclass(frozen=True)
class CoincidenceCurve:
    tau_grid: np.ndarray
    values: np.ndarray
    peak_label: str

    def __post_init__(self):
        if self.peak_label not in PEAK_LABELS:
            raise ParameterError(f"unknown peak label {self.peak_label!r}")
        if np.any(np.diff(self.tau_grid) <= 0):
            raise ParameterError("tau grid must be strictly increasing")

    def area(self):
        return float(np.trapezoid(self.values, self.tau_grid))


@dataclass(frozen=True)
class FransonTraces:
    """Single- and two-time traces entering the factored coincidence rates.

    Two-time traces are evaluated at delay ``tau`` (later time t' = t + tau,
    either sign). Naming, with rho the steady state:

    ``T1``  Tr(a(t') a(t) rho a(t)^+ a(t')^+)
    ``F``   Tr(a rho a^+), ``c`` Tr(a rho), ``cb`` Tr(rho a^+)
    ``Pp``  Tr(a(t') a(t) rho), ``Pq`` Tr(rho a(t)^+ a(t')^+)
    ``G1a`` Tr(a(t') rho a(t)^+), ``G1b`` Tr(a(t) rho a(t')^+)
    ``Ka``  Tr(a(t) rho a(t)^+ a(t')^+), ``Kb`` Tr(a(t') a(t) rho a(t)^+)
    ``Kc``  Tr(a(t') rho a(t)^+ a(t')^+), ``Kd`` Tr(a(t') a(t) rho a(t')^+)
    """

    T1: np.ndarray
    F: float
    c: complex
    cb: complex
    Pp: np.ndarray
    Pq: np.ndarray
    G1a: np.ndarray
    G1b: np.ndarray
    Ka: np.ndarray
    Kb: np.ndarray
    Kc: np.ndarray
    Kd: np.ndarray

    @classmethod
    def compute(cls, corr: FieldCorrelator, tau):
        a, ad = [corr.a], [corr.ad]
        bt = corr.bitime
        return cls(
            T1=bt(a, a, ad, ad, tau).real,
            F=corr.flux(),
            c=corr.single(a, []),
            cb=corr.single([], ad),
            Pp=bt(a, a, [], [], tau),
            Pq=bt([], [], ad, ad, tau),
            G1a=bt(a, [], ad, [], tau),
            G1b=bt([], a, [], ad, tau),
            Ka=bt([], a, ad, ad, tau),
            Kb=bt(a, a, ad, [], tau),
            Kc=bt(a, [], ad, ad, tau),
            Kd=bt(a, a, [], ad, tau),
        )


def _col(x):
    # traces carry the delay axis first, phases broadcast behind it
    return np.asarray(x)[..., None]


def center_from_traces(tr: FransonTraces, phi_a, phi_b):
    """Central-peak rate (t' = t + tau), term by term; shape (ntau, nphase)."""
    ea, eb = np.exp(1j * np.asarray(phi_a)), np.exp(1j * np.asarray(phi_b))
    T1, Pp, Pq, G1a, G1b = _col(tr.T1), _col(tr.Pp), _col(tr.Pq), _col(tr.G1a), _col(tr.G1b)
    Ka, Kb, Kc, Kd = _col(tr.Ka), _col(tr.Kb), _col(tr.Kc), _col(tr.Kd)
    c, cb, F = tr.c, tr.cb, tr.F
    total = (
        2 * T1
        + 2 * F**2
        + Pp * Pq / (ea * eb)
        + G1a * G1b * eb / ea
        + (c * Ka + Kb * cb) / ea
        + G1a * G1b * ea / eb
        + (Kc * c + Kd * cb) / eb
        + Pp * Pq * ea * eb
        + (Kd * cb + Kc * c) * eb
        + (Kb * cb + Ka * c) * ea
    )
    return total.real


def side_from_traces(tr: FransonTraces, phi_a, phi_b):
    """Side-peak rate at tau = +T + eps (t' = t + eps); shape (neps, nphase)."""
    ea, eb = np.exp(1j * np.asarray(phi_a)), np.exp(1j * np.asarray(phi_b))
    T1, Pp, Pq, G1a, G1b = _col(tr.T1), _col(tr.Pp), _col(tr.Pq), _col(tr.G1a), _col(tr.G1b)
    Ka, Kb, Kc, Kd = _col(tr.Ka), _col(tr.Kb), _col(tr.Kc), _col(tr.Kd)
    c, cb, F = tr.c, tr.cb, tr.F
    total = (
        T1
        + 3 * F**2
        + c**2 * Pq * ea / eb
        + c * G1b * cb * ea * eb
        + (c * Ka + c * cb * F) * ea
        + G1a * c * cb / (ea * eb)
        + (Kc * c + F * c * cb) / eb
        + Pp * cb**2 * eb / ea
        + (Kd * cb + F * c * cb) * eb
        + (Kb * cb + c * F * cb) / ea
    )
    return total.real


def _smeared(p: EmitterParams, rate, phi_a, phi_b, tau, breakpoints=(0.0,)):
    """SD-averaged, IRF-convolved rate on (tau, phase) for a trace combiner."""
    phi_a = np.atleast_1d(reduce_phase(phi_a))
    phi_b = np.atleast_1d(reduce_phase(phi_b))
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    if not np.all(np.isfinite(tau)):
        raise ParameterError("delays must be finite")
    if p.n_photons == 0:
        return np.zeros(tau.shape + np.broadcast(phi_a, phi_b).shape)

    def at_detuning(d):
        corr = FieldCorrelator(p, d)
        return convolve_irf(
            lambda t: rate(FransonTraces.compute(corr, t), phi_a, phi_b),
            p.sigma_irf,
            tau,
            breakpoints=breakpoints,
        )

    return average_sd(at_detuning, p.sigma_sd, center=p.delta)


def _shape_output(values, tau, phi_a, phi_b):
    out = values
    if np.ndim(phi_a) == 0 and np.ndim(phi_b) == 0:
        out = out[..., 0]
    if np.ndim(tau) == 0:
        out = out[0]
    return out


def center_peak_G2(p: EmitterParams, ph: PhasePair | None = None, tau=0.0, phi_a=None, phi_b=None):
    """Central-peak coincidence rate G2(tau) in arbitrary units.

    Phases come from ``ph`` or from ``phi_a``/``phi_b`` arrays (broadcast
    together, giving a trailing phase axis). Spectral diffusion and
    detector jitter are applied.
    """
    phi_a, phi_b = _phases(ph, phi_a, phi_b)
    vals = _smeared(p, center_from_traces, phi_a, phi_b, tau)
    return _shape_output(vals, tau, phi_a, phi_b)


def side_peak_G2(p: EmitterParams, ph: PhasePair | None = None, epsilon=0.0, peak="side_plus",
                 phi_a=None, phi_b=None):
    """Side-peak rate at tau = +-T + epsilon in arbitrary units.

    The peak at -T follows from the one at +T by exchanging the roles of the
    two interferometers, which swaps the phases and reverses epsilon.
    """
    phi_a, phi_b = _phases(ph, phi_a, phi_b)
    eps = np.asarray(epsilon, dtype=float)
    if peak == "side_plus":
        vals = _smeared(p, side_from_traces, phi_a, phi_b, eps)
    elif peak == "side_minus":
        vals = _smeared(p, side_from_traces, phi_b, phi_a, -eps)
    else:
        raise ParameterError(f"peak must be 'side_plus' or 'side_minus', got {peak!r}")
    return _shape_output(vals, eps, phi_a, phi_b)


def _phases(ph, phi_a, phi_b):
    if ph is not None:
        return ph.phi_a, ph.phi_b
    if phi_a is None or phi_b is None:
        raise ParameterError("give either a PhasePair or both phi_a and phi_b")
    return phi_a, phi_b


def histogram(p: EmitterParams, ph: PhasePair, tau_grid, interferometer_delay=DEFAULT_DELAY_NS):
    """Three coincidence peaks (at -delay, 0, +delay) sampled on ``tau_grid``.

    Each curve is one peak evaluated over the whole grid; the measured
    histogram is their sum.
    """
    tau = np.asarray(tau_grid, dtype=float)
    if tau.ndim != 1 or tau.size < 2 or np.any(np.diff(tau) <= 0):
        raise ParameterError("tau grid must be a strictly increasing 1-D array")
    if interferometer_delay <= 0:
        raise ParameterError("interferometer delay must be > 0")
    reach = interferometer_delay + 10.0 / p.gamma_total
    if tau[0] > -reach or tau[-1] < reach:
        raise ParameterError(
            f"tau grid [{tau[0]:g}, {tau[-1]:g}] ns must span +-{reach:g} ns to hold all three peaks"
        )
    T = interferometer_delay
    minus = side_peak_G2(p, ph, tau + T, peak="side_minus")
    center = center_peak_G2(p, ph, tau)
    plus = side_peak_G2(p, ph, tau - T, peak="side_plus")
    return tuple(
        CoincidenceCurve(tau.copy(), np.clip(v, 0.0, None), label)
        for v, label in zip((minus, center, plus), PEAK_LABELS)
    )


def uncorrelated_background(p: EmitterParams, ph: PhasePair):
    """Common far-delay level of the three peak formulas (uncorrelated pairs)."""
    return float(center_peak_G2(p, ph, tau=60.0 / p.gamma_total))


def total_histogram(curves, background):
    """Sum of the three peaks with the shared background counted once."""
    return sum(c.values for c in curves) - (len(curves) - 1) * background


@dataclass(frozen=True)
class VisibilityScan:
    phi_b: np.ndarray
    rate: np.ndarray
    visibility: float
    raw_visibility: float


def visibility_scan(p: EmitterParams, phi_a=0.0, points=VISIBILITY_POINTS) -> VisibilityScan:
    """Scan phi_b over ``points`` equally spaced settings at zero delay.

    The zero-delay rate is exactly a first-harmonic sinusoid in phi_b, so its
    extrema are taken from the sinusoid fitted to the scan (mean plus the
    first discrete Fourier coefficient). This makes V independent of where
    the grid happens to fall relative to the extrema; the plain grid
    max/min value is reported alongside.
    """
    if points < 3:
        raise ParameterError("visibility scan needs at least 3 points")
    phi_b = 2 * math.pi * np.arange(points) / points
    rate = center_peak_G2(p, tau=0.0, phi_a=float(phi_a), phi_b=phi_b)
    coeffs = np.fft.rfft(rate) / points
    mean = coeffs[0].real
    amp = 2 * abs(coeffs[1])
    if not mean > 0:
        raise DegeneracyError("coincidence rate vanishes; visibility undefined", point=p)
    raw = (rate.max() - rate.min()) / (rate.max() + rate.min())
    return VisibilityScan(phi_b, rate, float(amp / mean), float(raw))


def visibility(p: EmitterParams, phi_a=0.0) -> float:
    """Franson visibility (R_max - R_min) / (R_max + R_min) of the central peak."""
    return visibility_scan(p, phi_a).visibility
