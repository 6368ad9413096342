"""Master-equation dynamics of the driven two-level emitter.

Density matrices are 2x2 arrays in the basis (|e>, |g>), so their row-major
flattening is (rho_ee, rho_eg, rho_ge, rho_gg). Superoperators are 4x4
arrays acting on that vector.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.linalg

from .errors import DegeneracyError, ParameterError
from .params import EmitterParams, rabi_from_n

SIGMA_GE = np.array([[0, 0], [1, 0]], dtype=complex)  # |g><e|, lowering
SIGMA_EG = SIGMA_GE.T.copy()
SIGMA_EE = np.array([[1, 0], [0, 0]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)
GROUND = np.array([[0, 0], [0, 1]], dtype=complex)
EXCITED = SIGMA_EE

TRACE_ROW = np.array([1, 0, 0, 1], dtype=complex)

# Eigenvector condition number above which the eigendecomposition route is
# abandoned for scaling-and-squaring. The eigen-route error grows like
# cond * machine epsilon, so this keeps it near 1e-12 even next to the
# exceptional points of M (e.g. Omega = Gamma / 4 on resonance).
EIG_COND_LIMIT = 1e4

# Phase of the coherent input amplitude relative to the Rabi frequency in
# H = (Omega/2) sigma_x. With this phase the input-output field
# a = alpha - sqrt(beta Gamma / 2) sigma_ge reproduces t = 1 + r.
DRIVE_PHASE = -1j


def vec(rho):
    return np.asarray(rho, dtype=complex).reshape(*np.shape(rho)[:-2], 4)


def unvec(v):
    return np.asarray(v, dtype=complex).reshape(*np.shape(v)[:-1], 2, 2)


def liouvillian(gamma, gamma_d, delta, omega):
    """Coefficient matrix for arrays of parameters (broadcasts to (..., 4, 4))."""
    gamma, gamma_d, delta, omega = np.broadcast_arrays(
        *(np.asarray(x, dtype=float) for x in (gamma, gamma_d, delta, omega))
    )
    h = 0.5j * omega
    M = np.zeros(gamma.shape + (4, 4), dtype=complex)
    M[..., 0, 0] = -gamma
    M[..., 0, 1] = h
    M[..., 0, 2] = -h
    M[..., 1, 0] = h
    M[..., 1, 1] = -gamma / 2 - 1j * delta - gamma_d
    M[..., 1, 3] = -h
    M[..., 2, 0] = -h
    M[..., 2, 2] = -gamma / 2 + 1j * delta - gamma_d
    M[..., 2, 3] = h
    M[..., 3, 0] = gamma
    M[..., 3, 1] = -h
    M[..., 3, 2] = h
    return M


def build_liouvillian(p: EmitterParams, delta_override=None):
    """Return the 4x4 coefficient matrix M with rho_dot = M rho."""
    delta = p.delta if delta_override is None else float(delta_override)
    if not math.isfinite(delta):
        raise ParameterError(f"detuning must be finite, got {delta}")
    return liouvillian(p.gamma_total, p.gamma_d, delta, rabi_from_n(p))


def hamiltonian(p: EmitterParams, delta_override=None):
    delta = p.delta if delta_override is None else delta_override
    omega = rabi_from_n(p)
    return 0.5 * omega * (SIGMA_GE + SIGMA_EG) + delta * SIGMA_EE


def coherent_amplitude(p: EmitterParams) -> complex:
    """Input amplitude alpha, |alpha|^2 = n Gamma (photons/ns)."""
    if p.n_photons == 0:
        return 0j
    return DRIVE_PHASE * rabi_from_n(p) / math.sqrt(2.0 * p.beta * p.gamma_total)


def field_operator(p: EmitterParams):
    """Transmitted field a = alpha I - sqrt(beta Gamma / 2) sigma_ge."""
    return coherent_amplitude(p) * IDENTITY - math.sqrt(p.beta * p.gamma_total / 2) * SIGMA_GE


def drive_scaling(omega, gamma):
    """Diagonal weights (s^2, s, s, 1), s ~ Omega/Gamma, for the vec basis.

    In the weak-drive limit rho_ee ~ s^2 and the coherences ~ s, and every
    state reached from the steady state by field operators inherits that
    grading. Working in coordinates divided by these weights keeps all
    components of order one, so quantities of order n^2 stay resolved to
    relative rather than absolute precision.
    """
    s = np.minimum(1.0, np.asarray(omega, dtype=float) / np.asarray(gamma, dtype=float))
    # the floor keeps s^2 clear of underflow for absurdly weak drives
    s = np.where(s > 0, np.maximum(s, 1e-150), 1.0)
    return np.stack([s**2, s, s, np.ones_like(s)], axis=-1)


def _null_vectors(M, omega, gamma):
    d = drive_scaling(omega, gamma)
    Ms = M * d[..., None, :] / d[..., :, None]
    _, sv, vh = np.linalg.svd(Ms)
    v = vh[..., -1, :].conj() * d
    return v, sv


def steady_state_vectors(M, omega, gamma, tol=1e-12):
    """Batched steady states of a stack of coefficient matrices."""
    v, sv = _null_vectors(M, omega, gamma)
    scale = sv[..., 0]
    if np.any(sv[..., -2] <= tol * scale):
        raise DegeneracyError("steady state is not unique (nullspace dimension > 1)")
    tr = v[..., 0] + v[..., 3]
    v = v / tr[..., None]
    # Enforce exact Hermiticity and unit trace.
    v[..., 0] = v[..., 0].real
    v[..., 3] = 1.0 - v[..., 0]
    off = 0.5 * (v[..., 1] + v[..., 2].conj())
    v[..., 1] = off
    v[..., 2] = off.conj()
    return v


def steady_state(p: EmitterParams, delta_override=None):
    """Steady-state density matrix from the nullspace of M."""
    M = build_liouvillian(p, delta_override)
    try:
        v = steady_state_vectors(M, rabi_from_n(p), p.gamma_total)
    except DegeneracyError as exc:
        raise DegeneracyError(str(exc), point=p) from None
    return unvec(v)


def steady_state_closed_form(p: EmitterParams, delta_override=None):
    """Analytic steady state of the driven, dephased two-level system."""
    G, gd = p.gamma_total, p.gamma_d
    D = p.delta if delta_override is None else delta_override
    W = rabi_from_n(p)
    A = G + 2 * gd
    denom = G * (4 * D**2 + A**2) + 2 * W**2 * A
    ree = W**2 * A / denom
    reg = -1j * G * W * (A - 2j * D) / denom
    rge = 1j * G * W * (A + 2j * D) / denom
    rgg = 1.0 / (W**2 * A / (G * (4 * D**2 + A**2) + W**2 * A) + 1.0)
    return np.array([[ree, reg], [rge, rgg]], dtype=complex)


class Propagator:
    """exp(M t) for a fixed superoperator, reusable over many times.

    With ``scaling`` d the work is done on D^-1 M D (D = diag(d)), so that
    exp(M t) = D exp(D^-1 M D t) D^-1; see ``drive_scaling``. The
    eigendecomposition is used unless its eigenvector matrix is
    ill-conditioned or fails to reproduce the matrix; scipy's
    scaling-and-squaring expm is used instead.
    """

    def __init__(self, M, scaling=None, cond_limit=EIG_COND_LIMIT, residual_limit=1e-12):
        self.M = np.asarray(M, dtype=complex)
        self.d = np.ones(self.M.shape[-1]) if scaling is None else np.asarray(scaling, dtype=float)
        self.Ms = self.M * self.d[None, :] / self.d[:, None]
        self._cache = None
        w, V = np.linalg.eig(self.Ms)
        self.cond = np.linalg.cond(V)
        self.uses_eig = bool(self.cond <= cond_limit)
        if self.uses_eig:
            Vinv = np.linalg.inv(V)
            residual = np.max(np.abs((V * w) @ Vinv - self.Ms))
            self.uses_eig = bool(residual <= residual_limit * max(1.0, np.max(np.abs(self.Ms))))
        if self.uses_eig:
            self.eigvals = w
            self.V = V
            self.Vinv = Vinv

    def _time_factors(self, t):
        """exp(lambda_k t) per mode, or the stack of scaled exp(M t) matrices.

        Correlation functions evaluate many traces on one delay grid, so
        the last result is kept and reused when the same delays come back.
        """
        cached = self._cache
        if cached is not None and cached[0].shape == t.shape and np.array_equal(cached[0], t):
            return cached[1]
        if self.uses_eig:
            out = np.exp(np.multiply.outer(t, self.eigvals))
        else:
            out = scipy.linalg.expm(self.Ms * t[..., None, None])
        self._cache = (t.copy(), out)
        return out

    def apply(self, v, t):
        """exp(M t) v for scalar or 1-D array t; returns shape t.shape + (4,)."""
        t = np.asarray(t, dtype=float)
        u = np.asarray(v, dtype=complex) / self.d
        factors = self._time_factors(t)
        if self.uses_eig:
            return ((factors * (self.Vinv @ u)) @ self.V.T) * self.d
        return (factors @ u) * self.d

    def expectation(self, w, v, t):
        """w . exp(M t) v, vectorized over t."""
        t = np.asarray(t, dtype=float)
        w = np.asarray(w, dtype=complex) * self.d
        u = np.asarray(v, dtype=complex) / self.d
        factors = self._time_factors(t)
        if self.uses_eig:
            return factors @ ((w @ self.V) * (self.Vinv @ u))
        return (factors @ u) @ w


def propagate(M, rho, t):
    """exp(M t) applied to a vectorized density matrix (4-vector)."""
    rho = np.asarray(rho, dtype=complex).reshape(4)
    t_arr = np.asarray(t, dtype=float)
    if not (np.all(np.isfinite(rho)) and np.all(np.isfinite(t_arr))):
        raise ParameterError("propagate requires finite state and time")
    if np.any(t_arr < 0):
        raise ParameterError("propagate requires t >= 0")
    return Propagator(M).apply(rho, t_arr)


def is_physical(rho, tol=1e-10) -> bool:
    """Hermitian, unit trace and positive semidefinite within tol."""
    rho = np.asarray(rho)
    if not np.allclose(rho, rho.conj().T, atol=tol):
        return False
    if abs(np.trace(rho) - 1) > tol:
        return False
    return bool(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() >= -tol)
