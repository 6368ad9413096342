"""Independent reference computations used only by the tests.

None of these share code with the package beyond the coefficient matrix
itself: time evolution by fixed-step RK4, Fourier transforms by trapezoid
sums, Gaussian averages by dense trapezoid quadrature, and the
exponential-Gaussian convolution from its erfcx closed form.
"""

import math

import numpy as np
from scipy.special import erfc, erfcx


def rk4_steps(M, t_end, per_unit=60, minimum=2000):
    """Step count keeping h * |lambda|max <= 1/per_unit (local error ~1e-11)."""
    radius = np.max(np.abs(np.linalg.eigvals(M)))
    return int(max(minimum, math.ceil(per_unit * radius * t_end)))


def rk4(M, v0, t_end, steps=4000):
    """Integrate v' = M v from 0 to t_end; returns the values at steps+1 times."""
    v = np.asarray(v0, dtype=complex).copy()
    h = t_end / steps
    out = [v.copy()]
    for _ in range(steps):
        k1 = M @ v
        k2 = M @ (v + 0.5 * h * k1)
        k3 = M @ (v + 0.5 * h * k2)
        k4 = M @ (v + h * k3)
        v = v + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        out.append(v.copy())
    return np.linspace(0.0, t_end, steps + 1), np.array(out)


def rk4_trace(M, rho, seed_left, seed_right, final_left, final_right, t_end, steps=4000):
    """Tr(L exp(M t)[S_l rho S_r] R) on the RK4 time grid."""
    seed = seed_left @ rho @ seed_right
    t, vs = rk4(M, seed.reshape(4), t_end, steps)
    mats = vs.reshape(-1, 2, 2)
    return t, np.einsum("ij,tjk,ki->t", final_left, mats, final_right)


def gaussian_average_trapezoid(f, sigma, points=100_001, width=6.0, center=0.0):
    """Dense trapezoid average of f over N(center, sigma^2) on +-width sigma."""
    x = np.linspace(center - width * sigma, center + width * sigma, points)
    w = np.exp(-0.5 * ((x - center) / sigma) ** 2)
    vals = np.array([f(xi) for xi in x])
    return np.trapezoid(w * vals, x) / np.trapezoid(w, x)


def exp_gauss_convolution(tau, gamma, sigma):
    """Closed form of (N(0, sigma^2) * exp(-gamma |t|))(tau)."""
    tau = np.asarray(tau, dtype=float)

    def half(x):
        # int_0^inf exp(-gamma u) N(x - u) du; erfcx for z > 0 avoids 0 * inf,
        # the equivalent erfc form is safe for z <= 0
        z = gamma * sigma / math.sqrt(2) - x / (math.sqrt(2) * sigma)
        zp = np.maximum(z, 0.0)
        tail = 0.5 * np.exp(-(x**2) / (2 * sigma**2)) * erfcx(zp)
        body = 0.5 * np.exp(0.5 * (gamma * sigma) ** 2 - gamma * np.maximum(x, 0.0)) * erfc(np.minimum(z, 0.0))
        return np.where(z > 0, tail, body)

    return half(tau) + half(-tau)


def trapezoid_one_sided_ft(tau, values, omega):
    """(1/pi) Re int_0^T e^{i omega tau} values(tau) dtau by the trapezoid rule."""
    phase = np.exp(1j * np.multiply.outer(omega, tau))
    return np.trapezoid(phase * values, tau, axis=-1).real / math.pi
