"""Least-squares fits of the emitter model to transmission and g2 data.

The forward models pass through spectral-diffusion quadrature and jitter
convolution, so no analytic derivatives are available; fits use scipy's
Nelder-Mead simplex in unconstrained coordinates, restarted from the best
point until the objective stops improving.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .calibration import PowerCalibration, n_from_power
from .correlators import g2_hbt
from .errors import ParameterError
from .params import EmitterParams, ghz_to_rad_ns
from .scattering import transmission_map

FREE_PARAMETERS = ("eta", "beta", "sigma_sd", "gamma_d")
KINDS = ("transmission", "g2")


@dataclass(frozen=True)
class Dataset:
    """Observed values on an axis (detuning [rad/ns] or delay [ns]) and drive.

    Exactly one of ``n`` (photons per lifetime) and ``power_uW`` is set.
    Weights multiply the squared residuals; by default they are uniform, or
    inverse counts when ``counts`` is given (Poissonian variance).
    """

    kind: str
    axis: np.ndarray
    value: np.ndarray
    n: np.ndarray | None = None
    power_uW: np.ndarray | None = None
    weight: np.ndarray | None = None
    counts: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"dataset kind must be one of {KINDS}, got {self.kind!r}")
        if (self.n is None) == (self.power_uW is None):
            raise ParameterError("dataset needs exactly one of n and power_uW")
        size = np.size(self.axis)
        for name in ("axis", "value", "n", "power_uW", "weight", "counts"):
            arr = getattr(self, name)
            if arr is None:
                continue
            arr = np.asarray(arr, dtype=float)
            object.__setattr__(self, name, arr)
            if arr.shape != (size,):
                raise ParameterError(f"column {name} has length {arr.size}, expected {size}")
            if not np.all(np.isfinite(arr)):
                raise ParameterError(f"column {name} contains non-finite values")
        if self.kind == "g2" and self.n is None:
            raise ParameterError("g2 datasets are indexed by n")

    @property
    def weights(self):
        if self.weight is not None:
            return self.weight
        if self.counts is not None:
            return 1.0 / np.maximum(self.counts, 1.0)
        return np.ones_like(self.value)

    def drive_levels(self, cal, beta, gamma):
        """Photon number of every row under the given calibration."""
        if self.n is not None:
            return self.n
        return n_from_power(self.power_uW, cal, beta, gamma)


def load_dataset(path) -> Dataset:
    """Read a dataset CSV (``#`` comment lines allowed).

    Transmission: columns detuning_GHz, n or power_uW, value[, weight].
    g2: columns tau_ns, n, g2[, weight]. A ``counts`` column may replace
    ``weight``.
    """
    # genfromtxt would take field names from a leading comment line
    with open(path) as fh:
        lines = [ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    try:
        data = np.genfromtxt(lines, delimiter=",", names=True, dtype=float, ndmin=1)
    except ValueError as exc:
        raise ParameterError(f"{path}: {exc}") from None
    cols = set(data.dtype.names or ())

    def col(name):
        return data[name] if name in cols else None

    if {"tau_ns", "g2"} <= cols:
        return Dataset("g2", data["tau_ns"], data["g2"], n=col("n"), power_uW=col("power_uW"),
                       weight=col("weight"), counts=col("counts"))
    if {"detuning_GHz", "value"} <= cols:
        return Dataset("transmission", ghz_to_rad_ns(data["detuning_GHz"]), data["value"], n=col("n"),
                       power_uW=col("power_uW"), weight=col("weight"), counts=col("counts"))
    raise ParameterError(f"{path}: unrecognized columns {sorted(cols)}")


@dataclass(frozen=True)
class ModelPoint:
    params: EmitterParams
    calibration: PowerCalibration | None = None

    def get(self, name):
        if name == "eta":
            if self.calibration is None:
                raise ParameterError("eta is free but no power calibration was given")
            return self.calibration.eta
        return getattr(self.params, name)

    def with_values(self, names, values):
        changes = dict(zip(names, values))
        cal = self.calibration
        if "eta" in changes:
            cal = PowerCalibration(changes.pop("eta"), cal.nu_thz, cal.tau_qd)
        return ModelPoint(self.params.replace(**changes), cal)


def predict(point: ModelPoint, data: Dataset):
    """Model values at every row of a dataset."""
    p, cal = point.params, point.calibration
    if data.power_uW is not None and cal is None:
        raise ParameterError("power-indexed data needs a power calibration")
    levels = data.drive_levels(cal, p.beta, p.gamma_total)
    out = np.empty_like(data.value)
    for n in np.unique(levels):
        rows = levels == n
        if data.kind == "transmission":
            if n <= 0:
                out[rows] = 1.0
                continue
            out[rows] = transmission_map(p, data.axis[rows], [n])[0]
        else:
            out[rows] = g2_hbt(p.replace(n_photons=float(n)), data.axis[rows])
    return out


@dataclass
class FitResult:
    point: ModelPoint
    free: tuple
    residual: float
    converged: bool
    evaluations: int
    message: str
    history: list = field(default_factory=list, repr=False)

    @property
    def params(self):
        return self.point.params

    def values(self):
        return {name: self.point.get(name) for name in self.free}


class _BestTracker:
    """Objective wrapper remembering the best point seen."""

    def __init__(self, fun):
        self.fun = fun
        self.best_x = None
        self.best_f = math.inf
        self.history = []
        self.calls = 0

    def __call__(self, x):
        self.calls += 1
        try:
            f = float(self.fun(x))
        except (ParameterError, ArithmeticError):
            f = math.inf
        if not math.isfinite(f):
            f = math.inf
        if f < self.best_f:
            self.best_f, self.best_x = f, np.array(x, dtype=float)
        self.history.append(self.best_f)
        return f


def _scales(point, free):
    # Work in units of the initial value; zero starts fall back to a small
    # fraction of Gamma so the simplex has a meaningful size.
    G = point.params.gamma_total
    fallback = {"eta": 1e-3, "beta": 1.0, "sigma_sd": 0.05 * G, "gamma_d": 0.005 * G}
    return np.array([point.get(name) or fallback[name] for name in free], dtype=float)


class _Coordinates:
    """Smooth unconstrained coordinates for the free parameters.

    beta = sin(u)^2 keeps 0 <= beta <= 1 and the non-negative rates are
    x = s u^2 with s the initial value. A bounded simplex would instead
    collapse onto a face such as beta = 1 and stall there.
    """

    def __init__(self, point, free):
        self.free = free
        self.scale = _scales(point, free)

    def to_params(self, u):
        u = np.asarray(u, dtype=float)
        return np.array(
            [np.sin(ui) ** 2 if name == "beta" else s * ui**2 for name, s, ui in zip(self.free, self.scale, u)]
        )

    def from_params(self, x):
        return np.array(
            [
                np.arcsin(np.sqrt(np.clip(xi, 0.0, 1.0))) if name == "beta" else np.sqrt(max(xi, 0.0) / s)
                for name, s, xi in zip(self.free, self.scale, x)
            ]
        )


def fit(
    datasets,
    free,
    init: ModelPoint,
    max_evaluations=2000,
    xatol=1e-8,
    fatol=1e-14,
    max_restarts=5,
    initial_step=0.1,
) -> FitResult:
    """Weighted least squares over one or more datasets.

    Nelder-Mead runs are restarted from the best point with a fresh simplex
    (half the previous size) until a restart no longer lowers the residual.
    """
    free = tuple(free)
    unknown = set(free) - set(FREE_PARAMETERS)
    if unknown or not free or len(set(free)) != len(free):
        raise ParameterError(f"free parameters must be a non-empty subset of {FREE_PARAMETERS}, got {free}")
    for name in free:
        init.get(name)  # raises if eta has no calibration
    datasets = list(datasets)
    coords = _Coordinates(init, free)

    def objective(u):
        point = init.with_values(free, coords.to_params(u))
        return sum(float(np.sum(d.weights * (predict(point, d) - d.value) ** 2)) for d in datasets)

    tracker = _BestTracker(objective)
    u = coords.from_params([init.get(name) for name in free])
    # keep the start off the stationary points of the transforms
    u = np.where(np.abs(u) < 1e-3, 1e-1, u)
    converged = False
    message = ""
    for attempt in range(max_restarts + 1):
        budget = max_evaluations - tracker.calls
        if budget <= 0:
            message = "evaluation budget exhausted"
            break
        f_start = tracker.best_f
        simplex = np.vstack([u] + [u + initial_step * np.eye(len(u))[i] for i in range(len(u))])
        res = minimize(
            tracker,
            u,
            method="Nelder-Mead",
            options={"maxfev": budget, "xatol": xatol, "fatol": fatol, "initial_simplex": simplex},
        )
        message = res.message
        u = tracker.best_x if tracker.best_x is not None else u
        improved = f_start - tracker.best_f
        if res.success and attempt > 0 and improved <= max(fatol, 1e-12 * abs(tracker.best_f)):
            converged = True
            break
        initial_step = max(initial_step * 0.5, 1e-4)
    best = init.with_values(free, coords.to_params(u))
    return FitResult(best, free, tracker.best_f, converged, tracker.calls, str(message), tracker.history)


def fit_transmission_map(data: Dataset, free, init: ModelPoint, **kwargs) -> FitResult:
    """Fit a transmission map versus detuning and drive power (or n)."""
    if data.kind != "transmission":
        raise ParameterError("expected a transmission dataset")
    levels = data.n if data.n is not None else data.power_uW
    if np.unique(levels).size < 2 or np.unique(data.axis).size < 2:
        raise ParameterError("transmission data must cover both the detuning and the power axis")
    return fit([data], free, init, **kwargs)


def fit_g2_saturation(data: Dataset, free=("beta", "sigma_sd"), init: ModelPoint | None = None, **kwargs) -> FitResult:
    """Joint fit of g2(tau) curves recorded at several drive strengths."""
    if data.kind != "g2":
        raise ParameterError("expected a g2 dataset")
    if np.unique(data.n).size < 3:
        raise ParameterError("g2 saturation fits need curves at >= 3 values of n")
    if init is None:
        raise ParameterError("an initial model point is required")
    return fit([data], free, init, **kwargs)


PROTOCOL_GAMMA_D = ghz_to_rad_ns(0.01)


def staged_protocol(transmission: Dataset, g2: Dataset, init: ModelPoint, **kwargs):
    """Staged fit: Gamma fixed, gamma_d fixed at 0.01 GHz, eta from the
    transmission map, then (beta, sigma_sd) jointly on both datasets.

    Returns the two stage results; the second carries the final model.
    """
    start = ModelPoint(init.params.replace(gamma_d=PROTOCOL_GAMMA_D), init.calibration)
    stage1 = fit_transmission_map(transmission, ("eta",), start, **kwargs)
    stage2 = fit([transmission, g2], ("beta", "sigma_sd"), stage1.point, **kwargs)
    return stage1, stage2
