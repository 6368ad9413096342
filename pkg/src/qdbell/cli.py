"""Command-line entry point: ``qdbell <command> [options]``.

Each command evaluates one observable on the grids of a run configuration
and writes a table (CSV with a ``#`` metadata header, or JSON). With
``--out`` a PNG figure is rendered next to the table unless ``--no-figure``
is given.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__, bell, correlators, dynamics, franson, scattering
from .calibration import pump_power_from_n
from .config import CONFIG_PREFIX, ConfigError, RunConfig, load_config, parse_grid_override
from .errors import DegeneracyError, ParameterError
from .fitting import ModelPoint, fit_g2_saturation, fit_transmission_map, load_dataset, staged_protocol, predict
from .params import TWO_PI, ghz_to_rad_ns, rad_ns_to_ghz

FLOAT_FORMAT = ".10g"

DEFAULT_GRIDS = {
    "tau_ns": {"start": -1.0, "stop": 1.0, "num": 201},
    "n": {"start": 0.002, "stop": 0.2, "num": 12, "spacing": "log"},
    "detuning_GHz": {"start": -3.0, "stop": 3.0, "num": 61},
    "omega_GHz": {"start": -10.0, "stop": 10.0, "num": 401},
    "phi_b": {"start": 0.0, "stop": 2 * math.pi, "num": 65},
    "t_ns": {"start": 0.0, "stop": 0.5, "num": 101},
    "t_prime_ns": {"start": 0.0, "stop": 0.5, "num": 101},
    "delta_a_GHz": {"start": -5.0, "stop": 5.0, "num": 101},
    "delta_b_GHz": {"start": -5.0, "stop": 5.0, "num": 101},
}
G2_CHUNK = 16
FRANSON_TAU = {"start": -6.0, "stop": 6.0, "num": 601}
TRANSMISSION_N = {"start": 1e-4, "stop": 1.0, "num": 9, "spacing": "log"}


@dataclass
class Table:
    columns: dict
    results: dict = field(default_factory=dict)
    figure: object = None  # callable(path) rendering the figure


def parallel_map(fn, items, threads):
    """Ordered map over a thread pool (serial for one thread)."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), FLOAT_FORMAT)
    return str(x)


def render_csv(table: Table, cfg: RunConfig, command: str) -> str:
    lines = [f"# qdbell {__version__} {command}", CONFIG_PREFIX + cfg.to_json()]
    for key, value in table.results.items():
        lines.append(f"# {key}: {_fmt(value)}")
    names = list(table.columns)
    lines.append(",".join(names))
    cols = [np.asarray(table.columns[k]) for k in names]
    for row in zip(*cols):
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def _json_value(x):
    if isinstance(x, (np.floating, float)):
        return float(format(float(x), FLOAT_FORMAT))
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def render_json(table: Table, cfg: RunConfig, command: str) -> str:
    doc = {
        "version": __version__,
        "command": command,
        "config": cfg.data,
        "results": {k: _json_value(v) for k, v in table.results.items()},
        "columns": {k: [_json_value(v) for v in np.asarray(c).tolist()] for k, c in table.columns.items()},
    }
    return json.dumps(doc, indent=1, sort_keys=False) + "\n"


# ----------------------------------------------------------------- commands


def cmd_steady_state(cfg, threads):
    p = cfg.emitter_params()
    corr = correlators.FieldCorrelator(p)
    rho = corr.rho
    closed = dynamics.steady_state_closed_form(p)
    names = ["ee", "eg", "ge", "gg"]
    flat, ref = rho.reshape(4), closed.reshape(4)
    results = {"n": p.n_photons, "rabi_GHz": rad_ns_to_ghz(p.rabi), "flux_per_ns": corr.flux()}
    if p.n_photons > 0:
        results["transmission"] = corr.flux() / abs(dynamics.coherent_amplitude(p)) ** 2
    return Table(
        {
            "entry": names,
            "real": flat.real,
            "imag": flat.imag,
            "closed_form_real": ref.real,
            "closed_form_imag": ref.imag,
        },
        results,
        lambda path: _plots().density_matrix_plot(path, rho),
    )


def cmd_g2(cfg, threads):
    p = cfg.emitter_params()
    tau = cfg.grid("tau_ns", DEFAULT_GRIDS["tau_ns"])
    # fixed-size chunks: the adaptive jitter quadrature refines per chunk,
    # so the split must not depend on the thread count
    chunks = [tau[i:i + G2_CHUNK] for i in range(0, tau.size, G2_CHUNK)]
    g2 = np.concatenate(parallel_map(lambda t: np.atleast_1d(correlators.g2_hbt(p, t)), chunks, threads))
    return Table(
        {"tau_ns": tau, "g2": g2},
        {"n": p.n_photons, "g2_peak": float(g2.max())},
        lambda path: _plots().line_plot(path, tau, {"g2": g2}, "delay (ns)", "g2(tau)", logy=True),
    )


def cmd_franson(cfg, threads):
    p = cfg.emitter_params()
    fr = cfg["franson"]
    ph = franson.PhasePair(float(fr["phi_a"]), float(fr["phi_b"]))
    tau = cfg.grid("tau_ns", FRANSON_TAU)
    try:
        curves = franson.histogram(p, ph, tau, float(fr["delay_ns"]))
    except ParameterError as exc:
        raise ConfigError(f"scan.tau_ns: {exc}") from None
    cols = {"tau_ns": tau}
    for c in curves:
        cols[c.peak_label] = c.values
    background = franson.uncorrelated_background(p, ph)
    cols["total"] = franson.total_histogram(curves, background)
    results = {f"area_{c.peak_label}": c.area() for c in curves}
    results["background"] = background
    series = {k: v for k, v in cols.items() if k != "tau_ns"}
    return Table(cols, results, lambda path: _plots().line_plot(path, tau, series, "delay (ns)", "coincidences (arb.)"))


def cmd_visibility(cfg, threads):
    p = cfg.emitter_params()
    phi_a = float(cfg["franson"]["phi_a"])
    scan = franson.visibility_scan(p, phi_a)
    phi_b = cfg.grid("phi_b", DEFAULT_GRIDS["phi_b"])
    rate = franson.center_peak_G2(p, tau=0.0, phi_a=phi_a, phi_b=phi_b)
    return Table(
        {"phi_b_rad": phi_b, "rate": rate},
        {"phi_a": phi_a, "visibility": scan.visibility, "grid_visibility": scan.raw_visibility},
        lambda path: _plots().line_plot(path, phi_b, {"center peak": rate}, "phi_b (rad)", "rate at tau=0 (arb.)"),
    )


def cmd_chsh(cfg, threads):
    base = cfg.emitter_params()
    ns = cfg.grid("n", DEFAULT_GRIDS["n"])
    c = cfg["chsh"]
    settings = bell.ChshSettings(float(c["phi_a"]), float(c["phi_a_prime"]), float(c["phi_b"]), float(c["phi_b_prime"]))
    S = np.array(parallel_map(lambda n: bell.chsh_S(base.replace(n_photons=float(n)), settings), ns, threads))
    P = pump_power_from_n(ns, cfg.calibration())
    return Table(
        {"n": ns, "P_pump_pW": P, "S": S},
        {"S_max": float(S.max())},
        lambda path: _plots().line_plot(path, ns, {"S": S, "local bound": np.full_like(S, 2.0)}, "n", "S", logx=True),
    )


def cmd_transmission(cfg, threads):
    p = cfg.emitter_params(n=1.0)
    det_ghz = cfg.grid("detuning_GHz", DEFAULT_GRIDS["detuning_GHz"])
    ns = cfg.grid("n", TRANSMISSION_N)
    det = ghz_to_rad_ns(det_ghz)
    rows = parallel_map(lambda n: scattering.transmission_map(p, det, [n])[0], ns, threads)
    T = np.vstack(rows)
    D, N = np.meshgrid(det_ghz, ns)
    return Table(
        {"detuning_GHz": D.ravel(), "n": N.ravel(), "value": T.ravel()},
        {"min_transmission": float(T.min())},
        lambda path: _plots().map_plot(path, det_ghz, ns, T, "detuning (GHz)", "n", "transmission", logy=True),
    )


def cmd_jsi(cfg, threads):
    p = cfg.emitter_params()
    a = cfg.grid("delta_a_GHz", DEFAULT_GRIDS["delta_a_GHz"])
    b = cfg.grid("delta_b_GHz", DEFAULT_GRIDS["delta_b_GHz"])
    width = ghz_to_rad_ns(float(cfg["scattering"]["laser_linewidth_kHz"]) * 1e-6)
    jsi = scattering.joint_spectral_intensity(p, ghz_to_rad_ns(a), ghz_to_rad_ns(b), width)
    A, B = np.meshgrid(a, b, indexing="ij")
    return Table(
        {"delta_a_GHz": A.ravel(), "delta_b_GHz": B.ravel(), "jsi": jsi.ravel()},
        {},
        lambda path: _plots().map_plot(path, b, a, jsi, "Delta_b (GHz)", "Delta_a (GHz)", "JSI"),
    )


def cmd_jti(cfg, threads):
    p = cfg.emitter_params()
    t = cfg.grid("t_ns", DEFAULT_GRIDS["t_ns"])
    tp = cfg.grid("t_prime_ns", DEFAULT_GRIDS["t_prime_ns"])
    tc = cfg["scattering"]["coherence_time_ns"]
    jti = scattering.joint_temporal_intensity(p, t, tp, None if tc is None else float(tc))
    T, TP = np.meshgrid(t, tp, indexing="ij")
    return Table(
        {"t_ns": T.ravel(), "t_prime_ns": TP.ravel(), "jti": jti.ravel()},
        {"correlation_time_ns": 1.0 / p.gamma_total},
        lambda path: _plots().map_plot(path, tp, t, jti, "t' (ns)", "t (ns)", "JTI"),
    )


def cmd_spectrum(cfg, threads):
    p = cfg.emitter_params()
    f = cfg.grid("omega_GHz", DEFAULT_GRIDS["omega_GHz"])
    spec = correlators.emission_spectrum(p, ghz_to_rad_ns(f))
    # densities per GHz of ordinary frequency
    inc, disp = spec.incoherent * TWO_PI, spec.display * TWO_PI
    return Table(
        {"offset_GHz": f, "incoherent": inc, "display": disp},
        {"flux_per_ns": spec.flux, "coherent_weight": spec.coherent_weight, "incoherent_weight": spec.incoherent_weight},
        lambda path: _plots().line_plot(
            path, f, {"total (coherent line broadened)": disp, "incoherent": inc}, "offset from laser (GHz)",
            "spectral density (photons/ns/GHz)", logy=True,
        ),
    )


def cmd_fit(cfg, threads):
    fc = cfg["fit"]
    if fc["dataset"] is None:
        raise ConfigError("fit.dataset is required for the fit command")
    init = ModelPoint(cfg.emitter_params(n=1.0), cfg.calibration())
    data = load_dataset(fc["dataset"])
    preset = fc["preset"]
    kw = {"max_evaluations": int(fc["max_evaluations"])}
    if preset == "staged":
        if fc["g2_dataset"] is None:
            raise ConfigError("fit.g2_dataset is required for the staged preset")
        g2 = load_dataset(fc["g2_dataset"])
        _, result = staged_protocol(data, g2, init, **kw)
        shown = g2
    elif preset == "transmission":
        free = tuple(fc["free"] or ("eta", "beta", "sigma_sd"))
        result = fit_transmission_map(data, free, init, **kw)
        shown = data
    elif preset == "g2":
        free = tuple(fc["free"] or ("beta", "sigma_sd"))
        result = fit_g2_saturation(data, free, init, **kw)
        shown = data
    else:
        raise ConfigError(f"fit.preset must be 'staged', 'transmission' or 'g2', got {preset!r}")
    fp = result.point.params
    names = ["gamma_GHz", "beta", "gamma_d_GHz", "sigma_sd_GHz", "sigma_irf_ps", "eta"]
    values = [
        rad_ns_to_ghz(fp.gamma_total),
        fp.beta,
        rad_ns_to_ghz(fp.gamma_d),
        rad_ns_to_ghz(fp.sigma_sd),
        fp.sigma_irf * 1e3,
        result.point.calibration.eta,
    ]
    model = predict(result.point, shown)
    groups = shown.n if shown.n is not None else shown.power_uW
    axis = shown.axis if shown.kind == "g2" else rad_ns_to_ghz(shown.axis)
    xlabel = "delay (ns)" if shown.kind == "g2" else "detuning (GHz)"
    return Table(
        {"parameter": names, "value": values},
        {"residual": result.residual, "converged": result.converged, "evaluations": result.evaluations},
        lambda path: _plots().fit_plot(path, axis, shown.value, model, xlabel, shown.kind, groups),
    )


COMMANDS = {
    "steady-state": (cmd_steady_state, "steady-state density matrix"),
    "g2": (cmd_g2, "g2(tau) of the transmitted light"),
    "franson": (cmd_franson, "three-peak coincidence histogram behind the interferometers"),
    "visibility": (cmd_visibility, "central-peak interference visibility and phi_b scan"),
    "chsh": (cmd_chsh, "CHSH S versus photon number"),
    "transmission": (cmd_transmission, "transmission map versus detuning and photon number"),
    "jsi": (cmd_jsi, "joint spectral intensity of scattered pairs"),
    "jti": (cmd_jti, "joint temporal intensity of scattered pairs"),
    "spectrum": (cmd_spectrum, "emission spectrum of the transmitted light"),
    "fit": (cmd_fit, "fit model parameters to a dataset"),
}


def _plots():
    from . import plotting

    return plotting


def _scalar(text):
    value = yaml.safe_load(text)
    if isinstance(value, str):
        # YAML 1.1 reads "1e-6" (no decimal point) as a string
        try:
            return float(value)
        except ValueError:
            pass
    return value


def build_parser():
    parser = argparse.ArgumentParser(prog="qdbell", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", type=Path, help="YAML/JSON config, or a CSV written by a previous run")
        sp.add_argument("--out", type=Path, help="output file (default: stdout)")
        sp.add_argument("--format", choices=("csv", "json"), help="output format (default from config, csv)")
        sp.add_argument("--threads", type=int, default=os.cpu_count() or 1, help="worker threads for grid points")
        sp.add_argument("--grid", action="append", default=[], metavar="NAME=START:STOP:NUM[:log]",
                        help="override a scan grid, e.g. n=0.002:0.2:12:log or tau_ns=0,0.1,0.2")
        sp.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override one configuration value")
        sp.add_argument("--no-figure", action="store_true", help="do not render the PNG figure")
    return parser


def resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig.from_dict({"drive": {"n": 0.0024}})
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set {item!r} must look like SECTION.KEY=VALUE")
        key, value = item.split("=", 1)
        cfg.set(key.strip(), _scalar(value))
    for item in args.grid:
        name, spec = parse_grid_override(item)
        cfg.set(f"scan.{name}", spec)
    if args.format:
        cfg.data["output"]["format"] = args.format
    return cfg


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        fn, _ = COMMANDS[args.command]
        table = fn(cfg, args.threads)
    except ConfigError as exc:
        print(f"qdbell: configuration error: {exc}", file=sys.stderr)
        return 2
    except DegeneracyError as exc:
        print(f"qdbell: numerical degeneracy: {exc}", file=sys.stderr)
        return 3
    except (ParameterError, OSError) as exc:
        print(f"qdbell: error: {exc}", file=sys.stderr)
        return 1
    fmt = cfg["output"]["format"]
    text = render_json(table, cfg, args.command) if fmt == "json" else render_csv(table, cfg, args.command)
    out = args.out or (Path(cfg["output"]["path"]) if cfg["output"]["path"] else None)
    if out is None:
        sys.stdout.write(text)
        return 0
    out.write_text(text)
    if table.figure is not None and cfg["output"]["figure"] and not args.no_figure:
        table.figure(out.with_suffix(".png"))
    return 0


if __name__ == "__main__":
    sys.exit(main())
