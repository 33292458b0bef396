"""Config-driven command line drive of the full analysis pipeline.

Four subcommands cover the workflow:

    mvstab stationary  --config c.ini [--out DIR]   branches and psi curve
    mvstab spectrum    --config c.ini [--out DIR]   spectral verdict per branch
    mvstab instability --config c.ini [--out DIR] [--seed S]   escape run
    mvstab sweep       --config c.ini [--out DIR]   bifurcation table over sigma

Configs are flat INI files (documented in the shipped config.example.ini);
unknown sections or keys are rejected.  Reports are JSON validated against
the schema shipped with the package, tables are plain CSV, plots static
SVG.  Exit codes: 0 success, 2 inconclusive run, 1 error.
"""
from __future__ import annotations

import argparse
import configparser
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from . import __version__
from .fokkerplanck import (auto_grid, default_dt, discrete_stationary,
                           fp_evolve, state_from_density)
from .metrics import TimeSeries, empirical_cdf, w1_density
from .model import BUILTIN_MODELS, ScalarMeanFieldModel, build_model
from .numerics import fit_exp_rate
from .particles import SimConfig, evolve, make_ensemble
from .perturb import make_perturbation, perturbed_measure, sample_measure, truncate_center
from .spectrum import (base_spectrum, build_basis, coupling_vectors,
                       dirichlet_matrix, secular_function, solve_secular,
                       unstable_mode)
from .stationary import (GridSpec, build_gibbs, critical_sigma,
                         default_scan_range, make_rule, self_consistent_roots)

SCHEMA_VERSION = "1"

_SCHEMA_KEYS = {
    "mvstab": {"config_version"},
    "model": {"name", "beta", "sigma"},
    "grid": {"L", "n_nodes"},
    "basis": {"degree"},
    "stationary": {"scan_min", "scan_max", "n_scan"},
    "spectrum": {"root"},
    "perturbation": {"delta", "M", "direction", "custom_file"},
    "simulation": {"engine", "n_particles", "dt", "t_end", "seed", "stride",
                   "n_cells", "stop_band_factor"},
    "metric": {"p0", "phi0"},
    "sweep": {"sigma_min", "sigma_max", "n_sigma"},
    "output": {"directory"},
}


@dataclass
class ExperimentConfig:
    """Validated contents of one INI experiment file."""

    model_name: str
    beta: float
    sigma: float | None
    grid_L: float | None
    grid_n_nodes: int
    basis_degree: int
    scan_range: tuple[float, float] | None
    n_scan: int
    spectrum_root: str
    delta: float
    trunc_M: float | None
    direction: str
    custom_file: str | None
    engine: str
    n_particles: int
    dt: float | None
    t_end: float
    seed: int
    stride: int
    n_cells: int
    stop_band_factor: float
    p0: float
    phi0: str
    sweep_range: tuple[float, float]
    n_sigma: int
    out_dir: str

    def build(self) -> ScalarMeanFieldModel:
        return build_model(self.model_name, beta=self.beta, sigma=self.sigma)

    def grid_spec(self) -> GridSpec:
        panel_degree = max(self.basis_degree + 4, 32)
        n_panels = max(2, math.ceil(self.grid_n_nodes / panel_degree))
        return GridSpec(L=self.grid_L, n_panels=n_panels,
                        panel_degree=panel_degree)


def _get(cp, section, key, default=None):
    if cp.has_option(section, key):
        return cp.get(section, key)
    return default


def load_config(path: str) -> ExperimentConfig:
    cp = configparser.ConfigParser()
    cp.optionxform = str        # keys are case-sensitive ("L", "M")
    read = cp.read(path)
    if not read:
        raise ValueError(f"config file {path!r} not found or unreadable")
    for section in cp.sections():
        if section not in _SCHEMA_KEYS:
            raise ValueError(f"unknown config section [{section}]")
        extra = set(cp.options(section)) - _SCHEMA_KEYS[section]
        if extra:
            raise ValueError(
                f"unknown keys {sorted(extra)} in section [{section}]")
    version = _get(cp, "mvstab", "config_version")
    if version != "1":
        raise ValueError(
            f"unsupported config_version {version!r}; this build reads "
            f"version 1")
    name = _get(cp, "model", "name")
    if name not in BUILTIN_MODELS:
        raise ValueError(
            f"unknown model {name!r}; builtins: {sorted(BUILTIN_MODELS)}")
    sigma_raw = _get(cp, "model", "sigma")
    L_raw = _get(cp, "grid", "L", "auto")
    dt_raw = _get(cp, "simulation", "dt", "auto")
    m_raw = _get(cp, "perturbation", "M", "auto")
    scan_min = _get(cp, "stationary", "scan_min")
    scan_max = _get(cp, "stationary", "scan_max")
    scan = None
    if scan_min is not None and scan_max is not None:
        scan = (float(scan_min), float(scan_max))
    engine = _get(cp, "simulation", "engine", "fp")
    if engine not in ("fp", "particles"):
        raise ValueError(f"engine must be fp or particles, got {engine!r}")
    direction = _get(cp, "perturbation", "direction", "adjoint-re")
    if direction not in ("adjoint-re", "adjoint-im", "custom-file"):
        raise ValueError(f"unknown perturbation direction {direction!r}")
    phi0 = _get(cp, "metric", "phi0", "r")
    if phi0 not in ("r", "r_wedge_1"):
        raise ValueError(f"metric gauge must be r or r_wedge_1, got {phi0!r}")
    return ExperimentConfig(
        model_name=name,
        beta=float(_get(cp, "model", "beta", "1.0")),
        sigma=None if sigma_raw is None else float(sigma_raw),
        grid_L=None if L_raw == "auto" else float(L_raw),
        grid_n_nodes=int(_get(cp, "grid", "n_nodes", "3200")),
        basis_degree=int(_get(cp, "basis", "degree", "120")),
        scan_range=scan,
        n_scan=int(_get(cp, "stationary", "n_scan", "2001")),
        spectrum_root=_get(cp, "spectrum", "root", "all"),
        delta=float(_get(cp, "perturbation", "delta", "1e-3")),
        trunc_M=None if m_raw == "auto" else float(m_raw),
        direction=direction,
        custom_file=_get(cp, "perturbation", "custom_file"),
        engine=engine,
        n_particles=int(_get(cp, "simulation", "n_particles", "100000")),
        dt=None if dt_raw == "auto" else float(dt_raw),
        t_end=float(_get(cp, "simulation", "t_end", "40.0")),
        seed=int(_get(cp, "simulation", "seed", "0")),
        stride=int(_get(cp, "simulation", "stride", "25")),
        n_cells=int(_get(cp, "simulation", "n_cells", "1600")),
        stop_band_factor=float(_get(cp, "simulation", "stop_band_factor",
                                    "3.0")),
        p0=float(_get(cp, "metric", "p0", "0.0")),
        phi0=phi0,
        sweep_range=(float(_get(cp, "sweep", "sigma_min", "0.3")),
                     float(_get(cp, "sweep", "sigma_max", "1.3"))),
        n_sigma=int(_get(cp, "sweep", "n_sigma", "21")),
        out_dir=_get(cp, "output", "directory", "out"),
    )


def load_report_schema() -> dict:
    ref = resources.files("mvstab") / "schemas" / "report.schema.json"
    return json.loads(ref.read_text(encoding="utf-8"))


def write_report(out_dir: str, name: str, payload: dict) -> str:
    import jsonschema
    payload = {"schema_version": SCHEMA_VERSION, **payload}
    jsonschema.validate(payload, load_report_schema())
    path = os.path.join(out_dir, name)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def write_csv(out_dir: str, name: str, header: list[str],
              columns: list[np.ndarray]) -> str:
    path = os.path.join(out_dir, name)
    arr = np.column_stack(columns)
    np.savetxt(path, arr, delimiter=",", header=",".join(header),
               comments="", fmt="%.17g")
    return path


def write_manifest(out_dir: str, command: str, files: list[str]):
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"command": command, "version": __version__,
                   "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
                   "files": sorted(os.path.basename(f) for f in files)},
                  fh, indent=2, sort_keys=True)
        fh.write("\n")


def svg_line_plot(path: str, title: str, xlabel: str, ylabel: str,
                  series: list[tuple[str, np.ndarray, np.ndarray]],
                  logy: bool = False, width: int = 720, height: int = 440):
    """Minimal static SVG polyline plot (no third-party plotting)."""
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"]
    mleft, mright, mtop, mbot = 70, 20, 40, 50
    pw, ph = width - mleft - mright, height - mtop - mbot

    def finite(v):
        v = np.asarray(v, dtype=float)
        return v[np.isfinite(v)]

    xs_all = np.concatenate([finite(x) for _, x, _ in series])
    ys_all = []
    for _, _, y in series:
        y = finite(np.log10(np.maximum(y, 1e-300)) if logy else y)
        ys_all.append(y)
    ys_all = np.concatenate(ys_all)
    x0, x1 = float(xs_all.min()), float(xs_all.max())
    y0, y1 = float(ys_all.min()), float(ys_all.max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0

    def sx(x):
        return mleft + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return mtop + (1.0 - (y - y0) / (y1 - y0)) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2}" y="20" text-anchor="middle" '
        f'font-size="14" font-family="sans-serif">{title}</text>',
        f'<rect x="{mleft}" y="{mtop}" width="{pw}" height="{ph}" '
        f'fill="none" stroke="#333"/>',
    ]
    for i in range(5):
        xv = x0 + (x1 - x0) * i / 4
        yv = y0 + (y1 - y0) * i / 4
        parts.append(
            f'<text x="{sx(xv):.1f}" y="{height - 30}" text-anchor="middle" '
            f'font-size="11" font-family="sans-serif">{xv:.3g}</text>')
        lab = 10 ** yv if logy else yv
        parts.append(
            f'<text x="{mleft - 6}" y="{sy(yv):.1f}" text-anchor="end" '
            f'font-size="11" font-family="sans-serif">{lab:.3g}</text>')
        parts.append(f'<line x1="{mleft}" y1="{sy(yv):.1f}" x2="{width - mright}" '
                     f'y2="{sy(yv):.1f}" stroke="#ddd"/>')
    parts.append(
        f'<text x="{width / 2}" y="{height - 10}" text-anchor="middle" '
        f'font-size="12" font-family="sans-serif">{xlabel}</text>')
    parts.append(
        f'<text x="16" y="{height / 2}" text-anchor="middle" font-size="12" '
        f'font-family="sans-serif" transform="rotate(-90 16 {height / 2})">'
        f'{ylabel}</text>')
    for k, (name, x, y) in enumerate(series):
        y = np.log10(np.maximum(np.asarray(y, dtype=float), 1e-300)) \
            if logy else np.asarray(y, dtype=float)
        ok = np.isfinite(x) & np.isfinite(y)
        pts = " ".join(f"{sx(a):.1f},{sy(b):.1f}" for a, b in
                       zip(np.asarray(x)[ok], y[ok]))
        color = colors[k % len(colors)]
        parts.append(f'<polyline points="{pts}" fill="none" '
                     f'stroke="{color}" stroke-width="1.5"/>')
        parts.append(f'<text x="{width - mright - 10}" y="{mtop + 16 + 16 * k}" '
                     f'text-anchor="end" font-size="11" fill="{color}" '
                     f'font-family="sans-serif">{name}</text>')
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")
    return path


def _model_block(model: ScalarMeanFieldModel) -> dict:
    return {"name": model.name, "beta": model.beta, "sigma": model.sigma}


def cmd_stationary(cfg: ExperimentConfig) -> int:
    model = cfg.build()
    rep = self_consistent_roots(model, scan_range=cfg.scan_range,
                                n_scan=cfg.n_scan,
                                grid_spec=cfg.grid_spec())
    sigma_c = None
    if model.symmetric and model.beta != 0.0:
        cs = critical_sigma(model, (0.1 * model.sigma, 3.0 * model.sigma),
                            grid_spec=cfg.grid_spec())
        sigma_c = cs.sigma_c
    files = [write_csv(cfg.out_dir, "psi.csv", ["m", "psi"],
                       [rep.psi_at_scan[:, 0], rep.psi_at_scan[:, 1]])]
    files.append(write_report(cfg.out_dir, "stationary.json", {
        "command": "stationary",
        "model": _model_block(model),
        "roots": list(map(float, rep.roots)),
        "s0_per_root": list(map(float, rep.s0_per_root)),
        "fold_flags": list(map(bool, rep.fold_flags)),
        "branch_count": rep.branch_count,
        "sigma_c": sigma_c,
    }))
    write_manifest(cfg.out_dir, "stationary", files)
    return 0


def _analyze_root(model, m_root, cfg: ExperimentConfig):
    gibbs = build_gibbs(model, m_root, cfg.grid_spec())
    basis = build_basis(gibbs, cfg.basis_degree)
    spectrum = base_spectrum(dirichlet_matrix(gibbs, basis))
    coupling = coupling_vectors(gibbs, basis, spectrum)
    mode = unstable_mode(spectrum, coupling)
    return gibbs, basis, spectrum, coupling, mode


def cmd_spectrum(cfg: ExperimentConfig) -> int:
    model = cfg.build()
    rep = self_consistent_roots(model, scan_range=cfg.scan_range,
                                n_scan=cfg.n_scan, grid_spec=cfg.grid_spec())
    if cfg.spectrum_root == "all":
        targets = rep.roots
    else:
        targets = [min(rep.roots,
                       key=lambda r: abs(r - float(cfg.spectrum_root)))]
    blocks = []
    files = []
    for i, m_root in enumerate(targets):
        _, _, spectrum, coupling, mode = _analyze_root(model, m_root, cfg)
        lams = np.linspace(0.0, max(1.0, 3 * spectrum.values[1]), 201)
        svals = [secular_function(spectrum, coupling, l) for l in lams]
        files.append(write_csv(cfg.out_dir, f"secular_root{i}.csv",
                               ["lambda", "S"], [lams, np.array(svals)]))
        blocks.append({
            "m_root": float(m_root),
            "lambda_i": [float(v) for v in spectrum.values[:13]],
            "S0": float(secular_function(spectrum, coupling, 0.0)),
            "lambda_star": None if mode.lambda_star is None
            else float(mode.lambda_star),
            "lambda0": {"re": float(mode.lambda0.real),
                        "im": float(mode.lambda0.imag)},
            "k0": mode.k0,
            "verdict": mode.verdict,
            "f_star": None if mode.f_star is None
            else [float(v) for v in mode.f_star],
        })
    files.append(write_report(cfg.out_dir, "spectrum.json", {
        "command": "spectrum",
        "model": _model_block(model),
        "roots": blocks,
    }))
    write_manifest(cfg.out_dir, "spectrum", files)
    return 0


def _load_custom_direction(path, gibbs):
    data = np.genfromtxt(path, delimiter=",", names=True)
    return np.interp(gibbs.rule.nodes, data["x"], data["h"])


def cmd_instability(cfg: ExperimentConfig, seed: int | None = None) -> int:
    model = cfg.build()
    seed = cfg.seed if seed is None else seed
    rep = self_consistent_roots(model, scan_range=cfg.scan_range,
                                n_scan=cfg.n_scan, grid_spec=cfg.grid_spec())
    order = np.argsort(rep.s0_per_root)[::-1]
    m_root = rep.roots[int(order[0])]
    gibbs, basis, spectrum, coupling, mode = _analyze_root(model, m_root, cfg)
    files: list[str] = []
    if mode.verdict != "unstable":
        files.append(write_report(cfg.out_dir, "instability.json", {
            "command": "instability",
            "model": _model_block(model),
            "status": "no-unstable-mode",
            "m_root": float(m_root),
        }))
        write_manifest(cfg.out_dir, "instability", files)
        print("no unstable mode: every branch has a nonpositive "
              "spectral abscissa")
        return 0

    delta = cfg.delta
    if cfg.direction == "custom-file":
        if not cfg.custom_file:
            raise ValueError("direction=custom-file needs custom_file=...")
        h = _load_custom_direction(cfg.custom_file, gibbs)
        from .perturb import PerturbationSpec, default_truncation_level
        coeff = (basis.node_values * (gibbs.rule.weights * gibbs.density)) @ h
        M = cfg.trunc_M or default_truncation_level(gibbs, h)
        g_M, gamma = truncate_center(gibbs, h, M)
        center = float(gibbs.moment(np.clip(h, -M, M)))
        pspec = PerturbationSpec(basis=basis, h_poly=coeff, M=float(M),
                                 center=center, delta=delta,
                                 gamma_check=gamma, label="custom-file")
        mu_delta = perturbed_measure(gibbs, g_M, delta)
    else:
        pspec, mu_delta = make_perturbation(gibbs, basis, spectrum, mode,
                                            delta=delta,
                                            direction=cfg.direction,
                                            M=cfg.trunc_M)

    fstar_poly = spectrum.vectors @ mode.f_star
    fstar_nodes = basis.eval_series(fstar_poly, gibbs.rule.nodes)
    fstar_ref = gibbs.moment(fstar_nodes)
    c0 = delta * gibbs.moment(pspec.g_M_at(gibbs.rule.nodes) * fstar_nodes)
    band = 10.0 * delta
    stop_level = cfg.stop_band_factor * band

    if cfg.engine == "fp":
        grid = auto_grid(model, m_values=tuple(rep.roots) + (0.0,),
                         n_cells=cfg.n_cells)
        ss = discrete_stationary(model, grid, m_root)
        rho0 = ss.rho * (1.0 + delta * pspec.g_M_at(grid.centers))
        st = state_from_density(rho0, model, grid)
        dt = cfg.dt or default_dt(model, grid)
        fstar_grid = basis.eval_series(fstar_poly, grid.centers)
        fstar_inf = float(np.dot(fstar_grid, ss.rho) * grid.dx)
        ref_cdf = np.cumsum(ss.rho) * grid.dx
        edges_x = grid.centers

        def w1_obs_rho(rho):
            return w1_density(edges_x, np.cumsum(rho) * grid.dx, ref_cdf)

        series, frames = fp_evolve(
            st, model, grid, t_end=cfg.t_end, dt=dt,
            observers={"fstar": lambda x: fstar_grid}, stride=cfg.stride,
            store_frames=True,
            stop_condition=lambda t, m: abs(m - ss.m) > stop_level)
        w1_ser = np.array([w1_obs_rho(r) for r in frames.rhos])
        m_ser = series["m"]
        m_center = ss.m
        pair = series["fstar"] - fstar_inf
    else:
        xs = sample_measure(mu_delta, cfg.n_particles, seed=seed)
        nodes, ref_cdf = gibbs.rule.nodes, gibbs.cdf
        obs = {
            "fstar": lambda p: float(np.mean(np.interp(p, nodes, fstar_nodes))),
            "w1": lambda p: w1_density(nodes, empirical_cdf(p, nodes), ref_cdf),
        }
        sim = SimConfig(
            dt=cfg.dt, t_end=cfg.t_end, n_particles=cfg.n_particles,
            seed=seed, observers=obs, stride=cfg.stride,
            stop_condition=lambda t, m: abs(m - m_root) > stop_level)
        series = evolve(make_ensemble(xs, model, seed=seed), model, sim)
        w1_ser = series["w1"]
        m_ser = series["m_hat"]
        m_center = m_root
        pair = series["fstar"] - fstar_ref

    apair = np.abs(pair)
    escape = np.abs(m_ser - m_center) > band
    escape_time = float(series.times[escape][0]) if escape.any() else None
    side = np.sign(m_ser[-1] - m_center)
    same_side = [r for r in rep.roots
                 if abs(r - m_root) > band and np.sign(r - m_center) == side]
    if escape.any() and same_side:
        # the branch being approached on the departure side
        final_branch = float(min(same_side, key=lambda r: abs(r - m_center)))
    else:
        final_branch = float(min(rep.roots, key=lambda r: abs(r - m_ser[-1])))
    files.append(write_csv(cfg.out_dir, "series.csv",
                           ["t", "m", "fstar_pairing", "w1"],
                           [series.times, m_ser, pair, w1_ser]))
    files.append(svg_line_plot(
        os.path.join(cfg.out_dir, "instability.svg"),
        f"escape from the branch at m={m_center:.4g}", "t", "value",
        [("|pairing|", series.times, apair),
         ("|m - m_root|", series.times, np.abs(m_ser - m_center)),
         ("W1", series.times, w1_ser)], logy=True))

    status = "ok"
    fitted = rel_err = None
    lo, hi = 2 * abs(c0), 10 * abs(c0)
    window = (apair >= lo) & (apair <= hi) if c0 != 0 else np.zeros_like(
        apair, dtype=bool)
    if c0 == 0 or window.sum() < 3:
        status = "inconclusive"
    else:
        t_lo = float(series.times[window][0])
        t_hi = float(series.times[window][-1])
        fitted = fit_exp_rate(series.times, apair, (t_lo, t_hi))
        rel_err = abs(fitted - mode.lambda_star) / mode.lambda_star
    files.append(write_report(cfg.out_dir, "instability.json", {
        "command": "instability",
        "model": _model_block(model),
        "status": status,
        "m_root": float(m_root),
        "engine": cfg.engine,
        "delta": delta,
        "seed": seed,
        "lambda_star": float(mode.lambda_star),
        "initial_pairing": float(c0),
        "fitted_rate": None if fitted is None else float(fitted),
        "relative_error": None if rel_err is None else float(rel_err),
        "escape_time": escape_time,
        "final_branch": final_branch,
        "w1_initial": float(w1_ser[0]),
        "w1_final": float(w1_ser[-1]),
        "w1_at_escape": None if escape_time is None
        else float(w1_ser[escape][0]),
    }))
    write_manifest(cfg.out_dir, "instability", files)
    if status == "inconclusive":
        print("inconclusive: the observable never traversed the fit window")
        return 2
    return 0


def _sweep_point(model, sigma, cfg):
    mdl = model.with_params(sigma=sigma)
    rep = self_consistent_roots(mdl, scan_range=cfg.scan_range,
                                n_scan=max(401, cfg.n_scan // 4),
                                grid_spec=cfg.grid_spec())
    m0 = min(rep.roots, key=abs)
    i0 = rep.roots.index(m0)
    s0 = rep.s0_per_root[i0]
    lam = None
    try:
        _, _, spectrum, coupling, mode = _analyze_root(mdl, m0, cfg)
        lam = mode.lambda_star
    except ValueError:
        pass
    m_plus = max(rep.roots)
    m_minus = min(rep.roots)
    return {
        "sigma": sigma,
        "branch_count": rep.branch_count,
        "m_minus": m_minus if rep.branch_count > 1 else np.nan,
        "m_zero": m0,
        "m_plus": m_plus if rep.branch_count > 1 else np.nan,
        "s0_zero": s0,
        "lambda_star": np.nan if lam is None else lam,
    }


def cmd_sweep(cfg: ExperimentConfig) -> int:
    model = cfg.build()
    sigmas = np.linspace(cfg.sweep_range[0], cfg.sweep_range[1], cfg.n_sigma)
    workers = int(os.environ.get("MVSTAB_THREADS",
                                 min(4, os.cpu_count() or 1)))
    with ThreadPoolExecutor(max_workers=max(1, workers)) as ex:
        rows = list(ex.map(lambda s: _sweep_point(model, float(s), cfg),
                           sigmas))
    cols = ["sigma", "branch_count", "m_minus", "m_zero", "m_plus",
            "s0_zero", "lambda_star"]
    files = [write_csv(cfg.out_dir, "sweep.csv", cols,
                       [np.array([r[c] for r in rows]) for c in cols])]
    cs = critical_sigma(model, cfg.sweep_range, grid_spec=cfg.grid_spec()) \
        if model.symmetric else None
    files.append(write_report(cfg.out_dir, "sweep.json", {
        "command": "sweep",
        "model": _model_block(model),
        "sigma_c": None if cs is None else cs.sigma_c,
        "n_points": len(rows),
    }))
    files.append(svg_line_plot(
        os.path.join(cfg.out_dir, "sweep.svg"),
        "branch structure over the noise level", "sigma", "m, S0",
        [("m_plus", sigmas, np.array([r["m_plus"] for r in rows])),
         ("S0(0)", sigmas, np.array([r["s0_zero"] for r in rows]))]))
    write_manifest(cfg.out_dir, "sweep", files)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mvstab",
        description="stability analysis of stationary states of 1-D "
                    "mean-field SDEs")
    parser.add_argument("command",
                        choices=["stationary", "spectrum", "instability",
                                 "sweep"])
    parser.add_argument("--config", required=True)
    parser.add_argument("--out", default=None,
                        help="output directory (default from config)")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the simulation seed")
    try:
        args = parser.parse_args(argv)
    except SystemExit as se:
        # keep exit code 2 reserved for inconclusive runs
        return 0 if se.code == 0 else 1
    try:
        cfg = load_config(args.config)
        if args.out is not None:
            cfg.out_dir = args.out
        os.makedirs(cfg.out_dir, exist_ok=True)
        if args.command == "stationary":
            return cmd_stationary(cfg)
        if args.command == "spectrum":
            return cmd_spectrum(cfg)
        if args.command == "instability":
            return cmd_instability(cfg, seed=args.seed)
        return cmd_sweep(cfg)
    except Exception as exc:     # noqa: BLE001 - single CLI error funnel
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
