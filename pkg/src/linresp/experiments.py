"""Experiment runner: timestep sweeps, estimator comparisons, variance
growth studies, slope fitting, CSV emission."""

from __future__ import annotations

import csv
import os
import tempfile
import time
import warnings
from dataclasses import dataclass, field, asdict, fields as dc_fields

import numpy as np

from .estimators import (ConfigurationError, check_mp_config, estimate_gk,
                         estimate_mp, estimate_nemd)
from .integrators import check_scheme
from .model import BUILTIN_MODELS

ESTIMATOR_NAMES = ("mp1", "mp2", "gk1", "gk2", "nemd")

CSV_COLUMNS = ("example", "scheme", "estimator", "dt", "n_steps",
               "n_realizations", "seed", "estimate", "stderr", "bias",
               "checkpoint_time", "checkpoint_variance", "wall_seconds")


@dataclass
class ExperimentConfig:
    model: str = "example1"
    model_overrides: dict = field(default_factory=dict)
    scheme: str = "bacab"
    estimators: tuple = ("mp1", "mp2")
    dt_grid: tuple = (0.05, 0.1, 0.2, 0.4)
    T_final: float = 100.0
    T_burn: float = 20.0
    n_realizations: int = 100_000
    seed: int = 1
    checkpoints: tuple = ()
    observable: str | None = None
    eta: float = 0.05
    nemd_mode: str = "forward"
    g_coefficient: float | None = None
    center: str | float = "auto"
    reference_value: float | None = None
    reference_provenance: str = ""
    output_path: str | None = None
    workers: int = 1

    def validate(self):
        if self.model not in BUILTIN_MODELS:
            raise ConfigurationError(f"unknown model {self.model!r}")
        check_scheme(self.scheme)
        for est in self.estimators:
            if est not in ESTIMATOR_NAMES:
                raise ConfigurationError(f"unknown estimator {est!r}")
        if not self.dt_grid or any(dt <= 0 for dt in self.dt_grid):
            raise ConfigurationError("dt_grid must be nonempty and positive")
        if self.T_final <= 0:
            raise ConfigurationError("T_final must be positive")
        if any(t > self.T_final for t in self.checkpoints):
            raise ConfigurationError("checkpoints must not exceed T_final")
        if self.nemd_mode not in ("forward", "central"):
            raise ConfigurationError(f"unknown nemd mode {self.nemd_mode!r}")
        if self.reference_value is not None and not self.reference_provenance:
            raise ConfigurationError(
                "a reference_value needs a declared reference_provenance "
                '(e.g. "nemd-oracle", "gaussian-integral")')
        return self

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in dc_fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(
                f"unknown config keys: {', '.join(sorted(unknown))}")
        cfg = cls(**data)
        cfg.estimators = tuple(cfg.estimators)
        cfg.dt_grid = tuple(cfg.dt_grid)
        cfg.checkpoints = tuple(cfg.checkpoints)
        return cfg.validate()


def build_model(config: ExperimentConfig):
    return BUILTIN_MODELS[config.model](**config.model_overrides)


def weight_scale(model, g_coefficient) -> float:
    """Scale on the weight process from a nonstandard g coefficient.

    The weight corresponds to g = c |p|^2 with the consistent default
    c = beta / (4 gamma); a user-supplied c rescales all increments by
    c / (beta / (4 gamma)).
    """
    if g_coefficient is None:
        return 1.0
    return float(g_coefficient) / (model.beta / (4.0 * model.gamma))


def _run_point(config: ExperimentConfig, model, estimator: str, dt: float):
    N = round(config.T_final / dt)
    N_burn = round(config.T_burn / dt)
    cps = tuple(round(t / dt) for t in config.checkpoints)
    common = dict(h=dt, N=N, N_burn=N_burn, M=config.n_realizations,
                  seed=config.seed, workers=config.workers)
    if estimator in ("mp1", "mp2"):
        return estimate_mp(model, config.scheme, estimator,
                           observable=config.observable,
                           checkpoint_steps=cps,
                           weight_scale=weight_scale(model,
                                                     config.g_coefficient),
                           **common)
    if estimator in ("gk1", "gk2"):
        rule = "riemann" if estimator == "gk1" else "trapezoid"
        return estimate_gk(model, config.scheme, rule,
                           center=config.center,
                           observable=config.observable,
                           checkpoint_steps=cps, **common)
    return estimate_nemd(model, config.scheme, config.eta,
                         coupled=True, mode=config.nemd_mode,
                         observable=config.observable, **common)


def run_experiment(config: ExperimentConfig):
    """Run every (dt, estimator) point; returns rows (list of dicts with
    the CSV columns) and writes the CSV + sidecar metadata if an output
    path is configured.

    The wall_seconds column is left empty so equal configs yield
    byte-identical CSVs; timings go to the sidecar file.
    """
    config.validate()
    model = build_model(config)
    # surface invalid pairings before simulating anything
    for est in config.estimators:
        if est in ("mp1", "mp2"):
            check_mp_config(model, config.scheme, est)

    rows = []
    timings = []
    for dt in config.dt_grid:
        for est in config.estimators:
            t0 = time.perf_counter()
            out = _run_point(config, model, est, dt)
            timings.append((est, dt, time.perf_counter() - t0))
            bias = ("" if config.reference_value is None
                    else out.estimate - config.reference_value)
            base = {
                "example": config.model,
                "scheme": config.scheme,
                "estimator": est,
                "dt": dt,
                "n_steps": round(config.T_final / dt),
                "n_realizations": config.n_realizations,
                "seed": config.seed,
                "estimate": out.estimate,
                "stderr": out.stderr,
                "bias": bias,
                "checkpoint_time": "",
                "checkpoint_variance": "",
                "wall_seconds": "",
            }
            rows.append(base)
            for t_k, var_k in out.variance_vs_time:
                cp = dict(base)
                cp["checkpoint_time"] = t_k
                cp["checkpoint_variance"] = var_k
                rows.append(cp)
    if config.output_path:
        write_csv(rows, config.output_path)
        write_sidecar(config, timings, config.output_path + ".meta")
    return rows


def _atomic_write(path: str, text: str):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(rows, path: str):
    import io

    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: row[k] for k in CSV_COLUMNS})
    _atomic_write(path, buf.getvalue())


def write_sidecar(config: ExperimentConfig, timings, path: str):
    from . import __version__

    lines = [f"version={__version__}"]
    for key, value in asdict(config).items():
        lines.append(f"{key}={value}")
    for est, dt, secs in timings:
        lines.append(f"wall_seconds[{est},dt={dt}]={secs:.3f}")
    _atomic_write(path, "\n".join(lines) + "\n")


def read_rows(path: str):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def fit_slope(points):
    """Least-squares line through (log dt, log |bias|).

    Nonpositive bias values are excluded with a warning (statistical noise
    can cross zero); at least 2 points must survive.
    Returns (slope, intercept, r2).
    """
    kept = [(dt, b) for dt, b in points if b > 0]
    dropped = len(points) - len(kept)
    if dropped:
        warnings.warn(f"fit_slope: excluded {dropped} nonpositive bias "
                      "value(s)", stacklevel=2)
    if len(kept) < 2:
        raise ValueError("fit_slope needs at least 2 positive points")
    x = np.log([dt for dt, _ in kept])
    y = np.log([b for _, b in kept])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid ** 2) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), float(r2)


def variance_growth_diagnostics(rows):
    """Per-estimator variance-vs-time fit statistics from checkpoint rows.

    Returns {estimator: {"slope", "r2", "ratio"}} where ratio compares the
    variance at the last checkpoint with the one nearest T_max / 8.
    """
    by_est = {}
    for row in rows:
        if row["checkpoint_time"] == "":
            continue
        by_est.setdefault(row["estimator"], []).append(
            (float(row["checkpoint_time"]),
             float(row["checkpoint_variance"])))
    out = {}
    for est, pts in by_est.items():
        pts = sorted(pts)
        if len(pts) < 3:
            raise ValueError(f"need >= 3 checkpoints for {est}")
        t = np.array([p[0] for p in pts])
        v = np.array([p[1] for p in pts])
        slope, intercept = np.polyfit(t, v, 1)
        resid = v - (slope * t + intercept)
        ss_tot = np.sum((v - v.mean()) ** 2)
        r2 = 1.0 - np.sum(resid ** 2) / ss_tot if ss_tot > 0 else 1.0
        t_target = t[-1] / 8.0
        i_ref = int(np.argmin(np.abs(t - t_target)))
        ratio = v[-1] / v[i_ref]
        out[est] = {"slope": float(slope), "r2": float(r2),
                    "ratio": float(ratio)}
    return out
