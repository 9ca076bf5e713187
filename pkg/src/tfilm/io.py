"""Configuration parsing and run artifacts (CSV, JSON, SVG).

Configs are flat JSON with a strict schema: unknown keys are rejected
so a typo in a sweep cannot silently fall back to a default.  All
floating-point output carries 17 significant digits, which round-trips
doubles exactly, and re-running a config byte-reproduces
diagnostics.csv.
"""

import json
import os
from pathlib import Path

import numpy as np

from .driver import InitialDataSpec, RunConfig
from .grid import Grid
from .models import (
    MobilitySpec,
    PotentialSpec,
    constant_mobility,
    navier_slip_mobility,
    power_mobility,
    quadratic_potential,
    strong_singular_potential,
    zero_potential,
)
from .models import ModelParams
from .step import StepParams

__all__ = [
    "ConfigError",
    "parse_config",
    "parse_config_file",
    "echo_config",
    "write_timeseries",
    "write_summary",
    "write_csv",
    "fmt",
    "DirectoryLock",
    "line_plot_svg",
]

DIAGNOSTICS_HEADER = (
    "t,mass,min_u,max_u,E_dirichlet,E_potential,E_total,"
    "diss_flux,diss_strong,ede_slack,el_residual,newton_iters"
)

_RUN_KEYS = {
    "L", "N", "h", "T", "alpha", "mobility", "potential", "sigma",
    "record_every", "eps0", "eps_min", "rho", "tol_grad", "max_newton",
    "armijo_c", "tau_boundary", "initial",
}

_STEP_DEFAULTS = StepParams(h=1.0)


class ConfigError(ValueError):
    """Invalid or unparsable configuration."""


def fmt(x):
    """Serialise a float with 17 significant digits (exact round trip)."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def _reject_unknown(d, allowed, where):
    unknown = set(d) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(sorted(unknown))}")


def _require(d, key, where):
    if key not in d:
        raise ConfigError(f"missing required key {key!r} in {where}")
    return d[key]


def _parse_mobility(raw):
    if isinstance(raw, str):
        raw = {"kind": raw}
    if not isinstance(raw, dict):
        raise ConfigError("mobility must be an object or a kind string")
    kind = _require(raw, "kind", "mobility")
    if kind == "power":
        _reject_unknown(raw, {"kind", "n"}, "mobility")
        return power_mobility(_require(raw, "n", "mobility(power)"))
    if kind == "navier_slip":
        _reject_unknown(raw, {"kind", "lambda", "alpha"}, "mobility")
        return navier_slip_mobility(
            _require(raw, "lambda", "mobility(navier_slip)"),
            _require(raw, "alpha", "mobility(navier_slip)"),
        )
    if kind == "constant_one":
        _reject_unknown(raw, {"kind"}, "mobility")
        return constant_mobility()
    raise ConfigError(f"unknown mobility kind {kind!r}")


def _parse_potential(raw):
    if isinstance(raw, str):
        raw = {"kind": raw}
    if not isinstance(raw, dict):
        raise ConfigError("potential must be an object or a kind string")
    kind = _require(raw, "kind", "potential")
    if kind == "zero":
        _reject_unknown(raw, {"kind"}, "potential")
        return zero_potential()
    if kind == "quadratic":
        _reject_unknown(raw, {"kind", "a"}, "potential")
        return quadratic_potential(_require(raw, "a", "potential(quadratic)"))
    if kind == "strong_singular":
        _reject_unknown(raw, {"kind", "A"}, "potential")
        return strong_singular_potential(_require(raw, "A", "potential(strong_singular)"))
    raise ConfigError(f"unknown potential kind {kind!r}")


_INITIAL_KEYS = {
    "constant": {"kind", "M"},
    "cosine": {"kind", "M", "amplitude", "mode"},
    "parabola": {"kind", "M"},
    "lifted_parabola": {"kind", "M", "delta"},
    "cos_bumps": {"kind", "background", "amplitude", "width", "centers"},
    "values": {"kind", "values"},
}


def _parse_initial(raw):
    if raw is None:
        return InitialDataSpec("constant", M=1.0)
    if not isinstance(raw, dict):
        raise ConfigError("initial must be an object")
    kind = _require(raw, "kind", "initial")
    if kind not in _INITIAL_KEYS:
        raise ConfigError(f"unknown initial kind {kind!r}")
    _reject_unknown(raw, _INITIAL_KEYS[kind], "initial")
    kwargs = {k: v for k, v in raw.items() if k != "kind"}
    if "centers" in kwargs:
        kwargs["centers"] = tuple(kwargs["centers"])
    if "values" in kwargs:
        kwargs["values"] = tuple(kwargs["values"])
    return InitialDataSpec(kind, **kwargs)


def parse_config(data):
    """Validate a simulate-style config dict into a RunConfig."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    _reject_unknown(data, _RUN_KEYS, "config")

    N = int(_require(data, "N", "config"))
    L = float(data.get("L", 1.0))
    if N < 4:
        raise ConfigError("N must be at least 4")
    if L <= 0:
        raise ConfigError("L must be positive")

    alpha = float(_require(data, "alpha", "config"))
    if alpha <= 0:
        raise ConfigError("alpha must be positive")
    sigma = _require(data, "sigma", "config")
    if sigma is not None:
        sigma = float(sigma)
        if not 0.0 < sigma < 1.0:
            raise ConfigError("sigma must be in (0,1)")

    h = float(_require(data, "h", "config"))
    if h <= 0:
        raise ConfigError("h must be positive")
    T = float(_require(data, "T", "config"))

    step_kwargs = {"h": h}
    for key in ("eps0", "eps_min", "rho", "tol_grad", "armijo_c", "tau_boundary"):
        if key in data:
            step_kwargs[key] = float(data[key])
    if "max_newton" in data:
        step_kwargs["max_newton"] = int(data["max_newton"])
    try:
        step = StepParams(**step_kwargs)
        model = ModelParams(
            alpha=alpha,
            mobility=_parse_mobility(_require(data, "mobility", "config")),
            potential=_parse_potential(_require(data, "potential", "config")),
            sigma=sigma,
        )
        return RunConfig(
            grid=Grid(L=L, N=N),
            model=model,
            step=step,
            T=T,
            record_every=int(data.get("record_every", 1)),
            initial=_parse_initial(data.get("initial")),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def parse_config_file(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc


def echo_config(cfg):
    """Normalised dict representation; parse_config(echo_config(c)) == c."""
    model, step, init = cfg.model, cfg.step, cfg.initial
    mob = {"kind": model.mobility.kind}
    if model.mobility.kind == "power":
        mob["n"] = model.mobility.n
    elif model.mobility.kind == "navier_slip":
        mob["lambda"] = model.mobility.lam
        mob["alpha"] = model.mobility.alpha
    pot = {"kind": model.potential.kind}
    if model.potential.kind == "quadratic":
        pot["a"] = model.potential.a
    elif model.potential.kind == "strong_singular":
        pot["A"] = model.potential.A
    initial = {"kind": init.kind}
    for key in sorted(_INITIAL_KEYS[init.kind] - {"kind"}):
        val = getattr(init, key)
        if val is not None:
            initial[key] = list(val) if isinstance(val, tuple) else val
    return {
        "L": cfg.grid.L,
        "N": cfg.grid.N,
        "h": step.h,
        "T": cfg.T,
        "alpha": model.alpha,
        "mobility": mob,
        "potential": pot,
        "sigma": model.sigma,
        "record_every": cfg.record_every,
        "eps0": step.eps0,
        "eps_min": step.eps_min,
        "rho": step.rho,
        "tol_grad": step.tol_grad,
        "max_newton": step.max_newton,
        "armijo_c": step.armijo_c,
        "tau_boundary": step.tau_boundary,
        "initial": initial,
    }


# ---------------------------------------------------------------------------
# artifact writers

def write_csv(path, header, rows):
    lines = [header]
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def write_timeseries(series, outdir):
    """diagnostics.csv, per-snapshot u_t<stamp>.csv, summary.json, SVG plots."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    rows = [
        (d.t, d.mass, d.min_u, d.max_u, d.E_dirichlet, d.E_potential, d.E_total,
         d.diss_flux, d.diss_strong, d.ede_slack, d.el_residual, d.newton_iters)
        for d in series.diagnostics
    ]
    write_csv(outdir / "diagnostics.csv", DIAGNOSTICS_HEADER, rows)

    x = series.config.grid.cell_centers()
    for t, u in series.snapshots.items():
        write_csv(outdir / f"u_t{t:.9g}.csv", "x,u", zip(x, u))

    times = series.times
    line_plot_svg(outdir / "energy.svg", times, series.column("E_total"),
                  "t", "E_total")
    line_plot_svg(outdir / "minu.svg", times, series.column("min_u"),
                  "t", "min_u")
    return outdir


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serialisable: {type(obj)}")


def write_summary(outdir, payload):
    path = Path(outdir) / "summary.json"
    path.write_text(json.dumps(payload, indent=2, sort_keys=True,
                               default=_json_default) + "\n")
    return path


def line_plot_svg(path, xs, ys, xlabel, ylabel, width=640, height=400):
    """Bare-bones polyline plot; no plotting dependency."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    pad = 50
    x0, x1 = float(np.min(xs)), float(np.max(xs))
    y0, y1 = float(np.min(ys)), float(np.max(ys))
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    px = pad + (xs - x0) / (x1 - x0) * (width - 2 * pad)
    py = height - pad - (ys - y0) / (y1 - y0) * (height - 2 * pad)
    points = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
    svg = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">\n'
        f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" '
        f'height="{height - 2 * pad}" fill="none" stroke="black"/>\n'
        f'<polyline points="{points}" fill="none" stroke="steelblue" stroke-width="1.5"/>\n'
        f'<text x="{width / 2:.0f}" y="{height - 12}" text-anchor="middle">{xlabel}</text>\n'
        f'<text x="14" y="{height / 2:.0f}" text-anchor="middle" '
        f'transform="rotate(-90 14 {height / 2:.0f})">{ylabel}</text>\n'
        f'<text x="{pad}" y="{height - pad + 16}" text-anchor="middle">{x0:.4g}</text>\n'
        f'<text x="{width - pad}" y="{height - pad + 16}" text-anchor="middle">{x1:.4g}</text>\n'
        f'<text x="{pad - 6}" y="{height - pad}" text-anchor="end">{y0:.4g}</text>\n'
        f'<text x="{pad - 6}" y="{pad + 4}" text-anchor="end">{y1:.4g}</text>\n'
        "</svg>\n"
    )
    Path(path).write_text(svg)


class DirectoryLock:
    """Exclusive lock file per output directory.

    Concurrent runs must target distinct directories; a second runner
    pointed at a locked directory fails fast instead of interleaving
    artifacts.
    """

    def __init__(self, outdir):
        self.path = Path(outdir) / ".tfilm.lock"

    def __enter__(self):
        self.path.parent.mkdir(parents=True, exist_ok=True)
        try:
            fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise RuntimeError(
                f"output directory is locked by another run: {self.path}"
            ) from None
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        return self

    def __exit__(self, *exc):
        try:
            self.path.unlink()
        except FileNotFoundError:
            pass
        return False
