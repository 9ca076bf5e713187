"""Time-stepping loop, diagnostics, energy-dissipation audits.

A run iterates the implicit step and records, per step, the energy
split, both dissipation integrals, the mass, the height range, the
Euler-Lagrange residual, and the slack of the one-step
energy-dissipation inequality

    E[u_k] >= E[u_{k+1}] + h * int |j_{k+1}|^p / m(u_k)^(1/alpha) dx.

The slack is allowed to dip below zero only by the audit tolerance
eps_min^p * |domain| + 10 * tol_grad (smoothing bias plus the gradient
stopping error); anything worse raises.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .grid import Grid, integrate
from .models import ModelParams, energy, unmodified_potential
from .step import StepNonconvergenceError, StepParams, solve_step

__all__ = [
    "InitialDataSpec",
    "RunConfig",
    "StepDiagnostics",
    "TimeSeries",
    "EnergyAuditError",
    "parabola_profile",
    "run",
    "run_many",
    "audit_ede",
    "AuditReport",
    "sigma_continuation",
    "ContinuationReport",
    "holder_quotient",
]


def parabola_profile(g, M):
    """The touching parabola 3M/2 (1 - x^2) sampled at cell centers (domain (0,1))."""
    if abs(g.L - 1.0) > 1e-12:
        raise ValueError("the touching parabola is defined on the unit interval")
    x = g.cell_centers()
    return 1.5 * M * (1.0 - x * x)


@dataclass(frozen=True)
class InitialDataSpec:
    """Initial film height.

    kinds:
      constant          u0 = M
      cosine            u0 = M + amplitude * cos(mode * pi * x / L)
      parabola          u0 = 3M/2 (1 - x^2)  (touches zero at x = 1)
      lifted_parabola   u0 = delta + (1 - delta/M) * parabola  (same mass M)
      cos_bumps         u0 = background + amplitude * sum of cos^2 bumps
                        of half-width `width` at `centers`
      values            explicit cell values
    """

    kind: str
    M: float = 1.0
    amplitude: float = 0.0
    mode: int = 1
    delta: float = 0.0
    background: float = 0.0
    width: float = 0.0
    centers: Optional[tuple] = None
    values: Optional[tuple] = None

    def build(self, g):
        if self.kind == "constant":
            return np.full(g.N, self.M)
        if self.kind == "cosine":
            x = g.cell_centers()
            return self.M + self.amplitude * np.cos(self.mode * np.pi * x / g.L)
        if self.kind == "parabola":
            return parabola_profile(g, self.M)
        if self.kind == "lifted_parabola":
            return self.delta + (1.0 - self.delta / self.M) * parabola_profile(g, self.M)
        if self.kind == "cos_bumps":
            x = g.cell_centers()
            u = np.full(g.N, self.background)
            for c in self.centers or ():
                y = np.clip(np.abs(x - c) / self.width, 0.0, 1.0)
                u += self.amplitude * np.cos(0.5 * np.pi * y) ** 2
            return u
        if self.kind == "values":
            vals = np.asarray(self.values, dtype=float)
            if vals.shape != (g.N,):
                raise ValueError(f"initial values must have length {g.N}")
            return vals
        raise ValueError(f"unknown initial data kind {self.kind!r}")


@dataclass(frozen=True)
class RunConfig:
    grid: Grid
    model: ModelParams
    step: StepParams
    T: float
    record_every: int = 1
    initial: InitialDataSpec = InitialDataSpec("constant")

    def __post_init__(self):
        if self.T < self.step.h:
            raise ValueError("final time must cover at least one step")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")

    @property
    def n_steps(self):
        return int(math.ceil(self.T / self.step.h - 1e-9))

    @property
    def tol_audit(self):
        return self.step.eps_min ** self.model.p * self.grid.L + 10.0 * self.step.tol_grad


@dataclass(frozen=True)
class StepDiagnostics:
    t: float
    mass: float
    min_u: float
    max_u: float
    E_dirichlet: float
    E_potential: float
    E_total: float
    diss_flux: float
    diss_strong: float
    ede_slack: float
    el_residual: float
    newton_iters: int


@dataclass
class TimeSeries:
    config: RunConfig
    diagnostics: list = field(default_factory=list)
    snapshots: dict = field(default_factory=dict)

    @property
    def times(self):
        return np.array([d.t for d in self.diagnostics])

    @property
    def snapshot_times(self):
        return list(self.snapshots.keys())

    def column(self, name):
        return np.array([getattr(d, name) for d in self.diagnostics])


class EnergyAuditError(RuntimeError):
    """A step violated the energy-dissipation inequality beyond tolerance."""


def _diag_row(g, t, u, mp, res=None, slack=0.0):
    e = energy(g, u, mp)
    return StepDiagnostics(
        t=t,
        mass=integrate(g, u),
        min_u=float(np.min(u)),
        max_u=float(np.max(u)),
        E_dirichlet=e.dirichlet,
        E_potential=e.potential,
        E_total=e.total,
        diss_flux=0.0 if res is None else res.dissipation_flux_term,
        diss_strong=0.0 if res is None else res.dissipation_strong_term,
        ede_slack=slack,
        el_residual=0.0 if res is None else res.el_residual_norm,
        newton_iters=0 if res is None else res.newton_iters,
    )


def run(cfg):
    """March the scheme from the configured initial height.

    Diagnostics are recorded every step; snapshots every
    ``record_every`` steps (plus the initial and final states).
    Solver nonconvergence propagates with the failing step index.
    """
    g, model, sp = cfg.grid, cfg.model, cfg.step
    mp = model.modified()
    u = cfg.initial.build(g)
    e0 = energy(g, u, mp)
    if not math.isfinite(e0.total):
        raise ValueError("initial height has infinite energy under the barrier")

    series = TimeSeries(config=cfg)
    series.diagnostics.append(_diag_row(g, 0.0, u, mp))
    series.snapshots[0.0] = u.copy()

    e_prev = e0.total
    for k in range(cfg.n_steps):
        try:
            res = solve_step(g, u, model, sp)
        except StepNonconvergenceError as exc:
            raise StepNonconvergenceError(
                f"step {k + 1} (t = {(k + 1) * sp.h:g}) failed: {exc}",
                u_last=exc.u_last,
                j_last=exc.j_last,
                grad_norm=exc.grad_norm,
            ) from exc
        t = (k + 1) * sp.h
        slack = e_prev - res.energy_after.total - sp.h * res.dissipation_flux_term
        if slack < -cfg.tol_audit:
            raise EnergyAuditError(
                f"step {k + 1}: EDI slack {slack:.3e} below -{cfg.tol_audit:.3e}"
            )
        u = res.u_next
        series.diagnostics.append(_diag_row(g, t, u, mp, res, slack))
        if (k + 1) % cfg.record_every == 0 or k + 1 == cfg.n_steps:
            series.snapshots[t] = u.copy()
        e_prev = res.energy_after.total
    return series


def run_many(configs, threads=None):
    """Run independent configurations in parallel, preserving order."""
    if threads is None or threads <= 1:
        return [run(c) for c in configs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(run, configs))


# ---------------------------------------------------------------------------
# audits

@dataclass(frozen=True)
class AuditReport:
    s_idx: int
    t_idx: int
    slack: float
    equality_defect: float
    tol: float
    ok: bool


def audit_ede(series, s_idx, t_idx):
    """Audit the two-sided energy-dissipation balance between two steps.

    slack = E(t) + sum_k h [ alpha/(alpha+1) diss_flux_k
                             + 1/(alpha+1) diss_strong_k ] - E(s):
    non-positive (within tolerance) by the step inequality; its
    magnitude is the equality defect, which shrinks with tol_grad and
    eps_min because the balance is exact only at the continuum optimum.
    """
    n = len(series.diagnostics)
    if not 0 <= s_idx < t_idx < n:
        raise IndexError(f"need 0 <= s_idx < t_idx < {n}")
    cfg = series.config
    alpha = cfg.model.alpha
    h = cfg.step.h
    dsum = 0.0
    for k in range(s_idx + 1, t_idx + 1):
        d = series.diagnostics[k]
        dsum += h * (
            alpha / (alpha + 1.0) * d.diss_flux + 1.0 / (alpha + 1.0) * d.diss_strong
        )
    slack = series.diagnostics[t_idx].E_total + dsum - series.diagnostics[s_idx].E_total
    tol = cfg.tol_audit * (t_idx - s_idx)
    return AuditReport(
        s_idx=s_idx,
        t_idx=t_idx,
        slack=slack,
        equality_defect=abs(slack),
        tol=tol,
        ok=slack <= tol,
    )


# ---------------------------------------------------------------------------
# sigma continuation

@dataclass(frozen=True)
class ContinuationReport:
    sigmas: tuple
    mass_drifts: tuple          # 2 sigma |domain| per sigma
    h1_shifts: tuple            # 2 sigma |domain|^(1/2) per sigma
    sup_distances: tuple        # between consecutive sigma solutions
    limit_edi_min_slack: tuple  # min over time of E[u0^s] - E[u](t) - strong diss
    tol_audit: float
    min_heights: tuple
    series: tuple


def sigma_continuation(u0_nonneg, sigmas, cfg):
    """Run the scheme for a decreasing barrier sequence.

    Each sigma lifts the non-negative datum to u0 + 2*sigma (strictly
    positive, >= 2*sigma, so the barrier leaves the initial energy
    untouched), runs the scheme, and checks the limit inequality with
    the unmodified energy: potential evaluated through the base G on
    cells with height >= 2*sigma.
    """
    u0_nonneg = np.asarray(u0_nonneg, dtype=float)
    if np.any(u0_nonneg < 0):
        raise ValueError("base initial datum must be non-negative")
    sigmas = tuple(float(s) for s in sigmas)
    if any(s2 >= s1 for s1, s2 in zip(sigmas, sigmas[1:])):
        raise ValueError("sigmas must be strictly decreasing")
    g = cfg.grid

    all_series = []
    min_heights = []
    edi_slacks = []
    for s in sigmas:
        u0 = u0_nonneg + 2.0 * s
        model = replace(cfg.model, sigma=s)
        c = replace(cfg, model=model, initial=InitialDataSpec("values", values=tuple(u0)))
        try:
            series = run(c)
        except StepNonconvergenceError as exc:
            raise StepNonconvergenceError(f"sigma={s:g}: {exc}") from exc
        all_series.append(series)
        min_heights.append(min(d.min_u for d in series.diagnostics))

        base_mp = unmodified_potential(cfg.model.potential)
        e0 = energy(g, u0, base_mp).total
        h = cfg.step.h
        diss_cum = 0.0
        worst = math.inf
        for k, d in enumerate(series.diagnostics):
            if k > 0:
                diss_cum += h * d.diss_strong
            ut = series.snapshots.get(d.t)
            if ut is None:
                continue
            du_sq = energy(g, ut, base_mp).dirichlet
            pot_vals = cfg.model.potential.g(ut)
            pot = float(np.sum(pot_vals[ut >= 2.0 * s]) * g.dx)
            worst = min(worst, e0 - (du_sq + pot) - diss_cum)
        edi_slacks.append(worst)

    sup_distances = []
    for sa, sb in zip(all_series, all_series[1:]):
        shared = sorted(set(sa.snapshots) & set(sb.snapshots))
        if not shared:
            raise ValueError("no matched snapshot times between consecutive runs")
        sup_distances.append(
            max(float(np.max(np.abs(sa.snapshots[t] - sb.snapshots[t]))) for t in shared)
        )

    return ContinuationReport(
        sigmas=sigmas,
        mass_drifts=tuple(2.0 * s * g.L for s in sigmas),
        h1_shifts=tuple(2.0 * s * math.sqrt(g.L) for s in sigmas),
        sup_distances=tuple(sup_distances),
        limit_edi_min_slack=tuple(edi_slacks),
        tol_audit=cfg.tol_audit,
        min_heights=tuple(min_heights),
        series=tuple(all_series),
    )


def holder_quotient(series, alpha):
    """max over snapshot pairs of |u(t) - u(s)|_inf / |t - s|^(1/(5 alpha + 3)).

    Tracks the time-Hoelder seminorm the scheme inherits from the
    energy bound; the pairing constant is E^sigma[u0]^(1/2), available
    from the first diagnostics row.
    """
    items = sorted(series.snapshots.items())
    if len(items) < 2:
        raise ValueError("need at least two snapshots")
    expo = 1.0 / (5.0 * alpha + 3.0)
    best = 0.0
    for i in range(len(items)):
        ti, ui = items[i]
        for j in range(i + 1, len(items)):
            tj, uj = items[j]
            best = max(best, float(np.max(np.abs(uj - ui))) / (tj - ti) ** expo)
    return best
