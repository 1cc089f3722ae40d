"""Two independent simulation engines for a synthesized model.

The SDE engine discretizes dX = sigma(X) dB by Euler steps with reflection
at accessible finite ends; the CTMC engine runs the birth-death chain whose
generator matches the diffusion's speed measure on a quantile grid.  Both
sample the position at an independent Exp(lam) time T drawn per path from
the path's own stream; infinite supports are truncated at configurable
quantiles, and a path touching a truncation guard restarts from x0 with its
clock running (by memorylessness this leaves the terminal law unchanged)
while the hit is counted and reported.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import EngineMismatch, GridDegenerate, InvalidParameters
from .synthesis import Boundary, DiffusionModel, _integrate_speed_density
from .validation import check_choice, check_int, check_scalar

SIGMA_TABLE_SIZE = 65537
_EMPTY_CELL_MASS = 1e-30  # zero-speed cells pass through instantaneously


@dataclass(frozen=True)
class SimConfig:
    """Simulation settings shared by both engines.

    max_horizon defaults to 40/lam, which caps runtime while adding bias
    below exp(-40); truncation_quantile places the guards for infinite
    supports; n_sites controls the chain grid.
    """

    n_paths: int = 10_000
    dt: float = 1e-3
    truncation_quantile: float = 1e-6
    max_horizon: float | None = None
    seed: int = 0
    engine: str = "sde"
    n_sites: int = 400

    def __post_init__(self):
        check_int(self.n_paths, "n_paths", minimum=1)
        check_scalar(self.dt, "dt", minimum=0.0, include_min=False, maximum=1e-2)
        check_scalar(
            self.truncation_quantile, "truncation_quantile",
            minimum=0.0, include_min=False, maximum=1e-3,
        )
        if self.max_horizon is not None:
            check_scalar(self.max_horizon, "max_horizon", minimum=0.0, include_min=False)
        check_int(self.seed, "seed", minimum=0)
        check_choice(self.engine, "engine", ("sde", "ctmc", "both"))
        check_int(self.n_sites, "n_sites", minimum=50)

    def horizon(self, lam: float) -> float:
        return self.max_horizon if self.max_horizon is not None else 40.0 / lam


@dataclass(frozen=True)
class TerminalSample:
    """Terminal positions from one engine run."""

    values: np.ndarray
    truncation_hits: int
    engine: str
    seed: int
    elapsed_seconds: float


class HittingEstimate(tuple):
    """(mean, stderr) of exp(-lam H_level); plain tuple with named access."""

    def __new__(cls, mean, stderr):
        return super().__new__(cls, (float(mean), float(stderr)))

    @property
    def mean(self):
        return self[0]

    @property
    def stderr(self):
        return self[1]


@dataclass(frozen=True)
class CTMCGrid:
    """Birth-death approximation of the model on a site grid.

    up_rate[i] = 1 / (2 m_i (x_{i+1} - x_i)) and down_rate mirrored, where
    m_i is the speed measure of site i's cell (midpoint cells, closed at the
    truncation bounds).  Cells whose mass diverges at an unreachable finite
    end get zero exit rates, which reproduces the dynamic inaccessibility.
    """

    sites: np.ndarray
    up_rate: np.ndarray
    down_rate: np.ndarray
    cell_mass: np.ndarray
    start_index: int
    guard_left: bool
    guard_right: bool


def _truncation_bounds(model: DiffusionModel, tq: float) -> tuple[float, float, bool, bool]:
    a, b = model.target.support
    guard_l = not math.isfinite(a)
    guard_r = not math.isfinite(b)
    lo = float(model.target.quantile(tq)) if guard_l else a
    hi = float(model.target.quantile(1.0 - tq)) if guard_r else b
    if not lo < hi:
        raise GridDegenerate(f"truncated range [{lo}, {hi}] is empty")
    return lo, hi, guard_l, guard_r


def build_grid(
    model: DiffusionModel,
    n_sites: int = 400,
    truncation_quantile: float = 1e-6,
    *,
    extra_sites: tuple[float, ...] = (),
) -> CTMCGrid:
    """Quantile site grid plus atoms, x0 and any mandatory extra sites."""
    n_sites = check_int(n_sites, "n_sites", minimum=50)
    tq = check_scalar(
        truncation_quantile, "truncation_quantile",
        minimum=0.0, include_min=False, maximum=1e-3,
    )
    t = model.target
    a, b = t.support
    lo, hi, guard_l, guard_r = _truncation_bounds(model, tq)
    p_lo = tq if guard_l else 0.0
    p_hi = 1.0 - tq if guard_r else 1.0
    levels = p_lo + (p_hi - p_lo) * (np.arange(n_sites) + 0.5) / n_sites
    quantile_sites = np.asarray(t.quantile(levels), dtype=float)
    mandatory = {model.x0}
    mandatory.update(xi for xi, _ in t.atoms if lo <= xi <= hi)
    mandatory.update(float(v) for v in extra_sites)
    # guarded supports need the truncation bound itself as the restart site,
    # otherwise the outermost quantile site (mass ~ 1/2n deep) plays guard
    if guard_l:
        mandatory.add(lo)
    if guard_r:
        mandatory.add(hi)
    for v in mandatory:
        if not (lo <= v <= hi):
            raise InvalidParameters(f"site {v} outside the truncated range [{lo}, {hi}]")
    mand = np.array(sorted(mandatory))
    tol = 1e-9 * t.iqr_scale
    keep = np.ones(quantile_sites.size, dtype=bool)
    if mand.size:
        near = np.min(np.abs(quantile_sites[:, None] - mand[None, :]), axis=1)
        keep &= near > tol
    sites = np.unique(np.concatenate([quantile_sites[keep], mand]))
    sites = sites[(sites >= lo) & (sites <= hi)]
    if sites.size < 3:
        raise GridDegenerate(f"only {sites.size} usable sites")
    edges = np.empty(sites.size + 1)
    edges[0], edges[-1] = lo, hi
    edges[1:-1] = 0.5 * (sites[:-1] + sites[1:])
    sticky = dict(model.speed_atoms)
    mass = np.empty(sites.size)
    for i, x in enumerate(sites):
        mass[i] = _integrate_speed_density(model, edges[i], edges[i + 1])
        mass[i] += sticky.get(float(x), 0.0)
    if math.isfinite(a) and model.boundaries[0] != Boundary.REFLECTING:
        mass[0] = math.inf
    if math.isfinite(b) and model.boundaries[1] != Boundary.REFLECTING:
        mass[-1] = math.inf
    if np.any(mass < 0) or np.any(np.isnan(mass)):
        raise GridDegenerate("a grid cell has invalid speed mass")
    eff = np.maximum(mass, _EMPTY_CELL_MASS)
    gaps = np.diff(sites)
    up = np.zeros(sites.size)
    down = np.zeros(sites.size)
    up[:-1] = 1.0 / (2.0 * eff[:-1] * gaps)
    down[1:] = 1.0 / (2.0 * eff[1:] * gaps)
    start = int(np.searchsorted(sites, model.x0))
    if start >= sites.size or sites[start] != model.x0:
        # x0 was merged into a coincident site within tolerance
        start = int(np.argmin(np.abs(sites - model.x0)))
    return CTMCGrid(sites, up, down, mass, start, guard_l, guard_r)


def _sigma_table(model: DiffusionModel, lo: float, hi: float):
    xs = np.linspace(lo, hi, SIGMA_TABLE_SIZE)
    sig_sq = np.asarray(model.sigma_sq(xs), dtype=float)
    if not np.all(np.isfinite(sig_sq[1:-1])) or np.any(sig_sq[1:-1] <= 0):
        raise EngineMismatch("sigma^2 must be positive and finite inside the truncated range")
    sig_sq = np.where(np.isfinite(sig_sq), sig_sq, 0.0)  # ends may legitimately vanish
    table = np.sqrt(sig_sq)
    inv_h = (SIGMA_TABLE_SIZE - 1) / (hi - lo)
    return table, float(lo), float(inv_h)


def _sde_checks(model: DiffusionModel, lo: float, hi: float):
    inside = [x for x, _ in model.target.atoms if lo <= x <= hi]
    if inside:
        raise EngineMismatch(f"SDE engine cannot honour sticky atoms at {inside}")


def _boundary_codes(model: DiffusionModel, guard_l: bool, guard_r: bool) -> tuple[int, int]:
    code_l = 2 if guard_l else (1 if model.boundaries[0] == Boundary.REFLECTING else 0)
    code_r = 2 if guard_r else (1 if model.boundaries[1] == Boundary.REFLECTING else 0)
    return code_l, code_r


def simulate_terminal(
    model: DiffusionModel, config: SimConfig, *, terminal_time: float | None = None
) -> TerminalSample:
    """Sample the position at the exponential time with the configured engine.

    ``terminal_time`` substitutes a deterministic clock for the exponential
    one (0 returns x0 for every path); it exists for degenerate-limit tests.
    """
    if not isinstance(config, SimConfig):
        raise InvalidParameters("config must be a SimConfig")
    if config.engine == "both":
        raise InvalidParameters('engine "both" is a report-level setting; pick sde or ctmc')
    if terminal_time is not None:
        terminal_time = check_scalar(terminal_time, "terminal_time", minimum=0.0)
    t_over = -1.0 if terminal_time is None else float(terminal_time)
    lam = model.lam
    lo, hi, guard_l, guard_r = _truncation_bounds(model, config.truncation_quantile)
    started = time.perf_counter()
    if config.engine == "sde":
        _sde_checks(model, lo, hi)
        table, tlo, inv_h = _sigma_table(model, lo, hi)
        code_l, code_r = _boundary_codes(model, guard_l, guard_r)
        values, hits = _kernels.sde_terminal(
            config.n_paths, config.seed, model.x0, lam, config.dt, t_over,
            config.horizon(lam), table, tlo, inv_h, lo, hi, code_l, code_r,
        )
    else:
        grid = build_grid(model, config.n_sites, config.truncation_quantile)
        if t_over < 0.0:
            idx, hits = _kernels.ctmc_terminal_kill(
                config.n_paths, config.seed, lam, grid.up_rate, grid.down_rate,
                grid.start_index, grid.guard_left, grid.guard_right,
            )
        else:
            idx, hits = _kernels.ctmc_terminal_clock(
                config.n_paths, config.seed, lam, grid.up_rate, grid.down_rate,
                grid.start_index, grid.guard_left, grid.guard_right, t_over,
            )
        values = grid.sites[idx]
    elapsed = time.perf_counter() - started
    return TerminalSample(
        values=np.asarray(values, dtype=float),
        truncation_hits=int(np.asarray(hits).sum()),
        engine=config.engine,
        seed=config.seed,
        elapsed_seconds=elapsed,
    )


def simulate_hitting(
    model: DiffusionModel, start: float, level: float, config: SimConfig
) -> HittingEstimate:
    """Monte Carlo estimate of E_start[exp(-lam H_level)].

    Paths that fail to hit within the horizon contribute 0, matching the
    convention exp(-lam * inf) = 0 up to the exp(-lam*horizon) truncation.
    """
    a, b = model.target.support
    start = check_scalar(start, "start")
    level = check_scalar(level, "level")
    lo, hi, guard_l, guard_r = _truncation_bounds(model, config.truncation_quantile)
    for name, v in (("start", start), ("level", level)):
        if not (lo <= v <= hi):
            raise InvalidParameters(f"{name}={v} outside the truncated range [{lo}, {hi}]")
    if config.engine == "both":
        raise InvalidParameters('engine "both" is a report-level setting; pick sde or ctmc')
    lam = model.lam
    horizon = config.horizon(lam)
    if start == level:
        return HittingEstimate(1.0, 0.0)
    if config.engine == "sde":
        _sde_checks(model, lo, hi)
        table, tlo, inv_h = _sigma_table(model, lo, hi)
        code_l, code_r = _boundary_codes(model, guard_l, guard_r)
        wts = _kernels.sde_hitting(
            config.n_paths, config.seed, start, level, lam, config.dt, horizon,
            table, tlo, inv_h, lo, hi, code_l, code_r,
        )
    else:
        grid = build_grid(
            model, config.n_sites, config.truncation_quantile, extra_sites=(start, level)
        )
        start_idx = int(np.argmin(np.abs(grid.sites - start)))
        level_idx = int(np.argmin(np.abs(grid.sites - level)))
        wts = _kernels.ctmc_hitting(
            config.n_paths, config.seed, lam, grid.up_rate, grid.down_rate,
            start_idx, level_idx, horizon,
        )
    mean = float(np.mean(wts))
    stderr = float(np.std(wts, ddof=1) / math.sqrt(len(wts))) if len(wts) > 1 else 0.0
    return HittingEstimate(mean, stderr)
