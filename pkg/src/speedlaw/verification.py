"""Statistical and analytic consistency checks for synthesized models.

The empirical checks (Kolmogorov-Smirnov, Wasserstein-1) compare engine
terminal samples with the target; the analytic ones verify the density
identity at the start point and the eigenfunction ODE residual.  A
consistency report bundles everything with per-check thresholds and a
single verdict.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace
from typing import Callable

import numpy as np

from .engines import SimConfig, simulate_terminal
from .errors import EngineMismatch, InvalidParameters
from .measures import TargetMeasure
from .synthesis import DiffusionModel, martingale_class
from .validation import as_float_array, check_int, check_scalar

KS_COEF_1PCT = 1.6276236307187293  # sqrt(-log(0.005)/2)


def ks_critical(n: int, alpha: float = 0.01) -> float:
    """Asymptotic one-sample Kolmogorov-Smirnov critical value."""
    n = check_int(n, "n", minimum=1)
    alpha = check_scalar(alpha, "alpha", minimum=0.0, maximum=1.0,
                         include_min=False, include_max=False)
    return math.sqrt(-0.5 * math.log(alpha / 2.0)) / math.sqrt(n)


def ks_two_sample_critical(n: int, m: int, alpha: float = 0.01) -> float:
    """Asymptotic two-sample critical value at level alpha."""
    return math.sqrt(-0.5 * math.log(alpha / 2.0)) * math.sqrt((n + m) / (n * m))


def ks_distance(samples, target: TargetMeasure) -> float:
    """sup_x |F_n(x) - F(x)| including one-sided limits at target atoms."""
    x = np.sort(as_float_array(samples, "samples"))
    n = x.size
    f = np.asarray(target.cdf(x), dtype=float)
    # approaching a sample point from the left compares the ECDF step entry
    # against the target's left limit, which differs from f on an atom
    f_left = f.copy()
    for t, w in target.atoms:
        f_left[x == t] -= w
    hi = np.arange(1, n + 1) / n
    lo = np.arange(0, n) / n
    d = max(float(np.max(hi - f)), float(np.max(f_left - lo)))
    for t, w in target.atoms:
        ft = float(target.cdf(t))
        ecdf_right = np.searchsorted(x, t, side="right") / n
        ecdf_left = np.searchsorted(x, t, side="left") / n
        d = max(d, abs(ecdf_right - ft), abs(ecdf_left - (ft - w)))
    return d


def ks_two_sample(a, b) -> float:
    """sup_x |F_a(x) - F_b(x)| between two empirical laws."""
    a = np.sort(as_float_array(a, "a"))
    b = np.sort(as_float_array(b, "b"))
    pooled = np.concatenate([a, b])
    fa = np.searchsorted(a, pooled, side="right") / a.size
    fb = np.searchsorted(b, pooled, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def wasserstein1(samples, target: TargetMeasure, n_grid: int = 10_000) -> float:
    """Average quantile gap |Q_emp - Q_target| over a midpoint level grid."""
    vals = as_float_array(samples, "samples")
    n_grid = check_int(n_grid, "n_grid", minimum=10)
    if not math.isfinite(target.mean):
        raise InvalidParameters("Wasserstein-1 needs a target with a finite mean")
    levels = (np.arange(n_grid) + 0.5) / n_grid
    qt = np.asarray(target.quantile(levels), dtype=float)
    qe = np.quantile(vals, levels, method="inverted_cdf")
    return float(np.mean(np.abs(qe - qt)))


def corollary_check(model: DiffusionModel) -> float:
    """|nu(x0) * 2 lam / (w mu(x0)) - 1|, with atom masses when x0 is an atom.

    The synthesis construction pins the speed density at the start point to
    w/(2 lam) times the target density; this must hold to near machine
    precision independent of any simulation.
    """
    t = model.target
    x0 = model.x0
    atom = t.atom_mass_at(x0)
    if atom > 0:
        mu_val = atom
        nu_val = dict(model.speed_atoms)[x0]
    else:
        mu_val = float(t.density(x0))
        nu_val = float(model.speed_density(x0))
        if mu_val <= 0:
            raise InvalidParameters("x0 carries no target mass; the density ratio is undefined")
    return abs(nu_val * 2.0 * model.lam / (model.wronskian * mu_val) - 1.0)


def eigen_residual(
    model: DiffusionModel,
    grid=None,
    *,
    speed_density: Callable | None = None,
) -> float:
    """Largest relative defect of (1/2) f'' = lam nu f on the native domains.

    Second derivatives come from a five-point stencil with h = 1e-4 times
    the target's interquartile scale; the eigenfunctions are bounded by 1
    on their native domains, which keeps stencil roundoff near 1e-8, well
    under the 1e-6 residual budget.  ``speed_density`` may substitute a
    perturbed nu, which should break the identity; it defaults to the
    model's own.
    """
    t = model.target
    a, b = t.support
    x0 = model.x0
    nu = speed_density if speed_density is not None else model.speed_density
    h = 1e-4 * t.iqr_scale
    pair = model.eigen
    kinks = [xi for xi, _ in t.atoms] + [x0]
    for p in t.pieces:
        kinks.extend(v for v in (p.lo, p.hi) if math.isfinite(v))
    if math.isfinite(a):
        kinks.append(a)
    if math.isfinite(b):
        kinks.append(b)
    kinks = np.array(sorted(set(kinks)))

    def side_grid(p_lo, p_hi):
        levels = np.linspace(p_lo, p_hi, 220)
        xs = np.unique(np.asarray(t.quantile(levels), dtype=float))
        ok = np.ones(xs.size, dtype=bool)
        if kinks.size:
            gap = np.min(np.abs(xs[:, None] - kinks[None, :]), axis=1)
            ok &= gap > 3.5 * h
        return xs[ok]

    def residual(fn, xs):
        if xs.size == 0:
            return 0.0
        f0 = np.asarray(fn(xs), dtype=float)
        fp1 = np.asarray(fn(xs + h), dtype=float)
        fm1 = np.asarray(fn(xs - h), dtype=float)
        fp2 = np.asarray(fn(xs + 2 * h), dtype=float)
        fm2 = np.asarray(fn(xs - 2 * h), dtype=float)
        d2 = (-fm2 + 16 * fm1 - 30 * f0 + 16 * fp1 - fp2) / (12.0 * h * h)
        drift = model.lam * np.asarray(nu(xs), dtype=float) * f0
        return float(np.max(np.abs(0.5 * d2 - drift) / np.maximum(1.0, np.abs(drift))))

    if grid is not None:
        xs = np.asarray(grid, dtype=float)
        lo_part = residual(pair.increasing, xs[xs <= x0])
        hi_part = residual(pair.decreasing, xs[xs >= x0])
        return max(lo_part, hi_part)
    p0 = float(t.cdf(x0))
    lo_part = residual(pair.increasing, side_grid(1e-7, p0)) if p0 > 1e-7 else 0.0
    hi_part = residual(pair.decreasing, side_grid(p0, 1.0 - 1e-7)) if p0 < 1.0 - 1e-7 else 0.0
    return max(lo_part, hi_part)


@dataclass(frozen=True)
class Thresholds:
    """Pass/fail levels for the report; None disables a check.

    ks defaults to the 1% one-sample critical value for the sample size;
    w1 is reported but not gated unless a level is supplied.
    """

    ks: float | None = None
    w1: float | None = None
    corollary: float | None = 1e-8
    eigen: float | None = 1e-6
    truncation_fraction: float = 1e-3


@dataclass(frozen=True)
class ConsistencyReport:
    """Aggregated verification outcome for one model and configuration."""

    ks: float
    w1: float
    corollary_err: float
    eigen_residual: float | None
    martingale_class: str
    boundaries: tuple[str, str]
    verdict: str
    checks: dict
    engines: dict
    config: dict

    def to_dict(self) -> dict:
        return {
            "ks": self.ks,
            "w1": self.w1,
            "corollary_err": self.corollary_err,
            "eigen_residual": self.eigen_residual,
            "martingale_class": self.martingale_class,
            "boundaries": list(self.boundaries),
            "verdict": self.verdict,
            "checks": self.checks,
            "engines": self.engines,
            "config": self.config,
        }


def consistency_report(
    model: DiffusionModel,
    config: SimConfig | None = None,
    thresholds: Thresholds | None = None,
) -> ConsistencyReport:
    """Run the configured engines and bundle all checks into one verdict.

    With engine "both" each applicable engine is run; an engine whose
    preconditions fail (e.g. SDE with sticky atoms) is recorded as skipped
    rather than failing the verdict.  The reported ks and w1 are the worst
    across engines; the truncation-guard fraction must stay below its bound
    for the verdict to be trustworthy, so exceeding it fails.
    """
    if config is None:
        config = SimConfig(engine="both")
    thr = thresholds if thresholds is not None else Thresholds()
    wanted = ("sde", "ctmc") if config.engine == "both" else (config.engine,)
    engines: dict[str, dict] = {}
    ks_vals, w1_vals, failures = [], [], []
    for eng in wanted:
        run_cfg = replace(config, engine=eng)
        try:
            sample = simulate_terminal(model, run_cfg)
        except EngineMismatch as exc:
            engines[eng] = {"skipped": str(exc)}
            continue
        ks = ks_distance(sample.values, model.target)
        w1 = wasserstein1(sample.values, model.target)
        frac = sample.truncation_hits / run_cfg.n_paths
        engines[eng] = {
            "ks": ks,
            "w1": w1,
            "truncation_hits": sample.truncation_hits,
            "truncation_fraction": frac,
            "n_paths": run_cfg.n_paths,
        }
        ks_vals.append(ks)
        w1_vals.append(w1)
        if frac >= thr.truncation_fraction:
            failures.append(f"{eng}: truncation fraction {frac:.2e}")
    if not ks_vals:
        raise EngineMismatch("no engine could simulate this model")
    ks = max(ks_vals)
    w1 = max(w1_vals)
    corr = corollary_check(model)
    residual = None
    if model.target.family is not None or not model.target.pieces:
        residual = eigen_residual(model)
    ks_gate = thr.ks if thr.ks is not None else ks_critical(config.n_paths, 0.01)
    checks = {
        "ks": {"value": ks, "threshold": ks_gate, "ok": ks <= ks_gate},
        "w1": {"value": w1, "threshold": thr.w1,
               "ok": (w1 <= thr.w1) if thr.w1 is not None else None},
        "corollary": {"value": corr, "threshold": thr.corollary,
                      "ok": (corr <= thr.corollary) if thr.corollary is not None else None},
        "eigen_residual": {
            "value": residual, "threshold": thr.eigen,
            "ok": (residual <= thr.eigen) if (thr.eigen is not None and residual is not None) else None,
        },
    }
    for name, entry in checks.items():
        if entry["ok"] is False:
            failures.append(f"{name}: {entry['value']:.3e} above {entry['threshold']:.3e}")
    verdict = "pass" if not failures else "fail"
    cfg_dict = asdict(config)
    return ConsistencyReport(
        ks=ks,
        w1=w1,
        corollary_err=corr,
        eigen_residual=residual,
        martingale_class=str(martingale_class(model).value),
        boundaries=(str(model.boundaries[0].value), str(model.boundaries[1].value)),
        verdict=verdict,
        checks=checks,
        engines=engines,
        config=cfg_dict,
    )
