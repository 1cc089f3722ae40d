"""End-to-end acceptance checks.

Thirteen criteria covering the closed-form identities, the Monte Carlo
engines, hitting transforms, classification, round trips, and the figure
tables.  Each test prints a single pass/fail line with the measured value,
and the Monte Carlo cases pin their seeds so the suite is deterministic.
"""

import math
import time

import numpy as np
import pytest

from speedlaw import (
    MartingaleClass,
    SimConfig,
    WronskianOutOfRange,
    build_builtin,
    corollary_check,
    eigen_residual,
    ks_critical,
    ks_distance,
    ks_two_sample,
    ks_two_sample_critical,
    martingale_class,
    representing_measure,
    simulate_hitting,
    simulate_terminal,
    synthesize,
    wronskian_sup,
)
from speedlaw.cli import figure_data

UNI = build_builtin("uniform", [-1.0, 1.0])
LAP = build_builtin("laplace", [1.0])
GAU = build_builtin("gaussian", [0.0, 1.0])


def _report(tag: str, ok: bool, detail: str) -> None:
    print(f"{tag}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"{tag}: {detail}"


def test_c01_brownian_speed_is_flat():
    started = time.perf_counter()
    lam = 0.5
    model = synthesize(build_builtin("laplace", [math.sqrt(2.0 * lam)]), 0.0, lam, 2.0)
    xs = np.arange(-5.0, 5.0 + 1e-9, 0.01)
    dev = float(np.max(np.abs(np.asarray(model.speed_density(xs)) - 1.0)))
    elapsed = time.perf_counter() - started
    _report(
        "C01 canonical two-sided exponential gives Brownian motion",
        dev <= 1e-8 and elapsed < 1.0,
        f"max|nu-1|={dev:.2e} over [-5,5], {elapsed:.2f}s",
    )


def test_c02_uniform_reciprocal_speed_closed_form():
    lam = 0.5
    worst = 0.0
    for w in (0.5, 1.0, 2.0, 4.0):
        model = synthesize(UNI, 0.0, lam, w)
        for xs, sign in ((np.linspace(-1.0, 0.0, 501), 1.0), (np.linspace(0.0, 1.0, 501), -1.0)):
            with np.errstate(divide="ignore"):
                inv = 1.0 / np.asarray(model.speed_density(xs), dtype=float)
            ref = lam * (xs**2 + sign * 2.0 * xs + 4.0 / w)
            inner = ref > 0
            assert np.all(inv[~inner] == 0.0)  # speed blows up where the form vanishes
            worst = max(worst, float(np.max(np.abs(inv[inner] - ref[inner]) / ref[inner])))
    _report(
        "C02 uniform target matches quadratic reciprocal speed",
        worst <= 1e-10,
        f"max rel err={worst:.2e} across W in {{0.5,1,2,4}}",
    )


def test_c03_wronskian_range_and_rejection():
    cases = (
        (UNI, 0.0, 0.5, 4.0),
        (LAP, 0.0, 0.5, 2.0),
        (build_builtin("laplace", [math.sqrt(2.6)]), 0.0, 1.3, 2.0 * math.sqrt(2.6)),
        (UNI, 0.5, 0.5, 16.0 / 9.0),
    )
    worst = 0.0
    for target, x0, lam, expected in cases:
        worst = max(worst, abs(wronskian_sup(target, x0) - expected))
        with pytest.raises(WronskianOutOfRange):
            synthesize(target, x0, lam, expected * (1.0 + 1e-6))
    _report(
        "C03 admissible Wronskian range",
        worst <= 1e-9,
        f"max |sup - closed form|={worst:.2e}, all overshoots rejected",
    )


def test_c04_speed_at_start_identity_randomized():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(25):
        fam = rng.choice(["uniform", "laplace", "gaussian"])
        if fam == "uniform":
            a = float(rng.uniform(-3, 0))
            b = float(rng.uniform(0.5, 3))
            target = build_builtin("uniform", [a, b])
            x0 = float(rng.uniform(a, b))
        elif fam == "laplace":
            target = build_builtin("laplace", [float(rng.uniform(0.3, 3))])
            x0 = float(rng.normal(0, 1))
        else:
            target = build_builtin("gaussian", [float(rng.normal(0, 1)), float(rng.uniform(0.3, 2))])
            x0 = float(rng.normal(0, 1))
        lam = float(rng.uniform(0.1, 5))
        w = float(rng.uniform(0.05, 1.0)) * wronskian_sup(target, x0)
        worst = max(worst, corollary_check(synthesize(target, x0, lam, w)))
    _report(
        "C04 start-point speed identity over 25 randomized models",
        worst <= 1e-10,
        f"worst |2 lam nu / (w mu) - 1|={worst:.2e}",
    )


def test_c05_reflecting_chain_terminal_law():
    started = time.perf_counter()
    model = synthesize(UNI, 0.0, 0.5, 1.0)
    cfg = SimConfig(n_paths=100_000, seed=1, engine="ctmc", n_sites=400)
    sample = simulate_terminal(model, cfg)
    ks = ks_distance(sample.values, UNI)
    crit = ks_critical(100_000)
    elapsed = time.perf_counter() - started
    _report(
        "C05 reflecting case, chain engine",
        ks < crit and elapsed < 120.0,
        f"ks={ks:.6f} < crit={crit:.6f}, {elapsed:.0f}s",
    )


def test_c06_inaccessible_case_sde_terminal_law():
    started = time.perf_counter()
    model = synthesize(UNI, 0.0, 0.5, 4.0)
    sample = simulate_terminal(model, SimConfig(n_paths=100_000, dt=1e-4, seed=1, engine="sde"))
    ks = ks_distance(sample.values, UNI)
    elapsed = time.perf_counter() - started
    _report(
        "C06 inaccessible case, SDE engine",
        ks <= 0.0075 and elapsed < 300.0,
        f"ks={ks:.6f} <= 0.0075, {elapsed:.0f}s",
    )


def test_c07_infinite_support_truncation_guard():
    model = synthesize(LAP, 0.0, 0.5, 2.0)
    cfg = SimConfig(n_paths=100_000, dt=1e-3, truncation_quantile=1e-6, seed=1, engine="sde")
    sample = simulate_terminal(model, cfg)
    ks = ks_distance(sample.values, LAP)
    frac = sample.truncation_hits / cfg.n_paths
    _report(
        "C07 infinite support with quantile guard",
        ks <= 0.0075 and frac < 1e-3,
        f"ks={ks:.6f} <= 0.0075, guard fraction={frac:.1e}",
    )


def test_c08_engine_cross_agreement():
    model = synthesize(UNI, 0.0, 0.5, 1.0)
    a = simulate_terminal(model, SimConfig(n_paths=50_000, dt=1e-3, seed=1, engine="sde"))
    b = simulate_terminal(model, SimConfig(n_paths=50_000, seed=101, engine="ctmc"))
    d = ks_two_sample(a.values, b.values)
    crit = ks_two_sample_critical(50_000, 50_000)
    _report(
        "C08 SDE and chain engines agree",
        d < crit,
        f"two-sample ks={d:.6f} < crit={crit:.6f}",
    )


def test_c09_hitting_transform_monte_carlo():
    cfg = SimConfig(n_paths=30_000, dt=1e-3, seed=1, engine="sde")
    est_u = simulate_hitting(synthesize(UNI, 0.0, 0.5, 4.0), 0.5, 0.0, cfg)
    dev_u = abs(est_u.mean - 0.25) / est_u.stderr
    est_b = simulate_hitting(synthesize(LAP, 0.0, 0.5, 2.0), 1.0, 0.0, cfg)
    dev_b = abs(est_b.mean - math.exp(-1.0)) / est_b.stderr
    _report(
        "C09 hitting transforms match closed forms",
        dev_u <= 3.0 and dev_b <= 3.0,
        f"uniform {est_u.mean:.5f} ({dev_u:.2f} SE from 0.25), "
        f"brownian {est_b.mean:.5f} ({dev_b:.2f} SE from 1/e)",
    )


def test_c10_martingale_classification():
    lam = 1.3
    rate = math.sqrt(2.0 * lam)
    got = (
        martingale_class(synthesize(LAP, 0.0, 0.5, 2.0)),
        martingale_class(synthesize(build_builtin("laplace", [rate]), 0.0, lam, 2.0 * rate)),
        martingale_class(synthesize(LAP, 0.0, 0.5, 1.0)),
        martingale_class(synthesize(UNI, 0.0, 0.5, 1.0)),
    )
    want = (
        MartingaleClass.MARTINGALE,
        MartingaleClass.MARTINGALE,
        MartingaleClass.STRICT_LOCAL,
        MartingaleClass.NOT_APPLICABLE,
    )
    _report(
        "C10 martingale dichotomy",
        got == want,
        "canonical -> martingale, sub-canonical -> strict local, bounded -> n/a",
    )


def test_c11_representing_measure_round_trip():
    worst = 0.0
    for target in (UNI, LAP):
        wmax = wronskian_sup(target, 0.0)
        for w in (wmax / 2.0, wmax):
            rm = representing_measure(synthesize(target, 0.0, 0.5, w))
            worst = max(worst, rm.kolmogorov_vs(target))
    _report(
        "C11 speed-to-target round trip",
        worst <= 1e-8,
        f"worst Kolmogorov distance={worst:.2e}",
    )


def test_c12_eigenfunction_residuals():
    models = [synthesize(UNI, 0.0, 0.5, w) for w in (0.5, 1.0, 2.0, 4.0)]
    models.append(synthesize(UNI, 0.5, 0.5, 16.0 / 9.0))
    models += [synthesize(LAP, 0.0, 0.5, w) for w in (1.0, 2.0)]
    models.append(synthesize(GAU, 0.0, 1.0, math.sqrt(2.0 * math.pi)))
    worst = max(eigen_residual(m) for m in models)
    control = models[3]
    perturbed = eigen_residual(
        control, speed_density=lambda x: 1.01 * np.asarray(control.speed_density(x))
    )
    _report(
        "C12 eigenfunction residuals",
        worst <= 1e-6 and perturbed > 1e-6,
        f"worst residual={worst:.2e} <= 1e-6, perturbed control={perturbed:.2e} fails",
    )


def test_c13_figure_tables():
    cols1, rows1 = figure_data("fig1")
    flat = rows1[:, cols1.index("W=2")]
    fig1_ok = bool(np.all(flat == 1.0))

    cols2, rows2 = figure_data("fig2")
    xs = rows2[:, 0]
    at_zero = float(rows2[xs == 0.0, cols2.index("X0=0")][0])
    at_half = float(rows2[xs == 0.5, cols2.index("X0=0.5")][0])
    left = rows2[:, cols2.index("X0=-1")]
    endpoint_ok = (
        not np.any(np.isnan(left))
        and float(left[xs == -1.0][0]) == 0.5
        and bool(np.all(left[xs < 1.0] > 0))
        and bool(np.all(np.isfinite(left[xs < 1.0])))
    )
    _report(
        "C13 figure tables",
        fig1_ok and at_zero == 0.5 and at_half == 0.5 and endpoint_ok,
        f"fig1 W=2 identically 1, fig2 nu(x0)=({at_zero:g},{at_half:g}), endpoint start defined",
    )
