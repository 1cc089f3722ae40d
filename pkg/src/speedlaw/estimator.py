"""Estimator-style facade over synthesis and simulation.

DiffusionSynthesizer follows the fit/get_params/set_params protocol so it
can sit in pipelines and be cloned by parameter-sweep tooling, without
depending on any estimator framework at runtime.
"""

from __future__ import annotations

import numpy as np

from .engines import SimConfig, simulate_terminal
from .errors import InvalidParameters
from .measures import TargetMeasure, from_samples
from .synthesis import DiffusionModel, synthesize
from .validation import as_float_array
from .verification import ConsistencyReport, Thresholds, consistency_report


class DiffusionSynthesizer:
    """Fit a diffusion whose exponential-time law matches the input.

    Parameters
    ----------
    x0 : float or "mean", default "mean"
        Starting point; "mean" uses the target mean (the natural centred
        choice, and the one for which the martingale dichotomy is sharp).
    lam : float, default 1.0
        Rate of the independent exponential clock.
    w : float or "canonical", default "canonical"
        Wronskian level; "canonical" takes the largest admissible value.
    engine : {"sde", "ctmc"}, default "sde"
        Sampling engine used by :meth:`sample`.
    n_paths, dt, truncation_quantile, n_sites, seed
        Simulation settings, as in :class:`SimConfig`.

    Attributes
    ----------
    target_ : TargetMeasure
        The fitted target measure.
    model_ : DiffusionModel
        The synthesized diffusion.
    x0_ : float
        Resolved starting point.
    wronskian_ : float
        Resolved Wronskian level.
    """

    def __init__(
        self,
        *,
        x0="mean",
        lam=1.0,
        w="canonical",
        engine="sde",
        n_paths=10_000,
        dt=1e-3,
        truncation_quantile=1e-6,
        n_sites=400,
        seed=0,
    ):
        self.x0 = x0
        self.lam = lam
        self.w = w
        self.engine = engine
        self.n_paths = n_paths
        self.dt = dt
        self.truncation_quantile = truncation_quantile
        self.n_sites = n_sites
        self.seed = seed

    _param_names = (
        "x0", "lam", "w", "engine", "n_paths", "dt",
        "truncation_quantile", "n_sites", "seed",
    )

    def get_params(self, deep: bool = True) -> dict:
        return {name: getattr(self, name) for name in self._param_names}

    def set_params(self, **params) -> "DiffusionSynthesizer":
        for key, value in params.items():
            if key not in self._param_names:
                raise InvalidParameters(
                    f"unknown parameter {key!r}; valid: {sorted(self._param_names)}"
                )
            setattr(self, key, value)
        return self

    def fit(self, X, y=None) -> "DiffusionSynthesizer":
        """Fit from a TargetMeasure or a 1-d array of samples."""
        if isinstance(X, TargetMeasure):
            target = X
        else:
            arr = np.asarray(X, dtype=float)
            if arr.ndim == 2 and arr.shape[1] == 1:
                arr = arr[:, 0]
            target = from_samples(as_float_array(arr, "X"))
        x0 = float(target.mean) if (isinstance(self.x0, str) and self.x0 == "mean") else self.x0
        self.target_ = target
        self.model_ = synthesize(target, x0, self.lam, self.w)
        self.x0_ = self.model_.x0
        self.wronskian_ = self.model_.wronskian
        self.n_features_in_ = 1
        return self

    def _check_fitted(self) -> DiffusionModel:
        if not hasattr(self, "model_"):
            raise InvalidParameters("this DiffusionSynthesizer is not fitted yet; call fit first")
        return self.model_

    def _config(self, **overrides) -> SimConfig:
        base = dict(
            n_paths=self.n_paths,
            dt=self.dt,
            truncation_quantile=self.truncation_quantile,
            seed=self.seed,
            engine=self.engine,
            n_sites=self.n_sites,
        )
        base.update({k: v for k, v in overrides.items() if v is not None})
        return SimConfig(**base)

    def sample(self, n_paths: int | None = None, seed: int | None = None) -> np.ndarray:
        """Terminal positions at the exponential time, one per path."""
        model = self._check_fitted()
        cfg = self._config(n_paths=n_paths, seed=seed)
        return simulate_terminal(model, cfg).values

    def report(
        self, config: SimConfig | None = None, thresholds: Thresholds | None = None
    ) -> ConsistencyReport:
        """Full consistency report for the fitted model."""
        model = self._check_fitted()
        cfg = config if config is not None else self._config(engine="both")
        return consistency_report(model, cfg, thresholds)
