"""Target probability measures on an interval.

A target is a probability measure mu on a closed interval [a, b] (ends may be
infinite), represented as absolutely continuous pieces plus point masses.  The
module provides the three builtin families used throughout (uniform,
two-sided exponential, gaussian), construction from weighted samples, and
recovery from a convex call-price curve.  Every measure exposes its call and
put potentials

    C(x) = int (y - x)^+ mu(dy),    P(x) = int (x - y)^+ mu(dy),

which are the only functionals the synthesis step needs.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, NamedTuple

import numpy as np
from scipy import integrate, optimize
from scipy.special import ndtr, ndtri

from .errors import (
    ArbitrageViolation,
    EmptyInput,
    FormatError,
    InsufficientPoints,
    InvalidParameters,
    NonfinitePotential,
)
from .validation import as_float_array, check_scalar

MASS_TOL = 1e-12
PRICE_REPAIR_TOL = 1e-9

_SQRT_2PI = math.sqrt(2.0 * math.pi)


class PotentialTriple(NamedTuple):
    """Call, put and absolute-moment potentials evaluated at common points."""

    call: float | np.ndarray
    put: float | np.ndarray
    u: float | np.ndarray


@dataclass(frozen=True)
class DensityPiece:
    """One absolutely continuous component: density ``fn`` on [lo, hi]."""

    lo: float
    hi: float
    fn: Callable[[np.ndarray], np.ndarray]


def _phi(z):
    return np.exp(-0.5 * z * z) / _SQRT_2PI


class _Uniform:
    def __init__(self, a: float, b: float):
        self.a, self.b = a, b
        self.width = b - a

    def density(self, x):
        return np.where((x >= self.a) & (x <= self.b), 1.0 / self.width, 0.0)

    def cdf(self, x):
        return np.clip((x - self.a) / self.width, 0.0, 1.0)

    def quantile(self, p):
        return self.a + p * self.width

    @property
    def mean(self):
        return 0.5 * (self.a + self.b)

    def call(self, x):
        inside = (self.b - np.minimum(np.maximum(x, self.a), self.b)) ** 2 / (2 * self.width)
        return np.where(x < self.a, self.mean - x, inside)

    def put(self, x):
        inside = (np.minimum(np.maximum(x, self.a), self.b) - self.a) ** 2 / (2 * self.width)
        return np.where(x > self.b, x - self.mean, inside)


class _Laplace:
    """Two-sided exponential with rate r, centred at the origin."""

    def __init__(self, rate: float):
        self.rate = rate

    def density(self, x):
        return 0.5 * self.rate * np.exp(-self.rate * np.abs(x))

    def cdf(self, x):
        with np.errstate(over="ignore"):
            return np.where(x < 0, 0.5 * np.exp(self.rate * x), 1 - 0.5 * np.exp(-self.rate * x))

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        with np.errstate(divide="ignore"):
            lo = np.log(2 * p) / self.rate
            hi = -np.log(2 * (1 - p)) / self.rate
        return np.where(p < 0.5, lo, hi)

    mean = 0.0

    def call(self, x):
        r = self.rate
        with np.errstate(over="ignore"):
            pos = np.exp(-r * np.abs(x)) / (2 * r)
        return np.where(x >= 0, pos, -x + pos)

    def put(self, x):
        return self.call(-np.asarray(x, dtype=float))


class _Gaussian:
    def __init__(self, mean: float, sd: float):
        self.m, self.s = mean, sd

    def density(self, x):
        return _phi((x - self.m) / self.s) / self.s

    def cdf(self, x):
        return ndtr((x - self.m) / self.s)

    def quantile(self, p):
        return self.m + self.s * ndtri(p)

    @property
    def mean(self):
        return self.m

    def call(self, x):
        z = (self.m - x) / self.s
        return self.s * _phi(z) + (self.m - x) * ndtr(z)

    def put(self, x):
        z = (self.m - x) / self.s
        return self.s * _phi(z) + (x - self.m) * ndtr(-z)


def _wrap_pointwise(x, fn):
    """Apply a vectorized fn, preserving scalar-in scalar-out."""
    arr = np.asarray(x, dtype=np.float64)
    out = fn(np.atleast_1d(arr).astype(np.float64))
    if arr.ndim == 0:
        return float(out[0])
    return np.asarray(out, dtype=np.float64).reshape(arr.shape)


@dataclass(frozen=True, eq=False)
class TargetMeasure:
    """Probability measure: density pieces plus atoms on a common interval.

    Parameters
    ----------
    support : (float, float)
        Smallest closed interval carrying all mass; ends may be +-inf.
    pieces : tuple of DensityPiece
        Disjoint absolutely continuous components, in increasing order.
    atoms : tuple of (location, weight)
        Point masses, strictly increasing locations, positive weights.
    family : str or None
        Tag of a builtin closed-form family, if this measure is one.
    family_params : tuple of float
        Parameters of the closed form.
    """

    support: tuple[float, float]
    pieces: tuple[DensityPiece, ...] = ()
    atoms: tuple[tuple[float, float], ...] = ()
    family: str | None = None
    family_params: tuple[float, ...] = ()

    def __post_init__(self):
        a, b = self.support
        if not (a < b or (a == b and self.atoms)):
            raise InvalidParameters(f"support must be a nondegenerate interval, got {self.support}")
        if not self.pieces and not self.atoms:
            raise EmptyInput("measure has neither density pieces nor atoms")
        locs = [x for x, _ in self.atoms]
        if any(w <= 0 for _, w in self.atoms):
            raise InvalidParameters("atom weights must be positive")
        if locs != sorted(locs) or len(set(locs)) != len(locs):
            raise InvalidParameters("atom locations must be strictly increasing")
        if locs and (locs[0] < a or locs[-1] > b):
            raise InvalidParameters("atoms fall outside the declared support")
        prev = a
        for p in self.pieces:
            if not (a <= p.lo < p.hi <= b) or p.lo < prev:
                raise InvalidParameters("density pieces must be ordered and inside the support")
            prev = p.hi
        closed = _FAMILIES[self.family](*self.family_params) if self.family else None
        object.__setattr__(self, "_closed", closed)
        ax = np.array([x for x, _ in self.atoms])
        aw = np.array([w for _, w in self.atoms])
        object.__setattr__(self, "_atom_x", ax)
        object.__setattr__(self, "_atom_w", aw)
        # prefix sums make atomic cdf/quantile/potentials O(log n) per point
        object.__setattr__(self, "_atom_cumw", np.cumsum(aw))
        object.__setattr__(self, "_atom_cumwx", np.cumsum(aw * ax))
        if closed is None:
            masses = [self._quad(p.fn, p.lo, p.hi) for p in self.pieces]
            total = float(sum(masses) + self._atom_w.sum())
            if abs(total - 1.0) > MASS_TOL:
                raise InvalidParameters(f"total mass must be 1, got {total!r}")
            object.__setattr__(self, "_piece_mass", np.array(masses))

    # -- generic quadrature helpers ------------------------------------

    @staticmethod
    def _quad(fn, lo, hi, badness="integral of the density"):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            val, err = integrate.quad(fn, lo, hi, epsabs=1e-13, epsrel=1e-11, limit=400)
        if not math.isfinite(val) or err > 1e-7 * max(1.0, abs(val)):
            raise NonfinitePotential(f"{badness} on [{lo}, {hi}] did not converge")
        return float(val)

    # -- basic functionals ---------------------------------------------

    def density(self, x):
        """Density of the absolutely continuous part (atoms not included)."""
        if self._closed is not None:
            return _wrap_pointwise(x, self._closed.density)

        def ev(arr):
            out = np.zeros_like(arr)
            for p in self.pieces:
                sel = (arr >= p.lo) & (arr <= p.hi)
                if np.any(sel):
                    out[sel] = p.fn(arr[sel])
            return out

        return _wrap_pointwise(x, ev)

    def _atoms_upto(self, arr, *, strict: bool = False):
        """Vectorized (sum of weights, sum of weighted locations) for atoms <= x."""
        side = "left" if strict else "right"
        idx = np.searchsorted(self._atom_x, arr, side=side)
        cw = np.concatenate(([0.0], self._atom_cumw))
        cwx = np.concatenate(([0.0], self._atom_cumwx))
        return cw[idx], cwx[idx]

    def cdf(self, x):
        """mu((-inf, x]), right-continuous."""
        if self._closed is not None:
            return _wrap_pointwise(x, self._closed.cdf)
        if not self.pieces:
            return _wrap_pointwise(x, lambda arr: np.minimum(self._atoms_upto(arr)[0], 1.0))

        def one(v):
            acc = float(self._atom_w[self._atom_x <= v].sum())
            for p, m in zip(self.pieces, self._piece_mass):
                if v >= p.hi:
                    acc += m
                elif v > p.lo:
                    acc += self._quad(p.fn, p.lo, v)
            return min(acc, 1.0)

        return _wrap_pointwise(x, lambda arr: np.array([one(v) for v in arr]))

    def quantile(self, p):
        """Generalized inverse of the cdf: inf{x : F(x) >= p}."""

        def ev(parr):
            if np.any((parr < 0) | (parr > 1)):
                raise InvalidParameters("quantile levels must lie in [0, 1]")
            if self._closed is not None:
                return self._closed.quantile(parr)
            if not self.pieces:
                idx = np.searchsorted(self._atom_cumw, parr, side="left")
                return self._atom_x[np.minimum(idx, len(self._atom_x) - 1)]
            return np.array([self._quantile_one(v) for v in parr])

        return _wrap_pointwise(p, ev)

    def _quantile_one(self, p):
        a, b = self.support
        if p <= 0:
            return float(a)
        if p >= 1:
            return float(b)
        fc = lambda v: float(self.cdf(v))
        nodes = sorted(
            {float(v) for v in self._atom_x}
            | {q.lo for q in self.pieces if math.isfinite(q.lo)}
            | {q.hi for q in self.pieces if math.isfinite(q.hi)}
        )
        prev = None  # last node strictly below level p
        for t in nodes:
            ft = fc(t)
            if ft >= p:
                if ft - self.atom_mass_at(t) < p:
                    return t
                lo = prev
                if lo is None:
                    lo = t - max(1.0, abs(t))
                    while fc(lo) >= p:
                        lo = t - 2 * (t - lo)
                return float(optimize.brentq(lambda v: fc(v) - p, lo, t, xtol=1e-13))
            prev = t
        lo = prev if prev is not None else 0.0
        hi = lo + 1.0
        while fc(hi) < p:
            hi = lo + 2 * (hi - lo)
        return float(optimize.brentq(lambda v: fc(v) - p, lo, hi, xtol=1e-13))

    @cached_property
    def mean(self) -> float:
        if self._closed is not None:
            return float(self._closed.mean)
        acc = float((self._atom_x * self._atom_w).sum())
        for p in self.pieces:
            acc += self._quad(lambda y, f=p.fn: y * f(y), p.lo, p.hi, "first moment")
        return acc

    @cached_property
    def iqr_scale(self) -> float:
        """Interquartile range, a robust length scale (floored away from 0)."""
        return max(float(self.quantile(0.75)) - float(self.quantile(0.25)), 1e-9)

    # -- potentials ------------------------------------------------------

    def call_potential(self, x):
        """C(x) = int (y - x)^+ mu(dy)."""
        if self._closed is not None:
            return _wrap_pointwise(x, self._closed.call)
        if not self.pieces:
            tot_w = self._atom_cumw[-1]
            tot_wx = self._atom_cumwx[-1]

            def ev(arr):
                cw, cwx = self._atoms_upto(arr)
                return (tot_wx - cwx) - arr * (tot_w - cw)

            return _wrap_pointwise(x, ev)

        def one(v):
            acc = float((self._atom_w * np.maximum(self._atom_x - v, 0.0)).sum())
            for p in self.pieces:
                if p.hi > v:
                    acc += self._quad(
                        lambda y, f=p.fn: (y - v) * f(y), max(p.lo, v), p.hi, "call potential"
                    )
            return acc

        return _wrap_pointwise(x, lambda arr: np.array([one(v) for v in arr]))

    def put_potential(self, x):
        """P(x) = int (x - y)^+ mu(dy)."""
        if self._closed is not None:
            return _wrap_pointwise(x, self._closed.put)
        if not self.pieces:

            def ev(arr):
                cw, cwx = self._atoms_upto(arr)
                return arr * cw - cwx

            return _wrap_pointwise(x, ev)

        def one(v):
            acc = float((self._atom_w * np.maximum(v - self._atom_x, 0.0)).sum())
            for p in self.pieces:
                if p.lo < v:
                    acc += self._quad(
                        lambda y, f=p.fn: (v - y) * f(y), p.lo, min(p.hi, v), "put potential"
                    )
            return acc

        return _wrap_pointwise(x, lambda arr: np.array([one(v) for v in arr]))

    def potentials(self, x) -> PotentialTriple:
        """Evaluate (C, P, U) at x; U = C + P is the absolute-moment potential."""
        c = self.call_potential(x)
        p = self.put_potential(x)
        return PotentialTriple(c, p, c + p)

    def atom_mass_at(self, x: float) -> float:
        """Weight of an atom at x (0 if none)."""
        if len(self._atom_x) == 0:
            return 0.0
        return float(self._atom_w[self._atom_x == x].sum())


_FAMILIES = {
    "uniform": _Uniform,
    "laplace": _Laplace,
    "gaussian": _Gaussian,
}

_FAMILY_ALIASES = {"two-sided-exponential": "laplace"}


def build_builtin(kind: str, params) -> TargetMeasure:
    """Construct a builtin family: uniform(a, b), laplace(rate), gaussian(mean, sd).

    ``kind`` accepts "two-sided-exponential" as an alias for "laplace";
    gaussian accepts a single parameter (sd, zero mean) or a pair (mean, sd).
    """
    if not isinstance(kind, str):
        raise InvalidParameters(f"family kind must be a string, got {kind!r}")
    tag = _FAMILY_ALIASES.get(kind.strip().lower(), kind.strip().lower())
    params = tuple(float(v) for v in np.atleast_1d(np.asarray(params, dtype=np.float64)))
    if tag == "uniform":
        if len(params) != 2:
            raise InvalidParameters("uniform takes two parameters (a, b)")
        a, b = params
        if not (math.isfinite(a) and math.isfinite(b) and a < b):
            raise InvalidParameters(f"uniform requires finite a < b, got {params}")
        support = (a, b)
    elif tag == "laplace":
        if len(params) != 1:
            raise InvalidParameters("laplace takes one parameter (rate)")
        check_scalar(params[0], "rate", minimum=0.0, include_min=False)
        support = (-math.inf, math.inf)
    elif tag == "gaussian":
        if len(params) == 1:
            params = (0.0, params[0])
        if len(params) != 2:
            raise InvalidParameters("gaussian takes (mean, sd) or (sd,)")
        check_scalar(params[0], "mean")
        check_scalar(params[1], "sd", minimum=0.0, include_min=False)
        support = (-math.inf, math.inf)
    else:
        raise InvalidParameters(f"unknown family {kind!r}")
    fam = _FAMILIES[tag](*params)
    piece = DensityPiece(support[0], support[1], fam.density)
    return TargetMeasure(support, (piece,), (), tag, params)


def from_samples(values, weights=None) -> TargetMeasure:
    """Empirical (purely atomic) measure from samples with optional weights."""
    vals = as_float_array(values, "values")
    if weights is None:
        w = np.ones_like(vals)
    else:
        w = as_float_array(weights, "weights")
        if w.shape != vals.shape:
            raise InvalidParameters("weights must match values in length")
        if np.any(w < 0):
            raise InvalidParameters("weights must be nonnegative")
    locs, inverse = np.unique(vals, return_inverse=True)
    agg = np.zeros_like(locs)
    np.add.at(agg, inverse, w)
    keep = agg > 0
    locs, agg = locs[keep], agg[keep]
    if locs.size == 0:
        raise EmptyInput("all sample weights are zero")
    agg = agg / agg.sum()
    return TargetMeasure(
        (float(locs[0]), float(locs[-1])),
        (),
        tuple((float(x), float(p)) for x, p in zip(locs, agg)),
    )


def _lower_hull(k: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Values of the lower convex hull of (k, p) at each k (k increasing)."""
    idx: list[int] = []
    for i in range(len(k)):
        while len(idx) >= 2:
            i0, i1 = idx[-2], idx[-1]
            # keep the chain convex: drop i1 if it lies above segment i0--i
            if (p[i] - p[i0]) * (k[i1] - k[i0]) <= (p[i1] - p[i0]) * (k[i] - k[i0]):
                idx.pop()
            else:
                break
        idx.append(i)
    return np.interp(k, k[idx], p[idx])


def from_call_prices(strikes, prices) -> TargetMeasure:
    """Recover the atomic measure implied by a convex call-price curve.

    The second derivative of the piecewise-linear interpolant of the curve is
    a sum of point masses at the strikes; a positive final price implies one
    extra atom beyond the last strike, on the slope budget of the last segment.
    Violations of convexity or monotonicity up to 1e-9 (relative to the price
    scale) are repaired by projecting onto the lower convex hull.
    """
    k = as_float_array(strikes, "strikes")
    p = as_float_array(prices, "prices")
    if k.shape != p.shape:
        raise InvalidParameters("strikes and prices must have equal length")
    if k.size < 3:
        raise InsufficientPoints(f"need at least 3 strikes, got {k.size}")
    if np.any(np.diff(k) <= 0):
        raise InvalidParameters("strikes must be strictly increasing")
    scale = max(1.0, float(np.max(np.abs(p))))
    tol = PRICE_REPAIR_TOL * scale
    if np.any(p < -tol):
        raise ArbitrageViolation("negative call prices")
    p = np.maximum(p, 0.0)
    hull = _lower_hull(k, p)
    if float(np.max(p - hull)) > tol:
        raise ArbitrageViolation(
            f"convexity violation {float(np.max(p - hull)):.3g} exceeds repair tolerance"
        )
    q = np.minimum.accumulate(hull)
    if float(np.max(hull - q)) > tol:
        raise ArbitrageViolation("call prices increase in strike")
    s = np.diff(q) / np.diff(k)
    if s[0] < -1.0 - PRICE_REPAIR_TOL:
        raise ArbitrageViolation(f"initial slope {s[0]:.12g} below -1 exhausts the mass budget")
    s = np.maximum(s, -1.0)
    locs = [float(k[0])]
    masses = [1.0 + float(s[0])]
    for i in range(1, len(k) - 1):
        locs.append(float(k[i]))
        masses.append(max(float(s[i] - s[i - 1]), 0.0))
    residual = -float(s[-1])
    if q[-1] <= tol:
        locs.append(float(k[-1]))
        masses.append(residual)
    else:
        if residual <= tol:
            raise ArbitrageViolation("positive final price with a flat tail slope")
        locs.append(float(k[-1] + q[-1] / residual))
        masses.append(residual)
    la = np.array(locs)
    ma = np.array(masses)
    keep = ma > 1e-15
    la, ma = la[keep], ma[keep]
    if la.size == 0:
        raise ArbitrageViolation("price curve carries no probability mass")
    ma = ma / ma.sum()
    return TargetMeasure(
        (float(la[0]), float(la[-1])),
        (),
        tuple((float(x), float(w)) for x, w in zip(la, ma)),
    )


def _read_csv_rows(path) -> list[list[str]]:
    with open(path, newline="") as fh:
        rows = []
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            cells = [c.strip() for c in row if c.strip() != ""]
            if cells:
                rows.append(cells)
    return rows


def from_samples_csv(path) -> TargetMeasure:
    """Read a samples CSV: one or two numeric columns (value[, weight])."""
    rows = _read_csv_rows(path)
    if rows and any(not _is_number(c) for c in rows[0]):
        rows = rows[1:]  # header
    if not rows:
        raise EmptyInput(f"no data rows in {path}")
    ncol = len(rows[0])
    if ncol not in (1, 2) or any(len(r) != ncol for r in rows):
        raise FormatError(f"{path}: expected 1 or 2 numeric columns")
    try:
        vals = [float(r[0]) for r in rows]
        weights = [float(r[1]) for r in rows] if ncol == 2 else None
    except ValueError as exc:
        raise FormatError(f"{path}: non-numeric cell ({exc})")
    return from_samples(vals, weights)


def from_call_prices_csv(path) -> TargetMeasure:
    """Read a call-price CSV with header strike,price."""
    rows = _read_csv_rows(path)
    if not rows:
        raise EmptyInput(f"no rows in {path}")
    header = [c.lower() for c in rows[0]]
    if header[:2] != ["strike", "price"]:
        raise FormatError(f"{path}: expected header strike,price")
    try:
        k = [float(r[0]) for r in rows[1:]]
        p = [float(r[1]) for r in rows[1:]]
    except (ValueError, IndexError) as exc:
        raise FormatError(f"{path}: bad data row ({exc})")
    return from_call_prices(k, p)


def _is_number(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False
