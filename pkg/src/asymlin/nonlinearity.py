"""Asymptotically linear nonlinearities f(x, t) and their admissibility checks.

Every nonlinearity carries the primitive F, the ratio f/t (extended by
alpha(x) at t = 0), the derivative df/dt and the weights alpha, eta and
beta = lim (f t / 2 - F) as |t| -> oo.  Evaluators take node coordinates
``x`` of shape (n, d) (or a single point) and values ``t`` broadcastable
against them.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .expr import as_weight


def _x_minus_log1p(s):
    """s - log(1 + s) for s >= 0 without cancellation near 0."""
    s = np.asarray(s, dtype=float)
    out = np.empty_like(s)
    small = s < 0.05
    out[small] = _series_x_minus_log1p(s[small])
    big = ~small
    out[big] = s[big] - np.log1p(s[big])
    return out


def _series_x_minus_log1p(s):
    # s - log1p(s) = sum_{k>=2} (-1)^k s^k / k; 18 terms reach eps for s < 0.05
    acc = np.zeros_like(s)
    power = s * s
    for k in range(2, 20):
        acc = acc + (power / k if k % 2 == 0 else -power / k)
        power = power * s
    return acc


class Nonlinearity:
    """Interface for f(x, t) with f(x, t)/t nondecreasing in |t|."""

    odd = False

    def f(self, x, t):
        raise NotImplementedError

    def F(self, x, t):
        raise NotImplementedError

    def ratio(self, x, t):
        raise NotImplementedError

    def df(self, x, t):
        raise NotImplementedError

    def alpha(self, x):
        raise NotImplementedError

    def eta(self, x):
        raise NotImplementedError

    def beta(self, x):
        """Analytic beta(x), or None when only the numeric probe is available."""
        return None

    def describe(self) -> dict:
        return {"family": type(self).__name__}


def _w(weight, x):
    return np.asarray(weight(x), dtype=float)


@dataclass(frozen=True)
class SmoothSaturation(Nonlinearity):
    """f(x, t) = t (alpha + (eta - alpha) t^2 / (1 + t^2)); beta = +oo."""

    alpha_fn: object = 0.0
    eta_fn: object = 2.0
    odd = True

    def __post_init__(self):
        object.__setattr__(self, "alpha_fn", as_weight(self.alpha_fn))
        object.__setattr__(self, "eta_fn", as_weight(self.eta_fn))

    def alpha(self, x):
        return _w(self.alpha_fn, x)

    def eta(self, x):
        return _w(self.eta_fn, x)

    def ratio(self, x, t):
        t = np.asarray(t, dtype=float)
        a = self.alpha(x)
        s = t * t
        return a + (self.eta(x) - a) * (s / (1.0 + s))

    def f(self, x, t):
        return np.asarray(t, dtype=float) * self.ratio(x, t)

    def F(self, x, t):
        t = np.asarray(t, dtype=float)
        a = self.alpha(x)
        s = t * t
        return 0.5 * a * s + 0.5 * (self.eta(x) - a) * _series_or_direct(s)

    def df(self, x, t):
        t = np.asarray(t, dtype=float)
        a = self.alpha(x)
        s = t * t
        return a + (self.eta(x) - a) * s * (3.0 + s) / (1.0 + s) ** 2

    def beta(self, x):
        a, e = np.broadcast_arrays(self.alpha(x), self.eta(x))
        return np.where(e > a, np.inf, 0.0)

    def describe(self):
        return {"family": "smooth_saturation", "alpha": _desc(self.alpha_fn),
                "eta": _desc(self.eta_fn)}


@dataclass(frozen=True)
class StrongResonance(Nonlinearity):
    """f(x, t) = eta t - c t (1 + t^2)^(-3/2); alpha = eta - c, beta = c."""

    eta_fn: object = 6.0
    c: float = 3.0
    odd = True

    def __post_init__(self):
        object.__setattr__(self, "eta_fn", as_weight(self.eta_fn))
        if not self.c > 0:
            raise ValueError(f"c must be positive, got {self.c}")

    def eta(self, x):
        return _w(self.eta_fn, x)

    def alpha(self, x):
        return self.eta(x) - self.c

    def ratio(self, x, t):
        s = np.square(np.asarray(t, dtype=float))
        return self.eta(x) - self.c * (1.0 + s) ** -1.5

    def f(self, x, t):
        return np.asarray(t, dtype=float) * self.ratio(x, t)

    def F(self, x, t):
        s = np.square(np.asarray(t, dtype=float))
        r = np.sqrt(1.0 + s)
        one_minus_p = s / (r * (1.0 + r))
        return 0.5 * self.eta(x) * s - self.c * one_minus_p

    def df(self, x, t):
        s = np.square(np.asarray(t, dtype=float))
        return self.eta(x) - self.c * (1.0 + s) ** -2.5 * (1.0 - 2.0 * s)

    def beta(self, x):
        return np.broadcast_to(np.asarray(self.c, dtype=float),
                               np.shape(self.eta(x))).copy()

    def describe(self):
        return {"family": "strong_resonance", "eta": _desc(self.eta_fn), "c": float(self.c)}


@dataclass(frozen=True)
class CustomNonlinearity(Nonlinearity):
    """User-supplied f with closed-form F and analytic alpha, eta.

    ``beta`` may be None to request the numeric probe.  ``df`` defaults to a
    central difference of ``f``.
    """

    f_fn: Callable
    F_fn: Callable
    alpha_fn: object
    eta_fn: object
    beta_fn: Optional[object] = None
    df_fn: Optional[Callable] = None
    is_odd: bool = False

    def __post_init__(self):
        object.__setattr__(self, "alpha_fn", as_weight(self.alpha_fn))
        object.__setattr__(self, "eta_fn", as_weight(self.eta_fn))
        if self.beta_fn is not None:
            object.__setattr__(self, "beta_fn", as_weight(self.beta_fn))

    @property
    def odd(self):
        return self.is_odd

    def alpha(self, x):
        return _w(self.alpha_fn, x)

    def eta(self, x):
        return _w(self.eta_fn, x)

    def f(self, x, t):
        return np.asarray(self.f_fn(x, np.asarray(t, dtype=float)), dtype=float)

    def F(self, x, t):
        return np.asarray(self.F_fn(x, np.asarray(t, dtype=float)), dtype=float)

    def ratio(self, x, t):
        t = np.asarray(t, dtype=float)
        safe = np.where(t == 0, 1.0, t)
        r = self.f(x, safe) / safe
        return np.where(t == 0, self.alpha(x), r)

    def df(self, x, t):
        if self.df_fn is not None:
            return np.asarray(self.df_fn(x, np.asarray(t, dtype=float)), dtype=float)
        t = np.asarray(t, dtype=float)
        e = 1e-6 * np.maximum(1.0, np.abs(t))
        return (self.f(x, t + e) - self.f(x, t - e)) / (2 * e)

    def beta(self, x):
        if self.beta_fn is None:
            return None
        return _w(self.beta_fn, x)


def _series_or_direct(s):
    return _x_minus_log1p(s) if np.ndim(s) else float(_x_minus_log1p(np.array([s]))[0])


def _desc(weight):
    if hasattr(weight, "text"):
        return weight.text
    if hasattr(weight, "value"):
        return float(weight.value)
    return repr(weight)


# ---------------------------------------------------------------------------
# admissibility


@dataclass(frozen=True)
class F1Verdict:
    passed: bool
    reason: str = ""
    witness: tuple = ()

    @property
    def status(self) -> str:
        return "pass" if self.passed else "fail"


def default_t_grid(T: float = 1e3, n: int = 241) -> np.ndarray:
    pos = np.logspace(-3, math.log10(T), n)
    return np.concatenate([-pos[::-1], pos])


def _first_drop(values, tol):
    """Index k with values[k+1] < values[k] - tol[k], or None."""
    bad = np.flatnonzero(np.diff(values) < -tol[:-1])
    return int(bad[0]) if bad.size else None


def validate_f1(nl: Nonlinearity, x_samples, t_grid=None) -> F1Verdict:
    """Check monotonicity of f/t, its limits, and the consequences
    (f t/2 - F and F/t^2 monotone in |t|, f/t > 2F/t^2) on sampled grids.

    Passing is an admissibility gate, not a proof.
    """
    t = default_t_grid() if t_grid is None else np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size < 4 or np.any(np.diff(t) <= 0):
        raise ValueError("t_grid must be a strictly increasing 1-d array")
    if t[0] > -1e3 or t[-1] < 1e3:
        raise ValueError("t_grid must span at least [-1e3, 1e3]")
    xs = np.atleast_2d(np.asarray(x_samples, dtype=float))
    pos = t[t > 0]
    neg = t[t < 0][::-1]  # increasing |t|

    for x in xs:
        xp = x[None, :]
        a = float(np.ravel(nl.alpha(xp))[0])
        e = float(np.ravel(nl.eta(xp))[0])
        if not (a >= 0):
            return F1Verdict(False, "alpha(x) < 0", (tuple(x), a))
        if not (e >= a):
            return F1Verdict(False, "eta(x) < alpha(x)", (tuple(x), a, e))
        scale = 1.0 + abs(e)
        for side in (pos, neg):
            xv = np.repeat(xp, side.size, axis=0)
            r = np.ravel(nl.ratio(xv, side))
            k = _first_drop(r, 1e-12 * scale * np.ones_like(r))
            if k is not None:
                return F1Verdict(False, "f/t decreases in |t|",
                                 (tuple(x), float(side[k]), float(side[k + 1])))
            if e > a and not r[-1] > r[0]:
                return F1Verdict(False, "f/t is constant although eta > alpha",
                                 (tuple(x), float(side[0]), float(side[-1])))
            fv = np.ravel(nl.f(xv, side))
            Fv = np.ravel(nl.F(xv, side))
            g = 0.5 * fv * side - Fv
            k = _first_drop(g, 1e-12 * (1.0 + np.abs(g)) * scale)
            if k is not None:
                return F1Verdict(False, "f t/2 - F not monotone in |t|",
                                 (tuple(x), float(side[k]), float(side[k + 1])))
            q = Fv / side**2
            k = _first_drop(q, 1e-12 * scale * np.ones_like(q))
            if k is not None:
                return F1Verdict(False, "F/t^2 not monotone in |t|",
                                 (tuple(x), float(side[k]), float(side[k + 1])))
            gap = fv / side - 2.0 * q
            if e > a:
                bad = np.flatnonzero(~(gap > 0))
            else:
                bad = np.flatnonzero(gap < -1e-12 * scale)
            if bad.size:
                return F1Verdict(False, "f/t <= 2F/t^2", (tuple(x), float(side[bad[0]])))
        for tt in (1e-8, -1e-8):
            r0 = float(np.ravel(nl.ratio(xp, np.array([tt])))[0])
            if abs(r0 - a) > 1e-6 * scale:
                return F1Verdict(False, "f/t does not tend to alpha at 0", (tuple(x), tt, r0))
        for tt in (1e6, -1e6):
            rinf = float(np.ravel(nl.ratio(xp, np.array([tt])))[0])
            if abs(rinf - e) > 1e-6 * scale:
                return F1Verdict(False, "f/t does not tend to eta at infinity",
                                 (tuple(x), tt, rinf))
    return F1Verdict(True)


def beta_pointwise(nl: Nonlinearity, x, t_probe: float = 1e3) -> float:
    """beta(x) = lim (f t/2 - F); analytic when the family provides it."""
    if t_probe < 1e3:
        raise ValueError("t_probe must be >= 1e3")
    xp = np.atleast_2d(np.asarray(x, dtype=float))
    analytic = nl.beta(xp)
    if analytic is not None:
        value = float(np.ravel(analytic)[0])
    else:
        def g(t):
            tt = np.array([t, -t])
            xv = np.repeat(xp[:1], 2, axis=0)
            vals = 0.5 * nl.f(xv, tt) * tt - nl.F(xv, tt)
            return float(np.min(vals))
        g1, g2, g4 = g(t_probe), g(2 * t_probe), g(4 * t_probe)
        d1, d2 = g2 - g1, g4 - g2
        if d1 > 1e-12 * (1.0 + abs(g2)) and d2 > 0.75 * d1:
            # increments do not shrink: logarithmic or faster growth
            value = math.inf
        else:
            # g(t) = beta - a/t + O(1/t^2) for the usual families: one
            # Richardson step removes the leading term
            value = 2 * g4 - g2
    if not value > 0:
        warnings.warn(f"beta(x) = {value} violates beta > 0 (degenerate f)", stacklevel=2)
    return value
