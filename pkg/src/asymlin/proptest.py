"""Randomized property suites for the structural facts the solver relies on.

Each suite draws ``trials`` independent cases from a counter-based stream
(Philox keyed by (seed, suite, trial)), so results do not depend on the
order or the number of suites run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BracketOverflow, NotInA
from .grid import Field, Grid, fatou_support_check
from .nehari import EnergyModel, _fiber
from .nonlinearity import SmoothSaturation, StrongResonance
from .spectrum import lambda1

SUITES = ("f1_monotonicity", "level_bound", "psi_positive", "nehari_in_A", "fatou_support")


@dataclass
class PropertyResult:
    name: str
    trials: int
    failures: int = 0
    first_failure: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.failures == 0


def trial_rng(seed: int, suite: int, trial: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed,
                                                                        spawn_key=(suite, trial))))


def random_family(rng):
    """A constant-weight family with (f1) and lambda_1(eta) < 1 on (0, pi)."""
    eta = rng.uniform(1.5, 8.0)
    if rng.random() < 0.5:
        return SmoothSaturation(rng.uniform(0.0, 0.9), eta)
    c = rng.uniform(eta - 0.9, eta) if eta > 0.9 else eta
    return StrongResonance(eta, c)


def _fail(res, **info):
    res.failures += 1
    if not res.first_failure:
        res.first_failure = info


def _scalar(a) -> float:
    return float(np.ravel(a)[0])


def f1_monotonicity(trials: int, seed: int) -> PropertyResult:
    """g = f t/2 - F and F/t^2 nondecreasing in |t|, and f/t > 2F/t^2."""
    res = PropertyResult("f1_monotonicity", trials)
    x = np.zeros((1, 1))
    for k in range(trials):
        rng = trial_rng(seed, 0, k)
        nl = random_family(rng)
        sgn = rng.choice([-1.0, 1.0])
        a, b = np.sort(np.exp(rng.uniform(math.log(1e-3), math.log(1e3), 2)))
        t1, t2 = sgn * a, sgn * b
        f1, f2 = _scalar(nl.f(x, t1)), _scalar(nl.f(x, t2))
        F1, F2 = _scalar(nl.F(x, t1)), _scalar(nl.F(x, t2))
        eta = _scalar(nl.eta(x))
        g1, g2 = 0.5 * f1 * t1 - F1, 0.5 * f2 * t2 - F2
        scale = 1e-12 * (1.0 + eta) * b * b
        bad = []
        if g2 < g1 - scale:
            bad.append("g")
        if F2 / t2**2 < F1 / t1**2 - 1e-12 * (1 + eta):
            bad.append("F/t^2")
        if not f1 / t1 > 2 * F1 / t1**2:
            bad.append("f/t > 2F/t^2")
        if bad:
            _fail(res, trial=k, family=nl.describe(), t=(t1, t2), broken=bad)
    return res


_GRID = Grid((math.pi,), (63,))


def _model_and_direction(rng, grid=_GRID, max_tries=50):
    nl = random_family(rng)
    model = EnergyModel(grid, nl)
    bump = grid.solve_laplacian(np.ones(grid.size))
    for _ in range(max_tries):
        noise = grid.solve_laplacian(rng.standard_normal(grid.size))
        u = bump * rng.uniform(-1, 1) / math.sqrt(model.norm2(bump)) \
            + noise * rng.uniform(0, 2) / math.sqrt(model.norm2(noise))
        u /= math.sqrt(model.norm2(u))
        if model.margin(u) > 1e-8:
            return model, u
    return model, None


def _lam1_unit(grid=_GRID):
    return lambda1(grid, 1.0)


def _nehari_suite(name, suite, trials, seed, check):
    res = PropertyResult(name, trials)
    lam1 = _lam1_unit()
    for k in range(trials):
        rng = trial_rng(seed, suite, k)
        model, u = _model_and_direction(rng)
        if u is None:
            _fail(res, trial=k, reason="no direction in A found")
            continue
        try:
            t = _fiber(model, u)[0]
        except (NotInA, BracketOverflow) as exc:
            _fail(res, trial=k, reason=str(exc))
            continue
        msg = check(model, u, t, lam1)
        if msg:
            _fail(res, trial=k, family=model.nl.describe(), t_u=t, reason=msg)
    return res


def _level_check(model, u, t, lam1):
    gap = float(model.eta_nodes[0] - model.alpha_nodes[0])
    psi = model.energy(t * u)
    bound = t * t / (2 * lam1 / gap)
    if psi > bound * (1 + 1e-10):
        return f"Psi = {psi!r} exceeds t_u^2/(2 lambda_1(eta - alpha)) = {bound!r}"
    return ""


def _positive_check(model, u, t, lam1):
    psi = model.energy(t * u)
    return "" if psi > 0 else f"Psi = {psi!r} is not positive"


def _in_A_check(model, u, t, lam1):
    w = t * u
    if abs(model.nehari_defect(w)) > 1e-9:
        return f"projection misses the Nehari set (defect {model.nehari_defect(w):.3g})"
    if not model.margin(w) > 0:
        return "Nehari point outside A"
    return ""


def level_bound(trials, seed):
    return _nehari_suite("level_bound", 1, trials, seed, _level_check)


def psi_positive(trials, seed):
    return _nehari_suite("psi_positive", 2, trials, seed, _positive_check)


def nehari_in_A(trials, seed):
    return _nehari_suite("nehari_in_A", 3, trials, seed, _in_A_check)


def random_fatou_sequence(rng, grid: Grid, length: int):
    """Admissible (u_n, v_n >= 0) with random, alternating or shrinking supports."""
    n = grid.size
    kind = rng.integers(0, 4)
    U = rng.standard_normal((length, n))
    V = np.abs(rng.standard_normal((length, n))) * (rng.random(n) < 0.8)
    if kind == 0:
        U *= rng.random((length, n)) < 0.7
    elif kind == 1:
        # supports alternate between two complementary halves
        mask = rng.random(n) < 0.5
        for j in range(length):
            U[j] *= mask if j % 2 else ~mask
    elif kind == 2:
        # signed alternation u_n = -1, 0, -1, 0, ...
        U = np.where(np.arange(length)[:, None] % 2 == 0, -1.0, 0.0) * np.ones(n)
    else:
        # support shrinking to a fixed set plus vanishing noise
        core = rng.random(n) < 0.3
        for j in range(length):
            U[j] = np.where(core, U[j], U[j] * (rng.random(n) < 1.0 / (j + 1)))
    return [Field(grid, u) for u in U], [Field(grid, v) for v in V]


def fatou_support(trials, seed):
    res = PropertyResult("fatou_support", trials)
    grid = Grid((1.0,), (16,))
    for k in range(trials):
        rng = trial_rng(seed, 4, k)
        us, vs = random_fatou_sequence(rng, grid, int(rng.integers(1, 12)))
        verdict = fatou_support_check(us, vs)
        if not verdict.holds:
            _fail(res, trial=k, lhs=verdict.lhs, rhs=verdict.rhs)
    return res


_RUNNERS = {
    "f1_monotonicity": f1_monotonicity,
    "level_bound": level_bound,
    "psi_positive": psi_positive,
    "nehari_in_A": nehari_in_A,
    "fatou_support": fatou_support,
}


def run_all(trials: int = 1000, seed: int = 0, suites=SUITES) -> list:
    return [_RUNNERS[name](trials, seed) for name in suites]
