"""Energy, Nehari projection and the reduced functional on the unit sphere.

For u with ||u||^2 < int eta u^2 (the cone A) the fibering map
t -> I(t u) has a single maximum t_u; m(u) = t_u u lies on the Nehari set
and Psi(u) = I(m(u)).  Critical points of Psi on the unit sphere are
exactly the nontrivial critical points of I.

All inner products are the discrete ones from :mod:`asymlin.grid`.
Internally fields are handled as plain arrays; the public functions take
and return :class:`~asymlin.grid.Field`.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.optimize import brentq

from .errors import BoundaryStall, BracketOverflow, MaxIter, NotInA
from .grid import Field, Grid
from .nonlinearity import Nonlinearity
from .spectrum import SpectrumResult

log = logging.getLogger(__name__)

T_MAX = 1e12
BOUNDARY_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class EnergyModel:
    grid: Grid
    nl: Nonlinearity

    @cached_property
    def eta_nodes(self) -> np.ndarray:
        return self.grid.eval_weight(self.nl.eta)

    @cached_property
    def alpha_nodes(self) -> np.ndarray:
        return self.grid.eval_weight(self.nl.alpha)

    # array-level kernels -------------------------------------------------

    @property
    def vol(self) -> float:
        return self.grid.volume_element

    def inner(self, a: np.ndarray, b: np.ndarray) -> float:
        return float(self.vol * (a @ (self.grid.laplacian @ b)))

    def norm2(self, a: np.ndarray) -> float:
        return self.inner(a, a)

    def f(self, u):
        return self.nl.f(self.grid.coords, u)

    def F(self, u):
        return self.nl.F(self.grid.coords, u)

    def df(self, u):
        return self.nl.df(self.grid.coords, u)

    def ratio(self, u):
        return self.nl.ratio(self.grid.coords, u)

    def energy(self, u: np.ndarray) -> float:
        return 0.5 * self.norm2(u) - self.vol * float(np.sum(self.F(u)))

    def riesz(self, dual: np.ndarray) -> np.ndarray:
        """H^1_0 representative r of v -> vol * dual . v."""
        return self.grid.solve_laplacian(dual)

    def grad(self, u: np.ndarray) -> np.ndarray:
        """Riesz representative of I'(u)."""
        return u - self.riesz(self.f(u))

    def margin(self, u: np.ndarray) -> float:
        return self.vol * float(np.sum(self.eta_nodes * u * u)) - self.norm2(u)

    def phi(self, u: np.ndarray, t: float, nrm2: float) -> float:
        """h_u'(t)/t = ||u||^2 - int ratio(x, t u) u^2."""
        return nrm2 - self.vol * float(np.sum(self.ratio(t * u) * u * u))

    def nehari_defect(self, w: np.ndarray) -> float:
        """| ||w||^2 - int f(w) w | / ||w||^2."""
        n2 = self.norm2(w)
        return abs(n2 - self.vol * float(np.sum(self.f(w) * w))) / n2


@dataclass(frozen=True)
class Membership:
    status: str
    margin: float

    @property
    def inside(self) -> bool:
        return self.status == "inside"


@dataclass(frozen=True)
class FiberingResult:
    t_u: float
    bracket: tuple
    iterations: int
    psi: float
    in_A_margin: float


def energy(model: EnergyModel, u: Field) -> float:
    """I(u) = ||u||^2/2 - int F(x, u)."""
    _check(model, u)
    return model.energy(u.values)


def energy_gradient(model: EnergyModel, u: Field) -> Field:
    """The field g with h10_inner(g, v) = I'(u) v for every v."""
    _check(model, u)
    return Field(model.grid, model.grad(u.values))


def in_A(model: EnergyModel, u: Field) -> Membership:
    _check(model, u)
    return _membership(model, u.values)


def _membership(model, u):
    n2 = model.norm2(u)
    if n2 == 0:
        raise ValueError("zero field")
    m = model.margin(u)
    if abs(m) <= BOUNDARY_RTOL * n2:
        return Membership("boundary", m)
    return Membership("inside" if m > 0 else "outside", m)


def _fiber(model: EnergyModel, u: np.ndarray, rtol: float = 1e-13, max_iter: int = 200):
    mem = _membership(model, u)
    if not mem.inside:
        raise NotInA(f"direction is {mem.status} of A (margin {mem.margin:.3e})")
    n2 = model.norm2(u)
    phi = lambda t: model.phi(u, t, n2)  # noqa: E731
    it = 0
    p1 = phi(1.0)
    if p1 == 0:
        return 1.0, (1.0, 1.0), 0, mem.margin
    if p1 > 0:
        lo, hi = 1.0, 2.0
        while phi(hi) > 0:
            lo, hi = hi, 2 * hi
            it += 1
            if hi > T_MAX:
                raise BracketOverflow(f"t_u > {T_MAX:g}; direction is numerically on the "
                                      "boundary of A")
    else:
        lo, hi = 0.5, 1.0
        while phi(lo) < 0:
            lo, hi = lo / 2, lo
            it += 1
            if lo < 1 / T_MAX:
                raise BracketOverflow(f"t_u < {1 / T_MAX:g}; int alpha u^2 >= ||u||^2")
    # phi is strictly decreasing on the bracket, so Brent keeps the
    # bisection guarantee at a fraction of the evaluations
    t, info = brentq(phi, lo, hi, xtol=1e-300, rtol=rtol, maxiter=max_iter,
                     full_output=True)
    return t, (lo, hi), it + info.function_calls, mem.margin


def fibering(model: EnergyModel, u: Field) -> FiberingResult:
    """Unique maximizer t_u of t -> I(t u) for u in A: the root of
    ||u||^2 - int ratio(x, t u) u^2, bracketed by doubling/halving from t = 1.

    Raises NotInA outside A (h_u is increasing there) and BracketOverflow
    when t_u exceeds 1e12.
    """
    _check(model, u)
    t, bracket, it, margin = _fiber(model, u.values)
    return FiberingResult(t, bracket, it, model.energy(t * u.values), margin)


def nehari_project(model: EnergyModel, u: Field) -> Field:
    """m(u) = t_u u."""
    return Field(model.grid, fibering(model, u).t_u * u.values)


def _psi(model, u):
    t = _fiber(model, u)[0]
    return model.energy(t * u), t


def _psi_grad(model, u, t=None):
    """Tangential Riesz gradient of Psi at unit u: t_u * grad I(t_u u), projected."""
    if t is None:
        t = _fiber(model, u)[0]
    g = t * model.grad(t * u)
    return g - model.inner(g, u) * u


def psi_gradient(model: EnergyModel, u: Field) -> Field:
    _check(model, u)
    n = math.sqrt(model.norm2(u.values))
    if abs(n - 1) > 1e-10:
        raise ValueError(f"u must lie on the unit sphere (||u|| = {n!r})")
    return Field(model.grid, _psi_grad(model, u.values))


def split_signs(model: EnergyModel, u: Field) -> tuple:
    """Nodewise positive and negative parts (u = u_plus + u_minus)."""
    _check(model, u)
    v = u.values
    return Field(model.grid, np.maximum(v, 0.0)), Field(model.grid, np.minimum(v, 0.0))


def sign_verdict(u: np.ndarray, rel: float = 1e-6) -> str:
    thr = rel * float(np.max(np.abs(u)))
    lo, hi = float(np.min(u)), float(np.max(u))
    if lo < -thr and hi > thr:
        return "sign-changing"
    return "positive" if hi > thr else "negative"


def interior_zeros(u: np.ndarray, rel: float = 1e-6) -> int:
    """Sign changes along a 1-d field, ignoring entries below rel * max|u|."""
    thr = rel * float(np.max(np.abs(u)))
    s = np.sign(u[np.abs(u) > thr])
    return int(np.count_nonzero(s[1:] != s[:-1]))


def _check(model, u):
    if u.grid != model.grid:
        from .errors import GridMismatch
        raise GridMismatch("field is not on the model grid")


# ---------------------------------------------------------------------------
# descent on the sphere


@dataclass(frozen=True)
class SolveOptions:
    tol: float = 1e-8
    max_iter: int = 10_000
    step0: float = 1.0
    armijo_factor: float = 0.5
    armijo_c: float = 1e-4
    boundary_floor: float = 1e-6
    max_backtracks: int = 60
    polish: bool = True
    polish_from: float = 1e-5

    def __post_init__(self):
        for name in ("tol", "step0", "armijo_c", "boundary_floor"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.armijo_factor < 1:
            raise ValueError("armijo_factor must lie in (0, 1)")


@dataclass
class SolveReport:
    u_star: Field
    level: float
    residual: float
    grad_I_norm: float
    nehari_defect: float
    iterations: int
    sign_verdict: str
    boundary_margin_min: float
    converged: bool
    status: str = "converged"
    psi_history: list = field(default_factory=list, repr=False)
    polish_steps: int = 0
    seed: int = 0
    config_digest: str = ""
    beta_support_estimate: float | None = None

    @property
    def u_direction(self) -> Field:
        return self.u_star.normalized()


def _normalize(v, model):
    return v / math.sqrt(model.norm2(v))


def _newton_direction(model, w):
    """Newton step for Lw = f(w): solve (L - diag f'(w)) d = f(w) - Lw."""
    L = model.grid.laplacian
    J = (L - sp.diags(model.df(w))).tocsc()
    rhs = model.f(w) - L @ w
    return spla.spsolve(J, rhs)


def _polish(model, u, tol, max_steps=25):
    """Newton iterations on I'(w) = 0 along the Nehari set, from the direction u."""
    t = _fiber(model, u)[0]
    gn = math.sqrt(model.norm2(_psi_grad(model, u, t)))
    steps = 0
    while gn > tol and steps < max_steps:
        w = t * u
        d = _newton_direction(model, w)
        try:
            u_new = _normalize(w + d, model)
            t_new = _fiber(model, u_new)[0]
        except (NotInA, BracketOverflow):
            break
        gn_new = math.sqrt(model.norm2(_psi_grad(model, u_new, t_new)))
        steps += 1
        if not gn_new < gn:
            break
        u, t, gn = u_new, t_new, gn_new
    return u, t, gn, steps


def minimize_psi(model: EnergyModel, u0: Field, opts: SolveOptions | None = None, *,
                 seed: int = 0, config_digest: str = "") -> SolveReport:
    """Riemannian gradient descent for Psi on the unit sphere inside A.

    Steps along the tangential H^1_0 gradient, retracts by renormalizing and
    backtracks (Armijo) on Psi; trial points whose margin int eta u^2 - 1
    falls below ``boundary_floor`` times the initial margin are rejected.
    Once the gradient is below ``polish_from`` a few Newton steps on
    I'(w) = 0 finish the solve, since Armijo decrease is then below the
    rounding level of Psi.

    Raises BoundaryStall when only boundary-violating steps remain and
    MaxIter when the iteration budget runs out; both carry the partial
    report in ``exc.report``.
    """
    opts = opts or SolveOptions()
    _check(model, u0)
    u = _normalize(u0.values.astype(float), model)
    mem = _membership(model, u)
    if not mem.inside:
        raise NotInA(f"initial direction is {mem.status} of A")
    floor = opts.boundary_floor * mem.margin
    margin_min = mem.margin
    psi, t = _psi(model, u)
    g = _psi_grad(model, u, t)
    gn = math.sqrt(model.norm2(g))
    history = [psi]
    status = "max-iter"
    it = 0
    polish_steps = 0
    boundary_blocked = False
    while it < opts.max_iter:
        if gn <= opts.tol:
            status = "converged"
            break
        if opts.polish and gn <= opts.polish_from:
            u, t, gn, polish_steps = _polish(model, u, opts.tol)
            psi = model.energy(t * u)
            if gn <= opts.tol:
                status = "converged"
                break
            g = _psi_grad(model, u, t)
        s = opts.step0
        accepted = False
        boundary_blocked = False
        for _ in range(opts.max_backtracks):
            cand = _normalize(u - s * g, model)
            cmargin = model.margin(cand)
            if cmargin < floor:
                boundary_blocked = True
                s *= opts.armijo_factor
                continue
            try:
                psi_c, t_c = _psi(model, cand)
            except (NotInA, BracketOverflow):
                boundary_blocked = True
                s *= opts.armijo_factor
                continue
            if psi_c <= psi - opts.armijo_c * s * gn * gn:
                accepted = True
                break
            s *= opts.armijo_factor
        it += 1
        if not accepted:
            status = "boundary-stall" if boundary_blocked else "line-search"
            break
        u, psi, t = cand, psi_c, t_c
        margin_min = min(margin_min, cmargin)
        g = _psi_grad(model, u, t)
        gn = math.sqrt(model.norm2(g))
        history.append(psi)

    w = t * u
    report = SolveReport(
        u_star=Field(model.grid, w),
        level=model.energy(w),
        residual=gn,
        grad_I_norm=math.sqrt(model.norm2(model.grad(w))),
        nehari_defect=model.nehari_defect(w),
        iterations=it,
        sign_verdict=sign_verdict(w),
        boundary_margin_min=margin_min,
        converged=status == "converged",
        status=status,
        psi_history=history,
        polish_steps=polish_steps,
        seed=seed,
        config_digest=config_digest,
    )
    if status == "boundary-stall":
        report.beta_support_estimate = _beta_on_support(model, u)
        raise BoundaryStall(
            f"descent blocked at the boundary of A after {it} iterations (|grad| = {gn:.2e}); "
            f"Psi near the boundary is bounded below by about "
            f"{report.beta_support_estimate:.4g}", report)
    if status != "converged":
        raise MaxIter(f"no convergence after {it} iterations ({status}, |grad| = {gn:.2e})",
                      report)
    return report


def _beta_on_support(model, u):
    beta = model.nl.beta(model.grid.coords)
    if beta is None:
        return float("nan")
    beta = np.broadcast_to(np.asarray(beta, dtype=float), u.shape)
    mask = np.abs(u) > 1e-8 * np.max(np.abs(u))
    return float(model.vol * np.sum(beta[mask]))


# ---------------------------------------------------------------------------
# multiple solutions


@dataclass(frozen=True)
class SearchOptions:
    solve: SolveOptions = SolveOptions()
    random_starts: int = 4
    deflation_sigma: float = 1.0
    distinct_distance: float = 0.1
    distinct_level: float = 1e-4
    newton_max_iter: int = 50
    threads: int = 1


@dataclass
class Solution:
    u: Field
    level: float
    residual: float
    sign_verdict: str
    origin: str
    symmetric_level_gap: float = 0.0
    interior_zeros: int | None = None


@dataclass
class MultiplicityReport:
    solutions: list
    distinct_count: int
    target_s_m: int
    m: int
    note: str = "each solution u stands for the pair {u, -u}"


def relative_distance(model, a: np.ndarray, b: np.ndarray) -> float:
    """min(||a - b||, ||a + b||) / max(||a||, ||b||): distance between pairs."""
    scale = max(math.sqrt(model.norm2(a)), math.sqrt(model.norm2(b)))
    d = min(math.sqrt(model.norm2(a - b)), math.sqrt(model.norm2(a + b)))
    return d / scale


def _is_new(model, sol_u, level, found, opts):
    for s in found:
        if (relative_distance(model, sol_u, s.u.values) <= opts.distinct_distance
                and abs(level - s.level) <= opts.distinct_level * max(abs(level), abs(s.level))):
            return False
    return True


def deflated_newton(model: EnergyModel, u0: Field, known: list, *, sigma: float = 1.0,
                    tol: float = 1e-8, max_iter: int = 100):
    """Newton on I'(w) = 0 along the Nehari set with the residual multiplied by
    prod_k (1 + sigma / ||w - r_k||^2) over r_k in +-known.

    Returns the converged Nehari point as a Field, or None.
    """
    L = model.grid.laplacian
    roots = [r.values for r in known] + [-r.values for r in known]

    def deflation(w):
        lnD, dvec = 0.0, np.zeros_like(w)
        for r in roots:
            diff = w - r
            d2 = model.norm2(diff)
            lnD += math.log1p(sigma / d2)
            # gradient of ln(1 + sigma/d2) as a dual vector (vol folded in)
            dvec += -2 * sigma / (d2 * (d2 + sigma)) * model.vol * (L @ diff)
        return math.exp(lnD), dvec

    def merit(w):
        gI = model.grad(w)
        return math.sqrt(model.norm2(gI)), gI

    try:
        w = nehari_project(model, u0).values
    except (NotInA, BracketOverflow):
        return None
    for _ in range(max_iter):
        gnorm, _g = merit(w)
        # on the Nehari set ||grad Psi|| = ||w|| ||grad I(w)|| up to the fibering error
        if gnorm * math.sqrt(model.norm2(w)) <= tol:
            return Field(model.grid, w)
        D, dvec = deflation(w)
        try:
            dN = _newton_direction(model, w)
        except RuntimeError:
            return None
        if not np.all(np.isfinite(dN)):
            return None
        denom = 1.0 - float(dvec @ dN)
        d = dN / denom if abs(denom) > 1e-12 else dN
        base = D * gnorm
        lam = 1.0
        w_next = None
        for _ls in range(20):
            trial = w + lam * d
            try:
                trial_u = _normalize(trial, model)
                t = _fiber(model, trial_u)[0]
            except (NotInA, BracketOverflow, ValueError):
                lam *= 0.5
                continue
            trial = t * trial_u
            Dt, _ = deflation(trial)
            gt, _ = merit(trial)
            if Dt * gt < base or lam < 1e-4:
                w_next = trial
                break
            lam *= 0.5
        if w_next is None:
            return None
        w = w_next
    gnorm, _ = merit(w)
    if gnorm * math.sqrt(model.norm2(w)) <= tol:
        return Field(model.grid, w)
    return None


def _record(model, w: Field, origin: str) -> Solution:
    v = w.values
    lvl = model.energy(v)
    u = _normalize(v, model)
    res = math.sqrt(model.norm2(_psi_grad(model, u)))
    gap = abs(model.energy(-v) - lvl) / max(abs(lvl), 1e-300)
    zeros = interior_zeros(v) if model.grid.dim == 1 else None
    return Solution(w, lvl, res, sign_verdict(v), origin, gap, zeros)


def count_below_one(spectrum: SpectrumResult) -> int:
    """Number m of distinct eigenvalues below 1."""
    return int(np.count_nonzero(spectrum.distinct < 1.0)) if not spectrum.infinite else 0


def start_battery(spectrum: SpectrumResult, s_m: int, n_random: int, rng) -> list:
    """Eigen-directions e_1..e_{s_m} then random unit combinations of them."""
    basis = [p.e for p in spectrum.pairs[:s_m]]
    starts = [("e%d" % (j + 1), e) for j, e in enumerate(basis)]
    for k in range(n_random):
        c = rng.standard_normal(s_m)
        c /= np.linalg.norm(c)
        vals = sum(ck * e.values for ck, e in zip(c, basis))
        starts.append((f"random{k}", Field(basis[0].grid, vals)))
    return starts


def multiplicity_search(model: EnergyModel, spectrum: SpectrumResult,
                        opts: SearchOptions | None = None, *, seed: int = 0) -> MultiplicityReport:
    """Search for s_m = 1 + sum_{j=2}^m d_j pairs of solutions.

    Descent from each start of the battery, then deflated Newton restarts
    from the same starts with every solution found so far (and its
    negative) deflated.  Candidates are kept when they converge and differ
    from all earlier ones in H^1_0 distance or level.
    """
    opts = opts or SearchOptions()
    m = count_below_one(spectrum)
    if m < 1:
        raise ValueError("no eigenvalue lambda_j(eta) < 1: the problem has no solution pairs")
    if spectrum.multiplicities and m == len(spectrum.multiplicities) \
            and not spectrum.last_cluster_complete:
        raise ValueError("spectrum does not resolve the last eigenvalue below 1")
    s_m = spectrum.s(m)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    starts = start_battery(spectrum, s_m, opts.random_starts, rng)

    def descend(item):
        name, u0 = item
        try:
            rep = minimize_psi(model, u0, opts.solve, seed=seed)
        except (MaxIter, BoundaryStall, NotInA, BracketOverflow) as exc:
            log.info("start %s failed: %s", name, exc)
            return None
        return name, rep

    if opts.threads > 1:
        with ThreadPoolExecutor(opts.threads) as pool:
            results = list(pool.map(descend, starts))
    else:
        results = [descend(s) for s in starts]

    found: list = []
    for res in results:
        if res is None:
            continue
        name, rep = res
        if _is_new(model, rep.u_star.values, rep.level, found, opts):
            found.append(_record(model, rep.u_star, f"descent:{name}"))

    for name, u0 in starts:
        w = deflated_newton(model, u0, [s.u for s in found], sigma=opts.deflation_sigma,
                            tol=opts.solve.tol, max_iter=opts.newton_max_iter)
        if w is None:
            continue
        rec = _record(model, w, f"deflated-newton:{name}")
        if rec.residual <= 10 * opts.solve.tol and \
                _is_new(model, w.values, rec.level, found, opts):
            found.append(rec)

    found.sort(key=lambda s: s.level)
    return MultiplicityReport(found, len(found), s_m, m)
