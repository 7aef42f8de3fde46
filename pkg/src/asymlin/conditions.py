"""Numerical checks of the eigenvalue condition and the beta conditions.

The eigenvalue condition asks for lambda_m(eta) < 1 < lambda_1(alpha).
The beta conditions compare ess inf beta with

    |eta|_oo tau^2 / (2 lambda_1(eta - alpha) S^(N/2))

where tau = inf t_u over the unit sphere inside A (ground state) or
tau_m = max t_u over the unit sphere of span(e_1..e_{s_m}) (multiplicity).
Neither tau nor tau_m is computable exactly: the minimum over the sphere
is estimated from above by multi-start descent and the maximum from below
by sampling plus ascent, so verdicts within 10% of the threshold are
reported as inconclusive.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import BracketOverflow, NehariError, NotInA
from .grid import sobolev_constant
from .nehari import EnergyModel, _fiber, _normalize, count_below_one
from .nonlinearity import beta_pointwise
from .spectrum import SpectrumResult, eigs_below, lambda1

F2_MARGIN = 1e-6
GUARD_BAND = 0.10


@dataclass
class TauEstimate:
    value: float
    bound: str
    low_confidence: bool
    starts: int
    best_start: str = ""


@dataclass
class ConditionReport:
    dim: int
    m: int = 0
    s_m: int = 0
    lambda_m_eta: float = math.nan
    lambda1_eta: float = math.nan
    lambda_next_eta: float = math.nan
    lambda1_alpha: float = math.nan
    lambda1_eta_minus_alpha: float = math.nan
    eta_sup: float = math.nan
    essinf_beta: float = math.nan
    sobolev_S: float | None = None
    tau_estimate: float | None = None
    tau_bound: str = "upper"
    tau_low_confidence: bool = False
    tau_m_estimate: float | None = None
    tau_m_bound: str = "lower"
    rhs_beta: float | None = None
    rhs_beta_m: float | None = None
    support_bound: float | None = None
    ground_level: float | None = None
    level_gap_bound: float | None = None
    level_gap_holds: bool | None = None
    verdict_f2: str = "fails"
    verdict_beta: str = "not-evaluated"
    verdict_beta_m: str = "not-evaluated"
    notes: list = field(default_factory=list)
    spectrum_eta: SpectrumResult | None = field(default=None, repr=False)

    def as_dict(self) -> dict:
        d = asdict(self)
        d.pop("spectrum_eta")
        return d


def _rhs(eta_sup, tau, lam1_gap, S, dim):
    return eta_sup * tau**2 / (2.0 * lam1_gap * S ** (dim / 2))


def _verdict(lhs, rhs):
    if lhs > (1 + GUARD_BAND) * rhs:
        return "holds"
    if lhs < (1 - GUARD_BAND) * rhs:
        return "fails"
    return "inconclusive"


def check_f2(model: EnergyModel, *, cluster_rtol: float = 1e-6) -> ConditionReport:
    """lambda_m(eta) < 1 < lambda_1(alpha) for the largest admissible m."""
    grid = model.grid
    rep = ConditionReport(dim=grid.dim)
    spec = eigs_below(grid, model.eta_nodes, 1.0, cluster_rtol=cluster_rtol, weight_id="eta")
    rep.spectrum_eta = spec
    distinct = spec.distinct
    rep.lambda1_eta = float(distinct[0])
    m = int(np.count_nonzero(distinct < 1.0 - F2_MARGIN))
    rep.m = m
    if m >= 1:
        rep.s_m = spec.s(m)
        rep.lambda_m_eta = float(distinct[m - 1])
        nxt = distinct[distinct >= 1.0 - F2_MARGIN]
        rep.lambda_next_eta = float(nxt[0]) if nxt.size else math.nan
    else:
        rep.lambda_m_eta = float(distinct[0])
        rep.notes.append("no eigenvalue lambda_j(eta) below 1")
    if count_below_one(spec) != m:
        rep.notes.append("an eigenvalue of eta lies within 1e-6 of 1 (resonance)")
    alpha = model.alpha_nodes
    if np.any(alpha < 0):
        raise ValueError("alpha must be nonnegative")
    rep.lambda1_alpha = lambda1(grid, alpha, weight_id="alpha")
    if not rep.lambda1_alpha > 1.0 + F2_MARGIN:
        rep.notes.append("lambda_1(alpha) <= 1")
    rep.verdict_f2 = "holds" if m >= 1 and rep.lambda1_alpha > 1.0 + F2_MARGIN else "fails"
    return rep


# ---------------------------------------------------------------------------
# t_u and its gradient


def t_and_gradient(model: EnergyModel, u: np.ndarray):
    """t_u and the H^1_0 gradient of u -> t_u (full space, by implicit differentiation).

    With phi(t, u) = ||u||^2 - int ratio(x, t u) u^2 = 0:
      d_t phi   = -int (f'(w) - ratio(w)) u^2 / t,      w = t u
      d_u phi v = int (2 grad u.grad v - (f'(w) + ratio(w)) u v)
    """
    t = _fiber(model, u)[0]
    w = t * u
    dfw, rw = model.df(w), model.ratio(w)
    dphi_dt = -model.vol * float(np.sum((dfw - rw) * u * u)) / t
    b = 2.0 * (model.grid.laplacian @ u) - (dfw + rw) * u
    return t, -model.riesz(b) / dphi_dt


def _tangent(model, g, u):
    return g - model.inner(g, u) * u


def _descend_t(model, u, max_iter, tol, sign=1.0):
    """Armijo descent (sign=+1) or ascent (sign=-1) of t_u on the unit sphere in A."""
    u = _normalize(u, model)
    t, g = t_and_gradient(model, u)
    g = _tangent(model, g, u)
    margin0 = model.margin(u)
    for _ in range(max_iter):
        gn = math.sqrt(model.norm2(g))
        if gn <= tol * t:
            break
        s = t / gn
        moved = False
        for _ls in range(40):
            cand = _normalize(u - sign * s * g, model)
            if model.margin(cand) >= 1e-6 * margin0:
                try:
                    tc, gc = t_and_gradient(model, cand)
                except (NotInA, BracketOverflow):
                    tc = None
                if tc is not None and sign * (tc - t) <= -1e-4 * s * gn * gn:
                    moved = True
                    break
            s *= 0.5
        if not moved:
            break
        u, t, g = cand, tc, _tangent(model, gc, cand)
    return t, u


def _random_direction(model, basis, rng):
    c = rng.standard_normal(len(basis))
    base = sum(ck * e.values for ck, e in zip(c, basis))
    # smooth random perturbation: L^{-1} applied to white noise
    noise = model.riesz(rng.standard_normal(model.grid.size))
    noise *= math.sqrt(model.norm2(base)) / max(math.sqrt(model.norm2(noise)), 1e-300)
    return base + rng.uniform(0.0, 1.0) * noise


def _rng(seed, k):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(k,))))


def estimate_tau(model: EnergyModel, samples: int = 8, seed: int = 0, *,
                 spectrum: SpectrumResult | None = None, max_iter: int = 200,
                 tol: float = 1e-6, max_tries: int = 20) -> TauEstimate:
    """Smallest t_u found by descent from e_1..e_{s_m} and ``samples`` random
    unit fields in A.  An upper bound on tau."""
    if spectrum is None:
        spectrum = eigs_below(model.grid, model.eta_nodes, 1.0, weight_id="eta")
    m = count_below_one(spectrum)
    if m < 1:
        raise ValueError("no eigenvalue of eta below 1; A contains no eigen-directions")
    basis = [p.e for p in spectrum.pairs[:spectrum.s(m)]]
    starts = [(f"e{j + 1}", e.values) for j, e in enumerate(basis)]
    for k in range(samples):
        rng = _rng(seed, k)
        for _ in range(max_tries):
            v = _random_direction(model, basis, rng)
            if model.margin(v) > 1e-6 * model.norm2(v):
                starts.append((f"random{k}", v))
                break
    best, best_name = math.inf, ""
    for name, v in starts:
        try:
            t, _ = _descend_t(model, v, max_iter, tol, sign=1.0)
        except (NotInA, BracketOverflow):
            continue
        if t < best:
            best, best_name = t, name
    if not math.isfinite(best):
        raise NehariError("no start direction landed in A")
    return TauEstimate(best, "upper", samples == 0, len(starts), best_name)


def estimate_tau_m(model: EnergyModel, spectrum: SpectrumResult, samples: int = 64,
                   seed: int = 0, *, max_iter: int = 200, tol: float = 1e-8) -> TauEstimate:
    """Largest t_u over the unit sphere of span(e_1..e_{s_m}): a lower bound on tau_m.

    Eigenfunctions are H^1_0-orthonormal, so the sphere is parameterized by
    unit coefficient vectors c and u = sum c_j e_j.
    """
    m = count_below_one(spectrum)
    if m < 1:
        raise ValueError("no eigenvalue of eta below 1")
    s_m = spectrum.s(m)
    E = np.column_stack([p.e.values for p in spectrum.pairs[:s_m]])
    G = model.vol * (E.T @ (model.grid.laplacian @ E))

    def t_of(c):
        return _fiber(model, E @ c)[0]

    if s_m == 1:
        return TauEstimate(t_of(np.ones(1)), "exact", False, 1, "e1")

    rng = _rng(seed, 10**6)
    cands = [np.eye(s_m)[j] for j in range(s_m)]
    for _ in range(samples):
        c = rng.standard_normal(s_m)
        cands.append(c / np.linalg.norm(c))
    scored = sorted(((t_of(c), k) for k, c in enumerate(cands)), reverse=True)
    best = scored[0][0]
    for _, k in scored[: min(4, len(scored))]:
        c = cands[k]
        t = t_of(c)
        for _ in range(max_iter):
            _, g = t_and_gradient(model, E @ c)
            gc = model.vol * (E.T @ (model.grid.laplacian @ g))
            gc = np.linalg.solve(G, gc)  # coefficients of the projected gradient
            gc -= (gc @ c) * c
            gn = float(np.linalg.norm(gc))
            if gn <= tol * t:
                break
            s, moved = 1.0 / max(gn, 1e-300), False
            for _ls in range(40):
                cn = c + s * gc
                cn /= np.linalg.norm(cn)
                tn = t_of(cn)
                if tn - t >= 1e-4 * s * gn * gn:
                    moved = True
                    break
                s *= 0.5
            if not moved:
                break
            c, t = cn, tn
        best = max(best, t)
    return TauEstimate(best, "lower", samples == 0, len(cands))


# ---------------------------------------------------------------------------


def essinf_beta(model: EnergyModel, t_probe: float = 1e3) -> float:
    beta = model.nl.beta(model.grid.coords)
    if beta is not None:
        return float(np.min(np.broadcast_to(beta, (model.grid.size,))))
    return min(beta_pointwise(model.nl, x, t_probe) for x in model.grid.coords)


def check_beta(model: EnergyModel, variant: str = "both", *, samples: int = 8,
               seed: int = 0, f2: ConditionReport | None = None,
               ground_level: float | None = None, tau: float | None = None,
               tau_m: float | None = None) -> ConditionReport:
    """Evaluate the beta condition(s) and the supporting bounds.

    ``variant`` is "ground-state", "multiplicity" or "both".  A finite
    ess inf beta needs d = 3 (the Sobolev exponent 2* is undefined below);
    beta = +oo satisfies the condition in every dimension.
    """
    if variant not in ("ground-state", "multiplicity", "both"):
        raise ValueError(f"unknown variant {variant!r}")
    rep = f2 if f2 is not None else check_f2(model)
    rep.essinf_beta = essinf_beta(model)
    rep.eta_sup = float(np.max(np.abs(model.eta_nodes)))
    want_gs = variant in ("ground-state", "both")
    want_m = variant in ("multiplicity", "both")
    if rep.verdict_f2 != "holds":
        rep.notes.append("eigenvalue condition fails; beta conditions not evaluated")
        rep.verdict_beta = "not-applicable" if want_gs else rep.verdict_beta
        rep.verdict_beta_m = "not-applicable" if want_m else rep.verdict_beta_m
        return rep
    if math.isinf(rep.essinf_beta):
        if want_gs:
            rep.verdict_beta = "holds"
        if want_m:
            rep.verdict_beta_m = "holds"
        rep.notes.append("beta = +oo: condition holds for any tau")
        return rep
    if rep.dim != 3:
        rep.notes.append(f"finite beta needs d = 3; not applicable at d = {rep.dim}")
        if want_gs:
            rep.verdict_beta = "not-applicable"
        if want_m:
            rep.verdict_beta_m = "not-applicable"
        return rep

    S = sobolev_constant(3)
    rep.sobolev_S = S
    gap = model.eta_nodes - model.alpha_nodes
    if np.any(gap < 0):
        raise ValueError("eta - alpha must be nonnegative")
    rep.lambda1_eta_minus_alpha = lambda1(model.grid, gap, weight_id="eta-alpha")
    rep.support_bound = (S / rep.eta_sup) ** (rep.dim / 2)
    if want_gs:
        if tau is None:
            est = estimate_tau(model, samples, seed, spectrum=rep.spectrum_eta)
            tau, rep.tau_low_confidence = est.value, est.low_confidence
        rep.tau_estimate = tau
        rep.rhs_beta = _rhs(rep.eta_sup, tau, rep.lambda1_eta_minus_alpha, S, rep.dim)
        rep.verdict_beta = _verdict(rep.essinf_beta, rep.rhs_beta)
    if want_m:
        if tau_m is None:
            tau_m = estimate_tau_m(model, rep.spectrum_eta, max(samples, 16), seed).value
        rep.tau_m_estimate = tau_m
        rep.rhs_beta_m = _rhs(rep.eta_sup, tau_m, rep.lambda1_eta_minus_alpha, S, rep.dim)
        rep.verdict_beta_m = _verdict(rep.essinf_beta, rep.rhs_beta_m)
    rep.level_gap_bound = rep.essinf_beta * rep.support_bound
    if ground_level is not None:
        rep.ground_level = ground_level
        rep.level_gap_holds = bool(0 <= ground_level < rep.level_gap_bound)
    return rep
