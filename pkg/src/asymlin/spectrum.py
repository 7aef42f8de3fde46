"""Smallest eigenpairs of -Lap e = lambda theta(x) e with Dirichlet walls.

Block inverse (shift-and-invert at zero) subspace iteration with the
factorized Laplacian, Rayleigh-Ritz in an L-orthonormal basis so that a
semidefinite weight is handled without special cases.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError
from .grid import Field, Grid, WeightLike

STALL_TOL = 1e-7


@dataclass(frozen=True)
class EigenPair:
    lam: float
    e: Field
    weight_id: str = ""


@dataclass(frozen=True)
class SpectrumResult:
    pairs: tuple
    multiplicities: tuple
    infinite: bool = False
    weight_id: str = ""
    last_cluster_complete: bool = True
    iterations: int = 0

    @property
    def lambdas(self) -> np.ndarray:
        if self.infinite:
            return np.array([math.inf])
        return np.array([p.lam for p in self.pairs])

    @property
    def distinct(self) -> np.ndarray:
        """One representative eigenvalue per cluster."""
        lams = self.lambdas
        idx = np.cumsum((0,) + self.multiplicities[:-1])
        return lams[idx] if lams.size else lams

    def s(self, m: int) -> int:
        """1 + sum_{j=2}^{m} d_j over the first m distinct eigenvalues."""
        if m < 1 or m > len(self.multiplicities):
            raise ValueError(f"m = {m} outside 1..{len(self.multiplicities)}")
        return 1 + int(sum(self.multiplicities[1:m]))

    @property
    def s_m(self) -> int:
        return self.s(len(self.multiplicities)) if self.multiplicities else 0

    def eigenfunctions(self, k: int | None = None) -> list:
        return [p.e for p in self.pairs[:k]]


def cluster(lams, rtol: float = 1e-6) -> tuple:
    """Sizes of runs of sorted values whose consecutive relative gap is <= rtol."""
    sizes = []
    for k, lam in enumerate(lams):
        if k and abs(lam - lams[k - 1]) <= rtol * abs(lam):
            sizes[-1] += 1
        else:
            sizes.append(1)
    return tuple(sizes)


def _orthonormalize(Y, L):
    G = Y.T @ (L @ Y)
    G = 0.5 * (G + G.T)
    w, V = np.linalg.eigh(G)
    keep = w > w.max() * 1e-14
    return Y @ (V[:, keep] / np.sqrt(w[keep]))


def weighted_eigs(grid: Grid, theta: WeightLike, count: int, *, cluster_rtol: float = 1e-6,
                  tol: float = 1e-10, max_iter: int = 2000, weight_id: str = "",
                  seed: int = 0) -> SpectrumResult:
    """The ``count`` smallest eigenpairs of K e = lambda M_theta e.

    Eigenvectors are M_theta-orthogonal and scaled to unit H^1_0 norm, with
    the sign fixed so the largest-magnitude entry is positive.  A weight that
    vanishes identically gives ``infinite=True`` (lambda_1 = oo).
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    th = grid.eval_weight(theta)
    if np.any(th < 0):
        raise ValueError("weight must be nonnegative")
    scale = float(np.max(th))
    if scale <= 1e-14:
        return SpectrumResult((), (), infinite=True, weight_id=weight_id)
    support = int(np.count_nonzero(th > 1e-14 * scale))
    if count > support:
        raise ValueError(f"count {count} exceeds the {support} nodes where the weight is positive")
    if support < grid.size * 0.01:
        warnings.warn("weight is positive on a very small set of nodes", stacklevel=2)

    L = grid.laplacian
    p = min(count + max(count, 6), support)
    rng = np.random.default_rng(seed)
    X = _orthonormalize(grid.solve_laplacian(th[:, None] * rng.standard_normal((grid.size, p))), L)
    lam = None
    best, best_it = math.inf, 0
    for it in range(1, max_iter + 1):
        Y = grid.solve_laplacian(th[:, None] * X)
        X = _orthonormalize(Y, L)
        C = X.T @ (th[:, None] * X)
        mu, V = np.linalg.eigh(0.5 * (C + C.T))
        order = np.argsort(mu)[::-1]
        mu, V = mu[order], V[:, order]
        X = X @ V
        lam = 1.0 / mu
        LX = L @ X[:, :count]
        R = LX - (th[:, None] * X[:, :count]) * lam[:count]
        res = np.linalg.norm(R, axis=0) / np.linalg.norm(LX, axis=0)
        if np.all(res <= tol):
            break
        # on fine grids rounding (cond(L) ~ h^-2) can keep the residual just
        # above tol; accept a plateau that is already small
        worst = float(res.max())
        if worst < 0.5 * best:
            best, best_it = worst, it
        elif it - best_it >= 100 and worst <= STALL_TOL:
            warnings.warn(f"eigensolver residual stalled at {worst:.2e} (rounding level)",
                          stacklevel=2)
            break
    else:
        raise ConvergenceError(f"eigensolver did not converge in {max_iter} iterations "
                               f"(max residual {res.max():.2e})")

    vol = grid.volume_element
    pairs = []
    for j in range(count):
        x = X[:, j] / math.sqrt(vol)
        k = int(np.argmax(np.abs(x)))
        if x[k] < 0:
            x = -x
        pairs.append(EigenPair(float(lam[j]), Field(grid, x), weight_id))
    lams = [pr.lam for pr in pairs]
    mult = cluster(lams, cluster_rtol)
    complete = True
    if len(lam) > count:
        complete = abs(lam[count] - lams[-1]) > cluster_rtol * lam[count]
    hmax2 = max(grid.h) ** 2
    reps = np.array(lams)[np.cumsum((0,) + mult[:-1])]
    if reps.size > 1 and np.any(np.diff(reps) / reps[1:] < 10 * hmax2):
        warnings.warn("adjacent eigenvalue clusters closer than 10 h^2; the discrete "
                      "multiplicities may split a continuous one", stacklevel=2)
    return SpectrumResult(tuple(pairs), mult, weight_id=weight_id,
                          last_cluster_complete=complete, iterations=it)


def lambda1(grid: Grid, theta: WeightLike, **kw) -> float:
    """First weighted eigenvalue; +oo for a vanishing weight."""
    res = weighted_eigs(grid, theta, 1, **kw)
    return math.inf if res.infinite else res.pairs[0].lam


def eigs_below(grid: Grid, theta: WeightLike, bound: float = 1.0, *, start: int = 4,
               **kw) -> SpectrumResult:
    """Enough eigenpairs to contain every eigenvalue < bound plus one >= bound."""
    count = start
    th = grid.eval_weight(theta)
    support = int(np.count_nonzero(th > 1e-14 * max(float(np.max(th)), 1e-300)))
    while True:
        count = min(count, support)
        res = weighted_eigs(grid, theta, count, **kw)
        if res.infinite or res.lambdas[-1] >= bound or count >= support:
            if res.last_cluster_complete or res.infinite or count >= support:
                return res
        count *= 2
