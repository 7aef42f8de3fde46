"""Uniform finite-difference discretization of a box with Dirichlet walls.

Conventions: with ``L`` the positive 3/5/7-point Laplacian on interior
nodes and ``vol`` the cell volume prod(h_k),

    h10_inner(u, v)          = vol * u^T L v        ~ int grad u . grad v
    weighted_l2_inner(u,v,t) = vol * sum t_i u_i v_i ~ int t u v

Node order is lexicographic (C order, last axis fastest).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import GridMismatch, UnsupportedDimension

WeightLike = Union[float, np.ndarray, Callable[[np.ndarray], np.ndarray]]


@dataclass(frozen=True)
class Grid:
    """Interior nodes of the box prod (0, L_k) with n_k nodes per axis."""

    lengths: tuple
    n_interior: tuple

    def __post_init__(self):
        lengths = tuple(float(x) for x in np.atleast_1d(self.lengths))
        n = tuple(int(k) for k in np.atleast_1d(self.n_interior))
        if len(lengths) != len(n):
            raise ValueError("lengths and n_interior must have the same length")
        if len(lengths) not in (1, 2, 3):
            raise UnsupportedDimension(f"dim must be 1, 2 or 3, got {len(lengths)}")
        if any(not math.isfinite(x) or x <= 0 for x in lengths):
            raise ValueError(f"lengths must be positive, got {lengths}")
        if any(k < 1 for k in n):
            raise ValueError(f"n_interior must be >= 1 per axis, got {n}")
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "n_interior", n)

    @classmethod
    def uniform(cls, dim: int, length: float, n: int) -> "Grid":
        return cls((length,) * dim, (n,) * dim)

    @property
    def dim(self) -> int:
        return len(self.lengths)

    @property
    def shape(self) -> tuple:
        return self.n_interior

    @property
    def size(self) -> int:
        return int(np.prod(self.n_interior))

    @cached_property
    def h(self) -> tuple:
        return tuple(L / (n + 1) for L, n in zip(self.lengths, self.n_interior))

    @cached_property
    def volume_element(self) -> float:
        return float(np.prod(self.h))

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))

    @cached_property
    def coords(self) -> np.ndarray:
        """Node coordinates, shape (size, dim)."""
        axes = [h * np.arange(1, n + 1) for h, n in zip(self.h, self.n_interior)]
        mesh = np.meshgrid(*axes, indexing="ij")
        out = np.stack([m.ravel() for m in mesh], axis=1)
        out.setflags(write=False)
        return out

    @cached_property
    def laplacian(self) -> sp.csc_matrix:
        """Positive discrete Laplacian (no volume factor)."""
        ops = []
        for h, n in zip(self.h, self.n_interior):
            ops.append(sp.diags([-np.ones(n - 1), 2 * np.ones(n), -np.ones(n - 1)],
                                [-1, 0, 1], format="csr") / h**2)
        L = sp.csr_matrix((self.size, self.size))
        for k, op in enumerate(ops):
            term = sp.identity(1, format="csr")
            for j, n in enumerate(self.n_interior):
                term = sp.kron(term, op if j == k else sp.identity(n, format="csr"),
                               format="csr")
            L = L + term
        return L.tocsc()

    @cached_property
    def stiffness(self) -> sp.csc_matrix:
        return (self.volume_element * self.laplacian).tocsc()

    @cached_property
    def _lu(self):
        return spla.splu(self.laplacian)

    def solve_laplacian(self, rhs: np.ndarray) -> np.ndarray:
        """Solve L x = rhs (rhs may have several columns)."""
        return self._lu.solve(np.asarray(rhs, dtype=float))

    def eval_weight(self, theta: WeightLike) -> np.ndarray:
        """Nodal values of a weight given as constant, array or callable of coords."""
        if callable(theta):
            vals = theta(self.coords)
        else:
            vals = theta
        vals = np.broadcast_to(np.asarray(vals, dtype=float), (self.size,))
        if not np.all(np.isfinite(vals)):
            raise ValueError("weight has non-finite values at grid nodes")
        return vals

    def field(self, values) -> "Field":
        return Field(self, values)

    def interpolate(self, fn: Callable[..., np.ndarray]) -> "Field":
        """Field of nodal values fn(x1, ..., xd)."""
        return Field(self, fn(*self.coords.T))

    def zeros(self) -> "Field":
        return Field(self, np.zeros(self.size))


@dataclass(frozen=True, eq=False)
class Field:
    """Nodal values on the interior nodes of a grid."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float).reshape(-1)
        if vals.shape != (self.grid.size,):
            raise ValueError(f"expected {self.grid.size} values, got {vals.size}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def _check(self, other: "Field") -> None:
        if other.grid != self.grid:
            raise GridMismatch("fields live on different grids")

    def __add__(self, other):
        self._check(other)
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other):
        self._check(other)
        return Field(self.grid, self.values - other.values)

    def __mul__(self, s):
        return Field(self.grid, float(s) * self.values)

    __rmul__ = __mul__

    def __truediv__(self, s):
        return Field(self.grid, self.values / float(s))

    def __neg__(self):
        return Field(self.grid, -self.values)

    def norm(self) -> float:
        return h10_norm(self)

    def normalized(self) -> "Field":
        n = h10_norm(self)
        if n == 0:
            raise ValueError("cannot normalize the zero field")
        return self / n

    def to_csv(self, path) -> None:
        write_field_csv(self, path)


@dataclass(frozen=True)
class SupportMeasure:
    measure: float
    threshold_used: float


def _same_grid(u: Field, v: Field) -> Grid:
    if u.grid != v.grid:
        raise GridMismatch("fields live on different grids")
    return u.grid


def h10_inner(u: Field, v: Field) -> float:
    g = _same_grid(u, v)
    return float(g.volume_element * (u.values @ (g.laplacian @ v.values)))


def h10_norm(u: Field) -> float:
    # scale first so tiny (subnormal) fields do not underflow to a zero norm
    top = float(np.max(np.abs(u.values), initial=0.0))
    if top == 0.0:
        return 0.0
    v = u.values / top
    g = u.grid
    return top * math.sqrt(max(g.volume_element * float(v @ (g.laplacian @ v)), 0.0))


def weighted_l2_inner(u: Field, v: Field, theta: WeightLike = 1.0) -> float:
    g = _same_grid(u, v)
    w = g.eval_weight(theta)
    return float(g.volume_element * np.sum(w * u.values * v.values))


def support_measure(u: Field, threshold: float | None = None) -> SupportMeasure:
    """Discrete measure of [|u| > threshold].

    The default threshold is 1e-8 * max|u|; floating-point fields are never
    exactly zero.
    """
    if threshold is None:
        threshold = 1e-8 * float(np.max(np.abs(u.values), initial=0.0))
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    count = int(np.count_nonzero(np.abs(u.values) > threshold))
    return SupportMeasure(u.grid.volume_element * count, float(threshold))


@dataclass(frozen=True)
class FatouVerdict:
    holds: bool
    lhs: float
    rhs: float
    witnesses: tuple = ()

    @property
    def status(self) -> str:
        return "holds" if self.holds else "violated"


def _tail(n: int) -> slice:
    # finite proxy for liminf: min over the last ceil(n/2) terms
    return slice(n - (n + 1) // 2, n)


def fatou_support_check(u_seq: Sequence[Field], v_seq: Sequence[Field]) -> FatouVerdict:
    """Compare int_{[liminf u_n != 0]} liminf v_n with liminf int_{[u_n != 0]} v_n.

    Exact zero test. The support of the liminf is taken for |u_n| (the set
    [w != 0] equals [|w| != 0]); with the signed liminf the inequality fails
    for sequences such as u_n = -1, 0, -1, 0, ...
    """
    if len(u_seq) == 0 or len(v_seq) == 0:
        raise ValueError("empty sequence")
    if len(u_seq) != len(v_seq):
        raise ValueError("u_seq and v_seq must have the same length")
    grid = u_seq[0].grid
    for w in list(u_seq) + list(v_seq):
        if w.grid != grid:
            raise GridMismatch("all fields must share one grid")
    U = np.stack([u.values for u in u_seq])
    V = np.stack([v.values for v in v_seq])
    if np.any(V < 0):
        raise ValueError("v_seq entries must be nonnegative")
    tail = _tail(len(u_seq))
    vol = grid.volume_element
    inf_abs_u = np.min(np.abs(U[tail]), axis=0)
    inf_v = np.min(V[tail], axis=0)
    lhs_nodes = np.where(inf_abs_u != 0, inf_v, 0.0)
    lhs = vol * float(np.sum(lhs_nodes))
    integrals = vol * np.sum(np.where(U != 0, V, 0.0), axis=1)
    rhs = float(np.min(integrals[tail]))
    holds = lhs <= rhs * (1 + 1e-14) + 1e-300
    witnesses = ()
    if not holds:
        worst = int(np.argmin(integrals[tail])) + tail.start
        witnesses = tuple(int(i) for i in np.flatnonzero((inf_abs_u != 0) & (U[worst] == 0)))
    return FatouVerdict(holds, lhs, rhs, witnesses)


def sobolev_constant(d: int) -> float:
    """Best constant S in S |u|_{2*}^2 <= ||u||^2 on H^1_0, d = 3 only."""
    if d != 3:
        raise UnsupportedDimension(f"Sobolev constant for 2* needs d = 3, got d = {d}")
    return math.pi * d * (d - 2) * (math.gamma(d / 2) / math.gamma(d)) ** (2 / d)


def write_field_csv(u: Field, path) -> None:
    names = ["x", "y", "z"][: u.grid.dim]
    data = np.column_stack([u.grid.coords, u.values])
    header = ",".join(names + ["value"])
    np.savetxt(path, data, delimiter=",", header=header, comments="", fmt="%.17g")


def read_field_csv(grid: Grid, path) -> Field:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if not np.allclose(data[:, :-1], grid.coords, rtol=1e-12, atol=1e-12):
        raise GridMismatch("CSV node coordinates do not match the grid")
    return Field(grid, data[:, -1])
