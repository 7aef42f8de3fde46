import math

import numpy as np
import pytest
import scipy.sparse.linalg as spla
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from asymlin import (
    Field,
    Grid,
    GridMismatch,
    UnsupportedDimension,
    fatou_support_check,
    h10_inner,
    h10_norm,
    sobolev_constant,
    support_measure,
    weighted_l2_inner,
)
from asymlin.grid import read_field_csv, write_field_csv
from oracles import talenti_quotient


@pytest.mark.parametrize("lengths,n", [((1.0,), (7,)), ((1.0, 2.0), (4, 5)),
                                       ((1.0, 1.5, 2.0), (3, 4, 2))])
def test_laplacian_spd(lengths, n):
    g = Grid(lengths, n)
    L = g.laplacian.toarray()
    assert np.allclose(L, L.T)
    assert np.linalg.eigvalsh(L).min() > 0
    assert g.size == np.prod(n)


def test_spacings_and_coords():
    g = Grid((math.pi, 2.0), (3, 4))
    assert g.h == pytest.approx((math.pi / 4, 2.0 / 5))
    # last axis runs fastest
    assert g.coords[1] == pytest.approx([math.pi / 4, 0.8])
    assert g.coords[4] == pytest.approx([math.pi / 2, 0.4])


@pytest.mark.parametrize("lengths,n", [((0.0,), (3,)), ((1.0,), (0,)), ((1.0, 1.0), (3,))])
def test_bad_grid(lengths, n):
    with pytest.raises(ValueError):
        Grid(lengths, n)


def test_four_dims_unsupported():
    with pytest.raises(UnsupportedDimension):
        Grid((1.0,) * 4, (2,) * 4)


def test_h10_of_sine():
    # int_0^pi cos^2 = pi/2, second-order accurate
    g = Grid((math.pi,), (1023,))
    u = g.interpolate(np.sin)
    assert h10_norm(u) ** 2 == pytest.approx(math.pi / 2, rel=1e-5)
    assert weighted_l2_inner(u, u, 3.0) == pytest.approx(1.5 * math.pi, rel=1e-12)


def test_laplace_eigenfunction_2d():
    g = Grid((math.pi, math.pi), (63, 63))
    u = g.interpolate(lambda x, y: np.sin(x) * np.sin(2 * y))
    lam = h10_inner(u, u) / weighted_l2_inner(u, u)
    assert lam == pytest.approx(5.0, rel=1e-3)


def test_grid_mismatch():
    a = Grid((1.0,), (5,)).zeros()
    b = Grid((1.0,), (6,)).zeros()
    with pytest.raises(GridMismatch):
        h10_inner(a, b)
    with pytest.raises(GridMismatch):
        a + b


def test_field_invariants():
    g = Grid((1.0,), (4,))
    with pytest.raises(ValueError):
        Field(g, [0.0, np.nan, 0.0, 0.0])
    with pytest.raises(ValueError):
        Field(g, [1.0, 2.0])
    u = Field(g, [1.0, 2.0, 3.0, 4.0])
    with pytest.raises(ValueError):
        u.values[0] = 5.0
    assert h10_norm(g.zeros()) == 0.0
    with pytest.raises(ValueError):
        g.zeros().normalized()


def test_weight_non_finite():
    g = Grid((1.0,), (4,))
    with pytest.raises(ValueError), np.errstate(divide="ignore"):
        g.eval_weight(lambda x: 1.0 / (x[:, 0] - x[0, 0]))


def test_support_measure():
    g = Grid((1.0,), (9,))
    u = Field(g, [0, 0, 1, 2, 1e-12, 3, 0, 0, 0])
    sm = support_measure(u)
    assert sm.threshold_used == pytest.approx(3e-8)
    assert sm.measure == pytest.approx(3 * g.h[0])
    assert support_measure(u, threshold=0.0).measure == pytest.approx(4 * g.h[0])
    assert 0 <= support_measure(g.field(np.ones(9))).measure <= g.volume


def test_fatou_signed_alternation():
    g = Grid((1.0,), (3,))
    us = [g.field(-np.ones(3)) if k % 2 == 0 else g.zeros() for k in range(6)]
    vs = [g.field(np.ones(3))] * 6
    v = fatou_support_check(us, vs)
    assert v.status == "holds"
    assert v.lhs == 0.0


def test_fatou_constant_sequence_equality():
    g = Grid((1.0,), (5,))
    u = g.field([1, 0, 2, 0, 3])
    v = g.field([1, 1, 1, 1, 1])
    res = fatou_support_check([u] * 4, [v] * 4)
    assert res.holds and res.lhs == pytest.approx(res.rhs)


def test_fatou_errors():
    g = Grid((1.0,), (3,))
    with pytest.raises(ValueError):
        fatou_support_check([], [])
    with pytest.raises(ValueError):
        fatou_support_check([g.zeros()], [g.field([-1.0, 0, 0])])


def test_sobolev_constant_against_talenti_quotient():
    assert sobolev_constant(3) == pytest.approx(talenti_quotient(0.5), rel=1e-9)
    # any other member of the family has a larger quotient
    assert talenti_quotient(0.7) > sobolev_constant(3)
    with pytest.raises(UnsupportedDimension):
        sobolev_constant(2)


def test_csv_roundtrip(tmp_path):
    g = Grid((1.0, 2.0), (3, 2))
    u = g.field(np.random.default_rng(1).standard_normal(6))
    write_field_csv(u, tmp_path / "u.csv")
    text = (tmp_path / "u.csv").read_text().splitlines()
    assert text[0] == "x,y,value"
    back = read_field_csv(g, tmp_path / "u.csv")
    assert np.array_equal(back.values, u.values)


def test_solve_laplacian_matches_spsolve():
    g = Grid((1.0, 1.0), (6, 5))
    b = np.arange(g.size, dtype=float)
    assert np.allclose(g.solve_laplacian(b), spla.spsolve(g.laplacian, b))


_G = Grid((1.0, 1.3), (5, 4))
_vals = arrays(np.float64, _G.size, elements=st.floats(-10, 10))


@given(_vals, _vals, st.floats(-3, 3))
def test_h10_bilinear_symmetric(a, b, s):
    u, v = _G.field(a), _G.field(b)
    assert h10_inner(u, v) == pytest.approx(h10_inner(v, u), rel=1e-12, abs=1e-9)
    assert h10_inner(u * s, v) == pytest.approx(s * h10_inner(u, v), rel=1e-9, abs=1e-7)
    assert abs(h10_inner(u, v)) <= h10_norm(u) * h10_norm(v) * (1 + 1e-12) + 1e-9


@given(_vals)
def test_norm_zero_iff_zero(a):
    u = _G.field(a)
    assert (h10_norm(u) == 0) == (not np.any(a))


@given(st.lists(arrays(np.float64, 6, elements=st.floats(-2, 2)), min_size=1, max_size=8),
       st.data())
def test_fatou_random(us, data):
    g = Grid((1.0,), (6,))
    vs = [data.draw(arrays(np.float64, 6, elements=st.floats(0, 5))) for _ in us]
    # exact zeros are the interesting case
    us = [np.where(np.abs(u) < 0.5, 0.0, u) for u in us]
    assert fatou_support_check([g.field(u) for u in us], [g.field(v) for v in vs]).holds
