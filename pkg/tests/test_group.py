import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pmech import group as Gr
from pmech import units as U
from pmech.errors import NotSymplectic, RankMismatch

fr = st.fractions(min_value=-5, max_value=5, max_denominator=8)


def points(n=1):
    return st.builds(lambda s, x, y: Gr.GroupPoint(s, x, y), fr,
                     st.lists(fr, min_size=n, max_size=n), st.lists(fr, min_size=n, max_size=n))


@given(points(), points(), points())
def test_associative(a, b, c):
    assert (a * b) * c == a * (b * c)


@given(points(2))
def test_identity_and_inverse(g):
    e = Gr.GroupPoint.identity(2)
    assert g * e == g and e * g == g
    assert g * Gr.inverse(g) == e
    assert Gr.inverse(g) * g == e


@given(points(), points())
def test_commutator_is_central(a, b):
    # a b a^-1 b^-1 = (omega(a, b), 0, 0)
    c = a * b * Gr.inverse(a) * Gr.inverse(b)
    assert c.x == (0,) and c.y == (0,)
    assert c.s == Gr.symplectic_form(a.x, a.y, b.x, b.y)


@given(points(), points(), fr, fr, fr)
def test_coadjoint_is_an_action(a, b, h, q, p):
    f = Gr.DualPoint(h, (q,), (p,))
    assert Gr.coadjoint(a * b, f) == Gr.coadjoint(a, Gr.coadjoint(b, f))
    assert Gr.coadjoint(Gr.GroupPoint.identity(), f) == f


def test_rank_mismatch():
    with pytest.raises(RankMismatch):
        Gr.GroupPoint(0, (1, 2), (1,))
    with pytest.raises(RankMismatch):
        Gr.GroupPoint.identity(1) * Gr.GroupPoint.identity(2)
    with pytest.raises(RankMismatch):
        Gr.coadjoint(Gr.GroupPoint.identity(2), Gr.DualPoint(1, (0,), (0,)))


def test_dimensioned_multiplication():
    g = Gr.GroupPoint(U.qty(0.1, U.S_DIM), (U.qty(1.0, U.X_DIM),), (U.qty(2.0, U.Y_DIM),))
    prod = g * g
    assert prod.s.dim == U.S_DIM
    with pytest.raises(U.DimensionMismatch):
        Gr.GroupPoint(U.qty(0.1, U.S_DIM), (U.qty(1.0, U.Y_DIM),), (U.qty(2.0, U.X_DIM),)) * g


symp_int = st.sampled_from([
    Gr.SympMap.J(), Gr.SympMap.identity(), Gr.SympMap(1, 2, 0, 1), Gr.SympMap(1, 0, -3, 1),
    Gr.SympMap(2, 0, 0, Fraction(1, 2)), Gr.SympMap(2, 1, 1, 1)])


@given(symp_int, points(), points())
def test_automorphism_is_a_homomorphism(A, a, b):
    lhs = Gr.apply_automorphism(A, a * b)
    rhs = Gr.apply_automorphism(A, a) * Gr.apply_automorphism(A, b)
    assert lhs == rhs


@given(symp_int, points(), fr, fr, fr)
def test_dual_action_is_the_transpose(A, g, h, q, p):
    # <dalpha*(f), g> = <f, A g> for the pairing h s + q x + p y
    f = Gr.DualPoint(h, (q,), (p,))
    fs = Gr.dalpha_star(A, f)
    Ag = Gr.apply_automorphism(A, g)
    lhs = fs.h * g.s + fs.q[0] * g.x[0] + fs.p[0] * g.y[0]
    rhs = f.h * Ag.s + f.q[0] * Ag.x[0] + f.p[0] * Ag.y[0]
    assert lhs == rhs


def test_inverse_and_symplectic_check():
    A = Gr.SympMap(2, 1, 1, 1)
    assert Gr.is_symplectic(A)
    assert np.allclose((A @ A.inverse()).float_matrix(), np.eye(2))
    B = Gr.SympMap(2, 0, 0, 1)
    assert not Gr.is_symplectic(B)
    with pytest.raises(NotSymplectic):
        Gr.apply_automorphism(B, Gr.GroupPoint.identity())
    with pytest.raises(NotSymplectic):
        Gr.dalpha_star(B, Gr.DualPoint(1, (0,), (0,)))


def test_J_in_higher_rank():
    J = Gr.SympMap.J(2)
    assert Gr.is_symplectic(J)
    g = Gr.GroupPoint(0, (1, 2), (3, 4))
    assert Gr.apply_automorphism(J, g) == Gr.GroupPoint(0, (3, 4), (-1, -2))


def test_dimensioned_blocks():
    A = Gr.SympMap(1, 2, 0, 1)
    x, y = U.qty(1.0, U.X_DIM), U.qty(1.0, U.Y_DIM)
    g = Gr.apply_automorphism(A, Gr.GroupPoint(U.qty(0.0, U.S_DIM), (x,), (y,)))
    assert g.x[0].dim == U.X_DIM and g.y[0].dim == U.Y_DIM


def test_field_commutators():
    rep = Gr.verify_field_commutators(1, 1e-3)
    assert rep["max"] < 1e-5
    rep2 = Gr.verify_field_commutators(2, 1e-3, samples=3)
    assert rep2["max"] < 1e-5


def test_field_commutator_convergence_is_second_order():
    c = Gr.commutator_convergence(1, 0.1)
    assert c["residual"] > 0
    assert math.log2(c["ratio"]) == pytest.approx(2, abs=0.3)
