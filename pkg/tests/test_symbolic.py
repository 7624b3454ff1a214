import sympy as sp
import pytest
from hypothesis import given, settings, strategies as st

from pmech import symbolic as Sy
from pmech.errors import InternalError, RankMismatch

X, Y, S, ONE = Sy.EnvElement.X(), Sy.EnvElement.Y(), Sy.EnvElement.S(), Sy.EnvElement.one()

term = st.tuples(st.integers(0, 1), st.integers(0, 2), st.integers(0, 2), st.integers(-3, 3))
elements = st.lists(term, min_size=1, max_size=3).map(
    lambda ts: Sy.EnvElement(1, {(a, (b,), (c,)): v for a, b, c, v in ts}))
pterm = st.tuples(st.integers(0, 3), st.integers(0, 3), st.integers(-3, 3))
symbols = st.lists(pterm, min_size=1, max_size=3).map(
    lambda ts: Sy.PolySymbol(1, {((b,), (c,)): v for b, c, v in ts}))


def test_heisenberg_relations():
    assert Sy.env_commutator(X, Y) == S
    assert Sy.env_commutator(X, S).is_zero()
    assert Sy.env_commutator(Y, S).is_zero()
    assert Y * X == X * Y - S
    X2, Y1 = Sy.EnvElement.X(2, 2), Sy.EnvElement.Y(1, 2)
    assert Sy.env_commutator(X2, Y1).is_zero()
    assert Sy.env_commutator(X2, Sy.EnvElement.Y(2, 2)) == Sy.EnvElement.S(2)


@settings(max_examples=25)
@given(elements, elements, elements)
def test_product_is_associative(a, b, c):
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c


@settings(max_examples=20)
@given(elements, elements, elements)
def test_bracket_jacobi(a, b, c):
    pb = Sy.env_pbracket
    total = pb(a, pb(b, c)) + pb(b, pb(c, a)) + pb(c, pb(a, b))
    assert total.is_zero()


@settings(max_examples=25)
@given(elements, elements)
def test_bracket_antisymmetric(a, b):
    assert (Sy.env_pbracket(a, b) + Sy.env_pbracket(b, a)).is_zero()


@given(elements, elements)
def test_rep_classical_is_multiplicative(a, b):
    assert Sy.rep_classical(a * b) == Sy.rep_classical(a) * Sy.rep_classical(b)


@settings(max_examples=25)
@given(elements, elements)
def test_bracket_maps_to_poisson(a, b):
    lhs = Sy.rep_classical(Sy.env_pbracket(a, b))
    rhs = Sy.poisson_poly(Sy.rep_classical(a), Sy.rep_classical(b))
    assert lhs == rhs


@given(symbols)
def test_mechanise_inverts_rep_classical(c):
    assert Sy.rep_classical(Sy.mechanise(c)) == c


def test_mechanisation_of_coordinates():
    q, p = Sy.PolySymbol.q(), Sy.PolySymbol.p()
    assert Sy.mechanise(q) == X / (-2 * sp.pi * sp.I)
    # the bracket of the coordinate kernels is the constant 1
    assert Sy.env_pbracket(Sy.mechanise(q), Sy.mechanise(p)) == ONE


def test_symmetrized_is_weyl_ordered():
    # XY symmetrised = (XY + YX)/2
    assert Sy.symmetrized((1,), (1,)) == (X * Y + Y * X) / 2
    assert Sy.symmetrized((2,), (1,)) == (X * X * Y + X * Y * X + Y * X * X) / 3


def test_shift_constants():
    k = Sy.shift_constants()
    assert sp.simplify(k["kappa_p"] - 2 * sp.pi * sp.I) == 0
    assert sp.simplify(k["kappa_q"] + 2 * sp.pi * sp.I) == 0


def test_divide_by_S_rejects_non_ideal_terms():
    with pytest.raises(InternalError):
        Sy.divide_by_S(X)


def test_rank_checks():
    with pytest.raises(RankMismatch):
        X * Sy.EnvElement.X(1, 2)
    with pytest.raises(RankMismatch):
        Sy.EnvElement(0)
    with pytest.raises(ValueError):
        Sy.EnvElement(1, {(-1, (0,), (0,)): 1})


def test_degree_and_subs():
    k = X * X * Sy.c1 + Y * 3
    assert k.degree() == 2
    v = k.subs({Sy.c1: 2}).numeric_terms()
    assert v[(0, (2,), (0,))] == 2


def test_poly_calculus():
    f = Sy.parse_symbol("q^2*p + 3*p")
    assert f.diff("q") == Sy.parse_symbol("2*q*p")
    assert f.diff("p") == Sy.parse_symbol("q^2 + 3")
    assert Sy.poisson_poly(Sy.PolySymbol.q(), Sy.PolySymbol.p()) == 1
    assert f.degree() == 3
    assert f.evaluate(2.0, 1.0) == pytest.approx(7.0)
    g = f.compose_linear([Sy.PolySymbol.p(), -Sy.PolySymbol.q()])
    assert g == Sy.parse_symbol("-p^2*q - 3*q")


def test_parse_symbol():
    e = Sy.parse_symbol("(c1 q^2 + c2 p^2)/2")
    assert e.to_expr() == (Sy.c1 * sp.Symbol("q") ** 2 + Sy.c2 * sp.Symbol("p") ** 2) / 2
    assert Sy.parse_symbol("q*p - p*q").is_zero()
    two = Sy.parse_symbol("q1*p2", n=2)
    assert two.terms == {((1, 0), (0, 1)): 1}
    for bad in ("q +", "z*q", "sin(q)", "1/q"):
        with pytest.raises(Sy.SymbolParseError):
            Sy.parse_symbol(bad)


@pytest.mark.parametrize("text, expected", [
    ("q", "(1/2πi) δ(s)δ⁽¹⁾(x)δ(y)"),
    ("q*p - p*q", "0"),
    ("(c1*q^2 + c2*p^2)/2", "−(1/8π²)(c1 δ(s)δ⁽²⁾(x)δ(y) + c2 δ(s)δ(x)δ⁽²⁾(y))"),
])
def test_delta_notation(text, expected):
    assert Sy.to_delta_notation(Sy.mechanise(Sy.parse_symbol(text))) == expected


def test_delta_basis_signs():
    # one minus sign per derivative
    basis = Sy.to_delta_basis(X * Y)
    assert basis[(0, (1,), (1,))] == 1
    assert Sy.to_delta_basis(X)[(0, (1,), (0,))] == -1
