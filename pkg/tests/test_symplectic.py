import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pmech import grid as G
from pmech import symbolic as Sy
from pmech import symplectic as Sp
from pmech.errors import NotSymplectic, OutOfBox, RankMismatch
from pmech.group import SympMap, is_symplectic

X, Y, S = Sy.EnvElement.X(), Sy.EnvElement.Y(), Sy.EnvElement.S()

term = st.tuples(st.integers(0, 1), st.integers(0, 2), st.integers(0, 2), st.integers(-3, 3))
elements = st.lists(term, min_size=1, max_size=3).map(
    lambda ts: Sy.EnvElement(1, {(a, (b,), (c,)): v for a, b, c, v in ts}))
exact_maps = st.sampled_from([
    SympMap.J(), Sp.SympGenerator("shear_q", 2).map(), Sp.SympGenerator("shear_p", -1).map(),
    Sp.SympGenerator("scaling", 3).map(), SympMap(2, 1, 1, 1)])
generators = st.one_of(
    st.builds(Sp.SympGenerator, st.just("rotation"), st.floats(-4, 4)),
    st.builds(Sp.SympGenerator, st.sampled_from(["shear_q", "shear_p"]), st.floats(-3, 3)),
    st.builds(Sp.SympGenerator, st.just("scaling"),
              st.floats(0.2, 5) | st.floats(-5, -0.2)))
nonzero = st.tuples(st.floats(-5, 5), st.floats(-5, 5)).filter(lambda v: math.hypot(*v) > 1e-2)


@given(generators)
def test_generators_are_symplectic(g):
    assert is_symplectic(g.map(), tol=1e-10)


def test_generator_validation_and_composition():
    with pytest.raises(ValueError):
        Sp.SympGenerator("twist", 1.0)
    with pytest.raises(ValueError):
        Sp.SympGenerator("scaling", 0)
    a, b = Sp.SympGenerator("shear_q", 2), Sp.SympGenerator("rotation", 0.4)
    assert np.allclose(Sp.compose([a, b]).float_matrix(), (a.map() @ b.map()).float_matrix())


def test_J_on_generators():
    Xs, Ys = Sp.generator_images(SympMap.J())
    assert Xs[0] == Y and Ys[0] == -X


@settings(max_examples=25)
@given(exact_maps, elements, elements)
def test_pullback_is_an_algebra_homomorphism(A, a, b):
    assert Sp.pullback_env(A, a * b) == Sp.pullback_env(A, a) * Sp.pullback_env(A, b)
    assert Sp.pullback_env(A, a + b) == Sp.pullback_env(A, a) + Sp.pullback_env(A, b)


@given(exact_maps, exact_maps, elements)
def test_pullback_composes_contravariantly(A, B, k):
    assert Sp.pullback_env(A @ B, k) == Sp.pullback_env(B, Sp.pullback_env(A, k))


@given(generators)
def test_images_keep_the_canonical_relation(g):
    A = g.map()
    AX, AY = Sp.pullback_env(A, X), Sp.pullback_env(A, Y)
    # float entries are used at their exact binary value, so det A = 1 only to rounding
    c = Sy.env_commutator(AX, AY).numeric_terms()
    assert set(c) == {(1, (0,), (0,))}
    assert c[(1, (0,), (0,))] == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=20)
@given(exact_maps, elements, elements)
def test_bracket_is_invariant(A, a, b):
    r = Sp.pbracket_invariance_check(A, a, b)
    assert r["exact"] and r["residual"] == 0


def test_symbolic_invariance_with_free_constants():
    k1 = (X * X * Sy.c1 + Y * Y * Sy.c2) / 2
    assert Sp.pbracket_invariance_check(SympMap.J(), k1, X * Y)["exact"]


def test_non_symplectic_maps():
    bad = SympMap(2, 0, 0, 1)
    with pytest.raises(NotSymplectic):
        Sp.pullback_env(bad, X)
    r = Sp.pbracket_invariance_check(bad, X * X, Y, check=False)
    assert not r["exact"] and r["residual"] > 0.1
    with pytest.raises(RankMismatch):
        Sp.pullback_env(SympMap.J(2), X)


def gauss(grid):
    X_, Y_ = grid.dual_mesh()
    f = lambda x, y: np.exp(-((x - 0.3) ** 2 + y ** 2) / 0.5) * (1 + 0.5 * y)
    return G.GridKernel(grid, f(X_, Y_) + 0j), f


def test_lattice_preserving_pullbacks_are_permutations():
    g = G.Grid.for_h(1.0, 32)
    k, _ = gauss(g)
    J = SympMap.J()
    assert Sp.lattice_matrix(J, g) is not None
    assert Sp.lattice_matrix(Sp.SympGenerator("rotation", 0.3).map(), g) is None
    out = k
    for _ in range(4):
        out = Sp.pullback_kernel(J, out)
    # the first row and column have no partner under the quarter turn
    assert np.array_equal(out.data[1:, 1:], k.data[1:, 1:])


def test_grid_pullback_matches_the_function():
    g = G.Grid.for_h(1.0, 64)
    k, f = gauss(g)
    A = Sp.SympGenerator("rotation", 0.7).map()
    X_, Y_ = g.dual_mesh()
    M = A.float_matrix()
    expect = f(M[0, 0] * X_ + M[0, 1] * Y_, M[1, 0] * X_ + M[1, 1] * Y_)
    assert np.abs(Sp.pullback_kernel(A, k).data - expect).max() < 1e-9


def test_out_of_box():
    g = G.Grid.for_h(1.0, 32)
    k, _ = gauss(g)
    A = Sp.SympGenerator("scaling", 1 / 3).map()
    with pytest.raises(OutOfBox):
        Sp.pullback_kernel(A, k)
    Sp.pullback_kernel(A, k, check=False)
    with pytest.raises(NotSymplectic):
        Sp.pullback_kernel(SympMap(2, 0, 0, 1), k)


def test_grid_bracket_invariance():
    g = G.Grid.for_h(1.0, 64)
    k1, _ = gauss(g)
    X_, Y_ = g.dual_mesh()
    k2 = G.GridKernel(g, np.exp(-(X_ ** 2 + (Y_ + 0.2) ** 2) / 0.4) + 0j)
    r = Sp.pbracket_invariance_check(SympMap.J(), k1, k2)
    assert r["engine"] == "grid" and r["lattice_preserving"]
    assert r["residual"] < 1e-10


def test_well_levels_reduce_to_the_oscillator_for_wide_wells():
    # -Hw exp(-H/Hw) = -Hw + H + O(1/Hw)
    h, c1, c2 = 1.0, 1.0, 2.0
    hw = 1e4
    lv = Sp.well_levels(h, hw, c1, c2) + hw
    osc = h / (2 * math.pi) * math.sqrt(c1 * c2) * (np.arange(5) + 0.5)
    assert np.allclose(lv, osc, atol=1e-3)
    with pytest.raises(ValueError):
        Sp.well_levels(1.0, 0.01)


def test_well_spectrum_on_the_grid():
    g = G.Grid.for_h(1.0, 64)
    k, hw = Sp.well_kernel(g)
    r = Sp.spectrum_equivalence_check(SympMap.identity(), k, K=24)
    assert np.allclose(r["eigenvalues"], Sp.well_levels(g.h, hw), rtol=1e-8)
    rot = Sp.spectrum_equivalence_check(Sp.SympGenerator("rotation", 1.1).map(), k, K=24)
    assert rot["max_rel_diff"] < 1e-8


@given(nonzero, nonzero)
def test_transitivity(v1, v2):
    word, A = Sp.transitive_word(v1, v2)
    assert is_symplectic(A, tol=1e-8)
    w = Sp.act_dual(A, v1)
    assert math.hypot(w[0] - v2[0], w[1] - v2[1]) < 1e-10 * max(1.0, math.hypot(*v2))


def test_origin_is_fixed():
    with pytest.raises(ValueError):
        Sp.transitive_word((0.0, 0.0), (1.0, 0.0))
