import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from pmech import grid as G
from pmech import quantize as Qz
from pmech import symbolic as Sy
from pmech.errors import GridMismatch, NotConvolution

pterm = st.tuples(st.integers(0, 3), st.integers(0, 3), st.integers(-3, 3))
symbols = st.lists(pterm, min_size=1, max_size=3).map(
    lambda ts: Sy.PolySymbol(1, {((b,), (c,)): v for b, c, v in ts}))


def random_kernel(grid, seed):
    r = np.random.default_rng(seed)
    X, Y = grid.dual_mesh()
    env = np.exp(-(X ** 2 + Y ** 2) / (0.25 * (X.max() ** 2 + Y.max() ** 2)))
    return G.GridKernel(grid, env * (r.normal(size=X.shape) + 1j * r.normal(size=X.shape)))


@given(symbols)
def test_exact_pipeline_agrees_with_mechanisation(c):
    assert Qz.extend_E(Qz.classical_wavelet_W0(c)) == Sy.mechanise(c)


def test_fourier_data_of_coordinates():
    a = Qz.classical_wavelet_W0(Sy.PolySymbol.q())
    assert a.symbolic
    assert a.delta_terms == {((1,), (0,)): 1 / (2 * sp.pi * sp.I)}


@pytest.mark.parametrize("c1, c2", [(1.0, 1.0), (1.0, 2.0), (3.0, 0.5)])
def test_hermite_oracle_matches_closed_form(c1, c2):
    hbar = 0.3
    levels = Qz.hermite_oscillator_levels(hbar, c1, c2)
    exact = hbar * math.sqrt(c1 * c2) * (np.arange(5) + 0.5)
    assert np.allclose(levels, exact, rtol=1e-12)


@pytest.mark.parametrize("c1, c2", [(1.0, 1.0), (1.0, 2.0)])
def test_oscillator_spectrum_from_derived_representation(c1, c2):
    g = G.Grid.for_h(1.0, 64)
    basis = G.fock_basis(g, 8, G.squeeze_parameter(c1, c2))
    H = Qz.weyl_quantize_symbolic(Sy.parse_symbol("(c1*q^2 + c2*p^2)/2"), g, basis,
                                  {Sy.c1: c1, Sy.c2: c2})
    ev = H.eigvalsh()[:5]
    oracle = Qz.hermite_oscillator_levels(g.h / (2 * math.pi), c1, c2)
    assert np.abs(ev - oracle).max() < 1e-9


def test_grid_and_derived_paths_agree_on_linear_symbols():
    g = G.Grid.for_h(1.0, 64)
    basis = G.fock_basis(g, 6)
    for text in ("q", "p", "2*q - 3*p + 1"):
        c = Sy.parse_symbol(text)
        a = Qz.weyl_quantize(c, g, basis)
        b = Qz.weyl_quantize_symbolic(c, g, basis)
        assert a.rel_error(b) < 1e-8, text


def test_canonical_commutator():
    g = G.Grid.for_h(1.0, 64)
    basis = G.fock_basis(g, 8)
    Q = Qz.weyl_quantize_symbolic(Sy.PolySymbol.q(), g, basis)
    P = Qz.weyl_quantize_symbolic(Sy.PolySymbol.p(), g, basis)
    C = Q.commutator(P).matrix[:6, :6]
    hbar = g.h / (2 * math.pi)
    assert np.abs(C - 1j * hbar * np.eye(6)).max() < 1e-9 * hbar


def test_reproducing_constant():
    assert Qz.reproducing_constant(G.Grid.for_h(1.0, 32)) == pytest.approx(4.0, rel=1e-12)


def test_reduced_transform_inverts_the_representation():
    g = G.Grid.for_h(1.0, 32)
    k = random_kernel(g, 1)
    A = G.rho_kernel(k)
    a = Qz.reduced_wavelet_Wr(A)
    assert np.abs(a.kernel.data - k.data).max() < 1e-10 * np.abs(k.data).max()
    assert Qz.roundtrip_residual(A) < 1e-10


def test_classical_limit_recovers_the_symbol():
    g = G.Grid.for_h(1.0, 32)
    k = random_kernel(g, 2)
    f = Qz.classical_limit(G.rho_kernel(k))
    assert np.allclose(f.data, G.kernel_to_field(k.data, g))


def test_not_convolution():
    g = G.Grid.for_h(1.0, 32)
    r = np.random.default_rng(3)
    A = G.FockOperator(g, r.normal(size=(1024, 1024)))
    with pytest.raises(NotConvolution):
        Qz.classical_limit(A)
    with pytest.raises(GridMismatch):
        Qz.reduced_wavelet_Wr(G.FockOperator.identity(g, G.fock_basis(G.Grid.for_h(1.0, 32), 2)))


def test_inverse_Mr_needs_samples():
    with pytest.raises(GridMismatch):
        Qz.inverse_Mr(Qz.classical_wavelet_W0(Sy.PolySymbol.q()))


@settings(max_examples=3)
@given(st.integers(0, 10 ** 6))
def test_berezin_symbols_are_dual(seed):
    # tr(B(a) A) = h sum a(z) <A v_z, v_z> dx dy
    g = G.Grid.for_h(1.0, 32)
    r = np.random.default_rng(seed)
    a = r.normal(size=(32, 32)) + 1j * r.normal(size=(32, 32))
    A = G.rho_kernel(random_kernel(g, seed))
    lhs = np.trace(Qz.berezin_contravariant(a, g).matrix @ A.matrix)
    cov = Qz.berezin_covariant_lattice(A)
    rhs = abs(g.h) * g.dx * g.dy * np.sum(a * cov)
    assert lhs == pytest.approx(rhs, rel=1e-10)


def test_berezin_covariant_pointwise():
    g = G.Grid.for_h(1.0, 32)
    A = G.rho_kernel(random_kernel(g, 4))
    cov = Qz.berezin_covariant_lattice(A)
    a, b = 3, 5
    assert Qz.berezin_covariant(A, g.x[a], g.y[b]) == pytest.approx(cov[a, b], rel=1e-10)


def test_traces():
    g = G.Grid.for_h(1.0, 32)
    A = G.rho_kernel(random_kernel(g, 5))
    P = Qz.span_projector(g)
    assert Qz.trace_coherent(A) == pytest.approx(np.trace(A.matrix @ P), rel=1e-10)
    # P is a multiple of the projector onto the coherent span
    I = G.FockOperator.identity(g)
    rank = round(Qz.trace_on_span(I).real)
    assert Qz.trace_coherent(I).real == pytest.approx(np.trace(P).real)
    assert 0 < rank <= 1024


def test_contravariant_scale_is_calibrated_by_the_unit_symbol():
    # a = 1 must give the coherent-span projector: P^2 = P with eigenvalues 0 and 1
    g = G.Grid.for_h(1.0, 32)
    B = Qz.berezin_contravariant(np.ones((32, 32)), g).matrix
    assert np.abs(B - Qz.span_projector(g)).max() < 1e-12
    assert np.abs(B @ B - B).max() < 1e-10


def test_covariant_of_contravariant_is_a_gaussian_blur():
    # the blur kernel is |<v_z, v_0>|^2 = exp(-pi h |z|^2)
    g = G.Grid.for_h(1.0, 32)
    a = np.zeros((32, 32))
    a[g.c, g.c] = 1.0
    cov = Qz.berezin_covariant_lattice(Qz.berezin_contravariant(a, g)).real
    X, Y = g.dual_mesh()
    mask = cov > 1e-6 * cov.max()
    slope = np.polyfit((X ** 2 + Y ** 2)[mask], np.log(cov[mask] / cov.max()), 1)[0]
    assert slope == pytest.approx(-math.pi * g.h, rel=0.1)
