import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from pmech import dynamics as D
from pmech import grid as G
from pmech import symbolic as Sy
from pmech.errors import DegreeOverflow, GridMismatch, StepTooLarge

pos = st.floats(0.2, 5.0)


def gaussian(grid):
    X, Y = grid.dual_mesh()
    return G.GridKernel(grid, np.exp(-((X - 0.3) ** 2 + Y ** 2) / 0.5) + 0j)


def test_energy_validation():
    with pytest.raises(ValueError):
        D.QuadraticEnergy(0.0, 1.0)
    E = D.QuadraticEnergy(4.0, 1.0)
    assert E.omega == 2.0 and E.period == pytest.approx(math.pi)


@given(pos, pos, st.floats(-3, 3), st.floats(-3, 3))
def test_flow_matrix_is_a_symplectic_one_parameter_group(c1, c2, t1, t2):
    E = D.QuadraticEnergy(c1, c2)
    M1, M2 = E.flow_matrix(t1), E.flow_matrix(t2)
    assert np.linalg.det(M1) == pytest.approx(1.0)
    assert np.allclose(M1 @ M2, E.flow_matrix(t1 + t2), atol=1e-10)
    assert np.allclose(E.flow_matrix(E.period), np.eye(2), atol=1e-10)


def test_symbolic_flow_matches_closed_form():
    E = D.QuadraticEnergy(1.0, 2.0)
    M, b = D.hamilton_linear_flow(E.symbol())
    t = sp.Symbol("t")
    Mn = np.array(M.subs(t, 0.7).evalf(), dtype=float)
    assert np.allclose(Mn, E.flow_matrix(0.7))
    assert list(b) == [0, 0]


def test_symbolic_flow_with_linear_terms():
    # H = p^2/2 + q: q(t) = q + p t - t^2/2, p(t) = p - t
    M, b = D.hamilton_linear_flow(Sy.parse_symbol("p^2/2 + q"))
    t = sp.Symbol("t")
    assert sp.simplify(b[0] + t ** 2 / 2) == 0
    assert sp.simplify(b[1] + t) == 0
    assert M == sp.Matrix([[1, t], [0, 1]])


def test_hamilton_flow_of_q():
    E = D.QuadraticEnergy(1.0, 2.0)
    res = D.evolve_hamilton(Sy.PolySymbol.q(), E.symbol(), 0.9, 10, snapshots=2)
    qt = res.final
    a, b = E.flow_matrix(0.9)[0]
    assert complex(qt.terms[((1,), (0,))]) == pytest.approx(a)
    assert complex(qt.terms[((0,), (1,))]) == pytest.approx(b)
    assert max(res.diagnostics["energy_drift"]) < 1e-12


def test_hamilton_rk4_is_exact_for_a_cubic_potential():
    # {p, q^3} = -3 q^2 and {q^2, q^3} = 0, so p(t) = p - 3 t q^2
    res = D.evolve_hamilton(Sy.PolySymbol.p(), Sy.parse_symbol("q^3"), 1.0, 4, snapshots=2)
    assert res.final == Sy.parse_symbol("p - 3*q^2")


def test_degree_overflow():
    with pytest.raises(DegreeOverflow):
        D.evolve_hamilton(Sy.parse_symbol("q^7"), Sy.parse_symbol("p^2"), 1.0, 2)
    with pytest.raises(DegreeOverflow):
        D.evolve_hamilton(Sy.parse_symbol("q^2*p^3"), Sy.parse_symbol("q^4 + p^2"), 1.0, 4)
    with pytest.raises(DegreeOverflow):
        D.hamilton_linear_flow(Sy.parse_symbol("q^3"))


def test_exact_kernel_flow_composes():
    E = D.QuadraticEnergy(1.0, 3.0)
    f0 = lambda x, y: np.exp(-(x - 0.4) ** 2 - 2 * y ** 2) * (1 + x * y)
    x, y = np.linspace(-2, 2, 7), np.linspace(-1, 1, 7)
    a = D.oscillator_exact(D.oscillator_exact(f0, 0.3, E), 0.5, E)(x, y)
    b = D.oscillator_exact(f0, 0.8, E)(x, y)
    assert np.allclose(a, b)
    assert np.allclose(D.oscillator_exact(f0, E.period, E)(x, y), f0(x, y))


def test_kernel_flow_solves_the_transport_equation():
    # df/dt = c1 y df/dx - c2 x df/dy
    E = D.QuadraticEnergy(2.0, 0.5)
    f0 = lambda x, y: np.exp(-(x - 0.4) ** 2 - 2 * y ** 2)
    x, y, t, e = 0.3, -0.2, 0.4, 1e-5
    ft = lambda xx, yy, tt: D.oscillator_exact(f0, tt, E)(xx, yy)
    dt = (ft(x, y, t + e) - ft(x, y, t - e)) / (2 * e)
    dx = (ft(x + e, y, t) - ft(x - e, y, t)) / (2 * e)
    dy = (ft(x, y + e, t) - ft(x, y - e, t)) / (2 * e)
    assert dt == pytest.approx(E.c1 * y * dx - E.c2 * x * dy, rel=1e-6)


def test_evolve_p_step_guard_and_trivial_runs():
    g = G.Grid.for_h(1.0, 32)
    E = D.QuadraticEnergy()
    f0, H = gaussian(g), E.kernel(g)
    with pytest.raises(StepTooLarge):
        D.evolve_p(f0, H, E.period, 4)
    with pytest.raises(ValueError):
        D.evolve_p(f0, H, 1.0, 0)
    res = D.evolve_p(f0, H, 0.0, 3, snapshots=2)
    assert np.array_equal(res.final.data, f0.data)
    with pytest.raises(GridMismatch):
        D.evolve_p(f0, E.kernel(G.Grid.for_h(1.0, 16)), 1.0, 10)


def test_evolve_p_follows_the_exact_flow():
    g = G.Grid.for_h(1.0, 64)
    E = D.QuadraticEnergy(1.0, 2.0)
    f0 = gaussian(g)
    T = E.period / 4
    res = D.evolve_p(f0, E.kernel(g), T, 200, snapshots=3)
    exact = D.oscillator_exact(f0, T, E)
    # dominated by the RK4 truncation error at this step size
    assert np.abs(res.final.data - exact.data).max() < 2e-5
    assert list(res.times) == pytest.approx([0, T / 2, T])
    assert max(res.diagnostics["energy_drift"]) < 1e-10


def test_heisenberg_flow_of_coordinates():
    g = G.Grid.for_h(1.0, 64)
    E = D.QuadraticEnergy(1.0, 2.0)
    basis = G.fock_basis(g, 8, E.squeeze())
    from pmech import quantize as Qz
    Q = Qz.weyl_quantize_symbolic(Sy.PolySymbol.q(), g, basis)
    P = Qz.weyl_quantize_symbolic(Sy.PolySymbol.p(), g, basis)
    H = Qz.weyl_quantize_symbolic(E.symbol(), g, basis)
    t = 0.7
    res = D.evolve_heisenberg(Q, H, t, 100, snapshots=2)
    coef = D.flow_matrix_from_operators(Q, P, res.final)
    assert np.allclose(coef, E.flow_matrix(t)[0], atol=1e-8)
    with pytest.raises(StepTooLarge):
        D.evolve_heisenberg(Q, H, 100.0, 1)


def test_consistency_report_and_csv():
    g = G.Grid.for_h(1.0, 64)
    rep = D.consistency_report(D.QuadraticEnergy(), g, T=1.0, steps=60, K=6, snapshots=3)
    assert rep["max"] < 1e-3
    text = D.trajectory_csv(rep)
    lines = text.splitlines()
    assert lines[0].split(",") == list(D.TRAJECTORY_COLUMNS)
    assert len(lines) == 4
