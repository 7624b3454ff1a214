"""One dynamic equation, three pictures.

``evolve_p`` integrates df/dt = ub{f, E} for sampled kernels, ``evolve_heisenberg``
integrates dF/dt = (2 pi / (i h)) [F, H] for operators and ``evolve_hamilton``
integrates df/dt = {f, H} for polynomial symbols.  For the harmonic oscillator
``oscillator_exact`` gives the closed-form kernel flow and ``consistency_report``
checks that the three pictures agree after projection.

Sign convention: the bracket-derived Hamilton flow is
df/dt = c2 p df/dq - c1 q df/dp, so q(t) = q cos(wt) + sqrt(c2/c1) p sin(wt),
and on kernels df/dt = c1 y df/dx - c2 x df/dy, whose solution is
f(t)(x, y) = f0(x cos wt + sqrt(c1/c2) y sin wt, -sqrt(c2/c1) x sin wt + y cos wt)
with w = sqrt(c1 c2).
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional

import numpy as np
import sympy as sp

from . import grid as G
from .grid import spectral_resample
from .errors import DegreeOverflow, GridMismatch, StepTooLarge
from .quantize import sample_symbol, weyl_kernel
from .symbolic import PolySymbol, c1 as C1, c2 as C2, mechanise, parse_symbol, poisson_poly
from .units import C1_DIM, C2_DIM, ENERGY, strip

RK4_LIMIT = 2 * math.sqrt(2)  # stability interval of RK4 on the imaginary axis
MAX_DEGREE = 6


@dataclass(frozen=True)
class QuadraticEnergy:
    c1: float = 1.0
    c2: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "c1", float(strip(self.c1, C1_DIM)))
        object.__setattr__(self, "c2", float(strip(self.c2, C2_DIM)))
        if self.c1 <= 0 or self.c2 <= 0:
            raise ValueError("c1 and c2 must be positive")

    @property
    def omega(self) -> float:
        return math.sqrt(self.c1 * self.c2)

    @property
    def period(self) -> float:
        return 2 * math.pi / self.omega

    @property
    def values(self) -> Dict:
        return {C1: self.c1, C2: self.c2}

    def symbol(self, numeric: bool = True) -> PolySymbol:
        s = PolySymbol.from_expr((C1 * sp.Symbol("q") ** 2 + C2 * sp.Symbol("p") ** 2) / 2,
                                 1, ENERGY)
        return s.subs(self.values) if numeric else s

    def env(self):
        return mechanise(self.symbol(numeric=False))

    def kernel(self, grid: G.Grid) -> G.GridKernel:
        return weyl_kernel(self.symbol(), grid)

    def operator(self, grid: G.Grid, basis=None) -> G.FockOperator:
        return G.rho_kernel(self.kernel(grid), basis)

    def squeeze(self) -> float:
        return G.squeeze_parameter(self.c1, self.c2)

    def flow_matrix(self, t: float) -> np.ndarray:
        """Linear map (q, p) -> (q(t), p(t)) of the Hamilton flow."""
        w = self.omega
        r = math.sqrt(self.c2 / self.c1)
        c, s = math.cos(w * t), math.sin(w * t)
        return np.array([[c, r * s], [-s / r, c]])


@dataclass
class FlowResult:
    times: np.ndarray
    snapshots: list
    diagnostics: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.times) != len(self.snapshots):
            raise ValueError("snapshot count differs from time count")

    @property
    def final(self):
        return self.snapshots[-1]


# ---------------------------------------------------------------------------
# exact oscillator flow


def _rotated_points(X, Y, t: float, E: QuadraticEnergy):
    w = E.omega
    c, s = math.cos(w * t), math.sin(w * t)
    a = math.sqrt(E.c1 / E.c2)
    return X * c + a * Y * s, -X * s / a + Y * c


def oscillator_exact(f0, t: float, E: QuadraticEnergy):
    """Kernel flow of the oscillator energy at time t.

    ``f0`` may be a GridKernel (resampled spectrally) or a callable f0(x, y).
    """
    if isinstance(f0, G.GridKernel):
        if t == 0:
            return f0
        X, Y = f0.grid.dual_mesh()
        Xn, Yn = _rotated_points(X, Y, t, E)
        return G.GridKernel(f0.grid, spectral_resample(f0, Xn, Yn), f0.h_independent)
    return lambda x, y: f0(*_rotated_points(np.asarray(x), np.asarray(y), t, E))


# ---------------------------------------------------------------------------
# RK4 helpers


def _rk4(f, rhs, dt):
    k1 = rhs(f)
    k2 = rhs(f + dt / 2 * k1)
    k3 = rhs(f + dt / 2 * k2)
    k4 = rhs(f + dt * k3)
    return f + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _snapshot_steps(steps: int, count: int) -> List[int]:
    count = max(2, min(count, steps + 1))
    return sorted(set(int(round(i * steps / (count - 1))) for i in range(count)))


def spectral_radius(op: Callable[[np.ndarray], np.ndarray], shape, iters: int = 30) -> float:
    """Power-iteration estimate of the largest |eigenvalue| of a linear map."""
    rng = np.random.default_rng(12345)
    v = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iters):
        w = op(v)
        est = float(np.linalg.norm(w))
        if est == 0:
            return 0.0
        v = w / est
    return est


def _check_step(dt: float, radius: float):
    if dt * radius > RK4_LIMIT:
        raise StepTooLarge(
            f"dt * spectral radius = {dt * radius:.3g} exceeds the RK4 bound {RK4_LIMIT:.3f}; "
            f"use at least {math.ceil(dt * radius / RK4_LIMIT * 1.0001)}x more steps")


# ---------------------------------------------------------------------------
# p-mechanical picture


def evolve_p(f0: G.GridKernel, E_kernel: G.GridKernel, T: float, steps: int,
             snapshots: int = 11, check_stability: bool = True) -> FlowResult:
    """RK4 for df/dt = ub{f, E} on the kernel grid."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if not f0.grid.same_lattice(E_kernel.grid):
        raise GridMismatch("f0 and E live on different lattices")
    br = G.BracketWith(E_kernel.on(f0.grid))
    dt = T / steps
    if check_stability and T != 0:
        _check_step(abs(dt), spectral_radius(br, f0.data.shape))
    g = f0.grid
    keep = set(_snapshot_steps(steps, snapshots))
    f = np.array(f0.data)
    E = E_kernel.data
    cell = g.dx * g.dy
    pair0 = np.sum(f * E) * cell
    norm0 = np.sqrt(np.sum(np.abs(f) ** 2) * cell)
    times, snaps, edrift, ndrift = [], [], [], []
    for n in range(steps + 1):
        if n in keep:
            times.append(n * dt)
            snaps.append(G.GridKernel(g, f, f0.h_independent))
            edrift.append(abs(np.sum(f * E) * cell - pair0))
            ndrift.append(abs(np.sqrt(np.sum(np.abs(f) ** 2) * cell) - norm0))
        if n < steps:
            f = _rk4(f, br, dt)
    return FlowResult(np.array(times), snaps,
                      {"energy_drift": np.array(edrift), "norm_drift": np.array(ndrift)})


# ---------------------------------------------------------------------------
# Heisenberg picture


def evolve_heisenberg(F0: G.FockOperator, H: G.FockOperator, T: float, steps: int,
                      snapshots: int = 11, check_stability: bool = True) -> FlowResult:
    """RK4 for dF/dt = (2 pi / (i h)) [F, H].

    For Hermitian H the stages are applied in its eigenbasis, where the right
    hand side is elementwise; this is the same RK4 map, only cheaper.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    F0._check(H)
    g = F0.grid
    g.require_quantum()
    c = 2 * np.pi / (1j * g.h)
    dt = T / steps
    Hm = H.matrix
    hermitian = np.allclose(Hm, Hm.conj().T, atol=1e-12 * max(1.0, np.abs(Hm).max()))
    if hermitian:
        lam, U = np.linalg.eigh((Hm + Hm.conj().T) / 2)
        mu = c * (lam[None, :] - lam[:, None])
        radius = float(np.abs(mu).max())
    else:
        radius = 2 * np.pi / abs(g.h) * 2 * float(np.abs(np.linalg.eigvals(Hm)).max())
    if check_stability and T != 0:
        _check_step(abs(dt), radius)
    keep = set(_snapshot_steps(steps, snapshots))
    times, snaps, edrift, ndrift = [], [], [], []
    e0 = np.trace(F0.matrix @ Hm)
    n0 = np.linalg.norm(F0.matrix)
    if hermitian:
        z = dt * mu
        R = 1 + z + z ** 2 / 2 + z ** 3 / 6 + z ** 4 / 24
        Ft = U.conj().T @ F0.matrix @ U
        to_std = lambda M: U @ M @ U.conj().T
    else:
        Ft = np.array(F0.matrix)
        rhs = lambda M: c * (M @ Hm - Hm @ M)
        to_std = lambda M: M
    for n in range(steps + 1):
        if n in keep:
            M = to_std(Ft)
            times.append(n * dt)
            snaps.append(F0._like(M))
            edrift.append(abs(np.trace(M @ Hm) - e0))
            ndrift.append(abs(np.linalg.norm(M) - n0))
        if n < steps:
            Ft = Ft * R if hermitian else _rk4(Ft, rhs, dt)
    return FlowResult(np.array(times), snaps,
                      {"energy_drift": np.array(edrift), "norm_drift": np.array(ndrift)})


# ---------------------------------------------------------------------------
# Hamilton picture


def _is_quadratic(H: PolySymbol) -> bool:
    return H.degree() <= 2


def hamilton_linear_flow(H: PolySymbol):
    """Symbolic flow (q, p) -> phi_t(q, p) of a polynomial H of degree <= 2 (n = 1).

    Returns (M(t), b(t)) with phi_t(z) = M(t) z + b(t), as sympy matrices in the
    symbol ``t``.
    """
    if H.n != 1 or not _is_quadratic(H):
        raise DegreeOverflow("closed flow needs a quadratic Hamiltonian with n = 1")
    q, p, t = sp.symbols("q p t")
    e = H.to_expr()
    dq = sp.expand(sp.diff(e, p))
    dp = sp.expand(-sp.diff(e, q))
    A = sp.Matrix([[dq.coeff(q), dq.coeff(p)], [dp.coeff(q), dp.coeff(p)]])
    A = A.subs({q: 0, p: 0})
    b = sp.Matrix([dq.subs({q: 0, p: 0}), dp.subs({q: 0, p: 0})])
    M = sp.simplify((A * t).exp())
    # integral of exp(A s) ds from 0 to t, by series-free quadrature in s
    s = sp.Symbol("s")
    Ms = M.subs(t, s)
    Bt = sp.simplify(Ms.integrate((s, 0, t)) * b) if any(b) else sp.zeros(2, 1)
    return sp.simplify(M.rewrite(sp.cos)), Bt


def _compose_flow(f0: PolySymbol, M, b, tval) -> PolySymbol:
    q, p, t = sp.symbols("q p t")
    Mt = M.subs(t, tval)
    bt = b.subs(t, tval)
    qi = PolySymbol.from_expr(sp.expand(Mt[0, 0] * q + Mt[0, 1] * p + bt[0]), 1)
    pi = PolySymbol.from_expr(sp.expand(Mt[1, 0] * q + Mt[1, 1] * p + bt[1]), 1)
    return f0.compose_linear([qi, pi])


def _poly_size(f: PolySymbol) -> float:
    """Largest coefficient magnitude; symbolic coefficients are simplified first."""
    out = 0.0
    for v in f.terms.values():
        v = sp.simplify(v)
        if v == 0:
            continue
        try:
            out = max(out, abs(complex(sp.N(v))))
        except TypeError:
            return float("nan")
    return out


def evolve_hamilton(f0: PolySymbol, H: PolySymbol, T: float, steps: int,
                    snapshots: int = 11, values: Optional[Mapping] = None) -> FlowResult:
    """df/dt = {f, H}: exact linear substitution for quadratic H, RK4 on coefficients otherwise."""
    if f0.degree() > MAX_DEGREE or H.degree() > MAX_DEGREE:
        raise DegreeOverflow(f"polynomial degree exceeds {MAX_DEGREE}")
    if values:
        f0, H = f0.subs(values), H.subs(values)
    keep = _snapshot_steps(steps, snapshots)
    dt = sp.nsimplify(T) / steps if isinstance(T, (int, sp.Rational)) else T / steps
    times, snaps = [], []
    if _is_quadratic(H) and H.n == 1:
        M, b = hamilton_linear_flow(H)
        Hdrift = []
        for n in keep:
            tv = n * dt
            times.append(float(tv))
            snaps.append(_compose_flow(f0, M, b, tv))
            Hdrift.append(_poly_size(_compose_flow(H, M, b, tv) - H))
        return FlowResult(np.array(times), snaps,
                          {"energy_drift": np.array(Hdrift), "norm_drift": np.zeros(len(times))})
    if poisson_poly(f0, H).degree() > MAX_DEGREE:
        raise DegreeOverflow("bracket with H leaves the degree cap")

    def rhs(f):
        out = poisson_poly(f, H)
        if out.degree() > MAX_DEGREE:
            raise DegreeOverflow("flow leaves the degree cap")
        return out

    f = f0
    Hf = H
    keepset = set(keep)
    Hdrift = []
    for n in range(steps + 1):
        if n in keepset:
            times.append(float(n * dt))
            snaps.append(f)
            Hdrift.append(_poly_size(Hf - H))
        if n < steps:
            f = _rk4(f, rhs, dt)
            Hf = _rk4(Hf, rhs, dt)
    return FlowResult(np.array(times), snaps,
                      {"energy_drift": np.array(Hdrift), "norm_drift": np.zeros(len(times))})


# ---------------------------------------------------------------------------
# cross-picture consistency


@dataclass(frozen=True)
class ConsistencySetup:
    """Shared observable q * W with W = exp(-H / Hw), conserved by the flow."""
    E: QuadraticEnergy
    grid: G.Grid
    window: float
    K: int

    def weight(self, Q, P):
        return np.exp(-(self.E.c1 * Q ** 2 + self.E.c2 * P ** 2) / 2 / self.window)

    def field_of(self, f: PolySymbol) -> np.ndarray:
        Q, P = self.grid.phase_mesh()
        return sample_symbol(f, self.grid) * self.weight(Q, P)

    def kernel_of(self, f: PolySymbol) -> G.GridKernel:
        return G.GridKernel(self.grid, G.field_to_kernel(self.field_of(f), self.grid), True)


def default_window(E: QuadraticEnergy, h: float) -> float:
    return 0.16 * abs(h) * E.omega


def consistency_report(E: QuadraticEnergy, grid: G.Grid, T: Optional[float] = None,
                       steps: int = 200, K: int = 8, window: Optional[float] = None,
                       snapshots: int = 11, observable: str = "q") -> Dict:
    """Run the three pictures from one energy and report pairwise deviations.

    The observable is f0 * W with W = exp(-H / window); W is invariant under
    the flow so the exact solution is (f0 o phi_t) W in every picture.
    Deviations (all relative):
      p_vs_heisenberg     Fock-compressed rho(f_p(T)) against F(T), Frobenius
      p_vs_hamilton       sup |rho_(q,p) f_p(T) - f_H(T) W| / sup |f0 W|
      heisenberg_vs_hamilton  Fock-compressed Weyl(f_H(T) W) against F(T), Frobenius
    """
    grid.require_commensurate()
    T = E.period if T is None else float(T)
    window = default_window(E, grid.h) if window is None else window
    setup = ConsistencySetup(E, grid, window, K)
    f0 = parse_symbol(observable)
    basis = G.fock_basis(grid, K, E.squeeze())
    Hk = E.kernel(grid)
    Hop = G.rho_kernel(Hk, basis)
    k0 = setup.kernel_of(f0)

    flow_p = evolve_p(k0, Hk, T, steps, snapshots)
    F0 = G.rho_kernel(k0, basis)
    flow_h = evolve_heisenberg(F0, Hop, T, steps, snapshots)
    flow_c = evolve_hamilton(f0, E.symbol(), T, steps, snapshots)

    ref_scale = np.abs(setup.field_of(f0)).max()
    rows = []
    for i, t in enumerate(flow_p.times):
        kp = flow_p.snapshots[i]
        Fh = flow_h.snapshots[i]
        fc = flow_c.snapshots[i]
        Fp = G.rho_kernel(kp, basis)
        field_p = G.kernel_to_field(kp.data, grid)
        field_c = setup.field_of(fc)
        Fc = G.rho_kernel(G.GridKernel(grid, G.field_to_kernel(field_c, grid)), basis)
        rows.append({
            "t": float(t),
            "p_vs_heisenberg": Fp.rel_error(Fh),
            "p_vs_hamilton": float(np.abs(field_p - field_c).max() / ref_scale),
            "heisenberg_vs_hamilton": Fc.rel_error(Fh),
            "expect_p": _expect(Fp),
            "expect_heisenberg": _expect(Fh),
            "expect_hamilton": _expect(Fc),
            "energy_drift": float(flow_p.diagnostics["energy_drift"][i]),
            "norm_drift": float(flow_p.diagnostics["norm_drift"][i]),
        })
    keys = ("p_vs_heisenberg", "p_vs_hamilton", "heisenberg_vs_hamilton")
    summary = {k: max(r[k] for r in rows) for k in keys}
    return {
        "grid": grid.to_dict(),
        "energy": {"c1": E.c1, "c2": E.c2},
        "T": T, "steps": steps, "K": K, "window": window, "observable": observable,
        "max_deviation": summary,
        "max": max(summary.values()),
        "trajectory": rows,
    }


def _expect(F: G.FockOperator) -> float:
    """Real part of <F psi, psi> with psi = (e0 + e1) / sqrt 2 in the operator's basis."""
    v = np.zeros(F.dim, complex)
    v[:2] = 1 / math.sqrt(2)
    return float(np.real(np.conj(v) @ F.matrix @ v))


TRAJECTORY_COLUMNS = ("t", "expect_p", "expect_heisenberg", "expect_hamilton",
                      "p_vs_heisenberg", "p_vs_hamilton", "heisenberg_vs_hamilton",
                      "energy_drift", "norm_drift")


def trajectory_csv(report: Dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRAJECTORY_COLUMNS)
    for r in report["trajectory"]:
        w.writerow([f"{r[c]:.12g}" for c in TRAJECTORY_COLUMNS])
    return buf.getvalue()


def flow_matrix_from_operators(Q: G.FockOperator, P: G.FockOperator,
                               Qt: G.FockOperator) -> np.ndarray:
    """Coefficients (a, b) with Qt = a Q + b P, by least squares on the matrices."""
    A = np.stack([Q.matrix.ravel(), P.matrix.ravel()], axis=1)
    coef, *_ = np.linalg.lstsq(A, Qt.matrix.ravel(), rcond=None)
    return coef
