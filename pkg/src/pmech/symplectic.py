"""Symplectic automorphisms acting on kernels, and checks that brackets and
spectra are unchanged by them.

The pullback of a kernel is ``(A* k)(x, y) = k(A(x, y))``.  For kernels
supported at the identity this is a linear substitution of the generators:
X_j and Y_j go to combinations of X and Y with coefficients read off from the
inverse matrix, S is fixed.  On the grid it is a resampling, exact (a
permutation of samples) when A maps the dual lattice to itself.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import sympy as sp

from . import grid as G
from .errors import NotSymplectic, OutOfBox, RankMismatch
from .group import DualPoint, SympMap, dalpha_star, is_symplectic
from .symbolic import EnvElement, env_mul, env_pbracket

OUT_OF_BOX_TOLERANCE = 1e-6


@dataclass(frozen=True)
class SympGenerator:
    """One elementary symplectic map of the plane (n = 1)."""
    kind: str
    param: float

    KINDS = ("scaling", "shear_q", "shear_p", "rotation")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if self.kind == "scaling" and self.param == 0:
            raise ValueError("scaling factor must be nonzero")

    def map(self) -> SympMap:
        t = self.param
        if self.kind == "scaling":
            return SympMap(t, 0, 0, 1 / t if isinstance(t, float) else sp.Rational(1) / t)
        if self.kind == "shear_q":
            return SympMap(1, t, 0, 1)
        if self.kind == "shear_p":
            return SympMap(1, 0, t, 1)
        c, s = math.cos(t), math.sin(t)
        return SympMap(c, s, -s, c)


def compose(word: Sequence[SympGenerator]) -> SympMap:
    """Product g_1 g_2 ... g_k (the last generator acts first)."""
    out = SympMap.identity(1)
    for g in word:
        out = out @ g.map()
    return out


def transitive_word(v1: Tuple[float, float], v2: Tuple[float, float]
                    ) -> Tuple[List[SympGenerator], SympMap]:
    """Generator word A with dalpha_star(A) taking the point v1 of the h = 0
    plane to v2 (both nonzero).

    The word R(t2) D(r2 / r1) R(-t1) sends v1 to v2 as a matrix on (q, p);
    the dual action applies the transpose, so the returned map is its transpose.
    """
    r1, r2 = math.hypot(*v1), math.hypot(*v2)
    if r1 == 0 or r2 == 0:
        raise ValueError("the origin is a fixed point; both points must be nonzero")
    t1, t2 = math.atan2(v1[1], v1[0]), math.atan2(v2[1], v2[0])
    # rotation(t) turns the angle of a vector by -t
    word = [SympGenerator("rotation", -t2), SympGenerator("scaling", r2 / r1),
            SympGenerator("rotation", t1)]
    return word, compose(word).transpose()


def act_dual(A: SympMap, v: Tuple[float, float], h: float = 0.0) -> Tuple[float, float]:
    f = dalpha_star(A, DualPoint(h, (v[0],), (v[1],)))
    return float(f.q[0]), float(f.p[0])


# ---------------------------------------------------------------------------
# exact pullback


def _require(A: SympMap, check: bool):
    if check and not is_symplectic(A):
        raise NotSymplectic("matrix does not preserve the symplectic form")


def generator_images(A: SympMap, n: Optional[int] = None) -> Tuple[List[EnvElement], List[EnvElement]]:
    """Images of X_j and Y_j: G_i -> sum_j (A^{-1})_{j i} G_j."""
    n = A.n if n is None else n
    # floats are taken at their exact binary value so the algebra stays exact
    M = sp.Matrix([[sp.Rational(v) if isinstance(v, float) else sp.sympify(v) for v in row]
                   for row in A.matrix().tolist()]).inv()
    gens = [EnvElement.X(j + 1, n) for j in range(n)] + [EnvElement.Y(j + 1, n) for j in range(n)]
    images = []
    for i in range(2 * n):
        acc = EnvElement.zero(n)
        for j in range(2 * n):
            if M[j, i] != 0:
                acc = acc + gens[j] * M[j, i]
        images.append(acc)
    return images[:n], images[n:]


def pullback_env(A: SympMap, k: EnvElement, check: bool = True) -> EnvElement:
    """Substitute (X, Y) by their images under A, keep S, re-normal-order."""
    _require(A, check)
    if A.n != k.n:
        raise RankMismatch("map and kernel have different rank")
    Xs, Ys = generator_images(A, k.n)
    S = EnvElement.S(k.n)
    out = EnvElement.zero(k.n)
    for (a, B, C), v in k.terms.items():
        m = EnvElement.one(k.n) * v
        m = m * S ** a if a else m
        for j in range(k.n):
            if B[j]:
                m = env_mul(m, Xs[j] ** B[j])
        for j in range(k.n):
            if C[j]:
                m = env_mul(m, Ys[j] ** C[j])
        out = out + m
    return out.with_dim(k.dim)


# ---------------------------------------------------------------------------
# grid pullback


def lattice_matrix(A: SympMap, grid: G.Grid, tol: float = 1e-9) -> Optional[np.ndarray]:
    """Integer matrix of A in dual lattice index coordinates, or None."""
    M = A.float_matrix()
    D = np.diag([grid.dx, grid.dy])
    Mi = np.linalg.inv(D) @ M @ D
    R = np.round(Mi)
    return R.astype(int) if np.allclose(Mi, R, atol=tol, rtol=0) else None


def pullback_kernel(A: SympMap, k: G.GridKernel, check: bool = True,
                    tol: float = OUT_OF_BOX_TOLERANCE) -> G.GridKernel:
    """Resample k at A(x, y); exact on lattice-preserving maps.

    Source points falling outside the box contribute zero.  Since
    ``||A* k||^2 |det A| = ||k||^2``, losing more than ``tol`` of the norm
    means the image does not fit and raises OutOfBox.  ``check=False`` skips
    both the symplectic and the box test (negative controls).
    """
    _require(A, check)
    g = k.grid
    N, c = g.N, g.c
    M = lattice_matrix(A, g)
    if M is not None:
        I, J = np.meshgrid(np.arange(N) - c, np.arange(N) - c, indexing="ij")
        si = M[0, 0] * I + M[0, 1] * J + c
        sj = M[1, 0] * I + M[1, 1] * J + c
        inside = (si >= 0) & (si < N) & (sj >= 0) & (sj < N)
        out = np.zeros_like(k.data)
        out[inside] = k.data[si[inside], sj[inside]]
    else:
        Xm, Ym = g.dual_mesh()
        Mf = A.float_matrix()
        u = Mf[0, 0] * Xm + Mf[0, 1] * Ym
        v = Mf[1, 0] * Xm + Mf[1, 1] * Ym
        out = G.spectral_resample(k, u, v)
    before = k.l2()
    if check and before > 0:
        det = abs(np.linalg.det(A.float_matrix()))
        after = math.sqrt(float(np.sum(np.abs(out) ** 2)) * g.dx * g.dy * det)
        if abs(after - before) > tol * before:
            raise OutOfBox(f"pullback loses {abs(after - before) / before:.2e} of the norm")
    return G.GridKernel(g, out, h_independent=k.h_independent)


# ---------------------------------------------------------------------------
# invariance checks


def _env_size(k: EnvElement, values=None) -> float:
    # unspecified symbolic coefficients are sized at 1
    free = set().union(*(v.free_symbols for v in k.terms.values())) if k.terms else set()
    vals = k.numeric_terms({**{s: 1 for s in free}, **(values or {})})
    return max((abs(v) for v in vals.values()), default=0.0)


def pbracket_invariance_check(A: SympMap, k1, k2, check: bool = True,
                              values=None) -> Dict[str, object]:
    """Residual of ub{A* k1, A* k2} - A* ub{k1, k2}.

    EnvElements are compared exactly (``exact`` is True when the difference is
    identically zero); GridKernels give an l2 residual relative to the size of
    the bracket.
    """
    if isinstance(k1, EnvElement):
        lhs = env_pbracket(pullback_env(A, k1, check), pullback_env(A, k2, check))
        rhs = pullback_env(A, env_pbracket(k1, k2), check)
        diff = lhs - rhs
        scale = _env_size(rhs, values) or 1.0
        return {"engine": "symbolic", "exact": diff.is_zero(),
                "residual": _env_size(diff, values) / scale}
    lhs = G.pbracket_grid(pullback_kernel(A, k1, check), pullback_kernel(A, k2, check))
    rhs = pullback_kernel(A, G.pbracket_grid(k1, k2), check)
    scale = rhs.l2() or 1.0
    return {"engine": "grid", "exact": False, "residual": (lhs - rhs).l2() / scale,
            "lattice_preserving": lattice_matrix(A, k1.grid) is not None}


def well_kernel(grid: G.Grid, c1: float = 1.0, c2: float = 1.0,
                width: Optional[float] = None) -> Tuple[G.GridKernel, float]:
    """Kernel of the Gaussian well -H_w exp(-H / H_w), H = (c1 q^2 + c2 p^2) / 2.

    Its samples are smooth, so it can be resampled under any symplectic map.
    ``width`` defaults to H_w = 0.16 h omega.  Returns (kernel, H_w).
    """
    w = math.sqrt(c1 * c2)
    Hw = 0.16 * abs(grid.h) * w if width is None else width
    Q, P = grid.phase_mesh()
    sym = -Hw * np.exp(-(c1 * Q ** 2 + c2 * P ** 2) / (2 * Hw))
    return G.GridKernel(grid, G.field_to_kernel(sym.astype(complex), grid)), Hw


def well_levels(h: float, Hw: float, c1: float = 1.0, c2: float = 1.0,
                count: int = 5) -> np.ndarray:
    """Exact lowest eigenvalues of the Weyl operator of -H_w exp(-H / H_w).

    The Weyl symbol of exp(-tau H) is sech(u) exp(-(2 / hbar w) tanh(u) H) with
    u = tau hbar w / 2, so matching tanh(u) = hbar w / (2 H_w) gives the levels
    -H_w cosh(u) exp(-2 u (n + 1/2)).
    """
    hbar = abs(h) / (2 * math.pi)
    w = math.sqrt(c1 * c2)
    t = hbar * w / (2 * Hw)
    if t >= 1:
        raise ValueError("well too narrow for this h")
    u = math.atanh(t)
    n = np.arange(count)
    return -Hw * math.cosh(u) * np.exp(-2 * u * (n + 0.5))


def _lowest(k: G.GridKernel, basis: np.ndarray, count: int) -> np.ndarray:
    op = G.rho_kernel(k, basis)
    herm = (op.matrix + op.matrix.conj().T) / 2
    return np.sort(np.linalg.eigvalsh(herm))[:count]


def spectrum_equivalence_check(A: SympMap, k: G.GridKernel, count: int = 5,
                               K: int = 24, check: bool = True,
                               basis: Optional[np.ndarray] = None) -> Dict[str, object]:
    """Compare the lowest eigenvalues of rho_h(k) and rho_h(A* k).

    Both operators are compressed onto the same Fock basis of K levels.  A
    unitary intertwiner would make the two spectra equal, so agreement of the
    low levels certifies the equivalence without constructing it.
    """
    g = k.grid
    g.require_commensurate()
    if basis is None:
        basis = G.fock_basis(g, K)
    pulled = pullback_kernel(A, k, check)
    e0 = _lowest(k, basis, count)
    e1 = _lowest(pulled, basis, count)
    scale = np.maximum(np.abs(e0), 1e-300)
    return {"eigenvalues": e0.tolist(), "pulled_eigenvalues": e1.tolist(),
            "max_abs_diff": float(np.max(np.abs(e1 - e0))),
            "max_rel_diff": float(np.max(np.abs(e1 - e0) / scale))}


# ---------------------------------------------------------------------------
# report


def invariance_report(grid: Optional[G.Grid] = None, seed: int = 0,
                      pairs: int = 50) -> Dict[str, object]:
    """Residuals for a fixed set of maps; used by the ``verify`` command."""
    from .symbolic import c1 as sc1, c2 as sc2
    if grid is None:
        grid = G.Grid.for_h(1.0, 64)
    rng = np.random.default_rng(seed)
    J = SympMap.J(1)
    shear = SympGenerator("shear_q", 1).map()
    rot = SympGenerator("rotation", 0.3).map()
    bad = SympMap(2, 0, 0, sp.Rational(1, 3))
    X, Y = EnvElement.X(), EnvElement.Y()
    quad1 = (X * X * sc1 + Y * Y * sc2) / 2
    quad2 = X * Y + Y * X + X * 3
    cases = []
    for name, A, chk in (("J", J, True), ("shear_q(1)", shear, True),
                         ("rotation(0.3)", rot, True), ("diag(2,1/3)", bad, False)):
        r = pbracket_invariance_check(A, quad1, quad2, check=chk, values={sc1: 1, sc2: 2})
        cases.append({"map": name, "engine": "symbolic", "exact": bool(r["exact"]),
                      "residual": r["residual"]})
    Xm, Ym = grid.dual_mesh()
    ka = G.GridKernel(grid, np.exp(-((Xm - 0.3) ** 2 + Ym ** 2) / 0.5) + 0j)
    kb = G.GridKernel(grid, (1 + Ym) * np.exp(-(Xm ** 2 + (Ym + 0.2) ** 2) / 0.4) + 0j)
    for name, A, chk in (("J", J, True), ("shear_q(1)", shear, True),
                         ("rotation(0.3)", rot, True), ("diag(2,1/3)", bad, False)):
        r = pbracket_invariance_check(A, ka, kb, check=chk)
        cases.append({"map": name, "engine": "grid", "residual": r["residual"],
                      "lattice_preserving": bool(r["lattice_preserving"])})
    well, Hw = well_kernel(grid)
    spectra = []
    for name, A, chk in (("identity", SympMap.identity(1), True), ("rotation(0.3)", rot, True),
                         ("diag(2,1/3)", bad, False)):
        r = spectrum_equivalence_check(A, well, check=chk)
        spectra.append({"map": name, **r})
    worst = 0.0
    for _ in range(pairs):
        v1 = tuple(rng.normal(size=2))
        v2 = tuple(rng.normal(size=2))
        _, A = transitive_word(v1, v2)
        w = act_dual(A, v1)
        worst = max(worst, math.hypot(w[0] - v2[0], w[1] - v2[1]))
    return {"schema": 1, "grid": grid.to_dict(), "brackets": cases, "spectra": spectra,
            "well_width": Hw, "transitivity": {"pairs": pairs, "max_error": worst}}


def report_json(report: Dict[str, object]) -> str:
    return json.dumps(report, indent=2, sort_keys=True)
