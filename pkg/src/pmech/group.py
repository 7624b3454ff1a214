"""Exact arithmetic on the Heisenberg group H^n and its dual.

Group elements are stored in exponential coordinates (s, x, y).  Entries may
be plain numbers (ints, Fractions, floats) or :class:`~pmech.units.Quantity`
values; the formulas are written once and work for both, so dimensioned
inputs are checked automatically.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, Tuple

import numpy as np

from .errors import NotSymplectic, RankMismatch
from .units import B_BLOCK_DIM, C_BLOCK_DIM, Quantity, qty


def _sum(terms):
    # avoids seeding with a dimensionless 0 so Quantities add cleanly
    it = iter(terms)
    total = next(it)
    for t in it:
        total = total + t
    return total


def _tuple(v) -> tuple:
    if isinstance(v, (list, tuple)):
        return tuple(v)
    if isinstance(v, np.ndarray):
        return tuple(v.tolist())
    return (v,)


@dataclass(frozen=True)
class GroupPoint:
    s: object
    x: tuple
    y: tuple

    def __post_init__(self):
        object.__setattr__(self, "x", _tuple(self.x))
        object.__setattr__(self, "y", _tuple(self.y))
        if len(self.x) != len(self.y) or len(self.x) == 0:
            raise RankMismatch("x and y must have equal length n >= 1")

    @property
    def n(self) -> int:
        return len(self.x)

    @classmethod
    def identity(cls, n: int = 1) -> "GroupPoint":
        return cls(0, (0,) * n, (0,) * n)

    def __mul__(self, other: "GroupPoint") -> "GroupPoint":
        return multiply(self, other)


@dataclass(frozen=True)
class DualPoint:
    h: object
    q: tuple
    p: tuple

    def __post_init__(self):
        object.__setattr__(self, "q", _tuple(self.q))
        object.__setattr__(self, "p", _tuple(self.p))
        if len(self.q) != len(self.p):
            raise RankMismatch("q and p must have equal length")

    @property
    def n(self) -> int:
        return len(self.q)


def _check_rank(*pts):
    n = pts[0].n
    for g in pts[1:]:
        if g.n != n:
            raise RankMismatch(f"rank mismatch: {n} vs {g.n}")


def symplectic_form(x, y, xp, yp):
    """omega(x, y; x', y') = sum_j x_j y'_j - x'_j y_j."""
    x, y, xp, yp = map(_tuple, (x, y, xp, yp))
    if not (len(x) == len(y) == len(xp) == len(yp)):
        raise RankMismatch("symplectic_form needs vectors of equal length")
    return _sum(a * d - c * b for a, b, c, d in zip(x, y, xp, yp))


def multiply(g1: GroupPoint, g2: GroupPoint) -> GroupPoint:
    _check_rank(g1, g2)
    omega = symplectic_form(g1.x, g1.y, g2.x, g2.y)
    half = omega / 2 if not isinstance(omega, int) else _half(omega)
    s = g1.s + g2.s + half
    x = tuple(a + b for a, b in zip(g1.x, g2.x))
    y = tuple(a + b for a, b in zip(g1.y, g2.y))
    return GroupPoint(s, x, y)


def _half(v: int):
    from fractions import Fraction
    return Fraction(v, 2)


def inverse(g: GroupPoint) -> GroupPoint:
    return GroupPoint(-g.s, tuple(-a for a in g.x), tuple(-a for a in g.y))


def coadjoint(g: GroupPoint, f: DualPoint) -> DualPoint:
    """Coadjoint action (h, q, p) -> (h, q + h y, p - h x)."""
    if g.n != f.n:
        raise RankMismatch(f"rank mismatch: {g.n} vs {f.n}")
    q = tuple(a + f.h * b for a, b in zip(f.q, g.y))
    p = tuple(a - f.h * b for a, b in zip(f.p, g.x))
    return DualPoint(f.h, q, p)


# ---------------------------------------------------------------------------
# symplectic automorphisms


class SympMap:
    """Linear map A = (a b; c d) of (x, y), blocks stored in base units.

    The ``b`` block is measured in M/T and ``c`` in T/M; when the map is applied
    to dimensioned vectors these units are attached automatically.
    """

    def __init__(self, a, b, c, d):
        self.a = np.atleast_2d(np.asarray(a, dtype=object))
        self.b = np.atleast_2d(np.asarray(b, dtype=object))
        self.c = np.atleast_2d(np.asarray(c, dtype=object))
        self.d = np.atleast_2d(np.asarray(d, dtype=object))
        n = self.a.shape[0]
        for blk in (self.a, self.b, self.c, self.d):
            if blk.shape != (n, n):
                raise RankMismatch("SympMap blocks must all be n x n")

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @classmethod
    def from_matrix(cls, m) -> "SympMap":
        m = np.asarray(m, dtype=object)
        n = m.shape[0] // 2
        return cls(m[:n, :n], m[:n, n:], m[n:, :n], m[n:, n:])

    @classmethod
    def identity(cls, n: int = 1) -> "SympMap":
        i = np.eye(n, dtype=int).astype(object)
        z = np.zeros((n, n), dtype=int).astype(object)
        return cls(i, z, z, i)

    @classmethod
    def J(cls, n: int = 1) -> "SympMap":
        """The quarter turn (x, y) -> (y, -x)."""
        i = np.eye(n, dtype=int).astype(object)
        z = np.zeros((n, n), dtype=int).astype(object)
        return cls(z, i, -i, z)

    def matrix(self) -> np.ndarray:
        top = np.concatenate([self.a, self.b], axis=1)
        bot = np.concatenate([self.c, self.d], axis=1)
        return np.concatenate([top, bot], axis=0)

    def float_matrix(self) -> np.ndarray:
        return np.array(self.matrix(), dtype=float)

    def __matmul__(self, other: "SympMap") -> "SympMap":
        return SympMap.from_matrix(self.matrix().dot(other.matrix()))

    def inverse(self) -> "SympMap":
        # A^{-1} = -J A^t J for symplectic A; valid once is_symplectic holds
        m = self.matrix()
        n = self.n
        Jm = _J_matrix(n)
        return SympMap.from_matrix(-Jm.dot(m.T).dot(Jm))

    def transpose(self) -> "SympMap":
        return SympMap.from_matrix(self.matrix().T)

    def __repr__(self):
        return f"SympMap({self.float_matrix().tolist()})"


def _J_matrix(n: int) -> np.ndarray:
    i = np.eye(n, dtype=int).astype(object)
    z = np.zeros((n, n), dtype=int).astype(object)
    return np.block([[z, i], [-i, z]])


def is_symplectic(A: SympMap, tol: float = 1e-12) -> bool:
    m = A.float_matrix()
    J = np.array(_J_matrix(A.n), dtype=float)
    return bool(np.max(np.abs(m.T @ J @ m - J)) <= tol)


def _require_symplectic(A: SympMap):
    if not is_symplectic(A):
        raise NotSymplectic("matrix does not preserve the symplectic form")


def _apply_blocks(A: SympMap, u: tuple, v: tuple, b_dim, c_dim) -> Tuple[tuple, tuple]:
    dimensioned = any(isinstance(t, Quantity) for t in u + v)

    def blk(val, dim):
        return qty(val, dim) if dimensioned and dim is not None else val

    n = A.n
    out_u, out_v = [], []
    for i in range(n):
        out_u.append(_sum([A.a[i, j] * u[j] for j in range(n)]
                          + [blk(A.b[i, j], b_dim) * v[j] for j in range(n)]))
        out_v.append(_sum([blk(A.c[i, j], c_dim) * u[j] for j in range(n)]
                          + [A.d[i, j] * v[j] for j in range(n)]))
    return tuple(out_u), tuple(out_v)


def apply_linear(A: SympMap, x, y) -> Tuple[tuple, tuple]:
    """A(x, y) without the symplectic check (used by negative controls)."""
    return _apply_blocks(A, _tuple(x), _tuple(y), B_BLOCK_DIM, C_BLOCK_DIM)


def apply_automorphism(A: SympMap, g: GroupPoint) -> GroupPoint:
    _require_symplectic(A)
    if A.n != g.n:
        raise RankMismatch("map and point have different rank")
    x, y = apply_linear(A, g.x, g.y)
    return GroupPoint(g.s, x, y)


def dalpha_star(A: SympMap, f: DualPoint) -> DualPoint:
    """Dual action (h, q, p) -> (h, A^t (q, p))."""
    _require_symplectic(A)
    if A.n != f.n:
        raise RankMismatch("map and point have different rank")
    At = A.transpose()
    # for A^t the off-diagonal blocks are c^t (T/M) on top and b^t (M/T) below
    q, p = _apply_blocks(At, f.q, f.p, C_BLOCK_DIM, B_BLOCK_DIM)
    return DualPoint(f.h, q, p)


# ---------------------------------------------------------------------------
# finite-difference realisation of the invariant vector fields

Field = Callable[[Callable], Callable]


def _partial(axis: Tuple[str, int], step: float) -> Field:
    kind, j = axis

    def op(F):
        def G(s, x, y):
            if kind == "s":
                return (F(s + step, x, y) - F(s - step, x, y)) / (2 * step)
            e = np.zeros_like(x)
            e[j] = step
            if kind == "x":
                return (F(s, x + e, y) - F(s, x - e, y)) / (2 * step)
            return (F(s, x, y + e) - F(s, x, y - e)) / (2 * step)
        return G
    return op


def invariant_fields(n: int, step: float, side: str) -> Dict[str, Field]:
    """Left (side='l') or right (side='r') invariant fields as difference operators."""
    sign = 1.0 if side == "l" else -1.0
    ds = _partial(("s", 0), step)
    fields = {"S": lambda F: (lambda s, x, y: sign * ds(F)(s, x, y))}
    for j in range(n):
        dx = _partial(("x", j), step)
        dy = _partial(("y", j), step)

        def X(F, dx=dx, j=j):
            return lambda s, x, y: sign * dx(F)(s, x, y) - y[j] / 2 * ds(F)(s, x, y)

        def Y(F, dy=dy, j=j):
            return lambda s, x, y: sign * dy(F)(s, x, y) + x[j] / 2 * ds(F)(s, x, y)

        fields[f"X{j + 1}"] = X
        fields[f"Y{j + 1}"] = Y
    return fields


def _test_function(n: int):
    def F(s, x, y):
        r2 = s ** 2 + np.sum(x ** 2, axis=0) + np.sum(y ** 2, axis=0)
        poly = 1 + 0.3 * s + 0.2 * x[0] * y[n - 1] + 0.1 * x[0] ** 2 - 0.25 * s * y[0]
        return np.exp(-r2 / 2) * poly
    return F


def verify_field_commutators(n: int = 1, grid_step: float = 1e-2,
                             samples: int = 5, box: float = 1.0) -> Dict[str, float]:
    """Residuals of the Heisenberg commutation relations for difference fields.

    Returns max-norm residuals over a small (s, x, y) sample box for
    [X^l, Y^l] - S^l, [X^r, Y^r] - S^r and for the commutators that should
    vanish (left-right pairs, distinct indices, anything with S).
    """
    F = _test_function(n)
    axis = np.linspace(-box / 2, box / 2, samples)
    mesh = np.meshgrid(*([axis] * (2 * n + 1)), indexing="ij")
    s = mesh[0].ravel()
    x = np.array([m.ravel() for m in mesh[1:n + 1]])
    y = np.array([m.ravel() for m in mesh[n + 1:]])

    L = invariant_fields(n, grid_step, "l")
    R = invariant_fields(n, grid_step, "r")

    def comm(A, B):
        return lambda s_, x_, y_: A(B(F))(s_, x_, y_) - B(A(F))(s_, x_, y_)

    def norm(G):
        return float(np.max(np.abs(G(s, x, y))))

    report: Dict[str, float] = {}
    for side, fl in (("l", L), ("r", R)):
        for j in range(1, n + 1):
            c = comm(fl[f"X{j}"], fl[f"Y{j}"])
            Sf = fl["S"](F)
            report[f"[X{j}^{side},Y{j}^{side}]-S^{side}"] = float(
                np.max(np.abs(c(s, x, y) - Sf(s, x, y))))
    zero_pairs = []
    for a in L:
        for b in R:
            zero_pairs.append((f"[{a}^l,{b}^r]", L[a], R[b]))
    for fl, side in ((L, "l"), (R, "r")):
        names = list(fl)
        for i, a in enumerate(names):
            for b in names[i + 1:]:
                if a[1:] == b[1:] and {a[0], b[0]} == {"X", "Y"}:
                    continue
                zero_pairs.append((f"[{a}^{side},{b}^{side}]", fl[a], fl[b]))
    for label, A, B in zero_pairs:
        report[label] = norm(comm(A, B))
    report["max"] = max(report.values())
    return report


def commutator_convergence(n: int = 1, step: float = 1e-2) -> Dict[str, float]:
    """Residual of [X^l, Y^l] - S^l at ``step`` and ``step/2`` and their ratio."""
    key = "[X1^l,Y1^l]-S^l"
    r1 = verify_field_commutators(n, step)[key]
    r2 = verify_field_commutators(n, step / 2)[key]
    return {"step": step, "residual": r1, "residual_half": r2,
            "ratio": r1 / r2 if r2 else math.inf}
