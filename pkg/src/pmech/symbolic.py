"""Exact algebra of kernels supported at the group identity.

A delta-derivative kernel is stored as a noncommutative polynomial in the
generators S, X_j, Y_j of the Heisenberg Lie algebra, normal ordered as
S^a X^B Y^C (PBW order) with [X_j, Y_j] = S and all other brackets zero.
Coefficients are sympy expressions, so pi, i and symbolic constants such as
c1, c2 are kept exact.

Conventions fixed here and used by every other module:

* ``rep_classical`` sends S -> 0, X_j -> -2 pi i q_j, Y_j -> -2 pi i p_j.
* The delta-notation element delta^(b)(x) corresponds to -X (one minus sign
  per derivative), so ``(1/2 pi i) delta(s) delta^(1)(x) delta(y)`` is the
  kernel of the coordinate q.
* ``env_pbracket(k1, k2) = -4 pi^2 S^{-1} [k1, k2]``; the sign is the one for
  which the classical image of the bracket is the Poisson bracket.
"""
from __future__ import annotations

import itertools
import math
from typing import Dict, Iterable, Mapping, Optional, Tuple

import sympy as sp
from sympy.parsing.sympy_parser import (
    convert_xor, implicit_multiplication_application, parse_expr,
    standard_transformations)

from .errors import InternalError, PmechError, RankMismatch
from .units import DIMENSIONLESS, H_DIM, Dimension

TAU = 2 * sp.pi * sp.I
Key = Tuple[int, Tuple[int, ...], Tuple[int, ...]]
PKey = Tuple[Tuple[int, ...], Tuple[int, ...]]

c1, c2 = sp.symbols("c1 c2", positive=True)


def _clean(v) -> sp.Expr:
    return sp.expand(sp.sympify(v))


# ---------------------------------------------------------------------------
# enveloping algebra


class EnvElement:
    """Sparse PBW polynomial ``sum coeff * S^a X^B Y^C``."""

    __slots__ = ("n", "terms", "dim")

    def __init__(self, n: int, terms: Optional[Mapping[Key, object]] = None,
                 dim: Dimension = DIMENSIONLESS):
        if n < 1:
            raise RankMismatch("n must be >= 1")
        self.n = n
        self.dim = dim
        clean: Dict[Key, sp.Expr] = {}
        for (a, B, C), v in (terms or {}).items():
            B, C = tuple(B), tuple(C)
            if len(B) != n or len(C) != n:
                raise RankMismatch("multi-index length differs from n")
            if a < 0 or min(B + C, default=0) < 0:
                raise ValueError("negative exponent in PBW monomial")
            v = _clean(v)
            if v != 0:
                key = (a, B, C)
                clean[key] = _clean(clean.get(key, 0) + v)
                if clean[key] == 0:
                    del clean[key]
        self.terms = clean

    # constructors
    @classmethod
    def zero(cls, n: int = 1) -> "EnvElement":
        return cls(n)

    @classmethod
    def one(cls, n: int = 1) -> "EnvElement":
        return cls(n, {(0, (0,) * n, (0,) * n): 1})

    @classmethod
    def S(cls, n: int = 1) -> "EnvElement":
        return cls(n, {(1, (0,) * n, (0,) * n): 1})

    @classmethod
    def X(cls, j: int = 1, n: int = 1) -> "EnvElement":
        B = tuple(1 if i == j - 1 else 0 for i in range(n))
        return cls(n, {(0, B, (0,) * n): 1})

    @classmethod
    def Y(cls, j: int = 1, n: int = 1) -> "EnvElement":
        C = tuple(1 if i == j - 1 else 0 for i in range(n))
        return cls(n, {(0, (0,) * n, C): 1})

    @classmethod
    def monomial(cls, a: int, B, C, coeff=1) -> "EnvElement":
        B = tuple(B) if isinstance(B, (tuple, list)) else (B,)
        C = tuple(C) if isinstance(C, (tuple, list)) else (C,)
        return cls(len(B), {(a, B, C): coeff})

    # algebra
    def _check(self, other: "EnvElement"):
        if self.n != other.n:
            raise RankMismatch(f"rank mismatch: {self.n} vs {other.n}")

    def __add__(self, other):
        if not isinstance(other, EnvElement):
            other = EnvElement.one(self.n) * other
        self._check(other)
        t = dict(self.terms)
        for k, v in other.terms.items():
            t[k] = t.get(k, 0) + v
        return EnvElement(self.n, t, self.dim)

    __radd__ = __add__

    def __neg__(self):
        return EnvElement(self.n, {k: -v for k, v in self.terms.items()}, self.dim)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, EnvElement):
            return env_mul(self, other)
        return EnvElement(self.n, {k: v * other for k, v in self.terms.items()}, self.dim)

    def __rmul__(self, other):
        return EnvElement(self.n, {k: other * v for k, v in self.terms.items()}, self.dim)

    def __truediv__(self, other):
        return self * (1 / sp.sympify(other))

    def __pow__(self, k: int):
        out = EnvElement.one(self.n)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, (int, float, complex, sp.Basic)):
            other = EnvElement.one(self.n) * other
        if not isinstance(other, EnvElement):
            return NotImplemented
        return self.n == other.n and (self - other).is_zero()

    def __hash__(self):
        return hash((self.n, frozenset(self.terms.items())))

    def is_zero(self) -> bool:
        return all(_clean(v) == 0 for v in self.terms.values())

    def degree(self) -> int:
        """Total degree in X, Y (S not counted)."""
        return max((sum(B) + sum(C) for _, B, C in self.terms), default=0)

    def with_dim(self, dim: Dimension) -> "EnvElement":
        return EnvElement(self.n, self.terms, dim)

    def subs(self, values: Mapping) -> "EnvElement":
        return EnvElement(self.n, {k: v.subs(values) for k, v in self.terms.items()}, self.dim)

    def numeric_terms(self, values: Optional[Mapping] = None) -> Dict[Key, complex]:
        values = values or {}
        return {k: complex(sp.N(v.subs(values))) for k, v in self.terms.items()}

    def __repr__(self):
        return f"EnvElement({to_delta_notation(self)})"

    def __str__(self):
        return to_delta_notation(self)


def _yx_reorder(c: int, b: int) -> Iterable[Tuple[int, int, int, int]]:
    """Y^c X^b = sum_k coeff * X^{b-k} Y^{c-k} S^k; yields (coeff, b-k, c-k, k)."""
    for k in range(min(b, c) + 1):
        coeff = (-1) ** k * math.factorial(k) * math.comb(c, k) * math.comb(b, k)
        yield coeff, b - k, c - k, k


def _mono_mul(k1: Key, k2: Key) -> Dict[Key, int]:
    a1, B1, C1 = k1
    a2, B2, C2 = k2
    n = len(B1)
    per_index = [list(_yx_reorder(C1[j], B2[j])) for j in range(n)]
    out: Dict[Key, int] = {}
    for combo in itertools.product(*per_index):
        coeff = 1
        a = a1 + a2
        B, C = [], []
        for j, (cf, bj, cj, k) in enumerate(combo):
            coeff *= cf
            a += k
            B.append(B1[j] + bj)
            C.append(cj + C2[j])
        key = (a, tuple(B), tuple(C))
        out[key] = out.get(key, 0) + coeff
    return out


def env_mul(k1: EnvElement, k2: EnvElement) -> EnvElement:
    k1._check(k2)
    acc: Dict[Key, sp.Expr] = {}
    for m1, v1 in k1.terms.items():
        for m2, v2 in k2.terms.items():
            for key, cf in _mono_mul(m1, m2).items():
                acc[key] = acc.get(key, 0) + cf * v1 * v2
    return EnvElement(k1.n, acc, k1.dim * k2.dim)


def env_commutator(k1: EnvElement, k2: EnvElement) -> EnvElement:
    return env_mul(k1, k2) - env_mul(k2, k1)


def divide_by_S(k: EnvElement) -> EnvElement:
    t = {}
    for (a, B, C), v in k.terms.items():
        if a < 1:
            raise InternalError("commutator has a term outside the ideal generated by S")
        t[(a - 1, B, C)] = v
    return EnvElement(k.n, t, k.dim)


PBRACKET_SCALE = -4 * sp.pi ** 2


def env_pbracket(k1: EnvElement, k2: EnvElement) -> EnvElement:
    """p-mechanical bracket ``-4 pi^2 S^{-1} [k1, k2]``."""
    out = divide_by_S(env_commutator(k1, k2)) * PBRACKET_SCALE
    return out.with_dim(k1.dim * k2.dim / H_DIM)


# ---------------------------------------------------------------------------
# classical polynomial symbols


class PolySymbol:
    """Sparse polynomial in q_j, p_j with exact coefficients."""

    __slots__ = ("n", "terms", "dim")

    def __init__(self, n: int, terms: Optional[Mapping[PKey, object]] = None,
                 dim: Dimension = DIMENSIONLESS):
        self.n = n
        self.dim = dim
        clean: Dict[PKey, sp.Expr] = {}
        for (B, C), v in (terms or {}).items():
            B, C = tuple(B), tuple(C)
            if len(B) != n or len(C) != n:
                raise RankMismatch("exponent length differs from n")
            v = _clean(clean.get((B, C), 0) + sp.sympify(v))
            if v != 0:
                clean[(B, C)] = v
            else:
                clean.pop((B, C), None)
        self.terms = clean

    @classmethod
    def constant(cls, c=1, n: int = 1) -> "PolySymbol":
        return cls(n, {((0,) * n, (0,) * n): c})

    @classmethod
    def q(cls, j: int = 1, n: int = 1) -> "PolySymbol":
        return cls(n, {(tuple(int(i == j - 1) for i in range(n)), (0,) * n): 1})

    @classmethod
    def p(cls, j: int = 1, n: int = 1) -> "PolySymbol":
        return cls(n, {((0,) * n, tuple(int(i == j - 1) for i in range(n))): 1})

    @classmethod
    def from_expr(cls, expr, n: int = 1, dim: Dimension = DIMENSIONLESS) -> "PolySymbol":
        qs, ps = _qp_symbols(n)
        expr = sp.expand(sp.sympify(expr))
        poly = sp.Poly(expr, *qs, *ps)
        terms = {}
        for mon, cf in poly.terms():
            terms[(tuple(mon[:n]), tuple(mon[n:]))] = cf
        return cls(n, terms, dim)

    def to_expr(self) -> sp.Expr:
        qs, ps = _qp_symbols(self.n)
        out = sp.Integer(0)
        for (B, C), v in self.terms.items():
            m = v
            for j in range(self.n):
                m = m * qs[j] ** B[j] * ps[j] ** C[j]
            out += m
        return sp.expand(out)

    def _check(self, other):
        if self.n != other.n:
            raise RankMismatch(f"rank mismatch: {self.n} vs {other.n}")

    def __add__(self, other):
        if not isinstance(other, PolySymbol):
            other = PolySymbol.constant(other, self.n)
        self._check(other)
        t = dict(self.terms)
        for k, v in other.terms.items():
            t[k] = t.get(k, 0) + v
        return PolySymbol(self.n, t, self.dim)

    __radd__ = __add__

    def __neg__(self):
        return PolySymbol(self.n, {k: -v for k, v in self.terms.items()}, self.dim)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, PolySymbol):
            self._check(other)
            acc: Dict[PKey, sp.Expr] = {}
            for (B1, C1), v1 in self.terms.items():
                for (B2, C2), v2 in other.terms.items():
                    k = (tuple(a + b for a, b in zip(B1, B2)),
                         tuple(a + b for a, b in zip(C1, C2)))
                    acc[k] = acc.get(k, 0) + v1 * v2
            return PolySymbol(self.n, acc, self.dim * other.dim)
        return PolySymbol(self.n, {k: v * other for k, v in self.terms.items()}, self.dim)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self * (1 / sp.sympify(other))

    def __pow__(self, k: int):
        out = PolySymbol.constant(1, self.n)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, (int, float, complex, sp.Basic)):
            other = PolySymbol.constant(other, self.n)
        if not isinstance(other, PolySymbol):
            return NotImplemented
        return self.n == other.n and (self - other).is_zero()

    def __hash__(self):
        return hash((self.n, frozenset(self.terms.items())))

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        return max((sum(B) + sum(C) for B, C in self.terms), default=0)

    def diff(self, var: str, j: int = 1) -> "PolySymbol":
        idx = j - 1
        t = {}
        for (B, C), v in self.terms.items():
            E = list(B if var == "q" else C)
            if E[idx] == 0:
                continue
            k = E[idx]
            E[idx] -= 1
            key = (tuple(E), C) if var == "q" else (B, tuple(E))
            t[key] = k * v
        return PolySymbol(self.n, t, self.dim)

    def subs(self, values: Mapping) -> "PolySymbol":
        return PolySymbol(self.n, {k: v.subs(values) for k, v in self.terms.items()}, self.dim)

    def compose_linear(self, images) -> "PolySymbol":
        """Substitute each q_j, p_j by a PolySymbol (given in order q_1..q_n, p_1..p_n)."""
        out = PolySymbol(self.n, {}, self.dim)
        for (B, C), v in self.terms.items():
            m = PolySymbol.constant(v, self.n)
            for j in range(self.n):
                m = m * images[j] ** B[j] * images[self.n + j] ** C[j]
            out = out + m
        return out

    def evaluate(self, q, p, values: Optional[Mapping] = None):
        """Numeric evaluation on arrays (n = 1) or sequences of arrays."""
        values = values or {}
        qs = q if self.n > 1 else [q]
        ps = p if self.n > 1 else [p]
        out = 0
        for (B, C), v in self.terms.items():
            m = complex(sp.N(v.subs(values)))
            for j in range(self.n):
                m = m * qs[j] ** B[j] * ps[j] ** C[j]
            out = out + m
        return out

    def __repr__(self):
        return f"PolySymbol({self.to_expr()})"

    def __str__(self):
        return str(self.to_expr())


def _qp_symbols(n: int):
    if n == 1:
        return [sp.Symbol("q")], [sp.Symbol("p")]
    return ([sp.Symbol(f"q{j}") for j in range(1, n + 1)],
            [sp.Symbol(f"p{j}") for j in range(1, n + 1)])


def poisson_poly(f: PolySymbol, g: PolySymbol) -> PolySymbol:
    f._check(g)
    out = PolySymbol(f.n, {}, f.dim * g.dim / H_DIM)
    for j in range(1, f.n + 1):
        out = out + f.diff("q", j) * g.diff("p", j) - f.diff("p", j) * g.diff("q", j)
    return PolySymbol(f.n, out.terms, f.dim * g.dim / H_DIM)


def rep_classical(k: EnvElement) -> PolySymbol:
    """Image under the one-dimensional representation at the point (q, p)."""
    t: Dict[PKey, sp.Expr] = {}
    for (a, B, C), v in k.terms.items():
        if a > 0:
            continue
        t[(B, C)] = t.get((B, C), 0) + v * (-TAU) ** (sum(B) + sum(C))
    return PolySymbol(k.n, t, k.dim)


def symmetrized(B, C) -> EnvElement:
    """Weyl-symmetrised product of X^B and Y^C, written in PBW order."""
    B, C = tuple(B), tuple(C)
    n = len(B)
    out = EnvElement.one(n)
    for j in range(n):
        b, c = B[j], C[j]
        part = EnvElement(n)
        for k in range(min(b, c) + 1):
            cf = sp.Rational(math.factorial(b) * math.factorial(c),
                             math.factorial(b - k) * math.factorial(c - k) * math.factorial(k))
            Bk = tuple(b - k if i == j else 0 for i in range(n))
            Ck = tuple(c - k if i == j else 0 for i in range(n))
            part = part + EnvElement(n, {(k, Bk, Ck): cf * sp.Rational(-1, 2) ** k})
        out = out * part
    return out


def mechanise(c: PolySymbol) -> EnvElement:
    """Weyl p-mechanisation of a polynomial symbol (extension by delta(s))."""
    out = EnvElement(c.n)
    for (B, C), v in c.terms.items():
        deg = sum(B) + sum(C)
        out = out + symmetrized(B, C) * (v * (-TAU) ** (-deg))
    return out.with_dim(c.dim)


def shift_constants(n: int = 1) -> Dict[str, sp.Expr]:
    """Constants kappa with rep(ub{X_delta, f}) = kappa_p df/dp and likewise for q.

    X_delta = -X and Y_delta = -Y are the first-derivative delta elements.
    Computed by the bracket on a generic symbol, never assumed.
    """
    f = PolySymbol.from_expr(sp.Symbol("q") ** 2 * sp.Symbol("p") ** 3 + sp.Symbol("p"), 1) \
        if n == 1 else None
    if f is None:
        raise NotImplementedError("shift constants are reported for n = 1")
    Xd, Yd = -EnvElement.X(1, 1), -EnvElement.Y(1, 1)
    bx = rep_classical(env_pbracket(Xd, mechanise(f)))
    by = rep_classical(env_pbracket(Yd, mechanise(f)))
    kp = sp.simplify(bx.to_expr() / f.diff("p").to_expr())
    kq = sp.simplify(by.to_expr() / f.diff("q").to_expr())
    return {"kappa_p": kp, "kappa_q": kq}


# ---------------------------------------------------------------------------
# delta notation


_SUP = str.maketrans("0123456789-", "⁰¹²³⁴⁵⁶⁷⁸⁹⁻")


def _delta(order: int, var: str) -> str:
    if order == 0:
        return f"δ({var})"
    return f"δ⁽{str(order).translate(_SUP)}⁾({var})"


def to_delta_basis(k: EnvElement) -> Dict[Key, sp.Expr]:
    """Coefficients of k on the basis delta^(a)(s) delta^(B)(x) delta^(C)(y).

    That basis element is (-1)^(a+|B|+|C|) S^a Sym(X^B Y^C).  The conversion
    peels off the highest X, Y degree term repeatedly.
    """
    rest = EnvElement(k.n, k.terms)
    out: Dict[Key, sp.Expr] = {}
    while not rest.is_zero():
        key = max(rest.terms, key=lambda m: (sum(m[1]) + sum(m[2]), m))
        a, B, C = key
        v = rest.terms[key]
        basis = symmetrized(B, C) * EnvElement(k.n, {(a, (0,) * k.n, (0,) * k.n): 1})
        sign = (-1) ** (a + sum(B) + sum(C))
        out[key] = _clean(out.get(key, 0) + v * sign)
        rest = rest - basis * v
    return out


def _prefactor_text(num: sp.Expr) -> Optional[str]:
    """Render pure numbers like 1/(2 pi i) or -1/(8 pi^2) compactly."""
    num = sp.nsimplify(num) if not num.free_symbols else num
    for k in range(0, 7):
        r = sp.simplify(num * TAU ** k)
        if r.is_rational:
            if k == 0:
                return None if r == 1 else str(r)
            if k % 2 == 0:
                r2 = sp.simplify(num * sp.pi ** k)
                sign = "−" if r2 < 0 else ""
                r2 = abs(r2)
                pk = "π" + (str(k).translate(_SUP) if k > 1 else "")
                numer, denom = sp.fraction(r2)
                return f"{sign}({numer}/{denom if denom != 1 else ''}{pk})"
            sign = "−" if r < 0 else ""
            r = abs(r)
            numer, denom = sp.fraction(r)
            pw = "" if k == 1 else "^" + str(k)
            dtxt = "" if denom == 1 else str(denom)
            if pw:
                return f"{sign}({numer}/{dtxt}(2πi){pw})"
            return f"{sign}({numer}/{dtxt}2πi)"
    for k in range(1, 7):
        r = sp.simplify(num / sp.pi ** k)
        if r.is_rational:
            pk = "π" + (str(k).translate(_SUP) if k > 1 else "")
            return f"{'−' if r < 0 else ''}{abs(r) if abs(r) != 1 else ''}{pk}"
    return None


def _delta_monomial(key: Key) -> str:
    a, B, C = key
    n = len(B)
    if n == 1:
        return _delta(a, "s") + _delta(B[0], "x") + _delta(C[0], "y")
    parts = [_delta(a, "s")]
    parts += [_delta(B[j], f"x{j + 1}") for j in range(n)]
    parts += [_delta(C[j], f"y{j + 1}") for j in range(n)]
    return "".join(parts)


def to_delta_notation(k: EnvElement) -> str:
    """Human-readable delta-derivative form, grouping terms by numeric prefactor."""
    coeffs = to_delta_basis(k)
    if not coeffs:
        return "0"
    groups: Dict[sp.Expr, list] = {}
    order = sorted(coeffs, key=lambda m: (-(sum(m[1]) + sum(m[2])), m[0], tuple(-b for b in m[1])))
    for key in order:
        v = coeffs[key]
        syms = sorted(v.free_symbols, key=str)
        num, rest = v.as_independent(*syms, as_Add=False) if syms else (v, sp.Integer(1))
        groups.setdefault(num, []).append((rest, key))
    chunks = []
    for num, items in groups.items():
        pre = _prefactor_text(num)
        if pre is None and num != 1:
            pre = f"({sp.sstr(num)})"
        body = []
        for rest, key in items:
            mono = _delta_monomial(key)
            body.append(mono if rest == 1 else f"{sp.sstr(rest)} {mono}")
        inner = " + ".join(body)
        if len(items) > 1 and pre is not None:
            chunks.append(f"{pre}({inner})")
        else:
            chunks.append(inner if pre is None else f"{pre} {inner}")
    return " + ".join(chunks)


# ---------------------------------------------------------------------------
# parsing


class SymbolParseError(PmechError, ValueError):
    pass


def parse_symbol(text: str, n: int = 1) -> PolySymbol:
    """Parse a polynomial in q, p (or q1..qn, p1..pn) with symbolic c1, c2."""
    qs, ps = _qp_symbols(n)
    local = {str(s): s for s in qs + ps}
    local.update({"c1": c1, "c2": c2, "pi": sp.pi, "I": sp.I})
    try:
        expr = parse_expr(text, local_dict=local,
                          transformations=standard_transformations + (
                              convert_xor, implicit_multiplication_application))
        unknown = expr.free_symbols - set(local.values())
        if unknown:
            raise SymbolParseError(f"unknown symbols: {sorted(map(str, unknown))}")
        return PolySymbol.from_expr(expr, n)
    except SymbolParseError:
        raise
    except Exception as exc:  # sympy raises a zoo of exception types
        raise SymbolParseError(f"cannot parse symbol {text!r}: {exc}") from exc
