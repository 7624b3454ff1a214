"""Rational M/L/T dimensions and dimension-tagged quantities.

Quantities carry a value (scalar or numpy array) and a :class:`Dimension`.
Addition requires equal dimensions; exponentials and trigonometric
functions require dimensionless arguments.  Numerical kernels work in
"raw mode": a value is checked once with :func:`strip` and then used as a
plain number.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Dict, Union

import numpy as np

from .errors import DimensionMismatch

Rational = Union[int, Fraction]


def _frac(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, float) and v.is_integer():
        return Fraction(int(v))
    if isinstance(v, str):
        return Fraction(v)
    raise TypeError(f"dimension exponents must be rational, got {v!r}")


@dataclass(frozen=True)
class Dimension:
    mass_exp: Fraction = Fraction(0)
    length_exp: Fraction = Fraction(0)
    time_exp: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "mass_exp", _frac(self.mass_exp))
        object.__setattr__(self, "length_exp", _frac(self.length_exp))
        object.__setattr__(self, "time_exp", _frac(self.time_exp))

    @property
    def exps(self):
        return (self.mass_exp, self.length_exp, self.time_exp)

    def __mul__(self, other: "Dimension") -> "Dimension":
        return Dimension(*(a + b for a, b in zip(self.exps, other.exps)))

    def __truediv__(self, other: "Dimension") -> "Dimension":
        return Dimension(*(a - b for a, b in zip(self.exps, other.exps)))

    def __pow__(self, k) -> "Dimension":
        k = _frac(k)
        return Dimension(*(a * k for a in self.exps))

    def inverse(self) -> "Dimension":
        return self ** -1

    @property
    def is_dimensionless(self) -> bool:
        return not any(self.exps)

    def __str__(self) -> str:
        if self.is_dimensionless:
            return "1"
        parts = []
        for sym, e in zip("MLT", self.exps):
            if e == 0:
                continue
            parts.append(sym if e == 1 else f"{sym}^{e}")
        return " ".join(parts)

    def __repr__(self) -> str:
        return f"Dimension({self})"


DIMENSIONLESS = Dimension()
MASS = Dimension(1, 0, 0)
LENGTH = Dimension(0, 1, 0)
TIME = Dimension(0, 0, 1)

# coordinates on the group and its dual
S_DIM = TIME / (LENGTH ** 2 * MASS)
X_DIM = LENGTH.inverse()
Y_DIM = TIME / (LENGTH * MASS)
H_DIM = MASS * LENGTH ** 2 / TIME
Q_DIM = LENGTH
P_DIM = LENGTH * MASS / TIME
# constants of the oscillator and of the complex structure
CI_DIM = TIME / MASS
C1_DIM = MASS / TIME ** 2
C2_DIM = MASS.inverse()
ENERGY = MASS * LENGTH ** 2 / TIME ** 2
ANTIDERIVATIVE_DIM = TIME / (MASS * LENGTH ** 2)
# off-diagonal blocks of a symplectic matrix acting on (x, y)
B_BLOCK_DIM = MASS / TIME
C_BLOCK_DIM = TIME / MASS


class Quantity:
    """A value tagged with a :class:`Dimension`."""

    __slots__ = ("value", "dim")

    def __init__(self, value: Any, dim: Dimension = DIMENSIONLESS):
        if isinstance(value, Quantity):
            raise TypeError("nested Quantity")
        self.value = value
        self.dim = dim

    # arithmetic helpers -------------------------------------------------
    @staticmethod
    def _coerce(other) -> "Quantity":
        if isinstance(other, Quantity):
            return other
        return Quantity(other, DIMENSIONLESS)

    def _same_dim(self, other: "Quantity", op: str):
        if self.dim != other.dim:
            raise DimensionMismatch(
                f"cannot {op} quantities of dimension [{self.dim}] and [{other.dim}]")

    def __add__(self, other):
        o = self._coerce(other)
        self._same_dim(o, "add")
        return Quantity(self.value + o.value, self.dim)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        self._same_dim(o, "subtract")
        return Quantity(self.value - o.value, self.dim)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __neg__(self):
        return Quantity(-self.value, self.dim)

    def __pos__(self):
        return self

    def __mul__(self, other):
        o = self._coerce(other)
        return Quantity(self.value * o.value, self.dim * o.dim)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        return Quantity(self.value / o.value, self.dim / o.dim)

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __pow__(self, k):
        if isinstance(k, Quantity):
            k = assert_dimensionless(k)
        return Quantity(self.value ** k, self.dim ** _frac(k))

    def __eq__(self, other):
        if not isinstance(other, Quantity):
            return NotImplemented
        return self.dim == other.dim and np.all(self.value == other.value)

    def __hash__(self):
        return hash((self.dim, self.value))

    def __repr__(self):
        return f"Quantity({self.value!r}, [{self.dim}])"


def qty(value, dim: Dimension = DIMENSIONLESS) -> Quantity:
    return Quantity(value, dim)


def dim_of(a) -> Dimension:
    return a.dim if isinstance(a, Quantity) else DIMENSIONLESS


def value_of(a):
    return a.value if isinstance(a, Quantity) else a


def qty_add(a: Quantity, b: Quantity) -> Quantity:
    return Quantity._coerce(a) + b


def qty_mul(a: Quantity, b: Quantity) -> Quantity:
    return Quantity._coerce(a) * b


def assert_dimensionless(a):
    """Return the bare value of ``a`` if it is dimensionless."""
    if isinstance(a, Quantity):
        if not a.dim.is_dimensionless:
            raise DimensionMismatch(f"expected a dimensionless number, got [{a.dim}]")
        return a.value
    return a


def strip(a, dim: Dimension):
    """Raw mode entry point: check ``a`` against ``dim`` once, return the value.

    Plain numbers are accepted as already expressed in base units.
    """
    if isinstance(a, Quantity):
        if a.dim != dim:
            raise DimensionMismatch(f"expected [{dim}], got [{a.dim}]")
        return a.value
    return a


def _elementwise(fn_scalar, fn_array):
    def apply(a):
        v = assert_dimensionless(a)
        if isinstance(v, np.ndarray):
            out = fn_array(v)
        else:
            try:
                out = fn_scalar(v)
            except TypeError:
                out = fn_array(np.asarray(v))
        return Quantity(out) if isinstance(a, Quantity) else out
    return apply


def _cplx(real_fn, cplx_fn):
    def f(v):
        if isinstance(v, complex):
            return cplx_fn(v)
        return real_fn(v)
    return f


qexp = _elementwise(_cplx(math.exp, cmath.exp), np.exp)
qsin = _elementwise(_cplx(math.sin, cmath.sin), np.sin)
qcos = _elementwise(_cplx(math.cos, cmath.cos), np.cos)


def qsqrt(a):
    if isinstance(a, Quantity):
        return a ** Fraction(1, 2)
    return np.sqrt(a) if isinstance(a, np.ndarray) else a ** 0.5


# ---------------------------------------------------------------------------
# The implemented equation set, each written with dimensioned sample values.
# Every entry must evaluate without raising DimensionMismatch.


def _samples():
    return dict(
        s=qty(0.3, S_DIM), s2=qty(-0.2, S_DIM),
        x=qty(0.7, X_DIM), x2=qty(0.1, X_DIM),
        y=qty(-0.4, Y_DIM), y2=qty(0.9, Y_DIM),
        h=qty(1.3, H_DIM), q=qty(0.25, Q_DIM), p=qty(-0.6, P_DIM),
        ci=qty(1.0, CI_DIM), c1=qty(2.0, C1_DIM), c2=qty(0.5, C2_DIM),
        t=qty(0.8, TIME), dq=qty(0.01, Q_DIM), dp=qty(0.01, P_DIM),
        dx=qty(0.01, X_DIM), dy=qty(0.01, Y_DIM),
    )


def _eq_group_law(v):
    omega = v["x"] * v["y2"] - v["x2"] * v["y"]
    return (v["s"] + v["s2"] + omega / 2, v["x"] + v["x2"], v["y"] + v["y2"])


def _eq_symplectic_form(v):
    omega = v["x"] * v["y2"] - v["x2"] * v["y"]
    return omega + v["s"]


def _eq_coadjoint(v):
    return v["h"], v["q"] + v["h"] * v["y"], v["p"] - v["h"] * v["x"]


def _eq_representation(v):
    phase = qexp(-2j * math.pi * (v["h"] * v["s"] + v["q"] * v["x"] + v["p"] * v["y"]))
    return phase, v["q"] - v["h"] / 2 * v["y"], v["p"] + v["h"] / 2 * v["x"]


def _eq_derived_rep(v):
    dX = v["h"] / 2 / v["dp"] - 2j * math.pi * v["q"]
    dY = -v["h"] / 2 / v["dq"] - 2j * math.pi * v["p"]
    dS = -2j * math.pi * v["h"]
    # [dX, dY] and dS are both measured in the units of S
    return dX * dY - dY * dX + dS


def _eq_cauchy_riemann(v):
    h, ci = v["h"], v["ci"]
    d = h / 2 * (1 / v["dp"] + 1j * ci / v["dq"])
    return d + 2 * math.pi * (ci * v["p"] + 1j * v["q"])


def _eq_annihilation(v):
    h, ci = v["h"], v["ci"]
    return h / 2 * (1 / v["dp"] - 1j * ci / v["dq"]) + 2 * math.pi * (ci * v["p"] - 1j * v["q"])


def _eq_vacuum(v):
    return qexp(-2 * math.pi / v["h"] * (v["q"] ** 2 / v["ci"] + v["ci"] * v["p"] ** 2))


def _eq_inner_product(v):
    return (4 / v["h"]) * v["dq"] * v["dp"] + 1


def _eq_coherent_state(v):
    h, ci = v["h"], v["ci"]
    a = v["q"] - h / 2 * v["y"]
    b = v["p"] + h / 2 * v["x"]
    return qexp(-2j * math.pi * (v["q"] * v["x"] + v["p"] * v["y"])
                - 2 * math.pi / h * (a ** 2 / ci + ci * b ** 2))


def _eq_inverse_wavelet(v):
    return v["h"] * v["dx"] * v["dy"] + 1


def _eq_v0_transform(v):
    h, ci = v["h"], v["ci"]
    return qexp(2 * math.pi * (1j * h * v["s"] - h / 4 * (ci * v["x"] ** 2 + v["y"] ** 2 / ci)))


def _eq_coherent_transform(v):
    h, ci = v["h"], v["ci"]
    x, y, xp, yp = v["x"], v["y"], v["x2"], v["y2"]
    arg = 1j * h * (v["s"] - v["s2"] - (xp * y - x * yp) / 2) \
        - h / 4 * (ci * (x - xp) ** 2 + (y - yp) ** 2 / ci)
    return qexp(2 * math.pi * arg)


def _eq_gaussian_integral(v):
    # integrate over q: a ~ 1/L^2, b ~ 1/L
    a = 2 * math.pi / (v["h"] * v["ci"])
    b = 2j * math.pi * v["x"]
    return qsqrt(math.pi / a) * qexp(b ** 2 / (4 * a))


def _eq_twisted_phase(v):
    return qexp(1j * math.pi * v["h"] * (v["x"] * v["y2"] - v["y"] * v["x2"]))


def _eq_sin_kernel(v):
    omega = v["x"] * v["y2"] - v["y"] * v["x2"]
    sinker = 4 * math.pi / v["h"] * qsin(math.pi * v["h"] * omega)
    return sinker + 4 * math.pi ** 2 * omega


def _eq_antiderivative(v):
    # S has units inverse to s; S composed with the antiderivative is dimensionless
    S = qty(1.0, S_DIM.inverse())
    A = qty(1.0, ANTIDERIVATIVE_DIM)
    return S * A + 4 * math.pi ** 2


def _eq_energy(v):
    return (v["c1"] * v["q"] ** 2 + v["c2"] * v["p"] ** 2) / 2


def _eq_p_oscillator(v):
    w = qsqrt(v["c1"] * v["c2"])
    wt = w * v["t"]
    r = qsqrt(v["c1"] / v["c2"])
    return (v["x"] * qcos(wt) + r * v["y"] * qsin(wt),
            -v["x"] * qsin(wt) / r + v["y"] * qcos(wt))


def _eq_hamilton_flow(v):
    w = qsqrt(v["c1"] * v["c2"])
    wt = w * v["t"]
    return v["q"] * qcos(wt) + qsqrt(v["c2"] / v["c1"]) * v["p"] * qsin(wt)


def _eq_poisson_vs_moyal(v):
    f, g = v["q"], v["p"] ** 2
    poisson = (f / v["dq"]) * (g / v["dp"])
    moyal = 2 * math.pi / (1j * v["h"]) * f * g
    return poisson + moyal


def _eq_heisenberg(v):
    E = _eq_energy(v)
    rate = 2 * math.pi / (1j * v["h"]) * v["q"] * E
    return rate * v["t"] + v["q"]


def _eq_symplectic_map(v):
    b = qty(0.3, B_BLOCK_DIM)
    c = qty(-0.2, C_BLOCK_DIM)
    xn = 1.0 * v["x"] + b * v["y"]
    yn = c * v["x"] + 1.0 * v["y"]
    qn = 1.0 * v["q"] + c * v["p"]
    pn = b * v["q"] + 1.0 * v["p"]
    return xn, yn, qn, pn


def _eq_weyl_phase(v):
    return qexp(2j * math.pi * (v["q"] * v["x"] + v["p"] * v["y"]))


EQUATION_SET: Dict[str, Callable[[dict], Any]] = {
    "group law": _eq_group_law,
    "symplectic form": _eq_symplectic_form,
    "coadjoint action": _eq_coadjoint,
    "representation": _eq_representation,
    "derived representation": _eq_derived_rep,
    "Cauchy-Riemann operator": _eq_cauchy_riemann,
    "annihilation operator": _eq_annihilation,
    "vacuum": _eq_vacuum,
    "inner product": _eq_inner_product,
    "coherent state": _eq_coherent_state,
    "inverse wavelet measure": _eq_inverse_wavelet,
    "vacuum transform": _eq_v0_transform,
    "coherent state transform": _eq_coherent_transform,
    "Gaussian integral": _eq_gaussian_integral,
    "twisted convolution phase": _eq_twisted_phase,
    "sine kernel": _eq_sin_kernel,
    "antiderivative": _eq_antiderivative,
    "oscillator energy": _eq_energy,
    "p-oscillator flow": _eq_p_oscillator,
    "Hamilton flow": _eq_hamilton_flow,
    "Poisson vs Moyal units": _eq_poisson_vs_moyal,
    "Heisenberg equation": _eq_heisenberg,
    "symplectic map": _eq_symplectic_map,
    "Weyl phase": _eq_weyl_phase,
}


def check_equation_set() -> Dict[str, bool]:
    """Evaluate every formula of the equation set on dimensioned samples."""
    results = {}
    for name, fn in EQUATION_SET.items():
        try:
            fn(_samples())
            results[name] = True
        except DimensionMismatch:
            results[name] = False
    return results


def sample_quantities() -> dict:
    return _samples()


# ---------------------------------------------------------------------------
# Formulas that break the unit conventions; each must raise DimensionMismatch.

VIOLATIONS: Dict[str, Callable[[dict], Any]] = {
    "position plus momentum": lambda v: v["q"] + v["p"],
    "exp of a position": lambda v: qexp(v["q"]),
    "sine of a group coordinate": lambda v: qsin(v["x"]),
    "x plus y": lambda v: v["x"] + v["y"],
    "h plus s": lambda v: v["h"] + v["s"],
    "character without h": lambda v: qexp(-2j * math.pi * (v["s"] + v["q"] * v["x"]
                                                           + v["p"] * v["y"])),
    "vacuum without 1/h": lambda v: qexp(-2 * math.pi * (v["q"] ** 2 + v["p"] ** 2)),
    "energy with c2 q^2": lambda v: (v["c1"] * v["q"] ** 2 + v["c2"] * v["q"] ** 2) / 2,
    "twisted phase without h": lambda v: qexp(1j * math.pi * (v["x"] * v["y2"]
                                                              - v["y"] * v["x2"])),
    "coadjoint shift h x on q": lambda v: v["q"] + v["h"] * v["x"],
    "cos of a time": lambda v: v["q"] * qcos(v["t"]),
}


def check_violations() -> Dict[str, bool]:
    """True for every curated violation that the checker rejects."""
    results = {}
    for name, fn in VIOLATIONS.items():
        try:
            fn(_samples())
            results[name] = False
        except DimensionMismatch:
            results[name] = True
    return results
