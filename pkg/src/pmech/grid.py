"""Numerical engine for n = 1 and a fixed h.

Phase-space functions live on an N x N lattice of (q, p) points and kernels
on the dual N x N lattice of (x, y) points; both are periodic and stored with
the origin at index N // 2.  Spacings satisfy dx = 1 / (N dq), dy = 1 / (N dp),
so exp(-2 pi i q x) is an exact root of unity on lattice pairs.

On a *commensurate* grid, L_q * L_p = h N / (8 m) for a positive integer m,
the shifts q - (h/2) y and p + (h/2) x of lattice points are whole multiples
(m per dual step) of the lattice spacing.  The representation of any dual
lattice point is then an exact phased permutation of samples; this is what
makes the finite model a genuine representation of the twisted convolution
algebra.  Kernel-only operations (twisted convolution, brackets) work on any
grid.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import BoxTooSmall, GridMismatch
from .units import H_DIM, LENGTH, P_DIM, strip

BOX_TOLERANCE = 1e-10


def gaussian_integral(a, b):
    """Integral over the real line of exp(-a t^2 + b t) for Re a > 0 (broadcasts)."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if np.any(a.real <= 0):
        raise ValueError("Gaussian integral needs Re a > 0")
    out = np.sqrt(np.pi / a) * np.exp(b * b / (4 * a))
    return complex(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Grid:
    N: int
    L_q: float
    L_p: float
    h: float

    def __post_init__(self):
        object.__setattr__(self, "L_q", float(strip(self.L_q, LENGTH)))
        object.__setattr__(self, "L_p", float(strip(self.L_p, P_DIM)))
        object.__setattr__(self, "h", float(strip(self.h, H_DIM)))
        N = int(self.N)
        if N < 4 or N & (N - 1):
            raise ValueError(f"N must be a power of two >= 4, got {self.N}")
        if self.L_q <= 0 or self.L_p <= 0:
            raise ValueError("box half-extents must be positive")

    @classmethod
    def for_h(cls, h: float, N: int = 64, m: int = 1) -> "Grid":
        """Square commensurate grid, L_q = L_p = sqrt(|h| N / (8 m))."""
        h = float(strip(h, H_DIM))
        if h == 0:
            raise ValueError("for_h needs h != 0")
        L = math.sqrt(abs(h) * N / (8 * m))
        return cls(N, L, L, h)

    def with_h(self, h: float) -> "Grid":
        return Grid(self.N, self.L_q, self.L_p, h)

    # lattice
    @property
    def c(self) -> int:
        return self.N // 2

    @property
    def dq(self) -> float:
        return 2 * self.L_q / self.N

    @property
    def dp(self) -> float:
        return 2 * self.L_p / self.N

    @property
    def dx(self) -> float:
        return 1.0 / (self.N * self.dq)

    @property
    def dy(self) -> float:
        return 1.0 / (self.N * self.dp)

    @property
    def q(self) -> np.ndarray:
        return (np.arange(self.N) - self.c) * self.dq

    @property
    def p(self) -> np.ndarray:
        return (np.arange(self.N) - self.c) * self.dp

    @property
    def x(self) -> np.ndarray:
        return (np.arange(self.N) - self.c) * self.dx

    @property
    def y(self) -> np.ndarray:
        return (np.arange(self.N) - self.c) * self.dy

    def phase_mesh(self):
        return np.meshgrid(self.q, self.p, indexing="ij")

    def dual_mesh(self):
        return np.meshgrid(self.x, self.y, indexing="ij")

    @property
    def m(self) -> Optional[int]:
        """Lattice steps per dual step of the shift, or None if incommensurate."""
        if self.h == 0:
            return None
        r = abs(self.h) * self.N / (8 * self.L_q * self.L_p)
        k = round(r)
        return k if k >= 1 and abs(r - k) < 1e-9 else None

    @property
    def commensurate(self) -> bool:
        return self.m is not None

    @property
    def weight(self) -> float:
        """Inner-product weight (4/h) dq dp of a single lattice cell."""
        return 4.0 / abs(self.h) * self.dq * self.dp

    def same_lattice(self, other: "Grid") -> bool:
        return (self.N == other.N and math.isclose(self.L_q, other.L_q, rel_tol=1e-12)
                and math.isclose(self.L_p, other.L_p, rel_tol=1e-12))

    def require_quantum(self):
        if self.h == 0:
            raise ValueError("this operation needs h != 0")

    def require_commensurate(self):
        self.require_quantum()
        if not self.commensurate:
            raise GridMismatch(
                "grid is not commensurate: need L_q * L_p = |h| N / (8 m) for integer m")

    def to_dict(self) -> dict:
        return {"N": self.N, "L_q": self.L_q, "L_p": self.L_p, "h": self.h}


def _check_same(a, b):
    if not a.grid.same_lattice(b.grid) or a.grid.h != b.grid.h:
        raise GridMismatch("operands live on different grids")


@dataclass(frozen=True, eq=False)
class GridField:
    grid: Grid
    data: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.data, dtype=complex)
        if d.shape != (self.grid.N, self.grid.N):
            raise GridMismatch(f"field shape {d.shape} does not match N={self.grid.N}")
        d.setflags(write=False)
        object.__setattr__(self, "data", d)

    def __add__(self, o):
        _check_same(self, o)
        return GridField(self.grid, self.data + o.data)

    def __sub__(self, o):
        _check_same(self, o)
        return GridField(self.grid, self.data - o.data)

    def __mul__(self, c):
        return GridField(self.grid, self.data * c)

    __rmul__ = __mul__

    def norm(self) -> float:
        return math.sqrt(max(inner_product(self, self).real, 0.0))

    def vector(self) -> np.ndarray:
        return self.data.ravel()


@dataclass(frozen=True, eq=False)
class GridKernel:
    """Sampled partial Fourier transform of a kernel on the dual lattice.

    ``h_independent`` marks kernels obtained by extension with delta(s): the
    same samples serve every value of h.
    """
    grid: Grid
    data: np.ndarray
    h_independent: bool = False

    def __post_init__(self):
        d = np.asarray(self.data, dtype=complex)
        if d.shape != (self.grid.N, self.grid.N):
            raise GridMismatch(f"kernel shape {d.shape} does not match N={self.grid.N}")
        d.setflags(write=False)
        object.__setattr__(self, "data", d)

    def __add__(self, o):
        _check_lattice(self, o)
        return GridKernel(self.grid, self.data + o.data, self.h_independent and o.h_independent)

    def __sub__(self, o):
        _check_lattice(self, o)
        return GridKernel(self.grid, self.data - o.data, self.h_independent and o.h_independent)

    def __mul__(self, c):
        return GridKernel(self.grid, self.data * c, self.h_independent)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1

    def l2(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.data) ** 2) * self.grid.dx * self.grid.dy))

    def on(self, grid: Grid) -> "GridKernel":
        """Same samples viewed on a grid with the same lattice but another h."""
        if not grid.same_lattice(self.grid):
            raise GridMismatch("lattices differ")
        return GridKernel(grid, self.data, self.h_independent)

    @classmethod
    def delta(cls, grid: Grid) -> "GridKernel":
        d = np.zeros((grid.N, grid.N), complex)
        d[grid.c, grid.c] = 1.0 / (grid.dx * grid.dy)
        return cls(grid, d, True)


def _check_lattice(a, b):
    if not a.grid.same_lattice(b.grid):
        raise GridMismatch("operands live on different lattices")


# ---------------------------------------------------------------------------
# spectral derivatives and shifts


def _wavenumbers(n: int, d: float) -> np.ndarray:
    k = 2j * np.pi * np.fft.fftfreq(n, d)
    if n % 2 == 0:
        k[n // 2] = 0.0  # Nyquist mode has no consistent real derivative
    return k


def d_dq(f: np.ndarray, grid: Grid) -> np.ndarray:
    k = _wavenumbers(grid.N, grid.dq)[:, None]
    return np.fft.ifft(k * np.fft.fft(f, axis=0), axis=0)


def d_dp(f: np.ndarray, grid: Grid) -> np.ndarray:
    k = _wavenumbers(grid.N, grid.dp)[None, :]
    return np.fft.ifft(k * np.fft.fft(f, axis=1), axis=1)


def _shift(f: np.ndarray, amount: float, spacing: float, axis: int) -> np.ndarray:
    """Samples of f(t - amount) along ``axis`` under periodic extension."""
    steps = amount / spacing
    r = round(steps)
    if abs(steps - r) < 1e-9:
        return np.roll(f, int(r), axis=axis)
    n = f.shape[axis]
    freq = np.fft.fftfreq(n)
    phase = np.exp(-2j * np.pi * freq * steps)
    shape = [1, 1]
    shape[axis] = n
    return np.fft.ifft(np.fft.fft(f, axis=axis) * phase.reshape(shape), axis=axis)


# ---------------------------------------------------------------------------
# representation on phase space


def _point_values(g):
    from .units import S_DIM, X_DIM, Y_DIM
    if hasattr(g, "s"):
        s = strip(g.s, S_DIM)
        x = strip(g.x[0], X_DIM)
        y = strip(g.y[0], Y_DIM)
        if len(g.x) != 1:
            raise GridMismatch("the numeric engine handles n = 1 only")
        return float(np.real(s)), float(np.real(x)), float(np.real(y))
    s, x, y = g
    return s, x, y


def rho_point(g, f: GridField) -> GridField:
    """rho_h(s, x, y) f (q, p) = exp(-2 pi i (h s + q x + p y)) f(q - h y / 2, p + h x / 2)."""
    grid = f.grid
    grid.require_quantum()
    s, x, y = _point_values(g)
    h = grid.h
    Q, P = grid.phase_mesh()
    shifted = _shift(f.data, h * y / 2, grid.dq, 0)
    shifted = _shift(shifted, -h * x / 2, grid.dp, 1)
    return GridField(grid, np.exp(-2j * np.pi * (h * s + Q * x + P * y)) * shifted)


def _vacuum_profile(grid: Grid, t: np.ndarray) -> np.ndarray:
    return np.exp(-(2 * np.pi / abs(grid.h)) * t ** 2)


def check_box(grid: Grid, tol: float = BOX_TOLERANCE):
    grid.require_quantum()
    edge = math.exp(-(2 * math.pi / abs(grid.h)) * min(grid.L_q, grid.L_p) ** 2)
    if edge > tol:
        raise BoxTooSmall(
            f"vacuum boundary value {edge:.2e} exceeds {tol:.0e}; enlarge N or the box")


def vacuum(grid: Grid, tol: float = BOX_TOLERANCE) -> GridField:
    check_box(grid, tol)
    Q, P = grid.phase_mesh()
    return GridField(grid, np.exp(-(2 * np.pi / abs(grid.h)) * (Q ** 2 + P ** 2)))


def coherent_state(grid: Grid, x: float, y: float, tol: float = BOX_TOLERANCE) -> GridField:
    """Left shift of the vacuum by (0, x, y)."""
    return rho_point((0.0, x, y), vacuum(grid, tol))


def coherent_state_closed_form(grid: Grid, x: float, y: float) -> GridField:
    """Closed-form Gaussian for the coherent state (no periodic wrap)."""
    h = grid.h
    Q, P = grid.phase_mesh()
    val = np.exp(-2j * np.pi * (Q * x + P * y)
                 - (2 * np.pi / abs(h)) * ((Q - h * y / 2) ** 2 + (P + h * x / 2) ** 2))
    return GridField(grid, val)


def inner_product(f1: GridField, f2: GridField) -> complex:
    _check_same(f1, f2)
    g = f1.grid
    return complex(np.sum(f1.data * np.conj(f2.data)) * g.weight)


def _orientation(g: Grid) -> complex:
    # the Fock space is holomorphic in p + i q for h > 0, antiholomorphic for h < 0
    return 1j if g.h > 0 else -1j


def fock_residual(f: GridField) -> float:
    """Norm of the Cauchy-Riemann type operator applied to f; zero on the Fock space."""
    g = f.grid
    g.require_quantum()
    Q, P = g.phase_mesh()
    a, i = abs(g.h) / 2, _orientation(g)
    D = a * (d_dp(f.data, g) + i * d_dq(f.data, g)) + 2 * np.pi * (P + i * Q) * f.data
    return GridField(g, D).norm()


def annihilate(f: GridField) -> GridField:
    g = f.grid
    g.require_quantum()
    Q, P = g.phase_mesh()
    a, i = abs(g.h) / 2, _orientation(g)
    out = a * (d_dp(f.data, g) - i * d_dq(f.data, g)) + 2 * np.pi * (P - i * Q) * f.data
    return GridField(g, out)


def creation(f: GridField) -> GridField:
    """Adjoint of ``annihilate`` for the phase-space inner product."""
    g = f.grid
    g.require_quantum()
    Q, P = g.phase_mesh()
    a, i = abs(g.h) / 2, _orientation(g)
    out = -a * (d_dp(f.data, g) + i * d_dq(f.data, g)) + 2 * np.pi * (P + i * Q) * f.data
    return GridField(g, out)


# ---------------------------------------------------------------------------
# coherent-state frame on the dual lattice


def _frame_factors(grid: Grid):
    """Separable pieces of every lattice coherent state.

    v_{kl}(q_i, p_j) = Eq[k, i] Ep[l, j] Gq[l, i] Gp[k, j]
    """
    grid.require_commensurate()
    check_box(grid)
    N, c, m = grid.N, grid.c, grid.m
    sign = 1 if grid.h > 0 else -1
    gq = _vacuum_profile(grid, grid.q)
    gp = _vacuum_profile(grid, grid.p)
    idx = np.arange(N) - c
    Gq = np.array([np.roll(gq, sign * i * m) for i in idx])
    Gp = np.array([np.roll(gp, -sign * i * m) for i in idx])
    Eq = np.exp(-2j * np.pi * np.outer(grid.x, grid.q))
    Ep = np.exp(-2j * np.pi * np.outer(grid.y, grid.p))
    return Eq, Ep, Gq, Gp


def wavelet_fwd(f: GridField) -> GridKernel:
    """Coherent-state transform: (x, y) -> <f, v_(x,y)> on the dual lattice."""
    g = f.grid
    Eq, Ep, Gq, Gp = _frame_factors(g)
    # W[k, j, l] = sum_p f[j, p] conj(Ep[l, p] Gp[k, p])
    W = np.einsum("jp,klp->kjl", f.data, np.conj(Ep[None, :, :] * Gp[:, None, :]), optimize=True)
    out = np.einsum("kj,lj,kjl->kl", np.conj(Eq), Gq, W, optimize=True)
    return GridKernel(g, out * g.weight)


def wavelet_inv(k: GridKernel) -> GridField:
    """h sum_{(x,y)} k(x, y) v_(x,y) dx dy."""
    g = k.grid
    Eq, Ep, Gq, Gp = _frame_factors(g)
    # T[k, i, j] = sum_l K[k, l] Gq[l, i] Ep[l, j]
    T = np.einsum("kl,li,lj->kij", k.data, Gq, Ep, optimize=True)
    out = np.einsum("ki,kj,kij->ij", Eq, Gp, T, optimize=True)
    return GridField(g, out * abs(g.h) * g.dx * g.dy)


def frame_matrix(grid: Grid) -> np.ndarray:
    """Columns are the flattened coherent states of every dual lattice point."""
    Eq, Ep, Gq, Gp = _frame_factors(grid)
    A = Eq[:, None, :] * Gq[None, :, :]        # (k, l, i)
    B = Ep[None, :, :] * Gp[:, None, :]        # (k, l, j)
    V = A[:, :, :, None] * B[:, :, None, :]    # (k, l, i, j)
    return V.reshape(grid.N * grid.N, grid.N * grid.N).T


def vacuum_transform_closed_form(grid: Grid) -> GridKernel:
    """<v0, v_(x,y)> = exp(-(pi h / 2)(x^2 + y^2))."""
    X, Y = grid.dual_mesh()
    return GridKernel(grid, np.exp(-(np.pi * abs(grid.h) / 2) * (X ** 2 + Y ** 2)))


def coherent_transform_closed_form(grid: Grid, x0: float, y0: float) -> GridKernel:
    """<v_(x0,y0), v_(x,y)> as a function of (x, y)."""
    X, Y = grid.dual_mesh()
    h = grid.h
    phase = np.exp(-1j * np.pi * h * (x0 * Y - X * y0))
    return GridKernel(grid, phase * np.exp(-(np.pi * abs(h) / 2) * ((X - x0) ** 2 + (Y - y0) ** 2)))


# ---------------------------------------------------------------------------
# twisted convolution and brackets


def _tw_parts(grid: Grid, h: float):
    N, c = grid.N, grid.c
    e_xy = np.exp(1j * np.pi * h * np.outer(grid.x, grid.y))     # [a, l]
    e_yx = np.exp(-1j * np.pi * h * np.outer(grid.y, grid.x))    # [j, b]
    bi = (np.arange(N)[:, None] - np.arange(N)[None, :] + c) % N  # [a, b]
    return e_xy, e_yx, bi


def _tw_first(k1: np.ndarray, e_xy: np.ndarray) -> np.ndarray:
    return np.fft.fft(e_xy[:, None, :] * k1[None, :, :], axis=2)


def _tw_second(k2: np.ndarray, bi: np.ndarray) -> np.ndarray:
    return np.fft.fft(np.fft.ifftshift(k2[bi], axes=2), axis=2)


def _tw_finish(C: np.ndarray, e_yx: np.ndarray, grid: Grid) -> np.ndarray:
    # R[a, j] = sum_b e_yx[j, b] C[a, b, j]
    Ct = np.ascontiguousarray(C.transpose(2, 0, 1))       # [j, a, b]
    R = np.matmul(Ct, e_yx[:, :, None])[:, :, 0]          # [j, a]
    return R.T * (grid.dx * grid.dy)


def _twisted_fast(k1: np.ndarray, k2: np.ndarray, grid: Grid, h: float) -> np.ndarray:
    plan = _TwistPlan(grid, h)
    return plan.finish(plan.first(k1) * plan.second(k2))


def _direct_sum(k1: np.ndarray, k2: np.ndarray, grid: Grid, kernel) -> np.ndarray:
    """Reference O(N^4) double sum of kernel(x y' - y x') k1(x', y') k2(x - x', y - y')."""
    N, c = grid.N, grid.c
    X, Y = grid.dual_mesh()
    x, y = grid.x, grid.y
    out = np.zeros((N, N), complex)
    for b in range(N):
        for l in range(N):
            w = k1[b, l]
            if w == 0:
                continue
            shifted = np.roll(np.roll(k2, b - c, axis=0), l - c, axis=1)
            out += w * kernel(X * y[l] - Y * x[b]) * shifted
    return out * grid.dx * grid.dy


def twisted_conv(k1: GridKernel, k2: GridKernel, h: Optional[float] = None,
                 method: str = "fast") -> GridKernel:
    """Twisted convolution with phase exp(pi i h (x y' - y x')); h defaults to the grid's."""
    _check_lattice(k1, k2)
    g = k1.grid
    h = g.h if h is None else float(h)
    if method == "direct":
        out = _direct_sum(k1.data, k2.data, g, lambda w: np.exp(1j * np.pi * h * w))
    elif method == "fast":
        out = _twisted_fast(k1.data, k2.data, g, h)
    else:
        raise ValueError(f"unknown method {method!r}")
    return GridKernel(g, out, k1.h_independent and k2.h_independent)


def plain_conv(k1: GridKernel, k2: GridKernel) -> GridKernel:
    """Periodic convolution by 2D FFT (the h = 0 case of ``twisted_conv``)."""
    _check_lattice(k1, k2)
    g = k1.grid
    f = np.fft.fft2(np.fft.ifftshift(k1.data)) * np.fft.fft2(np.fft.ifftshift(k2.data))
    return GridKernel(g, np.fft.fftshift(np.fft.ifft2(f)) * g.dx * g.dy)


def moyal_commutator(k1: GridKernel, k2: GridKernel, h: Optional[float] = None) -> GridKernel:
    """Sine-kernel commutator 2i sin(pi h (x y' - y x')) by direct summation."""
    _check_lattice(k1, k2)
    g = k1.grid
    h = g.h if h is None else float(h)
    out = _direct_sum(k1.data, k2.data, g, lambda w: 2j * np.sin(np.pi * h * w))
    return GridKernel(g, out)


def pbracket_grid(k1: GridKernel, k2: GridKernel, h: Optional[float] = None,
                  method: str = "fast") -> GridKernel:
    """Sine-kernel p-bracket (4 pi / h) sin(pi h (x y' - y x')); polynomial kernel at h = 0."""
    _check_lattice(k1, k2)
    g = k1.grid
    h = g.h if h is None else float(h)
    if h == 0:
        if method == "direct":
            out = _direct_sum(k1.data, k2.data, g, lambda w: 4 * np.pi ** 2 * w)
            return GridKernel(g, out)
        X, Y = g.dual_mesh()
        a = plain_conv(GridKernel(g, k1.data * Y), k2).data
        b = plain_conv(GridKernel(g, k1.data * X), k2).data
        return GridKernel(g, 4 * np.pi ** 2 * (X * a - Y * b))
    if method == "direct":
        out = _direct_sum(k1.data, k2.data, g, lambda w: (4 * np.pi / h) * np.sin(np.pi * h * w))
        return GridKernel(g, out)
    diff = twisted_conv(k1, k2, h, method).data - twisted_conv(k2, k1, h, method).data
    return GridKernel(g, diff * (2 * np.pi / (1j * h)))


class _TwistPlan:
    """Precomputed pieces of the fast twisted convolution at one value of h.

    When pi h dx dy = 2 pi s m / N for an integer m (a commensurate grid at its
    own h) the chirp exp(pi i h x y') is a whole-bin frequency shift, so the
    per-row FFTs of the first factor reduce to one FFT plus a gather.
    """

    def __init__(self, grid: Grid, h: float):
        self.grid = grid
        self.h = h
        N, c = grid.N, grid.c
        self.e_xy, self.e_yx, self.bi = _tw_parts(grid, h)
        r = h * grid.dx * grid.dy * N / 2
        self.shift = round(r) if r != 0 and abs(r - round(r)) < 1e-9 else None
        if self.shift is not None:
            A = np.arange(N) - c
            self.sign = np.where((self.shift * A) % 2 == 0, 1.0, -1.0)
            self.gather = (np.arange(N)[None, :] - self.shift * A[:, None]) % N

    def first(self, k1: np.ndarray) -> np.ndarray:
        if self.shift is None:
            return _tw_first(k1, self.e_xy)
        F = np.fft.fft(k1, axis=1)
        return self.sign[:, None, None] * F[:, self.gather].transpose(1, 0, 2)

    def second(self, k2: np.ndarray) -> np.ndarray:
        Gm = np.fft.fft(np.fft.ifftshift(k2, axes=1), axis=1)
        return Gm[self.bi]

    def finish(self, Chat: np.ndarray) -> np.ndarray:
        return _tw_finish(np.fft.ifft(Chat, axis=2), self.e_yx, self.grid)


class BracketWith:
    """Repeated p-brackets against one fixed kernel, caching its FFT pieces."""

    def __init__(self, E: GridKernel, h: Optional[float] = None):
        g = E.grid
        self.grid = g
        self.h = g.h if h is None else float(h)
        if self.h == 0:
            self._E = E
            return
        self.plan = _TwistPlan(g, self.h)
        self.first_E = self.plan.first(E.data)
        self.second_E = self.plan.second(E.data)

    def __call__(self, f: np.ndarray) -> np.ndarray:
        """pbracket(f, E) on raw sample arrays."""
        if self.h == 0:
            return pbracket_grid(GridKernel(self.grid, f), self._E, 0.0).data
        pl = self.plan
        C = pl.first(f) * self.second_E - self.first_E * pl.second(f)
        return pl.finish(C) * (2 * np.pi / (1j * self.h))


# ---------------------------------------------------------------------------
# integrated representation


def _perm_indices(grid: Grid):
    """Row shift per dual y index and column shift per dual x index."""
    m = grid.m
    sign = 1 if grid.h > 0 else -1
    idx = np.arange(grid.N) - grid.c
    return sign * idx * m, -sign * idx * m


def apply_kernel(k: GridKernel, f) -> np.ndarray:
    """rho_h(k) applied to one field (N, N) or a stack (B, N, N), matrix free."""
    g = k.grid
    g.require_commensurate()
    data = f.data if isinstance(f, GridField) else np.asarray(f, dtype=complex)
    single = data.ndim == 2
    F = data[None] if single else data
    N = g.N
    qs, ps = _perm_indices(g)
    eq = np.exp(-2j * np.pi * np.outer(g.q, g.x))   # [i, k]
    ep = np.exp(-2j * np.pi * np.outer(g.p, g.y))   # [j, l]
    # summing over the dual x index is a circular convolution along p:
    # F[i, j - ps[k]] weighted by K[k, l] exp(-2 pi i q_i x_k)
    tpos = ps % N
    out = np.zeros_like(F)
    K = k.data
    for l in range(N):
        if not np.any(K[:, l]):
            continue
        Fl = np.roll(F, qs[l], axis=1)              # f(q - shift_l, .)
        r = np.zeros((N, N), complex)
        np.add.at(r.T, tpos, (eq * K[None, :, l]).T)
        conv = np.fft.ifft(np.fft.fft(Fl, axis=2) * np.fft.fft(r, axis=1)[None], axis=2)
        out += conv * ep[None, None, :, l]
    out *= g.dx * g.dy
    return out[0] if single else out


def rho_dense(k: GridKernel) -> np.ndarray:
    """Dense N^2 x N^2 matrix of rho_h(k) on flattened fields (row-major q, p)."""
    g = k.grid
    g.require_commensurate()
    N = g.N
    qs, ps = _perm_indices(g)
    I, J = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    Q, P = g.phase_mesh()
    rows = (I * N + J).ravel()
    M = np.zeros((N * N, N * N), complex)
    for a in range(N):
        for b in range(N):
            w = k.data[a, b]
            if w == 0:
                continue
            src = (((I - qs[b]) % N) * N + (J - ps[a]) % N).ravel()
            ph = np.exp(-2j * np.pi * (Q * g.x[a] + P * g.y[b])).ravel()
            M[rows, src] += w * ph
    return M * g.dx * g.dy


def fock_basis(grid: Grid, K: int = 8, squeeze: float = 0.0) -> np.ndarray:
    """Orthonormal (for ``inner_product``) basis of z^n exp(beta z^2) v0, n < K.

    z = p + i q.  With ``squeeze`` = 0 this is the standard Fock basis; a
    nonzero value t in (-1, 1) uses beta = 2 pi t / h, which spans the lowest
    K levels of a squeezed quadratic Hamiltonian (see ``squeeze_parameter``).
    Returned as an (N^2, K) array of flattened fields.
    """
    v0 = vacuum(grid).data
    Q, P = grid.phase_mesh()
    z = (P + 1j * Q) if grid.h > 0 else (P - 1j * Q)
    g = v0 * np.exp((2 * np.pi * squeeze / abs(grid.h)) * z ** 2)
    cols = np.array([(z ** n * g).ravel() for n in range(K)]).T
    sw = math.sqrt(grid.weight)
    Qm, R = np.linalg.qr(cols * sw)
    Qm = Qm * (np.sign(np.diag(R).real)[None, :] + (np.diag(R).real == 0))
    return Qm / sw


def squeeze_parameter(c1: float, c2: float) -> float:
    """t for which exp((2 pi t / h) z^2) v0 is the ground state of (c1 q^2 + c2 p^2) / 2."""
    r1, r2 = math.sqrt(c1), math.sqrt(c2)
    return -(r2 - r1) / (r2 + r1)


class FockOperator:
    """Operator on phase-space fields, either dense on all N^2 samples or
    compressed to an orthonormal basis (``matrix`` is then K x K with entries
    <A e_j, e_i>)."""

    def __init__(self, grid: Grid, matrix: np.ndarray, basis: Optional[np.ndarray] = None):
        self.grid = grid
        self.matrix = np.asarray(matrix, dtype=complex)
        self.basis = basis
        n = self.matrix.shape[0]
        expect = grid.N ** 2 if basis is None else basis.shape[1]
        if self.matrix.shape != (expect, expect) or n != expect:
            raise GridMismatch(f"matrix shape {self.matrix.shape} does not match {expect}")

    def _like(self, m):
        return FockOperator(self.grid, m, self.basis)

    def _check(self, o):
        if not isinstance(o, FockOperator):
            raise TypeError("expected a FockOperator")
        if self.matrix.shape != o.matrix.shape or not self.grid.same_lattice(o.grid):
            raise GridMismatch("operators act on different spaces")

    def __add__(self, o):
        self._check(o)
        return self._like(self.matrix + o.matrix)

    def __sub__(self, o):
        self._check(o)
        return self._like(self.matrix - o.matrix)

    def __mul__(self, c):
        return self._like(self.matrix * c)

    __rmul__ = __mul__

    def __matmul__(self, o):
        self._check(o)
        return self._like(self.matrix @ o.matrix)

    def commutator(self, o) -> "FockOperator":
        return self @ o - o @ self

    def adjoint(self) -> "FockOperator":
        return self._like(self.matrix.conj().T)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def identity(cls, grid: Grid, basis: Optional[np.ndarray] = None) -> "FockOperator":
        n = grid.N ** 2 if basis is None else basis.shape[1]
        return cls(grid, np.eye(n), basis)

    def apply(self, f: GridField) -> GridField:
        if self.basis is not None:
            c = self.basis.conj().T @ f.vector() * self.grid.weight
            return GridField(self.grid, (self.basis @ (self.matrix @ c)).reshape(f.data.shape))
        return GridField(self.grid, (self.matrix @ f.vector()).reshape(f.data.shape))

    def compress(self, basis: np.ndarray) -> "FockOperator":
        if self.basis is not None:
            raise GridMismatch("operator is already compressed")
        return FockOperator(self.grid, basis.conj().T @ self.matrix @ basis * self.grid.weight, basis)

    def eigvalsh(self) -> np.ndarray:
        return np.linalg.eigvalsh((self.matrix + self.matrix.conj().T) / 2)

    def rel_error(self, o) -> float:
        self._check(o)
        den = np.linalg.norm(o.matrix)
        return float(np.linalg.norm(self.matrix - o.matrix) / (den if den else 1.0))

    def save(self, path: str):
        """Text layout: a JSON header line, then one row per matrix row of re,im pairs."""
        with open(path, "w") as fh:
            head = {"kind": "FockOperator", **self.grid.to_dict(), "dim": self.dim,
                    "compressed": self.basis is not None}
            fh.write(json.dumps(head, sort_keys=True) + "\n")
            for row in self.matrix:
                fh.write(",".join(f"{v.real:.17g},{v.imag:.17g}" for v in row) + "\n")

    @classmethod
    def load(cls, path: str, basis: Optional[np.ndarray] = None) -> "FockOperator":
        with open(path) as fh:
            head = json.loads(fh.readline())
            rows = [np.array([float(t) for t in line.split(",")]) for line in fh if line.strip()]
        M = np.array([r[0::2] + 1j * r[1::2] for r in rows])
        grid = Grid(head["N"], head["L_q"], head["L_p"], head["h"])
        if head.get("compressed") and basis is None:
            basis = fock_basis(grid, head["dim"])
        return cls(grid, M, basis)


def rho_kernel(k: GridKernel, basis: Optional[np.ndarray] = None) -> FockOperator:
    """rho_h(k) as a FockOperator: dense, or compressed onto ``basis``."""
    g = k.grid
    if basis is None:
        return FockOperator(g, rho_dense(k))
    stack = basis.T.reshape(-1, g.N, g.N)
    images = apply_kernel(k, stack).reshape(basis.shape[1], -1).T
    return FockOperator(g, basis.conj().T @ images * g.weight, basis)


def spectral_resample(k: GridKernel, Xn: np.ndarray, Yn: np.ndarray) -> np.ndarray:
    """Trigonometric interpolation of kernel samples at arbitrary points.

    Points outside the box get 0 rather than a value from a periodic copy.
    """
    g = k.grid
    N = g.N
    Xn, Yn = np.asarray(Xn, dtype=float), np.asarray(Yn, dtype=float)
    inside = (np.abs(Xn) <= N * g.dx / 2) & (np.abs(Yn) <= N * g.dy / 2)
    coef = np.fft.fft2(np.fft.ifftshift(k.data)) / (N * N)
    fr = np.fft.fftfreq(N, 1.0 / N)
    Ax = np.exp(2j * np.pi * np.outer(Xn[inside], fr / (N * g.dx)))
    Ay = np.exp(2j * np.pi * np.outer(Yn[inside], fr / (N * g.dy)))
    out = np.zeros(Xn.shape, complex)
    out[inside] = np.einsum("nu,uv,nv->n", Ax, coef, Ay, optimize=True)
    return out


# ---------------------------------------------------------------------------
# classical-side Fourier maps


def fourier_matrix(grid: Grid):
    """Matrices for c(q, p) -> sum c exp(2 pi i (q x + p y)) dq dp and back."""
    Fx = np.exp(2j * np.pi * np.outer(grid.x, grid.q))
    Fy = np.exp(2j * np.pi * np.outer(grid.y, grid.p))
    return Fx, Fy


def field_to_kernel(c: np.ndarray, grid: Grid) -> np.ndarray:
    Fx, Fy = fourier_matrix(grid)
    return grid.dq * grid.dp * (Fx @ c @ Fy.T)


def kernel_to_field(k: np.ndarray, grid: Grid) -> np.ndarray:
    Fx, Fy = fourier_matrix(grid)
    return grid.dx * grid.dy * (Fx.conj().T @ k @ Fy.conj())


# ---------------------------------------------------------------------------
# text I/O


def _header(obj) -> dict:
    kind = "GridField" if isinstance(obj, GridField) else "GridKernel"
    return {"kind": kind, **obj.grid.to_dict()}


def to_json(obj) -> str:
    """JSON layout: header keys N, L_q, L_p, h, kind; ``data`` is row-major [re, im] pairs."""
    d = _header(obj)
    d["data"] = [[float(v.real), float(v.imag)] for v in obj.data.ravel()]
    if isinstance(obj, GridKernel):
        d["h_independent"] = obj.h_independent
    return json.dumps(d, sort_keys=True)


def from_json(text: str):
    d = json.loads(text)
    grid = Grid(d["N"], d["L_q"], d["L_p"], d["h"])
    arr = np.array([a + 1j * b for a, b in d["data"]]).reshape(grid.N, grid.N)
    if d["kind"] == "GridField":
        return GridField(grid, arr)
    return GridKernel(grid, arr, d.get("h_independent", False))


def to_csv(obj) -> str:
    """CSV layout: '# kind,N,L_q,L_p,h' header, then N rows of re,im pairs."""
    h = _header(obj)
    lines = [f"# {h['kind']},{h['N']},{h['L_q']!r},{h['L_p']!r},{h['h']!r}"]
    for row in obj.data:
        lines.append(",".join(f"{v.real:.17g},{v.imag:.17g}" for v in row))
    return "\n".join(lines) + "\n"


def from_csv(text: str):
    lines = [ln for ln in text.splitlines() if ln.strip()]
    kind, N, Lq, Lp, h = lines[0].lstrip("# ").split(",")
    grid = Grid(int(N), float(Lq), float(Lp), float(h))
    rows = [np.array([float(t) for t in ln.split(",")]) for ln in lines[1:]]
    arr = np.array([r[0::2] + 1j * r[1::2] for r in rows])
    return GridField(grid, arr) if kind == "GridField" else GridKernel(grid, arr)


def correspondence_errors(k1: GridKernel, k2: GridKernel, hs, zero_tol: float = 1e-3) -> dict:
    """Distance of pbracket_grid at each h from the h = 0 bracket, all on the
    lattice of ``k1``, with the least-squares log-log slope of the relative
    errors.  When the h = 0 bracket is below ``zero_tol`` times |k1| |k2| there
    is nothing to fit and the slope is NaN."""
    hs = [float(h) for h in hs]
    if len(hs) < 3:
        raise ValueError("need at least three values of h for a slope")
    if any(h <= 0 for h in hs) or sorted(hs, reverse=True) != hs or len(set(hs)) != len(hs):
        raise ValueError("h values must be positive and strictly decreasing")
    ref = pbracket_grid(k1, k2, 0.0)
    scale = ref.l2()
    brackets = [pbracket_grid(k1, k2, h) for h in hs]
    absolute = [(b - ref).l2() for b in brackets]
    degenerate = scale <= zero_tol * k1.l2() * k2.l2()
    if degenerate:
        relative = [float("nan")] * len(hs)
        slope = float("nan")
    else:
        relative = [a / scale for a in absolute]
        slope = float(np.polyfit(np.log(hs), np.log(relative), 1)[0])
    return {"h": hs, "errors": relative, "abs_errors": [float(a) for a in absolute],
            "bracket_l2": [float(b.l2()) for b in brackets],
            "reference_l2": float(scale), "slope": slope}
