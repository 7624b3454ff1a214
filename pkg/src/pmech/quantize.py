"""Quantisation and dequantisation pipelines.

W0   classical symbol -> function on Omega (Fourier transform)
E    function on Omega -> kernel on the group (tensor with delta(s))
rho  kernel -> operator (``grid.rho_kernel``)
W_r  operator -> function on Omega (reduced coherent-state transform)
M_r  function on Omega -> operator (integrated representation)

Normalisation of the reduced pair.  On the finite lattice the coherent states
span a subspace with projector P (the coherent-state quadrature of the
identity).  The literal transform h sum <A v_z', v_(z z')> dx dy equals
tr(rho(-z) A P); it is divided by the measured constant
``kappa = h dx dy tr(P)`` and multiplied by h, which makes W_r(rho(k)) = k and
M_r(a) = sum a(z) rho(z) dx dy an exact left inverse.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Mapping, Optional, Tuple

import numpy as np
import sympy as sp

from . import grid as G
from .errors import GridMismatch, NotConvolution
from .symbolic import (TAU, EnvElement, PolySymbol, mechanise, symmetrized)

NOT_CONVOLUTION_THRESHOLD = 0.05


@dataclass(frozen=True)
class OmegaFunction:
    """Function on Omega = H/Z: either exact delta-derivative data or grid samples.

    ``delta_terms`` maps (B, C) to the coefficient of delta^(B)(x) delta^(C)(y).
    """
    n: int = 1
    delta_terms: Optional[Dict[Tuple[Tuple[int, ...], Tuple[int, ...]], sp.Expr]] = None
    kernel: Optional[G.GridKernel] = None

    @property
    def symbolic(self) -> bool:
        return self.kernel is None


def sample_symbol(c: PolySymbol, grid: G.Grid, values: Optional[Mapping] = None) -> np.ndarray:
    Q, P = grid.phase_mesh()
    return np.asarray(c.evaluate(Q, P, values) + 0 * Q, dtype=complex)


def classical_wavelet_W0(c, grid: Optional[G.Grid] = None,
                         values: Optional[Mapping] = None) -> OmegaFunction:
    """Fourier transform of a classical observable.

    A PolySymbol gives exact delta-derivative data; a GridField (or a
    PolySymbol together with a grid) gives sampled kernel values.
    """
    if isinstance(c, PolySymbol) and grid is None:
        terms = {}
        for (B, C), v in c.terms.items():
            terms[(B, C)] = sp.expand(v * TAU ** (-(sum(B) + sum(C))))
        return OmegaFunction(c.n, terms)
    if isinstance(c, PolySymbol):
        data = sample_symbol(c, grid, values)
    elif isinstance(c, G.GridField):
        grid, data = c.grid, c.data
    else:
        data = np.asarray(c, dtype=complex)
        if grid is None:
            raise ValueError("raw samples need a grid")
    return OmegaFunction(1, kernel=G.GridKernel(grid, G.field_to_kernel(data, grid)))


def extend_E(a: OmegaFunction):
    """Extension by delta(s): EnvElement for exact data, h-independent kernel for samples."""
    if a.symbolic:
        out = EnvElement(a.n)
        for (B, C), v in (a.delta_terms or {}).items():
            out = out + symmetrized(B, C) * (v * (-1) ** (sum(B) + sum(C)))
        return out
    k = a.kernel
    return G.GridKernel(k.grid, k.data, h_independent=True)


def weyl_kernel(c: PolySymbol, grid: G.Grid, values: Optional[Mapping] = None) -> G.GridKernel:
    return extend_E(classical_wavelet_W0(c, grid, values))


def weyl_quantize(c: PolySymbol, grid: G.Grid, basis: Optional[np.ndarray] = None,
                  values: Optional[Mapping] = None) -> G.FockOperator:
    """rho_h of the sampled kernel of c; dense, or compressed onto ``basis``."""
    grid.require_commensurate()
    return G.rho_kernel(weyl_kernel(c, grid, values), basis)


# ---------------------------------------------------------------------------
# the derived-representation path


def d_rho(grid: G.Grid, which: str, f: np.ndarray) -> np.ndarray:
    """Derived representation of S, X or Y on a field sample array."""
    h = grid.h
    Q, P = grid.phase_mesh()
    if which == "S":
        return -2j * np.pi * h * f
    if which == "X":
        return (h / 2) * G.d_dp(f, grid) - 2j * np.pi * Q * f
    if which == "Y":
        return -(h / 2) * G.d_dq(f, grid) - 2j * np.pi * P * f
    raise ValueError(which)


def apply_env(k: EnvElement, f: np.ndarray, grid: G.Grid,
              values: Optional[Mapping] = None) -> np.ndarray:
    """rho_h(S^a X^b Y^c) = d_rho(S)^a d_rho(X)^b d_rho(Y)^c, summed over terms."""
    if k.n != 1:
        raise GridMismatch("the numeric engine handles n = 1 only")
    out = np.zeros_like(f, dtype=complex)
    for (a, B, C), v in k.numeric_terms(values).items():
        g = f.astype(complex)
        for _ in range(C[0]):
            g = d_rho(grid, "Y", g)
        for _ in range(B[0]):
            g = d_rho(grid, "X", g)
        g = g * (-2j * np.pi * grid.h) ** a
        out += v * g
    return out


def weyl_quantize_symbolic(c: PolySymbol, grid: G.Grid, basis: np.ndarray,
                           values: Optional[Mapping] = None) -> G.FockOperator:
    """rho_h o E o W0 through the derived representation, compressed onto ``basis``."""
    k = mechanise(c)
    N = grid.N
    cols = [apply_env(k, basis[:, j].reshape(N, N), grid, values).ravel()
            for j in range(basis.shape[1])]
    images = np.array(cols).T
    return G.FockOperator(grid, basis.conj().T @ images * grid.weight, basis)


# ---------------------------------------------------------------------------
# coherent-state quadrature and the reduced transform


def _require_dense(A: G.FockOperator):
    if A.basis is not None:
        raise GridMismatch("this operation needs a dense (uncompressed) operator")


def span_projector(grid: G.Grid) -> np.ndarray:
    """P = h sum_z |v_z><v_z| dx dy as a dense matrix on flattened fields."""
    V = G.frame_matrix(grid)
    return abs(grid.h) * grid.dx * grid.dy * grid.weight * (V @ V.conj().T)


def reproducing_constant(grid: G.Grid) -> float:
    """kappa = h dx dy tr(P); equals (2m)^2 on a grid with m lattice steps per shift."""
    V = G.frame_matrix(grid)
    tr = abs(grid.h) * grid.dx * grid.dy * grid.weight * np.sum(np.abs(V) ** 2)
    return float(abs(grid.h) * grid.dx * grid.dy * tr)


def _point_op(grid: G.Grid, a: int, b: int):
    """(src index, phase) with (rho(x_a, y_b) f)[r] = phase[r] f[src[r]] on flat fields."""
    N = grid.N
    qs, ps = G._perm_indices(grid)
    I, J = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    Q, P = grid.phase_mesh()
    src = (((I - qs[b]) % N) * N + (J - ps[a]) % N).ravel()
    ph = np.exp(-2j * np.pi * (Q * grid.x[a] + P * grid.y[b])).ravel()
    return src, ph


def _traces(grid: G.Grid, B: np.ndarray) -> np.ndarray:
    """T[a, b] = tr(rho(-(x_a, y_b)) B) for every dual lattice point."""
    N = grid.N
    rows = np.arange(N * N)
    out = np.zeros((N, N), complex)
    for a in range(N):
        for b in range(N):
            src, ph = _point_op(grid, (N - a) % N, (N - b) % N)
            out[a, b] = np.sum(ph * B[src, rows])
    return out


def reduced_wavelet_Wr(A: G.FockOperator, projector: Optional[np.ndarray] = None) -> OmegaFunction:
    """Reduced coherent-state transform of a dense operator."""
    _require_dense(A)
    grid = A.grid
    P = span_projector(grid) if projector is None else projector
    literal = _traces(grid, A.matrix @ P)
    kappa = abs(grid.h) * grid.dx * grid.dy * np.trace(P).real
    return OmegaFunction(1, kernel=G.GridKernel(grid, literal * abs(grid.h) / kappa))


def inverse_Mr(a: OmegaFunction, grid: Optional[G.Grid] = None,
               basis: Optional[np.ndarray] = None) -> G.FockOperator:
    """sum a(x, y) rho_h(0, x, y) dx dy."""
    k = a.kernel
    if k is None:
        raise GridMismatch("inverse_Mr needs sampled data")
    if grid is not None:
        k = k.on(grid)
    return G.rho_kernel(k, basis)


def roundtrip_residual(A: G.FockOperator, projector: Optional[np.ndarray] = None) -> float:
    back = inverse_Mr(reduced_wavelet_Wr(A, projector))
    return back.rel_error(A)


def classical_limit(A: G.FockOperator, projector: Optional[np.ndarray] = None,
                    threshold: float = NOT_CONVOLUTION_THRESHOLD) -> G.GridField:
    """rho_(q,p) o E o W_r: inverse Fourier transform of the reduced transform.

    Raises NotConvolution when A is not reproduced by M_r o W_r.
    """
    a = reduced_wavelet_Wr(A, projector)
    res = inverse_Mr(a).rel_error(A)
    if res > threshold:
        raise NotConvolution(f"operator is not a convolution: roundtrip residual {res:.3g}")
    grid = A.grid
    return G.GridField(grid, G.kernel_to_field(a.kernel.data, grid))


# ---------------------------------------------------------------------------
# Berezin symbols and the trace


def berezin_covariant(A: G.FockOperator, x: float, y: float) -> complex:
    """<A v_(x,y), v_(x,y)>."""
    v = G.coherent_state(A.grid, x, y)
    return G.inner_product(A.apply(v), v)


def berezin_covariant_lattice(A: G.FockOperator) -> np.ndarray:
    """Covariant symbol at every dual lattice point."""
    _require_dense(A)
    grid = A.grid
    V = G.frame_matrix(grid)
    vals = np.einsum("ij,ij->j", np.conj(V), A.matrix @ V) * grid.weight
    return vals.reshape(grid.N, grid.N)


def berezin_contravariant(a, grid: G.Grid, c: float = 1.0) -> G.FockOperator:
    """c h sum a(x, y) P_(x,y) dx dy with P the coherent-state projection.

    ``a`` is an (N, N) sample array, a GridKernel or an OmegaFunction.
    """
    if isinstance(a, OmegaFunction):
        a = a.kernel.data
    elif isinstance(a, G.GridKernel):
        a = a.data
    a = np.asarray(a, dtype=complex) * np.ones((grid.N, grid.N))
    V = G.frame_matrix(grid)
    M = (V * a.ravel()[None, :]) @ V.conj().T
    return G.FockOperator(grid, c * abs(grid.h) * grid.dx * grid.dy * grid.weight * M)


def trace_coherent(A: G.FockOperator) -> complex:
    """h sum <A v_z, v_z> dx dy over the dual lattice."""
    grid = A.grid
    if A.basis is not None:
        return complex(np.trace(A.matrix))
    cov = berezin_covariant_lattice(A)
    return complex(abs(grid.h) * grid.dx * grid.dy * np.sum(cov))


def trace_on_span(A: G.FockOperator, projector: Optional[np.ndarray] = None) -> complex:
    """Matrix trace of A compressed to the coherent-state span (orthonormal eigenbasis of P)."""
    _require_dense(A)
    grid = A.grid
    P = span_projector(grid) if projector is None else projector
    evals, evecs = np.linalg.eigh((P + P.conj().T) / 2)
    U = evecs[:, evals > 0.5]
    return complex(np.trace(U.conj().T @ A.matrix @ U))


# ---------------------------------------------------------------------------
# independent oracle for the oscillator ground level


def hermite_oscillator_levels(hbar: float, c1: float = 1.0, c2: float = 1.0,
                              size: int = 60, count: int = 5) -> np.ndarray:
    """Lowest levels of (c1 q^2 + c2 p^2)/2 from truncated ladder matrices."""
    n = np.arange(1, size)
    a = np.diag(np.sqrt(n), 1)
    q = np.sqrt(hbar / 2) * (a + a.T)
    p = 1j * np.sqrt(hbar / 2) * (a.T - a)
    H = (c1 * q @ q + c2 * p @ p) / 2
    return np.linalg.eigvalsh(H)[:count]
