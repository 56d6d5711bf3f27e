"""Discrete flat torus C^n / Z^(2n) and its spectral calculus.

The torus carries 2n real axes ordered (x_1, y_1, ..., x_n, y_n), each with
unit period and N sample points, so z_j = x_j + i y_j.  All differentiation
is done with Fourier multipliers:

    d_j     = (d/dx_j - i d/dy_j) / 2      (holomorphic derivative)
    d_jbar  = (d/dx_j + i d/dy_j) / 2      (antiholomorphic derivative)

The complex Hessian entry (a, b) of a real field u is u_{abar b} =
d_b d_abar u, which for a == b reduces to a quarter of the real Laplacian
in the (x_a, y_a) plane.  Nyquist modes of odd-order derivative factors are
zeroed; pure second derivatives along a single axis keep the Nyquist mode.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridMismatchError


@dataclass(frozen=True)
class Grid:
    """Periodic lattice on the flat torus of complex dimension n.

    n: complex dimension (1 or 2); N: samples per real axis.  Total point
    count is N**(2n).
    """

    n: int
    N: int

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError(f"complex dimension must be 1 or 2, got {self.n}")
        if self.N < 8 or self.N % 2 != 0:
            raise ValueError(f"N must be even and >= 8, got {self.N}")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * (2 * self.n)

    @property
    def num_points(self) -> int:
        return self.N ** (2 * self.n)

    def x_axis(self, j: int) -> int:
        """Real axis index of x_j (complex axes are 0-based)."""
        return 2 * j

    def y_axis(self, j: int) -> int:
        return 2 * j + 1

    def coordinates(self) -> list[np.ndarray]:
        """One broadcastable coordinate array per real axis, values in [0, 1)."""
        coords = []
        for axis in range(2 * self.n):
            x = np.arange(self.N) / self.N
            shape = [1] * (2 * self.n)
            shape[axis] = self.N
            coords.append(x.reshape(shape))
        return coords


@dataclass
class ScalarField:
    """Real periodic function sampled on a Grid (row-major)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != self.grid.shape:
            raise GridMismatchError(
                f"field shape {self.values.shape} != grid shape {self.grid.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("scalar field contains non-finite values")

    @classmethod
    def zeros(cls, grid: Grid) -> "ScalarField":
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def constant(cls, grid: Grid, value: float) -> "ScalarField":
        return cls(grid, np.full(grid.shape, float(value)))

    def mean(self) -> float:
        return float(np.mean(self.values))


@dataclass
class ComplexMatrixField:
    """Pointwise n x n complex matrix data; matrix axes are the trailing two.

    Entry [..., a, b] of a complex Hessian holds u_{abar b} = d_b d_abar u,
    so the matrix is pointwise Hermitian for real u.
    """

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        expected = self.grid.shape + (self.grid.n, self.grid.n)
        if self.values.shape != expected:
            raise GridMismatchError(
                f"matrix field shape {self.values.shape} != {expected}"
            )


class _Spectral:
    """Cached Fourier-multiplier arrays for one grid."""

    def __init__(self, grid: Grid):
        self.grid = grid
        n, N = grid.n, grid.N
        m = np.fft.fftfreq(N) * N  # integer wavenumbers, Nyquist at -N/2

        def along(axis, arr):
            shape = [1] * (2 * n)
            shape[axis] = N
            return arr.reshape(shape)

        # first derivative: 2*pi*i*m with the Nyquist mode zeroed
        d1m = 2j * np.pi * np.where(np.abs(m) == N // 2, 0.0, m)
        # pure second derivative keeps the Nyquist mode
        d2m = -4 * np.pi**2 * m**2
        self.d1 = [along(a, d1m) for a in range(2 * n)]
        self.d2 = [along(a, d2m) for a in range(2 * n)]

        # holomorphic derivative multipliers, one per complex axis
        self.holo = [
            0.5 * (self.d1[grid.x_axis(j)] - 1j * self.d1[grid.y_axis(j)])
            for j in range(n)
        ]
        self.antiholo = [
            0.5 * (self.d1[grid.x_axis(j)] + 1j * self.d1[grid.y_axis(j)])
            for j in range(n)
        ]

        # complex Hessian multipliers, entry (a, b) -> d_b d_abar
        self.hess = np.empty((n, n), dtype=object)
        for a in range(n):
            for b in range(n):
                if a == b:
                    mult = 0.25 * (self.d2[grid.x_axis(a)] + self.d2[grid.y_axis(a)])
                    mult = mult.astype(np.complex128)
                else:
                    mult = self.antiholo[a] * self.holo[b]
                self.hess[a, b] = mult


_SPECTRAL_CACHE: dict[tuple[int, int], _Spectral] = {}


def spectral(grid: Grid) -> _Spectral:
    key = (grid.n, grid.N)
    if key not in _SPECTRAL_CACHE:
        _SPECTRAL_CACHE[key] = _Spectral(grid)
    return _SPECTRAL_CACHE[key]


def complex_hessian(u: ScalarField) -> ComplexMatrixField:
    """Pointwise complex Hessian u_{abar b}, exact for band-limited u."""
    grid = u.grid
    sp = spectral(grid)
    n = grid.n
    uh = np.fft.fftn(u.values)
    out = np.empty(grid.shape + (n, n), dtype=np.complex128)
    for a in range(n):
        for b in range(n):
            out[..., a, b] = np.fft.ifftn(uh * sp.hess[a, b])
    return ComplexMatrixField(grid, out)


def _laplace_multiplier(grid: Grid, chi_inv: np.ndarray | None) -> np.ndarray:
    sp = spectral(grid)
    n = grid.n
    if chi_inv is None:
        chi_inv = np.eye(n)
    mult = np.zeros(grid.shape, dtype=np.complex128)
    # Delta = chi^{p qbar} d_p d_qbar, i.e. sum chi_inv[p, q] * hess[q, p]
    for p in range(n):
        for q in range(n):
            mult = mult + chi_inv[p, q] * sp.hess[q, p]
    return mult


def laplacian(u: ScalarField, chi_inv: np.ndarray | None = None) -> ScalarField:
    """Laplacian of the background metric; identity chi gives a quarter of
    the flat real Laplacian."""
    mult = _laplace_multiplier(u.grid, chi_inv)
    out = np.fft.ifftn(np.fft.fftn(u.values) * mult).real
    return ScalarField(u.grid, out)


def holo_derivative(u: ScalarField, j: int) -> np.ndarray:
    """d_j u as a complex array; the antiholomorphic derivative of a real
    field is its conjugate."""
    sp = spectral(u.grid)
    return np.fft.ifftn(np.fft.fftn(u.values) * sp.holo[j])


def third_derivatives(u: ScalarField) -> np.ndarray:
    """Covariant first derivatives of the evolving metric: the array
    T[..., p, r, s] = d_p d_s d_rbar u (chi is constant so covariant equals
    partial)."""
    grid = u.grid
    sp = spectral(grid)
    n = grid.n
    uh = np.fft.fftn(u.values)
    out = np.empty(grid.shape + (n, n, n), dtype=np.complex128)
    for p in range(n):
        for r in range(n):
            for s in range(n):
                mult = sp.holo[p] * sp.hess[r, s]
                out[..., p, r, s] = np.fft.ifftn(uh * mult)
    return out


def poisson_solve(rhs: ScalarField, chi_inv: np.ndarray | None = None) -> ScalarField:
    """Unique mean-zero phi with Delta phi = rhs (zero mode gauged to zero).

    The right-hand side must have mean zero to 1e-10; a violation usually
    signals a miscomputed compatibility constant.
    """
    m = rhs.mean()
    if abs(m) > 1e-10:
        raise ValueError(
            f"poisson_solve requires a mean-zero right-hand side; mean = {m:.6e}"
        )
    mult = _laplace_multiplier(rhs.grid, chi_inv)
    rh = np.fft.fftn(rhs.values)
    scale = np.max(np.abs(mult))
    inv = np.zeros_like(mult)
    ok = np.abs(mult) > 1e-12 * scale
    inv[ok] = 1.0 / mult[ok]
    out = np.fft.ifftn(rh * inv).real
    out -= np.mean(out)
    return ScalarField(rhs.grid, out)


def integrate(
    u: ScalarField,
    weight: ScalarField | None = None,
    det_chi: float = 1.0,
) -> float:
    """Integral of u * weight against the background volume form.

    Uniform-mean quadrature; spectrally accurate for smooth integrands.
    With the unit-period identity background the total volume is 1.
    """
    vals = u.values
    if weight is not None:
        if weight.grid != u.grid:
            raise GridMismatchError("integrate: weight on a different grid")
        vals = vals * weight.values
    return float(np.mean(vals) * det_chi)
