"""Pointwise algebra of the evolving metric.

Builds the endomorphism h^i_j = chi^{i kbar} (chi_{kbar j} + u_{kbar j}),
its determinant, trace, eigenvalues and inverse metric, plus the
linearized-operator coefficient and the Aubin-Yau inequality checker.

Matrix convention: index [a, b] carries subscript (abar, b), so the
evolving metric is stored as G[..., a, b] = g_{abar b} (an ordinary
Hermitian matrix) and the inverse metric as Ginv[..., j, k] = g^{j kbar}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AdmissibilityError, ParabolicityError
from .geometry import (
    ComplexMatrixField,
    Grid,
    ScalarField,
    complex_hessian,
    third_derivatives,
)

# Eigenvalues at or below this floor reject the state; guards the
# maximum-principle invariants against roundoff.
ADMISSIBILITY_FLOOR = 1e-10


@dataclass(frozen=True)
class BackgroundMetric:
    """Constant Hermitian positive background chi with cached inverse,
    determinant, and inverse square root (for the eigenvalue transform)."""

    chi: np.ndarray
    chi_inv: np.ndarray
    det_chi: float
    chi_isqrt: np.ndarray

    @classmethod
    def from_matrix(cls, chi) -> "BackgroundMetric":
        chi = np.asarray(chi, dtype=np.complex128)
        n = chi.shape[0]
        if chi.shape != (n, n):
            raise ValueError(f"chi must be square, got shape {chi.shape}")
        if not np.allclose(chi, chi.conj().T, rtol=0, atol=1e-13):
            raise ValueError("chi must be Hermitian")
        w, v = np.linalg.eigh(chi)
        if np.min(w) <= 0:
            raise ValueError(f"chi must be positive definite; eigenvalues {w}")
        chi_inv = (v * (1.0 / w)) @ v.conj().T
        chi_isqrt = (v * (1.0 / np.sqrt(w))) @ v.conj().T
        return cls(chi, chi_inv, float(np.prod(w)), chi_isqrt)

    @classmethod
    def identity(cls, n: int) -> "BackgroundMetric":
        return cls.from_matrix(np.eye(n))

    @property
    def n(self) -> int:
        return self.chi.shape[0]


def _eigvals_hermitian(S: np.ndarray, n: int) -> np.ndarray:
    """Ascending eigenvalues of pointwise Hermitian 1x1 or 2x2 matrices,
    via closed form."""
    if n == 1:
        return S[..., 0, 0].real[..., None]
    a = S[..., 0, 0].real
    d = S[..., 1, 1].real
    b = S[..., 0, 1]
    half_tr = 0.5 * (a + d)
    disc = np.sqrt((0.5 * (a - d)) ** 2 + np.abs(b) ** 2)
    return np.stack([half_tr - disc, half_tr + disc], axis=-1)


def _inverse_2x2(G: np.ndarray) -> np.ndarray:
    det = G[..., 0, 0] * G[..., 1, 1] - G[..., 0, 1] * G[..., 1, 0]
    inv = np.empty_like(G)
    inv[..., 0, 0] = G[..., 1, 1]
    inv[..., 1, 1] = G[..., 0, 0]
    inv[..., 0, 1] = -G[..., 0, 1]
    inv[..., 1, 0] = -G[..., 1, 0]
    return inv / det[..., None, None]


@dataclass
class EndoField:
    """h and its cached derived quantities.  Immutable after construction."""

    grid: Grid
    chi: BackgroundMetric
    h: np.ndarray        # (..., n, n) complex, h^i_j
    g: np.ndarray        # (..., n, n) complex, g_{abar b}
    g_inv: np.ndarray    # (..., n, n) complex, g^{j kbar}
    det_h: np.ndarray    # (...,) real
    tr_h: np.ndarray     # (...,) real
    eigenvalues: np.ndarray  # (..., n) real ascending

    @property
    def lambda_min(self) -> float:
        return float(np.min(self.eigenvalues[..., 0]))

    @property
    def lambda_max(self) -> float:
        return float(np.max(self.eigenvalues[..., -1]))


def build_endo(chi: BackgroundMetric, u: ScalarField) -> EndoField:
    """Assemble h from the background and the complex Hessian of u.

    Raises AdmissibilityError if any eigenvalue of h is at or below the
    floor, carrying the worst point and value.
    """
    grid = u.grid
    n = grid.n
    hess = complex_hessian(u).values
    G = chi.chi + hess  # g_{abar b} = chi_{abar b} + u_{abar b}
    h = np.einsum("ik,...kj->...ij", chi.chi_inv, G)

    if n == 1:
        det_h = (G[..., 0, 0].real) / chi.det_chi
        g_inv = 1.0 / G
        tr_h = h[..., 0, 0].real
    else:
        detG = G[..., 0, 0] * G[..., 1, 1] - G[..., 0, 1] * G[..., 1, 0]
        det_h = detG.real / chi.det_chi
        g_inv = _inverse_2x2(G)
        tr_h = (h[..., 0, 0] + h[..., 1, 1]).real

    # eigenvalues from the Hermitian similar matrix chi^{-1/2} G chi^{-1/2}
    S = np.einsum("ip,...pq,qj->...ij", chi.chi_isqrt, G, chi.chi_isqrt)
    eigs = _eigvals_hermitian(S, n)

    lam_min = eigs[..., 0]
    worst_flat = int(np.argmin(lam_min))
    worst_val = lam_min.flat[worst_flat]
    if worst_val <= ADMISSIBILITY_FLOOR:
        raise AdmissibilityError(worst_val, np.unravel_index(worst_flat, grid.shape))

    return EndoField(grid, chi, h, G, g_inv, det_h, tr_h, eigs)


def hessian_field(chi: BackgroundMetric, u: ScalarField) -> ComplexMatrixField:
    """Convenience re-export of the complex Hessian on u's grid."""
    return complex_hessian(u)


def linearized_coefficient(endo: EndoField, F, f: ScalarField):
    """Scalar coefficient c = F'(e^{-f} det h) e^{-f} det h of the
    linearized operator, plus the inverse metric g^{j kbar}.

    Raises ParabolicityError if F' <= 0 anywhere on the encountered range.
    """
    H = np.exp(-f.values) * endo.det_h
    fp = F.deriv(H)
    if np.min(fp) <= 0:
        raise ParabolicityError(
            f"F' must be positive on the operating range; min F' = {np.min(fp):.6e}"
        )
    return fp * H, endo.g_inv


def metric_gradient_square(
    chi: BackgroundMetric, g_inv: np.ndarray, T: np.ndarray
) -> np.ndarray:
    """chi^{p qbar} g^{j rbar} g^{s kbar} grad_p g_{rbar s} grad_qbar g_{kbar j}
    with T[..., p, r, s] = grad_p g_{rbar s}."""
    return np.einsum(
        "pq,...jr,...sk,...prs,...qjk->...",
        chi.chi_inv,
        g_inv,
        g_inv,
        T,
        np.conj(T),
        optimize=True,
    ).real


def aubin_yau_check(chi: BackgroundMetric, u: ScalarField):
    """Pointwise Yau-Aubin inequality between the gradient square of Tr h
    and the full gradient square of g; exact for Kahler data.

    Returns (lhs field, rhs field, max pointwise violation lhs - rhs).
    """
    endo = build_endo(chi, u)
    grid = u.grid
    n = grid.n

    T = third_derivatives(u)
    # grad_j Tr h = chi^{r sbar} grad_j g_{sbar r}
    grad_tr = np.einsum("rs,...jsr->...j", chi.chi_inv, T)
    lhs = (
        np.einsum("...jk,...j,...k->...", endo.g_inv, grad_tr, np.conj(grad_tr)).real
        / endo.tr_h
    )
    rhs = metric_gradient_square(chi, endo.g_inv, T)
    violation = float(np.max(lhs - rhs))
    return ScalarField(grid, lhs), ScalarField(grid, rhs), violation
