"""Shared fixtures and field-construction helpers."""

import numpy as np
import pytest

import cmaflow as cm


@pytest.fixture
def grid1():
    return cm.Grid(1, 64)


@pytest.fixture
def grid2():
    return cm.Grid(2, 16)


@pytest.fixture
def chi1():
    return cm.BackgroundMetric.identity(1)


@pytest.fixture
def chi2():
    return cm.BackgroundMetric.identity(2)


def broadcast_field(grid, values):
    """ScalarField from an array broadcastable to the grid shape."""
    return cm.ScalarField(grid, np.broadcast_to(values, grid.shape).copy())


def cosine_field(grid, k, amp, phase=0.0):
    """amp * cos(2 pi k.x + phase) with integer wave vector k over the real
    axes."""
    coords = grid.coordinates()
    arg = sum(int(kk) * c for kk, c in zip(k, coords))
    return broadcast_field(grid, amp * np.cos(2 * np.pi * np.asarray(arg) + phase))


def random_bandlimited(grid, rng, n_modes=6, max_k=3, amp=0.01):
    """Random real trigonometric polynomial, band-limited well inside the
    Nyquist frequency so spectral derivatives are exact.

    The field is rescaled so that the Gershgorin bound on its complex
    Hessian equals amp; amp < 1 therefore guarantees admissibility against
    any background not too far from the identity.
    """
    coords = grid.coordinates()
    vals = np.zeros(grid.shape)
    while True:
        for _ in range(n_modes):
            k = rng.integers(-max_k, max_k + 1, size=2 * grid.n)
            if not np.any(k):
                continue
            a = rng.standard_normal()
            ph = rng.uniform(0.0, 2.0 * np.pi)
            arg = sum(int(kk) * c for kk, c in zip(k, coords))
            vals = vals + a * np.cos(2 * np.pi * np.asarray(arg) + ph)
        if np.max(np.abs(vals)) > 0:
            break
    field = cm.ScalarField(grid, vals)
    hess = cm.complex_hessian(field).values
    bound = float(np.max(np.sum(np.abs(hess), axis=(-2, -1))))
    return cm.ScalarField(grid, vals * (amp / bound))


def bessel_i0(a, terms=40):
    """Modified Bessel function I_0(a) by its power series; independent of
    scipy.  mean over theta of e^{a cos theta} = I_0(a)."""
    total = 0.0
    term = 1.0
    for m in range(terms):
        if m > 0:
            term *= (a / 2.0) ** 2 / m**2
        total += term
    return total
