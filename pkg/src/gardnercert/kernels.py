"""Hot numeric kernels: numba-compiled fast path with a pure-numpy fallback.

The backend is chosen once at import time.  numba is used when importable
unless the environment variable ``GARDNERCERT_NO_NUMBA`` is set to a
non-empty value, in which case the numpy implementations run instead.
FFTs always go through ``numpy.fft`` on both paths.

Each kernel is deterministic for fixed inputs on a fixed backend: loops
accumulate in a fixed order and the numpy variants use numpy's fixed
reduction order.

``benchmarks/bench_kernels.py`` compares the two paths.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

NUMBA_ENABLED = _HAVE_NUMBA and not os.environ.get("GARDNERCERT_NO_NUMBA")


def backend_name() -> str:
    return "numba" if NUMBA_ENABLED else "numpy"


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------


def nonlinear_terms_numpy(u):
    """Pointwise u^2/2 + u^3/3."""
    return 0.5 * u * u + (u * u * u) / 3.0


def apply_phase_numpy(coeffs, xi_cubed, t):
    """Multiply spectral coefficients by exp(i * xi^3 * t) mode by mode."""
    return np.exp(1j * (xi_cubed * t)) * coeffs


def duhamel_combine_numpy(weights, phases, nhat):
    """Quadrature of the propagated nonlinearity at every node.

    weights[m, j] integrates the node grid over [0, tau_m]; phases[m, k]
    is exp(i xi_k^3 tau_m); nhat[m, k] the spectral nonlinearity at node m.
    Returns out[m, k] = sum_j weights[m, j] * phases[m, k] / phases[j, k]
    * nhat[j, k], evaluated as phases * (weights @ (conj(phases) * nhat))
    since the phases are unimodular.
    """
    g = np.conj(phases) * nhat
    return phases * (weights @ g)


def weighted_sumsq_numpy(weights, coeffs):
    """sum_k weights[k] * |coeffs[k]|^2."""
    mags = coeffs.real * coeffs.real + coeffs.imag * coeffs.imag
    return float(np.dot(weights, mags))


def node_diff_norms_numpy(weights, a, b):
    """Row-wise weighted l2 distance: sqrt(sum_k w[k] |a[m,k]-b[m,k]|^2)."""
    d = a - b
    mags = d.real * d.real + d.imag * d.imag
    return np.sqrt(mags @ weights)


# ---------------------------------------------------------------------------
# loop implementations (numba-compilable; also runnable as plain python)
# ---------------------------------------------------------------------------


def _nonlinear_terms_loops(u):
    out = np.empty_like(u)
    for i in range(u.shape[0]):
        v = u[i]
        out[i] = 0.5 * v * v + (v * v * v) / 3.0
    return out


def _apply_phase_loops(coeffs, xi_cubed, t):
    out = np.empty_like(coeffs)
    for i in range(coeffs.shape[0]):
        ph = xi_cubed[i] * t
        out[i] = complex(np.cos(ph), np.sin(ph)) * coeffs[i]
    return out


def _duhamel_combine_loops(weights, phases, nhat):
    m1, n = nhat.shape
    g = np.empty_like(nhat)
    for j in range(m1):
        for k in range(n):
            g[j, k] = np.conj(phases[j, k]) * nhat[j, k]
    out = np.zeros((m1, n), dtype=nhat.dtype)
    for m in range(m1):
        for j in range(m1):
            w = weights[m, j]
            if w != 0.0:
                for k in range(n):
                    out[m, k] += w * g[j, k]
        for k in range(n):
            out[m, k] *= phases[m, k]
    return out


def _weighted_sumsq_loops(weights, coeffs):
    acc = 0.0
    for i in range(coeffs.shape[0]):
        c = coeffs[i]
        acc += weights[i] * (c.real * c.real + c.imag * c.imag)
    return acc


def _node_diff_norms_loops(weights, a, b):
    m1, n = a.shape
    out = np.empty(m1)
    for m in range(m1):
        acc = 0.0
        for k in range(n):
            d = a[m, k] - b[m, k]
            acc += weights[k] * (d.real * d.real + d.imag * d.imag)
        out[m] = np.sqrt(acc)
    return out


if _HAVE_NUMBA:
    nonlinear_terms_numba = njit(cache=True)(_nonlinear_terms_loops)
    apply_phase_numba = njit(cache=True)(_apply_phase_loops)
    duhamel_combine_numba = njit(cache=True)(_duhamel_combine_loops)
    weighted_sumsq_numba = njit(cache=True)(_weighted_sumsq_loops)
    node_diff_norms_numba = njit(cache=True)(_node_diff_norms_loops)

if NUMBA_ENABLED:
    nonlinear_terms = nonlinear_terms_numba
    apply_phase = apply_phase_numba
    duhamel_combine = duhamel_combine_numba
    weighted_sumsq = weighted_sumsq_numba
    node_diff_norms = node_diff_norms_numba
else:
    nonlinear_terms = nonlinear_terms_numpy
    apply_phase = apply_phase_numpy
    duhamel_combine = duhamel_combine_numpy
    weighted_sumsq = weighted_sumsq_numpy
    node_diff_norms = node_diff_norms_numpy
