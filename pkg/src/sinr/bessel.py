"""Integer-order Bessel functions of the first kind, J_k.

These are the amplitude kernels of sine-of-sine compositions: feeding a
sinusoid through another sine neuron spreads its energy across harmonics
with weights J_k(w), so everything downstream (harmonic expansion, spectral
certificates) reduces to evaluating J_k and bounding it.

Evaluation strategy:
  * |x| <= 8: ascending power series, truncated once terms drop below 1e-17.
    The series alternates, so the truncation error is below the cutoff.
  * 8 < |x| <= 64: N-point uniform rule on the defining integral
    (1/pi) * int_0^pi cos(k t - x sin t) dt.  On the periodized integrand the
    rule is exact up to aliased orders J_{k +- N}, which are below 1e-40 for
    the N chosen here, so this route is accurate to machine precision.
Negative orders and arguments are folded in via the parity identities
J_{-k}(x) = (-1)^k J_k(x) and J_k(-x) = (-1)^k J_k(x) at the representation
level (no re-integration).
"""

from __future__ import annotations

import numbers

import numpy as np

from .errors import DomainError

_SERIES_CUTOFF = 1e-17
_SERIES_LIMIT = 8.0
_ARG_LIMIT = 64.0


def _require_int(k) -> int:
    if isinstance(k, numbers.Integral):
        return int(k)
    raise DomainError(f"order must be an integer, got {k!r}")


def _series(k: int, x: np.ndarray) -> np.ndarray:
    # Ascending series: sum_j (-1)^j (x/2)^(k+2j) / (j! (j+k)!), k >= 0, x >= 0.
    half = x / 2.0
    term = np.ones_like(half)
    for i in range(1, k + 1):
        term = term * half / i
    total = term.copy()
    ratio = -(half * half)
    j = 0
    while True:
        j += 1
        term = term * ratio / (j * (j + k))
        total += term
        if np.all(np.abs(term) < _SERIES_CUTOFF) or j > 400:
            return total


def _periodized_rule(k: int, x: np.ndarray) -> np.ndarray:
    # (1/N) sum_n cos(k t_n - x sin t_n) over one period equals
    # J_k + J_{k+N} + J_{k-N} + ...; pick N so the aliases are negligible.
    n = 64 * int(np.ceil((k + 3.0 * _ARG_LIMIT + 64.0) / 64.0))
    t = 2.0 * np.pi * np.arange(n) / n
    phase = k * t[:, None] - x[None, :] * np.sin(t)[:, None]
    return np.cos(phase).mean(axis=0)


def bessel_j(k, x):
    """J_k(x) for integer k, |x| <= 64.  Accepts scalars or arrays of x."""
    k = _require_int(k)
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 0
    flat = np.atleast_1d(arr).astype(float).ravel()
    if flat.size and np.max(np.abs(flat)) > _ARG_LIMIT:
        raise DomainError(f"|x| must be <= {_ARG_LIMIT}")

    sign = np.ones_like(flat)
    if k < 0:
        k = -k
        if k % 2:
            sign = -sign
    neg = flat < 0
    if k % 2:
        sign[neg] = -sign[neg]
    mag = np.abs(flat)

    out = np.empty_like(mag)
    small = mag <= _SERIES_LIMIT
    if small.any():
        out[small] = _series(k, mag[small])
    if (~small).any():
        out[~small] = _periodized_rule(k, mag[~small])
    out *= sign
    out = out.reshape(arr.shape) if not scalar else out
    return float(out[0]) if scalar else out


def bessel_bound(k, x):
    """Amplitude bound (|x|/2)^|k| / |k|!, an upper bound for |J_k(x)|.

    Equals 1 at k = 0 for every x.  Vectorized over x.
    """
    k = abs(_require_int(k))
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 0
    half = np.abs(np.atleast_1d(arr).astype(float)) / 2.0
    out = np.ones_like(half)
    for i in range(1, k + 1):
        out = out * half / i
    return float(out[0]) if scalar else out.reshape(arr.shape)


def bound_row(k_row, w_row) -> float:
    """Product of per-coordinate amplitude bounds for a frequency index row.

    Upper-bounds the composite amplitude |prod_j J_{k_j}(w_j)|.
    """
    k_row = np.asarray(k_row)
    w_row = np.asarray(w_row, dtype=float)
    if k_row.shape != w_row.shape:
        raise DomainError("index row and weight row must have equal length")
    total = 1.0
    for kj, wj in zip(k_row.tolist(), w_row.tolist()):
        total *= bessel_bound(int(kj), wj)
    return float(total)
