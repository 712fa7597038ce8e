"""Aggregation of expansion terms into a Fourier table, and its oracles.

Every expansion term carries an exact integer frequency F = k^T * bank rows.
Grouping terms by F (after folding each +-F pair onto one canonical
representative) turns the neuron series into the network's Fourier series:
per channel,

    f(x) = sum_F  a_hat_F sin(2*pi/p * F . x) + b_hat_F cos(...) ,

with the output bias living at F = 0 and residual_bound certifying all the
coefficient mass the truncated enumeration did not capture.

Canonicalization: the representative of {F, -F} has its first nonzero
coordinate positive.  A mirrored term folds through
sin(-u + lam) = -(sin u cos lam - cos u sin lam), i.e. it contributes
(-alpha cos lam, +alpha sin lam) at -F.  At F = 0 the sine basis vanishes,
so the constant alpha*sin(lam) is booked entirely under b_hat and a_hat is 0
(matching what any sampling-based measurement can see at DC).

The module also solves the integer frequency-generation equation k^T F_rows
= target in closed form for banks that contain the canonical axis rows, and
implements the exact integer sub-periodicity test.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError, GridTooSmallError, UnsupportedBankError
from .expansion import expand_neuron
from .network import FrequencyBank, SinusoidalNet, forward


# --- integer frequency generation -------------------------------------------

@dataclass
class SmithSolutionSet:
    """All integer k with k^T * freq_rows == target, in parametric form.

    The solution set is {particular + sum_t l_t * generators[t] : l integer};
    an empty generator list means the solution is unique.  free_columns names
    the coordinate each generator owns exclusively (its identity column), so
    membership can be decided by reading coefficients off those coordinates.
    """

    target: np.ndarray  # (d,)
    particular: np.ndarray  # (m,)
    generators: np.ndarray  # (g, m)
    free_columns: np.ndarray  # (g,)

    def member(self, l_coeffs) -> np.ndarray:
        l_coeffs = np.asarray(l_coeffs, dtype=np.int64)
        if l_coeffs.shape != (self.generators.shape[0],):
            raise DomainError("wrong number of generator coefficients")
        return self.particular + l_coeffs @ self.generators

    def contains(self, k) -> bool:
        """Exact membership test (integer arithmetic only)."""
        k = np.asarray(k, dtype=np.int64)
        diff = k - self.particular
        if self.generators.shape[0] == 0:
            return bool(np.all(diff == 0))
        l_coeffs = diff[self.free_columns]
        return bool(np.all(self.particular + l_coeffs @ self.generators == k))


def _canonical_row_indices(bank: FrequencyBank) -> list:
    """Positions of the canonical axis rows (identity rows), in axis order."""
    rows = [tuple(int(v) for v in r) for r in bank.freq_int]
    idx = []
    for axis in range(bank.dim):
        unit = tuple(1 if a == axis else 0 for a in range(bank.dim))
        if unit not in rows:
            raise UnsupportedBankError(
                f"bank lacks the canonical axis row {unit}; the closed-form "
                "integer solution requires it")
        idx.append(rows.index(unit))
    return idx


def solve_frequency(bank: FrequencyBank, target) -> SmithSolutionSet:
    """Closed-form solution of k^T * bank rows == target (canonical banks).

    Requires the bank to contain every canonical axis row.  The particular
    solution loads the target onto those rows; one generator per remaining
    row r cancels it against the axis rows:  g_r = e_r - sum_a r_a * e_axis_a.
    """
    if bank.dim > 2:
        raise DomainError("frequency solving supports 1-D and 2-D banks")
    target = np.asarray(target, dtype=np.int64)
    if target.shape != (bank.dim,):
        raise DomainError(f"target must be a length-{bank.dim} integer vector")
    axis_idx = _canonical_row_indices(bank)
    m = bank.size
    particular = np.zeros(m, dtype=np.int64)
    for axis, row in enumerate(axis_idx):
        particular[row] = target[axis]
    gens, free = [], []
    for r in range(m):
        if r in axis_idx:
            continue
        g = np.zeros(m, dtype=np.int64)
        g[r] = 1
        for axis, row in enumerate(axis_idx):
            g[row] = -int(bank.freq_int[r, axis])
        gens.append(g)
        free.append(r)
    generators = (np.stack(gens) if gens
                  else np.zeros((0, m), dtype=np.int64))
    return SmithSolutionSet(target=target, particular=particular,
                            generators=generators,
                            free_columns=np.asarray(free, dtype=np.int64))


def subperiod_check(bank: FrequencyBank, q: int, s: int = 1) -> bool:
    """Exact test: is the function periodic with period (p/q, p/s)?

    True iff every bank row F satisfies F_x/q + F_y/s integer (1-D banks use
    q alone).  Shifting x by (p/q, p/s) then moves every generated phase by
    an exact multiple of 2*pi.
    """
    if not (isinstance(q, (int, np.integer)) and isinstance(s, (int, np.integer))):
        raise DomainError("q and s must be integers")
    if q < 1 or s < 1:
        raise DomainError("q and s must be >= 1")
    f = bank.freq_int
    if bank.dim == 1:
        return bool(np.all(f[:, 0] % q == 0))
    if bank.dim == 2:
        return bool(np.all((f[:, 0] * s + f[:, 1] * q) % (q * s) == 0))
    raise DomainError("sub-period test supports 1-D and 2-D banks")


# --- Fourier table -----------------------------------------------------------

@dataclass
class FourierTable:
    """One-sided Fourier series of a network over canonical frequencies.

    a_hat/b_hat have shape (entries, channels); freqs is lexicographically
    sorted with the DC row first.  residual_bound certifies the absolute
    coefficient mass missing from the table (truncation tails plus any
    enumerated mass that fell outside ``band``), uniformly over channels.
    """

    freqs: np.ndarray  # (E, d) int64, canonical representatives
    a_hat: np.ndarray  # (E, channels)
    b_hat: np.ndarray  # (E, channels)
    band: int
    k_max: int
    residual_bound: float
    period: float

    @property
    def channels(self) -> int:
        return int(self.a_hat.shape[1])

    def coefficient(self, F):
        """(a_hat, b_hat) rows for frequency F, zeros if absent."""
        F = np.asarray(F, dtype=np.int64)
        hit = np.nonzero(np.all(self.freqs == F[None, :], axis=1))[0]
        if hit.size:
            return self.a_hat[hit[0]].copy(), self.b_hat[hit[0]].copy()
        return (np.zeros(self.channels), np.zeros(self.channels))


def _canonical_signs(freqs: np.ndarray) -> np.ndarray:
    """+1 keep, -1 mirror, 0 for DC: sign of the first nonzero coordinate."""
    signs = np.zeros(freqs.shape[0], dtype=np.int64)
    undecided = np.ones(freqs.shape[0], dtype=bool)
    for axis in range(freqs.shape[1]):
        col = freqs[:, axis]
        hit = undecided & (col != 0)
        signs[hit] = np.sign(col[hit])
        undecided &= ~hit
    return signs


def table_values(table: FourierTable, coords) -> np.ndarray:
    """Evaluate the tabulated series at coords, shape (batch, channels)."""
    coords = np.asarray(coords, dtype=float)
    if coords.ndim == 1:
        coords = coords[None, :]
    args = (2.0 * np.pi / table.period) * (coords @ table.freqs.T.astype(float))
    return np.sin(args) @ table.a_hat + np.cos(args) @ table.b_hat


def fourier_table(net: SinusoidalNet, band: int, k_max: int,
                  prune_budget: float = 0.0) -> FourierTable:
    """Aggregate the truncated expansions of all neurons into a Fourier table.

    Single-hidden-layer nets only.  Entries outside ||F||_inf <= band are not
    stored; their exact coefficient magnitude joins residual_bound, as do the
    per-neuron truncation tails (weighted by the largest |output weight| of
    the neuron across channels).
    """
    if net.depth != 1:
        raise DomainError("fourier_table requires a single hidden layer")
    if band < 0:
        raise DomainError("band must be >= 0")
    d = net.bank.dim
    acc: dict = {}
    residual = 0.0

    def bucket(F_key):
        entry = acc.get(F_key)
        if entry is None:
            entry = [np.zeros(net.channels), np.zeros(net.channels)]
            acc[F_key] = entry
        return entry

    width = net.layers[0].weights.shape[0]
    for i in range(width):
        exp = expand_neuron(net, i, k_max, prune_budget=prune_budget)
        weight_col = net.out_weights[:, i]  # (channels,)
        residual += float(np.max(np.abs(weight_col))) * exp.tail_bound
        t = exp.terms
        signs = _canonical_signs(t.freq_int)
        canon = t.freq_int * np.where(signs < 0, -1, 1)[:, None]
        a_term = np.where(signs < 0, -t.a_coef, t.a_coef)
        a_term = np.where(signs == 0, 0.0, a_term)  # DC: sine basis vanishes
        b_term = t.b_coef.copy()

        inside = np.max(np.abs(canon), axis=1) <= band
        out_mass = np.abs(t.alpha[~inside]).sum()
        residual += float(np.max(np.abs(weight_col))) * float(out_mass)

        canon_in = canon[inside]
        a_in, b_in = a_term[inside], b_term[inside]
        uniq, inverse = np.unique(canon_in, axis=0, return_inverse=True)
        a_acc = np.zeros(uniq.shape[0])
        b_acc = np.zeros(uniq.shape[0])
        np.add.at(a_acc, inverse, a_in)
        np.add.at(b_acc, inverse, b_in)
        for row, av, bv in zip(uniq, a_acc, b_acc):
            entry = bucket(tuple(int(v) for v in row))
            entry[0] += av * weight_col
            entry[1] += bv * weight_col

    dc = bucket(tuple([0] * d))
    dc[1] += net.out_bias

    keys = sorted(acc.keys())
    freqs = np.asarray(keys, dtype=np.int64).reshape(len(keys), d)
    a_hat = np.stack([acc[k][0] for k in keys])
    b_hat = np.stack([acc[k][1] for k in keys])
    return FourierTable(freqs=freqs, a_hat=a_hat, b_hat=b_hat, band=band,
                        k_max=k_max, residual_bound=float(residual),
                        period=net.bank.period)


# --- sampling-based oracle ---------------------------------------------------

def _canonical_freq_list(d: int, band: int) -> np.ndarray:
    """All canonical representatives with ||F||_inf <= band, DC included."""
    if d == 1:
        return np.arange(0, band + 1, dtype=np.int64)[:, None]
    if d == 2:
        rows = [(0, 0)]
        rows += [(0, f2) for f2 in range(1, band + 1)]
        for f1 in range(1, band + 1):
            rows += [(f1, f2) for f2 in range(-band, band + 1)]
        return np.asarray(sorted(rows), dtype=np.int64)
    raise DomainError("oracle supports 1-D and 2-D banks")


def dft_oracle(net: SinusoidalNet, grid_n: int, band: int,
               k_max: Optional[int] = None) -> FourierTable:
    """Measure the network's Fourier coefficients by direct sampling.

    Samples one full period on a uniform grid, applies a normalized discrete
    Fourier transform, and reads the sine/cosine pair of every canonical
    frequency within the band (keys match fourier_table exactly; the sampling
    route has no truncation certificate, so residual_bound is 0).

    Spatial offset handling: the grid starts at -p/2, so bin F carries the
    extra phase (-1)^(sum F); it is divided out before the sine/cosine split.
    """
    d = net.bank.dim
    if d > 2:
        raise DomainError("oracle supports 1-D and 2-D banks")
    if grid_n <= 2 * band:
        raise GridTooSmallError(f"grid_n={grid_n} cannot resolve band {band}")
    if k_max is not None:
        reach = int(k_max) * int(np.max(np.abs(net.bank.freq_int).sum(axis=0)))
        if grid_n <= 2 * reach:
            raise GridTooSmallError(
                f"grid_n={grid_n} aliases enumerated content up to {reach}")

    p = net.bank.period
    xs = -p / 2 + p * np.arange(grid_n) / grid_n
    if d == 1:
        coords = xs[:, None]
        samples = forward(net, coords)  # (N, ch)
        spec = np.fft.fft(samples, axis=0) / grid_n
        freqs = _canonical_freq_list(1, band)
        a_hat = np.zeros((freqs.shape[0], net.channels))
        b_hat = np.zeros_like(a_hat)
        for row, F in enumerate(freqs[:, 0]):
            ph = -1.0 if F % 2 else 1.0
            c = spec[int(F) % grid_n] * ph
            if F == 0:
                b_hat[row] = c.real
            else:
                a_hat[row] = -2.0 * c.imag
                b_hat[row] = 2.0 * c.real
    else:
        X1, X2 = np.meshgrid(xs, xs, indexing="ij")
        coords = np.stack([X1.ravel(), X2.ravel()], axis=1)
        samples = forward(net, coords).reshape(grid_n, grid_n, net.channels)
        spec = np.fft.fft2(samples, axes=(0, 1)) / (grid_n * grid_n)
        freqs = _canonical_freq_list(2, band)
        a_hat = np.zeros((freqs.shape[0], net.channels))
        b_hat = np.zeros_like(a_hat)
        for row, (F1, F2) in enumerate(freqs):
            ph = -1.0 if (F1 + F2) % 2 else 1.0
            c = spec[int(F1) % grid_n, int(F2) % grid_n] * ph
            if F1 == 0 and F2 == 0:
                b_hat[row] = c.real
            else:
                a_hat[row] = -2.0 * c.imag
                b_hat[row] = 2.0 * c.real
    return FourierTable(freqs=freqs, a_hat=a_hat, b_hat=b_hat, band=band,
                        k_max=0 if k_max is None else int(k_max),
                        residual_bound=0.0, period=p)


# --- export ------------------------------------------------------------------

def write_fourier_csv(table: FourierTable, csv_path, sidecar_path=None) -> None:
    """CSV schema: F_1..F_d, channel, a_hat, b_hat (+ JSON sidecar)."""
    d = table.freqs.shape[1]
    header = [f"F_{j + 1}" for j in range(d)] + ["channel", "a_hat", "b_hat"]
    with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in range(table.freqs.shape[0]):
            for ch in range(table.channels):
                cells = ([str(int(v)) for v in table.freqs[row]]
                         + [str(ch), repr(float(table.a_hat[row, ch])),
                            repr(float(table.b_hat[row, ch]))])
                fh.write(",".join(cells) + "\n")
    if sidecar_path is not None:
        meta = {"residual_bound": table.residual_bound,
                "k_max": table.k_max, "band": table.band}
        with open(sidecar_path, "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2)
            fh.write("\n")
