"""Analytic harmonic expansion of sine-layer neurons with certified tails.

A first-hidden-layer neuron sin(w . sin(Omega x + shifts) + b) equals an
absolutely convergent series

    sum over k in Z^m of  alpha_k * sin(beta_k . x + lambda_k),

where alpha_k = prod_j J_{k_j}(w_j), beta_k = (2*pi/period) * (k^T F) for the
integer bank F, and lambda_k = k . shifts + b.  Truncating the index lattice
to the box ||k||_inf <= k_max leaves a tail whose absolute coefficient mass is
bounded in closed form:

    sum_{||k||_inf > K} prod_j g_j(k_j)  =  prod_j f_j - prod_j inside_j(K),

with g_j(t) = (|w_j|/2)^|t| / |t|! (the per-factor amplitude bound),
f_j = sum over all t of g_j(t) = 2*exp(|w_j|/2) - 1, and inside_j(K) the
finite sum over |t| <= K.  Every function in this module reports that bound,
so truncated series come with a certificate: the reconstruction error at any
point is at most tail_bound.

Deeper neurons expand recursively: each index level k^l weighs the previous
layer's rows into a virtual first-layer neuron, and per-level coefficient
masses certify the composite tail.  Enumeration is lexicographic with the
outermost (deepest) level most significant, which is the order the recursion
visits; at depth 1 it degenerates to plain ascending-k order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bessel import bessel_bound, bessel_j, bound_row
from .errors import BudgetExceededError, DomainError
from .network import SinusoidalNet

DEFAULT_DEEP_BUDGET = 10_000_000


def amplitude_bound(k_row, w_row) -> float:
    """Certified upper bound for |prod_j J_{k_j}(w_j)|.

    With every |w_j| <= 2 this is itself bounded by 1 / prod_j |k_j|!.
    """
    return bound_row(k_row, w_row)


def _factor_mass(r: float) -> float:
    # sum over all integer t of r^|t|/|t|! = 2 e^r - 1   (r = |w|/2)
    return 2.0 * math.exp(r) - 1.0


def _factor_inside(r: float, k_max: int) -> float:
    # finite sum over |t| <= k_max of r^|t|/|t|!
    total, term = 1.0, 1.0
    for t in range(1, k_max + 1):
        term *= r / t
        total += 2.0 * term
    return total


def row_mass(w_row) -> float:
    """Upper bound on the total absolute coefficient mass of one neuron."""
    return float(np.prod([_factor_mass(abs(w) / 2.0) for w in np.ravel(w_row)]))


def lattice_tail(w_row, k_max: int) -> float:
    """Certified mass of all indices outside the box ||k||_inf <= k_max."""
    w_row = np.ravel(np.asarray(w_row, dtype=float))
    if k_max < 0:
        raise DomainError("k_max must be >= 0")
    full = 1.0
    inside = 1.0
    for w in w_row:
        r = abs(w) / 2.0
        full *= _factor_mass(r)
        inside *= _factor_inside(r, k_max)
    return max(full - inside, 0.0)


def kmax_for_tail(w_row, budget: float, k_start: int = 0, k_limit: int = 200) -> int:
    """Smallest k_max whose lattice tail drops below ``budget``."""
    if budget <= 0:
        raise DomainError("tail budget must be positive")
    for k in range(k_start, k_limit + 1):
        if lattice_tail(w_row, k) < budget:
            return k
    raise DomainError(f"tail stays above {budget} up to k_max={k_limit}")


@dataclass(frozen=True)
class ExpansionTerm:
    k: tuple  # integer index row, length m
    alpha: float
    beta: tuple  # real frequency vector, length d
    lam: float
    a_coef: float  # alpha * cos(lam)
    b_coef: float  # alpha * sin(lam)


class ExpansionTerms:
    """Columnar sequence of expansion terms (len / iteration / indexing)."""

    def __init__(self, k, freq_int, beta, alpha, lam, period):
        self.k = np.asarray(k, dtype=np.int64)
        self.freq_int = np.asarray(freq_int, dtype=np.int64)
        self.beta = np.asarray(beta, dtype=float)
        self.alpha = np.asarray(alpha, dtype=float)
        self.lam = np.asarray(lam, dtype=float)
        self.period = float(period)
        self.a_coef = self.alpha * np.cos(self.lam)
        self.b_coef = self.alpha * np.sin(self.lam)

    def __len__(self):
        return int(self.alpha.shape[0])

    def __getitem__(self, i) -> ExpansionTerm:
        return ExpansionTerm(
            k=tuple(int(v) for v in self.k[i]),
            alpha=float(self.alpha[i]),
            beta=tuple(float(v) for v in self.beta[i]),
            lam=float(self.lam[i]),
            a_coef=float(self.a_coef[i]),
            b_coef=float(self.b_coef[i]),
        )

    def __iter__(self):
        return (self[i] for i in range(len(self)))


@dataclass
class Expansion:
    terms: ExpansionTerms
    tail_bound: float
    k_max: int
    neuron: int


_INDEX_GRID_CACHE: dict = {}


def _index_grid(m: int, k_max: int) -> np.ndarray:
    """All k in Z^m with ||k||_inf <= k_max, C-ordered, shape (K^m, m)."""
    key = (m, k_max)
    grid = _INDEX_GRID_CACHE.get(key)
    if grid is None:
        side = np.arange(-k_max, k_max + 1, dtype=np.int64)
        mesh = np.meshgrid(*([side] * m), indexing="ij")
        grid = np.stack([g.ravel() for g in mesh], axis=1)
        _INDEX_GRID_CACHE[key] = grid
    return grid


def _kernel_table(w_row: np.ndarray, k_max: int) -> np.ndarray:
    """J_t(w_j) for t in [-k_max, k_max], shape (m, 2*k_max+1)."""
    m = w_row.shape[0]
    table = np.empty((m, 2 * k_max + 1))
    for t in range(k_max + 1):
        vals = np.atleast_1d(bessel_j(t, w_row))
        table[:, k_max + t] = vals
        if t:
            table[:, k_max - t] = vals if t % 2 == 0 else -vals
    return table


def _bound_table(w_row: np.ndarray, k_max: int) -> np.ndarray:
    m = w_row.shape[0]
    table = np.empty((m, 2 * k_max + 1))
    for t in range(k_max + 1):
        vals = np.atleast_1d(bessel_bound(t, w_row))
        table[:, k_max + t] = vals
        if t:
            table[:, k_max - t] = vals
    return table


def _grid_product(table: np.ndarray) -> np.ndarray:
    """Outer-product reduction of per-coordinate rows, flattened C-order."""
    out = table[0]
    for row in table[1:]:
        out = out[:, None] * row[None, :]
        out = out.reshape(-1)
    return out


def _bank_level(w_row, bias, bank, k_max, prune_budget,
                kernel_table=None, bound_table=None):
    """Single-level expansion of sin(w_row . features + bias) over the bank.

    Returns (k grid, alpha, lam, tail) with the pruned mass folded into tail.
    Kernel/bound tables may be passed in pre-computed (batched callers).
    """
    w_row = np.ravel(np.asarray(w_row, dtype=float))
    if w_row.shape[0] != bank.size:
        raise DomainError("weight row length must equal the bank size")
    kgrid = _index_grid(bank.size, k_max)
    if kernel_table is None:
        kernel_table = _kernel_table(w_row, k_max)
    alpha = _grid_product(kernel_table)
    tail = lattice_tail(w_row, k_max)
    if prune_budget > 0.0:
        if bound_table is None:
            bound_table = _bound_table(w_row, k_max)
        bounds = _grid_product(bound_table)
        keep = bounds >= (prune_budget / alpha.shape[0])
        tail += float(bounds[~keep].sum())
        kgrid, alpha = kgrid[keep], alpha[keep]
    lam = kgrid @ bank.shifts + bias
    return kgrid, alpha, lam, tail


def _batched_kernel_tables(rows: np.ndarray, k_max: int) -> np.ndarray:
    """J_t over a whole (n, m) matrix of arguments: shape (n, m, 2*k_max+1)."""
    n, m = rows.shape
    out = np.empty((n, m, 2 * k_max + 1))
    for t in range(k_max + 1):
        vals = bessel_j(t, rows.ravel()).reshape(n, m)
        out[:, :, k_max + t] = vals
        if t:
            out[:, :, k_max - t] = vals if t % 2 == 0 else -vals
    return out


def expand_neuron(net: SinusoidalNet, neuron_index: int, k_max: int,
                  prune_budget: float = 0.0) -> Expansion:
    """Expand hidden neuron ``neuron_index`` of a single-hidden-layer net.

    Requires net.depth == 1 (use expand_deep otherwise).  In learnable mode
    the expansion runs on the effective first-layer matrix.  ``prune_budget``
    optionally drops terms whose amplitude bound falls below an equal share
    of the budget; everything dropped is added to tail_bound, so the
    certificate |reconstruction - truth| <= tail_bound always holds.
    """
    if net.depth != 1:
        raise DomainError("expand_neuron requires a single hidden layer; "
                          "use expand_deep for deeper nets")
    if k_max < 0:
        raise DomainError("k_max must be >= 0")
    eff = net.first_layer_effective()
    if not 0 <= neuron_index < eff.shape[0]:
        raise DomainError(f"neuron index {neuron_index} out of range")
    if prune_budget < 0:
        raise DomainError("prune_budget must be >= 0")

    kgrid, alpha, lam, tail = _bank_level(eff[neuron_index],
                                          net.layers[0].bias[neuron_index],
                                          net.bank, k_max, prune_budget)
    freq_int = kgrid @ net.bank.freq_int
    beta = (2.0 * np.pi / net.bank.period) * freq_int
    terms = ExpansionTerms(kgrid, freq_int, beta, alpha, lam, net.bank.period)
    return Expansion(terms=terms, tail_bound=float(tail), k_max=k_max,
                     neuron=neuron_index)


@dataclass(frozen=True)
class DeepTerm:
    k_tuple: tuple  # (k^1, ..., k^layer) as integer tuples, bank level first
    alpha: float
    beta: tuple  # real frequency vector from the bank level
    lam: float


class DeepTerms:
    """Columnar sequence of deep expansion terms."""

    def __init__(self, levels, freq_int, beta, alpha, lam, period):
        self.levels = [np.asarray(lv, dtype=np.int64) for lv in levels]
        self.freq_int = np.asarray(freq_int, dtype=np.int64)
        self.beta = np.asarray(beta, dtype=float)
        self.alpha = np.asarray(alpha, dtype=float)
        self.lam = np.asarray(lam, dtype=float)
        self.period = float(period)

    def __len__(self):
        return int(self.alpha.shape[0])

    def __getitem__(self, i) -> DeepTerm:
        return DeepTerm(
            k_tuple=tuple(tuple(int(v) for v in lv[i]) for lv in self.levels),
            alpha=float(self.alpha[i]),
            beta=tuple(float(v) for v in self.beta[i]),
            lam=float(self.lam[i]),
        )

    def __iter__(self):
        return (self[i] for i in range(len(self)))


@dataclass
class DeepExpansion:
    terms: DeepTerms
    tail_bound: float
    k_max: int
    layer: int
    neuron: int


def expand_deep(net: SinusoidalNet, layer: int, neuron_index: int, k_max: int,
                budget: int = DEFAULT_DEEP_BUDGET,
                prune_budget: float = 0.0) -> DeepExpansion:
    """Expand a neuron at 1-based hidden ``layer`` of an arbitrary-depth net.

    Index tuples (k^1, ..., k^layer) are enumerated over per-level boxes
    ||k^l||_inf <= k_max, deepest level most significant.  The certified tail
    combines, per level, the outside-the-box mass (each dropped sine factor
    is at most 1 in magnitude) with the exactly-weighted tails of the inner
    virtual neurons.  A depth-1 call reproduces expand_neuron term for term.
    """
    if not 1 <= layer <= net.depth:
        raise DomainError(f"layer must be in 1..{net.depth}")
    if k_max < 0:
        raise DomainError("k_max must be >= 0")
    widths = [net.bank.size] + [l.weights.shape[0] for l in net.layers]
    count = (2 * k_max + 1) ** sum(widths[:layer])
    if count > budget:
        raise BudgetExceededError(
            f"enumeration needs {count} tuples, budget is {budget}")
    target = net.layers[layer - 1]
    if not 0 <= neuron_index < target.weights.shape[0]:
        raise DomainError(f"neuron index {neuron_index} out of range")

    def matrix_at(stage: int) -> np.ndarray:
        # weights feeding hidden layer ``stage`` (0-based); stage 0 sees the
        # effective (tanh-reparameterized) matrix in learnable mode.
        return net.first_layer_effective() if stage == 0 else net.layers[stage].weights

    w_row = matrix_at(layer - 1)[neuron_index]
    bias = target.bias[neuron_index]

    def recurse(stage: int, w_row, bias):
        # Expands a virtual neuron sin(w_row . h^{stage}(x) + bias), where
        # h^0 is the bank feature vector.  Returns (levels, alpha, lam, tail).
        if stage == 0:
            kgrid, alpha, lam, tail = _bank_level(w_row, bias, net.bank,
                                                  k_max, prune_budget)
            return [kgrid], alpha, lam, tail

        w_row = np.ravel(np.asarray(w_row, dtype=float))
        outer = _index_grid(w_row.shape[0], k_max)
        factor = _grid_product(_kernel_table(w_row, k_max))
        tail = lattice_tail(w_row, k_max)

        W_prev = matrix_at(stage - 1)
        b_prev = net.layers[stage - 1].bias
        virt_rows = outer @ W_prev
        virt_bias = bias + outer @ b_prev

        # The stage-1 subproblems are all bank-level grids; batching their
        # kernel tables avoids thousands of tiny Bessel evaluations.
        base_tables = (_batched_kernel_tables(virt_rows, k_max)
                       if stage == 1 else None)

        chunks_levels, chunks_alpha, chunks_lam = [], [], []
        for idx in range(outer.shape[0]):
            mag = abs(float(factor[idx]))
            if prune_budget > 0.0 and mag * row_mass(virt_rows[idx]) < prune_budget / outer.shape[0]:
                tail += mag * row_mass(virt_rows[idx])
                continue
            if stage == 1:
                kgrid, alpha, lam, sub_tail = _bank_level(
                    virt_rows[idx], float(virt_bias[idx]), net.bank, k_max,
                    prune_budget, kernel_table=base_tables[idx])
                levels = [kgrid]
            else:
                levels, alpha, lam, sub_tail = recurse(
                    stage - 1, virt_rows[idx], float(virt_bias[idx]))
            tail += mag * sub_tail
            own = np.repeat(outer[idx][None, :], alpha.shape[0], axis=0)
            chunks_levels.append(levels + [own])
            chunks_alpha.append(alpha * factor[idx])
            chunks_lam.append(lam)

        if not chunks_alpha:
            empty = [np.zeros((0, w), dtype=np.int64) for w in widths[:stage + 1]]
            return empty, np.zeros(0), np.zeros(0), tail
        n_levels = len(chunks_levels[0])
        levels = [np.concatenate([c[l] for c in chunks_levels])
                  for l in range(n_levels)]
        return (levels, np.concatenate(chunks_alpha),
                np.concatenate(chunks_lam), tail)

    levels, alpha, lam, tail = recurse(layer - 1, w_row, bias)
    freq_int = levels[0] @ net.bank.freq_int
    beta = (2.0 * np.pi / net.bank.period) * freq_int
    terms = DeepTerms(levels, freq_int, beta, alpha, lam, net.bank.period)
    return DeepExpansion(terms=terms, tail_bound=float(tail), k_max=k_max,
                         layer=layer, neuron=neuron_index)


def evaluate_terms(terms, coords) -> np.ndarray:
    """Evaluate sum alpha * sin(beta . x + lam) at coords, shape (batch,).

    Terms are regrouped by their exact integer frequency before evaluation
    (a pure reordering of the sum), so the cost scales with the number of
    distinct generated frequencies rather than raw terms.
    """
    coords = np.asarray(coords, dtype=float)
    if coords.ndim == 1:
        coords = coords[None, :]
    if len(terms) == 0:
        return np.zeros(coords.shape[0])
    a = terms.alpha * np.cos(terms.lam)
    b = terms.alpha * np.sin(terms.lam)
    uniq, inverse = np.unique(terms.freq_int, axis=0, return_inverse=True)
    a_hat = np.zeros(uniq.shape[0])
    b_hat = np.zeros(uniq.shape[0])
    np.add.at(a_hat, inverse, a)
    np.add.at(b_hat, inverse, b)
    args = (2.0 * np.pi / terms.period) * (coords @ uniq.T.astype(float))
    return np.sin(args) @ a_hat + np.cos(args) @ b_hat


def write_terms_csv(expansion: Expansion, path) -> None:
    """CSV export: k_1..k_m, alpha, beta_1..beta_d, lambda, a_coef, b_coef."""
    t = expansion.terms
    m = t.k.shape[1]
    d = t.beta.shape[1]
    header = ([f"k_{j + 1}" for j in range(m)] + ["alpha"]
              + [f"beta_{j + 1}" for j in range(d)]
              + ["lambda", "a_coef", "b_coef"])
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(len(t)):
            row = ([str(int(v)) for v in t.k[i]] + [repr(float(t.alpha[i]))]
                   + [repr(float(v)) for v in t.beta[i]]
                   + [repr(float(t.lam[i])), repr(float(t.a_coef[i])),
                      repr(float(t.b_coef[i]))])
            fh.write(",".join(row) + "\n")
