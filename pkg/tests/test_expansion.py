import math

import numpy as np
import pytest

from helpers import random_net
from sinr.bessel import bessel_j
from sinr.errors import BudgetExceededError, DomainError
from sinr.expansion import (amplitude_bound, evaluate_terms, expand_deep,
                            expand_neuron, kmax_for_tail, lattice_tail,
                            write_terms_csv)
from sinr.network import (FrequencyBank, Layer, SinusoidalNet, input_features)


def neuron_value(net, index, coords):
    """Direct evaluation of one first-hidden-layer neuron (test oracle)."""
    feats = input_features(net, coords)
    eff = net.first_layer_effective()
    return np.sin(feats @ eff[index] + net.layers[0].bias[index])


def hidden_value(net, layer, index, coords):
    """Direct evaluation of a neuron at 1-based hidden ``layer``."""
    a = input_features(net, coords)
    for idx in range(layer):
        W = net.first_layer_effective() if idx == 0 else net.layers[idx].weights
        a = np.sin(a @ W.T + net.layers[idx].bias)
    return a[:, index]


def test_single_row_terms_are_bessel_amplitudes():
    bank = FrequencyBank(np.array([[1]]), 2 * math.pi, np.array([0.0]))
    net = SinusoidalNet(bank=bank, layers=[Layer(np.array([[1.3]]), np.array([0.0]))],
                        out_weights=np.array([[1.0]]), out_bias=np.array([0.0]))
    exp = expand_neuron(net, 0, k_max=3)
    terms = {t.k[0]: t for t in exp.terms}
    assert len(exp.terms) == 7
    for k in range(-3, 4):
        t = terms[k]
        assert t.alpha == bessel_j(k, 1.3)
        assert t.beta == (float(k),)  # (2*pi/p) * k with p = 2*pi
        assert t.lam == 0.0
        assert t.b_coef == 0.0  # lam = 0 so the cosine part vanishes


def test_even_index_pairs_cancel_when_bias_zero():
    bank = FrequencyBank(np.array([[1]]), 2 * math.pi, np.array([0.0]))
    net = SinusoidalNet(bank=bank, layers=[Layer(np.array([[0.9]]), np.array([0.0]))],
                        out_weights=np.array([[1.0]]), out_bias=np.array([0.0]))
    exp = expand_neuron(net, 0, k_max=12)
    x = np.linspace(-3, 3, 41)[:, None]
    total = evaluate_terms(exp.terms, x)
    odd_only = np.zeros(x.shape[0])
    for k in range(-11, 12, 2):
        odd_only += bessel_j(k, 0.9) * np.sin(k * x[:, 0])
    # even-index contributions cancel pairwise, so the two sums agree exactly
    assert np.max(np.abs(total - odd_only)) < 1e-14
    assert np.max(np.abs(total - np.sin(0.9 * np.sin(x[:, 0])))) <= exp.tail_bound + 1e-15


@pytest.mark.parametrize("seed", range(5))
def test_reconstruction_within_certificate(seed):
    rng = np.random.default_rng(seed)
    net = random_net(rng, m=3, d=2, widths=(3,), weight_scale=1.5)
    coords = rng.uniform(-1, 1, size=(100, 2))
    for i in range(3):
        w_row = net.first_layer_effective()[i]
        k_max = kmax_for_tail(w_row, 1e-9)
        exp = expand_neuron(net, i, k_max)
        assert exp.tail_bound < 1e-9
        err = np.max(np.abs(evaluate_terms(exp.terms, coords)
                            - neuron_value(net, i, coords)))
        assert err <= exp.tail_bound + 1e-12
        assert err < 1e-6


def test_beta_is_exact_integer_combination():
    rng = np.random.default_rng(42)
    net = random_net(rng, m=4, d=2, widths=(2,), period=2.0)
    exp = expand_neuron(net, 0, k_max=3)
    t = exp.terms
    assert t.freq_int.dtype == np.int64
    assert np.array_equal(t.freq_int, t.k @ net.bank.freq_int)
    assert np.array_equal(t.beta, (2 * np.pi / 2.0) * t.freq_int)


def test_amplitude_bound_dominates_terms():
    rng = np.random.default_rng(9)
    net = random_net(rng, m=3, d=2, widths=(2,), weight_scale=2.0)
    exp = expand_neuron(net, 0, k_max=4)
    w_row = net.first_layer_effective()[0]
    for t in exp.terms:
        bound = amplitude_bound(t.k, w_row)
        assert abs(t.alpha) <= bound + 1e-14
        if np.all(np.abs(w_row) <= 2.0):
            inv_fact = 1.0
            for kj in t.k:
                inv_fact /= math.factorial(abs(kj))
            assert bound <= inv_fact + 1e-14


def test_lattice_tail_bounds_brute_force_mass():
    # The closed-form tail must dominate the exact mass of any finite shell.
    w = np.array([1.2, -0.7, 1.9])
    for k_max in (2, 4, 6):
        shell = 0.0
        big = 20
        for k1 in range(-big, big + 1):
            for k2 in range(-big, big + 1):
                for k3 in range(-big, big + 1):
                    if max(abs(k1), abs(k2), abs(k3)) <= k_max:
                        continue
                    prod = 1.0
                    for kj, wj in zip((k1, k2, k3), w):
                        prod *= (abs(wj) / 2) ** abs(kj) / math.factorial(abs(kj))
                    shell += prod
        # domination up to float accumulation noise (exact in real arithmetic)
        assert lattice_tail(w, k_max) >= shell * (1 - 1e-12) - 1e-13
        # and it should not be wildly loose
        assert lattice_tail(w, k_max) <= shell * 1.001 + 1e-12


def test_kmax_for_tail():
    w = [1.5, 1.5, 1.5]
    k = kmax_for_tail(w, 1e-9)
    assert lattice_tail(w, k) < 1e-9
    assert k == 0 or lattice_tail(w, k - 1) >= 1e-9


def test_pruning_folds_mass_into_tail():
    rng = np.random.default_rng(31)
    net = random_net(rng, m=3, d=2, widths=(1,), weight_scale=1.5)
    full = expand_neuron(net, 0, k_max=10)
    pruned = expand_neuron(net, 0, k_max=10, prune_budget=1e-10)
    assert len(pruned.terms) < len(full.terms)
    assert pruned.tail_bound <= full.tail_bound + 1e-10
    coords = rng.uniform(-1, 1, size=(50, 2))
    err = np.max(np.abs(evaluate_terms(pruned.terms, coords)
                        - neuron_value(net, 0, coords)))
    assert err <= pruned.tail_bound + 1e-12


def test_learnable_mode_expands_effective_matrix():
    rng = np.random.default_rng(8)
    net = random_net(rng, m=3, d=2, widths=(2,), bound_mode="learnable")
    eff = net.first_layer_effective()
    plain = SinusoidalNet(
        bank=FrequencyBank(net.bank.freq_int.copy(), net.bank.period,
                           net.bank.shifts.copy()),
        layers=[Layer(eff.copy(), net.layers[0].bias.copy())],
        out_weights=net.out_weights.copy(), out_bias=net.out_bias.copy())
    a = expand_neuron(net, 1, k_max=5)
    b = expand_neuron(plain, 1, k_max=5)
    assert np.array_equal(a.terms.alpha, b.terms.alpha)
    assert a.tail_bound == b.tail_bound


def test_deep_depth1_matches_expand_neuron_exactly():
    rng = np.random.default_rng(12)
    net = random_net(rng, m=3, d=2, widths=(3, 2), weight_scale=1.0)
    flat = expand_neuron(
        SinusoidalNet(bank=net.bank, layers=[net.layers[0]],
                      out_weights=np.ones((1, 3)), out_bias=np.zeros(1)),
        neuron_index=1, k_max=4)
    deep = expand_deep(net, layer=1, neuron_index=1, k_max=4)
    assert len(deep.terms) == len(flat.terms)
    assert np.array_equal(deep.terms.levels[0], flat.terms.k)
    assert np.array_equal(deep.terms.alpha, flat.terms.alpha)
    assert np.array_equal(deep.terms.lam, flat.terms.lam)
    assert deep.tail_bound == flat.tail_bound


@pytest.mark.parametrize("seed", range(3))
def test_deep_depth2_reconstruction_within_certificate(seed):
    rng = np.random.default_rng(100 + seed)
    net = random_net(rng, m=2, d=2, widths=(2, 2), weight_scale=1.0)
    deep = expand_deep(net, layer=2, neuron_index=0, k_max=6)
    coords = rng.uniform(-1, 1, size=(200, 2))
    recon = evaluate_terms(deep.terms, coords)
    truth = hidden_value(net, 2, 0, coords)
    assert np.max(np.abs(recon - truth)) <= deep.tail_bound + 1e-10
    assert deep.tail_bound < 0.05  # k_max=6 with |W|<=1 certifies tightly


def test_deep_term_structure():
    rng = np.random.default_rng(55)
    net = random_net(rng, m=2, d=2, widths=(2, 1), weight_scale=0.8)
    deep = expand_deep(net, layer=2, neuron_index=0, k_max=2)
    assert len(deep.terms) == 5 ** 2 * 5 ** 2
    t = deep.terms[7]
    assert len(t.k_tuple) == 2
    assert len(t.k_tuple[0]) == 2  # bank level
    assert len(t.k_tuple[1]) == 2  # hidden level
    lam = (net.layers[1].bias[0]
           + np.dot(t.k_tuple[0], net.bank.shifts)
           + np.dot(t.k_tuple[1], net.layers[0].bias))
    assert abs(t.lam - lam) < 1e-12


def test_deep_budget_error():
    rng = np.random.default_rng(2)
    net = random_net(rng, m=3, d=2, widths=(3, 2), weight_scale=1.0)
    with pytest.raises(BudgetExceededError):
        expand_deep(net, layer=2, neuron_index=0, k_max=6, budget=1000)


def test_domain_errors():
    rng = np.random.default_rng(4)
    deep_net = random_net(rng, m=2, d=2, widths=(2, 2))
    with pytest.raises(DomainError):
        expand_neuron(deep_net, 0, 3)  # depth 2 needs expand_deep
    net = random_net(rng, m=2, d=2, widths=(2,))
    with pytest.raises(DomainError):
        expand_neuron(net, 5, 3)
    with pytest.raises(DomainError):
        expand_neuron(net, 0, -1)
    with pytest.raises(DomainError):
        expand_deep(deep_net, layer=3, neuron_index=0, k_max=2)


def test_terms_csv_round_trip(tmp_path):
    rng = np.random.default_rng(77)
    net = random_net(rng, m=2, d=2, widths=(2,))
    exp = expand_neuron(net, 0, k_max=2)
    path = tmp_path / "terms.csv"
    write_terms_csv(exp, path)
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "k_1,k_2,alpha,beta_1,beta_2,lambda,a_coef,b_coef"
    assert len(lines) == 1 + len(exp.terms)
    # repr round-trips doubles exactly
    first = lines[1].split(",")
    assert float(first[2]) == exp.terms.alpha[0]
    assert int(first[0]) == exp.terms.k[0, 0]
