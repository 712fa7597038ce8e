"""Shared test utilities: random net factories and finite-difference oracles."""

import numpy as np

from sinr.network import (FrequencyBank, Layer, SinusoidalNet, forward,
                          half_mse)


def random_bank(rng, m, d, period=2.0, max_freq=3):
    """Draw m distinct integer rows (no zero row, no negated duplicates)."""
    rows, seen = [], set()
    while len(rows) < m:
        row = tuple(int(v) for v in rng.integers(-max_freq, max_freq + 1, size=d))
        if all(v == 0 for v in row):
            continue
        if row in seen or tuple(-v for v in row) in seen:
            continue
        seen.add(row)
        rows.append(row)
    shifts = rng.uniform(-np.pi / 2, np.pi / 2, size=m)
    return FrequencyBank(np.array(rows, dtype=np.int64), period, shifts)


def random_net(rng, m=3, d=2, widths=(4,), channels=1, bound_mode="none",
               weight_scale=1.0, period=2.0, max_freq=3):
    """A random net with the given hidden widths; weights ~ U(-scale, scale)."""
    bank = random_bank(rng, m, d, period=period, max_freq=max_freq)
    layers, fan_in = [], m
    for width in widths:
        W = rng.uniform(-weight_scale, weight_scale, size=(width, fan_in))
        b = rng.uniform(-1.0, 1.0, size=width)
        layers.append(Layer(W, b))
        fan_in = width
    C = rng.uniform(-1.0, 1.0, size=(channels, fan_in))
    e = rng.uniform(-0.5, 0.5, size=channels)
    bounds = None
    if bound_mode != "none":
        bounds = rng.uniform(0.3, 1.5, size=m)
    return SinusoidalNet(bank=bank, layers=layers, out_weights=C, out_bias=e,
                         bound_mode=bound_mode, bounds=bounds)


def data_loss(net, coords, targets):
    return half_mse(forward(net, coords) - targets)


def _param_views(net, include_shifts=False):
    """(label, array) pairs for every trainable parameter tensor."""
    views = []
    for idx, layer in enumerate(net.layers):
        views.append((f"W{idx}", layer.weights))
        views.append((f"b{idx}", layer.bias))
    views.append(("C", net.out_weights))
    views.append(("e", net.out_bias))
    if net.bound_mode == "learnable":
        views.append(("bounds", net.bounds))
    if include_shifts:
        views.append(("shifts", net.bank.shifts))
    return views


def fd_param_gradients(net, coords, targets, h=1e-5, include_shifts=False):
    """Central-difference gradients of the half-MSE data loss, per tensor."""
    grads = {}
    for label, arr in _param_views(net, include_shifts):
        g = np.zeros_like(arr)
        flat, gflat = arr.ravel(), g.ravel()
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + h
            hi = data_loss(net, coords, targets)
            flat[i] = keep - h
            lo = data_loss(net, coords, targets)
            flat[i] = keep
            gflat[i] = (hi - lo) / (2.0 * h)
        grads[label] = g
    return grads


def analytic_param_gradients(net, coords, targets, include_shifts=False):
    from sinr.network import param_gradients

    residuals = forward(net, coords) - targets
    g = param_gradients(net, coords, residuals, include_shifts=include_shifts)
    out = {}
    for idx, (dW, db) in enumerate(g.layers):
        out[f"W{idx}"] = dW
        out[f"b{idx}"] = db
    out["C"] = g.out_weights
    out["e"] = g.out_bias
    if g.bounds is not None:
        out["bounds"] = g.bounds
    if g.shifts is not None:
        out["shifts"] = g.shifts
    return out


def gradient_rel_error(net, coords, targets, h=1e-5, include_shifts=False):
    """Max relative disagreement between analytic and central-difference grads."""
    fd = fd_param_gradients(net, coords, targets, h=h, include_shifts=include_shifts)
    an = analytic_param_gradients(net, coords, targets, include_shifts=include_shifts)
    worst = 0.0
    for label, g_fd in fd.items():
        g_an = an[label]
        scale = np.maximum(np.maximum(np.abs(g_fd), np.abs(g_an)), 1e-2)
        worst = max(worst, float(np.max(np.abs(g_an - g_fd) / scale)))
    return worst
