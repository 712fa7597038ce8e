"""Core sinusoidal-network types, evaluation, gradients, and serialization.

A network is sin-layer composition over a frozen bank of integer frequencies:
the input stage computes sin(2*pi/period * F x + shift) for every bank row F,
hidden sine layers follow, and a linear head maps the last hidden activation
to the output channels.  Because the bank is integer, the whole function is
exactly periodic with the configured period along every axis.

Weight bounding comes in three modes:
  * "none"      - plain weights.
  * "clamped"   - weights are stored plainly; training projects them into
                  per-column boxes [-c_j, c_j] after every step (the box
                  vector lives in ``bounds``).
  * "learnable" - the first hidden layer evaluates tanh(W) * diag(c) so the
                  effective weight magnitude never exceeds the learned,
                  regularized bound vector c (stored in ``bounds``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError

BOUND_MODES = ("none", "clamped", "learnable")


def _as_float(a, name, ndim):
    arr = np.asarray(a, dtype=float)
    if arr.ndim != ndim:
        raise DomainError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite entries")
    return arr


@dataclass
class FrequencyBank:
    """Frozen integer frequency rows, one period, and per-row phase shifts."""

    freq_int: np.ndarray  # (m, d) integers
    period: float
    shifts: np.ndarray  # (m,)

    def __post_init__(self):
        freq = np.asarray(self.freq_int)
        if freq.ndim != 2:
            raise DomainError("freq_int must be an (m, d) matrix")
        if not np.issubdtype(freq.dtype, np.integer):
            rounded = np.rint(np.asarray(freq, dtype=float))
            if not np.array_equal(rounded, np.asarray(freq, dtype=float)):
                raise DomainError("freq_int rows must be integers")
            freq = rounded.astype(np.int64)
        self.freq_int = freq.astype(np.int64)
        self.period = float(self.period)
        if not self.period > 0:
            raise DomainError("period must be positive")
        self.shifts = _as_float(self.shifts, "shifts", 1)
        if self.shifts.shape[0] != self.freq_int.shape[0]:
            raise DomainError("shifts length must match the number of rows")
        if np.any(np.all(self.freq_int == 0, axis=1)):
            raise DomainError("zero frequency rows are not allowed")
        seen = set()
        for row in self.freq_int:
            key = tuple(int(v) for v in row)
            neg = tuple(-v for v in key)
            if key in seen or neg in seen:
                raise DomainError(f"duplicate or negated-duplicate row {key}")
            seen.add(key)

    @property
    def size(self) -> int:
        return int(self.freq_int.shape[0])

    @property
    def dim(self) -> int:
        return int(self.freq_int.shape[1])

    def angular(self) -> np.ndarray:
        """Rows in radians per coordinate unit: (2*pi/period) * freq_int."""
        return (2.0 * np.pi / self.period) * self.freq_int.astype(float)


@dataclass
class Layer:
    weights: np.ndarray  # (fan_out, fan_in)
    bias: np.ndarray  # (fan_out,)

    def __post_init__(self):
        self.weights = _as_float(self.weights, "weights", 2)
        self.bias = _as_float(self.bias, "bias", 1)
        if self.bias.shape[0] != self.weights.shape[0]:
            raise DomainError("bias length must match weight rows")


@dataclass
class SinusoidalNet:
    bank: FrequencyBank
    layers: list  # list[Layer], depth >= 1
    out_weights: np.ndarray  # (channels, last_width)
    out_bias: np.ndarray  # (channels,)
    bound_mode: str = "none"
    bounds: Optional[np.ndarray] = None  # (m,) iff bound_mode != "none"

    def __post_init__(self):
        if not self.layers:
            raise DomainError("at least one hidden layer is required")
        self.layers = [l if isinstance(l, Layer) else Layer(*l) for l in self.layers]
        fan_in = self.bank.size
        for idx, layer in enumerate(self.layers):
            if layer.weights.shape[1] != fan_in:
                raise DomainError(f"layer {idx} expects fan-in {fan_in}, "
                                  f"got {layer.weights.shape[1]}")
            fan_in = layer.weights.shape[0]
        self.out_weights = _as_float(self.out_weights, "out_weights", 2)
        self.out_bias = _as_float(self.out_bias, "out_bias", 1)
        if self.out_weights.shape[1] != fan_in:
            raise DomainError("output weights do not match last hidden width")
        if self.out_bias.shape[0] != self.out_weights.shape[0]:
            raise DomainError("output bias length must match channel count")
        if self.bound_mode not in BOUND_MODES:
            raise DomainError(f"bound_mode must be one of {BOUND_MODES}")
        if self.bound_mode == "none":
            if self.bounds is not None:
                raise DomainError("bounds must be absent when bound_mode is none")
        else:
            if self.bounds is None:
                raise DomainError(f"bounds required for mode {self.bound_mode!r}")
            self.bounds = _as_float(self.bounds, "bounds", 1)
            if self.bounds.shape[0] != self.bank.size:
                raise DomainError("bounds length must equal the bank size")
            if np.any(self.bounds <= 0):
                raise DomainError("bounds must be positive")

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def channels(self) -> int:
        return int(self.out_weights.shape[0])

    def first_layer_effective(self) -> np.ndarray:
        """First hidden matrix as actually applied (tanh reparam if learnable)."""
        W = self.layers[0].weights
        if self.bound_mode == "learnable":
            return np.tanh(W) * self.bounds[None, :]
        return W

    def copy(self) -> "SinusoidalNet":
        return SinusoidalNet(
            bank=FrequencyBank(self.bank.freq_int.copy(), self.bank.period,
                               self.bank.shifts.copy()),
            layers=[Layer(l.weights.copy(), l.bias.copy()) for l in self.layers],
            out_weights=self.out_weights.copy(),
            out_bias=self.out_bias.copy(),
            bound_mode=self.bound_mode,
            bounds=None if self.bounds is None else self.bounds.copy(),
        )


@dataclass
class SignalSample:
    coords: np.ndarray  # (d,)
    value: np.ndarray  # (channels,)


@dataclass
class Dataset:
    """A batch of coordinate/value pairs, optionally carrying grid provenance."""

    coords: np.ndarray  # (N, d)
    values: np.ndarray  # (N, channels)
    height: int = 0
    width: int = 0

    def __post_init__(self):
        self.coords = _as_float(self.coords, "coords", 2)
        self.values = _as_float(self.values, "values", 2)
        if self.coords.shape[0] != self.values.shape[0]:
            raise DomainError("coords and values must pair one-to-one")

    def __len__(self):
        return int(self.coords.shape[0])

    @property
    def channels(self) -> int:
        return int(self.values.shape[1])


def _check_coords(net: SinusoidalNet, coords) -> np.ndarray:
    coords = np.asarray(coords, dtype=float)
    if coords.ndim == 1:
        coords = coords[None, :]
    if coords.ndim != 2 or coords.shape[1] != net.bank.dim:
        raise DomainError(f"coords must be (batch, {net.bank.dim})")
    return coords


def input_features(net: SinusoidalNet, coords: np.ndarray) -> np.ndarray:
    """Frozen input stage: sin(angular row . x + shift), shape (batch, m)."""
    coords = _check_coords(net, coords)
    return np.sin(coords @ net.bank.angular().T + net.bank.shifts)


def _run_layers(net: SinusoidalNet, feats: np.ndarray):
    """Hidden pre-activations and activations from the input features."""
    zs, hs = [], []
    a = feats
    for idx, layer in enumerate(net.layers):
        W = net.first_layer_effective() if idx == 0 else layer.weights
        z = a @ W.T + layer.bias
        a = np.sin(z)
        zs.append(z)
        hs.append(a)
    return zs, hs


def forward_from_features(net: SinusoidalNet, feats: np.ndarray) -> np.ndarray:
    _, hs = _run_layers(net, feats)
    return hs[-1] @ net.out_weights.T + net.out_bias


def forward(net: SinusoidalNet, coords) -> np.ndarray:
    """Evaluate the network, returning (batch, channels)."""
    return forward_from_features(net, input_features(net, coords))


def input_gradient(net: SinusoidalNet, coords) -> np.ndarray:
    """Exact d(output)/d(coords), shape (batch, channels, d)."""
    coords = _check_coords(net, coords)
    omega = net.bank.angular()
    z0 = coords @ omega.T + net.bank.shifts
    grad = np.cos(z0)[:, :, None] * omega[None, :, :]  # (B, m, d)
    a = np.sin(z0)
    for idx, layer in enumerate(net.layers):
        W = net.first_layer_effective() if idx == 0 else layer.weights
        z = a @ W.T + layer.bias
        grad = np.cos(z)[:, :, None] * np.einsum("oi,bid->bod", W, grad)
        a = np.sin(z)
    return np.einsum("co,bod->bcd", net.out_weights, grad)


@dataclass
class Gradients:
    """Exact gradients of 0.5 * mean(residual^2) w.r.t. trainable parameters."""

    layers: list  # list[(dW, db)] aligned with net.layers
    out_weights: np.ndarray
    out_bias: np.ndarray
    bounds: Optional[np.ndarray] = None  # only in learnable mode
    shifts: Optional[np.ndarray] = None  # only when requested


def half_mse(residuals: np.ndarray) -> float:
    residuals = np.asarray(residuals, dtype=float)
    return 0.5 * float(np.mean(residuals * residuals))


def param_gradients(net: SinusoidalNet, coords, residuals,
                    include_shifts: bool = False) -> Gradients:
    """Backpropagate 0.5 * mean(residual^2) through the network.

    ``residuals`` is forward(net, coords) - targets as computed by the caller;
    the mean runs over every batch x channel entry.  The frequency rows are
    always frozen; shifts receive a gradient only when ``include_shifts``.
    """
    coords = _check_coords(net, coords)
    residuals = np.asarray(residuals, dtype=float)
    if residuals.shape != (coords.shape[0], net.channels):
        raise DomainError("residuals must be (batch, channels)")

    omega = net.bank.angular()
    z0 = coords @ omega.T + net.bank.shifts
    feats = np.sin(z0)
    zs, hs = _run_layers(net, feats)
    acts = [feats] + hs  # acts[l] feeds layer l

    gout = residuals / residuals.size  # d(loss)/d(output)
    grad_C = gout.T @ hs[-1]
    grad_e = gout.sum(axis=0)

    delta = (gout @ net.out_weights) * np.cos(zs[-1])
    layer_grads: list = [None] * net.depth
    for idx in range(net.depth - 1, 0, -1):
        layer = net.layers[idx]
        layer_grads[idx] = (delta.T @ acts[idx], delta.sum(axis=0))
        delta = (delta @ layer.weights) * np.cos(zs[idx - 1])

    grad_eff = delta.T @ acts[0]
    grad_b0 = delta.sum(axis=0)
    grad_bounds = None
    if net.bound_mode == "learnable":
        th = np.tanh(net.layers[0].weights)
        grad_W0 = grad_eff * (1.0 - th * th) * net.bounds[None, :]
        grad_bounds = (grad_eff * th).sum(axis=0)
    else:
        grad_W0 = grad_eff
    layer_grads[0] = (grad_W0, grad_b0)

    grad_shifts = None
    if include_shifts:
        dfeats = delta @ net.first_layer_effective()
        grad_shifts = (dfeats * np.cos(z0)).sum(axis=0)

    return Gradients(layers=layer_grads, out_weights=grad_C, out_bias=grad_e,
                     bounds=grad_bounds, shifts=grad_shifts)


# --- serialization ---------------------------------------------------------
# Wire schema (all matrices row-major nested lists):
#   {"freq_int", "period", "shifts", "layers": [{"W", "b"}, ...],
#    "C", "e", "bound_mode", "bounds"}

def net_to_dict(net: SinusoidalNet) -> dict:
    return {
        "freq_int": net.bank.freq_int.tolist(),
        "period": float(net.bank.period),
        "shifts": net.bank.shifts.tolist(),
        "layers": [{"W": l.weights.tolist(), "b": l.bias.tolist()}
                   for l in net.layers],
        "C": net.out_weights.tolist(),
        "e": net.out_bias.tolist(),
        "bound_mode": net.bound_mode,
        "bounds": None if net.bounds is None else net.bounds.tolist(),
    }


def net_from_dict(payload: dict) -> SinusoidalNet:
    try:
        bank = FrequencyBank(
            freq_int=np.asarray(payload["freq_int"], dtype=np.int64),
            period=float(payload["period"]),
            shifts=np.asarray(payload["shifts"], dtype=float),
        )
        layers = [Layer(np.asarray(l["W"], dtype=float),
                        np.asarray(l["b"], dtype=float))
                  for l in payload["layers"]]
        bounds = payload.get("bounds")
        return SinusoidalNet(
            bank=bank,
            layers=layers,
            out_weights=np.asarray(payload["C"], dtype=float),
            out_bias=np.asarray(payload["e"], dtype=float),
            bound_mode=payload.get("bound_mode", "none"),
            bounds=None if bounds is None else np.asarray(bounds, dtype=float),
        )
    except KeyError as exc:
        raise DomainError(f"net payload is missing field {exc}") from exc


def net_to_json(net: SinusoidalNet) -> str:
    return json.dumps(net_to_dict(net), indent=2)


def net_from_json(text: str) -> SinusoidalNet:
    return net_from_dict(json.loads(text))


def save_net(net: SinusoidalNet, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(net_to_json(net))
        fh.write("\n")


def load_net(path) -> SinusoidalNet:
    with open(path, "r", encoding="utf-8") as fh:
        return net_from_json(fh.read())
