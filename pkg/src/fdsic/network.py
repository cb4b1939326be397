"""Feed-forward network engine for real and complex-valued cancellers.

Dense stacks consume one L-sample window at a time: real networks see the
2L split real/imaginary features, complex networks the L complex samples.
Hidden layers apply activation(W a + b); output layers are affine.  The
backward pass propagates conjugate cogradients dLoss/dz* through complex
layers and plain gradients through real ones, and returns parameter
gradients shaped exactly like the parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .activations import (
    Activation, COMPLEX_ACTIVATIONS, REAL_ACTIVATIONS,
    complex_activation, real_activation,
)


class Field(str, Enum):
    REAL = "real"
    COMPLEX = "complex"


class NetKind(str, Enum):
    FFNN = "ffnn"
    CVNN = "cvnn"
    RNN = "rnn"


class SpecError(ValueError):
    """Inconsistent network specification."""


@dataclass(frozen=True)
class LayerSpec:
    width: int
    activation: Activation
    field: Field

    def __post_init__(self):
        if self.width < 1:
            raise SpecError("layer width must be positive")
        allowed = COMPLEX_ACTIVATIONS if self.field is Field.COMPLEX else REAL_ACTIVATIONS
        if self.activation not in allowed:
            raise SpecError(f"{self.activation.value} not valid on a {self.field.value} layer")
        if self.activation is Activation.IDENTITY:
            raise SpecError("identity activation is reserved for output layers")


@dataclass(frozen=True)
class NetSpec:
    """Architecture of one canceller network.

    FFNN consumes 2L reals per window and emits 2 reals, CVNN consumes L
    complex samples and emits 1 complex sample, RNN consumes L time steps
    of 2 reals and emits 2 reals.
    """

    kind: NetKind
    L: int
    hidden: tuple[LayerSpec, ...]

    def __post_init__(self):
        if self.L < 1:
            raise SpecError("window length L must be positive")
        if not self.hidden:
            raise SpecError("at least one hidden layer is required")
        want = Field.COMPLEX if self.kind is NetKind.CVNN else Field.REAL
        for layer in self.hidden:
            if layer.field is not want:
                raise SpecError(f"{self.kind.value} layers must be {want.value}")
            if self.kind is NetKind.RNN and layer.activation is not Activation.TANH:
                raise SpecError("recurrent layers use tanh")

    @property
    def input_arity(self) -> int:
        if self.kind is NetKind.CVNN:
            return self.L
        if self.kind is NetKind.FFNN:
            return 2 * self.L
        return 2  # RNN: per-step features

    @property
    def output_width(self) -> int:
        return 1 if self.kind is NetKind.CVNN else 2

    @property
    def widths(self) -> tuple[int, ...]:
        return tuple(layer.width for layer in self.hidden)


def make_net_spec(kind: NetKind | str, widths, activation: Activation | str,
                  L: int = 13) -> NetSpec:
    """Convenience constructor from plain widths and one hidden activation."""
    kind = NetKind(kind)
    activation = Activation(activation)
    fld = Field.COMPLEX if kind is NetKind.CVNN else Field.REAL
    hidden = tuple(LayerSpec(int(w), activation, fld) for w in np.atleast_1d(widths))
    return NetSpec(kind=kind, L=L, hidden=hidden)


@dataclass
class DenseParams:
    """Weights/bias of one dense (or output) layer; modrelu_bias only when
    the activation is modReLU."""

    W: np.ndarray
    b: np.ndarray
    modrelu_bias: np.ndarray | None = None

    def arrays(self, prefix: str):
        yield f"{prefix}.W", self.W
        yield f"{prefix}.b", self.b
        if self.modrelu_bias is not None:
            yield f"{prefix}.modrelu_bias", self.modrelu_bias

    def zeros_like(self) -> "DenseParams":
        return DenseParams(
            W=np.zeros_like(self.W), b=np.zeros_like(self.b),
            modrelu_bias=None if self.modrelu_bias is None else np.zeros_like(self.modrelu_bias),
        )


@dataclass
class RnnLayerParams:
    """One recurrent layer: input weights, recurrent weights, bias."""

    w_in: np.ndarray
    w_rec: np.ndarray
    bias: np.ndarray

    def arrays(self, prefix: str):
        yield f"{prefix}.w_in", self.w_in
        yield f"{prefix}.w_rec", self.w_rec
        yield f"{prefix}.bias", self.bias

    def zeros_like(self) -> "RnnLayerParams":
        return RnnLayerParams(np.zeros_like(self.w_in), np.zeros_like(self.w_rec),
                              np.zeros_like(self.bias))


@dataclass
class NetParams:
    """All trainable arrays of one network, hidden layers plus output."""

    layers: list
    out: DenseParams

    def arrays(self):
        for i, layer in enumerate(self.layers):
            yield from layer.arrays(f"layer{i}")
        yield from self.out.arrays("out")

    def zeros_like(self) -> "NetParams":
        return NetParams(layers=[l.zeros_like() for l in self.layers],
                         out=self.out.zeros_like())

    def copy(self) -> "NetParams":
        zero = self.zeros_like()
        for (_, dst), (_, src) in zip(zero.arrays(), self.arrays()):
            dst[...] = src
        return zero

    def n_scalars(self) -> int:
        """Number of stored real scalars (complex entries count twice)."""
        total = 0
        for _, arr in self.arrays():
            total += arr.size * (2 if np.iscomplexobj(arr) else 1)
        return total


def _glorot(rng: np.random.Generator, shape: tuple[int, int], complex_valued: bool) -> np.ndarray:
    fan_out, fan_in = shape
    a = np.sqrt(6.0 / (fan_in + fan_out))
    if not complex_valued:
        return rng.uniform(-a, a, size=shape)
    # halve the per-component variance so E|w|^2 matches the real scheme
    a /= np.sqrt(2.0)
    return rng.uniform(-a, a, size=shape) + 1j * rng.uniform(-a, a, size=shape)


def init_params(spec: NetSpec, seed: int) -> NetParams:
    """Glorot-uniform weights, zero biases, zero modReLU biases."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    cplx = spec.kind is NetKind.CVNN
    dtype = np.complex128 if cplx else np.float64
    layers = []
    fan_in = spec.input_arity
    for layer in spec.hidden:
        u = layer.width
        if spec.kind is NetKind.RNN:
            layers.append(RnnLayerParams(
                w_in=_glorot(rng, (u, fan_in), False),
                w_rec=_glorot(rng, (u, u), False),
                bias=np.zeros(u),
            ))
        else:
            layers.append(DenseParams(
                W=_glorot(rng, (u, fan_in), cplx),
                b=np.zeros(u, dtype=dtype),
                modrelu_bias=np.zeros(u) if layer.activation is Activation.MODRELU else None,
            ))
        fan_in = u
    out = DenseParams(W=_glorot(rng, (spec.output_width, fan_in), cplx),
                      b=np.zeros(spec.output_width, dtype=dtype))
    return NetParams(layers=layers, out=out)


# ---------------------------------------------------------------------------
# Forward/backward.  Caches hold whatever the matching backward step needs.

def _forward_dense(params: NetParams, spec: NetSpec, feats: np.ndarray):
    a = feats
    caches = []
    if spec.kind is NetKind.CVNN:
        for layer_spec, lp in zip(spec.hidden, params.layers):
            pre = a @ lp.W.T + lp.b
            h, fz, fzbar, fb = complex_activation(layer_spec.activation, pre, lp.modrelu_bias)
            caches.append((a, fz, fzbar, fb))
            a = h
    else:
        for layer_spec, lp in zip(spec.hidden, params.layers):
            pre = a @ lp.W.T + lp.b
            h, deriv = real_activation(layer_spec.activation, pre)
            caches.append((a, deriv))
            a = h
    out = a @ params.out.W.T + params.out.b
    caches.append(a)
    return out, caches


def _forward_rnn(params: NetParams, spec: NetSpec, feats: np.ndarray):
    """feats: (batch, L, 2) time-major windows, oldest step first."""
    seq = feats
    caches = []
    for lp in params.layers:
        B, L, _ = seq.shape
        u = lp.bias.size
        states = np.empty((B, L, u))
        h = np.zeros((B, u))
        for t in range(L):
            pre = seq[:, t] @ lp.w_in.T + h @ lp.w_rec.T + lp.bias
            h = np.tanh(pre)
            states[:, t] = h
        caches.append((seq, states))
        seq = states
    last = seq[:, -1]
    out = last @ params.out.W.T + params.out.b
    caches.append(last)
    return out, caches


def forward(params: NetParams, spec: NetSpec, feats: np.ndarray) -> np.ndarray:
    """Network output: (batch, 2) reals or (batch,) complex for CVNN."""
    _validate_feats(spec, feats)
    if spec.kind is NetKind.RNN:
        out, _ = _forward_rnn(params, spec, feats)
    else:
        out, _ = _forward_dense(params, spec, feats)
    return out[:, 0] if spec.kind is NetKind.CVNN else out


def _validate_feats(spec: NetSpec, feats: np.ndarray):
    if spec.kind is NetKind.RNN:
        if feats.ndim != 3 or feats.shape[1] != spec.L or feats.shape[2] != 2:
            raise SpecError(f"RNN features must be (batch, {spec.L}, 2)")
    elif feats.ndim != 2 or feats.shape[1] != spec.input_arity:
        raise SpecError(f"{spec.kind.value} features must be (batch, {spec.input_arity})")


def predict_complex(params: NetParams, spec: NetSpec, feats: np.ndarray) -> np.ndarray:
    """Output as one complex sample per window, whatever the field."""
    out = forward(params, spec, feats)
    if spec.kind is NetKind.CVNN:
        return out
    return out[:, 0] + 1j * out[:, 1]


def _backward_dense(params, spec, caches, d_out):
    grads = params.zeros_like()
    a_last = caches[-1]
    if spec.kind is NetKind.CVNN:
        # d_out is dLoss/dout*; affine output layer
        grads.out.W[...] = d_out.T @ np.conj(a_last)
        grads.out.b[...] = d_out.sum(axis=0)
        delta = d_out @ np.conj(params.out.W)
        for i in range(len(params.layers) - 1, -1, -1):
            a, fz, fzbar, fb = caches[i]
            lp, gp = params.layers[i], grads.layers[i]
            if fb is not None:
                gp.modrelu_bias[...] = 2.0 * np.real(np.conj(delta) * fb).sum(axis=0)
            delta = delta * np.conj(fz) + np.conj(delta) * fzbar
            gp.W[...] = delta.T @ np.conj(a)
            gp.b[...] = delta.sum(axis=0)
            delta = delta @ np.conj(lp.W)
    else:
        grads.out.W[...] = d_out.T @ a_last
        grads.out.b[...] = d_out.sum(axis=0)
        delta = d_out @ params.out.W
        for i in range(len(params.layers) - 1, -1, -1):
            a, deriv = caches[i]
            lp, gp = params.layers[i], grads.layers[i]
            delta = delta * deriv
            gp.W[...] = delta.T @ a
            gp.b[...] = delta.sum(axis=0)
            delta = delta @ lp.W
    return grads


def _backward_rnn(params, spec, caches, d_out):
    grads = params.zeros_like()
    last = caches[-1]
    grads.out.W[...] = d_out.T @ last
    grads.out.b[...] = d_out.sum(axis=0)
    d_last = d_out @ params.out.W

    n_layers = len(params.layers)
    d_states = None  # dLoss/dh for every step of the layer being processed
    for i in range(n_layers - 1, -1, -1):
        seq, states = caches[i]
        lp, gp = params.layers[i], grads.layers[i]
        B, L, _ = seq.shape
        if d_states is None:
            d_states = np.zeros_like(states)
            d_states[:, -1] = d_last
        d_seq = np.empty_like(seq)
        carry = np.zeros((B, lp.bias.size))
        for t in range(L - 1, -1, -1):
            h = states[:, t]
            d_pre = (d_states[:, t] + carry) * (1.0 - h * h)
            h_prev = states[:, t - 1] if t > 0 else np.zeros_like(h)
            gp.w_in += d_pre.T @ seq[:, t]
            gp.w_rec += d_pre.T @ h_prev
            gp.bias += d_pre.sum(axis=0)
            d_seq[:, t] = d_pre @ lp.w_in
            carry = d_pre @ lp.w_rec
        d_states = d_seq  # becomes the per-step gradient for the layer below
    return grads


def loss_and_gradients(params: NetParams, spec: NetSpec, feats: np.ndarray,
                       targets: np.ndarray):
    """Mean squared error |target - prediction|^2 and its gradients.

    Complex parameters receive dLoss/dtheta*, real parameters dLoss/dtheta.
    Raises on non-finite loss so training can surface divergence.
    """
    _validate_feats(spec, feats)
    targets = np.asarray(targets, dtype=np.complex128)
    B = feats.shape[0]
    # overflow here is the divergence signal, surfaced as an exception below
    with np.errstate(over="ignore", invalid="ignore"):
        if spec.kind is NetKind.RNN:
            out, caches = _forward_rnn(params, spec, feats)
        else:
            out, caches = _forward_dense(params, spec, feats)

        if spec.kind is NetKind.CVNN:
            err = out[:, 0] - targets
            loss = float(np.mean(np.abs(err) ** 2))
            d_out = (err / B)[:, None]
            backward = _backward_dense
        else:
            t2 = np.stack([targets.real, targets.imag], axis=1)
            err = out - t2
            loss = float(np.mean(np.sum(err ** 2, axis=1)))
            d_out = 2.0 * err / B
            backward = _backward_rnn if spec.kind is NetKind.RNN else _backward_dense

        if not np.isfinite(loss):
            raise FloatingPointError("non-finite training loss")
        return loss, backward(params, spec, caches, d_out)
