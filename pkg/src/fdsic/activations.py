"""Real and complex activation functions with derivative evaluation.

Complex activations return the pair (df/dz, df/dz*) of Wirtinger
derivatives computed from the real/imaginary partials; the backward pass
chains these pairs.  Phase-dependent activations define f(0) = 0 with
zero subgradient.
"""

from __future__ import annotations

from enum import Enum

import numpy as np


class Activation(str, Enum):
    TANH = "tanh"
    RELU = "relu"
    AMP_PHASE = "amp_phase"
    CARDIOID = "cardioid"
    MODRELU = "modrelu"
    CRELU = "crelu"
    ZRELU = "zrelu"
    IDENTITY = "identity"


REAL_ACTIVATIONS = frozenset({Activation.TANH, Activation.RELU, Activation.IDENTITY})
COMPLEX_ACTIVATIONS = frozenset({
    Activation.AMP_PHASE, Activation.CARDIOID, Activation.MODRELU,
    Activation.CRELU, Activation.ZRELU, Activation.IDENTITY,
})


def _safe_inv(r: np.ndarray) -> np.ndarray:
    """1/r with the r = 0 entries mapped to 0 (callers mask them out)."""
    return np.divide(1.0, r, out=np.zeros_like(r), where=r > 0)


def amp_phase(z: np.ndarray):
    """f(z) = tanh(|z|) * exp(i*arg z)."""
    r = np.abs(z)
    inv_r = _safe_inv(r)
    phase = z * inv_r
    t = np.tanh(r)
    sech2 = 1.0 - t * t
    f = t * phase
    fz = np.where(r > 0, 0.5 * sech2 + 0.5 * t * inv_r, 0.0).astype(np.complex128)
    fzbar = np.where(r > 0, phase * phase * (0.5 * sech2 - 0.5 * t * inv_r), 0.0)
    return f, fz, fzbar


def cardioid(z: np.ndarray):
    """f(z) = 0.5 * (1 + cos(arg z)) * z."""
    r = np.abs(z)
    inv_r = _safe_inv(r)
    cos_t = np.real(z) * inv_r
    sin_t = np.imag(z) * inv_r
    phase2 = (z * inv_r) ** 2
    f = 0.5 * (1.0 + cos_t) * z
    fz = np.where(r > 0, 0.5 * (1.0 + cos_t) + 0.25j * sin_t, 0.0)
    fzbar = np.where(r > 0, -0.25j * sin_t * phase2, 0.0)
    return f, fz, fzbar


def modrelu(z: np.ndarray, b: np.ndarray):
    """f(z) = max(0, |z| + b) * exp(i*arg z), with trainable real bias b.

    Also returns df/db (the real-parameter derivative of the complex
    output) for the bias gradient.
    """
    r = np.abs(z)
    inv_r = _safe_inv(r)
    phase = z * inv_r
    active = (r + b > 0) & (r > 0)
    f = np.where(active, (r + b) * phase, 0.0)
    fz = np.where(active, 1.0 + 0.5 * b * inv_r, 0.0).astype(np.complex128)
    fzbar = np.where(active, -0.5 * b * inv_r * phase * phase, 0.0)
    fb = np.where(active, phase, 0.0)
    return f, fz, fzbar, fb


def crelu(z: np.ndarray):
    """f(z) = ReLU(Re z) + i * ReLU(Im z)."""
    re_on = (np.real(z) > 0).astype(np.float64)
    im_on = (np.imag(z) > 0).astype(np.float64)
    f = np.maximum(np.real(z), 0.0) + 1j * np.maximum(np.imag(z), 0.0)
    fz = (0.5 * (re_on + im_on)).astype(np.complex128)
    fzbar = (0.5 * (re_on - im_on)).astype(np.complex128)
    return f, fz, fzbar


def zrelu(z: np.ndarray):
    """f(z) = z when arg z is in [0, pi/2], else 0."""
    gate = (np.real(z) >= 0) & (np.imag(z) >= 0) & (z != 0)
    f = np.where(gate, z, 0.0)
    fz = gate.astype(np.complex128)
    fzbar = np.zeros_like(fz)
    return f, fz, fzbar


def complex_identity(z: np.ndarray):
    return z, np.ones_like(z), np.zeros_like(z)


_COMPLEX_FUNCS = {
    Activation.AMP_PHASE: amp_phase,
    Activation.CARDIOID: cardioid,
    Activation.CRELU: crelu,
    Activation.ZRELU: zrelu,
    Activation.IDENTITY: complex_identity,
}


def complex_activation(kind: Activation, z: np.ndarray, modrelu_bias=None):
    """Value and Wirtinger pair (df/dz, df/dz*); modReLU also yields df/db."""
    z = np.asarray(z, dtype=np.complex128)
    if kind is Activation.MODRELU:
        if modrelu_bias is None:
            raise ValueError("modReLU needs its bias parameter")
        return modrelu(z, np.asarray(modrelu_bias))
    if kind not in _COMPLEX_FUNCS:
        raise ValueError(f"{kind.value} is not a complex activation")
    f, fz, fzbar = _COMPLEX_FUNCS[kind](z)
    return f, fz, fzbar, None


def real_activation(kind: Activation, x: np.ndarray):
    """Value and elementwise derivative for real layers."""
    x = np.asarray(x, dtype=np.float64)
    if kind is Activation.TANH:
        t = np.tanh(x)
        return t, 1.0 - t * t
    if kind is Activation.RELU:
        on = x > 0
        return np.where(on, x, 0.0), on.astype(np.float64)
    if kind is Activation.IDENTITY:
        return x, np.ones_like(x)
    raise ValueError(f"{kind.value} is not a real activation")


def activation_apply(kind: Activation, z, modrelu_bias=None):
    """Value only, dispatching on the activation's field."""
    if kind in (Activation.TANH, Activation.RELU):
        return real_activation(kind, z)[0]
    return complex_activation(kind, z, modrelu_bias)[0]
