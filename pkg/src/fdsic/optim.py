"""Adam optimizer over network parameter trees.

Complex parameters are updated as two independent reals via their float
views, so the moment accumulators and the update rule never special-case
the field.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .network import NetParams


def _real_view(arr: np.ndarray) -> np.ndarray:
    return arr.view(np.float64) if np.iscomplexobj(arr) else arr


@dataclass
class AdamState:
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(state: AdamState, params: NetParams, grads: NetParams) -> tuple[NetParams, AdamState]:
    """One Adam update with bias correction; parameters updated in place."""
    state.step += 1
    t = state.step
    bc1 = 1.0 - state.beta1 ** t
    bc2 = 1.0 - state.beta2 ** t
    for (name, p), (_, g) in zip(params.arrays(), grads.arrays()):
        pv, gv = _real_view(p), _real_view(g)
        if name not in state.m:
            state.m[name] = np.zeros_like(pv)
            state.v[name] = np.zeros_like(pv)
        m, v = state.m[name], state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * gv
        v *= state.beta2
        v += (1.0 - state.beta2) * gv * gv
        pv -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    return params, state
