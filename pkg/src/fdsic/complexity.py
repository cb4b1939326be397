"""FLOP and parameter accounting for every canceller type.

Conventions (all counts are real-valued, per predicted sample):
  * complex multiply = 3 real multiplies + 5 real adds (8 FLOPs),
    complex add = 2 real adds;
  * per-neuron accumulation counts fan_in - 1 adds plus 1 bias add;
  * one FLOP per activation use (one per complex neuron, not per part);
  * polynomial basis values are assumed free, so a polynomial with
    M = L * N_bf coefficients costs 10M - 2;
  * network totals include the linear canceller (10L - 2) and the final
    2-FLOP add that combines the linear and nonlinear predictions;
  * recurrent layers are costed at one time step per predicted sample
    (streaming state reuse), not one window re-run per sample.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .activations import Activation
from .polynomial import n_basis_functions
from .specs import CancellerSpec

FLOP_CONVENTION_NOTE = (
    "complex multiply = 8 real FLOPs, complex add = 2, one FLOP per activation "
    "use, polynomial basis functions free, recurrent layers costed at one "
    "streaming step per sample"
)


@dataclass(frozen=True)
class StageCost:
    flops: int
    params: int


@dataclass(frozen=True)
class ComplexityReport:
    spec_id: str
    flops: int
    params: int
    breakdown: dict[str, StageCost]

    def to_json(self) -> dict:
        return {
            "spec": self.spec_id,
            "flops": self.flops,
            "params": self.params,
            "convention": FLOP_CONVENTION_NOTE,
            "breakdown": {k: {"flops": v.flops, "params": v.params}
                          for k, v in self.breakdown.items()},
        }

    def to_text(self) -> str:
        width = max(len(k) for k in list(self.breakdown) + ["total"])
        lines = [f"{self.spec_id}", f"{'stage':<{width}}  {'flops':>8}  {'params':>8}"]
        for name, cost in self.breakdown.items():
            lines.append(f"{name:<{width}}  {cost.flops:>8}  {cost.params:>8}")
        lines.append(f"{'total':<{width}}  {self.flops:>8}  {self.params:>8}")
        return "\n".join(lines)


def _linear_cost(L: int) -> StageCost:
    return StageCost(flops=10 * L - 2, params=2 * L)


def _poly_cost(P: int, L: int) -> StageCost:
    m = L * n_basis_functions(P)
    return StageCost(flops=10 * m - 2, params=2 * m)


def complexity_report(spec: CancellerSpec) -> ComplexityReport:
    """Full per-stage breakdown under the documented convention."""
    breakdown: dict[str, StageCost] = {}
    if spec.kind == "poly":
        breakdown["polynomial"] = _poly_cost(spec.P, spec.L)
    elif spec.kind == "linear":
        breakdown["linear_canceller"] = _linear_cost(spec.L)
    else:
        breakdown["linear_canceller"] = _linear_cost(spec.L)
        net = spec.net_spec()
        fan_in = net.input_arity
        for i, layer in enumerate(net.hidden):
            u = layer.width
            if spec.kind == "rnn":
                flops = 2 * u * (fan_in + u) + u
                params = u * (fan_in + u + 1)
            elif spec.kind == "cvnn":
                flops = 10 * u * fan_in + u
                params = 2 * u * (fan_in + 1)
                if layer.activation is Activation.MODRELU:
                    params += u
            else:
                flops = 2 * u * fan_in + u
                params = u * (fan_in + 1)
            breakdown[f"layer_{i}"] = StageCost(flops=flops, params=params)
            fan_in = u
        out_w = net.output_width
        if spec.kind == "cvnn":
            breakdown["output"] = StageCost(flops=10 * out_w * fan_in,
                                            params=2 * out_w * (fan_in + 1))
        else:
            breakdown["output"] = StageCost(flops=2 * out_w * fan_in,
                                            params=out_w * (fan_in + 1))
        breakdown["combine"] = StageCost(flops=2, params=0)
    return ComplexityReport(
        spec_id=spec.spec_id,
        flops=sum(c.flops for c in breakdown.values()),
        params=sum(c.params for c in breakdown.values()),
        breakdown=breakdown,
    )


def count_params(spec: CancellerSpec) -> int:
    """Stored real-valued parameter scalars for the canceller."""
    return complexity_report(spec).params


def count_flops(spec: CancellerSpec) -> int:
    """Equivalent real operations per predicted sample."""
    return complexity_report(spec).flops


def report_to_json_str(report: ComplexityReport) -> str:
    return json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n"
