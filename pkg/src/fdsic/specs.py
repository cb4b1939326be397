"""Declarative canceller descriptions shared by complexity accounting,
the experiment harness and the CLI.

String form (CLI and report ids): `poly:P=5,L=13`, `linear:L=13`,
`ffnn:18`, `cvnn:4-4-4`, `rnn:20,L=13`, `cvnn:10,activation=cardioid`.
"""

from __future__ import annotations

from dataclasses import dataclass

from .activations import Activation
from .network import NetKind, NetSpec, make_net_spec
from .signals import ConfigError

DEFAULT_L = 13
DEFAULT_ACTIVATION = {
    NetKind.FFNN: Activation.RELU,
    NetKind.CVNN: Activation.CRELU,
    NetKind.RNN: Activation.TANH,
}


@dataclass(frozen=True)
class CancellerSpec:
    """One canceller: polynomial {P, L}, bare linear {L}, or a network."""

    kind: str  # "poly" | "linear" | "ffnn" | "cvnn" | "rnn"
    L: int = DEFAULT_L
    P: int | None = None
    widths: tuple[int, ...] = ()
    activation: Activation | None = None

    def __post_init__(self):
        if self.activation is not None and not isinstance(self.activation, Activation):
            object.__setattr__(self, "activation", Activation(self.activation))
        if isinstance(self.widths, list):
            object.__setattr__(self, "widths", tuple(self.widths))
        if self.kind == "poly":
            if self.P is None or self.P < 1 or self.P % 2 == 0:
                raise ConfigError("polynomial spec needs an odd positive P")
        elif self.kind == "linear":
            pass
        elif self.kind in ("ffnn", "cvnn", "rnn"):
            if not self.widths or any(w < 1 for w in self.widths):
                raise ConfigError(f"{self.kind} spec needs positive layer widths")
        else:
            raise ConfigError(f"unknown canceller kind {self.kind!r}")
        if self.L < 1:
            raise ConfigError("L must be positive")

    @property
    def is_network(self) -> bool:
        return self.kind in ("ffnn", "cvnn", "rnn")

    def net_spec(self) -> NetSpec:
        if not self.is_network:
            raise ConfigError(f"{self.kind} spec has no network architecture")
        act = self.activation or DEFAULT_ACTIVATION[NetKind(self.kind)]
        return make_net_spec(self.kind, self.widths, act, L=self.L)

    @property
    def spec_id(self) -> str:
        if self.kind == "poly":
            return f"poly(P={self.P},L={self.L})"
        if self.kind == "linear":
            return f"linear(L={self.L})"
        widths = "-".join(str(w) for w in self.widths)
        act = self.activation
        tag = "" if act is None or act is DEFAULT_ACTIVATION[NetKind(self.kind)] else f",{act.value}"
        lag = "" if self.L == DEFAULT_L else f",L={self.L}"
        return f"{self.kind}({widths}{tag}{lag})"


def parse_spec(text: str) -> CancellerSpec:
    """Parse the CLI/report spec syntax described in the module docstring."""
    head, _, rest = text.strip().partition(":")
    kind = head.strip().lower()
    kwargs: dict = {}
    widths: tuple[int, ...] = ()
    for token in filter(None, (t.strip() for t in rest.split(","))):
        if "=" in token:
            key, _, val = token.partition("=")
            key = key.strip().lower()
            if key == "p":
                kwargs["P"] = int(val)
            elif key == "l":
                kwargs["L"] = int(val)
            elif key == "activation":
                kwargs["activation"] = Activation(val.strip().lower())
            else:
                raise ConfigError(f"unknown spec field {key!r} in {text!r}")
        else:
            try:
                widths = tuple(int(w) for w in token.split("-"))
            except ValueError as exc:
                raise ConfigError(f"bad width list {token!r} in {text!r}") from exc
    if widths:
        kwargs["widths"] = widths
    try:
        return CancellerSpec(kind=kind, **kwargs)
    except TypeError as exc:
        raise ConfigError(f"invalid spec {text!r}: {exc}") from exc
