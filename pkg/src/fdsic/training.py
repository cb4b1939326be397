"""Training and evaluation of neural cancellers of the nonlinear residual.

The network learns y_nl = y - y_lin, standardized by its training-range
RMS; at inference the linear FIR prediction and the rescaled network
output are added back together.  Training a network on raw y is the same
code path with a zero-tap linear canceller.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .network import (
    Activation, DenseParams, NetKind, NetParams, NetSpec, RnnLayerParams,
    init_params, loss_and_gradients, make_net_spec, predict_complex,
)
from .optim import AdamState, adam_step
from .polynomial import LinearCanceller, PolyModel, nonlinear_target, poly_predict
from .signals import ConfigError, Dataset, cancellation_db

LR_RANGE = (1e-6, 0.05)
BATCH_RANGE = (4, 64)


class TrainingDivergedError(RuntimeError):
    """Loss became non-finite; carries the epoch and batch index."""

    def __init__(self, epoch: int, batch: int):
        super().__init__(f"training diverged at epoch {epoch}, batch {batch}")
        self.epoch = epoch
        self.batch = batch


@dataclass(frozen=True)
class TrainConfig:
    lr: float
    batch_size: int
    epochs: int = 50
    seed: int = 0

    def __post_init__(self):
        if not LR_RANGE[0] <= self.lr <= LR_RANGE[1]:
            raise ConfigError(f"lr must be within {LR_RANGE}")
        if not BATCH_RANGE[0] <= self.batch_size <= BATCH_RANGE[1]:
            raise ConfigError(f"batch_size must be within {BATCH_RANGE}")
        if self.epochs < 1:
            raise ConfigError("epochs must be positive")


def window_matrix(x: np.ndarray, L: int) -> np.ndarray:
    """(n, L) lag windows, oldest sample first, zero-padded below index 0."""
    padded = np.concatenate([np.zeros(L - 1, dtype=np.complex128), x]) if L > 1 else x
    return np.lib.stride_tricks.sliding_window_view(padded, L)


def build_features(x: np.ndarray, spec: NetSpec, rows=None) -> np.ndarray:
    """Per-window network inputs: 2L reals (FFNN), L complex (CVNN) or
    L steps x 2 reals (RNN)."""
    windows = window_matrix(np.asarray(x, dtype=np.complex128), spec.L)
    if rows is not None:
        windows = windows[np.asarray(rows, dtype=np.intp)]
    if spec.kind is NetKind.CVNN:
        return np.ascontiguousarray(windows)
    if spec.kind is NetKind.FFNN:
        return np.concatenate([windows.real, windows.imag], axis=1)
    return np.stack([windows.real, windows.imag], axis=2)


def zero_linear(L: int) -> LinearCanceller:
    """Disabled linear stage (all-zero taps), for raw-y training."""
    return LinearCanceller(np.zeros(L, dtype=np.complex128))


@dataclass
class NetStage:
    """Trained network plus the target scale that de-standardizes it."""

    spec: NetSpec
    params: NetParams
    scale: float

    def predict_nl(self, x: np.ndarray, rows) -> np.ndarray:
        feats = build_features(x, self.spec, rows)
        return self.scale * predict_complex(self.params, self.spec, feats)

    @property
    def L(self) -> int:
        return self.spec.L


@dataclass
class PolyStage:
    """Polynomial model routed through the same evaluation path as networks."""

    model: PolyModel

    def predict_nl(self, x: np.ndarray, rows) -> np.ndarray:
        return poly_predict(self.model, x, rows)

    @property
    def L(self) -> int:
        return self.model.L


@dataclass
class NullStage:
    """Nonlinear stage that predicts zero (linear-only cancellation)."""

    window: int = 1

    def predict_nl(self, x: np.ndarray, rows) -> np.ndarray:
        return np.zeros(np.asarray(rows).size, dtype=np.complex128)

    @property
    def L(self) -> int:
        return self.window


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    test_total_db: float
    test_nl_db: float


@dataclass
class TrainedCanceller:
    """Composed canceller: linear FIR taps plus a nonlinear stage."""

    lin: LinearCanceller
    nl: NetStage | PolyStage
    train_config: TrainConfig | None = None
    history: list[EpochStats] = field(default_factory=list)

    def predict(self, x: np.ndarray, rows) -> np.ndarray:
        return self.lin.predict(x, rows) + self.nl.predict_nl(x, rows)


def _metric_rows(rows, skip: int) -> np.ndarray:
    """Drop indices whose windows need zero-padded history."""
    rows = np.asarray(rows, dtype=np.intp)
    return rows[rows >= skip]


def evaluate(trained: TrainedCanceller, dataset: Dataset, rows) -> float:
    """Total (linear + nonlinear) cancellation in dB over the given rows."""
    skip = max(trained.lin.L, trained.nl.L) - 1
    rows = _metric_rows(rows, skip)
    xs, ys = dataset.x.samples, dataset.y.samples
    resid = ys[rows] - trained.predict(xs, rows)
    return cancellation_db(ys[rows], resid)


def nonlinear_cancellation_db(trained: TrainedCanceller, dataset: Dataset, rows) -> float:
    """Cancellation of the residual y_nl by the nonlinear stage alone."""
    skip = max(trained.lin.L, trained.nl.L) - 1
    rows = _metric_rows(rows, skip)
    xs, ys = dataset.x.samples, dataset.y.samples
    y_nl = ys[rows] - trained.lin.predict(xs, rows)
    return cancellation_db(y_nl, y_nl - trained.nl.predict_nl(xs, rows))


def linear_only_db(lin: LinearCanceller, dataset: Dataset, rows) -> float:
    """Cancellation of the linear stage alone, on the same metric rows."""
    rows = _metric_rows(rows, lin.L - 1)
    xs, ys = dataset.x.samples, dataset.y.samples
    return cancellation_db(ys[rows], ys[rows] - lin.predict(xs, rows))


def train(spec: NetSpec, dataset: Dataset, lin: LinearCanceller,
          cfg: TrainConfig, train_rows=None) -> TrainedCanceller:
    """Minibatch Adam training of one network on the nonlinear residual.

    train_rows defaults to the dataset's training range; per-epoch history
    records the test-range cancellation of the composed canceller.
    """
    xs, ys = dataset.x.samples, dataset.y.samples
    y_nl = nonlinear_target(ys, lin, xs)
    rows = np.asarray(dataset.train_range if train_rows is None else train_rows,
                      dtype=np.intp)

    scale = float(np.sqrt(np.mean(np.abs(y_nl[rows]) ** 2)))
    if scale == 0.0:
        scale = 1.0
    targets = y_nl / scale

    ss = np.random.SeedSequence(cfg.seed)
    init_seed, shuffle_seed = (int(s.generate_state(1)[0]) for s in ss.spawn(2))
    params = init_params(spec, init_seed)
    shuffle_rng = np.random.Generator(np.random.PCG64(shuffle_seed))
    adam = AdamState(lr=cfg.lr)

    feats_all = build_features(xs, spec, None)
    test_rows = _metric_rows(dataset.test_range, max(lin.L, spec.L) - 1)
    test_feats = feats_all[test_rows]
    lin_test = lin.predict(xs, test_rows)

    stage = NetStage(spec=spec, params=params, scale=scale)
    trained = TrainedCanceller(lin=lin, nl=stage, train_config=cfg)

    n_batches = rows.size // cfg.batch_size
    for epoch in range(cfg.epochs):
        perm = shuffle_rng.permutation(rows)
        epoch_loss = 0.0
        for b in range(n_batches):
            batch = perm[b * cfg.batch_size:(b + 1) * cfg.batch_size]
            try:
                loss, grads = loss_and_gradients(params, spec, feats_all[batch],
                                                 targets[batch])
            except FloatingPointError as exc:
                raise TrainingDivergedError(epoch, b) from exc
            adam_step(adam, params, grads)
            epoch_loss += loss
        pred_nl = scale * predict_complex(params, spec, test_feats)
        resid = ys[test_rows] - lin_test - pred_nl
        total_db = cancellation_db(ys[test_rows], resid)
        nl_db = cancellation_db(y_nl[test_rows], y_nl[test_rows] - pred_nl)
        trained.history.append(EpochStats(
            epoch=epoch,
            train_loss=epoch_loss / max(n_batches, 1),
            test_total_db=total_db,
            test_nl_db=nl_db,
        ))
    return trained


# ---------------------------------------------------------------------------
# Serialization: JSON with [re, im] pairs for complex scalars; floats are
# emitted with repr, so a round-trip is bit-exact at double precision.

def _arr_to_json(arr: np.ndarray):
    if np.iscomplexobj(arr):
        return np.stack([arr.real, arr.imag], axis=-1).tolist()
    return arr.tolist()


def _arr_from_json(data, complex_valued: bool) -> np.ndarray:
    arr = np.asarray(data, dtype=np.float64)
    if complex_valued:
        return np.ascontiguousarray(arr[..., 0] + 1j * arr[..., 1])
    return arr


def _spec_to_json(spec: NetSpec) -> dict:
    return {
        "kind": spec.kind.value,
        "L": spec.L,
        "widths": list(spec.widths),
        "activation": spec.hidden[0].activation.value,
    }


def spec_from_json(d: dict) -> NetSpec:
    return make_net_spec(d["kind"], d["widths"], d["activation"], L=int(d["L"]))


def trained_to_json(trained: TrainedCanceller) -> dict:
    doc = {
        "format_version": 1,
        "linear_taps": _arr_to_json(trained.lin.taps),
        "train_config": None if trained.train_config is None else {
            "lr": trained.train_config.lr,
            "batch_size": trained.train_config.batch_size,
            "epochs": trained.train_config.epochs,
            "seed": trained.train_config.seed,
        },
        "final_metrics": None if not trained.history else {
            "test_total_db": trained.history[-1].test_total_db,
            "test_nl_db": trained.history[-1].test_nl_db,
            "train_loss": trained.history[-1].train_loss,
        },
    }
    nl = trained.nl
    if isinstance(nl, PolyStage):
        doc["kind"] = "poly"
        doc["model"] = nl.model.to_json()
        return doc
    if isinstance(nl, NullStage):
        doc["kind"] = "linear"
        return doc
    doc["kind"] = "nn"
    doc["spec"] = _spec_to_json(nl.spec)
    doc["target_scale"] = nl.scale
    layers = []
    for lp in nl.params.layers:
        if isinstance(lp, RnnLayerParams):
            layers.append({"w_in": _arr_to_json(lp.w_in),
                           "w_rec": _arr_to_json(lp.w_rec),
                           "bias": _arr_to_json(lp.bias)})
        else:
            entry = {"W": _arr_to_json(lp.W), "b": _arr_to_json(lp.b)}
            if lp.modrelu_bias is not None:
                entry["modrelu_bias"] = lp.modrelu_bias.tolist()
            layers.append(entry)
    doc["layers"] = layers
    doc["out"] = {"W": _arr_to_json(nl.params.out.W), "b": _arr_to_json(nl.params.out.b)}
    return doc


def trained_from_json(doc: dict) -> TrainedCanceller:
    lin = LinearCanceller(_arr_from_json(doc["linear_taps"], True))
    tc = doc.get("train_config")
    cfg = None if tc is None else TrainConfig(**tc)
    if doc["kind"] == "poly":
        return TrainedCanceller(lin=lin, nl=PolyStage(PolyModel.from_json(doc["model"])),
                                train_config=cfg)
    if doc["kind"] == "linear":
        return TrainedCanceller(lin=lin, nl=NullStage(lin.L), train_config=cfg)
    spec = spec_from_json(doc["spec"])
    cplx = spec.kind is NetKind.CVNN
    layers = []
    for layer_spec, entry in zip(spec.hidden, doc["layers"]):
        if spec.kind is NetKind.RNN:
            layers.append(RnnLayerParams(
                w_in=_arr_from_json(entry["w_in"], False),
                w_rec=_arr_from_json(entry["w_rec"], False),
                bias=_arr_from_json(entry["bias"], False),
            ))
        else:
            layers.append(DenseParams(
                W=_arr_from_json(entry["W"], cplx),
                b=_arr_from_json(entry["b"], cplx),
                modrelu_bias=(np.asarray(entry["modrelu_bias"], dtype=np.float64)
                              if layer_spec.activation is Activation.MODRELU else None),
            ))
    out = DenseParams(W=_arr_from_json(doc["out"]["W"], cplx),
                      b=_arr_from_json(doc["out"]["b"], cplx))
    stage = NetStage(spec=spec, params=NetParams(layers=layers, out=out),
                     scale=float(doc["target_scale"]))
    return TrainedCanceller(lin=lin, nl=stage, train_config=cfg)


def save_trained(trained: TrainedCanceller, path) -> None:
    with open(path, "w") as fh:
        json.dump(trained_to_json(trained), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_trained(path) -> TrainedCanceller:
    with open(path) as fh:
        return trained_from_json(json.load(fh))
