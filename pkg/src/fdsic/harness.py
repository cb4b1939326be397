"""Experiment methodology: hyperparameter search with k-fold
cross-validation, multi-init final training, and architecture sweeps.

Every run seed is derived from (master seed, candidate, fold, init), so a
sweep is a pure function of its configuration and may be parallelized
over specs without changing any number.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .complexity import complexity_report
from .polynomial import fit_linear, fit_poly
from .signals import ConfigError, Dataset
from .specs import CancellerSpec
from .training import (
    NullStage, PolyStage, TrainConfig, TrainedCanceller, TrainingDivergedError,
    evaluate, train, zero_linear,
)

LR_RANGE = (1e-6, 0.05)
BATCH_RANGE = (4, 64)


class SearchFailedError(RuntimeError):
    """Every sampled hyperparameter candidate diverged for a spec."""


@dataclass(frozen=True)
class HyperParamSpace:
    lr_range: tuple[float, float] = LR_RANGE
    batch_range: tuple[int, int] = BATCH_RANGE
    n_samples: int = 20
    k_folds: int = 5
    inits_per_fold: int = 5
    epochs: int = 50

    def __post_init__(self):
        if self.n_samples < 1 or self.k_folds < 2 or self.inits_per_fold < 1:
            raise ConfigError("invalid hyperparameter space")
        if not (LR_RANGE[0] <= self.lr_range[0] <= self.lr_range[1] <= LR_RANGE[1]):
            raise ConfigError(f"lr_range must lie within {LR_RANGE}")
        if not (BATCH_RANGE[0] <= self.batch_range[0] <= self.batch_range[1] <= BATCH_RANGE[1]):
            raise ConfigError(f"batch_range must lie within {BATCH_RANGE}")


@dataclass(frozen=True)
class ChosenHyperParams:
    lr: float
    batch_size: int
    score_db: float


def _derived_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def cv_folds(train_range: range, k: int) -> list[np.ndarray]:
    """Contiguous blocks partitioning the training range."""
    return [f for f in np.array_split(np.asarray(train_range, dtype=np.intp), k)
            if f.size]


def sample_candidates(space: HyperParamSpace, seed: int) -> list[tuple[float, int]]:
    """Learning rate from a continuous uniform, batch size from a discrete
    uniform (inclusive bounds)."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 0xC0FFEE])))
    out = []
    for _ in range(space.n_samples):
        lr = float(rng.uniform(*space.lr_range))
        batch = int(rng.integers(space.batch_range[0], space.batch_range[1] + 1))
        out.append((lr, batch))
    return out


def hyperparam_search(spec: CancellerSpec, dataset: Dataset, space: HyperParamSpace,
                      seed: int) -> ChosenHyperParams:
    """Random search scored by mean validation-fold total cancellation.

    The linear canceller is refit on each fold's own training indices so
    no validation sample influences model selection.  Diverged runs are
    dropped from a candidate's mean; a candidate with no surviving run
    scores -inf.  Ties break toward lower lr, then smaller batch.
    """
    net = spec.net_spec()
    folds = cv_folds(dataset.train_range, space.k_folds)
    all_rows = np.asarray(dataset.train_range, dtype=np.intp)
    scored = []
    for c_idx, (lr, batch) in enumerate(sample_candidates(space, seed)):
        vals = []
        for f_idx, val_rows in enumerate(folds):
            fit_rows = np.setdiff1d(all_rows, val_rows)
            lin = fit_linear(dataset.x.samples, dataset.y.samples, spec.L, fit_rows)
            for i_idx in range(space.inits_per_fold):
                cfg = TrainConfig(lr=lr, batch_size=batch, epochs=space.epochs,
                                  seed=_derived_seed(seed, c_idx, f_idx, i_idx))
                try:
                    trained = train(net, dataset, lin, cfg, train_rows=fit_rows)
                except TrainingDivergedError:
                    continue
                vals.append(evaluate(trained, dataset, val_rows))
        score = float(np.mean(vals)) if vals else -math.inf
        scored.append((score, lr, batch))
    best = min(scored, key=lambda s: (-s[0], s[1], s[2]))
    if best[0] == -math.inf:
        raise SearchFailedError(f"all hyperparameter candidates diverged for {spec.spec_id}")
    return ChosenHyperParams(lr=best[1], batch_size=best[2], score_db=best[0])


@dataclass
class FinalEvalResult:
    spec_id: str
    lr: float | None
    batch_size: int | None
    per_init_db: list[float]
    mean_db: float
    std_db: float
    min_db: float
    max_db: float
    n_diverged: int
    best: TrainedCanceller
    history_mean: list[float] = field(default_factory=list)
    history_std: list[float] = field(default_factory=list)


def _stats(values: list[float]) -> tuple[float, float, float, float]:
    arr = np.asarray(values)
    return float(arr.mean()), float(arr.std()), float(arr.min()), float(arr.max())


def final_eval(spec: CancellerSpec, dataset: Dataset, hp: ChosenHyperParams,
               n_inits: int, seed: int, epochs: int = 50) -> FinalEvalResult:
    """Train on the full training range with n_inits seeds and report the
    spread of final-epoch test cancellation."""
    net = spec.net_spec()
    lin = fit_linear(dataset.x.samples, dataset.y.samples, spec.L, dataset.train_range)
    dbs, models, histories = [], [], []
    n_diverged = 0
    for i in range(n_inits):
        cfg = TrainConfig(lr=hp.lr, batch_size=hp.batch_size, epochs=epochs,
                          seed=_derived_seed(seed, 0xF1, i))
        try:
            trained = train(net, dataset, lin, cfg)
        except TrainingDivergedError:
            n_diverged += 1
            continue
        dbs.append(evaluate(trained, dataset, dataset.test_range))
        models.append(trained)
        histories.append([e.test_total_db for e in trained.history])
    if not dbs:
        raise SearchFailedError(f"every final training diverged for {spec.spec_id}")
    mean, std, lo, hi = _stats(dbs)
    hist = np.asarray(histories)
    return FinalEvalResult(
        spec_id=spec.spec_id, lr=hp.lr, batch_size=hp.batch_size,
        per_init_db=dbs, mean_db=mean, std_db=std, min_db=lo, max_db=hi,
        n_diverged=n_diverged, best=models[int(np.argmax(dbs))],
        history_mean=hist.mean(axis=0).tolist(),
        history_std=hist.std(axis=0).tolist(),
    )


def paper_grid_specs(L: int = 13) -> list[CancellerSpec]:
    """The published architecture grids: shallow/deep FFNN and RNN widths
    2..20 step 2, shallow/deep CVNN widths 1..10, polynomial P in 3..9."""
    specs: list[CancellerSpec] = []
    specs += [CancellerSpec("poly", L=L, P=p) for p in (3, 5, 7, 9)]
    for kind in ("ffnn", "rnn"):
        specs += [CancellerSpec(kind, L=L, widths=(w,)) for w in range(2, 21, 2)]
        specs += [CancellerSpec(kind, L=L, widths=(w, w, w)) for w in range(2, 21, 2)]
    specs += [CancellerSpec("cvnn", L=L, widths=(w,)) for w in range(1, 11)]
    specs += [CancellerSpec("cvnn", L=L, widths=(w, w, w)) for w in range(1, 11)]
    return specs


@dataclass(frozen=True)
class SweepConfig:
    specs: tuple[CancellerSpec, ...] = field(default_factory=lambda: tuple(paper_grid_specs()))
    final_inits: int = 20
    final_epochs: int = 50
    space: HyperParamSpace = field(default_factory=HyperParamSpace)

    def __post_init__(self):
        if self.final_inits < 1 or self.final_epochs < 1:
            raise ConfigError("final_inits and final_epochs must be positive")
        if len({s.spec_id for s in self.specs}) != len(self.specs):
            raise ConfigError("sweep specs must be unique")


def run_spec(spec: CancellerSpec, dataset: Dataset, cfg: SweepConfig, seed: int) -> dict:
    """One sweep row; exceptions are captured so a sweep can continue."""
    report = complexity_report(spec)
    row = {"spec": spec.spec_id, "flops": report.flops, "params": report.params,
           "lr": None, "batch_size": None, "error": None,
           "per_init_db": [], "history_mean": [], "history_std": [],
           "mean_db": None, "std_db": None, "min_db": None, "max_db": None,
           "n_diverged": 0}
    try:
        xs, ys = dataset.x.samples, dataset.y.samples
        if spec.kind == "poly":
            model = fit_poly(xs, ys, spec.P, spec.L, dataset.train_range)
            trained = TrainedCanceller(lin=zero_linear(spec.L), nl=PolyStage(model))
            db = evaluate(trained, dataset, dataset.test_range)
            row.update(per_init_db=[db], mean_db=db, std_db=0.0, min_db=db, max_db=db)
        elif spec.kind == "linear":
            lin = fit_linear(xs, ys, spec.L, dataset.train_range)
            trained = TrainedCanceller(lin=lin, nl=NullStage(spec.L))
            db = evaluate(trained, dataset, dataset.test_range)
            row.update(per_init_db=[db], mean_db=db, std_db=0.0, min_db=db, max_db=db)
        else:
            hp = hyperparam_search(spec, dataset, cfg.space, seed)
            result = final_eval(spec, dataset, hp, cfg.final_inits, seed,
                                epochs=cfg.final_epochs)
            row.update(lr=hp.lr, batch_size=hp.batch_size,
                       per_init_db=result.per_init_db, mean_db=result.mean_db,
                       std_db=result.std_db, min_db=result.min_db,
                       max_db=result.max_db, n_diverged=result.n_diverged,
                       history_mean=result.history_mean,
                       history_std=result.history_std)
    except (SearchFailedError, TrainingDivergedError, ValueError) as exc:
        row["error"] = str(exc)
    return row


@dataclass
class SweepReport:
    master_seed: int
    rows: list[dict]

    def to_json(self) -> dict:
        return {"format_version": 1, "master_seed": self.master_seed, "rows": self.rows}

    @classmethod
    def from_json(cls, doc: dict) -> "SweepReport":
        return cls(master_seed=doc["master_seed"], rows=doc["rows"])


def run_sweep(cfg: SweepConfig, dataset: Dataset, seed: int, jobs: int = 1) -> SweepReport:
    """Evaluate every spec; per-spec seeds derive from (seed, spec index),
    so the result is identical for any jobs count."""
    if jobs <= 1:
        rows = [run_spec(spec, dataset, cfg, _derived_seed(seed, i))
                for i, spec in enumerate(cfg.specs)]
    else:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(run_spec, spec, dataset, cfg, _derived_seed(seed, i))
                       for i, spec in enumerate(cfg.specs)]
            rows = [f.result() for f in futures]
    return SweepReport(master_seed=seed, rows=rows)


REPORT_CSV_COLUMNS = ["spec", "flops", "params", "mean_db", "std_db", "lr", "batch_size"]


def report_csv(report: SweepReport) -> str:
    """One row per spec, ready for complexity-vs-cancellation scatter plots."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_CSV_COLUMNS)
    for row in report.rows:
        writer.writerow([
            row["spec"], row["flops"], row["params"],
            _fmt(row["mean_db"]), _fmt(row["std_db"]), _fmt(row["lr"]),
            "" if row["batch_size"] is None else row["batch_size"],
        ])
    return buf.getvalue()


def histories_csv(report: SweepReport) -> str:
    """Per-epoch mean/std of test cancellation across inits, per spec."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["spec", "epoch", "mean_total_db", "std_total_db"])
    for row in report.rows:
        for epoch, (m, s) in enumerate(zip(row["history_mean"], row["history_std"])):
            writer.writerow([row["spec"], epoch, _fmt(m), _fmt(s)])
    return buf.getvalue()


def _fmt(v) -> str:
    return "" if v is None else repr(float(v))


def save_report(report: SweepReport, json_path) -> None:
    with open(json_path, "w") as fh:
        json.dump(report.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_report(json_path) -> SweepReport:
    with open(json_path) as fh:
        return SweepReport.from_json(json.load(fh))
