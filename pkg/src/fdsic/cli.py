"""Command-line front end for reproducible cancellation experiments.

Every command is deterministic given (config, seed); commands that write
artifacts leave a manifest.json describing how to reproduce them.  Exit
codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import copy
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .complexity import FLOP_CONVENTION_NOTE, complexity_report, report_to_json_str
from .harness import (
    HyperParamSpace, SearchFailedError, SweepConfig, histories_csv,
    hyperparam_search, load_report, report_csv, run_sweep, save_report,
)
from .polynomial import fit_linear, fit_poly, linear_cancellation_db
from .signals import (
    ConfigError, Dataset, ImpairmentConfig, OfdmConfig, imp_from_json, load_dataset,
    save_dataset, synthesize_dataset,
)
from .specs import parse_spec
from .training import (
    NullStage, PolyStage, TrainConfig, TrainedCanceller, TrainingDivergedError,
    evaluate, nonlinear_cancellation_db, save_trained, train, zero_linear,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4


def default_config() -> dict:
    imp = ImpairmentConfig()
    return {
        "version": 1,
        "ofdm": {
            "n_carriers": 1024,
            "occupied_carriers": 512,
            "cp_len": 256,
            "n_frames": 16,
            "sample_rate_hz": 20e6,
        },
        "impairments": {
            "k1": [imp.k1.real, imp.k1.imag],
            "k2": [imp.k2.real, imp.k2.imag],
            "pa_coeffs": {str(p): [a.real, a.imag] for p, a in sorted(imp.pa_coeffs.items())},
            "si_channel_taps": [[t.real, t.imag] for t in imp.si_channel_taps],
            "noise_power_db": imp.noise_power_db,
        },
        "train_fraction": 0.9,
        "train": {"lr": 0.004, "batch_size": 24, "epochs": 50},
        "search": {
            "lr_range": [1e-6, 0.05],
            "batch_range": [4, 64],
            "n_samples": 20,
            "k_folds": 5,
            "inits_per_fold": 5,
            "epochs": 50,
        },
        "sweep": {"specs": None, "final_inits": 20, "final_epochs": 50},
    }


# dict-valued config entries whose keys are data, not schema
_LEAF_DICTS = {"pa_coeffs"}


def _merge_config(default: dict, override: dict, path: str = "") -> dict:
    merged = copy.deepcopy(default)
    for key, value in override.items():
        where = f"{path}{key}"
        if key not in default:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(default[key], dict) and key not in _LEAF_DICTS:
            if not isinstance(value, dict):
                raise ConfigError(f"config key {where!r} must be an object")
            merged[key] = _merge_config(default[key], value, where + ".")
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def load_config(path: str | None) -> dict:
    if path is None:
        return default_config()
    with open(path) as fh:
        user = json.load(fh)
    if not isinstance(user, dict):
        raise ConfigError("config file must contain a JSON object")
    if user.get("version", 1) != 1:
        raise ConfigError(f"unsupported config version {user.get('version')!r}")
    return _merge_config(default_config(), user)


def _ofdm_from_config(cfg: dict) -> OfdmConfig:
    return OfdmConfig(**cfg["ofdm"])


def _imp_from_config(cfg: dict) -> ImpairmentConfig:
    return imp_from_json(cfg["impairments"])


class Workspace:
    """Output directory with tracked artifacts and a closing manifest.

    Used as a context manager: a clean exit writes manifest.json, an
    exception removes every artifact written during the run.
    """

    def __init__(self, out: str | None, command: str, config: dict, seed: int | None):
        self.dir = None if out is None else Path(out)
        self.command = command
        self.config = config
        self.seed = seed
        self.artifacts: list[str] = []
        self.t0 = time.monotonic()
        if self.dir is not None:
            self.dir.mkdir(parents=True, exist_ok=True)

    def __enter__(self) -> "Workspace":
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        if exc_type is None:
            self._finish()
        else:
            self._cleanup()

    def path(self, name: str) -> Path:
        if self.dir is None:
            raise ConfigError(f"--out is required to write {name}")
        return self.dir / name

    def write_text(self, name: str, content: str) -> Path:
        p = self.path(name)
        p.write_text(content)
        self.artifacts.append(name)
        return p

    def write_json(self, name: str, obj) -> Path:
        return self.write_text(name, json.dumps(obj, indent=2, sort_keys=True) + "\n")

    def track(self, name: str) -> None:
        self.artifacts.append(name)

    def _finish(self) -> None:
        if self.dir is None:
            return
        manifest = {
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
            "artifacts": sorted(self.artifacts),
            "tool_version": __version__,
            "duration_s": round(time.monotonic() - self.t0, 3),
        }
        (self.dir / "manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n")

    def _cleanup(self) -> None:
        if self.dir is None:
            return
        for name in self.artifacts:
            (self.dir / name).unlink(missing_ok=True)


def _resolve_dataset(args, config: dict) -> Dataset:
    if getattr(args, "data", None):
        return load_dataset(args.data)
    return synthesize_dataset(_ofdm_from_config(config), _imp_from_config(config),
                              args.seed, train_fraction=config["train_fraction"])


# ---------------------------------------------------------------------------
# Subcommands


def cmd_generate(args, config) -> int:
    with Workspace(args.out, "generate", config, args.seed) as ws:
        ofdm = _ofdm_from_config(config)
        imp = _imp_from_config(config)
        ds = synthesize_dataset(ofdm, imp, args.seed, train_fraction=config["train_fraction"])
        save_dataset(ds, ws.path("dataset.csv"), seed=args.seed, ofdm=ofdm, imp=imp)
        ws.track("dataset.csv")
        ws.track("dataset.json")
        print(f"wrote {ds.n_samples} samples to {ws.path('dataset.csv')}")
    return EXIT_OK


def cmd_fit_linear(args, config) -> int:
    with Workspace(args.out, "fit-linear", config, args.seed) as ws:
        ds = _resolve_dataset(args, config)
        lin = fit_linear(ds.x.samples, ds.y.samples, args.L, ds.train_range)
        trained = TrainedCanceller(lin=lin, nl=NullStage(args.L))
        train_db = evaluate(trained, ds, ds.train_range)
        test_db = evaluate(trained, ds, ds.test_range)
        print(f"linear canceller L={args.L}: train {train_db:.2f} dB, test {test_db:.2f} dB")
        if ws.dir is not None:
            save_trained(trained, ws.path("linear.json"))
            ws.track("linear.json")
    return EXIT_OK


def cmd_fit_poly(args, config) -> int:
    with Workspace(args.out, "fit-poly", config, args.seed) as ws:
        ds = _resolve_dataset(args, config)
        model = fit_poly(ds.x.samples, ds.y.samples, args.P, args.L, ds.train_range)
        trained = TrainedCanceller(lin=zero_linear(args.L), nl=PolyStage(model))
        train_db = evaluate(trained, ds, ds.train_range)
        test_db = evaluate(trained, ds, ds.test_range)
        spec = parse_spec(f"poly:P={args.P},L={args.L}")
        rep = complexity_report(spec)
        print(f"polynomial P={args.P} L={args.L}: train {train_db:.2f} dB, test {test_db:.2f} dB")
        print(f"complexity: params={rep.params} flops={rep.flops}")
        if ws.dir is not None:
            save_trained(trained, ws.path("poly.json"))
            ws.track("poly.json")
    return EXIT_OK


def _history_csv(trained: TrainedCanceller) -> str:
    lines = ["epoch,train_loss,test_total_db,test_nl_db"]
    for st in trained.history:
        lines.append(f"{st.epoch},{st.train_loss!r},{st.test_total_db!r},{st.test_nl_db!r}")
    return "\n".join(lines) + "\n"


def cmd_train(args, config) -> int:
    with Workspace(args.out, "train", config, args.seed) as ws:
        ds = _resolve_dataset(args, config)
        spec = parse_spec(args.spec)
        if not spec.is_network:
            raise ConfigError(f"train expects a network spec, got {spec.spec_id}")
        tc = config["train"]
        cfg = TrainConfig(
            lr=args.lr if args.lr is not None else tc["lr"],
            batch_size=args.batch_size if args.batch_size is not None else tc["batch_size"],
            epochs=args.epochs if args.epochs is not None else tc["epochs"],
            seed=args.seed,
        )
        lin = fit_linear(ds.x.samples, ds.y.samples, spec.L, ds.train_range)
        trained = train(spec.net_spec(), ds, lin, cfg)
        total = evaluate(trained, ds, ds.test_range)
        nl = nonlinear_cancellation_db(trained, ds, ds.test_range)
        lin_only = linear_cancellation_db(ds.y.samples, lin, ds.x.samples, ds.test_range)
        print(f"{spec.spec_id}: test total {total:.2f} dB "
              f"(linear alone {lin_only:.2f} dB, nonlinear stage {nl:.2f} dB)")
        if ws.dir is not None:
            save_trained(trained, ws.path("model.json"))
            ws.track("model.json")
            ws.write_text("history.csv", _history_csv(trained))
    return EXIT_OK


def _space_from_config(config: dict) -> HyperParamSpace:
    sc = config["search"]
    return HyperParamSpace(
        lr_range=tuple(sc["lr_range"]), batch_range=tuple(sc["batch_range"]),
        n_samples=sc["n_samples"], k_folds=sc["k_folds"],
        inits_per_fold=sc["inits_per_fold"], epochs=sc["epochs"],
    )


def cmd_search(args, config) -> int:
    with Workspace(args.out, "search", config, args.seed) as ws:
        ds = _resolve_dataset(args, config)
        spec = parse_spec(args.spec)
        if not spec.is_network:
            raise ConfigError(f"search expects a network spec, got {spec.spec_id}")
        hp = hyperparam_search(spec, ds, _space_from_config(config), args.seed)
        print(f"{spec.spec_id}: lr={hp.lr:.6g} batch_size={hp.batch_size} "
              f"(cv score {hp.score_db:.2f} dB)")
        if ws.dir is not None:
            ws.write_json("chosen.json", {"spec": spec.spec_id, "lr": hp.lr,
                                          "batch_size": hp.batch_size,
                                          "score_db": hp.score_db})
    return EXIT_OK


def cmd_sweep(args, config) -> int:
    with Workspace(args.out, "sweep", config, args.seed) as ws:
        ds = _resolve_dataset(args, config)
        sw = config["sweep"]
        kwargs = {"final_inits": sw["final_inits"], "final_epochs": sw["final_epochs"],
                  "space": _space_from_config(config)}
        if sw["specs"] is not None:
            kwargs["specs"] = tuple(parse_spec(s) for s in sw["specs"])
        cfg = SweepConfig(**kwargs)
        report = run_sweep(cfg, ds, args.seed, jobs=args.jobs)
        for row in report.rows:
            if row["error"]:
                print(f"{row['spec']}: FAILED ({row['error']})")
            else:
                print(f"{row['spec']}: {row['mean_db']:.2f} +/- {row['std_db']:.2f} dB "
                      f"({row['params']} params, {row['flops']} flops)")
        save_report(report, ws.path("report.json"))
        ws.track("report.json")
        ws.write_text("report.csv", report_csv(report))
        ws.write_text("histories.csv", histories_csv(report))
    return EXIT_OK


def cmd_complexity(args, config) -> int:
    spec = parse_spec(args.spec)
    rep = complexity_report(spec)
    print(f"{spec.spec_id}: params={rep.params} flops={rep.flops}")
    print(f"convention: {FLOP_CONVENTION_NOTE}")
    if args.out is not None:
        with Workspace(args.out, "complexity", config, None) as ws:
            ws.write_text("complexity.json", report_to_json_str(rep))
    return EXIT_OK


def cmd_report(args, config) -> int:
    with Workspace(args.out, "report", config, None) as ws:
        report = load_report(args.input)
        ws.write_text("report.csv", report_csv(report))
        ws.write_text("histories.csv", histories_csv(report))
        print(f"re-rendered {len(report.rows)} rows into {ws.dir}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fdsic",
        description="Full-duplex self-interference cancellation workbench",
    )
    parser.add_argument("--print-default-config", action="store_true",
                        help="print the default JSON config and exit")
    sub = parser.add_subparsers(dest="command")

    def add(name, func, **kw):
        p = sub.add_parser(name, **kw)
        p.set_defaults(func=func)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--config", default=None, help="JSON config file")
        p.add_argument("--out", default=None, help="output directory")
        return p

    add("generate", cmd_generate, help="write a synthetic dataset CSV+JSON")

    p = add("fit-linear", cmd_fit_linear, help="fit the linear FIR canceller")
    p.add_argument("--data", default=None, help="dataset CSV (default: synthesize)")
    p.add_argument("--L", type=int, default=13)

    p = add("fit-poly", cmd_fit_poly, help="fit the memory-polynomial canceller")
    p.add_argument("--data", default=None)
    p.add_argument("--P", type=int, default=5)
    p.add_argument("--L", type=int, default=13)

    p = add("train", cmd_train, help="train one network canceller end to end")
    p.add_argument("--data", default=None)
    p.add_argument("--spec", required=True, help="e.g. cvnn:7 or ffnn:10-10-10")
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)

    p = add("search", cmd_search, help="hyperparameter search only")
    p.add_argument("--data", default=None)
    p.add_argument("--spec", required=True)

    p = add("sweep", cmd_sweep, help="full architecture sweep")
    p.add_argument("--data", default=None)
    p.add_argument("--jobs", type=int, default=1)

    p = add("complexity", cmd_complexity, help="FLOP/parameter counts for a spec")
    p.add_argument("--spec", required=True)

    p = add("report", cmd_report, help="re-render CSVs from a stored report")
    p.add_argument("--input", required=True, help="report.json path")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.print_default_config:
        print(json.dumps(default_config(), indent=2, sort_keys=True))
        return EXIT_OK
    if args.command is None:
        parser.print_help()
        return EXIT_CONFIG

    try:
        config = load_config(args.config)
        return args.func(args, config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (TrainingDivergedError, SearchFailedError, FloatingPointError,
            np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
