"""Synthetic full-duplex self-interference data and the cancellation metric.

The generator chain is QPSK-OFDM baseband -> transmitter impairments
(IQ mixer image + polynomial PA) -> FIR self-interference channel with a
complex Gaussian noise floor.  Everything is a pure function of
(config, seed), so datasets are reproducible bit for bit.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

# cancellation_db reports this instead of +inf when the residual is zero
CANCELLATION_CAP_DB = 300.0


class ConfigError(ValueError):
    """Invalid generator or canceller configuration."""


@dataclass(frozen=True)
class ComplexSignal:
    """Sequence of complex baseband samples with sample-rate metadata."""

    samples: np.ndarray
    sample_rate_hz: float = 20e6

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.complex128)
        object.__setattr__(self, "samples", samples)
        if samples.ndim != 1 or samples.size < 1:
            raise ConfigError("signal must be a non-empty 1-D sample sequence")
        if not np.all(np.isfinite(samples)):
            raise ConfigError("signal contains non-finite samples")

    def __len__(self):
        return self.samples.size


@dataclass(frozen=True)
class OfdmConfig:
    """QPSK-OFDM waveform parameters (defaults mirror a 10 MHz passband
    at 20 MHz sampling with 1024 carriers)."""

    n_carriers: int = 1024
    occupied_carriers: int = 512
    cp_len: int = 256
    n_frames: int = 16
    sample_rate_hz: float = 20e6

    def __post_init__(self):
        if self.n_carriers < 1 or self.n_frames < 1:
            raise ConfigError("n_carriers and n_frames must be positive")
        if not 0 < self.occupied_carriers < self.n_carriers:
            raise ConfigError("occupied_carriers must be in [1, n_carriers)")
        if not 0 <= self.cp_len < self.n_carriers:
            raise ConfigError("cp_len must be in [0, n_carriers)")

    @property
    def symbol_len(self) -> int:
        return self.n_carriers + self.cp_len

    @property
    def n_samples(self) -> int:
        return self.n_frames * self.symbol_len


def _default_pa_coeffs() -> dict[int, complex]:
    # third-order distortion near the -50 dB noise floor: together with the
    # IQ image this puts the post-linear-cancellation residual ~6 dB above
    # the floor, the regime where networks trained on raw y plateau at the
    # linear-canceller level while networks trained on y_nl keep gaining
    return {1: 1.0 + 0.0j, 3: 1e-3 * np.exp(2.0j)}


def _default_si_taps() -> np.ndarray:
    # 4 exponentially decaying taps with fixed arbitrary phases
    mags = np.array([0.978, 0.40, 0.17, 0.072])
    phases = np.array([-0.35, 2.10, 0.85, -2.40])
    return mags * np.exp(1j * phases)


@dataclass(frozen=True)
class ImpairmentConfig:
    """Ground-truth transmitter/channel impairments.

    k1/k2 are the IQ mixer direct and image gains, pa_coeffs maps odd
    power p to the PA gain of the x*|x|^(p-1) term, si_channel_taps is
    the FIR self-interference channel, and noise_power_db is the
    receiver noise floor relative to unit SI power (-inf disables it).
    """

    k1: complex = 1.0 + 0.0j
    k2: complex = 10 ** (-45.2 / 20) * np.exp(0.7j)
    pa_coeffs: dict[int, complex] = field(default_factory=_default_pa_coeffs)
    si_channel_taps: np.ndarray = field(default_factory=_default_si_taps)
    noise_power_db: float = -50.0

    def __post_init__(self):
        taps = np.asarray(self.si_channel_taps, dtype=np.complex128)
        object.__setattr__(self, "si_channel_taps", taps)
        object.__setattr__(self, "pa_coeffs", dict(self.pa_coeffs))
        if abs(self.k2) >= abs(self.k1):
            raise ConfigError("IQ image gain |k2| must be below |k1|")
        if 1 not in self.pa_coeffs:
            raise ConfigError("pa_coeffs must contain the linear term p=1")
        if any(p < 1 or p % 2 == 0 for p in self.pa_coeffs):
            raise ConfigError("pa_coeffs powers must be odd and positive")
        if taps.size == 0 or taps[0] == 0:
            raise ConfigError("si_channel_taps must be non-empty with a nonzero first tap")

    @classmethod
    def identity(cls, taps=(1.0,), noise_power_db=-math.inf) -> "ImpairmentConfig":
        """Pass-through transmitter (no IQ image, linear PA); defaults to a
        single unit tap and no noise, i.e. y == x."""
        return cls(k1=1.0, k2=0.0, pa_coeffs={1: 1.0 + 0.0j},
                   si_channel_taps=np.asarray(taps, dtype=np.complex128),
                   noise_power_db=noise_power_db)


@dataclass(frozen=True)
class Dataset:
    """Aligned transmit/receive sequences with a contiguous train/test split."""

    x: ComplexSignal
    y: ComplexSignal
    train_range: range
    test_range: range

    def __post_init__(self):
        if len(self.x) != len(self.y):
            raise ConfigError("x and y must have identical length")
        n = len(self.x)
        covered = list(self.train_range) + list(self.test_range)
        if sorted(covered) != list(range(n)):
            raise ConfigError("train/test ranges must partition the sample indices")

    @property
    def n_samples(self) -> int:
        return len(self.x)


def generate_ofdm_frame(cfg: OfdmConfig, seed: int) -> ComplexSignal:
    """Generate cfg.n_frames QPSK-OFDM symbols, CP-prefixed and normalized
    to unit average power.

    QPSK symbols (phases +/-pi/4, +/-3pi/4) are placed on the centered
    occupied carriers with DC excluded; the extra carrier for odd counts
    goes on the negative side.
    """
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    n, occ = cfg.n_carriers, cfg.occupied_carriers

    pos = occ // 2
    neg = occ - pos
    carriers = np.concatenate([np.arange(1, pos + 1), np.arange(n - neg, n)])

    out = np.empty(cfg.n_samples, dtype=np.complex128)
    for f in range(cfg.n_frames):
        bits = rng.integers(0, 2, size=(occ, 2))
        syms = ((2 * bits[:, 0] - 1) + 1j * (2 * bits[:, 1] - 1)) / np.sqrt(2)
        spectrum = np.zeros(n, dtype=np.complex128)
        spectrum[carriers] = syms
        core = np.fft.ifft(spectrum)
        start = f * cfg.symbol_len
        if cfg.cp_len:
            out[start:start + cfg.cp_len] = core[n - cfg.cp_len:]
        out[start + cfg.cp_len:start + cfg.symbol_len] = core

    out /= np.sqrt(np.mean(np.abs(out) ** 2))
    return ComplexSignal(out, cfg.sample_rate_hz)


def apply_tx_impairments(x: ComplexSignal, imp: ImpairmentConfig) -> ComplexSignal:
    """IQ mixer image followed by the odd-order memoryless PA model."""
    xs = x.samples
    x_iq = imp.k1 * xs + imp.k2 * np.conj(xs)
    mag = np.abs(x_iq)
    x_pa = np.zeros_like(x_iq)
    for p, alpha in sorted(imp.pa_coeffs.items()):
        x_pa += alpha * x_iq * mag ** (p - 1)
    return ComplexSignal(x_pa, x.sample_rate_hz)


def apply_si_channel(x_pa: ComplexSignal, imp: ImpairmentConfig, noise_seed: int) -> ComplexSignal:
    """FIR SI channel plus circularly-symmetric Gaussian noise.

    The convolution zero-pads history (x_pa[n] treated as 0 for n < 0) and
    the output is scaled so the SI component has exactly unit average
    power; the noise power is 10**(noise_power_db/10) relative to that.
    """
    xs = x_pa.samples
    taps = imp.si_channel_taps
    si = np.convolve(xs, taps)[:xs.size]
    si /= np.sqrt(np.mean(np.abs(si) ** 2))
    if imp.noise_power_db == -math.inf:
        return ComplexSignal(si, x_pa.sample_rate_hz)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(noise_seed)))
    sigma = np.sqrt(10 ** (imp.noise_power_db / 10) / 2)
    w = sigma * (rng.standard_normal(xs.size) + 1j * rng.standard_normal(xs.size))
    return ComplexSignal(si + w, x_pa.sample_rate_hz)


def synthesize_dataset(ofdm: OfdmConfig, imp: ImpairmentConfig, seed: int,
                       train_fraction: float = 0.9) -> Dataset:
    """Generate an aligned (x, y) dataset with a contiguous train/test split."""
    if not 0 < train_fraction < 1:
        raise ConfigError("train_fraction must be in (0, 1)")
    ss = np.random.SeedSequence(seed)
    sym_seed, noise_seed = (int(s.generate_state(1)[0]) for s in ss.spawn(2))
    x = generate_ofdm_frame(ofdm, sym_seed)
    x_pa = apply_tx_impairments(x, imp)
    y = apply_si_channel(x_pa, imp, noise_seed)
    split = int(math.floor(train_fraction * len(x)))
    return Dataset(x=x, y=y, train_range=range(0, split), test_range=range(split, len(x)))


def cancellation_db(y: ComplexSignal | np.ndarray, e: ComplexSignal | np.ndarray) -> float:
    """SI cancellation 10*log10(sum|y|^2 / sum|e|^2) for residual e.

    A zero-energy residual reports CANCELLATION_CAP_DB instead of +inf.
    """
    ys = y.samples if isinstance(y, ComplexSignal) else np.asarray(y)
    es = e.samples if isinstance(e, ComplexSignal) else np.asarray(e)
    if ys.size != es.size or ys.size < 1:
        raise ValueError("y and e must be non-empty and equally long")
    py = float(np.sum(np.abs(ys) ** 2))
    pe = float(np.sum(np.abs(es) ** 2))
    if py <= 0:
        raise ValueError("received signal has zero energy")
    if pe == 0.0:
        return CANCELLATION_CAP_DB
    return min(10 * np.log10(py / pe), CANCELLATION_CAP_DB)


# ---------------------------------------------------------------------------
# Dataset file format: CSV `n,x_re,x_im,y_re,y_im` + sidecar JSON metadata.
# Floats are written with repr so reloading is bit-exact.

def _complex_pair(z: complex) -> list[float]:
    return [float(np.real(z)), float(np.imag(z))]


def _imp_to_json(imp: ImpairmentConfig) -> dict:
    return {
        "k1": _complex_pair(imp.k1),
        "k2": _complex_pair(imp.k2),
        "pa_coeffs": {str(p): _complex_pair(a) for p, a in sorted(imp.pa_coeffs.items())},
        "si_channel_taps": [_complex_pair(t) for t in imp.si_channel_taps],
        "noise_power_db": imp.noise_power_db if imp.noise_power_db != -math.inf else "-inf",
    }


def imp_from_json(d: dict) -> ImpairmentConfig:
    noise = d["noise_power_db"]
    return ImpairmentConfig(
        k1=complex(*d["k1"]),
        k2=complex(*d["k2"]),
        pa_coeffs={int(p): complex(*a) for p, a in d["pa_coeffs"].items()},
        si_channel_taps=np.array([complex(re, im) for re, im in d["si_channel_taps"]]),
        noise_power_db=-math.inf if noise == "-inf" else float(noise),
    )


def save_dataset(ds: Dataset, csv_path, *, seed: int | None = None,
                 ofdm: OfdmConfig | None = None, imp: ImpairmentConfig | None = None) -> None:
    """Write the CSV sample table plus the sidecar JSON (same basename)."""
    csv_path = str(csv_path)
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["n", "x_re", "x_im", "y_re", "y_im"])
        xs, ys = ds.x.samples, ds.y.samples
        for n in range(ds.n_samples):
            writer.writerow([n, repr(float(xs[n].real)), repr(float(xs[n].imag)),
                             repr(float(ys[n].real)), repr(float(ys[n].imag))])
    meta = {
        "format_version": 1,
        "sample_rate_hz": ds.x.sample_rate_hz,
        "n_samples": ds.n_samples,
        "split_boundary": ds.train_range.stop,
        "seed": seed,
        "ofdm": None if ofdm is None else {
            "n_carriers": ofdm.n_carriers,
            "occupied_carriers": ofdm.occupied_carriers,
            "cp_len": ofdm.cp_len,
            "n_frames": ofdm.n_frames,
            "sample_rate_hz": ofdm.sample_rate_hz,
        },
        "impairments": None if imp is None else _imp_to_json(imp),
    }
    with open(_sidecar_path(csv_path), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _sidecar_path(csv_path: str) -> str:
    base = csv_path[:-4] if csv_path.endswith(".csv") else csv_path
    return base + ".json"


def load_dataset(csv_path) -> Dataset:
    """Load a dataset CSV (any file in the documented shape) and its sidecar."""
    csv_path = str(csv_path)
    with open(_sidecar_path(csv_path)) as fh:
        meta = json.load(fh)
    xs, ys = [], []
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["n", "x_re", "x_im", "y_re", "y_im"]:
            raise ConfigError(f"unexpected CSV header {header!r}")
        for row in reader:
            xs.append(complex(float(row[1]), float(row[2])))
            ys.append(complex(float(row[3]), float(row[4])))
    rate = float(meta["sample_rate_hz"])
    split = int(meta["split_boundary"])
    n = len(xs)
    return Dataset(x=ComplexSignal(np.array(xs), rate), y=ComplexSignal(np.array(ys), rate),
                   train_range=range(0, split), test_range=range(split, n))
