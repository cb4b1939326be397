"""Memory-polynomial SI canceller with complex least-squares fitting.

The model is the parallel-Hammerstein basis x[n-l]^q * conj(x[n-l])^(p-q)
over odd orders p <= P, conjugate splits q = 0..p and lags l = 0..L-1.
The linear canceller used in front of every neural stage is the special
case of L direct taps on x only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .signals import ComplexSignal, cancellation_db

BASIS_ORDER_TAG = "lag-major/p-asc/q-asc/v1"


def n_basis_functions(P: int) -> int:
    """Number of (p, q) terms per lag: sum of (p+1) over odd p <= P."""
    _check_order(P)
    return sum(p + 1 for p in range(1, P + 1, 2))


def _check_order(P: int):
    if P < 1 or P % 2 == 0:
        raise ValueError(f"nonlinearity order P must be odd and positive, got {P}")


def basis_functions(P: int) -> list[tuple[int, int]]:
    """All (p, q) with odd p <= P and 0 <= q <= p, ascending p then q."""
    _check_order(P)
    return [(p, q) for p in range(1, P + 1, 2) for q in range(p + 1)]


def build_regressor_row(x_window: np.ndarray, P: int) -> np.ndarray:
    """Regressor row for one output sample from its L-sample lag window.

    x_window[l] is x[n-l].  Entry order is lag-major: all basis terms of
    lag 0, then lag 1, and so on.
    """
    w = np.asarray(x_window, dtype=np.complex128)
    if w.ndim != 1:
        raise ValueError("x_window must be 1-D")
    basis = basis_functions(P)
    wc = np.conj(w)
    row = np.empty(w.size * len(basis), dtype=np.complex128)
    for l in range(w.size):
        for b, (p, q) in enumerate(basis):
            row[l * len(basis) + b] = w[l] ** q * wc[l] ** (p - q)
    return row


def _lag_matrix(sig: np.ndarray, rows: np.ndarray, L: int) -> np.ndarray:
    """m[i, l] = sig[rows[i] - l], zero-padded below index 0."""
    padded = np.concatenate([np.zeros(L - 1, dtype=sig.dtype), sig]) if L > 1 else sig
    idx = rows[:, None] - np.arange(L)[None, :] + (L - 1)
    return padded[idx]


def regressor_matrix(x: np.ndarray, P: int, L: int, rows: np.ndarray) -> np.ndarray:
    """Stacked regressor rows for the given target indices (lag-major)."""
    x = np.asarray(x, dtype=np.complex128)
    rows = np.asarray(rows, dtype=np.intp)
    basis = basis_functions(P)
    nbf = len(basis)
    xc = np.conj(x)
    A = np.empty((rows.size, L * nbf), dtype=np.complex128)
    for b, (p, q) in enumerate(basis):
        base = x ** q * xc ** (p - q)
        lagged = _lag_matrix(base, rows, L)
        A[:, b::nbf] = lagged
    return A


@dataclass
class LsFit:
    """Least-squares solution plus conditioning diagnostics."""

    coeffs: np.ndarray
    cond: float
    rank_deficient: bool


def ls_fit(rows: np.ndarray, targets: np.ndarray) -> LsFit:
    """Minimum-norm least squares with per-column scaling.

    Columns are normalized to unit 2-norm before the SVD solve to tame
    the dynamic range of high-order basis terms; coefficients are scaled
    back afterwards.  Rank deficiency is flagged rather than raised.
    """
    A = np.asarray(rows, dtype=np.complex128)
    y = np.asarray(targets, dtype=np.complex128)
    if A.ndim != 2 or A.shape[0] < A.shape[1]:
        raise ValueError("need at least as many rows as columns")
    if not np.all(np.isfinite(A)):
        raise ValueError("regressor matrix contains non-finite entries")

    scales = np.linalg.norm(A, axis=0)
    safe = np.where(scales > 0, scales, 1.0)
    h_scaled, _, rank, sv = np.linalg.lstsq(A / safe, y, rcond=None)
    cond = float(sv[0] / sv[-1]) if sv.size and sv[-1] > 0 else np.inf
    return LsFit(coeffs=h_scaled / safe, cond=cond, rank_deficient=rank < A.shape[1])


@dataclass
class PolyModel:
    """Fitted memory-polynomial canceller (coefficients in lag-major order)."""

    P: int
    L: int
    coeffs: np.ndarray
    cond: float = np.nan

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        if self.coeffs.size != self.L * n_basis_functions(self.P):
            raise ValueError("coefficient count must equal L * N_bf(P)")

    def coeff(self, p: int, q: int, l: int) -> complex:
        basis = basis_functions(self.P)
        return complex(self.coeffs[l * len(basis) + basis.index((p, q))])

    def to_json(self) -> dict:
        return {
            "P": self.P,
            "L": self.L,
            "basis_order": BASIS_ORDER_TAG,
            "coefficients": [[c.real, c.imag] for c in self.coeffs],
        }

    @classmethod
    def from_json(cls, d: dict) -> "PolyModel":
        if d.get("basis_order") != BASIS_ORDER_TAG:
            raise ValueError(f"unsupported basis order {d.get('basis_order')!r}")
        coeffs = np.array([complex(re, im) for re, im in d["coefficients"]])
        return cls(P=int(d["P"]), L=int(d["L"]), coeffs=coeffs)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "PolyModel":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def fit_poly(x: ComplexSignal | np.ndarray, y: ComplexSignal | np.ndarray,
             P: int, L: int, rows: np.ndarray | range) -> PolyModel:
    """Fit the polynomial model on the given target indices.

    Rows whose lag window reaches below index 0 use zero-padded history
    and are included, matching the generator convention.
    """
    xs = x.samples if isinstance(x, ComplexSignal) else np.asarray(x)
    ys = y.samples if isinstance(y, ComplexSignal) else np.asarray(y)
    rows = np.asarray(rows, dtype=np.intp)
    A = regressor_matrix(xs, P, L, rows)
    fit = ls_fit(A, ys[rows])
    return PolyModel(P=P, L=L, coeffs=fit.coeffs, cond=fit.cond)


def poly_predict(model: PolyModel, x: ComplexSignal | np.ndarray,
                 rows: np.ndarray | range) -> np.ndarray:
    """Predicted SI for the given target indices."""
    xs = x.samples if isinstance(x, ComplexSignal) else np.asarray(x)
    rows = np.asarray(rows, dtype=np.intp)
    A = regressor_matrix(xs, model.P, model.L, rows)
    return A @ model.coeffs


@dataclass
class LinearCanceller:
    """L direct FIR taps on x (no conjugate term)."""

    taps: np.ndarray

    def __post_init__(self):
        self.taps = np.asarray(self.taps, dtype=np.complex128)
        if self.taps.ndim != 1 or self.taps.size < 1:
            raise ValueError("taps must be a non-empty vector")

    @property
    def L(self) -> int:
        return self.taps.size

    def predict(self, x: ComplexSignal | np.ndarray, rows: np.ndarray | range) -> np.ndarray:
        xs = x.samples if isinstance(x, ComplexSignal) else np.asarray(x)
        rows = np.asarray(rows, dtype=np.intp)
        return _lag_matrix(xs, rows, self.L) @ self.taps


def fit_linear(x: ComplexSignal | np.ndarray, y: ComplexSignal | np.ndarray,
               L: int, rows: np.ndarray | range) -> LinearCanceller:
    """Standard linear cancellation: LS fit of L direct taps."""
    xs = x.samples if isinstance(x, ComplexSignal) else np.asarray(x)
    ys = y.samples if isinstance(y, ComplexSignal) else np.asarray(y)
    rows = np.asarray(rows, dtype=np.intp)
    A = _lag_matrix(xs, rows, L)
    return LinearCanceller(taps=ls_fit(A, ys[rows]).coeffs)


def nonlinear_target(y: ComplexSignal | np.ndarray, lin: LinearCanceller,
                     x: ComplexSignal | np.ndarray) -> np.ndarray:
    """Residual y_nl = y - y_lin over the full signal length."""
    xs = x.samples if isinstance(x, ComplexSignal) else np.asarray(x)
    ys = y.samples if isinstance(y, ComplexSignal) else np.asarray(y)
    return ys - lin.predict(xs, np.arange(xs.size))


def linear_cancellation_db(y, lin: LinearCanceller, x, rows: np.ndarray | range) -> float:
    """Cancellation achieved by the linear stage alone on the given rows."""
    xs = x.samples if isinstance(x, ComplexSignal) else np.asarray(x)
    ys = y.samples if isinstance(y, ComplexSignal) else np.asarray(y)
    rows = np.asarray(rows, dtype=np.intp)
    resid = ys[rows] - lin.predict(xs, rows)
    return cancellation_db(ys[rows], resid)
