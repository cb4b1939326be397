"""Complex activation values and their Wirtinger derivative pairs."""

import numpy as np
import pytest

from fdsic.activations import (
    Activation, activation_apply, amp_phase, cardioid, complex_activation, crelu,
    modrelu, real_activation, zrelu,
)

COMPLEX_KINDS = [Activation.AMP_PHASE, Activation.CARDIOID, Activation.MODRELU,
                 Activation.CRELU, Activation.ZRELU]


def numeric_pair(fn, z, h=1e-7):
    """(df/dz, df/dz*) from central differences on the real/imag parts."""
    fx = (fn(z + h) - fn(z - h)) / (2 * h)
    fy = (fn(z + 1j * h) - fn(z - 1j * h)) / (2 * h)
    return 0.5 * (fx - 1j * fy), 0.5 * (fx + 1j * fy)


def _eval(kind, z, b=None):
    out = complex_activation(kind, np.atleast_1d(np.asarray(z, dtype=complex)),
                             None if b is None else np.atleast_1d(b))
    return tuple(None if o is None else o[0] for o in out)


# ---------------------------------------------------------------------------
# Table values

def test_crelu_quadrant_cases():
    f, _, _, _ = _eval(Activation.CRELU, -1 + 2j)
    assert f == 0 + 2j
    assert _eval(Activation.CRELU, 3 + 4j)[0] == 3 + 4j
    assert _eval(Activation.CRELU, -1 - 2j)[0] == 0


def test_cardioid_cardinal_phases():
    assert np.isclose(_eval(Activation.CARDIOID, 1.0 + 0j)[0], 1.0)
    assert np.isclose(_eval(Activation.CARDIOID, 1.0j)[0], 0.5j)
    assert np.isclose(abs(_eval(Activation.CARDIOID, -1.0 + 0j)[0]), 0.0)


def test_modrelu_zero_bias_is_identity_off_origin():
    rng = np.random.default_rng(0)
    z = rng.standard_normal(100) + 1j * rng.standard_normal(100)
    f, _, _, _ = modrelu(z, np.zeros(100))
    assert np.allclose(f, z, rtol=1e-14, atol=0)


def test_modrelu_negative_bias_kills_small_magnitudes():
    z = 0.5 * np.exp(1j * np.pi / 3)
    assert _eval(Activation.MODRELU, z, b=-1.0)[0] == 0


def test_zrelu_phase_gate():
    assert _eval(Activation.ZRELU, 1 + 1j)[0] == 1 + 1j
    assert _eval(Activation.ZRELU, -1 + 1j)[0] == 0
    assert _eval(Activation.ZRELU, 1 - 1j)[0] == 0
    assert _eval(Activation.ZRELU, 1.0 + 0j)[0] == 1.0  # boundary included


def test_amp_phase_saturation():
    f = _eval(Activation.AMP_PHASE, 1000.0 + 0j)[0]
    # exact tanh saturates to 1.0 in double precision at this magnitude
    assert 1 - 1e-6 < abs(f) <= 1.0
    assert np.isclose(np.angle(f), 0.0)


def test_zero_input_convention():
    for kind in COMPLEX_KINDS:
        f, fz, fzbar, _ = _eval(kind, 0.0 + 0.0j, b=0.5)
        assert f == 0
        assert fz == 0 and fzbar == 0


# ---------------------------------------------------------------------------
# Derivative pairs vs the numeric bivariate oracle

def _margin_points(rng, n, margin=1e-2):
    """Random complex points kept away from every activation kink."""
    pts = []
    while len(pts) < n:
        z = complex(rng.standard_normal(), rng.standard_normal())
        if abs(z.real) > margin and abs(z.imag) > margin and abs(z) > margin:
            pts.append(z)
    return pts


@pytest.mark.parametrize("kind", COMPLEX_KINDS)
def test_wirtinger_pairs_match_numeric(kind):
    rng = np.random.default_rng(123)
    b = 0.3
    for z in _margin_points(rng, 100):
        if kind is Activation.MODRELU and abs(abs(z) + b) < 1e-2:
            continue
        _, fz, fzbar, _ = _eval(kind, z, b=b)
        fn = lambda w: complex_activation(kind, np.atleast_1d(w),
                                          np.atleast_1d(b))[0][0]
        nz, nzbar = numeric_pair(fn, z)
        assert abs(fz - nz) < 1e-6 * max(1.0, abs(nz)), (kind, z)
        assert abs(fzbar - nzbar) < 1e-6 * max(1.0, abs(nzbar)), (kind, z)


def test_modrelu_bias_derivative_matches_numeric():
    rng = np.random.default_rng(5)
    h = 1e-7
    for z in _margin_points(rng, 50):
        b = rng.uniform(-0.4, 0.4)
        if abs(abs(z) + b) < 1e-2:
            continue
        _, _, _, fb = _eval(Activation.MODRELU, z, b=b)
        num = (modrelu(np.atleast_1d(z), np.atleast_1d(b + h))[0][0]
               - modrelu(np.atleast_1d(z), np.atleast_1d(b - h))[0][0]) / (2 * h)
        assert abs(fb - num) < 1e-6 * max(1.0, abs(num))


def test_holomorphic_identity_has_zero_conjugate_derivative():
    rng = np.random.default_rng(7)
    for z in _margin_points(rng, 20):
        fn = lambda w: w
        nz, nzbar = numeric_pair(fn, z)
        assert abs(nz - 1.0) < 1e-8
        assert abs(nzbar) < 1e-8


# ---------------------------------------------------------------------------
# Structural properties

def test_amp_phase_magnitude_bounded():
    rng = np.random.default_rng(11)
    z = 10 ** rng.uniform(-2, 4, 500) * np.exp(1j * rng.uniform(-np.pi, np.pi, 500))
    f, _, _ = amp_phase(z)
    # the phase factor z/|z| rounds to magnitude 1 within one ulp
    assert np.all(np.abs(f) <= 1.0 + 4 * np.finfo(float).eps)
    moderate = np.abs(z) < 15  # below double-precision tanh saturation
    assert np.all(np.abs(f[moderate]) < 1.0)


@pytest.mark.parametrize("fn", [crelu, zrelu])
def test_idempotent_activations(fn):
    rng = np.random.default_rng(13)
    z = rng.standard_normal(200) + 1j * rng.standard_normal(200)
    once = fn(z)[0]
    twice = fn(once)[0]
    assert np.array_equal(once, twice)


def test_cardioid_contracts_magnitude():
    rng = np.random.default_rng(17)
    z = rng.standard_normal(200) + 1j * rng.standard_normal(200)
    f, _, _ = cardioid(z)
    assert np.all(np.abs(f) <= np.abs(z) + 1e-15)


def test_real_activations():
    x = np.array([-2.0, -0.5, 0.0, 0.5, 2.0])
    relu, drelu = real_activation(Activation.RELU, x)
    assert np.array_equal(relu, [0, 0, 0, 0.5, 2.0])
    assert np.array_equal(drelu, [0, 0, 0, 1, 1])
    tanh, dtanh = real_activation(Activation.TANH, x)
    assert np.allclose(dtanh, 1 - tanh ** 2)


def test_dispatch_rejects_mismatched_field():
    with pytest.raises(ValueError):
        complex_activation(Activation.TANH, np.array([1j]))
    with pytest.raises(ValueError):
        real_activation(Activation.CRELU, np.array([1.0]))
    with pytest.raises(ValueError):
        complex_activation(Activation.MODRELU, np.array([1j]))  # bias required


def test_activation_apply_dispatch():
    assert activation_apply(Activation.RELU, np.array([-1.0, 2.0]))[1] == 2.0
    assert activation_apply(Activation.CRELU, np.array([-1 + 2j]))[0] == 2j
