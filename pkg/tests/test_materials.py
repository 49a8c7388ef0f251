import json

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from dyncp.materials import (HBAR_EV_S, Kind, PoleProximityError, SurfaceModel,
                             UnsupportedModelError, epsilon, epsilon_derivative, kappa,
                             kappa_medium, load_presets, preset, reflection)

GOLD = preset("gold")
freq = st.floats(0.01, 30.0)
mom = st.floats(0.0, 40.0)


def test_gold_preset_in_reduced_units():
    assert GOLD.plasma_frequency == pytest.approx(1 / 0.18)
    # 1/γ = 19 fs at ħω_p = 8.9 eV
    gamma_ev = HBAR_EV_S / 19e-15
    assert GOLD.damping_rate == pytest.approx(gamma_ev / (0.18 * 8.9), rel=1e-12)
    assert GOLD.surface_plasmon_frequency == pytest.approx(GOLD.plasma_frequency / 2 ** 0.5)


def test_explicit_transition_energy():
    m = preset("gold", omega_ev=1.0)
    assert m.plasma_frequency == pytest.approx(8.9)
    assert preset("perfect").kind is Kind.PERFECT


def test_unknown_preset():
    with pytest.raises(KeyError):
        preset("silver")


def test_preset_override_from_environment(tmp_path, monkeypatch):
    table = load_presets()
    table["materials"]["silver"] = {"kind": "drude", "plasma_energy_eV": 9.0,
                                    "relaxation_time_fs": 30.0}
    path = tmp_path / "presets.json"
    path.write_text(json.dumps(table))
    monkeypatch.setenv("DYNCP_PRESETS", str(path))
    assert preset("silver", omega_ev=1.5).plasma_frequency == pytest.approx(6.0)


def test_model_validation():
    with pytest.raises(ValueError):
        SurfaceModel.drude(-1.0)
    with pytest.raises(ValueError):
        SurfaceModel.drude(1.0, -0.1)
    with pytest.raises(UnsupportedModelError):
        epsilon(SurfaceModel.perfect(), 1.0)


def test_epsilon_pole_at_zero():
    with pytest.raises(ZeroDivisionError):
        epsilon(GOLD, 0.0)
    assert kappa(0.0, 2.0) == 2.0


def test_epsilon_derivative_matches_finite_difference():
    w = 1.3 + 0.2j
    h = 1e-6
    fd = (epsilon(GOLD, w + h) - epsilon(GOLD, w - h)) / (2 * h)
    assert abs(epsilon_derivative(GOLD, w) - fd) < 1e-7 * abs(fd)


@settings(max_examples=60, deadline=None)
@given(freq, mom)
def test_schwarz_symmetry(w, p):
    # −ω is reached from above the real axis
    up = 1e-13j
    assert epsilon(GOLD, -w + up) == pytest.approx(np.conj(epsilon(GOLD, w + up)), rel=1e-9)
    for pol in "sp":
        lhs = reflection(GOLD, -w + up, p, pol, pole_tol=0.0)
        rhs = np.conj(reflection(GOLD, w + up, p, pol, pole_tol=0.0))
        assert lhs == pytest.approx(rhs, rel=1e-6, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.floats(1e-3, 50.0), mom)
def test_imaginary_axis_values_are_real(xi, p):
    w = 1j * xi
    assert abs(epsilon(GOLD, w).imag) == 0.0
    assert abs(kappa(w, p).imag) == 0.0
    assert abs(kappa_medium(GOLD, w, p).imag) <= 1e-12 * abs(kappa_medium(GOLD, w, p))
    rp = reflection(GOLD, w, p, "p")
    rs = reflection(GOLD, w, p, "s")
    assert abs(rp.imag) <= 1e-12 and abs(rs.imag) <= 1e-12
    assert 0.0 < rp.real < 1.0
    assert -1.0 < rs.real < 0.0


@pytest.mark.parametrize("w", [0.5, 2.0, 4.0 + 0.3j])
def test_large_momentum_limits(w):
    e = epsilon(GOLD, w)
    p = 1e5
    rp = reflection(GOLD, w, p, "p")
    rs = reflection(GOLD, w, p, "s")
    assert abs(rp - (e - 1) / (e + 1)) < 1e-6
    assert abs(rs * 4 * p * p / ((e - 1) * w * w) - 1) < 1e-6


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 2.0), st.floats(0.0, 3.0))
def test_perfect_limit(w, p):
    # κ → 0 at grazing incidence sends r_p to −1 for any finite ε; the
    # correction is about 2ω/(ω_p|κ|), so stay away from |κ| ≲ ω/2
    assume(abs(p * p - w * w) > 0.25 * w * w)
    m = SurfaceModel.drude(1e3 * w, 0.0)
    rp = reflection(m, w + 1e-15j, p, "p")
    assert abs(rp - 1.0) < 5e-3


def test_branch_conventions():
    # propagating: Im κ ≤ 0
    k = kappa(2.0, 1.0)
    assert k.real == 0.0 and k.imag < 0
    assert kappa(1.0, 2.0) == pytest.approx(3 ** 0.5)
    km = kappa_medium(GOLD, 1.0 + 0.5j, 0.3)
    assert km.real >= 0


def test_pole_proximity():
    m = SurfaceModel.drude(2 ** 0.5, 0.0)
    # lossless surface plasmon at p = 1: ω̄ = √(2 − √2)
    w = np.sqrt(2 - np.sqrt(2))
    with pytest.raises(PoleProximityError):
        reflection(m, w, 1.0, "p", pole_tol=1e-6)


def test_reflection_rejects_bad_polarization():
    with pytest.raises(ValueError):
        reflection(GOLD, 1.0, 1.0, "te")


def test_perfect_reflection_constants():
    m = SurfaceModel.perfect()
    assert reflection(m, 1.0, 2.0, "p") == 1.0
    assert reflection(m, 1.0, 2.0, "s") == -1.0
