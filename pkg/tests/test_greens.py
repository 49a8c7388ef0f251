import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dyncp.greens import (ISOTROPIC, DipoleSpec, bulk_plasmon_frequency, green_continued,
                          green_envelope, green_near_field, green_perfect_closed,
                          green_reflected, surface_plasmon_discontinuity,
                          surface_plasmon_edge)
from dyncp.materials import SurfaceModel, epsilon, preset

from oracles import drude_weyl, perfect_weyl

GOLD = preset("gold")
PERFECT = SurfaceModel.perfect()
NORMAL = DipoleSpec(1.0, (0.0, 0.0, 1.0))
PARALLEL = DipoleSpec(2.0, (1.0, 0.0, 0.0))


@pytest.mark.parametrize("dipole", [ISOTROPIC, NORMAL, PARALLEL])
@pytest.mark.parametrize("u", [0.0, 0.3, 4.0, 17.0, 50.0])
def test_perfect_closed_form_against_weyl(u, dipole):
    z = 0.8
    w = u / (2 * z)
    d2, dz2 = dipole.magnitude_sq, dipole.normal_sq
    for omega in (w, 1j * w if u else 0.0):
        ref = perfect_weyl(z, omega, d2=d2, dz2=dz2)
        val = green_perfect_closed(dipole, z, omega).value
        assert abs(val - ref) <= 1e-8 * abs(ref)


@pytest.mark.parametrize("z", [0.01, 0.5, 10.0])
@pytest.mark.parametrize("xi", [0.05, 1.0, 20.0])
def test_drude_imaginary_axis_against_weyl(z, xi):
    ref = drude_weyl(z, 1j * xi, GOLD.plasma_frequency, GOLD.damping_rate)
    val = green_reflected(GOLD, ISOTROPIC, z, 1j * xi).value
    assert abs(val - ref) <= 1e-8 * abs(ref) + 1e-300


@settings(max_examples=40, deadline=None)
@given(st.floats(0.01, 20.0), st.floats(1e-3, 50.0))
def test_imaginary_axis_is_real(z, xi):
    g = green_reflected(GOLD, ISOTROPIC, z, 1j * xi).value
    assert abs(g.imag) <= 1e-12 * abs(g) + 1e-300
    assert g.real >= 0.0


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 5.0), st.floats(0.1, 12.0))
def test_schwarz_symmetry(z, w):
    up = 1e-12j
    plus = green_reflected(GOLD, ISOTROPIC, z, w + up).value
    minus = green_reflected(GOLD, ISOTROPIC, z, -w + up).value
    assert minus == pytest.approx(np.conj(plus), rel=1e-8, abs=1e-14 / z ** 3)


@pytest.mark.parametrize("w", [0.7, 2.0, 5.0])
def test_ray_and_real_momentum_paths_agree(w):
    a = green_reflected(GOLD, ISOTROPIC, 0.5, w).value
    b = green_reflected(GOLD, ISOTROPIC, 0.5, w, path="real_p").value
    assert a == pytest.approx(b, rel=1e-8)


def test_real_momentum_path_rejects_complex():
    with pytest.raises(ValueError):
        green_reflected(GOLD, ISOTROPIC, 0.5, 1j, path="real_p")


@pytest.mark.parametrize("angle", [0.1, 0.5, 0.9])
def test_envelope_bounded_along_rays(angle):
    # |G e^{−2iωz}| must not grow along rays in the upper half-plane
    z = 0.5
    rad = np.geomspace(1.0, 1e4, 9)
    w = rad * np.exp(1j * angle * np.pi / 2)
    g = np.abs(green_envelope(GOLD, ISOTROPIC, z, w)[0])
    assert np.all(np.isfinite(g))
    assert g[-1] <= 2.0 * g.max()
    assert g.max() < 1e3 * np.abs(green_perfect_closed(ISOTROPIC, z, 1.0).value) * \
        (1 + rad.max() * z) ** 2


def test_monotone_distance_decay():
    zs = np.geomspace(0.01, 20, 30)
    for xi in (0.1, 1.0, 10.0):
        g = np.array([green_reflected(GOLD, ISOTROPIC, z, 1j * xi).value.real for z in zs])
        assert np.all(np.diff(g) < 0)


def test_near_field_limit():
    z, w = 1e-3, 1.0 + 0.05j
    full = green_reflected(GOLD, ISOTROPIC, z, w).value
    near = green_near_field(GOLD, ISOTROPIC, z, w).value
    assert abs(full / near - 1) < 1e-2
    e = epsilon(GOLD, w)
    assert near == pytest.approx((4 / 3) * (e - 1) / (e + 1) / (32 * np.pi * z ** 3))


def test_perfect_limit_of_drude():
    m = SurfaceModel.drude(1e3, 0.0)
    for w in (0.5j, 0.5 + 1e-9j, 3.0):
        g = green_reflected(m, ISOTROPIC, 1.0, w).value
        ref = green_perfect_closed(ISOTROPIC, 1.0, w).value
        # corrections are O(ω/ω_p)
        assert abs(g - ref) < 1e-2 * abs(ref)


def test_continued_matches_envelope_at_zero():
    g0 = green_continued(GOLD, ISOTROPIC, 0.5, 0.0)
    ref = green_envelope(GOLD, ISOTROPIC, 0.5, 0.0)[0]
    assert g0 == pytest.approx(complex(ref), rel=1e-12)


def test_continued_is_continuous_across_real_axis():
    # the continuation below the real axis joins the upper half-plane values
    z = 0.5
    eps = 1e-4
    below = green_continued(GOLD, ISOTROPIC, z, np.array([-eps]))[0]
    above = green_envelope(GOLD, ISOTROPIC, z, np.array([1j * eps]))[0][0]
    assert abs(below - above) < 1e-2 * abs(above)


def test_continued_perfect_closed():
    xi = np.array([-0.5, -2.0])
    val = green_continued(PERFECT, ISOTROPIC, 1.0, xi)
    # u = 2ωz with ω = iξ
    u = 2j * xi
    ref = (2 - 2j * u - u * u) / (48 * np.pi)
    assert np.allclose(val, ref, rtol=1e-13)


def test_continued_rejects_upper_half_plane():
    with pytest.raises(ValueError):
        green_continued(GOLD, ISOTROPIC, 1.0, 0.5)


def test_plasmon_edges():
    wb = bulk_plasmon_frequency(GOLD)
    ws = surface_plasmon_edge(GOLD)
    assert abs(epsilon(GOLD, wb)) < 1e-12
    assert abs(epsilon(GOLD, ws) + 1) < 1e-12
    assert surface_plasmon_discontinuity(GOLD, ISOTROPIC, 0.5, 0.0) == 0.0
    with pytest.raises(ValueError):
        bulk_plasmon_frequency(PERFECT)


def test_dipole_validation():
    with pytest.raises(ValueError):
        DipoleSpec(0.0)
    with pytest.raises(ValueError):
        DipoleSpec(1.0, (1.0, 1.0, 0.0))
    assert NORMAL.normal_sq == 1.0 and ISOTROPIC.normal_sq == pytest.approx(1 / 3)


def test_bad_distance():
    with pytest.raises(ValueError):
        green_reflected(GOLD, ISOTROPIC, 0.0, 1j)
    with pytest.raises(ValueError):
        green_perfect_closed(ISOTROPIC, -1.0, 1j)
