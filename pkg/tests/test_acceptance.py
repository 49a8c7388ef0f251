"""Acceptance checks, one per criterion.

Each check returns (passed, detail).  Under pytest every criterion is its own
test and a PASS/FAIL line per criterion is printed in the terminal summary;
``python tests/test_acceptance.py`` prints the same lines directly.
"""
import json
import subprocess
import sys
import warnings
from pathlib import Path

import numpy as np
import pytest

HERE = Path(__file__).resolve().parent
sys.path.insert(0, str(HERE))

from oracles import perfect_weyl  # noqa: E402

from dyncp import cli  # noqa: E402
from dyncp.greens import ISOTROPIC, green_perfect_closed  # noqa: E402
from dyncp.materials import SurfaceModel, preset  # noqa: E402
from dyncp.plasmon import dispersion_lossless, dispersion_lossy, near_field_pole  # noqa: E402
from dyncp.potentials import (AtomSurfaceConfig, DipoleChange, LightConeWarning,  # noqa: E402
                              StarkShift, delta_u_res, u_dyn_contour, u_dyn_oracle,
                              u_partial_dipole, u_partial_stark, u_static)

GOLD = preset("gold")
PERFECT = SurfaceModel.perfect()
WS = GOLD.surface_plasmon_frequency
GAMMA = GOLD.damping_rate

RESULTS = {}


def quiet(fn, *a, **k):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LightConeWarning)
        return fn(*a, **k)


def peaks(t, v):
    """Times and magnitudes of the local maxima of |v|."""
    a = np.abs(v)
    i = np.nonzero((a[1:-1] >= a[:-2]) & (a[1:-1] > a[2:]))[0] + 1
    return t[i], a[i]


def c1_switch_on():
    worst = 0.0
    for model in (GOLD, PERFECT):
        for z in (0.5, 10.0):
            cfg = AtomSurfaceConfig(model, z)
            us = u_static(cfg)
            worst = max(worst, abs(us + u_dyn_contour(cfg, 0.0)) / abs(us))
    return worst <= 1e-6, f"max |U(0)|/|U_stat| = {worst:.2e}"


def c2_contour_oracle():
    cfg = AtomSurfaceConfig(GOLD, 10.0)
    ts = np.array([5.0, 15.0, 25.0, 40.0])
    err = np.abs(u_dyn_contour(cfg, ts) - u_dyn_oracle(cfg, ts)) / abs(u_static(cfg))
    return err.max() <= 1e-2, f"max deviation = {err.max():.2e} |U_stat|"


def c3_perfect_closed_form():
    z = 0.8
    worst = 0.0
    for u in np.linspace(0.0, 50.0, 26):
        w = u / (2 * z)
        for omega in (w, 1j * w if u else 0.0):
            ref = perfect_weyl(z, omega)
            val = green_perfect_closed(ISOTROPIC, z, omega).value
            worst = max(worst, abs(val - ref) / abs(ref))
    return worst <= 1e-8, f"max relative error = {worst:.2e}"


def c4_static_near_field():
    z = 1e-3
    perfect = u_static(AtomSurfaceConfig(PERFECT, z))
    closed = -1.0 / (48 * np.pi * z ** 3)
    e1 = abs(perfect / closed - 1)
    ratio = u_static(AtomSurfaceConfig(GOLD, z)) / perfect
    target = WS / (1 + WS)
    e2 = abs(ratio / target - 1)
    return e1 <= 1e-3 and e2 <= 5e-2, \
        f"perfect vs closed form {e1:.2e}, gold/perfect {ratio:.4f} vs {target:.4f}"


def c5_dispersion():
    wp = GOLD.plasma_frequency
    p = np.linspace(0.05, 10.0, 400) * wp
    lossy = dispersion_lossy(GOLD, p).omega_bar
    lossless = dispersion_lossless(GOLD, p).omega_bar
    d = np.max(np.abs(lossy.real - np.real(lossless))) / WS
    far = dispersion_lossy(GOLD, 1e3 * wp).omega_bar
    lim = abs(far - near_field_pole(GOLD)) / WS
    bound = 10 * (GAMMA / WS) ** 2
    return d <= 1e-2 and lim <= bound, \
        f"max |Re Δω̄| = {d:.2e} ω_sp, large-p offset {lim:.1e} (bound {bound:.1e})"


def _exponent(branch):
    cfg = AtomSurfaceConfig(GOLD, 10.0)
    ts = np.linspace(30.0, 100.0, 1401)
    tp, ap = peaks(ts, delta_u_res(cfg, ts, branch))
    return np.polyfit(np.log(tp), np.log(ap), 1)[0]


def c6_far_field_envelope():
    lossless = _exponent("lossless")
    lossy = _exponent("lossy")
    return abs(lossless + 5) <= 0.3, \
        f"lossless exponent {lossless:.2f} (lossy {lossy:.2f}, informational)"


def c7_near_field_mode():
    cfg = AtomSurfaceConfig(GOLD, 0.01)
    us = u_static(cfg)
    ts = np.linspace(0.05, 50.0, 5001)
    v = delta_u_res(cfg, ts)
    s = np.signbit(v)
    k = np.nonzero(s[1:] != s[:-1])[0]
    tc = ts[k] - v[k] * (ts[k + 1] - ts[k]) / (v[k + 1] - v[k])
    freq = np.pi * (tc.size - 1) / (tc[-1] - tc[0])
    f_ratio = freq / (1 + WS)
    tp, ap = peaks(ts, v)
    rate = -np.polyfit(tp, np.log(ap), 1)[0]
    r_ratio = rate / (GAMMA / 2)
    cancel = abs(delta_u_res(cfg, 0.0, check_light_cone=False) + us) / abs(us)
    bound = 3 * GAMMA / WS
    ok = abs(f_ratio - 1) <= 1e-2 and abs(r_ratio - 1) <= 5e-2 and cancel <= bound
    return ok, (f"frequency {f_ratio:.4f} (Ω+ω_sp), rate {r_ratio:.3f} (γ/2), "
                f"cancellation {cancel:.4f} (bound {bound:.4f})")


def c8_decay_time(tmp_path):
    out = tmp_path / "decay.csv"
    rc = cli.main(["decay-time", "-o", str(out)])
    man = json.loads(out.with_suffix(".json").read_text())
    tau = man["parameters"]["reduced"]["tau_fit"]
    elapsed = man["elapsed"]
    return rc == 0 and 0.9 <= tau <= 1.3 and elapsed <= 900, \
        f"tau_fit = {tau:.4f}, scan took {elapsed:.0f} s"


def c9_partial_stark():
    cfg = AtomSurfaceConfig(GOLD, 10.0)
    q = StarkShift(0.9)
    start = quiet(u_partial_stark, cfg, q, 0.0).total[0]
    e0 = abs(start / u_static(cfg) - 1)
    ts = np.linspace(200.0, 400.0, 2001)
    mean = np.mean(quiet(u_partial_stark, cfg, q, ts).total)
    e1 = abs(mean / u_static(cfg, 0.9) - 1)
    return e0 <= 1e-3 and e1 <= 1e-2, \
        f"Ũ(0) vs U_stat(Ω) {e0:.1e}, late mean vs U_stat(Ω̃) {e1:.1e}"


def c10_dipole_quench():
    cfg = AtomSurfaceConfig(GOLD, 1.0)
    ts = np.linspace(0.0, 10.0, 51)
    same = quiet(u_partial_dipole, cfg, DipoleChange(), ts)
    dyn = np.max(np.abs(same.u_dyn) + np.abs(same.delta_u_partial)) / abs(same.u_stat)
    turned = quiet(u_partial_dipole, cfg, DipoleChange((0.0, 0.0, 1.0), (1.0, 0.0, 0.0)),
                   np.array([0.0]))
    jump = abs(turned.total[0] - turned.u_stat) / abs(turned.u_stat)
    return dyn <= 1e-12 and jump > 0, \
        f"identity quench dynamic part {dyn:.1e}, generic jump {jump:.3f} |Ũ_stat|"


def c11_repulsive_transient():
    cfg = AtomSurfaceConfig(GOLD, 10.0)
    ts = np.linspace(0.0, 40.0, 401)[1:-1]
    # the divergence at t = 2z would make any sign test trivial
    ts = ts[~cfg.near_light_cone(ts)]
    total = (u_static(cfg) + quiet(u_dyn_contour, cfg, ts)) / abs(u_static(cfg))
    up = np.nonzero(total > 0)[0]
    if up.size == 0:
        return False, f"max U(t) = {total.max():+.3f} |U_stat| off the light cone"
    i = up[0]
    return True, f"first U(t) > 0 at t = {ts[i]:.1f}: {total[i]:+.3f} |U_stat|"


def c12_property_suites():
    base = [sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider"]
    runs = [
        base + [str(HERE / "test_quadrature.py")],
        base + [str(HERE / n) for n in ("test_materials.py", "test_greens.py",
                                        "test_plasmon.py")]
        + ["-k", "schwarz or real or below_light_cone"],
    ]
    codes = [subprocess.run(r, capture_output=True, cwd=HERE.parent).returncode for r in runs]
    return all(c == 0 for c in codes), f"pytest exit codes {codes}"


CRITERIA = {
    1: ("switch-on continuity", c1_switch_on),
    2: ("contour vs oracle", c2_contour_oracle),
    3: ("perfect-reflector closed form", c3_perfect_closed_form),
    4: ("static near-field values", c4_static_near_field),
    5: ("plasmon dispersion", c5_dispersion),
    6: ("far-field resonant envelope", c6_far_field_envelope),
    7: ("near-field resonant mode", c7_near_field_mode),
    8: ("decay-time scan", c8_decay_time),
    9: ("partial dressing limits", c9_partial_stark),
    10: ("dipole-quench properties", c10_dipole_quench),
    11: ("repulsive transient", c11_repulsive_transient),
    12: ("property suites", c12_property_suites),
}


def line(n, ok, detail):
    return f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {CRITERIA[n][0]}: {detail}"


def evaluate(n, tmp_path):
    fn = CRITERIA[n][1]
    ok, detail = fn(tmp_path) if n == 8 else fn()
    RESULTS[n] = line(n, ok, detail)
    print(RESULTS[n])
    return ok, detail


@pytest.mark.parametrize("n", sorted(CRITERIA))
def test_criterion(n, tmp_path):
    ok, detail = evaluate(n, tmp_path)
    assert ok, detail


if __name__ == "__main__":
    import tempfile

    with tempfile.TemporaryDirectory() as d:
        fails = sum(not evaluate(n, Path(d))[0] for n in sorted(CRITERIA))
    sys.exit(1 if fails else 0)
