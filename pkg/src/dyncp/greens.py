"""Reflected single-point Green tensor projected onto the atomic dipole.

The Weyl integral over in-plane momenta is written in terms of κ, using
p dp/κ = dκ and p² = κ² + ω².  For a dipole with squared moment |d|² and
normal component d_z² the projected value is

    G(z, ω) = 1/(8π) ∫ dκ e^{−2κz} [(κ² r_p + ω² r_s)(|d|² − d_z²)
                                     + 2(κ² + ω²) r_p d_z²]

taken along the image of the real p axis, which starts at κ₀ = −iω.  By
default the path is the horizontal ray κ = κ₀ + s, s ≥ 0.  It is equivalent
to the real-p path for every ω in the closed upper half-plane but carries no
oscillating phase, and the factor e^{2iωz} = e^{−2κ₀z} comes out in front.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .materials import Kind, epsilon
from .quadrature import QuadratureSpec, integrate_interval, integrate_semi_infinite

__all__ = [
    "DipoleSpec",
    "GreenTrace",
    "green_reflected",
    "green_envelope",
    "green_perfect_closed",
    "green_near_field",
    "bracket",
    "ISOTROPIC",
    "green_continued",
    "bulk_plasmon_frequency",
    "bulk_discontinuity",
    "surface_plasmon_edge",
    "surface_plasmon_discontinuity",
]

P_INTEGRAL_SPEC = QuadratureSpec(rel_tol=1e-10, max_subdivisions=8000)
CONTINUED_SPEC = QuadratureSpec(rel_tol=1e-10, max_subdivisions=20000, norm="max")

# columns per batched κ integration; bounds the workspace size
_CHUNK = 32


@dataclass(frozen=True)
class DipoleSpec:
    """Transition dipole of the atom.

    ``orientation=None`` means isotropic (d_m d_n = |d|²δ_mn/3); otherwise a
    unit 3-vector along which the dipole is aligned.
    """

    magnitude_sq: float = 1.0
    orientation: tuple | None = None

    def __post_init__(self):
        if not self.magnitude_sq > 0:
            raise ValueError("dipole magnitude_sq must be positive")
        if self.orientation is not None:
            v = np.asarray(self.orientation, float)
            if v.shape != (3,) or abs(np.linalg.norm(v) - 1.0) > 1e-12:
                raise ValueError("orientation must be a unit 3-vector")
            object.__setattr__(self, "orientation", tuple(float(c) for c in v))

    @property
    def isotropic(self):
        return self.orientation is None

    @property
    def normal_sq(self):
        """d_z², the squared component along the surface normal."""
        if self.isotropic:
            return self.magnitude_sq / 3.0
        return self.magnitude_sq * self.orientation[2] ** 2

    def to_dict(self):
        return {"magnitude_sq": self.magnitude_sq, "orientation": self.orientation}


ISOTROPIC = DipoleSpec()


@dataclass
class GreenTrace:
    value: complex | np.ndarray
    z: float
    omega: complex | np.ndarray
    error_bound: float | np.ndarray = 0.0
    meta: dict = field(default_factory=dict)


def _medium_term(model, w):
    """A = ω²(1 − ε) = ω_p²ω/(ω + iγ), finite at ω = 0."""
    return model.plasma_frequency ** 2 * w / (w + 1j * model.damping_rate)


def _fresnel(model, kap, w, km=None):
    """r_p, r_s as functions of (κ, ω); κm = √(κ² + ω²(1 − ε)).

    ``km`` overrides the principal branch, which is needed on continued
    sheets.  At ω = 0 the Drude limits r_p = 1, ω²r_s = 0 are used.  Both
    numerators are written in terms of ε − 1 so that nothing cancels when
    |ω| ≫ ω_p.
    """
    if model.kind is Kind.PERFECT:
        one = np.ones(np.broadcast(kap, w).shape)
        return one, -one
    w = np.asarray(w, complex)
    wsafe = np.where(w == 0, 1.0, w)
    delta = -model.plasma_frequency ** 2 / (wsafe * (wsafe + 1j * model.damping_rate))
    a = _medium_term(model, w)
    if km is None:
        km = np.sqrt(kap * kap + a)
        km = np.where(km.real < 0, -km, km)
    e = 1.0 + delta
    den = e * kap + km
    # εκ − κm = (ε²κ² − κm²)/(εκ + κm) holds on any sheet
    num = delta * (kap * kap * (2.0 + delta) + w * w) / den
    rp = num / den
    rs = -a / (kap + km) ** 2
    rp = np.where(w == 0, 1.0, rp)
    return rp, rs


def bracket(model, dipole, kap, w, km=None):
    """Integrand of the κ integral without the e^{−2κz} factor and 1/(8π)."""
    rp, rs = _fresnel(model, kap, w, km)
    d2 = dipole.magnitude_sq
    dz2 = dipole.normal_sq
    w2 = w * w
    # κ² + ω² as a product so it keeps its accuracy near κ = −iω
    kw = (kap - 1j * w) * (kap + 1j * w)
    return (kap * kap * rp + w2 * rs) * (d2 - dz2) + 2.0 * kw * rp * dz2


def _scales(model, z, w):
    wp = 0.0 if model.kind is Kind.PERFECT else model.plasma_frequency
    wmax = float(np.max(np.abs(w))) if np.size(w) else 0.0
    decay = 1.0 / (2.0 * z)
    pts = sorted({x for x in (decay, wp, 0.25 * wp, 4 * wp, wmax) if x > 0})
    return decay, pts


def green_envelope(model, dipole, z, omega, spec=None):
    """Return ``g(ω) = G(z, ω) e^{−2iωz}`` and its error bound.

    ``omega`` may be an array; all frequencies share one adaptive run.
    """
    if not z > 0:
        raise ValueError("distance z must be positive")
    spec = spec or P_INTEGRAL_SPEC
    w = np.atleast_1d(np.asarray(omega, complex))
    if np.any(w.imag < 0):
        raise ValueError("retarded Green tensor needs Im ω ≥ 0")
    decay, pts = _scales(model, z, w)
    sp = QuadratureSpec(spec.rel_tol, spec.abs_tol, spec.max_subdivisions,
                        "rational", decay)

    def run(wc):
        k0 = -1j * wc

        def f(s):
            kap = k0[None, :] + s[:, None]
            return np.exp(-2.0 * s[:, None] * z) * bracket(model, dipole, kap, wc[None, :])

        res = integrate_semi_infinite(f, sp, breakpoints=pts)
        return np.atleast_1d(res.value), np.atleast_1d(res.error_bound)

    parts = [run(w[i:i + _CHUNK]) for i in range(0, w.size, _CHUNK)]
    scale = 1.0 / (8.0 * np.pi)
    val = np.concatenate([p[0] for p in parts]) * scale
    err = np.concatenate([p[1] for p in parts]) * scale
    if np.ndim(omega) == 0:
        return complex(val[0]), float(err[0])
    return val, err


def _green_real_p(model, dipole, z, w, spec):
    """Real-p path for real ω ≥ 0, split at the light cone p = ω.

    Inside the light cone κ = −iq with q ∈ [0, ω]; outside κ ∈ [0, ∞).
    """
    sp = QuadratureSpec(spec.rel_tol, spec.abs_tol, spec.max_subdivisions,
                        "rational", 1.0 / (2.0 * z))
    _, pts = _scales(model, z, np.array([w]))
    total = 0j
    err = 0.0
    if w > 0:
        def inner(q):
            kap = -1j * q
            # dκ = −i dq, integrating q from ω down to 0 flips the sign
            return 1j * np.exp(-2.0 * kap * z) * bracket(model, dipole, kap + 0j, w + 0j)
        r = integrate_interval(inner, 0.0, w, sp)
        total += r.value
        err += r.error_bound
    r = integrate_semi_infinite(
        lambda k: np.exp(-2.0 * k * z) * bracket(model, dipole, k + 0j, w + 0j), sp,
        breakpoints=pts)
    total += r.value
    err += r.error_bound
    return total / (8 * np.pi), err / (8 * np.pi)


def green_reflected(model, dipole, z, omega, spec=None, path="ray"):
    """Projected reflected Green tensor G(z, ω).

    Parameters
    ----------
    model : SurfaceModel
    dipole : DipoleSpec
    z : float
        Atom-surface distance, > 0.
    omega : complex or array
        Frequencies in the closed upper half-plane.
    path : {"ray", "real_p"}
        ``"real_p"`` integrates along the real p axis split at p = ω and is
        only available for real ω ≥ 0; it serves as a cross-check.

    Returns
    -------
    GreenTrace
    """
    spec = spec or P_INTEGRAL_SPEC
    if path == "real_p":
        w = np.atleast_1d(np.asarray(omega, complex))
        if np.any(w.imag != 0) or np.any(w.real < 0):
            raise ValueError("real_p path needs real ω ≥ 0")
        out = [_green_real_p(model, dipole, z, float(x.real), spec) for x in w]
        val = np.array([o[0] for o in out])
        err = np.array([o[1] for o in out])
        if np.ndim(omega) == 0:
            val, err = complex(val[0]), float(err[0])
        return GreenTrace(val, z, omega, err, {"path": path})
    if path != "ray":
        raise ValueError(f"unknown path {path!r}")
    g, err = green_envelope(model, dipole, z, omega, spec)
    ph = np.exp(2j * np.asarray(omega, complex) * z)
    return GreenTrace(g * ph, z, omega, err * np.abs(ph), {"path": path})


def green_perfect_closed(dipole, z, omega, envelope=False):
    """Closed form for an ideal reflector.

    Isotropic: G = |d|²(2 − 2iu − u²)e^{iu}/(48πz³), u = 2ωz.  For an aligned
    dipole the tangential and normal parts are combined separately.  With
    ``envelope=True`` the factor e^{iu} is dropped.
    """
    if not z > 0:
        raise ValueError("distance z must be positive")
    u = 2.0 * np.asarray(omega, complex) * z
    e = 1.0 if envelope else np.exp(1j * u)
    d2 = dipole.magnitude_sq
    dz2 = dipole.normal_sq
    # normal: ∫2(κ²+ω²)e^{−2κz}dκ ; tangential: ∫(κ²−ω²)e^{−2κz}dκ
    normal = (1.0 - 1j * u) * e / (2.0 * z ** 3)
    tangential = (1.0 - 1j * u - u * u) * e / (4.0 * z ** 3)
    val = (tangential * (d2 - dz2) + normal * dz2) / (8.0 * np.pi)
    return GreenTrace(val[()], z, omega)


def green_near_field(model, dipole, z, omega):
    """Non-retarded limit (|d|² + d_z²) r_p(ω)/(32πz³), r_p = (ε−1)/(ε+1)."""
    if not z > 0:
        raise ValueError("distance z must be positive")
    if model.kind is Kind.PERFECT:
        rp = np.ones_like(np.asarray(omega, complex))
    else:
        e = epsilon(model, omega)
        rp = (e - 1.0) / (e + 1.0)
    val = (dipole.magnitude_sq + dipole.normal_sq) * rp / (32.0 * np.pi * z ** 3)
    return GreenTrace(val[()], z, omega)



def _chunked(fn, n, *arrays):
    """Apply ``fn`` to slices of at most ``_CHUNK`` columns and concatenate."""
    if n == 0:
        return np.zeros(0, complex)
    out = [fn(*(a[i:i + _CHUNK] for a in arrays)) for i in range(0, n, _CHUNK)]
    return np.concatenate(out)


def _continued_columns(model, dipole, z, xi, spec):
    w = 1j * xi
    a_med = _medium_term(model, w).real
    eddy = a_med < 0
    a_abs = np.abs(a_med)
    root = np.sqrt(a_abs)
    # height of the path above the real κ axis: clears the surface-plasmon
    # pole on the ordinary branch, stays close to the axis on the eddy branch
    h = np.where(eddy, np.minimum(0.5 * root, 0.05),
                 0.5 * np.minimum(root, np.abs(xi)))

    def km_of(kap):
        if not np.any(eddy):
            return None
        ordinary = np.sqrt(kap * kap + a_med)
        ordinary = np.where(ordinary.real < 0, -ordinary, ordinary)
        cut = np.sqrt(kap - root) * np.sqrt(kap + root)
        return np.where(eddy, cut, ordinary)

    def f_of(kap):
        return np.exp(-2.0 * (kap - xi) * z) * bracket(model, dipole, kap, w, km_of(kap))

    rise = integrate_interval(lambda u: 1j * h * f_of(xi + 1j * h * u[:, None]), 0.0, 1.0,
                              spec)
    sp = spec.replace(transform="rational", scale=1.0 / (2.0 * z))
    run = integrate_semi_infinite(lambda s_: f_of(xi + 1j * h + s_[:, None]), sp,
                                  breakpoints=[model.plasma_frequency])
    return np.atleast_1d((rise.value + run.value) / (8.0 * np.pi))


def green_continued(model, dipole, z, xi, spec=None):
    """Envelope g(iξ) = G(z, iξ)e^{2ξz} continued to ξ < 0.

    The continuation runs from the upper half-plane across the positive real
    frequency axis.  For a Drude medium the κ path starts at κ₀ = ξ, rises
    vertically and then runs parallel to the real axis, passing above the
    surface-plasmon pole of r_p.  Where ω²(1 − ε) < 0, i.e. −γ < ξ < 0, the
    medium root κ_m is taken with its branch points at ±√(ε − 1)|ξ| joined
    along the real axis (the eddy-current cut).

    Parameters
    ----------
    xi : float or array
        Negative values.  ``xi = 0`` returns the static value.

    Returns
    -------
    complex or ndarray
    """
    if not z > 0:
        raise ValueError("distance z must be positive")
    x = np.atleast_1d(np.asarray(xi, float))
    if np.any(x > 0):
        raise ValueError("green_continued expects xi <= 0")
    if model.is_perfect:
        out = np.asarray(green_perfect_closed(dipole, z, 1j * x, envelope=True).value)
    else:
        spec = spec or CONTINUED_SPEC
        out = np.empty(x.shape, complex)
        zero = x == 0
        if np.any(zero):
            out[zero] = green_envelope(model, dipole, z, np.zeros(zero.sum()), spec)[0]
        rest = ~zero
        out[rest] = _chunked(lambda c: _continued_columns(model, dipole, z, c, spec),
                             int(rest.sum()), x[rest])
    return out if np.ndim(xi) else complex(out[0])


def bulk_plasmon_frequency(model):
    """Lower-half-plane zero of ε, −√(ω_p² − γ²/4) − iγ/2.

    This is where ω²(1 − ε) = ω² and the medium root κ_m gains the branch
    point relevant for the bulk plasmon.
    """
    if model.is_perfect:
        raise ValueError("a perfect reflector has no bulk plasmon")
    wp, g = model.plasma_frequency, model.damping_rate
    return -np.sqrt(wp * wp - 0.25 * g * g + 0j) - 0.5j * g


def surface_plasmon_edge(model):
    """Lower-half-plane point where ε = −1, −√(ω_sp² − γ²/4) − iγ/2.

    Approaching it, the surface-plasmon pole of r_p runs off to infinity in
    the κ plane, which makes it a branch point of the continued envelope.
    """
    if model.is_perfect:
        raise ValueError("a perfect reflector has no surface plasmon")
    ws, g = model.surface_plasmon_frequency, model.damping_rate
    return -np.sqrt(ws * ws - 0.25 * g * g + 0j) - 0.5j * g


def _pole_residue(model, dipole, z, w, kp):
    """Residue of the κ integrand at a pole κ_p of r_p (where κ_m = −εκ_p)."""
    e = epsilon(model, w)
    coef = kp * kp * (dipole.magnitude_sq - dipole.normal_sq) \
        + 2.0 * (kp * kp + w * w) * dipole.normal_sq
    return np.exp(-2.0 * (kp + 1j * w) * z) * coef * 2.0 * e * e * kp / (e * e - 1.0)


def surface_plasmon_discontinuity(model, dipole, z, y):
    """Jump of the continued envelope across the surface-plasmon cut.

    The cut runs vertically down from ``surface_plasmon_edge``, ω = ω_s − iy.
    Crossing it drags the pole κ_p = √(ω²(1 − ε)/(ε² − 1)), Im κ_p > 0, over
    the κ path, so the jump is 2πi times the pole residue (envelope
    convention, e^{2iωz} left out).
    """
    if not z > 0:
        raise ValueError("distance z must be positive")
    yy = np.asarray(y, float)
    if np.any(yy < 0):
        raise ValueError("y must be >= 0")
    w = surface_plasmon_edge(model) - 1j * yy
    e = epsilon(model, w)
    kp = np.sqrt(_medium_term(model, w) / (e * e - 1.0) + 0j)
    kp = np.where(kp.imag < 0, -kp, kp)
    with np.errstate(over="ignore", invalid="ignore"):
        out = 2j * np.pi * _pole_residue(model, dipole, z, w, kp) / (8.0 * np.pi)
    # at the edge itself κ_p is infinite and the residue vanishes
    out = np.where(np.isfinite(out), out, 0.0)
    return out[()]


def _disc_columns(model, dipole, z, w, spec):
    e = epsilon(model, w)
    a_med = _medium_term(model, w)
    k0 = -1j * w
    b = np.sqrt(-a_med + 0j)
    b = np.where(np.abs(b - k0) < np.abs(-b - k0), b, -b)
    km0 = np.sqrt(k0 * k0 + a_med)

    def f(u):
        u = u[:, None]
        kap = b + (k0 - b) * (1.0 - u)
        km = km0 * np.sqrt(1.0 - u + 0j) * np.sqrt((kap + b) / (k0 + b))
        jump = bracket(model, dipole, kap, w, km) - bracket(model, dipole, kap, w, -km)
        return np.exp(-2.0 * (kap - k0) * z) * jump * (b - k0)

    # near the bulk edge ε ≈ 0 is computed as 1 − (large)/(large), so the
    # integrand carries relative noise of order eps/|ε|; a rough first pass
    # sets an absolute floor at that level
    rough = integrate_interval(f, 0.0, 1.0, spec.replace(rel_tol=1e-6)).value
    floor = 100.0 * np.finfo(float).eps * np.max(np.abs(rough) / np.abs(e))
    seg = integrate_interval(f, 0.0, 1.0, spec.replace(abs_tol=max(spec.abs_tol, floor))).value
    # surface-plasmon pole of r_p, encircled by the loop around the branch cut
    kp = np.sqrt(a_med / (e * e - 1.0) + 0j)
    kp = np.where(np.abs(kp - b) < np.abs(-kp - b), kp, -kp)
    res = _pole_residue(model, dipole, z, w, kp)
    return np.atleast_1d((seg + 2j * np.pi * res) / (8.0 * np.pi))


def bulk_discontinuity(model, dipole, z, y, spec=None):
    """Jump of the continued envelope across the bulk-plasmon cut.

    The cut runs vertically down from ω_b = ``bulk_plasmon_frequency`` and is
    parametrized by ω = ω_b − iy, y ≥ 0.  The value returned is the
    counter-clockwise κ loop around the κ_m branch point nearest κ₀ = −iω,
    which equals the straight segment plus 2πi times the residue of the
    surface-plasmon pole it encloses.  Like ``green_envelope`` the factor
    e^{2iωz} is left out.
    """
    if not z > 0:
        raise ValueError("distance z must be positive")
    yy = np.atleast_1d(np.asarray(y, float))
    if np.any(yy < 0):
        raise ValueError("y must be >= 0")
    w = bulk_plasmon_frequency(model) - 1j * yy
    spec = spec or CONTINUED_SPEC
    # at y = 0 the segment shrinks to the branch point and the jump vanishes
    out = np.zeros(yy.size, complex)
    live = yy > 0
    out[live] = _chunked(lambda c: _disc_columns(model, dipole, z, c, spec),
                         int(live.sum()), w[live])
    return out if np.ndim(y) else complex(out[0])
