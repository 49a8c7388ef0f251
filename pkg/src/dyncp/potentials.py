"""Static and time-dependent Casimir-Polder potentials.

Reduced units: c = ε0 = 1, the bare transition frequency Ω = 1, energies per
|d|² = 1.  The atom is isotropically polarizable throughout.

Every dynamic quantity is built from the kernel

    I(t; a, b) = ∫₀^∞ (dω/π) Im G(z, ω) cos[(a + ω)t]/(b + ω),

which obeys I(0; b, b) = −U_stat(b).  Bare dressing is U = U_stat + I(t; 1, 1).
Two independent evaluations of I are provided.  ``kernel_oracle`` integrates
along the real frequency axis.  ``kernel_contour`` rotates each half of the
cosine onto the imaginary axis and picks up the non-analytic pieces of G in
the lower half-plane once the reflected light cone has passed (t > 2z).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.interpolate import PchipInterpolator

from .greens import (ISOTROPIC, DipoleSpec, bulk_discontinuity, bulk_plasmon_frequency,
                     green_continued, green_envelope, green_perfect_closed,
                     surface_plasmon_discontinuity, surface_plasmon_edge)
from .materials import SurfaceModel
from .plasmon import dispersion_lossless, dispersion_lossy, near_field_pole, residue_rp
from .quadrature import (QuadratureSpec, integrate_interval,
                         integrate_oscillatory, integrate_semi_infinite)

__all__ = [
    "AtomSurfaceConfig",
    "StarkShift",
    "DipoleChange",
    "QuenchSpec",
    "Normalization",
    "PotentialSeries",
    "DecayTimeResult",
    "LightConeWarning",
    "PreconditionError",
    "FitError",
    "u_static",
    "kernel_contour",
    "kernel_oracle",
    "u_dyn_contour",
    "u_dyn_oracle",
    "dress",
    "delta_u_res",
    "delta_u_res_near_field",
    "u_partial_stark",
    "u_partial_dipole",
    "envelope",
    "decay_time",
    "decay_time_estimate",
]

IMAG_AXIS_SPEC = QuadratureSpec(rel_tol=1e-9, max_subdivisions=4000)
P_SPEC = QuadratureSpec(rel_tol=1e-7, max_subdivisions=8000)
ORACLE_SPEC = QuadratureSpec(rel_tol=1e-10)

# cut-offs e^{-X} for exponentially damped integrals on finite ranges
_EXP_CUTOFF = 60.0


class LightConeWarning(UserWarning):
    """Evaluation close to the reflected light cone t = 2z."""


class PreconditionError(ValueError):
    """Arguments outside the domain of validity of an approximation."""


class FitError(RuntimeError):
    """Envelope could not be extracted."""


@dataclass(frozen=True)
class AtomSurfaceConfig:
    """Atom at distance ``z`` from a planar surface.

    ``omega`` is the bare transition frequency.  It is fixed to 1 in reduced
    units and kept as a field so that the config documents itself.
    """

    surface: SurfaceModel
    z: float
    omega: float = 1.0
    dipole: DipoleSpec = ISOTROPIC
    light_cone_window: float = 0.05

    def __post_init__(self):
        if not self.z > 0:
            raise ValueError("z must be positive")
        if self.omega != 1.0:
            raise ValueError("reduced units fix the transition frequency to 1")
        if not self.dipole.isotropic:
            raise ValueError("potentials need an isotropic atom")

    @property
    def light_cone(self):
        return 2.0 * self.z

    def near_light_cone(self, t):
        t = np.asarray(t, float)
        return np.abs(t - self.light_cone) <= self.light_cone_window * self.light_cone

    def to_dict(self):
        return {"surface": self.surface.to_dict(), "z": self.z, "omega": self.omega,
                "dipole": self.dipole.to_dict()}


@dataclass(frozen=True)
class StarkShift:
    """Sudden change Ω → Ω̃ of the transition frequency."""

    new_omega: float

    def __post_init__(self):
        if not self.new_omega > 0:
            raise ValueError("new_omega must be positive")


@dataclass(frozen=True)
class DipoleChange:
    """Sudden change d → d̃ of the transition dipole.

    Vectors are in units of the old |d|; only |d̃|² and d̃·d enter.
    """

    new: tuple = (1.0, 0.0, 0.0)
    old: tuple = (1.0, 0.0, 0.0)

    def __post_init__(self):
        for v in (self.new, self.old):
            if np.shape(v) != (3,):
                raise ValueError("dipoles are 3-vectors")
        object.__setattr__(self, "new", tuple(float(c) for c in self.new))
        object.__setattr__(self, "old", tuple(float(c) for c in self.old))

    @property
    def weights(self):
        """(|d̃|², |d̃|² − d̃·d)."""
        n = np.asarray(self.new)
        o = np.asarray(self.old)
        return float(n @ n), float(n @ n - n @ o)


QuenchSpec = StarkShift | DipoleChange


class Normalization(str, Enum):
    REDUCED = "reduced"
    RELATIVE = "relative"


@dataclass
class PotentialSeries:
    """Potential on a time grid.

    ``total = u_stat + u_dyn (+ delta_u_partial)`` pointwise.
    """

    time_grid: np.ndarray
    u_stat: float
    u_dyn: np.ndarray
    delta_u_res: np.ndarray | None = None
    delta_u_partial: np.ndarray | None = None
    normalization: Normalization = Normalization.REDUCED
    light_cone: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def total(self):
        tot = self.u_stat + self.u_dyn
        if self.delta_u_partial is not None:
            tot = tot + self.delta_u_partial
        return tot

    def normalized(self, scale):
        """Copy with every energy divided by ``scale``."""
        def div(x):
            return None if x is None else x / scale
        return PotentialSeries(self.time_grid, self.u_stat / scale, self.u_dyn / scale,
                               div(self.delta_u_res), div(self.delta_u_partial),
                               Normalization.RELATIVE, self.light_cone, dict(self.meta))

    def columns(self):
        n = len(self.time_grid)
        nan = np.full(n, np.nan)
        return {
            "t": self.time_grid,
            "u_stat": np.full(n, self.u_stat),
            "u_dyn": self.u_dyn,
            "delta_u_res": nan if self.delta_u_res is None else self.delta_u_res,
            "delta_u_partial": nan if self.delta_u_partial is None else self.delta_u_partial,
            "total": self.total,
        }


@dataclass(frozen=True)
class DecayTimeResult:
    z: float
    t_decay_numeric: float
    t_decay_estimate: float
    tau: float


def _times(t):
    t = np.atleast_1d(np.asarray(t, float))
    if t.ndim != 1 or np.any(t < 0) or not np.all(np.isfinite(t)):
        raise ValueError("times must be finite and >= 0")
    return t


def _out(values, t):
    return values if np.ndim(t) else float(values[0])


def _g_imag(cfg, xi):
    """g(iξ) for ξ ≥ 0, real."""
    if cfg.surface.is_perfect:
        return green_perfect_closed(cfg.dipole, cfg.z, 1j * xi, envelope=True).value.real
    return green_envelope(cfg.surface, cfg.dipole, cfg.z, 1j * xi)[0].real


def _breaks(cfg):
    pts = [1.0, 1.0 / (2.0 * cfg.z)]
    if not cfg.surface.is_perfect:
        pts += [cfg.surface.plasma_frequency, cfg.surface.damping_rate]
    return sorted(p for p in pts if p > 0)


def u_static(cfg, omega=1.0, spec=None):
    """Static potential −∫₀^∞ (dξ/2π) G(iξ) 2Ω/(Ω² + ξ²).

    ``omega`` overrides the transition frequency (used after a Stark shift).
    """
    spec = spec or IMAG_AXIS_SPEC
    z = cfg.z

    def f(x):
        return -_g_imag(cfg, x) * np.exp(-2.0 * x * z) * omega / (omega * omega + x * x) / np.pi

    sp = QuadratureSpec(spec.rel_tol, spec.abs_tol, spec.max_subdivisions, "rational",
                        min(1.0, 1.0 / (2.0 * z)))
    return float(integrate_semi_infinite(f, sp, breakpoints=_breaks(cfg)).value)


def _abs_tol(cfg, rel):
    return rel * abs(u_static(cfg))


def _term_upper(cfg, t, a, b, tol):
    """Imaginary-axis piece from e^{−iω(2z+t)}: always present."""
    z = cfg.z
    ph = np.exp(1j * a * t)

    def f(x):
        g = _g_imag(cfg, x) * np.exp(-2.0 * x * z)
        return (g[:, None] * np.exp(-np.outer(x, t)) * ph / (b + 1j * x[:, None])).real

    sp = QuadratureSpec(1e-9, tol, 8000, "rational", min(1.0, 1.0 / (2.0 * z)))
    return integrate_semi_infinite(f, sp, breakpoints=_breaks(cfg)).value / (2 * np.pi)


def _term_before(cfg, t, a, b, tol):
    """Piece from e^{iω(2z−t)} before the light cone, rotated to +i∞."""
    tau = 2.0 * cfg.z - t
    ph = np.exp(1j * a * t)

    def f(x):
        g = _g_imag(cfg, x)
        return (g[:, None] * np.exp(-np.outer(x, tau)) * ph / (b - 1j * x[:, None])).real

    top = (_EXP_CUTOFF + 10.0 * np.log1p(2.0 * cfg.z)) / tau.min()
    pts = [p for p in _breaks(cfg) + list(1.0 / tau) if p < top]
    sp = QuadratureSpec(1e-9, tol, 8000)
    return integrate_interval(f, 0.0, top, sp, breakpoints=pts).value / (2 * np.pi)


def _term_after(cfg, t, a, b, tol):
    """Same piece after the light cone, rotated to −i∞.

    The path runs down the negative imaginary axis on the continued sheet;
    for a Drude surface it also wraps the bulk-plasmon cut.
    """
    tau = t - 2.0 * cfg.z
    ph = np.exp(1j * a * t)
    m = cfg.surface

    def f(u):
        g = green_continued(m, cfg.dipole, cfg.z, -u)
        return -(g[:, None] * np.exp(-np.outer(u, tau)) * ph / (b + 1j * u[:, None])).real

    # the continued envelope grows polynomially, so the range is capped where
    # e^{−uτ} has fallen below e^{−X} even after that growth
    top = (_EXP_CUTOFF + 10.0 * np.log1p(1.0 / (2.0 * cfg.z))) / tau.min()
    pts = _breaks(cfg) + list(1.0 / tau)
    if not m.is_perfect:
        top += m.damping_rate
    pts = [p for p in pts if p < top]
    sp = QuadratureSpec(1e-9, tol, 8000)
    total = integrate_interval(f, 0.0, top, sp, breakpoints=pts).value
    if not m.is_perfect:
        wb = bulk_plasmon_frequency(m)

        def h(y):
            w = wb - 1j * y
            d = bulk_discontinuity(m, cfg.dipole, cfg.z, y)
            return (d[:, None] * np.exp(-1j * np.outer(w, tau)) * ph
                     / (b - w[:, None])).real

        ws = surface_plasmon_edge(m)

        def k(y):
            w = ws - 1j * y
            d = surface_plasmon_discontinuity(m, cfg.dipole, cfg.z, y)
            return -(d[:, None] * np.exp(-1j * np.outer(w, tau)) * ph
                     / (b - w[:, None])).real

        ytop = _EXP_CUTOFF / tau.min()
        ypts = [p for p in [1.0, m.plasma_frequency] + list(1.0 / tau) if p < ytop]
        total = total + integrate_interval(h, 0.0, ytop, sp, breakpoints=ypts).value
        spts = [p for p in [0.01, 0.1, 1.0] + list(1.0 / tau) if p < ytop]
        total = total + integrate_interval(k, 0.0, ytop, sp, breakpoints=spts).value
    return total / (2 * np.pi)


def _near_cone(cfg, t):
    close = cfg.near_light_cone(t)
    if np.any(close):
        warnings.warn(f"{int(close.sum())} time(s) within {cfg.light_cone_window:.0%} of the "
                      f"light cone t = {cfg.light_cone:g}", LightConeWarning, stacklevel=3)
    return close


def kernel_contour(cfg, t, a=1.0, b=1.0, method="full", rel_tol=1e-9):
    """I(t; a, b) from the imaginary-axis representation.

    Parameters
    ----------
    t : float or array
        Times ≥ 0.  Points at exactly t = 2z are singular.
    a, b : float
        Phase frequency and denominator frequency.
    method : {"full", "residue"}
        ``"full"`` keeps every lower-half-plane contribution and agrees with
        ``kernel_oracle`` to quadrature accuracy.  ``"residue"`` keeps only
        the imaginary-axis terms and replaces the remaining lower-half-plane
        pieces by the surface-plasmon pole sum of ``delta_u_res``; it is
        only defined for a = b = 1.
    """
    ts = _times(t)
    if method not in ("full", "residue"):
        raise ValueError(f"unknown method {method!r}")
    if method == "residue" and (a != 1.0 or b != 1.0):
        raise ValueError("the residue approximation is only available for a = b = 1")
    _near_cone(cfg, ts)
    tol = _abs_tol(cfg, rel_tol)
    out = _term_upper(cfg, ts, a, b, tol)
    before = ts < cfg.light_cone
    after = ts > cfg.light_cone
    if before.any():
        out[before] += _term_before(cfg, ts[before], a, b, tol)
    if after.any():
        if method == "full":
            out[after] += _term_after(cfg, ts[after], a, b, tol)
        else:
            out[after] += _residue_after(cfg, ts[after], tol)
    out[ts == cfg.light_cone] = np.nan
    return _out(out, t)


def _residue_after(cfg, t, tol):
    """Negative-axis piece plus pole sum, without cut contributions."""
    m = cfg.surface
    ph = np.exp(1j * t)
    tau = t - 2.0 * cfg.z

    def f(u):
        g = green_continued(m, cfg.dipole, cfg.z, -u)
        return -(g[:, None] * np.exp(-np.outer(u, tau)) * ph / (1.0 + 1j * u[:, None])).real

    top = (_EXP_CUTOFF + 10.0 * np.log1p(1.0 / (2.0 * cfg.z))) / tau.min()
    if not m.is_perfect:
        lo = m.damping_rate
        top += lo
    else:
        lo = 0.0
    pts = [p for p in _breaks(cfg) if lo < p < top]
    val = integrate_interval(f, lo, top, QuadratureSpec(1e-9, tol, 8000), breakpoints=pts).value
    val = val / (2 * np.pi)
    if not m.is_perfect:
        val = val + delta_u_res(cfg, t, branch="lossy" if m.damping_rate > 0 else "lossless")
    return val


def kernel_oracle(cfg, t, a=1.0, b=1.0, spec=None, n_segments=200):
    """I(t; a, b) by direct quadrature along the real frequency axis.

    Each of e^{±i(a+ω)t} is integrated between consecutive zeros of its
    phase and the partial sums are accelerated.  For a Drude surface at
    least the range up to 3ω_p is summed explicitly, since extrapolating
    across the bulk-plasmon edge is unreliable.  Slow near t = 2z.
    """
    ts = _times(t)
    spec = spec or ORACLE_SPEC
    m = cfg.surface
    reach = 0.0 if m.is_perfect else 3.0 * m.plasma_frequency

    def h(x):
        w = np.asarray(x, complex)
        if m.is_perfect:
            g = green_perfect_closed(cfg.dipole, cfg.z, w, envelope=True).value
        else:
            g = green_envelope(m, cfg.dipole, cfg.z, w)[0]
        return g / (b + x)

    out = np.empty(ts.size)
    for i, tt in enumerate(ts):
        tot = 0.0
        for sgn in (1, -1):
            k = 2.0 * cfg.z + sgn * tt
            if k == 0:
                tot = np.nan
                break
            nseg = max(n_segments, int(np.ceil(abs(k) * reach / np.pi)))
            r = integrate_oscillatory(h, k, spec, n_segments=nseg, tail_sums=30,
                                      raise_on_failure=False)
            tot += (np.exp(1j * sgn * a * tt) * r.value).imag
        out[i] = tot / (2 * np.pi)
    return _out(out, t)


def u_dyn_contour(cfg, t, method="full"):
    """Dynamic part of the bare-dressing potential, U − U_stat."""
    return kernel_contour(cfg, t, 1.0, 1.0, method)


def u_dyn_oracle(cfg, t):
    """Real-axis reference for ``u_dyn_contour``."""
    return kernel_oracle(cfg, t, 1.0, 1.0)


def dress(cfg, t, method="full", with_resonant=False):
    """Bare-dressing potential as a ``PotentialSeries``."""
    ts = _times(t)
    with warnings.catch_warnings(record=True):
        warnings.simplefilter("always", LightConeWarning)
        dyn = kernel_contour(cfg, ts, method=method)
    res = None
    if with_resonant and not cfg.surface.is_perfect:
        res = np.full(ts.size, np.nan)
        after = ts > cfg.light_cone
        if after.any():
            res[after] = delta_u_res(cfg, ts[after])
    return PotentialSeries(ts, u_static(cfg), dyn, delta_u_res=res,
                           light_cone=cfg.near_light_cone(ts),
                           meta={"method": method, "config": cfg.to_dict()})


def _branch_values(m, p, branch):
    if branch == "lossless" or m.damping_rate == 0:
        mode = dispersion_lossless(m, p)
        w = mode.omega_bar - 0j
    elif branch == "lossy":
        # at tiny p the lossy root hugs the light cone; the weight there is
        # O(p³) and the lossless root is used instead
        small = p < 0.002 * m.plasma_frequency
        w = np.asarray(dispersion_lossless(m, p).omega_bar, complex).copy()
        if (~small).any():
            w[~small] = dispersion_lossy(m, p[~small]).omega_bar
    else:
        raise ValueError(f"unknown branch {branch!r}")
    k = np.sqrt(p * p - w * w + 0j)
    k = np.where(k.real < 0, -k, k)
    return w, k


def delta_u_res(cfg, t, branch="lossy", check_light_cone=True, rel_tol=1e-7):
    """Surface-plasmon pole contribution.

    (1/12π) Re e^{it} ∫₀^∞ dp (p/κ̄) e^{−iω̄t − 2κ̄z}(2p² − ω̄²) R_p/(1 − ω̄)

    Parameters
    ----------
    branch : {"lossy", "lossless"}
    check_light_cone : bool
        The expression is a contribution to the potential only for t > 2z;
        pass False to evaluate it at earlier times anyway.
    """
    m = cfg.surface
    if m.is_perfect:
        raise PreconditionError("a perfect reflector supports no surface plasmon")
    ts = _times(t)
    if check_light_cone and np.any(ts <= cfg.light_cone):
        raise PreconditionError("delta_u_res needs t > 2z")
    z = cfg.z
    ws = m.surface_plasmon_frequency
    ph = np.exp(1j * ts)

    def f(p):
        w, k = _branch_values(m, p, branch)
        r = residue_rp(m, w, p) if branch == "lossy" and m.damping_rate > 0 else \
            residue_rp(m.with_damping(0.0), w, p)
        k_safe = np.where(p == 0, 1.0, k)
        amp = np.where(p == 0, 0.0, p / k_safe * (2 * p * p - w * w) * r
                       * np.exp(-2.0 * k * z) / (1.0 - w))
        return (amp[:, None] * np.exp(-1j * np.outer(w, ts)) * ph).real

    # κ̄ ≥ √(p² − ω_sp²) bounds the exponential
    top = np.hypot(_EXP_CUTOFF / (2.0 * z), 2.0 * ws)
    pts = [p for p in (0.25 * ws, ws, 4.0 * ws, 1.0 / z) if p < top]
    tol = rel_tol * ws / (48 * np.pi * z ** 3)
    sp = QuadratureSpec(rel_tol, tol, 20000)
    val = integrate_interval(f, 0.0, top, sp, breakpoints=pts).value / (12 * np.pi)
    return _out(val, t)


def delta_u_res_near_field(cfg, t):
    """ω_sp/(48πz³) Re[e^{i(1 − ω̄∞)t}/(1 − ω̄∞)] with ω̄∞ = −ω_sp − iγ/2."""
    m = cfg.surface
    if m.is_perfect:
        raise PreconditionError("a perfect reflector supports no surface plasmon")
    ts = _times(t)
    wbar = near_field_pole(m)
    pref = m.surface_plasmon_frequency / (48 * np.pi * cfg.z ** 3)
    return _out(pref * (np.exp(1j * (1.0 - wbar) * ts) / (1.0 - wbar)).real, t)


def u_partial_stark(cfg, quench, t, method="full"):
    """Partial dressing after Ω → Ω̃ from the dressed ground state.

    Ũ = U_stat(Ω̃) + I(t; Ω̃, Ω̃) − I(t; Ω̃, Ω): the first two terms are the
    bare dressing at the new frequency, the last is the partial-dressing
    correction.
    """
    if not isinstance(quench, StarkShift):
        raise TypeError("u_partial_stark needs a StarkShift")
    ts = _times(t)
    wn = quench.new_omega
    with warnings.catch_warnings(record=True):
        warnings.simplefilter("always", LightConeWarning)
        dyn = kernel_contour(cfg, ts, wn, wn, method)
        corr = -kernel_contour(cfg, ts, wn, 1.0, method)
    return PotentialSeries(ts, u_static(cfg, wn), dyn, delta_u_partial=corr,
                           light_cone=cfg.near_light_cone(ts),
                           meta={"quench": {"new_omega": wn}, "u_stat_old": u_static(cfg)})


def u_partial_dipole(cfg, quench, t, method="full"):
    """Partial dressing after d → d̃.

    Ũ = |d̃|² U_stat + (|d̃|² − d̃·d) I(t; 1, 1).  The second term sits in
    ``delta_u_partial``; ``u_dyn`` is zero.
    """
    if not isinstance(quench, DipoleChange):
        raise TypeError("u_partial_dipole needs a DipoleChange")
    ts = _times(t)
    new_sq, weight = quench.weights
    stat = new_sq * u_static(cfg)
    if weight == 0.0:
        corr = np.zeros(ts.size)
    else:
        with warnings.catch_warnings(record=True):
            warnings.simplefilter("always", LightConeWarning)
            corr = weight * kernel_contour(cfg, ts, 1.0, 1.0, method)
    old = np.asarray(quench.old)
    return PotentialSeries(ts, stat, np.zeros(ts.size), delta_u_partial=corr,
                           light_cone=cfg.near_light_cone(ts),
                           meta={"weights": [new_sq, weight],
                                 "u_stat_old": float(old @ old) * u_static(cfg)})


def envelope(t, values):
    """Upper envelope of |values| through its local maxima (PCHIP)."""
    t = np.asarray(t, float)
    a = np.abs(np.asarray(values, float))
    if t.size < 3:
        raise FitError("need at least three samples")
    inner = np.nonzero((a[1:-1] >= a[:-2]) & (a[1:-1] > a[2:]))[0] + 1
    idx = np.unique(np.concatenate([[0], inner, [t.size - 1]]))
    if idx.size < 3:
        raise FitError("too few local maxima for an envelope")
    return PchipInterpolator(t[idx], a[idx], extrapolate=False)


def decay_time_estimate(model, z, tau=1.1):
    """t̂ = τπ√(z/ω_sp)."""
    return tau * np.pi * np.sqrt(z / model.surface_plasmon_frequency)


def decay_time(cfg, scan, tau=1.1, branch="lossy", values=None):
    """1/e time of the envelope of the surface-plasmon term.

    The pole sum is evaluated on ``scan`` from t = 0, ignoring the light-cone
    gate, so that the start value is the fully dressed plasmon amplitude.
    ``values`` may carry precomputed samples on ``scan``.
    """
    ts = _times(scan)
    est = decay_time_estimate(cfg.surface, cfg.z, tau)
    if ts[-1] < 5.0 * est:
        raise PreconditionError("scan must cover at least five times the estimate")
    if values is None:
        values = delta_u_res(cfg, ts, branch, check_light_cone=False)
    env = envelope(ts, values)
    fine = np.linspace(ts[0], ts[-1], 20 * ts.size)
    e = env(fine)
    target = e[0] / np.e
    below = np.nonzero(e <= target)[0]
    if below.size == 0:
        raise FitError("envelope never falls to 1/e of its start value")
    i = below[0]
    # linear interpolation inside the crossing cell
    t0, t1, e0, e1 = fine[i - 1], fine[i], e[i - 1], e[i]
    t_num = t0 + (target - e0) * (t1 - t0) / (e1 - e0)
    rebound = e[i:].max() if i < e.size else 0.0
    if rebound > 1.5 * target:
        raise FitError("envelope is not monotone after the 1/e crossing")
    return DecayTimeResult(cfg.z, float(t_num), float(est), tau)
