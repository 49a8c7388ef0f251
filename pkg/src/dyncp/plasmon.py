"""Surface-plasmon branch of the p-polarized reflection coefficient.

The pole condition is D(ω, p) = ε(ω)κ + κ_m = 0 with κ = √(p² − ω²) and
κ_m = √(p² − εω²), both on the principal branch.  The branch followed here
has Re ω̄ < 0, so that e^{−iω̄t} rotates opposite to the atomic phase.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .materials import Kind, UnsupportedModelError, epsilon, epsilon_derivative
from .quadrature import RootError, refine_root

__all__ = [
    "PlasmonMode",
    "BranchError",
    "DegeneratePoleError",
    "dispersion_lossless",
    "dispersion_lossy",
    "dispersion_residual",
    "residue_rp",
    "near_field_pole",
    "rp_magnitude_grid",
]

ROOT_TOL = 1e-10


class BranchError(RootError):
    """The root left the quadrant Re ω < 0, Im ω ≤ 0."""


class DegeneratePoleError(ZeroDivisionError):
    """dD/dω vanished at the requested pole."""


@dataclass(frozen=True)
class PlasmonMode:
    """A point (p, ω̄) on the dispersion branch.

    ``omega_bar``, ``kappa_bar`` and ``residue`` may be arrays of the same
    shape as ``p``.  ``residue`` is None until filled in by ``residue_rp``.
    """

    p: float | np.ndarray
    omega_bar: complex | np.ndarray
    kappa_bar: complex | np.ndarray
    residue: complex | np.ndarray | None = None
    lossy: bool = False

    def with_residue(self, model):
        return replace(self, residue=residue_rp(model, self.omega_bar, self.p))


def _drude_only(model):
    if model.kind is not Kind.DRUDE:
        raise UnsupportedModelError("the surface plasmon needs a Drude surface")


def _roots(w, p):
    k = np.sqrt(p * p - w * w + 0j)
    k = np.where(k.real < 0, -k, k)
    return k


def _d_and_derivative(model, w, p):
    e = epsilon(model, w)
    de = epsilon_derivative(model, w)
    k = _roots(w, p)
    km = _roots(np.sqrt(e + 0j) * w, p)
    d = e * k + km
    dd = de * k - e * w / k - (de * w * w + 2.0 * e * w) / (2.0 * km)
    return d, dd, e, k, km


def dispersion_residual(model, omega, p):
    """D(ω, p) = ε(ω)κ + κ_m on principal branches."""
    _drude_only(model)
    return _d_and_derivative(model, np.asarray(omega, complex), np.asarray(p, float))[0]


def dispersion_lossless(model, p):
    """Closed-form branch for γ → 0.

    ω̄ = −√(ω_sp² + p² − √(ω_sp⁴ + p⁴)) and κ̄ = √(√(ω_sp⁴ + p⁴) − ω_sp²).
    The infinitesimal −i0⁺ is implicit.

    Examples
    --------
    >>> from dyncp.materials import SurfaceModel
    >>> m = SurfaceModel.drude(2 ** 0.5)
    >>> round(dispersion_lossless(m, 1.0).omega_bar.real, 6)
    -0.765367
    """
    _drude_only(model)
    p = np.asarray(p, float)
    if np.any(p < 0):
        raise ValueError("p must be >= 0")
    ws2 = model.surface_plasmon_frequency ** 2
    root = np.sqrt(ws2 * ws2 + p ** 4)
    # ω_sp² + p² − √(ω_sp⁴ + p⁴) written without cancellation
    rad = 2.0 * ws2 * p * p / (ws2 + p * p + root)
    kap = p * p / np.sqrt(ws2 + root)
    return PlasmonMode(p[()], (-np.sqrt(rad) + 0j)[()], kap[()])


def _seed(model, p):
    lossless = dispersion_lossless(model, p).omega_bar
    ws = model.surface_plasmon_frequency
    # first-order loss shift, exact at large p
    return lossless - 0.5j * model.damping_rate * (np.abs(lossless) / ws) ** 2


def _newton(model, p, w, maxiter=100):
    w = np.array(w, complex)
    done = np.zeros(w.shape, bool)
    for _ in range(maxiter):
        d, dd, *_ = _d_and_derivative(model, w, p)
        done = np.abs(d) < ROOT_TOL
        if done.all():
            return w, True
        step = np.where(done, 0.0, d / dd)
        # never step further than the distance to the origin
        lim = 0.5 * np.abs(w)
        big = np.abs(step) > lim
        step = np.where(big, step * lim / np.where(big, np.abs(step), 1.0), step)
        w = w - step
    return w, False


def dispersion_lossy(model, p, seed=None):
    """Complex root of ε(ω)κ + κ_m = 0 on the surface-plasmon branch.

    Parameters
    ----------
    model : SurfaceModel
        Drude surface with γ > 0.
    p : float or array
        In-plane momentum.  Arrays are solved together, each entry seeded
        from the lossless branch shifted by the first-order damping.
    seed : complex, optional
        Starting point for a scalar ``p``.

    Raises
    ------
    RootError
        No convergence in 100 iterations.
    BranchError
        The root is not in the quadrant Re ω < 0, −γ/2 ≲ Im ω ≤ 0.
    """
    _drude_only(model)
    if not model.damping_rate > 0:
        raise ValueError("dispersion_lossy needs damping_rate > 0")
    p = np.asarray(p, float)
    if np.any(p < 0):
        raise ValueError("p must be >= 0")
    if p.ndim == 0:
        s = _seed(model, p) if seed is None else complex(seed)

        def fn(x):
            return dispersion_residual(model, x, p)

        def fp(x):
            return _d_and_derivative(model, np.asarray(x, complex), p)[1]

        w = np.asarray(refine_root(fn, s, fp, abs_tol=ROOT_TOL, maxiter=100,
                                   step_limit=0.5 * abs(s)))
    else:
        w, ok = _newton(model, p, _seed(model, p) if seed is None else seed)
        if not ok:
            bad = int(np.argmax(np.abs(dispersion_residual(model, w, p)) >= ROOT_TOL))
            raise RootError(f"no convergence at p = {p.flat[bad]}", w.flat[bad])
    tol = 1e-9 + 1e-6 * model.damping_rate
    wrong = (w.real >= 0) | (w.imag > tol) | (w.imag < -0.5 * model.damping_rate - tol)
    if np.any(wrong):
        bad = np.flatnonzero(np.atleast_1d(wrong))[0]
        raise BranchError(f"root {np.atleast_1d(w)[bad]} left the surface-plasmon quadrant",
                          np.atleast_1d(w)[bad])
    return PlasmonMode(p[()], w[()], _roots(w, p)[()], lossy=True)


def residue_rp(model, omega, p, tol=1e-14):
    """R_p = (εκ − κ_m)/(d/dω)(εκ + κ_m) at a pole of r_p.

    The derivative is analytic: dκ/dω = −ω/κ and
    dκ_m/dω = −(ε'ω² + 2εω)/(2κ_m).  At large p this tends to ω_sp/2.
    """
    _drude_only(model)
    w = np.asarray(omega, complex)
    _, dd, e, k, km = _d_and_derivative(model, w, np.asarray(p, float))
    if np.any(np.abs(dd) < tol):
        raise DegeneratePoleError("dD/dω vanishes at the requested pole")
    return ((e * k - km) / dd)[()]


def near_field_pole(model):
    """Large-p limit of the branch, −ω_sp − iγ/2."""
    _drude_only(model)
    return complex(-model.surface_plasmon_frequency, -0.5 * model.damping_rate)


def rp_magnitude_grid(model, omega, p):
    """|Im r_p(ω, p)| on the outer product of real ω and p grids."""
    from .materials import reflection

    w = np.asarray(omega, float)[:, None]
    pp = np.asarray(p, float)[None, :]
    return np.abs(reflection(model, w, pp, "p", pole_tol=0.0).imag)
