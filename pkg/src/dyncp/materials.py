"""Dielectric response of the half-space and Fresnel reflection amplitudes.

Everything is in reduced units: c = ε0 = 1 and frequencies measured in units
of the atomic transition frequency Ω.  Functions broadcast over numpy arrays.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass
from enum import Enum
from importlib import resources

import numpy as np

__all__ = [
    "Kind",
    "SurfaceModel",
    "PoleProximityError",
    "UnsupportedModelError",
    "HBAR_EV_S",
    "HC_EV_NM",
    "load_presets",
    "preset",
    "epsilon",
    "epsilon_derivative",
    "kappa",
    "kappa_medium",
    "reflection",
]

# CODATA 2018
HBAR_EV_S = 6.582119569e-16
HC_EV_NM = 1239.84198

PRESET_ENV = "DYNCP_PRESETS"


class Kind(str, Enum):
    DRUDE = "drude"
    PERFECT = "perfect"


class UnsupportedModelError(TypeError):
    """Operation undefined for the given surface kind."""


class PoleProximityError(ZeroDivisionError):
    """Raised when a reflection coefficient is evaluated on top of its pole."""

    def __init__(self, message, omega=None, p=None):
        super().__init__(message)
        self.omega = omega
        self.p = p


@dataclass(frozen=True)
class SurfaceModel:
    """Optical response of a planar half-space.

    Parameters
    ----------
    kind : Kind
        ``Kind.DRUDE`` or ``Kind.PERFECT``.
    plasma_frequency : float
        ω_p in reduced units (ignored for a perfect reflector).
    damping_rate : float
        γ in reduced units, ``>= 0``.
    """

    kind: Kind = Kind.DRUDE
    plasma_frequency: float = 1.0 / 0.18
    damping_rate: float = 0.0
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.kind is Kind.DRUDE:
            if not self.plasma_frequency > 0:
                raise ValueError("Drude model needs plasma_frequency > 0")
            if not self.damping_rate >= 0:
                raise ValueError("Drude model needs damping_rate >= 0")

    @classmethod
    def drude(cls, plasma_frequency, damping_rate=0.0, name=""):
        return cls(Kind.DRUDE, float(plasma_frequency), float(damping_rate), name)

    @classmethod
    def perfect(cls):
        return cls(Kind.PERFECT, np.inf, 0.0, "perfect")

    @property
    def is_perfect(self):
        return self.kind is Kind.PERFECT

    @property
    def surface_plasmon_frequency(self):
        """ω_sp = ω_p/√2."""
        return self.plasma_frequency / np.sqrt(2.0)

    def with_damping(self, damping_rate):
        return SurfaceModel(self.kind, self.plasma_frequency, damping_rate, self.name)

    def to_dict(self):
        return {
            "kind": self.kind.value,
            "plasma_frequency": None if self.is_perfect else self.plasma_frequency,
            "damping_rate": self.damping_rate,
            "name": self.name,
        }


def load_presets(path=None):
    """Read the preset table (JSON).

    ``path`` defaults to ``$DYNCP_PRESETS`` if set, else the packaged table.
    """
    path = path or os.environ.get(PRESET_ENV)
    if path:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    text = resources.files("dyncp").joinpath("data/presets.json").read_text("utf-8")
    return json.loads(text)


def preset(name, omega_ev=None, table=None):
    """Build a ``SurfaceModel`` from a named preset.

    Drude presets are stored in SI-like units (eV, fs) and need the atomic
    transition energy ``omega_ev`` (ħΩ in eV) to be expressed in reduced
    units.  When omega_ev is None the table default Ω = 0.18 ω_p is used.
    """
    table = table or load_presets()
    try:
        entry = table["materials"][name]
    except KeyError:
        raise KeyError(f"unknown material preset {name!r}") from None
    if entry["kind"] == Kind.PERFECT.value:
        return SurfaceModel.perfect()
    wp_ev = float(entry["plasma_energy_eV"])
    gamma_ev = HBAR_EV_S / (float(entry["relaxation_time_fs"]) * 1e-15)
    if omega_ev is None:
        omega_ev = wp_ev * float(table["defaults"]["omega_over_plasma"])
    return SurfaceModel.drude(wp_ev / omega_ev, gamma_ev / omega_ev, name)


def _require_drude(model, what):
    if model.kind is not Kind.DRUDE:
        raise UnsupportedModelError(f"{what} is not defined for a perfect reflector")


def epsilon(model, omega):
    """Drude permittivity ε(ω) = 1 − ω_p²/(ω(ω + iγ)).

    Examples
    --------
    >>> m = SurfaceModel.drude(2.0, 0.0)
    >>> complex(epsilon(m, 2.0))
    0j
    """
    _require_drude(model, "epsilon")
    w = np.asarray(omega, complex)
    if np.any(w == 0):
        raise ZeroDivisionError("ε(ω) has a pole at ω = 0")
    wp = model.plasma_frequency
    return 1.0 - wp * wp / (w * (w + 1j * model.damping_rate))


def epsilon_derivative(model, omega):
    """dε/dω = ω_p²(2ω + iγ)/(ω²(ω + iγ)²)."""
    _require_drude(model, "epsilon")
    w = np.asarray(omega, complex)
    g = model.damping_rate
    return model.plasma_frequency ** 2 * (2 * w + 1j * g) / (w * w * (w + 1j * g) ** 2)


def _branch(root, omega):
    """Flip a square root onto Re ≥ 0, then Im ≤ 0 where ω is real positive."""
    root = np.where(root.real < 0, -root, root)
    w = np.asarray(omega, complex)
    on_axis = (root.real == 0) & (w.imag == 0) & (w.real > 0) & (root.imag > 0)
    return np.where(on_axis, -root, root)


def kappa(omega, p):
    """Vacuum propagation constant κ = √(p² − ω²).

    Re κ ≥ 0, and for real ω > 0 inside the light cone Im κ ≤ 0, so that
    e^{−2κz} is either decaying or an outgoing phase.
    """
    w = np.asarray(omega, complex)
    p = np.asarray(p, float)
    root = np.sqrt(p * p - w * w + 0j)
    return _branch(root, w)


def kappa_medium(model, omega, p, eps=None):
    """Propagation constant inside the medium, √(p² − ε(ω)ω²), Re ≥ 0."""
    _require_drude(model, "kappa_medium")
    w = np.asarray(omega, complex)
    e = epsilon(model, w) if eps is None else eps
    root = np.sqrt(np.asarray(p, float) ** 2 - e * w * w + 0j)
    return _branch(root, w)


def reflection(model, omega, p, pol, pole_tol=1e-12):
    """Fresnel amplitude ``r_s`` or ``r_p`` of the vacuum/medium interface.

    Parameters
    ----------
    model : SurfaceModel
    omega : complex or array
    p : float or array
        In-plane wavevector.
    pol : {"s", "p"}
    pole_tol : float
        Relative size of the denominator below which the evaluation is
        treated as sitting on a pole.

    Raises
    ------
    PoleProximityError
        If ``|den| < pole_tol |num|`` for ``r_p``.
    """
    if pol not in ("s", "p"):
        raise ValueError(f"pol must be 's' or 'p', got {pol!r}")
    w = np.asarray(omega, complex)
    p_arr = np.asarray(p, float)
    if model.is_perfect:
        val = 1.0 if pol == "p" else -1.0
        return np.full(np.broadcast(w, p_arr).shape, val + 0j)[()]
    k = kappa(w, p_arr)
    e = epsilon(model, w)
    km = kappa_medium(model, w, p_arr, eps=e)
    if pol == "s":
        # (κ − κm)/(κ + κm) rewritten to avoid cancellation at large p
        return (w * w * (e - 1.0) / (k + km) ** 2)[()]
    num = e * k - km
    den = e * k + km
    bad = np.abs(den) < pole_tol * np.abs(num)
    if np.any(bad):
        idx = np.nonzero(np.broadcast_to(bad, np.broadcast(num, den).shape).ravel())[0][0]
        wb = np.broadcast_to(w, bad.shape).ravel()[idx]
        pb = np.broadcast_to(p_arr, bad.shape).ravel()[idx]
        raise PoleProximityError(f"r_p evaluated on its pole at ω = {wb}, p = {pb}", wb, pb)
    return (num / den)[()]
