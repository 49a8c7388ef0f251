"""Command-line front end: figure data as CSV plus a JSON run manifest.

Every command writes a CSV whose header block carries '#'-prefixed metadata,
followed by one header line and the data rows.  The manifest records the
full argument vector, the derived parameters in reduced and SI units, the
tolerances and the wall time, so rerunning ``dyncp <argv>`` reproduces the
file.

Exit status: 0 on success, 2 for usage errors, 3 when a numerical routine
fails to converge.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .materials import HBAR_EV_S, HC_EV_NM, load_presets, preset
from .plasmon import BranchError, dispersion_lossless, dispersion_lossy, rp_magnitude_grid
from .potentials import (IMAG_AXIS_SPEC, AtomSurfaceConfig, DipoleChange, FitError,
                         LightConeWarning, PreconditionError, StarkShift, decay_time,
                         decay_time_estimate, delta_u_res, delta_u_res_near_field,
                         kernel_contour, u_static)
from .quadrature import QuadratureError, RootError

EXIT_USAGE = 2
EXIT_NONCONVERGENCE = 3

# one reduced length c/Ω is λ/(2π)
TWO_PI = 2.0 * np.pi


class UsageError(Exception):
    pass


# -- units -----------------------------------------------------------------

def transition_energy_ev(args, table):
    """ħΩ in eV from --omega-ev, --wavelength-nm or --atom, else the default."""
    if args.omega_ev is not None:
        if not args.omega_ev > 0:
            raise UsageError("--omega-ev must be positive")
        return args.omega_ev
    if args.wavelength_nm is not None:
        if not args.wavelength_nm > 0:
            raise UsageError("--wavelength-nm must be positive")
        return HC_EV_NM / args.wavelength_nm
    if args.atom is not None:
        try:
            return HC_EV_NM / float(table["atoms"][args.atom]["wavelength_nm"])
        except KeyError:
            raise UsageError(f"unknown atom preset {args.atom!r}") from None
    return None


def build_model(args, table):
    omega_ev = transition_energy_ev(args, table)
    try:
        model = preset(args.material, omega_ev, table)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None
    if omega_ev is None and not model.is_perfect:
        # preset fell back to the default Ω/ω_p ratio
        omega_ev = float(table["materials"][args.material]["plasma_energy_eV"]) \
            / model.plasma_frequency
    return model, omega_ev


def si_block(model, omega_ev):
    """Conversion factors from reduced to SI-like units."""
    if omega_ev is None:
        return {}
    out = {
        "omega_eV": omega_ev,
        "length_unit_nm": HC_EV_NM / (TWO_PI * omega_ev),
        "time_unit_fs": HBAR_EV_S / omega_ev * 1e15,
    }
    if not model.is_perfect:
        out["plasma_energy_eV"] = model.plasma_frequency * omega_ev
        out["damping_energy_eV"] = model.damping_rate * omega_ev
        if model.damping_rate > 0:
            out["relaxation_time_fs"] = HBAR_EV_S / (model.damping_rate * omega_ev) * 1e15
    return out


# -- parallel map ----------------------------------------------------------

# the batched integrators refine all points of a call together, so the
# split must not depend on the worker count or the output would too
CHUNK = 16


def _chunks(arr):
    return np.array_split(arr, max(1, -(-arr.size // CHUNK)))


def parallel_map(fn, grid, workers):
    """Evaluate ``fn`` on fixed-size slices of ``grid`` in grid order."""
    grid = np.asarray(grid, float)
    parts = _chunks(grid)
    if workers <= 1 or len(parts) < 2:
        return np.concatenate([fn(c) for c in parts])
    with ProcessPoolExecutor(max_workers=min(workers, len(parts))) as pool:
        return np.concatenate(list(pool.map(fn, parts)))


class _Kernel:
    """Picklable callable for the worker pool."""

    def __init__(self, cfg, a=1.0, b=1.0, method="full"):
        self.cfg, self.a, self.b, self.method = cfg, a, b, method

    def __call__(self, t):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", LightConeWarning)
            return np.atleast_1d(kernel_contour(self.cfg, t, self.a, self.b, self.method))


class _Resonant:
    def __init__(self, cfg, branch):
        self.cfg, self.branch = cfg, branch

    def __call__(self, t):
        if self.branch == "nearfield":
            return np.atleast_1d(delta_u_res_near_field(self.cfg, t))
        return np.atleast_1d(delta_u_res(self.cfg, t, self.branch))


# -- output ----------------------------------------------------------------

def write_outputs(args, columns, meta, manifest):
    names = list(columns)
    rows = np.column_stack([np.asarray(columns[n], float) for n in names])
    buf = io.StringIO()
    for key, val in meta.items():
        buf.write(f"# {key}: {json.dumps(val) if not isinstance(val, str) else val}\n")
    if args.output is None and args.manifest is None:
        buf.write(f"# manifest: {json.dumps(manifest, sort_keys=True)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for r in rows:
        w.writerow([f"{x:.12g}" for x in r])
    text = buf.getvalue()
    if args.output is None:
        sys.stdout.write(text)
    else:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    path = args.manifest
    if path is None and args.output is not None:
        path = os.path.splitext(args.output)[0] + ".json"
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")


def time_grid(args):
    if args.nt < 2:
        raise UsageError("--nt must be at least 2")
    if not (0 <= args.tmin < args.tmax):
        raise UsageError("need 0 <= --tmin < --tmax")
    return np.linspace(args.tmin, args.tmax, args.nt)


def make_config(model, z):
    if not z > 0:
        raise UsageError("--z must be positive")
    return AtomSurfaceConfig(model, z)


# -- commands --------------------------------------------------------------

def cmd_dress(args, table):
    model, omega_ev = build_model(args, table)
    cfg = make_config(model, args.z)
    ts = time_grid(args)
    ustat = u_static(cfg)
    dyn = parallel_map(_Kernel(cfg, method=args.method), ts, args.workers)
    scale = abs(ustat) if args.normalization == "relative" else 1.0
    cols = {
        "t": ts,
        "u_stat": np.full(ts.size, ustat / scale),
        "u_dyn": dyn / scale,
        "total": (ustat + dyn) / scale,
        "light_cone": cfg.near_light_cone(ts).astype(float),
    }
    params = {"material": args.material, "z": args.z, "method": args.method,
              "normalization": args.normalization, "u_stat": ustat,
              "model": model.to_dict()}
    return cols, params, si_block(model, omega_ev)


def cmd_dispersion(args, table):
    model, omega_ev = build_model(args, table)
    if model.is_perfect:
        raise UsageError("dispersion needs a Drude material")
    if not (0 <= args.pmin < args.pmax) or args.np < 2:
        raise UsageError("need 0 <= --pmin < --pmax and --np >= 2")
    wp = model.plasma_frequency
    p = np.linspace(args.pmin, args.pmax, args.np) * wp
    ll = dispersion_lossless(model, p)
    lossy = np.full(p.size, np.nan + 0j)
    kap = np.full(p.size, np.nan + 0j)
    if model.damping_rate > 0:
        ok = p > 0
        mode = dispersion_lossy(model, p[ok])
        lossy[ok] = mode.omega_bar
        kap[ok] = mode.kappa_bar
        lossy[~ok] = 0.0
        kap[~ok] = 0.0
    cols = {
        "p": p / wp,
        "re_omega_lossy": lossy.real / wp,
        "im_omega_lossy": lossy.imag / wp,
        "kappa_lossy": kap.real / wp,
        "re_omega_lossless": np.real(ll.omega_bar) / wp,
        "kappa_lossless": np.real(ll.kappa_bar) / wp,
    }
    params = {"material": args.material, "units": "omega_p", "model": model.to_dict()}
    if args.grid:
        w = np.linspace(0.0, 1.2, args.np)[1:] * wp
        mag = rp_magnitude_grid(model, w, p[p > 0])
        np.savetxt(args.grid, mag, delimiter=",",
                   header=f"|Im r_p|; rows omega/omega_p in (0, 1.2], columns p/omega_p "
                          f"in ({args.pmin}, {args.pmax}]")
        params["grid"] = args.grid
    return cols, params, si_block(model, omega_ev)


def _envelope_exponent(t, v):
    a = np.abs(v)
    idx = np.nonzero((a[1:-1] >= a[:-2]) & (a[1:-1] > a[2:]))[0] + 1
    if idx.size < 3:
        return float("nan")
    return float(np.polyfit(np.log(t[idx]), np.log(a[idx]), 1)[0])


def cmd_resonant(args, table):
    model, omega_ev = build_model(args, table)
    if model.is_perfect:
        raise UsageError("resonant needs a Drude material")
    cfg = make_config(model, args.z)
    ts = time_grid(args)
    dropped = 0
    if args.branch != "nearfield":
        keep = ts > cfg.light_cone
        dropped = int((~keep).sum())
        ts = ts[keep]
        if ts.size == 0:
            raise UsageError("no times beyond the light cone t = 2z")
    ustat = u_static(cfg)
    vals = parallel_map(_Resonant(cfg, args.branch), ts, args.workers) / abs(ustat)
    expo = _envelope_exponent(ts, vals)
    cols = {"t": ts, "delta_u_res": vals, "envelope_exponent": np.full(ts.size, expo)}
    params = {"material": args.material, "z": args.z, "branch": args.branch,
              "normalization": "relative", "u_stat": ustat, "envelope_exponent": expo,
              "rows_dropped_before_light_cone": dropped, "model": model.to_dict()}
    return cols, params, si_block(model, omega_ev)


def _vector(text, name):
    try:
        v = [float(x) for x in text.split(",")]
    except ValueError:
        raise UsageError(f"{name} must be three comma-separated numbers") from None
    if len(v) != 3:
        raise UsageError(f"{name} must be three comma-separated numbers")
    return tuple(v)


def cmd_partial(args, table):
    model, omega_ev = build_model(args, table)
    cfg = make_config(model, args.z)
    ts = time_grid(args)
    if args.quench == "stark":
        if not args.new_omega > 0:
            raise UsageError("--new-omega must be positive")
        q = StarkShift(args.new_omega)
        stat = u_static(cfg, q.new_omega)
        dyn = parallel_map(_Kernel(cfg, q.new_omega, q.new_omega), ts, args.workers)
        corr = -parallel_map(_Kernel(cfg, q.new_omega, 1.0), ts, args.workers)
        qinfo = {"kind": "stark", "new_omega": q.new_omega}
    else:
        q = DipoleChange(_vector(args.new_dipole, "--new-dipole"),
                         _vector(args.old_dipole, "--old-dipole"))
        new_sq, weight = q.weights
        stat = new_sq * u_static(cfg)
        dyn = np.zeros(ts.size)
        corr = weight * parallel_map(_Kernel(cfg), ts, args.workers) if weight else \
            np.zeros(ts.size)
        qinfo = {"kind": "dipole", "new": q.new, "old": q.old, "weights": q.weights}
    ustat_old = u_static(cfg)
    scale = abs(ustat_old) if args.normalization == "relative" else 1.0
    cols = {
        "t": ts,
        "u_stat": np.full(ts.size, stat / scale),
        "u_dyn": dyn / scale,
        "delta_u_partial": corr / scale,
        "total": (stat + dyn + corr) / scale,
        "light_cone": cfg.near_light_cone(ts).astype(float),
    }
    params = {"material": args.material, "z": args.z, "quench": qinfo,
              "normalization": args.normalization, "u_stat_before": ustat_old,
              "model": model.to_dict()}
    return cols, params, si_block(model, omega_ev)


class _Decay:
    def __init__(self, model, tau, span, nt):
        self.model, self.tau, self.span, self.nt = model, tau, span, nt

    def __call__(self, zs):
        out = []
        for z in zs:
            cfg = AtomSurfaceConfig(self.model, float(z))
            est = decay_time_estimate(self.model, z, 1.0)
            ts = np.linspace(0.0, self.span * est, self.nt)
            try:
                out.append(decay_time(cfg, ts, tau=self.tau).t_decay_numeric)
            except FitError:
                out.append(np.nan)
        return np.array(out)


def cmd_decay_time(args, table):
    model, omega_ev = build_model(args, table)
    if model.is_perfect:
        raise UsageError("decay-time needs a Drude material")
    if not (0 < args.zmin < args.zmax) or args.nz < 2:
        raise UsageError("need 0 < --zmin < --zmax and --nz >= 2")
    if args.window < 5:
        raise UsageError("--window must be at least 5 (in units of the estimate)")
    zs = np.geomspace(args.zmin, args.zmax, args.nz)
    num = parallel_map(_Decay(model, args.tau, args.window, args.samples), zs, args.workers)
    base = decay_time_estimate(model, zs, 1.0)
    ok = np.isfinite(num)
    tau_fit = float(np.sum(num[ok] * base[ok]) / np.sum(base[ok] ** 2)) if ok.any() \
        else float("nan")
    cols = {
        "z": zs,
        "t_decay_numeric": num,
        "t_decay_estimate": args.tau * base,
        "fit_failed": (~ok).astype(float),
    }
    params = {"material": args.material, "tau": args.tau, "tau_fit": tau_fit,
              "window": args.window, "samples": args.samples, "model": model.to_dict()}
    return cols, params, si_block(model, omega_ev)


COMMANDS = {
    "dress": cmd_dress,
    "dispersion": cmd_dispersion,
    "resonant": cmd_resonant,
    "partial": cmd_partial,
    "decay-time": cmd_decay_time,
}


def _common(p, z_default=10.0, times=(0.0, 40.0, 401)):
    p.add_argument("--material", default="gold", help="material preset (default: gold)")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--omega-ev", type=float, help="transition energy ħΩ in eV")
    g.add_argument("--wavelength-nm", type=float, help="transition wavelength in nm")
    g.add_argument("--atom", help="atom preset, e.g. rb780")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                   help="worker processes (default: available CPUs)")
    p.add_argument("-o", "--output", help="CSV path (default: stdout)")
    p.add_argument("--manifest", help="manifest path (default: CSV path with .json)")
    if z_default is not None:
        p.add_argument("--z", type=float, default=z_default,
                       help=f"distance in c/Ω (default: {z_default:g})")
    if times is not None:
        p.add_argument("--tmin", type=float, default=times[0])
        p.add_argument("--tmax", type=float, default=times[1])
        p.add_argument("--nt", type=int, default=times[2])


def build_parser():
    ap = argparse.ArgumentParser(
        prog="dyncp", description="Dynamic Casimir-Polder potential near a planar surface.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dress", help="bare-atom dressing U(t)")
    _common(p)
    p.add_argument("--method", choices=["full", "residue"], default="full")
    p.add_argument("--normalization", choices=["reduced", "relative"], default="reduced")

    p = sub.add_parser("dispersion", help="surface-plasmon dispersion")
    _common(p, z_default=None, times=None)
    p.add_argument("--pmin", type=float, default=0.0, help="in ω_p/c")
    p.add_argument("--pmax", type=float, default=2.0, help="in ω_p/c")
    p.add_argument("--np", type=int, default=201)
    p.add_argument("--grid", help="also write |Im r_p| on an (ω, p) grid to this file")

    p = sub.add_parser("resonant", help="surface-plasmon contribution ΔU_res(t)")
    _common(p, times=(20.0, 100.0, 801))
    p.add_argument("--branch", choices=["lossy", "lossless", "nearfield"], default="lossy")

    p = sub.add_parser("partial", help="partial dressing after a sudden quench")
    _common(p, times=(0.0, 60.0, 601))
    p.add_argument("--quench", choices=["stark", "dipole"], default="stark")
    p.add_argument("--new-omega", type=float, default=0.9, help="Ω̃/Ω for a Stark quench")
    p.add_argument("--new-dipole", default="1,0,0", help="d̃ in units of |d|")
    p.add_argument("--old-dipole", default="1,0,0", help="d in units of |d|")
    p.add_argument("--normalization", choices=["reduced", "relative"], default="reduced")

    p = sub.add_parser("decay-time", help="1/e decay time of ΔU_res vs distance")
    _common(p, z_default=None, times=None)
    p.add_argument("--zmin", type=float, default=0.3)
    p.add_argument("--zmax", type=float, default=10.0)
    p.add_argument("--nz", type=int, default=12)
    p.add_argument("--tau", type=float, default=1.1)
    p.add_argument("--window", type=float, default=8.0,
                   help="scan length in units of π√(z/ω_sp)")
    p.add_argument("--samples", type=int, default=3000)
    return ap


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.workers < 1:
        parser.error("--workers must be >= 1")
    start = time.perf_counter()
    try:
        table = load_presets()
        cols, params, si = COMMANDS[args.command](args, table)
        manifest = {
            "command": args.command,
            "argv": argv,
            "parameters": {"reduced": params, "si": si},
            "tool_version": __version__,
            "tolerances": IMAG_AXIS_SPEC.summary(),
            "elapsed": time.perf_counter() - start,
        }
        meta = {"command": args.command, "tool_version": __version__,
                "units": "reduced: c = eps0 = Omega = 1, energies per |d|^2"}
        meta.update({k: v for k, v in params.items() if k != "model"})
        write_outputs(args, cols, meta, manifest)
    except (UsageError, PreconditionError) as exc:
        parser.error(str(exc))
    except (QuadratureError, RootError, BranchError, FitError) as exc:
        print(f"dyncp: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except OSError as exc:
        print(f"dyncp: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return 0


if __name__ == "__main__":
    sys.exit(main())
