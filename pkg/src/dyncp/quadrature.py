"""Numerical engines shared by the Green-tensor and potential evaluators.

All integrators here are *batched*: the integrand receives a 1-d array of
abscissae and returns an array whose first axis matches it.  Extra trailing
axes are integrated component-wise, which lets a single adaptive run produce a
whole time series or a whole frequency sweep at once.

The adaptive rule is the 7/15-point Gauss-Kronrod pair (QUADPACK ``qk15``).
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "QuadratureSpec",
    "QuadratureResult",
    "QuadratureError",
    "RootError",
    "gauss_kronrod",
    "integrate_interval",
    "integrate_semi_infinite",
    "integrate_oscillatory",
    "wynn_epsilon",
    "refine_root",
]


class QuadratureError(ArithmeticError):
    """Raised when an integral cannot be brought within tolerance."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class RootError(ArithmeticError):
    """Raised when a complex root iteration fails."""

    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last


# QUADPACK qk15 abscissae (positive half, descending) and weights
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KRONROD = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GAUSS = np.zeros(15)
# Gauss nodes are the odd-indexed Kronrod abscissae (1, 3, 5) and the centre
_GAUSS[[1, 3, 5]] = _WG[:3]
_GAUSS[[13, 11, 9]] = _WG[:3]
_GAUSS[7] = _WG[3]


def gauss_kronrod():
    """Return ``(nodes, kronrod_weights, gauss_weights)`` on [-1, 1]."""
    return _NODES.copy(), _KRONROD.copy(), _GAUSS.copy()


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and budget for an adaptive integration.

    ``transform`` selects how a semi-infinite range is folded onto a finite
    one: ``"rational"`` uses ``x = a + L u/(1-u)``, ``"exp"`` uses
    ``x = a - L log(1-u)`` (suited to exponentially decaying integrands) and
    ``"log"`` uses ``x = a + L (exp(u/(1-u)) - 1)`` for integrands spread over
    many decades.  ``scale`` is the length ``L``.

    For vector integrands ``norm="componentwise"`` applies ``rel_tol`` to
    each component, ``norm="max"`` to the largest one.
    """

    rel_tol: float = 1e-9
    abs_tol: float = 0.0
    max_subdivisions: int = 2000
    transform: str = "rational"
    scale: float = 1.0
    norm: str = "componentwise"

    def __post_init__(self):
        if not (0.0 < self.rel_tol <= 1e-3):
            raise ValueError(f"rel_tol must lie in (0, 1e-3], got {self.rel_tol}")
        if self.abs_tol < 0.0:
            raise ValueError("abs_tol must be nonnegative")
        if self.max_subdivisions < 16:
            raise ValueError("max_subdivisions must be at least 16")
        if self.transform not in ("rational", "exp", "log", "none"):
            raise ValueError(f"unknown transform {self.transform!r}")
        if not self.scale > 0.0:
            raise ValueError("scale must be positive")
        if self.norm not in ("componentwise", "max"):
            raise ValueError(f"unknown norm {self.norm!r}")

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def summary(self):
        return {
            "rel_tol": self.rel_tol,
            "abs_tol": self.abs_tol,
            "max_subdivisions": self.max_subdivisions,
            "transform": self.transform,
            "norm": self.norm,
        }


@dataclass
class QuadratureResult:
    value: np.ndarray | complex | float
    error_bound: np.ndarray | float
    evaluations: int
    converged: bool
    partial_sums: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if np.any(np.asarray(self.error_bound) < 0):
            raise ValueError("error_bound must be nonnegative")


def _check_finite(vals, x):
    if not np.all(np.isfinite(vals)):
        bad = np.nonzero((~np.isfinite(np.reshape(vals, (len(x), -1)))).any(axis=1))[0]
        raise QuadratureError(f"non-finite integrand value at x = {x[bad[0]]!r}")


def _adaptive(g, lo, hi, spec, raise_on_failure):
    """Global adaptive GK15 over the intervals [lo_i, hi_i] of a finite range.

    ``g`` is evaluated on every pending node in one call.
    """
    lo = np.asarray(lo, float)
    hi = np.asarray(hi, float)
    evals = 0
    active_lo, active_hi = lo, hi
    store_lo = np.empty(0)
    store_hi = np.empty(0)
    store_val = None
    store_err = None
    store_abs = None

    while True:
        half = 0.5 * (active_hi - active_lo)
        mid = 0.5 * (active_hi + active_lo)
        x = (mid[:, None] + half[:, None] * _NODES[None, :]).ravel()
        y = np.asarray(g(x))
        evals += x.size
        _check_finite(y, x)
        tail = y.shape[1:]
        y = y.reshape((active_lo.size, 15) + tail)
        wk = _KRONROD.reshape((1, 15) + (1,) * len(tail))
        wgs = _GAUSS.reshape((1, 15) + (1,) * len(tail))
        hs = half.reshape((-1,) + (1,) * len(tail))
        ik = (y * wk).sum(axis=1) * hs
        ig = (y * wgs).sum(axis=1) * hs
        ia = (np.abs(y) * wk).sum(axis=1) * hs
        err = np.abs(ik - ig)
        # QUADPACK-style sharpening keeps the bound conservative but not absurd
        err = np.maximum(err, 50.0 * np.finfo(float).eps * np.abs(ik))

        if store_val is None:
            store_lo, store_hi, store_val, store_err = active_lo, active_hi, ik, err
            store_abs = ia
        else:
            store_lo = np.concatenate([store_lo, active_lo])
            store_hi = np.concatenate([store_hi, active_hi])
            store_val = np.concatenate([store_val, ik])
            store_err = np.concatenate([store_err, err])
            store_abs = np.concatenate([store_abs, ia])

        total = store_val.sum(axis=0)
        total_err = store_err.sum(axis=0)
        # never ask for more than roundoff allows: the floor scales with ∫|f|
        floor = 100.0 * np.finfo(float).eps * store_abs.sum(axis=0)
        size = np.abs(total) if spec.norm == "componentwise" else np.max(np.abs(total))
        tol = np.maximum(np.maximum(spec.rel_tol * size, spec.abs_tol), floor)
        if np.all(total_err <= tol):
            return QuadratureResult(_squeeze(total), _squeeze(total_err), evals, True)
        if store_lo.size >= spec.max_subdivisions:
            res = QuadratureResult(_squeeze(total), _squeeze(total_err), evals, False)
            if raise_on_failure:
                raise QuadratureError(
                    f"quadrature did not converge: estimate {res.value!r}, "
                    f"error bound {np.max(total_err)!r}", res)
            return res

        # score each interval by its share of the worst-violated tolerance
        safe_tol = np.where(tol > 0, tol, np.finfo(float).tiny)
        ratio = store_err / safe_tol
        score = ratio.reshape(store_lo.size, -1).max(axis=1)
        threshold = max(score.max() * 0.1, 1.0 / store_lo.size)
        split = score >= threshold
        budget = spec.max_subdivisions - store_lo.size
        idx = np.nonzero(split)[0]
        if idx.size > budget:
            idx = idx[np.argsort(score[idx])[::-1][:max(budget, 1)]]
            split = np.zeros(store_lo.size, bool)
            split[idx] = True
        keep = ~split
        a, b = store_lo[split], store_hi[split]
        m = 0.5 * (a + b)
        active_lo = np.concatenate([a, m])
        active_hi = np.concatenate([m, b])
        store_lo, store_hi = store_lo[keep], store_hi[keep]
        store_val, store_err = store_val[keep], store_err[keep]
        store_abs = store_abs[keep]


def _squeeze(v):
    v = np.asarray(v)
    return v[()] if v.ndim == 0 else v


def integrate_interval(f, a, b, spec=None, breakpoints=(), raise_on_failure=True):
    """Adaptive GK15 integral of a batched integrand over [a, b]."""
    spec = spec or QuadratureSpec()
    edges = np.unique(np.concatenate([[a, b], [p for p in breakpoints if a < p < b]]))
    return _adaptive(f, edges[:-1], edges[1:], spec, raise_on_failure)


def _fold(spec, a):
    L = spec.scale
    if spec.transform in ("rational", "none"):
        def x_of(u):
            return a + L * u / (1.0 - u)

        def jac(u):
            return L / (1.0 - u) ** 2
    elif spec.transform == "exp":
        def x_of(u):
            return a - L * np.log1p(-u)

        def jac(u):
            return L / (1.0 - u)
    else:
        def x_of(u):
            return a + L * np.expm1(u / (1.0 - u))

        def jac(u):
            return L * np.exp(u / (1.0 - u)) / (1.0 - u) ** 2
    return x_of, jac


def _u_of(spec, a, x):
    L = spec.scale
    if spec.transform in ("rational", "none"):
        s = (x - a) / L
        return s / (1.0 + s)
    if spec.transform == "exp":
        return -np.expm1(-(x - a) / L)
    s = np.log1p((x - a) / L)
    return s / (1.0 + s)


def integrate_semi_infinite(f, spec=None, a=0.0, breakpoints=(), raise_on_failure=True):
    """Integrate a batched integrand over ``[a, inf)``.

    The range is folded onto ``[0, 1)`` by ``spec.transform``; ``breakpoints``
    (in ``x``) seed the initial partition, which matters when the integrand
    has structure on several length scales.  Integrand values must vanish fast
    enough that the folded integrand is bounded near ``u = 1``.

    Examples
    --------
    >>> r = integrate_semi_infinite(lambda x: np.exp(-x))
    >>> round(float(r.value), 12)
    1.0
    """
    spec = spec or QuadratureSpec()
    x_of, jac = _fold(spec, a)
    pts = sorted(p for p in breakpoints if p > a)
    ucuts = [0.0] + [float(_u_of(spec, a, p)) for p in pts] + [1.0]
    ucuts = np.unique(ucuts)

    def g(u):
        with np.errstate(over="ignore", divide="ignore"):
            x = x_of(u)
        y = np.asarray(f(x))
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            w = jac(u).reshape((-1,) + (1,) * (y.ndim - 1))
            out = y * w
        # nodes that round onto u = 1 map to x = inf where f has vanished
        return np.where(y == 0, 0.0, out)

    return _adaptive(g, ucuts[:-1], ucuts[1:], spec, raise_on_failure)


def wynn_epsilon(partial_sums):
    """Wynn's epsilon extrapolation of a sequence of partial sums.

    Returns ``(limit, error_estimate)``; the estimate is the spread of the two
    highest even-order columns.  Works component-wise on trailing axes.
    """
    s = np.asarray(partial_sums)
    n = s.shape[0]
    if n < 3:
        return s[-1], np.abs(s[-1] - s[0]) if n > 1 else np.zeros_like(np.abs(s[-1]))
    prev = np.zeros_like(s[:n])
    cur = s.copy()
    evens = [cur[-1]]
    for k in range(1, n):
        diff = cur[1:] - cur[:-1]
        scale = np.max(np.abs(cur), axis=0)
        if np.any(np.abs(diff) <= 1e-15 * scale):
            # the column has settled to rounding; later columns are noise
            break
        inv = 1.0 / diff
        nxt = prev[1:n - k + 1] + inv
        prev, cur = cur, nxt
        if k % 2 == 0:
            evens.append(cur[-1])
        if cur.shape[0] == 1:
            break
    good = [e for e in evens if np.all(np.isfinite(e))]
    limit = good[-1]
    est = np.abs(good[-1] - good[-2]) if len(good) > 1 else np.abs(s[-1] - s[-2])
    return limit, est


def integrate_oscillatory(h, k, spec=None, a=0.0, kind="exp", n_segments=None,
                          min_segments=40, tail_sums=24, raise_on_failure=True):
    """Integrate ``h(x) * w(k x)`` over ``[a, inf)`` for a slowly varying ``h``.

    ``kind`` picks ``w``: ``"exp"`` for ``exp(i k x)``, ``"cos"`` or ``"sin"``.
    The range is cut at the zeros of ``w`` (half-period segments measured from
    ``a``), each segment is integrated adaptively, and the sequence of partial
    sums is accelerated with Wynn's epsilon algorithm.  ``n_segments`` fixes
    how many half periods are summed explicitly before extrapolation.
    """
    spec = spec or QuadratureSpec(rel_tol=1e-8)
    if k == 0:
        raise ValueError("oscillatory integration needs a nonzero phase rate")
    half = np.pi / abs(k)
    if kind == "exp":
        start = a
    elif kind == "cos":
        # first zero of cos(kx) at or after a
        start = (np.ceil((abs(k) * a - 0.5 * np.pi) / np.pi) + 0.5) * half
    elif kind == "sin":
        start = np.ceil(abs(k) * a / np.pi) * half
    else:
        raise ValueError(f"unknown kind {kind!r}")

    def w(x):
        if kind == "exp":
            return np.exp(1j * k * x)
        if kind == "cos":
            return np.cos(k * x)
        return np.sin(k * x)

    def f(x):
        y = np.asarray(h(x))
        return y * w(x).reshape((-1,) + (1,) * (y.ndim - 1))

    nseg = max(int(n_segments or 0), min_segments, tail_sums + 4)
    edges = np.concatenate([[a], start + half * np.arange(nseg + 1)]) if start > a else \
        start + half * np.arange(nseg + 1)
    edges = edges[edges >= a]
    # segment integrals are needed individually for the partial sums
    seg_vals = []
    seg_errs = []
    evals = 0
    for lo, hi in zip(edges[:-1], edges[1:]):
        r = integrate_interval(f, lo, hi, spec, raise_on_failure=False)
        seg_vals.append(r.value)
        seg_errs.append(r.error_bound)
        evals += r.evaluations
    seg_vals = np.asarray(seg_vals)
    partial = np.cumsum(seg_vals, axis=0)
    limit, est = wynn_epsilon(partial[-tail_sums:])
    quad_err = np.sum(np.asarray(seg_errs), axis=0)
    err = est + quad_err
    tol = np.maximum(spec.rel_tol * np.abs(limit) * 100, spec.abs_tol)
    converged = bool(np.all(np.isfinite(limit)) and np.all(err <= tol))
    out = QuadratureResult(_squeeze(limit), _squeeze(err), evals, converged, partial)
    if not converged and raise_on_failure:
        raise QuadratureError(
            f"series acceleration did not converge: estimate {out.value!r}, "
            f"error {np.max(err)!r}", out)
    return out


def refine_root(f, seed, fprime=None, abs_tol=1e-12, maxiter=100, step_limit=None):
    """Complex Newton iteration, falling back to secant steps.

    ``fprime`` is optional; without it (or where it vanishes) the secant
    update uses the last two iterates.  Raises ``RootError`` once ``maxiter``
    is exhausted or the iteration leaves a finite neighbourhood.
    """
    x0 = complex(seed)
    f0 = complex(f(x0))
    if abs(f0) < abs_tol:
        return x0
    x_prev, f_prev = None, None
    x, fx = x0, f0
    scale = max(abs(x0), 1.0)
    for _ in range(maxiter):
        step = None
        if fprime is not None:
            d = complex(fprime(x))
            if d != 0 and np.isfinite(d):
                step = fx / d
        if step is None:
            if x_prev is None:
                h = 1e-7 * scale
                d = (complex(f(x + h)) - fx) / h
            else:
                d = (fx - f_prev) / (x - x_prev)
            if d == 0 or not np.isfinite(d):
                raise RootError("zero derivative in root iteration", x)
            step = fx / d
        if step_limit is not None and abs(step) > step_limit:
            step *= step_limit / abs(step)
        x_prev, f_prev = x, fx
        x = x - step
        fx = complex(f(x))
        if not (np.isfinite(x) and np.isfinite(fx)):
            raise RootError("root iteration produced a non-finite value", x_prev)
        if abs(x) > 1e8 * scale:
            raise RootError("root iteration diverged", x)
        if abs(fx) < abs_tol:
            return x
    raise RootError(f"no convergence after {maxiter} iterations (|f| = {abs(fx):.3e})", x)
