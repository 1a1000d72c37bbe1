"""The ramp-addition mapping between a signal f and its amplitude-time function h.

With ``g(t) = alpha t + f(t)`` strictly monotonic, ``g^{-1}(u) = u/alpha + h(u)``
and the pair satisfies

    f(t) = -alpha h(f(t) + alpha t),    h(u) = -f(h(u) + u/alpha) / alpha.

For a T-periodic f, h is periodic with period ``alpha T`` in u.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._fourier import coeffs_from_samples, shift_coeffs, trig_eval, trim_coeffs
from .errors import ConvergenceError, InvalidParameterError, SlopeTooSmallError
from .signal_model import BandlimitedSignal, UniformGrid

__all__ = [
    "AmplitudeTimeFunction",
    "IterationReport",
    "check_slope",
    "forward_g",
    "invert_g",
    "map_f_to_h",
    "map_h_to_f",
    "fixed_point_iterates",
    "lp_norm",
]

DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 200
AUTO_CONTRACTION_LIMIT = 0.5
WARM_START_CHUNK = 64


def check_slope(f: BandlimitedSignal, alpha):
    if not abs(alpha) > f.deriv_bound:
        raise SlopeTooSmallError(
            f"|alpha|={abs(alpha):.6g} must exceed the derivative bound {f.deriv_bound:.6g}"
        )


@dataclass(frozen=True)
class IterationReport:
    iterations_used: int
    final_residual: float
    contraction_ratio_estimate: float


@dataclass(frozen=True)
class AmplitudeTimeFunction:
    """h(u) sampled on a uniform grid covering one period ``alpha T`` of u.

    Off-grid values come from Dirichlet (periodic bandlimited) interpolation
    of the grid samples.
    """

    grid: UniformGrid
    values: np.ndarray
    alpha: float
    period_U: float
    _coeffs: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).copy()
        if v.shape != (self.grid.count,):
            raise InvalidParameterError("values must match the grid size")
        if not math.isclose(self.grid.span, abs(self.period_U), rel_tol=1e-9):
            raise InvalidParameterError(
                f"grid spans {self.grid.span}, expected one period {abs(self.period_U)}"
            )
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        c = shift_coeffs(coeffs_from_samples(v), abs(self.period_U), self.grid.start)
        object.__setattr__(self, "_coeffs", trim_coeffs(c))

    @property
    def coeffs(self):
        """Non-negative Fourier coefficients of the Dirichlet interpolant."""
        return self._coeffs

    def __call__(self, u, order=0):
        return trig_eval(self._coeffs, abs(self.period_U), u, order)

    def ramp_inverse(self, u):
        """g^{-1}(u) = u / alpha + h(u)."""
        return np.asarray(u) / self.alpha + self(u)

    def to_dict(self):
        return {
            "alpha": self.alpha,
            "period_U": self.period_U,
            "grid": {"start": self.grid.start, "step": self.grid.step, "count": self.grid.count},
            "values": [float(x) for x in self.values],
        }

    @classmethod
    def from_dict(cls, d):
        g = d["grid"]
        return cls(
            UniformGrid(float(g["start"]), float(g["step"]), int(g["count"])),
            np.asarray(d["values"], dtype=float),
            float(d["alpha"]),
            float(d["period_U"]),
        )


def forward_g(f: BandlimitedSignal, alpha, t):
    """u = g(t) = alpha t + f(t)."""
    check_slope(f, alpha)
    return alpha * np.asarray(t, dtype=float) + f(t)


def _solve_monotone(fun, dfun, target, lo, hi, tol, max_iter, increasing=True, ftol=0.0):
    """Vectorised safeguarded Newton for ``fun(x) = target`` on brackets ``[lo, hi]``.

    ``fun`` must be monotone on each bracket.  Newton steps that leave the
    current bracket are replaced by bisection.  A point is done when the
    step or the bracket falls below ``tol``, or the residual below ``ftol``
    (the rounding level of ``fun``, past which Newton steps are noise).
    """
    target = np.asarray(target, dtype=float)
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    x = 0.5 * (lo + hi)
    sign = 1.0 if increasing else -1.0
    ftol = np.broadcast_to(np.asarray(ftol, dtype=float), x.shape)
    active = np.ones(x.shape, dtype=bool)
    for it in range(1, max_iter + 1):
        idx = np.nonzero(active)[0]
        xa = x[idx]
        r = sign * (fun(xa) - target[idx])
        d = sign * dfun(xa)
        # shrink the bracket around the root
        pos = r > 0
        hi[idx[pos]] = xa[pos]
        lo[idx[~pos]] = xa[~pos]
        with np.errstate(divide="ignore", invalid="ignore"):
            xn = xa - r / d
        bad = ~np.isfinite(xn) | (xn <= lo[idx]) | (xn >= hi[idx]) | (d <= 0)
        xn[bad] = 0.5 * (lo[idx[bad]] + hi[idx[bad]])
        # a root to rounding stays put; the bracket midpoint would move it away
        exact = (r == 0) | (np.abs(r) <= ftol[idx])
        xn[exact] = xa[exact]
        step = np.abs(xn - xa)
        x[idx] = xn
        floor = np.maximum(tol, 4.0 * np.spacing(np.abs(xn)))
        done = (step <= floor) | exact | (hi[idx] - lo[idx] <= floor)
        active[idx[done]] = False
        if not active.any():
            return x, it
    raise ConvergenceError(
        f"root finder did not converge in {max_iter} iterations", iterations=max_iter
    )


def invert_g(f: BandlimitedSignal, alpha, u, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """t with g(t) = u, by bracketing on ``[(u-A)/alpha, (u+A)/alpha]`` plus Newton."""
    check_slope(f, alpha)
    if not tol > 0:
        raise InvalidParameterError("tol must be positive")
    u_arr = np.asarray(u, dtype=float)
    flat = np.atleast_1d(u_arr).ravel()
    pad = f.amp_bound_A * (1.0 + 1e-9) + 1e-300
    a = (flat - pad) / alpha
    b = (flat + pad) / alpha
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    t, _ = _solve_monotone(
        lambda t: alpha * t + f(t),
        lambda t: alpha + f.derivative(t),
        flat,
        lo,
        hi,
        tol * 1e-3,
        max_iter,
        increasing=alpha > 0,
    )
    return t.reshape(u_arr.shape) if u_arr.ndim else float(t[0])


def fixed_point_iterates(f: BandlimitedSignal, alpha, u, n_iter):
    """First ``n_iter + 1`` iterates of the scaled fixed-point iteration.

    Row ``n`` holds ``h~_n(u/alpha)`` where ``h~_0 = f`` and
    ``h~_{n+1}(x) = f(x - h~_n(x)/alpha)``; ``h = -h~/alpha``.
    """
    x = np.asarray(u, dtype=float) / alpha
    out = np.empty((n_iter + 1,) + x.shape)
    out[0] = f(x)
    for n in range(n_iter):
        out[n + 1] = f(x - out[n] / alpha)
    return out


def _iterate(f, alpha, x, ht, tol, max_iter, polish=False):
    """Run the scaled iteration from ``ht`` at points ``x = u / alpha`` until steps fall below ``tol``.

    Steps are measured on ``h~ = -alpha h``, which carries the units of f, so
    ``tol`` bounds the round-trip error in signal units whatever alpha is.
    With ``polish`` the iteration continues past ``tol`` while the steps keep
    shrinking, which leaves the values accurate to rounding.
    """
    ratio = 0.0
    prev_step = None
    prev_max = None
    reached = False
    floor = 1e-13 * max(f.amp_bound_A, 1e-300)
    for it in range(1, max_iter + 1):
        new = f(x - ht / alpha)
        step = np.abs(new - ht)
        if prev_step is not None:
            valid = prev_step > floor
            if valid.any():
                ratio = max(ratio, float(np.max(step[valid] / prev_step[valid])))
        ht = new
        smax = float(step.max(initial=0.0))
        if smax < tol:
            if not polish or smax == 0.0 or (prev_max is not None and smax >= prev_max):
                return ht, it, ratio
            reached = True
        prev_step = step
        prev_max = smax
    if reached:
        return ht, max_iter, ratio
    raise ConvergenceError(
        f"fixed-point iteration did not converge in {max_iter} iterations",
        iterations=max_iter,
        residual=float(prev_step.max()) / abs(alpha),
    )


def map_f_to_h(
    f: BandlimitedSignal,
    alpha,
    u_grid: UniformGrid,
    tol=DEFAULT_TOL,
    max_iter=DEFAULT_MAX_ITER,
    warm_start=True,
    init=None,
    polish=True,
):
    """Compute h = M_alpha f on ``u_grid`` by the contraction ``h~ <- f(u/alpha - h~/alpha)``.

    The contraction constant is ``sup|f'| / |alpha| < 1``.  With
    ``warm_start`` the grid is cut into chunks of consecutive points swept
    in lockstep: the first point of each chunk starts from ``h~_0 = f`` and
    every later point from its left neighbour's converged value.  ``init``
    (values of h in seconds) overrides both.  ``polish`` iterates past
    ``tol`` down to rounding, so that the spectrum of the grid samples
    reaches the floating-point floor.

    ``u_grid`` must span one period ``alpha T``; use
    :func:`map_f_to_h_points` for arbitrary amplitudes.

    Returns
    -------
    AmplitudeTimeFunction, IterationReport
    """
    check_slope(f, alpha)
    values, report = map_f_to_h_points(
        f, alpha, u_grid.points(), tol, max_iter, warm_start=warm_start, init=init, polish=polish
    )
    h = AmplitudeTimeFunction(u_grid, values, float(alpha), float(alpha) * f.period_T)
    return h, report


def map_f_to_h_points(
    f, alpha, u, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, warm_start=False, init=None, polish=False
):
    """Pointwise version of :func:`map_f_to_h`; returns ``(h values, IterationReport)``."""
    check_slope(f, alpha)
    u = np.asarray(u, dtype=float)
    x = u / alpha
    if init is not None:
        ht, used, ratio = _iterate(f, alpha, x, -alpha * np.asarray(init, dtype=float), tol, max_iter, polish)
    elif warm_start and u.size > WARM_START_CHUNK:
        ht, used, ratio = _warm_sweep(f, alpha, x, tol, max_iter, polish)
    else:
        ht, used, ratio = _iterate(f, alpha, x, f(x), tol, max_iter, polish)
    h = -ht / alpha
    residual = float(np.max(np.abs(h + f(h + x) / alpha), initial=0.0))
    return h, IterationReport(used, residual, ratio)


def _warm_sweep(f, alpha, x, tol, max_iter, polish=False):
    n = x.size
    n_chunks = -(-n // WARM_START_CHUNK)
    # chunk j owns points j*L .. j*L + L-1; pad the last chunk by repeating its end
    idx = np.arange(n_chunks * WARM_START_CHUNK).reshape(n_chunks, WARM_START_CHUNK)
    idx = np.minimum(idx, n - 1)
    ht = np.empty(n)
    used = 0
    ratio = 0.0
    prev = None
    for pos in range(WARM_START_CHUNK):
        cols = idx[:, pos]
        xs = x[cols]
        start = f(xs) if prev is None else prev
        vals, it, r = _iterate(f, alpha, xs, start, tol, max_iter, polish)
        ht[cols] = vals
        prev = vals
        used = max(used, it)
        ratio = max(ratio, r)
    return ht, used, ratio


def map_h_to_f(h: AmplitudeTimeFunction, t_grid, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, method="auto"):
    """Recover f = M_{1/alpha} h at the points of ``t_grid``.

    Solves ``u / alpha + h(u) = t`` for u and returns ``f(t) = u - alpha t``.
    ``method="fixed_point"`` runs the dual contraction
    ``f <- -alpha h(f + alpha t)`` and needs ``|alpha| sup|h'| < 1``;
    ``"newton"`` uses a bracketed Newton solve that only needs
    ``u/alpha + h(u)`` to be monotone.  ``"auto"`` picks the contraction
    when its Lipschitz constant is at most 0.9.
    """
    t = t_grid.points() if isinstance(t_grid, UniformGrid) else np.asarray(t_grid, dtype=float)
    alpha = h.alpha
    if method not in ("auto", "fixed_point", "newton"):
        raise InvalidParameterError(f"unknown method {method!r}")
    if method == "auto":
        lip = abs(alpha) * float(np.max(np.abs(h(h.grid.points(), order=1)), initial=0.0))
        method = "fixed_point" if lip <= AUTO_CONTRACTION_LIMIT else "newton"
    if method == "fixed_point":
        fv = -alpha * h(alpha * t)
        for it in range(1, max_iter + 1):
            new = -alpha * h(fv + alpha * t)
            step = float(np.max(np.abs(new - fv), initial=0.0))
            fv = new
            if step < tol:
                return fv
        raise ConvergenceError(
            f"dual fixed-point iteration did not converge in {max_iter} iterations",
            iterations=max_iter,
            residual=step,
        )
    hmax = float(np.sum(np.abs(h.coeffs)) * 2.0)  # bound on sup|h| of the interpolant
    a = alpha * (t - hmax)
    b = alpha * (t + hmax)
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    u, _ = _solve_monotone(
        lambda u: u / alpha + h(u),
        lambda u: 1.0 / alpha + h(u, order=1),
        t,
        lo,
        hi,
        tol * 1e-3,
        max_iter,
        increasing=alpha > 0,
        ftol=8.0 * np.finfo(float).eps * (np.abs(t) + hmax),
    )
    return u - alpha * t


def lp_norm(samples, grid: UniformGrid, p):
    """L^p norm over one period by the rectangle rule; ``p = inf`` gives the grid max."""
    p = float(p)
    if not p >= 1:
        raise InvalidParameterError(f"p must be >= 1, got {p}")
    v = np.abs(np.asarray(samples, dtype=float))
    if math.isinf(p):
        return float(v.max(initial=0.0))
    return float((np.sum(v ** p) * grid.step) ** (1.0 / p))
