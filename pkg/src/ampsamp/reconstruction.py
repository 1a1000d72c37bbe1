"""Decoders for delta-ramp time codes.

* BIA: sinc-interpolate the uniform amplitude samples of h, map back through
  M_{1/alpha}, lowpass to the source band.
* IASR: residual-driven refinement whose first pass is BIA.
* Voronoi: frame iteration on the nonuniform samples ``f(t_n)`` with
  piecewise-constant (nearest-sample) quasi-interpolation.

All iterates are kept as bandlimited trigonometric polynomials, so they can
be evaluated exactly at the sampling instants.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from ._fourier import coeffs_from_samples, l2_norm_coeffs, shift_coeffs, trig_eval
from .encoder import TimeSequence, check_density, h_samples, nonuniform_samples
from .errors import (
    ConvergenceError,
    GridTooCoarseError,
    InvalidParameterError,
    NonuniformInputError,
    SlopeTooSmallError,
    ZeroReferenceError,
)
from .ramp_transform import (
    DEFAULT_TOL,
    AmplitudeTimeFunction,
    _solve_monotone,
    map_f_to_h_points,
    map_h_to_f,
)
from .signal_model import BandlimitedSignal, UniformGrid, certified_sup, harmonic_limit

__all__ = [
    "IASRConfig",
    "ReconstructionGrids",
    "ReconstructionReport",
    "sinc_interpolate_h",
    "lowpass_project",
    "lowpass_signal",
    "reconstruct_bia",
    "reconstruct_iasr",
    "reconstruct_voronoi",
    "ser",
    "SATURATED",
]

SATURATED = math.inf
DIVERGENCE_RUN = 3
# Correction norms below this fraction of the estimate norm are rounding noise.
PRECISION_FLOOR = 1e-11


@dataclass(frozen=True)
class IASRConfig:
    """Stopping parameters; the loop runs while ``k < K`` or the correction norm exceeds ``epsilon``.

    ``hard_cap`` bounds the total iteration count when ``epsilon`` is never
    reached.  Past ``K`` iterations the loop also ends once the correction
    is rounding noise (below ``1e-11`` of the estimate norm), flagged
    ``precision-floor``.  ``lpf_cutoff_sigma=None`` uses the source bandwidth.
    """

    max_iterations_K: int = 10
    epsilon: float = 1e-9
    lpf_cutoff_sigma: float | None = None
    hard_cap: int = 200

    def __post_init__(self):
        if int(self.max_iterations_K) != self.max_iterations_K or self.max_iterations_K < 1:
            raise InvalidParameterError("max_iterations_K must be an integer >= 1")
        if not self.epsilon >= 0:
            raise InvalidParameterError("epsilon must be >= 0")
        if self.hard_cap < self.max_iterations_K:
            raise InvalidParameterError("hard_cap must be >= max_iterations_K")


@dataclass(frozen=True)
class ReconstructionGrids:
    """Dense grids used by the decoders.

    ``t_count`` points per signal period carry M_{1/alpha} outputs into the
    FFT lowpass and define the SER reference grid; ``u_count`` points per
    amplitude period hold the sinc interpolant of h.  ``None`` picks a size
    from the problem (see :meth:`resolve`).
    """

    t_count: int | None = None
    u_count: int | None = None

    def resolve(self, n_samples, kmax):
        t = self.t_count or max(1024, 16 * (2 * kmax + 1), 8 * n_samples)
        u = self.u_count or max(256, 4 * n_samples)
        if t <= 2 * kmax:
            raise GridTooCoarseError(f"t_count={t} cannot carry {kmax} harmonics")
        if u < n_samples:
            raise GridTooCoarseError(f"u_count={u} is smaller than the {n_samples} samples")
        return int(t), int(u)


@dataclass
class ReconstructionReport:
    method: str
    ser_per_iteration: list = field(default_factory=list)
    wall_time_per_iteration: list = field(default_factory=list)
    correction_norms: list = field(default_factory=list)
    final_signal: np.ndarray | None = None
    reference_grid: UniformGrid | None = None
    estimate: BandlimitedSignal | None = None
    status: str = "ok"
    flags: list = field(default_factory=list)
    density_satisfied: bool | None = None

    @property
    def iterations(self):
        return len(self.ser_per_iteration) if self.ser_per_iteration else len(self.correction_norms)

    def to_dict(self):
        return {
            "method": self.method,
            "status": self.status,
            "flags": list(self.flags),
            "density_satisfied": self.density_satisfied,
            "ser_per_iteration": [_json_float(x) for x in self.ser_per_iteration],
            "wall_time_per_iteration": [float(x) for x in self.wall_time_per_iteration],
            "correction_norms": [float(x) for x in self.correction_norms],
            "reference_grid": None
            if self.reference_grid is None
            else {
                "start": self.reference_grid.start,
                "step": self.reference_grid.step,
                "count": self.reference_grid.count,
            },
            "final_signal": None if self.final_signal is None else [float(x) for x in self.final_signal],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    def ser_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "ser_db", "wall_time_s"])
        for i, s in enumerate(self.ser_per_iteration, start=1):
            wt = self.wall_time_per_iteration[i - 1] if i - 1 < len(self.wall_time_per_iteration) else ""
            w.writerow([i, _json_float(s), wt])
        return buf.getvalue()


def _json_float(x):
    x = float(x)
    return "inf" if math.isinf(x) else x


# -- elementary operations ---------------------------------------------------

def ser(reference, estimate):
    """Signal-to-error ratio ``10 log10(||f||^2 / ||f - f_k||^2)`` in dB on a common grid.

    Returns :data:`SATURATED` (``inf``) when the error norm is below
    ``1e-14`` of the reference norm.
    """
    ref = np.asarray(reference, dtype=float)
    est = np.asarray(estimate, dtype=float)
    if ref.shape != est.shape:
        raise InvalidParameterError("reference and estimate must share a grid")
    nref = float(np.linalg.norm(ref))
    nerr = float(np.linalg.norm(ref - est))
    if nerr == 0.0 or nerr < 1e-14 * nref:
        return SATURATED
    if nref == 0.0:
        raise ZeroReferenceError("SER is undefined for a zero reference signal")
    return 20.0 * math.log10(nref / nerr)


def _check_uniform(u):
    u = np.asarray(u, dtype=float)
    if u.size < 2:
        raise NonuniformInputError("need at least two samples")
    d = np.diff(u)
    step = float(np.mean(d))
    if not step > 0 or np.max(np.abs(d - step)) > 1e-9 * step:
        raise NonuniformInputError("samples are not uniformly spaced")
    return step


def sinc_interpolate_h(u, h_values, u_grid: UniformGrid, alpha):
    """Periodised sinc interpolation of uniform samples of h onto ``u_grid``.

    The ``N`` samples span one period ``N * Delta``; the interpolant is the
    Dirichlet-kernel sum, i.e. the sinc series summed over all periodic
    images, and is evaluated exactly on the dense grid.
    """
    step = _check_uniform(u)
    n = len(u)
    period = n * step
    if not math.isclose(u_grid.span, period, rel_tol=1e-9):
        raise InvalidParameterError(f"u_grid spans {u_grid.span}, expected {period}")
    if u_grid.count < n:
        raise GridTooCoarseError("u_grid must have at least as many points as samples")
    c = shift_coeffs(coeffs_from_samples(h_values), period, float(u[0]))
    values = trig_eval(c, period, u_grid.points())
    return AmplitudeTimeFunction(u_grid, values, float(alpha), period)


def _band_bins(grid: UniformGrid, cutoff_sigma):
    if not math.pi / grid.step > cutoff_sigma:
        raise GridTooCoarseError(
            f"grid Nyquist {math.pi / grid.step:.6g} rad/s does not exceed cutoff {cutoff_sigma:.6g}"
        )
    return harmonic_limit(cutoff_sigma, grid.span)


def lowpass_project(samples, grid: UniformGrid, cutoff_sigma):
    """Zero every DFT bin with ``2 pi |k| / T > cutoff_sigma``; ``grid`` spans one period T."""
    kcut = _band_bins(grid, cutoff_sigma)
    spec = np.fft.rfft(np.asarray(samples, dtype=float))
    spec[kcut + 1:] = 0.0
    return np.fft.irfft(spec, n=grid.count)


def lowpass_signal(samples, grid: UniformGrid, cutoff_sigma, deriv_bound=None):
    """Same projection as :func:`lowpass_project`, returned as a :class:`BandlimitedSignal`.

    The derivative bound is measured on the result unless given.
    """
    kcut = _band_bins(grid, cutoff_sigma)
    c = coeffs_from_samples(samples)
    if grid.count % 2 == 0 and kcut >= grid.count // 2:
        raise GridTooCoarseError("cutoff reaches the grid Nyquist bin")
    half = shift_coeffs(c[: kcut + 1], grid.span, grid.start)
    amp = certified_sup(half, grid.span)
    if deriv_bound is None:
        deriv_bound = certified_sup(half, grid.span, order=1)
    return BandlimitedSignal.from_half_coeffs(half, grid.span, float(cutoff_sigma), amp, deriv_bound)


def _add(a: BandlimitedSignal, b: BandlimitedSignal):
    n = max(a.half_coeffs.size, b.half_coeffs.size)
    half = np.zeros(n, dtype=complex)
    half[: a.half_coeffs.size] += a.half_coeffs
    half[: b.half_coeffs.size] += b.half_coeffs
    amp = certified_sup(half, a.period_T)
    return BandlimitedSignal.from_half_coeffs(
        half,
        a.period_T,
        max(a.sigma, b.sigma),
        amp,
        certified_sup(half, a.period_T, order=1),
    )


def _zero_like(period_T, sigma):
    return BandlimitedSignal.from_half_coeffs([0.0], period_T, sigma, 0.0, 0.0)


def _ramp_h_at(f: BandlimitedSignal, alpha, u, init, flags):
    """h = M_alpha f at amplitudes ``u``; falls back to bracketing when the iterate is not monotone enough."""
    try:
        h, _ = map_f_to_h_points(f, alpha, u, init=init)
        return h
    except (SlopeTooSmallError, ConvergenceError):
        if "non-monotone-iterate" not in flags:
            flags.append("non-monotone-iterate")
    pad = f.amp_bound_A * (1 + 1e-9) + 1e-300
    lo, hi = (u - pad) / alpha, (u + pad) / alpha
    t, _ = _solve_monotone(
        lambda t: alpha * t + f(t), lambda t: alpha + f.derivative(t), u, lo, hi, 1e-15, 400
    )
    return t - u / alpha


def _warp_back(eta: AmplitudeTimeFunction, t_grid: UniformGrid, flags):
    """e = M_{1/alpha} eta on ``t_grid`` with a monotonicity check on ``u/alpha + eta(u)``."""
    slope = 1.0 / eta.alpha + eta(eta.grid.points(), order=1)
    if np.min(slope * np.sign(eta.alpha)) <= 0:
        if "inversion-failure" not in flags:
            flags.append("inversion-failure")
    return map_h_to_f(eta, t_grid, method="newton")


class _Tracker:
    def __init__(self, method, reference, grid, ts, sigma):
        self.report = ReconstructionReport(method, reference_grid=grid)
        self.reference = reference
        self.ref_values = None if reference is None else reference.sample(grid)
        self.grid = grid
        self.report.density_satisfied = check_density(ts, sigma).satisfies
        self._t0 = None

    def start(self):
        self._t0 = time.perf_counter()

    def record(self, estimate: BandlimitedSignal, correction_norm):
        self.report.wall_time_per_iteration.append(time.perf_counter() - self._t0)
        self.report.correction_norms.append(float(correction_norm))
        if self.ref_values is not None:
            self.report.ser_per_iteration.append(ser(self.ref_values, estimate.sample(self.grid)))

    def growth(self, scale):
        """``"diverging"`` after a run of growing corrections, ``"floor"`` when that run is rounding noise."""
        norms = self.report.correction_norms
        if len(norms) <= DIVERGENCE_RUN:
            return None
        tail = norms[-(DIVERGENCE_RUN + 1):]
        if not all(b > a for a, b in zip(tail, tail[1:])):
            return None
        return "floor" if tail[-1] <= PRECISION_FLOOR * scale else "diverging"

    def stop_on_growth(self, scale, flags):
        state = self.growth(scale)
        if state == "diverging":
            self.report.status = "divergence-detected"
        elif state == "floor":
            flags.append("precision-floor")
        return state is not None

    def finish(self, estimate, flags):
        r = self.report
        r.estimate = estimate
        r.final_signal = estimate.sample(self.grid)
        r.flags = list(flags)
        if "inversion-failure" in flags and r.status == "ok":
            r.status = "inversion-failure"
        return r


def _prepare(ts: TimeSequence, sigma, grids):
    grids = grids or ReconstructionGrids()
    kmax = harmonic_limit(sigma, ts.period_T)
    t_count, u_count = grids.resolve(ts.count, kmax)
    t_grid = UniformGrid.periodic(ts.period_T, t_count)
    u_grid = UniformGrid.periodic(ts.count * ts.delta, u_count)
    return t_grid, u_grid


# -- decoders ----------------------------------------------------------------

def reconstruct_iasr(
    ts: TimeSequence,
    sigma,
    cfg: IASRConfig | None = None,
    reference: BandlimitedSignal | None = None,
    grids: ReconstructionGrids | None = None,
):
    """Iterative amplitude-sampling reconstruction from ``h_0 = 0, f_0 = 0``.

    Each pass: residual ``eta_n = h(n Delta) - h_k(n Delta)``, sinc
    interpolation, ``e = M_{1/alpha} eta``, lowpass to ``sigma``,
    ``f_{k+1} = f_k + e~``, ``h_{k+1} = M_alpha f_{k+1}`` at the levels.
    ``reference`` (the true source) enables the SER trace.
    """
    cfg = cfg or IASRConfig()
    cutoff = cfg.lpf_cutoff_sigma or sigma
    t_grid, u_grid = _prepare(ts, cutoff, grids)
    alpha = ts.alpha
    u_n, h_n = h_samples(ts)
    tracker = _Tracker("IASR", reference, t_grid, ts, sigma)
    flags = []
    f_k = _zero_like(ts.period_T, cutoff)
    h_k = np.zeros_like(h_n)
    k = 0
    while True:
        tracker.start()
        eta = sinc_interpolate_h(u_n, h_n - h_k, u_grid, alpha)
        e_delta = _warp_back(eta, t_grid, flags)
        e_tilde = lowpass_signal(e_delta, t_grid, cutoff)
        f_k = _add(f_k, e_tilde)
        h_k = _ramp_h_at(f_k, alpha, u_n, h_k, flags)
        norm = l2_norm_coeffs(e_tilde.half_coeffs, ts.period_T)
        tracker.record(f_k, norm)
        k += 1
        if norm == 0.0:
            break
        scale = l2_norm_coeffs(f_k.half_coeffs, ts.period_T)
        if tracker.stop_on_growth(scale, flags):
            break
        if k >= cfg.max_iterations_K and norm <= PRECISION_FLOOR * scale:
            # further passes only shuffle rounding noise
            flags.append("precision-floor")
            break
        if not (k < cfg.max_iterations_K or norm > cfg.epsilon):
            break
        if k >= cfg.hard_cap:
            flags.append("hard-cap-reached")
            break
    return tracker.finish(f_k, flags)


def reconstruct_bia(
    ts: TimeSequence,
    sigma,
    reference: BandlimitedSignal | None = None,
    grids: ReconstructionGrids | None = None,
):
    """Single-pass bandlimited interpolation reconstruction."""
    t_grid, u_grid = _prepare(ts, sigma, grids)
    u_n, h_n = h_samples(ts)
    tracker = _Tracker("BIA", reference, t_grid, ts, sigma)
    flags = []
    tracker.start()
    h_delta = sinc_interpolate_h(u_n, h_n, u_grid, ts.alpha)
    f_delta = _warp_back(h_delta, t_grid, flags)
    f_tilde = lowpass_signal(f_delta, t_grid, sigma)
    tracker.record(f_tilde, l2_norm_coeffs(f_tilde.half_coeffs, ts.period_T))
    return tracker.finish(f_tilde, flags)


def _voronoi_cells(times, period_T):
    t = np.asarray(times, dtype=float)
    nxt = np.append(t[1:], t[0] + period_T)
    right = 0.5 * (t + nxt)
    left = np.roll(right, 1)
    left[0] -= period_T
    return left, right


def _step_function_coeffs(values, left, right, period_T, kmax):
    """Fourier coefficients ``c_0..c_kmax`` of the step function equal to ``values[n]`` on ``[left[n], right[n])``."""
    k = np.arange(1, kmax + 1)
    w = 2.0 * np.pi * k / period_T
    ea = np.exp(-1j * np.outer(w, np.mod(left, period_T)))
    eb = np.exp(-1j * np.outer(w, np.mod(left, period_T) + (right - left)))
    c = np.empty(kmax + 1, dtype=complex)
    c[0] = np.dot(values, right - left) / period_T
    c[1:] = ((ea - eb) @ values) / (1j * w * period_T)
    return c


def reconstruct_voronoi(
    ts: TimeSequence,
    sigma,
    max_iterations=10,
    reference: BandlimitedSignal | None = None,
    grids: ReconstructionGrids | None = None,
):
    """Frame iteration ``f_{k+1} = f_k + P_sigma Q_V (f(t_n) - f_k(t_n))`` from ``f_0 = 0``.

    ``Q_V`` holds each residual constant on the Voronoi cell of its sample
    (cell edges at the midpoints of consecutive instants); ``P_sigma`` keeps
    the harmonics inside the band.  The step function's Fourier coefficients
    are computed in closed form.
    """
    if int(max_iterations) != max_iterations or max_iterations < 0:
        raise InvalidParameterError("max_iterations must be a non-negative integer")
    t_grid, _ = _prepare(ts, sigma, grids)
    kmax = harmonic_limit(sigma, ts.period_T)
    t_n, v_n = nonuniform_samples(ts)
    left, right = _voronoi_cells(t_n, ts.period_T)
    tracker = _Tracker("Voronoi", reference, t_grid, ts, sigma)
    f_k = _zero_like(ts.period_T, sigma)
    flags = []
    # v_n = n Delta - alpha t_n is only known to the rounding of n Delta
    noise = 4.0 * np.finfo(float).eps * float(np.max(np.abs(ts.levels * ts.delta)))
    for _ in range(int(max_iterations)):
        tracker.start()
        resid = v_n - f_k(t_n)
        if float(np.max(np.abs(resid))) <= noise:
            break
        half = _step_function_coeffs(resid, left, right, ts.period_T, kmax)
        corr = BandlimitedSignal.from_half_coeffs(half, ts.period_T, sigma)
        f_k = _add(f_k, corr)
        tracker.record(f_k, l2_norm_coeffs(half, ts.period_T))
        if tracker.stop_on_growth(l2_norm_coeffs(f_k.half_coeffs, ts.period_T), flags):
            break
    return tracker.finish(f_k, flags)
