"""Periodic bandlimited test signals.

Signals are real trigonometric polynomials of period ``T`` whose harmonics
satisfy ``2 pi |k| / T <= sigma``.  They can be evaluated exactly at any real
time, which is what the encoder and the decoders rely on.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from ._fourier import trig_eval, trig_sample_periodic
from .errors import InvalidParameterError

__all__ = [
    "UniformGrid",
    "BandlimitedSignal",
    "synth_bandlimited_noise",
    "eval",
    "eval_derivative",
    "harmonic_limit",
]

# Dense scans run at this multiple of the Nyquist point count 2K+1.
OVERSAMPLE = 16


@dataclass(frozen=True)
class UniformGrid:
    """``count`` points ``start + j * step``."""

    start: float
    step: float
    count: int

    def __post_init__(self):
        if not self.step > 0:
            raise InvalidParameterError(f"grid step must be positive, got {self.step}")
        if int(self.count) != self.count or self.count < 2:
            raise InvalidParameterError(f"grid count must be an integer >= 2, got {self.count}")

    @classmethod
    def periodic(cls, period, count, start=0.0):
        """Grid covering exactly one period (endpoint excluded)."""
        return cls(float(start), float(period) / int(count), int(count))

    @property
    def span(self):
        return self.step * self.count

    def points(self):
        return self.start + self.step * np.arange(self.count)


def harmonic_limit(sigma, period_T):
    """Largest harmonic index k with 2 pi k / T <= sigma."""
    return int(math.floor(sigma * period_T / (2.0 * math.pi) * (1.0 + 1e-12)))


def _refine_extremum(coeffs, period, t0, order):
    """Newton on the derivative of ``p^(order)`` starting at ``t0``; returns |p^(order)| at the optimum."""
    t = np.array(t0, dtype=float)
    for _ in range(30):
        d1 = trig_eval(coeffs, period, t, order + 1)
        d2 = trig_eval(coeffs, period, t, order + 2)
        ok = np.abs(d2) > 0
        step = np.where(ok, d1 / np.where(ok, d2, 1.0), 0.0)
        # keep Newton local to the grid cell it started in
        bound = period / (8.0 * OVERSAMPLE * max(len(coeffs), 1))
        step = np.clip(step, -bound, bound)
        t = t - step
        if np.all(np.abs(step) < 1e-15 * period):
            break
    return np.abs(trig_eval(coeffs, period, t, order))


def certified_sup(coeffs, period, order=0):
    """Supremum of |p^(order)| over one period.

    A dense scan at 16x Nyquist locates the extremum, then Newton refines
    the best few candidates so the result is exact to rounding.
    """
    c = np.asarray(coeffs, dtype=complex)
    kmax = c.size - 1
    if kmax == 0:
        return abs(c[0].real) if order == 0 else 0.0
    if order:
        c = c * (2j * np.pi * np.arange(c.size) / period) ** order
    count = max(64, OVERSAMPLE * (2 * kmax + 1))
    vals = np.abs(trig_sample_periodic(c, period, count))
    grid_max = float(vals.max())
    cand = np.argsort(vals)[-8:]
    t0 = cand * (period / count)
    refined = _refine_extremum(c, period, t0, 0)
    return float(max(grid_max, refined.max()))


@dataclass(frozen=True)
class BandlimitedSignal:
    """Real ``period_T``-periodic signal bandlimited to ``sigma`` rad/s.

    ``coeffs`` holds ``c_k`` for ``k = -K..K`` (conjugate symmetric).
    ``amp_bound_A`` bounds ``sup|f|`` and ``deriv_bound`` bounds ``sup|f'|``.
    """

    period_T: float
    coeffs: np.ndarray
    sigma: float
    amp_bound_A: float
    deriv_bound: float
    _half: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim != 1 or c.size % 2 != 1:
            raise InvalidParameterError("coeffs must have odd length 2K+1")
        if not self.period_T > 0 or not self.sigma > 0:
            raise InvalidParameterError("period_T and sigma must be positive")
        kmax = c.size // 2
        if 2 * math.pi * kmax / self.period_T > self.sigma * (1 + 1e-12):
            raise InvalidParameterError(
                f"harmonic {kmax} lies outside the band sigma={self.sigma}"
            )
        if not np.allclose(c[::-1], np.conj(c), rtol=0, atol=1e-14 * max(1.0, np.abs(c).max())):
            raise InvalidParameterError("coeffs are not conjugate symmetric")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        half = c[kmax:].copy()
        half[0] = half[0].real
        half.setflags(write=False)
        object.__setattr__(self, "_half", half)

    # -- construction -------------------------------------------------
    @classmethod
    def from_half_coeffs(cls, half, period_T, sigma=None, amp_bound_A=None, deriv_bound=None):
        """Build from ``c_0..c_K``; missing bounds are measured.

        When ``deriv_bound`` is not given it is the Bernstein bound
        ``A * sigma``.
        """
        half = np.asarray(half, dtype=complex).copy()
        half[0] = half[0].real
        kmax = half.size - 1
        if sigma is None:
            sigma = 2 * math.pi * max(kmax, 1) / period_T
        full = np.concatenate([np.conj(half[:0:-1]), half])
        if amp_bound_A is None:
            amp_bound_A = certified_sup(half, period_T)
        if deriv_bound is None:
            deriv_bound = amp_bound_A * sigma
        return cls(float(period_T), full, float(sigma), float(amp_bound_A), float(deriv_bound))

    @classmethod
    def zero(cls, period_T=1.0, sigma=2 * math.pi):
        return cls.from_half_coeffs([0.0], period_T, sigma, 0.0, 0.0)

    @classmethod
    def constant(cls, value, period_T=1.0, sigma=2 * math.pi):
        """Constant signal; its derivative bound is exactly zero, so any nonzero slope is admissible."""
        a = abs(float(value))
        return cls.from_half_coeffs([float(value)], period_T, sigma, a, 0.0)

    @classmethod
    def tone(cls, amplitude, harmonic, period_T=1.0, phase=0.0, sigma=None, offset=0.0):
        """``offset + amplitude * cos(2 pi harmonic t / T + phase)``."""
        half = np.zeros(harmonic + 1, dtype=complex)
        half[0] += offset
        half[harmonic] += 0.5 * amplitude * np.exp(1j * phase)
        if sigma is None:
            sigma = 2 * math.pi * harmonic / period_T
        return cls.from_half_coeffs(half, period_T, sigma)

    # -- evaluation ---------------------------------------------------
    @property
    def k_max(self):
        return self.coeffs.size // 2

    @property
    def half_coeffs(self):
        return self._half

    def __call__(self, t):
        return trig_eval(self._half, self.period_T, t)

    def derivative(self, t, order=1):
        return trig_eval(self._half, self.period_T, t, order)

    def sample(self, grid: UniformGrid):
        """Values on ``grid``; FFT path when the grid spans exactly one period."""
        if math.isclose(grid.span, self.period_T, rel_tol=1e-12) and grid.count > 2 * self.k_max:
            return trig_sample_periodic(self._half, self.period_T, grid.count, grid.start)
        return self(grid.points())

    def dense_grid(self, factor=OVERSAMPLE):
        return UniformGrid.periodic(self.period_T, max(64, factor * (2 * self.k_max + 1)))

    def scaled(self, factor):
        return BandlimitedSignal.from_half_coeffs(
            self._half * factor,
            self.period_T,
            self.sigma,
            self.amp_bound_A * abs(factor),
            self.deriv_bound * abs(factor),
        )

    def measured_deriv_bound(self):
        return certified_sup(self._half, self.period_T, order=1)

    def energy(self):
        """Mean of |f|^2 over one period (Parseval)."""
        return float(np.sum(np.abs(self.coeffs) ** 2))

    # -- serialization ------------------------------------------------
    def to_dict(self):
        return {
            "period_T": self.period_T,
            "sigma": self.sigma,
            "amp_bound_A": self.amp_bound_A,
            "deriv_bound": self.deriv_bound,
            "coeffs": [[float(z.real), float(z.imag)] for z in self.coeffs],
        }

    @classmethod
    def from_dict(cls, d):
        try:
            coeffs = np.array([complex(re, im) for re, im in d["coeffs"]])
            period_T = float(d["period_T"])
            sigma = float(d["sigma"])
            amp = float(d["amp_bound_A"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidParameterError(f"malformed signal description: {exc}") from exc
        deriv = float(d.get("deriv_bound", amp * sigma))
        return cls(period_T, coeffs, sigma, amp, deriv)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def synth_bandlimited_noise(seed, sigma, period_T=1.0, target_A=1.0):
    """White noise bandlimited to ``sigma`` rad/s, rescaled to ``sup|f| = target_A``.

    Harmonics ``|k| <= floor(sigma T / 2pi)`` get iid complex Gaussian
    coefficients (the DC term a real Gaussian); the result is deterministic
    in ``seed``.
    """
    if not (sigma > 0 and period_T > 0 and target_A > 0):
        raise InvalidParameterError("sigma, period_T and target_A must be positive")
    kmax = harmonic_limit(sigma, period_T)
    if kmax < 1:
        raise InvalidParameterError("sigma * period_T / (2 pi) must be at least 1")
    rng = np.random.default_rng(seed)
    half = np.empty(kmax + 1, dtype=complex)
    half[0] = rng.standard_normal()
    half[1:] = (rng.standard_normal(kmax) + 1j * rng.standard_normal(kmax)) / math.sqrt(2.0)
    sup = certified_sup(half, period_T)
    half *= target_A / sup
    return BandlimitedSignal.from_half_coeffs(half, period_T, sigma, float(target_A))


def eval(f: BandlimitedSignal, t):  # noqa: A001 - mirrors the operation name
    return f(t)


def eval_derivative(f: BandlimitedSignal, t):
    return f.derivative(t)
