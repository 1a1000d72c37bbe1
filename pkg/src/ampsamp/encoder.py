"""Delta-ramp encoder: the crossing times of ``alpha t + f(t)`` with levels ``n Delta``."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InvalidParameterError, SlopeTooSmallError
from .ramp_transform import DEFAULT_MAX_ITER, DEFAULT_TOL, invert_g
from .signal_model import BandlimitedSignal

__all__ = [
    "EncoderConfig",
    "TimeSequence",
    "DensityReport",
    "encode",
    "h_samples",
    "nonuniform_samples",
    "check_density",
    "samples_per_period",
]


def samples_per_period(alpha, delta, period_T, rtol=1e-9):
    """N = alpha T / Delta, which must be a positive integer."""
    ratio = alpha * period_T / delta
    n = int(round(ratio))
    if n < 1 or abs(ratio - n) > rtol * max(1.0, abs(ratio)):
        raise ConfigError(
            f"alpha*T/delta = {ratio:.12g} is not a positive integer; "
            "the levels would not repeat with the signal period"
        )
    return n


@dataclass(frozen=True)
class EncoderConfig:
    alpha: float
    delta: float

    def __post_init__(self):
        if not self.delta > 0:
            raise ConfigError(f"delta must be positive, got {self.delta}")
        if not self.alpha > 0:
            raise ConfigError(f"alpha must be positive for level-aligned encoding, got {self.alpha}")

    @classmethod
    def from_count(cls, alpha, count, period_T):
        """Config with ``count`` samples per period: Delta = alpha T / count."""
        return cls(float(alpha), float(alpha) * period_T / int(count))

    def validate(self, f: BandlimitedSignal):
        if not abs(self.alpha) > f.deriv_bound:
            raise SlopeTooSmallError(
                f"|alpha|={self.alpha:.6g} must exceed the derivative bound {f.deriv_bound:.6g}"
            )
        return samples_per_period(self.alpha, self.delta, f.period_T)


@dataclass(frozen=True)
class TimeSequence:
    """Crossing instants of one period, ``g(times[n]) = levels[n] * delta``."""

    levels: np.ndarray
    times: np.ndarray
    config: EncoderConfig
    period_T: float

    def __post_init__(self):
        lv = np.asarray(self.levels, dtype=int).copy()
        tm = np.asarray(self.times, dtype=float).copy()
        if lv.shape != tm.shape or lv.ndim != 1 or lv.size < 2:
            raise InvalidParameterError("levels and times must be matching 1-d arrays of length >= 2")
        if np.any(np.diff(tm) <= 0):
            raise InvalidParameterError("times must be strictly increasing")
        lv.setflags(write=False)
        tm.setflags(write=False)
        object.__setattr__(self, "levels", lv)
        object.__setattr__(self, "times", tm)

    @property
    def count(self):
        return self.times.size

    @property
    def alpha(self):
        return self.config.alpha

    @property
    def delta(self):
        return self.config.delta

    def gaps(self):
        """Consecutive gaps over one period, including the wrap-around gap."""
        t = self.times
        return np.diff(np.append(t, t[0] + self.period_T))

    # -- wire formats -------------------------------------------------
    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "t_n"])
        for n, t in zip(self.levels, self.times):
            w.writerow([int(n), repr(float(t))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text, config: EncoderConfig, period_T):
        rows = list(csv.DictReader(io.StringIO(text)))
        return cls(
            np.array([int(r["n"]) for r in rows]),
            np.array([float(r["t_n"]) for r in rows]),
            config,
            float(period_T),
        )

    def to_dict(self):
        return {
            "config": {"alpha": self.config.alpha, "delta": self.config.delta},
            "period_T": self.period_T,
            "levels": [int(n) for n in self.levels],
            "times": [float(t) for t in self.times],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d):
        cfg = EncoderConfig(float(d["config"]["alpha"]), float(d["config"]["delta"]))
        return cls(np.array(d["levels"]), np.array(d["times"], dtype=float), cfg, float(d["period_T"]))

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def encode(f: BandlimitedSignal, cfg: EncoderConfig, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Encode one period of ``f``: ``t_n = g^{-1}(n Delta)`` for ``n = 0..N-1``.

    Each level is an independent root solve, so errors do not accumulate
    along the sequence.
    """
    n = cfg.validate(f)
    levels = np.arange(n)
    times = invert_g(f, cfg.alpha, levels * cfg.delta, tol=tol, max_iter=max_iter)
    return TimeSequence(levels, np.asarray(times), cfg, f.period_T)


def h_samples(ts: TimeSequence):
    """Uniform amplitude samples ``(n Delta, t_n - n Delta / alpha)``."""
    u = ts.levels * ts.delta
    return u, ts.times - u / ts.alpha


def nonuniform_samples(ts: TimeSequence):
    """Nonuniform time samples ``(t_n, n Delta - alpha t_n)`` of the source signal."""
    return ts.times, ts.levels * ts.delta - ts.alpha * ts.times


@dataclass(frozen=True)
class DensityReport:
    max_gap: float
    min_gap: float
    mean_gap: float
    nyquist_gap: float
    satisfies: bool

    @property
    def density_ratio(self):
        """Average sampling density over the Landau density sigma/pi."""
        return self.nyquist_gap / self.mean_gap


def check_density(ts: TimeSequence, sigma):
    """Compare the largest sampling gap with the Nyquist gap ``pi / sigma``."""
    gaps = ts.gaps()
    nyq = math.pi / sigma
    mx = float(gaps.max())
    return DensityReport(mx, float(gaps.min()), float(gaps.mean()), nyq, mx < nyq)
