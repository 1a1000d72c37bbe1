"""Empirical checks of the spectral behaviour of h = M_alpha f.

Periodic surrogate: the Fourier transform of h is replaced by its Fourier
coefficients at ``xi_k = k / period_U`` (cycles per unit amplitude).
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from ._fourier import coeffs_from_samples
from .errors import InsufficientPointsError, InvalidParameterError
from .ramp_transform import AmplitudeTimeFunction

__all__ = [
    "SpectralDecayBound",
    "decay_exponent_a",
    "spectrum_of_h",
    "default_fit_range",
    "fit_decay",
    "check_nonbandlimited",
    "spectrum_csv",
]

NUMERICAL_FLOOR = 1e-13
MIN_FIT_POINTS = 8


@dataclass(frozen=True)
class SpectralDecayBound:
    """Fitted envelope ``|h^(xi)| <= fitted_C exp(-2 pi xi fitted_b)``.

    ``a`` is the analytic decay scale for the given alpha, A, sigma (``nan``
    when those are not supplied).
    """

    a: float
    alpha: float
    A: float
    sigma: float
    fitted_b: float
    fitted_C: float
    fit_range: tuple

    def to_json(self):
        d = asdict(self)
        d["fit_range"] = list(self.fit_range)
        return json.dumps(d, indent=2, sort_keys=True)


def decay_exponent_a(alpha, A, sigma):
    """``a = (|alpha|/sigma) log(|alpha|/(A sigma)) - (|alpha| - A sigma)/sigma``."""
    if not (A > 0 and sigma > 0 and abs(alpha) > A * sigma):
        raise InvalidParameterError("need |alpha| > A * sigma > 0")
    aa = abs(alpha)
    return aa / sigma * math.log(aa / (A * sigma)) - (aa - A * sigma) / sigma


def spectrum_of_h(h: AmplitudeTimeFunction):
    """Magnitudes of the Fourier coefficients of one period of h, for ``xi_k = k / period_U``, ``k >= 0``."""
    c = coeffs_from_samples(h.values)
    xi = np.arange(c.size) / abs(h.period_U)
    return xi, np.abs(c)


def spectrum_csv(xi, mag):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["xi", "magnitude"])
    for x, m in zip(xi, mag):
        w.writerow([repr(float(x)), repr(float(m))])
    return buf.getvalue()


def default_fit_range(xi, mag, band_edge_xi, floor=1e-12):
    """From twice the source band edge up to the first bin below ``floor`` times the peak."""
    xi = np.asarray(xi)
    mag = np.asarray(mag)
    lo = 2.0 * band_edge_xi
    peak = mag.max(initial=0.0)
    below = np.nonzero((xi >= lo) & (mag < floor * peak))[0]
    hi = xi[below[0]] if below.size else xi[-1]
    return float(lo), float(hi)


def fit_decay(spectrum, fit_range, alpha=math.nan, A=math.nan, sigma=math.nan):
    """Least-squares fit of ``log|h^(xi)|`` against ``xi`` over ``fit_range``.

    ``fitted_b = -slope / (2 pi)``.  ``fitted_C`` is the smallest constant
    making ``C exp(-2 pi xi b)`` an upper envelope of the fitted points, so
    the returned pair is a bound of the same form as the analytic one.
    Points at or below the numerical floor (``1e-13`` of the peak) are
    excluded; fewer than eight remaining points is an error.
    """
    xi, mag = (np.asarray(x, dtype=float) for x in spectrum)
    lo, hi = fit_range
    peak = mag.max(initial=0.0)
    sel = (xi >= lo) & (xi <= hi) & (mag > NUMERICAL_FLOOR * peak)
    if np.count_nonzero(sel) < MIN_FIT_POINTS:
        raise InsufficientPointsError(
            f"{np.count_nonzero(sel)} usable points in fit range, need {MIN_FIT_POINTS}"
        )
    x = xi[sel]
    y = np.log(mag[sel])
    slope, intercept = np.polyfit(x, y, 1)
    b = -slope / (2.0 * math.pi)
    log_c = float(np.max(y - slope * x))
    try:
        a = decay_exponent_a(alpha, A, sigma)
    except InvalidParameterError:
        a = math.nan
    return SpectralDecayBound(
        a=a,
        alpha=float(alpha),
        A=float(A),
        sigma=float(sigma),
        fitted_b=float(b),
        fitted_C=math.exp(log_c),
        fit_range=(float(lo), float(hi)),
    )


def check_nonbandlimited(h: AmplitudeTimeFunction, sigma_test):
    """True when h carries energy above ``sigma_test`` (rad per unit u) beyond the numerical floor.

    The test is ``sqrt(E_out / E_total) > 10 * 1e-13``; a zero h is
    bandlimited.
    """
    xi, mag = spectrum_of_h(h)
    w = 2.0 * math.pi * xi
    energy = mag ** 2
    energy[1:] *= 2.0
    total = float(energy.sum())
    if total == 0.0:
        return False
    out = float(energy[w > sigma_test * (1 + 1e-9)].sum())
    return math.sqrt(out / total) > 10.0 * NUMERICAL_FLOOR
