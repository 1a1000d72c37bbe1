import json
import math

import numpy as np
import pytest

from ampsamp.errors import InsufficientPointsError, InvalidParameterError
from ampsamp.ramp_transform import AmplitudeTimeFunction, map_f_to_h
from ampsamp.signal_model import BandlimitedSignal, UniformGrid
from ampsamp.spectral import (
    check_nonbandlimited,
    decay_exponent_a,
    default_fit_range,
    fit_decay,
    spectrum_csv,
    spectrum_of_h,
)
from conftest import noise


def pipeline_h(f, ratio, count=4096):
    alpha = ratio * f.amp_bound_A * f.sigma
    h, _ = map_f_to_h(f, alpha, UniformGrid.periodic(alpha * f.period_T, count))
    return h, alpha


class TestDecayExponent:
    def test_values(self):
        assert decay_exponent_a(math.e, 1.0, 1.0) == pytest.approx(1.0, abs=1e-15)
        assert decay_exponent_a(2.0, 1.0, 1.0) == pytest.approx(0.38629436, abs=1e-8)
        assert decay_exponent_a(-2.0, 1.0, 1.0) == decay_exponent_a(2.0, 1.0, 1.0)

    def test_limit_at_threshold(self):
        assert 0 < decay_exponent_a(1.0 + 1e-6, 1.0, 1.0) < 1e-11

    def test_increasing_in_alpha(self):
        a = [decay_exponent_a(c, 1.0, 1.0) for c in (1.5, 3.0, 10.0)]
        assert a[0] < a[1] < a[2]

    @pytest.mark.parametrize("alpha,A,sigma", [(1.0, 1.0, 1.0), (0.5, 1.0, 1.0), (2.0, 0.0, 1.0), (2.0, 1.0, -1.0)])
    def test_invalid(self, alpha, A, sigma):
        with pytest.raises(InvalidParameterError):
            decay_exponent_a(alpha, A, sigma)


class TestSpectrum:
    def test_constant_has_only_dc(self):
        h = AmplitudeTimeFunction(UniformGrid.periodic(4.0, 64), np.full(64, -0.25), 4.0, 4.0)
        xi, mag = spectrum_of_h(h)
        assert mag[0] == pytest.approx(0.25)
        assert np.all(mag[1:] < 1e-16)
        np.testing.assert_allclose(xi[:3], [0.0, 0.25, 0.5])

    def test_tone_has_single_bin(self):
        g = UniformGrid.periodic(2.0, 64)
        h = AmplitudeTimeFunction(g, 0.2 * np.cos(2 * np.pi * 5 * g.points() / 2.0), 2.0, 2.0)
        _, mag = spectrum_of_h(h)
        assert np.argmax(mag) == 5
        assert mag[5] == pytest.approx(0.1)
        assert np.all(np.delete(mag, 5) < 1e-15)

    def test_pipeline_decays_to_floor(self):
        f = noise(0, 5)
        h, _ = pipeline_h(f, 3.0, 1024)
        _, mag = spectrum_of_h(h)
        assert np.max(mag[-50:]) < 1e-13 * np.max(mag)

    def test_csv(self):
        text = spectrum_csv(np.array([0.0, 0.5]), np.array([1.0, 0.25]))
        assert text == "xi,magnitude\n0.0,1.0\n0.5,0.25\n"


class TestFitDecay:
    def test_exact_log_linear(self):
        b0 = 0.37
        xi = np.arange(40) / 8.0
        mag = 2.0 * np.exp(-2 * np.pi * b0 * xi)
        fit = fit_decay((xi, mag), (0.0, xi[-1]))
        assert fit.fitted_b == pytest.approx(b0, abs=1e-6)
        assert fit.fitted_C == pytest.approx(2.0, rel=1e-9)

    def test_constant_rejected(self):
        xi = np.arange(32) / 4.0
        mag = np.zeros(32)
        mag[0] = 1.0
        with pytest.raises(InsufficientPointsError):
            fit_decay((xi, mag), (0.5, xi[-1]))

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_pipeline_envelope(self, seed):
        f = noise(seed, 5)
        h, alpha = pipeline_h(f, 3.0)
        xi, mag = spectrum_of_h(h)
        fr = default_fit_range(xi, mag, f.sigma / (2 * math.pi * alpha))
        fit = fit_decay((xi, mag), fr, alpha, f.amp_bound_A, f.sigma)
        assert fit.fitted_b > 0
        sel = (xi >= fr[0]) & (xi <= fr[1])
        bound = fit.fitted_C * np.exp(-2 * np.pi * xi[sel] * fit.fitted_b) * 1.05
        assert np.all(mag[sel] <= bound)
        # regression guard on the fit, not a proof of the bound
        assert fit.fitted_b >= 0.5 * fit.a

    def test_json(self):
        f = noise(0, 5)
        h, alpha = pipeline_h(f, 3.0, 1024)
        xi, mag = spectrum_of_h(h)
        fit = fit_decay((xi, mag), default_fit_range(xi, mag, f.sigma / (2 * math.pi * alpha)), alpha, 1.0, f.sigma)
        d = json.loads(fit.to_json())
        assert {"a", "fitted_b", "fitted_C", "fit_range"} <= set(d)


class TestNonbandlimited:
    def test_constant_is_bandlimited(self):
        f = BandlimitedSignal.constant(1.0, sigma=2 * math.pi * 5)
        h, alpha = pipeline_h(f, 3.0, 512)
        assert not check_nonbandlimited(h, f.sigma / alpha)

    def test_zero_is_bandlimited(self):
        h = AmplitudeTimeFunction(UniformGrid.periodic(3.0, 32), np.zeros(32), 3.0, 3.0)
        assert not check_nonbandlimited(h, 1.0)

    def test_tone_is_not(self):
        f = BandlimitedSignal.tone(1.0, 3)
        h, alpha = pipeline_h(f, 2.0, 1024)
        assert check_nonbandlimited(h, f.sigma / alpha)
