"""Real trigonometric polynomials stored by their non-negative harmonics.

A real ``period``-periodic trigonometric polynomial is

    p(x) = c_0 + 2 Re sum_{k>=1} c_k exp(i 2 pi k x / period)

so only ``c_0 .. c_K`` are kept (``c_0`` real).  Everything that needs exact
off-grid evaluation (signals, Dirichlet interpolants, lowpass iterates) goes
through these helpers.
"""

import math

import numpy as np

# Bounds the size of the (points x harmonics) phase matrix built per chunk.
_CHUNK_ELEMENTS = 1 << 20


def trig_eval(coeffs, period, x, order=0):
    """Evaluate the ``order``-th derivative of a real trig polynomial at ``x``.

    Harmonics are split as ``k = q * B + r`` with ``B ~ sqrt(K)``, so each
    point needs ``B + K/B`` complex exponentials and the rest is one matrix
    product.
    """
    c = np.asarray(coeffs, dtype=complex)
    x = np.asarray(x, dtype=float)
    shape = x.shape
    x = x.ravel()
    k = np.arange(c.size)
    if order:
        c = c * (2j * np.pi * k / period) ** order
    if c.size == 1:
        return np.full(shape, c[0].real if order == 0 else 0.0)
    kmax = c.size - 1
    block = max(1, int(math.isqrt(kmax)))
    nq = -(-kmax // block)
    # row q holds c_{1 + q*B + r}, r = 0..B-1
    table = np.zeros(nq * block, dtype=complex)
    table[:kmax] = c[1:]
    table = table.reshape(nq, block)
    w = 2.0 * np.pi / period
    r = np.arange(block)
    q = np.arange(nq) * block + 1
    out = np.empty(x.size)
    step = max(1, _CHUNK_ELEMENTS // (block + nq))
    for lo in range(0, x.size, step):
        # reduce the phase before multiplying by k to keep precision for large x
        xr = np.mod(x[lo:lo + step], period)
        inner = np.exp(1j * w * np.outer(xr, r)) @ table.T
        outer = np.exp(1j * w * np.outer(xr, q))
        out[lo:lo + step] = c[0].real + 2.0 * np.einsum("ij,ij->i", inner, outer).real
    return out.reshape(shape)


def trig_sample_periodic(coeffs, period, count, start=0.0):
    """Samples on ``start + j * period / count`` via an inverse FFT (needs count > 2K)."""
    c = np.asarray(coeffs, dtype=complex)
    kmax = c.size - 1
    if count <= 2 * kmax:
        return trig_eval(c, period, start + np.arange(count) * (period / count))
    if start != 0.0:
        c = c * np.exp(2j * np.pi * np.arange(c.size) * start / period)
    spec = np.zeros(count // 2 + 1, dtype=complex)
    spec[: c.size] = c
    spec[0] = c[0].real
    return np.fft.irfft(spec, n=count) * count


def coeffs_from_samples(values, period=None):
    """Dirichlet-interpolation coefficients of one period of uniform samples.

    The Nyquist bin of an even-length sequence is split evenly between
    ``+N/2`` and ``-N/2`` so that the interpolant is real and reproduces the
    periodised sinc kernel.
    """
    v = np.asarray(values, dtype=float)
    n = v.size
    c = np.fft.rfft(v) / n
    if n % 2 == 0:
        c[-1] = 0.5 * c[-1].real
    c[0] = c[0].real
    return c


def shift_coeffs(coeffs, period, start):
    """Coefficients of ``x -> p(x - start)``."""
    c = np.asarray(coeffs, dtype=complex)
    return c * np.exp(-2j * np.pi * np.arange(c.size) * start / period)


def trim_coeffs(coeffs, rel=1e-15):
    """Drop trailing harmonics below ``rel * max|c|`` (the rounding floor of the FFT).

    The pointwise evaluation error is at most twice the summed magnitude of
    the dropped tail.
    """
    c = np.asarray(coeffs, dtype=complex)
    mag = np.abs(c)
    peak = mag.max(initial=0.0)
    if peak == 0.0:
        return c[:1]
    keep = np.nonzero(mag > rel * peak)[0]
    return c[: keep[-1] + 1]


def l2_norm_coeffs(coeffs, period):
    """L^2 norm over one period, by Parseval."""
    c = np.asarray(coeffs, dtype=complex)
    energy = abs(c[0]) ** 2 + 2.0 * np.sum(np.abs(c[1:]) ** 2)
    return float(np.sqrt(period * energy))
