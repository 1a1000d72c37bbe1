"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -s`` to see the lines inline; they are
also collected into the terminal summary.
"""

import math
import time

import numpy as np
import pytest

from ampsamp.encoder import EncoderConfig, encode, h_samples
from ampsamp.experiments import ExperimentConfig, results_csv, run_experiment, summary_csv
from ampsamp.ramp_transform import forward_g, fixed_point_iterates, lp_norm, map_f_to_h, map_h_to_f
from ampsamp.reconstruction import IASRConfig, reconstruct_bia, reconstruct_iasr, sinc_interpolate_h
from ampsamp.signal_model import BandlimitedSignal, UniformGrid
from ampsamp.spectral import check_nonbandlimited, default_fit_range, fit_decay, spectrum_of_h
from conftest import noise

RATIOS = (1.2, 2.0, 10.0)


def h_of(f, alpha, count):
    h, _ = map_f_to_h(f, alpha, UniformGrid.periodic(abs(alpha) * f.period_T, count))
    return h


def test_01_round_trip(criterion):
    t0 = time.perf_counter()
    worst = 0.0
    t_grid = UniformGrid.periodic(1.0, 1000)
    for k in (5, 20):
        for seed in range(25):
            f = noise(seed, k)
            for r in RATIOS:
                h = h_of(f, r * f.deriv_bound, 4096)
                worst = max(worst, float(np.max(np.abs(map_h_to_f(h, t_grid) - f.sample(t_grid)))))
    elapsed = time.perf_counter() - t0
    criterion(1, "round-trip identity", worst < 1e-9 and elapsed < 60.0,
              f"50 signals x 3 slopes, max error {worst:.2e} (< 1e-9), {elapsed:.1f} s (< 60 s)")


def test_02_encoder_exactness(criterion):
    worst, violations = 0.0, 0
    for seed in range(100):
        k = 5 if seed % 2 == 0 else 20
        r = (1.2, 2.0, 10.0)[seed % 3]
        f = noise(seed, k)
        alpha = r * f.deriv_bound
        ts = encode(f, EncoderConfig.from_count(alpha, 4 * k + 4, 1.0))
        worst = max(worst, float(np.max(np.abs(forward_g(f, alpha, ts.times) - ts.levels * ts.delta))) / alpha)
        gaps = ts.gaps()
        lo, hi = ts.delta / (alpha + f.deriv_bound), ts.delta / (alpha - f.deriv_bound)
        violations += int(np.sum((gaps < lo * (1 - 1e-12)) | (gaps > hi * (1 + 1e-12))))
    criterion(2, "encoder exactness", worst < 1e-10 and violations == 0,
              f"100 seeds, max |g(t_n)-n delta|/alpha {worst:.2e} (< 1e-10), gap violations {violations}")


def test_03_contraction_rate(criterion):
    ok = total = 0
    worst_excess = -math.inf
    for k in (5, 20):
        for r in (1.2, 2.0, 4.0, 10.0):
            for seed in range(3):
                f = noise(seed, k)
                alpha = r * f.deriv_bound
                u = UniformGrid.periodic(alpha, 512).points()
                it = fixed_point_iterates(f, alpha, u, 8)
                fixed = -alpha * map_f_to_h(f, alpha, UniformGrid.periodic(alpha, 512))[0].values
                err = np.abs(it - fixed)
                prev, nxt = err[:-1], err[1:]
                mask = prev > 1e-11
                ratio = nxt[mask] / prev[mask]
                limit = f.amp_bound_A * f.sigma / alpha + 0.05
                ok += int(np.sum(ratio <= limit))
                total += ratio.size
                worst_excess = max(worst_excess, float(np.max(ratio - limit)))
    frac = ok / total
    criterion(3, "contraction rate", frac >= 0.99,
              f"{frac * 100:.2f}% of {total} ratios within A sigma/|alpha| + 0.05 (>= 99%), worst margin {worst_excess:+.3f}")


def test_04_norm_identities(criterion):
    n = 4096
    tg = UniformGrid.periodic(1.0, n)
    worst_p, worst_iso = 0.0, 0.0
    for i in range(20):
        k = 5 if i % 2 == 0 else 20
        f1, f2 = noise(2 * i, k), noise(2 * i + 1, k)
        alpha = 2.0 * f1.deriv_bound
        h1, h2 = h_of(f1, alpha, n), h_of(f2, alpha, n)
        for f, h in ((f1, h1), (f2, h2)):
            fv = f.sample(tg)
            for p in (1, 2, 4, math.inf):
                expo = 1.0 if math.isinf(p) else 1.0 - 1.0 / p
                lhs = lp_norm(h.values, h.grid, p) * alpha ** expo
                rhs = lp_norm(fv, tg, p)
                worst_p = max(worst_p, abs(lhs - rhs) / rhs)
        d_h = lp_norm(h1.values - h2.values, h1.grid, 1)
        d_f = lp_norm(f1.sample(tg) - f2.sample(tg), tg, 1)
        worst_iso = max(worst_iso, abs(d_h - d_f) / d_f)
    criterion(4, "norm identities", worst_p < 1e-3 and worst_iso < 1e-3,
              f"p in {{1,2,4,inf}} max rel dev {worst_p:.2e}, L1 isometry over 20 pairs {worst_iso:.2e} (< 1e-3)")


def test_05_constant_case(criterion):
    eps = np.finfo(float).eps
    worst = 0.0
    for A in (1.0, -0.3, 2.5, 1e-3):
        for alpha in (1.5, 7.0, -4.0, 100.0):
            f = BandlimitedSignal.constant(A)
            h = h_of(f, alpha, 256)
            worst = max(worst, float(np.max(np.abs(h.values + A / alpha))) / (eps * abs(A / alpha)))
    criterion(5, "constant-case exactness", worst <= 4.0, f"max error {worst:.1f} ulp of |A/alpha| (<= 4)")


def test_06_bia_aliasing_law(criterion):
    k, m, counts = 5, 4096, (12, 24, 48, 96)
    worst_r2, worst_slope = math.inf, -math.inf
    for seed in range(5):
        f = noise(seed, k)
        alpha = 3.0 * f.amp_bound_A * f.sigma
        h = h_of(f, alpha, m)
        inv_d, log_err = [], []
        for n in counts:
            ts = encode(f, EncoderConfig.from_count(alpha, n, 1.0))
            u, hn = h_samples(ts)
            h_d = sinc_interpolate_h(u, hn, h.grid, alpha)
            inv_d.append(1.0 / ts.delta)
            log_err.append(math.log(float(np.max(np.abs(h_d.values - h.values)))))
        x, y = np.array(inv_d), np.array(log_err)
        slope, icpt = np.polyfit(x, y, 1)
        r2 = 1.0 - np.sum((y - (slope * x + icpt)) ** 2) / np.sum((y - y.mean()) ** 2)
        worst_r2, worst_slope = min(worst_r2, r2), max(worst_slope, slope)
    criterion(6, "BIA aliasing law", worst_r2 >= 0.98 and worst_slope < 0,
              f"5 seeds, delta0/{{1,2,4,8}}, min R^2 {worst_r2:.4f} (>= 0.98), max slope {worst_slope:.3g} (< 0)")


def test_07_iasr_first_iteration_is_bia(criterion):
    worst, n_cfg = 0.0, 0
    for k in (5, 20):
        for r in (1.5, 3.0, 8.0):
            for mult in (1.2, 2.0, 4.0):
                n = int(round(mult * 2 * k))
                for seed in range(2):
                    f = noise(seed, k)
                    ts = encode(f, EncoderConfig.from_count(r * f.deriv_bound, n, 1.0))
                    a = reconstruct_bia(ts, f.sigma, reference=f).ser_per_iteration[0]
                    b = reconstruct_iasr(ts, f.sigma, IASRConfig(1, 0.0, hard_cap=1), reference=f).ser_per_iteration[0]
                    worst = max(worst, abs(a - b))
                    n_cfg += 1
    criterion(7, "IASR iteration 1 equals BIA", worst < 1e-6, f"{n_cfg} configs, max |SER diff| {worst:.2e} dB (< 1e-6)")


def _bench(kind, ratios, iterations):
    sigma = 2 * math.pi * 20
    return ExperimentConfig.from_dict({
        "name": kind,
        "experiment_kind": kind,
        "seeds": list(range(20)),
        "signal": {"sigma_rad_s": sigma, "period_s": 1.0, "amp_bound": 1.0},
        "encoder": {"alpha_ratio": list(ratios), "samples_per_period": [48]},
        "decoders": {"iasr": True, "voronoi": True},
        "iterations": iterations,
    })


def test_08_near_landau_iasr_beats_voronoi(criterion):
    t0 = time.perf_counter()
    cfg = _bench("sweep_delta", [8.0], 10)
    assert cfg.points[0].density_ratio == pytest.approx(1.2)
    b = run_experiment(cfg)
    elapsed = time.perf_counter() - t0
    iasr, vor = b.mean_trace(0, "iasr"), b.mean_trace(0, "voronoi")
    gap = iasr[0] - vor[0]
    reach = np.nonzero(vor >= iasr[0])[0]
    first = int(reach[0]) + 1 if reach.size else None
    passed = not b.failures and gap >= 3.0 and first is not None and first >= 3 and elapsed < 600
    criterion(8, "near-Landau IASR vs Voronoi", passed,
              f"IASR it1 {iasr[0]:.1f} dB, Voronoi it1 {vor[0]:.1f} dB (gap {gap:.1f} >= 3), "
              f"Voronoi matches at iteration {first} (>= 3), {elapsed:.0f} s")


def test_09_fixed_density_sweep(criterion):
    cfg = _bench("fixed_density", [16.0, 32.0, 64.0], 5)
    b = run_experiment(cfg)
    vor = np.array([b.mean_trace(p, "voronoi") for p in range(3)])
    iasr5 = [b.mean_trace(p, "iasr")[4] for p in range(3)]
    spread = float(np.max(vor.max(axis=0) - vor.min(axis=0)))
    increasing = iasr5[0] < iasr5[1] < iasr5[2]
    criterion(9, "fixed-density sweep", not b.failures and spread < 1.0 and increasing,
              f"Voronoi max spread {spread:.2f} dB (< 1), IASR it5 "
              + " < ".join(f"{v:.1f}" for v in iasr5) + " dB")


def test_10_spectral_decay(criterion):
    ratios = (1.5, 3.0, 10.0)
    ok_pos = ok_inc = ok_nbl = True
    table = []
    for k in (5, 20):
        for seed in range(3):
            f = noise(seed, k)
            bs = []
            for r in ratios:
                alpha = r * f.amp_bound_A * f.sigma
                h = h_of(f, alpha, 4096 if k == 5 else 16384)
                xi, mag = spectrum_of_h(h)
                fr = default_fit_range(xi, mag, f.sigma / (2 * math.pi * alpha))
                bs.append(fit_decay((xi, mag), fr, alpha, f.amp_bound_A, f.sigma).fitted_b)
                ok_nbl &= bool(check_nonbandlimited(h, f.sigma / alpha))
            ok_pos &= all(b > 0 for b in bs)
            ok_inc &= bs[0] < bs[1] < bs[2]
            table.append(bs)
    const_flags = []
    for A in (1.0, -0.5):
        f = BandlimitedSignal.constant(A, sigma=2 * math.pi * 5)
        for r in ratios:
            alpha = r * abs(A) * f.sigma
            const_flags.append(check_nonbandlimited(h_of(f, alpha, 512), f.sigma / alpha))
    ok_const = not any(const_flags)
    t = np.array(table)
    criterion(10, "spectral decay", ok_pos and ok_inc and ok_nbl and ok_const,
              "fitted_b ranges " + ", ".join(f"{lo:.2f}-{hi:.2f}" for lo, hi in zip(t.min(0), t.max(0)))
              + f" for alpha/(A sigma) in {ratios}; positive {ok_pos}, increasing {ok_inc}, "
              f"non-bandlimited {ok_nbl}, constant flagged bandlimited {ok_const}")


def test_11_determinism(criterion):
    d = {
        "name": "det",
        "experiment_kind": "sweep_alpha",
        "seeds": [0, 1, 2],
        "signal": {"sigma_rad_s": 2 * math.pi * 5, "period_s": 1.0, "amp_bound": 1.0},
        "encoder": {"alpha_ratio": [1.5, 4.0], "samples_per_period": [12]},
        "iterations": 4,
    }
    outs = []
    for workers in (1, 1, 2):
        b = run_experiment(ExperimentConfig.from_dict(d), workers=workers)
        outs.append((results_csv(b).encode(), summary_csv(b).encode()))
    criterion(11, "determinism", outs[0] == outs[1] == outs[2],
              f"3 reruns (workers 1, 1, 2), {len(outs[0][0])} result bytes identical")
