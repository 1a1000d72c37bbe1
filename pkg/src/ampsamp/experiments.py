"""Config-driven SER benchmarks for the delta-ramp decoders.

A config describes a list of parameter points ``(sigma, alpha, delta)`` and a
list of seeds.  Every (point, seed) pair draws a bandlimited white-noise
source, encodes it and runs the enabled decoders against it.  Results are
keyed by ``(point, seed, decoder)`` so the output does not depend on the order
in which workers finish.

Config files are JSON with the unit in each field name::

    {
      "name": "delta-sweep",
      "experiment_kind": "sweep_delta",
      "seeds": [0, 1, 2],
      "signal": {"sigma_rad_s": 125.66, "period_s": 1.0, "amp_bound": 1.0},
      "encoder": {"alpha_ratio": [8.0], "samples_per_period": [48, 96]},
      "decoders": {"iasr": true, "voronoi": true, "bia": true},
      "iterations": 10
    }

``alpha_per_s`` may replace ``alpha_ratio`` (slope in units of ``A sigma``)
and ``delta_amp`` may replace ``samples_per_period``.  Lists of length one
broadcast against the others.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .encoder import EncoderConfig, encode, samples_per_period
from .errors import AmpSampError, ConfigError
from .reconstruction import IASRConfig, ReconstructionGrids, reconstruct_bia, reconstruct_iasr, reconstruct_voronoi
from .signal_model import harmonic_limit, synth_bandlimited_noise

__all__ = [
    "KINDS",
    "ExperimentConfig",
    "ParameterPoint",
    "ResultBundle",
    "load_config",
    "run_experiment",
    "emit",
    "results_csv",
    "summary_csv",
    "timing_csv",
    "DEFAULT_SEEDS",
]

KINDS = ("sweep_delta", "sweep_alpha", "sweep_bandwidth", "fixed_density", "timing")
DECODERS = ("bia", "iasr", "voronoi")
DEFAULT_SEEDS = tuple(range(20))
NEAR_LANDAU = (1.0, 1.3)

RESULT_COLUMNS = ["experiment", "seed", "alpha", "delta", "sigma", "decoder", "iteration", "ser_db", "wall_time_s"]


@dataclass(frozen=True)
class ParameterPoint:
    sigma: float
    alpha: float
    delta: float
    period_T: float
    amp_bound: float

    @property
    def count(self):
        return samples_per_period(self.alpha, self.delta, self.period_T)

    @property
    def density_ratio(self):
        """Average sample rate over the Landau rate ``sigma / pi``."""
        return (self.count / self.period_T) / (self.sigma / math.pi)

    @property
    def regime(self):
        r = self.density_ratio
        if r < NEAR_LANDAU[0]:
            return "sub-Landau"
        return "near-Landau" if r <= NEAR_LANDAU[1] else "oversampled"


def _as_list(value, name):
    if value is None:
        return None
    vals = list(value) if isinstance(value, (list, tuple)) else [value]
    if not vals:
        raise ConfigError(f"{name} must not be empty")
    try:
        return [float(v) for v in vals]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must be numeric: {exc}") from exc


def _broadcast(lists):
    n = max(len(v) for v in lists.values())
    for name, v in lists.items():
        if len(v) not in (1, n):
            raise ConfigError(f"{name} has {len(v)} entries, expected 1 or {n}")
    return [{k: (v[0] if len(v) == 1 else v[i]) for k, v in lists.items()} for i in range(n)]


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    experiment_kind: str
    seeds: tuple
    points: tuple
    decoders: tuple = DECODERS
    iterations: int = 10
    t_count: int | None = None
    u_count: int | None = None
    record_wall_time: bool = False
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    @classmethod
    def from_dict(cls, d):
        """Parse and validate; every error is a :class:`ConfigError` raised before any computation."""
        try:
            return cls._parse(d)
        except ConfigError:
            raise
        except (AmpSampError, TypeError, ValueError, KeyError, AttributeError) as exc:
            raise ConfigError(f"invalid config: {exc}") from exc

    @classmethod
    def _parse(cls, d):
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        kind = d.get("experiment_kind")
        if kind not in KINDS:
            raise ConfigError(f"experiment_kind must be one of {KINDS}, got {kind!r}")
        seeds = d.get("seeds", list(DEFAULT_SEEDS))
        if not isinstance(seeds, list) or not seeds or not all(isinstance(s, int) and s >= 0 for s in seeds):
            raise ConfigError("seeds must be a non-empty list of non-negative integers")
        if len(set(seeds)) != len(seeds):
            raise ConfigError("seeds must be distinct")
        sig = d.get("signal", {})
        enc = d.get("encoder", {})
        if not isinstance(sig, dict) or not isinstance(enc, dict):
            raise ConfigError("signal and encoder must be JSON objects")
        period = float(sig.get("period_s", 1.0))
        amp = float(sig.get("amp_bound", 1.0))
        if not (period > 0 and amp > 0):
            raise ConfigError("period_s and amp_bound must be positive")
        sigmas = _as_list(sig.get("sigma_rad_s"), "sigma_rad_s")
        if sigmas is None:
            raise ConfigError("signal.sigma_rad_s is required")
        if ("alpha_per_s" in enc) == ("alpha_ratio" in enc):
            raise ConfigError("encoder needs exactly one of alpha_per_s, alpha_ratio")
        if ("delta_amp" in enc) == ("samples_per_period" in enc):
            raise ConfigError("encoder needs exactly one of delta_amp, samples_per_period")
        a_key = "alpha_per_s" if "alpha_per_s" in enc else "alpha_ratio"
        d_key = "delta_amp" if "delta_amp" in enc else "samples_per_period"
        lists = {
            "sigma_rad_s": sigmas,
            a_key: _as_list(enc[a_key], a_key),
            d_key: _as_list(enc[d_key], d_key),
        }
        single = {"sweep_delta": (a_key, "sigma_rad_s"), "sweep_alpha": (d_key, "sigma_rad_s"),
                  "sweep_bandwidth": (a_key, d_key), "fixed_density": ("sigma_rad_s",)}
        for key in single.get(kind, ()):
            if len(lists[key]) != 1:
                raise ConfigError(f"{kind} needs a single value for {key}")
        points = []
        for row in _broadcast(lists):
            s = row["sigma_rad_s"]
            if not s > 0:
                raise ConfigError("sigma_rad_s must be positive")
            if harmonic_limit(s, period) < 1:
                raise ConfigError(f"sigma_rad_s={s} carries no harmonic over period_s={period}")
            alpha = row[a_key] * amp * s if a_key == "alpha_ratio" else row[a_key]
            if not abs(alpha) > amp * s:
                raise ConfigError(f"|alpha|={alpha:.6g} must exceed A*sigma={amp * s:.6g}")
            if d_key == "samples_per_period":
                n = row[d_key]
                if n != int(n) or n < 2:
                    raise ConfigError(f"samples_per_period must be an integer >= 2, got {n}")
                delta = alpha * period / int(n)
            else:
                delta = row[d_key]
            EncoderConfig(alpha, delta)
            samples_per_period(alpha, delta, period)
            points.append(ParameterPoint(float(s), float(alpha), float(delta), period, amp))
        if kind == "fixed_density":
            counts = {p.count for p in points}
            if len(counts) != 1:
                raise ConfigError(f"fixed_density needs alpha*T/delta constant, got {sorted(counts)}")
        dec = d.get("decoders", {k: True for k in DECODERS})
        if not isinstance(dec, dict) or set(dec) - set(DECODERS):
            raise ConfigError(f"decoders must map a subset of {DECODERS} to booleans")
        decoders = tuple(k for k in DECODERS if dec.get(k, False))
        if not decoders:
            raise ConfigError("at least one decoder must be enabled")
        iters = d.get("iterations", 10)
        if not isinstance(iters, int) or iters < 1:
            raise ConfigError("iterations must be a positive integer")
        grids = d.get("grids", {}) or {}
        t_count, u_count = grids.get("t_count"), grids.get("u_count")
        for name, v in (("t_count", t_count), ("u_count", u_count)):
            if v is not None and (not isinstance(v, int) or v < 2):
                raise ConfigError(f"grids.{name} must be an integer >= 2")
        return cls(
            name=str(d.get("name", kind)),
            experiment_kind=kind,
            seeds=tuple(seeds),
            points=tuple(points),
            decoders=decoders,
            iterations=iters,
            t_count=t_count,
            u_count=u_count,
            record_wall_time=bool(d.get("record_wall_time", kind == "timing")),
            raw=json.loads(json.dumps(d)),
        )

    @property
    def grids(self):
        return ReconstructionGrids(self.t_count, self.u_count)


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return ExperimentConfig.from_dict(data)


@dataclass
class RunResult:
    ser_db: list
    wall_time_s: list
    status: str
    flags: list


@dataclass
class ResultBundle:
    config: ExperimentConfig
    runs: dict = field(default_factory=dict)
    failures: dict = field(default_factory=dict)

    def traces(self, point_index, decoder):
        """SER traces of one decoder at one point, one row per successful seed (ragged rows padded with nan)."""
        rows = [self.runs[(point_index, s, decoder)].ser_db
                for s in self.config.seeds if (point_index, s, decoder) in self.runs]
        if not rows:
            return np.empty((0, 0))
        width = max(len(r) for r in rows)
        out = np.full((len(rows), width), np.nan)
        for i, r in enumerate(rows):
            out[i, : len(r)] = r
        return out

    def mean_trace(self, point_index, decoder):
        return _mean_std(self.traces(point_index, decoder))[0]

    def summary(self):
        """``(point_index, decoder, iteration, mean, std, n_seeds)`` rows."""
        out = []
        for p in range(len(self.config.points)):
            for dec in self.config.decoders:
                tr = self.traces(p, dec)
                mean, std = _mean_std(tr)
                for i in range(mean.size):
                    out.append((p, dec, i + 1, float(mean[i]), float(std[i]), int(np.sum(~np.isnan(tr[:, i])))))
        return out


def _mean_std(tr):
    if tr.size == 0:
        return np.empty(0), np.empty(0)
    with np.errstate(invalid="ignore"):
        mean = np.nanmean(tr, axis=0)
        std = np.nanstd(tr, axis=0)
    return mean, std


def _run_one(task):
    cfg, p_index, seed = task
    pt = cfg.points[p_index]
    out = {}
    try:
        f = synth_bandlimited_noise(seed, pt.sigma, pt.period_T, pt.amp_bound)
        ts = encode(f, EncoderConfig(pt.alpha, pt.delta))
        for dec in cfg.decoders:
            if dec == "bia":
                rep = reconstruct_bia(ts, pt.sigma, reference=f, grids=cfg.grids)
            elif dec == "iasr":
                icfg = IASRConfig(max_iterations_K=cfg.iterations, epsilon=0.0,
                                  hard_cap=cfg.iterations)
                rep = reconstruct_iasr(ts, pt.sigma, icfg, reference=f, grids=cfg.grids)
            else:
                rep = reconstruct_voronoi(ts, pt.sigma, cfg.iterations, reference=f, grids=cfg.grids)
            out[dec] = RunResult(list(rep.ser_per_iteration), list(rep.wall_time_per_iteration),
                                 rep.status, list(rep.flags))
    except (AmpSampError, ArithmeticError) as exc:
        return p_index, seed, None, f"{type(exc).__name__}: {exc}"
    return p_index, seed, out, None


def run_experiment(cfg: ExperimentConfig, workers=1):
    """Run every (point, seed) pair; failures are recorded in the bundle and the run continues."""
    tasks = [(cfg, p, s) for p in range(len(cfg.points)) for s in cfg.seeds]
    if workers is None:
        workers = os.cpu_count() or 1
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
            results = list(pool.map(_run_one, tasks))
    else:
        results = [_run_one(t) for t in tasks]
    bundle = ResultBundle(cfg)
    for p, s, out, err in results:
        if err is not None:
            bundle.failures[(p, s)] = err
            continue
        for dec, rr in out.items():
            bundle.runs[(p, s, dec)] = rr
    return bundle


# -- emission ----------------------------------------------------------------

def _num(x):
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def _result_rows(bundle: ResultBundle):
    cfg = bundle.config
    for p, pt in enumerate(cfg.points):
        for s in cfg.seeds:
            for dec in cfg.decoders:
                rr = bundle.runs.get((p, s, dec))
                if rr is None:
                    continue
                for i, val in enumerate(rr.ser_db):
                    wt = _num(rr.wall_time_s[i]) if cfg.record_wall_time else ""
                    yield [cfg.name, s, _num(pt.alpha), _num(pt.delta), _num(pt.sigma), dec, i + 1, _num(val), wt]


def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def results_csv(bundle: ResultBundle):
    """Per-iteration rows; ``wall_time_s`` stays blank unless the config asks for it, keeping reruns byte-identical."""
    return _csv(RESULT_COLUMNS, _result_rows(bundle))


def summary_csv(bundle: ResultBundle):
    cfg = bundle.config
    header = ["experiment", "alpha", "delta", "sigma", "density_ratio", "regime", "decoder",
              "iteration", "ser_mean_db", "ser_std_db", "n_seeds"]
    rows = []
    for p, dec, it, mean, std, n in bundle.summary():
        pt = cfg.points[p]
        rows.append([cfg.name, _num(pt.alpha), _num(pt.delta), _num(pt.sigma), _num(pt.density_ratio),
                     pt.regime, dec, it, _num(mean), _num(std), n])
    return _csv(header, rows)


def timing_csv(bundle: ResultBundle):
    cfg = bundle.config
    rows = []
    for p, pt in enumerate(cfg.points):
        for s in cfg.seeds:
            for dec in cfg.decoders:
                rr = bundle.runs.get((p, s, dec))
                if rr is None:
                    continue
                for i, wt in enumerate(rr.wall_time_s):
                    rows.append([cfg.name, s, _num(pt.alpha), _num(pt.delta), _num(pt.sigma), dec, i + 1, _num(wt)])
    return _csv(["experiment", "seed", "alpha", "delta", "sigma", "decoder", "iteration", "wall_time_s"], rows)


def failures_csv(bundle: ResultBundle):
    cfg = bundle.config
    rows = []
    for (p, s), err in sorted(bundle.failures.items()):
        pt = cfg.points[p]
        rows.append([cfg.name, s, _num(pt.alpha), _num(pt.delta), _num(pt.sigma), err])
    return _csv(["experiment", "seed", "alpha", "delta", "sigma", "error"], rows)


def bundle_json(bundle: ResultBundle):
    cfg = bundle.config
    rows = [dict(zip(RESULT_COLUMNS, r)) for r in _result_rows(bundle)]
    points = [
        {"alpha": pt.alpha, "delta": pt.delta, "sigma": pt.sigma, "samples_per_period": pt.count,
         "density_ratio": pt.density_ratio, "regime": pt.regime}
        for pt in cfg.points
    ]
    summary = [
        {"point": p, "decoder": dec, "iteration": it, "ser_mean_db": _num(m), "ser_std_db": _num(sd), "n_seeds": n}
        for p, dec, it, m, sd, n in bundle.summary()
    ]
    doc = {
        "config": cfg.raw,
        "points": points,
        "rows": rows,
        "summary": summary,
        "failures": [{"point": p, "seed": s, "error": e} for (p, s), e in sorted(bundle.failures.items())],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def emit(bundle: ResultBundle, out_dir, fmt="csv"):
    """Write the bundle to ``out_dir``; returns the written paths.

    ``csv`` writes ``results.csv``, ``summary.csv`` and ``failures.csv``;
    ``json`` writes ``results.json``.  ``timing.csv`` is written for both
    formats and is the only file that differs between reruns.
    """
    if fmt not in ("csv", "json"):
        raise ConfigError(f"unknown format {fmt!r}")
    os.makedirs(out_dir, exist_ok=True)
    files = {"timing.csv": timing_csv(bundle)}
    if fmt == "csv":
        files.update({"results.csv": results_csv(bundle), "summary.csv": summary_csv(bundle),
                      "failures.csv": failures_csv(bundle)})
    else:
        files["results.json"] = bundle_json(bundle)
    paths = []
    for name in sorted(files):
        path = os.path.join(out_dir, name)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(files[name])
        paths.append(path)
    return paths


# -- property checks ---------------------------------------------------------

@dataclass(frozen=True)
class CheckResult:
    check: str
    point: int
    seed: int
    passed: bool
    value: float
    limit: float


def verify_point(pt: ParameterPoint, seed, p_index=0):
    """Round trip, encoder exactness, gap bounds and contraction rate for one (point, seed)."""
    from .ramp_transform import forward_g, map_f_to_h, map_h_to_f
    from .signal_model import UniformGrid

    f = synth_bandlimited_noise(seed, pt.sigma, pt.period_T, pt.amp_bound)
    kmax = f.k_max
    count = max(4096, 64 * (2 * kmax + 1))
    h, rep = map_f_to_h(f, pt.alpha, UniformGrid.periodic(pt.alpha * pt.period_T, count))
    t_grid = UniformGrid.periodic(pt.period_T, count)
    rt = float(np.max(np.abs(map_h_to_f(h, t_grid) - f.sample(t_grid))))
    ts = encode(f, EncoderConfig(pt.alpha, pt.delta))
    resid = float(np.max(np.abs(forward_g(f, pt.alpha, ts.times) - ts.levels * ts.delta)))
    gaps = ts.gaps()
    b = f.deriv_bound
    lo, hi = pt.delta / (pt.alpha + b), pt.delta / (pt.alpha - b)
    slack = 1e-12 * hi
    gap_viol = int(np.sum((gaps < lo - slack) | (gaps > hi + slack)))
    q = pt.amp_bound * pt.sigma / abs(pt.alpha)
    return [
        CheckResult("round-trip", p_index, seed, rt < 1e-9, rt, 1e-9),
        CheckResult("encoder-residual", p_index, seed, resid < 1e-10 * abs(pt.alpha), resid, 1e-10 * abs(pt.alpha)),
        CheckResult("gap-bounds", p_index, seed, gap_viol == 0, float(gap_viol), 0.0),
        CheckResult("contraction", p_index, seed, rep.contraction_ratio_estimate <= q + 0.05,
                    rep.contraction_ratio_estimate, q + 0.05),
    ]


def verify_config(cfg: ExperimentConfig):
    out = []
    for p, pt in enumerate(cfg.points):
        for s in cfg.seeds:
            out.extend(verify_point(pt, s, p))
    return out
