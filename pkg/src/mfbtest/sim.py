"""Data-generating processes and the Monte Carlo size/power harness.

Every replication ``r`` draws from its own generator
``PCG64(SeedSequence(master_seed, spawn_key=(stream, r)))``, so results do not
depend on how replications are distributed across worker processes.
"""

from __future__ import annotations

import csv
import io
import json
import math
import platform
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.signal import lfilter

from .exceptions import ConfigurationError, InvalidParameterError, MfbError
from .longrun import DEFAULT_HAC, HacConfig
from .stattests import aq_test, chi2_isf, gsm_test, ljung_box, mfb_test, normalize_variant

__all__ = [
    "DGP_IDS",
    "DgpSpec",
    "TestSpec",
    "McResult",
    "PowerStudy",
    "SweepPoint",
    "make_dgp",
    "parse_test",
    "replication_rng",
    "simulate",
    "null_for",
    "run_size_study",
    "run_power_study",
    "run_scale_sweep",
    "RNG_ALGORITHM",
    "results_csv",
    "size_table_csv",
    "power_table_csv",
    "relative_power_csv",
    "sweep_csv",
    "manifest",
]

RNG_ALGORITHM = "numpy PCG64 seeded by SeedSequence(master_seed, spawn_key=(stream, replication))"

STREAM_MAIN = 0
STREAM_NULL = 1

NOMINAL_LEVEL = 0.05

# Default parameters; numbers are the model coefficients used in the size study.
_DEFAULTS = {
    "N1": {},
    "N2": {"omega": 0.001, "alpha": 0.05, "beta": 0.90},
    "N3": {"omega": 0.001, "alpha": 0.05, "beta": 0.90},
    "N4": {"omega": 0.001, "abs_coef": 0.5, "sign_coef": -0.2, "beta": 0.95, "shock_lag": 0},
    "N5": {},
    "N6": {},
    "N7": {"omega": 0.05, "alpha": 0.05, "beta": 0.90},
    "N8": {"omega": 0.001, "alpha": 0.1096508, "beta": 0.90, "sigma2_0": 0.002},
    "N9": {"omega": 0.0, "alpha": 0.1096508, "beta": 0.90, "sigma2_0": 1.0},
    "N10": {"phi": 0.8},
    "N11": {"b": 0.5},
    "N12": {"b": 0.5},
    "A1": {"beta1": 0.0, "beta2": 0.0},
    "A2": {"beta1": 0.0, "beta2": 0.0},
    "A3": {"beta1": 0.0, "beta2": 0.0},
    "A4": {"beta1": 0.0, "beta2": 0.0},
    "AR": {"k": 1, "beta": 0.0},
}

DGP_IDS = tuple(_DEFAULTS)

_INNOVATION = {"N3": "t5", "N5": "mixture"}

_BURN_IN = {"N2": 500, "N3": 500, "N4": 500, "N10": 500, "N11": 500, "N12": 500,
            "A1": 500, "A2": 500, "AR": 500}

INNOVATIONS = ("gaussian", "t5", "t5_standardized", "mixture")


@dataclass(frozen=True)
class DgpSpec:
    """A data-generating process: model id, parameters, innovation law, length, burn-in."""

    id: str
    params: tuple = ()
    innovation: str = "gaussian"
    T: int = 100
    burn_in: int = 0

    def param(self, name):
        return dict(self.params)[name]

    @property
    def label(self) -> str:
        p = dict(self.params)
        if self.id in ("A1", "A2", "A3", "A4"):
            return f"{self.id}({p['beta1']:g},{p['beta2']:g})"
        if self.id == "AR":
            return f"AR({int(p['k'])},{p['beta']:g})"
        return self.id


def make_dgp(id: str, T: int = 100, innovation: Optional[str] = None, burn_in: Optional[int] = None,
             **params) -> DgpSpec:
    """Build a validated :class:`DgpSpec` with model defaults filled in."""
    key = str(id).upper()
    if key not in _DEFAULTS:
        raise InvalidParameterError(f"unknown model {id!r}; expected one of {', '.join(DGP_IDS)}")
    unknown = set(params) - set(_DEFAULTS[key])
    if unknown:
        raise InvalidParameterError(f"unknown parameters for {key}: {sorted(unknown)}")
    merged = {**_DEFAULTS[key], **params}
    innovation = innovation or _INNOVATION.get(key, "gaussian")
    if innovation not in INNOVATIONS:
        raise InvalidParameterError(f"unknown innovation {innovation!r}")
    if burn_in is None:
        burn_in = _BURN_IN.get(key, 0)
    if int(T) < 2:
        raise InvalidParameterError("T must be >= 2")
    if burn_in < 0:
        raise InvalidParameterError("burn_in must be >= 0")
    _check_params(key, merged)
    return DgpSpec(key, tuple(sorted(merged.items())), innovation, int(T), int(burn_in))


def _check_params(key, p):
    if key in ("N2", "N3", "N7", "N8", "N9"):
        if p["omega"] < 0 or p["alpha"] < 0 or p["beta"] < 0:
            raise InvalidParameterError(f"{key}: GARCH coefficients must be nonnegative")
        if key in ("N2", "N3", "N7") and p["alpha"] + p["beta"] >= 1:
            raise InvalidParameterError(f"{key}: alpha + beta must be < 1 for a stationary GARCH")
        if key in ("N8", "N9") and not p["sigma2_0"] > 0:
            raise InvalidParameterError(f"{key}: sigma2_0 must be positive")
    if key == "N4":
        if not abs(p["beta"]) < 1:
            raise InvalidParameterError("N4: |beta| must be < 1")
        if p["shock_lag"] not in (0, 1):
            raise InvalidParameterError("N4: shock_lag must be 0 or 1")
    if key == "N10" and not 0 < abs(p["phi"]) < 1:
        raise InvalidParameterError("N10: 0 < |phi| < 1 required")
    if key in ("A1", "A2", "A3", "A4"):
        lag2 = 2 if key in ("A1", "A3") else 3
        coefs = np.zeros(lag2 + 1)
        coefs[0] = 1.0
        coefs[1] -= p["beta1"]
        coefs[lag2] -= p["beta2"]
        if np.any(np.abs(np.roots(coefs)) >= 1):
            raise InvalidParameterError(f"{key}: AR coefficients are not stationary")
    if key == "AR":
        if int(p["k"]) != p["k"] or p["k"] < 1:
            raise InvalidParameterError("AR: lag k must be a positive integer")
        if not abs(p["beta"]) < 1:
            raise InvalidParameterError("AR: |beta| must be < 1")


def replication_rng(master_seed: int, r: int, stream: int = STREAM_MAIN) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(master_seed),
                                                                      spawn_key=(int(stream), int(r)))))


def _innovations(rng, kind, n):
    if kind == "gaussian":
        return rng.standard_normal(n)
    if kind == "t5":
        return rng.standard_t(5, n)
    if kind == "t5_standardized":
        return rng.standard_t(5, n) * math.sqrt(3.0 / 5.0)
    if kind == "mixture":
        pick = rng.random(n) < 0.5
        return rng.standard_normal(n) * np.where(pick, math.sqrt(0.5), 1.0)
    raise InvalidParameterError(f"unknown innovation {kind!r}")


def _garch(eps, omega, alpha, beta, sigma2_0):
    n = len(eps)
    y = np.empty(n)
    s2 = sigma2_0
    prev = 0.0
    for t in range(n):
        if t:
            s2 = omega + alpha * prev * prev + beta * s2
        prev = math.sqrt(s2) * eps[t]
        y[t] = prev
    return y


def _egarch(eps, omega, a, g, b, shock_lag):
    n = len(eps)
    y = np.empty(n)
    logs2 = (omega + a * math.sqrt(2.0 / math.pi)) / (1.0 - b)
    for t in range(n):
        if shock_lag == 0:
            e = eps[t]
        else:
            e = eps[t - 1] if t else 0.0
        logs2 = omega + a * abs(e) + g * e + b * logs2
        y[t] = math.exp(0.5 * logs2) * eps[t]
    return y


def simulate(spec: DgpSpec, seed) -> np.ndarray:
    """Draw one series of length ``spec.T`` (burn-in discarded).

    ``seed`` may be an int, a SeedSequence or a Generator.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    p = dict(spec.params)
    T, burn = spec.T, spec.burn_in
    n = T + burn
    eps = _innovations(rng, spec.innovation, n)
    key = spec.id
    if key in ("N1", "N5"):
        y = eps
    elif key in ("N2", "N3"):
        ev = np.mean(eps * eps) if spec.innovation == "t5" else 1.0
        s2 = p["omega"] / max(1.0 - p["alpha"] * ev - p["beta"], 1e-8)
        y = _garch(eps, p["omega"], p["alpha"], p["beta"], s2)
    elif key == "N4":
        y = _egarch(eps, p["omega"], p["abs_coef"], p["sign_coef"], p["beta"], int(p["shock_lag"]))
    elif key == "N6":
        y = np.sqrt(np.arange(1, n + 1)) * eps
    elif key == "N7":
        s2 = p["omega"] / (1.0 - p["alpha"] - p["beta"])
        u = _garch(eps, p["omega"], p["alpha"], p["beta"], s2)
        x = np.arange(1, n + 1) / n
        tau = ((0 < x) & (x < 0.5)).astype(float) + 2.0 * ((0.5 <= x) & (x < 1)).astype(float)
        y = tau * u
    elif key in ("N8", "N9"):
        y = _garch(eps, p["omega"], p["alpha"], p["beta"], p["sigma2_0"])
    elif key == "N10":
        phi = p["phi"]
        y = lfilter([1.0, -1.0 / phi], [1.0, -phi], eps)
    elif key == "N11":
        y = np.empty(n)
        for t in range(n):
            y[t] = eps[t] + (p["b"] * eps[t - 1] * y[t - 2] if t >= 2 else 0.0)
    elif key == "N12":
        y = eps.copy()
        y[2:] += p["b"] * eps[1:-1] * eps[:-2]
    elif key in ("A1", "A2", "A3", "A4"):
        lag2 = 2 if key in ("A1", "A3") else 3
        a = np.zeros(lag2 + 1)
        a[0] = 1.0
        a[1] -= p["beta1"]
        a[lag2] -= p["beta2"]
        e = eps if key in ("A1", "A2") else np.sqrt(np.arange(1, n + 1)) * eps
        y = lfilter([1.0], a, e)
    elif key == "AR":
        k = int(p["k"])
        a = np.zeros(k + 1)
        a[0] = 1.0
        a[k] = -p["beta"]
        y = lfilter([1.0], a, eps)
    else:  # pragma: no cover - guarded by make_dgp
        raise InvalidParameterError(f"unknown model {key!r}")
    return np.ascontiguousarray(y[burn:])


def null_for(spec: DgpSpec) -> DgpSpec:
    """Null model matching an alternative: N6 for the heteroskedastic A3/A4, N1 otherwise."""
    if spec.id in ("A3", "A4", "N6"):
        return make_dgp("N6", T=spec.T)
    return make_dgp("N1", T=spec.T)


@dataclass(frozen=True)
class TestSpec:
    """One test configuration, e.g. ``MFB_2^g`` with the Haar wavelet."""

    test: str
    m_or_K: int = 2
    variant: str = "none"
    wavelet: str = "Haar"
    hac: HacConfig = DEFAULT_HAC

    __test__ = False

    @property
    def label(self) -> str:
        if self.test in ("MFB", "GSM"):
            suffix = "" if self.wavelet == "Haar" else f"@{self.wavelet}"
            return f"{self.test}_{self.m_or_K}^{self.variant}{suffix}"
        if self.test == "LjungBox":
            return f"Q_{self.m_or_K}"
        return "AQ"

    @property
    def df(self) -> int:
        if self.test == "MFB":
            return 2**self.m_or_K - 1
        if self.test in ("GSM", "LjungBox"):
            return self.m_or_K
        return 1

    @property
    def nominal_critical_value(self) -> float:
        return chi2_isf(NOMINAL_LEVEL, self.df)

    def run(self, y):
        if self.test == "MFB":
            return mfb_test(y, self.wavelet, self.m_or_K, self.variant, self.hac)
        if self.test == "GSM":
            return gsm_test(y, self.wavelet, self.m_or_K, self.variant, self.hac)
        if self.test == "LjungBox":
            return ljung_box(y, self.m_or_K)
        return aq_test(y)


_TEST_RE = re.compile(r"^(MFB|GSM)_?(\d+)\^?(g|triangle|e)(?:@(\w+))?$", re.IGNORECASE)


def parse_test(label: str, hac: HacConfig = DEFAULT_HAC) -> TestSpec:
    """Parse ``MFB_2^g``, ``GSM_4^e@D4``, ``Q_5`` or ``AQ``."""
    s = str(label).strip()
    mt = _TEST_RE.match(s)
    if mt:
        from .filters import get_filter

        wavelet = get_filter(mt.group(4) or "Haar").name
        return TestSpec(mt.group(1).upper(), int(mt.group(2)), normalize_variant(mt.group(3)), wavelet, hac)
    mq = re.match(r"^Q_?(\d+)$", s, re.IGNORECASE)
    if mq:
        return TestSpec("LjungBox", int(mq.group(1)))
    if s.upper() == "AQ":
        return TestSpec("AQ", 1)
    raise ConfigurationError(f"cannot parse test label {label!r}")


def _as_tests(tests):
    return [t if isinstance(t, TestSpec) else parse_test(t) for t in tests]


@dataclass(frozen=True)
class McResult:
    dgp: DgpSpec
    test: TestSpec
    replications: int
    rejections: int
    rejection_rate: float
    size_adjusted: bool
    critical_value_used: float
    master_seed: int
    n_errors: int = 0
    rng: str = RNG_ALGORITHM


def _stats_chunk(dgp, tests, master_seed, stream, indices):
    out = np.full((len(indices), len(tests)), np.nan)
    for row, r in enumerate(indices):
        y = simulate(dgp, replication_rng(master_seed, r, stream))
        for col, t in enumerate(tests):
            try:
                out[row, col] = t.run(y).statistic
            except MfbError:
                pass
    return out


def simulate_statistics(dgp: DgpSpec, tests, reps: int, master_seed: int,
                        stream: int = STREAM_MAIN, workers: int = 1) -> np.ndarray:
    """Statistics matrix (``reps x len(tests)``); NaN marks a failed replication."""
    tests = _as_tests(tests)
    reps = int(reps)
    if reps < 1:
        raise ConfigurationError("reps must be >= 1")
    indices = list(range(reps))
    workers = max(1, int(workers))
    if workers == 1 or reps < 2:
        return _stats_chunk(dgp, tests, master_seed, stream, indices)
    n_chunks = min(reps, workers * 4)
    chunks = [indices[i::n_chunks] for i in range(n_chunks)]
    out = np.empty((reps, len(tests)))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_stats_chunk, dgp, tests, master_seed, stream, c) for c in chunks]
        for c, fut in zip(chunks, futures):
            out[c] = fut.result()
    return out


def _rate(stats, cv, skip_errors):
    errors = int(np.isnan(stats).sum())
    valid = stats[~np.isnan(stats)]
    rejections = int(np.sum(valid > cv))
    denom = len(valid) if skip_errors else len(stats)
    return rejections, denom, errors


def _results_for(dgp, tests, stats, cvs, adjusted, master_seed, skip_errors):
    results = []
    for j, t in enumerate(tests):
        rej, denom, errors = _rate(stats[:, j], cvs[j], skip_errors)
        rate = rej / denom if denom else float("nan")
        results.append(McResult(dgp, t, denom, rej, rate, adjusted, float(cvs[j]), int(master_seed), errors))
    return results


def run_size_study(dgps: Sequence, tests: Sequence, T: int, reps: int, master_seed: int,
                   workers: int = 1, skip_errors: bool = False) -> list:
    """Rejection rates at the nominal 5% chi-squared critical value for every (dgp, test)."""
    tests = _as_tests(tests)
    cvs = [t.nominal_critical_value for t in tests]
    results = []
    for d in dgps:
        spec = d if isinstance(d, DgpSpec) else make_dgp(d, T=T)
        spec = replace(spec, T=int(T))
        stats = simulate_statistics(spec, tests, reps, master_seed, STREAM_MAIN, workers)
        results.extend(_results_for(spec, tests, stats, cvs, False, master_seed, skip_errors))
    return results


def empirical_critical_value(null_stats: np.ndarray, level: float = NOMINAL_LEVEL) -> float:
    valid = null_stats[~np.isnan(null_stats)]
    if valid.size == 0:
        raise ConfigurationError("no valid null replications")
    return float(np.quantile(valid, 1.0 - level))


@dataclass
class PowerStudy:
    results: list
    critical_values: dict  # (null dgp id, T, test label) -> critical value
    reference: str
    relative: list = field(default_factory=list)  # (dgp label, other test label, rel. power)


def run_power_study(alt_dgps: Sequence, tests: Sequence, T: int, reps: int, null_reps: int,
                    master_seed: int, workers: int = 1, skip_errors: bool = False,
                    reference: Optional[str] = None) -> PowerStudy:
    """Size-adjusted power: empirical 5% critical values from ``null_reps`` null draws.

    One critical value is used per (test, T, null model); the null model is N1
    for homoskedastic alternatives and N6 for A3/A4. Relative power is
    ``rate(reference) / rate(other) - 1`` per alternative.
    """
    tests = _as_tests(tests)
    if int(null_reps) < 2000:
        raise ConfigurationError("null_reps must be >= 2000 to estimate a 95th percentile")
    specs = [replace(d if isinstance(d, DgpSpec) else make_dgp(d, T=T), T=int(T)) for d in alt_dgps]
    cv_cache = {}
    results = []
    for spec in specs:
        null = null_for(spec)
        if null.id not in cv_cache:
            stats = simulate_statistics(null, tests, null_reps, master_seed, STREAM_NULL, workers)
            cv_cache[null.id] = [empirical_critical_value(stats[:, j]) for j in range(len(tests))]
        cvs = cv_cache[null.id]
        stats = simulate_statistics(spec, tests, reps, master_seed, STREAM_MAIN, workers)
        results.extend(_results_for(spec, tests, stats, cvs, True, master_seed, skip_errors))
    ref = reference or tests[0].label
    critical_values = {(nid, int(T), t.label): cv for nid, cvs in cv_cache.items()
                       for t, cv in zip(tests, cvs)}
    study = PowerStudy(results, critical_values, ref)
    study.relative = relative_power(results, ref)
    return study


def relative_power(results, reference: str) -> list:
    by_dgp = {}
    for r in results:
        by_dgp.setdefault(r.dgp, {})[r.test.label] = r.rejection_rate
    rows = []
    for dgp, rates in by_dgp.items():
        if reference not in rates:
            continue
        for label, rate in rates.items():
            if label == reference:
                continue
            rel = rates[reference] / rate - 1.0 if rate > 0 else float("inf")
            rows.append((dgp, label, rel))
    return rows


@dataclass(frozen=True)
class SweepPoint:
    k: int
    T: int
    m: int
    test: str
    beta: float
    power: float
    critical_value: float


def run_scale_sweep(k: int, betas: Sequence[float], m_values: Sequence[int] = (1, 2, 3, 4, 5),
                    families: Sequence[str] = ("MFB", "GSM"), T: int = 100, reps: int = 2000,
                    null_reps: int = 2000, master_seed: int = 0, wavelet: str = "Haar",
                    variant: str = "g", workers: int = 1) -> list:
    """Size-adjusted power curves of the ``family_m^variant`` tests against ``y_t = beta y_{t-k} + e_t``."""
    tests = [TestSpec(f, int(m), normalize_variant(variant), wavelet) for m in m_values for f in families]
    null = make_dgp("N1", T=T)
    null_stats = simulate_statistics(null, tests, null_reps, master_seed, STREAM_NULL, workers)
    cvs = [empirical_critical_value(null_stats[:, j]) for j in range(len(tests))]
    points = []
    for beta in betas:
        spec = make_dgp("AR", T=T, k=int(k), beta=float(beta))
        stats = simulate_statistics(spec, tests, reps, master_seed, STREAM_MAIN, workers)
        for j, t in enumerate(tests):
            rej, denom, _ = _rate(stats[:, j], cvs[j], False)
            points.append(SweepPoint(int(k), int(T), t.m_or_K, t.label, float(beta), rej / denom, cvs[j]))
    return points


# ---------------------------------------------------------------------------
# CSV / JSON emitters. Runtime never enters a CSV so tables stay byte-stable.


def _csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerows(rows)
    return buf.getvalue()


def _pct(x) -> str:
    return f"{100.0 * x:.2f}"


def results_csv(results) -> str:
    """One row per (model, test) cell with raw counts and the exact rate."""
    rows = [["dgp", "innovation", "T", "test", "wavelet", "replications", "rejections", "n_errors",
             "rejection_rate", "size_adjusted", "critical_value", "master_seed"]]
    for r in results:
        rows.append([r.dgp.label, r.dgp.innovation, r.dgp.T, r.test.label, r.test.wavelet, r.replications,
                     r.rejections, r.n_errors, repr(r.rejection_rate), int(r.size_adjusted),
                     repr(r.critical_value_used), r.master_seed])
    return _csv(rows)


def size_table_csv(results) -> str:
    """Rejection rates in percent: tests down the rows, (model, T) across the columns."""
    cols, tests, cells = [], [], {}
    for r in results:
        col = f"{r.dgp.label} T={r.dgp.T}"
        if col not in cols:
            cols.append(col)
        if r.test.label not in tests:
            tests.append(r.test.label)
        cells[(r.test.label, col)] = _pct(r.rejection_rate)
    rows = [["test"] + cols]
    rows += [[t] + [cells.get((t, c), "") for c in cols] for t in tests]
    return _csv(rows)


def power_table_csv(results) -> str:
    """Size-adjusted power in percent on the (beta1, beta2) grid, one block per (model, T, test)."""
    blocks = {}
    for r in results:
        p = dict(r.dgp.params)
        if "beta1" not in p:
            continue
        key = (r.dgp.id, r.dgp.T, r.test.label)
        blocks.setdefault(key, {})[(p["beta1"], p["beta2"])] = _pct(r.rejection_rate)
    rows = []
    for (model, T, label), cells in blocks.items():
        b1s = sorted({k[0] for k in cells})
        b2s = sorted({k[1] for k in cells})
        rows.append([f"{model} T={T} {label}", "beta1\\beta2"] + [f"{b:.2f}" for b in b2s])
        rows += [["", f"{b1:.2f}"] + [cells.get((b1, b2), "") for b2 in b2s] for b1 in b1s]
    return _csv(rows)


def relative_power_csv(study: "PowerStudy") -> str:
    rows = [["dgp", "T", "reference", "test", "relative_power"]]
    for dgp, label, rel in study.relative:
        rows.append([dgp.label, dgp.T, study.reference, label, f"{rel:.4f}"])
    return _csv(rows)


def sweep_csv(points) -> str:
    rows = [["k", "T", "m", "test", "beta", "power", "critical_value"]]
    for p in points:
        rows.append([p.k, p.T, p.m, p.test, repr(p.beta), repr(p.power), repr(p.critical_value)])
    return _csv(rows)


def manifest(config: dict, runtime_seconds: float, outputs=()) -> str:
    """JSON record of the run: configuration, seed, RNG identity, library versions and runtime."""
    import scipy

    from . import __version__

    doc = {
        "config": config,
        "master_seed": config.get("seed"),
        "rng": RNG_ALGORITHM,
        "versions": {"mfbtest": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version()},
        "runtime_seconds": round(float(runtime_seconds), 3),
        "outputs": list(outputs),
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
