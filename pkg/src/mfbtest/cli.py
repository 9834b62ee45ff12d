"""Command-line front end: CSV ingestion, test battery, simulation studies and filter dumps.

Subcommands::

    mfbtest test prices.csv --transform log_return_100 --out table
    mfbtest simulate --study size --config size.json --out-dir results/
    mfbtest filters --wavelet D4 --scale 2
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__, sim
from .exceptions import (
    ConfigurationError,
    EmptyAfterSlicingError,
    MfbError,
    NonPositivePriceError,
    ParseError,
    SeriesTooShortError,
)
from .filters import get_filter, packet_filters
from .longrun import DEFAULT_HAC, HacConfig
from .stattests import LEVEL, TestReport, aq_test, gsm_test, ljung_box, mfb_test, normalize_variant

__all__ = [
    "IngestSpec",
    "ingest",
    "BatteryRow",
    "run_battery",
    "battery_json",
    "render_table",
    "render_csv",
    "filters_csv",
    "main",
]

FORMATS = ("csv_single_column", "csv_date_value")
TRANSFORMS = ("none", "log_return_100", "diff")
MIN_LENGTH = 30


@dataclass(frozen=True)
class IngestSpec:
    """Where and how to read a series.

    ``format=None`` picks the layout from the number of columns in the first
    data row. ``date_range`` is an inclusive ``(start, end)`` pair of ISO dates;
    either end may be ``None``. Slicing happens on the raw values, before the
    transform.
    """

    path: str
    format: Optional[str] = None
    transform: str = "none"
    date_range: Optional[tuple] = None
    demean: bool = False
    min_length: int = MIN_LENGTH

    def __post_init__(self):
        if self.format is not None and self.format not in FORMATS:
            raise ConfigurationError(f"unknown format {self.format!r}; expected one of {FORMATS}")
        if self.transform not in TRANSFORMS:
            raise ConfigurationError(f"unknown transform {self.transform!r}; expected one of {TRANSFORMS}")
        if self.min_length < 1:
            raise ConfigurationError("min_length must be >= 1")


def _parse_float(text, line):
    try:
        v = float(text)
    except ValueError:
        raise ParseError(f"cannot parse number {text.strip()!r}", line) from None
    if not math.isfinite(v):
        raise ParseError(f"non-finite value {text.strip()!r}", line)
    return v


def _parse_date(text, line):
    try:
        return date.fromisoformat(text.strip())
    except ValueError:
        raise ParseError(f"cannot parse ISO date {text.strip()!r}", line) from None


def _looks_like_header(fields):
    last = fields[-1].strip()
    try:
        float(last)
        return False
    except ValueError:
        return True


def _read_rows(path, fmt):
    """Return (dates or None, values, line numbers)."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [(i, r) for i, r in enumerate(csv.reader(fh), start=1) if r and any(c.strip() for c in r)]
    if rows and _looks_like_header(rows[0][1]):
        rows = rows[1:]
    if not rows:
        raise EmptyAfterSlicingError("file contains no data rows")
    if fmt is None:
        fmt = "csv_date_value" if len(rows[0][1]) >= 2 else "csv_single_column"
    width = 1 if fmt == "csv_single_column" else 2
    dates, values, lines = [], [], []
    for line, r in rows:
        if len(r) != width:
            raise ParseError(f"expected {width} column(s), found {len(r)}", line)
        if width == 2:
            d = _parse_date(r[0], line)
            if dates and d <= dates[-1]:
                raise ParseError(f"date {d.isoformat()} is not after {dates[-1].isoformat()}", line)
            dates.append(d)
        values.append(_parse_float(r[-1], line))
        lines.append(line)
    return (dates if width == 2 else None), np.array(values), lines


def _as_date(x):
    if x is None or isinstance(x, date):
        return x
    try:
        return date.fromisoformat(str(x))
    except ValueError:
        raise ConfigurationError(f"cannot parse ISO date {x!r}") from None


def ingest(spec: IngestSpec) -> np.ndarray:
    """Read, slice and transform a series according to ``spec``."""
    dates, values, lines = _read_rows(spec.path, spec.format)
    if spec.date_range is not None:
        if dates is None:
            raise ConfigurationError("date_range needs a date,value file")
        start, end = (_as_date(x) for x in spec.date_range)
        keep = [(start is None or d >= start) and (end is None or d <= end) for d in dates]
        values = values[np.array(keep, dtype=bool)]
        lines = [ln for ln, k in zip(lines, keep) if k]
        if values.size == 0:
            raise EmptyAfterSlicingError(f"no observations between {start} and {end}")
    if spec.transform == "log_return_100":
        bad = np.flatnonzero(~(values > 0))
        if bad.size:
            raise NonPositivePriceError(f"price {values[bad[0]]!r} is not strictly positive", lines[bad[0]])
        y = 100.0 * np.diff(np.log(values))
    elif spec.transform == "diff":
        y = np.diff(values)
    else:
        y = values
    if y.size == 0:
        raise EmptyAfterSlicingError("series is empty after the transform")
    if y.size < spec.min_length:
        raise SeriesTooShortError(f"series has {y.size} observations; at least {spec.min_length} required")
    if spec.demean:
        y = y - y.mean()
    return y


# ---------------------------------------------------------------------------
# Battery


@dataclass(frozen=True)
class BatteryRow:
    test: str
    variant: str
    wavelet: Optional[str]
    m_or_K: int
    report: Optional[TestReport] = None
    error: Optional[str] = None

    def to_dict(self) -> dict:
        if self.report is not None:
            return self.report.to_dict()
        return {"test": self.test, "variant": self.variant, "wavelet": self.wavelet, "m_or_K": self.m_or_K,
                "statistic": None, "df": None, "p_value": None, "reject_at_05": None, "notes": [],
                "error": self.error}


def _cells(wavelets, m_values, variants, gsm, ljung_box_lags, aq):
    cells = []
    families = ("MFB", "GSM") if gsm else ("MFB",)
    for fam in families:
        for w in wavelets:
            for v in variants:
                for m in m_values:
                    cells.append((fam, v, w, m))
    cells += [("LjungBox", "none", None, K) for K in ljung_box_lags]
    if aq:
        cells.append(("AQ", "none", None, 1))
    return cells


def _run_cell(y, cell, hac):
    fam, v, w, m = cell
    try:
        if fam == "MFB":
            rep = mfb_test(y, w, m, v, hac)
        elif fam == "GSM":
            rep = gsm_test(y, w, m, v, hac)
        elif fam == "LjungBox":
            rep = ljung_box(y, m)
        else:
            rep = aq_test(y)
        return BatteryRow(fam, v, w, m, rep)
    except MfbError as exc:
        return BatteryRow(fam, v, w, m, error=f"{type(exc).__name__}: {exc}")


def run_battery(y, wavelets: Sequence[str] = ("Haar",), m_values: Sequence[int] = (1, 2, 3, 4, 5),
                variants: Sequence[str] = ("g", "triangle", "e"), gsm: bool = True,
                ljung_box_lags: Sequence[int] = (), aq: bool = True, hac: HacConfig = DEFAULT_HAC,
                workers: int = 1) -> list:
    """Run every (family, wavelet, variant, m) cell plus the requested baselines.

    A failing cell is recorded as a row with an ``error`` and does not stop the
    others. Row order follows the configuration, whatever ``workers`` is.
    """
    if not variants:
        raise ConfigurationError("variants list is empty")
    if not wavelets:
        raise ConfigurationError("wavelets list is empty")
    if not m_values:
        raise ConfigurationError("scale list is empty")
    variants = [normalize_variant(v) for v in variants]
    wavelets = [get_filter(w).name for w in wavelets]
    for m in m_values:
        if int(m) != m or m < 1:
            raise ConfigurationError(f"scale must be a positive integer, got {m!r}")
    y = np.asarray(y, dtype=float)
    cells = _cells(wavelets, [int(m) for m in m_values], variants, gsm, [int(k) for k in ljung_box_lags], aq)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda c: _run_cell(y, c, hac), cells))
    return [_run_cell(y, c, hac) for c in cells]


def battery_json(rows, T: int) -> dict:
    return {"T": int(T), "level": LEVEL, "rows": [r.to_dict() for r in rows]}


def _fmt_p(d):
    if d.get("error"):
        return "err"
    mark = "*" if d["p_value"] < LEVEL else ""
    return f"{d['p_value']:.3f}{mark}"


def _symbol(d):
    if d["test"] in ("MFB", "GSM"):
        return f"{d['test']}_m^{d['variant']}"
    if d["test"] == "LjungBox":
        return f"Q_{d['m_or_K']}"
    return d["test"]


def render_table(doc: dict) -> str:
    """Plain-text p-value table; ``*`` marks p < 0.05. Depends only on ``doc``."""
    grid, order, scales, other = {}, [], [], []
    for d in doc["rows"]:
        if d["test"] in ("MFB", "GSM"):
            key = (_symbol(d), d["wavelet"])
            if key not in grid:
                grid[key] = {}
                order.append(key)
            if d["m_or_K"] not in scales:
                scales.append(d["m_or_K"])
            grid[key][d["m_or_K"]] = _fmt_p(d)
        else:
            other.append(d)
    lines = [f"T = {doc['T']}   (* : p < {doc['level']:g})"]
    if order:
        head = ["test", "wavelet"] + [f"m={m}" for m in scales]
        body = [[sym, w] + [grid[(sym, w)].get(m, "") for m in scales] for sym, w in order]
        widths = [max(len(r[i]) for r in [head] + body) for i in range(len(head))]
        for r in [head] + body:
            lines.append("  ".join(c.ljust(wd) if i < 2 else c.rjust(wd) for i, (c, wd) in enumerate(zip(r, widths))))
    for d in other:
        stat = "" if d.get("error") else f"stat={d['statistic']:.4f} df={d['df']}"
        lines.append(f"{_symbol(d):<10} {_fmt_p(d):>7}  {stat}".rstrip())
    for d in doc["rows"]:
        if d.get("error"):
            lines.append(f"error in {_symbol(d)} m={d['m_or_K']}: {d['error']}")
    return "\n".join(lines) + "\n"


def render_csv(doc: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["test", "variant", "wavelet", "m_or_K", "statistic", "df", "p_value", "reject_at_05", "error"])
    for d in doc["rows"]:
        stat = "" if d["statistic"] is None else repr(d["statistic"])
        p = "" if d["p_value"] is None else repr(d["p_value"])
        rej = "" if d["reject_at_05"] is None else int(d["reject_at_05"])
        w.writerow([d["test"], d["variant"], d["wavelet"] or "", d["m_or_K"], stat, d["df"] or "", p, rej,
                    d.get("error") or ""])
    return buf.getvalue()


def filters_csv(wavelet: str, m: int) -> str:
    """One row per band: band index, filter length, squared norm, then the taps."""
    bank = packet_filters(get_filter(wavelet), int(m))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["wavelet", "m", "band", "length", "norm2"] + [f"v{l}" for l in range(bank.L_m)])
    for n in range(bank.n_bands):
        v = bank.filters[n]
        w.writerow([bank.base.name, bank.m, n, bank.L_m, repr(float(np.dot(v, v)))] + [repr(float(x)) for x in v])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Simulation configs


def _hac_from(d) -> HacConfig:
    d = d or {}
    bw = d.get("bandwidth", "auto")
    return HacConfig(bandwidth=bw if bw == "auto" else int(bw), center=bool(d.get("center", True)))


def _dgp_from(entry, T):
    if isinstance(entry, str):
        return sim.make_dgp(entry, T=T)
    if not isinstance(entry, dict) or "id" not in entry:
        raise ConfigurationError(f"model entry must be an id or an object with 'id', got {entry!r}")
    return sim.make_dgp(entry["id"], T=T, innovation=entry.get("innovation"), burn_in=entry.get("burn_in"),
                        **entry.get("params", {}))


def _as_list(x):
    return list(x) if isinstance(x, (list, tuple)) else [x]


def run_simulation(config: dict, out_dir: Path, workers: Optional[int] = None, seed: Optional[int] = None) -> list:
    """Run a study described by a JSON-style config; returns written paths."""
    config = dict(config)
    if seed is not None:
        config["seed"] = int(seed)
    if workers is not None:
        config["workers"] = int(workers)
    study = config.get("study")
    if study not in ("size", "power", "sweep"):
        raise ConfigurationError(f"study must be size, power or sweep, got {study!r}")
    if "seed" not in config:
        raise ConfigurationError("config needs a 'seed'")
    master = int(config["seed"])
    nworkers = int(config.get("workers", 1))
    reps = int(config.get("reps", 2000))
    hac = _hac_from(config.get("hac"))
    Ts = [int(t) for t in _as_list(config.get("T", 100))]
    out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    outputs = {}
    if study in ("size", "power"):
        if not config.get("tests"):
            raise ConfigurationError("config needs a non-empty 'tests' list")
        tests = [sim.parse_test(t, hac) for t in config["tests"]]
    if study == "size":
        results = []
        for T in Ts:
            dgps = [_dgp_from(e, T) for e in config.get("models", ["N1"])]
            results += sim.run_size_study(dgps, tests, T, reps, master, nworkers, bool(config.get("skip_errors")))
        outputs["size_table.csv"] = sim.size_table_csv(results)
        outputs["results.csv"] = sim.results_csv(results)
    elif study == "power":
        b1 = [float(b) for b in config.get("beta1", [0.0])]
        b2 = [float(b) for b in config.get("beta2", [0.0])]
        null_reps = int(config.get("null_reps", 2000))
        results, relative = [], []
        for T in Ts:
            dgps = [sim.make_dgp(mid, T=T, beta1=x, beta2=z)
                    for mid in config.get("models", ["A1"]) for x in b1 for z in b2]
            st = sim.run_power_study(dgps, tests, T, reps, null_reps, master, nworkers,
                                     bool(config.get("skip_errors")), config.get("reference"))
            results += st.results
            relative.append(sim.relative_power_csv(st))
        outputs["power_table.csv"] = sim.power_table_csv(results)
        outputs["relative_power.csv"] = relative[0] + "".join(r.split("\n", 1)[1] for r in relative[1:])
        outputs["results.csv"] = sim.results_csv(results)
    else:
        points = []
        for T in Ts:
            for k in _as_list(config.get("k", 1)):
                points += sim.run_scale_sweep(int(k), [float(b) for b in config.get("betas", [0.0])],
                                              [int(m) for m in config.get("m", [1, 2, 3, 4, 5])],
                                              tuple(config.get("families", ("MFB", "GSM"))), T, reps,
                                              int(config.get("null_reps", 2000)), master,
                                              config.get("wavelet", "Haar"), config.get("variant", "g"), nworkers)
        outputs["sweep.csv"] = sim.sweep_csv(points)
    runtime = time.perf_counter() - t0
    written = []
    for name, text in outputs.items():
        p = out_dir / name
        p.write_text(text, encoding="utf-8")
        written.append(p)
    mp = out_dir / "manifest.json"
    mp.write_text(sim.manifest(config, runtime, sorted(outputs)), encoding="utf-8")
    written.append(mp)
    return written


# ---------------------------------------------------------------------------
# argparse


def _bandwidth(text):
    if text == "auto":
        return "auto"
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("bandwidth must be 'auto' or a nonnegative integer") from None
    if v < 0:
        raise argparse.ArgumentTypeError("bandwidth must be >= 0")
    return v


def _scales(text):
    """``3`` or ``1-5`` or ``1,2,4``."""
    out = []
    for part in text.split(","):
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    if not out or min(out) < 1:
        raise argparse.ArgumentTypeError("scales must be positive integers")
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mfbtest", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    hac = argparse.ArgumentParser(add_help=False)
    hac.add_argument("--nw-bandwidth", type=_bandwidth, default="auto", help="Newey-West lags: auto or integer")
    hac.add_argument("--nw-center", choices=("on", "off"), default="on")

    t = sub.add_parser("test", parents=[hac], help="ingest a CSV and run the test battery")
    t.add_argument("path")
    t.add_argument("--format", choices=FORMATS, default=None)
    t.add_argument("--transform", choices=TRANSFORMS, default="none")
    t.add_argument("--date-from", default=None)
    t.add_argument("--date-to", default=None)
    t.add_argument("--demean", action="store_true")
    t.add_argument("--wavelet", action="append", default=None, help="repeatable; default Haar")
    t.add_argument("--scale", type=_scales, default=[1, 2, 3, 4, 5], help="e.g. 2, 1-5 or 1,3")
    t.add_argument("--variant", action="append", default=None, help="g, triangle or e; repeatable")
    t.add_argument("--no-gsm", action="store_true")
    t.add_argument("--no-aq", action="store_true")
    t.add_argument("--ljung-box", type=int, action="append", default=[], metavar="K")
    t.add_argument("--min-length", type=int, default=MIN_LENGTH)
    t.add_argument("--workers", type=int, default=1)
    t.add_argument("--seed", type=int, default=None, help="accepted for symmetry; the battery is deterministic")
    t.add_argument("--out", choices=("json", "csv", "table"), default="table")

    s = sub.add_parser("simulate", help="run a size, power or scale-sweep study from a JSON config")
    s.add_argument("--study", choices=("size", "power", "sweep"), required=True)
    s.add_argument("--config", required=True)
    s.add_argument("--out-dir", default=".")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--workers", type=int, default=None)
    s.add_argument("--out", choices=("json", "csv", "table"), default="table",
                   help="what to echo on stdout: manifest (json), main CSV (csv) or file list (table)")

    f = sub.add_parser("filters", help="dump a MODWPT filter bank, one row per band")
    f.add_argument("--wavelet", default="Haar")
    f.add_argument("--scale", type=int, default=1)
    f.add_argument("--out", choices=("json", "csv", "table"), default="csv")
    return p


def _cmd_test(a) -> str:
    dr = None if a.date_from is None and a.date_to is None else (a.date_from, a.date_to)
    spec = IngestSpec(a.path, a.format, a.transform, dr, a.demean, a.min_length)
    y = ingest(spec)
    hac = HacConfig(bandwidth=a.nw_bandwidth, center=a.nw_center == "on")
    rows = run_battery(y, a.wavelet or ["Haar"], a.scale, a.variant or ["g", "triangle", "e"],
                       gsm=not a.no_gsm, ljung_box_lags=a.ljung_box, aq=not a.no_aq, hac=hac, workers=a.workers)
    doc = battery_json(rows, len(y))
    if a.out == "json":
        return json.dumps(doc, indent=2) + "\n"
    if a.out == "csv":
        return render_csv(doc)
    return render_table(doc)


def _cmd_simulate(a) -> str:
    try:
        config = json.loads(Path(a.config).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{a.config}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    if not isinstance(config, dict):
        raise ConfigurationError("config must be a JSON object")
    if config.get("study", a.study) != a.study:
        raise ConfigurationError(f"config study {config['study']!r} does not match --study {a.study}")
    config["study"] = a.study
    written = run_simulation(config, Path(a.out_dir), a.workers, a.seed)
    if a.out == "json":
        return written[-1].read_text(encoding="utf-8")
    if a.out == "csv":
        return written[0].read_text(encoding="utf-8")
    return "".join(f"wrote {p}\n" for p in written)


def _cmd_filters(a) -> str:
    text = filters_csv(a.wavelet, a.scale)
    if a.out == "csv":
        return text
    rows = list(csv.reader(io.StringIO(text)))
    if a.out == "json":
        return json.dumps([{"band": int(r[2]), "length": int(r[3]), "norm2": float(r[4]),
                            "taps": [float(x) for x in r[5:]]} for r in rows[1:]], indent=2) + "\n"
    return "".join(f"band {r[2]:>3}  norm2={float(r[4]):.6g}  " + " ".join(f"{float(x):+.6f}" for x in r[5:]) + "\n"
                   for r in rows[1:])


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    a = parser.parse_args(argv)
    handlers = {"test": _cmd_test, "simulate": _cmd_simulate, "filters": _cmd_filters}
    try:
        sys.stdout.write(handlers[a.command](a))
    except (MfbError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
