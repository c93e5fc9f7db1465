"""CSV ingestion and the CSV/JSON artifacts written by the CLI.

Numbers are written with 12 significant digits; non-finite values are
written as ``inf``/``-inf``/``NA`` in CSV and as strings in JSON.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InputError, ParseError

FLOAT_FMT = "{:.12g}"


def fmt(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "NA"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return FLOAT_FMT.format(x)


def json_number(x):
    x = float(x)
    if math.isfinite(x):
        return float(FLOAT_FMT.format(x))
    return fmt(x)


@dataclass(frozen=True)
class Table:
    names: tuple[str, ...]  # covariate column names
    X: np.ndarray
    y: np.ndarray
    header: tuple[str, ...]


def read_table(path, response: str = "y") -> Table:
    """Read a comma-separated numeric table with a header and a response column."""
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        text = raw.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise ParseError("input is not valid UTF-8", line=None, offset=exc.start) from exc
    lines = text.splitlines(keepends=True)
    offsets = []
    pos = 3 if raw.startswith(b"\xef\xbb\xbf") else 0
    for ln in lines:
        offsets.append(pos)
        pos += len(ln.encode("utf-8"))
    if not lines or not lines[0].strip():
        raise ParseError("missing header row", line=1, offset=0)
    header = next(csv.reader([lines[0]]))
    header = [h.strip() for h in header]
    if response not in header:
        raise ParseError(f"no column named {response!r} in header", line=1, offset=0)
    if len(set(header)) != len(header):
        raise ParseError("duplicate column names in header", line=1, offset=0)
    if len(header) < 2:
        raise ParseError("need at least one covariate column", line=1, offset=0)
    rows = []
    for i, ln in enumerate(lines[1:], start=2):
        if not ln.strip():
            continue
        cells = next(csv.reader([ln]))
        if len(cells) != len(header):
            raise ParseError(f"expected {len(header)} fields, found {len(cells)}", line=i, offset=offsets[i - 1])
        try:
            rows.append([float(c) for c in cells])
        except ValueError:
            bad = next(c for c in cells if not _is_float(c))
            raise ParseError(f"non-numeric field {bad!r}", line=i, offset=offsets[i - 1]) from None
    if len(rows) < 2:
        raise ParseError("need at least two data rows", line=len(lines), offset=offsets[-1])
    M = np.array(rows, dtype=float)
    yi = header.index(response)
    xi = [j for j in range(len(header)) if j != yi]
    return Table(names=tuple(header[j] for j in xi), X=M[:, xi], y=M[:, yi], header=tuple(header))


def _is_float(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def _write_csv(path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=False, allow_nan=False) + "\n", encoding="utf-8")


def write_path_csv(path, coef_path, names=None) -> None:
    K, p = coef_path.coefs.shape
    names = names or [str(j) for j in range(p)]
    rows = (
        (fmt(coef_path.grid.values[k]), names[j], fmt(coef_path.coefs[k, j]))
        for k in range(K)
        for j in range(p)
    )
    _write_csv(path, ("lambda", "variable", "coefficient"), rows)


def write_boundary_csv(path, result) -> None:
    rows = (
        (fmt(lam), fmt(T), len(s)) for lam, T, s in zip(result.lambdas, result.boundary, result.relevant_sets)
    )
    _write_csv(path, ("lambda", "T_k", "n_selected"), rows)


def selection_json(result, names=None) -> dict:
    """SPSP selection record: R, selected indices, per-lambda sets and refit."""
    out = {
        "R_used": json_number(result.R_used),
        "R_estimated": json_number(result.R_estimated),
        "selected": list(result.selected),
        "per_lambda": [{"lambda": json_number(lam), "set": list(s)} for lam, s in zip(result.lambdas, result.relevant_sets)],
    }
    if names is not None:
        out["selected_names"] = [names[j] for j in result.selected]
    if result.refit is not None:
        out["refit"] = {str(j): json_number(result.refit.coef[j]) for j in result.selected}
        out["intercept"] = json_number(result.refit.intercept)
        out["refit_used_ridge"] = result.refit.used_ridge
    return out


def write_criterion_csv(path, lambdas, scores) -> None:
    rows = ((fmt(lambdas[s.lambda_index]), fmt(s.score), s.df, fmt(s.rss)) for s in scores)
    _write_csv(path, ("lambda", "score", "df", "rss"), rows)


def write_stability_csv(path, profile, names=None) -> None:
    K, p = profile.freq.shape
    names = names or [str(j) for j in range(p)]
    rows = ((fmt(profile.lambdas[k]), names[j], fmt(profile.freq[k, j])) for k in range(K) for j in range(p))
    _write_csv(path, ("lambda", "variable", "frequency"), rows)


def write_replicates_csv(path, summary) -> None:
    rows = ((r.replicate, r.penalty, r.method, r.fp, r.fn, fmt(r.me)) for r in summary.records)
    _write_csv(path, ("replicate", "penalty", "method", "fp", "fn", "me"), rows)


def write_summary_csv(path, summary, methods=None) -> None:
    """Table layout: one row per (penalty, metric), one column per method, cells ``mean (se)``."""
    pens, meths = [], []
    for c in summary.cells:
        if c.penalty not in pens:
            pens.append(c.penalty)
        if c.method not in meths:
            meths.append(c.method)
    if methods is not None:
        meths = [m for m in methods if m in meths]
    lookup = {(c.penalty, c.method): c for c in summary.cells}
    rows = []
    for pen in pens:
        for metric, val, se in (("FP", "fp_mean", "fp_se"), ("FN", "fn_mean", "fn_se"), ("ME", "me_median", "me_se")):
            row = [pen, metric]
            for m in meths:
                c = lookup.get((pen, m))
                row.append("" if c is None else f"{fmt(getattr(c, val))} ({fmt(getattr(c, se))})")
            rows.append(row)
    _write_csv(path, ["penalty", "metric", *meths], rows)


def write_sweep_csv(path, sweep) -> None:
    rows = ((fmt(r.R), fmt(r.mean_fpr), fmt(r.mean_fnr)) for r in sweep.rows)
    _write_csv(path, ("R", "mean_fpr", "mean_fnr"), rows)


def write_table(path, names, X, y, response: str = "y") -> None:
    rows = ([fmt(y[i]), *(fmt(v) for v in X[i])] for i in range(len(y)))
    _write_csv(path, (response, *names), rows)
