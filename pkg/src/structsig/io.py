"""
Files: YAML run configurations, CSV data, fit bundles and time labels.
"""
import csv
import datetime as dt
import hashlib
import json
from pathlib import Path

import numpy as np
import yaml
from dateutil.relativedelta import relativedelta

from . import dates
from .model import (LatentComponent, ModelSpec, Regressor, add_component, add_regressor,
                    mean_init, new_model)
from .params import Constraint

__all__ = [
    "load_config", "read_data", "ingest", "build_model", "build_constraint",
    "data_checksum", "model_to_dict", "model_from_dict", "save_bundle",
    "load_bundle", "time_labels", "write_table", "fmt",
]

_FREQ = {
    "day": relativedelta(days=1),
    "week": relativedelta(weeks=1),
    "month": relativedelta(months=1),
    "quarter": relativedelta(months=3),
    "year": relativedelta(years=1),
}


def fmt(x):
    """Numbers at 12 significant digits; NaN as the NA token."""
    return "NA" if not np.isfinite(x) else f"{x:.12g}"


def load_config(path):
    path = Path(path)
    cfg = yaml.safe_load(path.read_text()) or {}
    cfg["_base"] = str(path.resolve().parent)
    return cfg


def _resolve(cfg, p):
    p = Path(p)
    return p if p.is_absolute() else Path(cfg.get("_base", ".")) / p


def read_data(path, na="NA"):
    """
    Read a CSV with a header of series names and one row per time.

    A leading column named date, time or t is treated as a label and skipped.
    Returns (values (T, N) with NaN for missing, names).
    """
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    header = [h.strip() for h in rows[0]]
    skip = 1 if header and header[0].lower() in ("date", "time", "t") else 0
    names = header[skip:]
    vals = np.array([[np.nan if v.strip() in (na, "") else float(v) for v in r[skip:]]
                     for r in rows[1:]], dtype=float)
    return vals.reshape(-1, len(names)), names


def _series_index(names, key):
    if isinstance(key, int):
        return key
    if key in names:
        return names.index(key)
    raise KeyError(f"unknown series {key!r}; available: {names}")


def ingest(cfg):
    """
    Data block of a config -> (data (T, N), names).

    Keys: path, na, series (subset by name or index), range ([first, last)
    rows), transform ("none" or "log"), aggregate (sum the selected series).
    """
    d = cfg["data"]
    vals, names = read_data(_resolve(cfg, d["path"]), d.get("na", "NA"))
    if d.get("series") is not None:
        idx = [_series_index(names, s) for s in d["series"]]
        vals, names = vals[:, idx], [names[i] for i in idx]
    if d.get("range") is not None:
        lo, hi = d["range"]
        vals = vals[lo:hi]
    tr = d.get("transform", "none")
    if tr == "log":
        if np.nanmin(vals) <= 0:
            raise ValueError("log transform needs positive data")
        vals = np.log(vals)
    elif tr != "none":
        raise ValueError(f"unknown transform {tr!r}")
    if d.get("aggregate", False):
        vals = vals.sum(axis=1, keepdims=True)
        names = ["+".join(names)]
    return vals, names


def _start_date(cfg):
    s = cfg["data"].get("start")
    if isinstance(s, dt.date):
        return s
    if isinstance(s, str):
        return dt.date.fromisoformat(s)
    return None


def time_labels(cfg, index):
    """
    Labels for 0-based time indices: ISO dates when the data block has a
    start date and a freq, (year, period) pairs when start is [year, period]
    with an integer period, otherwise the index itself.  Returns
    (header, rows).
    """
    d = cfg.get("data", {}) if cfg else {}
    index = np.asarray(index)
    start = _start_date(cfg) if cfg and "data" in cfg else None
    if start is not None:
        step = _FREQ[d.get("freq", "month")]
        return ["date"], [[(start + step * int(i)).isoformat()] for i in index]
    s = d.get("start")
    if isinstance(s, (list, tuple)) and d.get("period"):
        p = int(d["period"])
        y0, k0 = int(s[0]), int(s[1]) - 1
        return ["year", "period"], [[y0 + (k0 + int(i)) // p, (k0 + int(i)) % p + 1]
                                    for i in index]
    return ["t"], [[int(i)] for i in index]


def write_table(path, header, labels, columns):
    """CSV with label columns followed by numeric columns (12 significant digits)."""
    cols = [np.asarray(c, dtype=float) for c in columns]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i, lab in enumerate(labels):
            w.writerow(list(lab) + [fmt(c[i]) for c in cols])


# ---------------------------------------------------------------------------
# model construction

def _regressor_values(cfg, spec, T):
    if "file" in spec:
        v, _ = read_data(_resolve(cfg, spec["file"]))
        v = v[:, 0]
    elif "values" in spec:
        v = np.asarray(spec["values"], dtype=float)
    elif "holiday" in spec:
        h = spec["holiday"]
        start = _start_date(cfg)
        if start is None or cfg["data"].get("freq") != "day":
            raise ValueError("holiday regressors need daily data with a start date")
        hol = dates.read_holidays(_resolve(cfg, h["file"]))
        end = start + dt.timedelta(days=T - 1)
        v = dates.gethol(hol, h.get("fore", 0), h.get("aft", 0), start, end,
                         h.get("center", True)).values
    else:
        raise ValueError("regressor needs file, values or holiday")
    if v.size != T:
        raise ValueError(f"regressor {spec.get('label')} has length {v.size}, expected {T}")
    return v


def build_model(cfg, T, names):
    """Model block of a config -> ModelSpec."""
    mb = cfg["model"]
    N = len(names)
    mdl = new_model(N, T, names)
    for c in mb["components"]:
        vrank = [_series_index(list(names), v) for v in c.get("vrank", range(N))]
        mdl = add_component(mdl, vrank, c["class"], c.get("order", ()), c.get("bounds"),
                            c.get("name", ""), c.get("delta", [1.0]))
    mean = mb.get("mean", True)
    if mean:
        mdl = mean_init(mdl, d_extra=mb.get("d_extra", 0))
    for r in mb.get("regressors", []):
        v = _regressor_values(cfg, r, T)
        targets = range(N) if r.get("series", "all") == "all" else \
            [_series_index(list(names), r["series"])]
        for j in targets:
            mdl = add_regressor(mdl, j, v, r["label"])
    return mdl


def build_constraint(cfg, n_psi):
    con = cfg.get("model", {}).get("constraints")
    if con is None:
        return None
    if isinstance(con, str):
        return Constraint.read_csv(_resolve(cfg, con))
    rows = np.atleast_2d(np.asarray(con, dtype=float))
    if rows.shape[1] != n_psi + 1:
        raise ValueError(f"constraint rows need {n_psi + 1} entries (b then C)")
    return Constraint.from_rows(rows)


# ---------------------------------------------------------------------------
# bundle

def data_checksum(data):
    a = np.asarray(data, dtype="<f8")
    a = np.ascontiguousarray(np.where(np.isnan(a), np.nan, a))
    return hashlib.sha256(a.tobytes()).hexdigest()


def _arr(x):
    return None if x is None else np.asarray(x, dtype=float).tolist()


def _nan_list(a):
    return [[None if np.isnan(v) else float(v) for v in row] for row in np.asarray(a)]


def model_to_dict(mdl):
    return {
        "N": mdl.N, "T": mdl.T, "names": list(mdl.names) if mdl.names else None,
        "components": [{"class": c.cls, "order": list(c.order), "vrank": list(c.vrank),
                        "delta": _arr(c.delta), "name": c.name,
                        "bounds": list(c.bounds) if c.bounds else None}
                       for c in mdl.components],
        "regressors": [{"series": r.series, "label": r.label, "power": r.power,
                        "values": _arr(r.values)} for r in mdl.regressors],
    }


def model_from_dict(d):
    comps = tuple(LatentComponent(c["class"], tuple(c["order"]), tuple(c["vrank"]),
                                  np.asarray(c["delta"], dtype=float), c["name"],
                                  tuple(c["bounds"]) if c["bounds"] else None)
                  for c in d["components"])
    regs = tuple(Regressor(r["series"], r["label"], np.asarray(r["values"], dtype=float),
                           r["power"]) for r in d["regressors"])
    return ModelSpec(d["N"], d["T"], comps, regs, tuple(d["names"]) if d["names"] else None)


def save_bundle(path, data, mdl, psi, cfg=None, divergence=None, hessian=None,
                constraint=None, method="mle", extra=None):
    cfg = {k: v for k, v in (cfg or {}).items() if k != "_base"}
    out = {
        "format": "structsig-bundle-1",
        "data": _nan_list(data),
        "data_sha256": data_checksum(data),
        "transform": cfg.get("data", {}).get("transform", "none"),
        "model": model_to_dict(mdl),
        "psi": _arr(psi),
        "divergence": divergence,
        "hessian": _arr(hessian),
        "constraint": None if constraint is None else _arr(constraint.rows),
        "method": method,
        "config": json.loads(json.dumps(cfg, default=str)),
    }
    if extra:
        out.update(extra)
    Path(path).write_text(json.dumps(out, indent=1))


def load_bundle(path):
    """Read a bundle; the data checksum is verified."""
    b = json.loads(Path(path).read_text())
    data = np.array([[np.nan if v is None else v for v in row] for row in b["data"]],
                    dtype=float)
    if data_checksum(data) != b["data_sha256"]:
        raise ValueError("bundle data checksum mismatch")
    b["data"] = data
    b["model"] = model_from_dict(b["model"])
    b["psi"] = np.asarray(b["psi"], dtype=float)
    if b.get("hessian") is not None:
        b["hessian"] = np.asarray(b["hessian"], dtype=float)
    if b.get("constraint") is not None:
        b["constraint"] = Constraint.from_rows(b["constraint"])
    return b
