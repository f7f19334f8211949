"""
Batch command line front end.

    structsig fit       --config run.yaml [--method mle|mom] [--out-dir DIR]
    structsig diagnose  --bundle DIR/bundle.json
    structsig extract   --bundle DIR/bundle.json [--window W] [--grid G]
                        [--horizon H] [--frf] [--wk-coeffs]
    structsig cast      --bundle DIR/bundle.json [--horizon H]
    structsig filters   --config run.yaml [--grid G]
    structsig simulate  --config run.yaml [--seed S]
"""
import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import extraction as ex
from . import fitting, io
from .likelihood import cast_extract, lik, midcast, resid, simulate
from .params import (conditions, eta_to_psi, par_to_psi, psi_len, psi_to_eta,
                     psi_to_par)
from .svgplot import line_plot

__all__ = ["main", "build_parser"]


def _out(args, cfg=None):
    """--out-dir, else the bundle's directory, else the config's output_dir."""
    if args.out_dir:
        d = Path(args.out_dir)
    elif getattr(args, "bundle", None):
        d = Path(args.bundle).resolve().parent
    else:
        d = Path(cfg["_base"]) / (cfg.get("output_dir") or ".")
    d.mkdir(parents=True, exist_ok=True)
    return d


def _comp_names(mdl):
    return [c.name or f"{c.cls}{k}" for k, c in enumerate(mdl.components)]


def _series_names(mdl):
    return list(mdl.names) if mdl.names else [f"s{j}" for j in range(mdl.N)]


def _resolve_comps(mdl, keys):
    names = _comp_names(mdl)
    return [k if isinstance(k, int) else names.index(k) for k in keys]


def _print_conditions(mdl, par, stream):
    print("condition numbers (log scale):", file=stream)
    for name, g in zip(_comp_names(mdl), par.gcd):
        vals = conditions(g.sigma)
        print(f"  {name:<16}" + " ".join(f"{v: .7g}" for v in vals), file=stream)


# ---------------------------------------------------------------------------

def cmd_fit(args):
    cfg = io.load_config(args.config)
    data, names = io.ingest(cfg)
    mdl = io.build_model(cfg, data.shape[0], names)
    n = psi_len(mdl)
    con = io.build_constraint(cfg, n)
    fc = cfg.get("fit", {})
    method = args.method or fc.get("method", "mle")
    if fc.get("psi") is not None:
        psi0 = np.asarray(fc["psi"], dtype=float)
        if con is not None:
            res = con.residual(psi0)
            bad = np.nonzero(np.abs(res) > 1e-8)[0]
            if bad.size:
                rows = "; ".join(f"row {i}: C psi - b = {res[i]:.6g}" for i in bad)
                raise SystemExit(f"initial psi violates the constraint: {rows}")
    else:
        init = fc.get("init", "mom" if not np.isnan(data).any() else "default")
        if init == "mom":
            par0 = fitting.mom_start(data, mdl, fc.get("alpha", -6.0))
            psi0 = par_to_psi(par0, mdl)
        else:
            psi0 = np.zeros(n)
        if con is not None:
            psi0 = eta_to_psi(psi_to_eta(psi0, con), con)
    if method == "mom":
        psi, div, H = psi0, lik(psi0, mdl, data), None
        info = {"converged": True, "nfev": 1}
    else:
        res = fitting.mle_fit(data, psi0, mdl, con, maxiter=fc.get("maxiter"),
                              gtol=fc.get("gtol", 1e-6), maxfev=fc.get("maxfev", 10_000))
        psi, div, H = res.psi, res.divergence, res.hessian
        info = {"converged": res.converged, "nfev": res.nfev, "message": res.message}
    out = _out(args, cfg)
    io.save_bundle(out / "bundle.json", data, mdl, psi, cfg, div, H, con, method, info)
    par = psi_to_par(psi, mdl)
    print(f"divergence: {div:.10g}")
    _print_conditions(mdl, par, sys.stdout)
    if H is not None:
        t = fitting.tstats(mdl, psi, H, con)
        print("t statistics:")
        print("  " + " ".join(f"{v: .6g}" for v in t))
    print(f"bundle written to {out / 'bundle.json'}")
    return 0


def _bundle_cfg(b, args):
    cfg = b["config"]
    cfg["_base"] = str(Path(args.bundle).resolve().parent)
    if getattr(args, "config", None):
        extra = io.load_config(args.config)
        cfg.update({k: v for k, v in extra.items() if k not in ("data", "model")})
    return cfg


def cmd_diagnose(args):
    b = io.load_bundle(args.bundle)
    cfg = _bundle_cfg(b, args)
    mdl, psi, data = b["model"], b["psi"], b["data"]
    w, _ = resid(psi, mdl, data)
    q = mdl.delta.size - 1
    period = int(round(cfg.get("data", {}).get("period", 1) or 1))
    lag = int(cfg.get("diagnose", {}).get("lag", max(4 * period, 4)))
    lag = min(lag, w.shape[0] - 1)
    stat, pval = fitting.portmanteau(w, lag, psi_len(mdl))
    normal = fitting.gauss_check(w)
    out = _out(args, cfg)
    header, labels = io.time_labels(cfg, np.arange(q, q + w.shape[0]))
    sn = _series_names(mdl)
    io.write_table(out / "residuals.csv", header + sn, labels, list(w.T))
    ww = np.where(np.isnan(w), 0.0, w)
    C = fitting.sample_acvf(ww, lag)
    sd = np.sqrt(np.diag(C[0]))
    rho = C / np.outer(sd, sd)[None]
    cols = [rho[:, i, j] for i in range(mdl.N) for j in range(mdl.N)]
    io.write_table(out / "residual_acf.csv",
                   ["lag"] + [f"{sn[i]}~{sn[j]}" for i in range(mdl.N) for j in range(mdl.N)],
                   [[h] for h in range(lag + 1)], cols)
    report = {"portmanteau": {"statistic": stat, "p_value": pval, "lag": lag},
              "normality_p_values": dict(zip(sn, map(float, normal))),
              "divergence": lik(psi, mdl, data)}
    (out / "diagnostics.json").write_text(json.dumps(report, indent=1))
    print(f"portmanteau: {stat:.10g} {pval:.10g}")
    print("normality p-values: " + " ".join(f"{p:.7g}" for p in normal))
    return 0


def _signal_specs(cfg, mdl):
    specs = cfg.get("extract", {}).get("signals")
    if specs:
        return specs
    return [{"name": n, "components": [k]} for k, n in enumerate(_comp_names(mdl))]


def _kernel_from_spec(cfg, spec):
    kd = spec["kernel"]
    if "x11" in kd:
        x = kd["x11"]
        tr, se, sa = ex.x11_filters(x["period"], x.get("p_seas", 1))
        return {"trend": tr, "seasonal": se, "sa": sa}[x.get("which", "sa")]
    if "file" in kd:
        return ex.read_kernel(io._resolve(cfg, kd["file"]))
    return ex.FilterKernel(np.asarray(kd["coeffs"], dtype=float), int(kd["shift"]))


def _write_triple(path, cfg, mdl, index, tri, displace=0.0):
    header, labels = io.time_labels(cfg, index)
    cols, names = [], []
    for j, s in enumerate(_series_names(mdl)):
        cols += [tri.point[:, j] + displace, tri.upper[:, j] + displace,
                 tri.lower[:, j] + displace]
        names += [f"{s}_point", f"{s}_upper", f"{s}_lower"]
    io.write_table(path, header + names, labels, cols)


def cmd_extract(args):
    b = io.load_bundle(args.bundle)
    cfg = _bundle_cfg(b, args)
    mdl, psi, data = b["model"], b["psi"], b["data"]
    par = psi_to_par(psi, mdl)
    ec = cfg.get("extract", {})
    window = args.window or ec.get("window", 50)
    grid = args.grid or ec.get("grid", 7000)
    horizon = args.horizon if args.horizon is not None else ec.get("horizon", 0)
    out = _out(args, cfg)
    T = data.shape[0]
    index = np.arange(-horizon, T + horizon)
    pieces = {}
    for spec in _signal_specs(cfg, mdl):
        name = spec["name"]
        method = spec.get("method", "adhoc" if "kernel" in spec else "wk")
        if method == "adhoc":
            tri = ex.adhoc_extract(par, mdl, data, _kernel_from_spec(cfg, spec), horizon)
        else:
            comps = _resolve_comps(mdl, spec["components"])
            target = spec.get("target")
            if method == "matrix":
                tri = ex.extract(data, ex.signal_matrix(data, par, mdl, comps), mdl, par)
                index_m = np.arange(T)
            else:
                tri = ex.wk_extract(par, mdl, data, comps, target, grid, window, horizon)
            if args.frf:
                lam, U = ex.frf(par, mdl, comps, spec.get("frf_grid", 1000))
                cols = [lam] + [f(U[:, i, j]) for i in range(mdl.N) for j in range(mdl.N)
                                for f in (np.real, np.imag)]
                hdr = ["lambda"] + [f"{p}_{i}_{j}" for i in range(mdl.N) for j in range(mdl.N)
                                    for p in ("re", "im")]
                io.write_table(out / f"frf_{name}.csv", hdr, [[]] * lam.size, cols)
            if args.wk_coeffs:
                kern, _ = ex.wk_coeffs(par, mdl, comps, target, grid, window)
                ex.write_kernel(out / f"wkcoef_{name}.csv", kern)
        idx = index_m if method == "matrix" else index
        disp = float(spec.get("displace", 0.0))
        _write_triple(out / f"signal_{name}.csv", cfg, mdl, idx, tri, disp)
        if ec.get("svg", False):
            for j, s in enumerate(_series_names(mdl)):
                line_plot(out / f"signal_{name}_{s}.svg", idx,
                          [{"y": tri.point[:, j] + disp, "lower": tri.lower[:, j] + disp,
                            "upper": tri.upper[:, j] + disp, "label": name}], f"{name}: {s}")
        if method != "matrix":
            pieces[name] = tri.point[horizon:horizon + T]
    dec = ec.get("decomposition")
    if dec:
        cast = midcast(par, mdl, data, 0, need_cov=False, par=par)
        original = None
        if dec.get("outliers"):
            original = np.full(data.shape, np.nan)
            for t, j, v in dec["outliers"]:
                original[t, j] = v
        tables = ex.publish_decomposition(
            data, cast.filled, mdl, par.beta, {k: pieces[k] for k in dec["pieces"]},
            original, dec.get("cast_error_to"), dec.get("effects"), dec.get("default_effect"))
        header, labels = io.time_labels(cfg, np.arange(T))
        keys = list(dec["pieces"]) + ["imputation", "cast_error"]
        sn = _series_names(mdl)
        io.write_table(out / "decomposition.csv",
                       header + [f"{s}_{k}" for s in sn for k in keys], labels,
                       [tables[k][:, j] for j in range(mdl.N) for k in keys])
    print(f"extractions written to {out}")
    return 0


def cmd_cast(args):
    b = io.load_bundle(args.bundle)
    cfg = _bundle_cfg(b, args)
    mdl, psi, data = b["model"], b["psi"], b["data"]
    par = psi_to_par(psi, mdl)
    span = args.horizon if args.horizon is not None else cfg.get("cast", {}).get("span", 0)
    cast = midcast(par, mdl, data, span, par=par)
    tri = cast_extract(data, cast, mdl, span, par.beta)
    out = _out(args, cfg)
    _write_triple(out / "casts.csv", cfg, mdl, np.arange(-span, data.shape[0] + span), tri)
    print(f"casts written to {out / 'casts.csv'}")
    return 0


def cmd_filters(args):
    cfg = io.load_config(args.config)
    fc = cfg.get("filters", {})
    out = _out(args, cfg)
    kernels = {}
    if "x11" in fc:
        x = fc["x11"]
        tr, se, sa = ex.x11_filters(x["period"], x.get("p_seas", 1))
        kernels.update(trend=tr, seasonal=se, sa=sa)
    for k in fc.get("kernels", []):
        kernels[k["name"]] = ex.FilterKernel(np.asarray(k["coeffs"], float), int(k["shift"]))
    s = fc.get("embed")
    for name, k in list(kernels.items()):
        ex.write_kernel(out / f"kernel_{name}.csv", k)
        if s:
            kk = ex.hi_to_low(k, s)
            kernels[f"{name}_embedded"] = kk
            ex.write_kernel(out / f"kernel_{name}_embedded.csv", kk)
            print(f"{name}: m={k.m} c={k.shift} -> M={kk.m} C={kk.shift}")
    if args.grid:
        lam = np.pi * np.arange(args.grid + 1) / args.grid
        names = [n for n, k in kernels.items() if np.ndim(k.coeffs) == 1]
        io.write_table(out / "kernel_frf.csv", ["lambda"] + names, [[]] * lam.size,
                       [lam] + [np.abs(kernels[n].frf(lam)) for n in names])
    print(f"kernels written to {out}")
    return 0


def cmd_simulate(args):
    cfg = io.load_config(args.config)
    sc = cfg.get("simulate", {})
    names = sc.get("names") or [f"s{j}" for j in range(int(sc.get("N", 1)))]
    T = int(sc["T"])
    mdl = io.build_model(cfg, T, names)
    psi = np.asarray(sc["psi"], dtype=float) if "psi" in sc else np.zeros(psi_len(mdl))
    seed = args.seed if args.seed is not None else sc.get("seed")
    y = simulate(mdl, psi_to_par(psi, mdl), T, sc.get("burn", 100), seed)
    out = _out(args, cfg)
    header, labels = io.time_labels(cfg, np.arange(T))
    io.write_table(out / "data.csv", header + list(names), labels, list(y.T))
    (out / "psi.json").write_text(json.dumps({"psi": psi.tolist(), "seed": seed}, indent=1))
    print(f"simulated {T} x {len(names)} written to {out / 'data.csv'}")
    return 0


# ---------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="structsig", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=False, bundle=False):
        if config:
            sp.add_argument("--config", required=not bundle, help="YAML run configuration")
        if bundle:
            sp.add_argument("--bundle", required=True, help="fit bundle (JSON)")
        sp.add_argument("--out-dir", default=None, help="output directory")
        return sp

    f = common(sub.add_parser("fit", help="estimate a model"), config=True)
    f.add_argument("--method", choices=["mle", "mom"], default=None)
    f.set_defaults(func=cmd_fit)
    d = common(sub.add_parser("diagnose", help="residual diagnostics"), bundle=True)
    d.set_defaults(func=cmd_diagnose)
    e = common(sub.add_parser("extract", help="signal extraction"), config=True, bundle=True)
    e.add_argument("--window", type=int, default=None)
    e.add_argument("--grid", type=int, default=None)
    e.add_argument("--horizon", type=int, default=None)
    e.add_argument("--frf", action="store_true", help="write frequency responses")
    e.add_argument("--wk-coeffs", action="store_true", help="write WK filter coefficients")
    e.set_defaults(func=cmd_extract)
    c = common(sub.add_parser("cast", help="forecasts, aftcasts and midcasts"), bundle=True)
    c.add_argument("--horizon", type=int, default=None, help="casts at each end")
    c.set_defaults(func=cmd_cast)
    fl = common(sub.add_parser("filters", help="nonparametric filter kernels"), config=True)
    fl.add_argument("--grid", type=int, default=None, help="also write |FRF| on this mesh")
    fl.set_defaults(func=cmd_filters)
    s = common(sub.add_parser("simulate", help="simulate from a model"), config=True)
    s.add_argument("--seed", type=int, default=None)
    s.set_defaults(func=cmd_simulate)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
