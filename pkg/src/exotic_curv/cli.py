"""Command-line front end: identity suites, curvature scans, profiles.

Commands:
  exotic-curv verify  --config PATH [--suite a,b] [--out DIR]
  exotic-curv scan    --config PATH [--jobs N] [--out DIR] [--format ...]
  exotic-curv profile --config PATH --what psi|meridian-curvature|zero-locus

Exit codes: 0 pass, 1 check failure, 2 config error, 3 runtime failure.
The environment variable EXOTIC_CURV_SEED overrides the config seed.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

import numpy as np

from . import metric_pipeline as mp
from . import psi_analytic as pa
from . import scan as scan_mod
from . import verify as verify_mod
from . import zero_locus as zl
from .quat import I as QI

CONFIG_KEYS = {
    "stage": str, "nu": float, "l": float, "s": float, "c": float,
    "kappa_iota": float, "seed": int, "grid_t": int, "grid_theta": int,
    "planes_per_point": int, "orbit_samples": int, "refine_iters": int,
    "suites": str, "t_min": float, "fd_step": float, "richardson": int,
    "o_budget_kappa": float, "redistribute": int, "l_diag": float,
    "l_h1": float, "t_lo": float, "t_hi": float, "theta_lo": float,
    "theta_hi": float, "flow_steps": int,
}


class ConfigError(ValueError):
    def __init__(self, msg, line=None, col=None):
        super().__init__(msg)
        self.line = line
        self.col = col


def parse_config(text):
    """Flat key = value format with optional [section] headers.

    Sections are cosmetic; keys are global and checked against the
    documented list.
    """
    out = {}
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line or (line.startswith("[") and line.endswith("]")):
            continue
        if "=" not in line:
            raise ConfigError(f"expected key = value, got {raw!r}",
                              line=ln, col=1)
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in CONFIG_KEYS:
            raise ConfigError(f"unknown key {key!r}", line=ln, col=1)
        typ = CONFIG_KEYS[key]
        try:
            out[key] = typ(val) if typ is not str else val
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {val!r}",
                              line=ln, col=raw.index("=") + 2) from exc
    return out


def dump_config(conf):
    lines = ["[run]"]
    for k in sorted(conf):
        lines.append(f"{k} = {conf[k]}")
    return "\n".join(lines) + "\n"


def _config_hash(conf):
    return hashlib.sha256(
        json.dumps(conf, sort_keys=True).encode()).hexdigest()[:16]


def build_stage_config(conf):
    s = conf.get("s", 0.05)
    nu = conf.get("nu", s ** (6.0 / 7.0))
    kw = dict(
        stage=conf.get("stage", "new"),
        nu=nu,
        l=conf.get("l", nu ** (1.0 / 3.0) if nu != 1.0 else np.inf),
        s=s,
        conf_c=conf.get("c", 1.05),
        kappa_iota=conf.get("kappa_iota", 5e-6),
        redistribute=bool(conf.get("redistribute", 1)),
        l_diag=conf.get("l_diag", 1.0),
        l_h1=conf.get("l_h1", 1.0),
        t_min=conf.get("t_min", 1e-3),
        fd_step=conf.get("fd_step", 2e-3),
        richardson=bool(conf.get("richardson", nu < 0.3)),
        o_budget_kappa=conf.get("o_budget_kappa", 10.0),
    )
    return mp.StageConfig(**kw)


def build_scan_spec(conf):
    cfg = build_stage_config(conf)
    seed = int(os.environ.get("EXOTIC_CURV_SEED", conf.get("seed", 20260809)))
    return scan_mod.ScanSpec(
        cfg=cfg,
        grid_t=conf.get("grid_t", 8),
        grid_theta=conf.get("grid_theta", 8),
        orbit_samples=conf.get("orbit_samples", 1),
        planes_per_point=conf.get("planes_per_point", 4),
        refine_iters=conf.get("refine_iters", 12),
        seed=seed,
        t_range=(conf.get("t_lo", 0.05), conf.get("t_hi", np.pi / 4 - 0.05)),
        theta_range=(conf.get("theta_lo", 0.05),
                     conf.get("theta_hi", np.pi / 2 - 0.05)),
    )


# --- SVG ---------------------------------------------------------------------

def svg_document(body, width=800, height=600):
    return (f'<svg xmlns="http://www.w3.org/2000/svg" '
            f'viewBox="0 0 {width} {height}">\n'
            f'<rect width="{width}" height="{height}" fill="white"/>\n'
            + body + "\n</svg>\n")


def svg_line_plot(xs, ys_list, labels, title, annotations=()):
    w, h = 800, 600
    mx0, mx1, my0, my1 = 80, 770, 60, 550
    xs = np.asarray(xs, dtype=float)
    all_y = np.concatenate([np.asarray(y, dtype=float) for y in ys_list])
    finite = all_y[np.isfinite(all_y)]
    ylo, yhi = float(finite.min()), float(finite.max())
    if yhi - ylo < 1e-300:
        yhi = ylo + 1.0
    pad = 0.05 * (yhi - ylo)
    ylo, yhi = ylo - pad, yhi + pad

    def sx(x):
        return mx0 + (mx1 - mx0) * (x - xs[0]) / (xs[-1] - xs[0])

    def sy(y):
        return my1 - (my1 - my0) * (y - ylo) / (yhi - ylo)

    colors = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")
    body = [f'<text x="400" y="30" text-anchor="middle" '
            f'font-size="18">{title}</text>']
    body.append(f'<line x1="{mx0}" y1="{my1}" x2="{mx1}" y2="{my1}" '
                'stroke="black"/>')
    body.append(f'<line x1="{mx0}" y1="{my0}" x2="{mx0}" y2="{my1}" '
                'stroke="black"/>')
    if ylo < 0 < yhi:
        body.append(f'<line x1="{mx0}" y1="{sy(0)}" x2="{mx1}" y2="{sy(0)}" '
                    'stroke="#bbbbbb" stroke-dasharray="4"/>')
    for k, (ys, lab) in enumerate(zip(ys_list, labels)):
        pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}"
                       for x, y in zip(xs, ys) if np.isfinite(y))
        col = colors[k % len(colors)]
        body.append(f'<polyline fill="none" stroke="{col}" '
                    f'stroke-width="1.5" points="{pts}"/>')
        body.append(f'<text x="{mx1 - 150}" y="{my0 + 20 + 18 * k}" '
                    f'fill="{col}" font-size="13">{lab}</text>')
    for (x, y, text) in annotations:
        body.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="4" '
                    'fill="black"/>')
        body.append(f'<text x="{sx(x) + 8:.2f}" y="{sy(y) - 8:.2f}" '
                    f'font-size="12">{text}</text>')
    body.append(f'<text x="{(mx0 + mx1) / 2}" y="{my1 + 35}" '
                'text-anchor="middle" font-size="14">t (radians)</text>')
    body.append(f'<text x="{mx0}" y="{my0 - 10}" font-size="12">'
                f'{yhi:.3g}</text>')
    body.append(f'<text x="{mx0}" y="{my1 + 15}" font-size="12">'
                f'{ylo:.3g}</text>')
    return svg_document("\n".join(body))


def svg_heatmap(grid, t_range, theta_range, title):
    w, h = 800, 600
    mx0, mx1, my0, my1 = 80, 740, 60, 550
    nt, nth = grid.shape
    finite = grid[np.isfinite(grid)]
    lo, hi = (float(finite.min()), float(finite.max())) if finite.size \
        else (0.0, 1.0)
    span = hi - lo if hi > lo else 1.0
    body = [f'<text x="400" y="30" text-anchor="middle" font-size="18">'
            f'{title}</text>']
    cw = (mx1 - mx0) / nt
    ch = (my1 - my0) / nth
    for i in range(nt):
        for j in range(nth):
            v = grid[i, j]
            if not np.isfinite(v):
                col = "#888888"
            else:
                u = (v - lo) / span
                r = int(255 * u)
                b = int(255 * (1 - u))
                col = f"rgb({r},60,{b})"
            body.append(f'<rect x="{mx0 + i * cw:.2f}" '
                        f'y="{my1 - (j + 1) * ch:.2f}" width="{cw:.2f}" '
                        f'height="{ch:.2f}" fill="{col}"/>')
    body.append(f'<text x="{(mx0 + mx1) / 2}" y="{my1 + 35}" '
                'text-anchor="middle" font-size="14">t</text>')
    body.append(f'<text x="30" y="{(my0 + my1) / 2}" font-size="14">'
                'theta</text>')
    body.append(f'<text x="{mx1 + 5}" y="{my0 + 10}" font-size="12">'
                f'max {hi:.3g}</text>')
    body.append(f'<text x="{mx1 + 5}" y="{my1}" font-size="12">'
                f'min {lo:.3g}</text>')
    return svg_document("\n".join(body))


# --- commands ----------------------------------------------------------------

def _load_config(path):
    try:
        with open(path) as fh:
            return parse_config(fh.read())
    except ConfigError as exc:
        print(f"config error at line {exc.line}, col {exc.col}: {exc}",
              file=sys.stderr)
        raise SystemExit(2)
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        raise SystemExit(2)


def cmd_verify(args):
    conf = _load_config(args.config) if args.config else {}
    names = ([n.strip() for n in args.suite.split(",") if n.strip()]
             if args.suite else
             [n.strip() for n in conf.get("suites", "").split(",")
              if n.strip()] or None)
    try:
        names, reports = verify_mod.run_suites(names)
    except KeyError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    payload = verify_mod.reports_to_json(names, reports,
                                         config_hash=_config_hash(conf))
    outdir = args.out or "."
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "verify_report.json"), "w") as fh:
        fh.write(payload)
    failed = [r for r in reports if not r.passed]
    for r in reports:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.check_id}: max_rel={r.max_rel_residual:.3e} "
              f"({r.wall_time:.1f}s)")
    if failed:
        print("failed checks: " + ",".join(r.check_id for r in failed),
              file=sys.stderr)
        return 1
    return 0


def cmd_scan(args):
    conf = _load_config(args.config) if args.config else {}
    spec = build_scan_spec(conf)
    try:
        summary, records = scan_mod.min_scan(spec, jobs=args.jobs)
    except Exception as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 3
    outdir = args.out or "."
    os.makedirs(outdir, exist_ok=True)
    formats = (args.format or "csv,json").split(",")
    if "csv" in formats:
        with open(os.path.join(outdir, "scan_records.csv"), "w") as fh:
            fh.write(scan_mod.records_to_csv(records))
    summary["config_hash"] = _config_hash(conf)
    summary["seed"] = spec.seed
    if "json" in formats:
        with open(os.path.join(outdir, "scan_summary.json"), "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
    if "svg" in formats:
        grid = np.full((spec.grid_t, spec.grid_theta), np.nan)
        t0, t1 = spec.t_range
        th0, th1 = spec.theta_range
        for r in records:
            if not np.isfinite(r.sec):
                continue
            i = min(int((r.t - t0) / (t1 - t0) * spec.grid_t),
                    spec.grid_t - 1)
            j = min(int((r.theta - th0) / (th1 - th0) * spec.grid_theta),
                    spec.grid_theta - 1)
            if not np.isfinite(grid[i, j]) or r.sec < grid[i, j]:
                grid[i, j] = r.sec
        with open(os.path.join(outdir, "scan_heatmap.svg"), "w") as fh:
            fh.write(svg_heatmap(grid, spec.t_range, spec.theta_range,
                                 "minimum sectional curvature per cell"))
    print(f"min sec = {summary['min_sec']} over {summary['n_records']} "
          f"records ({summary['n_failed']} failed)")
    return 0


def cmd_profile(args):
    conf = _load_config(args.config) if args.config else {}
    cfg = build_stage_config(conf)
    outdir = args.out or "."
    os.makedirs(outdir, exist_ok=True)
    params = cfg.psi_params
    what = args.what
    try:
        if what == "psi":
            ts = np.linspace(1e-3, np.pi / 4, 240)
            vals = [pa.psi(t, 0.0, params) for t in ts]
            cols = {"psi": [v.psi for v in vals],
                    "dpsi": [v.psi_t for v in vals],
                    "d2psi": [v.psi_tt for v in vals]}
            ann = [(np.pi / 4, params.nu_l / 2,
                    f"endpoint nu_l/2 = {params.nu_l / 2:.5f}")]
            svg = svg_line_plot(ts, list(cols.values()), list(cols),
                                "warping function along the meridian", ann)
        elif what == "meridian-curvature":
            cfg_s = cfg.at_stage("s")
            cfg3 = cfg.at_stage("nul")
            from . import curvature as cv
            ts = np.linspace(0.012, np.pi / 4 - 1e-4, conf.get("flow_steps",
                                                               33))
            zp0 = zl.zero_plane_at((0.1, 0.0, QI), cfg3)
            wh = pa.w_h_at(zp0, cfg3)
            curve = []
            for t in ts:
                pv = pa.psi(float(t), 0.0, params)
                curve.append(-cfg.s ** 2 * wh ** 2
                             * (pv.psi_t ** 2 + pv.psi * pv.psi_tt)
                             + cfg.s ** 4 * wh ** 2 * pv.psi_t ** 2)
            sign_t = next((float(t) for t, c in zip(ts, curve) if c > 0),
                          None)
            ann = [(sign_t, 0.0, f"sign change near t = {sign_t:.3f} "
                                 f"(nu = {cfg.nu:.3f})")] if sign_t else []
            cols = {"curv_s(zeta, W)": curve}
            svg = svg_line_plot(ts, list(cols.values()), list(cols),
                                "scaled-fiber curvature along the meridian",
                                ann)
        elif what == "zero-locus":
            ths = np.linspace(1e-3, np.pi / 2 - 1e-3, 240)
            ts = [pa.l_boundary_t(th) for th in ths]
            cols = {"boundary t(theta) of the vanishing locus": ts}
            ann = [(np.pi / 4, pa.l_boundary_t(np.pi / 4),
                    f"t = pi/6 intercept at theta = pi/4")]
            svg = svg_line_plot(ths, list(cols.values()), list(cols),
                                "vanishing locus boundary (L = 1)", ann)
        else:
            print(f"unknown profile target {what!r}", file=sys.stderr)
            return 2
    except Exception as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 3
    base = os.path.join(outdir, f"profile_{what}")
    with open(base + ".svg", "w") as fh:
        fh.write(svg)
    if what == "psi":
        rows = ["t," + ",".join(cols)]
        for i, t in enumerate(ts):
            rows.append("%.17g," % t
                        + ",".join("%.17g" % cols[k][i] for k in cols))
        with open(base + ".csv", "w") as fh:
            fh.write("\n".join(rows) + "\n")
    else:
        rows = ["x," + ",".join(cols)]
        xs = ts if what == "meridian-curvature" else ths
        for i, x in enumerate(xs):
            rows.append("%.17g," % x
                        + ",".join("%.17g" % cols[k][i] for k in cols))
        with open(base + ".csv", "w") as fh:
            fh.write("\n".join(rows) + "\n")
    print(f"wrote {base}.csv and {base}.svg")
    return 0


def main(argv=None):
    ap = argparse.ArgumentParser(prog="exotic-curv",
                                 description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name, fn in (("verify", cmd_verify), ("scan", cmd_scan),
                     ("profile", cmd_profile)):
        p = sub.add_parser(name)
        p.add_argument("--config", default=None)
        p.add_argument("--out", default=None)
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--format", default=None)
        if name == "verify":
            p.add_argument("--suite", default=None)
        if name == "profile":
            p.add_argument("--what", required=True,
                           choices=("psi", "meridian-curvature",
                                    "zero-locus"))
        p.set_defaults(func=fn)
    args = ap.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
