"""Command-line front end.

Every command reads a flat JSON config (``--config``) whose keys can be
overridden with ``--set key=value`` (value parsed as JSON when possible)
and the common flags.  Exit status: 0 on success, 2 on invalid input,
3 on numerical failure.
"""
import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import annulus, birkhoff, catalog, euler, flow_compare, phase_flow
from .errors import NumericalError, ValidationError
from .outputs import atomic_write, csv_text, json_text, level_set_svg

COMMANDS = ("regimes", "periods", "omega", "catalog", "birkhoff", "twist", "flowcmp", "invariant-circle")

DEFAULT_WINDOWS = [[-0.95, -0.05], [0.05, 0.95], [1.05, 20.0]]

DEFAULTS = {
    "regimes": {"c_list": [-1.0, -0.5, 0.0, 0.5, 1.0, 2.0], "format": "csv"},
    "periods": {"c_list": [-0.5, 0.5, 2.0, 10.0], "lambda": math.e, "format": "csv"},
    "omega": {"c_min": 1.001, "c_max": 100.0, "n": 60, "spacing": "log", "lambda": math.e,
              "normalization": "psl2", "format": "csv", "tol": 1e-9},
    "catalog": {"lambda": math.e, "q_max": 3, "windows": DEFAULT_WINDOWS, "n_grid": 400,
                "format": "json", "tol": 1e-10},
    "birkhoff": {"t0": 1.0, "kappa": [], "k_min": 1, "k_max": 100, "format": "csv", "tol": 1e-9},
    "twist": {"k": 5, "t0": 1.0, "eps": 1e-6, "mode": 1, "n_grid": 512, "format": "csv", "tol": 1e-12},
    "flowcmp": {"m": 5, "i0_grid": [0.2, 0.1, 0.05], "format": "csv", "tol": 1e-12},
    "invariant-circle": {"family": "smap", "k": 5, "t0": 1.0, "eps": 1e-4, "n": 256,
                         "multiplier": 2.0, "format": "csv", "tol": 1e-10},
}


class RunConfig(dict):
    """Flat parameter mapping with validation helpers."""

    def num(self, key, lo=-math.inf, hi=math.inf, strict_lo=False):
        if key not in self:
            raise ValidationError(f"missing parameter '{key}'")
        v = self[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ValidationError(f"'{key}' must be a number, got {v!r}")
        v = float(v)
        if not (v > lo if strict_lo else v >= lo) or not v <= hi or math.isnan(v):
            raise ValidationError(f"'{key}' = {v!r} is out of range")
        return v

    def integer(self, key, lo=None):
        v = self.get(key)
        if isinstance(v, bool) or not isinstance(v, int):
            if isinstance(v, float) and v.is_integer():
                v = int(v)
            else:
                raise ValidationError(f"'{key}' must be an integer, got {v!r}")
        if lo is not None and v < lo:
            raise ValidationError(f"'{key}' = {v} must be >= {lo}")
        return v

    def num_list(self, key, allow_empty=False):
        v = self.get(key)
        if not isinstance(v, list) or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
            raise ValidationError(f"'{key}' must be a list of numbers")
        if not v and not allow_empty:
            raise ValidationError(f"'{key}' must not be empty")
        return [float(x) for x in v]

    def tol(self):
        return self.num("tol", 0.0, 1e-2, strict_lo=True)

    def lam(self):
        return self.num("lambda", 1.0, strict_lo=True)


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def build_config(args) -> RunConfig:
    cfg = dict(DEFAULTS[args.command])
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(loaded, dict):
            raise ValidationError("config must be a JSON object")
        cfg.update(loaded)
    for item in args.set or []:
        if "=" not in item:
            raise ValidationError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        cfg[k.strip()] = _parse_value(v)
    for key in ("out", "format", "tol", "jobs"):
        v = getattr(args, key)
        if v is not None:
            cfg[key] = v
    cfg = RunConfig(cfg)
    if cfg.get("format") not in ("csv", "json", "svg"):
        raise ValidationError(f"unknown format {cfg.get('format')!r}")
    if "tol" in cfg:
        cfg.tol()
    return cfg


def _mapper(cfg):
    jobs = int(cfg.get("jobs", 1) or 1)
    if jobs <= 1:
        return map, None
    pool = ProcessPoolExecutor(max_workers=jobs)
    return pool.map, pool


def _table(cfg, header, rows):
    fmt = cfg["format"]
    if fmt == "csv":
        return csv_text(header, rows)
    if fmt == "json":
        return json_text([dict(zip(header, r)) for r in rows])
    raise ValidationError(f"format {fmt!r} is not available for this command")


def cmd_regimes(cfg):
    cs = cfg.num_list("c_list")
    if cfg["format"] == "svg":
        return level_set_svg(sorted(set(cs) | {-1.0, 0.0, 1.0}))
    rows = []
    for c in cs:
        r = euler.classify_regime(c)
        rows.append((c, r.tag.value, r.casimir_periodic, r.has_torus))
    return _table(cfg, ["c", "regime", "casimir_periodic", "has_torus"], rows)


def cmd_periods(cfg):
    cs = cfg.num_list("c_list")
    lam = cfg.get("lambda")
    rows = []
    for c in cs:
        reg = euler.classify_regime(c)
        tg = euler.t_geod(c) if c > -1.0 else None
        tc = tc_half = None
        if reg.casimir_periodic and c != 0.0 and c >= -1.0:
            if c > 0.0:
                tc = phase_flow.t_cas(c, cfg.lam())
            else:
                tc = phase_flow.t_cas(c, None, phase_flow.FORMULA)
                tc_half = phase_flow.t_cas(c, None, phase_flow.PSL2)
        rows.append((c, reg.tag.value, tg, tc, tc_half))
    return _table(cfg, ["c", "regime", "t_geod", "t_cas", "t_cas_psl2"], rows)


def _grid(cfg):
    if "c_list" in cfg and "c_min" not in cfg:
        return cfg.num_list("c_list")
    lo, hi = cfg.num("c_min"), cfg.num("c_max")
    n = cfg.integer("n", 2)
    if not lo < hi:
        raise ValidationError("c_min must be below c_max")
    if cfg.get("spacing", "linear") == "log":
        if lo <= 0.0:
            raise ValidationError("log spacing needs c_min > 0")
        return list(np.geomspace(lo, hi, n))
    return list(np.linspace(lo, hi, n))


def _omega_point(args):
    c, lam, tol, norm = args
    return phase_flow.rotation_number(c, lam, tol, normalization=norm)


def cmd_omega(cfg):
    grid = _grid(cfg)
    lam = cfg.lam() if max(grid) > 0.0 else None
    tol = cfg.tol()
    norm = cfg.get("normalization", "psl2")
    if norm not in ("psl2", "formula"):
        raise ValidationError(f"unknown normalization {norm!r}")
    mapper, pool = _mapper(cfg)
    try:
        cache = dict(zip(grid, mapper(_omega_point, [(c, lam, tol, norm) for c in grid])))
    finally:
        if pool:
            pool.shutdown()

    def omega_fn(c):
        return cache[c] if c in cache else _omega_point((c, lam, tol, norm))

    pts = phase_flow.omega_lift_scan(grid, lam, tol, norm, omega_fn=omega_fn)
    header = ["c", "omega_mod1", "omega_lift", "t_cas", "t_geod", "holonomy_residual", "normalization"]
    rows = [(p.c, p.omega_mod1, p.omega_lift, p.t_cas, p.t_geod, p.holonomy_residual, p.normalization) for p in pts]
    return _table(cfg, header, rows)


def cmd_catalog(cfg):
    lam = cfg.lam()
    q_max = cfg.integer("q_max", 1)
    windows = cfg.get("windows")
    if not isinstance(windows, list) or not windows:
        raise ValidationError("'windows' must be a non-empty list of [lo, hi] pairs")
    for w in windows:
        if not (isinstance(w, list) and len(w) == 2):
            raise ValidationError(f"bad window {w!r}")
    mapper, pool = _mapper(cfg)
    try:
        recs = catalog.catalog(lam, q_max, windows, cfg.tol(), cfg.integer("n_grid", 8), mapper)
    finally:
        if pool:
            pool.shutdown()
    dicts = [r.as_dict() for r in recs]
    if cfg["format"] == "json":
        return json_text(dicts)
    header = ["c", "regime", "lambda", "p", "q", "length", "spiraling", "closure_residual"]
    return _table(cfg, header, [tuple(d[k] for k in header) for d in dicts])


def cmd_birkhoff(cfg):
    kappa = cfg.num_list("kappa", allow_empty=True)
    H = birkhoff.ModelHamiltonian(cfg.num("t0", 0.0, strict_lo=True), tuple(kappa))
    k_min, k_max = cfg.integer("k_min", 1), cfg.integer("k_max", 1)
    if k_max < k_min:
        raise ValidationError("k_max must be >= k_min")
    rows = birkhoff.birkhoff_table(H, k_min, k_max, cfg.tol())
    header = ["k", "I_k", "l_k", "l_k_minus_leading", "dtheta_residual"]
    return _table(cfg, header, rows)


def cmd_twist(cfg):
    t0 = cfg.num("t0", 0.0, strict_lo=True)
    k = cfg.integer("k", 1)
    eps = cfg.num("eps")
    smap = birkhoff.s_map(k, t0, birkhoff.kicked_perturbation(eps, t0, cfg.integer("mode", 1)))
    tm = annulus.s_map_twist(smap)
    pts = annulus.pb_fixed_point(tm, cfg.tol(), cfg.integer("n_grid", 8))
    jc = k * math.pi / t0
    rows = [(2.0 * math.pi * x, y, y - jc, annulus.fixed_point_residual(tm, x, y)) for x, y in pts]
    return _table(cfg, ["theta", "J", "J_minus_center", "residual"], rows)


def cmd_flowcmp(cfg):
    m = cfg.integer("m", 0)
    grid = cfg.num_list("i0_grid")
    if any(i <= 0.0 for i in grid):
        raise ValidationError("i0_grid entries must be positive")
    rep = flow_compare.closeness_report(lambda i: flow_compare.model_flow_pair(m), grid, m, cfg.tol())
    header = ["I0", "horizon", "sup_distance", "sup_rate", "fitted_exponent", "rate_exponent", "expected_exponent"]
    rows = [(r.i0, r.horizon, r.sup_distance, r.sup_rate, rep.distance_exponent, rep.rate_exponent,
             rep.expected_exponent) for r in rep.rows]
    return _table(cfg, header, rows)


def _demo_family(mult):
    def family(eps):
        A = lambda y, f: y + eps * np.sin(y) * (1.0 + f)
        B = lambda y, f: mult * f + eps * (np.cos(y) + f * f * np.sin(2.0 * y))
        return A, B

    return family


def cmd_invariant_circle(cfg):
    eps = cfg.num("eps")
    n = cfg.integer("n", 4)
    fam = cfg.get("family", "smap")
    if fam == "smap":
        k, t0 = cfg.integer("k", 1), cfg.num("t0", 0.0, strict_lo=True)
        g = annulus.invariant_circle_ck(k, t0, lambda e: birkhoff.kicked_perturbation(e, t0), eps, cfg.tol(), n)
        offset = k * math.pi / t0
    elif fam == "normally-hyperbolic":
        family = _demo_family(cfg.num("multiplier"))
        g = annulus.invariant_graph_newton(family, eps, annulus.zero_graph(annulus.GraphDomain.circle(n)), cfg.tol())
        offset = 0.0
    else:
        raise ValidationError(f"unknown family {fam!r}")
    rows = [(float(y), float(f) + offset) for y, f in zip(g.domain.nodes[:, 0], g.values[:, 0])]
    return _table(cfg, ["y", "graph"], rows)


HANDLERS = {
    "regimes": cmd_regimes,
    "periods": cmd_periods,
    "omega": cmd_omega,
    "catalog": cmd_catalog,
    "birkhoff": cmd_birkhoff,
    "twist": cmd_twist,
    "flowcmp": cmd_flowcmp,
    "invariant-circle": cmd_invariant_circle,
}


def make_parser():
    ap = argparse.ArgumentParser(prog="srgeodesics", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="flat JSON config file")
    ap.add_argument("--out", help="output path (default: stdout)")
    ap.add_argument("--format", choices=("csv", "json", "svg"))
    ap.add_argument("--tol", type=float)
    ap.add_argument("--jobs", type=int)
    ap.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config entry")
    return ap


def main(argv=None) -> int:
    ap = make_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        cfg = build_config(args)
        text = HANDLERS[args.command](cfg)
    except ValidationError as exc:
        print(f"{args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, ArithmeticError) as exc:
        print(f"{args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    data = text.encode("utf-8")
    out = cfg.get("out")
    if out:
        atomic_write(out, data)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
