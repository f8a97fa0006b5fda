"""Command-line front end.

Settings are resolved as built-in defaults < INI config file (``--config``)
< command-line flags.  Config sections and keys::

    [params]  m, m0, alpha, beta, Z, Lambda
    [grid]    n, rmax
    [run]     tol, t_mode, lmax, extrapolate
    [output]  out, format
    [sweep]   betaZ, Lambda, alpha      (comma-separated lists)

Set ``PFL_THREADS`` to cap the BLAS thread pools.
"""

from __future__ import annotations

import os

_threads = os.environ.get("PFL_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

import argparse  # noqa: E402
import configparser  # noqa: E402
import csv  # noqa: E402
import io  # noqa: E402
import math  # noqa: E402
import sys  # noqa: E402
import warnings  # noqa: E402
from dataclasses import dataclass, field  # noqa: E402

from . import renorm  # noqa: E402
from .shifts import (  # noqa: E402
    LEADING_ORDER_CAVEAT,
    binding_energy,
    f_function,
    f_zero_closed,
    jensen_lower_bound,
    lamb_splitting,
    level_shift,
    s_function,
)
from .spectral import RadialGrid  # noqa: E402
from .units import Params, to_frequency  # noqa: E402

COMMANDS = (
    "self-energy", "dispersion", "mass", "s-function", "f-function",
    "binding", "level-shift", "lamb", "sweep",
)

# (config section, key, dest, type)
_CONFIG_KEYS = [
    ("params", "m", "m", float),
    ("params", "m0", "m0", float),
    ("params", "alpha", "alpha", float),
    ("params", "beta", "beta", float),
    ("params", "Z", "Z", float),
    ("params", "Lambda", "Lambda", float),
    ("grid", "n", "grid_n", int),
    ("grid", "rmax", "grid_rmax", float),
    ("run", "tol", "tol", float),
    ("run", "t_mode", "t_mode", str),
    ("run", "lmax", "lmax", int),
    ("run", "extrapolate", "extrapolate", "bool"),
    ("output", "out", "out", str),
    ("output", "format", "format", str),
    ("sweep", "betaZ", "sweep_betaZ", "list"),
    ("sweep", "Lambda", "sweep_Lambda", "list"),
    ("sweep", "alpha", "sweep_alpha", "list"),
]


class ConfigError(ValueError):
    """Invalid configuration file or flag value."""


@dataclass
class RunConfig:
    command: str
    params: Params
    grid: RadialGrid
    tol: float
    t_mode: str
    L_max: int
    extrapolate: bool
    out: str | None
    format: str
    extra: dict = field(default_factory=dict)


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.replace(",", " ").split()]


def _locate(path: str, section: str, key: str) -> int | None:
    """Line number of ``key`` inside ``[section]`` (for diagnostics)."""
    current = None
    with open(path, encoding="utf-8") as fh:
        for no, line in enumerate(fh, 1):
            s = line.strip()
            if s.startswith("[") and s.endswith("]"):
                current = s[1:-1].strip()
            elif current == section and "=" in s:
                if s.split("=", 1)[0].strip().lower() == key.lower():
                    return no
    return None


def read_config(path: str) -> dict:
    """Parse an INI file into argparse destinations."""
    cp = configparser.ConfigParser()
    cp.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    known = {(s, k.lower()) for s, k, _, _ in _CONFIG_KEYS}
    for section in cp.sections():
        for key in cp[section]:
            if (section, key.lower()) not in known:
                line = _locate(path, section, key)
                raise ConfigError(f"{path}:{line}: unknown key [{section}] {key}")
    out = {}
    for section, key, dest, typ in _CONFIG_KEYS:
        if not cp.has_section(section):
            continue
        match = [k for k in cp[section] if k.lower() == key.lower()]
        if not match:
            continue
        raw = cp[section][match[0]]
        try:
            if typ == "bool":
                value = cp[section].getboolean(match[0])
            elif typ == "list":
                value = _float_list(raw)
            else:
                value = typ(raw)
        except ValueError as exc:
            line = _locate(path, section, match[0])
            raise ConfigError(f"{path}:{line}: [{section}] {key} = {raw!r}: {exc}") from exc
        out[dest] = value
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="pfl",
        description="Mass renormalization and radiative level shifts (natural units, energies in m c^2).",
    )
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="INI file with [params] [grid] [run] [output] [sweep] sections")
    g = p.add_argument_group("physical parameters")
    g.add_argument("--m", type=float, help="physical mass (default 1)")
    g.add_argument("--m0", type=float, help="bare mass (default: derived from m)")
    g.add_argument("--alpha", type=float, help="radiation coupling (default 1/137)")
    g.add_argument("--beta", type=float, help="Coulomb coupling (default 1/137)")
    g.add_argument("--Z", type=float, help="nuclear charge (default 1)")
    g.add_argument("--Lambda", type=float, help="ultraviolet cutoff (default 1)")
    n = p.add_argument_group("numerics")
    n.add_argument("--tol", type=float, help="quadrature tolerance")
    n.add_argument("--grid-n", dest="grid_n", type=int, help="radial grid points (default 2000)")
    n.add_argument("--grid-rmax", dest="grid_rmax", type=float, help="box radius in 1/(m beta Z) (default 200)")
    n.add_argument("--t-mode", dest="t_mode", choices=("bound", "leading", "resolvent"))
    n.add_argument("--lmax", type=int, help="partial-wave cutoff for resolvent mode (default 4)")
    n.add_argument("--no-extrapolate", dest="extrapolate", action="store_false", default=None,
                   help="skip the doubled grid and Richardson step")
    c = p.add_argument_group("command inputs")
    c.add_argument("--e", type=_float_list, help="argument(s) of s-function / f-function")
    c.add_argument("--P", type=_float_list, help="total momentum |P| or Px,Py,Pz (dispersion)")
    c.add_argument("--n", type=int, default=1, help="principal quantum number (level-shift)")
    c.add_argument("--l", type=int, default=0, help="orbital quantum number (level-shift)")
    c.add_argument("--sweep-betaZ", dest="sweep_betaZ", type=_float_list)
    c.add_argument("--sweep-Lambda", dest="sweep_Lambda", type=_float_list)
    c.add_argument("--sweep-alpha", dest="sweep_alpha", type=_float_list)
    o = p.add_argument_group("output")
    o.add_argument("--out", help="output file (default: stdout)")
    o.add_argument("--format", choices=("csv", "json"))
    return p


_DEFAULTS = {
    "m": 1.0, "m0": None, "alpha": 1.0 / 137.0, "beta": 1.0 / 137.0, "Z": 1.0, "Lambda": 1.0,
    "tol": None, "grid_n": 2000, "grid_rmax": 200.0, "t_mode": "leading", "lmax": 4,
    "extrapolate": True, "out": None, "format": "json",
    "sweep_betaZ": None, "sweep_Lambda": None, "sweep_alpha": None,
}


def parse_config(argv=None) -> RunConfig:
    args = build_parser().parse_args(argv)
    merged = dict(_DEFAULTS)
    if args.config:
        merged.update(read_config(args.config))
    for key in _DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    if merged["t_mode"] not in ("bound", "leading", "resolvent"):
        raise ConfigError(f"t_mode must be bound, leading or resolvent, got {merged['t_mode']!r}")
    if merged["format"] not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {merged['format']!r}")
    if merged["tol"] is not None and not merged["tol"] > 0:
        raise ConfigError("tol must be positive")
    params = Params(
        m=merged["m"], m0=merged["m0"], alpha=merged["alpha"], beta=merged["beta"],
        Z=merged["Z"], Lambda=merged["Lambda"],
    )
    grid = RadialGrid(n_points=merged["grid_n"], r_max=merged["grid_rmax"])
    extra = {"e": args.e, "P": args.P, "n": args.n, "l": args.l,
             "sweep_betaZ": merged["sweep_betaZ"], "sweep_Lambda": merged["sweep_Lambda"],
             "sweep_alpha": merged["sweep_alpha"]}
    return RunConfig(
        args.command, params, grid, merged["tol"], merged["t_mode"], merged["lmax"],
        bool(merged["extrapolate"]), merged["out"], merged["format"], extra,
    )


# -- output -------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        if math.isnan(x) or math.isinf(x):
            return "null"
        return format(x, ".17g")
    return _json_str(str(x))


def _json_str(s: str) -> str:
    out = s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
    return f'"{out}"'


def to_json(obj, indent: int = 0) -> str:
    """Deterministic JSON with 17 significant digits for floats."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if obj is None:
        return "null"
    if hasattr(obj, "item") and not isinstance(obj, (list, tuple, dict)):
        obj = obj.item()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{_json_str(str(k))}: {to_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        return "[" + ", ".join(to_json(v, indent + 1) for v in obj) + "]"
    if isinstance(obj, (bool, int, float)):
        return _fmt(obj)
    return _json_str(str(obj))


def to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    cols = list(rows[0]) if rows else []
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in rows:
        vals = []
        for c in cols:
            v = row.get(c)
            if v is None:
                vals.append("")
            elif isinstance(v, float) or hasattr(v, "item"):
                vals.append(format(float(v), ".17g"))
            else:
                vals.append(str(v))
        w.writerow(vals)
    return buf.getvalue()


def _report_row(rep) -> dict:
    row = {"n": rep.n, "l": rep.l, "convention": rep.convention, "t_method": rep.t_method}
    for name in ("coulomb_term", "s_term", "t_term", "total", "bethe_approx", "jensen_bound",
                 "convergence_error"):
        row[f"{name}_mc2"] = getattr(rep, name)
    for name, v in rep.in_MHz.items():
        row[f"{name}_MHz"] = v
    return row


# -- commands -------------------------------------------------------------------

def _cmd_self_energy(cfg):
    p = cfg.params
    m0 = renorm.resolve_bare_mass(p)
    e = renorm.self_energy(p)
    row = {"alpha": p.alpha, "Lambda_mc2": p.Lambda, "m_mc2": p.m, "m0_mc2": m0,
           "self_energy_mc2": e, "self_energy_MHz": to_frequency(e, p)}
    return [row], row, [f"self-energy = {e:.12g} m c^2"]


def _cmd_dispersion(cfg):
    p = cfg.params
    P = cfg.extra["P"] or [0.05 * renorm.resolve_bare_mass(p)]
    res = renorm.dispersion_shift(P if len(P) > 1 else P[0], p, **({"tol": cfg.tol} if cfg.tol else {}))
    p2 = sum(x * x for x in res.P)
    pred = res.p2_coefficient * p2
    rel = (res.shift - pred) / pred if pred else 0.0
    row = {"Px": res.P[0], "Py": res.P[1], "Pz": res.P[2], "shift_mc2": res.shift,
           "p2_coefficient": res.p2_coefficient, "quadratic_prediction_mc2": pred,
           "relative_deviation": rel, "error_estimate_mc2": res.error_estimate}
    return [row], row, [f"E_P - E_0 = {res.shift:.12g}; quadratic form {pred:.12g} (rel {rel:.3g})"]


def _cmd_mass(cfg):
    p = cfg.params
    if p.m0 is not None:
        fwd = renorm.physical_mass(p.m0, p.alpha, p.Lambda)
        back = renorm.bare_mass(fwd.m, p.alpha, p.Lambda)
        m, m0 = fwd.m, p.m0
    else:
        back = renorm.bare_mass(p.m, p.alpha, p.Lambda)
        m, m0 = p.m, back.m0
    rt = abs(renorm.physical_mass(back.m0, p.alpha, p.Lambda).m - m) / m
    row = {"m_mc2": m, "m0_mc2": m0, "alpha": p.alpha, "Lambda_mc2": p.Lambda,
           "roundtrip_residual": rt, "iterations": back.iterations,
           "dipole_mass_mc2": renorm.dipole_mass(m0, p.alpha, p.Lambda)}
    return [row], row, [f"m = {m:.15g}, m0 = {m0:.15g}, round-trip residual {rt:.2g}"]


def _cmd_s_function(cfg):
    es = cfg.extra["e"] if cfg.extra["e"] is not None else [0.0]
    kw = {"tol": cfg.tol} if cfg.tol else {}
    rows = [{"e": e, "S": s_function(e, **kw)} for e in es]
    return rows, rows if len(rows) > 1 else rows[0], [f"S({r['e']:.6g}) = {r['S']:.15g}" for r in rows]


def _cmd_f_function(cfg):
    es = cfg.extra["e"] if cfg.extra["e"] is not None else [0.0]
    lam = cfg.params.Lambda
    kw = {"tol": cfg.tol} if cfg.tol else {}
    rows = [{"e": e, "Lambda": lam, "f": f_function(e, lam, **kw), "f_zero_closed": f_zero_closed(lam)}
            for e in es]
    return rows, rows if len(rows) > 1 else rows[0], [f"f({r['e']:.6g}, {lam:g}) = {r['f']:.15g}" for r in rows]


def _shift_kwargs(cfg):
    kw = {"t_mode": cfg.t_mode, "L_max": cfg.L_max, "extrapolate": cfg.extrapolate}
    if cfg.tol:
        kw["tol"] = cfg.tol
    return kw


def _report_summary(rep):
    mhz = rep.in_MHz
    lines = [
        f"n={rep.n} l={rep.l} ({rep.convention} convention, T mode {rep.t_method})",
        f"  S term      {mhz['s_term']:.6f} MHz",
        f"  T term      {mhz['t_term']:.6f} MHz",
        f"  Bethe form  {mhz['bethe_approx']:.6f} MHz",
        f"  convergence error {mhz['convergence_error']:.3g} MHz",
    ]
    if "jensen_shift" in mhz:
        lines.append(f"  Jensen shift {mhz['jensen_shift']:.6f} MHz")
    return lines


def _cmd_binding(cfg):
    rep = binding_energy(cfg.params, cfg.grid, **_shift_kwargs(cfg))
    return [_report_row(rep)], rep.to_dict(), _report_summary(rep)


def _cmd_level_shift(cfg):
    rep = level_shift(cfg.extra["n"], cfg.extra["l"], cfg.params, cfg.grid, **_shift_kwargs(cfg))
    return [_report_row(rep)], rep.to_dict(), _report_summary(rep)


def _cmd_lamb(cfg):
    res = lamb_splitting(cfg.params, cfg.grid, **_shift_kwargs(cfg))
    row = {"splitting_mc2": res.value, "splitting_MHz": res.value_MHz,
           "convergence_error_MHz": res.convergence_error_MHz,
           "radiative_2s_MHz": to_frequency(res.level_2s.radiative, cfg.params),
           "radiative_2p_MHz": to_frequency(res.level_2p.radiative, cfg.params)}
    doc = dict(row)
    doc["level_2s"] = res.level_2s.to_dict()
    doc["level_2p"] = res.level_2p.to_dict()
    lines = [f"2s - 2p splitting = {res.value_MHz:.6f} MHz (+- {res.convergence_error_MHz:.3g})"]
    return [row], doc, lines


def _cmd_sweep(cfg):
    base = cfg.params
    bzs = cfg.extra["sweep_betaZ"] or [base.betaZ]
    lams = cfg.extra["sweep_Lambda"] or [base.Lambda]
    alphas = cfg.extra["sweep_alpha"] or [base.alpha]
    rows = []
    for bz in bzs:
        for lam in lams:
            for a in alphas:
                p = base.with_(beta=bz / base.Z, Lambda=lam, alpha=a)
                m0 = renorm.resolve_bare_mass(p)
                rep = binding_energy(p, cfg.grid, **_shift_kwargs(cfg))
                row = {"betaZ": bz, "Lambda_mc2": lam, "alpha": a, "m0_mc2": m0,
                       "self_energy_mc2": renorm.self_energy(p)}
                row.update({k: v for k, v in _report_row(rep).items() if k not in ("n", "l", "convention")})
                rows.append(row)
    return rows, rows, [f"{len(rows)} sweep points"]


_DISPATCH = {
    "self-energy": _cmd_self_energy,
    "dispersion": _cmd_dispersion,
    "mass": _cmd_mass,
    "s-function": _cmd_s_function,
    "f-function": _cmd_f_function,
    "binding": _cmd_binding,
    "level-shift": _cmd_level_shift,
    "lamb": _cmd_lamb,
    "sweep": _cmd_sweep,
}


def run(cfg: RunConfig, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        rows, doc, lines = _DISPATCH[cfg.command](cfg)
    text = to_csv(rows) if cfg.format == "csv" else to_json(doc) + "\n"
    summary = stderr if cfg.out is None else stdout
    if cfg.out is None:
        stdout.write(text)
    else:
        with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    for line in lines:
        print(line, file=summary)
    for w in caught:
        print(f"warning: {w.message}", file=summary)
    print(f"note: {LEADING_ORDER_CAVEAT}", file=summary)
    return 0


def main(argv=None) -> int:
    try:
        cfg = parse_config(argv)
    except ConfigError as exc:
        print(f"pfl: config error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"pfl: invalid parameters: {exc}", file=sys.stderr)
        return 2
    try:
        return run(cfg)
    except Exception as exc:  # report any module failure with context
        print(f"pfl {cfg.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
