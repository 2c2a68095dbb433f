"""Command line front end.

Systems are described in a TOML file; every command reads the same config and
uses only the sections it needs.  Outputs are plain CSV and JSON files whose
bytes depend on nothing but the config, so reruns diff clean.

Exit codes: 0 on success, 2 for bad input (config, expression, grid), 3 when
a computation degenerates (domain error, no convergence, untrusted fit).
"""
from __future__ import annotations

import argparse
import json
import os
import sys

try:
    import tomllib
except ModuleNotFoundError:  # 3.10
    import tomli as tomllib

from .dimension import (EstimateError, ReportSettings, box_dimension,
                        dimension_report, moran_solve)
from .expr import DomainError, ParseError
from .fifcore import (ConvergenceError, FifSystem, GridError,
                      ValidationError, check_metric_contraction, eval_fif,
                      make_classical, make_system, sample_fif)
from .regularity import (ac_invariance_check, bv_invariance_check,
                         hoelder_invariance_check, oscillation_levels,
                         rescale, vbeta_invariance_check)

_SECTIONS = {
    "system": {"knots", "germ", "base", "scaling", "points", "q"},
    "construction": {"tolerance", "grid_exponent"},
    "oscillation": {"p", "m_max"},
    "regularity": {"holder_exponent", "vbeta_exponent"},
    "boxdim": {"m_min", "m_max"},
    "report": {"seed", "pair_count", "include_bilipschitz"},
    "output": {"dir"},
}


def load_config(path: str) -> dict:
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    for section, table in data.items():
        if section not in _SECTIONS:
            raise ValidationError(f"unknown config section [{section}]")
        if not isinstance(table, dict):
            raise ValidationError(f"[{section}] must be a table")
        for key in table:
            if key not in _SECTIONS[section]:
                raise ValidationError(f"unknown key '{key}' in [{section}]")
    if "system" not in data:
        raise ValidationError("config needs a [system] section")
    return data


def _typed(table: dict, section: str, key: str, kinds, default):
    value = table.get(key, default)
    if isinstance(value, bool) and bool not in kinds:
        raise ValidationError(f"[{section}] {key} must be a number")
    if not isinstance(value, kinds):
        raise ValidationError(f"[{section}] {key} has the wrong type")
    return value


def _float(cfg, section, key, default):
    return float(_typed(cfg.get(section, {}), section, key, (int, float), default))


def _int(cfg, section, key, default):
    return int(_typed(cfg.get(section, {}), section, key, (int,), default))


def _bool(cfg, section, key, default):
    return bool(_typed(cfg.get(section, {}), section, key, (bool,), default))


def _string_list(table, section, key):
    value = table.get(key)
    if (not isinstance(value, list) or not value
            or not all(isinstance(s, str) for s in value)):
        raise ValidationError(f"[{section}] {key} must be a list of expressions")
    return tuple(value)


def build_system(cfg: dict) -> FifSystem:
    table = cfg["system"]
    if "points" in table:
        extra = {"knots", "germ", "base"} & table.keys()
        if extra:
            raise ValidationError(
                f"the points form does not take {sorted(extra)}")
        points = table["points"]
        if (not isinstance(points, list) or len(points) < 3 or not all(
                isinstance(p, list) and len(p) == 2
                and all(isinstance(t, (int, float)) for t in p)
                for p in points)):
            raise ValidationError("[system] points must be a list of [x, y] pairs")
        return make_classical(tuple((float(x), float(y)) for x, y in points),
                              _string_list(table, "system", "scaling"),
                              _string_list(table, "system", "q"))
    for key in ("knots", "germ", "base", "scaling"):
        if key not in table:
            raise ValidationError(f"[system] is missing '{key}'")
    knots = table["knots"]
    if (not isinstance(knots, list) or len(knots) < 3
            or not all(isinstance(k, (int, float)) for k in knots)):
        raise ValidationError("[system] knots must be a list of numbers")
    for key in ("germ", "base"):
        if not isinstance(table[key], str):
            raise ValidationError(f"[system] {key} must be an expression string")
    return make_system(tuple(float(k) for k in knots), table["germ"],
                       table["base"], _string_list(table, "system", "scaling"))


def _construct(cfg: dict, tol_flag: float | None, m_max: int | None = None):
    sys_ = build_system(cfg)
    k = _int(cfg, "construction", "grid_exponent", 13)
    tol = tol_flag if tol_flag is not None else _float(
        cfg, "construction", "tolerance", 1e-8)
    lo, hi = sys_.interval
    if m_max is not None:
        k = max(k, m_max + 3)
        tol = min(tol, (hi - lo) * 0.5 ** m_max / 20.0)
    cells = sys_.maps.count * 2 ** k
    return sys_, sample_fif(sys_, cells, tol), tol


def _out_dir(cfg: dict, flag: str | None) -> str:
    table = cfg.get("output", {})
    path = flag or _typed(table, "output", "dir", (str,), ".")
    os.makedirs(path, exist_ok=True)
    return path


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _print_check(check) -> None:
    print(f"{check.tag}: {check.verdict} (lhs={check.lhs:.6g}, "
          f"rhs={check.rhs:.6g})")


def cmd_moran(args) -> int:
    try:
        ratios = tuple(float(t) for t in args.ratios.split(","))
    except ValueError:
        raise ValidationError(f"cannot parse ratios '{args.ratios}'") from None
    sol = moran_solve(ratios)
    print(f"exponent: {sol.exponent!r}")
    print(f"residual: {sol.residual!r}")
    return 0


def cmd_build(args) -> int:
    cfg = load_config(args.config)
    sys_, samples, tol = _construct(cfg, args.tol)
    out = _out_dir(cfg, args.out)
    samples.to_csv(os.path.join(out, "samples.csv"))
    _write_json(os.path.join(out, "samples_meta.json"), {
        "grid": samples.cells,
        "iterations": samples.meta["iterations"],
        "aligned": samples.meta["aligned"],
        "error": samples.err,
        "alpha_sup": sys_.alpha_sup,
        "bound": sys_.bound,
        "tolerance": tol,
    })
    print(f"wrote {samples.cells + 1} samples to {out}/samples.csv "
          f"(error bound {samples.err:.3g})")
    return 0


def cmd_eval(args) -> int:
    cfg = load_config(args.config)
    sys_ = build_system(cfg)
    try:
        xs = [float(t) for t in args.x.split(",")]
    except ValueError:
        raise ValidationError(f"cannot parse abscissas '{args.x}'") from None
    print("x,value,bound")
    for x in xs:
        value, bound = eval_fif(sys_, x, args.depth)
        print(f"{x!r},{value!r},{bound!r}")
    return 0


def cmd_osc(args) -> int:
    cfg = load_config(args.config)
    _, samples, _ = _construct(cfg, args.tol)
    p = _int(cfg, "oscillation", "p", 2)
    m_max = _int(cfg, "oscillation", "m_max", 12)
    beta = _float(cfg, "regularity", "vbeta_exponent", 1.0)
    profile = oscillation_levels(rescale(samples), p, m_max)
    out = _out_dir(cfg, args.out)
    profile.to_csv(os.path.join(out, "oscillation.csv"), beta)
    gamma = profile.growth_exponent()
    if gamma is None:
        print("oscillation vanishes at every resolved level")
    else:
        print(f"levels {profile.levels()[0]}..{profile.levels()[-1]}, "
              f"observed growth exponent {gamma!r}")
    return 0


def cmd_boxdim(args) -> int:
    cfg = load_config(args.config)
    m_min = _int(cfg, "boxdim", "m_min", 4)
    m_max = _int(cfg, "boxdim", "m_max", 11)
    _, samples, _ = _construct(cfg, args.tol, m_max=m_max)
    estimate = box_dimension(samples, m_min, m_max)
    out = _out_dir(cfg, args.out)
    estimate.to_csv(os.path.join(out, "boxdim.csv"))
    print(f"box dimension estimate {estimate.slope!r} "
          f"(max log residual {estimate.max_residual:.3g})")
    return 0


def cmd_report(args) -> int:
    cfg = load_config(args.config)
    sys_ = build_system(cfg)
    settings = ReportSettings(
        s=_float(cfg, "regularity", "holder_exponent", 0.5),
        beta=_float(cfg, "regularity", "vbeta_exponent", 0.5),
        p=_int(cfg, "oscillation", "p", 2),
        osc_m_max=_int(cfg, "oscillation", "m_max", 12),
        grid_exponent=_int(cfg, "construction", "grid_exponent", 13),
        tolerance=(args.tol if args.tol is not None
                   else _float(cfg, "construction", "tolerance", 1e-8)),
        box_m_min=_int(cfg, "boxdim", "m_min", 4),
        box_m_max=_int(cfg, "boxdim", "m_max", 11),
        seed=(args.seed if args.seed is not None
              else _int(cfg, "report", "seed", 42)),
        pair_count=_int(cfg, "report", "pair_count", 4096),
        include_bilipschitz=_bool(cfg, "report", "include_bilipschitz", True),
    )
    report = dimension_report(sys_, settings)
    out = _out_dir(cfg, args.out)
    _write_json(os.path.join(out, "report.json"), report.as_dict())
    print(f"box dimension estimate {report.estimate.slope!r}")
    for verdict in report.verdicts:
        if verdict.prediction is None:
            print(f"{verdict.tag}: no prediction ({verdict.note})")
        else:
            print(f"{verdict.tag}: prediction {verdict.prediction}, "
                  f"agreement {verdict.agreement}")
    return 0


def cmd_verify(args) -> int:
    cfg = load_config(args.config)
    sys_ = build_system(cfg)
    s = _float(cfg, "regularity", "holder_exponent", 0.5)
    beta = _float(cfg, "regularity", "vbeta_exponent", 0.5)
    p = _int(cfg, "oscillation", "p", 2)
    m_max = _int(cfg, "oscillation", "m_max", 12)
    for check in (check_metric_contraction(sys_),
                  hoelder_invariance_check(sys_, s),
                  vbeta_invariance_check(sys_, beta, p, m_max),
                  bv_invariance_check(sys_),
                  ac_invariance_check(sys_)):
        _print_check(check)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fifdim",
        description="construct fractal interpolation systems and test "
                    "dimension predictions against box counts")
    sub = parser.add_subparsers(dest="command", required=True)

    cfg = argparse.ArgumentParser(add_help=False)
    cfg.add_argument("--config", required=True, help="TOML system description")
    tuning = argparse.ArgumentParser(add_help=False)
    tuning.add_argument("--out", help="output directory (default from config)")
    tuning.add_argument("--tol", type=float,
                        help="construction tolerance override")

    p = sub.add_parser("moran", help="solve the similarity equation")
    p.add_argument("--ratios", required=True,
                   help="comma separated contraction ratios")
    p.set_defaults(run=cmd_moran)

    p = sub.add_parser("build", parents=[cfg, tuning],
                       help="construct attractor samples")
    p.set_defaults(run=cmd_build)

    p = sub.add_parser("eval", parents=[cfg],
                       help="evaluate the attractor pointwise")
    p.add_argument("--x", required=True, help="comma separated abscissas")
    p.add_argument("--depth", type=int, default=24,
                   help="address depth (default 24)")
    p.set_defaults(run=cmd_eval)

    p = sub.add_parser("osc", parents=[cfg, tuning],
                       help="level oscillation profile of the attractor")
    p.set_defaults(run=cmd_osc)

    p = sub.add_parser("boxdim", parents=[cfg, tuning],
                       help="box-counting dimension estimate")
    p.set_defaults(run=cmd_boxdim)

    p = sub.add_parser("report", parents=[cfg, tuning],
                       help="full dimension report as JSON")
    p.add_argument("--seed", type=int, help="seed for the sampled ratios")
    p.set_defaults(run=cmd_report)

    p = sub.add_parser("verify", parents=[cfg],
                       help="hypothesis checks only, no construction")
    p.set_defaults(run=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.run(args)
    except (ParseError, ValidationError, GridError, tomllib.TOMLDecodeError,
            OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DomainError, ConvergenceError, EstimateError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
