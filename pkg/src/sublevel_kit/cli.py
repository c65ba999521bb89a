"""Command-line front end: per-field computations, identity checks, and a
corpus-wide report battery.

Exit status: 0 when every requested check passes (or the command is a pure
computation), 1 when a check fails or a computation cannot be completed,
2 on usage or configuration errors.  All outputs are deterministic for a
given configuration: fixed-precision CSV, sorted JSON keys, seeded
sampling, no timestamps.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._util import default_threads, format_sig
from .asymptotics import default_fit_levels, fit_exponent
from .errors import (
    FieldIdError,
    LevelRangeError,
    ParameterError,
    SublevelKitError,
)
from .field import corpus_ids, get_field
from .gelfand_leray import check_coarea, check_main_theorem, check_v_prime_equals_j
from .geometry import area as area_op
from .piecewise import check_dilation, check_piecewise_theorem
from .reporting import CheckReport
from .volume import volume_curve

COMMANDS = ("volume", "area", "glint", "check-main", "check-coarea",
            "check-piecewise", "check-dilation", "loja-fit", "report")

# Default work budget: sample count for Monte Carlo paths, and the grid
# resolution is its dim-th root (so one budget spans 512^2 and 256^3).
DEFAULT_BUDGET = 2 ** 24

MIN_RESOLUTION = 32
MAX_RESOLUTION = 512


@dataclass
class RunConfig:
    """Everything a run needs; equal configs give byte-identical outputs."""

    command: str
    field_id: Optional[str] = None
    levels: Optional[np.ndarray] = None
    budget: int = DEFAULT_BUDGET
    seed: int = 0
    threads: int = 1
    out: Optional[str] = None
    format: str = "both"
    filter: str = ""

    def resolution(self, dim):
        """Grid cells per axis implied by the budget for a dim-d field."""
        if self.budget <= 0:
            raise ParameterError(f"budget must be positive, got {self.budget}")
        root = int(round(self.budget ** (1.0 / dim)))
        return min(MAX_RESOLUTION, max(MIN_RESOLUTION, root))

    @property
    def samples(self):
        if self.budget <= 0:
            raise ParameterError(f"budget must be positive, got {self.budget}")
        return int(self.budget)


def parse_levels(text):
    """Parse a --levels value.

    "lo:hi:count" -> linear grid, "log:lo:hi:count" -> log grid,
    "a,b,c" -> explicit list.
    """
    text = text.strip()
    try:
        if text.startswith("log:"):
            lo_s, hi_s, n_s = text[4:].split(":")
            lo, hi, n = float(lo_s), float(hi_s), int(n_s)
            if n < 1 or lo <= 0 or hi <= lo:
                raise ValueError
            return np.geomspace(lo, hi, n)
        if ":" in text:
            lo_s, hi_s, n_s = text.split(":")
            lo, hi, n = float(lo_s), float(hi_s), int(n_s)
            if n < 1 or hi <= lo:
                raise ValueError
            return np.linspace(lo, hi, n)
        return np.asarray([float(v) for v in text.split(",")], dtype=float)
    except ValueError:
        raise ValueError(
            f"bad --levels {text!r}; expected lo:hi:count, log:lo:hi:count, "
            "or a comma-separated list") from None


def read_config_file(path):
    """Parse a key=value config file ('#' starts a comment)."""
    values = {}
    with open(path) as fh:
        for ln, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{ln}: expected key=value, got {line!r}")
            key, val = line.split("=", 1)
            values[key.strip()] = val.strip()
    return values


def build_config(argv):
    parser = argparse.ArgumentParser(
        prog="sublevel-kit",
        description=("Volumes of sublevel sets, areas of level sets, fiber "
                     "integrals, and the identities connecting them."))
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("field", nargs="?", default=None,
                        help="corpus field id (name:dim[:params]); "
                             "for report: an optional id substring filter")
    parser.add_argument("--levels", default=None,
                        help="lo:hi:count | log:lo:hi:count | comma list")
    parser.add_argument("--budget", type=int, default=None,
                        help=f"samples for Monte Carlo, dim-th root is the "
                             f"grid resolution (default {DEFAULT_BUDGET})")
    parser.add_argument("--seed", type=int, default=None,
                        help="RNG seed (default: $SUBLEVEL_KIT_SEED or 0)")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: hardware parallelism)")
    parser.add_argument("--out", default=None, help="output file prefix")
    parser.add_argument("--format", choices=("csv", "json", "both"),
                        default=None)
    parser.add_argument("--config", default=None,
                        help="key=value file supplying flag defaults")
    args = parser.parse_args(argv)

    defaults = {}
    if args.config:
        defaults = read_config_file(args.config)

    def pick(flag, cast, fallback):
        cli_val = getattr(args, flag)
        if cli_val is not None:
            return cli_val
        if flag in defaults:
            return cast(defaults[flag])
        return fallback

    seed_fallback = int(os.environ.get("SUBLEVEL_KIT_SEED", "0"))
    levels = pick("levels", str, None)
    return RunConfig(
        command=args.command,
        field_id=None if args.command == "report" else args.field,
        filter=(args.field or "") if args.command == "report" else "",
        levels=None if levels is None else parse_levels(levels),
        budget=pick("budget", int, DEFAULT_BUDGET),
        seed=pick("seed", int, seed_fallback),
        threads=pick("threads", int, default_threads()),
        out=pick("out", str, None),
        format=pick("format", str, "both"),
    )


def default_levels(field, count=5):
    """Linear levels over the middle of the regular range."""
    return np.linspace(0.3 * field.eps, 0.7 * field.eps, count)


def _write(report, config):
    if config.out is None:
        return
    if config.format in ("csv", "both"):
        report.to_csv(config.out + ".csv")
    if config.format in ("json", "both"):
        report.to_json(config.out + ".json")


def _estimate_report(name, rows, columns, config, extra=None):
    summary = {"levels": len(rows), "budget": int(config.budget),
               "seed": int(config.seed)}
    if extra:
        summary.update(extra)
    return CheckReport(name=name, columns=columns, rows=rows, summary=summary,
                       tolerance=float("nan"), passed=True)


def _require_field(config):
    if not config.field_id:
        raise FieldIdError(
            f"command {config.command!r} needs a field id; "
            f"known fields: {', '.join(corpus_ids())}")
    return get_field(config.field_id)


def run(config):
    """Dispatch a RunConfig; returns the process exit status."""
    handler = {
        "volume": _cmd_volume,
        "area": _cmd_area,
        "glint": _cmd_glint,
        "check-main": _cmd_check_main,
        "check-coarea": _cmd_check_coarea,
        "check-piecewise": _cmd_check_piecewise,
        "check-dilation": _cmd_check_dilation,
        "loja-fit": _cmd_loja_fit,
        "report": _cmd_report,
    }[config.command]
    return handler(config)


def _cmd_volume(config):
    field, _ = _require_field(config)
    levels = config.levels
    if levels is None:
        levels = np.linspace(0.25 * field.eps, 0.75 * field.eps, 21)
    if field.dim <= 3:
        curve = volume_curve(field, levels, method="grid",
                            resolution=config.resolution(field.dim),
                            threads=config.threads)
    else:
        curve = volume_curve(field, levels, method="mc",
                            samples=config.samples, seed=config.seed,
                            threads=config.threads)
    if config.out is not None and config.format in ("csv", "both"):
        curve.to_csv(config.out + ".csv")
    if config.out is not None and config.format in ("json", "both"):
        payload = {
            "field": field.field_id,
            "method": curve.method,
            "levels": [float(t) for t in curve.levels],
            "V": [float(v) for v in curve.volumes],
            "V_err": [float(e) for e in curve.errors],
            "budget": int(config.budget),
            "seed": int(config.seed),
            "warnings": list(curve.warnings),
        }
        with open(config.out + ".json", "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    mid = len(levels) // 2
    print(f"volume {field.field_id}: V({format_sig(levels[mid])}) = "
          f"{format_sig(curve.volumes[mid])} +- {format_sig(curve.errors[mid])} "
          f"({curve.method}, {len(levels)} levels)")
    return 0


def _fiber_rows(field, levels, config, op):
    rows = []
    for i, t in enumerate(levels):
        est = op(float(t), i)
        rows.append((float(t), est.value, est.error, est.method))
    return rows


def _cmd_area(config):
    field, _ = _require_field(config)
    levels = config.levels if config.levels is not None else default_levels(field)
    res = config.resolution(field.dim) if field.dim <= 3 else None

    def op(t, i):
        return area_op(field, t, resolution=res or 256,
                       samples=config.samples, seed=config.seed + i,
                       threads=config.threads)

    rows = _fiber_rows(field, levels, config, op)
    rep = _estimate_report("area", rows, ["t", "A", "A_err", "method"],
                           config, extra={"field": field.field_id})
    _write(rep, config)
    print(f"area {field.field_id}: " + "; ".join(
        f"A({format_sig(r[0])})={format_sig(r[1])}" for r in rows))
    return 0


def _cmd_glint(config):
    from .gelfand_leray import gl_integral

    field, _ = _require_field(config)
    levels = config.levels if config.levels is not None else default_levels(field)
    res = config.resolution(field.dim) if field.dim <= 3 else 256

    rows = []
    for i, t in enumerate(levels):
        est = gl_integral(field, float(t), resolution=res,
                          samples=config.samples, seed=config.seed + i,
                          threads=config.threads)
        rows.append((float(t), est.value, est.error, est.method, est.density))
    rep = _estimate_report("glint", rows,
                           ["t", "J", "J_err", "method", "density"],
                           config, extra={"field": field.field_id})
    _write(rep, config)
    print(f"glint {field.field_id}: " + "; ".join(
        f"J({format_sig(r[0])})={format_sig(r[1])}" for r in rows))
    return 0


def _finish_check(rep, config, label):
    _write(rep, config)
    disc = rep.summary.get("max_rel_discrepancy", float("nan"))
    status = "pass" if rep.passed else "FAIL"
    print(f"{label}: max discrepancy {format_sig(disc)} "
          f"(tolerance {format_sig(rep.tolerance)}) -> {status}")
    return 0 if rep.passed else 1


def _cmd_check_main(config):
    field, _ = _require_field(config)
    levels = config.levels if config.levels is not None else default_levels(field)
    rep = check_main_theorem(field, levels,
                             resolution=config.resolution(field.dim),
                             samples=config.samples, seed=config.seed,
                             threads=config.threads)
    return _finish_check(rep, config, f"check-main {field.field_id}")


def _cmd_check_coarea(config):
    field, _ = _require_field(config)
    if config.levels is not None:
        t_lo, t_hi = float(config.levels[0]), float(config.levels[-1])
        n_levels = max(len(config.levels), 3)
        if n_levels % 2 == 0:
            n_levels += 1
    else:
        t_lo = t_hi = None
        n_levels = 17
    rep = check_coarea(field, t_lo=t_lo, t_hi=t_hi, n_levels=n_levels,
                       samples=config.samples,
                       resolution=config.resolution(field.dim),
                       seed=config.seed, threads=config.threads)
    return _finish_check(rep, config, f"check-coarea {field.field_id}")


def _cmd_check_piecewise(config):
    field, _ = _require_field(config)
    levels = config.levels if config.levels is not None else default_levels(field)
    rep = check_piecewise_theorem(field, levels,
                                  resolution=config.resolution(field.dim),
                                  threads=config.threads)
    return _finish_check(rep, config, f"check-piecewise {field.field_id}")


def _cmd_check_dilation(config):
    field, _ = _require_field(config)
    levels = (config.levels if config.levels is not None
              else np.asarray([0.25, 0.5, 0.75]) * field.eps)
    rep = check_dilation(field, levels,
                         resolution=config.resolution(field.dim),
                         threads=config.threads)
    return _finish_check(rep, config, f"check-dilation {field.field_id}")


def _cmd_loja_fit(config):
    field, oracle = _require_field(config)
    levels = (config.levels if config.levels is not None
              else default_fit_levels(field))
    fit = fit_exponent(field, levels,
                       resolution=config.resolution(field.dim),
                       threads=config.threads, seed=config.seed,
                       oracle_nu=oracle.loja_exponent)
    if config.out is not None and config.format in ("csv", "both"):
        fit.to_csv(config.out + ".csv")
    if config.out is not None and config.format in ("json", "both"):
        fit.to_json(config.out + ".json")
    oracle_s = ("none" if fit.oracle_nu is None else format_sig(fit.oracle_nu))
    print(f"loja-fit {field.field_id}: nu = {format_sig(fit.nu)} "
          f"(oracle {oracle_s}), C = {format_sig(fit.c_constant)}, "
          f"certified = {format_sig(fit.certified)}")
    for w in fit.warnings:
        print(f"  warning: {w}")
    return 0


# -- corpus report battery ----------------------------------------------------

def _battery(field_id, config):
    """(check_name, callable) pairs applicable to one corpus field."""
    field, oracle = get_field(field_id)
    dim = field.dim
    checks = []

    def res():
        return config.resolution(dim)

    levels5 = default_levels(field)

    def run_vprime_j():
        rep = check_v_prime_equals_j(field, levels5, resolution=res(),
                                     samples=config.samples, seed=config.seed,
                                     threads=config.threads)
        return rep.summary["max_rel_discrepancy"], rep.tolerance, rep.passed

    checks.append(("vprime_equals_j", run_vprime_j))

    if dim <= 3 and field.smooth_components == 1:
        def run_main():
            rep = check_main_theorem(field, levels5, resolution=res(),
                                     samples=config.samples, seed=config.seed,
                                     threads=config.threads)
            return (rep.summary["max_rel_discrepancy"], rep.tolerance,
                    rep.passed)

        checks.append(("main_theorem", run_main))

    if dim == 2 and field.smooth_components == 1:
        def run_coarea():
            rep = check_coarea(field, samples=config.samples,
                               resolution=res(), seed=config.seed,
                               threads=config.threads)
            return (rep.summary["max_rel_discrepancy"], rep.tolerance,
                    rep.passed)

        checks.append(("coarea", run_coarea))

    if field.smooth_components > 1:
        def run_piecewise():
            rep = check_piecewise_theorem(field, levels5, resolution=res(),
                                          threads=config.threads)
            return (rep.summary["max_rel_discrepancy"], rep.tolerance,
                    rep.passed)

        checks.append(("piecewise_sum", run_piecewise))

        w = np.asarray(field.params, dtype=float)
        if len(w) and abs(float(np.linalg.norm(w)) - 1.0) <= 1e-8:
            def run_dilation():
                rep = check_dilation(field, resolution=res(),
                                     threads=config.threads)
                return (rep.summary["max_rel_discrepancy"], rep.tolerance,
                        rep.passed)

            checks.append(("dilation", run_dilation))

    if dim == 2 and oracle.loja_exponent is not None:
        def run_loja():
            fit = fit_exponent(field, resolution=res(),
                               threads=config.threads, seed=config.seed,
                               oracle_nu=oracle.loja_exponent)
            dev = abs(fit.nu - oracle.loja_exponent)
            return dev, 0.05, bool(dev <= 0.05 and fit.certified)

        checks.append(("loja_exponent", run_loja))

    return checks


def _cmd_report(config):
    ids = [fid for fid in corpus_ids() if config.filter in fid]
    rows = []
    all_pass = True
    for fid in ids:
        for name, runner in _battery(fid, config):
            try:
                disc, tol, ok = runner()
            except Exception as exc:
                disc, tol, ok = float("nan"), float("nan"), False
                note = type(exc).__name__
            else:
                note = ""
            all_pass &= bool(ok)
            rows.append((fid, name, float(disc), float(tol),
                         "pass" if ok else "fail", note))
            print(f"{fid:32s} {name:18s} "
                  f"{'pass' if ok else 'FAIL'}"
                  + (f" ({note})" if note else ""))

    rep = CheckReport(
        name="report",
        columns=["field", "check", "discrepancy", "tolerance", "status",
                 "note"],
        rows=rows,
        summary={
            "max_rel_discrepancy": (max((r[2] for r in rows
                                         if math.isfinite(r[2])),
                                        default=0.0)),
            "levels": len(rows),
            "budget": int(config.budget),
            "seed": int(config.seed),
            "fields": len(ids),
        },
        tolerance=float("nan"),
        passed=bool(all_pass))
    _write(rep, config)
    print(f"report: {len(rows)} row(s), "
          f"{sum(1 for r in rows if r[4] == 'pass')} pass, "
          f"{sum(1 for r in rows if r[4] == 'fail')} fail")
    return 0 if all_pass else 1


def main(argv=None):
    try:
        config = build_config(sys.argv[1:] if argv is None else argv)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        return run(config)
    except (FieldIdError, ParameterError, LevelRangeError) as exc:
        # bad field id, levels, or budget: a configuration problem
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SublevelKitError as exc:
        # the check machinery itself could not certify the run
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
