"""Command-line front end.

Subcommands:
  system   build a needlet system from config and export diagnostics JSON
  clt      run one experiment kind over a (j, nu) grid; JSON reports + sweep CSV
  tables   admissible resolution levels per context and intensity

Exit codes: 0 success, 2 config error, 3 degenerate regime, 4 runtime failure.
All randomness flows from --seed; outputs are byte-identical across reruns
and across NEEDLET_LAB_THREADS settings.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from .cltlab import EXPERIMENT_KINDS, ExperimentConfig, run_experiment
from .config import FORMATS, RunConfig, make_run_config, parse_config_file
from .cubature import needlet_frame
from .errors import ConfigError, DegenerateRegimeError
from .reports import _jsonify, write_report_json, write_sweep_csv
from .scaling import build_scale_sequence
from .weights import build_weight_system

TABLE_CONTEXTS = ("coeff_1d", "coeff_multi_raw", "coeff_multi_normalized", "fdd", "sobolev")


def _add_common_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", default=None, help="key=value config file")
    sub.add_argument("--kind", default=None, choices=EXPERIMENT_KINDS)
    sub.add_argument("--j", default=None, help="comma-separated levels")
    sub.add_argument("--nu", default=None, help="comma-separated intensities")
    sub.add_argument("--reps", default=None, type=int)
    sub.add_argument("--seed", default=None, type=int)
    sub.add_argument("--alpha", default=None, type=float)
    sub.add_argument("--dim", default=None, type=int)
    sub.add_argument("--slack", default=None, type=float)
    sub.add_argument("--delta", default=None, type=float)
    sub.add_argument("--out", default=None, help="output directory")
    sub.add_argument("--format", default=None, choices=FORMATS)


def _build_run_config(args: argparse.Namespace) -> RunConfig:
    file_cfg = parse_config_file(args.config) if args.config else {}
    overrides = {
        "run.kind": args.kind,
        "run.j": args.j,
        "run.nu": args.nu,
        "run.reps": args.reps,
        "run.seed": args.seed,
        "run.alpha": args.alpha,
        "run.dim": args.dim,
        "run.slack": args.slack,
        "run.delta": args.delta,
        "run.out": args.out,
        "run.format": getattr(args, "format"),
    }
    return make_run_config(file_cfg, {k: v for k, v in overrides.items() if v is not None})


def _write_json(payload: dict, path: str) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        json.dump(_jsonify(payload), fh, indent=2)
        fh.write("\n")


def _fmt_num(x: float) -> str:
    return f"{x:g}"


def cmd_system(args: argparse.Namespace) -> int:
    rc = _build_run_config(args)
    seq = build_scale_sequence(rc.scale)
    ws = build_weight_system(seq)
    levels = rc.j_list or list(range(1, seq.j_max + 1))
    frame_info = []
    for j in levels:
        frame = needlet_frame(ws, j)
        s_next = float(seq.centers[j + 1])
        frame_info.append(
            {
                "j": j,
                "K_j": frame.count,
                "exact_degree": frame.exact_degree,
                "count_ratio": frame.count / s_next**2,
                "weight_sum": float(frame.weights.sum()),
                "norms_sq_spread": [float(frame.norms_sq.min()), float(frame.norms_sq.max())],
            }
        )
    payload = {
        "scale": seq.diagnostics(),
        "weights": ws.diagnostics(),
        "frames": frame_info,
    }
    os.makedirs(rc.out, exist_ok=True)
    path = os.path.join(rc.out, "system.json")
    _write_json(payload, path)
    print(path)
    return 0


def cmd_clt(args: argparse.Namespace) -> int:
    rc = _build_run_config(args)
    if rc.kind is None:
        raise ConfigError("run.kind (or --kind) is required for clt")
    if not rc.j_list:
        raise ConfigError("run.j (or --j) is required for clt")
    if not rc.nu_list:
        raise ConfigError("run.nu (or --nu) is required for clt")
    seq = build_scale_sequence(rc.scale)
    ws = build_weight_system(seq)
    os.makedirs(rc.out, exist_ok=True)
    reports = []
    for j in rc.j_list:
        for nu in rc.nu_list:
            cfg = ExperimentConfig(
                kind=rc.kind,
                j=j,
                nu_t=nu,
                reps=rc.reps,
                seed=rc.seed,
                d=rc.dim,
                alpha=rc.alpha,
                slack=rc.slack,
                delta=rc.delta,
            )
            report = run_experiment(ws, cfg)
            reports.append(report)
            if rc.fmt in ("json", "both"):
                path = os.path.join(rc.out, f"report_{rc.kind}_j{j}_nu{_fmt_num(nu)}.json")
                write_report_json(report, path)
                print(path)
            print(
                f"clt {rc.kind} j={j} nu={_fmt_num(nu)} done in {report.wall_time_s:.2f}s",
                file=sys.stderr,
            )
    if rc.fmt in ("csv", "both"):
        path = os.path.join(rc.out, f"sweep_{rc.kind}.csv")
        write_sweep_csv(reports, path)
        print(path)
    return 0


def cmd_tables(args: argparse.Namespace) -> int:
    rc = _build_run_config(args)
    if not rc.nu_list:
        raise ConfigError("run.nu (or --nu) is required for tables")
    seq = build_scale_sequence(rc.scale)
    rows = []
    for context in TABLE_CONTEXTS:
        alpha = rc.alpha if context == "sobolev" else None
        for nu in rc.nu_list:
            try:
                j_adm = seq.max_resolution(nu, context, rc.slack, alpha)
            except DegenerateRegimeError:
                j_adm = None
            rows.append({"context": context, "nu_t": nu, "alpha": alpha, "j_max": j_adm})
    payload = {"slack": rc.slack, "rows": rows}
    os.makedirs(rc.out, exist_ok=True)
    written = []
    if rc.fmt in ("json", "both"):
        path = os.path.join(rc.out, "tables.json")
        _write_json(payload, path)
        written.append(path)
    if rc.fmt in ("csv", "both"):
        path = os.path.join(rc.out, "tables.csv")
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write("context,nu_t,alpha,j_max\n")
            for row in rows:
                alpha = "" if row["alpha"] is None else f"{row['alpha']:.17g}"
                j_adm = "" if row["j_max"] is None else str(row["j_max"])
                fh.write(f"{row['context']},{row['nu_t']:.17g},{alpha},{j_adm}\n")
        written.append(path)
    for path in written:
        print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="needlet-lab",
        description="Shrinking-bandwidth needlet systems and Poisson-field CLT experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (("system", cmd_system), ("clt", cmd_clt), ("tables", cmd_tables)):
        sp = sub.add_parser(name)
        _add_common_flags(sp)
        sp.set_defaults(fn=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DegenerateRegimeError as exc:
        print(f"degenerate regime: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # pragma: no cover - defensive
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    raise SystemExit(main())
