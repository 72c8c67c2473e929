"""Batch command-line front-end.

Subcommands: design, assign, simulate, sweep, verify.  Every command is
deterministic given its config file; CSV outputs carry a '#'-prefixed
metadata header (version, config hash, seed) and the report paths also render
a companion PNG figure next to the delimited output.

Exit codes: 0 success, 1 configuration error, 2 infeasible design or
geometry, 3 verification failure.
"""

from __future__ import annotations

import argparse
import itertools
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, ExperimentConfig, parse_config, validate_config
from .design import InfeasibleDesignError
from .experiment import (assignment_for, design_for, run_experiment,
                         sweep_experiment)
from .labeling import CapExceededError, save_assignment, side_distortion
from .loss_model import subset_prob, channel
from .simulate import GAUSSIAN_SAMPLER
from .sublattices import NotCleanError
from .verify import run_all

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INFEASIBLE = 2
EXIT_VERIFY = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mdlvq", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="experiment config file")
        p.add_argument("--out", help="output path (stem or file)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--n", type=int, help="override the vector count")
        p.add_argument("--cap", type=int,
                       help="override the central-points-per-cell cap")

    common(sub.add_parser("design", help="compute the optimal quantizer bank"))
    common(sub.add_parser("assign", help="build and save an assignment table"))
    common(sub.add_parser("simulate", help="run one Monte-Carlo verification"))
    sweep = sub.add_parser("sweep", help="re-design and simulate across loss values")
    common(sweep)
    sweep.add_argument("--sweep-param", required=True, metavar="pI",
                       help="which loss probability to sweep, e.g. p0")
    sweep.add_argument("--sweep-values", required=True,
                       help="comma-separated probabilities")
    sub.add_parser("verify", help="run the consistency-check suite")
    return parser


def _load(args) -> ExperimentConfig:
    cfg = parse_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.n is not None:
        cfg.count = args.n
    if getattr(args, "cap", None) is not None:
        cfg.cap = args.cap
    if args.out is not None:
        cfg.out = args.out
    validate_config(cfg)  # overrides must leave a valid configuration
    return cfg


def _meta_lines(cfg: ExperimentConfig, kind: str) -> list[str]:
    return [f"# mdlvq {__version__} {kind}",
            f"# config_hash={cfg.config_hash()}",
            f"# seed={cfg.seed}",
            f"# sampler={GAUSSIAN_SAMPLER}"]


def _write_csv(path: Path, meta: list[str], header: str, rows: list[str]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(meta + [header] + rows) + "\n")


def _out_stem(cfg: ExperimentConfig, default: str) -> Path:
    return Path(cfg.out) if cfg.out else Path(default)


def cmd_design(args) -> int:
    cfg = _load(args)
    design = design_for(cfg)
    k = cfg.descriptions
    print(f"lattice {cfg.lattice}  K={k}  rate target {design.rate_target} bits/dim")
    print(f"  rate-budget volume  {design.tau_star:.8g}")
    print(f"  optimal cell volume {design.nu_opt:.8g}  rescaled {design.nu_rescaled:.8g}")
    print(f"  expansion factor    {design.psi:.8g}")
    print(f"  index values        {tuple(round(v, 3) for v in design.index_opt)}"
          f" -> snapped {design.index_snapped}")
    print(f"  central rate        {design.central_rate:.6g} bits/dim "
          f"(pre-snap {design.central_rate_opt:.6g})")
    print(f"  side rates          {tuple(round(r, 6) for r in design.side_rates)}")
    pred = design.prediction
    print(f"  predicted distortion {pred.total:.8g} "
          f"(central {pred.central_term:.4g}, none {pred.zero_term:.4g}, "
          f"side {pred.side_term:.4g})")
    stem = _out_stem(cfg, "design")
    path = stem if stem.suffix == ".csv" else stem.with_suffix(".csv")
    cols = (["tau_star", "nu_opt", "nu_rescaled", "psi", "central_rate_opt",
             "central_rate"]
            + [f"N_opt_{i}" for i in range(k)]
            + [f"N_{i}" for i in range(k)]
            + [f"R_{i}" for i in range(k)]
            + ["pred_central", "pred_zero", "pred_side", "pred_total"])
    vals = ([design.tau_star, design.nu_opt, design.nu_rescaled, design.psi,
             design.central_rate_opt, design.central_rate]
            + list(design.index_opt) + list(design.index_snapped)
            + list(design.side_rates)
            + [pred.central_term, pred.zero_term, pred.side_term, pred.total])
    _write_csv(path, _meta_lines(cfg, "design"), ",".join(cols),
               [",".join(repr(float(v)) if not isinstance(v, int) else str(v)
                         for v in vals)])
    print(f"wrote {path}")
    return EXIT_OK


def cmd_assign(args) -> int:
    cfg = _load(args)
    asg = assignment_for(cfg)
    stem = _out_stem(cfg, "assignment")
    path = stem if stem.suffix else stem.with_suffix(".txt")
    path.parent.mkdir(parents=True, exist_ok=True)
    save_assignment(asg, path)
    k = cfg.descriptions
    print(f"assignment: {asg.table_size} central points, "
          f"total cost {asg.total_cost:.10g}")
    ch = channel(cfg.loss)
    for size in range(1, k):
        for members in itertools.combinations(range(k), size):
            sd = side_distortion(asg, members)
            print(f"  subset {{{','.join(map(str, members))}}}: "
                  f"side distortion {sd:.10g} "
                  f"(probability {subset_prob(ch, members):.6g})")
    print(f"wrote {path}")
    return EXIT_OK


def _subset_label(s) -> str:
    return "|".join(map(str, s)) if s else "-"


def cmd_simulate(args) -> int:
    cfg = _load(args)
    design, asg, report = run_experiment(cfg)
    print(f"simulated {report.count} vectors, seed {report.seed}")
    print(f"  empirical distortion {report.total:.8g} "
          f"(std err {report.std_err:.3g})")
    print(f"  predicted distortion {report.predicted.total:.8g}")
    print(f"  central conditional  {report.central:.8g}")
    print(f"  side entropies       "
          f"{tuple(round(h, 4) for h in report.side_entropy)} bits/dim")
    stem = _out_stem(cfg, "simulate")
    csv_path = stem if stem.suffix == ".csv" else stem.with_suffix(".csv")
    rows = [f"total,-,{report.count},{report.total!r},{report.std_err!r},"
            f"{report.predicted.total!r}"]
    d_c = (asg.setup.central.second_moment
           * asg.setup.nu ** (2.0 / asg.setup.central.dim))
    for s in sorted(report.per_subset, key=lambda t: (len(t), t)):
        stat = report.per_subset[s]
        if len(s) == asg.setup.descriptions:
            pred = d_c
        elif s:
            pred = d_c + side_distortion(asg, s)
        else:
            pred = cfg.variance
        rows.append(f"subset,{_subset_label(s)},{stat.count},"
                    f"{stat.distortion!r},{stat.std_err!r},{pred!r}")
    for i, h in enumerate(report.side_entropy):
        rows.append(f"side_entropy,{i},{report.count},{h!r},,")
    _write_csv(csv_path, _meta_lines(cfg, "simulate"),
               "record,subset,count,value,std_err,predicted", rows)
    from .plots import simulate_figure
    fig_path = csv_path.with_suffix(".png")
    simulate_figure(report, asg, fig_path, mean_power=cfg.variance)
    print(f"wrote {csv_path} and {fig_path}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load(args)
    name = args.sweep_param.strip()
    if not name.startswith("p") or not name[1:].isdigit():
        raise ConfigError(f"--sweep-param must look like p0, got {name!r}")
    idx = int(name[1:])
    try:
        values = [float(v) for v in args.sweep_values.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"--sweep-values: {exc}") from None
    if not values:
        raise ConfigError("--sweep-values is empty")
    points = sweep_experiment(cfg, idx, values)
    k = cfg.descriptions
    stem = _out_stem(cfg, "sweep")
    csv_path = stem if stem.suffix == ".csv" else stem.with_suffix(".csv")
    cols = ([name, "nu"] + [f"N_{i}" for i in range(k)]
            + ["empirical", "std_err", "pred_total", "pred_central",
               "pred_zero", "pred_side", "n"])
    rows = []
    for pt in points:
        pred = pt.report.predicted
        vals = ([pt.value, pt.design.nu_rescaled]
                + list(pt.design.index_snapped)
                + [pt.report.total, pt.report.std_err, pred.total,
                   pred.central_term, pred.zero_term, pred.side_term,
                   pt.report.count])
        rows.append(",".join(repr(float(v)) if not isinstance(v, int) else str(v)
                             for v in vals))
        print(f"{name}={pt.value:.4g}  N={pt.design.index_snapped}  "
              f"empirical {pt.report.total:.6g}  predicted {pred.total:.6g}")
    _write_csv(csv_path, _meta_lines(cfg, "sweep"), ",".join(cols), rows)
    from .plots import sweep_figure
    fig_path = csv_path.with_suffix(".png")
    sweep_figure(points, name, fig_path)
    print(f"wrote {csv_path} and {fig_path}")
    return EXIT_OK


def cmd_verify() -> int:
    results = run_all()
    failed = False
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        print(f"[{status}] {res.name}: {res.detail}")
        failed = failed or not res.passed
    return EXIT_VERIFY if failed else EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "design":
            return cmd_design(args)
        if args.command == "assign":
            return cmd_assign(args)
        if args.command == "simulate":
            return cmd_simulate(args)
        if args.command == "sweep":
            return cmd_sweep(args)
        return cmd_verify()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InfeasibleDesignError, NotCleanError, CapExceededError,
            ValueError) as exc:
        print(f"infeasible configuration: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
