"""Command line entry point: ``admot {monitor,sweep,validate,general}``.

Each subcommand reads a JSON config and writes CSV files to an output
directory.  Checks print one ``PASS``/``FAIL`` line each and any failure
makes the exit status 1.  Log verbosity comes from ``ADMOT_LOG_LEVEL``
(default ``WARNING``).
"""

import argparse
import csv
import logging
import os
import sys
from pathlib import Path

import numpy as np

from ..general import Topology, read_topology, write_node_results_csv
from ..core import relative_error
from .config import (GeneralConfig, Lemma3Config, MonitorConfig, SweepConfig,
                     Theorem2Config, load_config)
from .experiments import (run_general_experiment, run_monitoring_experiment,
                          sweep_scaling)
from .plotdata import emit_plot_data
from .validate import nonincreasing_in_d, validate_lemma3, validate_theorem2

log = logging.getLogger("admot")


class Checks:
    def __init__(self):
        self.results = []

    def add(self, name, ok, detail=""):
        ok = bool(ok)
        self.results.append((name, ok, detail))
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        return ok

    @property
    def passed(self):
        return all(ok for _, ok, _ in self.results)

    def write(self, path):
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["check", "passed", "detail"])
            for name, ok, detail in self.results:
                wr.writerow([name, int(ok), detail])


def _out(args, cfg):
    out = args.output_dir or getattr(cfg, "output_dir", None)
    if not out:
        raise SystemExit("no output directory given")
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_monitor(args):
    cfg = load_config(args.config, MonitorConfig)
    out = _out(args, cfg)
    logs = []
    for x in cfg.stability:
        lg = run_monitoring_experiment(cfg, x)
        logs.append(lg)
        tag = f"x{x:g}"
        emit_plot_data([lg], "rounds", out / f"rounds_{tag}.csv")
        emit_plot_data([lg], "adaptation", out / f"adaptation_{tag}.csv")
        emit_plot_data([lg], "gains", out / f"gains_{tag}.csv",
                       round=cfg.gains_round, indices=cfg.gains_indices)
        print(f"stability {x:g}: first round m={lg.slots[0]}, "
              f"average slots after round 1 = {lg.average_slots():.1f}, "
              f"median relative error = {np.median(lg.errors):.4f}")
    for kind in ("slots", "error", "overhead"):
        emit_plot_data(logs, kind, out / f"{kind}.csv")

    checks = Checks()
    n = cfg.n
    for lg in logs:
        checks.add(f"first_round_x{lg.stability:g}", lg.slots[0] >= 0.9 * n,
                   f"m1={lg.slots[0]} >= {0.9 * n:g}")
        if len(lg.records) > 1:
            avg = lg.average_slots()
            checks.add(f"below_n_x{lg.stability:g}", avg < n, f"{avg:.1f} < {n}")
    if len(logs) > 1:
        by_x = sorted(logs, key=lambda lg: lg.stability)
        avgs = [lg.average_slots() for lg in by_x]
        checks.add("ordered_by_stability", all(a > b for a, b in zip(avgs, avgs[1:])),
                   " > ".join(f"{a:.1f}" for a in avgs))
    if cfg.targets:
        for lg, target in zip(logs, cfg.targets):
            avg = lg.average_slots()
            rel = abs(avg - target) / target
            checks.add(f"target_x{lg.stability:g}", rel <= cfg.target_tolerance,
                       f"{avg:.1f} vs {target:g} ({rel:.1%})")
    checks.write(out / "checks.csv")
    return 0 if checks.passed else 1


def cmd_sweep(args):
    cfg = load_config(args.config, SweepConfig)
    out = _out(args, cfg)
    points = sweep_scaling(cfg)
    with open(out / "scaling.csv", "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["k", "m_min", "ratio", "bracketed"])
        for p in points:
            wr.writerow([p.k, "" if p.m_min is None else p.m_min,
                         repr(float(p.ratio)), int(p.bracketed)])
    checks = Checks()
    for p in points:
        checks.add(f"bracketed_k{p.k}", p.bracketed and p.m_min < cfg.n,
                   f"m_min={p.m_min} (n={cfg.n})")
        print(f"k={p.k}: m_min={p.m_min} ratio={p.ratio:.3f}")
    ratios = [p.ratio for p in points if p.bracketed]
    if len(ratios) > 1:
        spread = max(ratios) / min(ratios)
        checks.add("ratio_spread", spread <= cfg.max_ratio_spread,
                   f"{spread:.2f} <= {cfg.max_ratio_spread:g}")
    checks.write(out / "checks.csv")
    return 0 if checks.passed else 1


def cmd_validate(args):
    checks = Checks()
    if args.which == "lemma3":
        cfg = load_config(args.config, Lemma3Config)
        out = _out(args, cfg)
        results = [validate_lemma3(m, cfg.trials, cfg.seed) for m in cfg.m]
        with open(out / "lemma3.csv", "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["m", "trials", "frequency", "bound", "oracle"])
            for r in results:
                wr.writerow([r.m, r.trials, repr(r.frequency), repr(r.bound),
                             repr(r.oracle)])
        for r in results:
            checks.add(f"bound_m{r.m}", r.within_bound,
                       f"{r.frequency:.5f} <= {r.bound:.5f}")
            checks.add(f"oracle_m{r.m}", abs(r.frequency - r.oracle) <= cfg.oracle_band,
                       f"|{r.frequency:.5f} - {r.oracle:.5f}| <= {cfg.oracle_band:g}")
    else:
        cfg = load_config(args.config, Theorem2Config)
        out = _out(args, cfg)
        rows = validate_theorem2(cfg.d, cfg.phi, cfg.trials, cfg.n, cfg.seed, cfg.envelope)
        with open(out / "theorem2.csv", "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["d", "phi", "trials", "upper", "lower", "freq_upper",
                         "freq_lower", "bound"])
            for r in rows:
                wr.writerow([r.d, repr(r.phi), r.trials, repr(r.upper),
                             "" if r.lower is None else repr(r.lower),
                             repr(r.freq_upper), repr(r.freq_lower), repr(r.bound)])
        for r in rows:
            checks.add(f"d{r.d}_phi{r.phi:g}", r.passed,
                       f"upper {r.freq_upper:.5f}, lower {r.freq_lower:.5f} "
                       f"<= {r.bound:.5f}")
        checks.add("nonincreasing_in_d", nonincreasing_in_d(rows))
    checks.write(out / "checks.csv")
    return 0 if checks.passed else 1


def _topology(cfg, config_path):
    spec = cfg.topology
    if spec is None:
        raise SystemExit("general config needs a 'topology'")
    if isinstance(spec, str):
        path = Path(spec)
        if not path.is_absolute():
            path = Path(config_path).parent / path
        return read_topology(path)
    return (Topology(int(spec["sources"]), int(spec.get("relays", 0)),
                     int(spec.get("receivers", 1)), spec.get("duplex", "half")), None)


def cmd_general(args):
    cfg = load_config(args.config, GeneralConfig)
    out = _out(args, cfg)
    topo, priors = _topology(cfg, args.config)
    checks = Checks()
    for r, (states, res) in enumerate(run_general_experiment(cfg, topo, priors), start=1):
        write_node_results_csv(res, states, out / f"nodes_round{r}.csv")
        for node in topo.listeners:
            if node in res.failures:
                checks.add(f"round{r}_{node}", False, f"solver failed: {res.failures[node]}")
                continue
            est = res.estimates[node]
            err = relative_error(est.h_star, states[node])
            detail = f"m_beta={res.views[node].m_beta}, relative error {err:.4g}"
            ok = err <= cfg.error_tolerance
            fixed = topo.self_index(node)
            if fixed is not None:
                ok &= est.delta_star[fixed] == 0
            checks.add(f"round{r}_{node}", ok, detail)
    checks.write(out / "checks.csv")
    return 0 if checks.passed else 1


def build_parser():
    p = argparse.ArgumentParser(prog="admot", description="Differential channel monitoring experiments")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("config", help="JSON configuration file")
        sp.add_argument("output_dir", nargs="?", help="directory for CSV output")

    common(sub.add_parser("monitor", help="multi-round monitoring experiment"))
    common(sub.add_parser("sweep", help="minimal-m scaling sweep"))
    v = sub.add_parser("validate", help="Monte Carlo tail-bound checks")
    v.add_argument("which", choices=["lemma3", "theorem2"])
    common(v)
    common(sub.add_parser("general", help="multi-node half-duplex experiment"))
    return p


def main(argv=None):
    logging.basicConfig(level=os.environ.get("ADMOT_LOG_LEVEL", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    handler = {"monitor": cmd_monitor, "sweep": cmd_sweep,
               "validate": cmd_validate, "general": cmd_general}[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
