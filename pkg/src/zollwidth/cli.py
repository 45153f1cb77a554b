"""Command-line entry point: ``zollwidth {certify,spectrum,compare,minmax,report}``.

Exit codes: 0 success, 1 failed invariant or certification, 2 invalid
configuration, 3 missing prerequisite artifact.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path

from . import flow, sweepout, widths
from .config import ConfigError, MetricSpec, RunConfig, load, parse_profile, render
from .errors import NotCertifiedZoll, ProfileInvalid
from .metrics import c0_distance, conformal_bounds, curvature_report

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_MISSING = 0, 1, 2, 3
TWO_PI = 2.0 * math.pi


class _MetricFlag(argparse.Action):
    """Collect ``--profile`` and ``--epsilon`` in command-line order, one metric each."""

    def __call__(self, parser, namespace, value, option_string=None):
        specs = list(getattr(namespace, self.dest) or [])
        if option_string == "--epsilon":
            try:
                specs.append(MetricSpec(epsilon=float(value)))
            except ValueError:
                raise argparse.ArgumentError(self, f"invalid float {value!r}") from None
        else:
            specs.append(value)
        setattr(namespace, self.dest, specs)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="plain-text key = value config file")
    common.add_argument("--profile", dest="metric_flags", action=_MetricFlag,
                        help="round | eps:E | even-bump:E | odd:c0,c1,.. | even:c0,c1,..")
    common.add_argument("--epsilon", dest="metric_flags", action=_MetricFlag,
                        help="shortcut for the odd family epsilon*(u - u^3)")
    common.add_argument("--p-max", type=int)
    common.add_argument("--n-starts", type=int)
    common.add_argument("--tolerance", type=float, help="closure residual tolerance")
    common.add_argument("--seed", type=int)
    common.add_argument("--workers", type=int)
    common.add_argument("--out-dir")
    common.add_argument("--T", type=int, dest="T", help="sweepout family size")
    common.add_argument("--n-vertices", type=int)
    common.add_argument("--rounds", type=int)
    common.add_argument("--K", type=float, dest="K", help="continuity constant (assumed)")

    parser = argparse.ArgumentParser(prog="zollwidth", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("certify", parents=[common], help="certify closure of all geodesics at 2 pi")
    sp = sub.add_parser("spectrum", parents=[common], help="width spectrum for p <= p_max")
    sp.add_argument("--mode", choices=widths.MODES, default=widths.EXACT)
    sub.add_parser("compare", parents=[common], help="isospectrality verdict for two metrics")
    sub.add_parser("minmax", parents=[common], help="sweepout min-max estimate of the first width")
    sub.add_parser("report", parents=[common], help="curvature, area and diameter report")
    return parser


def resolve_config(args) -> RunConfig:
    cfg = load(args.config) if args.config else RunConfig()
    if args.metric_flags:
        specs = tuple(parse_profile(s) if isinstance(s, str) else s for s in args.metric_flags)
        cfg = cfg.with_overrides(metrics=specs)
    cfg = cfg.with_overrides(p_max=args.p_max, n_starts=args.n_starts, tolerance=args.tolerance,
                             seed=args.seed, workers=args.workers, out_dir=args.out_dir,
                             T=args.T, n_vertices=args.n_vertices, rounds=args.rounds, K=args.K)
    return cfg.validate()


def _write_csv(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _store(cfg) -> widths.CertificationStore:
    return widths.CertificationStore(Path(cfg.out_dir) / "artifacts")


def _tag(metric) -> str:
    return widths.metric_key(metric)[:12]


def _certify_one(cfg, spec, metric, store, out) -> bool:
    run = flow.certify_metric(metric, cfg.n_starts, seed=cfg.seed, residual_tol=cfg.tolerance,
                              tol=cfg.integrator_tol, workers=cfg.workers)
    store.record_run(metric, run, seed=cfg.seed)
    path = Path(cfg.out_dir) / f"certify_{_tag(metric)}.csv"
    _write_csv(path, flow.CERTIFICATE_COLUMNS, flow.certificate_rows(run.certificates))
    w = run.worst
    print(f"{spec.label()}: {run.n_passed}/{len(run.certificates)} certificates pass, "
          f"worst_residual={w.residual:.12g} (start {w.index})", file=out)
    if not run.passed:
        print(f"FAIL {run.failure_reason()}", file=out)
    print(f"wrote {path}", file=out)
    return run.passed


def cmd_certify(cfg: RunConfig, out=None) -> int:
    out = out or sys.stdout
    store = _store(cfg)
    ok = True
    for spec in cfg.metrics:
        ok &= _certify_one(cfg, spec, spec.build(), store, out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_spectrum(cfg: RunConfig, mode: str = widths.EXACT, out=None) -> int:
    out = out or sys.stdout
    spec = cfg.metrics[0]
    metric = spec.build()
    kw = {}
    if mode == widths.MINMAX:
        if cfg.p_max != 1:
            print("minmax-estimate mode supports p_max = 1 only", file=out)
            return EXIT_CONFIG
        kw = dict(T=cfg.T, n_vertices=cfg.n_vertices, rounds=cfg.rounds)
    try:
        spec_ = widths.spectrum(metric, cfg.p_max, mode, store=_store(cfg), **kw)
    except NotCertifiedZoll as exc:
        print(f"error: {exc}", file=out)
        print("hint: run `zollwidth certify` with the same profile and --out-dir first", file=out)
        return EXIT_MISSING
    path = Path(cfg.out_dir) / f"spectrum_{_tag(metric)}.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(spec_.csv_text())
    last = spec_[cfg.p_max]
    print(f"{spec.label()}: omega_{cfg.p_max} = {last:.12g} ({last / TWO_PI:.12g} x 2pi), "
          f"{spec_.provenance[-1]}", file=out)
    print(f"wrote {path}", file=out)
    return EXIT_OK


def cmd_compare(cfg: RunConfig, out=None) -> int:
    out = out or sys.stdout
    if len(cfg.metrics) != 2:
        raise ConfigError("compare needs two metrics (repeat --profile/--epsilon or use *_2 keys)")
    store = _store(cfg)
    metrics = [s.build() for s in cfg.metrics]
    for spec, m in zip(cfg.metrics, metrics):
        if not store.is_certified(m) and not _certify_one(cfg, spec, m, store, out):
            print(f"certification failed for {spec.label()}; no verdict", file=out)
            return EXIT_FAIL
    g, g2 = metrics
    verdict = widths.isospectral_verdict(g, g2, cfg.p_max, store=store)
    checks = widths.continuity_battery(g, g2, cfg.p_max, cfg.K, store=store)
    dist = c0_distance(g, g2)
    base = Path(cfg.out_dir) / f"compare_{_tag(g)}_{_tag(g2)}"
    base.parent.mkdir(parents=True, exist_ok=True)
    text = verdict.text() + f"c0_distance        {dist:.12g}\n"
    Path(f"{base}.verdict.txt").write_text(text)
    _write_csv(Path(f"{base}.continuity.csv"),
               ("p", "lhs", "rhs", "K_used", "C1", "C2", "satisfied"),
               [[str(c.p), f"{c.lhs:.12g}", f"{c.rhs:.12g}", f"{c.K_used:.12g}",
                 f"{c.C1:.12g}", f"{c.C2:.12g}", str(c.satisfied).lower()] for c in checks])
    ok = all(c.satisfied for c in checks)
    print(verdict.headline, file=out)
    print(f"continuity: {sum(c.satisfied for c in checks)}/{len(checks)} satisfied "
          f"with K={cfg.K:.12g} (assumed), c0_distance={dist:.12g}", file=out)
    print(f"wrote {base}.verdict.txt", file=out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_minmax(cfg: RunConfig, out=None) -> int:
    out = out or sys.stdout
    spec = cfg.metrics[0]
    metric = spec.build()
    res = sweepout.minmax_estimate(metric, cfg.T, cfg.n_vertices, cfg.rounds)
    base = Path(cfg.out_dir) / f"minmax_{_tag(metric)}"
    _write_csv(Path(f"{base}.log.csv"), sweepout.RUNLOG_COLUMNS, res.log_rows())
    _write_csv(Path(f"{base}.family.csv"), ("k", "t", "vertex", "theta", "phi"),
               res.family.plot_rows())
    print(f"{spec.label()}: width estimate {res.width_estimate:.12g} at t={res.family.argmax_t:.12g}",
          file=out)
    if _store(cfg).is_certified(metric):
        rel = res.width_estimate / TWO_PI - 1.0
        print(f"relative error vs 2pi: {rel:.12g}", file=out)
    print(f"monotone descent: {str(res.monotone).lower()}; "
          f"fixed-point residual {res.fixed_point_residual:.12g}", file=out)
    print(f"wrote {base}.log.csv", file=out)
    return EXIT_OK if res.monotone else EXIT_FAIL


def cmd_report(cfg: RunConfig, out=None) -> int:
    out = out or sys.stdout
    rows = []
    for spec in cfg.metrics:
        metric = spec.build()
        rep = curvature_report(metric)
        c1, c2 = conformal_bounds(metric)
        print(f"[{spec.label()}]", file=out)
        print(rep.text(), file=out)
        print(f"conformal bounds [{c1:.12g}, {c2:.12g}]", file=out)
        rows.append([spec.label(), *rep.csv_row(), f"{c1:.12g}", f"{c2:.12g}"])
    path = Path(cfg.out_dir) / "report.csv"
    _write_csv(path, ("metric", *rep.csv_header, "C1", "C2"), rows)
    print(f"wrote {path}", file=out)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        Path(cfg.out_dir).mkdir(parents=True, exist_ok=True)
        (Path(cfg.out_dir) / "run.conf").write_text(render(cfg))
        if args.command == "certify":
            return cmd_certify(cfg)
        if args.command == "spectrum":
            return cmd_spectrum(cfg, args.mode)
        if args.command == "compare":
            return cmd_compare(cfg)
        if args.command == "minmax":
            return cmd_minmax(cfg)
        return cmd_report(cfg)
    except (ConfigError, ProfileInvalid) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"missing file: {exc}", file=sys.stderr)
        return EXIT_MISSING


if __name__ == "__main__":
    sys.exit(main())
