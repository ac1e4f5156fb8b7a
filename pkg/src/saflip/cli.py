"""Command-line front door: fetch benchmarks, run experiments, compute BER
tables, drive tuning, and render reports.

Exit codes: 0 success, 1 runtime failure, 2 usage/validation error.  stdout
carries machine-readable JSON (paths of produced artifacts); human-readable
progress and tables go to stderr.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import statistics
import sys
import urllib.request
from pathlib import Path

from . import doe, harness
from .annealing import run_sa_flip
from .ber import check_paired, read_result_csv, write_ber_csv, write_result_csv

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2

SATLIB_ARCHIVES = ("uf50-218", "uf75-325", "uf100-430", "uf125-538")
SATLIB_BASE_URL = "https://www.cs.ubc.ca/~hoos/SATLIB/Benchmarks/SAT/RND3SAT"


def _err(msg):
    print(msg, file=sys.stderr)


def _emit(doc):
    print(json.dumps(doc))


def cmd_fetch(args):
    cache = Path(args.cache_dir)
    cache.mkdir(parents=True, exist_ok=True)
    sources = args.source or [f"{SATLIB_BASE_URL}/{a}.tar.gz" for a in SATLIB_ARCHIVES]
    fetched = []
    for source in sources:
        if source.startswith(("http://", "https://")):
            name = source.rsplit("/", 1)[-1]
            dest = cache / name
            if dest.exists():
                _err(f"{name}: up to date")
            else:
                part = dest.with_suffix(dest.suffix + ".part")
                try:
                    _err(f"downloading {source}")
                    with urllib.request.urlopen(source, timeout=60) as resp, open(
                        part, "wb"
                    ) as out:
                        out.write(resp.read())
                    part.rename(dest)
                except Exception as exc:
                    part.unlink(missing_ok=True)
                    _err(f"fetch failed for {source}: {exc}")
                    return EXIT_USAGE
            fetched.append(dest)
        else:
            path = Path(source)
            if not path.exists():
                _err(f"no such benchmark source: {source}")
                return EXIT_USAGE
            fetched.append(path)
    try:
        bset = harness.ingest_benchmarks(
            fetched,
            validate_phase_transition=not args.no_validate,
            manifest_path=cache / "manifest.json",
        )
    except (harness.BenchmarkError, ValueError) as exc:
        _err(f"ingest failed: {exc}")
        return EXIT_USAGE
    _err(f"ingested {len(bset.instances)} instances in groups {bset.groups()}")
    _emit({"manifest": str(cache / "manifest.json"), "groups": bset.groups()})
    return EXIT_OK


def _load_config(path):
    return harness.ExperimentConfig.from_file(path)


def cmd_run(args):
    try:
        config = _load_config(args.config)
        if args.seed is not None:
            config.master_seed = args.seed
        if args.out:
            config.out_dir = args.out
        plan, bset = config.build_plan()
    except (ValueError, harness.BenchmarkError) as exc:
        _err(f"config error: {exc}")
        return EXIT_USAGE

    algorithms = tuple(args.algorithms.split(","))
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "manifest.json").write_text(
        json.dumps(bset.manifest(), indent=2) + "\n"
    )
    journal = out_dir / "journal.jsonl"
    if journal.exists() and not args.resume:
        journal.unlink()

    total = len(plan.instances) * plan.n_runs * len(algorithms)
    count = [0]

    def progress(rec):
        count[0] += 1
        _err(
            f"[{count[0]}/{total}] {rec['algorithm']} {rec['instance_id']} "
            f"run {rec['run_index']}: y={rec.get('y', 'FAILED')}"
        )

    try:
        matrices, failed = harness.execute(
            plan, algorithms=algorithms, jobs=args.jobs,
            journal_path=journal, progress=progress,
        )
    except Exception as exc:
        _err(f"experiment failed: {exc}")
        return EXIT_RUNTIME
    if failed:
        _err(f"WARNING: {len(failed)} failed cells excluded from both matrices: {failed}")

    paths = {"journal": str(journal), "manifest": str(out_dir / "manifest.json")}
    for algo, matrix in matrices.items():
        csv_path = out_dir / f"results_{algo}.csv"
        write_result_csv(matrix, csv_path)
        paths[f"results_{algo}"] = str(csv_path)

    if len(matrices) == 2:
        ym, y0 = (matrices.get("sa"), matrices.get("placebo"))
        if ym is not None and y0 is not None:
            harness.summarize(ym, y0, deltas=plan.deltas, out_dir=out_dir)
            paths["summary"] = str(out_dir / "summary.json")
    _emit(paths)
    return EXIT_OK


def _read_pair(args):
    ym = read_result_csv(args.results_m)
    y0 = read_result_csv(args.results_0)
    check_paired(ym, y0)
    return ym, y0


def _print_ber_table(reports, delta):
    _err(f"BER values for delta={delta:.4f}")
    _err(f"{'n':>8} {'b*':>8} {'e*':>8} {'r*':>8}")
    for rep in reports:
        _err(f"{rep.group:>8} {rep.b:8.4f} {rep.e:8.4f} {rep.r:8.4f}")


def cmd_ber(args):
    try:
        deltas = [float(d) for d in args.delta.split(",")]
        ym, y0 = _read_pair(args)
    except Exception as exc:
        _err(f"cannot pair result files: {exc}")
        return EXIT_USAGE
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {}
    from .ber import ber_grouped

    for delta in deltas:
        reports = ber_grouped(ym, y0, delta)
        path = out_dir / f"ber_{delta:.4f}.csv"
        write_ber_csv(reports, path)
        _print_ber_table(reports, delta)
        paths[f"ber_{delta:.4f}"] = str(path)
    _emit(paths)
    return EXIT_OK


def cmd_report(args):
    try:
        ym, y0 = _read_pair(args)
    except Exception as exc:
        _err(f"cannot pair result files: {exc}")
        return EXIT_USAGE
    deltas = [float(d) for d in args.delta.split(",")]
    out_dir = Path(args.out)
    try:
        harness.summarize(ym, y0, deltas=deltas, out_dir=out_dir)
    except Exception as exc:
        _err(f"report failed: {exc}")
        return EXIT_RUNTIME
    _emit({
        "summary": str(out_dir / "summary.json"),
        "plots": str(out_dir / "plots"),
    })
    return EXIT_OK


def _tuning_evaluator(instances, n_runs, master_seed, blocked, counter):
    """Mean score of the annealer over the tuning instances.

    With `blocked` seeds every parameter setting reuses the same seed list
    (common random numbers); otherwise each evaluator call draws a fresh
    block of seeds keyed by an incrementing counter.
    """

    def evaluate(params):
        block = 0 if blocked else counter[0]
        counter[0] += 1
        ys = []
        for inst in instances:
            for j in range(n_runs):
                seed = harness.derive_seed(master_seed, inst.digest, block * n_runs + j)
                outcome = run_sa_flip(
                    inst.formula, dataclasses.replace(params, seed=seed)
                )
                ys.append(outcome.best_score)
        return statistics.fmean(ys)

    return evaluate


def cmd_tune(args):
    try:
        config = _load_config(args.config)
        if args.seed is not None:
            config.master_seed = args.seed
        plan, bset = config.build_plan()
    except (ValueError, harness.BenchmarkError) as exc:
        _err(f"config error: {exc}")
        return EXIT_USAGE
    instances = plan.instances
    out_dir = Path(args.out or config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    counter = [1]

    if args.phase == "screen":
        design = doe.box_behnken_4(center_points=args.center_points)
        evaluate = _tuning_evaluator(
            instances, args.runs, config.master_seed, blocked=True, counter=counter
        )
        responses = []
        journal = []
        for row, params in zip(design.coded_rows, design.decoded):
            y = evaluate(params)
            responses.append(y)
            journal.append({
                "coded": list(row),
                "params": dataclasses.asdict(params),
                "mean_y": y,
            })
            _err(f"screen row {row}: mean y = {y:.6f}")
        effects = doe.estimate_effects(design, responses)
        doc = {
            "design": "box-behnken-4",
            "center_points": args.center_points,
            "seed_blocking": "common random numbers across rows",
            "response_aggregation": "mean over all instance runs "
            "(alternative: mean of per-instance means)",
            "rows": journal,
            "intercept": effects.intercept,
            "main_effects": effects.main_effects,
            "interactions": {"+".join(k): v for k, v in effects.interactions.items()},
        }
        path = out_dir / "screening_effects.json"
        path.write_text(json.dumps(doc, indent=2) + "\n")
        _err("main effects: " + json.dumps(effects.main_effects))
        _emit({"screening": str(path)})
        return EXIT_OK

    # RSM phase: fresh seeds per design row.
    evaluate = _tuning_evaluator(
        instances, args.runs, config.master_seed, blocked=False, counter=counter
    )
    start = config.params
    try:
        trace, final = doe.rsm_walk(
            start,
            budget_limit=args.budget_limit,
            evaluator=evaluate,
            dead_band=args.dead_band,
        )
    except doe.RsmEvaluationError as exc:
        path = out_dir / "rsm_trace.json"
        path.write_text(
            json.dumps([s.as_dict() for s in exc.trace], indent=2) + "\n"
        )
        _err(f"tuning failed ({exc}); partial trace at {path}")
        return EXIT_RUNTIME
    trace_path = out_dir / "rsm_trace.json"
    trace_path.write_text(json.dumps([s.as_dict() for s in trace], indent=2) + "\n")
    params_path = out_dir / "tuned_params.json"
    params_path.write_text(
        json.dumps({"params": dataclasses.asdict(final)}, indent=2) + "\n"
    )
    _err(f"final center: {final}")
    _emit({"trace": str(trace_path), "params": str(params_path)})
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="saflip",
        description="Annealer-vs-placebo evaluation harness for 3-SAT local search",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fetch", help="download/ingest benchmark archives")
    p.add_argument("source", nargs="*", help="archive URLs or local paths")
    p.add_argument("--cache-dir", default="benchmarks", help="cache directory")
    p.add_argument("--no-validate", action="store_true",
                   help="skip 3-CNF/phase-transition validation")
    p.set_defaults(func=cmd_fetch)

    p = sub.add_parser("run", help="execute an experiment plan")
    p.add_argument("--config", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=None, help="override master seed")
    p.add_argument("--out", default=None, help="override output directory")
    p.add_argument("--resume", action="store_true",
                   help="reuse the journal, skipping completed cells")
    p.add_argument("--algorithms", default="sa,placebo")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("ber", help="BER tables from paired result CSVs")
    p.add_argument("results_m", help="result CSV of the examined algorithm")
    p.add_argument("results_0", help="result CSV of the placebo")
    p.add_argument("--delta", default="0,0.01,0.02", help="comma-separated deltas")
    p.add_argument("--out", default="ber")
    p.set_defaults(func=cmd_ber)

    p = sub.add_parser("tune", help="DOE parameter tuning")
    p.add_argument("--config", required=True)
    p.add_argument("--phase", choices=("screen", "rsm"), required=True)
    p.add_argument("--runs", type=int, default=30, help="runs per instance per row")
    p.add_argument("--center-points", type=int, default=3)
    p.add_argument("--budget-limit", type=int, default=5000)
    p.add_argument("--dead-band", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("report", help="summary tables and plots from result CSVs")
    p.add_argument("results_m")
    p.add_argument("results_0")
    p.add_argument("--delta", default="0,0.01,0.02")
    p.add_argument("--out", default="report")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except KeyboardInterrupt:
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
