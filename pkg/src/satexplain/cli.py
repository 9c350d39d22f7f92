"""Command-line interface.

Subcommands: explain, encode, render-mask, selftest. Flags mirror RunConfig
field names (kebab-case); a JSON config file can seed any of them via
--config, with explicit flags taking precedence.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .oracles import DEFAULT_CALL_TIMEOUT, OracleSpec
from .pipeline import (
    DEFAULT_SEED,
    EXIT_FIDELITY,
    EXIT_OK,
    FidelityError,
    RunConfig,
    render_masks,
    run_encode,
    run_explain,
)
from .selftest import run_selftest


def _parse_pixels(spec: str) -> tuple[int, ...]:
    """Pixel set syntax: comma-separated indices and inclusive ranges, '0-19,30'."""
    out: list[int] = []
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return tuple(out)


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with RunConfig fields")
    p.add_argument("--oracle-kind", choices=["truth-table", "threshold", "external"])
    p.add_argument("--n-features", type=int)
    p.add_argument("--table", help="truth table as a 0/1 string of length 2^n")
    p.add_argument("--pixels", help="threshold pixel set, e.g. '0-19,30'")
    p.add_argument("--k", type=int, help="threshold: minimum on-pixels for class 1")
    p.add_argument("--oracle-command", help="external oracle child command line")
    p.add_argument("--oracle-timeout", type=float, default=None)
    p.add_argument("--instance", help="instance as a 0/1 string")
    p.add_argument("--instance-file")
    p.add_argument("--instance-index", type=int, default=None)
    p.add_argument("--dataset-file")
    p.add_argument("--radius", type=int, default=None)
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--nb-trees", type=int, default=None)
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--vote-threshold", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--randomize-seed", action="store_true")
    p.add_argument("--target-class", type=int, choices=[0, 1], default=None)
    p.add_argument("--mcs-max-count", type=int, default=None)
    p.add_argument("--budget-seconds", type=float, default=None)
    p.add_argument("--one-paths", action="store_true", default=None)
    p.add_argument("--out-report", default=None)
    p.add_argument("--out-dimacs", default=None)
    p.add_argument("--out-wcnf", default=None)
    p.add_argument("--out-stats", default=None)
    p.add_argument("--batch", action="store_true", help="explain every instance in the file")
    p.add_argument("--workers", type=int, default=2)


def _config_from_args(args) -> RunConfig:
    file_cfg = {}
    if args.config:
        file_cfg = json.loads(Path(args.config).read_text())

    def pick(flag_value, key, default):
        if flag_value is not None:
            return flag_value
        if key in file_cfg:
            return file_cfg[key]
        return default

    oracle_cfg = file_cfg.get("oracle", {})
    kind = pick(args.oracle_kind, "kind", oracle_cfg.get("kind"))
    n_features = pick(args.n_features, "n_features", oracle_cfg.get("n_features"))
    if kind is None or n_features is None:
        raise SystemExit("an oracle kind and --n-features are required")
    pixels = _parse_pixels(args.pixels) if args.pixels else tuple(oracle_cfg.get("pixels", ()))
    spec = OracleSpec(
        kind=kind,
        n_features=int(n_features),
        table=pick(args.table, "table", oracle_cfg.get("table")),
        pixels=pixels,
        k=pick(args.k, "k", oracle_cfg.get("k", 0)),
        command=pick(args.oracle_command, "command", oracle_cfg.get("command")),
        call_timeout=pick(
            args.oracle_timeout, "call_timeout", oracle_cfg.get("call_timeout", DEFAULT_CALL_TIMEOUT)
        ),
    )
    seed = pick(args.seed, "seed", DEFAULT_SEED)
    if args.randomize_seed:
        seed = random.SystemRandom().randrange(2**32)
    return RunConfig(
        oracle=spec,
        instance=pick(args.instance, "instance", None),
        instance_file=pick(args.instance_file, "instance_file", None),
        instance_index=pick(args.instance_index, "instance_index", 0),
        dataset_file=pick(args.dataset_file, "dataset_file", None),
        radius=pick(args.radius, "radius", None),
        count=pick(args.count, "count", 200),
        nb_trees=pick(args.nb_trees, "nb_trees", 10),
        max_depth=pick(args.max_depth, "max_depth", 24),
        vote_threshold=pick(args.vote_threshold, "vote_threshold", None),
        seed=seed,
        target_class=pick(args.target_class, "target_class", None),
        mcs_max_count=pick(args.mcs_max_count, "mcs_max_count", 10000),
        budget_seconds=pick(args.budget_seconds, "budget_seconds", 600.0),
        use_one_paths=pick(args.one_paths, "use_one_paths", False),
        out_report=pick(args.out_report, "out_report", "report.json"),
        out_dimacs=pick(args.out_dimacs, "out_dimacs", None),
        out_wcnf=pick(args.out_wcnf, "out_wcnf", None),
        out_stats=pick(args.out_stats, "out_stats", None),
    )


def _explain_one(config: RunConfig) -> int:
    from .oracles import OracleError
    from .vicinity import VicinityTooSmallError

    try:
        report, code = run_explain(config)
    except FidelityError as e:
        print(f"explain: train stage: {e}", file=sys.stderr)
        return EXIT_FIDELITY
    except OracleError as e:
        print(f"explain: oracle stage: {e}", file=sys.stderr)
        return 1
    except VicinityTooSmallError as e:
        print(f"explain: sample stage: {e}", file=sys.stderr)
        return 1
    Path(config.out_report).write_text(report.to_json())
    print(
        f"{config.out_report}: status={report.status} "
        f"cf={len(report.counterfactuals)} "
        f"sr={'suppressed' if report.sufficient_reasons is None else len(report.sufficient_reasons)}"
    )
    return code


def _batch_worker(payload):
    import dataclasses

    config, bits, seed, out_path = payload
    cfg = dataclasses.replace(
        config, instance=bits, instance_file=None, seed=seed, out_report=out_path
    )
    return _explain_one(cfg)


def _cmd_explain(args) -> int:
    config = _config_from_args(args)
    if not args.batch:
        return _explain_one(config)
    if not config.instance_file:
        raise SystemExit("--batch needs --instance-file")
    from .vicinity import read_instances

    instances = read_instances(config.instance_file, config.oracle.n_features)
    master = random.Random(config.seed)
    seeds = [master.randrange(2**32) for _ in instances]
    stem = Path(config.out_report)
    jobs = [
        (config, inst.to_string(), seeds[i], str(stem.with_suffix(f".{i}{stem.suffix}")))
        for i, inst in enumerate(instances)
    ]
    with ProcessPoolExecutor(max_workers=args.workers) as pool:
        codes = list(pool.map(_batch_worker, jobs))
    return max(codes, default=EXIT_OK)


def _cmd_encode(args) -> int:
    config = _config_from_args(args)
    if config.out_dimacs is None:
        config.out_dimacs = "forest.cnf"
    if config.out_wcnf is None:
        config.out_wcnf = "problem.wcnf"
    if config.out_stats is None:
        config.out_stats = "encoding-stats.json"
    try:
        stats, code = run_encode(config)
    except FidelityError as e:
        print(f"encode: fidelity failure: {e}", file=sys.stderr)
        return EXIT_FIDELITY
    print(
        f"encoded: {stats['vars']} vars, {stats['clauses']} clauses "
        f"in {stats['encode_time']:.3f}s -> {config.out_dimacs}, {config.out_wcnf}"
    )
    return code


def _cmd_render_mask(args) -> int:
    report = json.loads(Path(args.report).read_text())
    kind = {"cf": "counterfactuals", "sr": "sufficient_reasons"}[args.kind]
    masks = render_masks(report, args.width, args.height, kind, args.limit)
    outdir = Path(args.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    for stem, content in masks.items():
        (outdir / f"{stem}.pgm").write_text(content)
    print(f"wrote {len(masks)} PGM files to {outdir}")
    return EXIT_OK


def _cmd_selftest(args) -> int:
    ok, lines = run_selftest(problems=args.problems, seed=args.seed)
    for line in lines:
        print(line)
    return EXIT_OK if ok else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="satexplain",
        description="Counterfactual and sufficient-reason explanations for "
        "binary classifiers via a forest surrogate and SAT enumeration",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_explain = sub.add_parser("explain", help="full pipeline, writes a JSON report")
    _add_run_flags(p_explain)
    p_explain.set_defaults(func=_cmd_explain)

    p_encode = sub.add_parser("encode", help="encode only: DIMACS + WCNF + stats")
    _add_run_flags(p_encode)
    p_encode.set_defaults(func=_cmd_encode)

    p_mask = sub.add_parser("render-mask", help="render explanation masks as PGM")
    p_mask.add_argument("--report", required=True)
    p_mask.add_argument("--width", type=int, required=True)
    p_mask.add_argument("--height", type=int, required=True)
    p_mask.add_argument("--kind", choices=["cf", "sr"], default="cf")
    p_mask.add_argument("--limit", type=int, default=16)
    p_mask.add_argument("--out-dir", default="masks")
    p_mask.set_defaults(func=_cmd_render_mask)

    p_self = sub.add_parser("selftest", help="run the embedded equivalence suite")
    p_self.add_argument("--problems", type=int, default=40)
    p_self.add_argument("--seed", type=int, default=7)
    p_self.set_defaults(func=_cmd_selftest)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
