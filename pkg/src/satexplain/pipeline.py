"""End-to-end explanation runs: sample, train, encode, enumerate, verify.

Exit-code contract: 0 ok (including already-target), 2 fidelity failure,
3 target unreachable (locally constant surrogate), 4 budget/count truncation
(partial results still written).
"""

from __future__ import annotations

import json
import random
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .core import Explanation, Instance, emit_dimacs, emit_wcnf
from .encoding import AlreadyClassifiedError, build_problem, encode_forest
from .enumeration import (
    TargetUnreachableError,
    enumerate_mcs,
    enumerate_mus_by_dualization,
    hard_session,
    verify_counterfactual,
    verify_sufficient_reason,
)
from .forest import fidelity, predict_forest, train_forest
from .oracles import OracleSpec
from .vicinity import (
    LabeledDataset,
    default_radius,
    filter_dataset_vicinity,
    read_instances,
    sample_vicinity,
)

EXIT_OK = 0
EXIT_FIDELITY = 2
EXIT_TARGET_UNREACHABLE = 3
EXIT_TRUNCATED = 4

DEFAULT_SEED = 20240501


class FidelityError(RuntimeError):
    """The surrogate keeps disagreeing with the black box on the instance."""


@dataclass
class RunConfig:
    oracle: OracleSpec
    instance: str | None = None
    instance_file: str | None = None
    instance_index: int = 0
    dataset_file: str | None = None
    radius: int | None = None  # default: dimension-proportional (250 at n=784)
    count: int = 200
    nb_trees: int = 10
    max_depth: int = 24
    vote_threshold: int | None = None
    seed: int = DEFAULT_SEED
    target_class: int | None = None  # default: opposite of the black-box label
    mcs_max_count: int | None = 10000
    budget_seconds: float | None = 600.0
    use_one_paths: bool = False
    out_report: str = "report.json"
    out_dimacs: str | None = None
    out_wcnf: str | None = None
    out_stats: str | None = None

    def resolve_instance(self) -> Instance:
        if self.instance is not None:
            return Instance.from_string(self.instance)
        if self.instance_file is not None:
            rows = read_instances(self.instance_file, self.oracle.n_features)
            if not rows:
                raise ValueError(f"no instances in {self.instance_file}")
            return rows[self.instance_index]
        raise ValueError("no instance given (need --instance or --instance-file)")


@dataclass
class ExplanationReport:
    """In-memory form of the JSON report (docs/report.schema.json)."""

    instance: str
    prediction: int
    target_class: int
    fidelity: dict
    cnf: dict
    counterfactuals: list[list[int]]
    sufficient_reasons: list[list[int]] | None
    status: str
    timings: dict
    complete: dict
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


def _split_holdout(data: LabeledDataset, seed: int) -> tuple[LabeledDataset, LabeledDataset | None]:
    """Hold out 25% of the neighbors; the explained instance stays in training."""
    head, rest = data.rows[0], list(data.rows[1:])
    random.Random(seed ^ 0x5EED).shuffle(rest)
    n_hold = len(rest) // 4
    holdout = rest[:n_hold]
    train = [head] + rest[n_hold:]
    train_ds = LabeledDataset(train, data.n_features, truncated=data.truncated)
    hold_ds = LabeledDataset(holdout, data.n_features) if holdout else None
    return train_ds, hold_ds


def _train_with_guard(config: RunConfig, x, oracle, fx, timings, notes):
    """Train the surrogate; retrain with fresh seed and doubled samples when it
    misses the black-box label on x (up to 3 retries)."""
    radius = config.radius if config.radius is not None else default_radius(x.n)
    count = config.count
    dataset = None
    if config.dataset_file is not None:
        pool = read_instances(config.dataset_file, x.n)
        t0 = time.perf_counter()
        dataset = filter_dataset_vicinity(x, pool, oracle, radius)
        timings["sample"] = time.perf_counter() - t0
    for attempt in range(4):
        seed = config.seed + 1_000_003 * attempt
        if dataset is None:
            t0 = time.perf_counter()
            data = sample_vicinity(x, oracle, radius, count, seed)
            timings["sample"] = timings.get("sample", 0.0) + time.perf_counter() - t0
            if data.truncated:
                notes.append("vicinity truncated: ball smaller than requested count")
        else:
            data = dataset
        train_ds, hold_ds = _split_holdout(data, seed)
        t0 = time.perf_counter()
        forest = train_forest(
            train_ds, config.nb_trees, config.max_depth, seed, config.vote_threshold
        )
        timings["train"] = timings.get("train", 0.0) + time.perf_counter() - t0
        if predict_forest(forest, x) == fx:
            return forest, train_ds, hold_ds
        count *= 2
        notes.append(f"retrained after local fidelity miss (attempt {attempt + 1})")
    raise FidelityError(
        "surrogate disagrees with the black box on the instance after 4 attempts"
    )


def run_explain(config: RunConfig) -> tuple[ExplanationReport, int]:
    timings: dict[str, float] = {}
    notes: list[str] = []
    total0 = time.perf_counter()
    oracle = config.oracle.build()
    x = config.resolve_instance()
    if x.n != config.oracle.n_features:
        raise ValueError("instance length does not match the oracle")
    fx = oracle.predict(x)
    target = config.target_class if config.target_class is not None else 1 - fx

    forest, train_ds, hold_ds = _train_with_guard(config, x, oracle, fx, timings, notes)
    fid = {
        "train": fidelity(forest, train_ds),
        "holdout": fidelity(forest, hold_ds) if hold_ds is not None else None,
    }

    t0 = time.perf_counter()
    enc = encode_forest(forest, use_one_paths=config.use_one_paths)
    timings["encode"] = time.perf_counter() - t0
    cnf_stats = {"vars": enc.stats.var_count, "clauses": enc.stats.clause_count}
    if config.out_dimacs:
        Path(config.out_dimacs).write_text(emit_dimacs(enc.cnf))

    def report(status, cfs, srs, complete, code):
        timings["total"] = time.perf_counter() - total0
        rep = ExplanationReport(
            instance=x.to_string(),
            prediction=fx,
            target_class=target,
            fidelity=fid,
            cnf=cnf_stats,
            counterfactuals=[sorted(s) for s in cfs],
            sufficient_reasons=None if srs is None else [sorted(s) for s in srs],
            status=status,
            timings=timings,
            complete=complete,
            notes=notes,
        )
        return rep, code

    try:
        problem = build_problem(enc, x, target)
    except AlreadyClassifiedError:
        notes.append("prediction already matches the target class")
        return report(
            "already_target", [], [], {"counterfactuals": True, "sufficient_reasons": True},
            EXIT_OK,
        )
    if config.out_wcnf:
        Path(config.out_wcnf).write_text(emit_wcnf(problem))

    t0 = time.perf_counter()
    try:
        mcs = enumerate_mcs(problem, config.mcs_max_count, config.budget_seconds)
    except TargetUnreachableError:
        timings["enumerate_mcs"] = time.perf_counter() - t0
        notes.append("surrogate is locally constant: no counterfactual exists")
        return report(
            "locally_constant",
            [],
            [frozenset()],
            {"counterfactuals": True, "sufficient_reasons": True},
            EXIT_TARGET_UNREACHABLE,
        )
    timings["enumerate_mcs"] = time.perf_counter() - t0

    srs: list[frozenset[int]] | None
    sr_complete = True
    if mcs.complete:
        t0 = time.perf_counter()
        mus = enumerate_mus_by_dualization(
            mcs, max_count=config.mcs_max_count, budget=config.budget_seconds
        )
        timings["dualize"] = time.perf_counter() - t0
        srs = mus.mus_sets
        sr_complete = mus.complete
        if not mus.complete:
            notes.append("sufficient-reason enumeration truncated by limits")
    else:
        srs = None
        sr_complete = False
        notes.append("sufficient reasons suppressed: MCS enumeration was truncated")

    t0 = time.perf_counter()
    session = hard_session(problem)
    for cf in mcs.mcs_sets:
        if not verify_counterfactual(forest, x, cf, target):
            raise RuntimeError(f"enumerated counterfactual {sorted(cf)} failed verification")
    if srs is not None:
        for sr in srs:
            if not verify_sufficient_reason(forest, x, sr, problem=problem, session=session):
                raise RuntimeError(f"sufficient reason {sorted(sr)} failed verification")
    timings["verify"] = time.perf_counter() - t0

    truncated = not (mcs.complete and sr_complete)
    status = "truncated" if truncated else "ok"
    code = EXIT_TRUNCATED if truncated else EXIT_OK
    return report(
        status,
        mcs.mcs_sets,
        srs,
        {"counterfactuals": mcs.complete, "sufficient_reasons": sr_complete},
        code,
    )


def explanations_from_report(report: ExplanationReport) -> list[Explanation]:
    x = Instance.from_string(report.instance)
    out = [
        Explanation("counterfactual", frozenset(s), x, report.target_class)
        for s in report.counterfactuals
        if s
    ]
    for s in report.sufficient_reasons or []:
        if s:
            out.append(Explanation("sufficient_reason", frozenset(s), x, report.target_class))
    return out


def run_encode(config: RunConfig) -> tuple[dict, int]:
    """Encode-only run: DIMACS + WCNF + stats files, no enumeration."""
    timings: dict[str, float] = {}
    notes: list[str] = []
    oracle = config.oracle.build()
    x = config.resolve_instance()
    fx = oracle.predict(x)
    target = config.target_class if config.target_class is not None else 1 - fx
    forest, _, _ = _train_with_guard(config, x, oracle, fx, timings, notes)
    enc = encode_forest(forest, use_one_paths=config.use_one_paths)
    stats = {
        "vars": enc.stats.var_count,
        "feature_vars": enc.stats.feature_var_count,
        "clauses": enc.stats.clause_count,
        "encode_time": enc.stats.encode_time,
    }
    if config.out_dimacs:
        Path(config.out_dimacs).write_text(emit_dimacs(enc.cnf))
    wcnf_note = None
    try:
        problem = build_problem(enc, x, target)
        if config.out_wcnf:
            Path(config.out_wcnf).write_text(emit_wcnf(problem))
    except AlreadyClassifiedError:
        wcnf_note = "already classified as target; no WCNF written"
        notes.append(wcnf_note)
    if config.out_stats:
        Path(config.out_stats).write_text(json.dumps({**stats, "notes": notes}, indent=2))
    return stats, EXIT_OK


# ---------------------------------------------------------------------------
# PGM mask rendering


def _pgm(width: int, height: int, values: list[int]) -> str:
    lines = [f"P2 {width} {height} 255"]
    for r in range(height):
        row = values[r * width : (r + 1) * width]
        lines.append(" ".join(str(v) for v in row))
    return "\n".join(lines) + "\n"


def render_masks(
    report: dict,
    width: int,
    height: int,
    kind: str = "counterfactuals",
    limit: int | None = 16,
) -> dict[str, str]:
    """Binary PGM per explanation plus a count heatmap, keyed by file stem."""
    n = width * height
    if len(report["instance"]) != n:
        raise ValueError(f"width*height = {n} != {len(report['instance'])} features")
    sets = report.get(kind) or []
    out: dict[str, str] = {}
    chosen = sets if limit is None else sets[:limit]
    for idx, features in enumerate(chosen):
        values = [0] * n
        for f in features:
            values[f] = 255
        out[f"{kind}_{idx:03d}"] = _pgm(width, height, values)
    counts = [0] * n
    for features in sets:
        for f in features:
            counts[f] += 1
    peak = max(counts, default=0)
    heat = [0 if peak == 0 else round(c * 255 / peak) for c in counts]
    out[f"{kind}_heatmap"] = _pgm(width, height, heat)
    return out
