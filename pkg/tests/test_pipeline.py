import json
import subprocess
import sys
from pathlib import Path

import jsonschema
import pytest

from satexplain.cli import main
from satexplain.core import parse_dimacs
from satexplain.oracles import OracleSpec
from satexplain.pipeline import (
    EXIT_OK,
    EXIT_TARGET_UNREACHABLE,
    EXIT_TRUNCATED,
    RunConfig,
    render_masks,
    run_encode,
    run_explain,
)

SCHEMA = json.loads((Path(__file__).parent.parent / "docs" / "report.schema.json").read_text())


def and_config(**overrides):
    base = dict(
        oracle=OracleSpec(kind="truth-table", n_features=2, table="0001"),
        instance="00",
        radius=2,
        count=3,
    )
    base.update(overrides)
    return RunConfig(**base)


def validate(report):
    jsonschema.validate(json.loads(report.to_json()), SCHEMA)


# -- run_explain ----------------------------------------------------------------


def test_and_oracle_end_to_end():
    report, code = run_explain(and_config())
    assert code == EXIT_OK
    assert report.status == "ok"
    assert report.counterfactuals == [[0, 1]]
    assert report.sufficient_reasons == [[0], [1]]
    assert report.prediction == 0 and report.target_class == 1
    assert report.complete == {"counterfactuals": True, "sufficient_reasons": True}
    validate(report)


def test_already_target_short_circuits():
    report, code = run_explain(and_config(target_class=0))
    assert code == EXIT_OK
    assert report.status == "already_target"
    assert report.counterfactuals == [] and report.sufficient_reasons == []
    validate(report)


def test_locally_constant_vicinity_exits_3():
    cfg = RunConfig(
        oracle=OracleSpec(kind="truth-table", n_features=3, table="00000000"),
        instance="000",
        radius=3,
        count=7,
    )
    report, code = run_explain(cfg)
    assert code == EXIT_TARGET_UNREACHABLE
    assert report.status == "locally_constant"
    assert report.counterfactuals == []
    assert report.sufficient_reasons == [[]]  # nothing needs fixing
    validate(report)


def test_truncation_suppresses_sufficient_reasons():
    cfg = RunConfig(
        oracle=OracleSpec(kind="truth-table", n_features=2, table="0111"),
        instance="00",
        radius=2,
        count=3,
        seed=1,  # trains an exact OR surrogate: two MCSes exist
        mcs_max_count=1,
    )
    report, code = run_explain(cfg)
    assert code == EXIT_TRUNCATED
    assert report.status == "truncated"
    assert len(report.counterfactuals) == 1
    assert report.sufficient_reasons is None
    assert report.complete == {"counterfactuals": False, "sufficient_reasons": False}
    validate(report)


def test_positive_prediction_explained_toward_zero():
    cfg = and_config(instance="11")
    report, code = run_explain(cfg)
    assert code == EXIT_OK
    assert report.prediction == 1 and report.target_class == 0
    assert report.counterfactuals == [[0], [1]]
    assert report.sufficient_reasons == [[0, 1]]
    validate(report)


def test_explain_with_provided_dataset(tmp_path):
    data = tmp_path / "pool.txt"
    data.write_text("01\n10\n11\n")
    cfg = and_config(dataset_file=str(data))
    report, code = run_explain(cfg)
    assert code == EXIT_OK
    assert report.counterfactuals == [[0, 1]]
    validate(report)


def _parity_config(**overrides):
    """Depth-1 trees provably mispredict x when every radius-1 neighbor has
    the opposite parity label, so the fidelity guard must give up."""
    n = 6
    parity = "".join(str(bin(i).count("1") & 1) for i in range(2**n))
    base = dict(
        oracle=OracleSpec(kind="truth-table", n_features=n, table=parity),
        instance="0" * n,
        radius=1,
        count=6,
        max_depth=1,
        nb_trees=3,
    )
    base.update(overrides)
    return RunConfig(**base)


def test_fidelity_guard_gives_up_after_retries():
    from satexplain.pipeline import FidelityError

    with pytest.raises(FidelityError):
        run_explain(_parity_config())


def test_cli_fidelity_failure_exits_2(tmp_path, capsys):
    code = run_cli(
        "explain",
        "--oracle-kind", "truth-table",
        "--table", "".join(str(bin(i).count("1") & 1) for i in range(64)),
        "--n-features", "6", "--instance", "000000",
        "--radius", "1", "--count", "6", "--max-depth", "1", "--nb-trees", "3",
        "--out-report", str(tmp_path / "r.json"),
    )
    assert code == 2
    assert "train stage" in capsys.readouterr().err


def test_cli_oracle_failure_names_the_stage(tmp_path, capsys):
    code = run_cli(
        "explain",
        "--oracle-kind", "external",
        "--oracle-command", f"{sys.executable} -c 'pass'",
        "--n-features", "2", "--instance", "00",
        "--out-report", str(tmp_path / "r.json"),
    )
    assert code == 1
    assert "oracle stage" in capsys.readouterr().err


def test_timings_cover_all_stages():
    report, _ = run_explain(and_config())
    for stage in ("sample", "train", "encode", "enumerate_mcs", "dualize", "verify", "total"):
        assert stage in report.timings


def test_explanations_from_report_bridge():
    from satexplain.pipeline import explanations_from_report

    report, _ = run_explain(and_config())
    explanations = explanations_from_report(report)
    kinds = sorted((e.kind, tuple(sorted(e.features))) for e in explanations)
    assert kinds == [
        ("counterfactual", (0, 1)),
        ("sufficient_reason", (0,)),
        ("sufficient_reason", (1,)),
    ]
    assert all(e.source_instance.to_string() == "00" for e in explanations)
    assert all(e.target_class == 1 for e in explanations)


# -- run_encode -------------------------------------------------------------------


def test_encode_writes_reparseable_files(tmp_path):
    cfg = and_config(
        out_dimacs=str(tmp_path / "f.cnf"),
        out_wcnf=str(tmp_path / "p.wcnf"),
        out_stats=str(tmp_path / "stats.json"),
    )
    stats, code = run_encode(cfg)
    assert code == EXIT_OK
    cnf = parse_dimacs((tmp_path / "f.cnf").read_text())
    assert len(cnf.clauses) == stats["clauses"]
    wcnf_lines = (tmp_path / "p.wcnf").read_text().splitlines()
    header = wcnf_lines[0].split()
    assert header[:2] == ["p", "wcnf"]
    assert int(header[4]) == 3  # top weight = n_soft + 1
    assert wcnf_lines[-1] in ("1 -1 0", "1 -2 0")  # soft clauses carry weight 1
    saved = json.loads((tmp_path / "stats.json").read_text())
    assert saved["vars"] == stats["vars"]
    assert saved["encode_time"] >= 0


# -- mask rendering ----------------------------------------------------------------


def test_render_mask_2x2_example():
    report = {"instance": "0000", "counterfactuals": [[0, 3]]}
    masks = render_masks(report, 2, 2, "counterfactuals")
    assert masks["counterfactuals_000"] == "P2 2 2 255\n255 0\n0 255\n"
    assert masks["counterfactuals_heatmap"] == "P2 2 2 255\n255 0\n0 255\n"


def test_render_mask_empty_set_is_black():
    report = {"instance": "0000", "counterfactuals": []}
    masks = render_masks(report, 2, 2, "counterfactuals")
    assert masks == {"counterfactuals_heatmap": "P2 2 2 255\n0 0\n0 0\n"}


def test_render_mask_dimension_mismatch():
    with pytest.raises(ValueError):
        render_masks({"instance": "000", "counterfactuals": []}, 2, 2)


def test_heatmap_matches_recount_from_report():
    import random

    rng = random.Random(3)
    n = 9
    sets = [sorted(rng.sample(range(n), rng.randint(1, 4))) for _ in range(12)]
    report = {"instance": "0" * n, "counterfactuals": sets}
    masks = render_masks(report, 3, 3, "counterfactuals", limit=2)
    counts = [0] * n
    for s in sets:
        for f in s:
            counts[f] += 1
    peak = max(counts)
    body = masks["counterfactuals_heatmap"].splitlines()[1:]
    values = [int(v) for row in body for v in row.split()]
    assert values == [round(c * 255 / peak) for c in counts]
    # limit applies to per-explanation masks, not to the aggregate
    assert len(masks) == 3


# -- CLI ---------------------------------------------------------------------------


def run_cli(*argv):
    return main(list(argv))


def test_cli_explain_and_or_gadget(tmp_path):
    out = tmp_path / "report.json"
    code = run_cli(
        "explain",
        "--oracle-kind", "truth-table", "--table", "0001", "--n-features", "2",
        "--instance", "00", "--radius", "2", "--count", "3",
        "--out-report", str(out),
    )
    assert code == 0
    report = json.loads(out.read_text())
    jsonschema.validate(report, SCHEMA)
    assert report["counterfactuals"] == [[0, 1]]
    assert report["sufficient_reasons"] == [[0], [1]]


def test_cli_config_file_with_flag_override(tmp_path):
    cfg = {
        "oracle": {"kind": "truth-table", "n_features": 2, "table": "0001"},
        "instance": "00",
        "radius": 2,
        "count": 3,
        "target_class": 0,
        "out_report": str(tmp_path / "a.json"),
    }
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps(cfg))
    code = run_cli("explain", "--config", str(cfg_path))
    assert code == 0
    assert json.loads((tmp_path / "a.json").read_text())["status"] == "already_target"
    # explicit flag beats the config file
    code = run_cli(
        "explain", "--config", str(cfg_path),
        "--target-class", "1", "--out-report", str(tmp_path / "b.json"),
    )
    assert code == 0
    assert json.loads((tmp_path / "b.json").read_text())["status"] == "ok"


def test_cli_locally_constant_exit_code(tmp_path):
    code = run_cli(
        "explain",
        "--oracle-kind", "truth-table", "--table", "00000000", "--n-features", "3",
        "--instance", "000", "--radius", "3", "--count", "7",
        "--out-report", str(tmp_path / "r.json"),
    )
    assert code == 3
    assert json.loads((tmp_path / "r.json").read_text())["status"] == "locally_constant"


def test_cli_threshold_oracle_and_masks(tmp_path):
    out = tmp_path / "report.json"
    code = run_cli(
        "explain",
        "--oracle-kind", "threshold", "--n-features", "4", "--pixels", "0-2", "--k", "2",
        "--instance", "1000", "--radius", "4", "--count", "14",
        "--out-report", str(out),
    )
    assert code == 0
    code = run_cli(
        "render-mask", "--report", str(out), "--width", "2", "--height", "2",
        "--out-dir", str(tmp_path / "masks"),
    )
    assert code == 0
    pgms = sorted(p.name for p in (tmp_path / "masks").glob("*.pgm"))
    assert "counterfactuals_heatmap.pgm" in pgms


def test_cli_selftest_passes():
    assert run_cli("selftest", "--problems", "6", "--seed", "2") == 0


def test_selftest_deterministic_across_runs():
    from satexplain.selftest import run_selftest

    assert run_selftest(problems=10, seed=4) == run_selftest(problems=10, seed=4)


def test_cli_encode_subcommand(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    code = run_cli(
        "encode",
        "--oracle-kind", "truth-table", "--table", "0001", "--n-features", "2",
        "--instance", "00", "--radius", "2", "--count", "3",
    )
    assert code == 0
    assert Path("forest.cnf").exists()
    assert Path("problem.wcnf").exists()
    assert Path("encoding-stats.json").exists()


def test_cli_batch_mode(tmp_path):
    instances = tmp_path / "xs.txt"
    instances.write_text("00\n11\n")
    out = tmp_path / "report.json"
    code = run_cli(
        "explain", "--batch", "--workers", "2",
        "--oracle-kind", "truth-table", "--table", "0001", "--n-features", "2",
        "--instance-file", str(instances), "--radius", "2", "--count", "3",
        "--out-report", str(out),
    )
    assert code == 0
    r0 = json.loads((tmp_path / "report.0.json").read_text())
    r1 = json.loads((tmp_path / "report.1.json").read_text())
    assert r0["instance"] == "00" and r0["counterfactuals"] == [[0, 1]]
    assert r1["instance"] == "11" and r1["prediction"] == 1


def test_cli_entrypoint_via_subprocess(tmp_path):
    out = tmp_path / "r.json"
    proc = subprocess.run(
        [
            sys.executable, "-m", "satexplain.cli", "explain",
            "--oracle-kind", "truth-table", "--table", "0111", "--n-features", "2",
            "--instance", "00", "--radius", "2", "--count", "3", "--seed", "1",
            "--out-report", str(out),
        ],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert json.loads(out.read_text())["counterfactuals"] == [[0], [1]]
