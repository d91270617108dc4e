import json
import re

import pytest
from click.testing import CliRunner

from plcclone.cli import main
from plcclone.samples import sample_bytes


@pytest.fixture()
def runner():
    return CliRunner()


@pytest.fixture()
def sample_files(tmp_path):
    paths = {}
    for name in ("example_basic", "example_basic_ws", "conveyor_sfc", "pump_station"):
        path = tmp_path / f"{name}.xml"
        path.write_bytes(sample_bytes(name))
        paths[name] = str(path)
    return paths


def test_compare_inter_self_prints_exact_similarity(runner, sample_files):
    result = runner.invoke(
        main,
        ["compare-inter", sample_files["example_basic"], sample_files["example_basic"], "--metric", "fine"],
    )
    assert result.exit_code == 0
    assert "overall similarity: 1.0000" in result.output


def test_compare_inter_type_one_variant(runner, sample_files):
    result = runner.invoke(
        main,
        ["compare-inter", sample_files["example_basic"], sample_files["example_basic_ws"]],
    )
    assert result.exit_code == 0
    assert "overall similarity: 1.0000" in result.output


def test_compare_inter_report_file_and_formats(runner, sample_files, tmp_path):
    for fmt, probe in (("json", '"category"'), ("text", "family model"), ("dot", "digraph")):
        out = tmp_path / f"report.{fmt}"
        result = runner.invoke(
            main,
            [
                "compare-inter",
                sample_files["example_basic"],
                sample_files["conveyor_sfc"],
                "--format",
                fmt,
                "--output",
                str(out),
            ],
        )
        assert result.exit_code == 0, result.output
        assert probe in out.read_text()


def test_missing_input_file_exits_2_without_output(runner, tmp_path):
    out = tmp_path / "never.json"
    result = runner.invoke(main, ["compare-inter", "no-such.xml", "also-missing.xml", "-o", str(out)])
    assert result.exit_code == 2
    assert not out.exists()


def test_malformed_xml_exits_2(runner, tmp_path):
    bad = tmp_path / "bad.xml"
    bad.write_text("<project><oops></project>")
    result = runner.invoke(main, ["compare-inter", str(bad), str(bad)])
    assert result.exit_code == 2
    assert "error" in result.output


def test_invalid_metric_file_exits_3(runner, sample_files, tmp_path):
    metric = tmp_path / "broken.metric.json"
    metric.write_text(json.dumps({"name": "x", "root": {"type": "pou", "weight": 2.0}}))
    result = runner.invoke(
        main,
        ["compare-inter", sample_files["example_basic"], sample_files["example_basic"], "--metric", str(metric)],
    )
    assert result.exit_code == 3


def test_compare_intra_clone_listing(runner, sample_files):
    result = runner.invoke(main, ["compare-intra", sample_files["pump_station"], "--format", "json"])
    assert result.exit_code == 0
    document = json.loads(result.output[: result.output.rindex("}") + 1])
    labels = {(c["left"], c["right"]): c["label"] for c in document["candidates"]}
    assert labels[("pou:PUMP_A", "pou:PUMP_B")] == "identical"
    assert labels[("pou:PUMP_A", "pou:PUMP_C")] == "renamedOnly"


def test_mutate_writes_mutant_and_context(runner, sample_files, tmp_path):
    out = tmp_path / "mutants"
    result = runner.invoke(
        main,
        ["mutate", sample_files["conveyor_sfc"], "--category", "t3", "--seed", "5", "-o", str(out)],
    )
    assert result.exit_code == 0, result.output
    mutant_file = out / "conveyor_sfc.mutant.json"
    context_file = out / "conveyor_sfc.context.json"
    assert mutant_file.exists() and context_file.exists()
    from plcclone.modeljson import load_project
    from plcclone.model import validate_project

    validate_project(load_project(mutant_file.read_bytes()))
    context = json.loads(context_file.read_text())
    assert context["category"] == "T3"
    assert context["records"]


def test_evaluate_deterministic_reports(runner, sample_files, tmp_path):
    outputs = []
    for run in range(2):
        out = tmp_path / f"report{run}.json"
        result = runner.invoke(
            main,
            [
                "evaluate",
                sample_files["conveyor_sfc"],
                "--iterations",
                "8",
                "--category",
                "t3",
                "--metric",
                "fine",
                "--seed",
                "2",
                "--format",
                "json",
                "-o",
                str(out),
            ],
        )
        assert result.exit_code == 0, result.output
        document = json.loads(out.read_text())
        document.pop("wallClockSeconds")  # the only nondeterministic field
        outputs.append(json.dumps(document, sort_keys=True))
    assert outputs[0] == outputs[1]


def test_evaluate_text_report_shape(runner, sample_files):
    result = runner.invoke(
        main,
        [
            "evaluate",
            sample_files["example_basic"],
            "--iterations",
            "4",
            "--category",
            "t2",
            "--seed",
            "9",
        ],
    )
    assert result.exit_code == 0, result.output
    assert "precision" in result.output
    assert "per operator" in result.output


def test_generate_and_count_pairs(runner, tmp_path):
    generated = tmp_path / "synthetic.xml"
    result = runner.invoke(
        main, ["generate", "--pous", "2", "--statements", "5", "--seed", "3", "-o", str(generated)]
    )
    assert result.exit_code == 0
    assert generated.exists()
    result = runner.invoke(main, ["count-pairs", str(generated)])
    assert result.exit_code == 0, result.output
    assert "overall similarity: 1.0000" in result.output
    assert re.search(r"statement\s+\d+", result.output)


def test_bench_json_report(runner, tmp_path):
    out = tmp_path / "bench.json"
    result = runner.invoke(
        main,
        ["bench", "--sizes", "2x5,2x8", "--format", "json", "-o", str(out)],
    )
    assert result.exit_code == 0, result.output
    document = json.loads(out.read_text())
    rows = document["runs"][0]["rows"]
    assert len(rows) == 2
    assert rows[0]["pairs"] < rows[1]["pairs"]
    assert all(row["similarity"] == 1.0 for row in rows)


def test_export_metric_round_trip(runner, tmp_path):
    from plcclone.metrics import builtin_metric, load_metric

    out = tmp_path / "fine.metric.json"
    result = runner.invoke(main, ["export-metric", "fine", "-o", str(out)])
    assert result.exit_code == 0
    assert load_metric(out.read_bytes()) == builtin_metric("fine")
    # and the exported file can drive a comparison
    sample = tmp_path / "sample.xml"
    sample.write_bytes(sample_bytes("example_basic"))
    result = runner.invoke(main, ["compare-inter", str(sample), str(sample), "--metric", str(out)])
    assert result.exit_code == 0
    assert "overall similarity: 1.0000" in result.output


def test_jobs_parallel_campaign_matches_serial(runner, sample_files, tmp_path):
    reports = []
    for jobs in ("1", "2"):
        out = tmp_path / f"jobs{jobs}.json"
        result = runner.invoke(
            main,
            [
                "evaluate",
                sample_files["example_basic"],
                "--iterations",
                "6",
                "--category",
                "t3",
                "--seed",
                "4",
                "--jobs",
                jobs,
                "--format",
                "json",
                "-o",
                str(out),
            ],
        )
        assert result.exit_code == 0, result.output
        document = json.loads(out.read_text())
        document.pop("wallClockSeconds")
        reports.append(json.dumps(document, sort_keys=True))
    assert reports[0] == reports[1]


def test_pou_rooted_metric_rejected_for_inter(runner, sample_files, tmp_path):
    metric = tmp_path / "pou_rooted.metric.json"
    metric.write_text(
        json.dumps(
            {
                "name": "pou-rooted",
                "root": {
                    "type": "pou",
                    "weight": 1.0,
                    "options": [],
                    "attributes": [{"id": "pou-name", "weight": 1.0}],
                },
            }
        )
    )
    result = runner.invoke(
        main,
        ["compare-inter", sample_files["example_basic"], sample_files["example_basic"], "--metric", str(metric)],
    )
    assert result.exit_code == 3


def test_bench_constant_sizes_do_not_crash(runner, tmp_path):
    out = tmp_path / "bench.json"
    result = runner.invoke(main, ["bench", "--sizes", "2x5,2x5", "--format", "json", "-o", str(out)])
    assert result.exit_code == 0, result.output


def test_compare_inter_with_rename_and_addition_variant(runner, tmp_path):
    left = tmp_path / "left.xml"
    right = tmp_path / "right.xml"
    original = sample_bytes("example_basic").decode()
    left.write_text(original)
    variant = original.replace(
        "IF A THEN\n  B := FALSE;\nEND_IF",
        "IF A THEN\n  B := TRUE;\n  C := 7;\nEND_IF",
    ).replace(
        '<variable name="B">\n              <type><BOOL/></type>\n            </variable>',
        '<variable name="B">\n              <type><BOOL/></type>\n            </variable>\n'
        '            <variable name="C">\n              <type><INT/></type>\n            </variable>',
    )
    assert "C := 7" in variant and 'name="C"' in variant
    right.write_text(variant)
    out = tmp_path / "family.txt"
    result = runner.invoke(main, ["compare-inter", str(left), str(right), "-o", str(out)])
    assert result.exit_code == 0, result.output
    similarity = float(result.output.split("overall similarity:")[1].strip())
    assert 0.0 < similarity < 1.0
    report = out.read_text()
    optional_assignments = [l for l in report.splitlines() if l.lstrip().startswith("? C := 7")]
    assert len(optional_assignments) == 1


def test_compare_intra_unrelated_pous_empty(runner, tmp_path):
    document = sample_bytes("pump_station").decode()
    # keep only the two unrelated POUs
    import re

    pous = re.findall(r'<pou name="[^"]+".*?</pou>', document, re.DOTALL)
    assert len(pous) == 4
    keep = [p for p in pous if 'name="PUMP_A"' in p or 'name="LOGGER"' in p]
    trimmed = document
    for pou in pous:
        if pou not in keep:
            trimmed = trimmed.replace(pou, "")
    source = tmp_path / "unrelated.xml"
    source.write_text(trimmed)
    result = runner.invoke(main, ["compare-intra", str(source)])
    assert result.exit_code == 0, result.output
    assert "0 clone candidate(s)" in result.output
    assert "none" in result.output
