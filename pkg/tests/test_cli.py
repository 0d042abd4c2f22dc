import csv
import json
import os

import pytest

from oa_policy_lab.cli import main
from oa_policy_lab.corpus import DepositCorpus, serialize_corpus
from oa_policy_lab.registry import DepositRequirement, Waivable, serialize_registry
from helpers import (
    REFERENCE_DATE,
    build_effectiveness_world,
    corpus_with_counts,
    make_policy,
    make_snapshot,
)


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


@pytest.fixture()
def small_world(tmp_path):
    snapshot, corpus = build_effectiveness_world(per_group=4, articles_per_inst=80)
    registry = write(tmp_path / "registry.json", serialize_registry(snapshot))
    corpus_file = write(tmp_path / "corpus.csv", serialize_corpus(corpus))
    return registry, corpus_file


SIM_CONFIG = json.dumps(
    {
        "years": [2011, 2013],
        "institutions": [
            {
                "institution_id": "sim",
                "n_articles": 120,
                "state_probs": {
                    "open": 0.3, "restricted": 0.2,
                    "metadata_only": 0.1, "not_deposited": 0.4,
                },
            }
        ],
    }
)


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as handle:
        return list(csv.reader(handle))


class TestValidate:
    def registry_with_violation(self, tmp_path):
        records = [
            make_policy(id="fine"),
            make_policy(
                id="contradictory",
                deposit_of_item=DepositRequirement.REQUESTED,
                deposit_waivable=Waivable.YES,
            ),
        ]
        return write(tmp_path / "registry.json", serialize_registry(make_snapshot(records)))

    def test_strict_exits_one_and_lists_violations(self, tmp_path, capsys):
        registry = self.registry_with_violation(tmp_path)
        code = main(
            ["validate", "--registry", registry, "--strict", "--output-dir", str(tmp_path)]
        )
        assert code == 1
        output = capsys.readouterr().out
        assert "contradictory" in output and "deposit_waiver" in output
        rows = read_csv(tmp_path / "violations.csv")
        assert rows[0] == ["record_id", "field", "rule", "message"]
        assert rows[1][0] == "contradictory"

    def test_non_strict_exits_zero(self, tmp_path):
        registry = self.registry_with_violation(tmp_path)
        assert main(["validate", "--registry", registry, "--output-dir", str(tmp_path)]) == 0

    def test_parse_error_exits_two(self, tmp_path, capsys):
        bad = write(tmp_path / "bad.json", "{broken")
        assert main(["validate", "--registry", bad, "--output-dir", str(tmp_path)]) == 2
        assert "error" in capsys.readouterr().err

    def test_missing_file_exits_two(self, tmp_path):
        missing = str(tmp_path / "nope.json")
        assert main(["validate", "--registry", missing, "--output-dir", str(tmp_path)]) == 2


class TestSummarize:
    def test_emits_registry_tables(self, tmp_path, small_world):
        registry, _ = small_world
        out = tmp_path / "tables"
        assert main(["summarize", "--registry", registry, "--output-dir", str(out)]) == 0
        names = sorted(p.name for p in out.iterdir())
        assert names == [
            "deposit_timepoints.csv",
            "green_gold.csv",
            "green_gold_funders.csv",
            "green_gold_institutions.csv",
            "mandates_by_region.csv",
            "policymaker_types.csv",
            "regions.csv",
        ]
        regions = read_csv(out / "regions.csv")
        assert regions[0] == ["region", "policies"]
        total = sum(int(row[1]) for row in regions[1:])
        assert total == 20

    def test_json_format(self, tmp_path, small_world):
        registry, _ = small_world
        out = tmp_path / "json-out"
        code = main(
            ["summarize", "--registry", registry, "--format", "json", "--output-dir", str(out)]
        )
        assert code == 0
        payload = json.loads((out / "summary.json").read_text())
        assert payload["total"] == 20


class TestEncode:
    def test_design_matrix_csv(self, tmp_path, small_world):
        registry, _ = small_world
        out = tmp_path / "enc"
        code = main(
            [
                "encode", "--registry", registry, "--weights", "II",
                "--conditions", "must_deposit,cannot_waive_deposit",
                "--output-dir", str(out),
            ]
        )
        assert code == 0
        rows = read_csv(out / "design_matrix.csv")
        assert rows[0] == ["institution_id", "must_deposit", "cannot_waive_deposit"]
        assert len(rows) == 21
        for row in rows[1:]:
            for cell in row[1:]:
                value = float(cell)
                assert 0.0 <= value <= 1.0
                assert len(cell.split(".")[1]) == 4

    def test_mandate_age_needs_reference_date(self, tmp_path, small_world, capsys):
        registry, _ = small_world
        code = main(
            [
                "encode", "--registry", registry,
                "--conditions", "mandate_age", "--output-dir", str(tmp_path),
            ]
        )
        assert code == 2
        assert "reference-date" in capsys.readouterr().err


class TestMetrics:
    def test_rates_and_ranking(self, tmp_path):
        corpus = DepositCorpus(
            tuple(corpus_with_counts("liege", 1569, 2120, 4, 547))
            + tuple(corpus_with_counts("other", 30, 10, 5, 155))
        )
        corpus_file = write(tmp_path / "corpus.csv", serialize_corpus(corpus))
        out = tmp_path / "metrics"
        code = main(
            [
                "metrics", "--corpus", corpus_file, "--group-by", "institution",
                "--category", "ft", "--min-articles", "50", "--output-dir", str(out),
            ]
        )
        assert code == 0
        rates = {row[0]: row for row in read_csv(out / "deposit_rates.csv")[1:]}
        assert rates["liege"][2] == "87.0"
        assert rates["liege"][3] == "37.0"
        assert rates["liege"][4] == "50.0"
        ranking = read_csv(out / "ranking.csv")
        assert ranking[1][1] == "liege"

    def test_group_average_row(self, tmp_path):
        corpus = DepositCorpus(
            tuple(corpus_with_counts("big", 900, 0, 0, 100))
            + tuple(corpus_with_counts("small", 0, 0, 0, 10))
        )
        corpus_file = write(tmp_path / "corpus.csv", serialize_corpus(corpus))
        out = tmp_path / "avg"
        code = main(
            ["metrics", "--corpus", corpus_file, "--group-by", "institution",
             "--group-average", "--output-dir", str(out)]
        )
        assert code == 0
        rows = read_csv(out / "deposit_rates.csv")
        assert rows[-1][0] == "group_average"
        assert rows[-1][3] == "45.0"

    def test_json_full_precision(self, tmp_path):
        corpus = DepositCorpus(tuple(corpus_with_counts("inst", 1, 0, 0, 2)))
        corpus_file = write(tmp_path / "corpus.csv", serialize_corpus(corpus))
        out = tmp_path / "metrics-json"
        code = main(
            [
                "metrics", "--corpus", corpus_file, "--group-by", "institution",
                "--format", "json", "--output-dir", str(out),
            ]
        )
        assert code == 0
        payload = json.loads((out / "metrics.json").read_text())
        assert payload["deposit_rates"][0]["oa_rate"] == 1 / 3

    def test_mandated_grouping_without_registry_fails_cleanly(self, tmp_path):
        corpus = DepositCorpus(tuple(corpus_with_counts("inst", 1, 0, 0, 2)))
        corpus_file = write(tmp_path / "corpus.csv", serialize_corpus(corpus))
        code = main(
            ["metrics", "--corpus", corpus_file, "--group-by", "mandated",
             "--output-dir", str(tmp_path)]
        )
        assert code == 2


class TestAnalyze:
    def test_writes_all_artifacts(self, tmp_path, small_world):
        registry, corpus_file = small_world
        out = tmp_path / "analysis"
        code = main(
            [
                "analyze", "--registry", registry, "--corpus", corpus_file,
                "--reference-date", REFERENCE_DATE.isoformat(),
                "--output-dir", str(out),
            ]
        )
        assert code == 0
        for name in ("stage1.csv", "stage2.csv", "summary.csv", "report.json"):
            assert (out / name).exists()
        stage1 = read_csv(out / "stage1.csv")
        assert stage1[0] == ["family", "condition", "response", "r", "p", "n", "note"]
        assert {row[0] for row in stage1[1:]} == {"rates", "latency"}
        report = json.loads((out / "report.json").read_text())
        assert set(report["families"]) == {"rates", "latency"}

    def test_too_few_institutions_exits_three(self, tmp_path):
        snapshot = make_snapshot([make_policy(id="a"), make_policy(id="b")])
        corpus = DepositCorpus(
            tuple(corpus_with_counts("a", 30, 10, 5, 25))
            + tuple(corpus_with_counts("b", 30, 10, 5, 25))
        )
        registry = write(tmp_path / "registry.json", serialize_registry(snapshot))
        corpus_file = write(tmp_path / "corpus.csv", serialize_corpus(corpus))
        code = main(
            [
                "analyze", "--registry", registry, "--corpus", corpus_file,
                "--reference-date", REFERENCE_DATE.isoformat(),
                "--output-dir", str(tmp_path),
            ]
        )
        assert code == 3


class TestSimulate:
    def test_same_seed_twice_is_byte_identical(self, tmp_path):
        config = write(tmp_path / "sim.json", SIM_CONFIG)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert main(["simulate", "--config", config, "--seed", "7",
                     "--output-dir", str(out_a)]) == 0
        assert main(["simulate", "--config", config, "--seed", "7",
                     "--output-dir", str(out_b)]) == 0
        assert (out_a / "corpus.csv").read_bytes() == (out_b / "corpus.csv").read_bytes()

    def test_seed_is_required(self, tmp_path, capsys):
        config = write(tmp_path / "sim.json", SIM_CONFIG)
        with pytest.raises(SystemExit):
            main(["simulate", "--config", config, "--output-dir", str(tmp_path)])

    def test_output_is_reparseable(self, tmp_path):
        config = write(tmp_path / "sim.json", SIM_CONFIG)
        assert main(["simulate", "--config", config, "--seed", "3",
                     "--output-dir", str(tmp_path)]) == 0
        from oa_policy_lab.corpus import parse_corpus

        corpus = parse_corpus((tmp_path / "corpus.csv").read_text())
        assert len(corpus) == 120


class TestHarness:
    def test_inputs_never_mutated(self, tmp_path, small_world):
        registry, corpus_file = small_world
        before = (open(registry, "rb").read(), open(corpus_file, "rb").read())
        main(
            [
                "analyze", "--registry", registry, "--corpus", corpus_file,
                "--reference-date", REFERENCE_DATE.isoformat(),
                "--output-dir", str(tmp_path / "out"),
            ]
        )
        after = (open(registry, "rb").read(), open(corpus_file, "rb").read())
        assert before == after

    def test_output_dir_env_var(self, tmp_path, small_world, monkeypatch):
        registry, _ = small_world
        target = tmp_path / "from-env"
        monkeypatch.setenv("OAPL_OUTPUT_DIR", str(target))
        assert main(["summarize", "--registry", registry]) == 0
        assert (target / "regions.csv").exists()

    def test_identical_invocations_identical_bytes(self, tmp_path, small_world):
        registry, corpus_file = small_world
        outs = []
        for sub in ("x", "y"):
            out = tmp_path / sub
            main(
                [
                    "analyze", "--registry", registry, "--corpus", corpus_file,
                    "--reference-date", REFERENCE_DATE.isoformat(),
                    "--output-dir", str(out),
                ]
            )
            outs.append(out)
        for name in ("stage1.csv", "stage2.csv", "summary.csv", "report.json"):
            assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
