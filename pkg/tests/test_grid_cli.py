import json

import pytest

from slumix import make_synthetic_corpus, save_corpus
from slumix.cli import main
from slumix.grid import (
    CrossLingualSpec,
    ExperimentManifest,
    load_manifest,
    manifest_from_dict,
    manifest_to_dict,
    read_rows_csv,
    run_grid,
)
from slumix.errors import ConfigError


@pytest.fixture(scope="module")
def syn_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "syn.jsonl"
    save_corpus(make_synthetic_corpus(300, seed=0), path)
    return path


def mini_manifest(syn_path, **overrides):
    base = dict(
        corpora={"syn": str(syn_path)},
        schemes=("text_only", "direct", "curriculum"),
        speech_levels=(0.1, 0.5),
        seeds=(1, 2),
        epochs=2,
        recipe={"profile": "desk"},
        sim={"substitution_rate": 0.15, "deletion_rate": 0.1},
    )
    base.update(overrides)
    return ExperimentManifest(**base)


class TestManifest:
    def test_json_roundtrip(self, syn_path):
        manifest = mini_manifest(syn_path)
        assert manifest_from_dict(manifest_to_dict(manifest)) == manifest

    def test_load_from_file(self, syn_path, tmp_path):
        manifest = mini_manifest(syn_path)
        path = tmp_path / "m.json"
        path.write_text(json.dumps(manifest_to_dict(manifest)))
        assert load_manifest(path) == manifest

    def test_validation(self, syn_path):
        with pytest.raises(ConfigError, match="scheme"):
            mini_manifest(syn_path, schemes=("sliding",))
        with pytest.raises(ConfigError, match="seed"):
            mini_manifest(syn_path, seeds=(1, 1))
        with pytest.raises(ConfigError, match="level"):
            mini_manifest(syn_path, speech_levels=(1.5,))
        with pytest.raises(ConfigError, match="unknown corpora"):
            mini_manifest(syn_path, crosslingual=CrossLingualSpec(
                source="syn", targets=("nope",), modes=("T",)))


class TestRunGrid:
    def test_cell_count_and_outputs(self, syn_path, tmp_path):
        outcome = run_grid(mini_manifest(syn_path), tmp_path / "runs")
        # text_only collapses to level 0: (1 + 2 + 2) x 2 seeds
        assert outcome.cells_run == 10
        assert outcome.ok
        cell_dirs = [d for d in (tmp_path / "runs").iterdir() if d.is_dir()]
        assert len(cell_dirs) == 10
        for d in cell_dirs:
            for name in ("plan.json", "model.json", "preds.jsonl",
                         "report.json", "meta.json"):
                assert (d / name).exists()

    def test_single_cell_grid(self, syn_path, tmp_path):
        manifest = mini_manifest(syn_path, schemes=("text_only",),
                                 speech_levels=(0.0,), seeds=(1,))
        outcome = run_grid(manifest, tmp_path / "runs")
        assert outcome.cells_run == 1
        assert len(list((tmp_path / "runs").glob("*/report.json"))) == 1

    def test_resume_skips_everything(self, syn_path, tmp_path):
        manifest = mini_manifest(syn_path)
        run_grid(manifest, tmp_path / "runs")
        again = run_grid(manifest, tmp_path / "runs")
        assert again.cells_run == 0
        assert again.cells_skipped == 10

    def test_changed_manifest_recomputes(self, syn_path, tmp_path):
        run_grid(mini_manifest(syn_path), tmp_path / "runs")
        changed = mini_manifest(syn_path, sim={"substitution_rate": 0.3,
                                               "deletion_rate": 0.1})
        outcome = run_grid(changed, tmp_path / "runs")
        assert outcome.cells_run == 10

    def test_two_dirs_byte_identical_csv(self, syn_path, tmp_path):
        manifest = mini_manifest(syn_path)
        run_grid(manifest, tmp_path / "a")
        run_grid(manifest, tmp_path / "b")
        assert (tmp_path / "a" / "aggregate.csv").read_bytes() == \
            (tmp_path / "b" / "aggregate.csv").read_bytes()

    def test_train_log_matches_plan_totals(self, syn_path, tmp_path):
        run_grid(mini_manifest(syn_path), tmp_path / "runs")
        for meta_path in (tmp_path / "runs").glob("*/meta.json"):
            meta = json.loads(meta_path.read_text())
            totals = meta["plan_totals"]
            assert [r["text_items"] for r in meta["train_log"]] == \
                totals["per_epoch_text"]
            assert [r["speech_items"] for r in meta["train_log"]] == \
                totals["per_epoch_speech"]

    def test_failed_cell_recorded_not_fatal(self, tmp_path, syn_path):
        # fewshot_pairs larger than any target pool makes every cell fail
        manifest = mini_manifest(syn_path, crosslingual=CrossLingualSpec(
            source="syn", targets=(), modes=("T",), fewshot_pairs=10))
        outcome = run_grid(manifest, tmp_path / "runs")
        assert not outcome.ok
        assert outcome.cells_run == 0


@pytest.fixture(scope="module")
def xl_setup(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("xl")
    for lang, seed in (("fr", 0), ("de", 1), ("ko", 2)):
        save_corpus(make_synthetic_corpus(160, seed=seed, lang=lang,
                                          name=f"c-{lang}"),
                    tmp / f"{lang}.jsonl")
    manifest = ExperimentManifest(
        corpora={"fr": str(tmp / "fr.jsonl"), "de": str(tmp / "de.jsonl"),
                 "ko": str(tmp / "ko.jsonl")},
        schemes=("text_only", "curriculum"),
        speech_levels=(0.1,),
        seeds=(1,),
        epochs=2,
        recipe={"profile": "desk"},
        sim={"substitution_rate": 0.1, "deletion_rate": 0.1},
        crosslingual=CrossLingualSpec(source="fr", targets=("de", "ko"),
                                      modes=("zero_shot", "T", "T_S"),
                                      fewshot_pairs=8),
    )
    outcome = run_grid(manifest, tmp / "runs")
    return tmp, outcome


class TestCrossLingualGrid:
    def test_cells_and_rows(self, xl_setup):
        tmp, outcome = xl_setup
        assert outcome.ok
        # 3 modes x (level 0 + level 0.1) x 1 seed
        assert outcome.cells_run == 6
        rows = read_rows_csv(tmp / "runs" / "aggregate.csv")
        langs = {r["target_lang"] for r in rows}
        assert langs == {"de", "ko"}

    def test_zero_shot_cells_use_source_scheme_rule(self, xl_setup):
        tmp, _ = xl_setup
        metas = [json.loads(p.read_text())
                 for p in (tmp / "runs").glob("xl__zero_shot*/meta.json")]
        by_level = {m["speech_level"]: m["scheme"] for m in metas}
        assert by_level == {0.0: "text_only", 0.1: "curriculum"}


class TestCli:
    def test_full_pipeline(self, tmp_path, capsys):
        d = tmp_path
        assert main(["synth", "--n", "200", "--seed", "3",
                     "--out", str(d / "c.jsonl")]) == 0
        assert main(["plan", "--scheme", "curriculum", "--p", "0.25",
                     "--epochs", "2", "--seed", "5", "--corpus", str(d / "c.jsonl"),
                     "--out", str(d / "plan.json")]) == 0
        assert main(["train", "--plan", str(d / "plan.json"),
                     "--corpus", str(d / "c.jsonl"),
                     "--out", str(d / "model.json")]) == 0
        assert main(["predict", "--model", str(d / "model.json"),
                     "--corpus", str(d / "c.jsonl"), "--split", "test",
                     "--out", str(d / "preds.jsonl")]) == 0
        assert main(["--json", "evaluate", "--gold", str(d / "c.jsonl"),
                     "--pred", str(d / "preds.jsonl"),
                     "--out", str(d / "report.json")]) == 0
        logged = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert logged["event"] == "evaluated"
        report = json.loads((d / "report.json").read_text())
        assert 0.0 <= report["slu_f1"] <= 1.0
        assert main(["export-manifest", "--plan", str(d / "plan.json"),
                     "--corpus-ref", str(d / "c.jsonl"),
                     "--out", str(d / "manifest.json")]) == 0
        manifest = json.loads((d / "manifest.json").read_text())
        assert len(manifest["lr_phases"]) == 2

    def test_ingest_profiles(self, tmp_path):
        src = tmp_path / "slurp.jsonl"
        src.write_text(json.dumps({
            "slurp_id": 1, "sentence": "wake me at seven am",
            "sentence_annotation": "wake me at [time : seven am]",
            "scenario": "alarm", "action": "set", "partition": "train",
            "entities": [{"type": "time", "filler": "seven am"}],
            "recordings": [{"file": "a.flac"}, {"file": "b.flac"}],
        }) + "\n")
        out = tmp_path / "canon.jsonl"
        assert main(["ingest", "--in", str(src), "--profile", "slurp",
                     "--out", str(out)]) == 0
        assert len(out.read_text().splitlines()) == 3

    def test_grid_command_and_resume(self, syn_path, tmp_path, capsys):
        manifest_path = tmp_path / "m.json"
        manifest_path.write_text(json.dumps(manifest_to_dict(
            mini_manifest(syn_path, seeds=(1,), speech_levels=(0.1,)))))
        out = tmp_path / "runs"
        assert main(["grid", "--config", str(manifest_path),
                     "--out", str(out)]) == 0
        assert (out / "aggregate.csv").exists()
        assert main(["--json", "grid", "--config", str(manifest_path),
                     "--out", str(out)]) == 0
        logged = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert logged["cells_run"] == 0

    def test_aggregate_and_report_commands(self, syn_path, tmp_path):
        out = tmp_path / "runs"
        run_grid(mini_manifest(syn_path, seeds=(1, 2), speech_levels=(0.1,)),
                 out)
        assert main(["aggregate", "--runs", str(out),
                     "--out", str(tmp_path / "agg.csv")]) == 0
        assert (tmp_path / "agg.csv").read_bytes() == \
            (out / "aggregate.csv").read_bytes()
        assert main(["report", "--agg", str(tmp_path / "agg.csv"),
                     "--style", "monolingual",
                     "--out-prefix", str(tmp_path / "table")]) == 0
        assert (tmp_path / "table.md").exists()
        assert (tmp_path / "table.csv").exists()

    def test_empty_predictions_exit_1(self, syn_path, tmp_path, capsys):
        empty = tmp_path / "empty.jsonl"
        empty.write_text("")
        code = main(["evaluate", "--gold", str(syn_path), "--pred", str(empty),
                     "--out", str(tmp_path / "r.json")])
        assert code == 1
        assert "empty record list" in capsys.readouterr().err

    def test_data_error_exit_1(self, tmp_path, capsys):
        missing = tmp_path / "nope.jsonl"
        code = main(["plan", "--scheme", "direct", "--p", "0.1", "--seed", "1",
                     "--corpus", str(missing), "--out", str(tmp_path / "p.json")])
        assert code == 1

    def test_usage_errors_exit_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2
        with pytest.raises(SystemExit) as exc:
            main(["ingest", "--in", "x"])  # missing required args
        assert exc.value.code == 2
