import os

import pytest

from hetlink.cli import main


@pytest.fixture(scope="module")
def trials_csv(tmp_path_factory):
    out = tmp_path_factory.mktemp("gen")
    config = out / "synth.cfg"
    config.write_text("n_trials=60\nn_adverse_events=10\nseed=4\n")
    code = main(["generate", "--config", str(config), "--seed", "4",
                 "--out", str(out)])
    assert code == 0
    return out / "trials.csv"


@pytest.fixture(scope="module")
def fast_config(tmp_path_factory):
    path = tmp_path_factory.mktemp("cfg") / "fast.cfg"
    path.write_text(
        "walks_per_node=2\nsg_epochs=2\nsage_epochs=4\n"
        "n_reference=15\nforest_estimators=5\nmlp_epochs=40\n"
        "logreg_epochs=80\nn_target_aes=2\n"
    )
    return str(path)


class TestGenerate:
    def test_writes_csv_and_config_echo(self, trials_csv):
        assert trials_csv.exists()
        assert (trials_csv.parent / "synthetic.cfg").exists()

    def test_seed_override_changes_data(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        main(["generate", "--seed", "1", "--out", str(a)])
        main(["generate", "--seed", "2", "--out", str(b)])
        assert (a / "trials.csv").read_bytes() != (b / "trials.csv").read_bytes()

    def test_same_seed_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        main(["generate", "--seed", "3", "--out", str(a)])
        main(["generate", "--seed", "3", "--out", str(b)])
        assert (a / "trials.csv").read_bytes() == (b / "trials.csv").read_bytes()

    def test_bad_config_exit_code_2(self, tmp_path):
        config = tmp_path / "bad.cfg"
        config.write_text("n_trials=-5\n")
        assert main(["generate", "--config", str(config),
                     "--out", str(tmp_path)]) == 2


class TestIngest:
    def test_summary(self, trials_csv, tmp_path):
        assert main(["ingest", "--csv", str(trials_csv),
                     "--out", str(tmp_path)]) == 0
        text = (tmp_path / "summary.tsv").read_text()
        assert "records\t60" in text

    def test_missing_file_exit_code_1(self, tmp_path):
        assert main(["ingest", "--csv", str(tmp_path / "nope.csv"),
                     "--out", str(tmp_path)]) == 1

    def test_malformed_csv_exit_code_1(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("NCT_id,Trial ID,Disease,MeSH Term,Drug,AE_x\nn,1,d,m,x,2.5\n")
        assert main(["ingest", "--csv", str(bad), "--out", str(tmp_path)]) == 1


class TestBuildGraph:
    def test_knowledge(self, trials_csv, tmp_path):
        assert main(["build-graph", "knowledge", "--csv", str(trials_csv),
                     "--out", str(tmp_path)]) == 0
        assert (tmp_path / "knowledge" / "nodes.tsv").exists()
        assert (tmp_path / "knowledge" / "edges.tsv").exists()

    def test_binodal(self, trials_csv, tmp_path):
        assert main(["build-graph", "binodal", "--csv", str(trials_csv),
                     "--out", str(tmp_path)]) == 0
        assert (tmp_path / "binodal" / "nodes.tsv").exists()

    def test_constituent(self, trials_csv, tmp_path):
        assert main(["build-graph", "constituent", "--csv", str(trials_csv),
                     "--out", str(tmp_path)]) == 0
        subdirs = os.listdir(tmp_path / "constituent")
        assert len(subdirs) == 60


class TestEmbedAndTrain:
    def test_embed(self, trials_csv, fast_config, tmp_path):
        assert main(["embed", "--csv", str(trials_csv), "--config", fast_config,
                     "--seed", "1", "--out", str(tmp_path)]) == 0
        assert (tmp_path / "embeddings.tsv").exists()
        assert (tmp_path / "corpus.txt").exists()

    def test_train_metapath(self, trials_csv, fast_config, tmp_path):
        assert main(["train", "metapath", "--csv", str(trials_csv),
                     "--config", fast_config, "--seed", "1",
                     "--out", str(tmp_path)]) == 0
        assert (tmp_path / "report_metapath_logreg_seed1.tsv").exists()
        assert (tmp_path / "roc_metapath_logreg_seed1.tsv").exists()

    def test_train_array_deterministic(self, trials_csv, fast_config, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert main(["train", "array", "--csv", str(trials_csv),
                         "--config", fast_config, "--seed", "2",
                         "--out", str(out)]) == 0
        name = "report_array_logreg_seed2.tsv"
        assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_train_unknown_config_key(self, trials_csv, tmp_path):
        config = tmp_path / "bad.cfg"
        config.write_text("walk_lenght=40\n")
        assert main(["train", "array", "--csv", str(trials_csv),
                     "--config", str(config), "--out", str(tmp_path)]) == 2


class TestEvaluateCompare:
    def test_evaluate(self, tmp_path):
        scores = tmp_path / "scores.tsv"
        scores.write_text("score\tlabel\n0.9\t1\n0.8\t1\n0.3\t0\n0.1\t0\n")
        assert main(["evaluate", "--scores", str(scores),
                     "--out", str(tmp_path)]) == 0
        assert "# auc=1.0" in (tmp_path / "roc.tsv").read_text()

    def test_compare(self, trials_csv, fast_config, tmp_path):
        for seed in ("1", "2"):
            assert main(["train", "array", "--csv", str(trials_csv),
                         "--config", fast_config, "--seed", seed,
                         "--out", str(tmp_path)]) == 0
        reports = [str(tmp_path / f"report_array_logreg_seed{s}.tsv")
                   for s in ("1", "2")]
        assert main(["compare", "--reports", *reports,
                     "--out", str(tmp_path)]) == 0
        text = (tmp_path / "comparison.tsv").read_text()
        assert text.startswith("method\tclassifier\trun_1\trun_2\tmean\tsd")
