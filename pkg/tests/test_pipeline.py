import dataclasses

import numpy as np
import pytest

from hetlink import ingest, pipeline
from hetlink.errors import ConfigError, DataError
from hetlink.pipeline import (
    PipelineConfig,
    RunReport,
    assert_no_leakage,
    compare_report,
    one_hot_edge_features,
    run_array_pipeline,
    run_kernel_pipeline,
    run_metapath_pipeline,
    split_edges,
    target_adverse_events,
)


# small profile so module tests stay fast; the full desk profile is
# exercised by the acceptance suite
SMALL = dataclasses.replace(
    PipelineConfig(),
    n_trials=120, n_adverse_events=12, walks_per_node=3, sg_epochs=5,
    sage_epochs=6, n_reference=20, forest_estimators=10, mlp_epochs=60,
    logreg_epochs=120, n_target_aes=2,
)


@pytest.fixture(scope="module")
def small_world():
    records = ingest.generate_synthetic(SMALL.synthetic())
    graph = ingest.build_knowledge_graph(
        records, ingest.condition_split(records), ingest.drug_split(records)
    )
    return records, graph


class TestSplitEdges:
    def test_fraction_arithmetic(self, small_world):
        _, graph = small_world
        n_expresses = graph.count_by_label()[1][ingest.EXPRESSES]
        split = split_edges(graph, seed=3)
        assert len(split.test_pos) == round(0.10 * n_expresses)
        assert len(split.train_pos) == round(0.40 * n_expresses)
        assert len(split.test_neg) == len(split.test_pos)
        assert len(split.train_neg) == len(split.train_pos)

    def test_hundred_edge_example(self):
        # 100 Expresses edges -> 10/10 test, 40/40 train
        records = []
        rng = np.random.default_rng(0)
        n_trials, n_aes = 20, 10
        fracs = np.zeros((n_trials, n_aes))
        flat = rng.choice(n_trials * n_aes, size=100, replace=False)
        fracs[np.unravel_index(flat, fracs.shape)] = 0.5
        for t in range(n_trials):
            records.append(ingest.TrialRecord(
                nct_id=f"N{t}", trial_id=str(t), diseases=("a b",),
                mesh_terms=(), drugs=("c d",),
                adverse_events={f"AE_{a}": fracs[t, a] for a in range(n_aes)},
            ))
        graph = ingest.build_knowledge_graph(
            records, ingest.condition_split(records), ingest.drug_split(records)
        )
        split = split_edges(graph, seed=1)
        assert (len(split.test_pos), len(split.test_neg)) == (10, 10)
        assert (len(split.train_pos), len(split.train_neg)) == (40, 40)
        assert split.residual_graph.n_edges == graph.n_edges - 50

    def test_negatives_are_non_edges(self, small_world):
        _, graph = small_world
        split = split_edges(graph, seed=5)
        for u, v in split.train_neg + split.test_neg:
            assert not graph.has_edge(u, v)

    def test_deterministic(self, small_world):
        _, graph = small_world
        a = split_edges(graph, seed=9)
        b = split_edges(graph, seed=9)
        assert a.test_pos == b.test_pos
        assert a.train_neg == b.train_neg

    def test_no_leakage_instrumentation(self, small_world):
        _, graph = small_world
        split = split_edges(graph, seed=11)
        assert_no_leakage(split)
        split.train_pos[0] = split.test_pos[0]
        with pytest.raises(AssertionError):
            assert_no_leakage(split)

    def test_too_few_edges_rejected(self):
        records = [ingest.TrialRecord(
            nct_id="N0", trial_id="0", diseases=("x y",), mesh_terms=(),
            drugs=("z w",), adverse_events={"AE_a": 0.5, "AE_b": 0.0},
        )]
        graph = ingest.build_knowledge_graph(
            records, ingest.condition_split(records), ingest.drug_split(records)
        )
        with pytest.raises(DataError):
            split_edges(graph, seed=0)


class TestArrayFeatures:
    def test_one_hot_block(self):
        # categories [a, b, c]; value b -> block [0, 1, 0]
        records = [
            ingest.TrialRecord(
                nct_id=f"N{i}", trial_id=str(i), diseases=(d,), mesh_terms=(),
                drugs=("drug oral",),
                adverse_events={f"AE_{a}": (0.5 if (i + a) % 3 else 0.0)
                                for a in range(12)},
            )
            for i, d in enumerate(["a q", "b q", "c q"] * 8)
        ]
        graph = ingest.build_knowledge_graph(
            records, ingest.condition_split(records), ingest.drug_split(records)
        )
        split = split_edges(graph, seed=1)
        train, test = one_hot_edge_features(records, split)
        cond = ingest.condition_split(records)
        # only "q" recurs across the three distinct entries, so the
        # keyword block is ["q"] and specifics sort "a q" < "b q" < "c q"
        assert sorted(cond.keywords) == ["q"]
        n_kw = len(cond.keywords)
        by_name = {rec.nct_id: i for i, rec in enumerate(records)}
        for (u, _), row in zip(train.ids, train.features):
            rec = records[by_name[split.source_graph.node_name(u)]]
            spec_block = row[n_kw:n_kw + 3]
            expected = {"a q": [1, 0, 0], "b q": [0, 1, 0], "c q": [0, 0, 1]}
            assert list(spec_block) == expected[rec.diseases[0].lower()]

    def test_feature_dim_constant(self, small_world):
        records, graph = small_world
        split = split_edges(graph, seed=2)
        train, test = one_hot_edge_features(records, split)
        assert train.features.shape[1] == test.features.shape[1]

    def test_multi_condition_trial_is_multi_hot(self, small_world):
        records, graph = small_world
        split = split_edges(graph, seed=2)
        cond = ingest.condition_split(records)
        drug = ingest.drug_split(records)
        trial_dim = (len(cond.keywords) + len(cond.specifics)
                     + len(drug.keywords) + len(drug.specifics))
        train, _ = one_hot_edge_features(records, split)
        sums = train.features[:, :trial_dim].sum(axis=1)
        assert sums.max() > 3  # several active vocabulary entries


class TestPipelines:
    def test_metapath_beats_chance(self, small_world):
        # the full-strength version of this claim (mean AUC > 0.75 at
        # desk scale) lives in the acceptance suite; this small profile
        # only checks the pipeline extracts real signal
        records, graph = small_world
        aucs = []
        for seed in (1, 2):
            split = split_edges(graph, seed=seed)
            report = run_metapath_pipeline(graph, split, SMALL, "logreg", seed)
            assert report.method == "metapath"
            aucs.append(report.auc)
        assert np.mean(aucs) > 0.58

    def test_shuffled_labels_near_half(self, small_world):
        records, graph = small_world
        rng = np.random.default_rng(0)
        aucs = []
        for seed in (1, 2, 3):
            split = split_edges(graph, seed=seed)
            train, test = pipeline.metapath_edge_datasets(graph, split, SMALL, seed)
            shuffled = test.labels.copy()
            rng.shuffle(shuffled)
            from hetlink import learn
            model = learn.train_logreg(train, epochs=100)
            aucs.append(learn.roc_auc(model.predict_proba(test.features),
                                      shuffled).auc)
        assert 0.43 <= np.mean(aucs) <= 0.57

    def test_same_seed_identical_report(self, small_world):
        records, graph = small_world
        split = split_edges(graph, seed=4)
        a = run_metapath_pipeline(graph, split, SMALL, "logreg", 4)
        b = run_metapath_pipeline(graph, split, SMALL, "logreg", 4)
        assert a.auc == b.auc

    def test_array_pipeline_runs_all_classifiers(self, small_world):
        records, graph = small_world
        split = split_edges(graph, seed=6)
        datasets = one_hot_edge_features(records, split)
        for classifier in ("logreg", "forest"):
            report = run_array_pipeline(records, split, SMALL, classifier, 6,
                                        datasets=datasets)
            assert 0.0 <= report.auc <= 1.0

    def test_unknown_classifier_rejected(self, small_world):
        records, graph = small_world
        split = split_edges(graph, seed=6)
        with pytest.raises(ConfigError):
            run_array_pipeline(records, split, SMALL, "perceptron", 6)


class TestKernelPipeline:
    def test_reference_set_too_large_rejected(self, small_world):
        records, graph = small_world
        constituent = ingest.build_constituent_graphs(graph, records)
        big = dataclasses.replace(SMALL, n_reference=len(constituent))
        target = target_adverse_events(records, 1)[0]
        with pytest.raises(DataError, match="reference"):
            run_kernel_pipeline(constituent, target, big, 1)

    def test_absent_target_rejected(self, small_world):
        records, graph = small_world
        constituent = ingest.build_constituent_graphs(graph, records)
        with pytest.raises(DataError, match="absent"):
            run_kernel_pipeline(constituent, "AE_nonexistent", SMALL, 1)

    def test_too_few_graphs_rejected(self, small_world):
        records, graph = small_world
        constituent = ingest.build_constituent_graphs(graph, records)[:60]
        target = target_adverse_events(records, 1)[0]
        with pytest.raises(DataError, match="100"):
            run_kernel_pipeline(constituent, target, SMALL, 1)

    def test_kernel_auc_feeds_kde(self, small_world):
        records, graph = small_world
        constituent = ingest.build_constituent_graphs(graph, records)
        targets = target_adverse_events(records, 2)
        aucs = [run_kernel_pipeline(constituent, t, SMALL, 1).auc
                for t in targets]
        from hetlink import learn
        grid = np.linspace(0, 1, 101)
        density = learn.kde(aucs, grid=grid)
        assert density.shape == grid.shape
        assert np.all(density >= 0)


class TestRunReportIO:
    def test_round_trip(self, tmp_path):
        report = RunReport(method="metapath", classifier="logreg", seed=3,
                           auc=0.8125, roc_path="roc.tsv",
                           wall_time=1.23, config_echo={"dim": "64"})
        path = tmp_path / "report.tsv"
        report.save(path)
        loaded = RunReport.load(path)
        assert loaded.method == "metapath"
        assert loaded.auc == 0.8125
        assert loaded.config_echo["dim"] == "64"
        # wall time never serialized: reruns must be byte-identical
        assert "1.23" not in path.read_text()

    def test_rerun_byte_identical(self, tmp_path):
        kwargs = dict(method="array", classifier="svm", seed=1, auc=0.7,
                      config_echo={"C": "1.0"})
        a, b = tmp_path / "a.tsv", tmp_path / "b.tsv"
        RunReport(wall_time=0.5, **kwargs).save(a)
        RunReport(wall_time=9.9, **kwargs).save(b)
        assert a.read_bytes() == b.read_bytes()


class TestCompareReport:
    @staticmethod
    def reports(aucs, method="metapath", classifier="logreg"):
        return [RunReport(method=method, classifier=classifier, seed=i, auc=a)
                for i, a in enumerate(aucs, start=1)]

    def test_constant_runs(self):
        table = compare_report(self.reports([0.8, 0.8, 0.8]))
        row = table.rows[0]
        assert row["mean"] == pytest.approx(0.8)
        assert row["sd"] == pytest.approx(0.0)

    def test_published_row_arithmetic(self, tmp_path):
        # {0.857, 0.857, 0.848} -> mean 0.854, S.D. 0.005 at 3 decimals
        table = compare_report(self.reports([0.857, 0.857, 0.848]))
        path = tmp_path / "cmp.tsv"
        table.save(path)
        line = path.read_text().splitlines()[1]
        assert line.split("\t")[2:] == ["0.857", "0.857", "0.848", "0.854", "0.005"]

    def test_single_run_empty_sd(self, tmp_path):
        table = compare_report(self.reports([0.7]))
        path = tmp_path / "cmp.tsv"
        table.save(path)
        line = path.read_text().splitlines()[1]
        assert line.split("\t")[-1] == ""

    def test_empty_rejected(self):
        with pytest.raises(DataError):
            compare_report([])
