"""End-to-end experiment orchestration.

One :class:`EdgeSplit` drives every method so comparisons are paired:
10% of the target-label edges become test positives (matched with an
equal number of sampled non-edges), a further 40% become training
positives (again matched 1:1), and the residual graph used for walk
corpora excludes both removed sets, so no embedding ever sees a
labelled pair. Each pipeline re-asserts the leakage conditions at run
time rather than trusting construction.

Four pipelines produce :class:`RunReport` rows: metapath embeddings,
the relational GNN, graph kernels over per-trial constituent graphs,
and the one-hot array baseline. ``compare_report`` aggregates them into
the Run/Mean/S.D. table; ``reproduce`` runs the whole desk-scale
comparison on synthetic data.

Wall-clock time is tracked on the report object but deliberately kept
out of the TSV dumps, which must be byte-identical across reruns with
one seed.
"""

from __future__ import annotations

import dataclasses
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import ingest, kernels, learn, sage, skipgram, walks
from .errors import ConfigError, DataError
from .hetgraph import HeteroGraph
from .kvconfig import coerce_dataclass, read_kv


# -- configuration ---------------------------------------------------------

@dataclass(frozen=True)
class PipelineConfig:
    """Desk-scale experiment profile.

    The embedding modules default to the published scale (dimension
    512, walk length 200); this profile swaps in desk-scale values so
    the full comparison finishes in minutes on a laptop. Override any
    key via a flat key=value file.
    """

    # synthetic data
    n_trials: int = 300
    n_conditions: int = 40
    n_drugs: int = 30
    n_adverse_events: int = 20
    latent_dim: int = 8
    noise: float = 0.4
    data_seed: int = 1
    # edge split
    test_frac: float = 0.10
    train_frac: float = 0.40
    # walks + skip-gram
    walk_length: int = 40
    walks_per_node: int = 5
    return_param: float = 1.0
    in_out_param: float = 1.0
    dim: int = 64
    window: int = 3
    negatives: int = 5
    sg_epochs: int = 8
    sg_learning_rate: float = 0.025
    noise_exponent: float = 0.75
    edge_op: str = "hadamard"
    # relational GNN
    sage_dim: int = 32
    sage_fanout1: int = 8
    sage_fanout2: int = 4
    sage_dropout: float = 0.1
    sage_batch: int = 64
    sage_learning_rate: float = 0.003
    sage_epochs: int = 20
    # kernels
    kernel_kind: str = "propagation"
    kernel_sigma: float = 1.0
    kernel_iterations: int = 3
    kernel_bin_width: float = 1e-5
    n_reference: int = 50
    kernel_test_frac: float = 0.2
    n_target_aes: int = 5
    svm_c: float = 1.0
    # classifiers
    logreg_l2: float = 1e-4
    logreg_epochs: int = 300
    logreg_learning_rate: float = 0.1
    tree_depth: int = 8
    forest_estimators: int = 50
    forest_depth: int = 8
    mlp_hidden: int = 32
    mlp_epochs: int = 300
    mlp_learning_rate: float = 0.01

    def synthetic(self) -> ingest.SyntheticConfig:
        return ingest.SyntheticConfig(
            n_trials=self.n_trials, n_conditions=self.n_conditions,
            n_drugs=self.n_drugs, n_adverse_events=self.n_adverse_events,
            latent_dim=self.latent_dim, noise=self.noise, seed=self.data_seed,
        )

    def walk_config(self, seed: int) -> walks.WalkConfig:
        return walks.WalkConfig(walk_length=self.walk_length,
                                walks_per_node=self.walks_per_node,
                                p=self.return_param, q=self.in_out_param,
                                seed=seed)

    def skipgram_config(self, seed: int) -> skipgram.SkipGramConfig:
        return skipgram.SkipGramConfig(
            window=self.window, negatives_per_positive=self.negatives,
            epochs=self.sg_epochs, learning_rate=self.sg_learning_rate,
            dim=self.dim, seed=seed, noise_exponent=self.noise_exponent,
        )

    def sage_config(self, seed: int) -> sage.SageTrainConfig:
        return sage.SageTrainConfig(
            layer_dims=(self.sage_dim, self.sage_dim),
            fanouts=(self.sage_fanout1, self.sage_fanout2),
            dropout=self.sage_dropout, batch_size=self.sage_batch,
            learning_rate=self.sage_learning_rate, seed=seed,
        )

    def kernel_config(self, seed: int) -> kernels.KernelConfig:
        return kernels.KernelConfig(
            kind=self.kernel_kind, rbf_sigma=self.kernel_sigma,
            iterations=self.kernel_iterations,
            bin_width=self.kernel_bin_width, seed=seed,
        )


def load_pipeline_config(path: str | None) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    return coerce_dataclass(PipelineConfig, read_kv(path))


CLASSIFIERS = ("logreg", "tree", "forest", "svm", "mlp")


def _train_classifier(name: str, train: learn.Dataset, config: PipelineConfig,
                      seed: int):
    if name == "logreg":
        return learn.train_logreg(train, l2=config.logreg_l2,
                                  epochs=config.logreg_epochs,
                                  lr=config.logreg_learning_rate, seed=seed)
    if name == "tree":
        return learn.train_tree(train, max_depth=config.tree_depth)
    if name == "forest":
        return learn.train_forest(train, n_estimators=config.forest_estimators,
                                  max_depth=config.forest_depth, seed=seed)
    if name == "svm":
        return learn.train_svm(train, C=config.svm_c, kernel="rbf")
    if name == "mlp":
        return learn.train_mlp(train, hidden_dim=config.mlp_hidden,
                               epochs=config.mlp_epochs,
                               lr=config.mlp_learning_rate, seed=seed)
    raise ConfigError(f"unknown classifier {name!r}; choose from {CLASSIFIERS}")


def _score(model, features) -> np.ndarray:
    if hasattr(model, "predict_proba"):
        return np.asarray(model.predict_proba(features))
    return np.asarray(model.decision(features))


# -- edge split ------------------------------------------------------------


@dataclass
class EdgeSplit:
    train_pos: list[tuple[int, int]]
    train_neg: list[tuple[int, int]]
    test_pos: list[tuple[int, int]]
    test_neg: list[tuple[int, int]]
    residual_graph: HeteroGraph
    edge_label: str
    source_graph: HeteroGraph
    seed: int

    def all_pairs(self):
        return (self.train_pos + self.train_neg
                + self.test_pos + self.test_neg)


def split_edges(graph: HeteroGraph, edge_label: str = ingest.EXPRESSES,
                test_frac: float = 0.10, train_frac: float = 0.40,
                seed: int = 0) -> EdgeSplit:
    """Remove test/train positives and sample matched negative non-edges.

    Deterministic given the seed. Negatives are uniform over endpoint
    label pairs, rejected when they hit an existing edge or an earlier
    draw.
    """
    labelled = [(e, (u, v)) for e, (u, v, lab, _) in enumerate(graph.edges())
                if lab == edge_label]
    if len(labelled) < 10:
        raise DataError(f"need at least 10 {edge_label!r} edges to split")
    n_edges = len(labelled)
    n_test = round(test_frac * n_edges)
    n_train = round(train_frac * n_edges)
    if n_test < 1 or n_train < 1:
        raise DataError("split fractions leave an empty test or train set")

    rng = np.random.default_rng(seed)
    perm = rng.permutation(n_edges)
    test_idx = [labelled[i][0] for i in perm[:n_test]]
    train_idx = [labelled[i][0] for i in perm[n_test:n_test + n_train]]
    test_pos = [labelled[i][1] for i in perm[:n_test]]
    train_pos = [labelled[i][1] for i in perm[n_test:n_test + n_train]]

    side_u = sorted({graph.node_label(u) for _, (u, _) in labelled})
    side_v = sorted({graph.node_label(v) for _, (_, v) in labelled})
    if len(side_u) != 1 or len(side_v) != 1:
        raise DataError(f"{edge_label!r} edges mix endpoint labels")
    candidates_u = np.asarray(graph.nodes_with_label(side_u[0]))
    candidates_v = np.asarray(graph.nodes_with_label(side_v[0]))

    chosen: set[tuple[int, int]] = set()
    negatives: list[tuple[int, int]] = []
    needed = n_test + n_train
    attempts = 0
    while len(negatives) < needed:
        attempts += 1
        if attempts > 200 * needed:
            raise DataError("not enough non-edges to sample negatives")
        u = int(candidates_u[rng.integers(candidates_u.size)])
        v = int(candidates_v[rng.integers(candidates_v.size)])
        if graph.has_edge(u, v) or (u, v) in chosen:
            continue
        chosen.add((u, v))
        negatives.append((u, v))
    test_neg = negatives[:n_test]
    train_neg = negatives[n_test:]

    residual = graph.without_edges(test_idx + train_idx)
    return EdgeSplit(train_pos=train_pos, train_neg=train_neg,
                     test_pos=test_pos, test_neg=test_neg,
                     residual_graph=residual, edge_label=edge_label,
                     source_graph=graph, seed=seed)


def assert_no_leakage(split: EdgeSplit) -> None:
    """Instrumented invariants: disjoint sets, clean residual, true negatives."""
    train_pos, test_pos = set(split.train_pos), set(split.test_pos)
    train_neg, test_neg = set(split.train_neg), set(split.test_neg)
    groups = [train_pos, train_neg, test_pos, test_neg]
    for i, a in enumerate(groups):
        for b in groups[i + 1:]:
            if a & b:
                raise AssertionError("split sets overlap")
    for u, v in train_pos | test_pos:
        if split.residual_graph.has_edge(u, v):
            raise AssertionError("residual graph still contains a removed edge")
    for u, v in train_neg | test_neg:
        if split.source_graph.has_edge(u, v):
            raise AssertionError("a sampled negative is an edge in the source graph")


# -- run reports ----------------------------------------------------------------


@dataclass
class RunReport:
    method: str
    classifier: str
    seed: int
    auc: float
    roc_path: str | None = None
    wall_time: float | None = None  # never serialized; see module docstring
    config_echo: dict = field(default_factory=dict)

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("key\tvalue\n")
            fh.write(f"method\t{self.method}\n")
            fh.write(f"classifier\t{self.classifier}\n")
            fh.write(f"seed\t{self.seed}\n")
            fh.write(f"auc\t{self.auc!r}\n")
            fh.write(f"roc\t{self.roc_path or ''}\n")
            for key in sorted(self.config_echo):
                fh.write(f"config.{key}\t{self.config_echo[key]}\n")

    @staticmethod
    def load(path: str) -> "RunReport":
        fields: dict[str, str] = {}
        echo: dict[str, str] = {}
        with open(path, encoding="utf-8") as fh:
            header = fh.readline()
            if header.rstrip("\n") != "key\tvalue":
                raise DataError(f"{path}: not a run report")
            for line in fh:
                key, _, value = line.rstrip("\n").partition("\t")
                if key.startswith("config."):
                    echo[key[len("config."):]] = value
                else:
                    fields[key] = value
        return RunReport(method=fields["method"], classifier=fields["classifier"],
                         seed=int(fields["seed"]), auc=float(fields["auc"]),
                         roc_path=fields.get("roc") or None, config_echo=echo)


def _echo(config: PipelineConfig, **extra) -> dict:
    out = {key: str(value) for key, value in dataclasses.asdict(config).items()}
    out.update({key: str(value) for key, value in extra.items()})
    return out


# -- metapath pipeline -------------------------------------------------------------


def metapath_edge_datasets(graph: HeteroGraph, split: EdgeSplit,
                           config: PipelineConfig, seed: int,
                           metapaths=None):
    """Corpus on the residual graph -> embeddings -> edge feature sets."""
    assert_no_leakage(split)
    if metapaths is None:
        metapaths = walks.DEFAULT_METAPATHS
    corpus = walks.generate_corpus(split.residual_graph, metapaths,
                                   config.walk_config(seed))
    table = skipgram.train_embeddings(corpus, config.skipgram_config(seed))

    def dataset(pos, neg):
        pairs = list(pos) + list(neg)
        features = np.stack([
            skipgram.embed_edge(u, v, config.edge_op, table) for u, v in pairs
        ])
        labels = np.array([1] * len(pos) + [0] * len(neg))
        return learn.Dataset(features=features, labels=labels, ids=pairs)

    return (dataset(split.train_pos, split.train_neg),
            dataset(split.test_pos, split.test_neg))


def run_metapath_pipeline(graph: HeteroGraph, split: EdgeSplit,
                          config: PipelineConfig, classifier: str,
                          seed: int, metapaths=None, datasets=None,
                          roc_path: str | None = None) -> RunReport:
    """Walk corpus -> skip-gram -> edge features -> classifier -> AUC.

    ``datasets`` lets callers reuse one embedding run across several
    classifiers; it must come from :func:`metapath_edge_datasets` with
    the same arguments.
    """
    started = time.perf_counter()
    if datasets is None:
        datasets = metapath_edge_datasets(graph, split, config, seed, metapaths)
    train, test = datasets
    model = _train_classifier(classifier, train, config, seed)
    summary = learn.roc_auc(_score(model, test.features), test.labels)
    if roc_path:
        summary.save(roc_path)
        roc_path = os.path.basename(roc_path)  # reports sit beside their curves
    return RunReport(method="metapath", classifier=classifier, seed=seed,
                     auc=summary.auc, roc_path=roc_path,
                     wall_time=time.perf_counter() - started,
                     config_echo=_echo(config))


# -- relational GNN pipeline ----------------------------------------------------


def _pair_map(graph: HeteroGraph, binodal: HeteroGraph):
    """Map knowledge-graph node ids to bi-nodal ids via (label, name)."""
    by_name = {(binodal.node_label(v), binodal.node_name(v)): v
               for v in range(binodal.n_nodes)}

    def translate(pair):
        u, v = pair
        return (by_name[(graph.node_label(u), graph.node_name(u))],
                by_name[(graph.node_label(v), graph.node_name(v))])

    return translate


def run_hinsage_pipeline(binodal: HeteroGraph, split: EdgeSplit,
                         config: PipelineConfig, seed: int,
                         roc_path: str | None = None) -> RunReport:
    """Train the GNN link head on all non-test pair weights, score test pairs.

    The test pairs (both the removed positives and the matched
    negatives) are deleted from the bi-nodal graph outright, so they are
    absent from aggregation structure and training labels alike.
    """
    started = time.perf_counter()
    assert_no_leakage(split)
    translate = _pair_map(split.source_graph, binodal)
    test_pairs = [translate(p) for p in split.test_pos + split.test_neg]
    test_set = set(test_pairs)

    drop = [e for e, (u, v, _, _) in enumerate(binodal.edges())
            if (u, v) in test_set or (v, u) in test_set]
    residual = binodal.without_edges(drop)
    train_edges = [(u, v, w) for u, v, _, w in residual.edges()]
    for u, v, _ in train_edges:
        if (u, v) in test_set or (v, u) in test_set:
            raise AssertionError("a test pair leaked into GNN training")

    params = sage.train_hinsage(residual, train_edges,
                                epochs=config.sage_epochs,
                                config=config.sage_config(seed))
    scores = sage.hinsage_scores(residual, params, test_pairs)
    labels = np.array([1] * len(split.test_pos) + [0] * len(split.test_neg))
    summary = learn.roc_auc(scores, labels)
    if roc_path:
        summary.save(roc_path)
        roc_path = os.path.basename(roc_path)  # reports sit beside their curves
    return RunReport(method="hinsage", classifier="gnn", seed=seed,
                     auc=summary.auc, roc_path=roc_path,
                     wall_time=time.perf_counter() - started,
                     config_echo=_echo(config))


# -- kernel pipeline ---------------------------------------------------------------


def target_adverse_events(records, count: int) -> list[str]:
    """The ``count`` AEs with incidence closest to 1/2 (most balanced
    labels), ties broken by name."""
    names = sorted(records[0].adverse_events)
    incidence = {
        name: np.mean([rec.adverse_events[name] > 0 for rec in records])
        for name in names
    }
    ranked = sorted(names, key=lambda n: (abs(incidence[n] - 0.5), n))
    return ranked[:count]


def entity_labelled(graph: HeteroGraph) -> HeteroGraph:
    """Copy with entity-level node labels for label-aware kernels.

    Non-trial nodes take "<type>:<name>" labels so kernels can see
    which conditions, drugs, and adverse events two trial graphs share;
    the six coarse type labels alone make all specifics look alike.
    Trial nodes keep their type label (their names are unique, which
    would only add a constant self-similarity term).
    """
    out = HeteroGraph()
    for v in range(graph.n_nodes):
        label, name = graph.node_label(v), graph.node_name(v)
        out.add_node(label if label == ingest.TRIAL else f"{label}:{name}",
                     graph.node_attrs(v), name)
    for u, v, label, w in graph.edges():
        out.add_edge(u, v, label, w)
    return out.freeze()


def run_kernel_pipeline(constituent, target_ae: str, config: PipelineConfig,
                        seed: int, roc_path: str | None = None) -> RunReport:
    """Gram rows against a held-out reference set feed an SVM.

    The target AE's node is removed from every constituent graph before
    any kernel evaluation; its presence is exactly the label being
    predicted.
    """
    started = time.perf_counter()
    constituent = list(constituent)
    if len(constituent) < 100:
        raise DataError("kernel pipeline needs at least 100 constituent graphs")
    if config.n_reference >= len(constituent):
        raise DataError("reference set larger than the available graphs")

    labels_by_id = {}
    stripped = []
    found = False
    for nct_id, graph in constituent:
        keep = []
        expressed = False
        for v in range(graph.n_nodes):
            is_target = (graph.node_label(v) == ingest.ADVERSE_EVENT
                         and graph.node_name(v) == target_ae)
            if is_target:
                expressed = True
                found = True
            else:
                keep.append(v)
        labels_by_id[nct_id] = int(expressed)
        stripped.append((nct_id, entity_labelled(graph.induced_subgraph(keep))))
    if not found:
        raise DataError(f"target adverse event {target_ae!r} absent from graphs")

    kernel_config = config.kernel_config(config.data_seed)
    if kernel_config.kind == "node_pairs_rbf":
        alphabet = sorted(set().union(*(g.node_alphabet for _, g in stripped)))
        stripped = [(i, kernels.with_label_attributes(g, alphabet))
                    for i, g in stripped]

    rng = np.random.default_rng(seed)
    order = rng.permutation(len(stripped))
    reference = [stripped[i] for i in order[:config.n_reference]]
    remaining = [stripped[i] for i in order[config.n_reference:]]
    n_test = round(config.kernel_test_frac * len(remaining))
    test, train = remaining[:n_test], remaining[n_test:]

    for name, subset in (("train", train), ("test", test)):
        values = {labels_by_id[i] for i, _ in subset}
        if len(values) < 2:
            raise DataError(f"target {target_ae!r}: single-class {name} set")

    ref_graphs = [g for _, g in reference]
    gram_train = kernels.gram_matrix([g for _, g in train], ref_graphs,
                                     config=kernel_config, normalize=True)
    gram_test = kernels.gram_matrix([g for _, g in test], ref_graphs,
                                    config=kernel_config, normalize=True)
    train_data = learn.Dataset(
        features=gram_train.values,
        labels=np.array([labels_by_id[i] for i, _ in train]),
        ids=[i for i, _ in train],
    )
    model = learn.train_svm(train_data, C=config.svm_c, kernel="rbf")
    scores = model.decision(gram_test.values)
    summary = learn.roc_auc(scores, np.array([labels_by_id[i] for i, _ in test]))
    if roc_path:
        summary.save(roc_path)
        roc_path = os.path.basename(roc_path)  # reports sit beside their curves
    return RunReport(method=f"kernel-{kernel_config.kind}", classifier="svm",
                     seed=seed, auc=summary.auc, roc_path=roc_path,
                     wall_time=time.perf_counter() - started,
                     config_echo=_echo(config, target_ae=target_ae))


# -- array baseline -----------------------------------------------------------------


def one_hot_edge_features(records, split: EdgeSplit):
    """(train, test) feature sets for the array baseline.

    One row per split pair: the trial's multi-hot vocabulary blocks
    concatenated with the AE prevalence pair computed from training
    positives only. Unknown vocabulary items map to all-zero blocks.
    """
    assert_no_leakage(split)
    cond = ingest.condition_split(records)
    drug = ingest.drug_split(records)
    blocks = [sorted(cond.keywords), sorted(cond.specifics),
              sorted(drug.keywords), sorted(drug.specifics)]
    offsets = np.cumsum([0] + [len(b) for b in blocks])
    position = {}
    for b, block in enumerate(blocks):
        for i, name in enumerate(block):
            position[(b, name)] = offsets[b] + i
    trial_dim = int(offsets[-1])

    by_id = {rec.nct_id: rec for rec in records}
    trial_vec: dict[str, np.ndarray] = {}
    for rec in records:
        vec = np.zeros(trial_dim)
        cond_ents = ingest.condition_entries(rec)
        drug_ents = ingest.drug_entries(rec)
        for kw in ingest._matched_keywords(cond_ents, cond):
            vec[position[(0, kw)]] = 1.0
        for s in ingest._matched_specifics(cond_ents, cond):
            vec[position[(1, s)]] = 1.0
        for kw in ingest._matched_keywords(drug_ents, drug):
            vec[position[(2, kw)]] = 1.0
        for s in ingest._matched_specifics(drug_ents, drug):
            vec[position[(3, s)]] = 1.0
        trial_vec[rec.nct_id] = vec

    graph = split.source_graph
    # AE prevalence from training positives only (no test leakage)
    n_trials = len(records)
    per_ae_counts: dict[str, int] = {}
    per_ae_fractions: dict[str, list[float]] = {}
    for u, v in split.train_pos:
        trial_name = graph.node_name(u)
        ae_name = graph.node_name(v)
        per_ae_counts[ae_name] = per_ae_counts.get(ae_name, 0) + 1
        per_ae_fractions.setdefault(ae_name, []).append(
            by_id[trial_name].adverse_events[ae_name]
        )

    def ae_block(ae_name: str) -> np.ndarray:
        count = per_ae_counts.get(ae_name, 0)
        if count == 0:
            return np.zeros(2)
        return np.array([count / n_trials,
                         float(np.mean(per_ae_fractions[ae_name]))])

    def dataset(pos, neg):
        pairs = list(pos) + list(neg)
        rows = []
        for u, v in pairs:
            trial_name, ae_name = graph.node_name(u), graph.node_name(v)
            trial_block = trial_vec.get(trial_name, np.zeros(trial_dim))
            rows.append(np.concatenate([trial_block, ae_block(ae_name)]))
        labels = np.array([1] * len(pos) + [0] * len(neg))
        return learn.Dataset(features=np.stack(rows), labels=labels, ids=pairs)

    return (dataset(split.train_pos, split.train_neg),
            dataset(split.test_pos, split.test_neg))


def run_array_pipeline(records, split: EdgeSplit, config: PipelineConfig,
                       classifier: str, seed: int, datasets=None,
                       roc_path: str | None = None) -> RunReport:
    """One-hot + prevalence features through a standard classifier."""
    started = time.perf_counter()
    if datasets is None:
        datasets = one_hot_edge_features(records, split)
    train, test = datasets
    model = _train_classifier(classifier, train, config, seed)
    summary = learn.roc_auc(_score(model, test.features), test.labels)
    if roc_path:
        summary.save(roc_path)
        roc_path = os.path.basename(roc_path)  # reports sit beside their curves
    return RunReport(method="array", classifier=classifier, seed=seed,
                     auc=summary.auc, roc_path=roc_path,
                     wall_time=time.perf_counter() - started,
                     config_echo=_echo(config))


# -- comparison table -----------------------------------------------------------


@dataclass
class ComparisonTable:
    rows: list[dict]

    def save(self, path: str) -> None:
        width = max(len(row["aucs"]) for row in self.rows)
        with open(path, "w", encoding="utf-8") as fh:
            runs = "\t".join(f"run_{i + 1}" for i in range(width))
            fh.write(f"method\tclassifier\t{runs}\tmean\tsd\n")
            for row in self.rows:
                cells = [f"{a:.3f}" for a in row["aucs"]]
                cells += [""] * (width - len(cells))
                sd = "" if row["sd"] is None else f"{row['sd']:.3f}"
                fh.write(f"{row['method']}\t{row['classifier']}\t"
                         + "\t".join(cells) + f"\t{row['mean']:.3f}\t{sd}\n")


def compare_report(reports: list[RunReport]) -> ComparisonTable:
    """Per (method, classifier): per-run AUCs, mean, sample S.D."""
    if not reports:
        raise DataError("no reports to compare")
    grouped: dict[tuple[str, str], list[RunReport]] = {}
    for report in reports:
        grouped.setdefault((report.method, report.classifier), []).append(report)
    rows = []
    for (method, classifier) in sorted(grouped):
        runs = sorted(grouped[(method, classifier)],
                      key=lambda r: (r.seed, r.config_echo.get("target_ae", "")))
        aucs = [r.auc for r in runs]
        rows.append({
            "method": method, "classifier": classifier, "aucs": aucs,
            "mean": float(np.mean(aucs)),
            "sd": float(np.std(aucs, ddof=1)) if len(aucs) > 1 else None,
        })
    return ComparisonTable(rows=rows)


# -- full comparison -------------------------------------------------------------


ARRAY_CLASSIFIERS = ("logreg", "forest", "svm")
METAPATH_CLASSIFIERS = ("logreg", "tree", "forest", "svm", "mlp")


def _emit(report: RunReport, out_dir: str) -> RunReport:
    stem = f"{report.method}_{report.classifier}_seed{report.seed}"
    extra = report.config_echo.get("target_ae")
    if extra:
        stem += f"_{extra}"
    report.save(os.path.join(out_dir, f"report_{stem}.tsv"))
    return report


def _reproduce_one_seed(config: PipelineConfig, seed: int,
                        out_dir: str) -> list[RunReport]:
    """All split-sharing pipelines for one run seed; fully self-contained
    so seeds can execute in separate processes."""
    records = ingest.generate_synthetic(config.synthetic())
    graph = ingest.build_knowledge_graph(
        records, ingest.condition_split(records), ingest.drug_split(records)
    )
    binodal = ingest.build_binodal_graph(records)
    split = split_edges(graph, ingest.EXPRESSES, config.test_frac,
                        config.train_frac, seed)

    def roc(method: str, classifier: str) -> str:
        return os.path.join(out_dir, f"roc_{method}_{classifier}_seed{seed}.tsv")

    reports = []
    array_sets = one_hot_edge_features(records, split)
    for classifier in ARRAY_CLASSIFIERS:
        reports.append(_emit(
            run_array_pipeline(records, split, config, classifier, seed,
                               datasets=array_sets,
                               roc_path=roc("array", classifier)), out_dir))
    metapath_sets = metapath_edge_datasets(graph, split, config, seed)
    for classifier in METAPATH_CLASSIFIERS:
        reports.append(_emit(
            run_metapath_pipeline(graph, split, config, classifier, seed,
                                  datasets=metapath_sets,
                                  roc_path=roc("metapath", classifier)), out_dir))
    reports.append(_emit(
        run_hinsage_pipeline(binodal, split, config, seed,
                             roc_path=roc("hinsage", "gnn")), out_dir))
    return reports


def reproduce(config: PipelineConfig, seeds=(1, 2, 3), out_dir: str = "out",
              records=None, parallel_runs: bool = False) -> ComparisonTable:
    """Full desk-scale comparison: all methods, shared splits, TSV outputs.

    ``parallel_runs`` executes the independent seeds in separate
    processes; outputs are identical to the serial order because every
    run owns its files and the table is assembled deterministically.
    """
    os.makedirs(out_dir, exist_ok=True)
    if records is None:
        records = ingest.generate_synthetic(config.synthetic())
    ingest.write_trials_csv(records, os.path.join(out_dir, "trials.csv"))
    graph = ingest.build_knowledge_graph(
        records, ingest.condition_split(records), ingest.drug_split(records)
    )
    constituent = ingest.build_constituent_graphs(graph, records)

    reports: list[RunReport] = []
    if parallel_runs and len(seeds) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=len(seeds)) as pool:
            futures = [pool.submit(_reproduce_one_seed, config, seed, out_dir)
                       for seed in seeds]
            for future in futures:
                reports.extend(future.result())
    else:
        for seed in seeds:
            reports.extend(_reproduce_one_seed(config, seed, out_dir))

    def emit(report: RunReport) -> None:
        reports.append(_emit(report, out_dir))

    kernel_seed = seeds[0]
    targets = target_adverse_events(records, config.n_target_aes)
    for kind in kernels.KERNEL_KINDS:
        kind_config = dataclasses.replace(config, kernel_kind=kind)
        aucs = []
        for target in targets:
            roc_path = os.path.join(
                out_dir, f"roc_kernel-{kind}_svm_seed{kernel_seed}_{target}.tsv"
            )
            report = run_kernel_pipeline(constituent, target, kind_config,
                                         kernel_seed, roc_path=roc_path)
            emit(report)
            aucs.append(report.auc)
        grid = np.linspace(0.0, 1.0, 201)
        density = learn.kde(aucs, grid=grid)
        with open(os.path.join(out_dir, f"kde_kernel-{kind}.tsv"), "w",
                  encoding="utf-8") as fh:
            fh.write("auc\tdensity\n")
            for x, d in zip(grid, density):
                fh.write(f"{x!r}\t{d!r}\n")

    table = compare_report(reports)
    table.save(os.path.join(out_dir, "comparison.tsv"))
    return table
