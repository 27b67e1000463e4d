"""Trial-table ingestion and graph construction.

Reads the wide CSV schema (one NCT id per trial, multi-valued disease /
existing-condition / drug fields, one ``AE_*`` dropout-fraction column
per adverse event), extracts keyword vocabularies, and builds the three
graph views used downstream:

* the full knowledge graph (six node labels, eight edge labels),
* the bi-nodal trial/adverse-event graph with one-hot and prevalence
  attributes on nodes and 0/1 weights on every trial x AE pair,
* one constituent subgraph per trial.

Also ships a seeded synthetic generator with planted low-rank signal so
the whole pipeline runs without the original proprietary data.
"""

from __future__ import annotations

import csv
import dataclasses
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError, RangeError, RowError, SchemaError
from .hetgraph import HeteroGraph
from .kvconfig import coerce_dataclass, read_kv, write_kv

# node labels
TRIAL = "Clinical Trial"
ADVERSE_EVENT = "Adverse Event"
DRUG = "Drug"
SPECIFIC_DRUG = "Specific Drug"
CONDITION = "Condition"
SPECIFIC_CONDITION = "Specific Condition"

# edge labels
EXPRESSES = "Expresses"
DIAGNOSIS = "Diagnosis"
SPECIFIC_DIAGNOSIS = "Specific Diagnosis"
TREATMENT = "Treatment"
SPECIFIC_TREATMENT = "Specific Treatment"
CONDITION_SPECIFICATION = "Condition Specification"
DRUG_SPECIFICATION = "Drug Specification"
TREATMENT_TARGETING = "Treatment Targeting"

_MANDATORY_COLUMNS = ("NCT_id", "Trial ID", "Disease", "MeSH Term", "Drug")
_AE_PREFIX = "AE_"


@dataclass
class TrialRecord:
    """One trial: identifiers, multi-valued fields, AE dropout fractions."""

    nct_id: str
    trial_id: str
    diseases: tuple[str, ...]
    mesh_terms: tuple[str, ...]
    drugs: tuple[str, ...]
    adverse_events: dict[str, float]


@dataclass(frozen=True)
class KeywordSplit:
    """Keyword / specific-term split of one vocabulary.

    Keywords are single tokens occurring in at least two distinct raw
    entries; specifics are normalized entries that are not themselves
    keywords. ``membership`` maps each specific to the keywords it
    contains.
    """

    keywords: frozenset[str]
    specifics: frozenset[str]
    membership: dict[str, frozenset[str]] = field(compare=False)


def normalize_entry(text: str) -> str:
    """Case-fold, strip punctuation, collapse whitespace."""
    return re.sub(r"[^0-9a-z]+", " ", text.lower()).strip()


def _tokens(normalized: str) -> list[str]:
    return normalized.split()


def extract_keywords(entries) -> KeywordSplit:
    """Split raw vocabulary entries into keywords and specific terms."""
    distinct_raw = list(dict.fromkeys(entries))
    if not distinct_raw:
        raise DataError("keyword extraction needs at least one entry")
    doc_freq: dict[str, int] = {}
    for raw in distinct_raw:
        for tok in set(_tokens(normalize_entry(raw))):
            doc_freq[tok] = doc_freq.get(tok, 0) + 1
    keywords = frozenset(tok for tok, n in doc_freq.items() if n >= 2)
    normalized = [normalize_entry(raw) for raw in distinct_raw]
    specifics = frozenset(e for e in normalized if e and e not in keywords)
    membership = {
        spec: frozenset(tok for tok in set(_tokens(spec)) if tok in keywords)
        for spec in specifics
    }
    return KeywordSplit(keywords=keywords, specifics=specifics, membership=membership)


# -- CSV I/O ---------------------------------------------------------------


def parse_trials_csv(path: str) -> list[TrialRecord]:
    """Parse the wide trial CSV into one record per unique NCT id.

    Rows sharing an NCT id are merged: multi-valued fields take the
    union (first-occurrence order); AE fractions and the trial id must
    agree across merged rows.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError("NCT_id", "empty file: no header row") from None
        for column in _MANDATORY_COLUMNS:
            if column not in header:
                raise SchemaError(column)
        ae_columns = [c for c in header if c.startswith(_AE_PREFIX)]
        if not ae_columns:
            raise SchemaError("AE_*", "no AE_* adverse-event columns found")
        index = {c: header.index(c) for c in header}

        records: dict[str, TrialRecord] = {}
        for row in reader:
            if not any(cell.strip() for cell in row):
                continue
            line = reader.line_num
            if len(row) != len(header):
                raise RowError(line, f"expected {len(header)} fields, got {len(row)}")
            nct_id = row[index["NCT_id"]].strip()
            if not nct_id:
                raise RowError(line, "empty NCT_id")
            fractions = {}
            for column in ae_columns:
                cell = row[index[column]].strip()
                try:
                    value = float(cell)
                except ValueError:
                    raise RowError(line, f"unparseable fraction {cell!r} in {column}") from None
                if not 0.0 <= value <= 1.0:
                    raise RangeError(
                        f"line {line}: fraction {value} in {column} outside [0, 1]"
                    )
                fractions[column] = value
            trial_id = row[index["Trial ID"]].strip()
            disease = row[index["Disease"]].strip()
            mesh = row[index["MeSH Term"]].strip()
            drug = row[index["Drug"]].strip()

            record = records.get(nct_id)
            if record is None:
                records[nct_id] = TrialRecord(
                    nct_id=nct_id,
                    trial_id=trial_id,
                    diseases=(disease,) if disease else (),
                    mesh_terms=(mesh,) if mesh else (),
                    drugs=(drug,) if drug else (),
                    adverse_events=fractions,
                )
                continue
            if record.trial_id != trial_id:
                raise DataError(f"line {line}: Trial ID differs across rows of {nct_id}")
            if record.adverse_events != fractions:
                raise DataError(f"line {line}: AE fractions differ across rows of {nct_id}")
            if disease and disease not in record.diseases:
                record.diseases = record.diseases + (disease,)
            if mesh and mesh not in record.mesh_terms:
                record.mesh_terms = record.mesh_terms + (mesh,)
            if drug and drug not in record.drugs:
                record.drugs = record.drugs + (drug,)
    return list(records.values())


def write_trials_csv(records: list[TrialRecord], path: str) -> None:
    """Write records in the wide CSV schema (inverse of the parser)."""
    if not records:
        raise DataError("no records to write")
    ae_names = sorted(records[0].adverse_events)
    for record in records:
        if sorted(record.adverse_events) != ae_names:
            raise DataError(f"AE name set differs for {record.nct_id}")
    header = list(_MANDATORY_COLUMNS) + ae_names
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for record in records:
            n_rows = max(len(record.diseases), len(record.mesh_terms),
                         len(record.drugs), 1)
            for i in range(n_rows):
                row = [
                    record.nct_id,
                    record.trial_id,
                    record.diseases[i] if i < len(record.diseases) else "",
                    record.mesh_terms[i] if i < len(record.mesh_terms) else "",
                    record.drugs[i] if i < len(record.drugs) else "",
                ]
                row += [repr(record.adverse_events[name]) for name in ae_names]
                writer.writerow(row)


# -- vocabulary helpers ------------------------------------------------------


def condition_entries(record: TrialRecord) -> list[str]:
    """Normalized disease + existing-condition entries, deduplicated."""
    seen = dict.fromkeys(
        normalize_entry(e) for e in (*record.diseases, *record.mesh_terms)
    )
    return [e for e in seen if e]


def drug_entries(record: TrialRecord) -> list[str]:
    seen = dict.fromkeys(normalize_entry(e) for e in record.drugs)
    return [e for e in seen if e]


def condition_split(records: list[TrialRecord]) -> KeywordSplit:
    entries = [e for rec in records for e in (*rec.diseases, *rec.mesh_terms) if e]
    return extract_keywords(entries)


def drug_split(records: list[TrialRecord]) -> KeywordSplit:
    entries = [e for rec in records for e in rec.drugs if e]
    return extract_keywords(entries)


def _matched_keywords(entries: list[str], split: KeywordSplit) -> set[str]:
    matched = set()
    for entry in entries:
        matched.update(tok for tok in _tokens(entry) if tok in split.keywords)
    return matched


def _matched_specifics(entries: list[str], split: KeywordSplit) -> set[str]:
    return {e for e in entries if e in split.specifics}


# -- knowledge graph --------------------------------------------------------


def build_knowledge_graph(records, cond_split: KeywordSplit,
                          drug_split_: KeywordSplit) -> HeteroGraph:
    """Six-label knowledge graph; simple (deduplicated), frozen."""
    if not records:
        raise DataError("cannot build a knowledge graph from zero records")
    ae_names = sorted(records[0].adverse_events)

    g = HeteroGraph()
    trial_node = {rec.nct_id: g.add_node(TRIAL, name=rec.nct_id) for rec in records}
    ae_node = {name: g.add_node(ADVERSE_EVENT, name=name) for name in ae_names}
    cond_node = {kw: g.add_node(CONDITION, name=kw) for kw in sorted(cond_split.keywords)}
    spec_cond_node = {
        s: g.add_node(SPECIFIC_CONDITION, name=s) for s in sorted(cond_split.specifics)
    }
    drug_node = {kw: g.add_node(DRUG, name=kw) for kw in sorted(drug_split_.keywords)}
    spec_drug_node = {
        s: g.add_node(SPECIFIC_DRUG, name=s) for s in sorted(drug_split_.specifics)
    }

    seen: set[tuple[int, int, str]] = set()

    def add_unique(u: int, v: int, label: str) -> None:
        key = (min(u, v), max(u, v), label)
        if key not in seen:
            seen.add(key)
            g.add_edge(u, v, label)

    targeting_pairs: set[tuple[str, str]] = set()
    for rec in records:
        t = trial_node[rec.nct_id]
        for name in ae_names:
            if rec.adverse_events[name] > 0.0:
                add_unique(t, ae_node[name], EXPRESSES)
        cond_ents = condition_entries(rec)
        drug_ents = drug_entries(rec)
        for kw in sorted(_matched_keywords(cond_ents, cond_split)):
            add_unique(t, cond_node[kw], DIAGNOSIS)
        for s in sorted(_matched_specifics(cond_ents, cond_split)):
            add_unique(t, spec_cond_node[s], SPECIFIC_DIAGNOSIS)
        for kw in sorted(_matched_keywords(drug_ents, drug_split_)):
            add_unique(t, drug_node[kw], TREATMENT)
        for s in sorted(_matched_specifics(drug_ents, drug_split_)):
            add_unique(t, spec_drug_node[s], SPECIFIC_TREATMENT)
        # targeting pairs are mined from the Disease field only
        disease_only = [e for e in dict.fromkeys(
            normalize_entry(d) for d in rec.diseases) if e]
        drug_kws = _matched_keywords(drug_ents, drug_split_)
        for s in _matched_specifics(disease_only, cond_split):
            for kw in drug_kws:
                targeting_pairs.add((s, kw))

    for s in sorted(cond_split.specifics):
        for kw in sorted(cond_split.membership[s]):
            add_unique(cond_node[kw], spec_cond_node[s], CONDITION_SPECIFICATION)
    for s in sorted(drug_split_.specifics):
        for kw in sorted(drug_split_.membership[s]):
            add_unique(drug_node[kw], spec_drug_node[s], DRUG_SPECIFICATION)
    for s, kw in sorted(targeting_pairs):
        add_unique(spec_cond_node[s], drug_node[kw], TREATMENT_TARGETING)

    return g.freeze()


# -- bi-nodal graph -----------------------------------------------------------


def build_binodal_graph(records) -> HeteroGraph:
    """Trial/AE graph: every pair connected, weight 1 iff dropout > 0.

    Trial attributes concatenate multi-hot blocks over the four
    vocabularies (lexicographic order); AE attributes are the 2-vector
    (incidence rate, mean nonzero dropout fraction).
    """
    if not records:
        raise DataError("cannot build a bi-nodal graph from zero records")
    cond = condition_split(records)
    drug = drug_split(records)
    blocks = [
        sorted(cond.keywords),
        sorted(cond.specifics),
        sorted(drug.keywords),
        sorted(drug.specifics),
    ]
    offsets = np.cumsum([0] + [len(b) for b in blocks])
    position = {}
    for b, block in enumerate(blocks):
        for i, name in enumerate(block):
            position[(b, name)] = offsets[b] + i
    dim = int(offsets[-1])

    ae_names = sorted(records[0].adverse_events)
    g = HeteroGraph()
    trial_nodes = []
    for rec in records:
        attrs = np.zeros(dim)
        cond_ents = condition_entries(rec)
        drug_ents = drug_entries(rec)
        for kw in _matched_keywords(cond_ents, cond):
            attrs[position[(0, kw)]] = 1.0
        for s in _matched_specifics(cond_ents, cond):
            attrs[position[(1, s)]] = 1.0
        for kw in _matched_keywords(drug_ents, drug):
            attrs[position[(2, kw)]] = 1.0
        for s in _matched_specifics(drug_ents, drug):
            attrs[position[(3, s)]] = 1.0
        trial_nodes.append(g.add_node(TRIAL, attrs=attrs, name=rec.nct_id))

    n = len(records)
    ae_nodes = []
    for name in ae_names:
        fractions = [rec.adverse_events[name] for rec in records]
        nonzero = [f for f in fractions if f > 0.0]
        incidence = len(nonzero) / n
        mean_nonzero = float(np.mean(nonzero)) if nonzero else 0.0
        ae_nodes.append(
            g.add_node(ADVERSE_EVENT, attrs=[incidence, mean_nonzero], name=name)
        )

    for t, rec in zip(trial_nodes, records):
        for a, name in zip(ae_nodes, ae_names):
            weight = 1.0 if rec.adverse_events[name] > 0.0 else 0.0
            g.add_edge(t, a, EXPRESSES, weight=weight)
    return g.freeze()


# -- constituent graphs -------------------------------------------------------

_SPECIFICATION_LABELS = (CONDITION_SPECIFICATION, DRUG_SPECIFICATION,
                         TREATMENT_TARGETING)


def build_constituent_graphs(knowledge_graph: HeteroGraph,
                             records) -> list[tuple[str, HeteroGraph]]:
    """Per-trial induced subgraphs of the knowledge graph.

    Each covers the trial node, its direct neighbors, and the
    specification/targeting endpoints of those neighbors.
    """
    trial_by_name = {
        knowledge_graph.node_name(v): v
        for v in knowledge_graph.nodes_with_label(TRIAL)
    }
    out = []
    for rec in records:
        t = trial_by_name[rec.nct_id]
        keep = {t}
        direct = set(knowledge_graph.neighbors(t))
        keep |= direct
        for v in sorted(direct):
            for label in _SPECIFICATION_LABELS:
                keep.update(knowledge_graph.neighbors(v, edge_label=label))
        out.append((rec.nct_id, knowledge_graph.induced_subgraph(keep)))
    return out


# -- synthetic data ------------------------------------------------------------

_CONDITION_FAMILIES = [
    "pulmonary", "cardiac", "renal", "hepatic", "neural", "dermal",
    "gastric", "ocular", "vascular", "immune", "skeletal", "endocrine",
]
_CONDITION_VARIANTS = [
    "fibrosis", "hypertension", "stenosis", "atrophy", "edema", "sclerosis",
    "dysplasia", "necrosis", "lesion", "prolapse", "infarction", "neuropathy",
]
_DRUG_AGENTS = [
    "vorastin", "lumizol", "pirfenex", "oseltrex", "metoprin", "atorvex",
    "ciprodal", "amoxiden", "zelborin", "tacrosin", "ibrutex", "selumab",
]
_DRUG_FORMS = ["oral", "infusion", "depot", "topical", "inhaled", "patch"]
_AE_TOKENS = [
    "nausea", "fatigue", "headache", "dizziness", "rash", "anaemia",
    "cough", "insomnia", "fever", "arthralgia", "dyspnoea", "pruritus",
    "vomiting", "tremor", "oedema", "syncope", "sepsis", "thrombosis",
    "neutropenia", "diarrhoea", "myalgia", "vertigo", "tinnitus", "alopecia",
    "dyspepsia", "palpitation", "epistaxis", "hypoxia", "icterus", "malaise",
]

# planted-model constants: interaction scale, within-family latent
# mixing (families share most of their latent direction, so keyword
# edges carry real signal), and the global nonzero-fraction rate the
# threshold is tuned to
_SIGNAL_SCALE = 8.0
_FAMILY_MIX = 0.3
_NONZERO_RATE = 0.3


@dataclass(frozen=True)
class SyntheticConfig:
    n_trials: int = 300
    n_conditions: int = 40
    n_drugs: int = 30
    n_adverse_events: int = 20
    latent_dim: int = 8
    noise: float = 0.4
    seed: int = 1

    def validate(self) -> "SyntheticConfig":
        for name in ("n_trials", "n_conditions", "n_drugs",
                     "n_adverse_events", "latent_dim"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.noise < 0:
            raise ConfigError("noise must be nonnegative")
        return self


def load_synthetic_config(path: str) -> SyntheticConfig:
    return coerce_dataclass(SyntheticConfig, read_kv(path)).validate()


def save_synthetic_config(config: SyntheticConfig, path: str) -> None:
    write_kv(path, dataclasses.asdict(config))


def _two_token_names(n: int, families: list[str], variants: list[str]) -> list[str]:
    n_fam = _family_count(n, families)
    names = []
    for i in range(n):
        vi = i // n_fam
        variant = variants[vi] if vi < len(variants) else f"type{vi}"
        names.append(f"{families[i % n_fam]} {variant}")
    return names


def _family_count(n: int, families: list[str]) -> int:
    return min(len(families), max(2, math.isqrt(n)))


def _family_latents(rng, n: int, n_fam: int, k: int) -> np.ndarray:
    """Per-item latents sharing most of their family's direction."""
    family = rng.normal(size=(n_fam, k)) / math.sqrt(k)
    individual = rng.normal(size=(n, k)) / math.sqrt(k)
    mixed = family[np.arange(n) % n_fam] + _FAMILY_MIX * individual
    return mixed / math.sqrt(1.0 + _FAMILY_MIX**2)


def _ae_names(n: int) -> list[str]:
    names = []
    for i in range(n):
        tok = _AE_TOKENS[i % len(_AE_TOKENS)]
        suffix = "" if i < len(_AE_TOKENS) else str(i // len(_AE_TOKENS))
        names.append(f"AE_{tok}{suffix}")
    return names


def generate_synthetic(config: SyntheticConfig) -> list[TrialRecord]:
    """Generate schema-conforming records with planted low-rank signal.

    Each condition/drug/adverse event draws a latent vector; a trial's
    dropout fraction for an AE is a logistic function of the dot product
    between the trial's mean condition+drug latent and the AE latent
    (plus an AE base-rate offset and Gaussian noise), thresholded at the
    global quantile that leaves ~30% of fractions nonzero. Deterministic
    given the seed.
    """
    config.validate()
    rng = np.random.default_rng(config.seed)
    k = config.latent_dim

    cond_names = _two_token_names(config.n_conditions, _CONDITION_FAMILIES,
                                  _CONDITION_VARIANTS)
    drug_names = _two_token_names(config.n_drugs, _DRUG_AGENTS, _DRUG_FORMS)
    ae_names = _ae_names(config.n_adverse_events)

    cond_latent = _family_latents(
        rng, config.n_conditions,
        _family_count(config.n_conditions, _CONDITION_FAMILIES), k)
    drug_latent = _family_latents(
        rng, config.n_drugs, _family_count(config.n_drugs, _DRUG_AGENTS), k)
    ae_latent = rng.normal(size=(config.n_adverse_events, k)) / math.sqrt(k)

    trial_latent = np.zeros((config.n_trials, k))
    compositions = []
    for t in range(config.n_trials):
        n_dis = int(rng.integers(1, 4))
        dis = sorted(int(i) for i in rng.choice(config.n_conditions, n_dis, replace=False))
        n_mesh = int(rng.integers(0, 3))
        mesh = sorted(int(i) for i in rng.choice(config.n_conditions, n_mesh, replace=False))
        n_drug = int(rng.integers(1, 3))
        drugs = sorted(int(i) for i in rng.choice(config.n_drugs, n_drug, replace=False))
        cond_ids = sorted(set(dis) | set(mesh))
        parts = [cond_latent[i] for i in cond_ids] + [drug_latent[i] for i in drugs]
        trial_latent[t] = np.mean(parts, axis=0)
        compositions.append((dis, mesh, drugs))

    noise = rng.normal(size=(config.n_trials, config.n_adverse_events))
    scores = (_SIGNAL_SCALE * trial_latent @ ae_latent.T
              + config.noise * noise)
    raw = 1.0 / (1.0 + np.exp(-scores))
    threshold = float(np.quantile(raw, 1.0 - _NONZERO_RATE))
    fractions = np.where(raw > threshold, (raw - threshold) / (1.0 - threshold), 0.0)

    records = []
    for t, (dis, mesh, drugs) in enumerate(compositions):
        records.append(
            TrialRecord(
                nct_id=f"NCT{t:08d}",
                trial_id=str(100000 + t),
                diseases=tuple(cond_names[i] for i in dis),
                mesh_terms=tuple(cond_names[i] for i in mesh),
                drugs=tuple(drug_names[i] for i in drugs),
                adverse_events={
                    name: float(fractions[t, a]) for a, name in enumerate(ae_names)
                },
            )
        )
    return records
