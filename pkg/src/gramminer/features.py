"""Categorical feature extraction and one-hot vectorization.

A classification example is a map of categorical features; the vocabulary
assigns every observed ``name=value`` atom a stable column, in lexicographic
order, so identical inputs always produce identical design matrices.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .corpus import Corpus, Sentence


@dataclass(frozen=True)
class FeatureTemplate:
    """Which context signals to extract around a head--dependent arc."""

    use_lemmas: bool = True
    max_lexical_vocab: int = 500
    use_neighbor_pos: bool = True
    use_codependents: bool = True
    use_sentence_flags: bool = True
    exclude_attributes: frozenset[str] = frozenset()

    def __post_init__(self):
        if self.max_lexical_vocab < 0:
            raise ValueError("max_lexical_vocab must be >= 0")


@dataclass(frozen=True)
class Provenance:
    """Where an instance came from: a sentence or pair id plus token positions."""

    ref_id: str
    indices: tuple[int, ...]
    length: int = 0


@dataclass
class TaskInstance:
    features: dict[str, str]
    label: str
    provenance: Provenance


def top_lemmas(corpus: Corpus, k: int) -> frozenset[str]:
    """The k most frequent non-empty lemmas (ties broken alphabetically)."""
    counts = Counter(t.lemma for s in corpus.sentences for t in s.tokens if t.lemma)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return frozenset(lemma for lemma, _ in ranked[:k])


def _lemma_value(lemma: str, frequent: frozenset[str] | None) -> str:
    if frequent is None or lemma in frequent:
        return lemma
    return "OOV"


def extract_context_features(
    sentence: Sentence,
    head_index: int,
    dep_index: int,
    template: FeatureTemplate,
    frequent_lemmas: frozenset[str] | None = None,
) -> dict[str, str]:
    """Feature map for one head--dependent arc (indices are 0-based positions).

    Missing fields simply yield no feature. Morphological attributes listed
    in ``template.exclude_attributes`` are withheld on both sides (used by
    tasks whose label is derived from the attribute itself).
    """
    tokens = sentence.tokens
    head = tokens[head_index]
    dep = tokens[dep_index]
    feats: dict[str, str] = {}

    if dep.deprel:
        feats["rel"] = dep.deprel
    if dep.upos:
        feats["dep:pos"] = dep.upos
    if head.upos:
        feats["head:pos"] = head.upos

    for attr, value in dep.feats.items():
        if attr not in template.exclude_attributes:
            feats[f"dep:{attr}"] = value
    for attr, value in head.feats.items():
        if attr not in template.exclude_attributes:
            feats[f"head:{attr}"] = value

    if template.use_lemmas:
        if dep.lemma:
            feats["dep:lemma"] = _lemma_value(dep.lemma, frequent_lemmas)
        if head.lemma:
            feats["head:lemma"] = _lemma_value(head.lemma, frequent_lemmas)

    if template.use_neighbor_pos:
        if dep_index > 0 and tokens[dep_index - 1].upos:
            feats["dep:prev:pos"] = tokens[dep_index - 1].upos
        if dep_index + 1 < len(tokens) and tokens[dep_index + 1].upos:
            feats["dep:next:pos"] = tokens[dep_index + 1].upos

    if template.use_codependents:
        for pos, other in enumerate(tokens):
            if pos in (head_index, dep_index) or other.head != head_index:
                continue
            if other.deprel:
                feats[f"head:codep:rel={other.deprel}"] = "true"
            if other.upos:
                feats[f"head:codep:pos={other.upos}"] = "true"

    if template.use_sentence_flags:
        if any(t.feats.get("PronType") == "Int" for t in tokens):
            feats["sent:has_interrogative"] = "true"
        if tokens and tokens[-1].form == "?":
            feats["sent:question"] = "true"

    return feats


def atom(name: str, value: str) -> str:
    """Canonical one-hot column name for a feature entry.

    Names that already embed their value (e.g. ``head:codep:rel=obj``) hold a
    bare "true" and are used verbatim.
    """
    if "=" in name:
        return name
    return f"{name}={value}"


def instance_atoms(features: dict[str, str]) -> frozenset[str]:
    return frozenset(atom(name, value) for name, value in features.items())


@dataclass
class FeatureVocabulary:
    """Bijection between feature atoms and column indices, in sorted order."""

    names: list[str]
    index: dict[str, int] = field(repr=False, default_factory=dict)

    def __post_init__(self):
        if not self.index:
            self.index = {name: i for i, name in enumerate(self.names)}
        if len(self.index) != len(self.names):
            raise ValueError("feature names are not unique")

    def __len__(self):
        return len(self.names)


def build_vocabulary(instances: list[TaskInstance]) -> FeatureVocabulary:
    """Collect every atom observed in the instances, lexicographically ordered."""
    if not instances:
        raise ValueError("cannot build a vocabulary from zero instances")
    atoms: set[str] = set()
    for inst in instances:
        atoms.update(instance_atoms(inst.features))
    return FeatureVocabulary(names=sorted(atoms))


def vectorize(
    instances: list[TaskInstance], vocab: FeatureVocabulary
) -> tuple[np.ndarray, np.ndarray]:
    """One-hot design matrix plus label vector; unseen atoms are dropped."""
    X = np.zeros((len(instances), len(vocab)), dtype=np.uint8)
    labels = []
    for row, inst in enumerate(instances):
        for name, value in inst.features.items():
            col = vocab.index.get(atom(name, value))
            if col is not None:
                X[row, col] = 1
        labels.append(inst.label)
    return X, np.array(labels, dtype=object)
