"""Shared machinery for running one classification task end to end:
split, vectorize, fit, evaluate against the most-frequent baseline, and
mine rules from the fitted model.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .features import TaskInstance, build_vocabulary, vectorize, FeatureVocabulary
from .learners import (
    LinearConfig,
    Split,
    TreeConfig,
    accuracy,
    fit_linear,
    fit_tree,
    make_split,
    most_frequent_baseline,
)
from .rules import (
    Chi2Config,
    GrammarRule,
    attach_examples,
    describe_atom,
    extract_linear_rules,
    extract_tree_rules,
    render_rule,
)


@dataclass
class TaskEvaluation:
    test_accuracy: float
    baseline_accuracy: float
    baseline_label: str
    n_train: int
    n_dev: int
    n_test: int
    test_correct: int
    baseline_correct: int


@dataclass
class TaskResult:
    name: str
    concept: str
    kind: str  # tree | linear
    status: str = "ok"  # ok | skipped
    note: str | None = None
    label_counts: dict[str, int] = field(default_factory=dict)
    instances: list[TaskInstance] = field(default_factory=list, repr=False)
    vocab: FeatureVocabulary | None = field(default=None, repr=False)
    model: object | None = field(default=None, repr=False)
    split: Split | None = field(default=None, repr=False)
    evaluation: TaskEvaluation | None = None
    rules: list[GrammarRule] = field(default_factory=list)
    top_features: dict[str, list[tuple[str, float]]] = field(default_factory=dict)
    rendered_features: dict[str, list[str]] = field(default_factory=dict)
    extra: dict = field(default_factory=dict)


def _skipped(name, concept, kind, note, instances=()):
    return TaskResult(
        name=name,
        concept=concept,
        kind=kind,
        status="skipped",
        note=note,
        label_counts=dict(Counter(i.label for i in instances)),
        instances=list(instances),
    )


def run_tree_task(
    name: str,
    concept: str,
    instances: list[TaskInstance],
    tree_config: TreeConfig,
    chi2_config: Chi2Config,
    glossary: dict[str, str],
    expected_mode: str,
    label_texts: dict[str, str] | None = None,
    required_label: str | None = None,
    role_names: dict[str, str] | None = None,
    split_seed: int = 0,
    split_ratios: tuple[float, float, float] = (0.8, 0.1, 0.1),
    min_instances: int = 50,
    max_examples: int = 5,
) -> TaskResult:
    if len(instances) < min_instances:
        return _skipped(
            name, concept, "tree",
            f"only {len(instances)} instances extracted (minimum {min_instances})",
            instances,
        )
    split = make_split(len(instances), split_ratios, split_seed)
    train_instances = [instances[i] for i in split.train]
    vocab = build_vocabulary(train_instances)
    X, y = vectorize(instances, vocab)
    tree = fit_tree(X, y, split, tree_config)

    predictions = tree.predict(X[split.test])
    gold = y[split.test]
    baseline_label = most_frequent_baseline(y[split.train])
    test_correct = int(sum(p == g for p, g in zip(predictions, gold)))
    baseline_correct = int(sum(g == baseline_label for g in gold))
    evaluation = TaskEvaluation(
        test_accuracy=accuracy(predictions, gold),
        baseline_accuracy=baseline_correct / max(len(gold), 1),
        baseline_label=baseline_label,
        n_train=len(split.train),
        n_dev=len(split.dev),
        n_test=len(split.test),
        test_correct=test_correct,
        baseline_correct=baseline_correct,
    )

    rules = extract_tree_rules(
        tree, train_instances, vocab, chi2_config,
        expected_mode=expected_mode, required_label=required_label,
    )
    for rule in rules:
        attach_examples(rule, train_instances, max_each=max_examples)
        render_rule(rule, glossary, label_texts, role_names)

    return TaskResult(
        name=name,
        concept=concept,
        kind="tree",
        label_counts=dict(Counter(i.label for i in instances)),
        instances=instances,
        vocab=vocab,
        model=tree,
        split=split,
        evaluation=evaluation,
        rules=rules,
    )


def run_linear_task(
    name: str,
    concept: str,
    instances: list[TaskInstance],
    linear_config: LinearConfig,
    glossary: dict[str, str],
    label_texts: dict[str, str] | None = None,
    role_names: dict[str, str] | None = None,
    split_seed: int = 0,
    split_ratios: tuple[float, float, float] = (0.8, 0.1, 0.1),
    min_instances: int = 50,
    top_k: int = 20,
) -> TaskResult:
    if len(instances) < min_instances:
        return _skipped(
            name, concept, "linear",
            f"only {len(instances)} instances extracted (minimum {min_instances})",
            instances,
        )
    split = make_split(len(instances), split_ratios, split_seed)
    train_instances = [instances[i] for i in split.train]
    train_labels = {inst.label for inst in train_instances}
    if len(train_labels) < 2:
        only = next(iter(train_labels))
        return _skipped(
            name, concept, "linear",
            f"degenerate task: only one class ({only!r}) left in the training split",
            instances,
        )
    vocab = build_vocabulary(train_instances)
    X, y = vectorize(instances, vocab)
    model = fit_linear(X, y, split, linear_config)

    predictions = model.predict(X[split.test])
    gold = y[split.test]
    baseline_label = most_frequent_baseline(y[split.train])
    test_correct = int(sum(p == g for p, g in zip(predictions, gold)))
    baseline_correct = int(sum(g == baseline_label for g in gold))
    evaluation = TaskEvaluation(
        test_accuracy=accuracy(predictions, gold),
        baseline_accuracy=baseline_correct / max(len(gold), 1),
        baseline_label=baseline_label,
        n_train=len(split.train),
        n_dev=len(split.dev),
        n_test=len(split.test),
        test_correct=test_correct,
        baseline_correct=baseline_correct,
    )

    top = extract_linear_rules(model, vocab, k=top_k)
    rendered = {
        cls: [describe_atom(atom_name, True, glossary, role_names) for atom_name, _w in feats]
        for cls, feats in top.items()
    }

    return TaskResult(
        name=name,
        concept=concept,
        kind="linear",
        label_counts=dict(Counter(i.label for i in instances)),
        instances=instances,
        vocab=vocab,
        model=model,
        split=split,
        evaluation=evaluation,
        top_features=top,
        rendered_features=rendered,
    )
