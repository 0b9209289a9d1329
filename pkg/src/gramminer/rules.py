"""Turn fitted models into statistically filtered, human-readable rules.

A decision-tree leaf becomes a rule candidate whose conditions are the
root-to-leaf path. The leaf's label distribution is tested against an
expected distribution (uniform or the empirical training marginal) with a
Pearson goodness-of-fit test; only significant leaves survive as rules.
Linear models contribute per-class lists of their strongest features.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources

from .features import FeatureVocabulary, TaskInstance, instance_atoms, Provenance
from .learners import DecisionTree, LinearModel


# --- chi-squared survival function via the regularized incomplete gamma ---

_MAX_ITER = 500
_EPS = 1e-14


def _gamma_p_series(s: float, x: float) -> float:
    # lower regularized P(s, x) by power series, valid for x < s + 1
    term = 1.0 / s
    total = term
    a = s
    for _ in range(_MAX_ITER):
        a += 1.0
        term *= x / a
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + s * math.log(x) - math.lgamma(s))

def _gamma_q_contfrac(s: float, x: float) -> float:
    # upper regularized Q(s, x) by Lentz's continued fraction, for x >= s + 1
    tiny = 1e-300
    b = x + 1.0 - s
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER + 1):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h * math.exp(-x + s * math.log(x) - math.lgamma(s))


def regularized_gamma_q(s: float, x: float) -> float:
    """Upper regularized incomplete gamma Q(s, x) = Gamma(s, x) / Gamma(s)."""
    if s <= 0:
        raise ValueError("shape parameter must be positive")
    if x < 0:
        raise ValueError("x must be non-negative")
    if x == 0:
        return 1.0
    if x < s + 1.0:
        return max(0.0, min(1.0, 1.0 - _gamma_p_series(s, x)))
    return max(0.0, min(1.0, _gamma_q_contfrac(s, x)))


def chi2_sf(statistic: float, df: int) -> float:
    """P(X >= statistic) for a chi-squared variable with df degrees of freedom."""
    if df <= 0:
        return 1.0
    return regularized_gamma_q(df / 2.0, statistic / 2.0)


@dataclass(frozen=True)
class Chi2Config:
    alpha: float = 0.05
    expected_mode: str = "empirical"  # or "uniform"
    min_leaf_support: int = 10

    def __post_init__(self):
        if not (0 < self.alpha < 1):
            raise ValueError("alpha must be in (0, 1)")
        if self.expected_mode not in ("uniform", "empirical"):
            raise ValueError(f"unknown expected_mode {self.expected_mode!r}")


@dataclass
class Chi2Result:
    statistic: float
    p_value: float
    verdict: str  # significant | inconclusive
    label: str


def chi2_relabel(
    counts: dict[str, int], expected: dict[str, float], config: Chi2Config
) -> Chi2Result:
    """Pearson goodness-of-fit of observed leaf counts against expected shares.

    statistic = sum((O_i - E_i)^2 / E_i) with E_i = p_i * n and df = k - 1.
    The verdict is significant iff p < alpha and the leaf holds at least
    min_leaf_support rows. Expected probability 0 with a nonzero observed
    count is an ill-posed test and raises.
    """
    n = sum(counts.values())
    if n < 1:
        raise ValueError("counts must sum to at least 1")
    total_p = sum(expected.values())
    if abs(total_p - 1.0) > 1e-9:
        raise ValueError(f"expected probabilities sum to {total_p}, not 1")
    for label in counts:
        if counts[label] and expected.get(label, 0.0) == 0.0:
            raise ValueError(f"label {label!r} observed but expected probability is 0")

    statistic = 0.0
    k = 0
    for label in sorted(expected):
        p = expected[label]
        if p == 0.0:
            continue
        k += 1
        e = p * n
        o = counts.get(label, 0)
        statistic += (o - e) ** 2 / e
    p_value = chi2_sf(statistic, k - 1)
    dominant = min(counts, key=lambda label: (-counts[label], label))
    verdict = (
        "significant"
        if p_value < config.alpha and n >= config.min_leaf_support
        else "inconclusive"
    )
    return Chi2Result(statistic=statistic, p_value=p_value, verdict=verdict, label=dominant)


def uniform_expected(labels) -> dict[str, float]:
    labels = sorted(set(labels))
    return {label: 1.0 / len(labels) for label in labels}


def empirical_expected(labels) -> dict[str, float]:
    labels = list(labels)
    out: dict[str, float] = {}
    for label in labels:
        out[label] = out.get(label, 0.0) + 1.0
    return {label: count / len(labels) for label, count in sorted(out.items())}


# --- rules ---


@dataclass
class GrammarRule:
    """An `if conditions then label` pattern mined from one tree leaf."""

    conditions: list[tuple[str, bool]]
    label: str
    support: dict[str, int]
    statistic: float
    p_value: float
    verdict: str  # significant | inconclusive | default
    examples: list[Provenance] = field(default_factory=list)
    counter_examples: list[Provenance] = field(default_factory=list)
    rendered: str = ""
    flagged: bool = False


def rule_matches(conditions: list[tuple[str, bool]], atoms: frozenset[str]) -> bool:
    return all((name in atoms) == positive for name, positive in conditions)


def extract_tree_rules(
    tree: DecisionTree,
    instances: list[TaskInstance],
    vocab: FeatureVocabulary,
    config: Chi2Config,
    expected_mode: str | None = None,
    required_label: str | None = None,
) -> list[GrammarRule]:
    """One rule candidate per leaf, chi-squared relabeled, plus a default rule.

    ``required_label`` restricts which dominant labels may become rules (leaves
    dominated by any other label are marked inconclusive); used by agreement,
    where only required-agreement leaves are teachable.
    """
    mode = expected_mode or config.expected_mode
    labels = [inst.label for inst in instances]
    expected = uniform_expected(labels) if mode == "uniform" else empirical_expected(labels)

    atom_sets = [instance_atoms(inst.features) for inst in instances]
    leaf_rows: dict[int, list[int]] = {}
    leaves = tree.leaves()
    paths = [
        [(vocab.names[feat], positive) for feat, positive in path] for path, _leaf in leaves
    ]
    for row, atoms in enumerate(atom_sets):
        for leaf_id, conds in enumerate(paths):
            if rule_matches(conds, atoms):
                leaf_rows.setdefault(leaf_id, []).append(row)
                break

    rules: list[GrammarRule] = []
    for leaf_id, conds in enumerate(paths):
        rows = leaf_rows.get(leaf_id, [])
        support: dict[str, int] = {}
        for row in rows:
            support[labels[row]] = support.get(labels[row], 0) + 1
        if not rows:
            rules.append(
                GrammarRule(
                    conditions=conds, label="", support={}, statistic=0.0,
                    p_value=1.0, verdict="inconclusive", flagged=True,
                )
            )
            continue
        result = chi2_relabel(support, expected, config)
        verdict = result.verdict
        if required_label is not None and result.label != required_label:
            verdict = "inconclusive"
        rules.append(
            GrammarRule(
                conditions=conds,
                label=result.label,
                support=support,
                statistic=result.statistic,
                p_value=result.p_value,
                verdict=verdict,
            )
        )

    overall: dict[str, int] = {}
    for label in labels:
        overall[label] = overall.get(label, 0) + 1
    majority = min(overall, key=lambda label: (-overall[label], label))
    rules.append(
        GrammarRule(
            conditions=[], label=majority, support=overall,
            statistic=0.0, p_value=1.0, verdict="default",
        )
    )
    return rules


def significant_rule_count(rules: list[GrammarRule]) -> int:
    return sum(1 for r in rules if r.verdict == "significant")


def extract_linear_rules(
    model: LinearModel, vocab: FeatureVocabulary, k: int = 20
) -> dict[str, list[tuple[str, float]]]:
    """Per class, the k positive-weight features with the largest weights."""
    out: dict[str, list[tuple[str, float]]] = {}
    for ci, cls in enumerate(model.classes):
        row = model.weights[ci]
        ranked = sorted(
            ((vocab.names[j], float(w)) for j, w in enumerate(row) if w > 0),
            key=lambda item: (-item[1], item[0]),
        )
        out[cls] = ranked[:k]
    return out


def attach_examples(
    rule: GrammarRule, instances: list[TaskInstance], max_each: int = 5
) -> GrammarRule:
    """Fill in illustrative examples and counter-examples for a rule.

    Examples satisfy every condition and carry the rule label; counter-examples
    satisfy the conditions but carry a different label. Both lists prefer the
    shortest sentences and are deduplicated by sentence id.
    """
    matching = [
        inst
        for inst in instances
        if rule_matches(rule.conditions, instance_atoms(inst.features))
    ]

    def select(pool):
        picked, seen = [], set()
        for inst in sorted(pool, key=lambda i: (i.provenance.length, i.provenance.ref_id)):
            if inst.provenance.ref_id in seen:
                continue
            seen.add(inst.provenance.ref_id)
            picked.append(inst.provenance)
            if len(picked) == max_each:
                break
        return picked

    rule.examples = select([i for i in matching if i.label == rule.label])
    rule.counter_examples = select([i for i in matching if i.label != rule.label])
    if not rule.examples:
        rule.flagged = True
    return rule


# --- rendering ---


def load_glossary(path: str | None = None) -> dict[str, str]:
    """Feature-atom -> plain-English phrase map; user file overrides defaults."""
    glossary: dict[str, str] = {}
    default = resources.files("gramminer").joinpath("data/glossary.tsv").read_text("utf-8")
    texts = [default]
    if path is not None:
        with open(path, encoding="utf-8") as handle:
            texts.append(handle.read())
    for text in texts:
        for line in text.split("\n"):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) == 2:
                glossary[parts[0]] = parts[1]
    return glossary


_DEFAULT_ROLES = {"dep": "dependent", "head": "head"}


def _negate(clause: str) -> str:
    for verb, negated in (
        (" is ", " is not "),
        (" has ", " does not have "),
        (" contains ", " does not contain "),
        (" carries ", " does not carry "),
    ):
        if verb in clause:
            return clause.replace(verb, negated, 1)
    return f"it is not the case that {clause}"


def _fragment(glossary: dict[str, str], key: str, fallback: str) -> str:
    return glossary.get(key, fallback)


def describe_atom(
    name: str,
    positive: bool,
    glossary: dict[str, str],
    role_names: dict[str, str] | None = None,
) -> str:
    """A readable clause for one condition atom, e.g. 'the dependent is an
    interrogative pronoun'."""
    roles = role_names or _DEFAULT_ROLES
    if name in glossary and name.startswith("sent:"):
        clause = glossary[name]
        return clause if positive else _negate(clause)

    def finish(clause):
        return clause if positive else _negate(clause)

    if name.startswith("sent:"):
        return finish(f"the sentence has {name.split(':', 1)[1]}")

    role_key, _, rest = name.partition(":")
    if role_key in ("dep", "head") and rest:
        who = f"the {roles.get(role_key, role_key)}"
        if rest.startswith("codep:rel="):
            phrase = _fragment(glossary, "rel=" + rest.split("=", 1)[1], rest.split("=", 1)[1])
            return finish(f"{who} has another dependent that is {phrase}")
        if rest.startswith("codep:pos="):
            phrase = _fragment(glossary, "pos=" + rest.split("=", 1)[1], rest.split("=", 1)[1])
            return finish(f"{who} has another dependent that is {phrase}")
        if rest.startswith("prev:pos="):
            phrase = _fragment(glossary, "pos=" + rest.split("=", 1)[1], rest.split("=", 1)[1])
            return finish(f"the word right before {who} is {phrase}")
        if rest.startswith("next:pos="):
            phrase = _fragment(glossary, "pos=" + rest.split("=", 1)[1], rest.split("=", 1)[1])
            return finish(f"the word right after {who} is {phrase}")
        if rest.startswith("lemma="):
            lemma = rest.split("=", 1)[1]
            if lemma == "OOV":
                return finish(f"{who} has an infrequent lemma")
            return finish(f"{who} has the lemma '{lemma}'")
        if rest.startswith("pos="):
            phrase = _fragment(glossary, rest, rest.split("=", 1)[1])
            return finish(f"{who} is {phrase}")
        if "=" in rest:
            attr_val = rest
            phrase = glossary.get(attr_val)
            if phrase is None:
                attr, val = attr_val.split("=", 1)
                return finish(f"{who} has {attr} = {val}")
            if phrase.startswith(("a ", "an ")):
                return finish(f"{who} is {phrase}")
            return finish(f"{who} has {phrase}")

    if name.startswith("rel="):
        phrase = _fragment(glossary, name, name.split("=", 1)[1])
        dep = f"the {roles.get('dep', 'dependent')}"
        return finish(f"{dep} is {phrase}")

    if name.startswith("l1:nb:lemma="):
        return finish(f"the English sentence contains '{name.split('=', 1)[1]}'")
    if name.startswith("l1:nb:pos="):
        phrase = _fragment(glossary, "pos=" + name.split("=", 1)[1], name.split("=", 1)[1])
        return finish(f"a nearby English word is {phrase}")
    if name.startswith("l1:pos="):
        phrase = _fragment(glossary, "pos=" + name.split("=", 1)[1], name.split("=", 1)[1])
        return finish(f"the English word is {phrase}")
    if name.startswith("l1:sense="):
        return finish(f"the English word means a kind of '{name.split('=', 1)[1]}'")
    if name.startswith("l2:ctx:"):
        attr_val = name.split(":", 2)[2]
        phrase = glossary.get(attr_val)
        if phrase is None:
            return finish(f"the target sentence has {attr_val}")
        return finish(f"the target sentence has {phrase}")

    return finish(glossary.get(name, name))


def render_rule(
    rule: GrammarRule,
    glossary: dict[str, str],
    label_texts: dict[str, str] | None = None,
    role_names: dict[str, str] | None = None,
) -> str:
    """Fill the human-readable template for one rule and store it on the rule."""
    n = sum(rule.support.values())
    hits = rule.support.get(rule.label, 0)
    pct = 100.0 * hits / n if n else 0.0
    exceptions = n - hits
    label_phrase = (label_texts or {}).get(rule.label, rule.label)
    if rule.conditions:
        conds = " and ".join(
            describe_atom(name, positive, glossary, role_names)
            for name, positive in rule.conditions
        )
        text = f"If {conds}, then {label_phrase} ({pct:.1f}% of {n} cases). Exceptions: {exceptions}."
    else:
        text = f"In general, {label_phrase} ({pct:.1f}% of {n} cases). Exceptions: {exceptions}."
    rule.rendered = text
    return text
