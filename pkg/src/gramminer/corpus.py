"""Readers for CoNLL-U treebanks, word alignments, and lexical resources.

All parsers are pure functions over strings; parsed objects are treated as
immutable once ingestion finishes and can be shared freely across threads.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field

logger = logging.getLogger(__name__)


class CorpusError(ValueError):
    """Base class for ingestion failures."""


class ConlluError(CorpusError):
    """Malformed CoNLL-U input; carries the offending 1-based line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class AlignmentError(CorpusError):
    """Malformed or out-of-bounds word alignment."""


class TaxonomyError(CorpusError):
    """Malformed taxonomy export (bad rows, dangling senses, or cycles)."""


@dataclass
class Token:
    """One syntactic word.

    ``index`` is the 1-based position within its sentence; ``head`` is the
    0-based list position of the governing token, or None for the root.
    """

    index: int
    form: str
    lemma: str
    upos: str
    feats: dict[str, str] = field(default_factory=dict)
    head: int | None = None
    deprel: str = ""
    translit: str | None = None


@dataclass
class Sentence:
    sent_id: str
    tokens: list[Token]
    text: str | None = None
    translation: str | None = None

    def __len__(self):
        return len(self.tokens)


@dataclass
class IngestionStats:
    sentences: int = 0
    tokens: int = 0
    multiword_skipped: int = 0
    empty_skipped: int = 0

    def as_dict(self):
        return {
            "sentences": self.sentences,
            "tokens": self.tokens,
            "multiword_skipped": self.multiword_skipped,
            "empty_skipped": self.empty_skipped,
        }


@dataclass
class Corpus:
    sentences: list[Sentence]
    language: str = ""
    stats: IngestionStats = field(default_factory=IngestionStats, compare=False)

    def __len__(self):
        return len(self.sentences)

    def by_id(self, sent_id: str) -> Sentence:
        index = getattr(self, "_index", None)
        if index is None:
            index = {s.sent_id: s for s in self.sentences}
            object.__setattr__(self, "_index", index)
        return index[sent_id]


def _parse_feats(raw: str, line: int) -> dict[str, str]:
    if raw == "_" or raw == "":
        return {}
    feats: dict[str, str] = {}
    for item in raw.split("|"):
        if "=" not in item:
            raise ConlluError(f"feature without '=': {item!r}", line)
        key, value = item.split("=", 1)
        if key in feats:
            raise ConlluError(f"duplicate feature key {key!r}", line)
        feats[key] = value
    return feats


def _parse_misc(raw: str) -> dict[str, str]:
    misc: dict[str, str] = {}
    if raw in ("_", ""):
        return misc
    for item in raw.split("|"):
        if "=" in item:
            key, value = item.split("=", 1)
            misc[key] = value
    return misc


def parse_conllu(text: str, language: str = "") -> Corpus:
    """Parse CoNLL-U text into a Corpus.

    Multiword-token ranges and empty nodes are skipped and counted in the
    corpus stats. A '_' in LEMMA/UPOS/FEATS/DEPREL is read as absent.
    Raises ConlluError (with the line number) on malformed rows, duplicate
    or non-consecutive token ids, and unresolvable heads.
    """
    stats = IngestionStats()
    sentences: list[Sentence] = []
    seen_ids: set[str] = set()

    cur_tokens: list[Token] = []
    cur_heads: list[tuple[int, int]] = []  # (raw 1-based head, line) pending validation
    cur_meta: dict[str, str] = {}
    block_start: int | None = None

    def flush(end_line: int):
        nonlocal cur_tokens, cur_heads, cur_meta, block_start
        if not cur_tokens and not cur_meta:
            return
        if not cur_tokens:
            raise ConlluError("sentence block with no token lines", end_line)
        n = len(cur_tokens)
        for pos, token in enumerate(cur_tokens):
            if token.index != pos + 1:
                raise ConlluError(
                    f"token ids not consecutive: expected {pos + 1}, got {token.index}",
                    cur_heads[pos][1],
                )
        for pos, (raw_head, line) in enumerate(cur_heads):
            if raw_head == 0:
                cur_tokens[pos].head = None
            elif 1 <= raw_head <= n and raw_head != pos + 1:
                cur_tokens[pos].head = raw_head - 1
            else:
                raise ConlluError(f"head {raw_head} unresolvable in a {n}-token sentence", line)
        sent_id = cur_meta.get("sent_id", f"s{len(sentences) + 1}")
        if sent_id in seen_ids:
            raise ConlluError(f"duplicate sentence id {sent_id!r}", end_line)
        seen_ids.add(sent_id)
        sentences.append(
            Sentence(
                sent_id=sent_id,
                tokens=cur_tokens,
                text=cur_meta.get("text"),
                translation=cur_meta.get("text_en"),
            )
        )
        stats.sentences += 1
        stats.tokens += n
        cur_tokens, cur_heads, cur_meta, block_start = [], [], {}, None

    lines = text.split("\n")
    for lineno, line in enumerate(lines, 1):
        if line.strip() == "":
            flush(lineno)
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, value = body.split("=", 1)
                cur_meta[key.strip()] = value.strip()
            continue
        fields = line.split("\t")
        if len(fields) != 10:
            raise ConlluError(f"expected 10 columns, got {len(fields)}", lineno)
        ident = fields[0]
        if "-" in ident:
            stats.multiword_skipped += 1
            continue
        if "." in ident:
            stats.empty_skipped += 1
            continue
        try:
            index = int(ident)
        except ValueError:
            raise ConlluError(f"unparsable token id {ident!r}", lineno) from None
        if index < 1:
            raise ConlluError(f"token id must be >= 1, got {index}", lineno)
        if any(t.index == index for t in cur_tokens):
            raise ConlluError(f"duplicate token id {index}", lineno)
        head_raw = fields[6]
        if head_raw == "_":
            head = 0
        else:
            try:
                head = int(head_raw)
            except ValueError:
                raise ConlluError(f"unparsable head {head_raw!r}", lineno) from None
        misc = _parse_misc(fields[9])
        token = Token(
            index=index,
            form=fields[1],
            lemma="" if fields[2] == "_" else fields[2],
            upos="" if fields[3] == "_" else fields[3],
            feats=_parse_feats(fields[5], lineno),
            head=None,
            deprel="" if fields[7] == "_" else fields[7],
            translit=misc.get("Translit"),
        )
        if block_start is None:
            block_start = lineno
        cur_tokens.append(token)
        cur_heads.append((head, lineno))
    flush(len(lines))
    return Corpus(sentences=sentences, language=language, stats=stats)


def corpus_to_conllu(corpus: Corpus) -> str:
    """Serialize a Corpus back to CoNLL-U (inverse of parse_conllu)."""
    blocks = []
    for sentence in corpus.sentences:
        lines = [f"# sent_id = {sentence.sent_id}"]
        if sentence.text is not None:
            lines.append(f"# text = {sentence.text}")
        if sentence.translation is not None:
            lines.append(f"# text_en = {sentence.translation}")
        for pos, token in enumerate(sentence.tokens):
            feats = (
                "|".join(f"{k}={v}" for k, v in sorted(token.feats.items(), key=lambda kv: kv[0].lower()))
                or "_"
            )
            head = 0 if token.head is None else token.head + 1
            misc = f"Translit={token.translit}" if token.translit else "_"
            lines.append(
                "\t".join(
                    [
                        str(pos + 1),
                        token.form,
                        token.lemma or "_",
                        token.upos or "_",
                        "_",
                        feats,
                        str(head),
                        token.deprel or "_",
                        "_",
                        misc,
                    ]
                )
            )
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + ("\n" if blocks else "")


@dataclass
class ParallelPair:
    """A source/target sentence pair with token-level alignment links."""

    pair_id: str
    source: Sentence
    target: Sentence
    alignment: set[tuple[int, int]] = field(default_factory=set)

    @property
    def source_tokens(self) -> list[Token]:
        return self.source.tokens

    @property
    def target_tokens(self) -> list[Token]:
        return self.target.tokens


def parse_alignments(text: str, pairs: list[tuple[Sentence, Sentence]]) -> list[ParallelPair]:
    """Attach Pharaoh-format alignment lines ("i-j i-j ...") to sentence pairs.

    One line per pair; indices are 0-based token positions. Out-of-bounds
    indices raise AlignmentError naming the pair.
    """
    lines = text.split("\n")
    while lines and lines[-1] == "":
        lines.pop()
    if len(lines) != len(pairs):
        raise AlignmentError(
            f"{len(lines)} alignment lines for {len(pairs)} sentence pairs"
        )
    result = []
    for i, (line, (source, target)) in enumerate(zip(lines, pairs)):
        pair_id = f"pair{i}"
        links: set[tuple[int, int]] = set()
        for item in line.split():
            parts = item.split("-")
            if len(parts) != 2:
                raise AlignmentError(f"{pair_id}: malformed link {item!r}")
            try:
                si, ti = int(parts[0]), int(parts[1])
            except ValueError:
                raise AlignmentError(f"{pair_id}: malformed link {item!r}") from None
            if not (0 <= si < len(source.tokens)):
                raise AlignmentError(
                    f"{pair_id}: source index {si} out of bounds for {len(source.tokens)} tokens"
                )
            if not (0 <= ti < len(target.tokens)):
                raise AlignmentError(
                    f"{pair_id}: target index {ti} out of bounds for {len(target.tokens)} tokens"
                )
            links.add((si, ti))
        result.append(ParallelPair(pair_id=pair_id, source=source, target=target, alignment=links))
    return result


def build_parallel_pairs(source_corpus: Corpus, target_corpus: Corpus, alignment_text: str) -> list[ParallelPair]:
    """Zip two parsed corpora sentence-by-sentence and attach alignments."""
    if len(source_corpus.sentences) != len(target_corpus.sentences):
        raise AlignmentError(
            f"source corpus has {len(source_corpus.sentences)} sentences, "
            f"target has {len(target_corpus.sentences)}"
        )
    pairs = list(zip(source_corpus.sentences, target_corpus.sentences))
    return parse_alignments(alignment_text, pairs)


@dataclass
class TaxonomyResource:
    """Hypernym graph plus synonym/antonym lookups over sense ids."""

    hypernym_edges: dict[str, tuple[str, ...]]
    sense_lemmas: dict[str, frozenset[str]]
    antonym_pairs: set[frozenset[str]] = field(default_factory=set)
    _ancestor_cache: dict[str, frozenset[str]] = field(
        default_factory=dict, repr=False, compare=False
    )

    def ancestors(self, sense: str) -> frozenset[str]:
        """All transitive hypernyms of a sense (excluding the sense itself)."""
        cached = self._ancestor_cache.get(sense)
        if cached is not None:
            return cached
        found: set[str] = set()
        stack = list(self.hypernym_edges.get(sense, ()))
        while stack:
            parent = stack.pop()
            if parent not in found:
                found.add(parent)
                stack.extend(self.hypernym_edges.get(parent, ()))
        result = frozenset(found)
        self._ancestor_cache[sense] = result
        return result

    def synonym_lemmas(self, sense: str) -> frozenset[str]:
        return self.sense_lemmas.get(sense, frozenset())

    def antonym_senses(self, sense: str) -> set[str]:
        out = set()
        for pair in self.antonym_pairs:
            if sense in pair:
                out.update(pair - {sense})
        return out


def _check_acyclic(edges: dict[str, tuple[str, ...]]):
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {s: WHITE for s in edges}
    for start in sorted(edges):
        if color[start] != WHITE:
            continue
        stack = [(start, iter(edges.get(start, ())))]
        color[start] = GRAY
        path = [start]
        while stack:
            node, children = stack[-1]
            advanced = False
            for child in children:
                state = color.get(child, WHITE)
                if state == GRAY:
                    cycle = path[path.index(child):] + [child]
                    raise TaxonomyError("hypernym cycle: " + " -> ".join(cycle))
                if state == WHITE:
                    color[child] = GRAY
                    path.append(child)
                    stack.append((child, iter(edges.get(child, ()))))
                    advanced = True
                    break
            if not advanced:
                color[node] = BLACK
                path.pop()
                stack.pop()


def _rows(text: str, n_cols: int, what: str):
    for lineno, line in enumerate(text.split("\n"), 1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.rstrip("\n").split("\t")
        if len(parts) != n_cols:
            raise TaxonomyError(f"{what} line {lineno}: expected {n_cols} columns, got {len(parts)}")
        yield lineno, parts


def parse_taxonomy(hypernyms_text: str = "", senses_text: str = "", antonyms_text: str = "") -> TaxonomyResource:
    """Load hypernym edges, sense-lemma membership, and antonym pairs.

    Rejects hypernym cycles and any sense id that appears in the edge or
    antonym files without a senses.tsv entry.
    """
    sense_lemmas: dict[str, set[str]] = {}
    for _, (sense, lemma) in _rows(senses_text, 2, "senses"):
        sense_lemmas.setdefault(sense, set()).add(lemma)

    edges: dict[str, list[str]] = {}
    for lineno, (child, parent) in _rows(hypernyms_text, 2, "hypernyms"):
        for sense in (child, parent):
            if sense not in sense_lemmas:
                raise TaxonomyError(f"hypernyms line {lineno}: unknown sense {sense!r}")
        parents = edges.setdefault(child, [])
        if parent not in parents:
            parents.append(parent)

    antonyms: set[frozenset[str]] = set()
    for lineno, (a, b) in _rows(antonyms_text, 2, "antonyms"):
        for sense in (a, b):
            if sense not in sense_lemmas:
                raise TaxonomyError(f"antonyms line {lineno}: unknown sense {sense!r}")
        if a == b:
            raise TaxonomyError(f"antonyms line {lineno}: sense paired with itself")
        antonyms.add(frozenset((a, b)))

    frozen_edges = {child: tuple(parents) for child, parents in edges.items()}
    _check_acyclic(frozen_edges)
    return TaxonomyResource(
        hypernym_edges=frozen_edges,
        sense_lemmas={s: frozenset(l) for s, l in sense_lemmas.items()},
        antonym_pairs=antonyms,
    )


def parse_senses(text: str, taxonomy: TaxonomyResource) -> dict[tuple[str, int], str]:
    """Load per-token sense annotations: pair-id<TAB>token-index<TAB>sense-id.

    Token indices are 0-based source-side positions (same convention as the
    alignment links). Rows naming a sense absent from the taxonomy are
    skipped with a warning.
    """
    annotations: dict[tuple[str, int], str] = {}
    skipped = 0
    for lineno, (pair_id, idx_raw, sense) in _rows(text, 3, "senses annotation"):
        try:
            idx = int(idx_raw)
        except ValueError:
            raise TaxonomyError(f"senses annotation line {lineno}: bad token index {idx_raw!r}") from None
        if sense not in taxonomy.sense_lemmas:
            skipped += 1
            logger.warning("senses annotation line %d: unknown sense %r skipped", lineno, sense)
            continue
        annotations[(pair_id, idx)] = sense
    if skipped:
        logger.warning("skipped %d sense annotations with unknown senses", skipped)
    return annotations


def parse_transliterations(text: str) -> dict[tuple[str, int], str]:
    """Load a transliteration sidecar: sentence-id<TAB>token-index<TAB>romanization.

    Token indices are the 1-based CoNLL-U ids.
    """
    out: dict[tuple[str, int], str] = {}
    for lineno, (sent_id, idx_raw, roman) in _rows(text, 3, "transliteration"):
        try:
            idx = int(idx_raw)
        except ValueError:
            raise CorpusError(f"transliteration line {lineno}: bad token index {idx_raw!r}") from None
        out[(sent_id, idx)] = roman
    return out


def apply_transliterations(corpus: Corpus, mapping: dict[tuple[str, int], str]) -> int:
    """Attach sidecar romanizations to corpus tokens; returns the count applied."""
    applied = 0
    ids = {s.sent_id for s in corpus.sentences}
    missing = Counter(sid for (sid, _idx) in mapping if sid not in ids)
    if missing:
        logger.warning("transliterations reference %d unknown sentence ids", len(missing))
    for sentence in corpus.sentences:
        for token in sentence.tokens:
            roman = mapping.get((sentence.sent_id, token.index))
            if roman is not None:
                token.translit = roman
                applied += 1
    return applied


def sentence_translit(sentence: Sentence) -> str | None:
    """Whole-sentence romanization when every token carries one."""
    if sentence.tokens and all(t.translit for t in sentence.tokens):
        return " ".join(t.translit for t in sentence.tokens)
    parts = [t.translit for t in sentence.tokens if t.translit]
    if parts:
        return " ".join(parts)
    return None
