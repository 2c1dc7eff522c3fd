"""Passage collections, tokenization, document segmentation, and judgments.

File formats:
  corpus   JSON-lines, one object per line: {"id": ..., "doc_id": ..., "text": ...}
  queries  tab-separated "qid<TAB>text"
  qrels    TREC four-column "qid 0 pid grade"
All files UTF-8.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .stopwords import DEFAULT_STOPWORDS

logger = logging.getLogger(__name__)

_WORD_RE = re.compile(r"[a-z0-9]+")
_SENTENCE_SPLIT_RE = re.compile(r"(?<=[.?!])\s+")

STEMMERS = ("none", "s", "porter")


def _s_stem(word: str) -> str:
    """Suffix-S stemmer: strip plural s/es/ies with the usual guards."""
    if len(word) > 3 and word.endswith("ies") and not word.endswith(("eies", "aies")):
        return word[:-3] + "y"
    if len(word) > 3 and word.endswith("es") and not word.endswith(("aes", "ees", "oes")):
        return word[:-1]
    if len(word) > 2 and word.endswith("s") and not word.endswith(("us", "ss")):
        return word[:-1]
    return word


_PORTER_SUFFIXES = (
    ("ational", "ate"), ("tional", "tion"), ("ization", "ize"), ("iveness", "ive"),
    ("fulness", "ful"), ("ousness", "ous"), ("ation", "ate"), ("icate", "ic"),
    ("ative", ""), ("alize", "al"), ("ical", "ic"), ("ment", ""), ("ness", ""),
    ("ful", ""),
)


def _porter_stem(word: str) -> str:
    """Lightweight porter-style suffix reduction (plurals, -ed/-ing, common
    derivational endings). Not a full Porter implementation."""
    if len(word) < 3:
        return word
    word = _s_stem(word)
    if word.endswith("eed"):
        if len(word) > 4:
            word = word[:-1]
    elif word.endswith("ed") and any(c in "aeiou" for c in word[:-2]):
        word = word[:-2]
    elif word.endswith("ing") and any(c in "aeiou" for c in word[:-3]):
        word = word[:-3]
    for suffix, repl in _PORTER_SUFFIXES:
        if word.endswith(suffix) and len(word) > len(suffix) + 2:
            word = word[: -len(suffix)] + repl
            break
    return word


@dataclass(frozen=True)
class TokenizerConfig:
    """Deterministic text-to-token pipeline configuration.

    Lowercasing is always applied; ``stemming`` is one of "none", "s",
    "porter".
    """

    stopwords: frozenset[str] = DEFAULT_STOPWORDS
    stemming: str = "s"
    lowercase: bool = True

    def __post_init__(self):
        if self.stemming not in STEMMERS:
            raise ValueError(f"unknown stemming mode {self.stemming!r}; expected one of {STEMMERS}")
        if not self.lowercase:
            raise ValueError("lowercasing is always applied; lowercase=False is not supported")
        object.__setattr__(self, "stopwords", frozenset(self.stopwords))

    @classmethod
    def none(cls) -> "TokenizerConfig":
        """No stopping, no stemming: token extraction only."""
        return cls(stopwords=frozenset(), stemming="none")

    @classmethod
    def embedding(cls) -> "TokenizerConfig":
        """Embedding-corpus preprocessing: stopwords removed, no stemming."""
        return cls(stopwords=DEFAULT_STOPWORDS, stemming="none")


def tokenize(text: str, config: TokenizerConfig) -> list[str]:
    """Lowercase, extract word tokens, drop stopwords, stem."""
    tokens = _WORD_RE.findall(text.lower())
    if config.stopwords:
        tokens = [t for t in tokens if t not in config.stopwords]
    if config.stemming == "s":
        tokens = [_s_stem(t) for t in tokens]
    elif config.stemming == "porter":
        tokens = [_porter_stem(t) for t in tokens]
    return tokens


@dataclass(frozen=True)
class Passage:
    """A retrieval unit: one answer passage from a parent document."""

    passage_id: str
    doc_id: str
    text: str
    tokens: tuple[str, ...] = ()


@dataclass(frozen=True)
class Query:
    query_id: str
    text: str
    tokens: tuple[str, ...] = ()


class PassageCollection:
    """Immutable, id-addressable set of passages."""

    def __init__(self, passages: Iterable[Passage]):
        self._passages = tuple(passages)
        self._by_id: dict[str, Passage] = {}
        for p in self._passages:
            if p.passage_id in self._by_id:
                raise ValueError(f"duplicate passage_id {p.passage_id!r}")
            self._by_id[p.passage_id] = p

    def __len__(self) -> int:
        return len(self._passages)

    def __iter__(self) -> Iterator[Passage]:
        return iter(self._passages)

    def __contains__(self, passage_id: str) -> bool:
        return passage_id in self._by_id

    def __getitem__(self, passage_id: str) -> Passage:
        return self._by_id[passage_id]

    @property
    def passages(self) -> tuple[Passage, ...]:
        return self._passages

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(p.passage_id for p in self._passages)

    @property
    def vocabulary(self) -> frozenset[str]:
        vocab: set[str] = set()
        for p in self._passages:
            vocab.update(p.tokens)
        return frozenset(vocab)


@dataclass
class Judgments:
    """Relevance grades keyed by (query_id, passage_id); grade > 0 means relevant."""

    data: dict[str, dict[str, int]] = field(default_factory=dict)

    def grade(self, query_id: str, passage_id: str) -> int | None:
        return self.data.get(query_id, {}).get(passage_id)

    def is_relevant(self, query_id: str, passage_id: str) -> bool:
        return self.data.get(query_id, {}).get(passage_id, 0) > 0

    def relevant_ids(self, query_id: str) -> frozenset[str]:
        return frozenset(p for p, g in self.data.get(query_id, {}).items() if g > 0)

    def query_ids(self) -> tuple[str, ...]:
        return tuple(self.data)

    def add(self, query_id: str, passage_id: str, grade: int) -> None:
        if grade < 0:
            raise ValueError(f"negative grade {grade} for ({query_id}, {passage_id})")
        self.data.setdefault(query_id, {})[passage_id] = grade


def ingest_corpus(path, config: TokenizerConfig) -> PassageCollection:
    """Read a JSON-lines corpus file, tokenizing each passage."""
    passages = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}: line {lineno}: invalid JSON ({exc})") from exc
            for key in ("id", "doc_id", "text"):
                if key not in obj:
                    raise ValueError(f"{path}: line {lineno}: missing field {key!r}")
            pid = str(obj["id"])
            if pid in seen:
                raise ValueError(f"{path}: line {lineno}: duplicate passage id {pid!r}")
            if not pid or any(c.isspace() for c in pid):
                # whitespace would corrupt the qrels and run-file formats
                raise ValueError(f"{path}: line {lineno}: passage id {pid!r} must be non-empty and whitespace-free")
            seen.add(pid)
            passages.append(
                Passage(
                    passage_id=pid,
                    doc_id=str(obj["doc_id"]),
                    text=obj["text"],
                    tokens=tuple(tokenize(obj["text"], config)),
                )
            )
    return PassageCollection(passages)


def write_corpus(path, collection: PassageCollection) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in collection:
            fh.write(json.dumps({"id": p.passage_id, "doc_id": p.doc_id, "text": p.text}) + "\n")


def split_sentences(text: str) -> list[str]:
    """Terminal-punctuation sentence split; abbreviations are not special-cased."""
    parts = [s.strip() for s in _SENTENCE_SPLIT_RE.split(text)]
    return [s for s in parts if s]


def segment_document(
    doc_text: str,
    seed: int,
    doc_id: str = "d0",
    config: TokenizerConfig | None = None,
) -> list[Passage]:
    """Cut a document into contiguous non-overlapping windows of 2 or 3
    sentences (uniformly chosen per window, seeded); a shorter final window
    takes whatever remains."""
    sentences = split_sentences(doc_text)
    if not sentences:
        return []
    rng = np.random.default_rng(seed)
    passages = []
    pos = 0
    while pos < len(sentences):
        width = 2 if rng.random() < 0.5 else 3
        chunk = sentences[pos : pos + width]
        pos += width
        text = " ".join(chunk)
        pid = f"{doc_id}.{len(passages):03d}"
        tokens = tuple(tokenize(text, config)) if config is not None else ()
        passages.append(Passage(passage_id=pid, doc_id=doc_id, text=text, tokens=tokens))
    return passages


def load_qrels(path) -> Judgments:
    """Read TREC four-column qrels; repeated (qid, pid) keeps the last grade."""
    judgments = Judgments()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            fields = line.split()
            if len(fields) != 4:
                raise ValueError(f"{path}: line {lineno}: expected 4 fields, got {len(fields)}")
            qid, _, pid, grade_str = fields
            try:
                grade = int(grade_str)
            except ValueError as exc:
                raise ValueError(f"{path}: line {lineno}: non-integer grade {grade_str!r}") from exc
            if grade < 0:
                raise ValueError(f"{path}: line {lineno}: negative grade {grade}")
            if judgments.grade(qid, pid) is not None:
                logger.warning("%s: line %d: repeated judgment for (%s, %s); keeping last", path, lineno, qid, pid)
            judgments.add(qid, pid, grade)
    return judgments


def write_qrels(path, judgments: Judgments) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for qid in judgments.data:
            for pid, grade in judgments.data[qid].items():
                fh.write(f"{qid} 0 {pid} {grade}\n")


def load_queries(path, config: TokenizerConfig) -> list[Query]:
    """Read tab-separated queries and tokenize them."""
    queries = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            if "\t" not in line:
                raise ValueError(f"{path}: line {lineno}: expected 'qid<TAB>text'")
            qid, text = line.split("\t", 1)
            tokens = tuple(tokenize(text, config))
            if not tokens:
                logger.warning("%s: line %d: query %s has no tokens after preprocessing", path, lineno, qid)
            queries.append(Query(query_id=qid, text=text, tokens=tokens))
    return queries


def write_queries(path, queries: Sequence[Query]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for q in queries:
            fh.write(f"{q.query_id}\t{q.text}\n")
