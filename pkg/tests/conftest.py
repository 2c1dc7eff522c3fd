"""Shared fixtures and the acceptance-report hook."""

import numpy as np
import pytest

from irflab.corpus import Passage, PassageCollection, Query, TokenizerConfig
from irflab.index import build_index

_ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def record_acceptance(name: str, ok: bool, detail: str = "") -> None:
    _ACCEPTANCE_RESULTS.append((name, ok, detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _ACCEPTANCE_RESULTS:
        status = "PASS" if ok else "FAIL"
        line = f"{status}  {name}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)


def make_collection(token_lists, prefix="p"):
    """Build a collection from lists of tokens; ids are p000, p001, ..."""
    passages = [
        Passage(
            passage_id=f"{prefix}{i:03d}",
            doc_id=f"d{i:03d}",
            text=" ".join(tokens),
            tokens=tuple(tokens),
        )
        for i, tokens in enumerate(token_lists)
    ]
    return PassageCollection(passages)


def make_query(tokens, qid="q0"):
    return Query(query_id=qid, text=" ".join(tokens), tokens=tuple(tokens))


def random_token_lists(rng, n_passages, vocab_size, min_len=3, max_len=12):
    vocab = [f"t{i}" for i in range(vocab_size)]
    return [
        [vocab[int(j)] for j in rng.integers(0, vocab_size, size=int(rng.integers(min_len, max_len + 1)))]
        for _ in range(n_passages)
    ]


@pytest.fixture
def plain_config():
    return TokenizerConfig.none()


@pytest.fixture
def tiny_index():
    collection = make_collection([["a", "b"], ["a"]])
    return collection, build_index(collection)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
