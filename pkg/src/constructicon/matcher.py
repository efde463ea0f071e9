"""Match a grammar against encoded corpora; frequency and productivity profiles.

A construction matches at position i when every slot j is satisfied by token
i+j: LEX compares word-forms, SYN compares universal POS tags, SEM compares
cluster indices (an OOV token satisfies no semantic constraint). All
(construction, start) pairs are reported; overlapping and nested matches all
count.

The scan shares work across constructions with a prefix trie over the
tri-level alphabet: children are keyed by (level, value) and a sentence
position advances a frontier of trie nodes by offering each token's fillers.
Distinct nodes have distinct subtrees, so no match is reported twice. The
result is exactly the naive per-construction sliding window, computed in one
pass per start position.
"""

from __future__ import annotations

import json
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Iterator

from .association import token_fillers
from .errors import ParseError

if TYPE_CHECKING:
    from .induction import Construction, Grammar
    from .corpus import EncodedCorpus, Sentence


@dataclass(frozen=True, slots=True)
class Match:
    construction_id: int
    sentence: int
    start: int
    length: int
    realization: str


@dataclass(frozen=True, slots=True)
class ProfileEntry:
    token_count: int
    tokens_per_million: float
    type_count: int


@dataclass(frozen=True)
class FrequencyProfile:
    label: str
    word_count: int
    entries: dict[int, ProfileEntry]


class _TrieNode:
    __slots__ = ("children", "outputs")

    def __init__(self) -> None:
        self.children: dict = {}
        self.outputs: list[tuple[int, int]] = []


class ConstructionTrie:
    """Shared-prefix automaton over slot-constraint sequences."""

    def __init__(self, constructions: Iterable[Construction]) -> None:
        self.root = _TrieNode()
        for construction in constructions:
            node = self.root
            for slot in construction.slots:
                child = node.children.get(slot)
                if child is None:
                    child = _TrieNode()
                    node.children[slot] = child
                node = child
            node.outputs.append((construction.id, len(construction.slots)))

    def scan(self, fillers: list[tuple]) -> list[tuple[int, int, int]]:
        """All (construction_id, start, length) over one sentence's fillers."""
        found: list[tuple[int, int, int]] = []
        n = len(fillers)
        root = self.root
        for i in range(n):
            frontier = [root]
            j = i
            while frontier and j < n:
                keys = fillers[j]
                advanced: list[_TrieNode] = []
                for node in frontier:
                    children = node.children
                    for key in keys:
                        child = children.get(key)
                        if child is not None:
                            advanced.append(child)
                            for cid, length in child.outputs:
                                found.append((cid, i, length))
                frontier = advanced
                j += 1
        return found


def _sentence_fillers(sentence: Sentence) -> list[tuple]:
    return [token_fillers(t) for t in sentence.tokens]


def _realize(sentence: Sentence, start: int, length: int) -> str:
    return " ".join(t.form for t in sentence.tokens[start:start + length])


def match_sentence(grammar: Grammar, sentence: Sentence, sentence_index: int = 0) -> list[Match]:
    """All matches of the grammar in one sentence, in (start, id) order.

    Builds a fresh trie per call; use :func:`iter_matches` or
    :func:`profile_corpus` to amortize over a corpus.
    """
    trie = ConstructionTrie(grammar.constructions)
    hits = trie.scan(_sentence_fillers(sentence))
    hits.sort(key=lambda h: (h[1], h[0]))
    return [
        Match(cid, sentence_index, start, length, _realize(sentence, start, length))
        for cid, start, length in hits
    ]


def iter_matches(grammar: Grammar, corpus: EncodedCorpus,
                 threads: int = 1) -> Iterator[Match]:
    """Stream matches over a whole corpus in sentence order."""
    trie = ConstructionTrie(grammar.constructions)

    def scan_one(pair: tuple[int, Sentence]) -> list[Match]:
        index, sentence = pair
        hits = trie.scan(_sentence_fillers(sentence))
        hits.sort(key=lambda h: (h[1], h[0]))
        return [
            Match(cid, index, start, length, _realize(sentence, start, length))
            for cid, start, length in hits
        ]

    items = enumerate(corpus.sentences)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for batch in pool.map(scan_one, items, chunksize=64):
                yield from batch
    else:
        for pair in items:
            yield from scan_one(pair)


def profile_corpus(grammar: Grammar, corpus: EncodedCorpus,
                   label: str | None = None, threads: int = 1) -> FrequencyProfile:
    """Per-construction token frequency and type productivity for one corpus.

    Constructions with no matches appear with zero counts. Token counts use
    per-occurrence semantics; type counts are distinct realization strings.
    """
    token_counts: Counter = Counter()
    types: dict[int, set[str]] = {}
    for match in iter_matches(grammar, corpus, threads=threads):
        token_counts[match.construction_id] += 1
        types.setdefault(match.construction_id, set()).add(match.realization)
    word_count = corpus.word_count
    scale = 1e6 / word_count if word_count else 0.0
    entries = {}
    for construction in grammar.constructions:
        tc = token_counts.get(construction.id, 0)
        entries[construction.id] = ProfileEntry(
            token_count=tc,
            tokens_per_million=tc * scale,
            type_count=len(types.get(construction.id, ())),
        )
    if label is None:
        label = corpus.register_tag or "corpus"
    return FrequencyProfile(label, word_count, entries)


def realizations(grammar: Grammar, corpus: EncodedCorpus,
                 construction_id: int) -> list[tuple[str, int]]:
    """Distinct matched strings with counts, sorted by count desc then text."""
    if all(c.id != construction_id for c in grammar.constructions):
        raise ValueError(f"unknown construction id {construction_id}")
    counts: Counter = Counter()
    for match in iter_matches(grammar, corpus):
        if match.construction_id == construction_id:
            counts[match.realization] += 1
    return sorted(counts.items(), key=lambda item: (-item[1], item[0]))


def write_match_stream(matches: Iterable[Match], path: str | Path) -> None:
    """JSONL match stream: one ``{"cid", "sent", "start", "text"}`` per line."""
    with open(path, "w", encoding="utf-8") as handle:
        for match in matches:
            handle.write(json.dumps({
                "cid": match.construction_id,
                "sent": match.sentence,
                "start": match.start,
                "text": match.realization,
            }, ensure_ascii=False) + "\n")


def write_profile(profile: FrequencyProfile, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(f"# corpus={profile.label}\tword_count={profile.word_count}\n")
        handle.write("cid\ttokens\ttokens_per_million\ttypes\n")
        for cid in sorted(profile.entries):
            entry = profile.entries[cid]
            handle.write(f"{cid}\t{entry.token_count}\t{entry.tokens_per_million}"
                         f"\t{entry.type_count}\n")


def read_profile(path: str | Path) -> FrequencyProfile:
    path = Path(path)
    label = path.stem.removesuffix(".profile")
    word_count = 0
    entries: dict[int, ProfileEntry] = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            if line.startswith("#"):
                for part in line[1:].split("\t"):
                    key, _, value = part.strip().partition("=")
                    if key == "corpus" and value:
                        label = value
                    elif key == "word_count" and value:
                        word_count = int(value)
                continue
            if line.startswith("cid\t"):
                continue
            fields = line.split("\t")
            if len(fields) != 4:
                raise ParseError(f"expected 4 fields, got {len(fields)}", str(path), lineno)
            try:
                cid = int(fields[0])
                entries[cid] = ProfileEntry(int(fields[1]), float(fields[2]), int(fields[3]))
            except ValueError as exc:
                raise ParseError(f"bad profile row: {exc}", str(path), lineno) from exc
    return FrequencyProfile(label, word_count, entries)
