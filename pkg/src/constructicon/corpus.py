"""Corpus ingestion and token-level encoding.

Input corpora arrive pre-tagged. Two formats are accepted:

* TSV: one ``form<TAB>upos`` row per token, blank line between sentences.
* JSONL: one sentence per line, ``{"tokens": [{"form": ..., "upos": ...}],
  "doc_id": ...}``.

Forms are lowercased (Unicode-aware); no lemmatization is applied. Each token
carries three parallel representations: the word-form itself, its universal
POS tag, and a semantic cluster index assigned later by
:func:`attach_semantics` (``OOV`` until then). Sentence boundaries are hard
match barriers everywhere downstream.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Iterator

from .errors import ParseError, ValidationError

# Universal POS tagset (closed, 17 tags).
UPOS_TAGS = frozenset({
    "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM",
    "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X",
})

# Distinguished semantic value for forms outside the semantic lexicon.
# An OOV token never satisfies a semantic slot-constraint.
OOV = -1


@dataclass(frozen=True, slots=True)
class Token:
    form: str
    upos: str
    sem: int = OOV

    def __post_init__(self) -> None:
        if not self.form:
            raise ValueError("token form must be non-empty")
        if self.form != self.form.lower():
            raise ValueError(f"token form must be lowercased: {self.form!r}")
        if self.upos not in UPOS_TAGS:
            raise ValidationError(f"unknown tag {self.upos}")
        if self.sem < OOV:
            raise ValueError(f"invalid semantic cluster index {self.sem}")


@dataclass(frozen=True, slots=True)
class Sentence:
    tokens: tuple[Token, ...]
    doc_id: str = ""

    def __post_init__(self) -> None:
        if not self.tokens:
            raise ValueError("sentence must contain at least one token")

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class EncodedCorpus:
    sentences: tuple[Sentence, ...]
    register_tag: str | None = None

    @property
    def word_count(self) -> int:
        return sum(len(s) for s in self.sentences)

    def __iter__(self) -> Iterator[Sentence]:
        return iter(self.sentences)


def _normalize_form(raw: str) -> str:
    return raw.strip().lower()


def _read_tsv(path: Path, register_tag: str | None) -> EncodedCorpus:
    sentences: list[Sentence] = []
    pending: list[Token] = []
    doc_id = path.stem
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                if pending:
                    sentences.append(Sentence(tuple(pending), doc_id))
                    pending = []
                continue
            fields = line.split("\t")
            if len(fields) != 2:
                raise ParseError(
                    f"expected 2 tab-separated fields, got {len(fields)}",
                    str(path), lineno,
                )
            form = _normalize_form(fields[0])
            upos = fields[1].strip()
            if not form:
                raise ParseError("empty word-form", str(path), lineno)
            if upos not in UPOS_TAGS:
                raise ValidationError(f"unknown tag {upos} ({path}:{lineno})")
            pending.append(Token(form, upos))
    if pending:
        sentences.append(Sentence(tuple(pending), doc_id))
    return EncodedCorpus(tuple(sentences), register_tag)


def _read_jsonl(path: Path, register_tag: str | None) -> EncodedCorpus:
    sentences: list[Sentence] = []
    default_doc = path.stem
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", str(path), lineno) from exc
            raw_tokens = record.get("tokens")
            if not isinstance(raw_tokens, list) or not raw_tokens:
                raise ParseError("sentence record needs a non-empty 'tokens' list",
                                 str(path), lineno)
            tokens: list[Token] = []
            for raw in raw_tokens:
                if not isinstance(raw, dict) or "form" not in raw or "upos" not in raw:
                    raise ParseError("token needs 'form' and 'upos' fields",
                                     str(path), lineno)
                form = _normalize_form(str(raw["form"]))
                upos = str(raw["upos"]).strip()
                if not form:
                    raise ParseError("empty word-form", str(path), lineno)
                if upos not in UPOS_TAGS:
                    raise ValidationError(f"unknown tag {upos} ({path}:{lineno})")
                tokens.append(Token(form, upos))
            sentences.append(Sentence(tuple(tokens), str(record.get("doc_id", default_doc))))
    return EncodedCorpus(tuple(sentences), register_tag)


def read_tagged_corpus(path: str | Path, format: str = "tsv",
                       register_tag: str | None = None) -> EncodedCorpus:
    """Read a pre-tagged corpus; semantic indices are left at ``OOV``.

    Raises :class:`ParseError` pointing at the offending line for malformed
    rows, and :class:`ValidationError` naming any tag outside the universal
    tagset.
    """
    path = Path(path)
    if format == "tsv":
        return _read_tsv(path, register_tag)
    if format == "jsonl":
        return _read_jsonl(path, register_tag)
    raise ValueError(f"unknown corpus format {format!r} (expected tsv or jsonl)")


def write_tagged_corpus(corpus: EncodedCorpus, path: str | Path) -> None:
    """Write a corpus as TSV. Semantic indices are not serialized."""
    with open(path, "w", encoding="utf-8") as handle:
        for i, sentence in enumerate(corpus.sentences):
            if i:
                handle.write("\n")
            for token in sentence.tokens:
                handle.write(f"{token.form}\t{token.upos}\n")


def attach_semantics(corpus: EncodedCorpus, lexicon) -> EncodedCorpus:
    """Attach semantic cluster indices by word-form lookup.

    Forms absent from the lexicon get ``OOV``. Idempotent: reattaching the
    same lexicon yields an identical corpus.
    """
    assignment = lexicon.assignment
    sentences = []
    for sentence in corpus.sentences:
        tokens = tuple(
            replace(token, sem=assignment.get(token.form, OOV))
            for token in sentence.tokens
        )
        sentences.append(Sentence(tokens, sentence.doc_id))
    return EncodedCorpus(tuple(sentences), corpus.register_tag)


def split_subcorpora(corpus: EncodedCorpus, size: int) -> list[EncodedCorpus]:
    """Partition the sentence sequence into sub-corpora of at least `size` words.

    Sentences are never split; every sub-corpus except possibly the last
    reaches the target word count. Concatenating the result reproduces the
    original sentence order.
    """
    if size <= 0:
        raise ValueError(f"sub-corpus size must be positive, got {size}")
    out: list[EncodedCorpus] = []
    bucket: list[Sentence] = []
    count = 0
    for sentence in corpus.sentences:
        bucket.append(sentence)
        count += len(sentence)
        if count >= size:
            out.append(EncodedCorpus(tuple(bucket), corpus.register_tag))
            bucket = []
            count = 0
    if bucket:
        out.append(EncodedCorpus(tuple(bucket), corpus.register_tag))
    if not out:
        out.append(EncodedCorpus((), corpus.register_tag))
    return out


def drop_punct(corpus: EncodedCorpus) -> EncodedCorpus:
    """Remove PUNCT tokens; sentences left empty are dropped entirely.

    Removing punctuation makes the surrounding tokens adjacent, so
    constructions may span positions that were separated by punctuation in
    the source text.
    """
    sentences = []
    for sentence in corpus.sentences:
        kept = tuple(t for t in sentence.tokens if t.upos != "PUNCT")
        if kept:
            sentences.append(Sentence(kept, sentence.doc_id))
    return EncodedCorpus(tuple(sentences), corpus.register_tag)


def concat_corpora(parts: Iterable[EncodedCorpus],
                   register_tag: str | None = None) -> EncodedCorpus:
    sentences: list[Sentence] = []
    for part in parts:
        sentences.extend(part.sentences)
    return EncodedCorpus(tuple(sentences), register_tag)
