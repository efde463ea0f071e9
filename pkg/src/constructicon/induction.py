"""Grammar induction: beam search over associations, MDL selection, pruning.

Candidate constructions are grown by an association-guided beam search. At
every sentence position a beam is seeded with the token's fillers (one per
level); each step scores the three level choices for the next token by the
stored left-to-right delta-P from the last slot, keeps the strongest
`beam_width` partial sequences, and stops when no extension clears
`dp_threshold` or `max_len` is reached. Every surviving sequence of at least
`min_len` slots whose mean transition delta-P exceeds the threshold becomes a
candidate; candidates are deduplicated by slot sequence and ranked by mean
transition delta-P times log corpus frequency.

Selection uses a two-part code. Storing a construction costs log2(max_len)
bits for its length plus, per slot, log2(3) bits to name the level and
log2(|V_level|) bits to name the value. Encoding the corpus is a greedy
left-to-right pass per sentence: where one or more constructions match, the
longest (ties: most frequent, then lowest id) is emitted for
-log2 p(c) bits, with p(c) = (count(c) + 1) / (sum of counts + |G|) from a
preliminary matching pass; everywhere else a literal token costs
log2(|V_lex| + 1) bits. Greedy forward selection admits a candidate only
when it strictly lowers the combined cost.

Continued exposure then prunes the grammar: every construction starts at
activation weight 1; a sub-corpus that contains no match decays the weight
by `decay` (default 0.25) and any observation restores it to 1. A
construction whose weight reaches 0 is forgotten, so at the default decay a
construction must be missing from four successive sub-corpora to be removed.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

from .association import AssociationMatrix, Level, SlotFiller, token_fillers
from .corpus import OOV, UPOS_TAGS, EncodedCorpus
from .errors import InputError, ParseError
from .matcher import ConstructionTrie

DEFAULT_BEAM_WIDTH = 16
DEFAULT_MIN_LEN = 3
DEFAULT_MAX_LEN = 7
DEFAULT_DP_THRESHOLD = 0.1
DEFAULT_MAX_CANDIDATES = 10_000
DEFAULT_DECAY = 0.25
DEFAULT_SUBCORPUS_SIZE = 100_000

_WEIGHT_EPS = 1e-9

SlotConstraint = SlotFiller


@dataclass(frozen=True)
class Construction:
    """An ordered sequence of slot-constraints with an activation weight."""

    id: int
    slots: tuple[SlotFiller, ...]
    weight: float = 1.0

    def __post_init__(self) -> None:
        if len(self.slots) < DEFAULT_MIN_LEN:
            raise ValueError(f"construction needs >= {DEFAULT_MIN_LEN} slots, "
                             f"got {len(self.slots)}")
        if not 0.0 <= self.weight <= 1.0:
            raise ValueError(f"weight must lie in [0, 1], got {self.weight}")

    def __len__(self) -> int:
        return len(self.slots)


@dataclass(frozen=True)
class Grammar:
    constructions: tuple[Construction, ...]
    config: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        ids = [c.id for c in self.constructions]
        if len(set(ids)) != len(ids):
            raise ValueError("construction ids must be unique")
        seqs = {c.slots for c in self.constructions}
        if len(seqs) != len(ids):
            raise ValueError("duplicate slot sequences in grammar")

    def __len__(self) -> int:
        return len(self.constructions)

    def __iter__(self):
        return iter(self.constructions)

    def by_id(self, construction_id: int) -> Construction:
        for construction in self.constructions:
            if construction.id == construction_id:
                return construction
        raise ValueError(f"unknown construction id {construction_id}")


@dataclass(frozen=True)
class BeamConfig:
    beam_width: int = DEFAULT_BEAM_WIDTH
    min_len: int = DEFAULT_MIN_LEN
    max_len: int = DEFAULT_MAX_LEN
    dp_threshold: float = DEFAULT_DP_THRESHOLD
    max_candidates: int = DEFAULT_MAX_CANDIDATES

    def __post_init__(self) -> None:
        if self.beam_width < 1:
            raise ValueError("beam_width must be >= 1")
        if self.min_len < 3:
            raise ValueError("min_len must be >= 3")
        if self.max_len < self.min_len:
            raise ValueError("max_len must be >= min_len")
        if self.max_candidates < 1:
            raise ValueError("max_candidates must be >= 1")


@dataclass(frozen=True)
class MdlScore:
    grammar_bits: float
    data_bits: float

    @property
    def total(self) -> float:
        return self.grammar_bits + self.data_bits

    def __post_init__(self) -> None:
        if self.grammar_bits < 0 or self.data_bits < 0:
            raise ValueError("description lengths cannot be negative")


@dataclass(frozen=True)
class VocabSizes:
    lex: int
    syn: int
    sem: int

    def __post_init__(self) -> None:
        if min(self.lex, self.syn, self.sem) <= 0:
            raise ValueError("vocabulary sizes must be positive")

    def size(self, level: Level) -> int:
        if level is Level.LEX:
            return self.lex
        if level is Level.SYN:
            return self.syn
        return self.sem


def corpus_vocab_sizes(corpus: EncodedCorpus, sem_k: int | None = None) -> VocabSizes:
    """Per-level vocabulary sizes: observed forms, the closed tagset, clusters."""
    forms = {t.form for s in corpus.sentences for t in s.tokens}
    if sem_k is None:
        sems = {t.sem for s in corpus.sentences for t in s.tokens if t.sem != OOV}
        sem_k = max(1, len(sems))
    return VocabSizes(lex=max(1, len(forms)), syn=len(UPOS_TAGS), sem=sem_k)


def literal_cost(vocab: VocabSizes) -> float:
    return math.log2(vocab.lex + 1)


# ---------------------------------------------------------------------------
# Candidate search


def beam_search_candidates(corpus: EncodedCorpus, matrix: AssociationMatrix,
                           config: BeamConfig = BeamConfig()) -> list[Construction]:
    """Propose candidate constructions, strongest first.

    Returns at most ``config.max_candidates`` constructions with ids assigned
    in rank order and weight 1. Deterministic: ties in beam pruning and in
    the final ranking break on the slot sequence itself.
    """
    dp = matrix.lr
    threshold = config.dp_threshold
    width = config.beam_width
    min_len = config.min_len
    found: dict[tuple[SlotFiller, ...], float] = {}

    for sentence in corpus.sentences:
        fillers = [token_fillers(t) for t in sentence.tokens]
        n = len(fillers)
        for i in range(n):
            beams: list[tuple[tuple[SlotFiller, ...], float]] = [
                ((f,), 0.0) for f in fillers[i]
            ]
            last_j = min(i + config.max_len, n)
            for j in range(i + 1, last_j):
                nxt = fillers[j]
                extended = []
                for slots, dp_sum in beams:
                    last = slots[-1]
                    for f in nxt:
                        score = dp.get((last, f), 0.0)
                        if score >= threshold:
                            extended.append((slots + (f,), dp_sum + score))
                if not extended:
                    break
                if len(extended) > width:
                    extended.sort(key=lambda b: (-b[1], b[0]))
                    del extended[width:]
                beams = extended
                length = j - i + 1
                if length >= min_len:
                    transitions = length - 1
                    for slots, dp_sum in beams:
                        if dp_sum / transitions > threshold and slots not in found:
                            found[slots] = dp_sum / transitions

    if not found:
        return []

    # One matching pass over the corpus gives every candidate's frequency.
    protos = [Construction(i, slots) for i, slots in enumerate(found)]
    trie = ConstructionTrie(protos)
    freq: Counter = Counter()
    for sentence in corpus.sentences:
        for cid, _, _ in trie.scan([token_fillers(t) for t in sentence.tokens]):
            freq[cid] += 1

    scored = []
    for proto in protos:
        count = max(1, freq.get(proto.id, 0))
        scored.append((found[proto.slots] * math.log(count), proto.slots))
    scored.sort(key=lambda item: (-item[0], item[1]))
    del scored[config.max_candidates:]
    return [Construction(rank, slots) for rank, (_, slots) in enumerate(scored)]


# ---------------------------------------------------------------------------
# Two-part code


def construction_bits(construction: Construction, vocab: VocabSizes,
                      max_len: int) -> float:
    bits = math.log2(max(max_len, len(construction.slots)))
    for slot in construction.slots:
        bits += math.log2(3) + math.log2(vocab.size(slot.level))
    return bits


def grammar_cost(grammar: Grammar, vocab: VocabSizes,
                 max_len: int | None = None) -> float:
    """Bits to store the grammar itself."""
    if max_len is None:
        max_len = int(grammar.config.get("max_len", DEFAULT_MAX_LEN))
    return sum(construction_bits(c, vocab, max_len) for c in grammar.constructions)


def _match_index(constructions: Sequence[Construction], corpus: EncodedCorpus):
    """Match positions per sentence plus total match counts per construction."""
    trie = ConstructionTrie(constructions)
    per_sentence: list[dict[int, list[tuple[int, int]]]] = []
    counts: Counter = Counter()
    for sentence in corpus.sentences:
        hits = trie.scan([token_fillers(t) for t in sentence.tokens])
        by_start: dict[int, list[tuple[int, int]]] = {}
        for cid, start, length in hits:
            by_start.setdefault(start, []).append((length, cid))
            counts[cid] += 1
        per_sentence.append(by_start)
    return per_sentence, counts


def _segment(n_tokens: int, by_start: dict[int, list[tuple[int, int]]],
             counts: Counter, selected: set[int]) -> tuple[Counter, int]:
    """Greedy left-to-right coder for one sentence.

    Longest match wins; ties go to the construction with the higher matching
    count, then the lower id. Returns emission counts and the number of
    literal tokens.
    """
    emitted: Counter = Counter()
    literals = 0
    i = 0
    while i < n_tokens:
        best = None
        options = by_start.get(i)
        if options:
            for length, cid in options:
                if cid in selected:
                    key = (length, counts[cid], -cid)
                    if best is None or key > best[0]:
                        best = (key, cid, length)
        if best is None:
            literals += 1
            i += 1
        else:
            emitted[best[1]] += 1
            i += best[2]
    return emitted, literals


def data_cost(grammar: Grammar, corpus: EncodedCorpus,
              vocab: VocabSizes | None = None) -> float:
    """Bits to encode the corpus given the grammar (greedy two-part coder)."""
    if vocab is None:
        vocab = corpus_vocab_sizes(corpus)
    lit = literal_cost(vocab)
    if not grammar.constructions:
        return corpus.word_count * lit
    per_sentence, counts = _match_index(grammar.constructions, corpus)
    denom = sum(counts[c.id] for c in grammar.constructions) + len(grammar)
    selected = {c.id for c in grammar.constructions}
    emitted: Counter = Counter()
    literals = 0
    for sentence, by_start in zip(corpus.sentences, per_sentence):
        em, li = _segment(len(sentence), by_start, counts, selected)
        emitted.update(em)
        literals += li
    bits = literals * lit
    for cid, n in emitted.items():
        bits += n * -math.log2((counts[cid] + 1) / denom)
    return bits


def select_grammar(candidates: Sequence[Construction], corpus: EncodedCorpus,
                   vocab: VocabSizes | None = None,
                   max_len: int | None = None) -> tuple[Grammar, MdlScore]:
    """Greedy forward MDL selection over ranked candidates, one full pass.

    A candidate joins the grammar only if it strictly lowers the total
    description length, so the result never scores worse than the empty
    grammar. Match positions are indexed once; each trial re-codes only the
    sentences the candidate occurs in.
    """
    if not candidates:
        raise ValueError("select_grammar requires a non-empty candidate list")
    if vocab is None:
        vocab = corpus_vocab_sizes(corpus)
    if max_len is None:
        max_len = max(DEFAULT_MAX_LEN, max(len(c) for c in candidates))
    lit = literal_cost(vocab)

    per_sentence, counts = _match_index(candidates, corpus)
    sentence_lengths = [len(s) for s in corpus.sentences]
    touches: dict[int, list[int]] = {}
    for si, by_start in enumerate(per_sentence):
        seen = {cid for opts in by_start.values() for _, cid in opts}
        for cid in seen:
            touches.setdefault(cid, []).append(si)

    selected: list[Construction] = []
    selected_ids: set[int] = set()
    seg_cache: dict[int, tuple[Counter, int]] = {}
    emitted_total: Counter = Counter()
    literals_total = corpus.word_count
    denom = 0
    grammar_bits = 0.0
    current_data = literals_total * lit
    current_total = current_data

    def emission_bits(emitted: Counter, literals: int, trial_denom: int) -> float:
        bits = literals * lit
        for cid, n in emitted.items():
            bits += n * -math.log2((counts[cid] + 1) / trial_denom)
        return bits

    for candidate in candidates:
        sentences = touches.get(candidate.id)
        if not sentences:
            continue  # never matches: pure storage cost, cannot help
        trial_ids = selected_ids | {candidate.id}
        trial_emitted = Counter(emitted_total)
        trial_literals = literals_total
        new_segs = {}
        for si in sentences:
            old_em, old_li = seg_cache.get(si, (None, sentence_lengths[si]))
            new_em, new_li = _segment(sentence_lengths[si], per_sentence[si],
                                      counts, trial_ids)
            if old_em is not None:
                trial_emitted.subtract(old_em)
            trial_emitted.update(new_em)
            trial_literals += new_li - old_li
            new_segs[si] = (new_em, new_li)
        trial_denom = denom + counts[candidate.id] + 1
        trial_data = emission_bits(trial_emitted, trial_literals, trial_denom)
        trial_grammar = grammar_bits + construction_bits(candidate, vocab, max_len)
        if trial_grammar + trial_data < current_total:
            selected.append(candidate)
            selected_ids = trial_ids
            emitted_total = +trial_emitted  # drop zero entries
            literals_total = trial_literals
            seg_cache.update(new_segs)
            denom = trial_denom
            grammar_bits = trial_grammar
            current_data = trial_data
            current_total = trial_grammar + trial_data

    grammar = Grammar(tuple(selected), config={"max_len": max_len})
    return grammar, MdlScore(grammar_bits, current_data)


# ---------------------------------------------------------------------------
# Exposure-based pruning


def prune_by_exposure(grammar: Grammar, subcorpora: Sequence[EncodedCorpus],
                      decay: float = DEFAULT_DECAY) -> Grammar:
    """Decay activation weights over successive sub-corpora; forget at zero.

    Weights restart at 1. Each sub-corpus without a match subtracts `decay`;
    any match restores the weight to 1. A construction is removed the moment
    its weight reaches 0 and cannot return. Order-sensitive but
    deterministic.
    """
    if not 0.0 < decay <= 1.0:
        raise ValueError(f"decay must lie in (0, 1], got {decay}")
    weights = {c.id: 1.0 for c in grammar.constructions}
    alive = {c.id: c for c in grammar.constructions}
    for sub in subcorpora:
        if not alive:
            break
        trie = ConstructionTrie(alive.values())
        observed: set[int] = set()
        for sentence in sub.sentences:
            for cid, _, _ in trie.scan([token_fillers(t) for t in sentence.tokens]):
                observed.add(cid)
            if len(observed) == len(alive):
                break
        for cid in list(alive):
            if cid in observed:
                weights[cid] = 1.0
            else:
                weights[cid] -= decay
                if weights[cid] <= _WEIGHT_EPS:
                    del alive[cid]
    survivors = tuple(
        replace(c, weight=max(0.0, min(1.0, weights[c.id])))
        for c in grammar.constructions if c.id in alive
    )
    return Grammar(survivors, config=dict(grammar.config))


# ---------------------------------------------------------------------------
# Serialization


def format_construction(construction: Construction) -> str:
    """Dash notation: tags bare, word-forms quoted, clusters in angle brackets."""
    parts = []
    for slot in construction.slots:
        if slot.level is Level.LEX:
            parts.append(f'"{slot.value}"')
        elif slot.level is Level.SYN:
            parts.append(str(slot.value))
        else:
            parts.append(f"<{slot.value}>")
    return " -- ".join(parts)


def write_grammar(grammar: Grammar, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for construction in grammar.constructions:
            record = {
                "id": construction.id,
                "weight": construction.weight,
                "slots": [
                    {"level": slot.level.value, "value": slot.value}
                    for slot in construction.slots
                ],
            }
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")


def _parse_slot(raw: dict, path: str, lineno: int) -> SlotFiller:
    try:
        level = Level(raw["level"])
    except (KeyError, ValueError) as exc:
        raise ParseError(f"bad slot level in {raw!r}", path, lineno) from exc
    value = raw.get("value")
    if level is Level.SEM:
        if not isinstance(value, int) or value < 0:
            raise ParseError(f"semantic slot value must be a cluster index, got {value!r}",
                             path, lineno)
    elif not isinstance(value, str) or not value:
        raise ParseError(f"{level.value} slot value must be a non-empty string, "
                         f"got {value!r}", path, lineno)
    return SlotFiller(level, value)


def read_grammar(path: str | Path) -> Grammar:
    path = Path(path)
    constructions = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", str(path), lineno) from exc
            try:
                slots = tuple(_parse_slot(raw, str(path), lineno)
                              for raw in record["slots"])
                constructions.append(
                    Construction(int(record["id"]), slots,
                                 float(record.get("weight", 1.0))))
            except (KeyError, TypeError) as exc:
                raise ParseError(f"bad construction record: {exc}",
                                 str(path), lineno) from exc
            except ValueError as exc:
                raise ParseError(str(exc), str(path), lineno) from exc
    try:
        return Grammar(tuple(constructions))
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc
