"""Directional association statistics over adjacent slot-filler pairs.

Every token offers up to three fillers: its word-form (LEX), its universal
POS tag (SYN), and its semantic cluster (SEM, skipped when the token is out
of the semantic vocabulary). For each pair of adjacent in-sentence tokens,
every left-filler/right-filler combination is counted, so mixed-level pairs
such as LEX followed by SYN are first-class.

The association measure is the directional delta-P over the per-position
2x2 contingency table. With

    a = pair_count(x, y)          adjacent positions realizing x then y
    b = left_total(x) - a         x on the left, y not on the right
    c = right_total(y) - a        y on the right, x not on the left
    d = total_pairs - a - b - c   neither

the left-to-right value is a/(a+b) - c/(c+d) (how strongly x predicts the
following y) and the right-to-left value is a/(a+c) - b/(b+d) (how strongly
y predicts the preceding x). A zero denominator makes that conditional
probability 0. All adjacency universes are pooled: total_pairs counts each
adjacent position once, shared by all nine level combinations.
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field
from typing import NamedTuple

from .corpus import OOV, EncodedCorpus, Token


class Level(str, enum.Enum):
    LEX = "LEX"
    SYN = "SYN"
    SEM = "SEM"


class SlotFiller(NamedTuple):
    level: Level
    value: str | int


class Direction(str, enum.Enum):
    LR = "LR"
    RL = "RL"


def token_fillers(token: Token) -> tuple[SlotFiller, ...]:
    """The fillers a token realizes, one per level; SEM omitted when OOV."""
    if token.sem == OOV:
        return (
            SlotFiller(Level.LEX, token.form),
            SlotFiller(Level.SYN, token.upos),
        )
    return (
        SlotFiller(Level.LEX, token.form),
        SlotFiller(Level.SYN, token.upos),
        SlotFiller(Level.SEM, token.sem),
    )


@dataclass
class ContingencyCounts:
    pair_counts: Counter = field(default_factory=Counter)
    left_totals: Counter = field(default_factory=Counter)
    right_totals: Counter = field(default_factory=Counter)
    total_pairs: int = 0

    def transpose(self) -> "ContingencyCounts":
        """Counts with every adjacent pair reversed (left and right swapped)."""
        flipped = Counter({(y, x): n for (x, y), n in self.pair_counts.items()})
        return ContingencyCounts(
            pair_counts=flipped,
            left_totals=Counter(self.right_totals),
            right_totals=Counter(self.left_totals),
            total_pairs=self.total_pairs,
        )


def count_pairs(corpus: EncodedCorpus) -> ContingencyCounts:
    """Tally every adjacent in-sentence filler pair across all level combinations.

    Each adjacent position contributes one increment per (left level, right
    level) combination and exactly one to ``total_pairs``; marginals count
    each position once per filler.
    """
    counts = ContingencyCounts()
    pair_counts = counts.pair_counts
    left_totals = counts.left_totals
    right_totals = counts.right_totals
    total = 0
    for sentence in corpus.sentences:
        fillers = [token_fillers(t) for t in sentence.tokens]
        for i in range(len(fillers) - 1):
            lefts = fillers[i]
            rights = fillers[i + 1]
            total += 1
            for x in lefts:
                left_totals[x] += 1
                for y in rights:
                    pair_counts[(x, y)] += 1
            for y in rights:
                right_totals[y] += 1
    counts.total_pairs = total
    return counts


def delta_p(counts: ContingencyCounts, x: SlotFiller, y: SlotFiller,
            direction: Direction = Direction.LR) -> float:
    if counts.total_pairs <= 0:
        raise ValueError("delta_p requires at least one adjacent token pair")
    a = counts.pair_counts.get((x, y), 0)
    b = counts.left_totals.get(x, 0) - a
    c = counts.right_totals.get(y, 0) - a
    d = counts.total_pairs - a - b - c
    if direction is Direction.LR:
        first = a / (a + b) if a + b else 0.0
        second = c / (c + d) if c + d else 0.0
    else:
        first = a / (a + c) if a + c else 0.0
        second = b / (b + d) if b + d else 0.0
    return first - second


@dataclass(frozen=True)
class AssociationMatrix:
    lr: dict[tuple[SlotFiller, SlotFiller], float]
    rl: dict[tuple[SlotFiller, SlotFiller], float]
    min_pair_freq: int

    def dp_lr(self, x: SlotFiller, y: SlotFiller) -> float:
        return self.lr.get((x, y), 0.0)

    def dp_rl(self, x: SlotFiller, y: SlotFiller) -> float:
        return self.rl.get((x, y), 0.0)

    def __len__(self) -> int:
        return len(self.lr)


def build_matrix(counts: ContingencyCounts, min_pair_freq: int = 1) -> AssociationMatrix:
    """Both delta-P directions for every pair seen at least `min_pair_freq` times.

    Lookups for unstored pairs return 0, so thresholding doubles as noise
    suppression for the beam search.
    """
    if min_pair_freq < 1:
        raise ValueError(f"min_pair_freq must be >= 1, got {min_pair_freq}")
    lr: dict[tuple[SlotFiller, SlotFiller], float] = {}
    rl: dict[tuple[SlotFiller, SlotFiller], float] = {}
    for pair, n in counts.pair_counts.items():
        if n < min_pair_freq:
            continue
        x, y = pair
        lr[pair] = delta_p(counts, x, y, Direction.LR)
        rl[pair] = delta_p(counts, x, y, Direction.RL)
    return AssociationMatrix(lr, rl, min_pair_freq)


def default_min_pair_freq(word_count: int, per_million: float = 5.0) -> int:
    """Frequency floor scaled to corpus size (default 5 per million words)."""
    return max(1, round(per_million * word_count / 1_000_000))


def write_matrix_tsv(matrix: AssociationMatrix, path) -> None:
    """Dump stored pairs as ``level_x value_x level_y value_y dp_lr dp_rl``."""
    rows = sorted(matrix.lr, key=lambda p: (p[0].level.value, str(p[0].value),
                                            p[1].level.value, str(p[1].value)))
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("level_x\tvalue_x\tlevel_y\tvalue_y\tdp_lr\tdp_rl\n")
        for x, y in rows:
            handle.write(
                f"{x.level.value}\t{x.value}\t{y.level.value}\t{y.value}"
                f"\t{matrix.lr[(x, y)]}\t{matrix.rl[(x, y)]}\n"
            )
