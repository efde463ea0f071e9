import random

import pytest

from constructicon.association import Level, SlotFiller
from constructicon.corpus import OOV, EncodedCorpus, Sentence, Token
from constructicon.induction import Construction, Grammar


def tok(form: str, upos: str, sem: int = OOV) -> Token:
    return Token(form, upos, sem)


def sent(*tokens: Token) -> Sentence:
    return Sentence(tuple(tokens))


def corp(*sentences: Sentence, register_tag: str | None = None) -> EncodedCorpus:
    return EncodedCorpus(tuple(sentences), register_tag)


def lex(value: str) -> SlotFiller:
    return SlotFiller(Level.LEX, value)


def syn(value: str) -> SlotFiller:
    return SlotFiller(Level.SYN, value)


def sem(value: int) -> SlotFiller:
    return SlotFiller(Level.SEM, value)


def random_corpus(seed: int, n_tokens: int, n_forms: int = 8,
                  tags: tuple[str, ...] = ("NOUN", "VERB", "DET", "ADJ"),
                  n_sems: int = 4, oov_rate: float = 0.2,
                  max_sentence: int = 12) -> EncodedCorpus:
    """Random corpus with independent form/tag/cluster draws per token."""
    rng = random.Random(seed)
    sentences = []
    remaining = n_tokens
    while remaining > 0:
        length = min(remaining, rng.randint(1, max_sentence))
        tokens = tuple(
            Token(
                f"w{rng.randrange(n_forms)}",
                rng.choice(tags),
                OOV if rng.random() < oov_rate else rng.randrange(n_sems),
            )
            for _ in range(length)
        )
        sentences.append(Sentence(tokens))
        remaining -= length
    return EncodedCorpus(tuple(sentences))


@pytest.fixture
def attested_grammar() -> Grammar:
    """Hand-written grammar of four attested constructions."""
    return Grammar((
        Construction(1, (syn("AUX"), lex("being"), syn("VERB"))),
        Construction(3, (lex("play"), syn("DET"), syn("NOUN"))),
        Construction(5, (lex("to"), syn("VERB"), lex("down"))),
        Construction(9, (lex("one"), syn("ADP"), lex("the"), lex("best"), syn("NOUN"))),
    ))


@pytest.fixture
def attested_sentences() -> dict[int, tuple[Sentence, int]]:
    """Hand-tagged sentences realizing the fixture constructions, with the
    expected match offset."""
    return {
        1: (sent(tok("rumour", "NOUN"), tok("was", "AUX"), tok("being", "AUX"),
                 tok("spread", "VERB")), 1),
        3: (sent(tok("play", "VERB"), tok("the", "DET"), tok("game", "NOUN")), 0),
        5: (sent(tok("asked", "VERB"), tok("him", "PRON"), tok("to", "PART"),
                 tok("sit", "VERB"), tok("down", "ADP")), 2),
        9: (sent(tok("one", "NUM"), tok("of", "ADP"), tok("the", "DET"),
                 tok("best", "ADJ"), tok("books", "NOUN")), 0),
    }
