import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from constructicon.categories import SemanticLexicon
from constructicon.corpus import (OOV, Sentence, Token, attach_semantics,
                                  concat_corpora, drop_punct, read_tagged_corpus,
                                  split_subcorpora, write_tagged_corpus)
from constructicon.errors import ParseError, ValidationError

from conftest import corp, random_corpus, sent, tok

import numpy as np


def make_lexicon(assignment: dict[str, int]) -> SemanticLexicon:
    k = max(assignment.values(), default=0) + 1
    return SemanticLexicon(k, assignment, np.zeros((0, 0)))


class TestReadTsv:
    def test_single_sentence(self, tmp_path):
        path = tmp_path / "c.tsv"
        path.write_text("was\tAUX\nbeing\tAUX\nspread\tVERB\n")
        corpus = read_tagged_corpus(path, "tsv")
        assert len(corpus.sentences) == 1
        assert [t.form for t in corpus.sentences[0].tokens] == ["was", "being", "spread"]
        assert [t.upos for t in corpus.sentences[0].tokens] == ["AUX", "AUX", "VERB"]
        assert all(t.sem == OOV for t in corpus.sentences[0].tokens)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.tsv"
        path.write_text("")
        corpus = read_tagged_corpus(path, "tsv")
        assert corpus.word_count == 0
        assert corpus.sentences == ()

    def test_unknown_tag(self, tmp_path):
        path = tmp_path / "c.tsv"
        path.write_text("foo\tXYZ\n")
        with pytest.raises(ValidationError, match="unknown tag XYZ"):
            read_tagged_corpus(path, "tsv")

    def test_malformed_row_reports_line(self, tmp_path):
        path = tmp_path / "c.tsv"
        path.write_text("ok\tNOUN\n\nbad row here\n")
        with pytest.raises(ParseError, match="3"):
            read_tagged_corpus(path, "tsv")

    def test_blank_line_splits_sentences(self, tmp_path):
        path = tmp_path / "c.tsv"
        path.write_text("a\tDET\n\n\nb\tNOUN\n")
        corpus = read_tagged_corpus(path, "tsv")
        assert len(corpus.sentences) == 2

    def test_forms_lowercased(self, tmp_path):
        path = tmp_path / "c.tsv"
        path.write_text("The\tDET\nÉCOLE\tNOUN\n")
        corpus = read_tagged_corpus(path, "tsv")
        assert [t.form for t in corpus.sentences[0].tokens] == ["the", "école"]


class TestReadJsonl:
    def test_basic(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text(
            '{"doc_id": "d1", "tokens": [{"form": "Play", "upos": "VERB"},'
            ' {"form": "the", "upos": "DET"}]}\n'
            '{"tokens": [{"form": "go", "upos": "VERB"}]}\n'
        )
        corpus = read_tagged_corpus(path, "jsonl")
        assert len(corpus.sentences) == 2
        assert corpus.sentences[0].doc_id == "d1"
        assert corpus.sentences[0].tokens[0].form == "play"

    def test_bad_json_reports_line(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text('{"tokens": [{"form": "a", "upos": "DET"}]}\nnot json\n')
        with pytest.raises(ParseError, match="2"):
            read_tagged_corpus(path, "jsonl")

    def test_unknown_format(self, tmp_path):
        path = tmp_path / "c.tsv"
        path.write_text("a\tDET\n")
        with pytest.raises(ValueError, match="format"):
            read_tagged_corpus(path, "xml")


class TestAttachSemantics:
    def test_lookup_assigns_cluster(self):
        corpus = corp(sent(tok("house", "NOUN")))
        encoded = attach_semantics(corpus, make_lexicon({"house": 521}))
        assert encoded.sentences[0].tokens[0].sem == 521

    def test_absent_form_is_oov(self):
        corpus = corp(sent(tok("zzz", "NOUN")))
        encoded = attach_semantics(corpus, make_lexicon({"house": 521}))
        assert encoded.sentences[0].tokens[0].sem == OOV

    def test_identical_forms_identical_sem(self):
        corpus = corp(sent(tok("house", "NOUN"), tok("of", "ADP"), tok("house", "VERB")))
        encoded = attach_semantics(corpus, make_lexicon({"house": 7}))
        tokens = encoded.sentences[0].tokens
        assert tokens[0].sem == tokens[2].sem == 7

    def test_idempotent(self):
        corpus = corp(sent(tok("house", "NOUN"), tok("beside", "ADP")))
        lexicon = make_lexicon({"house": 3})
        once = attach_semantics(corpus, lexicon)
        twice = attach_semantics(once, lexicon)
        assert once == twice


class TestSplitSubcorpora:
    def test_partition_sizes(self):
        corpus = random_corpus(seed=5, n_tokens=25_000)
        parts = split_subcorpora(corpus, 10_000)
        assert len(parts) == 3
        # Scan oracle: every part except the last reaches the target size.
        for part in parts[:-1]:
            assert sum(len(s) for s in part.sentences) >= 10_000
        assert sum(p.word_count for p in parts) == corpus.word_count

    def test_corpus_smaller_than_size(self):
        corpus = corp(sent(tok("a", "DET")))
        parts = split_subcorpora(corpus, 100)
        assert len(parts) == 1
        assert parts[0].sentences == corpus.sentences

    def test_size_one_is_one_sentence_each(self):
        corpus = random_corpus(seed=1, n_tokens=200)
        parts = split_subcorpora(corpus, 1)
        assert len(parts) == len(corpus.sentences)

    def test_bad_size(self):
        corpus = corp(sent(tok("a", "DET")))
        with pytest.raises(ValueError):
            split_subcorpora(corpus, 0)

    def test_concatenation_roundtrip(self):
        corpus = random_corpus(seed=9, n_tokens=3000)
        parts = split_subcorpora(corpus, 700)
        rebuilt = concat_corpora(parts)
        assert rebuilt.sentences == corpus.sentences


_token_strategy = st.builds(
    tok,
    form=st.text(alphabet="abcdefgé", min_size=1, max_size=5),
    upos=st.sampled_from(["NOUN", "VERB", "DET", "ADJ", "AUX"]),
)
_corpus_strategy = st.lists(
    st.lists(_token_strategy, min_size=1, max_size=6).map(lambda ts: sent(*ts)),
    min_size=0, max_size=8,
).map(lambda ss: corp(*ss))


@settings(max_examples=50)
@given(_corpus_strategy)
def test_tsv_roundtrip(tmp_path_factory, corpus):
    path = tmp_path_factory.mktemp("rt") / "c.tsv"
    write_tagged_corpus(corpus, path)
    back = read_tagged_corpus(path, "tsv")
    original = [[(t.form, t.upos) for t in s.tokens] for s in corpus.sentences]
    reread = [[(t.form, t.upos) for t in s.tokens] for s in back.sentences]
    assert original == reread


def test_word_count_invariant():
    corpus = random_corpus(seed=3, n_tokens=500)
    assert corpus.word_count == sum(len(s) for s in corpus.sentences)


def test_drop_punct_removes_tokens_and_empty_sentences():
    corpus = corp(
        sent(tok("hello", "INTJ"), tok(",", "PUNCT"), tok("world", "NOUN")),
        sent(tok(".", "PUNCT")),
    )
    cleaned = drop_punct(corpus)
    assert len(cleaned.sentences) == 1
    assert [t.form for t in cleaned.sentences[0].tokens] == ["hello", "world"]


def test_token_validation():
    with pytest.raises(ValueError):
        Token("", "NOUN")
    with pytest.raises(ValidationError):
        Token("a", "NOT_A_TAG")
    with pytest.raises(ValueError):
        Token("A", "NOUN")
    with pytest.raises(ValueError):
        Sentence(())
