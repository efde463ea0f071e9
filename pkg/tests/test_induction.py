import math
import random

import pytest

from constructicon.association import build_matrix, count_pairs
from constructicon.corpus import EncodedCorpus, Sentence, Token
from constructicon.errors import InputError, ParseError
from constructicon.induction import (BeamConfig, Construction, Grammar, MdlScore,
                                     VocabSizes, beam_search_candidates,
                                     corpus_vocab_sizes, data_cost,
                                     format_construction, grammar_cost,
                                     prune_by_exposure, read_grammar,
                                     select_grammar, write_grammar)

from conftest import corp, lex, random_corpus, sem, sent, syn, tok
from oracles import exhaustive_candidates, reference_data_cost
from planted import build_planted


def aux_being_verb_corpus() -> EncodedCorpus:
    """Trigram AUX "being" VERB planted among unrelated filler sentences."""
    rng = random.Random(0)
    auxes = ["was", "were", "is", "am"]
    verbs = ["spread", "proposed", "invaded", "kept"]
    sentences = []
    for _ in range(60):
        tokens = [
            Token(rng.choice(auxes), "AUX", 0),
            Token("being", "AUX", 1),
            Token(rng.choice(verbs), "VERB", 2),
        ]
        for _ in range(3):
            tokens.append(Token(f"n{rng.randrange(20)}", rng.choice(["NOUN", "DET"]), 3))
        sentences.append(Sentence(tuple(tokens)))
    return EncodedCorpus(tuple(sentences))


class TestGrammarCost:
    def test_empty_grammar_is_free(self):
        vocab = VocabSizes(lex=100, syn=17, sem=50)
        assert grammar_cost(Grammar(()), vocab) == 0.0

    def test_three_slot_syn_example(self):
        vocab = VocabSizes(lex=100, syn=17, sem=50)
        grammar = Grammar((Construction(0, (syn("AUX"), syn("DET"), syn("NOUN"))),))
        expected = 3 * (math.log2(3) + math.log2(17)) + 3  # log2(max_len=8) = 3
        assert grammar_cost(grammar, vocab, max_len=8) == pytest.approx(
            20.017276025914485, abs=1e-9)
        assert grammar_cost(grammar, vocab, max_len=8) == pytest.approx(expected)

    def test_adding_construction_strictly_increases(self):
        vocab = VocabSizes(lex=10, syn=17, sem=5)
        small = Grammar((Construction(0, (lex("a"), lex("b"), lex("c"))),))
        large = Grammar(small.constructions + (
            Construction(1, (syn("DET"), syn("NOUN"), syn("VERB"))),))
        assert grammar_cost(large, vocab, 7) > grammar_cost(small, vocab, 7)

    def test_mixed_levels_use_level_vocab(self):
        vocab = VocabSizes(lex=1000, syn=17, sem=100)
        grammar = Grammar((Construction(0, (lex("a"), syn("DET"), sem(4))),))
        expected = (3 * math.log2(3) + math.log2(1000) + math.log2(17)
                    + math.log2(100) + math.log2(7))
        assert grammar_cost(grammar, vocab, 7) == pytest.approx(expected)


class TestDataCost:
    def test_empty_grammar_exact(self):
        corpus = random_corpus(seed=5, n_tokens=500)
        forms = {t.form for s in corpus.sentences for t in s.tokens}
        expected = corpus.word_count * math.log2(len(forms) + 1)
        assert data_cost(Grammar(()), corpus) == expected

    def test_covering_construction_saves_bits(self):
        # One trigram covering well over 30% of the tokens.
        sentences = []
        for _ in range(30):
            sentences.append(sent(tok("play", "VERB"), tok("the", "DET"),
                                  tok("game", "NOUN"), tok("now", "ADV")))
        corpus = corp(*sentences)
        grammar = Grammar((Construction(0, (lex("play"), syn("DET"), syn("NOUN"))),))
        assert data_cost(grammar, corpus) < data_cost(Grammar(()), corpus)

    def test_matches_reference_coder(self):
        for seed in range(4):
            corpus = random_corpus(seed=seed, n_tokens=600)
            rng = random.Random(seed)
            constructions = []
            for i in range(12):
                slots = tuple(
                    syn(rng.choice(["NOUN", "VERB", "DET", "ADJ"]))
                    if rng.random() < 0.6 else lex(f"w{rng.randrange(8)}")
                    for _ in range(rng.randint(3, 4))
                )
                constructions.append(Construction(i, slots))
            unique = {}
            for construction in constructions:
                unique.setdefault(construction.slots, construction)
            grammar = Grammar(tuple(unique.values()))
            assert data_cost(grammar, corpus) == pytest.approx(
                reference_data_cost(grammar.constructions, corpus), rel=1e-12)

    def test_doubling_single_construction_grammar(self):
        corpus = random_corpus(seed=11, n_tokens=400)
        doubled = EncodedCorpus(corpus.sentences + corpus.sentences)
        grammar = Grammar((Construction(0, (syn("DET"), syn("NOUN"), syn("VERB"))),))
        once = data_cost(grammar, corpus)
        twice = data_cost(grammar, doubled)
        assert twice == pytest.approx(2 * once, rel=1e-6)

    def test_doubling_empty_grammar_exact(self):
        corpus = random_corpus(seed=11, n_tokens=400)
        doubled = EncodedCorpus(corpus.sentences + corpus.sentences)
        assert data_cost(Grammar(()), doubled) == pytest.approx(
            2 * data_cost(Grammar(()), corpus), rel=1e-12)


class TestSelectGrammar:
    def test_never_matching_candidate_rejected(self):
        corpus = aux_being_verb_corpus()
        ghost = Construction(0, (lex("zz1"), lex("zz2"), lex("zz3")))
        real = Construction(1, (syn("AUX"), lex("being"), syn("VERB")))
        grammar, score = select_grammar([ghost, real], corpus)
        assert {c.slots for c in grammar.constructions} == {real.slots}

    def test_empty_candidates_rejected(self):
        with pytest.raises(ValueError):
            select_grammar([], random_corpus(seed=0, n_tokens=50))

    def test_mdl_never_worse_than_baseline(self):
        for seed in range(3):
            corpus = random_corpus(seed=seed, n_tokens=500)
            rng = random.Random(seed)
            candidates = []
            for i in range(15):
                slots = tuple(
                    syn(rng.choice(["NOUN", "VERB", "DET", "ADJ"]))
                    for _ in range(rng.randint(3, 4))
                )
                candidates.append(Construction(i, slots))
            unique = {}
            for c in candidates:
                unique.setdefault(c.slots, c)
            grammar, score = select_grammar(list(unique.values()), corpus)
            assert score.total <= data_cost(Grammar(()), corpus) + 1e-9

    def test_score_consistent_with_public_costs(self):
        corpus = aux_being_verb_corpus()
        candidates = [
            Construction(0, (syn("AUX"), lex("being"), syn("VERB"))),
            Construction(1, (lex("being"), syn("VERB"), syn("NOUN"))),
        ]
        vocab = corpus_vocab_sizes(corpus)
        grammar, score = select_grammar(candidates, corpus, vocab, max_len=7)
        assert score.data_bits == pytest.approx(data_cost(grammar, corpus, vocab),
                                                rel=1e-12)
        assert score.grammar_bits == pytest.approx(grammar_cost(grammar, vocab, 7),
                                                   rel=1e-12)
        assert score.total == pytest.approx(score.grammar_bits + score.data_bits)

    def test_every_selected_construction_matches(self):
        corpus = random_corpus(seed=3, n_tokens=800)
        rng = random.Random(3)
        candidates = []
        for i in range(20):
            slots = tuple(
                syn(rng.choice(["NOUN", "VERB", "DET", "ADJ"]))
                for _ in range(3)
            )
            candidates.append(Construction(i, slots))
        unique = {}
        for c in candidates:
            unique.setdefault(c.slots, c)
        grammar, _ = select_grammar(list(unique.values()), corpus)
        from oracles import naive_corpus_matches
        for construction in grammar.constructions:
            assert naive_corpus_matches([construction], corpus)


class TestBeamSearch:
    def test_planted_trigram_recovered(self):
        corpus = aux_being_verb_corpus()
        matrix = build_matrix(count_pairs(corpus), 2)
        candidates = beam_search_candidates(corpus, matrix, BeamConfig())
        assert (syn("AUX"), lex("being"), syn("VERB")) in {c.slots for c in candidates}

    def test_impossible_threshold_empty(self):
        corpus = aux_being_verb_corpus()
        matrix = build_matrix(count_pairs(corpus), 2)
        config = BeamConfig(dp_threshold=1.01)
        assert beam_search_candidates(corpus, matrix, config) == []

    def test_narrow_and_wide_beams_keep_dominant(self):
        # One dominant pattern: a fixed lexical trigram whose forms occur
        # nowhere else, amid noise that floods its tags and clusters.
        rng = random.Random(42)
        sentences = []
        for _ in range(40):
            tokens = [Token("kick", "VERB", 3), Token("the", "DET", 3),
                      Token("bucket", "NOUN", 4)]
            for _ in range(2):
                tokens.append(Token(f"n{rng.randrange(20)}",
                                    rng.choice(["NOUN", "VERB", "DET", "ADJ"]),
                                    rng.choice([3, 4, 5])))
            sentences.append(Sentence(tuple(tokens)))
        corpus = EncodedCorpus(tuple(sentences))
        matrix = build_matrix(count_pairs(corpus), 2)
        dominant = (lex("kick"), lex("the"), lex("bucket"))
        for width in (1, 64):
            config = BeamConfig(beam_width=width, max_len=4)
            got = {c.slots for c in beam_search_candidates(corpus, matrix, config)}
            oracle = exhaustive_candidates(corpus, matrix, 3, 4, config.dp_threshold)
            assert dominant in oracle
            assert got <= oracle
            assert dominant in got

    @pytest.mark.parametrize("seed", [0, 1, 2, 3])
    def test_unbounded_width_equals_exhaustive_oracle(self, seed):
        corpus = random_corpus(seed=seed, n_tokens=400, n_forms=6,
                               tags=("NOUN", "VERB", "DET"), n_sems=3)
        matrix = build_matrix(count_pairs(corpus), 1)
        config = BeamConfig(beam_width=100, max_len=4, dp_threshold=0.15,
                            max_candidates=10**6)
        got = {c.slots for c in beam_search_candidates(corpus, matrix, config)}
        assert got == exhaustive_candidates(corpus, matrix, 3, 4, 0.15)

    def test_ranking_is_deterministic(self):
        corpus = aux_being_verb_corpus()
        matrix = build_matrix(count_pairs(corpus), 2)
        first = beam_search_candidates(corpus, matrix, BeamConfig())
        second = beam_search_candidates(corpus, matrix, BeamConfig())
        assert [c.slots for c in first] == [c.slots for c in second]

    def test_config_validation(self):
        with pytest.raises(ValueError):
            BeamConfig(beam_width=0)
        with pytest.raises(ValueError):
            BeamConfig(min_len=2)
        with pytest.raises(ValueError):
            BeamConfig(min_len=4, max_len=3)


class TestPlantedPipeline:
    def test_templates_recovered_end_to_end(self):
        planted = build_planted(20_000, n_templates=5, seed=1)
        corpus = planted.corpus
        matrix = build_matrix(count_pairs(corpus), 3)
        config = BeamConfig(max_len=6)
        candidates = beam_search_candidates(corpus, matrix, config)
        grammar, score = select_grammar(candidates, corpus, max_len=6)
        selected = {c.slots for c in grammar.constructions}
        for template in planted.templates:
            assert template in selected
        baseline = data_cost(Grammar(()), corpus)
        assert score.total < baseline
        # every semantic constraint refers to a real lexicon cluster
        k = max(planted.lexicon.values()) + 1
        from constructicon.association import Level
        for construction in grammar.constructions:
            for slot in construction.slots:
                if slot.level is Level.SEM:
                    assert 0 <= slot.value < k


def subcorpus(*present: bool) -> list[EncodedCorpus]:
    """Sub-corpora that do or do not contain the probe trigram "a b c"."""
    out = []
    for has in present:
        if has:
            out.append(corp(sent(tok("a", "DET"), tok("b", "NOUN"), tok("c", "VERB"))))
        else:
            out.append(corp(sent(tok("x", "DET"), tok("y", "NOUN"), tok("z", "VERB"))))
    return out


class TestPruneByExposure:
    PROBE = Construction(0, (lex("a"), lex("b"), lex("c")))

    def test_absent_four_consecutive_removed(self):
        grammar = Grammar((self.PROBE,))
        pruned = prune_by_exposure(grammar, subcorpus(False, False, False, False))
        assert len(pruned) == 0

    def test_observed_everywhere_retained_at_full_weight(self):
        grammar = Grammar((self.PROBE,))
        pruned = prune_by_exposure(grammar, subcorpus(True, True, True, True, True))
        assert len(pruned) == 1
        assert pruned.constructions[0].weight == 1.0

    def test_absent3_observed_absent3_weight(self):
        grammar = Grammar((self.PROBE,))
        pattern = [False, False, False, True, False, False, False]
        pruned = prune_by_exposure(grammar, subcorpus(*pattern))
        assert len(pruned) == 1
        assert pruned.constructions[0].weight == pytest.approx(0.25)

    def test_absent3_then_observed_back_to_one(self):
        grammar = Grammar((self.PROBE,))
        pruned = prune_by_exposure(grammar, subcorpus(False, False, False, True))
        assert len(pruned) == 1
        assert pruned.constructions[0].weight == 1.0

    def test_half_decay_removes_after_two(self):
        grammar = Grammar((self.PROBE,))
        assert len(prune_by_exposure(grammar, subcorpus(False, False), 0.5)) == 0
        assert len(prune_by_exposure(grammar, subcorpus(False, True), 0.5)) == 1

    def test_no_revival_after_removal(self):
        grammar = Grammar((self.PROBE,))
        pattern = [False] * 4 + [True] * 4
        assert len(prune_by_exposure(grammar, subcorpus(*pattern))) == 0

    def test_bad_decay(self):
        grammar = Grammar((self.PROBE,))
        for decay in (0.0, -0.5, 1.5):
            with pytest.raises(ValueError):
                prune_by_exposure(grammar, subcorpus(True), decay)

    def test_deterministic(self):
        rng = random.Random(4)
        grammar = Grammar((
            self.PROBE,
            Construction(1, (lex("x"), lex("y"), lex("z"))),
        ))
        subs = subcorpus(*(rng.random() < 0.5 for _ in range(10)))
        first = prune_by_exposure(grammar, subs)
        second = prune_by_exposure(grammar, subs)
        assert first == second

    def test_no_nonpositive_weight_survives(self):
        rng = random.Random(9)
        grammar = Grammar((self.PROBE,
                           Construction(1, (lex("x"), lex("y"), lex("z")))))
        for trial in range(20):
            subs = subcorpus(*(rng.random() < 0.4 for _ in range(8)))
            pruned = prune_by_exposure(grammar, subs)
            assert all(c.weight > 0 for c in pruned.constructions)


class TestGrammarSerialization:
    GRAMMAR = Grammar((
        Construction(1, (syn("AUX"), lex("being"), syn("VERB")), weight=1.0),
        Construction(4, (syn("VERB"), syn("ADP"), syn("DET"), sem(521)), weight=0.5),
    ))

    def test_jsonl_roundtrip(self, tmp_path):
        path = tmp_path / "grammar.jsonl"
        write_grammar(self.GRAMMAR, path)
        back = read_grammar(path)
        assert back.constructions == self.GRAMMAR.constructions

    def test_dash_notation(self):
        assert format_construction(self.GRAMMAR.constructions[0]) == \
            'AUX -- "being" -- VERB'
        assert format_construction(self.GRAMMAR.constructions[1]) == \
            "VERB -- ADP -- DET -- <521>"

    def test_duplicate_ids_rejected(self):
        with pytest.raises(ValueError, match="unique"):
            Grammar((Construction(1, (lex("a"), lex("b"), lex("c"))),
                     Construction(1, (lex("d"), lex("e"), lex("f")))))

    def test_duplicate_slot_sequences_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            Grammar((Construction(1, (lex("a"), lex("b"), lex("c"))),
                     Construction(2, (lex("a"), lex("b"), lex("c")))))

    def test_bad_file_rejected(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": 1, "weight": 1.0, "slots": [{"level": "SEM", '
                        '"value": "not-an-int"}, {"level": "LEX", "value": "a"}, '
                        '{"level": "LEX", "value": "b"}]}\n')
        with pytest.raises(ParseError):
            read_grammar(path)

    def test_duplicate_ids_in_file(self, tmp_path):
        path = tmp_path / "dup.jsonl"
        write_grammar(Grammar((Construction(1, (lex("a"), lex("b"), lex("c"))),)), path)
        line = path.read_text()
        path.write_text(line + '{"id": 1, "weight": 1.0, "slots": '
                        '[{"level": "LEX", "value": "x"}, {"level": "LEX", "value": '
                        '"y"}, {"level": "LEX", "value": "z"}]}\n')
        with pytest.raises(InputError):
            read_grammar(path)


def test_construction_validation():
    with pytest.raises(ValueError):
        Construction(0, (lex("a"), lex("b")))
    with pytest.raises(ValueError):
        Construction(0, (lex("a"), lex("b"), lex("c")), weight=1.5)


def test_mdl_score_validation():
    with pytest.raises(ValueError):
        MdlScore(-1.0, 0.0)
    score = MdlScore(2.0, 3.0)
    assert score.total == 5.0


def test_corpus_vocab_sizes():
    corpus = corp(sent(tok("a", "DET", 0), tok("b", "NOUN", 5), tok("a", "DET", 0)))
    vocab = corpus_vocab_sizes(corpus)
    assert vocab.lex == 2
    assert vocab.syn == 17
    assert vocab.sem == 2
    assert corpus_vocab_sizes(corpus, sem_k=40).sem == 40
    with pytest.raises(ValueError):
        VocabSizes(0, 17, 1)
