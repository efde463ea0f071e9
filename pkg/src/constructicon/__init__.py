"""Construction grammar induction and corpus profiling."""

from .association import (AssociationMatrix, ContingencyCounts, Direction,
                          Level, SlotFiller, build_matrix, count_pairs, delta_p)
from .categories import EmbeddingTable, SemanticLexicon, kmeans, lookup, read_embedding_table
from .corpus import (OOV, UPOS_TAGS, EncodedCorpus, Sentence, Token,
                     attach_semantics, read_tagged_corpus, split_subcorpora)
from .induction import (BeamConfig, Construction, Grammar, MdlScore,
                        beam_search_candidates, data_cost, grammar_cost,
                        prune_by_exposure, select_grammar)
from .matcher import (FrequencyProfile, Match, match_sentence, profile_corpus,
                      realizations)
from .analytics import (CATEGORIES, CategoryDistribution, CategoryLabel,
                        DeltaMatrix, Dendrogram, burrows_delta,
                        category_distribution, clip_pairs, to_newick, upgma)

__version__ = "0.1.0"
