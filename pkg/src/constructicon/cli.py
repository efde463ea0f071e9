"""Command-line pipeline orchestration.

Configuration is a flat ``key = value`` file; any key can be overridden by
the matching command-line flag, and every resolved value is echoed next to a
command's outputs so a run can be reproduced exactly. All randomness flows
from the single ``seed`` key.

Exit codes: 0 success, 1 internal invariant violation, 2 user/input error.
"""

from __future__ import annotations

import argparse
import json
import sys
import traceback
from dataclasses import dataclass, fields, replace
from pathlib import Path

from . import analytics, association, categories, corpus as corpus_mod, induction, matcher
from .errors import InputError

SCHEMA_VERSION = 1


@dataclass
class PipelineConfig:
    corpus: str = ""
    format: str = "tsv"
    embeddings: str = ""
    lexicon: str = ""
    grammar: str = ""
    labels: str = ""
    eval_corpora: tuple[str, ...] = ()
    profiles: tuple[str, ...] = ()
    outdir: str = "out"
    k: int = categories.DEFAULT_K
    seed: int = 42
    max_words: int = categories.DEFAULT_MAX_WORDS
    max_iter: int = 100
    beam_width: int = induction.DEFAULT_BEAM_WIDTH
    min_len: int = induction.DEFAULT_MIN_LEN
    max_len: int = induction.DEFAULT_MAX_LEN
    dp_threshold: float = induction.DEFAULT_DP_THRESHOLD
    max_candidates: int = induction.DEFAULT_MAX_CANDIDATES
    min_pair_per_million: float = 5.0
    subcorpus_size: int = induction.DEFAULT_SUBCORPUS_SIZE
    decay: float = induction.DEFAULT_DECAY
    n_features: int = 0
    linkage: str = "average"
    max_overlap: int = 1
    drop_punct: bool = True
    threads: int = 1
    dump_matrix: bool = False
    svg: bool = False


_LIST_KEYS = {"eval_corpora", "profiles"}


def _coerce(key: str, raw: str, kind) -> object:
    raw = raw.strip()
    if key in _LIST_KEYS:
        return tuple(part.strip() for part in raw.split(",") if part.strip())
    if kind is bool:
        lowered = raw.lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise InputError(f"config key {key}: expected a boolean, got {raw!r}")
    try:
        return kind(raw)
    except ValueError as exc:
        raise InputError(f"config key {key}: {exc}") from exc


def load_config_file(path: str | Path) -> dict[str, object]:
    kinds = {f.name: f.type for f in fields(PipelineConfig)}
    types = {"str": str, "int": int, "float": float, "bool": bool,
             "tuple[str, ...]": tuple}
    values: dict[str, object] = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise InputError(f"{path}:{lineno}: expected 'key = value'")
            key, _, raw = stripped.partition("=")
            key = key.strip()
            if key not in kinds:
                raise InputError(f"{path}:{lineno}: unknown config key {key!r}")
            values[key] = _coerce(key, raw, types[str(kinds[key])])
    return values


def resolve_config(args: argparse.Namespace) -> PipelineConfig:
    config = PipelineConfig()
    config_path = getattr(args, "config", None)
    if config_path:
        config = replace(config, **load_config_file(config_path))
    overrides = {}
    for f in fields(PipelineConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            if f.name in _LIST_KEYS and isinstance(value, str):
                value = tuple(p.strip() for p in value.split(",") if p.strip())
            overrides[f.name] = value
    return replace(config, **overrides)


def _echo_config(config: PipelineConfig, outdir: Path, command: str) -> None:
    lines = [f"schema_version = {SCHEMA_VERSION}"]
    for f in sorted(fields(PipelineConfig), key=lambda f: f.name):
        value = getattr(config, f.name)
        if isinstance(value, tuple):
            value = ",".join(value)
        lines.append(f"{f.name} = {value}")
    (outdir / f"{command}.config.txt").write_text("\n".join(lines) + "\n",
                                                  encoding="utf-8")


def _outdir(config: PipelineConfig) -> Path:
    path = Path(config.outdir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _corpus_label(path: str) -> str:
    return Path(path).stem


def _load_lexicon(config: PipelineConfig, outdir: Path):
    path = Path(config.lexicon) if config.lexicon else outdir / "lexicon.tsv"
    if path.exists():
        return categories.read_lexicon(path)
    if config.lexicon:
        raise InputError(f"lexicon file not found: {path}")
    return None


def _read_encoded(path: str, config: PipelineConfig, lexicon,
                  register_tag: str | None = None) -> corpus_mod.EncodedCorpus:
    loaded = corpus_mod.read_tagged_corpus(path, config.format,
                                           register_tag or _corpus_label(path))
    if config.drop_punct:
        loaded = corpus_mod.drop_punct(loaded)
    if lexicon is not None:
        loaded = corpus_mod.attach_semantics(loaded, lexicon)
    return loaded


def _grammar_path(config: PipelineConfig, outdir: Path, prefer_pruned: bool) -> Path:
    if config.grammar:
        return Path(config.grammar)
    pruned = outdir / "grammar.pruned.jsonl"
    if prefer_pruned and pruned.exists():
        return pruned
    return outdir / "grammar.jsonl"


def _write_grammar_outputs(grammar: induction.Grammar, path: Path) -> None:
    induction.write_grammar(grammar, path)
    dump = path.with_suffix(".txt")
    with open(dump, "w", encoding="utf-8") as handle:
        for construction in grammar.constructions:
            handle.write(f"{construction.id}\t{construction.weight}\t"
                         f"{induction.format_construction(construction)}\n")


def cmd_categories(config: PipelineConfig) -> None:
    outdir = _outdir(config)
    if not config.embeddings:
        raise InputError("cmd_categories requires an 'embeddings' path")
    table = categories.read_embedding_table(config.embeddings, config.max_words)
    lexicon = categories.kmeans(table, config.k, config.seed, config.max_iter)
    categories.write_lexicon(lexicon, outdir / "lexicon.tsv")
    _echo_config(config, outdir, "categories")
    print(f"wrote {outdir / 'lexicon.tsv'} ({len(lexicon.assignment)} forms, "
          f"k={lexicon.k})")


def cmd_learn(config: PipelineConfig) -> None:
    outdir = _outdir(config)
    if not config.corpus:
        raise InputError("cmd_learn requires a 'corpus' path")
    lexicon = _load_lexicon(config, outdir)
    encoded = _read_encoded(config.corpus, config, lexicon)
    if encoded.word_count == 0:
        raise InputError(f"empty corpus: {config.corpus}")

    min_pair_freq = association.default_min_pair_freq(
        encoded.word_count, config.min_pair_per_million)
    counts = association.count_pairs(encoded)
    matrix = association.build_matrix(counts, min_pair_freq)
    if config.dump_matrix:
        association.write_matrix_tsv(matrix, outdir / "matrix.tsv")

    beam = induction.BeamConfig(
        beam_width=config.beam_width, min_len=config.min_len,
        max_len=config.max_len, dp_threshold=config.dp_threshold,
        max_candidates=config.max_candidates)
    candidates = induction.beam_search_candidates(encoded, matrix, beam)
    vocab = induction.corpus_vocab_sizes(
        encoded, sem_k=lexicon.k if lexicon is not None else None)
    baseline = encoded.word_count * induction.literal_cost(vocab)
    if candidates:
        grammar, score = induction.select_grammar(candidates, encoded, vocab,
                                                  max_len=config.max_len)
    else:
        grammar = induction.Grammar((), config={"max_len": config.max_len})
        score = induction.MdlScore(0.0, baseline)

    _write_grammar_outputs(grammar, outdir / "grammar.jsonl")
    report = {
        "grammar_bits": score.grammar_bits,
        "data_bits": score.data_bits,
        "total": score.total,
        "baseline_bits": baseline,
        "constructions": len(grammar),
        "candidates": len(candidates),
        "min_pair_freq": min_pair_freq,
        "word_count": encoded.word_count,
    }
    (outdir / "mdl_report.json").write_text(
        json.dumps(report, indent=2) + "\n", encoding="utf-8")
    _echo_config(config, outdir, "learn")
    print(f"selected {len(grammar)} constructions "
          f"(MDL {score.total:.1f} vs baseline {baseline:.1f})")


def cmd_prune(config: PipelineConfig) -> None:
    outdir = _outdir(config)
    grammar = induction.read_grammar(_grammar_path(config, outdir, prefer_pruned=False))
    if not config.corpus:
        raise InputError("cmd_prune requires a 'corpus' path for exposure")
    lexicon = _load_lexicon(config, outdir)
    encoded = _read_encoded(config.corpus, config, lexicon)
    subcorpora = corpus_mod.split_subcorpora(encoded, config.subcorpus_size)
    pruned = induction.prune_by_exposure(grammar, subcorpora, config.decay)
    _write_grammar_outputs(pruned, outdir / "grammar.pruned.jsonl")
    _echo_config(config, outdir, "prune")
    print(f"pruned {len(grammar) - len(pruned)} of {len(grammar)} constructions "
          f"over {len(subcorpora)} sub-corpora")


def _eval_corpora(config: PipelineConfig, lexicon):
    if not config.eval_corpora:
        raise InputError("this command requires 'eval_corpora'")
    for path in config.eval_corpora:
        yield _corpus_label(path), _read_encoded(path, config, lexicon)


def cmd_annotate(config: PipelineConfig) -> None:
    outdir = _outdir(config)
    grammar = induction.read_grammar(_grammar_path(config, outdir, prefer_pruned=True))
    lexicon = _load_lexicon(config, outdir)
    for label, encoded in _eval_corpora(config, lexicon):
        stream = matcher.iter_matches(grammar, encoded, threads=config.threads)
        matcher.write_match_stream(stream, outdir / f"{label}.matches.jsonl")
    _echo_config(config, outdir, "annotate")


def cmd_profile(config: PipelineConfig) -> None:
    outdir = _outdir(config)
    grammar = induction.read_grammar(_grammar_path(config, outdir, prefer_pruned=True))
    lexicon = _load_lexicon(config, outdir)
    for label, encoded in _eval_corpora(config, lexicon):
        profile = matcher.profile_corpus(grammar, encoded, label=label,
                                         threads=config.threads)
        matcher.write_profile(profile, outdir / f"{label}.profile.tsv")
    _echo_config(config, outdir, "profile")


def _profile_paths(config: PipelineConfig, outdir: Path) -> list[Path]:
    if config.profiles:
        return [Path(p) for p in config.profiles]
    if config.eval_corpora:
        return [outdir / f"{_corpus_label(p)}.profile.tsv"
                for p in config.eval_corpora]
    raise InputError("cmd_delta requires 'profiles' or 'eval_corpora'")


def cmd_delta(config: PipelineConfig) -> None:
    outdir = _outdir(config)
    profiles = [matcher.read_profile(path) for path in _profile_paths(config, outdir)]
    n_features = config.n_features or None
    delta = analytics.burrows_delta(profiles, n_features)
    analytics.write_delta_tsv(delta, outdir / "delta.tsv")
    _echo_config(config, outdir, "delta")
    print(f"wrote {outdir / 'delta.tsv'} ({len(delta.labels)}x{len(delta.labels)}, "
          f"{delta.n_features} features)")


def cmd_cluster(config: PipelineConfig) -> None:
    outdir = _outdir(config)
    delta = analytics.read_delta_tsv(outdir / "delta.tsv")
    tree = analytics.hierarchical_cluster(delta, config.linkage)
    (outdir / "dendrogram.newick").write_text(analytics.to_newick(tree) + "\n",
                                              encoding="utf-8")
    (outdir / "dendrogram.txt").write_text(analytics.render_dendrogram(tree) + "\n",
                                           encoding="utf-8")
    _echo_config(config, outdir, "cluster")
    print(analytics.render_dendrogram(tree))


def cmd_clip(config: PipelineConfig) -> None:
    outdir = _outdir(config)
    grammar = induction.read_grammar(_grammar_path(config, outdir, prefer_pruned=True))
    pairs = analytics.clip_pairs(grammar, config.max_overlap)
    with open(outdir / "clips.tsv", "w", encoding="utf-8") as handle:
        handle.write("left_id\tright_id\toverlap\n")
        for left, right, overlap in pairs:
            handle.write(f"{left}\t{right}\t{overlap}\n")
    _echo_config(config, outdir, "clip")
    print(f"found {len(pairs)} clipping pairs")


def cmd_distribution(config: PipelineConfig) -> None:
    outdir = _outdir(config)
    if not config.labels:
        raise InputError("cmd_distribution requires a 'labels' path")
    labels = analytics.load_labels(config.labels)
    grammar_size = None
    grammar_path = _grammar_path(config, outdir, prefer_pruned=True)
    if grammar_path.exists():
        grammar_size = len(induction.read_grammar(grammar_path))
    distribution = analytics.category_distribution(labels, grammar_size)
    analytics.write_distribution_tsv(distribution, outdir / "distribution.tsv")
    if config.svg:
        (outdir / "distribution.svg").write_text(
            analytics.distribution_svg(distribution), encoding="utf-8")
    _echo_config(config, outdir, "distribution")


def cmd_table(config: PipelineConfig) -> None:
    outdir = _outdir(config)
    if not config.labels:
        raise InputError("cmd_table requires a 'labels' path")
    labels = analytics.load_labels(config.labels)
    profiles = [matcher.read_profile(path) for path in _profile_paths(config, outdir)]
    table = analytics.category_profile_table(profiles, labels)
    analytics.write_table_tsv(table, [p.label for p in profiles],
                              outdir / "category_table.tsv")
    _echo_config(config, outdir, "table")


def cmd_run_all(config: PipelineConfig) -> None:
    if config.embeddings:
        cmd_categories(config)
    cmd_learn(config)
    cmd_prune(config)
    if config.eval_corpora:
        cmd_annotate(config)
        cmd_profile(config)
        if len(config.eval_corpora) >= 2:
            cmd_delta(config)
            cmd_cluster(config)


COMMANDS = {
    "categories": cmd_categories,
    "learn": cmd_learn,
    "prune": cmd_prune,
    "annotate": cmd_annotate,
    "profile": cmd_profile,
    "delta": cmd_delta,
    "cluster": cmd_cluster,
    "clip": cmd_clip,
    "distribution": cmd_distribution,
    "table": cmd_table,
    "run-all": cmd_run_all,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="constructicon",
        description="Learn a construction grammar from tagged corpora and "
                    "profile corpora with it.")
    parser.add_argument("--version", action="version",
                        version=f"constructicon config-schema {SCHEMA_VERSION}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub = subparsers.add_parser(name)
        sub.add_argument("--config", help="flat key=value config file")
        for f in fields(PipelineConfig):
            flag = "--" + f.name.replace("_", "-")
            if f.type == "bool":
                sub.add_argument(flag, dest=f.name, default=None,
                                 action=argparse.BooleanOptionalAction)
            elif f.name in _LIST_KEYS:
                sub.add_argument(flag, dest=f.name, default=None,
                                 help="comma-separated list")
            else:
                kind = {"str": str, "int": int, "float": float}[str(f.type)]
                sub.add_argument(flag, dest=f.name, type=kind, default=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = resolve_config(args)
        COMMANDS[args.command](config)
    except (InputError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception:
        traceback.print_exc()
        return 1
    return 0


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
