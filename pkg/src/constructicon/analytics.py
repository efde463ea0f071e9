"""Grammar-level statistics, corpus distances, clustering, and clipping.

Constructions are annotated by hand into nine categories; the annotated
sample estimates the category distribution of the whole grammar. Corpus
distances use classic Burrows' Delta over per-million construction
frequencies: z-score each feature across the corpus set (population standard
deviation, zero-variance features dropped) and average the absolute z-score
differences. Hierarchical clustering is UPGMA by default, with single and
complete linkage available behind a flag.

Slot clipping is reported as enumeration only: ordered construction pairs
whose boundary slot-constraints overlap could unify into larger structures,
but no second-order grammar objects are built here.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InputError, ParseError, ValidationError
from .induction import Grammar
from .matcher import FrequencyProfile

CATEGORIES = (
    "Verbal", "Nominal", "Adjectival", "Adpositional", "Transitional",
    "Clausal", "Adverbial", "Sentential", "FixedIdiom",
)

LINKAGES = ("average", "single", "complete")


@dataclass(frozen=True)
class CategoryLabel:
    construction_id: int
    category: str

    def __post_init__(self) -> None:
        if self.category not in CATEGORIES:
            raise ValidationError(f"unknown category {self.category!r}")


@dataclass(frozen=True)
class CategoryDistribution:
    percentages: dict[str, float]
    sample_fraction: float | None = None

    def __post_init__(self) -> None:
        total = sum(self.percentages.values())
        if abs(total - 100.0) > 0.01:
            raise ValueError(f"percentages sum to {total}, expected 100")


@dataclass(frozen=True)
class DeltaMatrix:
    labels: tuple[str, ...]
    values: np.ndarray
    n_features: int

    def __post_init__(self) -> None:
        n = len(self.labels)
        if self.values.shape != (n, n):
            raise ValueError("distance matrix shape does not match labels")
        if not np.allclose(np.diag(self.values), 0.0):
            raise ValueError("distance matrix diagonal must be zero")
        if not np.allclose(self.values, self.values.T):
            raise ValueError("distance matrix must be symmetric")
        if (self.values < 0).any():
            raise ValueError("distances must be non-negative")

    def distance(self, a: str, b: str) -> float:
        i, j = self.labels.index(a), self.labels.index(b)
        return float(self.values[i, j])


@dataclass(frozen=True)
class Dendrogram:
    """Binary merge tree; `left`/`right` are Dendrograms or leaf label strings."""
    left: "Dendrogram | str"
    right: "Dendrogram | str"
    height: float

    def leaves(self) -> list[str]:
        out = []
        for child in (self.left, self.right):
            if isinstance(child, str):
                out.append(child)
            else:
                out.extend(child.leaves())
        return out


def load_labels(path: str | Path) -> list[CategoryLabel]:
    """Read ``cid<TAB>category`` rows; duplicate ids and unknown categories fail."""
    path = Path(path)
    labels: list[CategoryLabel] = []
    seen: set[int] = set()
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.rstrip("\n").split("\t")
            if len(fields) != 2:
                raise ParseError(f"expected 2 fields, got {len(fields)}", str(path), lineno)
            try:
                cid = int(fields[0])
            except ValueError as exc:
                raise ParseError(f"non-integer construction id {fields[0]!r}",
                                 str(path), lineno) from exc
            if cid in seen:
                raise ValidationError(f"duplicate label for construction {cid}")
            category = fields[1].strip()
            if category not in CATEGORIES:
                raise ValidationError(f"unknown category {category!r} ({path}:{lineno})")
            seen.add(cid)
            labels.append(CategoryLabel(cid, category))
    return labels


def category_distribution(labels: Sequence[CategoryLabel],
                          grammar_size: int | None = None) -> CategoryDistribution:
    """Percentage of labeled constructions per category.

    The labeled sample is assumed random, so the same percentages estimate
    the full grammar's composition.
    """
    if not labels:
        raise ValueError("category_distribution requires at least one label")
    counts = {category: 0 for category in CATEGORIES}
    for label in labels:
        counts[label.category] += 1
    n = len(labels)
    percentages = {category: 100.0 * count / n for category, count in counts.items()}
    fraction = len(labels) / grammar_size if grammar_size else None
    return CategoryDistribution(percentages, fraction)


def category_profile_table(
    profiles: Sequence[FrequencyProfile],
    labels: Sequence[CategoryLabel],
) -> dict[tuple[str, str], tuple[float, float]]:
    """Mean token frequency and mean type count per (category, corpus).

    Only labeled constructions contribute; categories with no labels report
    zeros. Raises when a label points at a construction missing from a
    profile.
    """
    by_category: dict[str, list[int]] = {category: [] for category in CATEGORIES}
    for label in labels:
        by_category[label.category].append(label.construction_id)
    table: dict[tuple[str, str], tuple[float, float]] = {}
    for profile in profiles:
        for category in CATEGORIES:
            cids = by_category[category]
            for cid in cids:
                if cid not in profile.entries:
                    raise ValueError(
                        f"label references unknown construction id {cid} "
                        f"(corpus {profile.label})")
            if cids:
                mean_tokens = sum(profile.entries[c].token_count for c in cids) / len(cids)
                mean_types = sum(profile.entries[c].type_count for c in cids) / len(cids)
            else:
                mean_tokens = mean_types = 0.0
            table[(category, profile.label)] = (mean_tokens, mean_types)
    return table


def burrows_delta(profiles: Sequence[FrequencyProfile],
                  n_features: int | None = None) -> DeltaMatrix:
    """Classic Burrows' Delta over per-million construction frequencies.

    Features are the `n_features` constructions with the highest summed
    per-million frequency across the corpora (all constructions when None).
    """
    if len(profiles) < 2:
        raise ValueError("burrows_delta requires at least two corpora")
    cids = set(profiles[0].entries)
    for profile in profiles[1:]:
        if set(profile.entries) != cids:
            raise InputError(
                f"profiles cover different grammars: {profile.label!r} "
                "does not share the construction inventory")
    ordered = sorted(cids)
    matrix = np.array([
        [profile.entries[cid].tokens_per_million for cid in ordered]
        for profile in profiles
    ])
    if n_features is not None and n_features < matrix.shape[1]:
        totals = matrix.sum(axis=0)
        # Highest summed frequency first; ties keep the lower id.
        keep = np.lexsort((np.arange(len(ordered)), -totals))[:n_features]
        keep.sort()
        matrix = matrix[:, keep]
    means = matrix.mean(axis=0)
    stds = matrix.std(axis=0)  # population standard deviation
    nonzero = stds > 0.0
    if not nonzero.any():
        raise ValueError("all features have zero variance across the corpora")
    z = (matrix[:, nonzero] - means[nonzero]) / stds[nonzero]
    n = len(profiles)
    values = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            values[i, j] = values[j, i] = float(np.mean(np.abs(z[i] - z[j])))
    labels = tuple(p.label for p in profiles)
    return DeltaMatrix(labels, values, int(nonzero.sum()))


def _cluster_key(cluster: tuple[str, ...]) -> tuple[str, ...]:
    return cluster


def hierarchical_cluster(delta: DeltaMatrix, linkage: str = "average") -> Dendrogram:
    """Agglomerative clustering; ties pick the label-sorted smallest pair."""
    if linkage not in LINKAGES:
        raise ValueError(f"unknown linkage {linkage!r} (expected one of {LINKAGES})")
    if len(delta.labels) < 2:
        raise ValueError("clustering requires at least two corpora")
    # Each active cluster: (sorted leaf tuple, node-or-label, size)
    active: list[tuple[tuple[str, ...], Dendrogram | str, int]] = [
        ((label,), label, 1) for label in delta.labels
    ]
    dist: dict[tuple[tuple[str, ...], tuple[str, ...]], float] = {}
    for i, (ka, _, _) in enumerate(active):
        for kb, _, _ in active[i + 1:]:
            a, b = sorted((ka, kb))
            dist[(a, b)] = delta.distance(ka[0], kb[0])

    def lookup(ka: tuple[str, ...], kb: tuple[str, ...]) -> float:
        a, b = sorted((ka, kb))
        return dist[(a, b)]

    while len(active) > 1:
        best = None
        for i in range(len(active)):
            for j in range(i + 1, len(active)):
                ka, kb = active[i][0], active[j][0]
                d = lookup(ka, kb)
                pair = tuple(sorted((ka, kb)))
                if best is None or (d, pair) < (best[0], best[1]):
                    best = (d, pair, i, j)
        d, _, i, j = best
        (ka, node_a, size_a) = active[i]
        (kb, node_b, size_b) = active[j]
        merged_key = tuple(sorted(ka + kb))
        left, right = (node_a, node_b) if ka <= kb else (node_b, node_a)
        merged = Dendrogram(left, right, d)
        remaining = [c for idx, c in enumerate(active) if idx not in (i, j)]
        for kc, _, size_c in remaining:
            da = lookup(ka, kc)
            db = lookup(kb, kc)
            if linkage == "average":
                new = (size_a * da + size_b * db) / (size_a + size_b)
            elif linkage == "single":
                new = min(da, db)
            else:
                new = max(da, db)
            a, b = sorted((merged_key, kc))
            dist[(a, b)] = new
        active = remaining + [(merged_key, merged, size_a + size_b)]

    root = active[0][1]
    assert isinstance(root, Dendrogram)
    _check_monotone(root)
    return root


def upgma(delta: DeltaMatrix) -> Dendrogram:
    return hierarchical_cluster(delta, "average")


def _check_monotone(node: Dendrogram, parent_height: float | None = None) -> None:
    if parent_height is not None and node.height > parent_height + 1e-9:
        raise RuntimeError("merge heights decreased toward the root")
    for child in (node.left, node.right):
        if isinstance(child, Dendrogram):
            _check_monotone(child, node.height)


def _newick_label(label: str) -> str:
    if any(ch in label for ch in " ,():;'\t"):
        return "'" + label.replace("'", "''") + "'"
    return label


def to_newick(root: Dendrogram) -> str:
    """Ultrametric Newick string; each side of a merge gets half its height."""

    def render(node: Dendrogram | str, parent_height: float) -> str:
        if isinstance(node, str):
            return f"{_newick_label(node)}:{parent_height / 2}"
        inner = ",".join(render(child, node.height)
                         for child in (node.left, node.right))
        branch = (parent_height - node.height) / 2
        return f"({inner}):{branch}"

    inner = ",".join(render(child, root.height)
                     for child in (root.left, root.right))
    return f"({inner});"


def render_dendrogram(root: Dendrogram) -> str:
    """Plain-text tree with merge heights, for terminal output."""
    lines: list[str] = []

    def walk(node: Dendrogram | str, prefix: str, tail: bool, top: bool) -> None:
        connector = "" if top else ("└─ " if tail else "├─ ")
        if isinstance(node, str):
            lines.append(prefix + connector + node)
            return
        lines.append(prefix + connector + f"({node.height:.4f})")
        child_prefix = prefix if top else prefix + ("   " if tail else "│  ")
        walk(node.left, child_prefix, False, False)
        walk(node.right, child_prefix, True, False)

    walk(root, "", True, True)
    return "\n".join(lines)


def clip_pairs(grammar: Grammar, max_overlap: int = 1) -> list[tuple[int, int, int]]:
    """Ordered pairs whose boundary slots overlap: (left id, right id, overlap).

    The last `o` slot-constraints of the left construction equal the first
    `o` of the right, for every o up to `max_overlap`. Self-pairs count.
    """
    if max_overlap < 1:
        raise ValueError("max_overlap must be >= 1")
    constructions = sorted(grammar.constructions, key=lambda c: c.id)
    by_prefix: dict[tuple, list[int]] = {}
    for construction in constructions:
        for o in range(1, min(max_overlap, len(construction.slots)) + 1):
            by_prefix.setdefault(construction.slots[:o], []).append(construction.id)
    out: list[tuple[int, int, int]] = []
    for construction in constructions:
        for o in range(1, min(max_overlap, len(construction.slots)) + 1):
            suffix = construction.slots[-o:]
            for rid in by_prefix.get(suffix, ()):
                out.append((construction.id, rid, o))
    out.sort()
    return out


# ---------------------------------------------------------------------------
# File formats


def write_delta_tsv(delta: DeltaMatrix, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("corpus\t" + "\t".join(delta.labels) + "\n")
        for i, label in enumerate(delta.labels):
            row = "\t".join(str(float(v)) for v in delta.values[i])
            handle.write(f"{label}\t{row}\n")


def read_delta_tsv(path: str | Path) -> DeltaMatrix:
    path = Path(path)
    with open(path, encoding="utf-8") as handle:
        lines = [line.rstrip("\n") for line in handle if line.strip()]
    if not lines:
        raise ParseError("empty distance matrix", str(path), 1)
    header = lines[0].split("\t")[1:]
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split("\t")
        if len(fields) != len(header) + 1:
            raise ParseError("matrix row width does not match header", str(path), lineno)
        rows.append([float(v) for v in fields[1:]])
    values = np.array(rows)
    try:
        return DeltaMatrix(tuple(header), values, n_features=0)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc


def write_distribution_tsv(distribution: CategoryDistribution, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("category\tpercent\n")
        ordered = sorted(distribution.percentages.items(),
                         key=lambda item: (-item[1], item[0]))
        for category, percent in ordered:
            handle.write(f"{category}\t{percent:.4f}\n")


def distribution_svg(distribution: CategoryDistribution) -> str:
    """Horizontal bar chart of the category distribution as standalone SVG."""
    ordered = sorted(distribution.percentages.items(),
                     key=lambda item: (-item[1], item[0]))
    bar_h, gap, left, width = 22, 6, 120, 640
    height = len(ordered) * (bar_h + gap) + gap
    peak = max((p for _, p in ordered), default=1.0) or 1.0
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'font-family="sans-serif" font-size="12">',
    ]
    y = gap
    for category, percent in ordered:
        w = (width - left - 70) * percent / peak
        parts.append(f'<text x="{left - 8}" y="{y + bar_h - 7}" '
                     f'text-anchor="end">{category}</text>')
        parts.append(f'<rect x="{left}" y="{y}" width="{w:.2f}" height="{bar_h}" '
                     f'fill="#4878a8"/>')
        parts.append(f'<text x="{left + w + 6:.2f}" y="{y + bar_h - 7}">'
                     f'{percent:.1f}%</text>')
        y += bar_h + gap
    parts.append("</svg>")
    return "\n".join(parts)


def write_table_tsv(table: dict[tuple[str, str], tuple[float, float]],
                    labels_order: Sequence[str], path: str | Path) -> None:
    """Category-by-corpus means: two columns (freq, type) per corpus."""
    with open(path, "w", encoding="utf-8") as handle:
        header = ["category"]
        for label in labels_order:
            header += [f"{label}_freq", f"{label}_type"]
        handle.write("\t".join(header) + "\n")
        for category in CATEGORIES:
            row = [category]
            for label in labels_order:
                freq, types = table[(category, label)]
                row += [f"{freq:.4f}", f"{types:.4f}"]
            handle.write("\t".join(row) + "\n")
