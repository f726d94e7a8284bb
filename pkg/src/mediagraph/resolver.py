"""Rule-based entity resolution: name preprocessing, six-filter matching, star clustering.

Two surface names merge only when every filter agrees: initials of one name
are a subset of the other's, both names have at least two tokens, first and
last tokens clear fuzzy-similarity thresholds, the full names agree
phonetically, and the combined first/surname score clears 0.85.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import EntityIndex, EntityType
from .phonetic import DEFAULT_CODE_LENGTH, phonetic_primary

#: Honorific tokens dropped during preprocessing (configurable per call).
DEFAULT_HONORIFICS = frozenset(
    {"mr", "mrs", "ms", "dr", "shri", "smt", "sri", "prof", "sir", "ji"}
)

_POSSESSIVE_RE = re.compile(r"[’']s\b")
_NON_ALNUM_RE = re.compile(r"[^0-9a-z]+")
_JI_SUFFIX_MIN_STEM = 4


class EmptyNameError(ValueError):
    """Raised when a raw name normalizes to zero tokens."""


class UndefinedFmpError(ValueError):
    """Raised when a false-miss rate is requested with FN+TP == 0."""


@dataclass(frozen=True)
class NormalizedName:
    raw: str
    tokens: tuple[str, ...]

    def joined(self) -> str:
        return " ".join(self.tokens)


@dataclass(frozen=True)
class MatchThresholds:
    """Similarity cutoffs for the pairwise name filters."""

    first_name_min: float = 0.75
    surname_min: float = 0.8
    combined_min: float = 0.85
    phonetic_code_length: int = DEFAULT_CODE_LENGTH


DEFAULT_THRESHOLDS = MatchThresholds()


@dataclass
class ResolvedCluster:
    canonical: str
    aliases: set[str]
    entity_type: EntityType = EntityType.UNKNOWN


@dataclass
class ErEvalReport:
    false_hit_rate_pct: float
    accuracy_pct: float
    per_cluster_error: list[tuple[int, float]]
    fmp: float | None = None


def preprocess_name(raw: str, honorifics: frozenset[str] = DEFAULT_HONORIFICS) -> NormalizedName:
    """Lowercase, strip possessives/punctuation/honorifics, and stem 'ji' suffixes."""
    if not raw or not raw.strip():
        raise EmptyNameError("empty name")
    lowered = raw.lower()
    lowered = _POSSESSIVE_RE.sub("", lowered)
    lowered = _NON_ALNUM_RE.sub(" ", lowered)
    tokens = []
    for token in lowered.split():
        if token in honorifics:
            continue
        if token.endswith("ji") and len(token) - 2 >= _JI_SUFFIX_MIN_STEM:
            token = token[:-2]
        tokens.append(token)
    if not tokens:
        raise EmptyNameError(f"name {raw!r} normalizes to zero tokens")
    return NormalizedName(raw=raw, tokens=tuple(tokens))


def initials(name: NormalizedName) -> tuple[str, ...]:
    """Sorted set of token initials, e.g. [narendra, singh, tomar] -> (n, s, t)."""
    if not name.tokens:
        raise ValueError("name has no tokens")
    return tuple(sorted({token[0] for token in name.tokens}))


def levenshtein_similarity(a: str, b: str) -> float:
    """1 - editDistance(a, b) / max(|a|, |b|); 1.0 when both strings are empty."""
    if not a and not b:
        return 1.0
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            current.append(
                min(
                    previous[j] + 1,
                    current[j - 1] + 1,
                    previous[j - 1] + (ca != cb),
                )
            )
        previous = current
    return 1.0 - previous[len(b)] / len(a)


def _token_similarity(a: str, b: str) -> float:
    # Single-letter abbreviations ("d" in "john d") count as a full match on
    # the counterpart's initial.
    if len(a) == 1 or len(b) == 1:
        if a[0] == b[0]:
            return 1.0
    return levenshtein_similarity(a, b)


def _surname_similarity(p: NormalizedName, e: NormalizedName) -> float:
    candidates = [_token_similarity(p.tokens[-1], e.tokens[-1])]
    shorter, longer = (p, e) if len(p.tokens) <= len(e.tokens) else (e, p)
    if len(shorter.tokens) < len(longer.tokens):
        k = len(shorter.tokens)
        # Names like "lalu prasad" / "lalu prasad yadav" share their leading
        # tokens; align the shorter name's surname with the same position of
        # the longer name instead of forcing a last-vs-last comparison.
        if shorter.tokens[:-1] == longer.tokens[: k - 1]:
            candidates.append(_token_similarity(shorter.tokens[-1], longer.tokens[k - 1]))
    return max(candidates)


def match_names(
    p: NormalizedName,
    e: NormalizedName,
    thresholds: MatchThresholds = DEFAULT_THRESHOLDS,
) -> bool:
    """True when every filter admits the pair. Symmetric in its arguments."""
    if len(p.tokens) < 2 or len(e.tokens) < 2:
        return False
    ip, ie = set(initials(p)), set(initials(e))
    if not (ip <= ie or ie <= ip):
        return False
    first_sim = _token_similarity(p.tokens[0], e.tokens[0])
    if first_sim <= thresholds.first_name_min:
        return False
    surname_sim = _surname_similarity(p, e)
    if surname_sim <= thresholds.surname_min:
        return False
    if (first_sim + surname_sim) / 2.0 < thresholds.combined_min:
        return False
    code_p = phonetic_primary("".join(p.tokens), thresholds.phonetic_code_length)
    code_e = phonetic_primary("".join(e.tokens), thresholds.phonetic_code_length)
    return code_p == code_e


def _seed_order_key(name: NormalizedName) -> tuple:
    joined = name.joined()
    return (-len(name.tokens), -len(joined), joined, name.raw)


def _canonical_of(aliases: Iterable[str]) -> str:
    return sorted(aliases, key=lambda a: (-len(a), a))[0]


def resolve_all(
    names: Sequence[str],
    index: EntityIndex | None = None,
    thresholds: MatchThresholds = DEFAULT_THRESHOLDS,
) -> list[ResolvedCluster]:
    """Star-cluster raw surface names into resolved alias clusters.

    Seeds are processed longest-name-first (token count, then character
    length) so canonical-rich variants anchor their clusters; every input name
    lands in exactly one cluster. Unparseable names (nothing left after
    preprocessing) become singleton clusters. Entity types are looked up in
    the gazetteer when one is given: the first non-UNKNOWN type among a
    cluster's members wins.
    """
    if not names:
        raise ValueError("resolve_all needs at least one name")

    unique_raws = list(dict.fromkeys(names))
    normalized: list[NormalizedName] = []
    degenerate: list[str] = []
    for raw in unique_raws:
        try:
            normalized.append(preprocess_name(raw))
        except EmptyNameError:
            degenerate.append(raw)

    unresolved = sorted(normalized, key=_seed_order_key)
    clusters: list[ResolvedCluster] = []
    while unresolved:
        seed = unresolved.pop(0)
        members = [seed]
        rest = []
        for candidate in unresolved:
            if match_names(seed, candidate, thresholds):
                members.append(candidate)
            else:
                rest.append(candidate)
        unresolved = rest
        clusters.append(_make_cluster([m.raw for m in members], index))

    for raw in degenerate:
        clusters.append(_make_cluster([raw], index))
    return clusters


def _make_cluster(raw_members: list[str], index: EntityIndex | None) -> ResolvedCluster:
    entity_type = EntityType.UNKNOWN
    if index is not None:
        for raw in raw_members:
            found = index.type_of(raw)
            if found is not EntityType.UNKNOWN:
                entity_type = found
                break
    return ResolvedCluster(
        canonical=_canonical_of(raw_members),
        aliases=set(raw_members),
        entity_type=entity_type,
    )


def er_evaluate(
    clusters: Sequence[ResolvedCluster],
    annotations: Mapping[int, Mapping[str, int]],
    fn_count: int | None = None,
    tp_count: int | None = None,
) -> ErEvalReport:
    """Score resolution quality from per-member validity annotations.

    ``annotations`` maps cluster index -> member -> 1 (valid) / 0 (invalid)
    and must cover every member of every cluster. The false-hit rate is the
    mean per-cluster invalid fraction (in percent); the false-miss fraction
    FMP = FN / (FN + TP) is computed only when both counts are supplied.
    """
    per_cluster: list[tuple[int, float]] = []
    for cid, cluster in enumerate(clusters):
        labels = annotations.get(cid)
        if labels is None:
            raise KeyError(f"no annotations for cluster {cid}")
        invalid = 0
        for member in cluster.aliases:
            if member not in labels:
                raise KeyError(f"cluster {cid} member {member!r} is not annotated")
            invalid += 0 if labels[member] else 1
        per_cluster.append((cid, invalid / len(cluster.aliases)))

    if not per_cluster:
        raise ValueError("no clusters to evaluate")
    false_hit_pct = 100.0 * sum(frac for _, frac in per_cluster) / len(per_cluster)

    fmp: float | None = None
    if fn_count is not None or tp_count is not None:
        fn = fn_count or 0
        tp = tp_count or 0
        if fn + tp == 0:
            raise UndefinedFmpError("FMP undefined: FN + TP == 0")
        fmp = fn / (fn + tp)

    return ErEvalReport(
        false_hit_rate_pct=false_hit_pct,
        accuracy_pct=100.0 - false_hit_pct,
        per_cluster_error=per_cluster,
        fmp=fmp,
    )


def save_clusters(clusters: Iterable[ResolvedCluster], path: str | Path) -> None:
    """Write clusters as JSON Lines: {canonical, aliases[], type}."""
    with open(path, "w", encoding="utf-8") as handle:
        for cluster in clusters:
            handle.write(
                json.dumps(
                    {
                        "canonical": cluster.canonical,
                        "aliases": sorted(cluster.aliases),
                        "type": cluster.entity_type.value,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def load_clusters(path: str | Path) -> list[ResolvedCluster]:
    clusters = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            clusters.append(
                ResolvedCluster(
                    canonical=obj["canonical"],
                    aliases=set(obj["aliases"]),
                    entity_type=EntityType.parse(obj.get("type")),
                )
            )
    return clusters


def load_annotations(path: str | Path) -> dict[int, dict[str, int]]:
    """Read an annotation CSV with header ``cluster_id,member,valid``."""
    annotations: dict[int, dict[str, int]] = {}
    with open(path, newline="", encoding="utf-8") as handle:
        for row in csv.DictReader(handle):
            cid = int(row["cluster_id"])
            annotations.setdefault(cid, {})[row["member"]] = int(row["valid"])
    return annotations


def alias_to_canonical(clusters: Iterable[ResolvedCluster]) -> dict[str, str]:
    """Map every alias (case-insensitive) to its cluster canonical."""
    mapping: dict[str, str] = {}
    for cluster in clusters:
        for alias in cluster.aliases:
            mapping.setdefault(alias.lower(), cluster.canonical)
    return mapping
