"""Article corpus loading, keyphrase filtering, truncation, and mention extraction.

Corpora are JSON Lines files, one article per line. Mentions either arrive
pre-extracted in the file (an upstream NER pass) or are found here by scanning
title+text against a gazetteer alias index.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, replace
from datetime import date
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator

logger = logging.getLogger(__name__)

DEFAULT_WORD_BUDGET = 100


class EntityType(Enum):
    POL = "POL"
    DIR = "DIR"
    BUR = "BUR"
    ORG = "ORG"
    PERSON = "PERSON"
    UNKNOWN = "UNKNOWN"

    @classmethod
    def parse(cls, value: str | None) -> "EntityType":
        if not value:
            return cls.UNKNOWN
        try:
            return cls(value.strip().upper())
        except ValueError:
            return cls.UNKNOWN


#: Entity types treated as person-kind when building person-only graphs.
PERSON_KINDS = frozenset(
    {EntityType.POL, EntityType.DIR, EntityType.BUR, EntityType.PERSON, EntityType.UNKNOWN}
)


class CorpusError(Exception):
    """Base error for corpus loading problems."""


class EmptyCorpusError(CorpusError):
    """Raised when a corpus file yields zero parseable article records."""


@dataclass(frozen=True)
class ArticleRecord:
    """One news article with its retained text and (optional) mention list."""

    article_id: str
    source: str
    publish_date: date
    title: str
    text: str
    mentions: tuple[str, ...] = ()

    def to_json(self) -> dict:
        record = {
            "article_id": self.article_id,
            "source": self.source,
            "publish_date": self.publish_date.isoformat(),
            "title": self.title,
            "text": self.text,
        }
        if self.mentions:
            record["mentions"] = list(self.mentions)
        return record


@dataclass(frozen=True)
class KeyphraseQuery:
    """OR-semantics keyphrase filter; phrases are matched as lowercase substrings."""

    phrases: tuple[str, ...]

    def __post_init__(self) -> None:
        cleaned = tuple(p.strip().lower() for p in self.phrases)
        if not cleaned:
            raise ValueError("keyphrase query needs at least one phrase")
        if any(not p for p in cleaned):
            raise ValueError("keyphrase query contains an empty phrase")
        object.__setattr__(self, "phrases", cleaned)

    def matches(self, text: str) -> bool:
        lowered = text.lower()
        return any(p in lowered for p in self.phrases)


@dataclass(frozen=True)
class EntityIndexRecord:
    name: str
    aliases: frozenset[str]
    entity_type: EntityType


class EntityIndex:
    """Gazetteer of entity names, aliases, and types with case-insensitive lookup."""

    def __init__(self, records: Iterable[tuple[str, Iterable[str], EntityType]]):
        self.records: list[EntityIndexRecord] = []
        self._by_alias: dict[str, EntityIndexRecord] = {}
        for name, aliases, entity_type in records:
            alias_set = frozenset({name} | set(aliases))
            record = EntityIndexRecord(name, alias_set, entity_type)
            self.records.append(record)
            for alias in alias_set:
                self._by_alias.setdefault(alias.lower(), record)

    def lookup(self, alias: str) -> EntityIndexRecord | None:
        return self._by_alias.get(alias.lower())

    def type_of(self, alias: str) -> EntityType:
        record = self.lookup(alias)
        return record.entity_type if record else EntityType.UNKNOWN

    def aliases(self) -> Iterator[str]:
        """All aliases across records (original casing as stored)."""
        for record in self.records:
            yield from record.aliases

    def __len__(self) -> int:
        return len(self.records)


def load_entity_index(path: str | Path) -> EntityIndex:
    """Read a gazetteer CSV with header ``name,aliases,type``; aliases are |-separated."""
    rows = []
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        for row in reader:
            name = (row.get("name") or "").strip()
            if not name:
                continue
            aliases = [a.strip() for a in (row.get("aliases") or "").split("|") if a.strip()]
            rows.append((name, aliases, EntityType.parse(row.get("type"))))
    return EntityIndex(rows)


def load_keyphrases(path: str | Path) -> KeyphraseQuery:
    """Read one keyphrase per line; blank lines are ignored."""
    with open(path, encoding="utf-8") as handle:
        phrases = [line.strip() for line in handle if line.strip()]
    return KeyphraseQuery(tuple(phrases))


def _parse_article(obj: dict) -> ArticleRecord:
    mentions = obj.get("mentions") or []
    if not isinstance(mentions, list):
        raise ValueError("mentions must be an array")
    return ArticleRecord(
        article_id=str(obj["article_id"]),
        source=str(obj["source"]),
        publish_date=date.fromisoformat(obj["publish_date"]),
        title=str(obj["title"]),
        text=str(obj["text"]),
        mentions=tuple(str(m) for m in mentions),
    )


def load_articles(path: str | Path, query: KeyphraseQuery | None = None) -> list[ArticleRecord]:
    """Load a JSON Lines corpus, optionally keeping only keyphrase matches.

    Malformed lines are counted and skipped; a file with zero parseable
    records raises :class:`EmptyCorpusError`. The keyphrase filter applies to
    the lowercased title+text.
    """
    records: list[ArticleRecord] = []
    skipped = 0
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = _parse_article(json.loads(line))
            except (json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
                skipped += 1
                logger.warning("skipping malformed line %d of %s: %s", lineno, path, exc)
                continue
            records.append(record)
    if skipped:
        logger.warning("skipped %d malformed line(s) in %s", skipped, path)
    if not records:
        raise EmptyCorpusError(f"no parseable article records in {path}")
    if query is not None:
        records = [r for r in records if query.matches(r.title + " " + r.text)]
    return records


def save_articles(records: Iterable[ArticleRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record.to_json(), ensure_ascii=False) + "\n")


def truncate_article(article: ArticleRecord, budget: int = DEFAULT_WORD_BUDGET) -> ArticleRecord:
    """Keep the first ``budget`` whitespace-delimited tokens of the article text.

    Text already within budget is returned unchanged, which makes truncation
    idempotent. Punctuation stays attached to its token.
    """
    if budget < 1:
        raise ValueError("word budget must be >= 1")
    tokens = article.text.split()
    if len(tokens) <= budget:
        return article
    return replace(article, text=" ".join(tokens[:budget]))


def _is_word_char(ch: str) -> bool:
    return ch.isalnum()


def extract_mentions(article: ArticleRecord, index: EntityIndex) -> list[str]:
    """Gazetteer mentions in title+text, or the article's own mentions if present.

    Aliases match as case-insensitive whole-word substrings. The scan is
    greedy left-to-right with longest-match-first, so overlapping aliases are
    suppressed in favour of the longest one starting earliest. Each alias is
    reported once, ordered by first occurrence.
    """
    if article.mentions:
        return list(article.mentions)

    originals: dict[str, str] = {}
    for alias in index.aliases():
        originals.setdefault(alias.lower(), alias)
    if not originals:
        return []
    # Longest first so a nested alias never beats its extension at the same offset;
    # alphabetical tiebreak keeps the scan deterministic.
    aliases = sorted(originals, key=lambda a: (-len(a), a))

    haystack = (article.title + "\n" + article.text).lower()
    found: list[str] = []
    seen: set[str] = set()
    pos = 0
    end = len(haystack)
    while pos < end:
        if pos > 0 and _is_word_char(haystack[pos - 1]):
            pos += 1
            continue
        matched = None
        for alias in aliases:
            stop = pos + len(alias)
            if haystack.startswith(alias, pos) and (stop >= end or not _is_word_char(haystack[stop])):
                matched = alias
                break
        if matched is None:
            pos += 1
            continue
        if matched not in seen:
            seen.add(matched)
            found.append(originals[matched])
        pos += len(matched)
    return found
