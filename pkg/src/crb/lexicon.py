"""Canonical diagnosis-entity lexicon with bilingual surface forms.

The shipped default (``crb/data/lexicon.jsonl``) covers the full disease /
treatment-status vocabulary with one ICD-10 code per entity. Users can load
their own file in the same line-delimited format to extend matching.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from crb.core import read_records

_ICD10_RE = re.compile(r"^[A-Z]\d+(\.\d+)?$")


@dataclass(frozen=True)
class LexiconEntry:
    canonical_id: str
    display_en: str
    icd10: str
    surfaces_en: tuple[str, ...]
    surfaces_zh: tuple[str, ...]


@dataclass(frozen=True)
class EntityLexicon:
    entries: tuple[LexiconEntry, ...]

    def __post_init__(self):
        seen: set[str] = set()
        for e in self.entries:
            if e.canonical_id in seen:
                raise ValueError(f"duplicate canonical_id: {e.canonical_id}")
            seen.add(e.canonical_id)
            if not e.surfaces_en or not e.surfaces_zh:
                raise ValueError(f"{e.canonical_id}: needs >= 1 surface per language")
            if not _ICD10_RE.match(e.icd10):
                raise ValueError(f"{e.canonical_id}: malformed ICD-10 code {e.icd10!r}")
            if any(s != s.lower() for s in e.surfaces_en):
                raise ValueError(f"{e.canonical_id}: English surfaces must be lowercase")

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, canonical_id: str) -> bool:
        return any(e.canonical_id == canonical_id for e in self.entries)

    def get(self, canonical_id: str) -> LexiconEntry:
        for e in self.entries:
            if e.canonical_id == canonical_id:
                return e
        raise KeyError(canonical_id)

    def ids(self) -> list[str]:
        return [e.canonical_id for e in self.entries]


def load_lexicon(path: str | Path | None = None) -> EntityLexicon:
    """Load a lexicon file; with no path, load the shipped default."""
    if path is None:
        ref = resources.files("crb").joinpath("data/lexicon.jsonl")
        with resources.as_file(ref) as p:
            return load_lexicon(p)
    entries = tuple(
        LexiconEntry(
            canonical_id=d["canonical_id"],
            display_en=d["display_en"],
            icd10=d["icd10"],
            surfaces_en=tuple(d["surfaces_en"]),
            surfaces_zh=tuple(d["surfaces_zh"]),
        )
        for d in read_records(path)
    )
    return EntityLexicon(entries)
