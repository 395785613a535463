"""Bilingual report sectioning, tokenization, and lexicon entity extraction."""

from __future__ import annotations

import re
from dataclasses import dataclass

from crb.core import Language
from crb.errors import AmbiguousSection, MissingSection
from crb.lexicon import EntityLexicon

# Recognized section headers per language; both full-width and ASCII colons
# are accepted for Chinese.
_HEADERS = {
    Language.en: {"findings": ("Findings:",), "impression": ("Impression:",)},
    Language.zh: {
        "findings": ("影像所见：", "影像所见:"),
        "impression": ("诊断印象：", "诊断印象:"),
    },
}

_EN_STRIP = re.compile(r"^\W+|\W+$", re.UNICODE)
_CJK_RANGES = (
    (0x3400, 0x4DBF),
    (0x4E00, 0x9FFF),
    (0xF900, 0xFAFF),
)


@dataclass(frozen=True)
class TokenSequence:
    language: Language
    tokens: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.tokens)


def _find_header(raw: str, variants: tuple[str, ...], section: str) -> tuple[int, int]:
    """Return (start, end) of the single occurrence of a section header."""
    hits = []
    for v in variants:
        start = 0
        while True:
            i = raw.find(v, start)
            if i < 0:
                break
            hits.append((i, i + len(v)))
            start = i + 1
    if not hits:
        raise MissingSection(section)
    if len(hits) > 1:
        raise AmbiguousSection(f"{section}: {len(hits)} occurrences")
    return hits[0]


def parse_sections(raw: str, language: Language) -> dict[str, str]:
    """Split raw report text into its findings and impression bodies.

    Raises MissingSection / AmbiguousSection when a header is absent or
    duplicated. Multi-paragraph bodies and CRLF newlines pass through.
    """
    if not raw.strip():
        raise MissingSection("findings")
    headers = _HEADERS[language]
    f_start, f_end = _find_header(raw, headers["findings"], "findings")
    i_start, i_end = _find_header(raw, headers["impression"], "impression")
    if i_start < f_end:
        raise MissingSection("findings body (impression header precedes findings)")
    return {
        "findings": raw[f_end:i_start].strip(),
        "impression": raw[i_end:].strip(),
    }


def _is_cjk(ch: str) -> bool:
    cp = ord(ch)
    return any(lo <= cp <= hi for lo, hi in _CJK_RANGES)


def tokenize(text: str, language: Language) -> TokenSequence:
    """Language-aware tokenization for n-gram metrics.

    en: lowercase, whitespace split, leading/trailing punctuation stripped.
    zh: one token per CJK character; maximal ASCII alphanumeric runs (tooth
    numbers, measurements) stay intact; punctuation is dropped.
    """
    if language is Language.en:
        tokens = []
        for piece in text.lower().split():
            piece = _EN_STRIP.sub("", piece)
            if piece:
                tokens.append(piece)
        return TokenSequence(language, tuple(tokens))

    tokens = []
    run: list[str] = []
    for ch in text:
        if ch.isascii() and ch.isalnum():
            run.append(ch.lower())
            continue
        if run:
            tokens.append("".join(run))
            run = []
        if _is_cjk(ch):
            tokens.append(ch)
    if run:
        tokens.append("".join(run))
    return TokenSequence(language, tuple(tokens))


def _normalize_for_match(text: str, language: Language) -> str:
    if language is Language.en:
        return " ".join(tokenize(text, language).tokens)
    return text


def extract_entities(
    impression: str, language: Language, lexicon: EntityLexicon
) -> set[str]:
    """Canonical ids whose surface forms occur in the normalized impression.

    Longest surfaces are matched first and consume their spans, so a shorter
    surface inside an already-matched region cannot fire a second entity.
    """
    text = _normalize_for_match(impression, language)
    if not text:
        return set()

    surface_map: list[tuple[str, str]] = []
    for entry in lexicon.entries:
        surfaces = entry.surfaces_en if language is Language.en else entry.surfaces_zh
        for s in surfaces:
            s_norm = _normalize_for_match(s, language)
            if s_norm:
                surface_map.append((s_norm, entry.canonical_id))
    surface_map.sort(key=lambda sc: (-len(sc[0]), sc[0]))

    consumed: list[tuple[int, int]] = []
    found: set[str] = set()
    for surface, cid in surface_map:
        start = 0
        while True:
            i = text.find(surface, start)
            if i < 0:
                break
            span = (i, i + len(surface))
            if not any(span[0] < e and s < span[1] for s, e in consumed):
                consumed.append(span)
                found.add(cid)
            start = i + 1
    return found
