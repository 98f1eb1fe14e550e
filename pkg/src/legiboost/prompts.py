"""Prompt cleaning: find chromatic terms and swap in the opposite color name.

Matching is case-insensitive on whole words (a word is a run of Unicode
alphanumerics), longest lexicon name first, so "dark sea green" wins over
"green". Words of a multiword name may be separated by whitespace or
hyphens; hyphenated compounds without a joined lexicon entry fall back to
matching each part independently.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .color import ColorLexicon, ColorRGB, nearest_color_name, opposite_color

_WORD_RE = re.compile(r"[^\W_]+", re.UNICODE)
_SEP_RE = re.compile(r"[-\s]+")


@dataclass(frozen=True)
class Prompt:
    """A generation prompt; must be non-empty after trimming."""

    text: str
    source: str = "user"  # "user" or "caption"

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("prompt text is empty")
        if self.source not in ("user", "caption"):
            raise ValueError(f"unknown prompt source {self.source!r}")


@dataclass(frozen=True)
class ColorTermSpan:
    """A detected chromatic term, addressed by UTF-8 byte offsets."""

    start: int
    end: int
    matched_name: str

    def __post_init__(self) -> None:
        if not (0 <= self.start < self.end):
            raise ValueError("invalid span offsets")


def _byte_offsets(text: str) -> list[int]:
    """Byte offset of each codepoint boundary (len = len(text) + 1)."""
    offsets = [0]
    total = 0
    for ch in text:
        total += len(ch.encode("utf-8"))
        offsets.append(total)
    return offsets


def detect_color_terms(p: Prompt, lex: ColorLexicon) -> list[ColorTermSpan]:
    """Non-overlapping chromatic term spans, sorted by start offset."""
    text = p.text
    tokens = [(m.start(), m.end(), m.group().casefold()) for m in _WORD_RE.finditer(text)]
    by_first: dict[str, list[tuple[tuple[str, ...], str]]] = {}
    for name, _ in lex.entries:
        words = tuple(w.casefold() for w in _WORD_RE.findall(name))
        if not words:
            continue
        by_first.setdefault(words[0], []).append((words, name))
    for cands in by_first.values():
        cands.sort(key=lambda wn: (-len(wn[0]), wn[1]))

    boffs = _byte_offsets(text)
    spans: list[ColorTermSpan] = []
    i = 0
    while i < len(tokens):
        matched = False
        for words, name in by_first.get(tokens[i][2], ()):
            j = i + len(words) - 1
            if j >= len(tokens):
                continue
            if any(tokens[i + k][2] != words[k] for k in range(len(words))):
                continue
            # Multiword names require adjacent tokens joined only by
            # whitespace or hyphens.
            ok = True
            for k in range(i, j):
                gap = text[tokens[k][1] : tokens[k + 1][0]]
                if not _SEP_RE.fullmatch(gap):
                    ok = False
                    break
            if ok:
                spans.append(
                    ColorTermSpan(boffs[tokens[i][0]], boffs[tokens[j][1]], name)
                )
                i = j + 1
                matched = True
                break
        if not matched:
            i += 1
    return spans


def clean_prompt(p: Prompt, asset_color: ColorRGB, lex: ColorLexicon) -> Prompt:
    """Replace every chromatic term with the asset's opposite color name.

    All spans receive the same substitute name; bytes outside the detected
    spans are preserved exactly.
    """
    spans = detect_color_terms(p, lex)
    if not spans:
        return p
    substitute = nearest_color_name(opposite_color(asset_color), lex)
    raw = p.text.encode("utf-8")
    sub = substitute.encode("utf-8")
    parts = []
    cursor = 0
    for span in spans:
        parts.append(raw[cursor : span.start])
        parts.append(sub)
        cursor = span.end
    parts.append(raw[cursor:])
    return Prompt(b"".join(parts).decode("utf-8"), p.source)
