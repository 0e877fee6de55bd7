"""Brute-force reference implementations.

These share no logic with the construction pipeline: suffixes are compared
bytewise, occurrences found by sliding a window.  Slow on purpose; their
value is being obviously correct.
"""

from __future__ import annotations

from functools import cmp_to_key

from .text import Text

# Above this size, materializing one bytes key per suffix costs O(N^2) memory,
# so sorting falls back to a direct pairwise comparator.
_SLICE_KEY_LIMIT = 8192

_CHUNK = 64


def _suffix_cmp(data: bytes, p: int, q: int) -> int:
    """Compare suffixes at 0-based offsets p, q; the unique terminator
    guarantees a mismatch before either runs out."""
    if p == q:
        return 0
    i = 0
    while True:
        a = data[p + i : p + i + _CHUNK]
        b = data[q + i : q + i + _CHUNK]
        if a != b:
            return -1 if a < b else 1
        i += _CHUNK


def naive_suffix_array(text: Text) -> list[int]:
    """All N suffix start positions (1-based) in lexicographic suffix order."""
    data = text.data
    if text.n <= _SLICE_KEY_LIMIT:
        return sorted(range(1, text.n + 1), key=lambda p: data[p - 1 :])
    return sorted(range(1, text.n + 1), key=cmp_to_key(lambda p, q: _suffix_cmp(data, p - 1, q - 1)))


def naive_pair_lcp(text: Text, p: int, q: int) -> int:
    """Longest common prefix length of the suffixes at 1-based p and q."""
    data = text.data
    i, j = p - 1, q - 1
    k = 0
    while True:
        a = data[i + k : i + k + _CHUNK]
        b = data[j + k : j + k + _CHUNK]
        if a == b and len(a) == _CHUNK:
            k += _CHUNK
            continue
        limit = min(len(a), len(b))
        for t in range(limit):
            if a[t] != b[t]:
                return k + t
        return k + limit


def naive_lcp(text: Text, sa: list[int]) -> list[int]:
    """lcp[i] = common prefix length of suffixes sa[i-1] and sa[i]."""
    return [naive_pair_lcp(text, sa[i - 1], sa[i]) for i in range(1, len(sa))]


def naive_search(text: Text, pattern: bytes) -> list[int]:
    """All 1-based occurrence positions, by direct window comparison."""
    if len(pattern) == 0:
        return list(range(1, text.n + 1))
    data = text.data
    l = len(pattern)
    return [i + 1 for i in range(text.n - l + 1) if data[i : i + l] == pattern]


def longest_repeated_substring(text: Text) -> tuple[int, tuple[int, int] | None]:
    """Length and one witness pair of the longest substring occurring twice.

    Equals the maximum adjacent entry of the naive LCP array; the witness is
    the corresponding suffix pair, positions in ascending order.
    """
    sa = naive_suffix_array(text)
    best = 0
    pair: tuple[int, int] | None = None
    for i in range(1, len(sa)):
        d = naive_pair_lcp(text, sa[i - 1], sa[i])
        if d > best:
            best = d
            a, b = sa[i - 1], sa[i]
            pair = (a, b) if a < b else (b, a)
    return best, pair
