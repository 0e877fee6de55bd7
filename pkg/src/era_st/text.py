"""Input text representation, alphabet handling, and the random generator.

Symbols are single bytes.  The terminal delimiter is byte value 0 and sorts
below every alphabet symbol; alphabet symbols are byte values ``1..sigma``.
All positions exposed by this package are 1-based.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import AlphabetError, DelimiterError, InputError

DELIMITER = 0
MIN_SIGMA = 2
MAX_SIGMA = 255


def _check_sigma(sigma: int) -> None:
    if not MIN_SIGMA <= sigma <= MAX_SIGMA:
        raise AlphabetError(f"sigma must be in [{MIN_SIGMA}, {MAX_SIGMA}], got {sigma}")


@dataclass(frozen=True)
class Text:
    """A delimiter-terminated symbol string.

    ``data`` holds one symbol per byte; the final byte is the delimiter and
    it occurs nowhere else.  ``byte_map`` records the original-byte to symbol
    mapping when the text was re-encoded from a non-canonical source (it is
    needed to encode query patterns consistently).
    """

    data: bytes
    sigma: int
    delimiter: int = DELIMITER
    byte_map: dict[int, int] | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        _check_sigma(self.sigma)
        if len(self.data) < 1:
            raise InputError("text must contain at least the delimiter")
        if self.data[-1] != self.delimiter:
            raise DelimiterError("text must end with the delimiter")
        body = self.data[:-1]
        if self.delimiter in body:
            raise DelimiterError("delimiter occurs before the final position")
        if body:
            lo, hi = min(body), max(body)
            if lo < 1 or hi > self.sigma:
                raise AlphabetError(
                    f"symbol {hi if hi > self.sigma else lo} outside alphabet 1..{self.sigma}"
                )

    @property
    def n(self) -> int:
        """Length in symbols, delimiter included."""
        return len(self.data)

    def symbol(self, pos: int) -> int:
        """Symbol at 1-based position ``pos``."""
        return self.data[pos - 1]


@dataclass(frozen=True)
class BuildConfig:
    """Model parameters for a build: working-memory budget M, block size B,
    worker count p, and the repeated-substring guard.

    M and B are counted in symbols so every transfer count is exact.  M may
    be (and typically is) smaller than the text length.
    """

    memory_budget_m: int
    block_size_b: int
    workers_p: int = 1
    max_prefix_len: int | None = None
    rng_seed: int = 0

    def __post_init__(self):
        if self.block_size_b < 1:
            raise ValueError("block_size_b must be >= 1")
        if self.memory_budget_m < 2 * self.block_size_b:
            raise ValueError("memory_budget_m must be at least two blocks")
        if self.workers_p < 1:
            raise ValueError("workers_p must be >= 1")
        if self.max_prefix_len is not None and self.max_prefix_len < 1:
            raise ValueError("max_prefix_len must be >= 1")

    @property
    def bin_capacity(self) -> int:
        """Largest prefix frequency whose subtree fits the budget: floor(M/B)."""
        return self.memory_budget_m // self.block_size_b

    @property
    def work_buffer_m(self) -> int:
        """Half of M is given to chunk buffers, the rest to bookkeeping arrays."""
        return self.memory_budget_m // 2

    def prefix_len_cap(self, text: Text) -> int:
        if self.max_prefix_len is not None:
            return self.max_prefix_len
        return default_max_prefix_len(text.n, text.sigma)

    def block_size_warning(self, n: int) -> str | None:
        """Non-fatal notice when a block cannot hold one tree node (2 lg N bits)."""
        need = 2 * math.ceil(math.log2(max(2, n)))
        if self.block_size_b * 8 < need:
            return (
                f"block size {self.block_size_b} symbols is below the "
                f"node-per-block threshold for n={n}; transfer counts remain "
                f"exact but the in-memory layout assumption is void"
            )
        return None


def default_max_prefix_len(n: int, sigma: int) -> int:
    """Guard threshold 8 * ceil(log_sigma(n)); random text stays far below it."""
    if n <= 1:
        return 1
    return max(1, 8 * math.ceil(math.log(n) / math.log(sigma)))


def generate_random_text(length: int, sigma: int, seed: int) -> Text:
    """Uniform i.i.d. text of exactly ``length`` symbols, delimiter-terminated.

    Every non-final symbol is drawn uniformly from the sigma-symbol alphabet;
    the draw is deterministic for a fixed seed.
    """
    _check_sigma(sigma)
    if length < 1:
        raise InputError("length must be >= 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    body = rng.integers(1, sigma + 1, size=length - 1, dtype=np.uint8).tobytes()
    return Text(body + bytes([DELIMITER]), sigma)


def load_text(path: str | Path, sigma: int) -> Text:
    """Read a raw one-byte-per-symbol file and canonicalize it.

    A trailing delimiter byte is accepted; one is appended otherwise.  A
    delimiter byte anywhere else is rejected.  Files whose bytes already lie
    in ``1..sigma`` are taken verbatim; anything else (e.g. ASCII text) is
    re-encoded by mapping the distinct bytes, in ascending byte order, onto
    ``1..k`` -- provided k fits the declared alphabet.
    """
    _check_sigma(sigma)
    raw = Path(path).read_bytes()
    if not raw:
        raise InputError(f"{path}: empty input file")
    if raw[-1] == DELIMITER:
        body = raw[:-1]
    else:
        body = raw
    if DELIMITER in body:
        raise DelimiterError(f"{path}: delimiter byte at position {body.index(DELIMITER) + 1}")
    byte_map = None
    if body and max(body) > sigma:
        distinct = sorted(set(body))
        if len(distinct) > sigma:
            raise AlphabetError(
                f"{path}: {len(distinct)} distinct symbols exceed sigma={sigma}"
            )
        byte_map = {b: i + 1 for i, b in enumerate(distinct)}
        body = bytes(byte_map[b] for b in body)
    return Text(body + bytes([DELIMITER]), sigma, byte_map=byte_map)


def from_str(s: str, sigma: int | None = None) -> Text:
    """Test/demo helper: map a printable string onto the canonical alphabet.

    ``'$'`` denotes the delimiter (appended if missing); the remaining
    distinct characters are ranked in character order onto ``1..k``.
    """
    if "$" in s[:-1]:
        raise DelimiterError("'$' only allowed as the final character")
    if s.endswith("$"):
        body_chars = s[:-1]
    else:
        body_chars = s
    distinct = sorted(set(body_chars))
    if sigma is None:
        sigma = max(MIN_SIGMA, len(distinct))
    if len(distinct) > sigma:
        raise AlphabetError(f"{len(distinct)} distinct characters exceed sigma={sigma}")
    byte_map = {ord(c): i + 1 for i, c in enumerate(distinct)}
    byte_map[ord("$")] = DELIMITER
    body = bytes(byte_map[ord(c)] for c in body_chars)
    return Text(body + bytes([DELIMITER]), sigma, byte_map=byte_map)


def encode_pattern(pattern: str | bytes, byte_map: dict[int, int] | None) -> bytes | None:
    """Translate a query pattern into text symbols.

    Returns ``None`` when some pattern byte has no counterpart in the text's
    alphabet, in which case the pattern cannot occur at all.
    """
    raw = pattern.encode() if isinstance(pattern, str) else bytes(pattern)
    if byte_map is None:
        return raw
    out = bytearray()
    for b in raw:
        sym = byte_map.get(b)
        if sym is None:
            return None
        out.append(sym)
    return bytes(out)
