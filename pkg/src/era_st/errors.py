"""Exception types shared across the package."""

from __future__ import annotations


class EraStError(Exception):
    """Base class for all package-specific errors."""


class AlphabetError(EraStError):
    """Alphabet size out of range, or a symbol outside the declared alphabet."""


class DelimiterError(EraStError):
    """The delimiter byte appeared somewhere other than the final position."""


class InputError(EraStError):
    """Unusable input (empty file, malformed text)."""


class RangeError(EraStError):
    """Out-of-bounds block-layer read."""


class CorruptArraysError(EraStError):
    """Suffix/LCP arrays violate their structural contract."""


class IndexCorruptError(EraStError):
    """An on-disk index component is missing, truncated, or malformed."""


class BuildError(EraStError):
    """A construction worker failed; carries the prefix that was in flight."""

    def __init__(self, prefix: bytes, detail: str):
        self.prefix = prefix
        self.detail = detail
        super().__init__(f"build failed for prefix {prefix.hex() or '(root)'}: {detail}")

    def __reduce__(self):
        return (BuildError, (self.prefix, self.detail))


class SkewedInputError(EraStError):
    """A repeated substring longer than the configured guard was detected.

    Raised by the prefix-partitioning phase when a candidate prefix would have
    to grow past ``max_prefix_len`` while still exceeding the memory budget,
    and by the subtree-construction phase when a group of suffixes stays tied
    beyond the same threshold.  Either way the text contains a repeat the
    algorithm cannot split apart cheaply, and the run time would degenerate
    toward quadratic if construction continued.
    """

    def __init__(self, prefix: bytes, frequency: int, phase: str):
        self.prefix = prefix
        self.frequency = frequency
        self.phase = phase
        shown = prefix.hex() if len(prefix) <= 32 else prefix[:32].hex() + "..."
        super().__init__(
            f"skewed input in {phase} phase: prefix of length {len(prefix)} "
            f"(hex {shown}) still shared by {frequency} suffixes"
        )

    def __reduce__(self):
        return (SkewedInputError, (self.prefix, self.frequency, self.phase))
