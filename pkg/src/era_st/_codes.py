"""Vectorized fixed-length window matching used by the frequency counter."""

from __future__ import annotations

import math

import numpy as np

_CODE_BITS = 62


def max_code_len(sigma: int) -> int:
    """Longest window length whose base-(sigma+1) code fits a signed 64-bit int."""
    return int(_CODE_BITS / math.log2(sigma + 1))


def window_codes(data: bytes, length: int, base: int) -> np.ndarray:
    """Base-``base`` polynomial code of every ``length``-symbol window.

    Window i (0-based) covers data[i : i+length]; the number of windows is
    len(data) - length + 1 (callers guarantee it is positive).
    """
    arr = np.frombuffer(data, dtype=np.uint8)
    m = len(data) - length + 1
    codes = np.zeros(m, dtype=np.int64)
    for j in range(length):
        codes *= base
        codes += arr[j : j + m]
    return codes


def pattern_code(pattern: bytes, base: int) -> int:
    code = 0
    for b in pattern:
        code = code * base + b
    return code
