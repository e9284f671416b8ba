"""Binary strings <-> positive integers, and a pairing bijection.

The empty string is 1, "0" is 2, "1" is 3, "00" is 4, ... : the integer read
from the binary numeral "1" + s.
"""

from __future__ import annotations

from functools import lru_cache
from math import isqrt
from typing import Union

StrLike = Union[str, int]


def to_index(s: str) -> int:
    if any(c not in "01" for c in s):
        raise ValueError(f"not a binary string: {s!r}")
    return int("1" + s, 2)


@lru_cache(maxsize=4096)
def from_index(n: int) -> str:
    if n < 1:
        raise ValueError("string indices start at 1")
    return bin(n)[3:]


def as_index(s: StrLike) -> int:
    """Accept either a bit string or its positive integer index."""
    if isinstance(s, int):
        if s < 1:
            raise ValueError("string indices start at 1")
        return s
    return to_index(s)


def show(s: StrLike) -> str:
    """Printable form; the empty string is shown as a lambda."""
    bits = from_index(s) if isinstance(s, int) else s
    return bits if bits else "λ"


def parse_string(text: str) -> int:
    """CLI-style string argument: bits, a lambda, or ``#n`` for an index."""
    text = text.strip()
    if text in ("λ", "lambda", "-", ""):
        return 1
    if text.startswith("#"):
        return as_index(int(text[1:]))
    return to_index(text)


def _cantor(a: int, b: int) -> int:
    return (a + b) * (a + b + 1) // 2 + b


def _uncantor(z: int) -> tuple[int, int]:
    w = (isqrt(8 * z + 1) - 1) // 2
    b = z - w * (w + 1) // 2
    return w - b, b


def pair(s: StrLike, t: StrLike) -> int:
    """Index of <s, t>: Cantor pairing on zero-based string indices."""
    return _cantor(as_index(s) - 1, as_index(t) - 1) + 1


def unpair(u: StrLike) -> tuple[int, int]:
    a, b = _uncantor(as_index(u) - 1)
    return a + 1, b + 1


def pair_strings(s: str, t: str) -> str:
    return from_index(pair(s, t))


def unpair_string(u: str) -> tuple[str, str]:
    a, b = unpair(u)
    return from_index(a), from_index(b)
