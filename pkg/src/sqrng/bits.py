"""Bit strings as ``uint8`` numpy arrays, plus MSB-first hex packing."""

from __future__ import annotations

from typing import Iterable

import numpy as np


def as_bits(x: Iterable[int] | str | np.ndarray) -> np.ndarray:
    """Validate and convert ``x`` to a 1-D ``uint8`` array over {0, 1}.

    Strings are read character by character (``"1010"``).
    """
    if isinstance(x, str):
        if x and set(x) - {"0", "1"}:
            raise ValueError(f"not a bit string: {x!r}")
        return np.frombuffer(x.encode("ascii"), dtype=np.uint8) - ord("0") if x else np.zeros(0, np.uint8)
    arr = np.asarray(x if isinstance(x, np.ndarray) else list(x))
    if arr.ndim != 1 and arr.size:
        arr = arr.reshape(-1)
    if arr.size == 0:
        return np.zeros(0, dtype=np.uint8)
    if not np.isin(arr, (0, 1)).all():
        raise ValueError("bit string contains values other than 0 and 1")
    return arr.astype(np.uint8)


def bits_to_str(bits) -> str:
    return "".join("1" if b else "0" for b in as_bits(bits))


def count_bits(x, i: int) -> int:
    """Number of times the bit ``i`` appears in ``x``.

    >>> count_bits("1010", 0)
    2
    """
    if i not in (0, 1):
        raise ValueError(f"bit value must be 0 or 1, got {i!r}")
    return int(np.count_nonzero(as_bits(x) == i))


def bits_to_hex(bits) -> str:
    """Pack most-significant-bit first, pad the last byte with zeros, lowercase hex."""
    return np.packbits(as_bits(bits), bitorder="big").tobytes().hex()


def hex_to_bits(payload: str, length: int) -> np.ndarray:
    """Inverse of :func:`bits_to_hex` for a known bit length."""
    raw = bytes.fromhex(payload.strip())
    if len(raw) * 8 < length or len(raw) > (length + 7) // 8:
        raise ValueError(f"hex payload of {len(raw)} bytes cannot hold exactly {length} bits")
    bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="big")
    if bits[length:].any():
        raise ValueError("nonzero padding bits after declared length")
    return bits[:length].astype(np.uint8)


def int_to_bits(value: int, width: int) -> np.ndarray:
    """Big-endian binary expansion of ``value`` (first element is the most significant bit)."""
    return np.array([(value >> (width - 1 - k)) & 1 for k in range(width)], dtype=np.uint8)


def bits_to_int(bits) -> int:
    out = 0
    for b in as_bits(bits):
        out = (out << 1) | int(b)
    return out
