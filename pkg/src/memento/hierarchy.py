"""Byte-granularity IPv4 prefix lattice for one and two dimensions.

Flow keys are plain values: a 32-bit int for source-only traffic, an
(src, dst) int pair for source/destination traffic. Prefixes are tuples,
(bits, value) in one dimension and (src_bits, src, dst_bits, dst) in two,
with mask lengths restricted to {0, 8, 16, 24, 32} and masked-off bits
zeroed (canonical form). Tuples keep hashing cheap on the per-packet path.

All functions here are pure except for the RNG passed to `random_prefix`;
they are safe to call concurrently given a per-caller RNG.
"""

from __future__ import annotations

import math

from .errors import ConfigError

BYTE_LEVELS = (32, 24, 16, 8, 0)

_MASK = {bits: (0xFFFFFFFF << (32 - bits)) & 0xFFFFFFFF if bits else 0
         for bits in BYTE_LEVELS}


class Hierarchy:
    """Prefix hierarchy descriptor for a key dimensionality.

    `size` counts the distinct generalizations of a fully specified key
    (5 in 1-D, 25 in 2-D); `max_depth` is the top of the lattice (4 / 8).
    """

    def __init__(self, dim: int):
        if dim not in (1, 2):
            raise ConfigError(f"dim must be 1 or 2, got {dim}")
        self.dim = dim
        self.size = 5 if dim == 1 else 25
        self.max_depth = 4 if dim == 1 else 8

    def __repr__(self):
        return f"Hierarchy(dim={self.dim})"


def prefix_dim(p: tuple) -> int:
    return len(p) // 2


def depth(p: tuple) -> int:
    """Lattice depth: 0 for fully specified, max for the all-wildcard."""
    if len(p) == 2:
        return (32 - p[0]) // 8
    return (32 - p[0]) // 8 + (32 - p[2]) // 8


def key_prefix(key, dim: int) -> tuple:
    """The depth-0 (fully specified) prefix of a flow key."""
    if dim == 1:
        return (32, key)
    return (32, key[0], 32, key[1])


def prefix_at(key, level_index: int, dim: int) -> tuple:
    """Deterministic enumeration of a key's generalizations.

    1-D orders by source mask length descending; 2-D walks the 5x5 grid
    row-major with both mask lengths descending, so index 0 is the fully
    specified pair and the last index is the all-wildcard.
    """
    if dim == 1:
        if not 0 <= level_index < 5:
            raise ValueError(f"level index {level_index} out of range")
        bits = BYTE_LEVELS[level_index]
        return (bits, key & _MASK[bits])
    if not 0 <= level_index < 25:
        raise ValueError(f"level index {level_index} out of range")
    sbits = BYTE_LEVELS[level_index // 5]
    dbits = BYTE_LEVELS[level_index % 5]
    return (sbits, key[0] & _MASK[sbits], dbits, key[1] & _MASK[dbits])


def all_prefixes(key, dim: int) -> list[tuple]:
    """All hierarchy.size generalizations of key, in enumeration order."""
    n = 5 if dim == 1 else 25
    return [prefix_at(key, i, dim) for i in range(n)]


def generalizes(p: tuple, q: tuple) -> bool:
    """True when p covers q: in every dimension p's mask is no longer
    than q's and q's value truncated to p's mask equals p's value."""
    if len(p) != len(q):
        raise ValueError("dimension mismatch")
    if p[0] > q[0] or q[1] & _MASK[p[0]] != p[1]:
        return False
    if len(p) == 4 and (p[2] > q[2] or q[3] & _MASK[p[2]] != p[3]):
        return False
    return True


def strictly_generalizes(p: tuple, q: tuple) -> bool:
    return p != q and generalizes(p, q)


def parents(p: tuple) -> list[tuple]:
    """Immediate generalizations: one per dimension that still has mask
    bits, so up to two in 2-D and none for the all-wildcard prefix."""
    out = []
    if len(p) == 2:
        if p[0] > 0:
            bits = p[0] - 8
            out.append((bits, p[1] & _MASK[bits]))
        return out
    if p[0] > 0:
        bits = p[0] - 8
        out.append((bits, p[1] & _MASK[bits], p[2], p[3]))
    if p[2] > 0:
        bits = p[2] - 8
        out.append((p[0], p[1], bits, p[3] & _MASK[bits]))
    return out


def glb(h: tuple, h2: tuple):
    """Greatest lower bound: the most general common descendant, or None
    when the prefixes disagree inside their shared mask."""
    if len(h) != len(h2):
        raise ValueError("dimension mismatch")
    longer, shorter = (h, h2) if h[0] >= h2[0] else (h2, h)
    if longer[1] & _MASK[shorter[0]] != shorter[1]:
        return None
    if len(h) == 2:
        return (longer[0], longer[1])
    dlonger, dshorter = (h, h2) if h[2] >= h2[2] else (h2, h)
    if dlonger[3] & _MASK[dshorter[2]] != dshorter[3]:
        return None
    return (longer[0], longer[1], dlonger[2], dlonger[3])


def best_generalized(p: tuple, group) -> set:
    """Members of `group` that are strict descendants of p with no other
    group member strictly between them and p."""
    below = [h for h in group if strictly_generalizes(p, h)]
    return {h for h in below
            if not any(h2 is not h and strictly_generalizes(h2, h)
                       for h2 in below)}


def sampling_ratio(hier: Hierarchy, tau_full: float) -> int:
    """Number of equally likely draw outcomes V = ceil(size / tau_full);
    outcomes below `size` select a prefix level, the rest are misses.
    The effective Full-update probability is size / V."""
    if not 0.0 < tau_full <= 1.0:
        raise ConfigError(f"tau_full must be in (0, 1], got {tau_full}")
    return max(hier.size, math.ceil(hier.size / tau_full))


def random_prefix(key, hier: Hierarchy, tau_full: float, rng):
    """Draw one of V outcomes; returns a uniformly chosen generalization
    of key with probability size/V, else None. Consumes one RNG output."""
    ratio = sampling_ratio(hier, tau_full)
    i = rng.randrange(ratio)
    if i < hier.size:
        return prefix_at(key, i, hier.dim)
    return None


def format_ip(value: int) -> str:
    return ".".join(str((value >> shift) & 0xFF) for shift in (24, 16, 8, 0))


def parse_ip(text: str) -> int:
    parts = text.strip().split(".")
    if len(parts) != 4:
        raise ValueError(f"bad IPv4 address {text!r}")
    value = 0
    for part in parts:
        if not part.isdigit():
            raise ValueError(f"bad IPv4 address {text!r}")
        octet = int(part)
        if octet > 255:
            raise ValueError(f"bad IPv4 address {text!r}")
        value = (value << 8) | octet
    return value


def _format_side(bits: int, value: int) -> str:
    if bits == 0:
        return "*"
    octets = [str((value >> shift) & 0xFF) for shift in (24, 16, 8, 0)]
    kept = octets[:bits // 8]
    if bits < 32:
        kept.append("*")
    return ".".join(kept)


def _parse_side(text: str) -> tuple[int, int]:
    text = text.strip()
    if text == "*":
        return 0, 0
    parts = text.split(".")
    wildcard = parts[-1] == "*"
    if wildcard:
        parts = parts[:-1]
    if not parts or len(parts) > 4 or (len(parts) == 4 and wildcard):
        raise ValueError(f"bad prefix {text!r}")
    if not wildcard and len(parts) != 4:
        raise ValueError(f"bad prefix {text!r}")
    bits = 8 * len(parts)
    value = 0
    for part in parts:
        if not part.isdigit() or int(part) > 255:
            raise ValueError(f"bad prefix {text!r}")
        value = (value << 8) | int(part)
    value <<= 32 - bits
    return bits, value


def format_prefix(p: tuple) -> str:
    """Dotted-quad text with * wildcards, 2-D as an (src, dst) pair."""
    if len(p) == 2:
        return _format_side(p[0], p[1])
    return f"({_format_side(p[0], p[1])}, {_format_side(p[2], p[3])})"


def parse_prefix(text: str) -> tuple:
    """Inverse of `format_prefix`; round-trips exactly."""
    text = text.strip()
    if text.startswith("("):
        if not text.endswith(")"):
            raise ValueError(f"bad prefix {text!r}")
        left, _, right = text[1:-1].partition(",")
        if not _:
            raise ValueError(f"bad prefix {text!r}")
        sbits, sval = _parse_side(left)
        dbits, dval = _parse_side(right)
        return (sbits, sval, dbits, dval)
    bits, value = _parse_side(text)
    return (bits, value)
