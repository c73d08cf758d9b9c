"""Frequency index sets on Z^d: hyperbolic crosses, dyadic blocks and layers.

All sets are stored as ``(m, d)`` int64 arrays in lexicographic order, so
iteration and serialization are deterministic.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

MAX_DIM = 3
MAX_N = 1 << 16
MAX_LAYER = 20


# ---------------------------------------------------------------------------
# packed integer keys (used for set algebra and sparse spectral arithmetic)

def key_bits(d: int) -> int:
    return 63 // d


def pack(keys: np.ndarray) -> np.ndarray:
    """Pack ``(m, d)`` frequency vectors into order-preserving int64 keys."""
    keys = np.asarray(keys, dtype=np.int64)
    m, d = keys.shape
    bits = key_bits(d)
    off = np.int64(1) << np.int64(bits - 1)
    if keys.size and (keys.min() <= -off or keys.max() >= off):
        raise OverflowError(f"frequency exceeds {bits}-bit packing range for d={d}")
    out = np.zeros(m, dtype=np.int64)
    for j in range(d):
        out = (out << np.int64(bits)) + (keys[:, j] + off)
    return out


def unpack(packed: np.ndarray, d: int) -> np.ndarray:
    packed = np.asarray(packed, dtype=np.int64)
    bits = key_bits(d)
    off = np.int64(1) << np.int64(bits - 1)
    mask = np.int64((1 << bits) - 1)
    out = np.empty((packed.size, d), dtype=np.int64)
    rest = packed.copy()
    for j in range(d - 1, -1, -1):
        out[:, j] = (rest & mask) - off
        rest = rest >> np.int64(bits)
    return out


def pack_origin(d: int) -> np.int64:
    return pack(np.zeros((1, d), dtype=np.int64))[0]


def level(k) -> np.ndarray:
    """Dyadic level of each integer: 0 for 0, else ``bit_length(|k|)``.

    ``k`` lies in the univariate shell of level ``s`` iff
    ``[2^(s-1)] <= |k| < 2^s``.
    """
    a = np.abs(np.asarray(k, dtype=np.int64))
    # frexp exponent equals bit_length exactly for |k| < 2^53
    return np.frexp(a.astype(np.float64))[1].astype(np.int64)


# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class IndexSet:
    """Finite set of frequency vectors in Z^d.

    Attributes
    ----------
    dim : int
    members : ndarray of shape (m, dim), int64, lexicographically sorted, unique
    label : str
        Descriptive tag such as ``"Gamma(16)"`` or ``"Q_4"``.
    """

    dim: int
    members: np.ndarray
    label: str = ""

    def __post_init__(self):
        members = np.asarray(self.members, dtype=np.int64).reshape(-1, self.dim)
        if members.shape[0]:
            members = np.unique(members, axis=0)
        members.setflags(write=False)
        object.__setattr__(self, "members", members)

    @classmethod
    def from_iterable(cls, dim: int, items: Iterable, label: str = "") -> "IndexSet":
        arr = np.array([tuple(np.atleast_1d(k)) for k in items], dtype=np.int64)
        return cls(dim, arr.reshape(-1, dim), label)

    @property
    def packed(self) -> np.ndarray:
        return pack(self.members)

    def __len__(self) -> int:
        return self.members.shape[0]

    def __iter__(self) -> Iterator[tuple]:
        return (tuple(int(c) for c in row) for row in self.members)

    def __contains__(self, k) -> bool:
        k = np.atleast_1d(np.asarray(k, dtype=np.int64))
        if k.shape != (self.dim,):
            return False
        return bool(self.contains(k[None, :])[0])

    def contains(self, keys: np.ndarray) -> np.ndarray:
        """Vectorized membership for an ``(m, dim)`` array."""
        keys = np.asarray(keys, dtype=np.int64).reshape(-1, self.dim)
        mine = self.packed
        if mine.size == 0:
            return np.zeros(keys.shape[0], dtype=bool)
        q = pack(keys)
        pos = np.searchsorted(mine, q).clip(max=mine.size - 1)
        return mine[pos] == q

    def __eq__(self, other) -> bool:
        if not isinstance(other, IndexSet):
            return NotImplemented
        return self.dim == other.dim and np.array_equal(self.members, other.members)

    def __hash__(self):
        return hash((self.dim, self.members.tobytes()))

    def issubset(self, other: "IndexSet") -> bool:
        return bool(np.all(other.contains(self.members)))

    def union(self, other: "IndexSet", label: str = "") -> "IndexSet":
        return IndexSet(self.dim, np.vstack([self.members, other.members]), label)

    def difference(self, other: "IndexSet", label: str = "") -> "IndexSet":
        keep = ~other.contains(self.members)
        return IndexSet(self.dim, self.members[keep], label)

    def intersection(self, other: "IndexSet", label: str = "") -> "IndexSet":
        return IndexSet(self.dim, self.members[other.contains(self.members)], label)

    def max_degree(self) -> tuple:
        if len(self) == 0:
            return (0,) * self.dim
        return tuple(int(v) for v in np.abs(self.members).max(axis=0))

    def to_text(self) -> str:
        """One index per line, space separated."""
        return "".join(" ".join(str(int(c)) for c in row) + "\n" for row in self.members)

    @classmethod
    def from_text(cls, text: str, label: str = "") -> "IndexSet":
        rows = [line.split() for line in text.splitlines() if line.strip()]
        if not rows:
            raise ValueError("empty index set text; dimension unknown")
        dims = {len(r) for r in rows}
        if len(dims) != 1:
            raise ValueError("rows have inconsistent dimensions")
        return cls(dims.pop(), np.array(rows, dtype=np.int64), label)

    def __repr__(self):
        return f"IndexSet(dim={self.dim}, size={len(self)}, label={self.label!r})"


@dataclass(frozen=True)
class ResidueFamily:
    """Layer vectors ``s`` with ``s1 + s2 = n``, ``s1, s2 >= a``, ``s1 = b (mod a)``."""

    n: int
    a: int
    b: int
    members: tuple

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)


# ---------------------------------------------------------------------------

def _check_dim(d):
    if not 1 <= d <= MAX_DIM:
        raise ValueError(f"dimension {d} outside supported range 1..{MAX_DIM}")


def _shell(s: int) -> np.ndarray:
    lo = (1 << (s - 1)) if s >= 1 else 0
    hi = 1 << s
    pos = np.arange(max(lo, 1), hi, dtype=np.int64)
    parts = [-pos[::-1], pos]
    if lo == 0:
        parts.insert(1, np.zeros(1, dtype=np.int64))
    return np.concatenate(parts)


def _wide_shell(s: int) -> np.ndarray:
    lo = int(2.0 ** (s - 2))
    hi = 1 << s
    pos = np.arange(max(lo, 1), hi, dtype=np.int64)
    parts = [-pos[::-1], pos]
    if lo == 0:
        parts.insert(1, np.zeros(1, dtype=np.int64))
    return np.concatenate(parts)


def _product(axes) -> np.ndarray:
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def hyperbolic_cross(N: int, d: int) -> IndexSet:
    """``Gamma(N) = {k : prod_j max(1, |k_j|) <= N}``."""
    _check_dim(d)
    if N < 1:
        raise ValueError("N must be >= 1")
    if N > MAX_N:
        raise ValueError(f"N > {MAX_N} is unsupported")

    def rec(budget, depth):
        if depth == 1:
            return np.arange(-budget, budget + 1, dtype=np.int64)[:, None]
        out = []
        for k in range(-budget, budget + 1):
            tail = rec(budget // max(1, abs(k)), depth - 1)
            out.append(np.hstack([np.full((tail.shape[0], 1), k, np.int64), tail]))
        return np.vstack(out)

    return IndexSet(d, rec(N, d), f"Gamma({N})")


def dyadic_block(s) -> IndexSet:
    """``rho(s)``: product of the shells ``[2^(s_j-1)] <= |k_j| < 2^s_j``."""
    s = tuple(int(v) for v in np.atleast_1d(s))
    if any(v < 0 for v in s):
        raise ValueError("block indices must be nonnegative")
    return IndexSet(len(s), _product([_shell(v) for v in s]), f"rho{s}")


def dyadic_block_wide(s) -> IndexSet:
    """``rho'(s)``: the widened shells ``[2^(s_i-2)] <= |m_i| < 2^s_i``."""
    s = tuple(int(v) for v in np.atleast_1d(s))
    if any(v < 0 for v in s):
        raise ValueError("block indices must be nonnegative")
    return IndexSet(len(s), _product([_wide_shell(v) for v in s]), f"rho'{s}")


def _levels_upto(n, d, exact):
    """All k with sum of levels <= n (or == n when ``exact``)."""
    out = []
    for s in itertools.product(range(n + 1), repeat=d):
        tot = sum(s)
        if tot > n or (exact and tot != n):
            continue
        out.append(_product([_shell(v) for v in s]))
    return np.vstack(out) if out else np.empty((0, d), np.int64)


def step_hyperbolic(n: int, d: int) -> IndexSet:
    """``Q_n``: union of ``rho(s)`` over ``||s||_1 <= n``."""
    _check_dim(d)
    if n < 0:
        raise ValueError("n must be >= 0")
    if n > MAX_LAYER:
        raise ValueError(f"n > {MAX_LAYER} is unsupported")
    return IndexSet(d, _levels_upto(n, d, exact=False), f"Q_{n}")


def hyperbolic_layer(n: int, d: int) -> IndexSet:
    """``Delta Q_n = Q_n minus Q_{n-1}``, the union of ``rho(s)`` with ``||s||_1 = n``."""
    _check_dim(d)
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > MAX_LAYER:
        raise ValueError(f"n > {MAX_LAYER} is unsupported")
    return IndexSet(d, _levels_upto(n, d, exact=True), f"dQ_{n}")


def in_step_hyperbolic(keys: np.ndarray, n: int) -> np.ndarray:
    """Vectorized test ``k in Q_n``."""
    keys = np.asarray(keys, dtype=np.int64)
    return level(keys).sum(axis=-1) <= n


def layer_vectors(n: int, d: int = 2) -> list:
    """All ``s`` in Z_+^d with ``||s||_1 = n`` in lexicographic order."""
    return [s for s in itertools.product(range(n + 1), repeat=d) if sum(s) == n]


def layer_residue_family(n: int, a: int, b: int) -> ResidueFamily:
    """``H_n(a, b)`` for d = 2."""
    if a < 1 or not 0 <= b < a:
        raise ValueError("need a >= 1 and 0 <= b < a")
    members = tuple(
        (s1, n - s1) for s1 in range(a, n - a + 1) if s1 % a == b
    )
    return ResidueFamily(n, a, b, members)
