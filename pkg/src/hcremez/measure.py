"""Normalized-measure L_p quantities on uniform torus grids.

A measurable set is a union of grid cells; cell ``t`` is the box starting at
node ``2*pi*t/G``.  Every cell has measure ``1 / prod(G)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Grid:
    """Uniform tensor grid on T^d with nodes ``2*pi*t/G_j``."""

    sizes: tuple

    def __post_init__(self):
        sizes = tuple(int(g) for g in np.atleast_1d(self.sizes))
        if not sizes or any(g < 1 for g in sizes):
            raise ValueError("grid sizes must be >= 1")
        object.__setattr__(self, "sizes", sizes)

    @classmethod
    def cube(cls, G: int, d: int) -> "Grid":
        return cls((G,) * d)

    @classmethod
    def for_degree(cls, degrees, oversample: float = 8) -> "Grid":
        """Grid with ``oversample * (2 * deg_j + 1)`` points per axis (Nyquist is oversample 1)."""
        return cls(tuple(max(1, int(math.ceil(oversample * (2 * int(m) + 1)))) for m in degrees))

    @property
    def dim(self) -> int:
        return len(self.sizes)

    @property
    def total(self) -> int:
        return int(np.prod(self.sizes, dtype=np.int64))

    @property
    def cell_measure(self) -> float:
        return 1.0 / self.total

    def axis(self, j: int) -> np.ndarray:
        return TWO_PI * np.arange(self.sizes[j]) / self.sizes[j]

    def nodes(self) -> np.ndarray:
        """All nodes as an ``(total, d)`` array in C order."""
        mesh = np.meshgrid(*[self.axis(j) for j in range(self.dim)], indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def is_exact_for(self, degrees) -> bool:
        return all(g >= 2 * int(m) + 1 for g, m in zip(self.sizes, degrees))

    def cell_of(self, points: np.ndarray) -> np.ndarray:
        """Flat index of the cell containing each torus point."""
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        idx = np.zeros(points.shape[0], dtype=np.int64)
        for j, g in enumerate(self.sizes):
            t = np.floor(np.mod(points[:, j], TWO_PI) / TWO_PI * g).astype(np.int64) % g
            idx = idx * g + t
        return idx


@dataclass
class StreamStats:
    """Reductions retained when a grid function is too large to store.

    ``power_sums[p]`` holds the weighted sum of ``|g|^p`` over all nodes;
    ``top_values``/``top_index`` hold the largest ``|g|`` (ties by flat index).
    """

    max_abs: float = 0.0
    power_sums: dict = field(default_factory=dict)
    top_values: np.ndarray | None = None
    top_index: np.ndarray | None = None


class GridFunction:
    """Complex samples on a grid, or a streaming handle with retained reductions."""

    def __init__(self, grid: Grid, values: np.ndarray | None = None, stats: StreamStats | None = None):
        if values is None and stats is None:
            raise ValueError("need values or stream statistics")
        if values is not None:
            values = np.asarray(values)
            if values.shape != grid.sizes:
                values = values.reshape(grid.sizes)
            values.setflags(write=False)
        self.grid = grid
        self.values = values
        self.stats = stats
        self._abs = None

    @property
    def materialized(self) -> bool:
        return self.values is not None

    @property
    def abs_flat(self) -> np.ndarray:
        if self.values is None:
            raise ValueError("grid function is streamed; only reductions are available")
        if self._abs is None:
            self._abs = np.abs(self.values).ravel()
            self._abs.setflags(write=False)
        return self._abs

    def __repr__(self):
        kind = "values" if self.materialized else "stream"
        return f"GridFunction(sizes={self.grid.sizes}, {kind})"


class GridSet:
    """Union of grid cells, stored as sorted flat cell indices."""

    def __init__(self, grid: Grid, indices=None, mask=None):
        if mask is not None:
            indices = np.flatnonzero(np.asarray(mask, dtype=bool).ravel())
        idx = np.unique(np.asarray(indices if indices is not None else [], dtype=np.int64))
        if idx.size and (idx[0] < 0 or idx[-1] >= grid.total):
            raise IndexError("cell index outside grid")
        idx.setflags(write=False)
        self.grid = grid
        self.indices = idx

    @property
    def count(self) -> int:
        return int(self.indices.size)

    @property
    def measure(self) -> float:
        return self.count / self.grid.total

    @property
    def mask(self) -> np.ndarray:
        m = np.zeros(self.grid.total, dtype=bool)
        m[self.indices] = True
        return m.reshape(self.grid.sizes)

    def complement(self) -> "GridSet":
        return GridSet(self.grid, mask=~self.mask)

    def contains_points(self, points) -> np.ndarray:
        cells = self.grid.cell_of(points)
        pos = np.searchsorted(self.indices, cells).clip(max=max(self.count - 1, 0))
        return self.indices[pos] == cells if self.count else np.zeros(cells.size, bool)

    def to_rle(self) -> str:
        """Run-length text: header line with sizes, then ``start length`` runs of flat indices."""
        lines = ["grid " + " ".join(str(g) for g in self.grid.sizes)]
        idx = self.indices
        if idx.size:
            breaks = np.flatnonzero(np.diff(idx) != 1) + 1
            starts = np.concatenate([[0], breaks])
            ends = np.concatenate([breaks, [idx.size]])
            lines += [f"{idx[s]} {e - s}" for s, e in zip(starts, ends)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_rle(cls, text: str) -> "GridSet":
        lines = [ln.split() for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0][0] != "grid":
            raise ValueError("missing grid header")
        grid = Grid(tuple(int(v) for v in lines[0][1:]))
        parts = [np.arange(int(a), int(a) + int(n)) for a, n in lines[1:]]
        return cls(grid, np.concatenate(parts) if parts else [])

    def __eq__(self, other):
        return isinstance(other, GridSet) and self.grid == other.grid and np.array_equal(self.indices, other.indices)

    def __repr__(self):
        return f"GridSet(sizes={self.grid.sizes}, cells={self.count}, measure={self.measure:.6g})"


# ---------------------------------------------------------------------------

def cell_count(fraction: float, total: int) -> int:
    """Number of whole cells fitting in a measure budget."""
    return int(math.floor(fraction * total + 1e-9))


def select_top(absvals: np.ndarray, index: np.ndarray, k: int):
    """Positions of the ``k`` largest values, ordered by (value desc, index asc)."""
    n = absvals.size
    k = max(0, min(k, n))
    if k == 0:
        return np.empty(0, dtype=np.int64)
    if k < n:
        thresh = np.partition(absvals, n - k)[n - k]
        above = np.flatnonzero(absvals > thresh)
        ties = np.flatnonzero(absvals == thresh)
        ties = ties[np.argsort(index[ties], kind="stable")][: k - above.size]
        pos = np.concatenate([above, ties])
    else:
        pos = np.arange(n)
    order = np.lexsort((index[pos], -absvals[pos]))
    return pos[order]


def _normalize_p(p):
    p = float(p)
    if not (p > 0):
        raise ValueError("exponent must be positive or inf")
    return p


def lp_norm(g: GridFunction, p) -> float:
    """``(sum |g|^p / prod(G))^(1/p)``; ``max |g|`` for ``p = inf``."""
    p = _normalize_p(p)
    if g.grid.total == 0:
        raise ValueError("empty grid")
    if not g.materialized:
        if math.isinf(p):
            return g.stats.max_abs
        if p not in g.stats.power_sums:
            raise KeyError(f"stream did not retain the p={p} reduction")
        return (g.stats.power_sums[p] / g.grid.total) ** (1.0 / p)
    a = g.abs_flat
    if math.isinf(p):
        return float(a.max())
    top = float(a.max())
    if top == 0.0:
        return 0.0
    return top * float(np.sum((a / top) ** p) / a.size) ** (1.0 / p)


def lp_norm_excluding(g: GridFunction, p, B: GridSet) -> float:
    """L_p norm over the cells outside ``B``, measure still normalized by the whole grid."""
    p = _normalize_p(p)
    if B.grid != g.grid:
        raise ValueError("set and function live on different grids")
    if B.count >= g.grid.total:
        raise ValueError("excluded set covers every cell")
    if B.count == 0:
        return lp_norm(g, p)
    if not g.materialized:
        return _streamed_excluding(g, p, B)
    keep = np.ones(g.grid.total, dtype=bool)
    keep[B.indices] = False
    a = g.abs_flat[keep]
    if math.isinf(p):
        return float(a.max())
    top = float(a.max())
    if top == 0.0:
        return 0.0
    return top * float(np.sum((a / top) ** p) / g.grid.total) ** (1.0 / p)


def _streamed_excluding(g, p, B):
    st = g.stats
    if st.top_index is None:
        raise ValueError("stream did not retain a top-value summary")
    in_b = np.isin(st.top_index, B.indices)
    if int(in_b.sum()) != B.count:
        raise ValueError("excluded set is not within the retained top cells")
    if math.isinf(p):
        if in_b.all():
            raise ValueError("retained summary too short for this exclusion")
        return float(st.top_values[~in_b][0])
    rest = st.power_sums[p] - float(np.sum(st.top_values[in_b] ** p))
    return (max(rest, 0.0) / g.grid.total) ** (1.0 / p)


def top_level_set(g: GridFunction, b: float) -> GridSet:
    """The ``floor(b * cells)`` cells of largest ``|g|``; ties go to the lower flat index."""
    if not 0 <= b <= 1:
        raise ValueError("budget must lie in [0, 1]")
    k = cell_count(b, g.grid.total)
    if not g.materialized:
        st = g.stats
        if st.top_index is None or k > st.top_index.size:
            raise ValueError("stream did not retain enough top cells for this budget")
        return GridSet(g.grid, st.top_index[:k])
    a = g.abs_flat
    pos = select_top(a, np.arange(a.size), k)
    return GridSet(g.grid, pos)


def quantile_abs(g: GridFunction, q: float) -> float:
    """Value ``v`` with cell fraction ``|g| > v`` at most ``1-q`` and ``|g| >= v`` at least ``1-q``."""
    if not 0 <= q <= 1:
        raise ValueError("q must lie in [0, 1]")
    total = g.grid.total
    k = min(cell_count(1.0 - q, total), total - 1)
    if not g.materialized:
        st = g.stats
        if st.top_values is None or k >= st.top_values.size:
            raise ValueError("stream did not retain enough top cells for this quantile")
        return float(st.top_values[k])
    a = g.abs_flat
    return float(np.partition(a, total - 1 - k)[total - 1 - k])
