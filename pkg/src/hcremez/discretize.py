"""Discretization inequalities and the shift argument turning them into Remez bounds.

If ``||f_y||_inf <= D max_j |f_y(x^j)|`` for every translate ``f_y(x) = f(x - y)``
and ``|B| < 1/m``, some shift ``y*`` puts every ``x^j - y*`` outside ``B``,
which gives ``||f||_inf <= D sup_{B^c} |f|``.

Sets ``B`` are cell unions of a grid of sizes ``G``.  With ``h_j = 2 pi / G_j``
the cell of ``x^j - y`` depends only on ``y mod h`` through the sub-cell
offsets of the points, and on the cell index of ``y``.  For a fixed sub-cell
offset the count ``g(y)`` of points landing in ``B`` is a cyclic
correlation over cell indices whose average is ``m |B|``, so a zero of
``g`` exists in every offset block once ``|B| < 1/m``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from hcremez._config import DEFAULT_OVERSAMPLE, EPS
from hcremez.indexsets import step_hyperbolic
from hcremez.measure import TWO_PI, Grid, GridSet
from hcremez.nikolskii import ScalingRow
from hcremez.spectral import TrigPoly, evaluate_on_grid, random_trigpoly

__all__ = [
    "PointSet",
    "ShiftNotFoundError",
    "DiscretizationViolation",
    "DiscretizationReport",
    "shift",
    "refined_sup",
    "sample_max",
    "discretization_constant",
    "candidate_point_set",
    "equispaced_point_set",
    "empirical_discretization_scan",
    "shift_counts",
    "find_avoiding_shift",
    "discretization_to_remez",
]


class ShiftNotFoundError(RuntimeError):
    """No shift keeps every point outside ``B``."""


class DiscretizationViolation(AssertionError):
    """A supplied constant ``D`` fails for some tested shift."""

    def __init__(self, message, y, D_measured):
        super().__init__(message)
        self.y = y
        self.D_measured = D_measured


@dataclass
class PointSet:
    """Distinct torus points ``x^j`` (rows of ``points``, coordinates in ``[0, 2 pi)``).

    ``components`` optionally records grid sizes whose nodes make up the
    set exactly; sample maxima then go through FFTs instead of direct sums.
    """

    dim: int
    points: np.ndarray
    components: tuple = field(default=())

    def __post_init__(self):
        pts = np.mod(np.asarray(self.points, dtype=np.float64).reshape(-1, self.dim), TWO_PI)
        if pts.shape[0] < 1:
            raise ValueError("point set must be nonempty")
        if np.unique(pts, axis=0).shape[0] != pts.shape[0]:
            raise ValueError("points must be distinct")
        pts.setflags(write=False)
        self.points = pts
        self.components = tuple(tuple(int(g) for g in c) for c in self.components)

    @property
    def m(self) -> int:
        return int(self.points.shape[0])

    def shifted(self, y) -> "PointSet":
        """The points ``x^j - y``."""
        y = np.asarray(y, dtype=np.float64).reshape(self.dim)
        return PointSet(self.dim, self.points - y)

    def __len__(self):
        return self.m


def shift(f: TrigPoly, y) -> TrigPoly:
    """``f_y(x) = f(x - y)``."""
    y = np.asarray(y, dtype=np.float64).reshape(f.dim)
    return TrigPoly(f.dim, f.keys, f.coeffs * np.exp(-1j * (f.keys @ y)), prune=0.0)


def _value_and_grad(f: TrigPoly):
    kf = f.keys.astype(np.float64)

    def fun(x):
        e = np.exp(1j * (kf @ x)) * f.coeffs
        v = e.sum()
        grad = (1j * kf * e[:, None]).sum(axis=0)
        return -(abs(v) ** 2), -2.0 * np.real(np.conj(v) * grad)

    return fun


def refined_sup(f: TrigPoly, oversample: float | None = None, starts: int = 8) -> float:
    """``||f||_inf``: grid maximum, then local ascent from the best ``starts`` nodes.

    The default oversample is 4, lowered to 2 when that grid exceeds
    ``2^24`` nodes.
    """
    if f.is_zero():
        return 0.0
    if oversample is None:
        oversample = 4 if Grid.for_degree(f.max_degree(), 4).total <= 1 << 24 else 2
    grid = Grid.for_degree(f.max_degree(), oversample)
    vals = evaluate_on_grid(f, grid, stream=False).abs_flat
    best = float(vals.max())
    k = min(starts, vals.size)
    top = np.argpartition(vals, vals.size - k)[vals.size - k:]
    nodes = np.stack(np.unravel_index(top, grid.sizes), axis=1) * (TWO_PI / np.asarray(grid.sizes))
    fun = _value_and_grad(f)
    for x0 in nodes:
        res = optimize.minimize(fun, x0, jac=True, method="BFGS", options={"gtol": 1e-12})
        best = max(best, math.sqrt(max(-float(res.fun), 0.0)))
    return best


def sample_max(f: TrigPoly, X: PointSet) -> float:
    """``max_j |f(x^j)|``."""
    if X.components:
        return max(float(evaluate_on_grid(f, Grid(c), stream=False).abs_flat.max()) for c in X.components)
    return float(np.abs(f(X.points)).max())


def discretization_constant(f: TrigPoly, X: PointSet, sup: float | None = None) -> float:
    """``||f||_inf / max_j |f(x^j)|``; ``inf`` when every sample vanishes.

    The numerator is the refined sup (never below the sample maximum);
    pass ``sup`` to reuse a known value.
    """
    if f.dim != X.dim:
        raise ValueError("dimension mismatch")
    den = sample_max(f, X)
    num = max(refined_sup(f) if sup is None else float(sup), den)
    if den <= 1e-14 * max(num, 1.0):
        return math.inf
    return num / den


def candidate_point_set(n: int, d: int) -> PointSet:
    """Union over ``||s||_1 = n`` of product grids with ``2^{s_j} + 1`` points per axis."""
    if d not in (1, 2):
        raise ValueError("candidate point sets are defined for d in {1, 2}")
    if n < 0:
        raise ValueError("n must be >= 0")
    seen = set()
    comps = []
    for s in itertools.product(range(n + 1), repeat=d):
        if sum(s) != n:
            continue
        sizes = tuple((1 << sj) + 1 for sj in s)
        comps.append(sizes)
        for t in itertools.product(*[range(g) for g in sizes]):
            key = []
            for tj, g in zip(t, sizes):
                c = math.gcd(tj, g)
                key.append((tj // c, g // c))
            seen.add(tuple(key))
    pts = np.array([[TWO_PI * a / b for a, b in key] for key in sorted(seen)], dtype=np.float64)
    return PointSet(d, pts, tuple(comps))


def equispaced_point_set(M: int, d: int) -> PointSet:
    """Product grid with ``M`` points per axis."""
    grid = Grid.cube(M, d)
    return PointSet(d, grid.nodes(), (grid.sizes,))


def empirical_discretization_scan(n: int, d: int, draws: int, seed: int = 0,
                                  X: PointSet | None = None) -> tuple:
    """Largest ``D`` over ``draws`` seeded random ``f`` in ``T(Q_n)`` with the candidate set.

    Returns ``(ScalingRow, constants)`` with rate ``n^(d-1)``.
    """
    if draws < 1:
        raise ValueError("draws must be >= 1")
    X = X or candidate_point_set(n, d)
    Q = step_hyperbolic(n, d)
    consts = []
    for i in range(draws):
        f = random_trigpoly(Q, np.random.default_rng([seed, i]))
        consts.append(discretization_constant(f, X))
    worst = int(np.argmax(consts))
    rate = float(max(n, 1) ** (d - 1))
    return ScalingRow(n, float(consts[worst]), rate, f"random[{worst}]"), consts


# ---------------------------------------------------------------------------
# shift search

def _offsets(X: PointSet, grid: Grid) -> list:
    """Per axis: midpoints of the gaps between sorted sub-cell residues of the points."""
    out = []
    for j, G in enumerate(grid.sizes):
        h = TWO_PI / G
        tol = 1e-9 * h
        # residues within rounding of each other (or of h) are one residue
        r = np.mod(X.points[:, j], h)
        r = np.sort(np.where(r > h - tol, 0.0, r))
        r = r[np.concatenate([[True], np.diff(r) > tol])]
        nxt = np.concatenate([r[1:], [r[0] + h]])
        mids = np.mod(0.5 * (r + nxt), h)
        out.append(mids[np.argsort(np.mod(mids - r[0], h))])
    return out


def shift_counts(X: PointSet, B: GridSet, offset) -> np.ndarray:
    """``g(offset + h t)`` for every cell index ``t``: number of ``x^j - y`` in ``B``."""
    grid = B.grid
    offset = np.asarray(offset, dtype=np.float64)
    base = grid.cell_of(X.points - offset)
    cells = np.stack(np.unravel_index(base, grid.sizes), axis=1)
    P = np.zeros(grid.sizes)
    np.add.at(P, tuple(cells.T), 1.0)
    # g(t) = sum_c P[c] * B[c - t]
    Bm = B.mask.astype(np.float64)
    g = np.fft.ifftn(np.fft.fftn(P) * np.conj(np.fft.fftn(Bm))).real
    return np.rint(g).astype(np.int64)


def find_avoiding_shift(X: PointSet, B: GridSet) -> np.ndarray:
    """A shift ``y*`` with ``x^j - y* outside B`` for all ``j``.

    Tries ``y = 0`` first, then every sub-cell offset block in a fixed order
    and the first zero in flat cell order within the block.
    """
    if X.dim != B.grid.dim:
        raise ValueError("dimension mismatch")
    zero = np.zeros(X.dim)
    if not B.contains_points(X.points).any():
        return zero
    h = TWO_PI / np.asarray(B.grid.sizes, dtype=np.float64)
    for offset in itertools.product(*_offsets(X, B.grid)):
        offset = np.asarray(offset)
        g = shift_counts(X, B, offset)
        hits = np.flatnonzero(g.ravel() == 0)
        if hits.size:
            t = np.asarray(np.unravel_index(hits[0], B.grid.sizes), dtype=np.float64)
            y = np.mod(offset + h * t, TWO_PI)
            if B.contains_points(X.points - y).any():
                raise AssertionError("shift search inconsistent with cell membership")
            return y
    why = ("precondition |B| < 1/m violated" if X.m * B.measure >= 1
           else "no avoiding shift on the refined shift grid")
    raise ShiftNotFoundError(f"{why} (m={X.m}, |B|={B.measure:.6g})")


@dataclass
class DiscretizationReport:
    """Certificate ``||f||_inf <= D max_j |f(x^j - y*)| <= D sup_{B^c} |f|``."""

    holds: bool
    y_star: np.ndarray
    D: float
    D_at_shift: float
    sup: float
    sample_max: float
    sup_outside_grid: float
    rhs: float
    m: int
    measure_B: float
    shifts_tested: int
    grid: tuple

    def as_dict(self) -> dict:
        return {"holds": self.holds, "y_star": [float(v) for v in self.y_star], "D": self.D,
                "D_at_shift": self.D_at_shift, "sup": self.sup, "sample_max": self.sample_max,
                "sup_outside_grid": self.sup_outside_grid, "rhs": self.rhs, "m": self.m,
                "measure_B": self.measure_B, "shifts_tested": self.shifts_tested,
                "grid": list(self.grid)}


def discretization_to_remez(f: TrigPoly, X: PointSet, B: GridSet, D: float | None = None,
                            shifts_per_axis: int = 8, oversample: float = DEFAULT_OVERSAMPLE,
                            tol: float = EPS) -> DiscretizationReport:
    """Run the shift argument for ``f``, ``X`` and ``B`` and re-verify the result.

    ``D`` defaults to the largest constant measured over a shift grid with
    ``shifts_per_axis`` points per axis together with ``y*``.  A supplied
    ``D`` smaller than a measured one raises ``DiscretizationViolation``.
    The final inequality is checked against the maximum of ``|f|`` over the
    nodes of a grid refining ``B``'s cells that lie outside ``B``, together
    with the points ``x^j - y*`` (which the search placed outside ``B``).
    """
    if f.is_zero():
        raise ValueError("f must be nonzero")
    sup = refined_sup(f)
    y_star = find_avoiding_shift(X, B)
    shifts = [np.asarray(y, dtype=np.float64) * TWO_PI / shifts_per_axis
              for y in itertools.product(range(shifts_per_axis), repeat=f.dim)]
    shifts.append(y_star)
    measured = []
    for y in shifts:
        fy = shift(f, y)
        measured.append(discretization_constant(fy, X, sup=sup))
    worst = int(np.argmax(measured))
    if D is None:
        D = float(measured[worst])
    elif measured[worst] > D * (1 + tol):
        raise DiscretizationViolation(
            f"D={D} fails at shift {shifts[worst].tolist()} (measured {measured[worst]:.6g})",
            shifts[worst], measured[worst])
    on_points = float(np.abs(f(X.points - y_star)).max())
    # full-grid re-verification on a grid refining B's cells
    factors = [max(1, math.ceil(oversample * (2 * m + 1) / G)) for m, G in zip(f.max_degree(), B.grid.sizes)]
    fine = Grid(tuple(G * r for G, r in zip(B.grid.sizes, factors)))
    vals = evaluate_on_grid(f, fine, stream=False).abs_flat
    coarse = np.ravel_multi_index(
        tuple(ix // r for ix, r in zip(np.indices(fine.sizes).reshape(f.dim, -1), factors)), B.grid.sizes)
    outside = ~np.isin(coarse, B.indices)
    grid_out = float(vals[outside].max()) if outside.any() else 0.0
    rhs = D * max(grid_out, on_points)
    holds = sup <= rhs * (1 + tol)
    return DiscretizationReport(bool(holds), y_star, float(D), float(measured[-1]), sup, on_points,
                                grid_out, float(rhs), X.m, B.measure, len(shifts), fine.sizes)
