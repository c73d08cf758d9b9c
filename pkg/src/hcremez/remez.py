"""Extremal Remez ratios on grids and executable checks of Remez/Nikol'skii implications.

On a grid with normalized counting measure the supremum of
``||g||_p / ||g||_{p, outside B}`` over cell unions ``B`` of measure at most
``b`` is attained by deleting the ``floor(b * cells)`` cells where ``|g|`` is
largest.  Checks that involve the measure of ``B`` use that attained
measure ``b_eff = cells_removed / cells``, which never exceeds ``b``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from hcremez._config import DEFAULT_OVERSAMPLE, tolerance
from hcremez.indexsets import IndexSet, hyperbolic_cross
from hcremez.kernels import hyperbolic_vp_separable, sup_norm
from hcremez.measure import (
    Grid,
    GridFunction,
    GridSet,
    lp_norm,
    lp_norm_excluding,
    top_level_set,
)
from hcremez.spectral import TrigPoly, evaluate_on_grid, random_trigpoly, separable_reduce_on_grid

__all__ = [
    "RemezQuery",
    "RemezReport",
    "NikolskiiParams",
    "CheckResult",
    "remez_ratio",
    "remez_bound_reference",
    "check_lemma_2_1",
    "check_lemma_2_2",
    "check_prop_2_1",
    "check_prop_2_1p",
    "check_prop_2_2",
    "check_univariate_remez",
    "nikolskii_to_remez_budget",
    "sparse_support_remez_budget",
    "check_sparse_support",
    "verify_theorem_3_1",
    "remez_lower_search",
    "sample",
]

INF = math.inf


def _exponent(p) -> float:
    p = float(p)
    if not p > 0:
        raise ValueError("exponent must be positive or inf")
    return p


@dataclass(frozen=True)
class RemezQuery:
    b: float
    p: float

    def __post_init__(self):
        if not 0 <= self.b < 1:
            raise ValueError("budget must lie in [0, 1)")
        object.__setattr__(self, "p", _exponent(self.p))


@dataclass
class RemezReport:
    """Outcome of one extremal ratio computation.

    ``ratio`` is ``inf`` with ``infinite=True`` when ``g`` vanishes off the
    extremal set.
    """

    ratio: float
    b: float
    b_eff: float
    p: float
    norm_total: float
    norm_outside: float
    extremal: GridSet
    infinite: bool = False

    @property
    def grid(self) -> tuple:
        return self.extremal.grid.sizes


@dataclass(frozen=True)
class NikolskiiParams:
    """``||f||_p <= C m^beta ||f||_q`` with ``beta = 1/q - 1/p``."""

    p: float
    q: float
    C: float = 1.0
    m: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "p", _exponent(self.p))
        object.__setattr__(self, "q", _exponent(self.q))
        if not self.q < self.p:
            raise ValueError("need q < p")

    @property
    def beta(self) -> float:
        return 1.0 / self.q - 1.0 / self.p


@dataclass
class CheckResult:
    """``holds`` iff ``lhs <= rhs * (1 + tol)``; ``slack = rhs - lhs``."""

    name: str
    holds: bool
    lhs: float
    rhs: float
    tol: float
    params: dict = field(default_factory=dict)

    @property
    def slack(self) -> float:
        if math.isinf(self.rhs):
            return INF
        return self.rhs - self.lhs

    def as_dict(self) -> dict:
        return {"name": self.name, "holds": self.holds, "lhs": self.lhs, "rhs": self.rhs,
                "slack": self.slack, "tol": self.tol, **self.params}


def _result(name, lhs, rhs, tol, **params) -> CheckResult:
    holds = math.isinf(rhs) or lhs <= rhs * (1.0 + tol)
    return CheckResult(name, bool(holds), float(lhs), float(rhs), tol, params)


def sample(f, grid: Grid | None = None, oversample: float = DEFAULT_OVERSAMPLE) -> GridFunction:
    """Materialized samples of ``f`` (a ``GridFunction`` passes through)."""
    if isinstance(f, GridFunction):
        return f
    grid = grid or Grid.for_degree(f.max_degree(), oversample)
    return evaluate_on_grid(f, grid, stream=False)


# ---------------------------------------------------------------------------

def remez_ratio(g, b: float, p) -> RemezReport:
    """``max_B ||g||_p / ||g||_{p, outside B}`` over cell unions with ``|B| <= b``."""
    q = RemezQuery(b, p)
    g = sample(g)
    total = lp_norm(g, q.p)
    if total == 0:
        raise ValueError("ratio undefined for the zero function")
    B = top_level_set(g, q.b)
    outside = lp_norm_excluding(g, q.p, B)
    b_eff = B.count / g.grid.total
    if outside == 0:
        return RemezReport(INF, q.b, b_eff, q.p, total, 0.0, B, infinite=True)
    return RemezReport(max(total / outside, 1.0), q.b, b_eff, q.p, total, outside, B)


def remez_bound_reference(n, measure: float, regime: str = "auto") -> float:
    """Classical Remez constants; ``measure`` is Lebesgue measure on ``[0, 2 pi)^d``.

    Regimes: ``small`` (d = 1, ``|B| < pi/2``): ``exp(2 n |B|)``;
    ``large`` (d = 1, ``pi/2 < |B| < 2 pi``): ``(17 / (2 pi - |B|))^(2n)``;
    ``multivariate``: ``exp(2 d (|B| prod n_j)^(1/d))`` for
    ``|B| < (pi/2)^d min(n)^d / prod(n)``.
    """
    n = tuple(int(v) for v in np.atleast_1d(n))
    d = len(n)
    if any(v < 0 for v in n):
        raise ValueError("degrees must be >= 0")
    if measure < 0:
        raise ValueError("measure must be >= 0")
    if regime == "auto":
        if d > 1:
            regime = "multivariate"
        else:
            regime = "small" if measure < math.pi / 2 else "large"
    if regime == "small":
        if d != 1 or measure >= math.pi / 2:
            raise ValueError("small-measure formula needs d = 1 and |B| < pi/2")
        return math.exp(2 * n[0] * measure)
    if regime == "large":
        if d != 1 or not math.pi / 2 < measure < 2 * math.pi:
            raise ValueError("large-measure formula needs d = 1 and pi/2 < |B| < 2 pi")
        return (17.0 / (2 * math.pi - measure)) ** (2 * n[0])
    if regime == "multivariate":
        prod = math.prod(n)
        if prod == 0:
            raise ValueError("multivariate formula needs all degrees >= 1")
        if measure >= (math.pi / 2) ** d * min(n) ** d / prod:
            raise ValueError("measure outside the admissible range of the multivariate formula")
        return math.exp(2 * d * (measure * prod) ** (1.0 / d))
    raise ValueError(f"unknown regime {regime!r}")


def check_univariate_remez(g, b: float, n: int) -> CheckResult:
    """``R_inf <= exp(2 n |B|)`` for ``f`` of degree ``n`` on T, with ``|B| = 2 pi b``."""
    g = sample(g)
    if g.grid.dim != 1:
        raise ValueError("univariate check needs a one-dimensional grid")
    rep = remez_ratio(g, b, INF)
    bound = remez_bound_reference(n, 2 * math.pi * b, "small")
    return _result("univariate_remez", rep.ratio, bound, tolerance(INF), b=b, n=n)


# ---------------------------------------------------------------------------
# implications between Remez- and Nikol'skii-type inequalities

def check_lemma_2_1(g, b: float, p) -> CheckResult:
    """``RI(inf, b, R)`` implies ``RI(p, b/2, 2^(1/p) R)``."""
    p = _exponent(p)
    if math.isinf(p):
        raise ValueError("needs finite p")
    g = sample(g)
    r_inf = remez_ratio(g, b, INF).ratio
    lhs = remez_ratio(g, b / 2, p).ratio
    return _result("lemma_2_1", lhs, 2 ** (1 / p) * r_inf, tolerance(p), b=b, p=p)


def check_lemma_2_2(g, b: float, p, q) -> CheckResult:
    """``RI(p, b, R)`` implies ``RI(q, b, R^(p/q))`` for ``q < p < inf``."""
    p, q = _exponent(p), _exponent(q)
    if not q < p < INF:
        raise ValueError("needs 0 < q < p < inf")
    g = sample(g)
    rp = remez_ratio(g, b, p).ratio
    lhs = remez_ratio(g, b, q).ratio
    return _result("lemma_2_2", lhs, rp ** (p / q), tolerance(p, q), b=b, p=p, q=q)


def _budget_power(b_eff: float, beta: float) -> float:
    return INF if b_eff == 0 else b_eff ** (-beta)


def check_prop_2_1(g, b: float, p, q) -> CheckResult:
    """``RI(inf, b, R)`` implies ``||g||_p <= R^(q beta) b^(-beta) ||g||_q``."""
    p, q = _exponent(p), _exponent(q)
    if not q < p:
        raise ValueError("needs q < p")
    g = sample(g)
    beta = 1 / q - 1 / p
    rep = remez_ratio(g, b, INF)
    rhs = rep.ratio ** (q * beta) * _budget_power(rep.b_eff, beta) * lp_norm(g, q)
    return _result("prop_2_1", lp_norm(g, p), rhs, tolerance(p, q), b=b, b_eff=rep.b_eff, p=p, q=q)


def check_prop_2_1p(g, b: float, p, q) -> CheckResult:
    """``RI(p, b, R)`` implies ``||g||_p <= R b^(-beta) ||g||_q`` for ``q < p < inf``."""
    p, q = _exponent(p), _exponent(q)
    if not q < p < INF:
        raise ValueError("needs 0 < q < p < inf")
    g = sample(g)
    beta = 1 / q - 1 / p
    rep = remez_ratio(g, b, p)
    rhs = rep.ratio * _budget_power(rep.b_eff, beta) * lp_norm(g, q)
    return _result("prop_2_1p", lp_norm(g, p), rhs, tolerance(p, q), b=b, b_eff=rep.b_eff, p=p, q=q)


def nikolskii_to_remez_budget(params: NikolskiiParams) -> tuple:
    """Budget ``b`` with ``C m^beta b^beta = 2^-max(1, 1/q)``, and the Remez factor ``2^max(1, 1/q)``."""
    if params.C < 1 or params.m < 1:
        raise ValueError("need C >= 1 and m >= 1")
    factor = 2.0 ** max(1.0, 1.0 / params.q)
    b = 1.0 / ((factor * params.C) ** (1.0 / params.beta) * params.m)
    return b, factor


def check_prop_2_2(g, p, q, C: float = 1.0, m: float | None = None) -> CheckResult:
    """``NI(p, q, C, m)`` implies ``RI(q, b, 2^max(1, 1/q))`` at the derived budget.

    Without ``m`` the sharpest scale for the sampled ``g`` at ``C`` is used,
    so the Nikol'skii hypothesis holds by construction.
    """
    p, q = _exponent(p), _exponent(q)
    g = sample(g)
    beta = 1 / q - 1 / p
    if m is None:
        m = max(1.0, (lp_norm(g, p) / (C * lp_norm(g, q))) ** (1 / beta))
    params = NikolskiiParams(p, q, C, m)
    b, factor = nikolskii_to_remez_budget(params)
    rep = remez_ratio(g, b, q)
    return _result("prop_2_2", rep.ratio, factor, tolerance(q), b=b, p=p, q=q, C=C, m=m)


# ---------------------------------------------------------------------------

def sparse_support_remez_budget(support: IndexSet, p, C: float = 4.0) -> float:
    """Budget from the size of a spectrum: ``1/(C n)`` for ``p <= 2``, ``1/(C n^(p/2))`` for d = 1, ``p > 2``."""
    p = _exponent(p)
    n = len(support)
    if n == 0:
        raise ValueError("empty support")
    if p <= 2:
        return 1.0 / (C * n)
    if support.dim != 1 or math.isinf(p):
        raise ValueError("p > 2 branch is only available for d = 1 and finite p")
    return 1.0 / (C * n ** (p / 2))


def check_sparse_support(f: TrigPoly, p, C: float = 4.0, grid: Grid | None = None) -> CheckResult:
    p = _exponent(p)
    b = sparse_support_remez_budget(f.support, p, C)
    rep = remez_ratio(sample(f, grid), b, p)
    return _result("sparse_support", rep.ratio, 2.0 ** max(1.0, 1.0 / p), tolerance(p), b=b, p=p, C=C)


# ---------------------------------------------------------------------------

@dataclass
class Theorem31Report:
    N: int
    d: int
    b: float
    ratio: float
    bound: float
    kernel_l1: float
    kernel_sup: float
    C1: float
    C2: float
    grid: tuple
    check: CheckResult


def verify_theorem_3_1(f: TrigPoly, N: int, grid: Grid | None = None, kernel=None) -> Theorem31Report:
    """Sup-norm Remez inequality for ``f`` in ``T(N)`` via ``f = f * V_N``.

    The budget is ``1 / (2 ||V_N||_inf)`` and the bound ``2 ||V_N||_1``,
    both kernel norms taken on the same grid as ``f``.
    """
    d = f.dim
    if not f.support.issubset(hyperbolic_cross(N, d)):
        raise ValueError("f is not supported in Gamma(N)")
    V = kernel if kernel is not None else hyperbolic_vp_separable(N, d)
    grid = grid or Grid.for_degree((N,) * d, DEFAULT_OVERSAMPLE)
    if min(grid.sizes) <= 3 * N:
        raise ValueError("grid too coarse for the discrete convolution identity")
    k_sup = sup_norm(V)
    k_l1 = lp_norm(separable_reduce_on_grid(V, grid, (1.0,)), 1.0)
    logs = math.log2(N) ** (d - 1) if N > 1 else 1.0
    C2 = 2 * k_sup / (N * logs)
    C1 = 2 * k_l1 / logs
    b = 1.0 / (C2 * N * logs)
    rep = remez_ratio(evaluate_on_grid(f, grid, stream=False), b, INF)
    chk = _result("theorem_3_1", rep.ratio, 2 * k_l1, tolerance(INF), N=N, d=d, b=b)
    return Theorem31Report(N, d, b, rep.ratio, 2 * k_l1, k_l1, k_sup, C1, C2, grid.sizes, chk)


def remez_lower_search(N: int, d: int, b: float, iterations: int, seed: int,
                       oversample: float = 4, restarts: int = 4):
    """Random-restart hill climbing for large ``R_inf`` over unit vectors on ``Gamma(N)``.

    Returns ``(best_poly, best_ratio, history)``; ``history[i]`` is the best
    ratio after ``i + 1`` iterations.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    rng = np.random.default_rng(seed)
    support = hyperbolic_cross(N, d)
    grid = Grid.for_degree((N,) * d, oversample)

    def score(c):
        f = TrigPoly(d, support.members, c)
        if f.is_zero():
            return 0.0, f
        return remez_ratio(evaluate_on_grid(f, grid, stream=False), b, INF).ratio, f

    def fresh():
        c = random_trigpoly(support, rng).coefficients_at(support.members)
        return c / np.linalg.norm(c)

    best_c = fresh()
    best, best_f = score(best_c)
    cur_c, cur = best_c, best
    history = []
    per_restart = max(1, iterations // max(restarts, 1))
    for it in range(iterations):
        if it and it % per_restart == 0:
            cur_c = fresh()
            cur, _ = score(cur_c)
        step = rng.standard_normal(cur_c.size) + 1j * rng.standard_normal(cur_c.size)
        mask = rng.random(cur_c.size) < max(1.0 / cur_c.size, 0.2)
        trial = cur_c + 0.3 * step * mask
        trial /= np.linalg.norm(trial)
        r, f = score(trial)
        if r > cur:
            cur_c, cur = trial, r
        if r > best:
            best, best_f = r, f
        history.append(best)
    return best_f, best, history
