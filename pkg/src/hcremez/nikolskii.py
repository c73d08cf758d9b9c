"""Nikol'skii ratios ``||f||_p / ||f||_q`` on hyperbolic-cross polynomial spaces.

Suprema over ``T(N)`` are estimated from below by a candidate family and
random draws; upper bounds come from the convolution identity
``f = f * V_N``, which on a fine enough grid gives
``||f||_inf <= ||V_N||_inf ||f||_1`` exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from hcremez._config import DEFAULT_OVERSAMPLE, EPS_QUASI, tolerance
from hcremez.indexsets import hyperbolic_cross
from hcremez.kernels import hyperbolic_vp_kernel, hyperbolic_vp_separable, jackson_kernel, sup_norm
from hcremez.measure import Grid, lp_norm
from hcremez.remez import CheckResult, _result, sample
from hcremez.spectral import TrigPoly, evaluate_on_grid, random_trigpoly

__all__ = [
    "RatioSample",
    "ScalingRow",
    "nikolskii_ratio",
    "nikolskii_rate",
    "nikolskii_sup_estimate",
    "check_theorem_3_5_upper",
    "check_interpolation_chain",
    "jackson_lower_bound",
    "jackson_min_r",
    "slope_fit",
]

INF = math.inf


@dataclass
class RatioSample:
    witness: str
    p: float
    q: float
    ratio: float
    N: int
    dim: int


@dataclass
class ScalingRow:
    N: int
    ratio: float
    rate: float
    witness: str

    @property
    def normalized(self) -> float:
        return self.ratio / self.rate


def nikolskii_ratio(g, p, q) -> float:
    """``||g||_p / ||g||_q`` for ``q < p``."""
    p, q = float(p), float(q)
    if not 0 < q < p:
        raise ValueError("need 0 < q < p")
    g = sample(g)
    den = lp_norm(g, q)
    if den == 0:
        raise ValueError("ratio undefined for the zero function")
    return lp_norm(g, p) / den


def nikolskii_rate(N: int, d: int, p, q) -> float:
    """Growth rate of ``sup ||f||_p / ||f||_q`` over ``T(N)``.

    ``N^(1/q) (log N)^((d-1)(1-1/q)_+)`` for ``p = inf`` and ``N^(1/q - 1/p)``
    for finite ``p``; logarithms are base 2.
    """
    p, q = float(p), float(q)
    if math.isinf(p):
        return N ** (1 / q) * math.log2(N) ** ((d - 1) * max(0.0, 1 - 1 / q))
    return N ** (1 / q - 1 / p)


def jackson_min_r(p, q) -> int:
    """Smallest integer ``r`` with ``r > 1/(2e)`` for every exponent ``e < 1`` among ``p, q``."""
    need = [1 / (2 * e) for e in (float(p), float(q)) if e < 1]
    if not need:
        return 1
    return int(math.floor(max(need))) + 1


def jackson_lower_bound(n: int, r: int, p, q, oversample: float = DEFAULT_OVERSAMPLE) -> RatioSample:
    """Nikol'skii ratio of the univariate Jackson kernel of order ``(n, r)``."""
    p, q = float(p), float(q)
    if r < jackson_min_r(p, q):
        raise ValueError(f"r={r} too small for exponents p={p}, q={q}; need r >= {jackson_min_r(p, q)}")
    J = jackson_kernel(n, r)
    g = evaluate_on_grid(J, Grid.for_degree(J.max_degree(), oversample), stream=False)
    return RatioSample(f"jackson(n={n},r={r})", p, q, nikolskii_ratio(g, p, q), n, 1)


def _candidates(N: int, d: int, p, q):
    """Named members of ``T(N)`` used as witnesses."""
    cross = hyperbolic_cross(N, d)
    yield "dirichlet_cross", TrigPoly(d, cross.members, np.ones(len(cross)))
    small = N // (2 ** d)
    if small >= 1:
        yield f"vp(N={small})", hyperbolic_vp_kernel(small, d)
    r = jackson_min_r(p, q)
    n = 1 + int(N ** (1 / d)) // r
    while n > 1 and (r * (n - 1)) ** d > N:
        n -= 1
    if n > 1:
        J = jackson_kernel(n, r)
        f = J
        for _ in range(d - 1):
            f = _tensor(f, J)
        yield f"jackson^{d}(n={n},r={r})", f


def _tensor(f: TrigPoly, g: TrigPoly) -> TrigPoly:
    i, j = np.meshgrid(np.arange(len(f)), np.arange(len(g)), indexing="ij")
    keys = np.hstack([f.keys[i.ravel()], g.keys[j.ravel()]])
    return TrigPoly(f.dim + g.dim, keys, f.coeffs[i.ravel()] * g.coeffs[j.ravel()])


def nikolskii_sup_estimate(N: int, d: int, p, q, draws: int = 8, seed: int = 0,
                           oversample: float = 4) -> tuple:
    """Best ratio over the candidate family and ``draws`` random polynomials in ``T(N)``.

    Returns ``(ScalingRow, samples)``; the row's ratio is a lower bound on the supremum.
    """
    p, q = float(p), float(q)
    if not 0 < q < p:
        raise ValueError("need 0 < q < p")
    grid = Grid.for_degree((N,) * d, oversample)
    samples = []
    for name, f in _candidates(N, d, p, q):
        samples.append(RatioSample(name, p, q, nikolskii_ratio(evaluate_on_grid(f, grid, stream=False), p, q), N, d))
    cross = hyperbolic_cross(N, d)
    for i in range(draws):
        f = random_trigpoly(cross, np.random.default_rng([seed, i]))
        samples.append(RatioSample(f"random[{i}]", p, q,
                                   nikolskii_ratio(evaluate_on_grid(f, grid, stream=False), p, q), N, d))
    best = max(samples, key=lambda s: s.ratio)
    return ScalingRow(N, best.ratio, nikolskii_rate(N, d, p, q), best.witness), samples


def check_theorem_3_5_upper(f: TrigPoly, N: int, q, C: float | None = None,
                            grid: Grid | None = None) -> CheckResult:
    """``||f||_inf <= (C N)^(1/q) ||f||_q`` for ``0 < q < 1``.

    The default ``C = ||V_N||_inf / N`` makes the ``q = 1`` case an identity
    consequence of ``f = f * V_N``.
    """
    q = float(q)
    if not 0 < q < 1:
        raise ValueError("needs 0 < q < 1")
    d = f.dim
    if not f.support.issubset(hyperbolic_cross(N, d)):
        raise ValueError("f is not supported in Gamma(N)")
    if C is None:
        C = sup_norm(hyperbolic_vp_separable(N, d)) / N
    grid = grid or Grid.for_degree((N,) * d, DEFAULT_OVERSAMPLE)
    g = evaluate_on_grid(f, grid, stream=False)
    rhs = (C * N) ** (1 / q) * lp_norm(g, q)
    return _result("theorem_3_5_upper", lp_norm(g, INF), rhs, EPS_QUASI, N=N, q=q, C=C)


def check_interpolation_chain(g, p, q) -> CheckResult:
    """``||g||_p <= ||g||_inf^(1 - q/p) ||g||_q^(q/p)`` for ``q < p < inf``."""
    p, q = float(p), float(q)
    g = sample(g)
    rhs = lp_norm(g, INF) ** (1 - q / p) * lp_norm(g, q) ** (q / p)
    tol = 1e-9 if min(p, q) >= 1 else tolerance(p, q)
    return _result("interpolation_chain", lp_norm(g, p), rhs, tol, p=p, q=q)


def slope_fit(ns, ratios) -> tuple:
    """Least-squares slope of ``log2 ratio`` against ``log2 n``; returns ``(slope, intercept, rms residual)``."""
    x = np.log2(np.asarray(ns, dtype=np.float64))
    y = np.log2(np.asarray(ratios, dtype=np.float64))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return float(slope), float(intercept), float(np.sqrt(np.mean(resid ** 2)))
