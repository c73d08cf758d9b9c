"""Seeded experiment drivers: checker registry, implication fuzz, sweeps and replay.

Every random draw uses its own generator ``default_rng([seed, draw])`` so a
row can be recomputed in isolation.  Functions here return plain rows
(dicts) and summaries; writing files is left to the CLI.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable

import numpy as np

from hcremez._config import tolerance
from hcremez.discretize import (
    PointSet,
    candidate_point_set,
    discretization_to_remez,
)
from hcremez.indexsets import IndexSet, hyperbolic_cross, step_hyperbolic
from hcremez.kernels import hyperbolic_vp_separable, sup_norm
from hcremez.measure import Grid, GridSet, lp_norm
from hcremez.nikolskii import nikolskii_sup_estimate, slope_fit
from hcremez.remez import (
    check_lemma_2_1,
    check_lemma_2_2,
    check_prop_2_1,
    check_prop_2_1p,
    check_prop_2_2,
    check_univariate_remez,
    remez_bound_reference,
    remez_lower_search,
    remez_ratio,
)
from hcremez.spectral import TrigPoly, evaluate_on_grid, random_trigpoly, separable_reduce_on_grid

INF = math.inf
EXPONENTS = (0.5, 1.0, 2.0, 4.0, INF)
FINITE = EXPONENTS[:-1]
REPLAY_FACTOR = 32
REPLAY_MAX_NODES = 1 << 24
BOUNDED_GROWTH = 2.0


def exponent_text(p) -> str:
    return "inf" if math.isinf(float(p)) else repr(float(p))


def parse_exponent(text) -> float:
    s = str(text).strip().lower()
    if s in ("inf", "infinity", "oo"):
        return INF
    p = float(s)
    if not p > 0:
        raise ValueError(f"exponent must be positive, got {text!r}")
    return p


# ---------------------------------------------------------------------------
# checker registry

@dataclass
class Checker:
    """A named implication check with its instance generator.

    ``run(g, inst)`` returns a ``CheckResult``; ``draw(rng)`` returns
    the parameter part of an instance.
    """

    name: str
    run: Callable
    draw: Callable
    dims: tuple = (1, 2)


CHECKERS: dict = {}


def register_checker(name: str, run: Callable, draw: Callable, dims=(1, 2)) -> Checker:
    CHECKERS[name] = Checker(name, run, draw, tuple(dims))
    return CHECKERS[name]


def _pair(rng, top):
    """``q < p`` from the exponent list, ``p`` drawn from ``top``."""
    p = top[rng.integers(len(top))]
    lower = [e for e in FINITE if e < p]
    if not lower:
        return _pair(rng, top)
    return p, lower[rng.integers(len(lower))]


def _budget(rng) -> float:
    return float(10 ** rng.uniform(-3, math.log10(0.6)))


def _draw_p(rng):
    return {"b": _budget(rng), "p": FINITE[rng.integers(len(FINITE))]}


def _draw_pq(rng, top):
    p, q = _pair(rng, top)
    return {"b": _budget(rng), "p": p, "q": q}


register_checker("lemma_2_1", lambda g, inst: check_lemma_2_1(g, inst["b"], inst["p"]), _draw_p)
register_checker("lemma_2_2", lambda g, inst: check_lemma_2_2(g, inst["b"], inst["p"], inst["q"]),
                 lambda rng: _draw_pq(rng, FINITE[1:]))
register_checker("prop_2_1", lambda g, inst: check_prop_2_1(g, inst["b"], inst["p"], inst["q"]),
                 lambda rng: _draw_pq(rng, EXPONENTS[1:]))
register_checker("prop_2_1p", lambda g, inst: check_prop_2_1p(g, inst["b"], inst["p"], inst["q"]),
                 lambda rng: _draw_pq(rng, FINITE[1:]))


def _draw_prop_2_2(rng):
    p, q = _pair(rng, EXPONENTS[1:])
    return {"p": p, "q": q, "C": float((1.0, 2.0, 4.0)[rng.integers(3)])}


register_checker("prop_2_2", lambda g, inst: check_prop_2_2(g, inst["p"], inst["q"], inst["C"]), _draw_prop_2_2)
register_checker("univariate_remez", lambda g, inst: check_univariate_remez(g, inst["b"], inst["n"]),
                 lambda rng: {"b": float(rng.uniform(0, 0.25))}, dims=(1,))

FUZZ_CHECKERS = ("lemma_2_1", "lemma_2_2", "prop_2_1", "prop_2_1p", "prop_2_2")


def random_cross_poly(rng, d: int, N: int) -> TrigPoly:
    """Gaussian coefficients on a random nonempty subset of ``Gamma(N)``."""
    cross = hyperbolic_cross(N, d)
    keep = rng.random(len(cross)) < rng.uniform(0.2, 1.0)
    if not keep.any():
        keep[rng.integers(len(cross))] = True
    sub = IndexSet(d, cross.members[keep])
    f = random_trigpoly(sub, rng, real=bool(rng.random() < 0.3))
    if f.is_zero():
        f = TrigPoly.constant(d)
    return f


def make_instance(checker: str, rng, dim: int | None = None) -> dict:
    """A serializable instance of ``checker`` drawn from ``rng``."""
    chk = CHECKERS[checker]
    d = int(dim if dim is not None else chk.dims[rng.integers(len(chk.dims))])
    N = int(rng.integers(1, 17 if d == 1 else 13))
    f = random_cross_poly(rng, d, N)
    inst = {"checker": checker, "dim": d, "N": N, "oversample": int(rng.integers(1, 5))}
    inst.update(chk.draw(rng))
    if checker == "univariate_remez":
        inst["n"] = int(f.max_degree()[0])
    inst["f"] = f.to_text()
    return inst


def _grid_for(f: TrigPoly, oversample: float) -> Grid:
    return Grid.for_degree(f.max_degree(), oversample)


def run_instance(inst: dict, oversample: float | None = None):
    """Rerun a serialized instance; returns ``(CheckResult, grid)``."""
    f = TrigPoly.from_text(inst["f"], inst["dim"])
    grid = _grid_for(f, inst["oversample"] if oversample is None else oversample)
    g = evaluate_on_grid(f, grid, stream=False)
    params = {k: (parse_exponent(v) if k in ("p", "q") else v) for k, v in inst.items()}
    return CHECKERS[inst["checker"]].run(g, params), grid


def serialize_instance(inst: dict) -> dict:
    return {k: (exponent_text(v) if k in ("p", "q") else v) for k, v in inst.items()}


def fuzz(draws: int, seed: int, checkers=FUZZ_CHECKERS, dims=None):
    """Run every checker once per draw; returns ``(rows, violations)``."""
    rows, violations = [], []
    for draw in range(draws):
        rng = np.random.default_rng([seed, draw])
        for name in checkers:
            dim = None if dims is None else dims[rng.integers(len(dims))]
            inst = make_instance(name, rng, dim)
            res, grid = run_instance(inst)
            rows.append({"draw": draw, "checker": name, "dim": inst["dim"], "N": inst["N"],
                         "p": inst.get("p", ""), "q": inst.get("q", ""), "b": inst.get("b", ""),
                         "lhs": res.lhs, "rhs": res.rhs, "slack": res.slack, "holds": res.holds,
                         "grid": grid.sizes, "tol": res.tol})
            if not res.holds:
                violations.append({"checker": name, "draw": draw, "seed": seed,
                                   "instance": serialize_instance(inst), "result": _result_dict(res)})
    return rows, violations


def _result_dict(res) -> dict:
    return {"holds": res.holds, "lhs": res.lhs, "rhs": res.rhs, "tol": res.tol}


def replay(violations: list, factor: int = REPLAY_FACTOR) -> list:
    """Rerun each violation at ``factor`` times its oversample (capped at ``2^24`` nodes).

    A violation that disappears is a quadrature artifact; one that remains
    is a logic error.
    """
    out = []
    for v in violations:
        inst = v["instance"]
        f = TrigPoly.from_text(inst["f"], inst["dim"])
        os_ = float(inst["oversample"]) * factor
        while os_ > 1 and _grid_for(f, os_).total > REPLAY_MAX_NODES:
            os_ /= 2
        first, g0 = run_instance(inst)
        again, g1 = run_instance(inst, os_)
        out.append({"checker": inst["checker"], "oversample": inst["oversample"], "replay_oversample": os_,
                    "grid": list(g0.sizes), "replay_grid": list(g1.sizes),
                    "original": _result_dict(first), "replay": _result_dict(again),
                    "verdict": "vanishes" if again.holds else "persists"})
    return out


# ---------------------------------------------------------------------------
# sweeps

_RULE = re.compile(
    r"^\s*(?P<c>[0-9.eE+-]+)\s*/\s*\(?\s*N\s*(?:\*\s*log2\s*\(\s*N\s*\)\s*(?:\^\s*(?P<k>[0-9.eE+-]+))?)?\s*\)?\s*$")


@dataclass(frozen=True)
class BRule:
    """Budget schedule ``b(N) = c / (N log2(N)^k)`` (``log2`` floored at 1)."""

    c: float
    k: float

    @classmethod
    def parse(cls, text: str) -> "BRule":
        m = _RULE.match(text)
        if not m:
            raise ValueError(f"cannot parse budget rule {text!r}; expected c/(N*log2(N)^k)")
        k = m.group("k")
        if k is None:
            k = "1" if "log2" in text else "0"
        return cls(float(m.group("c")), float(k))

    def __call__(self, N: int) -> float:
        return self.c / (N * max(math.log2(N), 1.0) ** self.k)

    def __str__(self):
        return f"{self.c:g}/(N*log2(N)^{self.k:g})"


def kernel_norm_row(N: int, d: int, oversample: float) -> dict:
    V = hyperbolic_vp_separable(N, d)
    grid = Grid.for_degree(V.max_degree(), oversample)
    l1 = lp_norm(separable_reduce_on_grid(V, grid, (1.0,)), 1.0)
    linf = sup_norm(V)
    logs = math.log2(N) ** (d - 1) if N > 1 else 1.0
    return {"N": N, "dim": d, "L1": l1, "Linf": linf, "L1_over_log": l1 / logs,
            "Linf_over_N_log": linf / (N * logs), "grid": grid.sizes, "tol": tolerance(1.0)}


def remez_reference_bound(N: int, d: int, b: float, grid: Grid) -> tuple:
    """Bound on ``R_inf`` for ``T(N)`` at budget ``b`` and its source, or ``(inf, "none")``.

    d = 1: the classical univariate constant with ``|B| = 2 pi b``.
    d >= 2: ``2 ||V_N||_1`` when ``b <= 1 / (2 ||V_N||_inf)``.
    """
    if d == 1:
        meas = 2 * math.pi * b
        if meas < math.pi / 2:
            return remez_bound_reference(N, meas, "small"), "univariate_small"
        if meas < 2 * math.pi:
            return remez_bound_reference(N, meas, "large"), "univariate_large"
        return INF, "none"
    V = hyperbolic_vp_separable(N, d)
    if b <= 1.0 / (2 * sup_norm(V)):
        return 2 * lp_norm(separable_reduce_on_grid(V, grid, (1.0,)), 1.0), "theorem_3_1"
    return INF, "none"


def remez_scan(N_list, d: int, budgets, p, seed: int, draws: int, oversample: float,
               search_iters: int = 0):
    """Largest observed ``R_p`` over seeded draws in ``T(N)`` for each ``(N, budget)``.

    ``budgets`` holds numbers or ``BRule`` schedules.  Returns ``(rows, summary)``.
    """
    p = parse_exponent(p)
    rows = []
    for label, sched in budgets:
        for N in N_list:
            b = sched(N) if isinstance(sched, BRule) else float(sched)
            grid = Grid.for_degree((N,) * d, oversample)
            cross = hyperbolic_cross(N, d)
            best = 1.0
            for draw in range(draws):
                f = random_trigpoly(cross, np.random.default_rng([seed, draw]))
                best = max(best, remez_ratio(evaluate_on_grid(f, grid, stream=False), b, p).ratio)
            if search_iters and math.isinf(p):
                _, found, _ = remez_lower_search(N, d, b, search_iters, seed, oversample)
                best = max(best, found)
            bound, source = remez_reference_bound(N, d, b, grid) if math.isinf(p) else (INF, "none")
            rows.append({"N": N, "b": b, "p": exponent_text(p), "R": best, "bound": bound,
                         "slack": bound - best, "grid": grid.sizes, "seed": seed,
                         "tol": tolerance(p), "schedule": label, "bound_source": source})
    return rows, _schedule_summary(rows, budgets)


def _schedule_summary(rows, budgets) -> dict:
    per = {}
    for label, sched in budgets:
        Rs = [r["R"] for r in rows if r["schedule"] == label]
        growth = max(Rs) / min(Rs)
        per[label] = {"R_min": min(Rs), "R_max": max(Rs), "growth": growth,
                      "bounded": growth <= BOUNDED_GROWTH,
                      "k": sched.k if isinstance(sched, BRule) else None}
    ranked = sorted((v["k"], lab) for lab, v in per.items() if v["k"] is not None and v["bounded"])
    return {"schedules": per, "bounded_growth_threshold": BOUNDED_GROWTH,
            "smallest_bounded_k": ranked[0][0] if ranked else None,
            "smallest_bounded_schedule": ranked[0][1] if ranked else None}


def nikolskii_scan(N_list, d: int, p, q, seed: int, draws: int, oversample: float):
    p, q = parse_exponent(p), parse_exponent(q)
    rows = []
    for N in N_list:
        row, _ = nikolskii_sup_estimate(N, d, p, q, draws=draws, seed=seed, oversample=oversample)
        rows.append({"N": N, "ratio": row.ratio, "rate": row.rate, "ratio/rate": row.normalized,
                     "witness": row.witness, "grid": Grid.for_degree((N,) * d, oversample).sizes,
                     "tol": tolerance(p, q)})
    summary = {"beta": 1 / q - 1 / p,
               "normalized_min": min(r["ratio/rate"] for r in rows),
               "normalized_max": max(r["ratio/rate"] for r in rows)}
    if len(rows) >= 2:
        slope, icpt, rms = slope_fit([r["N"] for r in rows], [r["ratio"] for r in rows])
        summary.update(slope=slope, intercept=icpt, residual_rms=rms)
    return rows, summary


def random_gridset(rng, grid: Grid, m: int) -> GridSet:
    """Cells with ``|B| < 1/m``: a box or a scattered set, chosen at random."""
    kmax = -(-grid.total // m) - 1
    if kmax < 1:
        return GridSet(grid, [])
    k = int(rng.integers(1, kmax + 1))
    if rng.random() < 0.5:
        return GridSet(grid, rng.choice(grid.total, size=k, replace=False))
    # contiguous run in flat order, wrapping
    start = int(rng.integers(grid.total))
    return GridSet(grid, (start + np.arange(k)) % grid.total)


def theorem_2_1_instance(rng, n: int | None = None, d: int | None = None, X: PointSet | None = None):
    """Random ``(f, X, B)`` with ``f`` in ``T(Q_n)`` and ``|B| < 1/m``."""
    d = int(d if d is not None else rng.integers(1, 3))
    n = int(n if n is not None else rng.integers(1, 5))
    if X is None:
        if rng.random() < 0.5:
            X = candidate_point_set(n, d)
        else:
            m = int(rng.integers(1, 41))
            pts = np.unique(rng.uniform(0, 2 * math.pi, size=(m, d)), axis=0)
            X = PointSet(d, pts)
    per_axis = 16 * X.m if d == 1 else math.sqrt(16 * X.m)
    G = max(4, 1 << math.ceil(math.log2(per_axis)))
    grid = Grid.cube(G, d)
    B = random_gridset(rng, grid, X.m)
    f = random_trigpoly(step_hyperbolic(n, d), rng)
    return f, X, B


def discretize_verify(n: int, d: int, draws: int, seed: int, shifts_per_axis: int = 8):
    """Discretization to Remez pipeline on the candidate set: one row per seeded ``(f, B)``."""
    X = candidate_point_set(n, d)
    rows, bad = [], []
    for draw in range(draws):
        rng = np.random.default_rng([seed, draw])
        f, _, B = theorem_2_1_instance(rng, n, d, X)
        rep = discretization_to_remez(f, X, B, shifts_per_axis=shifts_per_axis)
        rate = float(max(n, 1) ** (d - 1))
        rows.append({"draw": draw, "n": n, "dim": d, "m": X.m, "cells_B": B.count, "measure_B": B.measure,
                     "y_star": " ".join(f"{v:.12g}" for v in rep.y_star), "D": rep.D,
                     "D/rate": rep.D / rate, "sup": rep.sup, "rhs": rep.rhs, "holds": rep.holds,
                     "grid": rep.grid, "tol": tolerance(INF)})
        if not rep.holds:
            bad.append({"checker": "theorem_2_1", "draw": draw, "seed": seed, "result": rep.as_dict()})
    Ds = [r["D"] for r in rows]
    return rows, {"m": X.m, "D_max": max(Ds), "D_min": min(Ds), "rate": float(max(n, 1) ** (d - 1))}, bad
