"""Command-line driver for the seeded experiment sweeps.

Every command writes a CSV table (header row first) and a JSON sidecar next
to it with the resolved configuration and measured summary constants.
Exit status: 0 ok, 2 configuration error, 3 checker violation, 4 resource
limit.  Violating instances are written to ``<out>.violations.json`` for
``replay``.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

from hcremez._config import MEM_ENV, ResourceLimitError, parse_bytes
from hcremez.discretize import ShiftNotFoundError
from hcremez.experiments import (
    CHECKERS,
    FUZZ_CHECKERS,
    REPLAY_FACTOR,
    BRule,
    discretize_verify,
    exponent_text,
    fuzz,
    kernel_norm_row,
    nikolskii_scan,
    parse_exponent,
    remez_scan,
    replay,
)
from hcremez.kernels import KernelConstructionError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VIOLATION = 3
EXIT_RESOURCE = 4

COMMANDS = ("remez-scan", "nikolskii-scan", "riesz-verify", "discretize-verify",
            "implication-fuzz", "kernel-norms", "replay")


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


# ---------------------------------------------------------------------------
# configuration

def _int_list(text) -> list:
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    items = [t for t in str(text).replace(" ", "").split(",") if t]
    return [int(v) for v in items]


def _float_list(text) -> list:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(t) for t in str(text).replace(" ", "").split(",") if t]


def _exp_list(text) -> list:
    if isinstance(text, (list, tuple)):
        return [parse_exponent(v) for v in text]
    return [parse_exponent(t) for t in str(text).replace(" ", "").split(",") if t]


@dataclass
class ExperimentConfig:
    """Resolved settings for one command; lists are never empty once validated."""

    command: str
    dim: int = 2
    N_list: list = field(default_factory=list)
    n_list: list = field(default_factory=list)
    p: list = field(default_factory=list)
    q: list = field(default_factory=list)
    b_list: list = field(default_factory=list)
    b_rules: list = field(default_factory=list)
    seed: int = 0
    draws: int = 8
    oversample: float = 4.0
    mem_budget: str = ""
    out: str = ""
    a: int = 6
    search_iters: int = 0
    shifts: int = 8
    checkers: list = field(default_factory=list)
    dims: list = field(default_factory=list)
    source: str = ""
    factor: int = REPLAY_FACTOR

    def echo(self) -> dict:
        d = asdict(self)
        d["p"] = [exponent_text(v) for v in self.p]
        d["q"] = [exponent_text(v) for v in self.q]
        d["b_rules"] = [str(r) for r in self.b_rules]
        return d


_DEFAULTS = {
    "remez-scan": {"dim": 1, "N_list": [4, 8, 16, 32], "p": [math.inf], "b_list": [0.01], "draws": 8},
    "nikolskii-scan": {"dim": 1, "N_list": [8, 16, 32, 64], "p": [math.inf], "q": [1.0], "draws": 4},
    "riesz-verify": {"n_list": [12]},
    "discretize-verify": {"dim": 2, "n_list": [4], "draws": 10},
    "implication-fuzz": {"draws": 100, "checkers": list(FUZZ_CHECKERS), "dims": [1, 2]},
    "kernel-norms": {"dim": 2, "N_list": [8, 16, 32, 64], "oversample": 2.0},
    "replay": {},
}

# config-file key (dashes or underscores) -> (field, parser)
_KEYS = {
    "command": ("command", str),
    "dim": ("dim", int),
    "dims": ("dims", _int_list),
    "n_list": ("N_list", _int_list),
    "N": ("N_list", _int_list),
    "N_list": ("N_list", _int_list),
    "n": ("n_list", _int_list),
    "p": ("p", _exp_list),
    "q": ("q", _exp_list),
    "b": ("b_list", _float_list),
    "b_list": ("b_list", _float_list),
    "b_rule": ("b_rules", lambda t: [BRule.parse(r) for r in str(t).split(";") if r.strip()]),
    "seed": ("seed", int),
    "draws": ("draws", int),
    "oversample": ("oversample", float),
    "mem_budget": ("mem_budget", str),
    "out": ("out", str),
    "a": ("a", int),
    "search_iters": ("search_iters", int),
    "shifts": ("shifts", int),
    "checkers": ("checkers", lambda t: [c for c in str(t).replace(" ", "").split(",") if c]),
    "factor": ("factor", int),
    "file": ("source", str),
}


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        if not eq:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key = key.strip().replace("-", "_")
        if key not in _KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value.strip()
    return out


def resolve_config(command: str, cli: dict, file_values: dict) -> ExperimentConfig:
    """Merge built-in defaults, config file and command-line values (in that order)."""
    cfg = ExperimentConfig(command)
    for name, value in _DEFAULTS.get(command, {}).items():
        setattr(cfg, name, value)
    try:
        for key, raw in file_values.items():
            name, conv = _KEYS[key]
            if name != "command":
                setattr(cfg, name, conv(raw))
        for key, raw in cli.items():
            if raw is None or key not in _KEYS:
                continue
            name, conv = _KEYS[key]
            setattr(cfg, name, conv(raw) if isinstance(raw, str) else raw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    validate(cfg)
    return cfg


def validate(cfg: ExperimentConfig):
    c = cfg.command
    need = {
        "remez-scan": ("N_list", "p"),
        "nikolskii-scan": ("N_list", "p", "q"),
        "riesz-verify": ("n_list",),
        "discretize-verify": ("n_list",),
        "implication-fuzz": ("checkers", "dims"),
        "kernel-norms": ("N_list",),
    }.get(c, ())
    for name in need:
        if not getattr(cfg, name):
            raise ConfigError(f"{c}: {name} must be nonempty")
    if c == "remez-scan" and not (cfg.b_list or cfg.b_rules):
        raise ConfigError("remez-scan: need at least one budget or budget rule")
    if any(N < 1 for N in cfg.N_list) or any(n < 0 for n in cfg.n_list):
        raise ConfigError("N values must be >= 1 and n values >= 0")
    if c in ("remez-scan", "nikolskii-scan", "kernel-norms", "discretize-verify") and cfg.dim not in (1, 2, 3):
        raise ConfigError("dim must be 1, 2 or 3")
    if c == "discretize-verify" and cfg.dim not in (1, 2):
        raise ConfigError("discretize-verify supports dim 1 or 2")
    if cfg.draws < 1 and c != "kernel-norms":
        raise ConfigError("draws must be >= 1")
    if cfg.oversample < 1:
        raise ConfigError("oversample must be >= 1")
    if any(not 0 <= b < 1 for b in cfg.b_list):
        raise ConfigError("budgets must lie in [0, 1)")
    if c == "nikolskii-scan" and any(not q < p for p in cfg.p for q in cfg.q):
        raise ConfigError("nikolskii-scan needs q < p")
    unknown = [k for k in cfg.checkers if k not in CHECKERS]
    if unknown:
        raise ConfigError(f"unknown checkers {unknown}")
    if c == "riesz-verify" and any(n < 2 * cfg.a for n in cfg.n_list):
        raise ConfigError(f"riesz-verify needs n >= 2a = {2 * cfg.a}")
    if c == "replay" and not cfg.source:
        raise ConfigError("replay needs a violation file")
    if cfg.mem_budget:
        try:
            parse_bytes(cfg.mem_budget)
        except ValueError as exc:
            raise ConfigError(f"bad memory budget {cfg.mem_budget!r}") from exc


# ---------------------------------------------------------------------------
# output

def _cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (tuple, list)):
        return "x".join(str(int(x)) for x in v)
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".12g")
    return str(v)


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if hasattr(v, "item"):
        return _jsonable(v.item())
    return v


def write_json(path, obj):
    Path(path).write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def write_table(path, rows, columns=None):
    columns = columns or (list(rows[0].keys()) if rows else [])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_cell(r.get(c, "")) for c in columns])


def sidecar_path(out) -> Path:
    return Path(out).with_suffix(".json")


def violations_path(out) -> Path:
    return Path(out).with_suffix(".violations.json")


# ---------------------------------------------------------------------------
# commands

def cmd_remez_scan(cfg):
    budgets = [(f"b={b:g}", b) for b in cfg.b_list] + [(str(r), r) for r in cfg.b_rules]
    rows, summary, bad = [], {}, []
    for p in cfg.p:
        r, s = remez_scan(cfg.N_list, cfg.dim, budgets, p, cfg.seed, cfg.draws, cfg.oversample,
                          cfg.search_iters)
        rows += r
        summary[exponent_text(p)] = s
    for r in rows:
        if r["R"] > r["bound"] * (1 + r["tol"]):
            bad.append({"checker": "remez_scan", "result": r})
    cols = ["N", "b", "p", "R", "bound", "slack", "grid", "seed", "tol", "schedule", "bound_source"]
    return rows, cols, summary, bad


def cmd_nikolskii_scan(cfg):
    rows, summary = [], {}
    for p in cfg.p:
        for q in cfg.q:
            r, s = nikolskii_scan(cfg.N_list, cfg.dim, p, q, cfg.seed, cfg.draws, cfg.oversample)
            for row in r:
                row["p"], row["q"] = exponent_text(p), exponent_text(q)
            rows += r
            summary[f"p={exponent_text(p)},q={exponent_text(q)}"] = s
    cols = ["N", "ratio", "rate", "ratio/rate", "witness", "p", "q", "grid", "tol"]
    return rows, cols, summary, []


def cmd_riesz_verify(cfg):
    from hcremez.riesz2d import (
        MAX_KERNEL_LAYER,
        RieszConfig,
        check_imaginary_bound,
        check_product_bound,
        modified_layer_kernel,
        riesz_decompose,
        riesz_product_separable,
    )

    rows, checks, bad = [], [], []
    too_big = [n for n in cfg.n_list if n > MAX_KERNEL_LAYER]
    if too_big:
        raise ResourceLimitError(f"layer kernel is limited to n <= {MAX_KERNEL_LAYER}, got {too_big}")
    for n in cfg.n_list:
        for b in range(cfg.a):
            rc = RieszConfig.build(n, cfg.a, b)
            if rc.Ncount == 0:
                continue
            riesz_decompose(riesz_product_separable(rc), rc)
            for res in (check_product_bound(rc), check_imaginary_bound(rc)):
                checks.append(res.as_dict())
                if not res.holds:
                    bad.append({"checker": res.name, "result": res.as_dict()})
        _, T, stats = modified_layer_kernel(n, cfg.a, oversample=2)
        row = stats.row()
        row.update(grid=stats.grid, correction_terms=stats.correction_terms, tol=1e-9)
        rows.append(row)
    cols = ["n", "L1_raw", "Linf_raw", "L1_corrected", "Linf_corrected", "ratio_to_n",
            "ratio_to_sqrt_n_2n", "correction_terms", "grid", "tol"]
    ratios = [r["ratio_to_n"] for r in rows]
    summary = {"a": cfg.a, "checks": checks, "ratio_to_n_min": min(ratios), "ratio_to_n_max": max(ratios),
               "ratio_to_n_spread": max(ratios) / min(ratios)}
    return rows, cols, summary, bad


def cmd_discretize_verify(cfg):
    rows, summary, bad = [], {}, []
    for n in cfg.n_list:
        r, s, v = discretize_verify(n, cfg.dim, cfg.draws, cfg.seed, cfg.shifts)
        rows += r
        summary[f"n={n}"] = s
        bad += v
    cols = ["draw", "n", "dim", "m", "cells_B", "measure_B", "y_star", "D", "D/rate", "sup", "rhs",
            "holds", "grid", "tol"]
    return rows, cols, summary, bad


def cmd_implication_fuzz(cfg):
    rows, bad = fuzz(cfg.draws, cfg.seed, tuple(cfg.checkers), tuple(cfg.dims))
    summary = {name: {"draws": sum(1 for r in rows if r["checker"] == name),
                      "violations": sum(1 for r in rows if r["checker"] == name and not r["holds"])}
               for name in cfg.checkers}
    for r in rows:
        for k in ("p", "q"):
            if r[k] != "":
                r[k] = exponent_text(r[k])
    cols = ["draw", "checker", "dim", "N", "p", "q", "b", "lhs", "rhs", "slack", "holds", "grid", "tol"]
    return rows, cols, summary, bad


def cmd_kernel_norms(cfg):
    rows = [kernel_norm_row(N, cfg.dim, cfg.oversample) for N in cfg.N_list]
    cols = ["N", "dim", "L1", "Linf", "L1_over_log", "Linf_over_N_log", "grid", "tol"]
    summary = {}
    for key in ("L1_over_log", "Linf_over_N_log"):
        vals = [r[key] for r in rows if r["N"] > 1]
        if vals:
            summary[key] = {"min": min(vals), "max": max(vals), "spread": max(vals) / min(vals)}
    return rows, cols, summary, []


def cmd_replay(cfg):
    try:
        data = json.loads(Path(cfg.source).read_text())
        entries = data["violations"] if isinstance(data, dict) else data
        entries = [e for e in entries if "instance" in e]
        for e in entries:
            _ = e["instance"]["checker"], e["instance"]["f"], e["instance"]["dim"]
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"malformed violation file {cfg.source}: {exc}") from exc
    if not entries:
        raise ConfigError(f"no replayable instances in {cfg.source}")
    for e in entries:
        if e["instance"]["checker"] not in CHECKERS:
            raise ConfigError(f"unknown checker {e['instance']['checker']!r} in {cfg.source}")
    report = replay(entries, cfg.factor)
    rows = [{"index": i, "checker": r["checker"], "oversample": float(r["oversample"]),
             "replay_oversample": float(r["replay_oversample"]), "lhs": r["original"]["lhs"],
             "rhs": r["original"]["rhs"], "replay_lhs": r["replay"]["lhs"], "replay_rhs": r["replay"]["rhs"],
             "verdict": r["verdict"], "grid": r["grid"], "replay_grid": r["replay_grid"],
             "tol": r["replay"]["tol"]}
            for i, r in enumerate(report)]
    persist = [r for r in report if r["verdict"] == "persists"]
    summary = {"entries": len(report), "persists": len(persist), "vanishes": len(report) - len(persist)}
    return rows, list(rows[0].keys()), summary, [{"checker": r["checker"], "result": r} for r in persist]


HANDLERS = {
    "remez-scan": cmd_remez_scan,
    "nikolskii-scan": cmd_nikolskii_scan,
    "riesz-verify": cmd_riesz_verify,
    "discretize-verify": cmd_discretize_verify,
    "implication-fuzz": cmd_implication_fuzz,
    "kernel-norms": cmd_kernel_norms,
    "replay": cmd_replay,
}


def run(cfg: ExperimentConfig) -> int:
    """Execute one command and write its artifacts; returns the exit status."""
    out = cfg.out or f"{cfg.command}.csv"
    if cfg.mem_budget and not os.environ.get(MEM_ENV):
        os.environ[MEM_ENV] = cfg.mem_budget
    rows, cols, summary, bad = HANDLERS[cfg.command](cfg)
    write_table(out, rows, cols)
    side = {"command": cfg.command, "config": cfg.echo(), "rows": len(rows), "summary": summary,
            "violations": len(bad)}
    write_json(sidecar_path(out), side)
    vp = violations_path(out)
    if bad:
        write_json(vp, {"command": cfg.command, "violations": bad})
        return EXIT_VIOLATION
    if vp.exists():
        vp.unlink()
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing

def _dump_indexset(spec: str) -> str:
    from hcremez.indexsets import dyadic_block, hyperbolic_cross, hyperbolic_layer, step_hyperbolic

    kind, _, rest = spec.partition(":")
    params = dict(item.split("=", 1) for item in rest.split(",") if item)
    try:
        if kind == "cross":
            s = hyperbolic_cross(int(params["N"]), int(params["d"]))
        elif kind == "step":
            s = step_hyperbolic(int(params["n"]), int(params["d"]))
        elif kind == "layer":
            s = hyperbolic_layer(int(params["n"]), int(params["d"]))
        elif kind == "block":
            s = dyadic_block(tuple(int(v) for v in params["s"].split("x")))
        else:
            raise ConfigError(f"unknown index set kind {kind!r}")
    except KeyError as exc:
        raise ConfigError(f"index set {spec!r} is missing parameter {exc}") from exc
    return s.to_text()


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value configuration file")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="CSV output path (JSON sidecar written alongside)")
    common.add_argument("--oversample", type=float)
    common.add_argument("--mem-budget", dest="mem_budget", help="bytes, or with K/M/G suffix")
    common.add_argument("--draws", type=int)

    ap = argparse.ArgumentParser(prog="hcremez", description=__doc__.split("\n\n")[0])
    ap.add_argument("--dump-indexset", metavar="SPEC",
                    help="print an index set (cross:N=16,d=2 | step:n=4,d=2 | layer:n=4,d=2 | block:s=3x4) and exit")
    sub = ap.add_subparsers(dest="command")

    p = sub.add_parser("remez-scan", parents=[common], help="largest observed Remez ratios")
    p.add_argument("--dim", type=int)
    p.add_argument("--N-list", "--N", dest="N_list")
    p.add_argument("--b-list", "--b", dest="b_list")
    p.add_argument("--b-rule", dest="b_rule", action="append",
                   help="budget schedule c/(N*log2(N)^k); repeat to sweep schedules")
    p.add_argument("--p")
    p.add_argument("--search-iters", dest="search_iters", type=int)

    p = sub.add_parser("nikolskii-scan", parents=[common], help="Nikol'skii ratios against their rate")
    p.add_argument("--dim", type=int)
    p.add_argument("--p")
    p.add_argument("--q")
    p.add_argument("--N-list", "--N", dest="N_list")

    p = sub.add_parser("riesz-verify", parents=[common], help="Riesz product checks and layer kernel norms")
    p.add_argument("--n")
    p.add_argument("--a", type=int)

    p = sub.add_parser("discretize-verify", parents=[common], help="discretization to Remez pipeline")
    p.add_argument("--dim", type=int)
    p.add_argument("--n")
    p.add_argument("--shifts", type=int, help="shift grid points per axis for the uniform constant")

    p = sub.add_parser("implication-fuzz", parents=[common], help="seeded fuzz of the implication checkers")
    p.add_argument("--checkers")
    p.add_argument("--dims")

    p = sub.add_parser("kernel-norms", parents=[common], help="norms of the hyperbolic kernel V_N")
    p.add_argument("--dim", type=int)
    p.add_argument("--N", "--N-list", dest="N_list")

    p = sub.add_parser("replay", parents=[common], help="rerun recorded violations at higher oversample")
    p.add_argument("file")
    p.add_argument("--factor", type=int)
    return ap


def _cli_values(ns: argparse.Namespace) -> dict:
    vals = dict(vars(ns))
    out = {}
    for key, v in vals.items():
        if key in ("config", "command", "dump_indexset"):
            continue
        if key == "b_rule" and v is not None:
            v = ";".join(v)
        out[key] = v
    return out


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        # a config file may name the command
        pre = argparse.ArgumentParser(add_help=False)
        pre.add_argument("--config")
        known, _ = pre.parse_known_args(argv)
        file_values = read_config_file(known.config) if known.config else {}
        if not any(a in COMMANDS for a in argv) and "command" in file_values and "--dump-indexset" not in argv:
            argv = [file_values["command"]] + argv
        ns = parser.parse_args(argv)
        if ns.dump_indexset:
            sys.stdout.write(_dump_indexset(ns.dump_indexset))
            return EXIT_OK
        if not ns.command:
            parser.print_usage(sys.stderr)
            raise ConfigError("no command given")
        file_values.pop("command", None)
        cfg = resolve_config(ns.command, _cli_values(ns), file_values)
        return run(cfg)
    except ConfigError as exc:
        print(f"hcremez: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceLimitError as exc:
        print(f"hcremez: resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (AssertionError, KernelConstructionError, ShiftNotFoundError) as exc:
        print(f"hcremez: violation: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    except ValueError as exc:
        print(f"hcremez: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
