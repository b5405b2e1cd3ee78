"""Command-line runner for the verification sweeps and the Landau studies.

Usage::

    specgap verify-xi --seed 7 --trials 10 --dim 6 --out xi.csv
    specgap landau-trend --params '{"preset": "bump", "n": 1}' --out trend.csv
    specgap bank --params '{"kind": "split", "count": 20}' --out bank.json
    specgap --config run.json

Exit status: 0 when every asserted relation holds, 2 when one fails, 1 on a
configuration or I/O error (no output file is written in that case).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigInvalid, InconsistentIndex, SpecGapError
from .instances import KINDS, generate_instance_bank, load_instance_bank
from .sweeps import DEFAULT_RELATION, RELATION_KIND, RELATIONS, SKIP_ERRORS

LANDAU_COMMANDS = ("landau-trend", "landau-hs")
COMMANDS = tuple(RELATIONS) + LANDAU_COMMANDS + ("bank",)
FORMATS = ("csv", "json")

ROW_FIELDS = ["trial_id", "seed", "instance", "relation", "lhs", "rhs_lo", "rhs_hi", "pass",
              "status", "wall_time_ms", "pass_count", "fail_count", "skip_count"]

LANDAU_TREND_DEFAULTS = {"preset": "bump", "params": [], "alpha": 1.0, "beta": 1.0, "B": 1.0,
                         "n": 0, "a": 0.5, "t_grid": [2, 4, 6, 8], "node_cap": 4096,
                         "check_refinement": True, "tol": 0.2}
LANDAU_HS_DEFAULTS = {"preset": "bump", "params": [], "alpha": 1.0, "beta": 1.0, "B": 1.0,
                      "n": 0, "m": None, "t_grid": [2, 4, 8], "node_cap": 4096, "trace_tol": 0.01}
BANK_DEFAULTS = {"kind": "gapped", "count": 10}


@dataclass
class ExperimentConfig:
    command: str
    seed: int = 0
    trials: int = 10
    dim: int = 6
    params: dict = field(default_factory=dict)
    out_path: str | None = None
    format: str = "csv"

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigInvalid(f"unknown command {self.command!r}; expected one of {COMMANDS}")
        if self.format not in FORMATS:
            raise ConfigInvalid(f"format must be one of {FORMATS}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ConfigInvalid("seed must be a nonnegative integer")
        if not isinstance(self.trials, int) or self.trials < 1:
            raise ConfigInvalid("trials must be a positive integer")
        if not isinstance(self.params, dict):
            raise ConfigInvalid("params must be a JSON object")
        if self.command in RELATIONS:
            if not isinstance(self.dim, int) or self.dim < 2:
                raise ConfigInvalid("dim must be an integer >= 2 for matrix commands")
            unknown = set(self.params) - {"relation", "bank"}
            if unknown:
                raise ConfigInvalid(f"unknown params {sorted(unknown)} for {self.command}")
            rel = self.params.get("relation", DEFAULT_RELATION[self.command])
            if rel not in RELATIONS[self.command]:
                raise ConfigInvalid(f"unknown relation {rel!r}; expected one of "
                                    f"{sorted(RELATIONS[self.command])}")
        else:
            defaults = {"landau-trend": LANDAU_TREND_DEFAULTS, "landau-hs": LANDAU_HS_DEFAULTS,
                        "bank": BANK_DEFAULTS}[self.command]
            unknown = set(self.params) - set(defaults)
            if unknown:
                raise ConfigInvalid(f"unknown params {sorted(unknown)} for {self.command}")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigInvalid(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="specgap", description="Spectral-gap verification sweeps and Landau-level studies.")
    p.add_argument("command", nargs="?", help=f"one of {', '.join(COMMANDS)}")
    p.add_argument("--config", help="JSON file with command, seed, trials, dim, params, out_path, format")
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--dim", type=int)
    p.add_argument("--params", help="command-specific JSON object")
    p.add_argument("--out", dest="out_path")
    p.add_argument("--format", choices=FORMATS)
    return p


def load_config(argv=None) -> ExperimentConfig:
    args = build_parser().parse_args(argv)
    data: dict = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigInvalid(f"cannot read config: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigInvalid("config must be a JSON object")
        if "out" in data and "out_path" not in data:
            data["out_path"] = data.pop("out")
        unknown = set(data) - {"command", "seed", "trials", "dim", "params", "out_path", "format"}
        if unknown:
            raise ConfigInvalid(f"unknown config keys {sorted(unknown)}")
    if args.params is not None:
        try:
            data["params"] = json.loads(args.params)
        except json.JSONDecodeError as exc:
            raise ConfigInvalid(f"--params is not valid JSON: {exc}") from exc
    for key in ("command", "seed", "trials", "dim", "out_path", "format"):
        val = getattr(args, key)
        if val is not None:
            data[key] = val
    if "command" not in data:
        raise ConfigInvalid("no command given")
    if "format" not in data and str(data.get("out_path", "")).endswith(".json"):
        data["format"] = "json"
    cfg = ExperimentConfig(**data)
    cfg.validate()
    return cfg


def _workers() -> int:
    env = os.environ.get("SPECGAP_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConfigInvalid("SPECGAP_THREADS must be an integer") from None
        return max(n, 1)
    return os.cpu_count() or 1


# -- verification sweeps ---------------------------------------------------------

def _trial(cfg: ExperimentConfig, relation: str, trial_id: int, inst=None) -> dict:
    check = RELATIONS[cfg.command][relation]
    rng = np.random.default_rng([cfg.seed, trial_id])
    row = {"trial_id": trial_id, "seed": cfg.seed, "relation": relation}
    start = time.perf_counter()
    try:
        out = check(rng, cfg.dim, trial_id, inst)
        row.update(instance=out.instance, lhs=out.lhs, rhs_lo=out.lower, rhs_hi=out.upper,
                   status="pass" if out.passed else "fail")
    except SKIP_ERRORS as exc:
        row.update(instance="", lhs=None, rhs_lo=None, rhs_hi=None, status="skip",
                   note=type(exc).__name__)
    except InconsistentIndex:
        row.update(instance="", lhs=None, rhs_lo=None, rhs_hi=None, status="fail")
    row["pass"] = row["status"] == "pass"
    row["wall_time_ms"] = round(1000.0 * (time.perf_counter() - start), 3)
    row.pop("note", None)
    return row


def run_sweep(cfg: ExperimentConfig) -> tuple[list[dict], bool]:
    relation = cfg.params.get("relation", DEFAULT_RELATION[cfg.command])
    insts = None
    trials = cfg.trials
    if "bank" in cfg.params:
        kind = RELATION_KIND[cfg.command][relation]
        bank_path = cfg.params["bank"]
        insts = load_instance_bank(bank_path)
        with open(bank_path) as fh:
            bank_kind = json.load(fh)["kind"]
        if kind is None or bank_kind != kind:
            raise ConfigInvalid(f"relation {relation!r} cannot use a {bank_kind!r} bank")
        trials = len(insts)
        if trials == 0:
            raise ConfigInvalid("instance bank is empty")

    def job(i):
        return _trial(cfg, relation, i, None if insts is None else insts[i])

    workers = min(_workers(), trials)
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            rows = list(ex.map(job, range(trials)))
    else:
        rows = [job(i) for i in range(trials)]
    counts = {s: sum(r["status"] == s for r in rows) for s in ("pass", "fail", "skip")}
    rows.append({"trial_id": "summary", "seed": cfg.seed, "instance": "", "relation": relation,
                 "status": "summary", "pass": counts["fail"] == 0,
                 "wall_time_ms": round(sum(r["wall_time_ms"] for r in rows), 3),
                 "pass_count": counts["pass"], "fail_count": counts["fail"],
                 "skip_count": counts["skip"]})
    return rows, counts["fail"] == 0


# -- Landau studies ---------------------------------------------------------------

def _landau_objects(params):
    from .landau import LandauConfig, ScaledPotential

    try:
        lc = LandauConfig(float(params["B"]), int(params["n"]))
        pot = ScaledPotential(params["preset"], tuple(params["params"]), float(params["alpha"]),
                              float(params["beta"]))
    except (TypeError, ValueError, SpecGapError) as exc:
        raise ConfigInvalid(f"invalid Landau parameters: {exc}") from exc
    return lc, pot


def run_landau_trend(cfg: ExperimentConfig) -> tuple[list[dict], bool]:
    from .landau import level_counting_trend

    params = {**LANDAU_TREND_DEFAULTS, **cfg.params}
    lc, pot = _landau_objects(params)
    a = float(params["a"])
    if not a > 0:
        raise ConfigInvalid("a must be positive")
    rep = level_counting_trend(lc, pot, [float(t) for t in params["t_grid"]], a,
                               int(params["node_cap"]), bool(params["check_refinement"]),
                               min(_workers(), len(params["t_grid"])))
    rows = rep.rows()
    return rows, bool(rows) and rows[-1]["rel_dev"] <= float(params["tol"])


def run_landau_hs(cfg: ExperimentConfig) -> tuple[list[dict], bool]:
    from .landau import commutator_hs_norm, cross_term_hs, default_grid, trace_phi_check

    params = {**LANDAU_HS_DEFAULTS, **cfg.params}
    lc, pot = _landau_objects(params)
    m = lc.n + 1 if params["m"] is None else int(params["m"])
    rows = []
    for t in [float(t) for t in params["t_grid"]]:
        pt = pot.at(t)
        grid = default_grid(lc, pt, int(params["node_cap"]))
        comm = commutator_hs_norm(lc, pt, grid)
        cross = cross_term_hs(lc, m, pt, grid)
        lhs, rhs, _ = trace_phi_check(lc, pt, "identity", grid=grid)
        scale = t ** pot.p
        rows.append({"t": t, "commutator_hs": comm, "cross_hs": cross,
                     "scaled_commutator": comm / scale, "scaled_cross": cross / scale,
                     "trace_lhs": lhs, "trace_rhs": rhs,
                     "trace_rel_err": abs(lhs - rhs) / abs(rhs) if rhs else abs(lhs),
                     "grid_nodes": grid.size})
    sc = [r["scaled_commutator"] for r in rows]
    ok = (all(b < a for a, b in zip(sc, sc[1:]))
          and all(r["cross_hs"] <= r["commutator_hs"] * (1 + 1e-6) for r in rows)
          and all(r["trace_rel_err"] <= float(params["trace_tol"]) for r in rows))
    return rows, ok


def run_bank(cfg: ExperimentConfig) -> tuple[dict, bool]:
    params = {**BANK_DEFAULTS, **cfg.params}
    if params["kind"] not in KINDS:
        raise ConfigInvalid(f"kind must be one of {KINDS}")
    if not isinstance(params["count"], int) or params["count"] < 0:
        raise ConfigInvalid("count must be a nonnegative integer")
    return generate_instance_bank(cfg.seed, params["count"], cfg.dim, params["kind"]), True


# -- output -------------------------------------------------------------------------

def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return f"{v:.12g}"
    return v


def _json_value(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return None if not math.isfinite(v) else v
    if isinstance(v, np.integer):
        return int(v)
    return v


def render(rows, fmt: str) -> str:
    if isinstance(rows, dict):
        return json.dumps(rows, sort_keys=True) + "\n"
    if fmt == "json":
        return json.dumps([{k: _json_value(v) for k, v in r.items()} for r in rows], indent=1) + "\n"
    fields = ROW_FIELDS if rows and "relation" in rows[0] else list(rows[0]) if rows else ["t"]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, restval="", lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _cell(v) for k, v in r.items()})
    return buf.getvalue()


def run(cfg: ExperimentConfig) -> int:
    """Execute a validated config and write its output; returns the exit status."""
    if cfg.command in RELATIONS:
        rows, ok = run_sweep(cfg)
    elif cfg.command == "landau-trend":
        rows, ok = run_landau_trend(cfg)
    elif cfg.command == "landau-hs":
        rows, ok = run_landau_hs(cfg)
    else:
        rows, ok = run_bank(cfg)
    text = render(rows, cfg.format)
    if cfg.out_path:
        with open(cfg.out_path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if ok else 2


def main(argv=None) -> int:
    try:
        cfg = load_config(argv)
        return run(cfg)
    except (ConfigInvalid, OSError) as exc:
        print(f"specgap: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
