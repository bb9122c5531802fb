"""Command-line front end.

Every command reads flags, optionally merged over a flat JSON config file
(``--config``; flags win). Reports and verdicts are written as one JSON
object per line, traces and sweeps as CSV. Exit status: 0 success,
2 rejected input (bad flag, schema violation, violated precondition),
1 internal error.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable

import numpy as np

from . import bounds, driftlab, engine
from .core import PreconditionError
from .mutation import FixedRate, HeavyTailed, binomial_pmf, parse_operator
from .selection import FitnessProportionate, TruncationUniform, UniformAll

SEED_ENV = "NEGADRIFT_SEED"
REQUIRED = object()


class SchemaError(ValueError):
    pass


def _rate(v) -> float:
    return float(Fraction(str(v)))


def _int(v) -> int:
    if isinstance(v, float) and not v.is_integer():
        raise ValueError(f"{v!r} is not an integer")
    return int(v)


def _bool(v) -> bool:
    if isinstance(v, bool):
        return v
    if str(v).lower() in ("1", "true", "yes"):
        return True
    if str(v).lower() in ("0", "false", "no"):
        return False
    raise ValueError(f"{v!r} is not a boolean")


@dataclass(frozen=True)
class Param:
    name: str
    convert: Callable[[Any], Any]
    default: Any = REQUIRED
    help: str = ""

    @property
    def flag(self) -> str:
        return "--" + self.name.replace("_", "-")


def P(name, convert=float, default=REQUIRED, help=""):
    return Param(name, convert, default, help)


OUT = P("out", str, None, "output path (default: stdout)")
SEED = P("seed", _int, None, f"master seed (default: ${SEED_ENV})")
WORKERS = P("workers", _int, os.cpu_count() or 1, "worker processes")

PROCESS = [
    P("preset", str, "mu-lambda", "mu-lambda | simple-ga | custom"),
    P("n", _int),
    P("mu", _int, None, "parent count for mu-lambda / simple-ga"),
    P("lambda", _int, None, "population size"),
    P("p", _rate, None, "mutation rate (default 1/n); fractions like 1/40 accepted"),
    P("mutation", str, None, "custom operator: fixed:P | mixed:P@Q,... | heavy:BETA[:N]"),
    P("selection", str, None, "custom selection: truncation:MU | fp | uniform"),
    P("init", str, None, "custom initializer: uniform | seeded:MU"),
    P("kappa", float, math.log(2), "potential scale recorded in traces"),
    P("a", _int, 0, "target distance"),
    P("L", _int, REQUIRED, "horizon (populations inspected)"),
]

BOUND_PARAMS = {
    "lemma1": [P("delta"), P("Delta"), P("M"), P("L", _int)],
    "psm": [P("kappa"), P("a", _int), P("b", _int), P("alpha", float, 1.0), P("delta"), P("D"),
            P("lambda", _int), P("L", _int, 1)],
    "sbm": [P("n", _int), P("p", _rate), P("alpha"), P("delta"), P("a", _int), P("b", _int),
            P("lambda", _int), P("L", _int, 1)],
    "corollary": [P("n", _int), P("p", _rate), P("alpha"), P("a", _int, 0), P("lambda", _int),
                  P("L", _int, 1)],
    "mixed": [P("n", _int), P("mutation", str), P("alpha"), P("delta", float, None),
              P("B", float, None), P("gamma", float, None, "derive delta and B from gamma"),
              P("a", _int), P("b", _int), P("lambda", _int), P("L", _int, 1)],
    "simple-ga": [P("n", _int), P("eps", float, 0.0001), P("a_frac", float, 0.029)],
}

VERIFY_PARAMS = {
    "drift": PROCESS[:-2] + [P("samples", _int, 20, "populations to probe"),
                             P("reps", _int, 2000), P("delta", float, None), P("D", float, None),
                             P("b", _int, None), SEED, WORKERS],
    "conditions": [P("n", _int), P("mutation", str), P("kappa", float, None),
                   P("B", float, None), P("alpha"), P("delta"), P("a", _int), P("b", _int),
                   P("D", float, None, "default: max((1-delta)/alpha, delta)")],
    "domination": [P("kind", str, "offspring", "offspring | simple-ga"), P("max_n", _int, 10),
                   P("n", _int, 30), P("mu", _int, 20), P("times", str, "1,5,10,25,50"),
                   P("samples", _int, 10_000), P("significance", float, 1e-3), SEED, WORKERS],
    "lemma1-oracle": [P("chains", _int, 200), P("horizon", _int, 1000), SEED, WORKERS],
}

COMMANDS: dict[tuple[str, ...], list[Param]] = {}
for _k, _v in BOUND_PARAMS.items():
    COMMANDS[("bound", _k)] = _v + [OUT]
for _k, _v in VERIFY_PARAMS.items():
    COMMANDS[("verify", _k)] = _v + [OUT]
COMMANDS[("simulate",)] = PROCESS + [SEED, OUT]
COMMANDS[("experiment", "hitting-time")] = PROCESS + [
    P("reps", _int, 100), SEED, WORKERS, OUT,
    P("per_run", str, None, "also write one CSV row per replicate here")]
GRID = P("grid", str, None, "KEY=V1,V2,... (repeatable); one record per grid point")
for _k, _v in BOUND_PARAMS.items():
    COMMANDS[("sweep", _k)] = _v + [GRID, OUT]
COMMANDS[("schema",)] = [OUT]

STOCHASTIC = {("simulate",), ("experiment", "hitting-time"), ("verify", "drift"),
              ("verify", "domination"), ("verify", "lemma1-oracle")}

SCHEMA = {
    "simulate": ["t: iteration index (0 = initial population)",
                 "min_g: smallest Hamming distance to the target in the population",
                 "log_potential: ln sum_i exp(-kappa g(P_i))",
                 "hit: 1 if min_g <= a"],
    "experiment hitting-time": ["reps", "a", "L", "hits: runs with T < L",
                                "censored: runs with T >= L", "prob_hit: hits / reps",
                                "mean_uncensored: mean T over runs with T < L",
                                "master_seed"],
    "experiment hitting-time --per-run": ["replicate", "seed: MASTER:INDEX", "T (empty if censored)",
                                          "censored", "evaluations: fitness evaluations used"],
    "sweep <bound>": ["grid parameters", "status: ok | rejected", "reason",
              "every field of the bound report (see bound)"],
    "bound": ["bound", "inputs", "epsilon, B, b_tilde, gamma, kappa, D, ... as applicable",
              "log_expected_time_leading", "log_expected_time", "expected_time",
              "log_evaluations", "evaluations", "log_prob_bound_raw", "log_prob_bound",
              "prob_bound"],
}


# ---------------------------------------------------------------- formatting

def fmt_number(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return '"nan"'
    if math.isinf(v):
        return '"inf"' if v > 0 else '"-inf"'
    return format(v, ".17g")


def json_line(record: dict) -> str:
    parts = []
    for k, v in record.items():
        if isinstance(v, (bool, int, float, np.integer, np.floating)):
            val = fmt_number(v)
        elif v is None:
            val = "null"
        else:
            val = json.dumps(str(v))
        parts.append(f"{json.dumps(k)}: {val}")
    return "{" + ", ".join(parts) + "}"


def csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, int, float, np.integer, np.floating)):
        return fmt_number(v).strip('"')
    return str(v)


def csv_table(rows: list[dict]) -> str:
    cols: list[str] = []
    for r in rows:
        cols += [k for k in r if k not in cols]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([csv_cell(r.get(c)) for c in cols])
    return buf.getvalue()


# ---------------------------------------------------------------- parsing

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise SchemaError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="negadrift", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="flat JSON file with default flag values")
    top = parser.add_subparsers(dest="command", required=True)
    groups: dict[str, argparse._SubParsersAction] = {}
    for path, params in COMMANDS.items():
        if len(path) == 1:
            sub = top.add_parser(path[0])
        else:
            if path[0] not in groups:
                g = top.add_parser(path[0])
                groups[path[0]] = g.add_subparsers(dest="subcommand", required=True)
            sub = groups[path[0]].add_parser(path[1])
        sub.set_defaults(_path=path)
        for prm in params:
            if prm.name == "grid":
                sub.add_argument(prm.flag, dest=prm.name, action="append", help=prm.help)
            else:
                sub.add_argument(prm.flag, dest=prm.name, default=None, help=prm.help)
        sub.add_argument("--config", dest="sub_config", default=None, help=argparse.SUPPRESS)
    return parser


def resolve(ns: argparse.Namespace, config: dict) -> dict:
    """Merge flags over the config file, convert types and apply defaults."""
    path = ns._path
    params = {p.name: p for p in COMMANDS[path]}
    gridded = {g.partition("=")[0].strip().replace("-", "_")
               for g in (getattr(ns, "grid", None) or config.get("grid") or [])}
    unknown = set(config) - set(params)
    if unknown:
        raise SchemaError(f"unknown config keys for {' '.join(path)}: {sorted(unknown)}")
    out = {}
    for name, prm in params.items():
        raw = getattr(ns, name, None)
        if raw is None:
            raw = config.get(name)
        if raw is None:
            if prm.default is REQUIRED and name not in gridded:
                raise SchemaError(f"missing required parameter {prm.flag}")
            out[name] = prm.default
            continue
        if name == "grid":
            out[name] = raw if isinstance(raw, list) else [raw]
            continue
        try:
            out[name] = prm.convert(raw)
        except (ValueError, ZeroDivisionError, TypeError) as exc:
            raise SchemaError(f"bad value for {prm.flag}: {raw!r} ({exc})") from None
    needs_seed = path in STOCHASTIC and not (
        path == ("verify", "domination") and out.get("kind") == "offspring")
    if needs_seed and out.get("seed") is None:
        env = os.environ.get(SEED_ENV)
        if env is None:
            raise SchemaError(f"a master seed is required (--seed or ${SEED_ENV})")
        try:
            out["seed"] = int(env)
        except ValueError:
            raise SchemaError(f"${SEED_ENV} is not an integer: {env!r}") from None
    return out


# ---------------------------------------------------------------- commands

def run_bound(kind: str, a: dict) -> bounds.BoundReport:
    if kind == "lemma1":
        return bounds.negdrift_lemma_bounds(a["delta"], a["Delta"], a["M"], a["L"])
    if kind == "psm":
        return bounds.populations_bounds(a["kappa"], a["a"], a["b"], a["alpha"], a["delta"],
                                         a["D"], a["lambda"], a["L"])
    if kind == "sbm":
        return bounds.sbm_bounds(a["n"], a["p"], a["alpha"], a["delta"], a["a"], a["b"],
                                 a["lambda"], a["L"])
    if kind == "corollary":
        return bounds.sbm_corollary_bounds(a["n"], a["p"], a["alpha"], a["a"], a["lambda"],
                                           a["L"])
    if kind == "mixed":
        op = parse_operator(a["mutation"])
        delta, B = a["delta"], a["B"]
        if a["gamma"] is not None:
            d_g, B_g = bounds.mixed_params_from_gamma(a["alpha"], a["gamma"])
            delta = d_g if delta is None else delta
            B = B_g if B is None else B
        if delta is None or B is None:
            raise SchemaError("mixed bound needs --delta and --B, or --gamma")
        return bounds.mixed_bounds(a["n"], op, a["alpha"], delta, B, a["a"], a["b"],
                                   a["lambda"], a["L"])
    raise SchemaError(f"unknown bound {kind!r}")


def bound_record(kind: str, a: dict) -> dict:
    if kind == "simple-ga":
        prm = bounds.simple_ga_parameters(a["n"], a["eps"], a["a_frac"])
        return {"bound": "simple-ga", "n": prm.n, "eps": a["eps"], "a_frac": a["a_frac"],
                "alpha": prm.alpha, "gamma": prm.gamma, "b": prm.b, "b_over_n": prm.b_over_n,
                "s": prm.s}
    return run_bound(kind, a).to_record()


def build_process(a: dict) -> engine.PsmProcess:
    n = a["n"]
    p = a["p"] if a["p"] is not None else 1.0 / n
    preset = a["preset"]
    if preset == "mu-lambda":
        if a["mu"] is None or a["lambda"] is None:
            raise SchemaError("mu-lambda preset needs --mu and --lambda")
        proc = engine.mu_lambda_ea(n, a["mu"], a["lambda"], p)
    elif preset == "simple-ga":
        mu = a["mu"] or a["lambda"]
        if mu is None:
            raise SchemaError("simple-ga preset needs --mu")
        proc = engine.simple_ga(n, mu, p)
    elif preset == "custom":
        if a["lambda"] is None:
            raise SchemaError("custom process needs --lambda")
        proc = engine.PsmProcess(
            n=n, lam=a["lambda"],
            selection=_parse_selection(a["selection"] or "uniform"),
            mutation=parse_operator(a["mutation"]) if a["mutation"] else FixedRate(p),
            initializer=_parse_init(a["init"] or "uniform"),
        )
    else:
        raise SchemaError(f"unknown preset {preset!r}")
    if a.get("kappa") is not None:
        proc = engine.PsmProcess(proc.n, proc.lam, proc.selection, proc.mutation,
                                 proc.initializer, proc.potential, proc.fitness, a["kappa"])
    return proc


def _parse_selection(text: str):
    kind, _, rest = text.partition(":")
    if kind == "truncation":
        return TruncationUniform(int(rest))
    if kind == "fp":
        return FitnessProportionate()
    if kind == "uniform":
        return UniformAll()
    raise SchemaError(f"unknown selection {text!r}")


def _parse_init(text: str):
    kind, _, rest = text.partition(":")
    if kind == "uniform":
        return engine.UniformRandom()
    if kind == "seeded":
        return engine.MuLambdaSeeded(int(rest))
    raise SchemaError(f"unknown initializer {text!r}")


def cmd_simulate(a: dict) -> str:
    proc = build_process(a)
    tr = engine.run_until(proc, a["a"], a["L"], engine.replicate_rng(a["seed"], 0),
                          seed_label=f"{a['seed']}:0")
    return tr.to_csv()


def cmd_experiment(a: dict) -> str:
    proc = build_process(a)
    summary = engine.hitting_time_experiment(proc, a["a"], a["L"], a["reps"], a["seed"],
                                             workers=a["workers"])
    if a["per_run"]:
        with open(a["per_run"], "w") as fh:
            fh.write(summary.to_csv())
    return csv_table([summary.summary_row()])


def cmd_sweep(kind: str, a: dict) -> str:
    params = {p.name: p for p in BOUND_PARAMS[kind]}
    axes = {}
    for item in a["grid"] or []:
        key, _, values = item.partition("=")
        key = key.strip().replace("-", "_")
        if key not in params:
            raise SchemaError(f"unknown sweep parameter {key!r} for bound {kind}")
        vals = [v.strip() for v in values.split(",") if v.strip()]
        if not vals:
            raise SchemaError(f"empty grid for {key!r}")
        try:
            axes[key] = [params[key].convert(v) for v in vals]
        except (ValueError, ZeroDivisionError) as exc:
            raise SchemaError(f"bad grid value for {key!r}: {exc}") from None
    fixed = {k: v for k, v in a.items() if k in params}
    rows = []
    keys = list(axes)
    for combo in itertools.product(*(axes[k] for k in keys)):
        point = dict(fixed, **dict(zip(keys, combo)))
        row = {k: point[k] for k in keys}
        try:
            rec = bound_record(kind, point)
            row.update(status="ok", reason="")
            row.update(rec)
        except (PreconditionError, ValueError) as exc:
            row.update(status="rejected", reason=str(exc))
        rows.append(row)
    return csv_table(rows)


def _drift_probe(args):
    a, k = args
    proc = build_process(a)
    rng = engine.replicate_rng(a["seed"], k)
    P = engine.init_population(proc, rng)
    meas = driftlab.measure_drift(proc, P, proc.kappa, a["reps"], rng)
    rec = {"check": "drift", "sample": k, "min_g": int(proc.potential.evaluate(P.matrix).min()),
           "current": meas.current, "mean_next": meas.mean, "half_width": meas.half_width,
           "exact_next": driftlab.expected_next_potential(proc, P, proc.kappa)}
    if None not in (a["delta"], a["D"], a["b"]):
        rhs = driftlab.drift_right_side(meas.current, a["delta"], a["D"], proc.lam,
                                        proc.kappa, a["b"])
        rec["drift_bound"] = rhs
        rec["within_bound"] = meas.mean <= rhs + 3 * meas.half_width
    return rec


def _oracle_chain(args):
    seed, k, horizon = args
    chain = driftlab.random_drift_chain(engine.replicate_rng(seed, k))
    return driftlab.drift_bound_oracle(chain, k, horizon)


def _pool_map(fn, jobs, workers):
    if workers <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def cmd_verify(kind: str, a: dict) -> list[dict]:
    if kind == "drift":
        a = dict(a, a=0, L=1)
        return _pool_map(_drift_probe, [(a, k) for k in range(a["samples"])], a["workers"])
    if kind == "conditions":
        op = parse_operator(a["mutation"])
        kappa = a["kappa"] if a["kappa"] is not None else (
            math.log(a["B"]) if a["B"] is not None else None)
        if kappa is None:
            raise SchemaError("conditions check needs --kappa or --B")
        D = a["D"] if a["D"] is not None else max((1 - a["delta"]) / a["alpha"], a["delta"])
        ii = driftlab.verify_condition_ii(op, a["n"], kappa, a["alpha"], a["delta"], a["a"],
                                          a["b"])
        iii = driftlab.verify_condition_iii(op, a["n"], kappa, a["b"], D)
        return [ii.to_record(), iii.to_record()]
    if kind == "domination":
        if a["kind"] == "offspring":
            bad = driftlab.offspring_order_violations(a["max_n"])
            recs = [{"check": "offspring_order", "n": n, "d1": d1, "d2": d2, "p": p, "holds": False}
                    for n, d1, d2, p in bad]
            return recs + [{"check": "offspring_order", "max_n": a["max_n"], "violations": len(bad),
                            "holds": not bad}]
        if a["kind"] == "simple-ga":
            times = [int(t) for t in a["times"].split(",")]
            samples = driftlab.simple_ga_fitness_samples(
                a["n"], a["mu"], times, a["samples"], engine.replicate_rng(a["seed"], 0))
            ref = np.cumsum(binomial_pmf(a["n"], 0.5))
            out = []
            for t in times:
                v = driftlab.domination_test_statistical(samples[t], ref, a["significance"])
                out.append({**v.to_record(), "suite": "simple_ga", "t": t})
            return out
        raise SchemaError(f"unknown domination kind {a['kind']!r}")
    if kind == "lemma1-oracle":
        accepted: list[driftlab.OracleRecord] = []
        k, batch = 0, 64
        while len(accepted) < a["chains"]:
            jobs = [(a["seed"], i, a["horizon"]) for i in range(k, k + batch)]
            accepted += [r for r in _pool_map(_oracle_chain, jobs, a["workers"]) if r.accepted]
            k += batch
        accepted = accepted[: a["chains"]]
        recs = [r.to_record() for r in accepted]
        total = sum(r.violations for r in accepted)
        recs.append({"check": "lemma1_oracle_summary", "chains": len(accepted),
                     "examined": accepted[-1].chain + 1 if accepted else 0,
                     "violations": total, "holds": total == 0})
        return recs
    raise SchemaError(f"unknown verify kind {kind!r}")


def cmd_schema() -> str:
    lines = []
    for name, cols in SCHEMA.items():
        lines.append(f"[{name}]")
        lines += [f"  {c}" for c in cols]
    return "\n".join(lines) + "\n"


def execute(path: tuple[str, ...], a: dict) -> str:
    if path[0] == "bound":
        return json_line(bound_record(path[1], a)) + "\n"
    if path[0] == "verify":
        return "".join(json_line(r) + "\n" for r in cmd_verify(path[1], a))
    if path == ("simulate",):
        return cmd_simulate(a)
    if path == ("experiment", "hitting-time"):
        return cmd_experiment(a)
    if path[0] == "sweep":
        return cmd_sweep(path[1], a)
    if path == ("schema",):
        return cmd_schema()
    raise SchemaError(f"unknown command {' '.join(path)}")


def _error(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json_line({"error": kind, "message": message}) + "\n")
    return code


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        ns = build_parser().parse_args(argv)
        cfg_path = ns.sub_config or ns.config
        config = {}
        if cfg_path:
            with open(cfg_path) as fh:
                config = json.load(fh)
            if not isinstance(config, dict):
                raise SchemaError("config file must hold a flat JSON object")
            config = {k.replace("-", "_"): v for k, v in config.items()}
        args = resolve(ns, config)
        text = execute(ns._path, args)
    except SchemaError as exc:
        return _error("schema", str(exc), 2)
    except PreconditionError as exc:
        return _error("precondition", str(exc), 2)
    except (OSError, json.JSONDecodeError) as exc:
        return _error("io", str(exc), 2)
    except Exception as exc:  # noqa: BLE001
        return _error("internal", f"{type(exc).__name__}: {exc}", 1)
    if args.get("out"):
        with open(args["out"], "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
