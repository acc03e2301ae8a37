"""Command-line front end.

Subcommands: ``region trace``, ``region check``, ``simulate``,
``typicality bounds``, ``kstats``, ``replay``.  Configs and manifests are
JSON; tabular results are CSV (or JSON with ``--format json``).  Every run
writes a ``manifest.json`` capturing the fully resolved config so that
``replay`` reproduces the result files byte-identically.

Exit codes: 0 success, 1 user error (bad config, bad arguments, budget
violations), 2 internal error.
"""
from __future__ import annotations

import argparse
import datetime
import json
import os
import sys
import traceback

import numpy as np

from . import __version__
from .montecarlo import SCENARIOS, ExperimentConfig, k_statistics, run_experiment
from .probability import ConditionalPmf, JointPmf, Pmf
from .region import (
    CandidateTh1,
    CandidateTh2,
    RegionQuery,
    SearchConfig,
    point_achievable,
    trace_frontier,
)
from .typicality import TypicalityParams, lemma_ta_bounds, lemma_tc_prob_bounds

_USER_ERRORS = (
    ValueError,  # includes DistributionError, BudgetError, SearchConfigError
    KeyError,
    TypeError,
    FileNotFoundError,
    IsADirectoryError,
    json.JSONDecodeError,
)


class ConfigError(ValueError):
    pass


def _fmt(x: float) -> str:
    """17 significant digits: enough for exact float round trips."""
    return format(float(x), ".17g")


def _load_json(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _write_json(path: str, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(
            _fmt(v) if isinstance(v, float) else str(v) for v in row
        ))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# config parsing

def _require(cfg: dict, key: str, ctx: str):
    if key not in cfg:
        raise ConfigError(f"missing key {key!r} in {ctx} config")
    return cfg[key]


def _parse_query(d: dict) -> RegionQuery:
    p0 = Pmf(np.array(_require(d, "p0", "query"), dtype=float))
    chan = ConditionalPmf.from_json_dict(_require(d, "target_channel", "query"))
    deltas = _require(d, "deltas", "query")
    if len(deltas) != 3:
        raise ConfigError("query.deltas must have three entries (delta1, delta2, delta12)")
    return RegionQuery(
        p0=p0, target_channel=chan,
        delta1=float(deltas[0]), delta2=float(deltas[1]), delta12=float(deltas[2]),
    )


def _parse_search(d: dict, seed_override: int | None) -> SearchConfig:
    kwargs = {}
    for key in ("grid_step", "restarts", "refine_iters", "seed", "max_grid_candidates"):
        if key in d:
            kwargs[key] = int(d[key])
    if "u_sizes" in d:
        kwargs["u_sizes"] = tuple(int(u) for u in d["u_sizes"])
    if seed_override is not None:
        kwargs["seed"] = seed_override
    return SearchConfig(**kwargs)


def _parse_candidate(d: dict):
    cond = ConditionalPmf.from_json_dict(_require(d, "cond", "candidate"))
    theorem = int(d.get("theorem", 1))
    if theorem == 1:
        return CandidateTh1(cond=cond)
    if theorem == 2:
        return CandidateTh2(cond=cond)
    raise ConfigError("candidate.theorem must be 1 or 2")


def _parse_experiment(cfg: dict, seed_override: int | None) -> ExperimentConfig:
    if seed_override is not None:
        cfg = dict(cfg)
        cfg["master_seed"] = seed_override
    return ExperimentConfig(
        query=_parse_query(_require(cfg, "query", "experiment")),
        candidate=_parse_candidate(_require(cfg, "candidate", "experiment")),
        rates=tuple(_require(cfg, "rates", "experiment")),
        rate_slacks=tuple(_require(cfg, "rate_slacks", "experiment")),
        epsilon=float(_require(cfg, "epsilon", "experiment")),
        n_values=tuple(_require(cfg, "n_values", "experiment")),
        trials=int(_require(cfg, "trials", "experiment")),
        master_seed=int(_require(cfg, "master_seed", "experiment")),
        fresh_codebook_per_trial=bool(cfg.get("fresh_codebook_per_trial", True)),
    )


def _resolved_config(cfg: dict, seed_override: int | None, seed_key: str) -> dict:
    """Copy of the config with any --seed override folded in, for the manifest."""
    out = json.loads(json.dumps(cfg))
    if seed_override is None:
        return out
    if seed_key == "master_seed":
        out["master_seed"] = seed_override
    else:
        out.setdefault("search", {})["seed"] = seed_override
    return out


# ---------------------------------------------------------------------------
# manifest

def _emit_manifest(out_dir: str, subcommand: str, config: dict, fmt: str,
                   outputs: list[str]) -> str:
    manifest = {
        "tool_version": __version__,
        "subcommand": subcommand,
        "config": config,
        "format": fmt,
        "created_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "outputs": outputs,
    }
    path = os.path.join(out_dir, "manifest.json")
    _write_json(path, manifest)
    return path


# ---------------------------------------------------------------------------
# subcommand runners (shared with replay; all file outputs deterministic)

def _witness_json(table: np.ndarray) -> dict:
    return ConditionalPmf(table=np.ascontiguousarray(table), given_ndim=1).to_json_dict()


def _run_region_trace(config: dict, out_dir: str, fmt: str, workers: int) -> list[str]:
    q = _parse_query(_require(config, "query", "region trace"))
    search = _parse_search(config.get("search", {}), None)
    theorem = int(config.get("theorem", 1))
    frontier = trace_frontier(q, theorem, search)

    rows = [[p.r1, p.r2, p.rsum, p.witness_id] for p in frontier.points]
    outputs = []
    if fmt == "csv":
        path = os.path.join(out_dir, "frontier.csv")
        _write_csv(path, ["R1", "R2", "rsum", "witness_id"], rows)
    else:
        path = os.path.join(out_dir, "frontier.json")
        _write_json(path, [
            {"R1": p.r1, "R2": p.r2, "rsum": p.rsum, "witness_id": p.witness_id}
            for p in frontier.points
        ])
    outputs.append(path)
    wpath = os.path.join(out_dir, "witnesses.json")
    _write_json(wpath, {
        "complete": frontier.complete,
        "metadata": frontier.metadata,
        "witnesses": {wid: _witness_json(w) for wid, w in frontier.witnesses.items()},
    })
    outputs.append(wpath)
    print(f"frontier: {len(frontier.points)} point(s), complete={frontier.complete}")
    for p in frontier.points:
        print(f"  R1={_fmt(p.r1)} R2={_fmt(p.r2)} rsum={_fmt(p.rsum)} [{p.witness_id}]")
    return outputs


def _run_region_check(config: dict, out_dir: str, fmt: str, workers: int) -> list[str]:
    q = _parse_query(_require(config, "query", "region check"))
    search = _parse_search(config.get("search", {}), None)
    theorem = int(config.get("theorem", 1))
    point = _require(config, "point", "region check")
    if len(point) != 2:
        raise ConfigError("region check point must be [R1, R2]")
    ok, witness = point_achievable(q, float(point[0]), float(point[1]), theorem, search)
    result = {
        "achievable": ok,
        "R1": float(point[0]),
        "R2": float(point[1]),
        "theorem": theorem,
        "witness": _witness_json(witness) if witness is not None else None,
    }
    path = os.path.join(out_dir, "check.json")
    _write_json(path, result)
    print(f"achievable: {str(ok).lower()}")
    return [path]


def _run_simulate(config: dict, out_dir: str, fmt: str, workers: int) -> list[str]:
    ecfg = _parse_experiment(config, None)
    results = run_experiment(ecfg, workers=workers)
    rows = []
    for n, stats, _trials in results:
        for s in SCENARIOS:
            st = stats[s]
            rows.append([
                n, s, st.mean_tv, st.std_err,
                st.case_counts[0], st.case_counts[1], st.case_counts[2],
            ])
    if fmt == "csv":
        path = os.path.join(out_dir, "simulate.csv")
        _write_csv(
            path,
            ["n", "scenario", "mean_tv", "std_err", "case_a", "case_b", "case_c"],
            rows,
        )
    else:
        path = os.path.join(out_dir, "simulate.json")
        _write_json(path, [
            {"n": r[0], "scenario": r[1], "mean_tv": r[2], "std_err": r[3],
             "case_a": r[4], "case_b": r[5], "case_c": r[6]}
            for r in rows
        ])
    for r in rows:
        print(f"n={r[0]} scenario={r[1]} mean_tv={_fmt(r[2])} std_err={_fmt(r[3])} "
              f"cases(a,b,c)=({r[4]},{r[5]},{r[6]})")
    return [path]


def _run_kstats(config: dict, out_dir: str, fmt: str, workers: int) -> list[str]:
    ecfg = _parse_experiment(config, None)
    n = int(_require(config, "n", "kstats"))
    draws = int(_require(config, "codebook_draws", "kstats"))
    ks = k_statistics(ecfg, n, draws, workers=workers)
    row = [
        n, draws, ks.mean_k, ks.var_k, ks.frac_k_zero,
        ks.ek_lower_bound.lower, str(ks.ek_lower_bound.trivial).lower(),
        ks.pr_zero_chebyshev.upper, str(ks.pr_zero_chebyshev.trivial).lower(),
    ]
    if fmt == "csv":
        path = os.path.join(out_dir, "kstats.csv")
        _write_csv(
            path,
            ["n", "codebook_draws", "mean_k", "var_k", "frac_k_zero",
             "ek_lower", "ek_lower_trivial", "pr_zero_upper", "pr_zero_trivial"],
            [row],
        )
    else:
        path = os.path.join(out_dir, "kstats.json")
        _write_json(path, {
            "n": n, "codebook_draws": draws, "mean_k": ks.mean_k, "var_k": ks.var_k,
            "frac_k_zero": ks.frac_k_zero,
            "ek_lower_bound": ks.ek_lower_bound.to_json_dict(),
            "pr_zero_chebyshev": ks.pr_zero_chebyshev.to_json_dict(),
        })
    print(f"n={n} draws={draws} mean_k={_fmt(ks.mean_k)} var_k={_fmt(ks.var_k)} "
          f"frac_k_zero={_fmt(ks.frac_k_zero)}")
    return [path]


def _run_typicality_bounds(config: dict, out_dir: str, fmt: str, workers: int) -> list[str]:
    p = JointPmf.from_json_dict(_require(config, "p", "typicality bounds"))
    params = TypicalityParams(
        epsilon=float(_require(config, "epsilon", "typicality bounds")),
        n=int(_require(config, "n", "typicality bounds")),
    )
    report = {"sequence": lemma_ta_bounds(p, params).to_json_dict()}
    if p.ndim >= 2:
        report["independent_draws"] = lemma_tc_prob_bounds(p, params).to_json_dict()
    path = os.path.join(out_dir, "bounds.json")
    _write_json(path, report)
    print(json.dumps(report, indent=2, sort_keys=True))
    return [path]


_RUNNERS = {
    "region trace": _run_region_trace,
    "region check": _run_region_check,
    "simulate": _run_simulate,
    "kstats": _run_kstats,
    "typicality bounds": _run_typicality_bounds,
}

_SEED_KEY = {
    "region trace": "search.seed",
    "region check": "search.seed",
    "simulate": "master_seed",
    "kstats": "master_seed",
    "typicality bounds": None,
}


def _execute(subcommand: str, config: dict, out_dir: str, fmt: str, workers: int) -> int:
    os.makedirs(out_dir, exist_ok=True)
    outputs = _RUNNERS[subcommand](config, out_dir, fmt, workers)
    mpath = _emit_manifest(out_dir, subcommand, config, fmt,
                           [os.path.basename(p) for p in outputs])
    print(f"manifest: {mpath}")
    return 0


def _run_from_args(args, subcommand: str) -> int:
    config = _load_json(args.config)
    seed_key = _SEED_KEY[subcommand]
    if args.seed is not None and seed_key is not None:
        if seed_key == "master_seed":
            config["master_seed"] = args.seed
        else:
            config.setdefault("search", {})
            config["search"]["seed"] = args.seed
    return _execute(subcommand, config, args.out, args.format, args.workers)


def _run_replay(args) -> int:
    manifest = _load_json(args.manifest)
    sub = _require(manifest, "subcommand", "manifest")
    if sub not in _RUNNERS:
        raise ConfigError(f"manifest names unknown subcommand {sub!r}")
    return _execute(
        sub,
        _require(manifest, "config", "manifest"),
        args.out,
        manifest.get("format", "csv"),
        args.workers,
    )


# ---------------------------------------------------------------------------
# argument parsing

def _add_common(p: argparse.ArgumentParser, needs_config: bool = True):
    if needs_config:
        p.add_argument("--config", required=True, help="path to a JSON config file")
    p.add_argument("--out", default=".", help="output directory (default: current)")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                   help="worker processes for trial-level parallelism")
    p.add_argument("--format", choices=("csv", "json"), default="csv",
                   help="tabular output format")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coordmd",
        description="Rate regions and random-coding simulation for "
                    "two-description empirical coordination.",
    )
    parser.add_argument("--version", action="version", version=f"coordmd {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    region = subs.add_parser("region", help="rate-region computations")
    rsubs = region.add_subparsers(dest="region_command", required=True)
    trace = rsubs.add_parser("trace", help="trace the Pareto frontier of (R1, R2)")
    _add_common(trace)
    trace.set_defaults(func=lambda a: _run_from_args(a, "region trace"))
    check = rsubs.add_parser("check", help="test whether a rate pair is achievable")
    _add_common(check)
    check.set_defaults(func=lambda a: _run_from_args(a, "region check"))

    sim = subs.add_parser("simulate", help="Monte Carlo coordination experiment")
    _add_common(sim)
    sim.set_defaults(func=lambda a: _run_from_args(a, "simulate"))

    typ = subs.add_parser("typicality", help="typicality bound calculators")
    tsubs = typ.add_subparsers(dest="typicality_command", required=True)
    bounds = tsubs.add_parser("bounds", help="print typicality bound reports as JSON")
    _add_common(bounds)
    bounds.set_defaults(func=lambda a: _run_from_args(a, "typicality bounds"))

    kst = subs.add_parser("kstats", help="typical-pair count diagnostics")
    _add_common(kst)
    kst.set_defaults(func=lambda a: _run_from_args(a, "kstats"))

    rep = subs.add_parser("replay", help="re-run a prior run from its manifest")
    rep.add_argument("manifest", help="path to a manifest.json from a prior run")
    _add_common(rep, needs_config=False)
    rep.set_defaults(func=_run_replay)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 0 for --help, 2 for usage errors; map usage errors to 1
        code = exc.code or 0
        return 0 if code == 0 else 1
    try:
        return args.func(args)
    except _USER_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
