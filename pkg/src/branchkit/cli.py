"""Config-driven experiment runner.

Every experiment is a subcommand taking a TOML config (see
:mod:`branchkit.config`); artifacts (CSV/JSON) plus a manifest land in the
output directory.  Exit status: 0 when the experiment's verdict passes, 1 on
a failing verdict, 2 on configuration or usage errors.  Reruns with the same
config and seed reproduce CSV numeric content byte for byte.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__, analysis, diffusion, discrete, forest, rayknight
from .config import ConfigError, ExperimentConfig, load_config
from .interaction import Classification, classify
from .rngstream import derive_seed

__all__ = ["main", "MissingArtifactError"]


class MissingArtifactError(FileNotFoundError):
    pass


def _write_csv(path: Path, header: str, columns) -> None:
    arr = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in arr:
            fh.write(",".join(format(v, ".17g") for v in row) + "\n")


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


# ---------------------------------------------------------------------------
# runners: each returns (verdict: bool, results: dict, artifacts: list[str])
# ---------------------------------------------------------------------------

def _run_classify(cfg: ExperimentConfig, out: Path):
    f = cfg.interaction()
    sec = cfg.section("classify")
    report = classify(f, tail_limit=sec.get("tail_limit", 1e4),
                      tolerance=sec.get("tolerance", 1e-8))
    payload = {
        "interaction": f.describe(),
        "classification": report.classification.value,
        "lambda_estimate": report.lambda_estimate,
        "upper_limit_used": report.upper_limit_used,
        "quadrature_tolerance": report.quadrature_tolerance,
        "rule": report.rule,
    }
    _write_json(out / "classification.json", payload)
    ok = report.classification is not Classification.INCONCLUSIVE
    return ok, {"classification": report.classification.value,
                "rule": report.rule}, ["classification.json"]


def _run_discrete(cfg: ExperimentConfig, out: Path):
    f = cfg.interaction()
    sec = cfg.section("discrete")
    params = discrete.DiscreteParams(
        sec["lam"], sec["mu"], f, sec["m"], sec["t_max"],
        sec.get("max_events", discrete.DEFAULT_MAX_EVENTS))
    path = discrete.simulate_population(params, cfg.master_seed)
    path.to_csv(out / "path.csv")
    artifacts = ["path.csv"]
    results = {"n_events": path.n_events,
               "final_value": path.value_at(params.t_max),
               "truncated_by_cap": path.truncated_by_cap}
    if cfg.replicates > 1:
        vals = discrete.population_values_at(params, params.t_max,
                                             cfg.replicates, cfg.master_seed)
        _write_csv(out / "ensemble.csv", "value", [vals])
        rep = analysis.moment_report(vals.astype(float))
        _write_json(out / "moments.json", rep.__dict__)
        artifacts += ["ensemble.csv", "moments.json"]
        results["ensemble_mean"] = rep.mean
    return True, results, artifacts


def _run_renormalized(cfg: ExperimentConfig, out: Path):
    f = cfg.interaction()
    sec = cfg.section("renormalized")
    path, ledger = discrete.simulate_renormalized(
        sec["x"], sec["N"], f, sec["t_max"], cfg.master_seed,
        max_events=sec.get("max_events", discrete.DEFAULT_MAX_EVENTS))
    path.to_csv(out / "path.csv")
    ledger.to_csv(out / "ledger.csv")
    artifacts = ["path.csv", "ledger.csv"]
    results = {"n_events": path.n_events,
               "final_value": path.value_at(sec["t_max"]),
               "truncated_by_cap": path.truncated_by_cap}
    if cfg.replicates > 1:
        vals = discrete.renormalized_values_at(
            sec["x"], sec["N"], f, sec["t_max"], cfg.replicates, cfg.master_seed)
        _write_csv(out / "ensemble.csv", "value", [vals])
        rep = analysis.moment_report(vals)
        _write_json(out / "moments.json", rep.__dict__)
        artifacts += ["ensemble.csv", "moments.json"]
        results["ensemble_mean"] = rep.mean
    return True, results, artifacts


def _run_forest(cfg: ExperimentConfig, out: Path):
    f = cfg.interaction()
    sec = cfg.section("forest")
    p = sec.get("p", 2.0)
    params = discrete.DiscreteParams(
        sec["lam"], sec["mu"], f, sec["m"], sec["t_max"],
        sec.get("max_events", discrete.DEFAULT_MAX_EVENTS))
    fr = forest.grow_forest(params, cfg.master_seed)
    fr.to_csv(out / "forest.csv")
    path = forest.explore(fr, p) if fr.individuals else None
    if path is not None:
        path.to_csv(out / "exploration.csv")
    else:
        _write_csv(out / "exploration.csv", "s,h", [np.zeros(1), np.zeros(1)])
    check = forest.discrete_ray_knight_check(fr, p)
    _write_json(out / "rk_check.json", {
        "max_discrepancy": check.max_discrepancy,
        "n_levels": check.n_levels,
        "individuals": len(fr.individuals),
        "truncated": fr.truncated,
    })
    ok = check.max_discrepancy == 0.0
    return ok, {"individuals": len(fr.individuals),
                "rk_max_discrepancy": check.max_discrepancy,
                "truncated": fr.truncated}, \
        ["forest.csv", "exploration.csv", "rk_check.json"]


def _run_diffusion(cfg: ExperimentConfig, out: Path):
    f = cfg.interaction()
    sec = cfg.section("diffusion")
    variant = sec.get("variant", "feller")
    x, t_max, dt = sec["x"], sec["t_max"], sec["dt"]
    artifacts = []
    results = {"variant": variant}
    if variant == "feller":
        tr = diffusion.solve_feller(f, x, t_max, dt, cfg.master_seed)
        tr.to_csv(out / "trajectory.csv")
        artifacts.append("trajectory.csv")
        results["absorbed_at"] = tr.absorbed_at
        if cfg.replicates > 1:
            vals = diffusion.feller_values_at(f, x, t_max, dt, cfg.replicates,
                                              cfg.master_seed)
            _write_csv(out / "ensemble.csv", "value", [vals])
            artifacts.append("ensemble.csv")
            _write_json(out / "summary.json", _ensemble_summary(vals))
            artifacts.append("summary.json")
    elif variant == "coupled":
        if "y" not in sec:
            raise ConfigError("coupled variant needs [diffusion].y")
        trz, trv = diffusion.solve_coupled(f, x, sec["y"], t_max, dt,
                                           cfg.master_seed)
        trz.to_csv(out / "trajectory_z.csv")
        trv.to_csv(out / "trajectory_v.csv")
        artifacts += ["trajectory_z.csv", "trajectory_v.csv"]
    elif variant == "environment":
        env = sec.get("env_constant", 0.0)
        tr = diffusion.solve_environment(f, x, env, t_max, dt, cfg.master_seed)
        tr.to_csv(out / "trajectory.csv")
        artifacts.append("trajectory.csv")
        results["absorbed_at"] = tr.absorbed_at
    elif variant == "first-hit":
        if "a" not in sec or "b" not in sec:
            raise ConfigError("first-hit variant needs [diffusion].a and .b")
        est = diffusion.first_hit(f, x, sec["a"], sec["b"], dt, cfg.replicates,
                                  cfg.master_seed, t_cap=sec.get("t_cap", 200.0))
        _write_json(out / "first_hit.json", est.__dict__)
        artifacts.append("first_hit.json")
        results["p_hat"] = est.p_hat
    elif variant == "extinction":
        est = diffusion.extinction_stats(f, x, sec.get("t_cap", t_max), dt,
                                         cfg.replicates, cfg.master_seed)
        _write_json(out / "extinction.json", est.__dict__)
        artifacts.append("extinction.json")
        results["extinct_fraction"] = est.extinct_fraction
    else:
        raise ConfigError(f"unknown diffusion variant {variant!r}")
    return True, results, artifacts


def _ensemble_summary(vals: np.ndarray) -> dict:
    rep = analysis.moment_report(vals)
    qs = np.quantile(vals, [0.05, 0.25, 0.5, 0.75, 0.95])
    return {
        "mean": rep.mean, "variance": rep.variance,
        "standard_error": rep.standard_error,
        "ci_low": rep.ci_low, "ci_high": rep.ci_high,
        "quantiles": {"q05": qs[0], "q25": qs[1], "q50": qs[2],
                      "q75": qs[3], "q95": qs[4]},
        "extinct_fraction": float(np.mean(vals == 0.0)),
        "count": rep.count,
    }


def _rk_params(cfg: ExperimentConfig):
    sec = cfg.section("rayknight")
    f = cfg.interaction()
    env = sec.get("env_constant")
    return rayknight.RKParams(
        f, tuple(sec["x_targets"]), env=env, K=sec.get("K"),
        ds=sec.get("ds", 1e-4), dh=sec.get("dh", 0.02),
        s_cap_steps=sec.get("s_cap_steps"))


def _run_rayknight(cfg: ExperimentConfig, out: Path):
    sec = cfg.section("rayknight")
    params = _rk_params(cfg)
    run = rayknight.simulate_reflected(params, cfg.master_seed)
    rows_x, rows_lvl, rows_val = [], [], []
    for m, snap in enumerate(run.snapshots):
        if snap is None:
            continue
        rows_x.append(np.full(snap.levels.size, params.x_targets[m]))
        rows_lvl.append(snap.levels)
        rows_val.append(snap.density)
    if rows_x:
        _write_csv(out / "field.csv", "x_target,level,local_time",
                   [np.concatenate(rows_x), np.concatenate(rows_lvl),
                    np.concatenate(rows_val)])
    else:
        _write_csv(out / "field.csv", "x_target,level,local_time",
                   [np.zeros(0), np.zeros(0), np.zeros(0)])
    meta = {
        "s_x": {str(x): (float(s) if r else None)
                for x, s, r in zip(params.x_targets, run.s_values, run.reached)},
        "truncation_flags": {str(x): bool(not r)
                             for x, r in zip(params.x_targets, run.reached)},
        "calibration_constant": params.calibration,
        "n_steps": run.n_steps,
        "max_height": run.max_height,
        "ceiling_local_time": run.ceiling_local_time,
    }
    _write_json(out / "metadata.json", meta)
    artifacts = ["field.csv", "metadata.json"]
    results = {"reached": int(run.reached.sum()), "targets": len(params.x_targets)}
    if cfg.replicates > 1:
        queries = sec.get("query_levels", [params.dh / 2.0])
        ens = rayknight.ray_knight_field(params, cfg.replicates,
                                         cfg.master_seed, queries)
        cols = {"x_target": [], "level": [], "replicate": [], "local_time": []}
        for mi, x in enumerate(params.x_targets):
            for qi, q in enumerate(ens.query_levels):
                mask = ens.reached[mi]
                reps = np.nonzero(mask)[0]
                cols["x_target"].append(np.full(reps.size, x))
                cols["level"].append(np.full(reps.size, q))
                cols["replicate"].append(reps)
                cols["local_time"].append(ens.samples[mi, qi, mask])
        _write_csv(out / "ensemble.csv", "x_target,level,replicate,local_time",
                   [np.concatenate(cols[k]) for k in
                    ("x_target", "level", "replicate", "local_time")])
        artifacts.append("ensemble.csv")
        results["exclusion_rate"] = ens.exclusion_rate()
    ok = bool(run.reached.all())
    return ok, results, artifacts


def _run_convergence(cfg: ExperimentConfig, out: Path):
    f = cfg.interaction()
    sec = cfg.section("convergence")
    rows = analysis.convergence_experiment(
        f, sec["x"], sec["t"], sec["N_list"], sec["dt"],
        cfg.replicates, cfg.master_seed)
    _write_csv(out / "table.csv", "N,mean,variance,ks_vs_limit",
               [[r.N for r in rows], [r.mean for r in rows],
                [r.variance for r in rows], [r.ks_vs_limit for r in rows]])
    ok = rows[-1].ks_vs_limit < rows[0].ks_vs_limit if len(rows) > 1 else True
    thresh = sec.get("ks_threshold")
    if thresh is not None:
        ok = ok and rows[-1].ks_vs_limit < thresh
    return ok, {"ks_first": rows[0].ks_vs_limit,
                "ks_last": rows[-1].ks_vs_limit}, ["table.csv"]


def _run_compare(cfg: ExperimentConfig, out: Path):
    f = cfg.interaction()
    sec = cfg.section("compare")
    pairing = sec["pairing"]
    seed = cfg.master_seed
    n = cfg.replicates

    if pairing == "coupling":
        rsec = cfg.section("renormalized")
        if "y" not in rsec:
            raise ConfigError("coupling pairing needs [renormalized].y")
        t = sec.get("t", rsec["t_max"])
        z, v = discrete.coupled_values_at(rsec["x"], rsec["y"], rsec["N"], f,
                                          t, n, seed)
        a = z + v
        b = discrete.renormalized_values_at(rsec["y"], rsec["N"], f, t, n,
                                            derive_seed(seed, "direct"))
        labels = ("Z_x_plus_V", "Z_y_direct")
    elif pairing == "forest-vs-gillespie":
        dsec = cfg.section("discrete")
        params = discrete.DiscreteParams(dsec["lam"], dsec["mu"], f, dsec["m"],
                                         sec.get("t", dsec["t_max"]))
        t = params.t_max
        a = np.array([forest.grow_forest(params, derive_seed(seed, "cmp-forest", r))
                      .alive_count_at(t) for r in range(n)], dtype=float)
        b = discrete.population_values_at(params, t, n,
                                          derive_seed(seed, "cmp-chain")).astype(float)
        labels = ("forest", "chain")
    elif pairing == "increment":
        dsec = cfg.section("discrete")
        n_total = sec.get("n_total")
        if n_total is None:
            raise ConfigError("increment pairing needs [compare].n_total")
        params = discrete.DiscreteParams(dsec["lam"], dsec["mu"], f, dsec["m"],
                                         sec.get("t", dsec["t_max"]))
        t = params.t_max
        xm, v = discrete.increment_values_at(params, n_total, t, n, seed)
        a = (xm + v).astype(float)
        full = discrete.DiscreteParams(dsec["lam"], dsec["mu"], f, n_total, t)
        b = discrete.population_values_at(full, t, n,
                                          derive_seed(seed, "cmp-full")).astype(float)
        labels = ("X_m_plus_V", "X_n_direct")
    elif pairing == "rayknight-vs-diffusion":
        params = _rk_params(cfg)
        level = sec.get("level")
        if level is None:
            raise ConfigError("rayknight-vs-diffusion pairing needs [compare].level")
        dt = sec.get("dt", 1e-3)
        ens = rayknight.ray_knight_field(params, n, seed, [level])
        a = ens.values(0, 0)
        x = params.x_targets[0]
        env = cfg.section("rayknight").get("env_constant")
        if env is None:
            b = diffusion.feller_values_at(f, x, level, dt, n,
                                           derive_seed(seed, "cmp-sde"))
        else:
            b = diffusion.environment_values_at(f, x, float(env), level, dt, n,
                                                derive_seed(seed, "cmp-sde"))
        labels = ("local_time_field", "diffusion")
    elif pairing == "coupled-diffusion":
        dsec = cfg.section("diffusion")
        if "y" not in dsec:
            raise ConfigError("coupled-diffusion pairing needs [diffusion].y")
        t = sec.get("t", dsec["t_max"])
        z, v = diffusion.coupled_values_at(f, dsec["x"], dsec["y"], t,
                                           dsec["dt"], n, seed)
        a = z + v
        b = diffusion.feller_values_at(f, dsec["y"], t, dsec["dt"], n,
                                       derive_seed(seed, "cmp-direct"))
        labels = ("Z_x_plus_V", "Z_y_direct")
    else:  # unreachable: config validation catches it
        raise ConfigError(f"unknown pairing {pairing!r}")

    report = analysis.compare(a, b, sec["ks_threshold"])
    _write_csv(out / "samples_a.csv", labels[0], [a])
    _write_csv(out / "samples_b.csv", labels[1], [b])
    _write_json(out / "comparison.json", {
        "pairing": pairing, "labels": labels, "ks_statistic": report.ks_statistic,
        "threshold": report.threshold, "verdict": report.verdict,
        "mean_diff": report.mean_diff, "mean_diff_se": report.mean_diff_se,
        "n_a": report.n_a, "n_b": report.n_b,
    })
    return report.passed, {"ks_statistic": report.ks_statistic,
                           "verdict": report.verdict}, \
        ["samples_a.csv", "samples_b.csv", "comparison.json"]


_RUNNERS = {
    "classify": _run_classify,
    "discrete": _run_discrete,
    "renormalized": _run_renormalized,
    "forest": _run_forest,
    "diffusion": _run_diffusion,
    "rayknight": _run_rayknight,
    "convergence": _run_convergence,
    "compare": _run_compare,
}

_COMMAND_TO_MODEL = {
    "classify": "classify",
    "simulate-discrete": "discrete",
    "simulate-renormalized": "renormalized",
    "explore-forest": "forest",
    "simulate-sde": "diffusion",
    "ray-knight": "rayknight",
    "convergence": "convergence",
    "compare": "compare",
}


# ---------------------------------------------------------------------------
# plot-data emission from existing artifacts
# ---------------------------------------------------------------------------

def emit_plot_data(run_dir: Path) -> list:
    """Derive plot-ready CSVs from a finished run directory.

    Reads the manifest to find the experiment kind and emits one CSV per
    figure analogue; raises MissingArtifactError when inputs are absent.
    """
    run_dir = Path(run_dir)
    manifest_path = run_dir / "manifest.json"
    if not manifest_path.exists():
        raise MissingArtifactError(f"no manifest.json in {run_dir}")
    manifest = json.loads(manifest_path.read_text())
    model = manifest.get("command")
    written = []

    if model == "forest":
        forest_csv = run_dir / "forest.csv"
        expl_csv = run_dir / "exploration.csv"
        if not forest_csv.exists() or not expl_csv.exists():
            raise MissingArtifactError("forest run artifacts incomplete")
        # forest segments: one row per individual, planar x from the key order
        rows = []
        with open(forest_csv) as fh:
            next(fh)
            for line in fh:
                ident, parent, birth, death, key = line.rstrip("\n").split(",")
                num, _, den = key.partition("/")
                keyv = float(num) / float(den or 1)
                rows.append((keyv, int(ident), parent, float(birth), float(death)))
        rows.sort()
        planar_x = {ident: i + 1 for i, (_, ident, *_rest) in enumerate(rows)}
        cols = {"planar_x": [], "birth_time": [], "death_time": [], "parent_x": []}
        for keyv, ident, parent, birth, death in rows:
            cols["planar_x"].append(planar_x[ident])
            cols["birth_time"].append(birth)
            cols["death_time"].append(death)
            cols["parent_x"].append(planar_x[int(parent)] if parent else np.nan)
        _write_csv(run_dir / "plot_forest_segments.csv",
                   "planar_x,birth_time,death_time,parent_x",
                   [cols[k] for k in ("planar_x", "birth_time", "death_time",
                                      "parent_x")])
        written.append("plot_forest_segments.csv")

        # population vs (p/2) * exploration local time (the identity figure)
        cfg = manifest["config"]
        p = cfg.get("forest", {}).get("p", 2.0)
        expl = np.loadtxt(expl_csv, delimiter=",", skiprows=1, ndmin=2)
        path = forest.PolyPath(expl[:, 0], expl[:, 1], p)
        heights = np.unique(np.concatenate([[0.0], cols["birth_time"],
                                            cols["death_time"]]))
        levels = 0.5 * (heights[:-1] + heights[1:])
        if levels.size:
            counts = forest.crossing_counts(path, path.duration, levels)
            alive = np.array([
                sum(1 for b, d in zip(cols["birth_time"], cols["death_time"])
                    if b <= lv < d) for lv in levels], dtype=float)
            _write_csv(run_dir / "plot_population_vs_localtime.csv",
                       "level,population,half_p_local_time",
                       [levels, alive, counts / 2.0])
            written.append("plot_population_vs_localtime.csv")

    elif model == "rayknight":
        field_csv = run_dir / "field.csv"
        if not field_csv.exists():
            raise MissingArtifactError("rayknight run has no field.csv")
        data = np.loadtxt(field_csv, delimiter=",", skiprows=1, ndmin=2)
        if data.size == 0:
            raise MissingArtifactError("field.csv is empty (no reached targets)")
        cfg = manifest["config"]
        cfg_obj = ExperimentConfig(
            model="rayknight", master_seed=manifest["master_seed"],
            replicates=1, output_dir=None, sections=cfg,
            source_path=str(run_dir / "config.echo"), raw=cfg)
        f = cfg_obj.interaction()
        xs = np.unique(data[:, 0])
        frames = []
        for x in xs:
            sub = data[data[:, 0] == x]
            occupied = sub[sub[:, 2] > 0, 1]
            top = occupied.max() if occupied.size else sub[0, 1]
            sub = sub[sub[:, 1] <= top]
            marg = diffusion.feller_marginals_at(
                f, float(x), np.maximum(sub[:, 1], 1e-9), 1e-3, 400,
                derive_seed(manifest["master_seed"], "plot-ref"))
            med = np.median(marg, axis=1)
            frames.append(np.column_stack([sub[:, 1], sub[:, 2], med]))
        allf = np.vstack(frames)
        _write_csv(run_dir / "plot_field_vs_diffusion.csv",
                   "level,local_time,diffusion_quantile",
                   [allf[:, 0], allf[:, 1], allf[:, 2]])
        written.append("plot_field_vs_diffusion.csv")

    else:
        raise MissingArtifactError(
            f"emit-plots supports forest and rayknight runs, not {model!r}")
    return written


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="branchkit",
        description="simulation and verification experiments for interacting "
                    "branching processes")
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd in _COMMAND_TO_MODEL:
        p = sub.add_parser(cmd)
        p.add_argument("--config", required=True, help="TOML experiment config")
        p.add_argument("--seed", type=int, default=None,
                       help="override [experiment].master_seed")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--threads", type=int, default=None,
                       help="numba thread count (advisory)")
        p.add_argument("--replicates-override", type=int, default=None)
    p = sub.add_parser("emit-plots")
    p.add_argument("--out", required=True, help="finished run directory")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)

    if args.command == "emit-plots":
        try:
            written = emit_plot_data(Path(args.out))
        except MissingArtifactError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        print("\n".join(written))
        return 0

    model = _COMMAND_TO_MODEL[args.command]
    try:
        cfg = load_config(args.config)
        if cfg.model != model:
            raise ConfigError(
                f"config declares model {cfg.model!r} but subcommand is {args.command}")
        if args.seed is not None:
            cfg.master_seed = args.seed
        if args.replicates_override is not None:
            if args.replicates_override < 1:
                raise ConfigError("--replicates-override must be >= 1")
            cfg.replicates = args.replicates_override
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    if args.threads is not None:
        try:
            import numba
            numba.set_num_threads(max(1, args.threads))
        except Exception:
            pass

    out = Path(args.out or cfg.output_dir or f"branchkit-out/{model}")
    out.mkdir(parents=True, exist_ok=True)

    started = time.time()
    verdict = False
    results: dict = {}
    artifacts: list = []
    error = None
    caught: list = []
    try:
        with warnings.catch_warnings(record=True) as wrec:
            warnings.simplefilter("always")
            verdict, results, artifacts = _RUNNERS[model](cfg, out)
        caught = [str(w.message) for w in wrec]
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # manifest still gets written, flagged partial
        error = f"{type(exc).__name__}: {exc}"

    manifest = {
        "command": model,
        "package_version": __version__,
        "config": cfg.raw,
        "config_path": str(cfg.source_path),
        "master_seed": cfg.master_seed,
        "replicates": cfg.replicates,
        "wall_time_s": round(time.time() - started, 3),
        "verdict": "Pass" if verdict else "Fail",
        "results": results,
        "artifacts": artifacts,
        "warnings": caught,
        "partial": error is not None,
        "error": error,
    }
    _write_json(out / "manifest.json", manifest)
    if error is not None:
        print(f"error: {error}", file=sys.stderr)
        return 1
    print(f"{model}: {'Pass' if verdict else 'Fail'} "
          f"({', '.join(artifacts) or 'no artifacts'}) -> {out}")
    return 0 if verdict else 1


if __name__ == "__main__":
    sys.exit(main())
