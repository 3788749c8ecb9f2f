"""Command-line pipeline: ingest -> profile -> cluster -> clickbait -> estimate.

Every command is deterministic given its inputs and --seed, writes outputs
atomically, and follows one exit-code contract: 0 success, 1 runtime or data
error, 2 usage error. A JSON config file (--config or $EDITLIFT_CONFIG)
supplies defaults; explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import causal, clickbait, cluster, corpus as corpus_mod, embedding, synthbench, textsim

CONFIG_ENV_VAR = "EDITLIFT_CONFIG"


class CommandError(Exception):
    """Runtime failure that should exit with status 1."""


def _atomic_write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_json(path: Path, payload) -> None:
    _atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _load_config(args) -> dict:
    path = getattr(args, "config", None) or os.environ.get(CONFIG_ENV_VAR)
    if not path:
        return {}
    p = Path(path)
    if not p.is_file():
        raise CommandError(f"config file not found: {p}")
    try:
        cfg = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CommandError(f"config file {p} is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise CommandError(f"config file {p} must hold a JSON object")
    return cfg


def _setting(args, cfg: dict, name: str, default):
    value = getattr(args, name, None)
    if value is not None:
        return value
    if name in cfg and cfg[name] is not None:
        return cfg[name]
    return default


def _load_inputs(args, cfg, need_embeddings=True):
    corpus_path = _setting(args, cfg, "corpus", None)
    if corpus_path is None:
        raise CommandError("no corpus given (use --corpus or the config file)")
    try:
        loaded = corpus_mod.load_corpus(corpus_path, getattr(args, "format", None) or "jsonl")
    except corpus_mod.CorpusError as exc:
        raise CommandError(str(exc)) from None
    table = None
    if need_embeddings:
        emb_path = _setting(args, cfg, "embeddings", None)
        if emb_path is None:
            raise CommandError("no embedding table given (use --embeddings or the config file)")
        try:
            table = embedding.load_table(emb_path)
        except (OSError, embedding.EmbeddingError) as exc:
            raise CommandError(str(exc)) from None
    return loaded, table


# ---------------------------------------------------------------------------
# Commands


def cmd_ingest(args) -> int:
    cfg = _load_config(args)
    loaded, _ = _load_inputs(args, cfg, need_embeddings=False)
    print(f"loaded {len(loaded)} records from {loaded.source_path} "
          f"({len(loaded.rejects)} rejected)")
    for reject in loaded.rejects:
        print(f"  line {reject.line_no}: {reject.reason}")
    out = getattr(args, "out", None)
    if out:
        _write_json(Path(out), {
            "source": loaded.source_path,
            "records": len(loaded),
            "outlets": {o: sum(1 for r in loaded if r.outlet == o) for o in loaded.outlets()},
            "rejects": [{"line": r.line_no, "reason": r.reason} for r in loaded.rejects],
        })
    return 0


def _distribution_stats(values) -> dict:
    arr = np.asarray(values, dtype=np.float64)
    q1, med, q3 = np.percentile(arr, [25, 50, 75])
    return {
        "mean": float(arr.mean()),
        "median": float(med),
        "q1": float(q1),
        "q3": float(q3),
        "min": float(arr.min()),
        "max": float(arr.max()),
    }


def cmd_profile(args) -> int:
    cfg = _load_config(args)
    loaded, table = _load_inputs(args, cfg)
    out_dir = Path(_setting(args, cfg, "out", "editlift-out"))
    profiles = textsim.profile(loaded, table)

    out_dir.mkdir(parents=True, exist_ok=True)
    tmp_csv = out_dir / "profiles.csv"
    textsim.profiles_to_csv(profiles, tmp_csv)

    by_outlet: dict[str, list[textsim.EditProfile]] = {}
    record_outlet = {r.id: r.outlet for r in loaded}
    for p in profiles:
        by_outlet.setdefault(record_outlet[p.record_id], []).append(p)

    summary = {"outlets": {}, "pairwise_tests": []}
    for outlet, plist in by_outlet.items():
        summary["outlets"][outlet] = {
            "records": len(plist),
            "mirroring_fraction": corpus_mod.mirroring_fraction(loaded, outlet),
            "edit_distance": _distribution_stats([p.edit_distance for p in plist]),
            "embedding_similarity": _distribution_stats(
                [p.embedding_similarity for p in plist]),
        }
    outlets = sorted(by_outlet)
    for i, a in enumerate(outlets):
        for b in outlets[i + 1:]:
            for measure in ("edit_distance", "embedding_similarity"):
                xa = [getattr(p, measure) for p in by_outlet[a]]
                xb = [getattr(p, measure) for p in by_outlet[b]]
                result = textsim.mann_whitney_u(xa, xb)
                summary["pairwise_tests"].append({
                    "outlet_a": a,
                    "outlet_b": b,
                    "measure": measure,
                    "u_statistic": result.statistic,
                    "p_value": result.p_value,
                })
    _write_json(out_dir / "profile_summary.json", summary)
    print(f"profiled {len(profiles)} records -> {out_dir / 'profiles.csv'}")
    return 0


def cmd_cluster(args) -> int:
    cfg = _load_config(args)
    out_dir = Path(_setting(args, cfg, "out", "editlift-out"))
    profile_path = Path(getattr(args, "profiles", None) or out_dir / "profiles.csv")
    if not profile_path.is_file():
        raise CommandError(f"profile CSV not found: {profile_path} (run `profile` first)")
    profiles = textsim.profiles_from_csv(profile_path)
    loaded, _ = _load_inputs(args, cfg, need_embeddings=False)
    seed = int(_setting(args, cfg, "seed", 0))

    pts = [[p.embedding_similarity, p.edit_distance] for p in profiles]
    k = getattr(args, "k", None)
    if k is None:
        k_max = int(_setting(args, cfg, "k_max", 8))
        try:
            k = cluster.elbow_select(pts, k_max=k_max, seed=seed)
        except ValueError as exc:
            raise CommandError(str(exc)) from None
        print(f"elbow selected k={k}")
    try:
        model, assignments = cluster.fit_profiles(profiles, k=int(k), seed=seed)
    except ValueError as exc:
        raise CommandError(str(exc)) from None

    profiles = cluster.apply_assignments(profiles, assignments)
    textsim.profiles_to_csv(profiles, profile_path)
    cluster.save_model(model, out_dir / "cluster_model.json")
    fractions = cluster.cluster_fractions(assignments, loaded, k=model.k)
    _write_json(out_dir / "cluster_fractions.json", fractions)
    print(f"k={model.k} inertia={model.inertia:.6f} -> {out_dir / 'cluster_model.json'}")
    return 0


def cmd_clickbait(args) -> int:
    cfg = _load_config(args)
    out_dir = Path(_setting(args, cfg, "out", "editlift-out"))
    seed = int(_setting(args, cfg, "seed", 0))

    if args.action == "train":
        data_path = getattr(args, "train_data", None)
        if data_path is None:
            raise CommandError("clickbait train needs --train-data CSV (text,label)")
        try:
            dataset = clickbait.load_labeled_csv(data_path)
            model, f1 = clickbait.train(
                dataset,
                split_seed=seed,
                epochs=int(_setting(args, cfg, "epochs", 10)),
            )
        except (OSError, ValueError) as exc:
            raise CommandError(str(exc)) from None
        out_dir.mkdir(parents=True, exist_ok=True)
        model_path = Path(getattr(args, "model", None) or out_dir / "clickbait_model.bin")
        clickbait.save_model(model, model_path)
        print(f"held-out F1: {f1:.4f}")
        print(f"model -> {model_path}")
        return 0

    # score
    model_path = getattr(args, "model", None) or out_dir / "clickbait_model.bin"
    if not Path(model_path).is_file():
        raise CommandError(f"clickbait model not found: {model_path} (train first)")
    profile_path = Path(getattr(args, "profiles", None) or out_dir / "profiles.csv")
    if not profile_path.is_file():
        raise CommandError(f"profile CSV not found: {profile_path} (run `profile` first)")
    loaded, _ = _load_inputs(args, cfg, need_embeddings=False)
    model = clickbait.load_model(model_path)
    profiles = textsim.profiles_from_csv(profile_path)
    profiles = clickbait.score_profiles(model, loaded, profiles)
    textsim.profiles_to_csv(profiles, profile_path)

    tables = {}
    for outlet in loaded.outlets():
        shift = clickbait.conditional_shift_table(profiles, loaded, outlet)
        tables[outlet] = {
            "p_nc_given_c": shift.p_nc_given_c,
            "p_c_given_nc": shift.p_c_given_nc,
            "n_headline_c": shift.n_headline_c,
            "n_headline_nc": shift.n_headline_nc,
        }
    _write_json(out_dir / "clickbait_shift.json", tables)
    print(f"scored {len(profiles)} records -> {profile_path}")
    return 0


def _run_one_scenario(payload):
    loaded, profiles, scenario, table, seed, run_cfg = payload
    return causal.run_scenario(loaded, profiles, scenario, table, seed=seed, config=run_cfg)


def cmd_estimate(args) -> int:
    cfg = _load_config(args)
    scenario_defs = cfg.get("scenarios", [])
    if not scenario_defs:
        print("error: no scenarios configured (config key 'scenarios')", file=sys.stderr)
        return 2
    loaded, table = _load_inputs(args, cfg)
    out_dir = Path(_setting(args, cfg, "out", "editlift-out"))
    profile_path = Path(getattr(args, "profiles", None) or out_dir / "profiles.csv")
    if not profile_path.is_file():
        raise CommandError(f"profile CSV not found: {profile_path} (run `profile` first)")
    profiles = textsim.profiles_from_csv(profile_path)
    seed = int(_setting(args, cfg, "seed", 0))
    jobs = int(_setting(args, cfg, "jobs", 1))

    run_cfg = causal.CausalConfig(
        knn=int(_setting(args, cfg, "knn", causal.DEFAULT_KNN)),
        alpha=float(_setting(args, cfg, "alpha", causal.DEFAULT_ALPHA)),
        tau=float(_setting(args, cfg, "tau", causal.DEFAULT_TAU)),
        min_group=int(_setting(args, cfg, "min_group", causal.DEFAULT_MIN_GROUP)),
        epochs=int(cfg.get("propensity_epochs", causal.CausalConfig.epochs)),
    )
    try:
        scenarios = [causal.Scenario.from_dict(d) for d in scenario_defs]
    except (KeyError, causal.ScenarioError) as exc:
        raise CommandError(f"bad scenario definition: {exc}") from None

    payloads = [(loaded, profiles, s, table, seed, run_cfg) for s in scenarios]
    results: list[list[causal.EateReport] | causal.ScenarioError] = []
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_run_one_scenario, p) for p in payloads]
            for future, scenario in zip(futures, scenarios):
                try:
                    results.append(future.result())
                except causal.ScenarioError as exc:
                    results.append(exc)
    else:
        for payload in payloads:
            try:
                results.append(_run_one_scenario(payload))
            except causal.ScenarioError as exc:
                results.append(exc)

    reports = []
    skipped = []
    for scenario, result in zip(scenarios, results):
        if isinstance(result, causal.ScenarioError):
            print(f"warning: skipped scenario {scenario.name!r}: {result}", file=sys.stderr)
            skipped.append({"scenario": scenario.name, "reason": str(result)})
        else:
            reports.extend(result)

    out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(out_dir / "eate_reports.json", {
        "reports": [causal.report_to_dict(r) for r in reports],
        "skipped": skipped,
    })
    lines = ["scenario,metric,mean_eate,ci_low,ci_high,discarded,n_treatment,n_control,"
             + ",".join(f"fold_{i + 1}" for i in range(causal.N_FOLDS))]
    for r in reports:
        lines.append(",".join(
            [r.scenario, r.metric, repr(r.mean_eate), repr(r.ci_low), repr(r.ci_high),
             "true" if r.discarded else "false", str(r.n_treatment), str(r.n_control)]
            + [repr(v) for v in r.fold_eates]
        ))
    _atomic_write_text(out_dir / "eate_reports.csv", "\n".join(lines) + "\n")
    print(f"{len(reports)} reports ({len(skipped)} scenarios skipped) -> {out_dir}")
    return 0


def cmd_synth(args) -> int:
    cfg = _load_config(args)
    out_dir = Path(_setting(args, cfg, "out", "editlift-out"))
    seed = int(_setting(args, cfg, "seed", 0))
    try:
        if getattr(args, "spec", None):
            spec = synthbench.load_spec(args.spec)
        else:
            spec = synthbench.confounded_spec(
                n_records=int(_setting(args, cfg, "n_records", 5000)),
                effect_likes=float(_setting(args, cfg, "effect_likes", 0.0)),
                seed=seed,
            )
        generated, truth = synthbench.generate(spec)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        raise CommandError(f"invalid synthetic spec: {exc}") from None

    out_dir.mkdir(parents=True, exist_ok=True)
    corpus_mod.save_corpus(generated, out_dir / "corpus.jsonl")
    synthbench.save_truth(truth, out_dir / "truth.jsonl")
    table = synthbench.synthetic_table(spec, seed=spec.seed + 7919)
    embedding.save_table(table, out_dir / "vectors.txt")
    print(f"generated {len(generated)} records -> {out_dir / 'corpus.jsonl'}")
    return 0


# ---------------------------------------------------------------------------
# Argument wiring


def _add_common(parser, *, embeddings=False):
    parser.add_argument("--corpus", help="paired corpus file (JSONL unless --format csv)")
    parser.add_argument("--format", choices=["jsonl", "csv"], help="corpus file format")
    if embeddings:
        parser.add_argument("--embeddings", help="word-vector text file")
    parser.add_argument("--out", help="output directory (or file for `ingest`)")
    parser.add_argument("--seed", type=int, help="seed for every random choice")
    parser.add_argument("--config", help=f"JSON config file (default ${CONFIG_ENV_VAR})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="editlift",
        description="Headline-editing analytics and matched engagement-effect estimation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a paired corpus file")
    _add_common(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("profile", help="edit-distance/similarity profiles and summaries")
    _add_common(p, embeddings=True)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("cluster", help="k-means++ editing-style clusters")
    _add_common(p)
    p.add_argument("--profiles", help="profile CSV (default <out>/profiles.csv)")
    p.add_argument("--k", type=int, help="cluster count (omit for elbow selection)")
    p.add_argument("--k-max", dest="k_max", type=int, help="elbow search bound")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("clickbait", help="train or apply the clickbait scorer")
    p.add_argument("action", choices=["train", "score"])
    _add_common(p)
    p.add_argument("--train-data", dest="train_data", help="labeled CSV text,label")
    p.add_argument("--model", help="model file (output of train, input of score)")
    p.add_argument("--profiles", help="profile CSV (default <out>/profiles.csv)")
    p.add_argument("--epochs", type=int, help="training epochs")
    p.set_defaults(func=cmd_clickbait)

    p = sub.add_parser("estimate", help="run configured scenarios end to end")
    _add_common(p, embeddings=True)
    p.add_argument("--profiles", help="profile CSV (default <out>/profiles.csv)")
    p.add_argument("--knn", type=int, help="matched controls per treatment unit")
    p.add_argument("--alpha", type=float, help="balance-gate sensitivity")
    p.add_argument("--tau", type=float, help="balance-gate floor")
    p.add_argument("--min-group", dest="min_group", type=int, help="minimum units per arm")
    p.add_argument("--jobs", type=int, help="scenarios to run concurrently")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("synth", help="generate a synthetic benchmark corpus")
    _add_common(p)
    p.add_argument("--spec", help="generator spec JSON (omit for the confounded preset)")
    p.add_argument("--n-records", dest="n_records", type=int, help="records to generate")
    p.add_argument("--effect-likes", dest="effect_likes", type=float,
                   help="additive treated-likes effect in the preset")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CommandError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (corpus_mod.CorpusError, embedding.EmbeddingError, causal.ScenarioError,
            ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
