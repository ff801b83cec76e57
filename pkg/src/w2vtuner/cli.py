"""Command-line entry point: reproducible batch workflows over the library.

Commands: ingest, split, sample, budget measure, train, eval, tune,
sample-tune, sweep, report. Every command writes its artifacts plus exactly
one run manifest into --out. Exit codes: 0 success, 1 usage/validation
error, 2 runtime failure.
"""

from __future__ import annotations

import json
import logging
import os
import sys
from pathlib import Path

import click

from . import budget as budget_mod
from . import corpus as corpus_mod
from . import optimizer as opt_mod
from .errors import ValidationError, W2vtError
from .evaluator import aggregate_runs, evaluate
from .manifest import build_manifest, write_manifest
from .trainer import DEFAULT_HP, HyperParams, load_embeddings, save_embeddings, train

logger = logging.getLogger(__name__)


def _workers_option(value: int | None) -> int:
    if value is not None:
        return value
    env = os.environ.get("W2VT_THREADS")
    if env:
        try:
            return int(env)
        except ValueError:
            raise ValidationError(f"W2VT_THREADS must be an integer, got {env!r}") from None
    return 1


def _parse_seeds(spec: str | None, runs: int, base: int = 1) -> list[int]:
    """Accepts '1..5', '1,2,3', or empty (base..base+runs-1)."""
    if not spec:
        return list(range(base, base + runs))
    if ".." in spec:
        lo, hi = spec.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(s) for s in spec.split(",") if s.strip()]


def _parse_grid(spec: str) -> list[float]:
    """Accepts 'start:stop:step' (inclusive) or a comma list."""
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ValidationError(f"grid must be start:stop:step, got {spec!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0 or stop < start:
            raise ValidationError(f"bad grid range {spec!r}")
        n = int(round((stop - start) / step)) + 1
        return [start + i * step for i in range(n) if start + i * step <= stop + 1e-9]
    return [float(s) for s in spec.split(",") if s.strip()]


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    p = Path(path)
    if not p.exists():
        raise ValidationError(f"config file does not exist: {p}")
    if p.suffix == ".toml":
        try:
            import tomllib  # py >= 3.11
        except ImportError:
            try:
                import tomli as tomllib  # type: ignore[no-redef]
            except ImportError:
                raise ValidationError(
                    "TOML config needs Python >= 3.11 (tomllib) or the tomli "
                    "package; use a JSON config instead") from None
        with p.open("rb") as fh:
            return tomllib.load(fh)
    return json.loads(p.read_text(encoding="utf-8"))


def _hp_from_flags(model, d, window, alpha, negatives, lr, epochs, t_ratio,
                   min_count) -> HyperParams:
    return HyperParams(model=model, dim=d, window=window, ns_exponent=alpha,
                       negatives=negatives, lr=lr, epochs=epochs,
                       t_ratio=t_ratio, min_count=min_count).validate()


def hp_options(f):
    f = click.option("--model", type=click.Choice(["sg", "cbow"]), default="sg",
                     show_default=True)(f)
    f = click.option("--d", "d", type=int, default=DEFAULT_HP.dim, show_default=True,
                     help="embedding dimension")(f)
    f = click.option("--L", "window", type=int, default=DEFAULT_HP.window,
                     show_default=True, help="max window")(f)
    f = click.option("--alpha", type=float, default=DEFAULT_HP.ns_exponent,
                     show_default=True, help="negative-sampling exponent")(f)
    f = click.option("--N", "negatives", type=int, default=DEFAULT_HP.negatives,
                     show_default=True, help="negatives per positive")(f)
    f = click.option("--lr", type=float, default=DEFAULT_HP.lr, show_default=True,
                     help="initial learning rate (linear decay)")(f)
    f = click.option("--epochs", type=int, default=DEFAULT_HP.epochs,
                     show_default=True)(f)
    f = click.option("--t-ratio", type=float, default=DEFAULT_HP.t_ratio,
                     show_default=True, help="downsampling threshold ratio")(f)
    f = click.option("--min-count", type=int, default=DEFAULT_HP.min_count,
                     show_default=True)(f)
    return f


@click.group()
def cli():
    """Train and tune sequence embeddings for next-event recommendation."""


@cli.command()
@click.option("--input", "input_path", required=True, type=click.Path())
@click.option("--format", "fmt", type=click.Choice(["plain", "timestamped"]),
              default="plain", show_default=True)
@click.option("--min-count", type=int, default=1, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
def ingest(input_path, fmt, min_count, out_dir):
    """Normalize a raw corpus file and report its statistics."""
    corp = corpus_mod.ingest(input_path, format=fmt, min_count=min_count)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    corpus_path = out / "corpus.txt"
    corpus_mod.write_plain(corp, corpus_path)
    lengths = [len(s) for s in corp.sequences]
    stats = {
        "n_entities": corp.vocab.size,
        "n_sequences": corp.n_sequences,
        "total_tokens": corp.total_tokens,
        "seq_len_min": int(min(lengths)),
        "seq_len_max": int(max(lengths)),
        "seq_len_mean": float(sum(lengths) / len(lengths)),
    }
    (out / "stats.json").write_text(json.dumps(stats, indent=2), encoding="utf-8")
    write_manifest(build_manifest(
        "ingest", {"format": fmt, "min_count": min_count}, [],
        [input_path], [corpus_path, out / "stats.json"]), out)
    click.echo(json.dumps(stats, indent=2))


@cli.command()
@click.option("--input", "input_path", required=True, type=click.Path())
@click.option("--format", "fmt", type=click.Choice(["plain", "timestamped"]),
              default="plain", show_default=True)
@click.option("--protocol", type=click.Choice(["last-token", "temporal"]),
              default="last-token", show_default=True)
@click.option("--test-start", type=int, default=None,
              help="unix seconds; required for --protocol temporal")
@click.option("--min-count", type=int, default=1, show_default=True)
@click.option("--seed", type=int, default=1, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
def split(input_path, fmt, protocol, test_start, min_count, seed, out_dir):
    """Build a train/test split and persist its manifest."""
    corp = corpus_mod.ingest(input_path, format=fmt, min_count=min_count)
    if protocol == "temporal":
        if test_start is None:
            raise ValidationError("--protocol temporal requires --test-start")
        sp = corpus_mod.split_temporal(corp, test_start)
    else:
        sp = corpus_mod.split_last_token(corp)
    manifest = corpus_mod.write_split(sp, out_dir, seed=seed)
    write_manifest(build_manifest(
        "split", {"format": fmt, "protocol": protocol, "test_start": test_start,
                  "min_count": min_count}, [seed],
        [input_path], [manifest["train_path"], manifest["test_pairs_path"]]),
        out_dir)
    click.echo(json.dumps({"n_test_pairs": int(len(sp.test_pairs)), **manifest}, indent=2))


@cli.command()
@click.option("--input", "input_path", required=True, type=click.Path())
@click.option("--fraction", type=float, required=True)
@click.option("--seed", type=int, default=1, show_default=True)
@click.option("--min-count", type=int, default=1, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
def sample(input_path, fraction, seed, min_count, out_dir):
    """Sample whole sequences uniformly without replacement."""
    corp = corpus_mod.ingest(input_path, format="plain", min_count=min_count)
    sampled = corpus_mod.sample_sequences(corp, fraction, seed=seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sample_path = out / "sample.txt"
    corpus_mod.write_plain(sampled, sample_path)
    write_manifest(build_manifest(
        "sample", {"fraction": fraction, "min_count": min_count}, [seed],
        [input_path], [sample_path]), out)
    click.echo(json.dumps({"n_sequences": sampled.n_sequences,
                           "n_entities": sampled.vocab.size,
                           "total_tokens": sampled.total_tokens}, indent=2))


@cli.group()
def budget():
    """Runtime-budget utilities."""


@budget.command("measure")
@click.option("--input", "input_path", required=True, type=click.Path())
@click.option("--workers", type=int, default=None)
@click.option("--epochs", type=int, default=5, show_default=True)
@click.option("--seed", type=int, default=1, show_default=True)
@click.option("--min-count", type=int, default=1, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
def budget_measure(input_path, workers, epochs, seed, min_count, out_dir):
    """Time a default-configuration run and persist it as the budget."""
    workers = _workers_option(workers)
    corp = corpus_mod.ingest(input_path, format="plain", min_count=min_count)
    rb = budget_mod.measure_default(corp, workers=workers, epochs=epochs, seed=seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rb.save(out / "budget.json")
    write_manifest(build_manifest(
        "budget measure", {"workers": workers, "epochs": epochs,
                           "min_count": min_count}, [seed],
        [input_path], [out / "budget.json"]), out)
    click.echo(json.dumps(rb.to_dict(), indent=2))


@cli.command("train")
@click.option("--input", "input_path", required=True, type=click.Path())
@hp_options
@click.option("--workers", type=int, default=None)
@click.option("--seed", type=int, default=1, show_default=True)
@click.option("--no-window-sampling", is_flag=True, default=False,
              help="train with the fixed max window (experimentation only)")
@click.option("--out", "out_dir", required=True, type=click.Path())
def cmd_train(input_path, model, d, window, alpha, negatives, lr, epochs,
              t_ratio, min_count, workers, seed, no_window_sampling, out_dir):
    """Train embeddings and write them in word2vec text format."""
    workers = _workers_option(workers)
    hp = _hp_from_flags(model, d, window, alpha, negatives, lr, epochs,
                        t_ratio, min_count)
    corp = corpus_mod.ingest(input_path, format="plain", min_count=min_count)
    emb, stats = train(corp, hp, workers=workers, seed=seed,
                       window_sampling=not no_window_sampling)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    emb_path = out / "embeddings.txt"
    save_embeddings(emb, emb_path)
    (out / "train_stats.json").write_text(
        json.dumps(stats.to_dict(), indent=2), encoding="utf-8")
    write_manifest(build_manifest(
        "train", {"hp": hp.to_dict(), "workers": workers,
                  "window_sampling": not no_window_sampling}, [seed],
        [input_path], [emb_path, out / "train_stats.json"]), out)
    click.echo(json.dumps({"embeddings": str(emb_path), **stats.to_dict()}, indent=2))


@cli.command("eval")
@click.option("--embeddings", "emb_path", type=click.Path(), default=None,
              help="evaluate an existing embedding file")
@click.option("--split", "split_path", required=True, type=click.Path(),
              help="split manifest (split.json)")
@click.option("--k", type=int, default=10, show_default=True)
@click.option("--mode", type=click.Choice(["exact", "approximate"]),
              default="exact", show_default=True)
@click.option("--keep-self-pairs", is_flag=True, default=False,
              help="count query==target pairs instead of discarding them")
@click.option("--runs", type=int, default=1, show_default=True,
              help="retrain-and-evaluate this many times (needs hp flags)")
@click.option("--seeds", "seeds_spec", type=str, default=None,
              help="e.g. 1..5 or 1,2,3; defaults to 1..runs")
@click.option("--input", "input_path", type=click.Path(), default=None,
              help="training corpus for --runs > 1 (defaults to the split's train)")
@hp_options
@click.option("--workers", type=int, default=None)
@click.option("--per-pair-csv", type=click.Path(), default=None)
@click.option("--out", "out_dir", required=True, type=click.Path())
def cmd_eval(emb_path, split_path, k, mode, keep_self_pairs, runs, seeds_spec,
             input_path, model, d, window, alpha, negatives, lr, epochs, t_ratio,
             min_count, workers, per_pair_csv, out_dir):
    """Score embeddings on next-event prediction (HR@k, NDCG@k)."""
    workers = _workers_option(workers)
    sp = corpus_mod.load_split(split_path, min_count=min_count)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    inputs = [split_path]
    if runs > 1:
        seeds = _parse_seeds(seeds_spec, runs)
        hp = _hp_from_flags(model, d, window, alpha, negatives, lr, epochs,
                            t_ratio, min_count)
        corp = (corpus_mod.ingest(input_path, format="plain", min_count=min_count)
                if input_path else sp.train)
        if input_path:
            inputs.append(input_path)
        results = []
        for s in seeds:
            emb, _ = train(corp, hp, workers=workers, seed=s)
            results.append(evaluate(emb, sp.test_pairs, k=k, mode=mode,
                                    keep_self_pairs=keep_self_pairs))
        agg = aggregate_runs(results)
        payload = {**agg.to_dict(), "k": k, "mode": mode,
                   "n_pairs": results[0].n_pairs}
        seeds_used = seeds
    else:
        if emb_path is None:
            raise ValidationError("--embeddings is required unless --runs > 1")
        emb = load_embeddings(emb_path)
        train_tokens = set(sp.train.vocab.token_to_id)
        emb_tokens = set(emb.vocab.token_to_id)
        if not train_tokens <= emb_tokens:
            raise ValidationError(
                f"embeddings at {emb_path} do not cover the split vocabulary "
                f"({len(train_tokens - emb_tokens)} training tokens missing)")
        # re-express pair ids in the embedding's id space
        remap = emb.vocab.token_to_id
        id_to_token = sp.train.vocab.id_to_token
        pairs = [[remap[id_to_token[q]], remap.get(id_to_token[t], -1) if t >= 0 else -1]
                 for q, t in sp.test_pairs]
        import numpy as np

        res = evaluate(emb, np.asarray(pairs, dtype=np.int64), k=k, mode=mode,
                       keep_self_pairs=keep_self_pairs)
        payload = {**res.to_dict(), "mode": mode}
        if per_pair_csv:
            import csv

            with Path(per_pair_csv).open("w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh)
                w.writerow(["query", "target", "rank_or_-1"])
                kept = [(q, t) for q, t in pairs if q != t or keep_self_pairs]
                for (q, t), r in zip(kept, res.per_pair_ranks):
                    w.writerow([emb.vocab.id_to_token[q],
                                emb.vocab.id_to_token[t] if t >= 0 else "<unseen>",
                                int(r)])
        inputs.append(emb_path)
        seeds_used = []
    (out / "eval.json").write_text(json.dumps(payload, indent=2), encoding="utf-8")
    write_manifest(build_manifest(
        "eval", {"k": k, "mode": mode, "keep_self_pairs": keep_self_pairs,
                 "runs": runs}, seeds_used, inputs, [out / "eval.json"]), out)
    click.echo(json.dumps(payload, indent=2))


def _resolve_space(space_name: str | None, cfg: dict) -> opt_mod.SearchSpace:
    if space_name:
        return opt_mod.SearchSpace.preset(space_name)
    if "space" in cfg:
        sp = cfg["space"]
        if isinstance(sp, str):
            return opt_mod.SearchSpace.preset(sp)
        return opt_mod.SearchSpace.from_dict(sp)
    return None  # caller picks the mode default


def _stop_from(cfg: dict, trial_cap: int | None) -> opt_mod.StopConfig:
    stop = opt_mod.StopConfig(**cfg.get("stop", {}))
    if trial_cap is not None:
        stop.trial_cap = trial_cap
    return stop


@cli.command("tune")
@click.option("--input", "input_path", required=True, type=click.Path())
@click.option("--mode", type=click.Choice(["constrained", "unconstrained"]),
              default=None)
@click.option("--space", "space_name",
              type=click.Choice(["constrained", "unconstrained"]), default=None)
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="JSON (or TOML on py>=3.11) search configuration")
@click.option("--budget", "budget_path", type=click.Path(), default=None,
              help="existing budget.json; measured fresh when omitted")
@click.option("--model-types", type=str, default="sg,cbow", show_default=True)
@click.option("--trial-cap", type=int, default=None)
@click.option("--protocol", type=click.Choice(["last-token"]),
              default="last-token", show_default=True)
@click.option("--holdout-frac", type=float, default=0.0, show_default=True,
              help="reserve this fraction of test pairs from tuning and "
                   "report incumbents against them")
@click.option("--min-count", type=int, default=1, show_default=True)
@click.option("--workers", type=int, default=None)
@click.option("--seed", type=int, default=1, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
def cmd_tune(input_path, mode, space_name, config_path, budget_path, model_types,
             trial_cap, protocol, holdout_frac, min_count, workers, seed, out_dir):
    """Hyperparameter search; resumable through its trial log."""
    workers = _workers_option(workers)
    cfg = _load_config_file(config_path)
    mode = mode or cfg.get("mode", "constrained")
    seed = seed if seed != 1 else cfg.get("seed", seed)
    space = _resolve_space(space_name, cfg) or opt_mod.SearchSpace.preset(mode)
    stop = _stop_from(cfg, trial_cap)
    types = tuple(m.strip() for m in model_types.split(",") if m.strip())

    corp = corpus_mod.ingest(input_path, format="plain", min_count=min_count)
    sp = corpus_mod.split_last_token(corp)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    rb = cost = None
    if mode == "constrained":
        # reuse persisted artifacts so a resumed run plans identical epochs
        if budget_path:
            rb = budget_mod.RuntimeBudget.load(budget_path)
        elif (out / "budget.json").exists():
            rb = budget_mod.RuntimeBudget.load(out / "budget.json")
        else:
            rb = budget_mod.measure_default(sp.train, workers=workers, seed=seed)
            rb.save(out / "budget.json")
        if (out / "cost_model.json").exists():
            cost = budget_mod.CostModel.load(out / "cost_model.json")
        else:
            cost = budget_mod.fit_cost_model(sp.train, workers=workers, seed=seed)
            cost.save(out / "cost_model.json")

    log_config = {"mode": mode, "space": space.to_dict(), "seed": seed,
                  "model_types": list(types), "stop": stop.to_dict(),
                  "protocol": protocol, "holdout_frac": holdout_frac}
    log = opt_mod.TrialLog(out / "trials.jsonl", log_config)
    result = opt_mod.run_search(sp.train, sp, space, mode, budget=rb,
                                cost_model=cost, model_types=types,
                                workers=workers, seed=seed, stop=stop,
                                trial_log=log, holdout_frac=holdout_frac)
    report = opt_mod.make_report(result, title=f"Tune ({mode})")
    if result.holdout:
        (out / "holdout.json").write_text(json.dumps(result.holdout, indent=2),
                                          encoding="utf-8")
    (out / "report.md").write_text(report, encoding="utf-8")
    opt_mod.write_trials_csv(result.history, out / "trials.csv")
    write_manifest(build_manifest(
        "tune", log_config, [seed], [input_path],
        [out / "trials.jsonl", out / "report.md", out / "trials.csv"]), out)
    click.echo(report)


@cli.command("sample-tune")
@click.option("--input", "input_path", required=True, type=click.Path())
@click.option("--fraction", type=float, default=0.1, show_default=True)
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--model-types", type=str, default="sg,cbow", show_default=True)
@click.option("--trial-cap", type=int, default=None)
@click.option("--runs", type=int, default=5, show_default=True,
              help="re-train seeds for the full-corpus evaluation")
@click.option("--min-count", type=int, default=1, show_default=True)
@click.option("--workers", type=int, default=None)
@click.option("--seed", type=int, default=1, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
def cmd_sample_tune(input_path, fraction, config_path, model_types, trial_cap,
                    runs, min_count, workers, seed, out_dir):
    """Tune on a sequence sample, evaluate the winners on the full corpus."""
    workers = _workers_option(workers)
    cfg = _load_config_file(config_path)
    stop = _stop_from(cfg, trial_cap)
    space = _resolve_space(None, cfg) or opt_mod.SearchSpace.constrained()
    types = tuple(m.strip() for m in model_types.split(",") if m.strip())
    corp = corpus_mod.ingest(input_path, format="plain", min_count=min_count)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    log_config = {"mode": "sample-transfer", "fraction": fraction,
                  "space": space.to_dict(), "seed": seed,
                  "model_types": list(types), "stop": stop.to_dict()}
    log = opt_mod.TrialLog(out / "trials.jsonl", log_config)
    report = opt_mod.sample_transfer(
        corp, fraction=fraction, space=space,
        seeds=tuple(range(1, runs + 1)), workers=workers, seed=seed,
        stop=stop, model_types=types, trial_log=log)
    md = opt_mod.make_transfer_report(report)
    (out / "transfer_report.md").write_text(md, encoding="utf-8")
    opt_mod.write_transfer_csv(report, out / "transfer.csv")
    report.sample_budget.save(out / "sample_budget.json")
    report.full_budget.save(out / "full_budget.json")
    write_manifest(build_manifest(
        "sample-tune", log_config, [seed] + list(range(1, runs + 1)),
        [input_path],
        [out / "trials.jsonl", out / "transfer_report.md", out / "transfer.csv"]),
        out)
    click.echo(md)


@cli.command("sweep")
@click.option("--input", "input_path", required=True, type=click.Path())
@click.option("--param", required=True,
              type=click.Choice(["dim", "window", "ns_exponent", "lr",
                                 "negatives", "epochs", "d", "L", "alpha", "N"]))
@click.option("--grid", required=True, type=str,
              help="start:stop:step (inclusive) or comma-separated values")
@hp_options
@click.option("--runs", type=int, default=3, show_default=True)
@click.option("--workers", type=int, default=None)
@click.option("--out", "out_dir", required=True, type=click.Path())
def cmd_sweep(input_path, param, grid, model, d, window, alpha, negatives, lr,
              epochs, t_ratio, min_count, runs, workers, out_dir):
    """Linear sweep of one hyperparameter around a center configuration."""
    workers = _workers_option(workers)
    aliases = {"d": "dim", "L": "window", "alpha": "ns_exponent", "N": "negatives"}
    param = aliases.get(param, param)
    center = _hp_from_flags(model, d, window, alpha, negatives, lr, epochs,
                            t_ratio, min_count)
    grid_values = _parse_grid(grid)
    corp = corpus_mod.ingest(input_path, format="plain", min_count=min_count)
    sp = corpus_mod.split_last_token(corp)
    points = opt_mod.linear_sweep(center, param, grid_values, sp.train, sp,
                                  seeds=tuple(range(1, runs + 1)),
                                  workers=workers)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    opt_mod.write_sweep_csv(points, param, out / "sweep.csv")
    write_manifest(build_manifest(
        "sweep", {"param": param, "grid": grid_values, "center": center.to_dict(),
                  "runs": runs}, list(range(1, runs + 1)),
        [input_path], [out / "sweep.csv"]), out)
    click.echo((out / "sweep.csv").read_text(encoding="utf-8"))


@cli.command("report")
@click.option("--trials", "trials_path", required=True, type=click.Path())
@click.option("--out", "out_dir", required=True, type=click.Path())
def cmd_report(trials_path, out_dir):
    """Regenerate the Markdown report and CSV from a trial log."""
    p = Path(trials_path)
    if not p.exists():
        raise ValidationError(f"trial log does not exist: {p}")
    with p.open("r", encoding="utf-8") as fh:
        lines = [json.loads(ln) for ln in fh if ln.strip()]
    if not lines or lines[0].get("type") != "header":
        raise ValidationError(f"{p} is not a trial log (missing header)")
    header = lines[0]
    records = [opt_mod.TrialRecord.from_dict(d) for d in lines[1:]]
    space = opt_mod.SearchSpace.from_dict(header["config"]["space"])
    best: dict[str, opt_mod.TrialRecord | None] = {}
    for r in records:
        if r.eligible and (r.model not in best or best[r.model] is None
                           or r.objective > best[r.model].objective):
            best[r.model] = r
    result = opt_mod.SearchResult(history=records, best=best,
                                  mode=header["config"].get("mode", "?"), space=space)
    md = opt_mod.make_report(result, title="Search report")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.md").write_text(md, encoding="utf-8")
    opt_mod.write_trials_csv(records, out / "trials.csv")
    write_manifest(build_manifest(
        "report", {"config": header["config"]}, [], [trials_path],
        [out / "report.md", out / "trials.csv"]), out)
    click.echo(md)


def main(argv: list[str] | None = None) -> int:
    """Entry point with explicit exit codes (0 ok, 1 usage, 2 runtime)."""
    logging.basicConfig(level=os.environ.get("W2VT_LOGLEVEL", "WARNING"),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except ValidationError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except click.exceptions.Abort:
        return 1
    except W2vtError as exc:
        click.echo(f"runtime failure: {exc}", err=True)
        return 2
    except OSError as exc:
        click.echo(f"runtime failure: {exc}", err=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())
