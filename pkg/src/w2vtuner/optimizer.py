"""Hyperparameter search: Sobol initialization, GP-EI Bayesian optimization,
runtime-budget-constrained loops, and sample-then-transfer.

Skipgram and CBOW are searched by independent GP runs over the five-dim
space (dim, window, ns_exponent, lr, negatives); the learning rate lives on
a log scale and integer dimensions are relaxed to the unit cube and rounded
at evaluation. The objective is HR@10 on the split's test pairs; NDCG@10 is
recorded alongside but not optimized.
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
from scipy.optimize import minimize
from scipy.stats import norm
from sklearn.gaussian_process import GaussianProcessRegressor
from sklearn.gaussian_process.kernels import ConstantKernel, Matern, WhiteKernel

from .budget import (CostModel, RuntimeBudget, epochs_for_budget,
                     fit_cost_model, measure_default)
from .corpus import Corpus, EvalSplit, sample_sequences, split_last_token
from .errors import ValidationError, W2vtError
from .evaluator import AggregateResult, aggregate_runs, evaluate
from .sobol import sobol_points
from .trainer import DEFAULT_HP, EmbeddingTrainer, HyperParams, train

logger = logging.getLogger(__name__)

__all__ = [
    "Dimension",
    "SearchSpace",
    "TrialRecord",
    "Surrogate",
    "StopConfig",
    "SearchResult",
    "expected_improvement",
    "suggest",
    "run_search",
    "sample_transfer",
    "linear_sweep",
    "TrialLog",
    "make_report",
]


@dataclass(frozen=True)
class Dimension:
    name: str
    kind: str  # 'int' | 'float'
    lo: float
    hi: float
    transform: str = "linear"  # 'linear' | 'log'

    def to_unit(self, value: float) -> float:
        if self.kind == "int":
            return (value - self.lo + 0.5) / (self.hi - self.lo + 1.0)
        if self.transform == "log":
            return (np.log(value) - np.log(self.lo)) / (np.log(self.hi) - np.log(self.lo))
        return (value - self.lo) / (self.hi - self.lo)

    def from_unit(self, x: float) -> float:
        x = min(max(x, 0.0), 1.0)
        if self.kind == "int":
            v = int(np.floor(self.lo + x * (self.hi - self.lo + 1.0)))
            return min(max(v, int(self.lo)), int(self.hi))
        if self.transform == "log":
            return float(np.exp(np.log(self.lo) + x * (np.log(self.hi) - np.log(self.lo))))
        return float(self.lo + x * (self.hi - self.lo))


@dataclass
class SearchSpace:
    """Bounds and transforms for the five searched hyperparameters."""

    dims: list[Dimension]
    name: str = "custom"

    @classmethod
    def unconstrained(cls) -> "SearchSpace":
        return cls(name="unconstrained", dims=[
            Dimension("dim", "int", 10, 500),
            Dimension("window", "int", 1, 200),
            Dimension("ns_exponent", "float", -1.0, 1.0),
            Dimension("lr", "float", 0.001, 0.1, transform="log"),
            Dimension("negatives", "int", 1, 200),
        ])

    @classmethod
    def constrained(cls) -> "SearchSpace":
        return cls(name="constrained", dims=[
            Dimension("dim", "int", 10, 200),
            Dimension("window", "int", 1, 40),
            Dimension("ns_exponent", "float", -1.0, 1.0),
            Dimension("lr", "float", 0.001, 0.1, transform="log"),
            Dimension("negatives", "int", 1, 40),
        ])

    @classmethod
    def preset(cls, name: str) -> "SearchSpace":
        if name == "unconstrained":
            return cls.unconstrained()
        if name == "constrained":
            return cls.constrained()
        raise ValidationError(f"unknown space preset {name!r}")

    @property
    def n_dims(self) -> int:
        return len(self.dims)

    def from_unit(self, x: np.ndarray, model: str) -> HyperParams:
        values = {d.name: d.from_unit(float(xi)) for d, xi in zip(self.dims, x)}
        return HyperParams(
            model=model,
            dim=int(values["dim"]),
            window=int(values["window"]),
            ns_exponent=float(values["ns_exponent"]),
            lr=float(values["lr"]),
            negatives=int(values["negatives"]),
        ).validate()

    def to_unit(self, hp: HyperParams) -> np.ndarray:
        by_name = {"dim": hp.dim, "window": hp.window, "ns_exponent": hp.ns_exponent,
                   "lr": hp.lr, "negatives": hp.negatives}
        return np.array([d.to_unit(by_name[d.name]) for d in self.dims])

    def to_dict(self) -> dict:
        return {"name": self.name,
                "dims": [{"name": d.name, "kind": d.kind, "lo": d.lo, "hi": d.hi,
                          "transform": d.transform} for d in self.dims]}

    @classmethod
    def from_dict(cls, d: dict) -> "SearchSpace":
        return cls(name=d.get("name", "custom"),
                   dims=[Dimension(**dd) for dd in d["dims"]])


@dataclass
class TrialRecord:
    trial_index: int
    model: str
    hp: HyperParams
    objective: float | None  # HR@10 on the tuning pairs
    ndcg: float | None
    runtime_s: float
    over_budget: bool
    seed: int
    timestamp: str
    status: str = "ok"  # 'ok' | 'failed'
    source: str = "sobol"  # 'sobol' | 'ei' | 'fallback'
    epochs_run: int = 0

    @property
    def eligible(self) -> bool:
        """Counts toward the incumbent: completed and within budget."""
        return self.status == "ok" and not self.over_budget and self.objective is not None

    def to_dict(self) -> dict:
        return {"type": "trial", "trial_index": self.trial_index, "model": self.model,
                "hp": self.hp.to_dict(), "objective": self.objective, "ndcg": self.ndcg,
                "runtime_s": self.runtime_s, "over_budget": self.over_budget,
                "seed": self.seed, "timestamp": self.timestamp, "status": self.status,
                "source": self.source, "epochs_run": self.epochs_run}

    @classmethod
    def from_dict(cls, d: dict) -> "TrialRecord":
        d = dict(d)
        d.pop("type", None)
        d["hp"] = HyperParams.from_dict(d["hp"])
        return cls(**d)


def derive_seed(*parts) -> int:
    """Deterministic 63-bit seed from structured parts (process-independent)."""
    digest = hashlib.sha256("/".join(str(p) for p in parts).encode()).digest()
    return int.from_bytes(digest[:8], "little") & 0x7FFFFFFFFFFFFFFF


def expected_improvement(mean, std, best):
    """EI for maximization: (mu-f*)*Phi(z) + sigma*phi(z), z=(mu-f*)/sigma.

    At sigma == 0 this degenerates to max(mu - f*, 0).
    """
    mean = np.asarray(mean, dtype=np.float64)
    std = np.asarray(std, dtype=np.float64)
    if np.any(std < 0):
        raise ValidationError("std must be non-negative")
    improve = mean - best
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        z = np.where(std > 0, improve / np.where(std > 0, std, 1.0), 0.0)
        z = np.clip(z, -40.0, 40.0)  # cdf/pdf saturate; avoids denormal blowups
        ei = np.where(std > 0,
                      improve * norm.cdf(z) + std * norm.pdf(z),
                      np.maximum(improve, 0.0))
    return np.maximum(ei, 0.0)


class Surrogate:
    """GP regressor over unit-cube inputs: Matern-5/2 ARD kernel, fitted
    observation noise, empirical constant mean via target normalization,
    marginal-likelihood maximization with restarts."""

    def __init__(self, n_dims: int, seed: int = 0, noise_floor: float = 1e-6,
                 n_restarts: int = 4):
        kernel = (ConstantKernel(1.0, (1e-3, 1e3))
                  * Matern(length_scale=np.ones(n_dims),
                           length_scale_bounds=(1e-2, 1e2), nu=2.5)
                  + WhiteKernel(1e-2, (noise_floor, 1e1)))
        self.gp = GaussianProcessRegressor(kernel=kernel, normalize_y=True,
                                           n_restarts_optimizer=n_restarts,
                                           random_state=seed)
        self._y_std = 1.0

    def fit(self, x: np.ndarray, y: np.ndarray) -> "Surrogate":
        import warnings

        from sklearn.exceptions import ConvergenceWarning

        with warnings.catch_warnings():
            # length scales pinned at their bounds are routine on small,
            # duplicate-heavy trial histories
            warnings.simplefilter("ignore", ConvergenceWarning)
            self.gp.fit(np.asarray(x, dtype=np.float64),
                        np.asarray(y, dtype=np.float64))
        self._y_std = float(max(np.std(y), 1e-12))
        return self

    def predict(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        mean, std = self.gp.predict(np.asarray(x, dtype=np.float64), return_std=True)
        return mean, std

    @property
    def noise_std(self) -> float:
        """Fitted observation noise on the original target scale."""
        noise_var = float(self.gp.kernel_.k2.noise_level)
        return float(np.sqrt(noise_var) * self._y_std)


@dataclass
class StopConfig:
    """Search and per-trial stopping rules."""

    init_points: int = 9  # Sobol warm-start trials per model type
    trial_cap: int = 60  # per model type
    no_improve_trials: int = 20
    min_improve: float = 0.05  # HR@10 points
    epoch_cap: int = 200  # unconstrained per-trial epoch ceiling
    conv_window: int = 10  # epochs without improvement => converged
    conv_delta: float = 0.01  # HR@10 points

    def to_dict(self) -> dict:
        return {"init_points": self.init_points, "trial_cap": self.trial_cap,
                "no_improve_trials": self.no_improve_trials,
                "min_improve": self.min_improve, "epoch_cap": self.epoch_cap,
                "conv_window": self.conv_window, "conv_delta": self.conv_delta}


class TrialLog:
    """Append-only JSON-lines trial log with a config-hash header.

    The search loop reconstructs its whole state (GP history, Sobol
    consumption, per-trial seeds) from this file, so an interrupted run
    resumes with identical subsequent suggestions at workers=1.
    """

    def __init__(self, path: str | Path, config: dict):
        self.path = Path(path)
        self.config_hash = hashlib.sha256(
            json.dumps(config, sort_keys=True).encode()).hexdigest()[:16]
        self.config = config
        self.records: list[TrialRecord] = []
        if self.path.exists():
            self._load()
        else:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("w", encoding="utf-8") as fh:
                fh.write(json.dumps({"type": "header", "config_hash": self.config_hash,
                                     "config": config}) + "\n")

    def _load(self) -> None:
        with self.path.open("r", encoding="utf-8") as fh:
            lines = [json.loads(ln) for ln in fh if ln.strip()]
        if not lines or lines[0].get("type") != "header":
            raise ValidationError(f"trial log {self.path} has no header line")
        found = lines[0].get("config_hash")
        if found != self.config_hash:
            theirs = json.dumps(lines[0].get("config", {}), sort_keys=True, indent=2)
            ours = json.dumps(self.config, sort_keys=True, indent=2)
            raise ValidationError(
                "trial log was produced with a different configuration "
                f"(hash {found} != {self.config_hash});\nlogged config:\n{theirs}\n"
                f"requested config:\n{ours}")
        self.records = [TrialRecord.from_dict(d) for d in lines[1:]]

    def append(self, record: TrialRecord) -> None:
        self.records.append(record)
        with self.path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(record.to_dict()) + "\n")


def _dedup_hp(hp: HyperParams, seen: set[tuple], space: SearchSpace) -> HyperParams:
    """Perturb integer dims to the nearest unevaluated grid neighbor."""

    def key(h: HyperParams) -> tuple:
        return (h.dim, h.window, round(h.ns_exponent, 6), round(h.lr, 9), h.negatives)

    if key(hp) not in seen:
        return hp
    int_dims = [d for d in space.dims if d.kind == "int"]
    for radius in range(1, 8):
        for d in int_dims:
            for delta in (radius, -radius):
                cur = getattr(hp, d.name)
                new = int(min(max(cur + delta, d.lo), d.hi))
                if new == cur:
                    continue
                cand = replace(hp, **{d.name: new})
                if key(cand) not in seen:
                    return cand
    # integer grid exhausted locally; nudge the continuous dims instead
    cand = replace(hp, ns_exponent=float(np.clip(hp.ns_exponent + 1e-3, -1, 1)),
                   lr=float(hp.lr * 1.001))
    return cand


def suggest(history: list[TrialRecord], space: SearchSpace, model: str,
            seed: int, trial_index: int, n_candidates: int = 4096,
            refine_top: int = 8) -> tuple[HyperParams, str]:
    """Next point by EI maximization over Sobol candidates + local polish.

    Falls back to a fresh Sobol point when no usable history exists or the
    GP fit fails. Returns (hp, source-tag).
    """
    usable = [r for r in history if r.model == model and r.status == "ok"
              and r.objective is not None]
    seen = {(r.hp.dim, r.hp.window, round(r.hp.ns_exponent, 6), round(r.hp.lr, 9),
             r.hp.negatives) for r in history if r.model == model}
    fallback_pts = sobol_points(space.n_dims, trial_index + 1,
                                seed=derive_seed(seed, model, "sobol"))
    if not usable:
        return _dedup_hp(space.from_unit(fallback_pts[-1], model), seen, space), "sobol"

    x = np.array([space.to_unit(r.hp) for r in usable])
    y = np.array([r.objective for r in usable])
    eligible = [r.objective for r in usable if r.eligible]
    best = max(eligible) if eligible else float(y.max())
    try:
        surrogate = Surrogate(space.n_dims, seed=derive_seed(seed, model, "gp", trial_index) % 2**31)
        surrogate.fit(x, y)
        cands = sobol_points(space.n_dims, n_candidates,
                             seed=derive_seed(seed, model, "cands", trial_index))
        mean, std = surrogate.predict(cands)
        ei = expected_improvement(mean, std, best)
        top = np.argsort(-ei)[:refine_top]
        best_x = cands[int(top[0])]
        best_ei = float(ei[int(top[0])])

        def neg_ei(xx: np.ndarray) -> float:
            m, s = surrogate.predict(xx.reshape(1, -1))
            return -float(expected_improvement(m, s, best)[0])

        for idx in top:
            res = minimize(neg_ei, cands[int(idx)], method="L-BFGS-B",
                           bounds=[(0.0, 1.0)] * space.n_dims,
                           options={"maxiter": 40})
            if res.success and -res.fun > best_ei:
                best_ei = -float(res.fun)
                best_x = np.clip(res.x, 0.0, 1.0)
        hp = space.from_unit(best_x, model)
        return _dedup_hp(hp, seen, space), "ei"
    except Exception as exc:  # GP failure: keep searching from the Sobol stream
        logger.warning("GP suggestion failed (%s); falling back to Sobol", exc)
        return _dedup_hp(space.from_unit(fallback_pts[-1], model), seen, space), "fallback"


@dataclass
class SearchResult:
    history: list[TrialRecord]
    best: dict[str, TrialRecord | None]
    mode: str
    space: SearchSpace
    holdout: dict[str, dict] | None = None  # per model: held-out HR/NDCG of the best

    def incumbent(self) -> TrialRecord | None:
        cands = [r for r in self.best.values() if r is not None]
        if not cands:
            return None
        return max(cands, key=lambda r: r.objective)


def _train_to_convergence(corpus: Corpus, hp: HyperParams, tune_pairs: np.ndarray,
                          stop: StopConfig, workers: int, seed: int,
                          eval_mode: str) -> tuple[float, float, int, float]:
    """Train until HR@10 stops improving; returns (hr, ndcg, epochs, wall_s)."""
    trainer = EmbeddingTrainer(corpus, hp, workers=workers, seed=seed,
                               total_epochs=stop.epoch_cap)
    best_hr = -np.inf
    best_ndcg = 0.0
    last_improve_epoch = 0
    t0 = time.perf_counter()
    for epoch in range(1, stop.epoch_cap + 1):
        trainer.run_epoch()
        res = evaluate(trainer.model, tune_pairs, k=10, mode=eval_mode)
        if res.hr_at_k > best_hr + stop.conv_delta:
            last_improve_epoch = epoch
        if res.hr_at_k > best_hr:
            best_hr = res.hr_at_k
            best_ndcg = res.ndcg_at_k
        if epoch - last_improve_epoch >= stop.conv_window:
            break
    return float(best_hr), float(best_ndcg), trainer.epochs_run, time.perf_counter() - t0


def run_search(corpus: Corpus, split: EvalSplit, space: SearchSpace, mode: str,
               budget: RuntimeBudget | None = None,
               cost_model: CostModel | None = None,
               model_types: tuple[str, ...] = ("sg", "cbow"),
               workers: int = 1, seed: int = 1,
               stop: StopConfig | None = None,
               trial_log: TrialLog | None = None,
               eval_mode: str = "exact",
               holdout_frac: float = 0.0) -> SearchResult:
    """Full search loop: 9 Sobol trials then EI suggestions, per model type.

    ``constrained`` trains each candidate for exactly the epoch count the
    budget affords and flags trials whose measured runtime exceeds it;
    ``unconstrained`` trains each candidate to convergence. Failed trials
    are recorded and skipped by the surrogate. By default the search is
    scored on the split's own test pairs; ``holdout_frac`` reserves that
    fraction of pairs from tuning and reports the incumbents against them.
    """
    if mode not in ("constrained", "unconstrained"):
        raise ValidationError(f"mode must be constrained|unconstrained, got {mode!r}")
    if not 0.0 <= holdout_frac < 1.0:
        raise ValidationError(f"holdout_frac must be in [0, 1), got {holdout_frac}")
    stop = stop or StopConfig()
    if mode == "constrained":
        if budget is None:
            raise ValidationError("constrained search needs a RuntimeBudget")
        if cost_model is None:
            cost_model = fit_cost_model(corpus, workers=workers, seed=seed)

    history: list[TrialRecord] = list(trial_log.records) if trial_log else []
    best: dict[str, TrialRecord | None] = {m: None for m in model_types}
    for r in history:
        if r.eligible and r.model in best and (
                best[r.model] is None or r.objective > best[r.model].objective):
            best[r.model] = r

    tune_pairs = split.test_pairs
    holdout_pairs = None
    if holdout_frac > 0.0:
        rng = np.random.default_rng(derive_seed(seed, "holdout"))
        order = rng.permutation(len(split.test_pairs))
        n_hold = max(1, int(holdout_frac * len(order)))
        holdout_pairs = split.test_pairs[order[:n_hold]]
        tune_pairs = split.test_pairs[order[n_hold:]]

    for model in model_types:
        done = sorted((r for r in history if r.model == model),
                      key=lambda r: r.trial_index)
        n_done = len(done)
        # replay restored records so stopping behaves as if never interrupted
        incumbent = -np.inf
        since_improve = 0
        for r in done:
            if r.eligible and r.objective > incumbent + stop.min_improve:
                incumbent = r.objective
                since_improve = 0
            else:
                since_improve += 1
        for t in range(n_done, stop.trial_cap):
            if t >= stop.init_points and since_improve >= stop.no_improve_trials:
                break
            if t < stop.init_points:
                pts = sobol_points(space.n_dims, t + 1,
                                   seed=derive_seed(seed, model, "sobol"))
                hp = space.from_unit(pts[-1], model)
                source = "sobol"
            else:
                hp, source = suggest(history, space, model, seed, t)

            train_seed = derive_seed(seed, model, "train", t) % 2**31
            epochs_run = 0
            over = False
            try:
                if mode == "constrained":
                    plan = epochs_for_budget(hp, budget, cost_model)
                    hp_run = hp.with_epochs(plan.n)
                    t0 = time.perf_counter()
                    model_out, stats = train(corpus, hp_run, workers=workers,
                                             seed=train_seed)
                    runtime = time.perf_counter() - t0
                    res = evaluate(model_out, tune_pairs, k=10, mode=eval_mode)
                    hr, ndcg = res.hr_at_k, res.ndcg_at_k
                    epochs_run = plan.n
                    over = plan.over_budget or runtime > budget.budget_s
                    hp = hp_run
                else:
                    hr, ndcg, epochs_run, runtime = _train_to_convergence(
                        corpus, hp, tune_pairs, stop, workers, train_seed, eval_mode)
                    hp = hp.with_epochs(epochs_run)
                record = TrialRecord(
                    trial_index=t, model=model, hp=hp, objective=float(hr),
                    ndcg=float(ndcg), runtime_s=float(runtime), over_budget=over,
                    seed=train_seed,
                    timestamp=datetime.now(timezone.utc).isoformat(),
                    status="ok", source=source, epochs_run=epochs_run)
            except W2vtError as exc:
                logger.warning("trial %d (%s) failed: %s", t, model, exc)
                record = TrialRecord(
                    trial_index=t, model=model, hp=hp, objective=None, ndcg=None,
                    runtime_s=0.0, over_budget=False, seed=train_seed,
                    timestamp=datetime.now(timezone.utc).isoformat(),
                    status="failed", source=source, epochs_run=0)

            history.append(record)
            if trial_log:
                trial_log.append(record)
            if record.eligible and record.objective > incumbent + stop.min_improve:
                incumbent = record.objective
                since_improve = 0
            else:
                since_improve += 1
            if record.eligible and (best[model] is None
                                    or record.objective > best[model].objective):
                best[model] = record

    holdout_results = None
    if holdout_pairs is not None and len(holdout_pairs):
        holdout_results = {}
        for model, rec in best.items():
            if rec is None:
                continue
            emb, _ = train(corpus, rec.hp, workers=workers, seed=rec.seed)
            res = evaluate(emb, holdout_pairs, k=10, mode=eval_mode)
            holdout_results[model] = {"hr_at_10": res.hr_at_k,
                                      "ndcg_at_10": res.ndcg_at_k,
                                      "n_pairs": res.n_pairs}
    return SearchResult(history=history, best=best, mode=mode, space=space,
                        holdout=holdout_results)


@dataclass
class TransferReport:
    """Outcome of tuning on a sample and re-evaluating on the full corpus."""

    fraction: float
    sample_budget: RuntimeBudget
    full_budget: RuntimeBudget
    search: SearchResult
    default_full: AggregateResult
    tuned_full: dict[str, AggregateResult]  # per model type
    tuned_hp: dict[str, HyperParams]
    tuned_epochs: dict[str, int]

    def best_model(self) -> str:
        return max(self.tuned_full, key=lambda m: self.tuned_full[m].hr_mean)


def _eval_over_seeds(corpus: Corpus, hp: HyperParams, pairs: np.ndarray,
                     seeds: tuple[int, ...], workers: int,
                     eval_mode: str = "exact") -> AggregateResult:
    results = []
    for s in seeds:
        model, _ = train(corpus, hp, workers=workers, seed=s)
        results.append(evaluate(model, pairs, k=10, mode=eval_mode))
    return aggregate_runs(results)


def sample_transfer(full_corpus: Corpus, fraction: float = 0.1,
                    space: SearchSpace | None = None,
                    seeds: tuple[int, ...] = (1, 2, 3, 4, 5),
                    workers: int = 1, seed: int = 1,
                    stop: StopConfig | None = None,
                    model_types: tuple[str, ...] = ("sg", "cbow"),
                    trial_log: TrialLog | None = None,
                    eval_mode: str = "exact") -> TransferReport:
    """Tune on a sequence sample, apply the found settings to the full corpus.

    Both per-model incumbents are retrained on the full corpus under the
    full-corpus default budget and evaluated there, against the default
    configuration baseline.
    """
    space = space or SearchSpace.constrained()
    stop = stop or StopConfig()

    if fraction >= 1.0:
        sample = full_corpus
    else:
        sample = sample_sequences(full_corpus, fraction, seed=seed)
    sample_split = split_last_token(sample)
    sample_budget = measure_default(sample_split.train, workers=workers, seed=seed)
    sample_cost = fit_cost_model(sample_split.train, workers=workers, seed=seed)
    search = run_search(sample_split.train, sample_split, space, "constrained",
                        budget=sample_budget, cost_model=sample_cost,
                        model_types=model_types, workers=workers, seed=seed,
                        stop=stop, trial_log=trial_log, eval_mode=eval_mode)

    full_split = split_last_token(full_corpus)
    full_budget = measure_default(full_split.train, workers=workers, seed=seed)
    full_cost = fit_cost_model(full_split.train, workers=workers, seed=seed)

    default_hp = DEFAULT_HP
    default_full = _eval_over_seeds(full_split.train, default_hp,
                                    full_split.test_pairs, seeds, workers, eval_mode)

    tuned_full: dict[str, AggregateResult] = {}
    tuned_hp: dict[str, HyperParams] = {}
    tuned_epochs: dict[str, int] = {}
    for model in model_types:
        rec = search.best[model]
        if rec is None:
            # tiny sample budgets can flag every trial over-budget on wall
            # noise alone; transfer can still proceed with the best
            # completed trial since its epoch count is re-planned against
            # the full-corpus budget below
            done = [r for r in search.history
                    if r.model == model and r.status == "ok"
                    and r.objective is not None]
            if not done:
                continue
            rec = max(done, key=lambda r: r.objective)
            logger.warning(
                "no within-budget incumbent for %s on the sample; "
                "transferring its best over-budget trial instead", model)
        plan = epochs_for_budget(rec.hp, full_budget, full_cost)
        hp_full = rec.hp.with_epochs(plan.n)
        tuned_hp[model] = hp_full
        tuned_epochs[model] = plan.n
        tuned_full[model] = _eval_over_seeds(full_split.train, hp_full,
                                             full_split.test_pairs, seeds,
                                             workers, eval_mode)

    return TransferReport(fraction=fraction, sample_budget=sample_budget,
                          full_budget=full_budget, search=search,
                          default_full=default_full, tuned_full=tuned_full,
                          tuned_hp=tuned_hp, tuned_epochs=tuned_epochs)


@dataclass
class SweepPoint:
    value: float
    hr_mean: float
    hr_ci95: float
    ndcg_mean: float
    ndcg_ci95: float
    is_center: bool


def linear_sweep(center_hp: HyperParams, param: str, grid: list[float],
                 corpus: Corpus, split: EvalSplit,
                 seeds: tuple[int, ...] = (1, 2, 3), workers: int = 1,
                 eval_mode: str = "exact") -> list[SweepPoint]:
    """Retrain and evaluate along one hyperparameter axis, others fixed.

    The center value is marked so plots can draw the reference line even if
    it is not on the grid.
    """
    valid = {"dim", "window", "ns_exponent", "lr", "negatives", "epochs"}
    if param not in valid:
        raise ValidationError(f"sweep param must be one of {sorted(valid)}, got {param!r}")
    center_value = getattr(center_hp, param)
    values = sorted(set(float(g) for g in grid) | {float(center_value)})
    points = []
    for v in values:
        cast = int(round(v)) if param in ("dim", "window", "negatives", "epochs") else v
        hp = replace(center_hp, **{param: cast}).validate()
        agg = _eval_over_seeds(corpus, hp, split.test_pairs, seeds, workers, eval_mode)
        points.append(SweepPoint(value=float(cast), hr_mean=agg.hr_mean,
                                 hr_ci95=agg.hr_ci95, ndcg_mean=agg.ndcg_mean,
                                 ndcg_ci95=agg.ndcg_ci95,
                                 is_center=bool(np.isclose(float(cast), float(center_value)))))
    return points


def _hp_cells(hp: HyperParams) -> str:
    return (f"{hp.model} | {hp.dim} | {hp.window} | {hp.ns_exponent:+.2f} | "
            f"{hp.epochs} | {hp.lr:.3f} | {hp.negatives}")


def make_report(result: SearchResult, title: str = "Search report") -> str:
    """Markdown incumbent table in the m/d/L/alpha/n/lambda/N schema."""
    lines = [f"# {title}", "", f"mode: {result.mode}, space: {result.space.name}, "
             f"trials: {len(result.history)}", "",
             "| m | d | L | alpha | n | lambda | N | HR@10 | NDCG@10 |",
             "|---|---|---|-------|---|--------|---|-------|---------|"]
    for model, rec in result.best.items():
        if rec is None:
            lines.append(f"| {model} | - | - | - | - | - | - | - | - |")
            continue
        lines.append(f"| {_hp_cells(rec.hp)} | {rec.objective:.2f} | {rec.ndcg:.4f} |")
    lines.append("")
    return "\n".join(lines)


def write_trials_csv(history: list[TrialRecord], path: str | Path) -> None:
    import csv

    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["trial_index", "model", "dim", "window", "ns_exponent", "lr",
                    "negatives", "epochs", "hr_at_10", "ndcg_at_10", "runtime_s",
                    "over_budget", "status", "source"])
        for r in history:
            w.writerow([r.trial_index, r.model, r.hp.dim, r.hp.window,
                        r.hp.ns_exponent, r.hp.lr, r.hp.negatives, r.hp.epochs,
                        r.objective, r.ndcg, r.runtime_s, int(r.over_budget),
                        r.status, r.source])


def write_sweep_csv(points: list[SweepPoint], param: str, path: str | Path) -> None:
    import csv

    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["param", "value", "hr_mean", "hr_ci95", "ndcg_mean",
                    "ndcg_ci95", "is_center"])
        for p in points:
            w.writerow([param, p.value, p.hr_mean, p.hr_ci95, p.ndcg_mean,
                        p.ndcg_ci95, int(p.is_center)])


def write_transfer_csv(report: TransferReport, path: str | Path) -> None:
    """Fig-3-style bar data: default vs sample-tuned per model type."""
    import csv

    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["config", "hr_mean", "hr_ci95", "ndcg_mean", "ndcg_ci95"])
        w.writerow(["default", report.default_full.hr_mean, report.default_full.hr_ci95,
                    report.default_full.ndcg_mean, report.default_full.ndcg_ci95])
        for model, agg in report.tuned_full.items():
            w.writerow([f"sample-tuned-{model}", agg.hr_mean, agg.hr_ci95,
                        agg.ndcg_mean, agg.ndcg_ci95])


def make_transfer_report(report: TransferReport) -> str:
    lines = ["# Sample-transfer report", "",
             f"sequence fraction: {report.fraction}",
             f"sample budget: {report.sample_budget.budget_s:.2f}s, "
             f"full budget: {report.full_budget.budget_s:.2f}s", "",
             "Full-corpus evaluation (mean +/- 95% CI):", "",
             "| config | m | d | L | alpha | n | lambda | N | HR@10 | NDCG@10 |",
             "|--------|---|---|---|-------|---|--------|---|-------|---------|"]
    lines.append(f"| default | {_hp_cells(DEFAULT_HP)} "
                 f"| {report.default_full.hr_mean:.2f} +/- {report.default_full.hr_ci95:.2f} "
                 f"| {report.default_full.ndcg_mean:.4f} +/- {report.default_full.ndcg_ci95:.4f} |")
    for model, agg in report.tuned_full.items():
        hp = report.tuned_hp[model]
        lines.append(f"| sample-tuned | {_hp_cells(hp)} "
                     f"| {agg.hr_mean:.2f} +/- {agg.hr_ci95:.2f} "
                     f"| {agg.ndcg_mean:.4f} +/- {agg.ndcg_ci95:.4f} |")
    lines.append("")
    return "\n".join(lines)
