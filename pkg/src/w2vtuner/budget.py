"""Runtime budgets and the analytic epoch-cost model.

The budget is the wall time of one default-configuration training run on
fixed hardware with a fixed worker count. A per-iteration cost model turns
that budget into the largest epoch count any candidate configuration can
afford: CBOW work scales as d*(mean_window + negatives) per position,
Skipgram as mean_window * d * negatives, each times the expected number of
surviving tokens.
"""

from __future__ import annotations

import json
import platform
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
from scipy.optimize import nnls

from .corpus import Corpus, keep_probability_table
from .errors import CalibrationError, ValidationError
from .trainer import DEFAULT_HP, HyperParams, train

__all__ = [
    "RuntimeBudget",
    "CostModel",
    "EpochPlan",
    "measure_default",
    "fit_cost_model",
    "fit_coefficient",
    "epochs_for_budget",
    "default_probe_grid",
    "pairs_factor",
    "work_units",
    "warmup_kernels",
]

_warmed_up = False


def warmup_kernels() -> None:
    """Compile (or load from cache) both training kernels off the clock.

    Must run before any timed measurement; numba compilation on first call
    would otherwise pollute it.
    """
    global _warmed_up
    if _warmed_up:
        return
    from .corpus import build_corpus

    toy = build_corpus([["a", "b", "c"], ["b", "c", "a"]])
    for model in ("sg", "cbow"):
        hp = HyperParams(model=model, dim=4, window=2, negatives=1, epochs=1, t_ratio=0.0)
        train(toy, hp, workers=1, seed=1)
    _warmed_up = True


@dataclass
class RuntimeBudget:
    """Wall-second budget measured from a default-configuration run."""

    budget_s: float
    workers: int
    hardware_tag: str
    default_hp: dict
    measured_at: str
    epochs: int = 5

    def __post_init__(self):
        if self.budget_s <= 0:
            raise ValidationError(f"budget_s must be > 0, got {self.budget_s}")

    def to_dict(self) -> dict:
        return {"budget_s": self.budget_s, "workers": self.workers,
                "hardware_tag": self.hardware_tag, "default_hp": self.default_hp,
                "measured_at": self.measured_at, "epochs": self.epochs}

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "RuntimeBudget":
        p = Path(path)
        if not p.exists():
            raise ValidationError(f"budget file does not exist: {p}")
        return cls(**json.loads(p.read_text(encoding="utf-8")))


def _hardware_tag(workers: int) -> str:
    import os

    return f"{platform.machine()}/{os.cpu_count()}cpu/workers={workers}"


def measure_default(corpus: Corpus, workers: int = 1, epochs: int = 5,
                    seed: int = 1) -> RuntimeBudget:
    """Train the default configuration and record its wall time as the budget."""
    if corpus.n_sequences == 0:
        raise ValidationError("cannot measure a budget on an empty corpus")
    warmup_kernels()
    hp = DEFAULT_HP.with_epochs(epochs)
    t0 = time.perf_counter()
    train(corpus, hp, workers=workers, seed=seed)
    wall = time.perf_counter() - t0
    return RuntimeBudget(
        budget_s=wall, workers=workers, hardware_tag=_hardware_tag(workers),
        default_hp=hp.to_dict(),
        measured_at=datetime.now(timezone.utc).isoformat(), epochs=epochs)


def _expected_train_tokens(corpus: Corpus, t_ratio: float) -> float:
    """Expected per-epoch token count after frequent-token downsampling."""
    keep = keep_probability_table(corpus.vocab, t_ratio)
    return float((corpus.vocab.counts * keep).sum())


def pairs_factor(max_window: int, mean_seq_len: float) -> float:
    """Expected context tokens per position under window sampling.

    For sampled half-width l and a surviving sequence of length s, the
    two-sided window truncates at the boundaries: the expectation over
    uniform positions is 2l - l(l+1)/s, saturating at s - 1 once l covers
    the whole sequence. Averaged over l ~ U{1..max_window}.
    """
    s = max(mean_seq_len, 2.0)
    total = 0.0
    for l in range(1, max_window + 1):
        le = min(l, int(s - 1)) if s - 1 >= 1 else 1
        total += min(2.0 * le - le * (le + 1.0) / s, s - 1.0)
    return total / max_window


def work_units(hp: HyperParams, train_tokens: float,
               mean_seq_len: float = 1e9) -> float:
    """Dominant per-epoch flop feature of a configuration.

    CBOW does one update per position against mean-of-context plus targets;
    Skipgram pays the target work once per context token.
    """
    pf = pairs_factor(hp.window, mean_seq_len)
    if hp.model == "cbow":
        return train_tokens * hp.dim * (pf + hp.negatives + 1)
    return train_tokens * pf * hp.dim * (hp.negatives + 1)


def _features(hp: HyperParams, t_raw: float, t_eff: float,
              mean_seq_len: float) -> np.ndarray:
    """Per-epoch cost regressors for one configuration.

    Shared shape: raw-token scan, per-target overhead, flop work. CBOW gets
    one extra term for per-context-token gathering, which is independent of
    the number of negatives and matters for wide windows at small d.
    """
    pf = pairs_factor(hp.window, mean_seq_len)
    targets = hp.negatives + 1.0
    if hp.model == "cbow":
        return np.array([t_raw, t_eff * targets, t_eff * pf,
                         t_eff * hp.dim * (pf + targets)])
    return np.array([t_raw, t_eff * pf * targets,
                     t_eff * pf * targets * hp.dim])


@dataclass
class CostModel:
    """Per-model non-negative least-squares fit over three features: raw
    token scan, target-touch overhead, and flop work."""

    coeff: dict[str, list[float]]  # model -> [c_scan, c_target, c_flop]
    corpus_stats: dict[str, float]  # t_raw, t_eff, mean_seq_len at tuning t_ratio
    residuals: dict[str, list[float]] = field(default_factory=dict)  # relative errors

    def predict_epoch_s(self, hp: HyperParams) -> float:
        if hp.model not in self.coeff:
            raise ValidationError(f"cost model has no calibration for model {hp.model!r}")
        f = _features(hp, self.corpus_stats["t_raw"], self.corpus_stats["t_eff"],
                      self.corpus_stats["mean_seq_len"])
        return float(f @ np.asarray(self.coeff[hp.model]))

    def to_dict(self) -> dict:
        return {"coeff": self.coeff, "corpus_stats": self.corpus_stats,
                "residuals": self.residuals}

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "CostModel":
        return cls(**json.loads(Path(path).read_text(encoding="utf-8")))


def default_probe_grid(models: tuple[str, ...] = ("sg", "cbow")) -> list[HyperParams]:
    """Probe configurations spanning (d, L, N) for calibration runs."""
    probes = []
    for model in models:
        for dim, window, negatives in ((16, 4, 4), (48, 16, 16), (100, 2, 10),
                                       (100, 10, 2), (64, 5, 5), (24, 30, 2),
                                       (160, 3, 6)):
            probes.append(HyperParams(model=model, dim=dim, window=window,
                                      negatives=negatives, epochs=1))
    return probes


def fit_coefficient(features: np.ndarray, times: np.ndarray) -> float:
    """Least squares through the origin: time ~ c * work_units."""
    x = np.asarray(features, dtype=np.float64)
    t = np.asarray(times, dtype=np.float64)
    denom = float((x * x).sum())
    if not np.isfinite(denom) or denom <= 0:
        raise CalibrationError("degenerate calibration design; add probe configs")
    c = float((x * t).sum() / denom)
    if c <= 0:
        raise CalibrationError("non-positive fitted cost coefficient")
    return c


def fit_cost_model(corpus: Corpus, probe_configs: list[HyperParams] | None = None,
                   workers: int = 1, seed: int = 1, repeats: int = 1) -> CostModel:
    """Calibrate seconds-per-work-unit by timing one epoch per probe config.

    Each model type needs at least 4 probes; the fit is least squares
    through the origin on the work-unit feature. ``repeats`` takes the
    fastest of several timed epochs per probe, which suppresses scheduler
    noise on busy machines.
    """
    if probe_configs is None:
        probe_configs = default_probe_grid()
    by_model: dict[str, list[HyperParams]] = {}
    for hp in probe_configs:
        by_model.setdefault(hp.model, []).append(hp)
    for model, probes in by_model.items():
        if len(probes) < 4:
            raise CalibrationError(
                f"need >= 4 probe configs for model {model!r}, got {len(probes)}")
    warmup_kernels()
    t_raw = float(corpus.total_tokens)
    t_eff = _expected_train_tokens(corpus, DEFAULT_HP.t_ratio)
    mean_seq_len = t_eff / max(corpus.n_sequences, 1)
    stats_dict = {"t_raw": t_raw, "t_eff": t_eff, "mean_seq_len": mean_seq_len}
    coeff: dict[str, list[float]] = {}
    residuals: dict[str, list[float]] = {}
    for model, probes in by_model.items():
        feats = []
        times = []
        for hp in probes:
            feats.append(_features(hp, t_raw, t_eff, mean_seq_len))
            walls = []
            for rep in range(max(repeats, 1)):
                _, stats = train(corpus, hp, workers=workers, seed=seed + rep,
                                 epochs=1)
                walls.append(stats.epoch_times_s[0])
            times.append(min(walls))
        x = np.asarray(feats)
        t = np.asarray(times)
        # fit in relative space: the contract is relative prediction error,
        # and absolute least squares would let the slowest probes dominate
        c, _ = nnls(x / t[:, None], np.ones(len(t)))
        pred = x @ c
        if not np.all(pred > 0):
            raise CalibrationError(
                f"model {model!r}: degenerate calibration fit; add probe configs")
        coeff[model] = c.tolist()
        residuals[model] = (np.abs(pred - t) / t).tolist()
    return CostModel(coeff=coeff, corpus_stats=stats_dict, residuals=residuals)


@dataclass
class EpochPlan:
    """Epoch count fitted to a budget, with the prediction that justified it."""

    n: int
    predicted_epoch_s: float
    predicted_total_s: float
    over_budget: bool  # even one epoch is predicted to exceed the budget


def epochs_for_budget(hp: HyperParams, budget: RuntimeBudget, model: CostModel,
                      safety: float = 0.95, max_epochs: int = 512) -> EpochPlan:
    """Largest epoch count whose predicted runtime stays inside the budget.

    Configurations too expensive for a single epoch come back as n=1 with
    ``over_budget`` set; rejecting them outright would bias the search.
    ``max_epochs`` bounds the plan for configurations so cheap that
    per-epoch fixed overhead, not modeled work, would dominate.
    """
    hp.validate()
    if not 0 < safety <= 1:
        raise ValidationError(f"safety must be in (0, 1], got {safety}")
    pred = model.predict_epoch_s(hp)
    raw = int(np.floor(safety * budget.budget_s / pred))
    if raw < 1:
        return EpochPlan(n=1, predicted_epoch_s=pred, predicted_total_s=pred,
                         over_budget=True)
    n = min(raw, max_epochs)
    return EpochPlan(n=n, predicted_epoch_s=pred, predicted_total_s=n * pred,
                     over_budget=False)
