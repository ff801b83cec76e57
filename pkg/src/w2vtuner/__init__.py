"""Sequence-embedding training and budget-aware hyperparameter tuning.

The package trains Skipgram/CBOW embeddings with negative sampling on
item-interaction sequences, scores them on next-event prediction (HR@10,
NDCG@10), and searches hyperparameters three ways: unconstrained,
runtime-budget-constrained, and constrained on a sequence sample with
transfer of the winners to the full corpus.
"""

from .budget import (CostModel, EpochPlan, RuntimeBudget, epochs_for_budget,
                     fit_cost_model, measure_default)
from .corpus import (Corpus, DownsampleConfig, EvalSplit, Vocabulary,
                     build_corpus, downsample, ingest, keep_probability,
                     sample_sequences, split_last_token, split_temporal)
from .evaluator import (AggregateResult, CosineIndex, EvalResult,
                        aggregate_runs, evaluate, top_k)
from .optimizer import (SearchSpace, StopConfig, Surrogate, TrialLog,
                        TrialRecord, expected_improvement, linear_sweep,
                        run_search, sample_transfer, suggest)
from .sampling import NegativeSampler, build_sampler, sample_window
from .sobol import SobolSequence, sobol_points
from .trainer import (DEFAULT_HP, EmbeddingModel, EmbeddingTrainer,
                      HyperParams, TrainStats, cbow_gradient, load_embeddings,
                      save_embeddings, sgns_gradient, sgns_loss, train)

__version__ = "0.1.0"

__all__ = [
    "Corpus", "Vocabulary", "DownsampleConfig", "EvalSplit",
    "build_corpus", "ingest", "keep_probability", "downsample",
    "split_last_token", "split_temporal", "sample_sequences",
    "HyperParams", "DEFAULT_HP", "EmbeddingModel", "EmbeddingTrainer",
    "TrainStats", "train", "sgns_loss", "sgns_gradient", "cbow_gradient",
    "save_embeddings", "load_embeddings",
    "NegativeSampler", "build_sampler", "sample_window",
    "EvalResult", "AggregateResult", "CosineIndex", "top_k", "evaluate",
    "aggregate_runs",
    "RuntimeBudget", "CostModel", "EpochPlan", "measure_default",
    "fit_cost_model", "epochs_for_budget",
    "SobolSequence", "sobol_points",
    "SearchSpace", "StopConfig", "Surrogate", "TrialRecord", "TrialLog",
    "expected_improvement", "suggest", "run_search", "sample_transfer",
    "linear_sweep",
]
