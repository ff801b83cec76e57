"""Tune on a 10% sequence sample, apply the winners to the full corpus.

When the target corpus is too large to search over directly, hyperparameters
found on a sample transfer surprisingly well. The winning Skipgram and CBOW
configurations are both re-trained on the full corpus under its own default
budget (epoch counts recomputed) because the better model on the sample is
not always the better model at full scale.
"""

import numpy as np

from w2vtuner import StopConfig, build_corpus, sample_transfer
from w2vtuner.optimizer import make_transfer_report


def synthetic_sessions(seed=3):
    # sized so even the 10% sample's budget is a few hundred milliseconds
    rng = np.random.default_rng(seed)
    sessions = []
    for _ in range(6000):
        c = int(rng.integers(700))
        items = c * 10 + rng.integers(0, 10, 60)
        drift = rng.random(60) < 0.25
        items[drift] = rng.integers(0, 7000, int(drift.sum()))
        sessions.append([str(i) for i in items])
    return build_corpus(sessions)


def main():
    corpus = synthetic_sessions()
    print(f"full corpus: {corpus.n_sequences} sessions, "
          f"{corpus.total_tokens} events")

    report = sample_transfer(corpus, fraction=0.1, seeds=(1, 2, 3),
                             workers=1, seed=11, stop=StopConfig(trial_cap=12))
    print(make_transfer_report(report))
    best = report.best_model()
    lift = report.tuned_full[best].hr_mean / max(report.default_full.hr_mean, 1e-9)
    print(f"best transferred model: {best}, "
          f"{lift:.1f}x the default configuration's HR@10")


if __name__ == "__main__":
    main()
