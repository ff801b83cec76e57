"""Runtime-budget-constrained hyperparameter search.

The budget is the wall time of one run with the reference defaults
(d=100, L=5, alpha=0.75, N=5, lr=0.025, 5 epochs). Every candidate then
gets the largest epoch count the calibrated cost model predicts will fit,
so cheaper configurations buy themselves more passes over the data. The
search itself is 9 Sobol points followed by GP expected-improvement
suggestions, run independently for Skipgram and CBOW.
"""

import numpy as np

from w2vtuner import (DEFAULT_HP, SearchSpace, StopConfig, build_corpus,
                      evaluate, fit_cost_model, measure_default, run_search,
                      split_last_token, train)
from w2vtuner.optimizer import make_report


def synthetic_sessions(seed=0):
    # large enough that the measured budget is seconds, not timer noise
    rng = np.random.default_rng(seed)
    sessions = []
    for _ in range(5000):
        c = int(rng.integers(600))
        items = c * 10 + rng.integers(0, 10, 60)
        drift = rng.random(60) < 0.25
        items[drift] = rng.integers(0, 6000, int(drift.sum()))
        sessions.append([str(i) for i in items])
    return build_corpus(sessions)


def main():
    corpus = synthetic_sessions()
    split = split_last_token(corpus)

    budget = measure_default(split.train, workers=1)
    print(f"default-run budget: {budget.budget_s:.2f}s on {budget.hardware_tag}")

    cost = fit_cost_model(split.train, workers=1)
    for model, errs in cost.residuals.items():
        print(f"cost model [{model}]: max calibration error {max(errs):.0%}")

    emb, _ = train(split.train, DEFAULT_HP, seed=1)
    base = evaluate(emb, split.test_pairs)
    print(f"\ndefault configuration: HR@10 = {base.hr_at_k:.2f}%\n")

    result = run_search(split.train, split, SearchSpace.constrained(),
                        "constrained", budget=budget, cost_model=cost,
                        model_types=("sg", "cbow"), workers=1, seed=7,
                        stop=StopConfig(trial_cap=12))
    print(make_report(result, title="Budget-constrained search"))
    over = sum(1 for r in result.history if r.over_budget)
    print(f"{over}/{len(result.history)} trials exceeded the measured budget "
          "and were excluded from incumbent selection")


if __name__ == "__main__":
    main()
