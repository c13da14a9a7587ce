"""Tour of the binary-classifier evaluation suite.

Builds prediction/truth/score arrays for a simulated detector, then shows
the confusion matrix, the aggregate precision/recall/F1, the per-class
report, and the ROC curve with its trapezoidal AUC — including why the
trapezoid equals the pairwise ranking probability.

Run:  python3 demos/metrics_report.py
"""

import numpy as np

from firenet import classification_report, confusion, roc_auc
from firenet.metrics import roc_csv, roc_curve


def simulate_detector(rng, n=400, separation=1.6):
    """Scores ~ N(0,1) for negatives and N(separation,1) for positives,
    squashed to (0,1) — a classifier that is good but not perfect."""
    truth = rng.integers(0, 2, size=n)
    raw = rng.standard_normal(n) + separation * truth
    scores = 1.0 / (1.0 + np.exp(-raw))
    preds = (scores >= 0.5).astype(int)
    return preds, truth, scores


def main():
    rng = np.random.default_rng(2024)
    preds, truth, scores = simulate_detector(rng)

    cm = confusion(preds, truth)
    print("confusion matrix (fire = positive):")
    print(f"  tp={cm.tp}  fp={cm.fp}")
    print(f"  fn={cm.fn}  tn={cm.tn}\n")

    report = classification_report(preds, truth, scores=scores)
    print(report.to_text())

    curve, auc = roc_auc(scores, truth)
    print(f"ROC has {len(curve)} points; AUC = {auc:.4f}")

    # AUC is also the probability that a random positive outscores a random
    # negative (ties count a half) — check it the slow way.
    pos = scores[truth == 1]
    neg = scores[truth == 0]
    wins = sum((p > q) + 0.5 * (p == q) for p in pos for q in neg)
    print(f"pairwise ranking statistic = {wins / (len(pos) * len(neg)):.4f}")

    print("\nfirst rows of roc.csv:")
    for line in roc_csv(roc_curve(scores, truth)).splitlines()[:5]:
        print(f"  {line}")


if __name__ == "__main__":
    main()
