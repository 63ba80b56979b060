"""
Detection metrics over (score, label) pairs, with fake as the positive class.

The AUC integrates the ROC curve with the trapezoid rule in integer counts,
which makes it equal to the Mann-Whitney statistic
P(score+ > score-) + 0.5 * P(score+ == score-), ties included.
"""

from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple

try:
    from errors import ConfigError, UndefinedMetricError
    from models import label_to_int
except ImportError:
    from .errors import ConfigError, UndefinedMetricError
    from .models import label_to_int


@dataclass(frozen=True)
class RocPoint:
    threshold: float
    fpr: float
    tpr: float


def _normalize(pairs: Iterable) -> List[Tuple[float, int]]:
    return [(float(s), label_to_int(label)) for s, label in pairs]


def _grouped_counts(pairs: Sequence[Tuple[float, int]]) -> List[Tuple[float, int, int]]:
    """(threshold, positives, negatives) per distinct score, highest score first."""
    groups: List[Tuple[float, int, int]] = []
    for s, label in sorted(pairs, key=lambda p: -p[0]):
        if groups and groups[-1][0] == s:
            threshold, tp, fp = groups[-1]
            groups[-1] = (threshold, tp + label, fp + 1 - label)
        else:
            groups.append((s, label, 1 - label))
    return groups


def _class_counts(pairs: Sequence[Tuple[float, int]]) -> Tuple[int, int]:
    positives = sum(label for _, label in pairs)
    negatives = len(pairs) - positives
    if positives == 0 or negatives == 0:
        raise UndefinedMetricError(
            f"AUC needs both classes, got {positives} fake and {negatives} real samples"
        )
    return positives, negatives


def roc_curve(pairs: Iterable) -> List[RocPoint]:
    """
    ROC points from (0, 0) to (1, 1), one per distinct score.

    A point's threshold is the lowest score still predicted fake.
    """
    data = _normalize(pairs)
    positives, negatives = _class_counts(data)
    points = [RocPoint(threshold=float("inf"), fpr=0.0, tpr=0.0)]
    tp = fp = 0
    for threshold, group_tp, group_fp in _grouped_counts(data):
        tp += group_tp
        fp += group_fp
        points.append(RocPoint(threshold=threshold, fpr=fp / negatives, tpr=tp / positives))
    return points


def auc(pairs: Iterable) -> float:
    """
    Trapezoidal ROC AUC.

    Raises:
        UndefinedMetricError: If one of the classes is absent
    """
    data = _normalize(pairs)
    positives, negatives = _class_counts(data)
    # twice the area, in units of one positive times one negative
    area2 = 0
    tp = 0
    for _, group_tp, group_fp in _grouped_counts(data):
        area2 += group_fp * (2 * tp + group_tp)
        tp += group_tp
    return area2 / (2 * positives * negatives)


def accuracy(pairs: Iterable, threshold: float = 0.5) -> float:
    """Fraction of samples where (score >= threshold) agrees with label == fake."""
    data = _normalize(pairs)
    if not data:
        raise ConfigError("accuracy needs at least one sample")
    correct = sum(1 for s, label in data if (s >= threshold) == (label == 1))
    return correct / len(data)
