"""Dataset-level folding.

For every ordered pair of classes, folding values are collected over a
seeded sample of point pairs (one path per pair, walked adaptively), the
median of the non-zero values gives the pair's chi_plus, and the mean of
chi_plus over all ordered inter-class pairs is the global measure phi.
Intra-class pairs are collected the same way so the two populations can be
compared with a Mann-Whitney rank test.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .folding import chi
from .network import Mlp
from .sampler import DEFAULT_DELTA_INIT, DEFAULT_DELTA_MIN, sample_adaptive


@dataclass
class LabeledDataset:
    """Input vectors with integer class labels."""

    inputs: np.ndarray  # shape (n, d)
    labels: np.ndarray  # shape (n,), non-negative integers

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.inputs.ndim != 2:
            raise ValueError("inputs must be a 2-d array of row vectors")
        if self.labels.shape != (self.inputs.shape[0],):
            raise ValueError("labels and inputs must have the same length")
        if len(self.labels) and self.labels.min() < 0:
            raise ValueError("labels must be non-negative integers")

    @property
    def classes(self) -> list[int]:
        return [int(c) for c in np.unique(self.labels)]

    @property
    def n_classes(self) -> int:
        return len(np.unique(self.labels))

    def by_class(self, label: int) -> np.ndarray:
        return self.inputs[self.labels == label]


def load_dataset_csv(source) -> LabeledDataset:
    """Read a dataset CSV: header x_0,...,x_{d-1},label; label a non-negative int."""
    close = False
    if not hasattr(source, "read"):
        source = open(source, "r", newline="")
        close = True
    try:
        rows = list(csv.reader(source))
    finally:
        if close:
            source.close()
    if not rows:
        raise ValueError("dataset CSV is empty")
    header = rows[0]
    if len(header) < 2 or header[-1].strip() != "label":
        raise ValueError('dataset CSV needs feature columns followed by a "label" column')
    d = len(header) - 1
    inputs, labels = [], []
    for i, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != d + 1:
            raise ValueError(f"dataset CSV line {i}: expected {d + 1} columns, got {len(row)}")
        try:
            inputs.append([float(v) for v in row[:-1]])
            labels.append(int(row[-1]))
        except ValueError as exc:
            raise ValueError(f"dataset CSV line {i}: {exc}") from exc
    if not inputs:
        raise ValueError("dataset CSV has no data rows")
    return LabeledDataset(np.asarray(inputs), np.asarray(labels))


def save_dataset_csv(data: LabeledDataset, dest) -> None:
    close = False
    if not hasattr(dest, "write"):
        dest = open(dest, "w", newline="")
        close = True
    try:
        writer = csv.writer(dest, lineterminator="\n")
        d = data.inputs.shape[1]
        writer.writerow([f"x_{j}" for j in range(d)] + ["label"])
        for x, y in zip(data.inputs, data.labels):
            writer.writerow([repr(float(v)) for v in x] + [int(y)])
    finally:
        if close:
            dest.close()


@dataclass
class MannWhitneyResult:
    u_statistic: float
    z_score: float
    effect_size_r: float

    def to_json_dict(self) -> dict:
        return {
            "u_statistic": self.u_statistic,
            "z_score": self.z_score,
            "effect_size_r": self.effect_size_r,
        }


@dataclass
class ClassPairStats:
    class_from: int
    class_to: int
    chi_values: list[Fraction]
    chi_plus: Fraction
    n_zero: int
    n_pairs_evaluated: int

    def to_json_dict(self) -> dict:
        return {
            "class_from": self.class_from,
            "class_to": self.class_to,
            "chi_plus": {"num": self.chi_plus.numerator, "den": self.chi_plus.denominator},
            "chi_plus_decimal": float(self.chi_plus),
            "n_zero": self.n_zero,
            "n_pairs_evaluated": self.n_pairs_evaluated,
            "chi_values": [{"num": v.numerator, "den": v.denominator} for v in self.chi_values],
        }


@dataclass
class GlobalFoldingReport:
    phi: Fraction
    per_pair: list[ClassPairStats]  # ordered inter-class pairs
    intra_stats: list[ClassPairStats]
    mw_test: Optional[MannWhitneyResult]

    def to_json_dict(self) -> dict:
        return {
            "phi": {"num": self.phi.numerator, "den": self.phi.denominator},
            "phi_decimal": float(self.phi),
            "per_pair": [s.to_json_dict() for s in self.per_pair],
            "intra_stats": [s.to_json_dict() for s in self.intra_stats],
            "mw_test": None if self.mw_test is None else self.mw_test.to_json_dict(),
        }


def write_pair_csv(report: GlobalFoldingReport, dest) -> None:
    """Companion table for plotting: one row per class pair, intra rows last."""
    close = False
    if not hasattr(dest, "write"):
        dest = open(dest, "w", newline="")
        close = True
    try:
        writer = csv.writer(dest, lineterminator="\n")
        writer.writerow(["class_from", "class_to", "chi_plus", "n_pairs", "n_zero"])
        for stats in list(report.per_pair) + list(report.intra_stats):
            writer.writerow(
                [
                    stats.class_from,
                    stats.class_to,
                    repr(float(stats.chi_plus)),
                    stats.n_pairs_evaluated,
                    stats.n_zero,
                ]
            )
    finally:
        if close:
            dest.close()


def draw_distinct_indices(n_total: int, k: int, rng: np.random.Generator) -> list[int]:
    """First k entries of a seeded virtual shuffle of range(n_total).

    Partial Fisher-Yates with a sparse swap table, so for a fixed generator
    state the first k draws do not depend on how many more are requested
    (budget increases extend the stream, never rewrite it).
    """
    k = min(k, n_total)
    swaps: dict[int, int] = {}
    out = []
    for i in range(k):
        j = int(rng.integers(i, n_total))
        vi = swaps.get(i, i)
        vj = swaps.get(j, j)
        out.append(vj)
        swaps[j] = vi
    return out


def pairwise_chi(
    net: Mlp,
    from_samples,
    to_samples,
    budget: int,
    seed: int,
    delta_init: float = DEFAULT_DELTA_INIT,
    delta_min: float = DEFAULT_DELTA_MIN,
) -> list[Fraction]:
    """Folding values over up to `budget` distinct ordered sample pairs.

    Pairs are drawn uniformly without replacement by the seeded generator;
    a pair with coinciding endpoints contributes 0 (singleton path).
    """
    a = np.asarray(from_samples, dtype=np.float64)
    b = np.asarray(to_samples, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or len(a) == 0 or len(b) == 0:
        raise ValueError("both sample lists must be non-empty 2-d arrays")
    if budget < 1:
        raise ValueError("budget must be at least 1")
    rng = np.random.default_rng(seed)
    values: list[Fraction] = []
    for flat in draw_distinct_indices(len(a) * len(b), budget, rng):
        x_from = a[flat // len(b)]
        x_to = b[flat % len(b)]
        if np.array_equal(x_from, x_to):
            values.append(Fraction(0))
            continue
        path = sample_adaptive(net, x_from, x_to, delta_init, delta_min)
        values.append(chi(path))
    return values


def chi_plus(values: Sequence[Fraction]) -> Fraction:
    """Median of the strictly positive values (lower of the middle two); 0 if none."""
    if len(values) == 0:
        raise ValueError("chi_plus needs at least one value")
    positive = sorted(v for v in values if v > 0)
    if not positive:
        return Fraction(0)
    return positive[(len(positive) - 1) // 2]


def _midranks(values: Sequence[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        mid = (i + j + 2) / 2.0  # average of 1-based ranks i+1 .. j+1
        for k in range(i, j + 1):
            ranks[order[k]] = mid
        i = j + 1
    return ranks


def mann_whitney_u(xs: Sequence[float], ys: Sequence[float]) -> MannWhitneyResult:
    """Rank-sum U for the first sample (ties get midranks), with a tie-corrected
    normal z and effect size r = z / sqrt(n1 + n2). No continuity correction.

    U counts pairs where x exceeds y, plus half of the tied pairs.
    """
    xs = [float(v) for v in xs]
    ys = [float(v) for v in ys]
    if not xs or not ys:
        raise ValueError("both samples must be non-empty")
    n1, n2 = len(xs), len(ys)
    pooled = xs + ys
    ranks = _midranks(pooled)
    rank_sum_x = sum(ranks[:n1])
    u = rank_sum_x - n1 * (n1 + 1) / 2.0

    n = n1 + n2
    tie_term = 0.0
    for v in set(pooled):
        t = pooled.count(v)
        tie_term += t**3 - t
    variance = n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    if variance <= 0:
        z = 0.0
    else:
        z = (u - n1 * n2 / 2.0) / math.sqrt(variance)
    return MannWhitneyResult(u_statistic=u, z_score=z, effect_size_r=z / math.sqrt(n))


def _pair_seed(seed: int, class_from: int, class_to: int) -> int:
    ss = np.random.SeedSequence([int(seed), int(class_from), int(class_to)])
    return int(ss.generate_state(1)[0])


def global_phi(
    net: Mlp,
    data: LabeledDataset,
    budget_per_pair: int = 200,
    seed: int = 0,
    delta_init: float = DEFAULT_DELTA_INIT,
    delta_min: float = DEFAULT_DELTA_MIN,
    max_workers: Optional[int] = None,
) -> GlobalFoldingReport:
    """Mean of chi_plus over all ordered inter-class pairs, with per-pair stats.

    Every class pair gets its own generator derived from (seed, class ids),
    so results are identical no matter how the pairs are scheduled.
    """
    classes = data.classes
    if len(classes) < 2:
        raise ValueError("global folding needs at least 2 classes")
    samples = {c: data.by_class(c) for c in classes}
    tasks = [(ci, cj) for ci in classes for cj in classes]

    def run(pair: tuple[int, int]) -> ClassPairStats:
        ci, cj = pair
        values = pairwise_chi(
            net,
            samples[ci],
            samples[cj],
            budget_per_pair,
            _pair_seed(seed, ci, cj),
            delta_init,
            delta_min,
        )
        return ClassPairStats(
            class_from=ci,
            class_to=cj,
            chi_values=values,
            chi_plus=chi_plus(values),
            n_zero=sum(1 for v in values if v == 0),
            n_pairs_evaluated=len(values),
        )

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        results = list(pool.map(run, tasks))

    inter = [s for s in results if s.class_from != s.class_to]
    intra = [s for s in results if s.class_from == s.class_to]
    phi = sum((s.chi_plus for s in inter), Fraction(0)) / len(inter)

    intra_values = [float(v) for s in intra for v in s.chi_values]
    inter_values = [float(v) for s in inter for v in s.chi_values]
    mw = None
    if intra_values and inter_values:
        mw = mann_whitney_u(intra_values, inter_values)
    return GlobalFoldingReport(phi=phi, per_pair=inter, intra_stats=intra, mw_test=mw)
