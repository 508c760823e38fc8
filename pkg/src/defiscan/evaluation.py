"""Under-sampled train/test experiments and the importance-driven model ladders."""

from __future__ import annotations

import enum
import json
import math
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DegenerateLabelsError, ExperimentError, ShapeError, StratificationError
from .features import FeatureMatrix, fit_standardization
from .models import (ElasticNetModel, feature_importances, fit_elastic_net, fit_logistic,
                     fit_random_forest)


class Family(str, enum.Enum):
    FOREST = "forest"
    LOGISTIC = "logistic"
    ELASTIC_NET = "elastic_net"


@dataclass(frozen=True)
class ExperimentConfig:
    family: Family = Family.FOREST
    features: tuple[str, ...] | None = None  # None means every column
    iterations: int = 100
    train_fraction: float = 0.7
    base_seed: int = 0
    name: str = ""
    description: str = ""
    n_trees: int = 100
    features_per_split: int | None = None
    max_depth: int | None = None
    max_iter: int = 1000
    en_alpha: float = 0.001
    en_strength: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if self.features is not None:
            object.__setattr__(self, "features", tuple(self.features))
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie strictly between 0 and 1")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    per_class: dict = field(default_factory=dict, compare=False)

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in METRIC_NAMES}


METRIC_NAMES = ("accuracy", "weighted_precision", "weighted_recall", "weighted_f1")


@dataclass(frozen=True)
class IterationResult:
    metrics: Metrics
    importances: np.ndarray

    @property
    def accuracy(self) -> float:
        return self.metrics.accuracy

    @property
    def weighted_precision(self) -> float:
        return self.metrics.weighted_precision

    @property
    def weighted_recall(self) -> float:
        return self.metrics.weighted_recall

    @property
    def weighted_f1(self) -> float:
        return self.metrics.weighted_f1


# ------------------------------------------------------------------ sampling


def round_half_away(x: float) -> int:
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


def _two_classes(labels) -> tuple[np.ndarray, np.ndarray]:
    pos = np.flatnonzero(labels == 1)
    neg = np.flatnonzero(labels == 0)
    if pos.size == 0 or neg.size == 0:
        raise DegenerateLabelsError("both classes must be present")
    return pos, neg


def undersample(matrix: FeatureMatrix, seed: int) -> FeatureMatrix:
    """Keep every minority row and an equal-size uniform draw of the majority.

    Selected rows keep their original relative order.
    """
    pos, neg = _two_classes(matrix.labels)
    if pos.size == neg.size:
        return matrix.rows(np.arange(matrix.n_rows))
    minority, majority = (pos, neg) if pos.size < neg.size else (neg, pos)
    rng = np.random.default_rng(seed)
    drawn = rng.choice(majority, size=minority.size, replace=False)
    return matrix.rows(np.sort(np.concatenate([minority, drawn])))


def split(matrix: FeatureMatrix, train_fraction: float, seed: int,
          max_attempts: int = 100) -> tuple[FeatureMatrix, FeatureMatrix]:
    """Unstratified random partition; redraws until the train part has both classes."""
    pos, neg = _two_classes(matrix.labels)
    if pos.size < 2 or neg.size < 2:
        raise StratificationError("need at least 2 rows per class to split")
    n = matrix.n_rows
    n_train = round_half_away(train_fraction * n)
    if not 1 <= n_train < n:
        raise StratificationError(f"train size {n_train} leaves no test rows out of {n}")
    rng = np.random.default_rng(seed)
    for _ in range(max_attempts):
        perm = rng.permutation(n)
        tr, te = np.sort(perm[:n_train]), np.sort(perm[n_train:])
        if np.unique(matrix.labels[tr]).size == 2:
            return matrix.rows(tr), matrix.rows(te)
    raise StratificationError(f"no two-class training split in {max_attempts} attempts")


# ------------------------------------------------------------------- metrics


def weighted_metrics(y_true, y_pred) -> Metrics:
    """Accuracy plus support-weighted precision/recall/F1 over classes in ``y_true``.

    Precision of a class never predicted is 0, as is its F1.
    """
    y_true = np.asarray(y_true).ravel()
    y_pred = np.asarray(y_pred).ravel()
    if y_true.shape != y_pred.shape:
        raise ShapeError(f"length mismatch: {y_true.size} vs {y_pred.size}")
    if y_true.size == 0:
        raise ShapeError("empty label vectors")
    n = y_true.size
    per_class = {}
    wp = wr = wf = 0.0
    for c in np.unique(y_true):
        tp = int(np.sum((y_true == c) & (y_pred == c)))
        support = int(np.sum(y_true == c))
        predicted = int(np.sum(y_pred == c))
        p = tp / predicted if predicted else 0.0
        r = tp / support
        f = 2 * p * r / (p + r) if p + r > 0 else 0.0
        per_class[int(c)] = {"precision": p, "recall": r, "f1": f, "support": support}
        w = support / n
        wp += w * p
        wr += w * r
        wf += w * f
    return Metrics(float(np.mean(y_true == y_pred)), wp, wr, wf, per_class)


# --------------------------------------------------------------- experiments


@dataclass
class EvalReport:
    config: ExperimentConfig
    feature_names: tuple[str, ...]
    per_iteration: list[IterationResult]

    @property
    def mean_metrics(self) -> dict[str, float]:
        return {k: float(np.mean([getattr(r.metrics, k) for r in self.per_iteration]))
                for k in METRIC_NAMES}

    @property
    def mean_importances(self) -> np.ndarray:
        return np.mean([r.importances for r in self.per_iteration], axis=0)

    def ranked_importances(self) -> list[tuple[str, float]]:
        """(feature, mean importance), by decreasing magnitude then mnemonic."""
        pairs = zip(self.feature_names, self.mean_importances.tolist())
        return sorted(pairs, key=lambda p: (-abs(p[1]), p[0]))

    def top_features(self, k: int) -> tuple[str, ...]:
        return tuple(name for name, _ in self.ranked_importances()[:k])

    def to_dict(self) -> dict:
        cfg = asdict(self.config)
        cfg["family"] = self.config.family.value
        return {
            "name": self.config.name,
            "config": cfg,
            "feature_names": list(self.feature_names),
            "mean_metrics": self.mean_metrics,
            "ranked_importances": [[n, v] for n, v in self.ranked_importances()],
            "per_iteration": [
                {**r.metrics.as_dict(), "importances": r.importances.tolist()}
                for r in self.per_iteration
            ],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _standardize_train_test(train_X, test_X):
    std = fit_standardization(train_X)
    return std, std.apply(train_X), std.apply(test_X)


def _run_iteration(matrix: FeatureMatrix, config: ExperimentConfig, i: int) -> IterationResult:
    seed = config.base_seed + i
    balanced = undersample(matrix, seed)
    train, test = split(balanced, config.train_fraction, seed)
    d = len(matrix.schema)
    if config.family is Family.FOREST:
        model = fit_random_forest(
            train.X, train.labels, n_trees=config.n_trees,
            features_per_split=config.features_per_split, max_depth=config.max_depth,
            # disjoint per-tree seed ranges across iterations
            seed=seed * config.n_trees,
        )
        pred = model.predict(test.X)
        imp = feature_importances(model)
    else:
        std, Ztr, Zte = _standardize_train_test(train.X, test.X)
        if config.family is Family.LOGISTIC:
            model = fit_logistic(Ztr, train.labels, max_iter=config.max_iter)
        else:
            model = fit_elastic_net(Ztr, train.labels.astype(float),
                                    alpha=config.en_alpha, strength=config.en_strength)
        pred = model.predict(Zte)
        imp = np.zeros(d)
        imp[std.retained] = feature_importances(model)
    return IterationResult(weighted_metrics(test.labels, pred), imp)


def _iteration_job(args):
    matrix, config, i = args
    try:
        return _run_iteration(matrix, config, i)
    except Exception as exc:  # re-raised with the iteration index attached
        raise ExperimentError(i, exc) from exc


def run_experiment(matrix: FeatureMatrix, config: ExperimentConfig, n_jobs: int = 1) -> EvalReport:
    """Repeat undersample -> split -> fit -> score with seed ``base_seed + i``.

    Results are collected in iteration order, so ``n_jobs`` never changes the
    report.
    """
    sub = matrix if config.features is None else matrix.select(config.features)
    _two_classes(sub.labels)
    jobs = [(sub, config, i) for i in range(config.iterations)]
    if n_jobs == 1:
        results = [_iteration_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=n_jobs if n_jobs > 0 else None) as pool:
            results = list(pool.map(_iteration_job, jobs))
    return EvalReport(config, sub.columns, results)


# ------------------------------------------------------------ feature ladders


@dataclass(frozen=True)
class Exploration:
    """Elastic-net fit over the full (unbalanced) standardized corpus."""

    model: ElasticNetModel
    feature_names: tuple[str, ...]

    @property
    def nonzero(self) -> tuple[str, ...]:
        return tuple(self.feature_names[i] for i in self.model.nonzero)

    def ranked(self) -> list[tuple[str, float]]:
        pairs = zip(self.feature_names, self.model.coefficients.tolist())
        return sorted((p for p in pairs if p[1] != 0.0), key=lambda p: (-abs(p[1]), p[0]))

    def top(self, k: int) -> tuple[str, ...]:
        return tuple(n for n, _ in self.ranked()[:k])


def explore(matrix: FeatureMatrix, alpha: float = 0.001, strength: float = 1.0) -> Exploration:
    std = fit_standardization(matrix.X)
    names = tuple(matrix.columns[i] for i in std.retained)
    model = fit_elastic_net(std.apply(matrix.X), matrix.labels.astype(float),
                            alpha=alpha, strength=strength, feature_names=names)
    return Exploration(model, names)


def _clamp(names: Sequence[str], k: int) -> tuple[str, ...]:
    return tuple(names[: min(k, len(names))])


FOREST_LADDER = (
    # name, description, source, k   (source: None=all, "EN"=elastic-net nonzero,
    #                                  "ENTOP"=elastic-net top k, or a rung name)
    ("RF1", "Full-feature model", None, None),
    ("RF2", "Top 10 features of RF1", "RF1", 10),
    ("RF3", "Top 3 features of RF1", "RF1", 3),
    ("RF4", "Top feature of RF1", "RF1", 1),
    ("RF5", "Non-zero coefficients of EN regression model", "EN", None),
    ("RF6", "Top 10 features of RF5", "RF5", 10),
    ("RF7", "Top 3 features of RF5", "RF5", 3),
    ("RF8", "Top feature of RF5", "RF5", 1),
    ("RF9", "Top 10 features of EN regression model", "ENTOP", 10),
)

LOGISTIC_LADDER = (
    ("LR1", "Full-feature model", None, None),
    ("LR2", "Top 10 features of LR1", "LR1", 10),
    ("LR3", "Top 8 features of LR1", "LR1", 8),
    ("LR4", "All non-zero coefficients of EN regression", "EN", None),
    ("LR5", "Top 10 features of LR4", "LR4", 10),
    ("LR6", "Top 9 features of LR4", "LR4", 9),
    ("LR7", "Top 10 features of EN regression model", "ENTOP", 10),
)


def ladder(
    matrix: FeatureMatrix,
    family: Family | str = Family.FOREST,
    base_seed: int = 0,
    *,
    iterations: int = 100,
    exploration: Exploration | None = None,
    n_jobs: int = 1,
    **config_kw,
) -> list[EvalReport]:
    """Run the RF1-RF9 (forest) or LR1-LR7 (logistic) sequence.

    Subsets come from the mean importances of earlier rungs and from an
    elastic-net exploration of the full corpus (computed if not given).
    Requested sizes larger than the available feature count are clamped.
    """
    family = Family(family)
    if family is Family.FOREST:
        rungs = FOREST_LADDER
    elif family is Family.LOGISTIC:
        rungs = LOGISTIC_LADDER
    else:
        raise ValueError("ladders are defined for the forest and logistic families only")
    en_kw = {k: config_kw[k] for k in ("en_alpha", "en_strength") if k in config_kw}
    if exploration is None:
        exploration = explore(matrix, alpha=en_kw.get("en_alpha", 0.001),
                              strength=en_kw.get("en_strength", 1.0))

    done: dict[str, EvalReport] = {}
    reports = []
    for name, desc, source, k in rungs:
        if source is None:
            feats = None
        elif source == "EN":
            feats = exploration.nonzero
        elif source == "ENTOP":
            feats = exploration.top(k)
        else:
            ranked = [n for n, _ in done[source].ranked_importances()]
            feats = _clamp(ranked, k)
        if feats is not None and not feats:
            raise ShapeError(f"{name}: empty feature subset (elastic net kept no features?)")
        cfg = ExperimentConfig(family=family, features=feats, iterations=iterations,
                               base_seed=base_seed, name=name, description=desc, **config_kw)
        report = run_experiment(matrix, cfg, n_jobs=n_jobs)
        done[name] = report
        reports.append(report)
    return reports


def best_report(reports: Sequence[EvalReport], metric: str = "weighted_f1") -> EvalReport:
    return max(reports, key=lambda r: r.mean_metrics[metric])


def format_reports(reports: Sequence[EvalReport], top: int = 10) -> str:
    lines = [f"{'model':<6} {'accuracy':>9} {'precision':>9} {'recall':>9} {'f1':>9}  description"]
    for r in reports:
        m = r.mean_metrics
        lines.append(f"{r.config.name or '-':<6} {m['accuracy']:9.3f} {m['weighted_precision']:9.3f} "
                     f"{m['weighted_recall']:9.3f} {m['weighted_f1']:9.3f}  {r.config.description}")
    for r in reports:
        lines.append("")
        lines.append(f"{r.config.name or 'model'} feature importance")
        for name, v in r.ranked_importances()[:top]:
            lines.append(f"  {name:<14} {v:8.3f}")
    return "\n".join(lines)
