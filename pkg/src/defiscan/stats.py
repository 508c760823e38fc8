"""Class mean comparisons (t-tests, Cohen's d) and cosine-similarity analysis."""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import asdict, dataclass

import numpy as np

from .errors import InsufficientDataError, ShapeError, UndefinedEffectError, UndefinedSimilarityError
from .features import FeatureMatrix
from .ingest import Label

log = logging.getLogger(__name__)

Z_95 = 1.96


# ------------------------------------------------------- t distribution tail


def _betacf(a: float, b: float, x: float, max_iter: int = 20_000, eps: float = 1e-16) -> float:
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > tiny else tiny)
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _betacf(a, b, x) / a
    return 1.0 - math.exp(log_front) * _betacf(b, a, 1.0 - x) / b


def t_two_sided_p(t: float, df: float) -> float:
    """P(|T| >= |t|) for Student's t with ``df`` degrees of freedom."""
    if math.isnan(t):
        return math.nan
    if math.isinf(t):
        return 0.0
    return betainc(df / 2.0, 0.5, df / (df + t * t))


# ------------------------------------------------------------------- t-tests


@dataclass(frozen=True)
class TTest:
    t_value: float
    p_value: float
    df: float


def _describe(sample) -> tuple[float, float, int]:
    x = np.asarray(sample, dtype=float).ravel()
    if x.size < 2:
        raise InsufficientDataError("each sample needs at least 2 values")
    if not np.all(np.isfinite(x)):
        raise ValueError("samples must be finite")
    return float(x.mean()), float(x.std(ddof=1)), int(x.size)


def t_test_from_stats(mean_a, sd_a, n_a, mean_b, sd_b, n_b, *, equal_var: bool = False) -> TTest:
    """Two-sample t-test from summary statistics (sds with ddof=1).

    ``equal_var=False`` is Welch's test with Welch-Satterthwaite df;
    ``True`` is the pooled-variance Student test.
    """
    if n_a < 2 or n_b < 2:
        raise InsufficientDataError("each sample needs at least 2 values")
    va, vb = sd_a**2, sd_b**2
    diff = mean_a - mean_b
    if equal_var:
        df = n_a + n_b - 2.0
        pooled = ((n_a - 1) * va + (n_b - 1) * vb) / df
        se2 = pooled * (1.0 / n_a + 1.0 / n_b)
    else:
        qa, qb = va / n_a, vb / n_b
        se2 = qa + qb
        df = se2**2 / (qa**2 / (n_a - 1) + qb**2 / (n_b - 1)) if se2 > 0 else n_a + n_b - 2.0
    if se2 == 0:
        if diff == 0:
            return TTest(0.0, 1.0, df)
        return TTest(math.copysign(math.inf, diff), 0.0, df)
    t = diff / math.sqrt(se2)
    return TTest(t, t_two_sided_p(t, df), df)


def welch_t_test(sample_a, sample_b) -> TTest:
    return t_test_from_stats(*_describe(sample_a), *_describe(sample_b), equal_var=False)


def student_t_test(sample_a, sample_b) -> TTest:
    return t_test_from_stats(*_describe(sample_a), *_describe(sample_b), equal_var=True)


# --------------------------------------------------------------- effect size


@dataclass(frozen=True)
class EffectSize:
    d: float
    ci_low: float
    ci_high: float


def cohens_d_from_stats(mean_a, sd_a, n_a, mean_b, sd_b, n_b) -> EffectSize:
    """Pooled-sd Cohen's d with a normal-approximation 95% interval."""
    if n_a < 2 or n_b < 2:
        raise InsufficientDataError("each sample needs at least 2 values")
    pooled = math.sqrt(((n_a - 1) * sd_a**2 + (n_b - 1) * sd_b**2) / (n_a + n_b - 2))
    diff = mean_a - mean_b
    if pooled == 0:
        if diff == 0:
            return EffectSize(0.0, 0.0, 0.0)
        raise UndefinedEffectError("zero pooled sd with unequal means")
    d = diff / pooled
    se = math.sqrt((n_a + n_b) / (n_a * n_b) + d * d / (2.0 * (n_a + n_b)))
    return EffectSize(d, d - Z_95 * se, d + Z_95 * se)


def cohens_d(sample_a, sample_b) -> EffectSize:
    return cohens_d_from_stats(*_describe(sample_a), *_describe(sample_b))


# ------------------------------------------------------------ opcode means


@dataclass(frozen=True)
class MeanComparison:
    opcode: str
    mean_a: float
    sd_a: float
    mean_b: float
    sd_b: float
    t_value: float
    p_value: float
    cohens_d: float
    ci_low: float
    ci_high: float


def compare_samples(label: str, a, b, *, equal_var: bool = True) -> MeanComparison:
    sa, sb = _describe(a), _describe(b)
    tt = t_test_from_stats(*sa, *sb, equal_var=equal_var)
    es = cohens_d_from_stats(*sa, *sb)
    return MeanComparison(label, sa[0], sa[1], sb[0], sb[1], tt.t_value, tt.p_value,
                          es.d, es.ci_low, es.ci_high)


def opcode_mean_table(matrix: FeatureMatrix, opcodes: Sequence[str], *,
                      equal_var: bool = True) -> list[MeanComparison]:
    """Violations (a) against legitimate contracts (b), per opcode, on the full corpus.

    Defaults to the pooled-variance t-test; pass ``equal_var=False`` for Welch.
    """
    viol = matrix.labels == int(Label.VIOLATION)
    out = []
    for op in opcodes:
        col = matrix.column(op)
        out.append(compare_samples(op, col[viol], col[~viol], equal_var=equal_var))
    return out


def format_mean_table(rows: Sequence[MeanComparison]) -> str:
    head = (f"{'Opcode':<14} {'Mean(V)':>8} {'SD(V)':>8} {'Mean(L)':>8} {'SD(L)':>8} "
            f"{'t':>8} {'p':>8} {'d':>7}  CI(95%)")
    lines = [head]
    for r in rows:
        p = "<0.001" if r.p_value < 0.001 else f"{r.p_value:.3f}"
        lines.append(f"{r.opcode:<14} {r.mean_a:8.3f} {r.sd_a:8.3f} {r.mean_b:8.3f} {r.sd_b:8.3f} "
                     f"{r.t_value:8.3f} {p:>8} {r.cohens_d:7.3f}  [{r.ci_low:.3f}, {r.ci_high:.3f}]")
    return "\n".join(lines)


# --------------------------------------------------------- cosine similarity


def cosine(u, v) -> float:
    u = np.asarray(u, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    if u.shape != v.shape:
        raise ShapeError(f"vector lengths differ: {u.size} vs {v.size}")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise UndefinedSimilarityError("cosine similarity is undefined for a zero vector")
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def _unit_rows(X: np.ndarray) -> tuple[np.ndarray, int]:
    norms = np.linalg.norm(X, axis=1)
    keep = norms > 0
    return X[keep] / norms[keep, None], int((~keep).sum())


def within_similarities(X) -> np.ndarray:
    """Cosines for all unordered row pairs."""
    U, _ = _unit_rows(np.asarray(X, dtype=float))
    iu = np.triu_indices(U.shape[0], k=1)
    return np.clip((U @ U.T)[iu], -1.0, 1.0)


def between_similarities(X, Y) -> np.ndarray:
    U, _ = _unit_rows(np.asarray(X, dtype=float))
    V, _ = _unit_rows(np.asarray(Y, dtype=float))
    return np.clip(U @ V.T, -1.0, 1.0).ravel()


@dataclass(frozen=True)
class SimilarityReport:
    within_violation_mean: float
    within_violation_sd: float
    within_legitimate_mean: float
    within_legitimate_sd: float
    inter_class_mean: float
    inter_class_sd: float
    n_pairs: dict
    skipped_zero_rows: int
    comparisons: dict  # name -> MeanComparison

    def to_dict(self) -> dict:
        d = asdict(self)
        d["comparisons"] = {k: asdict(v) for k, v in self.comparisons.items()}
        return d


def class_similarity(matrix: FeatureMatrix) -> SimilarityReport:
    """Within-violation, within-legitimate and cross-class cosine distributions.

    Each within-class set is compared with the cross-class set, and the two
    within-class sets with each other, using pooled t-tests and Cohen's d.
    Pairs share contracts, so those tests are descriptive only.
    """
    Xv = matrix.class_rows(Label.VIOLATION)
    Xl = matrix.class_rows(Label.LEGITIMATE)
    Uv, skip_v = _unit_rows(Xv)
    Ul, skip_l = _unit_rows(Xl)
    skipped = skip_v + skip_l
    if skipped:
        log.warning("skipped %d zero-vector rows in similarity analysis", skipped)
    # three rows give three pairs, the minimum for a spread and a test
    if Uv.shape[0] < 3 or Ul.shape[0] < 3:
        raise InsufficientDataError("need at least 3 non-zero rows per class")

    sv = within_similarities(Uv)
    sl = within_similarities(Ul)
    si = between_similarities(Uv, Ul)

    def msd(x):
        return float(x.mean()), float(x.std(ddof=1))

    comparisons = {
        "violation_vs_inter": compare_samples("violation_vs_inter", sv, si),
        "legitimate_vs_inter": compare_samples("legitimate_vs_inter", sl, si),
        "legitimate_vs_violation": compare_samples("legitimate_vs_violation", sl, sv),
    }
    return SimilarityReport(
        *msd(sv), *msd(sl), *msd(si),
        n_pairs={"violation": int(sv.size), "legitimate": int(sl.size), "inter_class": int(si.size)},
        skipped_zero_rows=skipped,
        comparisons=comparisons,
    )


def format_similarity(rep: SimilarityReport) -> str:
    rows = [
        ("Securities violations", rep.within_violation_mean, rep.within_violation_sd,
         rep.comparisons["violation_vs_inter"]),
        ("Legitimate", rep.within_legitimate_mean, rep.within_legitimate_sd,
         rep.comparisons["legitimate_vs_inter"]),
        ("Inter-class", rep.inter_class_mean, rep.inter_class_sd,
         rep.comparisons["legitimate_vs_violation"]),
    ]
    lines = [f"{'Class':<22} {'Mean':>7} {'SD':>7} {'t':>9} {'p':>8} {'d':>7}  CI(95%)"]
    for name, m, s, c in rows:
        p = "<0.001" if c.p_value < 0.001 else f"{c.p_value:.3f}"
        lines.append(f"{name:<22} {m:7.3f} {s:7.3f} {c.t_value:9.3f} {p:>8} {c.cohens_d:7.3f}  "
                     f"[{c.ci_low:.3f}, {c.ci_high:.3f}]")
    lines.append("(last row's test compares the legitimate and violation within-class sets)")
    return "\n".join(lines)
