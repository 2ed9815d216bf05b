"""Privacy metrics over genotype estimate distributions.

Twenty-four metrics are implemented (max-entropy is carried along but marked
as not evaluated, being the constant log2(3) for three genotype outcomes).
Thirteen metrics are per-SNP and are additionally aggregated to one value
per individual; the rest are defined directly on an individual's whole SNP
set.  All logarithms are base 2 and 0*log(0) is taken as 0.

Directions: ``higher_is_private`` metrics grow when the adversary is weak,
``lower_is_private`` metrics grow when the adversary is strong.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .adversary import floor_simplex
from .errors import DataError, UsageError
from .genome import hardy_weinberg_probs

LOG2_3 = math.log2(3.0)

HIGHER = "higher_is_private"
LOWER = "lower_is_private"


@dataclass(frozen=True)
class MetricInfo:
    name: str
    direction: str
    per_snp: bool
    evaluated: bool = True


_REGISTRY_ROWS = (
    # name, direction, per_snp, evaluated
    ("adversarys_success_rate", LOWER, False, True),
    ("amount_of_information_leaked", LOWER, False, True),
    ("asymmetric_entropy", HIGHER, False, True),
    ("asymmetric_entropy_per_snp", HIGHER, True, True),
    ("coefficient_of_determination", LOWER, False, True),
    ("conditional_entropy", HIGHER, True, True),
    ("conditional_privacy_loss", LOWER, True, True),
    ("cumulative_entropy", HIGHER, False, True),
    ("entropy", HIGHER, True, True),
    ("expected_estimation_error", HIGHER, True, True),
    ("health_privacy", HIGHER, False, True),
    ("information_surprisal", HIGHER, True, True),
    ("inherent_privacy", HIGHER, True, True),
    ("max_entropy", HIGHER, False, False),  # constant log2(3): not evaluated
    ("mean_error", HIGHER, False, True),
    ("mean_squared_error", HIGHER, False, True),
    ("min_entropy", HIGHER, True, True),
    ("mutual_information", LOWER, True, True),
    ("normalized_entropy", HIGHER, True, True),
    ("normalized_mutual_information", HIGHER, True, True),
    ("percentage_incorrectly_classified", HIGHER, False, True),
    ("relative_entropy", HIGHER, True, True),
    ("user_specified_innocence", HIGHER, False, True),
    ("variation_of_information", LOWER, True, True),
)

REGISTRY: dict[str, MetricInfo] = {
    name: MetricInfo(name, direction, per_snp, evaluated)
    for name, direction, per_snp, evaluated in _REGISTRY_ROWS
}

METRIC_NAMES = tuple(REGISTRY)
PER_SNP_METRICS = tuple(m.name for m in REGISTRY.values() if m.per_snp)
EVALUATED_METRICS = tuple(m.name for m in REGISTRY.values() if m.evaluated)

#: per-SNP metrics allowed as the base of health privacy
PERMITTED_HEALTH_BASES = (
    "expected_estimation_error",
    "normalized_entropy",
    "normalized_mutual_information",
    "relative_entropy",
    "conditional_entropy",
    "information_surprisal",
    "min_entropy",
)

#: mean probability assigned to the truth; reported alongside the metrics
#: but not itself ranked (the success-rate reading used for ranking counts
#: argmax hits instead)
AUX_SUCCESS_PROBABILITY = "success_probability_mean"


@dataclass(frozen=True)
class MetricParams:
    """Tunable knobs shared by the metric computations."""

    ali_threshold: float = 0.7
    usi_threshold: float = 0.3
    health_weights: Mapping[str, float] | None = None
    health_base: str = "expected_estimation_error"
    aggregation: str = "arithmetic_mean"
    r2_input: str = "truth_probability"

    def __post_init__(self):
        if not 0.0 < self.ali_threshold <= 1.0:
            raise UsageError("ali_threshold must lie in (0, 1]")
        if not 0.0 <= self.usi_threshold < 1.0:
            raise UsageError("usi_threshold must lie in [0, 1)")
        if self.health_base not in PERMITTED_HEALTH_BASES:
            raise UsageError(
                f"health_base must be one of {PERMITTED_HEALTH_BASES}, got {self.health_base!r}"
            )
        if self.aggregation not in ("arithmetic_mean", "maf_weighted_mean"):
            raise UsageError(f"unknown aggregation {self.aggregation!r}")
        if self.r2_input not in ("truth_probability", "point_estimate"):
            raise UsageError(f"unknown r2_input {self.r2_input!r}")
        if self.health_weights is not None:
            if not self.health_weights:
                raise UsageError("health_weights must not be empty")
            for rsid, c in self.health_weights.items():
                if c < 0:
                    raise UsageError(f"health weight for {rsid} is negative")
            if not any(c > 0 for c in self.health_weights.values()):
                raise UsageError("health_weights needs at least one positive entry")


# ---------------------------------------------------------------------------
# elementary kernels (rows of shape (..., 3); all return arrays over the
# leading axes, or python-friendly 0-d arrays for single rows)


def _log2_safe(p: np.ndarray) -> np.ndarray:
    """log2 with zeros mapped so that p*log2(p) contributes 0 at p == 0."""
    return np.log2(np.where(p > 0.0, p, 1.0))


def entropy(est: np.ndarray) -> np.ndarray:
    """Shannon entropy -sum p log2 p of each estimate row, in bits."""
    p = np.asarray(est, dtype=float)
    return -(p * _log2_safe(p)).sum(axis=-1)


def entropy_variants(est: np.ndarray) -> dict[str, np.ndarray]:
    """Normalized entropy, min-entropy, max-entropy and inherent privacy."""
    p = np.asarray(est, dtype=float)
    h = entropy(p)
    return {
        "normalized_entropy": h / LOG2_3,
        "min_entropy": -np.log2(p.max(axis=-1)),
        "max_entropy": np.broadcast_to(LOG2_3, h.shape).copy() if h.ndim else LOG2_3,
        "inherent_privacy": np.exp2(h),
    }


def cumulative_entropy(est_rows: np.ndarray) -> float:
    """Sum of the per-SNP entropies of an individual's estimate rows."""
    rows = np.asarray(est_rows, dtype=float)
    if rows.ndim != 2 or rows.shape[0] < 1:
        raise UsageError("cumulative entropy needs at least one estimate row")
    return float(entropy(rows).sum())


def prior_information_family(est: np.ndarray, prior: np.ndarray) -> dict[str, np.ndarray]:
    """Mutual-information family built from prior and posterior entropies.

    The information gained about one SNP is I = H(prior) - H(estimate);
    conditional entropy is the remaining posterior entropy, and the
    conditional-privacy / loss / normalized / distance variants all derive
    from I.
    """
    h_prior = entropy(prior)
    h_est = entropy(est)
    info = h_prior - h_est
    return {
        "mutual_information": info,
        "conditional_entropy": h_est,
        "conditional_privacy": np.exp2(h_est),
        "conditional_privacy_loss": 1.0 - np.exp2(-info),
        "normalized_mutual_information": 1.0 - info / LOG2_3,
        "variation_of_information": 3.0 * h_est - h_prior,
    }


def relative_entropy(truth_dist: np.ndarray, est: np.ndarray) -> np.ndarray:
    """Kullback-Leibler divergence (bits) from the estimate to the truth
    distribution, sum p_y * (log2 p_y - log2 p_x)."""
    py = np.asarray(truth_dist, dtype=float)
    px = np.asarray(est, dtype=float)
    mask = py > 0.0
    with np.errstate(divide="ignore"):  # a zero estimate on supported truth mass diverges
        terms = np.where(mask, py * (_log2_safe(py) - np.log2(np.where(mask, px, 1.0))), 0.0)
    return terms.sum(axis=-1)


def one_hot(truth: np.ndarray) -> np.ndarray:
    """Degenerate distribution(s) concentrated on the true genotype."""
    return np.eye(3)[np.asarray(truth)]


def truth_probability(est: np.ndarray, truth: np.ndarray) -> np.ndarray:
    """The probability each estimate row assigns to the true genotype."""
    est = np.asarray(est, dtype=float)
    idx = np.asarray(truth)[..., None]
    return np.take_along_axis(est, idx, axis=-1)[..., 0]


def information_surprisal(est: np.ndarray, truth: np.ndarray) -> np.ndarray:
    """Self-information -log2 p(truth) of the true genotype, in bits."""
    return -np.log2(truth_probability(est, truth))


def expected_estimation_error(est: np.ndarray, truth: np.ndarray) -> np.ndarray:
    """Expected absolute distance between estimate and truth on encoded
    genotype values: sum_k p(k) * |k - truth|."""
    est = np.asarray(est, dtype=float)
    k = np.arange(3.0)
    dist = np.abs(k - np.asarray(truth, dtype=float)[..., None])
    return (est * dist).sum(axis=-1)


def asymmetric_entropy_term(
    est: np.ndarray, maf: np.ndarray, truth: np.ndarray
) -> np.ndarray:
    """Per-SNP asymmetric entropy p(1-p) / ((-2w+1)p + w^2).

    w is the Hardy-Weinberg weight of the true genotype at the SNP's minor
    allele frequency, which makes the term peak at the population-statistics
    estimate (where it equals exactly 1).  Denominators within 1e-12 of zero
    are replaced by 1e-12 with their sign kept.
    """
    p = truth_probability(est, truth)
    w = truth_probability(hardy_weinberg_probs(np.asarray(maf, dtype=float)), truth)
    den = (-2.0 * w + 1.0) * p + w * w
    den = np.where(np.abs(den) < 1e-12, np.copysign(1e-12, den), den)
    return p * (1.0 - p) / den


def asymmetric_entropy(est_rows: np.ndarray, mafs: np.ndarray, truths: np.ndarray) -> float:
    """Sum of the asymmetric-entropy terms over an individual's SNP set."""
    rows = np.asarray(est_rows, dtype=float)
    if rows.ndim != 2 or rows.shape[0] < 1:
        raise UsageError("asymmetric entropy needs at least one estimate row")
    return float(asymmetric_entropy_term(rows, mafs, truths).sum())


def point_estimate(est: np.ndarray) -> np.ndarray:
    """Expected encoded genotype sum_k k * p(k), in [0, 2]."""
    return (np.asarray(est, dtype=float) * np.arange(3.0)).sum(axis=-1)


def classified_correctly(est: np.ndarray, truth: np.ndarray) -> np.ndarray:
    """Whether the most probable genotype equals the truth, ties broken
    toward the smallest genotype value."""
    est = np.asarray(est, dtype=float)
    return np.argmax(est, axis=-1) == np.asarray(truth)


def error_family(est_rows: np.ndarray, truths: np.ndarray) -> dict[str, float]:
    """Mean error, mean squared error and the misclassification fraction."""
    rows = np.asarray(est_rows, dtype=float)
    if rows.ndim != 2 or rows.shape[0] < 1:
        raise UsageError("error family needs at least one estimate row")
    pe = point_estimate(rows)
    diff = pe - np.asarray(truths, dtype=float)
    wrong = ~classified_correctly(rows, truths)
    return {
        "mean_error": float(np.abs(diff).mean()),
        "mean_squared_error": float((diff * diff).mean()),
        "percentage_incorrectly_classified": wrong.sum() / wrong.size,
    }


def adversarys_success_rate(est_rows: np.ndarray, truths: np.ndarray) -> float:
    """Fraction of SNPs whose most probable genotype is the truth.

    Computed as one minus the misclassification fraction so the complement
    identity with percentage-incorrectly-classified holds bit-exactly.
    """
    pic = error_family(est_rows, truths)["percentage_incorrectly_classified"]
    return 1.0 - pic


def leak_counts(
    truth_probs: np.ndarray, ali_threshold: float = 0.7, usi_threshold: float = 0.3
) -> dict[str, int]:
    """SNP counts leaked (p(truth) above the leak threshold) and still
    innocent (p(truth) at or below the innocence threshold)."""
    if not 0.0 < ali_threshold <= 1.0:
        raise UsageError("ali_threshold must lie in (0, 1]")
    if not 0.0 <= usi_threshold < 1.0:
        raise UsageError("usi_threshold must lie in [0, 1)")
    pt = np.asarray(truth_probs, dtype=float)
    return {
        "amount_of_information_leaked": int((pt > ali_threshold).sum()),
        "user_specified_innocence": int((pt <= usi_threshold).sum()),
    }


def r_squared(x: np.ndarray, y: np.ndarray) -> float:
    """Coefficient of determination 1 - SS_E / (SS_R + SS_E) of predictor x
    against observed y, with SS_R taken around the mean of y.  A fully
    degenerate fit (both sums below 1e-12) scores 1."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        raise UsageError("coefficient of determination needs at least two SNPs")
    ss_e = float(((y - x) ** 2).sum())
    ss_r = float(((x - y.mean()) ** 2).sum())
    total = ss_r + ss_e
    if total < 1e-12:
        return 1.0
    return 1.0 - ss_e / total


def coefficient_of_determination(est_rows: np.ndarray, truths: np.ndarray) -> float:
    """r-squared of the adversary's point estimates against the truths."""
    return r_squared(point_estimate(est_rows), truths)


def health_privacy(base_values: np.ndarray, weights: np.ndarray) -> float:
    """Weighted, normalized sum of a per-SNP base metric over health SNPs."""
    v = np.asarray(base_values, dtype=float)
    c = np.asarray(weights, dtype=float)
    if v.shape != c.shape:
        raise UsageError("health weights and base values must align")
    if v.size < 1:
        raise UsageError("health privacy needs at least one SNP")
    if (c < 0).any():
        raise UsageError("health weights must be non-negative")
    total = c.sum()
    if total <= 0:
        raise UsageError("health weights must sum to a positive value")
    return float((c * v).sum() / total)


def aggregate_per_individual(
    values: np.ndarray, mode: str = "arithmetic_mean", mafs: np.ndarray | None = None
) -> float:
    """Collapse per-SNP metric values to one number per individual."""
    v = np.asarray(values, dtype=float)
    if v.size < 1:
        raise UsageError("cannot aggregate an empty value set")
    if mode == "arithmetic_mean":
        return float(v.mean())
    if mode == "maf_weighted_mean":
        if mafs is None:
            raise UsageError("maf-weighted aggregation needs frequencies")
        w = np.asarray(mafs, dtype=float)
        if w.shape != v.shape:
            raise UsageError("maf weights must align with values")
        total = w.sum()
        if total <= 0:
            raise DataError("maf weights are all zero; cannot weight")
        return float((w * v).sum() / total)
    raise UsageError(f"unknown aggregation {mode!r}")


# ---------------------------------------------------------------------------
# full per-individual evaluation


@dataclass
class IndividualMetrics:
    """All metric values for one (individual, replication) estimate set."""

    scalars: dict[str, float]
    per_snp: dict[str, np.ndarray]


def default_health_index(n_snps: int, limit: int = 1000) -> np.ndarray:
    """Default health SNP selection: the first min(limit, n) scenario SNPs."""
    return np.arange(min(limit, n_snps))


def compute_individual_metrics(
    est: np.ndarray,
    truth: np.ndarray,
    maf: np.ndarray,
    params: MetricParams = MetricParams(),
    health_idx: np.ndarray | None = None,
    health_c: np.ndarray | None = None,
    extra_health_bases: Sequence[str] = (),
) -> IndividualMetrics:
    """Evaluate every metric for one individual.

    est: (S, 3) floored estimate rows; truth: (S,) genotype values;
    maf: (S,) minor allele frequencies.  health_idx/health_c select and
    weight the health SNPs (defaults: first min(1000, S) SNPs, equal
    weights).  extra_health_bases adds health-privacy variants keyed
    ``health_privacy:<base>``.
    """
    est = np.asarray(est, dtype=float)
    truth = np.asarray(truth)
    maf = np.asarray(maf, dtype=float)
    if est.ndim != 2 or est.shape[1] != 3:
        raise UsageError("est must have shape (S, 3)")
    n = est.shape[0]
    if n < 1:
        raise UsageError("metrics need at least one SNP")
    if truth.shape != (n,) or maf.shape != (n,):
        raise UsageError("truth and maf must align with est")

    prior = floor_simplex(hardy_weinberg_probs(maf))
    pt = truth_probability(est, truth)
    family = prior_information_family(est, prior)
    variants = entropy_variants(est)

    per_snp: dict[str, np.ndarray] = {
        "entropy": entropy(est),
        "normalized_entropy": variants["normalized_entropy"],
        "min_entropy": variants["min_entropy"],
        "inherent_privacy": variants["inherent_privacy"],
        "conditional_entropy": family["conditional_entropy"],
        "mutual_information": family["mutual_information"],
        "conditional_privacy_loss": family["conditional_privacy_loss"],
        "normalized_mutual_information": family["normalized_mutual_information"],
        "variation_of_information": family["variation_of_information"],
        "relative_entropy": relative_entropy(one_hot(truth), est),
        "information_surprisal": information_surprisal(est, truth),
        "expected_estimation_error": expected_estimation_error(est, truth),
        "asymmetric_entropy_per_snp": asymmetric_entropy_term(est, maf, truth),
    }

    scalars: dict[str, float] = {}
    for name, values in per_snp.items():
        scalars[name] = aggregate_per_individual(values, params.aggregation, maf)

    scalars.update(error_family(est, truth))
    scalars["adversarys_success_rate"] = 1.0 - scalars["percentage_incorrectly_classified"]
    counts = leak_counts(pt, params.ali_threshold, params.usi_threshold)
    scalars["amount_of_information_leaked"] = float(counts["amount_of_information_leaked"])
    scalars["user_specified_innocence"] = float(counts["user_specified_innocence"])
    scalars["cumulative_entropy"] = cumulative_entropy(est)
    scalars["asymmetric_entropy"] = float(per_snp["asymmetric_entropy_per_snp"].sum())
    scalars["max_entropy"] = LOG2_3
    if n >= 2:
        predictor = pt if params.r2_input == "truth_probability" else point_estimate(est)
        scalars["coefficient_of_determination"] = r_squared(predictor, truth)
    else:
        scalars["coefficient_of_determination"] = float("nan")
    scalars[AUX_SUCCESS_PROBABILITY] = float(pt.mean())

    if health_idx is None:
        health_idx = default_health_index(n)
    health_idx = np.asarray(health_idx)
    if health_idx.size and (health_idx.min() < 0 or health_idx.max() >= n):
        raise DataError("health SNP index outside the scenario set")
    if health_c is None:
        health_c = np.ones(health_idx.size)
    bases = dict.fromkeys((params.health_base, *extra_health_bases))
    for base in bases:
        if base not in PERMITTED_HEALTH_BASES:
            raise UsageError(f"health base {base!r} not allowed")
        value = health_privacy(per_snp[base][health_idx], health_c)
        if base == params.health_base:
            scalars["health_privacy"] = value
        if extra_health_bases:
            scalars[f"health_privacy:{base}"] = value

    return IndividualMetrics(scalars=scalars, per_snp=per_snp)
