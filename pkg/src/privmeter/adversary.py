"""Simulated adversaries: graded estimate distributions over SNP genotypes.

Three model families, each a ladder from weakest to strongest:

* ``normal``     truth probability drawn from TruncNormal(mu, 0.1) on [0, 1],
                 mu walking 0.1 .. 0.9;
* ``uniform``    truth probability drawn from TruncNormal(0.99, sigma) with
                 sigma shrinking 7 .. 0.05 (near-uniform to near-certain);
* ``reference``  Hardy-Weinberg population statistics, with a signed portion
                 of SNPs overridden to full certainty (+) or full
                 wrongness (-).

Every distribution is clamped onto the probability simplex with an epsilon
floor of 1e-9 so no downstream logarithm can blow up.
"""

from __future__ import annotations

import csv
import math
import pathlib
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import DataError, NumericError, UsageError
from .genome import AlleleFrequencyRecord, ScenarioDataset, hardy_weinberg_probs

EPSILON = 1e-9
# Additive form of the epsilon floor: adding delta to every coordinate and
# renormalizing keeps the simplex sum exact and puts zero entries at
# precisely EPSILON.
_DELTA = EPSILON / (1.0 - 3.0 * EPSILON)

NORMAL_MUS = (0.1, 0.25, 0.4, 0.6, 0.75, 0.9)
NORMAL_SIGMA = 0.1
UNIFORM_MU = 0.99
UNIFORM_SIGMAS = (7.0, 2.0, 1.0, 0.5, 0.25, 0.1, 0.05)
REFERENCE_PORTIONS = (-0.10, -0.05, -0.01, 0.0, 0.01, 0.05, 0.10, 0.50, 1.00)

#: heat-map column order
MODEL_NAMES = ("uniform", "normal", "reference")

_MODEL_IDS = {name: i for i, name in enumerate(MODEL_NAMES)}
_ESTIMATE_DOMAIN = 2  # tag separating estimate draws from other seeded stages


@dataclass(frozen=True)
class AdversaryLevel:
    """One rung of a model ladder; index 0 is the weakest adversary."""

    model: str
    index: int
    mu: float | None = None
    sigma: float | None = None
    portion: float | None = None

    def label(self) -> str:
        if self.model == "normal":
            return f"mu={self.mu:g}"
        if self.model == "uniform":
            return f"sigma={self.sigma:g}"
        return f"portion={self.portion:+g}"


def ladder(model: str) -> tuple[AdversaryLevel, ...]:
    """The weakest-to-strongest level ladder of an adversary model."""
    if model == "normal":
        return tuple(
            AdversaryLevel("normal", i, mu=mu, sigma=NORMAL_SIGMA)
            for i, mu in enumerate(NORMAL_MUS)
        )
    if model == "uniform":
        return tuple(
            AdversaryLevel("uniform", i, mu=UNIFORM_MU, sigma=s)
            for i, s in enumerate(UNIFORM_SIGMAS)
        )
    if model == "reference":
        return tuple(
            AdversaryLevel("reference", i, portion=p)
            for i, p in enumerate(REFERENCE_PORTIONS)
        )
    raise UsageError(f"unknown adversary model {model!r}")


def floor_simplex(p: np.ndarray) -> np.ndarray:
    """Project rows onto the simplex with every entry at least EPSILON."""
    q = np.maximum(np.asarray(p, dtype=float), 0.0)
    total = q.sum(axis=-1, keepdims=True)
    q = np.divide(q, total, out=q, where=total > 0)
    q += _DELTA
    return q / q.sum(axis=-1, keepdims=True)


def cell_rng(
    master_seed: int, model: str, level_index: int, replication: int, individual_index: int
) -> np.random.Generator:
    """Independent RNG stream for one (level, replication, individual) cell.

    The stream is a pure function of the master seed and the cell key, so
    generated estimates do not depend on iteration order or thread count.
    """
    seq = np.random.SeedSequence(
        entropy=master_seed,
        spawn_key=(
            _ESTIMATE_DOMAIN,
            _MODEL_IDS[model],
            level_index,
            replication,
            individual_index,
        ),
    )
    return np.random.default_rng(seq)


def sample_truncated_normal(
    mu: float, sigma: float, size: int, rng: np.random.Generator
) -> np.ndarray:
    """Inverse-CDF draws from Normal(mu, sigma) conditioned on [0, 1]."""
    if sigma <= 0:
        raise UsageError("sigma must be positive")
    lo = float(ndtr((0.0 - mu) / sigma))
    hi = float(ndtr((1.0 - mu) / sigma))
    if hi - lo <= 0.0:
        raise NumericError(f"truncated normal has no mass in [0, 1] for mu={mu}, sigma={sigma}")
    u = rng.random(size)
    x = mu + sigma * ndtri(lo + u * (hi - lo))
    return np.clip(x, 0.0, 1.0)


def _distribute(truth: np.ndarray, t: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Place mass t on the truth; split the rest (u, 1-u) over the two wrong
    genotype values taken in increasing order."""
    rows = np.arange(truth.size)
    est = np.empty((truth.size, 3), dtype=float)
    lower = np.where(truth == 0, 1, 0)
    upper = np.where(truth == 2, 1, 2)
    est[rows, truth] = t
    est[rows, lower] = u * (1.0 - t)
    est[rows, upper] = (1.0 - u) * (1.0 - t)
    return est


def reference_estimate(freq: AlleleFrequencyRecord | float) -> np.ndarray:
    """Population-statistics estimate: the floored Hardy-Weinberg triple."""
    maf = freq.maf if isinstance(freq, AlleleFrequencyRecord) else float(freq)
    if not 0.0 <= maf <= 0.5:
        raise UsageError("maf must lie in [0, 0.5]")
    return floor_simplex(hardy_weinberg_probs(maf))


def normal_estimate(
    truth: int, mu: float, rng: np.random.Generator, sigma: float = NORMAL_SIGMA
) -> np.ndarray:
    """One normal-model estimate distribution for a single SNP."""
    _check_truth(truth)
    t = sample_truncated_normal(mu, sigma, 1, rng)
    u = rng.random(1)
    return floor_simplex(_distribute(np.array([truth]), t, u))[0]


def uniform_estimate(
    truth: int, sigma: float, rng: np.random.Generator, mu: float = UNIFORM_MU
) -> np.ndarray:
    """One uniform-model estimate distribution for a single SNP."""
    _check_truth(truth)
    t = sample_truncated_normal(mu, sigma, 1, rng)
    u = rng.random(1)
    return floor_simplex(_distribute(np.array([truth]), t, u))[0]


def _check_truth(truth: int) -> None:
    if truth not in (0, 1, 2):
        raise UsageError(f"truth must be 0, 1 or 2, got {truth!r}")


def reference_perturbed(
    maf: np.ndarray,
    truth: np.ndarray,
    portion: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Reference estimates with a random portion overridden, for one
    (individual, replication).

    ``portion`` in [-1, 1]: ceil(|portion| * S) SNPs are sampled without
    replacement; positive portions give those SNPs certainty on the truth,
    negative portions give them zero truth mass with the rest split over the
    wrong values proportionally to their Hardy-Weinberg weights (equally when
    both weights are zero).
    """
    if not -1.0 <= portion <= 1.0:
        raise UsageError("portion must lie in [-1, 1]")
    maf = np.asarray(maf, dtype=float)
    truth = np.asarray(truth)
    if maf.shape != truth.shape:
        raise UsageError("maf and truth must have the same shape")
    hw = hardy_weinberg_probs(maf)
    base = hw.copy()
    size = truth.size
    m = math.ceil(abs(portion) * size)
    if m > 0:
        members = rng.choice(size, size=m, replace=False)
        sel_truth = truth[members]
        rows = np.arange(m)
        patch = np.zeros((m, 3), dtype=float)
        if portion > 0:
            patch[rows, sel_truth] = 1.0
        else:
            lower = np.where(sel_truth == 0, 1, 0)
            upper = np.where(sel_truth == 2, 1, 2)
            wa = hw[members, lower]
            wb = hw[members, upper]
            s = wa + wb
            frac = np.where(s > 0.0, wa / np.where(s > 0.0, s, 1.0), 0.5)
            patch[rows, lower] = frac
            patch[rows, upper] = 1.0 - frac
        base[members] = patch
    return floor_simplex(base)


def estimate_block(
    level: AdversaryLevel,
    truth: np.ndarray,
    maf: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    """Estimate rows for one (individual, replication) over a truth vector."""
    if level.model == "reference":
        return reference_perturbed(maf, truth, level.portion, rng)
    t = sample_truncated_normal(level.mu, level.sigma, truth.size, rng)
    u = rng.random(truth.size)
    return floor_simplex(_distribute(truth, t, u))


@dataclass
class EstimateSet:
    """Dense estimates for one adversary level over a scenario grid.

    ``probs`` has shape (replications, individuals, rsids, 3) with NaN rows
    where the scenario truth is missing.
    """

    individuals: list[str]
    rsids: list[str]
    level: AdversaryLevel
    replications: int
    probs: np.ndarray

    def distribution(self, individual: str, rsid: str, replication: int) -> np.ndarray:
        i = self.individuals.index(individual)
        j = self.rsids.index(rsid)
        row = self.probs[replication, i, j]
        if np.isnan(row).any():
            raise DataError(f"no estimate for missing cell ({individual}, {rsid})")
        return row


def build_estimate_set(
    dataset: ScenarioDataset,
    level: AdversaryLevel,
    replications: int,
    master_seed: int,
) -> EstimateSet:
    """Generate the full (replication, individual) grid of estimates."""
    if replications < 1:
        raise UsageError("need at least one replication")
    probs = np.full(
        (replications, dataset.n_individuals, dataset.n_snps, 3), np.nan, dtype=float
    )
    for rep in range(replications):
        for i in range(dataset.n_individuals):
            valid = np.flatnonzero(dataset.valid[i])
            if valid.size == 0:
                continue
            rng = cell_rng(master_seed, level.model, level.index, rep, i)
            probs[rep, i, valid] = estimate_block(
                level, dataset.truth[i, valid], dataset.maf[valid], rng
            )
    return EstimateSet(list(dataset.individuals), list(dataset.rsids), level, replications, probs)


# ---------------------------------------------------------------------------
# persistence


def write_estimates(path: str | pathlib.Path, est: EstimateSet) -> None:
    """Write an estimate set as CSV rows individual,rsid,replication,p0,p1,p2."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["individual", "rsid", "replication", "p0", "p1", "p2"])
        for rep in range(est.replications):
            for i, individual in enumerate(est.individuals):
                for j, rsid in enumerate(est.rsids):
                    row = est.probs[rep, i, j]
                    if np.isnan(row[0]):
                        continue
                    writer.writerow(
                        [individual, rsid, rep]
                        + [f"{v:.12g}" for v in row]
                    )


def read_estimates(path: str | pathlib.Path) -> dict[tuple[str, str, int], np.ndarray]:
    """Read an estimate CSV back into a (individual, rsid, replication) map."""
    out: dict[tuple[str, str, int], np.ndarray] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["individual", "rsid", "replication", "p0", "p1", "p2"]:
            raise DataError(f"{path} is not an estimate CSV")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 6:
                raise DataError(f"{path} line {lineno}: expected 6 columns")
            try:
                rep = int(row[2])
                probs = np.array([float(row[3]), float(row[4]), float(row[5])])
            except ValueError as exc:
                raise DataError(f"{path} line {lineno}: {exc}") from exc
            out[(row[0], row[1], rep)] = probs
    if not out:
        raise DataError(f"{path} holds no estimates")
    return out
