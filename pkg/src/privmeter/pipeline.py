"""End-to-end orchestration: scenarios -> estimates -> metrics -> strength.

Work is split into (replication, individual) cells whose RNG streams are
derived from the master seed and the cell coordinates alone, so results are
identical no matter how many worker threads run or in which order cells
complete.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import pathlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .adversary import (
    AdversaryLevel,
    MODEL_NAMES,
    cell_rng,
    estimate_block,
    ladder,
)
from .errors import DataError, UsageError
from .genome import (
    ALZHEIMER_RSIDS,
    Cohort,
    ScenarioDataset,
    alzheimer_spec,
    comparison_spec,
    kin_spec,
    select_scenario,
    synthesize_cohort,
    synthesize_pedigree,
    utah_spec,
    _child_genotypes,
    _draw_frequencies,
    Genome,
    sample_genotypes,
)
from .metrics import (
    AUX_SUCCESS_PROBABILITY,
    EVALUATED_METRICS,
    METRIC_NAMES,
    MetricParams,
    REGISTRY,
    compute_individual_metrics,
    default_health_index,
)
from .stats import mean_ci
from .strength import (
    StrengthConfig,
    StrengthHeatMap,
    PairDetail,
    StrengthCell,
    evaluate_strength,
    heatmap_payload,
)

__version__ = "0.1.0"

#: seed-tree domains (domain 2 is claimed by the estimate streams)
_DOMAIN_COHORT = 0
_DOMAIN_SCENARIO = 1

_SCENARIO_IDS = {"utah": 0, "kin": 1, "comparison": 2, "alzheimer": 3, "custom": 4}


def derive_seed(master_seed: int, domain: int, index: int = 0) -> int:
    """Independent integer sub-seed for a pipeline stage."""
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=(domain, index))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def thread_count(explicit: int | None = None) -> int:
    """Worker count: explicit argument, PRIVMETER_THREADS, or logical cores."""
    if explicit is not None:
        if explicit < 1:
            raise UsageError("thread count must be at least 1")
        return explicit
    env = os.environ.get("PRIVMETER_THREADS")
    if env:
        try:
            value = int(env)
        except ValueError:
            raise UsageError(f"PRIVMETER_THREADS={env!r} is not an integer")
        if value < 1:
            raise UsageError("PRIVMETER_THREADS must be at least 1")
        return value
    return os.cpu_count() or 1


# ---------------------------------------------------------------------------
# scenario presets (desk-scale defaults)


@dataclass
class ScenarioData:
    name: str
    cohort: Cohort
    dataset: ScenarioDataset


def build_comparison(master_seed: int, individuals: int = 100, snps: int = 10000) -> ScenarioData:
    """Unrelated cohort; metrics run over every individual and SNP."""
    seed = derive_seed(master_seed, _DOMAIN_COHORT, _SCENARIO_IDS["comparison"])
    cohort = synthesize_cohort(individuals, snps, seed=seed)
    dataset = select_scenario(cohort, comparison_spec(snps))
    return ScenarioData("comparison", cohort, dataset)


def build_kin(master_seed: int, families: int = 13, snps: int = 2000) -> ScenarioData:
    """Parent-child pairs: each family contributes one couple and one child;
    the scenario evaluates the 2 x families related individuals."""
    if families < 1:
        raise UsageError("kin scenario needs at least one family")
    seed = derive_seed(master_seed, _DOMAIN_COHORT, _SCENARIO_IDS["kin"])
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    rsids, maf, table = _draw_frequencies(snps, (0.05, 0.5), rng, None)
    founders = sample_genotypes(maf, 2 * families, rng)
    genomes = []
    pairs = []
    pedigree = {}
    for f in range(families):
        pa, pb = founders[2 * f], founders[2 * f + 1]
        ida, idb = f"fam{f:02d}p0", f"fam{f:02d}p1"
        child = _child_genotypes(pa, pb, rng)
        idc = f"fam{f:02d}c0"
        for member_id, values in ((ida, pa), (idb, pb), (idc, child)):
            genomes.append(Genome(member_id, dict(zip(rsids, map(int, values)))))
        pedigree[idc] = (ida, idb)
        pairs.append((ida, idc))
    cohort = Cohort(genomes, table, provenance="synthetic-kin", pedigree=pedigree)
    dataset = select_scenario(cohort, kin_spec(pairs))
    return ScenarioData("kin", cohort, dataset)


def build_utah(
    master_seed: int,
    founder_pairs: int = 2,
    generations: int = 3,
    children_per_couple: int = 2,
    snps: int = 2000,
) -> ScenarioData:
    """One multi-generation pedigree; every family member is evaluated."""
    seed = derive_seed(master_seed, _DOMAIN_COHORT, _SCENARIO_IDS["utah"])
    cohort = synthesize_pedigree(
        founder_pairs, generations, snps, seed=seed, children_per_couple=children_per_couple
    )
    dataset = select_scenario(cohort, utah_spec())
    return ScenarioData("utah", cohort, dataset)


def build_alzheimer(master_seed: int, individuals: int = 50, filler_snps: int = 47) -> ScenarioData:
    """Cohort carrying the three Alzheimer risk SNPs; metrics run on those
    three rsids only."""
    seed = derive_seed(master_seed, _DOMAIN_COHORT, _SCENARIO_IDS["alzheimer"])
    rsids = list(ALZHEIMER_RSIDS) + [f"rs{i + 1}" for i in range(filler_snps)]
    cohort = synthesize_cohort(individuals, len(rsids), seed=seed, rsids=rsids)
    dataset = select_scenario(cohort, alzheimer_spec())
    return ScenarioData("alzheimer", cohort, dataset)


_SCENARIO_BUILDERS = {
    "comparison": build_comparison,
    "kin": build_kin,
    "utah": build_utah,
    "alzheimer": build_alzheimer,
}


def build_scenario(name: str, master_seed: int, **overrides) -> ScenarioData:
    if name not in _SCENARIO_BUILDERS:
        raise UsageError(
            f"unknown scenario {name!r}; choose from {sorted(_SCENARIO_BUILDERS)}"
        )
    return _SCENARIO_BUILDERS[name](master_seed, **overrides)


# ---------------------------------------------------------------------------
# metric tables


@dataclass
class MetricTable:
    """Per-individual metric values for one (scenario, model, level)."""

    scenario: str
    model: str
    level: AdversaryLevel
    replications: int
    individuals: list[str]
    metric_names: list[str]
    values: np.ndarray  # (replications, individuals, metrics)

    def column(self, metric: str) -> np.ndarray:
        try:
            m = self.metric_names.index(metric)
        except ValueError:
            raise UsageError(f"metric {metric!r} not in table") from None
        return self.values[:, :, m]

    def pooled(self, metric: str) -> np.ndarray:
        """All per-individual values pooled over replications."""
        return self.column(metric).reshape(-1)


def _resolve_health(
    dataset: ScenarioDataset, params: MetricParams
) -> tuple[np.ndarray, np.ndarray, bool]:
    """Global health SNP indices, weights, and whether they were explicit."""
    if params.health_weights is None:
        idx = default_health_index(dataset.n_snps)
        return idx, np.ones(idx.size), False
    position = {rsid: j for j, rsid in enumerate(dataset.rsids)}
    idx, weights = [], []
    for rsid, c in params.health_weights.items():
        if rsid not in position:
            raise DataError(f"health weight rsid {rsid} is not in the scenario")
        idx.append(position[rsid])
        weights.append(c)
    order = np.argsort(idx)
    return np.asarray(idx)[order], np.asarray(weights, dtype=float)[order], True


def _cell_vector(
    dataset: ScenarioDataset,
    level: AdversaryLevel,
    rep: int,
    i: int,
    master_seed: int,
    params: MetricParams,
    health_idx: np.ndarray,
    health_c: np.ndarray,
    health_explicit: bool,
    extra_health_bases: Sequence[str],
    names: Sequence[str],
) -> np.ndarray:
    valid = np.flatnonzero(dataset.valid[i])
    individual = dataset.individuals[i]
    if valid.size == 0:
        raise DataError(f"individual {individual} has no usable SNPs in the scenario")
    rng = cell_rng(master_seed, level.model, level.index, rep, i)
    est = estimate_block(level, dataset.truth[i, valid], dataset.maf[valid], rng)

    # health indices refer to scenario SNP positions; map them into this
    # individual's present subset
    position_in_valid = np.full(dataset.n_snps, -1)
    position_in_valid[valid] = np.arange(valid.size)
    mapped = position_in_valid[health_idx]
    present = mapped >= 0
    if health_explicit and not present.all():
        missing = dataset.rsids[health_idx[~present][0]]
        raise DataError(f"health SNP {missing} is missing for individual {individual}")
    if not present.any():
        raise DataError(f"individual {individual} carries none of the health SNPs")

    out = compute_individual_metrics(
        est,
        dataset.truth[i, valid],
        dataset.maf[valid],
        params,
        health_idx=mapped[present],
        health_c=health_c[present],
        extra_health_bases=extra_health_bases,
    )
    return np.array([out.scalars[name] for name in names])


def metric_table_columns(
    params: MetricParams, extra_health_bases: Sequence[str] = ()
) -> list[str]:
    """Deterministic column order of a metric table."""
    names = set(METRIC_NAMES) | {AUX_SUCCESS_PROBABILITY}
    if extra_health_bases:
        for base in dict.fromkeys((params.health_base, *extra_health_bases)):
            names.add(f"health_privacy:{base}")
    return sorted(names)


def compute_level_metrics(
    dataset: ScenarioDataset,
    level: AdversaryLevel,
    replications: int,
    master_seed: int,
    params: MetricParams = MetricParams(),
    extra_health_bases: Sequence[str] = (),
    threads: int | None = None,
) -> MetricTable:
    """All per-individual metrics for one adversary level."""
    if replications < 1:
        raise UsageError("need at least one replication")
    health_idx, health_c, health_explicit = _resolve_health(dataset, params)
    names = metric_table_columns(params, extra_health_bases)
    values = np.empty((replications, dataset.n_individuals, len(names)))

    cells = [(rep, i) for rep in range(replications) for i in range(dataset.n_individuals)]

    def work(cell):
        rep, i = cell
        return rep, i, _cell_vector(
            dataset, level, rep, i, master_seed, params,
            health_idx, health_c, health_explicit, extra_health_bases, names,
        )

    workers = thread_count(threads)
    if workers == 1:
        results = map(work, cells)
        for rep, i, vec in results:
            values[rep, i] = vec
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for rep, i, vec in pool.map(work, cells, chunksize=16):
                values[rep, i] = vec
    return MetricTable(
        scenario=dataset.name,
        model=level.model,
        level=level,
        replications=replications,
        individuals=list(dataset.individuals),
        metric_names=list(names),
        values=values,
    )


def compute_level_metrics_from_probs(
    dataset: ScenarioDataset,
    level: AdversaryLevel,
    probs: np.ndarray,
    params: MetricParams = MetricParams(),
    extra_health_bases: Sequence[str] = (),
) -> MetricTable:
    """Metric table from pre-recorded estimate distributions.

    ``probs`` has shape (replications, individuals, snps, 3) with NaN rows
    where the truth is missing.  Rows are re-floored before use so that
    round-tripping through a 12-significant-digit CSV cannot leave a row
    whose probabilities sum slightly off one.
    """
    from .adversary import floor_simplex

    if probs.ndim != 4 or probs.shape[1] != dataset.n_individuals or (
        probs.shape[2] != dataset.n_snps or probs.shape[3] != 3
    ):
        raise DataError("estimate array does not match the scenario grid")
    replications = probs.shape[0]
    health_idx, health_c, health_explicit = _resolve_health(dataset, params)
    names = metric_table_columns(params, extra_health_bases)
    values = np.empty((replications, dataset.n_individuals, len(names)))
    for rep in range(replications):
        for i in range(dataset.n_individuals):
            valid = np.flatnonzero(dataset.valid[i])
            individual = dataset.individuals[i]
            if valid.size == 0:
                raise DataError(f"individual {individual} has no usable SNPs")
            est = probs[rep, i, valid]
            if np.isnan(est).any():
                raise DataError(
                    f"estimates missing for individual {individual} "
                    f"at level {level.label()} replication {rep}"
                )
            est = floor_simplex(est)
            position_in_valid = np.full(dataset.n_snps, -1)
            position_in_valid[valid] = np.arange(valid.size)
            mapped = position_in_valid[health_idx]
            present = mapped >= 0
            if health_explicit and not present.all():
                missing = dataset.rsids[health_idx[~present][0]]
                raise DataError(
                    f"health SNP {missing} is missing for individual {individual}"
                )
            if not present.any():
                raise DataError(f"individual {individual} carries none of the health SNPs")
            out = compute_individual_metrics(
                est, dataset.truth[i, valid], dataset.maf[valid], params,
                health_idx=mapped[present], health_c=health_c[present],
                extra_health_bases=extra_health_bases,
            )
            values[rep, i] = [out.scalars[name] for name in names]
    return MetricTable(
        scenario=dataset.name,
        model=level.model,
        level=level,
        replications=replications,
        individuals=list(dataset.individuals),
        metric_names=list(names),
        values=values,
    )


def compute_model_tables(
    dataset: ScenarioDataset,
    model: str,
    replications: int,
    master_seed: int,
    params: MetricParams = MetricParams(),
    extra_health_bases: Sequence[str] = (),
    threads: int | None = None,
) -> list[MetricTable]:
    """Metric tables for the full ladder of one adversary model."""
    return [
        compute_level_metrics(
            dataset, level, replications, master_seed, params, extra_health_bases, threads
        )
        for level in ladder(model)
    ]


# ---------------------------------------------------------------------------
# strength wiring


def metric_series(tables: Sequence[MetricTable], metric: str) -> list[np.ndarray]:
    """Pooled per-level samples of one metric, ordered weakest -> strongest."""
    ordered = sorted(tables, key=lambda t: t.level.index)
    return [t.pooled(metric) for t in ordered]


def evaluate_all_strengths(
    tables_by_cell: Mapping[tuple[str, str], Sequence[MetricTable]],
    config: StrengthConfig = StrengthConfig(),
    metrics: Sequence[str] = EVALUATED_METRICS,
) -> dict[str, StrengthHeatMap]:
    """One heat map per metric over the (scenario, model) cells provided."""
    if not tables_by_cell:
        raise UsageError("no metric tables to evaluate")
    scenarios = tuple(dict.fromkeys(key[0] for key in tables_by_cell))
    models = tuple(dict.fromkeys(key[1] for key in tables_by_cell))
    heatmaps = {}
    for metric in metrics:
        series = {
            key: metric_series(tables, metric)
            for key, tables in tables_by_cell.items()
        }
        heatmaps[metric] = evaluate_strength(
            metric, REGISTRY[metric].direction, series, config,
            scenarios=scenarios, models=models,
        )
    return heatmaps


# ---------------------------------------------------------------------------
# replication precision


def ci_report(
    tables: Iterable[MetricTable],
    confidence: float = 0.95,
    threshold: float = 0.05,
    metrics: Sequence[str] | None = None,
) -> list[dict]:
    """Confidence intervals of per-level metric means over replication means.

    Each row records the mean of the replication means, the CI half-width,
    the relative error, and whether it breaches the threshold.  A mean of
    exactly zero with spread is reported as infinite relative error; a
    zero half-width (constant replications) is reported as zero.
    """
    rows = []
    for table in tables:
        wanted = metrics if metrics is not None else table.metric_names
        for metric in wanted:
            rep_means = table.column(metric).mean(axis=1)
            ci = mean_ci(rep_means, confidence)
            rows.append(
                {
                    "scenario": table.scenario,
                    "model": table.model,
                    "strength_index": table.level.index,
                    "level": table.level.label(),
                    "metric": metric,
                    "mean": ci.mean,
                    "ci_half_width": ci.half_width,
                    "relative_error": ci.relative_error,
                    "flagged": bool(ci.relative_error > threshold),
                }
            )
    return rows


# ---------------------------------------------------------------------------
# persistence


def format_value(v: float) -> str:
    return f"{v:.12g}"


METRIC_CSV_HEADER = [
    "scenario", "adversary_model", "strength_index", "replication",
    "individual", "metric", "value",
]


def write_metric_tables(path: str | pathlib.Path, tables: Iterable[MetricTable]) -> None:
    """Write per-individual metric rows for any number of tables."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRIC_CSV_HEADER)
        for table in tables:
            for rep in range(table.replications):
                for i, individual in enumerate(table.individuals):
                    for m, metric in enumerate(table.metric_names):
                        writer.writerow(
                            [
                                table.scenario,
                                table.model,
                                table.level.index,
                                rep,
                                individual,
                                metric,
                                format_value(table.values[rep, i, m]),
                            ]
                        )


def read_metric_tables(path: str | pathlib.Path) -> dict[tuple[str, str], list[MetricTable]]:
    """Rebuild metric tables from a metrics CSV, grouped by (scenario, model)."""
    cells: dict[tuple[str, str, int], dict] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != METRIC_CSV_HEADER:
            raise DataError(f"{path} is not a metrics CSV")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 7:
                raise DataError(f"{path} line {lineno}: expected 7 columns")
            scenario, model, level_text, rep_text, individual, metric, value_text = row
            try:
                level_index = int(level_text)
                rep = int(rep_text)
                value = float(value_text)
            except ValueError as exc:
                raise DataError(f"{path} line {lineno}: {exc}") from exc
            cell = cells.setdefault(
                (scenario, model, level_index),
                {"individuals": [], "metrics": [], "data": {}},
            )
            if individual not in cell["data"]:
                cell["data"][individual] = {}
                cell["individuals"].append(individual)
            if metric not in cell["data"][individual]:
                if metric not in cell["metrics"]:
                    cell["metrics"].append(metric)
                cell["data"][individual][metric] = {}
            cell["data"][individual][metric][rep] = value
    if not cells:
        raise DataError(f"{path} holds no metric rows")

    grouped: dict[tuple[str, str], list[MetricTable]] = {}
    for (scenario, model, level_index), cell in sorted(cells.items()):
        try:
            level = ladder(model)[level_index]
        except (UsageError, IndexError):
            raise DataError(
                f"metrics CSV names unknown level {level_index} of model {model!r}"
            )
        individuals = cell["individuals"]
        metric_names = cell["metrics"]
        reps = sorted({rep for per in cell["data"].values() for m in per.values() for rep in m})
        if reps != list(range(len(reps))):
            raise DataError(f"replication indices of ({scenario}, {model}) are not contiguous")
        values = np.empty((len(reps), len(individuals), len(metric_names)))
        for i, individual in enumerate(individuals):
            for m, metric in enumerate(metric_names):
                per_rep = cell["data"][individual].get(metric)
                if per_rep is None or len(per_rep) != len(reps):
                    raise DataError(
                        f"metric {metric} incomplete for individual {individual} "
                        f"in ({scenario}, {model}, level {level_index})"
                    )
                for rep, value in per_rep.items():
                    values[rep, i, m] = value
        grouped.setdefault((scenario, model), []).append(
            MetricTable(scenario, model, level, len(reps), individuals, metric_names, values)
        )
    for tables in grouped.values():
        tables.sort(key=lambda t: t.level.index)
    return grouped


PER_SNP_CSV_HEADER = [
    "scenario", "adversary_model", "strength_index", "replication",
    "individual", "rsid", "metric", "value",
]


def write_per_snp_metrics(
    path: str | pathlib.Path,
    dataset: ScenarioDataset,
    level: AdversaryLevel,
    replications: int,
    master_seed: int,
    params: MetricParams = MetricParams(),
) -> None:
    """Stream per-SNP metric rows for one level (small scenarios only)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(PER_SNP_CSV_HEADER)
        for rep in range(replications):
            for i, individual in enumerate(dataset.individuals):
                valid = np.flatnonzero(dataset.valid[i])
                if valid.size == 0:
                    continue
                rng = cell_rng(master_seed, level.model, level.index, rep, i)
                est = estimate_block(level, dataset.truth[i, valid], dataset.maf[valid], rng)
                out = compute_individual_metrics(
                    est, dataset.truth[i, valid], dataset.maf[valid], params,
                    health_idx=np.arange(valid.size), health_c=np.ones(valid.size),
                )
                for metric in sorted(out.per_snp):
                    for j, value in zip(valid, out.per_snp[metric]):
                        writer.writerow(
                            [
                                dataset.name, level.model, level.index, rep,
                                individual, dataset.rsids[j], metric,
                                format_value(value),
                            ]
                        )


def heatmap_from_payload(payload: dict) -> StrengthHeatMap:
    """Rebuild a heat map (with pair details) from its JSON payload."""
    from .metrics import HIGHER, LOWER  # local to avoid unused at module top

    cells = []
    scenarios: list[str] = []
    models: list[str] = []
    for cell in payload["cells"]:
        details = [
            PairDetail(
                test=p["test"], pair_index=p["pair"], statistic=p["statistic"],
                p_value=p["p"], category=p["category"], peak=p["peak"],
                points=p["points"],
            )
            for p in cell["pairs"]
        ]
        m_raw = sum(d.points for d in details)
        cells.append(
            StrengthCell(cell["scenario"], cell["model"], m_raw, cell["m"], details)
        )
        if cell["scenario"] not in scenarios:
            scenarios.append(cell["scenario"])
        if cell["model"] not in models:
            models.append(cell["model"])
    return StrengthHeatMap(
        metric=payload["metric"],
        direction=HIGHER if payload["direction"] == "H" else LOWER,
        scenarios=tuple(scenarios),
        models=tuple(models),
        cells=cells,
        overall_pct=payload["overall_pct"],
    )


# ---------------------------------------------------------------------------
# manifests


def file_digest(path: str | pathlib.Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def level_payload(level: AdversaryLevel) -> dict:
    out = {"model": level.model, "index": level.index, "label": level.label()}
    for key in ("mu", "sigma", "portion"):
        value = getattr(level, key)
        if value is not None:
            out[key] = value
    return out


def write_manifest(
    directory: str | pathlib.Path,
    command: str,
    master_seed: int | None,
    settings: Mapping | None = None,
    inputs: Sequence[str | pathlib.Path] = (),
    outputs: Sequence[str | pathlib.Path] = (),
) -> pathlib.Path:
    """Write a reproducibility manifest next to a command's outputs."""
    directory = pathlib.Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = {
        "tool": "privmeter",
        "version": __version__,
        "command": command,
        "master_seed": master_seed,
        "settings": dict(settings or {}),
        "inputs": {
            str(p): file_digest(p) for p in inputs
        },
        "outputs": sorted(str(p) for p in outputs),
    }
    path = directory / f"manifest_{command}.json"
    path.write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return path


def dump_json(path: str | pathlib.Path, payload) -> None:
    pathlib.Path(path).write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")
