"""Command-line front end.

Every subcommand builds its inputs deterministically from the master seed,
writes its artifacts under ``--out``, and leaves a manifest recording the
settings and SHA-256 digests of the files it consumed.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import pathlib
import sys

import numpy as np

from . import pipeline as pl
from .adversary import MODEL_NAMES, build_estimate_set, ladder, read_estimates, write_estimates
from .errors import DataError, PrivmeterError, UsageError
from .genome import (
    Cohort,
    Genome,
    alzheimer_spec,
    comparison_spec,
    detect_kin,
    encode_genotype,
    kin_spec,
    load_cohort,
    load_frequency_table,
    parse_raw_genotypes,
    save_cohort,
    select_scenario,
    synthesize_cohort,
    synthesize_pedigree,
    utah_spec,
)
from .metrics import (
    EVALUATED_METRICS,
    METRIC_NAMES,
    MetricParams,
    PERMITTED_HEALTH_BASES,
    REGISTRY,
)
from .report import heatmap_svg, radar_svg, violin_export
from .stats import mean_ci
from .strength import (
    SWEEP_GRIDS,
    StrengthConfig,
    heatmap_payload,
    overall_under,
    sensitivity_sweep,
)

SCENARIO_CHOICES = ("comparison", "kin", "utah", "alzheimer")
DEFAULT_RADAR_METRICS = (
    "adversarys_success_rate",
    "entropy",
    "expected_estimation_error",
    "health_privacy",
    "information_surprisal",
    "relative_entropy",
)


class _Parser(argparse.ArgumentParser):
    """Argument parser that reports usage problems through exit code 1."""

    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# configuration file


_CONFIG_CASTS = {
    "seed": int,
    "out": str,
    "threads": int,
    "replications": int,
    "individuals": int,
    "snps": int,
    "families": int,
    "filler_snps": int,
    "founder_pairs": int,
    "generations": int,
    "children": int,
    "maf_low": float,
    "maf_high": float,
    "model": str,
    "scenario": str,
    "ali_threshold": float,
    "usi_threshold": float,
    "health_base": str,
    "aggregation": str,
    "r2_input": str,
    "threshold": float,
    "confidence": float,
    "significance": float,
    "tolerance": float,
}


def load_config(path: str) -> dict[str, str]:
    """Read key=value lines; '#' starts a comment, blank lines are skipped."""
    file = pathlib.Path(path)
    if not file.is_file():
        raise DataError(f"config file {path} does not exist")
    values: dict[str, str] = {}
    for lineno, raw in enumerate(file.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _CONFIG_CASTS:
            raise UsageError(
                f"config line {lineno}: unknown key {key!r}; "
                f"valid keys: {', '.join(sorted(_CONFIG_CASTS))}"
            )
        values[key] = value
    return values


def _apply_config(args: argparse.Namespace, argv: list[str], config: dict[str, str]) -> None:
    """Config values override built-in defaults but never explicit flags."""
    for key, text in config.items():
        flag = "--" + key.replace("_", "-")
        explicit = any(tok == flag or tok.startswith(flag + "=") for tok in argv)
        if explicit or not hasattr(args, key):
            continue
        try:
            setattr(args, key, _CONFIG_CASTS[key](text))
        except ValueError:
            raise UsageError(f"config value {text!r} is invalid for {key}")


# ---------------------------------------------------------------------------
# shared helpers


def _out_dir(args) -> pathlib.Path:
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _scenario_overrides(args) -> dict:
    """Size overrides for the preset builders, keyed by scenario."""
    overrides: dict = {}
    if args.scenario == "comparison":
        if args.individuals is not None:
            overrides["individuals"] = args.individuals
        if args.snps is not None:
            overrides["snps"] = args.snps
    elif args.scenario == "kin":
        if args.families is not None:
            overrides["families"] = args.families
        if args.snps is not None:
            overrides["snps"] = args.snps
    elif args.scenario == "utah":
        if args.snps is not None:
            overrides["snps"] = args.snps
    elif args.scenario == "alzheimer":
        if args.individuals is not None:
            overrides["individuals"] = args.individuals
    return overrides


def _scenario_from_cohort(cohort: Cohort, name: str) -> pl.ScenarioData:
    """Run a named scenario against an existing (e.g. ingested) cohort."""
    if name == "comparison":
        spec = comparison_spec(len(cohort.frequencies))
    elif name == "alzheimer":
        spec = alzheimer_spec()
    elif name == "utah":
        spec = utah_spec()
    elif name == "kin":
        if cohort.pedigree:
            # declared parent-child relations beat concordance inference
            pairs = [
                (parents[0], child)
                for child, parents in sorted(cohort.pedigree.items())
            ]
        else:
            pairs = [(a, b) for a, b, _ in detect_kin(cohort)]
        if not pairs:
            raise DataError(
                "cohort declares no pedigree and no pairs exceed the kin "
                "concordance threshold"
            )
        spec = kin_spec(pairs)
    else:
        raise UsageError(f"unknown scenario {name!r}")
    return pl.ScenarioData(name, cohort, select_scenario(cohort, spec))


def _build_scenario(args) -> pl.ScenarioData:
    if args.cohort:
        return _scenario_from_cohort(load_cohort(args.cohort), args.scenario)
    return pl.build_scenario(args.scenario, args.seed, **_scenario_overrides(args))


def _models(args) -> tuple[str, ...]:
    if args.model == "all":
        return MODEL_NAMES
    return (args.model,)


def _parse_metric_list(text: str, valid: tuple[str, ...] = METRIC_NAMES) -> list[str]:
    names = [name.strip() for name in text.split(",") if name.strip()]
    if not names:
        raise UsageError("empty metric list")
    for name in names:
        if name not in valid:
            raise UsageError(
                f"unknown metric {name!r}; valid names: {', '.join(valid)}"
            )
    return names


def _metric_params(args) -> MetricParams:
    health_weights = None
    if args.health_weights:
        health_weights = _read_health_weights(args.health_weights)
    return MetricParams(
        ali_threshold=args.ali_threshold,
        usi_threshold=args.usi_threshold,
        health_weights=health_weights,
        health_base=args.health_base,
        aggregation=args.aggregation,
        r2_input=args.r2_input,
    )


def _read_health_weights(path: str) -> dict[str, float]:
    file = pathlib.Path(path)
    if not file.is_file():
        raise DataError(f"health weight file {path} does not exist")
    weights: dict[str, float] = {}
    with open(file, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].strip().startswith("#"):
                continue
            if lineno == 1 and [c.strip().lower() for c in row] == ["rsid", "weight"]:
                continue
            if len(row) != 2:
                raise DataError(f"{path} line {lineno}: expected rsid,weight")
            rsid = row[0].strip()
            try:
                weight = float(row[1])
            except ValueError:
                raise DataError(f"{path} line {lineno}: bad weight {row[1]!r}")
            weights[rsid] = weight
    if not weights:
        raise DataError(f"{path} holds no weights")
    return weights


def _print_warnings(warnings, stream=None) -> None:
    for message in warnings:
        print(f"warning: {message}", file=stream or sys.stderr)


# ---------------------------------------------------------------------------
# subcommands


def cmd_synth(args) -> int:
    out = _out_dir(args)
    cohort = synthesize_cohort(
        args.individuals, args.snps, (args.maf_low, args.maf_high), seed=args.seed
    )
    target = out / "cohort"
    save_cohort(cohort, target)
    pl.write_manifest(
        out, "synth", args.seed,
        settings={
            "individuals": args.individuals, "snps": args.snps,
            "maf_low": args.maf_low, "maf_high": args.maf_high,
        },
        outputs=[target / "genomes.csv", target / "frequencies.csv", target / "cohort.json"],
    )
    print(f"wrote cohort of {args.individuals} individuals x {args.snps} SNPs to {target}")
    return 0


def cmd_pedigree(args) -> int:
    out = _out_dir(args)
    cohort = synthesize_pedigree(
        args.founder_pairs, args.generations, args.snps,
        seed=args.seed, children_per_couple=args.children,
    )
    target = out / "cohort"
    save_cohort(cohort, target)
    pl.write_manifest(
        out, "pedigree", args.seed,
        settings={
            "founder_pairs": args.founder_pairs, "generations": args.generations,
            "children": args.children, "snps": args.snps,
        },
        outputs=[target / "genomes.csv", target / "frequencies.csv", target / "cohort.json"],
    )
    print(f"wrote pedigree of {len(cohort.genomes)} members to {target}")
    return 0


def cmd_ingest(args) -> int:
    out = _out_dir(args)
    genotype_file = pathlib.Path(args.genotypes)
    frequency_file = pathlib.Path(args.frequencies)
    for file in (genotype_file, frequency_file):
        if not file.is_file():
            raise DataError(f"input file {file} does not exist")
    with open(genotype_file) as fh:
        report = parse_raw_genotypes(fh)
    with open(frequency_file, newline="") as fh:
        table, freq_warnings = load_frequency_table(fh)
    _print_warnings(report.warnings)
    _print_warnings(freq_warnings)

    genotypes: dict[str, int] = {}
    frequencies = {}
    missing = 0
    no_frequency = 0
    for record in report.records:
        freq = table.get(record.rsid)
        if freq is None:
            no_frequency += 1
            continue
        value = encode_genotype(record, freq)
        frequencies[record.rsid] = freq
        if value is None:
            missing += 1
            continue
        genotypes[record.rsid] = value
    if not genotypes:
        raise DataError("no genotypes could be encoded")

    cohort = Cohort(
        [Genome(args.individual, genotypes)], frequencies, provenance="ingested"
    )
    target = out / "cohort"
    save_cohort(cohort, target)
    pl.write_manifest(
        out, "ingest", None,
        settings={"individual": args.individual},
        inputs=[genotype_file, frequency_file],
        outputs=[target / "genomes.csv", target / "frequencies.csv", target / "cohort.json"],
    )
    print(
        f"encoded {len(genotypes)} genotypes for {args.individual} "
        f"({missing} missing calls, {no_frequency} without frequency records, "
        f"{len(report.warnings)} parse warnings)"
    )
    return 0


def cmd_kin(args) -> int:
    out = _out_dir(args)
    cohort = load_cohort(args.cohort)
    hits = detect_kin(cohort, args.threshold)
    payload = [
        {"a": a, "b": b, "concordance": value} for a, b, value in hits
    ]
    target = out / "kin.json"
    pl.dump_json(target, payload)
    pl.write_manifest(
        out, "kin", None,
        settings={"threshold": args.threshold},
        inputs=[pathlib.Path(args.cohort) / "genomes.csv"],
        outputs=[target],
    )
    for a, b, value in hits:
        print(f"{a} ~ {b}: concordance {value:.4f}")
    print(f"{len(hits)} pair(s) above threshold {args.threshold}")
    return 0


def cmd_estimate(args) -> int:
    out = _out_dir(args)
    scenario = _build_scenario(args)
    est_dir = out / "estimates"
    est_dir.mkdir(parents=True, exist_ok=True)
    outputs = []
    precision_rows = []
    truth = scenario.dataset.truth
    gather_index = np.clip(truth, 0, 2)[None, :, :, None]
    for model in _models(args):
        for level in ladder(model):
            est = build_estimate_set(scenario.dataset, level, args.replications, args.seed)
            path = est_dir / f"{scenario.name}_{model}_level{level.index}.csv"
            write_estimates(path, est)
            outputs.append(path)
            # per-replication mean probability assigned to the truth
            p_truth = np.take_along_axis(est.probs, gather_index, axis=-1)[..., 0]
            rep_means = np.nanmean(p_truth.reshape(args.replications, -1), axis=1)
            if args.replications >= 2:
                ci = mean_ci(rep_means, args.confidence)
                precision_rows.append(
                    {
                        "scenario": scenario.name, "model": model,
                        "strength_index": level.index, "level": level.label(),
                        "mean": ci.mean, "ci_half_width": ci.half_width,
                        "relative_error": ci.relative_error,
                    }
                )
                if ci.relative_error > 0.05:
                    print(
                        f"warning: truth-probability mean of {model} {level.label()} "
                        f"has CI relative error {ci.relative_error:.1%} (> 5%)",
                        file=sys.stderr,
                    )
    precision_path = out / "estimate_precision.csv"
    with open(precision_path, "w", newline="") as fh:
        writer = csv.DictWriter(
            fh,
            fieldnames=[
                "scenario", "model", "strength_index", "level",
                "mean", "ci_half_width", "relative_error",
            ],
        )
        writer.writeheader()
        for row in precision_rows:
            writer.writerow(
                {
                    **row,
                    "mean": pl.format_value(row["mean"]),
                    "ci_half_width": pl.format_value(row["ci_half_width"]),
                    "relative_error": pl.format_value(row["relative_error"]),
                }
            )
    pl.write_manifest(
        out, "estimate", args.seed,
        settings={
            "scenario": scenario.name, "model": args.model,
            "replications": args.replications,
            "levels": [
                pl.level_payload(level)
                for model in _models(args)
                for level in ladder(model)
            ],
        },
        outputs=[*outputs, precision_path],
    )
    print(f"wrote {len(outputs)} estimate file(s) to {est_dir}")
    return 0


def _read_estimate_table(
    scenario: pl.ScenarioData, level, directory: pathlib.Path, params, extras
) -> pl.MetricTable:
    path = directory / f"{scenario.name}_{level.model}_level{level.index}.csv"
    if not path.is_file():
        raise DataError(
            f"estimate file missing for scenario {scenario.name!r}, "
            f"model {level.model!r}, level {level.index}: {path}"
        )
    records = read_estimates(path)
    reps = max(rep for _, _, rep in records) + 1
    ds = scenario.dataset
    ind_index = {name: i for i, name in enumerate(ds.individuals)}
    rsid_index = {rsid: j for j, rsid in enumerate(ds.rsids)}
    probs = np.full((reps, ds.n_individuals, ds.n_snps, 3), np.nan)
    for (individual, rsid, rep), row in records.items():
        i = ind_index.get(individual)
        j = rsid_index.get(rsid)
        if i is None or j is None:
            raise DataError(
                f"{path} names {individual}/{rsid}, which is not in the scenario"
            )
        probs[rep, i, j] = row
    return pl.compute_level_metrics_from_probs(ds, level, probs, params, extras)


def cmd_metrics(args) -> int:
    out = _out_dir(args)
    params = _metric_params(args)
    requested = None
    if args.metrics != "all":
        requested = _parse_metric_list(args.metrics)
    extras = ()
    if args.extra_health_bases:
        extras = tuple(
            _parse_metric_list(args.extra_health_bases, tuple(PERMITTED_HEALTH_BASES))
        )
    scenario = _build_scenario(args)

    tables = []
    inputs = []
    for model in _models(args):
        for level in ladder(model):
            if args.from_estimates:
                directory = pathlib.Path(args.from_estimates)
                table = _read_estimate_table(scenario, level, directory, params, extras)
                inputs.append(
                    directory / f"{scenario.name}_{model}_level{level.index}.csv"
                )
            else:
                table = pl.compute_level_metrics(
                    scenario.dataset, level, args.replications, args.seed,
                    params, extras, threads=args.threads,
                )
            tables.append(table)

    if requested is not None:
        kept = [
            name
            for name in tables[0].metric_names
            if name in requested or name.startswith("health_privacy:")
        ]
        for table in tables:
            keep_idx = [table.metric_names.index(name) for name in kept]
            table.values = table.values[:, :, keep_idx]
            table.metric_names = kept

    metrics_path = out / "metrics.csv"
    pl.write_metric_tables(metrics_path, tables)
    outputs = [metrics_path]

    ci_path = out / "metrics_ci.csv"
    if tables[0].replications >= 2:
        rows = pl.ci_report(tables, confidence=args.confidence)
        with open(ci_path, "w", newline="") as fh:
            writer = csv.DictWriter(
                fh,
                fieldnames=[
                    "scenario", "model", "strength_index", "level", "metric",
                    "mean", "ci_half_width", "relative_error", "flagged",
                ],
            )
            writer.writeheader()
            for row in rows:
                writer.writerow(
                    {
                        **row,
                        "mean": pl.format_value(row["mean"]),
                        "ci_half_width": pl.format_value(row["ci_half_width"]),
                        "relative_error": pl.format_value(row["relative_error"]),
                        "flagged": int(row["flagged"]),
                    }
                )
        outputs.append(ci_path)
        for row in rows:
            if row["flagged"]:
                print(
                    f"warning: {row['metric']} at {row['model']} {row['level']} has "
                    f"CI relative error {row['relative_error']:.1%} (> 5%)",
                    file=sys.stderr,
                )
    else:
        print("note: CI report skipped (needs at least 2 replications)", file=sys.stderr)

    if args.per_snp:
        for model in _models(args):
            for level in ladder(model):
                path = out / f"metrics_per_snp_{scenario.name}_{model}_level{level.index}.csv"
                pl.write_per_snp_metrics(
                    path, scenario.dataset, level, args.replications, args.seed, params
                )
                outputs.append(path)

    pl.write_manifest(
        out, "metrics", args.seed,
        settings={
            "scenario": scenario.name,
            "model": args.model,
            "replications": tables[0].replications,
            "metrics": args.metrics,
            "ali_threshold": args.ali_threshold,
            "usi_threshold": args.usi_threshold,
            "health_base": args.health_base,
            "aggregation": args.aggregation,
            "r2_input": args.r2_input,
            "from_estimates": bool(args.from_estimates),
        },
        inputs=inputs,
        outputs=outputs,
    )
    print(f"wrote {len(tables)} level table(s) to {metrics_path}")
    return 0


def _read_grouped_tables(paths) -> dict:
    grouped: dict = {}
    for path in paths:
        file = pathlib.Path(path)
        if not file.is_file():
            raise DataError(f"metrics CSV {path} does not exist")
        for key, tables in pl.read_metric_tables(file).items():
            bucket = grouped.setdefault(key, [])
            existing = {t.level.index for t in bucket}
            for table in tables:
                if table.level.index in existing:
                    raise DataError(
                        f"duplicate level {table.level.index} for "
                        f"scenario {key[0]!r}, model {key[1]!r}"
                    )
                bucket.append(table)
    for tables in grouped.values():
        tables.sort(key=lambda t: t.level.index)
    return grouped


def _check_ladders(grouped) -> None:
    for (scenario, model), tables in grouped.items():
        expected = len(ladder(model))
        have = [t.level.index for t in tables]
        if have != list(range(expected)):
            raise DataError(
                f"incomplete ladder for scenario {scenario!r}, model {model!r}: "
                f"have levels {have}, need 0..{expected - 1}"
            )


def cmd_strength(args) -> int:
    out = _out_dir(args)
    grouped = _read_grouped_tables(args.metrics_csv)
    _check_ladders(grouped)
    config = StrengthConfig(significance=args.significance)
    evaluated = [
        name
        for name in EVALUATED_METRICS
        if all(name in t.metric_names for tables in grouped.values() for t in tables)
    ]
    if not evaluated:
        raise DataError("metrics CSV holds no evaluated metric columns")
    heatmaps = pl.evaluate_all_strengths(grouped, config, metrics=evaluated)

    strength_dir = out / "strength"
    strength_dir.mkdir(parents=True, exist_ok=True)
    outputs = []
    for name in evaluated:
        hm = heatmaps[name]
        json_path = strength_dir / f"{name}.json"
        pl.dump_json(json_path, heatmap_payload(hm))
        svg_path = strength_dir / f"{name}.svg"
        svg_path.write_text(heatmap_svg(hm))
        outputs.extend([json_path, svg_path])

    summary_path = out / "strength_summary.csv"
    with open(summary_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "scenario", "adversary_model", "m_raw", "m_normalized", "overall_pct"])
        for name in evaluated:
            hm = heatmaps[name]
            for cell in hm.cells:
                writer.writerow(
                    [
                        name, cell.scenario, cell.adversary_model,
                        pl.format_value(cell.m_raw),
                        pl.format_value(cell.m_normalized),
                        pl.format_value(hm.overall_pct),
                    ]
                )
    outputs.append(summary_path)
    pl.write_manifest(
        out, "strength", None,
        settings={"significance": args.significance},
        inputs=list(args.metrics_csv),
        outputs=outputs,
    )
    for name in evaluated:
        print(f"{name}: overall {heatmaps[name].overall_pct:.1f}%")
    return 0


def cmd_report(args) -> int:
    out = _out_dir(args)
    grouped = _read_grouped_tables(args.metrics_csv)
    radar_metrics = _parse_metric_list(args.radar_metrics)
    violin_metrics = (
        _parse_metric_list(args.violin_metrics) if args.violin_metrics else radar_metrics
    )
    report_dir = out / "report"
    report_dir.mkdir(parents=True, exist_ok=True)
    outputs = []
    for (scenario, model), tables in sorted(grouped.items()):
        for metric in itertools.chain(radar_metrics, violin_metrics):
            if any(metric not in t.metric_names for t in tables):
                raise DataError(f"metric {metric!r} is not in the metrics CSV")
        labels = [t.level.label() for t in tables]
        values_by_metric = {
            metric: [float(np.mean(t.pooled(metric))) for t in tables]
            for metric in radar_metrics
        }
        svg = radar_svg(values_by_metric, labels, title=f"{scenario} / {model}")
        radar_path = report_dir / f"radar_{scenario}_{model}.svg"
        radar_path.write_text(svg)
        outputs.append(radar_path)
        for metric in violin_metrics:
            payload = violin_export(
                metric, {t.level.label(): t.pooled(metric) for t in tables}
            )
            violin_path = report_dir / f"violin_{scenario}_{model}_{metric}.json"
            pl.dump_json(violin_path, payload)
            outputs.append(violin_path)
    pl.write_manifest(
        out, "report", None,
        settings={
            "radar_metrics": list(radar_metrics),
            "violin_metrics": list(violin_metrics),
        },
        inputs=list(args.metrics_csv),
        outputs=outputs,
    )
    print(f"wrote {len(outputs)} report artifact(s) to {report_dir}")
    return 0


def cmd_sweep(args) -> int:
    out = _out_dir(args)
    strength_dir = pathlib.Path(args.strength_dir)
    files = sorted(strength_dir.glob("*.json"))
    if not files:
        raise DataError(f"no heat-map JSON files in {strength_dir}")
    heatmaps = {}
    for file in files:
        payload = json.loads(file.read_text())
        heatmaps[payload["metric"]] = pl.heatmap_from_payload(payload)

    config = StrengthConfig(significance=args.significance)
    report = sensitivity_sweep(heatmaps, config=config, tolerance_pct=args.tolerance)

    sweep_path = out / "sweep.csv"
    metric_names = sorted(heatmaps)
    with open(sweep_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["points_right", "points_wrong", "points_insignificant", "points_peak",
             "metric", "overall_pct"]
        )
        for right, wrong, insig, peak in itertools.product(
            SWEEP_GRIDS["points_right"],
            SWEEP_GRIDS["points_wrong"],
            SWEEP_GRIDS["points_insignificant"],
            SWEEP_GRIDS["points_peak"],
        ):
            point_config = StrengthConfig(
                points_right=right, points_wrong=wrong,
                points_insignificant=insig, points_peak=peak,
                significance=args.significance,
            )
            for name in metric_names:
                writer.writerow(
                    [right, wrong, insig, peak, name,
                     pl.format_value(overall_under(heatmaps[name], point_config))]
                )
    summary_path = out / "sweep_summary.json"
    pl.dump_json(
        summary_path,
        {
            "grid_points": report.grid_points,
            "default_overall": report.default_overall,
            "summary": report.summary,
        },
    )
    pl.write_manifest(
        out, "sweep", None,
        settings={"significance": args.significance, "tolerance": args.tolerance},
        inputs=list(files),
        outputs=[sweep_path, summary_path],
    )
    for name in metric_names:
        stats = report.summary[name]
        print(
            f"{name}: mean {stats['mean']:.1f}%, max deviation "
            f"{stats['max_abs_deviation']:.2f} points, within tolerance "
            f"{stats['frac_within_6']:.0%}"
        )
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> _Parser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    common.add_argument("--out", default=".", help="output directory (default .)")
    common.add_argument("--config", help="key=value file overriding defaults")

    parser = _Parser(
        prog="privmeter",
        description="Benchmark genomic privacy metrics against graded adversaries.",
    )
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("synth", parents=[common], help="synthesize an unrelated cohort")
    p.add_argument("--individuals", type=int, default=100)
    p.add_argument("--snps", type=int, default=1000)
    p.add_argument("--maf-low", type=float, default=0.05)
    p.add_argument("--maf-high", type=float, default=0.5)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("pedigree", parents=[common], help="synthesize a family pedigree")
    p.add_argument("--founder-pairs", type=int, default=2)
    p.add_argument("--generations", type=int, default=3)
    p.add_argument("--children", type=int, default=2, help="children per couple")
    p.add_argument("--snps", type=int, default=2000)
    p.set_defaults(func=cmd_pedigree)

    p = sub.add_parser("ingest", parents=[common], help="encode a raw genotype file")
    p.add_argument("--genotypes", required=True, help="tab-separated raw genotype file")
    p.add_argument("--frequencies", required=True, help="allele frequency CSV")
    p.add_argument("--individual", default="sample", help="identifier for the genome")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("kin", parents=[common], help="detect related pairs in a cohort")
    p.add_argument("--cohort", required=True, help="cohort directory")
    p.add_argument("--threshold", type=float, default=0.8)
    p.set_defaults(func=cmd_kin)

    def add_scenario_options(p):
        p.add_argument("--scenario", required=True, choices=SCENARIO_CHOICES)
        p.add_argument("--cohort", help="run against an existing cohort directory")
        p.add_argument("--individuals", type=int, default=None)
        p.add_argument("--snps", type=int, default=None)
        p.add_argument("--families", type=int, default=None)
        p.add_argument("--model", default="all", choices=(*MODEL_NAMES, "all"))
        p.add_argument("--replications", type=int, default=15)

    p = sub.add_parser("estimate", parents=[common], help="draw adversary estimates")
    add_scenario_options(p)
    p.add_argument("--confidence", type=float, default=0.95)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("metrics", parents=[common], help="compute privacy metrics")
    add_scenario_options(p)
    p.add_argument("--metrics", default="all", help="comma-separated metric names or 'all'")
    p.add_argument("--ali-threshold", type=float, default=0.7)
    p.add_argument("--usi-threshold", type=float, default=0.3)
    p.add_argument("--health-weights", help="CSV of rsid,weight rows")
    p.add_argument(
        "--health-base", default="expected_estimation_error",
        choices=tuple(PERMITTED_HEALTH_BASES),
    )
    p.add_argument("--extra-health-bases", default="",
                   help="comma-separated additional base metrics")
    p.add_argument(
        "--aggregation", default="arithmetic_mean",
        choices=("arithmetic_mean", "maf_weighted"),
    )
    p.add_argument(
        "--r2-input", default="truth_probability",
        choices=("truth_probability", "point_estimate"),
    )
    p.add_argument("--per-snp", action="store_true", help="also write per-SNP rows")
    p.add_argument("--from-estimates", help="read estimates from this directory")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--confidence", type=float, default=0.95)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("strength", parents=[common], help="score metric reliability")
    p.add_argument("--metrics-csv", nargs="+", required=True)
    p.add_argument("--significance", type=float, default=0.05)
    p.set_defaults(func=cmd_strength)

    p = sub.add_parser("report", parents=[common], help="render radar and violin artifacts")
    p.add_argument("--metrics-csv", nargs="+", required=True)
    p.add_argument("--radar-metrics", default=",".join(DEFAULT_RADAR_METRICS))
    p.add_argument("--violin-metrics", default="")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("sweep", parents=[common], help="point-value sensitivity sweep")
    p.add_argument("--strength-dir", required=True, help="directory of heat-map JSON files")
    p.add_argument("--significance", type=float, default=0.05)
    p.add_argument("--tolerance", type=float, default=6.0)
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "config", None):
            _apply_config(args, argv, load_config(args.config))
        if not hasattr(args, "func"):
            parser.print_help()
            return 1
        return args.func(args) or 0
    except PrivmeterError as exc:
        print(f"privmeter: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"privmeter: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
