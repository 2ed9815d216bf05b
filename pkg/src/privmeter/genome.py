"""Cohort construction: file parsing, genotype encoding, synthesis, scenarios.

Genotype values count minor alleles: 0 = homozygous major, 1 = heterozygous,
2 = homozygous minor.  Missing genotypes are never imputed; a genome simply
has no entry for that rsid and downstream computations drop the cell.
"""

from __future__ import annotations

import csv
import json
import pathlib
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DataError, EncodingError, UsageError

GENOTYPE_LETTERS = frozenset("ACGT")
MISSING_MARKER = "--"

#: rsids of the three Alzheimer risk SNPs used by the named scenario
ALZHEIMER_RSIDS = ("rs7412", "rs429358", "rs75932628")

SCENARIO_NAMES = ("utah", "kin", "comparison", "alzheimer", "custom")


@dataclass(frozen=True)
class SnpRecord:
    rsid: str
    chromosome: str
    position: int
    genotype: str | None  # two letters from ACGT, or None when missing


@dataclass(frozen=True)
class AlleleFrequencyRecord:
    rsid: str
    major: str
    minor: str
    maf: float


@dataclass
class Genome:
    individual_id: str
    genotypes: dict[str, int]  # rsid -> minor allele count; missing rsids absent


@dataclass
class Cohort:
    genomes: list[Genome]
    frequencies: dict[str, AlleleFrequencyRecord]
    provenance: str = "synthetic"
    pedigree: dict[str, tuple[str, str]] | None = None  # child -> parents

    def individual_ids(self) -> list[str]:
        return [g.individual_id for g in self.genomes]


@dataclass
class ParseReport:
    records: list[SnpRecord]
    warnings: list[str]


def parse_raw_genotypes(lines: Iterable[str]) -> ParseReport:
    """Parse a tab-separated raw genotype file.

    Expected line format: ``rsid<TAB>chromosome<TAB>position<TAB>genotype``
    where genotype is two letters from ACGT or ``--`` for a missing call.
    Lines starting with ``#`` and blank lines are skipped.  Malformed lines
    are skipped too and reported with their line number in the warnings.
    """
    records: list[SnpRecord] = []
    warnings: list[str] = []
    try:
        for lineno, raw in enumerate(lines, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 4:
                warnings.append(
                    f"line {lineno}: expected 4 tab-separated fields, got {len(fields)}"
                )
                continue
            rsid, chromosome, pos_text, genotype = (f.strip() for f in fields)
            if not rsid:
                warnings.append(f"line {lineno}: empty rsid")
                continue
            try:
                position = int(pos_text)
            except ValueError:
                warnings.append(f"line {lineno}: position {pos_text!r} is not an integer")
                continue
            if position < 0:
                warnings.append(f"line {lineno}: negative position {position}")
                continue
            if genotype == MISSING_MARKER:
                geno: str | None = None
            elif len(genotype) == 2 and set(genotype) <= GENOTYPE_LETTERS:
                geno = genotype
            else:
                warnings.append(f"line {lineno}: bad genotype {genotype!r}")
                continue
            records.append(SnpRecord(rsid, chromosome, position, geno))
    except UnicodeDecodeError as exc:
        raise DataError(f"genotype file is not valid UTF-8: {exc}") from exc
    return ParseReport(records, warnings)


def encode_genotype(record: SnpRecord, freq: AlleleFrequencyRecord) -> int | None:
    """Encode a genotype as its minor allele count, or None when missing."""
    if record.rsid != freq.rsid:
        raise UsageError(
            f"record rsid {record.rsid!r} does not match frequency rsid {freq.rsid!r}"
        )
    if record.genotype is None:
        return None
    count = 0
    for letter in record.genotype:
        if letter == freq.minor:
            count += 1
        elif letter != freq.major:
            raise EncodingError(
                record.rsid,
                f"{record.rsid}: letter {letter!r} matches neither major "
                f"{freq.major!r} nor minor {freq.minor!r}",
            )
    return count


def load_frequency_table(
    lines: Iterable[str],
) -> tuple[dict[str, AlleleFrequencyRecord], list[str]]:
    """Load an allele frequency CSV with header ``rsid,major,minor,maf``.

    Duplicate rsids keep the last row (with a warning); rows with a maf
    outside [0, 0.5] or identical alleles are rejected with a warning.
    """
    reader = csv.reader(lines)
    try:
        header = next(reader, None)
    except UnicodeDecodeError as exc:
        raise DataError(f"frequency file is not valid UTF-8: {exc}") from exc
    if header is None or [h.strip().lower() for h in header] != ["rsid", "major", "minor", "maf"]:
        raise DataError("frequency table must start with header 'rsid,major,minor,maf'")
    table: dict[str, AlleleFrequencyRecord] = {}
    warnings: list[str] = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 4:
            warnings.append(f"line {lineno}: expected 4 columns, got {len(row)}")
            continue
        rsid, major, minor, maf_text = (c.strip() for c in row)
        if not rsid:
            warnings.append(f"line {lineno}: empty rsid")
            continue
        if major not in GENOTYPE_LETTERS or minor not in GENOTYPE_LETTERS:
            warnings.append(f"line {lineno}: alleles must be single letters from ACGT")
            continue
        if major == minor:
            warnings.append(f"line {lineno}: major and minor allele are identical")
            continue
        try:
            maf = float(maf_text)
        except ValueError:
            warnings.append(f"line {lineno}: maf {maf_text!r} is not a number")
            continue
        if not 0.0 <= maf <= 0.5:
            warnings.append(f"line {lineno}: maf {maf} outside [0, 0.5], row rejected")
            continue
        if rsid in table:
            warnings.append(f"line {lineno}: duplicate rsid {rsid}, last row wins")
        table[rsid] = AlleleFrequencyRecord(rsid, major, minor, maf)
    return table, warnings


# ---------------------------------------------------------------------------
# Hardy-Weinberg synthesis


def hardy_weinberg_probs(maf) -> np.ndarray:
    """Genotype probabilities ((1-q)^2, 2q(1-q), q^2) for minor frequency q."""
    q = np.asarray(maf, dtype=float)
    return np.stack([(1.0 - q) ** 2, 2.0 * q * (1.0 - q), q**2], axis=-1)


def sample_genotypes(maf: np.ndarray, n_individuals: int, rng: np.random.Generator) -> np.ndarray:
    """Draw an (individuals x SNPs) genotype matrix under Hardy-Weinberg."""
    probs = hardy_weinberg_probs(maf)
    u = rng.random((n_individuals, maf.size))
    g = (u >= probs[:, 0]).astype(np.int8)
    g += (u >= probs[:, 0] + probs[:, 1]).astype(np.int8)
    return g


def _draw_frequencies(
    n_snps: int, maf_range: tuple[float, float], rng: np.random.Generator,
    rsids: Sequence[str] | None,
) -> tuple[list[str], np.ndarray, dict[str, AlleleFrequencyRecord]]:
    lo, hi = maf_range
    if not (0.0 < lo <= hi <= 0.5):
        raise UsageError("maf range must satisfy 0 < low <= high <= 0.5")
    if rsids is None:
        rsids = [f"rs{i + 1}" for i in range(n_snps)]
    elif len(rsids) != n_snps:
        raise UsageError("rsid list length must equal n_snps")
    maf = rng.uniform(lo, hi, n_snps)
    letters = "ACGT"
    major_idx = rng.integers(0, 4, n_snps)
    minor_idx = (major_idx + rng.integers(1, 4, n_snps)) % 4
    table = {
        rsid: AlleleFrequencyRecord(rsid, letters[major_idx[i]], letters[minor_idx[i]], float(maf[i]))
        for i, rsid in enumerate(rsids)
    }
    return list(rsids), maf, table


def synthesize_cohort(
    n_individuals: int,
    n_snps: int,
    maf_range: tuple[float, float] = (0.05, 0.5),
    seed: int = 0,
    rsids: Sequence[str] | None = None,
) -> Cohort:
    """Synthesize an unrelated cohort with uniform mafs and HW genotypes."""
    if n_individuals < 1 or n_snps < 1:
        raise UsageError("cohort needs at least one individual and one SNP")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    rsid_list, maf, table = _draw_frequencies(n_snps, maf_range, rng, rsids)
    matrix = sample_genotypes(maf, n_individuals, rng)
    width = max(4, len(str(n_individuals)))
    genomes = [
        Genome(f"ind{i:0{width}d}", dict(zip(rsid_list, map(int, matrix[i]))))
        for i in range(n_individuals)
    ]
    return Cohort(genomes, table, provenance="synthetic")


def _child_genotypes(
    parent_a: np.ndarray, parent_b: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    # one allele drawn uniformly from each parent's two
    allele_a = rng.random(parent_a.size) < parent_a / 2.0
    allele_b = rng.random(parent_b.size) < parent_b / 2.0
    return (allele_a.astype(np.int8) + allele_b.astype(np.int8)).astype(np.int8)


def synthesize_pedigree(
    founder_pairs: int,
    generations: int,
    n_snps: int,
    seed: int = 0,
    children_per_couple: int = 2,
    maf_range: tuple[float, float] = (0.05, 0.5),
) -> Cohort:
    """Synthesize a multi-generation family.

    Founders are drawn under Hardy-Weinberg; every child receives one allele
    drawn uniformly from each parent's two.  Children of one generation are
    paired across sibships to form the couples of the next.  With 2 founder
    pairs, 3 generations and 2 children per couple the cohort has
    4 + 4 + 4 = 12 members.
    """
    if founder_pairs < 1 or generations < 1 or children_per_couple < 1:
        raise UsageError("pedigree needs founder_pairs, generations, children >= 1")
    if n_snps < 1:
        raise UsageError("pedigree needs at least one SNP")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    rsid_list, maf, table = _draw_frequencies(n_snps, maf_range, rng, None)

    genomes: list[Genome] = []
    pedigree: dict[str, tuple[str, str]] = {}

    def add(member_id: str, values: np.ndarray) -> str:
        genomes.append(Genome(member_id, dict(zip(rsid_list, map(int, values)))))
        return member_id

    couples: list[tuple[str, np.ndarray, str, np.ndarray]] = []
    founders = sample_genotypes(maf, 2 * founder_pairs, rng)
    for c in range(founder_pairs):
        ida = add(f"g1c{c}a", founders[2 * c])
        idb = add(f"g1c{c}b", founders[2 * c + 1])
        couples.append((ida, founders[2 * c], idb, founders[2 * c + 1]))

    for g in range(2, generations + 1):
        offspring: list[list[tuple[str, np.ndarray]]] = []
        for c, (ida, ga, idb, gb) in enumerate(couples):
            kids = []
            for k in range(children_per_couple):
                values = _child_genotypes(ga, gb, rng)
                kid_id = add(f"g{g}c{c}k{k}", values)
                pedigree[kid_id] = (ida, idb)
                kids.append((kid_id, values))
            offspring.append(kids)
        # pair k-th children across sibships; an unpaired leftover stays
        # in the cohort but has no descendants
        flat = [kids[k] for k in range(children_per_couple) for kids in offspring]
        couples = [
            (flat[i][0], flat[i][1], flat[i + 1][0], flat[i + 1][1])
            for i in range(0, len(flat) - 1, 2)
        ]
        if not couples and g < generations:
            raise DataError("pedigree ran out of couples before the last generation")

    return Cohort(genomes, table, provenance="pedigree", pedigree=pedigree)


# ---------------------------------------------------------------------------
# kinship


def pairwise_concordance(a: Genome, b: Genome) -> float:
    """Fraction of rsids known in both genomes that carry equal values."""
    shared = a.genotypes.keys() & b.genotypes.keys()
    if not shared:
        raise DataError(
            f"genomes {a.individual_id} and {b.individual_id} share no rsids"
        )
    equal = sum(1 for rsid in shared if a.genotypes[rsid] == b.genotypes[rsid])
    return equal / len(shared)


def detect_kin(cohort: Cohort, threshold: float = 0.8) -> list[tuple[str, str, float]]:
    """All unordered pairs with concordance above the threshold, sorted."""
    if not 0.0 <= threshold <= 1.0:
        raise UsageError("kin threshold must lie in [0, 1]")
    by_id = {g.individual_id: g for g in cohort.genomes}
    ids = sorted(by_id)
    hits = []
    for i, ida in enumerate(ids):
        for idb in ids[i + 1 :]:
            try:
                value = pairwise_concordance(by_id[ida], by_id[idb])
            except DataError:
                continue
            if value > threshold:
                hits.append((ida, idb, value))
    return hits


# ---------------------------------------------------------------------------
# scenarios


@dataclass(frozen=True)
class ScenarioSpec:
    """What slice of a cohort a run operates on."""

    name: str
    rsids: tuple[str, ...] | None = None
    snp_count: int | None = None
    individuals: tuple[str, ...] | None = None
    pairs: tuple[tuple[str, str], ...] | None = None
    require_all_rsids: bool = False

    def __post_init__(self):
        if self.name not in SCENARIO_NAMES:
            raise UsageError(f"unknown scenario name {self.name!r}")
        if self.rsids is not None and self.snp_count is not None:
            raise UsageError("give either an explicit rsid list or a count, not both")


def comparison_spec(snp_count: int = 10000) -> ScenarioSpec:
    return ScenarioSpec("comparison", snp_count=snp_count)


def alzheimer_spec() -> ScenarioSpec:
    return ScenarioSpec("alzheimer", rsids=ALZHEIMER_RSIDS, require_all_rsids=True)


def utah_spec() -> ScenarioSpec:
    return ScenarioSpec("utah")


def kin_spec(pairs: Sequence[tuple[str, str]]) -> ScenarioSpec:
    return ScenarioSpec("kin", pairs=tuple((a, b) for a, b in pairs))


@dataclass
class ScenarioDataset:
    """Dense truth slice of a cohort: individuals x selected rsids."""

    name: str
    individuals: list[str]
    rsids: list[str]
    truth: np.ndarray  # (N, S) int8, -1 where missing
    maf: np.ndarray  # (S,)

    @property
    def n_individuals(self) -> int:
        return len(self.individuals)

    @property
    def n_snps(self) -> int:
        return len(self.rsids)

    @cached_property
    def valid(self) -> np.ndarray:
        return self.truth >= 0

    @cached_property
    def hw(self) -> np.ndarray:
        return hardy_weinberg_probs(self.maf)


def select_scenario(cohort: Cohort, spec: ScenarioSpec, seed: int = 0) -> ScenarioDataset:
    """Materialize the (individuals x rsids) truth matrix for a scenario."""
    available = list(cohort.frequencies)
    if spec.rsids is not None:
        for rsid in spec.rsids:
            if rsid not in cohort.frequencies:
                raise DataError(f"scenario rsid {rsid} is absent from the cohort")
        rsids = list(spec.rsids)
    elif spec.snp_count is not None:
        if spec.snp_count < 1:
            raise UsageError("snp_count must be positive")
        if spec.snp_count > len(available):
            raise DataError(
                f"scenario asks for {spec.snp_count} SNPs but the cohort has "
                f"only {len(available)}"
            )
        if spec.snp_count == len(available):
            rsids = available
        else:
            rng = np.random.default_rng(np.random.SeedSequence(seed))
            picked = rng.choice(len(available), size=spec.snp_count, replace=False)
            rsids = [available[i] for i in sorted(map(int, picked))]
    else:
        rsids = available
    if not rsids:
        raise DataError("scenario selects no SNPs")

    by_id = {g.individual_id: g for g in cohort.genomes}
    if spec.pairs is not None:
        wanted = sorted({member for pair in spec.pairs for member in pair})
    elif spec.individuals is not None:
        wanted = list(spec.individuals)
    else:
        wanted = cohort.individual_ids()
    for ind in wanted:
        if ind not in by_id:
            raise DataError(f"scenario individual {ind} is absent from the cohort")

    if spec.require_all_rsids:
        wanted = [
            ind for ind in wanted if all(r in by_id[ind].genotypes for r in rsids)
        ]
    if not wanted:
        raise DataError("scenario selects no individuals")

    truth = np.full((len(wanted), len(rsids)), -1, dtype=np.int8)
    for i, ind in enumerate(wanted):
        genotypes = by_id[ind].genotypes
        for j, rsid in enumerate(rsids):
            value = genotypes.get(rsid)
            if value is not None:
                truth[i, j] = value
    maf = np.array([cohort.frequencies[r].maf for r in rsids])
    return ScenarioDataset(spec.name, wanted, rsids, truth, maf)


# ---------------------------------------------------------------------------
# persistence


def save_cohort(cohort: Cohort, directory: str | pathlib.Path) -> None:
    path = pathlib.Path(directory)
    path.mkdir(parents=True, exist_ok=True)
    with open(path / "frequencies.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rsid", "major", "minor", "maf"])
        for rec in cohort.frequencies.values():
            writer.writerow([rec.rsid, rec.major, rec.minor, f"{rec.maf:.12g}"])
    with open(path / "genomes.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["individual", "rsid", "genotype_value"])
        for genome in cohort.genomes:
            for rsid, value in genome.genotypes.items():
                writer.writerow([genome.individual_id, rsid, value])
    meta = {"provenance": cohort.provenance}
    if cohort.pedigree:
        meta["pedigree"] = {kid: list(parents) for kid, parents in cohort.pedigree.items()}
    (path / "cohort.json").write_text(json.dumps(meta, indent=1, sort_keys=True))


def load_cohort(directory: str | pathlib.Path) -> Cohort:
    path = pathlib.Path(directory)
    freq_file = path / "frequencies.csv"
    genome_file = path / "genomes.csv"
    if not freq_file.is_file() or not genome_file.is_file():
        raise DataError(f"{path} is not a cohort directory (need genomes.csv and frequencies.csv)")
    with open(freq_file, newline="") as fh:
        table, _ = load_frequency_table(fh)
    genomes: dict[str, Genome] = {}
    with open(genome_file, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["individual", "rsid", "genotype_value"]:
            raise DataError("genomes.csv must start with header 'individual,rsid,genotype_value'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise DataError(f"genomes.csv line {lineno}: expected 3 columns")
            individual, rsid, value_text = (c.strip() for c in row)
            if rsid not in table:
                raise DataError(f"genomes.csv line {lineno}: rsid {rsid} has no frequency record")
            try:
                value = int(value_text)
            except ValueError:
                raise DataError(f"genomes.csv line {lineno}: bad genotype value {value_text!r}")
            if value not in (0, 1, 2):
                raise DataError(f"genomes.csv line {lineno}: genotype value {value} not in {{0,1,2}}")
            genomes.setdefault(individual, Genome(individual, {})).genotypes[rsid] = value
    meta_file = path / "cohort.json"
    provenance = "ingested"
    pedigree = None
    if meta_file.is_file():
        meta = json.loads(meta_file.read_text())
        provenance = meta.get("provenance", provenance)
        if "pedigree" in meta:
            pedigree = {kid: tuple(parents) for kid, parents in meta["pedigree"].items()}
    if not genomes:
        raise DataError("cohort has no genomes")
    return Cohort(list(genomes.values()), table, provenance=provenance, pedigree=pedigree)
