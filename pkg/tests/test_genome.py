import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from privmeter.errors import DataError, EncodingError, UsageError
from privmeter.genome import (
    ALZHEIMER_RSIDS,
    AlleleFrequencyRecord,
    Cohort,
    Genome,
    ScenarioSpec,
    SnpRecord,
    alzheimer_spec,
    comparison_spec,
    detect_kin,
    encode_genotype,
    hardy_weinberg_probs,
    kin_spec,
    load_cohort,
    load_frequency_table,
    pairwise_concordance,
    parse_raw_genotypes,
    sample_genotypes,
    save_cohort,
    select_scenario,
    synthesize_cohort,
    synthesize_pedigree,
)


# ---------------------------------------------------------------------------
# parsing


RAW = """\
# comment line
rs123\t1\t1000\tAG
rs124\t1\t1001\tTT
bad line without tabs
rs125\t2\t44\t--
"""


def test_parse_raw_genotypes_worked_example():
    report = parse_raw_genotypes(io.StringIO(RAW))
    assert [r.rsid for r in report.records] == ["rs123", "rs124", "rs125"]
    assert report.records[0].genotype == "AG"
    assert report.records[2].genotype is None  # '--' marker
    assert len(report.warnings) == 1
    assert "line 4" in report.warnings[0]


def test_parse_rejects_bad_genotypes_and_positions():
    text = "rs1\t1\txyz\tAA\nrs2\t1\t5\tAX\nrs3\t1\t-4\tCC\nrs4\t1\t7\tC\nrs5\t1\t8\tGT\n"
    report = parse_raw_genotypes(io.StringIO(text))
    assert [r.rsid for r in report.records] == ["rs5"]
    assert len(report.warnings) == 4


def test_parse_skips_blank_lines():
    report = parse_raw_genotypes(io.StringIO("\n\nrs1\t1\t2\tAA\n\n"))
    assert len(report.records) == 1
    assert report.warnings == []


def test_encode_genotype_counts_minor_alleles():
    freq = AlleleFrequencyRecord("rs1", major="A", minor="G", maf=0.3)
    assert encode_genotype(SnpRecord("rs1", "1", 1, "AA"), freq) == 0
    assert encode_genotype(SnpRecord("rs1", "1", 1, "AG"), freq) == 1
    assert encode_genotype(SnpRecord("rs1", "1", 1, "GA"), freq) == 1
    assert encode_genotype(SnpRecord("rs1", "1", 1, "GG"), freq) == 2
    assert encode_genotype(SnpRecord("rs1", "1", 1, None), freq) is None


def test_encode_genotype_errors():
    freq = AlleleFrequencyRecord("rs1", major="A", minor="G", maf=0.3)
    with pytest.raises(UsageError):
        encode_genotype(SnpRecord("rs2", "1", 1, "AA"), freq)
    with pytest.raises(EncodingError) as err:
        encode_genotype(SnpRecord("rs1", "1", 1, "AT"), freq)
    assert err.value.rsid == "rs1"


def test_load_frequency_table_happy_path_and_warnings():
    text = (
        "rsid,major,minor,maf\n"
        "rs1,A,G,0.2\n"
        "rs2,C,T,0.6\n"  # maf out of range -> rejected
        "rs3,T,T,0.1\n"  # identical alleles -> rejected
        "rs1,A,C,0.4\n"  # duplicate -> last wins
    )
    table, warnings = load_frequency_table(io.StringIO(text))
    assert set(table) == {"rs1"}
    assert table["rs1"].minor == "C" and table["rs1"].maf == 0.4
    assert len(warnings) == 3


def test_load_frequency_table_requires_header():
    with pytest.raises(DataError):
        load_frequency_table(io.StringIO("rs1,A,G,0.2\n"))


# ---------------------------------------------------------------------------
# Hardy-Weinberg sampling


def test_hardy_weinberg_probs_known_values():
    assert hardy_weinberg_probs(0.5) == pytest.approx([0.25, 0.5, 0.25])
    assert hardy_weinberg_probs(0.0) == pytest.approx([1.0, 0.0, 0.0])
    assert hardy_weinberg_probs(0.2) == pytest.approx([0.64, 0.32, 0.04])


@given(st.floats(0.0, 0.5))
def test_hardy_weinberg_probs_form_a_distribution(q):
    probs = hardy_weinberg_probs(q)
    assert probs.sum() == pytest.approx(1.0, abs=1e-12)
    assert (probs >= 0).all()


def test_sample_genotypes_degenerate_maf_zero():
    rng = np.random.default_rng(0)
    g = sample_genotypes(np.zeros(5), 40, rng)
    assert (g == 0).all()


def test_sample_genotypes_match_hw_proportions():
    rng = np.random.default_rng(42)
    q = 0.3
    g = sample_genotypes(np.full(1, q), 200000, rng).ravel()
    counts = np.bincount(g, minlength=3) / g.size
    expect = hardy_weinberg_probs(q)
    # chi-square against the closed form, generous 3-sigma style bound
    assert counts == pytest.approx(expect, abs=0.01)


# ---------------------------------------------------------------------------
# synthesis


def test_synthesize_cohort_shapes_and_determinism():
    c1 = synthesize_cohort(7, 11, (0.1, 0.4), seed=5)
    c2 = synthesize_cohort(7, 11, (0.1, 0.4), seed=5)
    c3 = synthesize_cohort(7, 11, (0.1, 0.4), seed=6)
    assert len(c1.genomes) == 7
    assert all(len(g.genotypes) == 11 for g in c1.genomes)
    assert [g.genotypes for g in c1.genomes] == [g.genotypes for g in c2.genomes]
    assert [g.genotypes for g in c1.genomes] != [g.genotypes for g in c3.genomes]
    for rec in c1.frequencies.values():
        assert 0.1 <= rec.maf <= 0.4
        assert rec.major != rec.minor
    # every genome rsid has a frequency record
    for g in c1.genomes:
        assert set(g.genotypes) <= set(c1.frequencies)


def test_synthesize_cohort_validation():
    with pytest.raises(UsageError):
        synthesize_cohort(0, 5)
    with pytest.raises(UsageError):
        synthesize_cohort(5, 5, maf_range=(0.0, 0.5))
    with pytest.raises(UsageError):
        synthesize_cohort(5, 5, maf_range=(0.4, 0.6))


def test_synthesize_pedigree_example_size():
    cohort = synthesize_pedigree(founder_pairs=2, generations=3, n_snps=50, seed=1)
    assert len(cohort.genomes) == 12  # 4 founders + 4 children + 4 grandchildren
    assert cohort.provenance == "pedigree"
    assert len(cohort.pedigree) == 8  # everyone but the founders has parents
    ids = set(cohort.individual_ids())
    for kid, (pa, pb) in cohort.pedigree.items():
        assert {kid, pa, pb} <= ids


def test_pedigree_children_follow_mendel():
    cohort = synthesize_pedigree(2, 3, 300, seed=9)
    by_id = {g.individual_id: g for g in cohort.genomes}
    for kid, (pa, pb) in cohort.pedigree.items():
        for rsid, value in by_id[kid].genotypes.items():
            ga = by_id[pa].genotypes[rsid]
            gb = by_id[pb].genotypes[rsid]
            lo = (ga > 1) + (gb > 1)  # at least one minor allele from a hom parent
            hi = (ga > 0) + (gb > 0)
            assert lo <= value <= hi


def test_pedigree_child_distribution_het_parents():
    # two heterozygous parents give offspring 0/1/2 with probability 1/4, 1/2, 1/4
    rng = np.random.default_rng(3)
    from privmeter.genome import _child_genotypes

    a = np.ones(200000, dtype=np.int8)
    kids = _child_genotypes(a, a, rng)
    frac = np.bincount(kids, minlength=3) / kids.size
    assert frac == pytest.approx([0.25, 0.5, 0.25], abs=0.01)


def test_parent_child_concordance_exceeds_unrelated():
    cohort = synthesize_pedigree(3, 2, 2000, seed=11)
    by_id = {g.individual_id: g for g in cohort.genomes}
    related = [
        pairwise_concordance(by_id[kid], by_id[parents[0]])
        for kid, parents in cohort.pedigree.items()
    ]
    founders = [g for g in cohort.genomes if g.individual_id not in cohort.pedigree]
    unrelated = [
        pairwise_concordance(founders[i], founders[j])
        for i in range(len(founders))
        for j in range(i + 1, len(founders))
    ]
    assert min(related) > max(unrelated)


# ---------------------------------------------------------------------------
# kinship


def test_pairwise_concordance_counts_shared_only():
    a = Genome("a", {"rs1": 0, "rs2": 1, "rs3": 2})
    b = Genome("b", {"rs2": 1, "rs3": 0, "rs4": 1})
    assert pairwise_concordance(a, b) == pytest.approx(0.5)


def test_pairwise_concordance_requires_overlap():
    with pytest.raises(DataError):
        pairwise_concordance(Genome("a", {"rs1": 0}), Genome("b", {"rs2": 0}))


def test_detect_kin_finds_identical_genomes():
    shared = {f"rs{i}": i % 3 for i in range(100)}
    other = {f"rs{i}": (i + 1) % 3 for i in range(100)}
    cohort = Cohort(
        [Genome("b", dict(shared)), Genome("a", dict(shared)), Genome("c", other)],
        {f"rs{i}": AlleleFrequencyRecord(f"rs{i}", "A", "G", 0.2) for i in range(100)},
    )
    hits = detect_kin(cohort, threshold=0.8)
    assert [(a, b) for a, b, _ in hits] == [("a", "b")]
    assert hits[0][2] == 1.0


def test_detect_kin_unrelated_cohort_is_empty():
    # unrelated HW genomes at q=0.3 concord at about 0.42, far below 0.8
    cohort = synthesize_cohort(8, 1000, (0.3, 0.3), seed=21)
    assert detect_kin(cohort, threshold=0.8) == []


# ---------------------------------------------------------------------------
# scenarios


def test_select_scenario_count_sampling():
    cohort = synthesize_cohort(4, 10, seed=2)
    ds_all = select_scenario(cohort, comparison_spec(snp_count=10), seed=3)
    assert ds_all.rsids == list(cohort.frequencies)
    ds5a = select_scenario(cohort, comparison_spec(snp_count=5), seed=3)
    ds5b = select_scenario(cohort, comparison_spec(snp_count=5), seed=3)
    assert ds5a.rsids == ds5b.rsids
    assert len(ds5a.rsids) == 5
    # selection preserves cohort order
    order = {r: i for i, r in enumerate(cohort.frequencies)}
    assert [order[r] for r in ds5a.rsids] == sorted(order[r] for r in ds5a.rsids)
    with pytest.raises(DataError):
        select_scenario(cohort, comparison_spec(snp_count=11))


def test_select_scenario_truth_matrix_matches_genomes():
    cohort = synthesize_cohort(3, 6, seed=4)
    ds = select_scenario(cohort, ScenarioSpec("custom"))
    for i, ind in enumerate(ds.individuals):
        genome = next(g for g in cohort.genomes if g.individual_id == ind)
        for j, rsid in enumerate(ds.rsids):
            assert ds.truth[i, j] == genome.genotypes[rsid]
    assert ds.valid.all()
    assert ds.maf == pytest.approx([cohort.frequencies[r].maf for r in ds.rsids])


def test_select_scenario_alzheimer_requires_all_three():
    cohort = synthesize_cohort(6, 3, seed=5, rsids=list(ALZHEIMER_RSIDS))
    # knock out one SNP for one individual
    del cohort.genomes[2].genotypes["rs429358"]
    ds = select_scenario(cohort, alzheimer_spec())
    assert ds.rsids == list(ALZHEIMER_RSIDS)
    assert cohort.genomes[2].individual_id not in ds.individuals
    assert ds.n_individuals == 5


def test_select_scenario_missing_rsid_is_data_error():
    cohort = synthesize_cohort(2, 3, seed=6)
    with pytest.raises(DataError) as err:
        select_scenario(cohort, ScenarioSpec("custom", rsids=("rs999",)))
    assert "rs999" in str(err.value)


def test_select_scenario_pairs():
    cohort = synthesize_cohort(6, 4, seed=7)
    ids = cohort.individual_ids()
    spec = kin_spec([(ids[4], ids[1]), (ids[2], ids[1])])
    ds = select_scenario(cohort, spec)
    assert ds.individuals == sorted({ids[4], ids[1], ids[2]})


def test_select_scenario_unknown_individual():
    cohort = synthesize_cohort(2, 3, seed=8)
    with pytest.raises(DataError):
        select_scenario(cohort, ScenarioSpec("custom", individuals=("ghost",)))


def test_scenario_spec_validation():
    with pytest.raises(UsageError):
        ScenarioSpec("nope")
    with pytest.raises(UsageError):
        ScenarioSpec("custom", rsids=("rs1",), snp_count=3)


# ---------------------------------------------------------------------------
# persistence


def test_cohort_round_trip(tmp_path):
    cohort = synthesize_pedigree(2, 2, 9, seed=13)
    save_cohort(cohort, tmp_path / "c")
    loaded = load_cohort(tmp_path / "c")
    assert loaded.individual_ids() == cohort.individual_ids()
    for g1, g2 in zip(cohort.genomes, loaded.genomes):
        assert g1.genotypes == g2.genotypes
    assert set(loaded.frequencies) == set(cohort.frequencies)
    for rsid, rec in cohort.frequencies.items():
        assert loaded.frequencies[rsid].maf == pytest.approx(rec.maf, rel=1e-11)
        assert loaded.frequencies[rsid].major == rec.major
    assert loaded.pedigree == cohort.pedigree
    assert loaded.provenance == "pedigree"


def test_load_cohort_rejects_bad_directory(tmp_path):
    with pytest.raises(DataError):
        load_cohort(tmp_path)


def test_load_cohort_rejects_unknown_rsid(tmp_path):
    d = tmp_path / "c"
    d.mkdir()
    (d / "frequencies.csv").write_text("rsid,major,minor,maf\nrs1,A,G,0.2\n")
    (d / "genomes.csv").write_text(
        "individual,rsid,genotype_value\nind0,rs1,1\nind0,rs9,2\n"
    )
    with pytest.raises(DataError):
        load_cohort(d)


def test_load_cohort_rejects_bad_genotype_value(tmp_path):
    d = tmp_path / "c"
    d.mkdir()
    (d / "frequencies.csv").write_text("rsid,major,minor,maf\nrs1,A,G,0.2\n")
    (d / "genomes.csv").write_text("individual,rsid,genotype_value\nind0,rs1,7\n")
    with pytest.raises(DataError):
        load_cohort(d)
