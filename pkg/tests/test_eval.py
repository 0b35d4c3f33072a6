import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import auroc_pairs, macro_f1_counts
from posot.errors import DegenerateInputError
from posot.eval import (
    BilingualData,
    ExperimentReport,
    FeatureTable,
    LeakageError,
    RegimeSpec,
    Settings,
    SynthCorpusSpec,
    SyntheticData,
    auroc,
    check_disjoint,
    generate_synthetic_corpus,
    macro_f1,
    paired_ttest,
    run_regime,
    stratified_subject_subset,
    subject_stratified_kfold,
)

HM = (0.20, 0.20, 0.03, 0.06, 0.08, 0.04, 0.10, 0.12)
AM = (0.18, 0.20, 0.02, 0.06, 0.08, 0.03, 0.07, 0.16)
VAR = (9e-4, 9e-4, 1e-4, 4e-4, 4e-4, 2e-4, 4e-4, 9e-4)


def small_spec(**kw):
    base = dict(healthy_mean=HM, aphasic_mean=AM, healthy_cov=VAR, aphasic_cov=VAR,
                target_healthy=18, target_aphasic=12, source_healthy=30, source_aphasic=30,
                target_ood=40, source_ood=40, b=(0.03,) + (0.0,) * 7, noise=0.002)
    base.update(kw)
    return SynthCorpusSpec(**base)


# ---------------------------------------------------------------- metrics

def test_macro_f1_hand_example():
    assert macro_f1([1, 1, 0, 0], [1, 0, 0, 0]) == pytest.approx(73.3333333, abs=1e-6)
    assert macro_f1([1, 1, 0, 0, 0], [1, 0, 0, 0, 1]) == pytest.approx(175 / 3, abs=1e-9)


def test_macro_f1_missing_class_counts_zero():
    assert macro_f1([0, 0], [0, 0]) == pytest.approx(50.0)


@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=1, max_size=40))
def test_macro_f1_matches_counts(pairs):
    yt, yp = map(list, zip(*pairs))
    assert macro_f1(yt, yp) == pytest.approx(macro_f1_counts(yt, yp), abs=1e-9)


def test_auroc_examples():
    assert auroc([0, 0, 1, 1], [0.1, 0.2, 0.8, 0.9]) == 100.0
    assert auroc([0, 1], [0.5, 0.5]) == 50.0
    assert auroc([0, 0, 1, 1], [0.9, 0.8, 0.2, 0.1]) == 0.0
    with pytest.raises(DegenerateInputError):
        auroc([1, 1], [0.2, 0.3])


@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 5)), min_size=2, max_size=40))
def test_auroc_matches_pair_count(pairs):
    yt, sc = map(list, zip(*pairs))
    if len(set(yt)) < 2:
        return
    a = auroc(yt, sc)
    assert a == pytest.approx(auroc_pairs(yt, sc), abs=1e-9)
    # flipping the scores mirrors the statistic
    assert auroc(yt, [-s for s in sc]) == pytest.approx(100.0 - a, abs=1e-9)


# ---------------------------------------------------------------- folds

def test_kfold_one_subject_per_fold():
    f = subject_stratified_kfold(np.arange(10), np.repeat([0, 1], 5), k=10, seed=0)
    assert sorted(np.bincount(f.fold).tolist()) == [1] * 10


def test_kfold_two_way_split_of_balanced_subjects():
    subjects = np.repeat(np.arange(20), 3)
    labels = np.repeat(np.repeat([0, 1], 10), 3)
    f = subject_stratified_kfold(subjects, labels, k=2, seed=4)
    for i in range(2):
        _, te = f.split(i)
        assert np.unique(subjects[te][labels[te] == 0]).size == 5
        assert np.unique(subjects[te][labels[te] == 1]).size == 5


def test_kfold_too_few_subjects():
    with pytest.raises(DegenerateInputError):
        subject_stratified_kfold([0, 0, 1], [0, 0, 1], k=3)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 8), st.lists(st.tuples(st.integers(1, 4), st.integers(0, 1)), min_size=8,
                                   max_size=30), st.integers(0, 1000))
def test_kfold_keeps_subjects_together(k, subj_spec, seed):
    subjects = np.concatenate([[i] * n for i, (n, _) in enumerate(subj_spec)])
    labels = np.concatenate([[c] * n for n, c in subj_spec])
    f = subject_stratified_kfold(subjects, labels, k=k, seed=seed)
    for s in np.unique(subjects):
        assert np.unique(f.fold[subjects == s]).size == 1
    seen = np.zeros(subjects.size, dtype=int)
    for tr, te in f:
        assert not set(subjects[tr]) & set(subjects[te])
        seen[te] += 1
    assert np.all(seen == 1)


def test_subset_keeps_fraction_of_subjects_per_class():
    subjects = np.repeat(np.arange(20), 2)
    labels = np.repeat(np.repeat([0, 1], 10), 2)
    idx = stratified_subject_subset(subjects, labels, 0.5, seed=1)
    assert np.unique(subjects[idx]).size == 10
    assert np.sum(labels[idx] == 1) == 10


# ---------------------------------------------------------------- t-test

def test_paired_ttest_cases():
    assert paired_ttest([1, 2, 3], [1, 2, 3]).p == 1.0
    r = paired_ttest([2, 3, 4], [1, 2, 3])
    assert r.t > 1e5 and r.p < 1e-6
    r = paired_ttest([1, 2, 3], [2, 2, 2])
    assert (r.t, r.p) == (0.0, 1.0)
    with pytest.raises(DegenerateInputError):
        paired_ttest([1], [2])


# ---------------------------------------------------------------- synthetic corpus

def test_synth_identity_paired_pools_match():
    spec = small_spec(b=(0.0,) * 8, noise=0.0, paired=True, target_ood=30, source_ood=30)
    d = generate_synthetic_corpus(spec)
    np.testing.assert_allclose(d.source_ood.X, d.target_ood.X, atol=1e-15)
    assert d.source_ood_paired is d.source_ood


def test_synth_offset_shows_in_pool_means():
    # low-mass means keep the shifted rows away from the simplex face
    low = tuple(0.5 * m for m in HM)
    spec = small_spec(healthy_mean=low, aphasic_mean=low, b=(0.2,) + (0.0,) * 7, noise=0.0,
                      target_ood=2000, source_ood=2000)
    d = generate_synthetic_corpus(spec)
    gap = d.source_ood.X.mean(0) - d.target_ood.X.mean(0)
    assert gap[0] == pytest.approx(0.2, abs=5e-3)
    assert np.all(np.abs(gap[1:]) < 5e-3)


def test_synth_deterministic_and_shaped():
    a = generate_synthetic_corpus(small_spec(seed=3))
    b = generate_synthetic_corpus(small_spec(seed=3))
    for name, table in a.pools().items():
        np.testing.assert_array_equal(table.X, b.pools()[name].X)
    assert len(a.target_clinical) == 30 and int(a.target_clinical.y.sum()) == 12
    assert np.all(a.source_clinical.X >= 0) and np.all(a.source_clinical.X.sum(1) <= 1 + 1e-12)


def test_synth_spec_validation():
    with pytest.raises(DegenerateInputError):
        generate_synthetic_corpus(small_spec(healthy_mean=(5.0,) * 8, healthy_cov=(1e-6,) * 8))
    with pytest.raises(ValueError):
        SynthCorpusSpec.from_dict({**small_spec().to_dict(), "colour": 1})
    with pytest.raises(ValueError):
        small_spec(paired_noise=-1.0)
    assert SynthCorpusSpec.from_dict(small_spec().to_dict()) == small_spec()


# ---------------------------------------------------------------- regimes

FAST = Settings(unilingual_folds=3, ot_max_iter=5)


@pytest.fixture(scope="module")
def data():
    return SyntheticData(small_spec(paired_noise=0.0, source_ood_accents=(20, 20),
                                    accent_shift=(0.0, 0.02) + (0.0,) * 6))


@pytest.mark.parametrize("kw", [
    dict(regime="Unilingual"),
    dict(regime="DirectTransfer"),
    dict(regime="MultilingualEncoding"),
    dict(regime="OT-EMD"),
    dict(regime="OT-EMD-R"),
    dict(regime="OT-Gaussian"),
    dict(regime="OT-EMD", include_aphasic_in_ot=True),
    dict(regime="OT-EMD", accent_mix=(10, 5)),
    dict(regime="OT-EMD", train_fraction=0.5, classifier="RF"),
])
def test_regimes_run(data, kw):
    res = run_regime(data, RegimeSpec(seeds=(0, 1), **kw), FAST)
    assert res.partitions_checked == len(res.scores) > 0
    assert all(0 <= s.f1 <= 100 for s in res.scores)
    assert len(res.per_seed()) == 2


def test_paired_regime_needs_pool():
    d = generate_synthetic_corpus(small_spec())
    plain = BilingualData(d.source_clinical, d.source_ood, d.target_clinical, d.target_ood)
    with pytest.raises(DegenerateInputError):
        run_regime(plain, RegimeSpec("OT-EMD", paired=True, seeds=(0,)), FAST)


def test_aphasic_inclusion_needs_two_subjects_per_class():
    d = generate_synthetic_corpus(small_spec())
    clin = d.target_clinical
    keep = (clin.y == 0) | (clin.subject == clin.subject[clin.y == 1][0])
    thin = BilingualData(d.source_clinical, d.source_ood, clin.where(keep), d.target_ood)
    with pytest.raises(DegenerateInputError):
        run_regime(thin, RegimeSpec("OT-EMD", include_aphasic_in_ot=True, seeds=(0,)), FAST)


def test_leakage_is_detected():
    d = generate_synthetic_corpus(small_spec())
    clin = d.target_clinical
    leak = FeatureTable.concat(d.target_ood, clin.take([0]).healthy() if clin.y[0] == 0
                               else clin.where(clin.y == 0).take([0]))
    bad = BilingualData(d.source_clinical, d.source_ood, clin, leak)
    with pytest.raises(LeakageError):
        run_regime(bad, RegimeSpec("OT-EMD", seeds=(0,)), FAST)
    with pytest.raises(LeakageError):
        check_disjoint({("a", "1")}, {("a", "1"), ("b", "2")})
    check_disjoint({("a", "1")}, {("b", "1")})


@pytest.mark.parametrize("kw", [
    dict(regime="Unilingual", paired=True),
    dict(regime="DirectTransfer", include_aphasic_in_ot=True),
    dict(regime="OT-EMD", accent_mix=(0, 0)),
    dict(regime="OT-EMD", train_fraction=0.0),
    dict(regime="OT-Sliced"),
    dict(regime="OT-EMD", classifier="KNN"),
    dict(regime="OT-EMD", seeds=(1, 1)),
])
def test_regime_spec_rejects(kw):
    with pytest.raises(ValueError):
        RegimeSpec(**kw)


# ---------------------------------------------------------------- report

def test_report_structure(data):
    uni = run_regime(data, RegimeSpec("Unilingual", seeds=(0, 1, 2)), FAST)
    ot = run_regime(data, RegimeSpec("OT-EMD", seeds=(0, 1, 2)), FAST)
    rep = ExperimentReport.build([uni, ot], baseline="Unilingual")
    doc = json.loads(rep.to_json())
    assert doc["format"] == "posot.experiment_report" and doc["version"] == 1
    row = rep.row("OT-EMD", "SVM")
    assert row.compare_to == "Unilingual"
    assert row.p_f1 is None or 0 <= row.p_f1 <= 1
    assert rep.row("Unilingual", "SVM").compare_to is None
    assert row.n_runs == 3 and len(row.per_seed_f1) == 3
    text = rep.to_text()
    assert "OT-EMD" in text and "Unilingual" in text
    assert not math.isnan(doc["rows"][0]["f1_mean"])
