"""The acceptance suite: one test per criterion, each printing a pass/fail line.

Run ``pytest tests/test_acceptance.py -v``; the summary block at the end of
the session lists every criterion with its measured values.
"""

import time
from pathlib import Path

import numpy as np
import pytest

from acceptance_log import record
from oracles import emd_vertex_oracle, finite_difference_grad
from posot.config import load_config
from posot.eval import (
    RegimeSpec,
    Settings,
    SynthCorpusSpec,
    SyntheticData,
    auroc,
    macro_f1,
    run_regime,
    subject_stratified_kfold,
)
from posot.eval import regimes as regimes_mod
from posot.experiment import run_experiment, write_report
from posot.models import _nn
from posot.models.mlp import flat_loss_and_grad
from posot.ot import barycentric_map, cost_matrix, fit_gaussian_mapping, solve_emd, solve_sinkhorn
from posot.preprocess import SmoteConfig, apply_robust_scaler, fit_robust_scaler, smote

ROOT = Path(__file__).resolve().parent.parent
SHIPPED = ROOT / "configs" / "synthetic_table2.json"


def random_problem(rng, n, m):
    a = rng.dirichlet(np.ones(n))
    b = rng.dirichlet(np.ones(m))
    C = cost_matrix(rng.random((n, 3)), rng.random((m, 3))).values
    return a, b, C


def test_criterion_1_emd_matches_vertex_oracle():
    rng = np.random.default_rng(20240601)
    worst = 0.0
    solver_time = 0.0
    for _ in range(500):
        n, m = rng.integers(1, 5, size=2)
        a, b, C = random_problem(rng, n, m)
        t0 = time.perf_counter()
        plan = solve_emd(a, b, C)
        solver_time += time.perf_counter() - t0
        cost, _ = emd_vertex_oracle(a, b, C)
        worst = max(worst, abs(plan.objective_value - cost))
    ok = worst <= 1e-9 and solver_time < 10
    record(1, "EMD vs vertex oracle, 500 instances", ok,
           f"max |diff| {worst:.2e} (<= 1e-9), solver time {solver_time:.2f}s (< 10s)")
    assert ok


def test_criterion_2_sinkhorn_approaches_emd():
    rng = np.random.default_rng(7)
    worst_rel = worst_res = 0.0
    t0 = time.perf_counter()
    for _ in range(50):
        a, b, C = random_problem(rng, 20, 20)
        exact = solve_emd(a, b, C).objective_value
        plan = solve_sinkhorn(a, b, C, reg=1e-3 * C.mean())
        worst_rel = max(worst_rel, abs(plan.objective_value - exact) / exact)
        worst_res = max(worst_res, *plan.marginal_errors())
    elapsed = time.perf_counter() - t0
    ok = worst_rel < 0.01 and worst_res < 1e-6 and elapsed < 60
    record(2, "Sinkhorn at reg = 1e-3 mean(C), 50 instances 20x20", ok,
           f"max rel gap {worst_rel:.2e} (< 1e-2), max residual {worst_res:.2e} (< 1e-6), "
           f"{elapsed:.1f}s (< 60s)")
    assert ok


def test_criterion_3_marginals_and_nonnegativity():
    rng = np.random.default_rng(3)
    worst = 0.0
    negative = 0
    for case in range(10_000):
        n, m = rng.integers(1, 9, size=2)
        a, b, C = random_problem(rng, n, m)
        if rng.random() < 0.2:
            a[rng.integers(n)] = 0.0  # zero-mass atoms must survive too
            if a.sum() == 0:
                a[:] = 1.0
            a /= a.sum()
        if case % 2:
            plan = solve_sinkhorn(a, b, C, reg=float(rng.choice([0.01, 0.1, 1.0])))
            tol = 1e-6
        else:
            plan = solve_emd(a, b, C)
            tol = 1e-9
        worst = max(worst, max(plan.marginal_errors()) / tol)
        negative += int(np.any(plan.coupling < 0))
    ok = worst <= 1.0 and negative == 0
    record(3, "marginals and nonnegativity, 10,000 solver outputs", ok,
           f"worst residual / tolerance {worst:.3f} (<= 1), negative plans {negative}")
    assert ok


def test_criterion_4_gaussian_recovers_translation():
    worst = 0.0
    iters = 0
    for seed in range(5):
        rng = np.random.default_rng(seed)
        Xs = rng.random((50, 8))
        c = rng.uniform(-0.3, 0.3, 8)
        model = fit_gaussian_mapping(Xs, Xs + c, mu=1.0, max_iter=20, tol=1e-5)
        worst = max(worst, np.abs(barycentric_map(model, Xs) - (Xs + c)).max())
        iters = max(iters, model.settings["iterations"])
    ok = worst < 1e-2 and iters <= 20
    record(4, "Gaussian map recovers a translation (n=50, d=8)", ok,
           f"max error {worst:.2e} (< 1e-2), iterations {iters} (<= 20)")
    assert ok


def test_criterion_5_scaler_and_smote():
    rng = np.random.default_rng(5)
    worst_med = worst_iqr = worst_seg = 0.0
    for _ in range(200):
        n, d = rng.integers(2, 40), rng.integers(1, 9)
        X = rng.random((n, d)) * rng.uniform(0.1, 10, d)
        if rng.random() < 0.3:
            X[:, 0] = 0.5
        s = fit_robust_scaler(X)
        Z = apply_robust_scaler(s, X)
        q1, med, q3 = np.percentile(Z, [25, 50, 75], axis=0)
        live = s.iqr > 0
        worst_med = max(worst_med, np.abs(med).max())
        if np.any(live):
            worst_iqr = max(worst_iqr, np.abs((q3 - q1)[live] - 1).max())
        pts, base, nn = smote(X, SmoteConfig(k=3, target=n + int(rng.integers(1, 30)),
                                             seed=int(rng.integers(1 << 30))))
        for p, i, j in zip(pts, base, nn):
            seg = X[j] - X[i]
            u = float(seg @ (p - X[i]) / (seg @ seg)) if seg @ seg > 0 else 0.0
            u = min(max(u, 0.0), 1.0)
            worst_seg = max(worst_seg, np.abs(p - (X[i] + u * seg)).max())
    ok = worst_med <= 1e-12 and worst_iqr <= 1e-12 and worst_seg <= 1e-12
    record(5, "scaler median 0 / IQR 1, SMOTE points on segments", ok,
           f"median {worst_med:.1e}, IQR {worst_iqr:.1e}, off-segment {worst_seg:.1e} (all <= 1e-12)")
    assert ok


def test_criterion_6_metric_hand_checks_and_gradient():
    f1 = macro_f1([1, 1, 0, 0], [1, 0, 0, 0])
    tie = auroc([0, 1], [0.5, 0.5])
    rng = np.random.default_rng(6)
    sizes = [8, 100, 100, 2]
    theta = _nn.flatten(_nn.init_params(sizes, rng))
    X = rng.random((12, 8))
    y = rng.integers(0, 2, 12)
    _, g = flat_loss_and_grad(theta, sizes, X, y)
    idx = rng.choice(theta.size, 300, replace=False)
    fd = finite_difference_grad(lambda t: flat_loss_and_grad(t, sizes, X, y)[0], theta, idx=idx)
    rel = np.linalg.norm(g[idx] - fd) / np.linalg.norm(fd)
    ok = abs(f1 - 73.33) <= 0.01 and tie == 50.0 and rel < 1e-4
    record(6, "macro-F1 / AUROC hand checks, MLP gradient", ok,
           f"macro-F1 {f1:.4f} (73.33 +- 0.01), tie AUROC {tie} (50.0), grad rel err {rel:.1e} (< 1e-4)")
    assert ok


@pytest.fixture
def disjoint_audit(monkeypatch):
    """Wrap the split check so every train/eval partition is re-verified and counted."""
    calls = []
    original = regimes_mod.check_disjoint

    def audit(train_keys, eval_keys):
        calls.append(len(set(train_keys) & set(eval_keys)))
        return original(train_keys, eval_keys)

    monkeypatch.setattr(regimes_mod, "check_disjoint", audit)
    return calls


def test_criterion_7_no_subject_leakage(disjoint_audit):
    rng = np.random.default_rng(77)
    fold_overlaps = 0
    for _ in range(1000):
        n_subj = int(rng.integers(10, 40))
        sizes = rng.integers(1, 5, n_subj)
        subjects = np.repeat(np.arange(n_subj), sizes)
        labels = np.repeat(rng.integers(0, 2, n_subj), sizes)
        folds = subject_stratified_kfold(subjects, labels, k=int(rng.integers(2, 11)),
                                         seed=int(rng.integers(1 << 30)))
        for tr, te in folds:
            fold_overlaps += len(set(subjects[tr]) & set(subjects[te]))

    spec = SynthCorpusSpec(
        healthy_mean=(0.20, 0.20, 0.03, 0.06, 0.08, 0.04, 0.10, 0.12),
        aphasic_mean=(0.18, 0.20, 0.02, 0.06, 0.08, 0.03, 0.07, 0.16),
        healthy_cov=(9e-4,) * 8, aphasic_cov=(9e-4,) * 8, target_healthy=24, target_aphasic=12,
        source_healthy=30, source_aphasic=30, target_ood=40, source_ood=40,
        b=(0.03,) + (0.0,) * 7, source_ood_accents=(20, 20))
    data = SyntheticData(spec)
    settings = Settings(unilingual_folds=4, ot_max_iter=5)
    variants = [dict(regime=r) for r in ("Unilingual", "DirectTransfer", "MultilingualEncoding",
                                         "OT-EMD", "OT-EMD-R", "OT-Gaussian")]
    variants += [dict(regime=r, include_aphasic_in_ot=True) for r in ("OT-EMD", "OT-EMD-R",
                                                                    "OT-Gaussian")]
    variants += [dict(regime="OT-EMD", paired=True), dict(regime="OT-EMD", accent_mix=(20, 0)),
                 dict(regime="Unilingual", train_fraction=0.5)]
    partitions = 0
    for kw in variants:
        res = run_regime(data, RegimeSpec(seeds=(0, 1), **kw), settings)
        partitions += res.partitions_checked
    leaked = sum(disjoint_audit)
    ok = fold_overlaps == 0 and leaked == 0 and len(disjoint_audit) == partitions > 0
    record(7, "subject leakage", ok,
           f"1000 fold assignments: {fold_overlaps} shared subjects; "
           f"{len(disjoint_audit)} regime partitions audited: {leaked} shared subjects")
    assert ok


@pytest.fixture(scope="module")
def shipped_run(tmp_path_factory):
    cfg = load_config(SHIPPED)
    out = tmp_path_factory.mktemp("shipped")
    t0 = time.perf_counter()
    report = run_experiment(cfg, workers=1)
    elapsed = time.perf_counter() - t0
    write_report(report, out)
    return report, (out / "report.json").read_bytes(), elapsed


def test_criterion_8_synthetic_benchmark(shipped_run):
    report, _, elapsed = shipped_run
    f1 = {r.name: r.f1_mean for r in report.rows if r.classifier == "SVM"}
    aph = report.row("OT-EMD +aphasic", "SVM")
    paired = report.row("OT-EMD paired", "SVM")
    checks = {
        "a": f1["DirectTransfer"] < f1["Unilingual"],
        "b": f1["OT-EMD-R"] >= f1["DirectTransfer"] + 5,
        "c": aph.compare_to == "OT-EMD" and f1["OT-EMD +aphasic"] >= f1["OT-EMD"]
        and aph.p_f1 is not None and aph.p_f1 < 0.05,
        "d": paired.compare_to == "OT-EMD" and paired.p_f1 is not None and paired.p_f1 >= 0.05,
        "time": elapsed < 300,
    }
    ok = all(checks.values())
    record(8, "synthetic benchmark", ok,
           f"(a) Direct {f1['DirectTransfer']:.2f} < Uni {f1['Unilingual']:.2f}; "
           f"(b) EMD-R {f1['OT-EMD-R']:.2f} >= Direct+5; "
           f"(c) +aphasic {f1['OT-EMD +aphasic']:.2f} vs {f1['OT-EMD']:.2f}, p={aph.p_f1:.3g}; "
           f"(d) paired p={paired.p_f1:.3g} >= 0.05; {elapsed:.0f}s (< 300s); "
           f"failed: {[k for k, v in checks.items() if not v] or 'none'}")
    assert ok


def test_criterion_9_rerun_is_byte_identical(shipped_run, tmp_path):
    _, first, _ = shipped_run
    write_report(run_experiment(load_config(SHIPPED), workers=1), tmp_path)
    second = (tmp_path / "report.json").read_bytes()
    ok = first == second
    record(9, "determinism of report.json", ok,
           f"{len(first)} bytes, {'identical' if ok else 'different'}")
    assert ok
