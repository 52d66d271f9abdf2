"""Exit criteria for the package, one test per criterion.

Each test prints a single PASS/FAIL line (also collected in the pytest
terminal summary under "acceptance criteria").
"""

import time

import numpy as np
import pytest

from atcl import losses
from atcl.centers import CenterBank
from atcl.cli import main
from atcl.data import SynthConfig, generate
from atcl.evaluation import (
    average_precision,
    cosine_histograms,
    evaluate,
    f_measure,
    micro_macro,
    ndcg,
    pr_auc,
    rank,
)
from atcl.losses import MarginConfig
from atcl.model import TrainConfig, fit, forward

import gradcheck
from oracles import (
    ap_oracle,
    f_measure_oracle,
    literal_center_delta,
    micro_macro_oracle,
    ndcg_oracle,
    pr_auc_oracle,
)

TOY = SynthConfig(K=10, per_class=100, D=32, spread=0.25, seed=0)
SWEEP = (0.1, 0.4, 0.7, 1.0, 1.4)


@pytest.fixture(scope="module")
def toy():
    return generate(TOY)


@pytest.fixture(scope="module")
def toy_runs(toy):
    """Train softmax, ATCL and ATCL+softmax with identical settings; embed the test split."""
    start = time.perf_counter()
    test = toy.subset("test")
    out = {}
    for kind in ("softmax", "atcl", "atcl+softmax"):
        res = fit(toy, TrainConfig(loss_kind=kind, margin=0.7, lam=1.0))
        emb = forward(res.model, test.X)
        out[kind] = {"map": evaluate(emb, test.labels).map, "emb": emb}
    out["seconds"] = time.perf_counter() - start
    out["labels"] = test.labels
    return out


def test_c1_gradient_suite(criterion):
    start = time.perf_counter()
    worst = {}
    for offset, (name, sampler) in enumerate(gradcheck.LOSS_SAMPLERS.items()):
        worst[name] = gradcheck.run(sampler, 100, seed=1000 + offset).max()
    worst["network"] = gradcheck.run(gradcheck.sample_network, 100, seed=2000).max()
    elapsed = time.perf_counter() - start
    ok = (all(worst[k] < 1e-4 for k in gradcheck.LOSS_SAMPLERS)
          and worst["network"] < 1e-3 and elapsed < 60)
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + f"; {elapsed:.1f}s"
    criterion("C1", "analytic gradients match central differences", ok, detail)


def test_c2_center_update_literal_oracle(criterion):
    rng = np.random.default_rng(20)
    mismatches = 0
    for _ in range(50):
        K, n, M = int(rng.integers(2, 9)), int(rng.integers(2, 33)), int(rng.integers(1, 31))
        bank = CenterBank(rng.normal(size=(K, n)))
        F = rng.normal(size=(M, n))
        y = rng.integers(1, K + 1, size=M)
        out = losses.atcl(F, y, bank, MarginConfig(float(rng.uniform(0, 1.5))))
        U = F / np.linalg.norm(F, axis=1, keepdims=True)
        want = literal_center_delta(K, U, y, out.hard, out.alpha, out.beta, out.active)
        mismatches += not np.array_equal(out.center_delta, want)
    criterion("C2", "averaged center step equals literal loop exactly", mismatches == 0,
              f"{mismatches}/50 batches differ")


def test_c3_scale_invariance(criterion):
    rng = np.random.default_rng(30)
    worst_loss = 0.0
    rank_changes = 0
    for _ in range(50):
        K, n, M = int(rng.integers(2, 8)), int(rng.integers(2, 33)), int(rng.integers(2, 40))
        bank = CenterBank(rng.normal(size=(K, n)))
        F = rng.normal(size=(M, n))
        y = rng.integers(1, K + 1, size=M)
        s = rng.uniform(1e-3, 1e3, size=(M, 1))
        cfg = MarginConfig(float(rng.uniform(0, 1.2)))
        for fn in (losses.atcl, losses.cosine_tcl):
            worst_loss = max(worst_loss, abs(fn(F, y, bank, cfg).loss - fn(s * F, y, bank, cfg).loss))
        a = rank(F, F, exclude_self=True)
        b = rank(s * F, s * F, exclude_self=True)
        rank_changes += sum(not np.array_equal(p, q) for p, q in zip(a, b))
    ok = worst_loss < 1e-9 and rank_changes == 0
    criterion("C3", "loss values and rankings invariant to per-vector scaling", ok,
              f"max |dL| {worst_loss:.1e}, {rank_changes} rankings changed")


def test_c4_ranking_equivalence(criterion):
    rng = np.random.default_rng(40)
    differ = 0
    for _ in range(100):
        n = int(rng.integers(2, 33))
        Q = rng.normal(size=(int(rng.integers(1, 10)), n))
        G = rng.normal(size=(int(rng.integers(1, 60)), n))
        for a, b in zip(rank(Q, G), rank(Q, G, metric="angular")):
            differ += not np.array_equal(a, b)
    criterion("C4", "cosine and angular orderings identical", differ == 0,
              f"{differ} differing rankings over 100 sets")


def test_c5_metric_oracles(criterion):
    rng = np.random.default_rng(50)
    worst = dict.fromkeys(["ap", "pr_auc", "ndcg", "f_measure", "micro_macro"], 0.0)
    for _ in range(200):
        size = int(rng.integers(1, 21))
        rel = rng.integers(0, 2, size=size)
        grades = rng.integers(0, 4, size=size)
        worst["ap"] = max(worst["ap"], abs(average_precision(rel) - ap_oracle(rel)))
        worst["pr_auc"] = max(worst["pr_auc"], abs(pr_auc(rel) - pr_auc_oracle(rel)))
        worst["ndcg"] = max(worst["ndcg"], abs(ndcg(grades) - ndcg_oracle(grades)))
        if rel.sum():
            cutoff = int(rng.integers(1, size + 1))
            total = int(rel.sum())
            worst["f_measure"] = max(worst["f_measure"], abs(
                f_measure(rel, cutoff, total) - f_measure_oracle(rel, cutoff, total)))
        vals = rng.random(size)
        groups = rng.integers(1, 5, size=size)
        got, want = micro_macro(vals, groups), micro_macro_oracle(vals, groups)
        worst["micro_macro"] = max(worst["micro_macro"], abs(got[0] - want[0]),
                                   abs(got[1] - want[1]))
    ok = all(v <= 1e-12 for v in worst.values())
    criterion("C5", "metrics match brute-force hand rules", ok,
              ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))


def test_c6_toy_retrieval_ordering(criterion, toy_runs):
    soft, ang, joint = (toy_runs[k]["map"] for k in ("softmax", "atcl", "atcl+softmax"))
    ok = (soft < ang and ang <= joint + 0.02 and joint >= 0.95
          and toy_runs["seconds"] < 300)
    criterion("C6", "MAP(softmax) < MAP(ATCL) <= MAP(ATCL+softmax) + 0.02, joint >= 0.95", ok,
              f"softmax {soft:.6f}, ATCL {ang:.6f}, ATCL+softmax {joint:.6f}; "
              f"{toy_runs['seconds']:.1f}s")


def test_c7_cosine_distance_distribution(criterion, toy_runs):
    hist = cosine_histograms(toy_runs["atcl"]["emb"], toy_runs["labels"])
    ok = hist.intra_median < 0.1 and hist.inter_median > 0.6
    criterion("C7", "ATCL intra median < 0.1, inter median > 0.6", ok,
              f"intra {hist.intra_median:.4f}, inter {hist.inter_median:.4f}")


def test_c8_margin_sweep_shape(criterion, toy):
    test = toy.subset("test")
    maps = {}
    for m in SWEEP:
        res = fit(toy, TrainConfig(loss_kind="atcl", margin=m))
        maps[m] = evaluate(forward(res.model, test.X), test.labels).map
    best = max(maps.values())
    ok = maps[0.7] >= best - 0.02 and maps[1.4] < best
    criterion("C8", "MAP at m=0.7 within 0.02 of best, m=1.4 not the best", ok,
              ", ".join(f"m={m}: {v:.6f}" for m, v in maps.items()))


def test_c9_determinism(criterion, tmp_path):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["train", "--out", str(out), "--loss", "atcl+softmax", "--epochs", "12"]) == 0
        assert main(["eval", "--out", str(out)]) == 0
        assert main(["hist", "--out", str(out)]) == 0
        outs.append(out)
    files = ("history.csv", "report.csv", "report.json", "histogram.csv")
    same = [(outs[0] / f).read_bytes() == (outs[1] / f).read_bytes() for f in files]
    criterion("C9", "identical seeds give byte-identical CSVs", all(same),
              ", ".join(f"{f} {'same' if s else 'DIFFERS'}" for f, s in zip(files, same)))
