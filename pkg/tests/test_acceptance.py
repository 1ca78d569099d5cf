"""Acceptance suite: one test per criterion, with a pass/fail line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines and timings.
"""

import json
import math
import time
from contextlib import contextmanager

import numpy as np
import pytest

import ecgfuse
from ecgfuse import (
    EcgfuseError,
    EmbeddingSet,
    GBDTConfig,
    ReshuffleSpec,
    SynthConfig,
    TsneConfig,
    aucpr,
    auroc,
    bayes_auroc,
    conditional_affinities,
    decode_ebf,
    encode_ebf,
    fused_arm_name,
    fused_dprime,
    generate,
    predict_proba,
    run_benchmark,
    stratified_split,
    subsample_balanced,
    train,
    tsne_embed,
)
from ecgfuse.cli import main as cli_main
from oracles import (
    aucpr_threshold_sweep,
    auroc_pairwise_fast,
    log_loss_from_margins,
    replay_boosting,
    stratum_test_count_oracle,
)


@contextmanager
def criterion(name):
    start = time.time()
    try:
        yield
    except BaseException:
        print("[acceptance] FAIL %s (%.1fs)" % (name, time.time() - start))
        raise
    print("[acceptance] PASS %s (%.1fs)" % (name, time.time() - start))


def metric_instance(rng):
    m = int(rng.integers(2, 201))
    labels = rng.integers(0, 2, size=m)
    if labels.sum() == 0:
        labels[int(rng.integers(m))] = 1
    if labels.sum() == m:
        labels[int(rng.integers(m))] = 0
    scores = rng.normal(size=m)
    roll = rng.random()
    if roll < 0.4:
        scores = np.round(scores, decimals=1)  # heavy ties
    elif roll < 0.6:
        scores = rng.choice([0.0, 0.25, 0.5, 1.0], size=m)  # tie blocks
    return scores, labels


def test_metric_oracle_equivalence():
    with criterion("metric oracle equivalence (1000 instances, <30s)"):
        start = time.time()
        rng = np.random.default_rng(20260810)
        for _ in range(1000):
            scores, labels = metric_instance(rng)
            assert abs(auroc(scores, labels) - auroc_pairwise_fast(scores, labels)) <= 1e-12
            assert abs(aucpr(scores, labels) - aucpr_threshold_sweep(scores, labels)) <= 1e-12
        assert time.time() - start < 30.0


def test_hand_computable_metric_values():
    with criterion("hand-computable metric values"):
        scores = [0.1, 0.4, 0.35, 0.8]
        labels = [0, 0, 1, 1]
        assert auroc(scores, labels) == 0.75
        assert abs(aucpr(scores, labels) - (0.5 + 0.5 * (2.0 / 3.0))) <= 1e-12


def test_gbdt_correctness():
    with criterion("gbdt correctness (hand example, logloss, split oracle, <2min)"):
        start = time.time()

        # (a) hand example: leaf weight 1.0, probability sigmoid(0.1)
        X = np.arange(4, dtype=np.float64).reshape(4, 1)
        y = np.ones(4, dtype=int)
        model = train(X, y, GBDTConfig(n_rounds=1, subsample=1.0, colsample_bytree=1.0))
        (tree,) = model.trees
        assert tree.is_leaf and tree.weight == 1.0
        prob = predict_proba(model, X)[0]
        assert abs(prob - 1.0 / (1.0 + math.exp(-0.1))) <= 1e-9

        # (b) training log-loss non-increasing over 100 rounds, 10 datasets
        rng = np.random.default_rng(7)
        for trial in range(10):
            n = int(rng.integers(30, 120))
            d = int(rng.integers(2, 7))
            Xr = rng.normal(size=(n, d))
            yr = (Xr[:, 0] + rng.normal(scale=0.8, size=n) > 0).astype(int)
            if yr.sum() in (0, n):
                yr[0] = 1 - yr[0]
            cfg = GBDTConfig(n_rounds=100, subsample=1.0, colsample_bytree=1.0,
                             seed=trial)
            m = train(Xr, yr, cfg)
            margins = np.zeros(n)
            losses = [log_loss_from_margins(margins, yr)]
            for t in m.trees:
                out = _apply_tree_rows(t, Xr)
                margins = margins + cfg.learning_rate * out
                losses.append(log_loss_from_margins(margins, yr))
            assert (np.diff(losses) <= 1e-9).all()

        # (c) every recorded split equals the brute-force gain argmax
        for trial, (n, d, depth, rounds) in enumerate(
                [(120, 6, 3, 6), (200, 10, 4, 4), (80, 3, 6, 5)]):
            Xr = rng.normal(size=(n, d))
            yr = (np.tanh(Xr[:, 0]) + 0.5 * Xr[:, 1 % d] + rng.normal(scale=0.5, size=n) > 0).astype(int)
            if yr.sum() in (0, n):
                yr[0] = 1 - yr[0]
            cfg = GBDTConfig(n_rounds=rounds, max_depth=depth, subsample=1.0,
                             colsample_bytree=1.0, seed=trial)
            replay_boosting(train(Xr, yr, cfg), Xr, yr)

        assert time.time() - start < 120.0


def _apply_tree_rows(tree, X):
    out = np.empty(X.shape[0])
    for i, row in enumerate(X):
        node = tree
        while not node.is_leaf:
            node = node.left if row[node.feature] < node.threshold else node.right
        out[i] = node.weight
    return out


def test_stratified_split_counts():
    with criterion("stratified split counts (benchmark sizes + 1000 random)"):
        y = np.array([1] * 1207 + [0] * 4606, dtype=np.uint8)
        plan = stratified_split(y, 0.2, 1234)
        test_labels = y[plan.test_indices]
        assert int(test_labels.sum()) == 241
        assert int((test_labels == 0).sum()) == 921

        rng = np.random.default_rng(55)
        for trial in range(1000):
            n_pos = int(rng.integers(2, 60))
            n_neg = int(rng.integers(2, 60))
            frac = float(rng.uniform(0.05, 0.95))
            yy = np.concatenate([np.ones(n_pos, np.uint8), np.zeros(n_neg, np.uint8)])
            p = stratified_split(yy, frac, trial)
            merged = np.sort(np.concatenate([p.train_indices, p.test_indices]))
            assert np.array_equal(merged, np.arange(n_pos + n_neg))
            tl = yy[p.test_indices]
            assert int(tl.sum()) == stratum_test_count_oracle(n_pos, frac)
            assert int((tl == 0).sum()) == stratum_test_count_oracle(n_neg, frac)


def test_synthetic_benchmark_ordering():
    with criterion("synthetic comparison ordering vs closed-form oracle (<5min)"):
        start = time.time()
        set_a, set_b = generate(SynthConfig(dprime_a=1.2, dprime_b=1.6, seed=20260810))
        assert set_a.n == 5813 and int(set_a.labels.sum()) == 1207
        report = run_benchmark(
            {"A": set_a, "B": set_b},
            ReshuffleSpec(n_repeats=10, test_fraction=0.2, base_seed=101),
            GBDTConfig(seed=7),
            fuse_pairs=[("A", "B")],
        )
        by_name = {o.name: o.auroc_summary.mean for o in report.arms}
        mean_a = by_name["A"]
        mean_b = by_name["B"]
        mean_f = by_name[fused_arm_name("A", "B")]
        print("[acceptance]   mean AUROC: A=%.4f B=%.4f fused=%.4f (bayes %.4f/%.4f/%.4f)"
              % (mean_a, mean_b, mean_f,
                 bayes_auroc(1.2), bayes_auroc(1.6), bayes_auroc(2.0)))
        assert mean_f > mean_b + 0.01
        assert mean_b > mean_a + 0.01
        assert fused_dprime(1.2, 1.6) == pytest.approx(2.0)
        assert abs(mean_f - bayes_auroc(2.0)) <= 0.03
        assert time.time() - start < 300.0


def test_cmd_benchmark_determinism(tmp_path, capsys):
    with criterion("cmd_benchmark determinism + seed-shift stability"):
        config = {
            "out_dir": "out",
            "arms": {"A": "out/arm_a.ebf", "B": "out/arm_b.ebf"},
            "fuse_pairs": [["A", "B"]],
            "reshuffle": {"n_repeats": 10, "test_fraction": 0.2, "base_seed": 300},
            "gbdt": {"n_rounds": 60, "max_depth": 4, "seed": 3},
            "synth": {"n_records": 4000, "n_pos": 1000, "dim_a": 12, "dim_b": 12,
                      "dprime_a": 1.0, "dprime_b": 1.3, "seed": 77},
            "persist_artifacts": False,
        }
        cfg_path = tmp_path / "run.json"
        cfg_path.write_text(json.dumps(config))
        assert cli_main(["synth", str(cfg_path)]) == 0
        assert cli_main(["benchmark", str(cfg_path)]) == 0
        report_path = tmp_path / "out" / "report.json"
        first = report_path.read_bytes()
        assert cli_main(["benchmark", str(cfg_path)]) == 0
        assert report_path.read_bytes() == first

        config["reshuffle"]["base_seed"] = 301
        cfg_path.write_text(json.dumps(config))
        assert cli_main(["benchmark", str(cfg_path)]) == 0
        shifted = json.loads(report_path.read_text())
        base = json.loads(first.decode("utf-8"))
        capsys.readouterr()
        for arm in base["arm_order"]:
            b_arm = base["arms"][arm]
            s_arm = shifted["arms"][arm]
            assert b_arm["per_repeat"] != s_arm["per_repeat"]
            for metric in ("auroc", "aucpr"):
                assert abs(b_arm[metric]["mean"] - s_arm[metric]["mean"]) <= 0.02


def test_tsne_invariants():
    with criterion("t-SNE invariants at n=500 (<2min)"):
        start = time.time()
        source, _ = generate(SynthConfig(n_records=1500, n_pos=600, dim_a=16,
                                         dim_b=4, dprime_a=1.5, seed=6))
        sample = subsample_balanced(source, per_class=250, seed=13)
        assert sample.n == 500 and int(sample.labels.sum()) == 250
        X = sample.features.astype(np.float64)
        config = TsneConfig(seed=31)

        p_cond, _ = conditional_affinities(X, config.perplexity)
        target = math.log2(config.perplexity)
        for i in range(500):
            row = p_cond[i][p_cond[i] > 0]
            entropy = -(row * np.log2(row)).sum()
            assert abs(entropy - target) <= 1e-5
        p = ecgfuse.pairwise_affinities(X, config.perplexity)
        assert abs(p.sum() - 1.0) <= 1e-9
        assert np.array_equal(p, p.T) and (p >= 0).all()

        coords, trace = tsne_embed(X, config, return_trace=True)
        assert coords.shape == (500, 2) and np.isfinite(coords).all()
        kls = [kl for _, kl in trace]
        assert all(k >= 0.0 for k in kls)
        assert kls[-1] < kls[0]
        coords_again = tsne_embed(X, config)
        assert np.array_equal(coords, coords_again)

        # the balanced 500-point run renders one circle per point
        import io
        import xml.etree.ElementTree as ET

        from ecgfuse import Embedding2D, export_scatter_svg

        sink = io.BytesIO()
        export_scatter_svg(Embedding2D(coords=coords, labels=sample.labels,
                                       ids=sample.ids), sink)
        root = ET.fromstring(sink.getvalue().decode("utf-8"))
        circles = root.findall("{http://www.w3.org/2000/svg}circle")
        assert len(circles) == 500
        assert time.time() - start < 120.0


def test_format_robustness():
    with criterion("EBF roundtrip x1000 + 10000-mutation fuzz"):
        rng = np.random.default_rng(424242)
        for trial in range(1000):
            n = int(rng.integers(1, 9))
            d = int(rng.integers(1, 6))
            es = EmbeddingSet(
                ids=tuple("id%d_%d" % (trial, i) for i in range(n)),
                labels=(rng.random(n) < 0.5).astype(np.uint8),
                features=rng.normal(size=(n, d)).astype(np.float32),
                source_tag="tag%d" % (trial % 5),
            )
            raw = encode_ebf(es)
            assert decode_ebf(raw) == es
            assert encode_ebf(es) == raw

        base = encode_ebf(EmbeddingSet(
            ids=("alpha", "beta", "gamma"),
            labels=np.array([0, 1, 0], np.uint8),
            features=rng.normal(size=(3, 4)).astype(np.float32),
            source_tag="fuzz",
        ))
        outcomes = {"ok": 0, "typed": 0}
        for _ in range(10000):
            buf = bytearray(base)
            op = rng.random()
            if op < 0.5:
                for _ in range(int(rng.integers(1, 6))):
                    buf[int(rng.integers(len(buf)))] = int(rng.integers(256))
            elif op < 0.75:
                buf = buf[:int(rng.integers(len(buf) + 1))]
            elif op < 0.9:
                buf += bytes(rng.integers(0, 256, size=int(rng.integers(1, 9)), dtype=np.uint8))
            else:
                span = int(rng.integers(1, 9))
                pos = int(rng.integers(max(1, len(buf) - span)))
                del buf[pos:pos + span]
            try:
                got = decode_ebf(bytes(buf))
            except EcgfuseError:
                outcomes["typed"] += 1
            else:
                assert isinstance(got, EmbeddingSet)
                outcomes["ok"] += 1
        print("[acceptance]   fuzz outcomes: %s" % outcomes)
        assert outcomes["typed"] > 0


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v", "-s"]))
