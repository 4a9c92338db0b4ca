"""Acceptance suite: one test per criterion, one PASS/FAIL line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the lines as they
print. Tolerances are pinned here, not configurable.
"""

import itertools
import math
import time
from contextlib import contextmanager

import numpy as np
import pytest

from conftest import CORPUS_SEED, D_IN, toy_graph, two_cluster_corpus
from mmg.encoder import EncoderConfig, init_params, load_params, save_params
from mmg.errors import ChecksumMismatch
from mmg.evaluation import EvalJudgment, RelevanceLabel, label_distribution, ndcg_at
from mmg.graph import NodeKind
from mmg.index import load_embeddings, save_embeddings, top_k
from mmg.ingest import BuildConfig, build_graph, load_graph, save_graph
from mmg.query import (
    BlendWeights,
    Connectivity,
    ConnectivityMode,
    QuerySpec,
    attach_query,
    concept_embedding,
    embed_query,
    retrieve_images,
)
from mmg.sampling import SamplerConfig, generate_pairs, sample_negatives
from mmg.training import TrainConfig, batch_gradients, embed_all, train


@contextmanager
def criterion(number, description):
    start = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {number}: FAIL - {description}")
        raise
    print(f"ACCEPTANCE {number}: PASS - {description} "
          f"({time.perf_counter() - start:.2f}s)")


def test_criterion_1_label_distribution_fixture():
    with criterion(1, "score-distribution fixture percentages reproduced exactly"):
        t0 = time.perf_counter()
        judgments = []
        fixture = [(RelevanceLabel.EXCELLENT, 2164), (RelevanceLabel.GOOD, 8955),
                   (RelevanceLabel.ACCEPTABLE, 2601), (RelevanceLabel.UNACCEPTABLE, 1275)]
        i = 0
        for label, count in fixture:
            for _ in range(count):
                judgments.append(EvalJudgment(f"q{i // 5}", i % 5 + 1, label))
                i += 1
        counts, pcts = label_distribution(judgments)
        assert counts == {"excellent": 2164, "good": 8955,
                          "acceptable": 2601, "unacceptable": 1275}
        assert pcts == {"excellent": 14, "good": 60,
                        "acceptable": 17, "unacceptable": 9}
        assert time.perf_counter() - t0 < 1.0


def test_criterion_2_ndcg_permutation_oracle():
    with criterion(2, "nDCG matches the exhaustive-permutation oracle, tol 1e-9"):
        t0 = time.perf_counter()
        labels = list(RelevanceLabel)

        def oracle(gains, p):
            def direct(seq):
                return sum((2 ** g - 1) / math.log2(i + 2)
                           for i, g in enumerate(seq[:p]))
            best = max(direct(perm) for perm in itertools.permutations(gains))
            return direct(gains) / best if best > 0 else 0.0

        checked = 0
        for length in range(1, 6):
            for seq in itertools.product(labels, repeat=length):
                judgments = [EvalJudgment("q", r + 1, lab)
                             for r, lab in enumerate(seq)]
                got = ndcg_at(judgments, length)
                want = oracle([int(lab) for lab in seq], length)
                assert abs(got - want) < 1e-9, (seq, got, want)
                checked += 1
        assert checked == 4 + 16 + 64 + 256 + 1024
        assert time.perf_counter() - t0 < 30.0


def test_criterion_3_gradient_check_every_coordinate():
    with criterion(3, "analytic gradient vs central differences, step 1e-3, "
                      "rel err < 1e-4 on every coordinate"):
        t0 = time.perf_counter()
        seed = 3
        g = toy_graph(seed)  # 18 image + 2 tag nodes
        assert g.node_count == 20
        scfg = SamplerConfig(walks_per_node=3, walk_length=3, fanouts=(3, 2),
                             negatives_per_positive=3, rng_seed=seed)
        cfg = TrainConfig(epochs=1, batch_size=6, sampler=scfg,
                          encoder=EncoderConfig(dropout=0.2), hidden=4,
                          rng_seed=seed)
        params = init_params(g.d_in, hidden=4, rng_seed=seed, dtype=np.float64)
        pairs = generate_pairs(g, scfg)[:6]
        negs = sample_negatives(g, 3, scfg)
        _, grads = batch_gradients(g, params, cfg, pairs, negs, seed=seed * 7,
                                   dtype=np.float64)

        def loss_at():
            loss, _ = batch_gradients(g, params, cfg, pairs, negs, seed=seed * 7,
                                      dtype=np.float64)
            return loss

        step = 1e-3
        worst = 0.0
        for mi, mat in enumerate(params.matrices()):
            analytic = grads.matrices()[mi]
            for idx in np.ndindex(mat.shape):
                orig = mat[idx]
                mat[idx] = orig + step
                up = loss_at()
                mat[idx] = orig - step
                down = loss_at()
                mat[idx] = orig
                numeric = (up - down) / (2 * step)
                # guarded relative error: relative where the gradient is
                # meaningful, absolute (at 1e-2 scale) near zero
                rel = abs(analytic[idx] - numeric) / max(
                    abs(analytic[idx]), abs(numeric), 1e-2)
                worst = max(worst, rel)
                assert rel < 1e-4, (mi, idx, analytic[idx], numeric)
        assert time.perf_counter() - t0 < 60.0


def test_criterion_4_two_cluster_experiment(synthetic):
    with criterion(4, "two-cluster experiment: loss decrease, cluster "
                      "separation, purity@5, held-out tag top-1"):
        losses = synthetic.report.epoch_losses
        assert losses[-1] < losses[0], "mean loss must decrease over training"

        g = synthetic.graph
        table = synthetic.table
        ids_a = [g.id_of(k) for k, lab in synthetic.labels.items() if lab == "a"]
        ids_b = [g.id_of(k) for k, lab in synthetic.labels.items() if lab == "b"]
        za, zb = table[ids_a], table[ids_b]
        intra = 0.5 * (float((za @ za.T).mean()) + float((zb @ zb.T).mean()))
        inter = float((za @ zb.T).mean())
        assert intra > inter

        good = total = 0
        for label, feat in synthetic.heldout:
            spec = QuerySpec(init_feature=feat, k_results=5,
                             connectivity=Connectivity(ConnectivityMode.IMAGE_ONLY))
            res = retrieve_images(g, synthetic.params, synthetic.index, table,
                                  spec, synthetic.config.encoder)
            assert len(res.results) == 5
            for key, _ in res.results:
                total += 1
                good += synthetic.labels[key] == label
        assert good / total >= 0.9, f"purity@5 = {good}/{total}"

        from mmg.query import predict_tags
        correct = 0
        for label, feat in synthetic.heldout:
            spec = QuerySpec(init_feature=feat, k_results=1)
            top = predict_tags(g, synthetic.params, synthetic.index, spec,
                               synthetic.config.encoder)
            correct += top[0][0] == ("alpha" if label == "a" else "beta")
        assert correct / len(synthetic.heldout) >= 0.9, f"top-1 = {correct}/6"

        assert synthetic.experiment_seconds < 120.0, \
            f"build+train+embed took {synthetic.experiment_seconds:.1f}s"


def test_criterion_5_blend_endpoint_equivalence(synthetic):
    with criterion(5, "w1 endpoints reproduce pure rankings; blended query "
                      "invariant to scaling"):
        t0 = time.perf_counter()
        g = synthetic.graph
        table = synthetic.table
        index = synthetic.index
        rng = np.random.default_rng(99)
        from conftest import cluster_feature
        for trial in range(20):
            label = "a" if trial % 2 == 0 else "b"
            feat = cluster_feature(rng, label)
            tags = ["alpha"] if rng.random() < 0.5 else ["beta"]

            spec1 = QuerySpec(init_feature=feat, tags=tags,
                              blend=BlendWeights(w_visual=1.0), k_results=5)
            res1 = retrieve_images(g, synthetic.params, index, table, spec1,
                                   synthetic.config.encoder)
            att = attach_query(g, QuerySpec(
                init_feature=feat,
                connectivity=Connectivity(ConnectivityMode.IMAGE_ONLY)))
            e_i = embed_query(g, synthetic.params, att, synthetic.config.encoder)
            pure_i = top_k(index, e_i, 5, kind_filter=NodeKind.IMAGE)
            assert [k for k, _ in res1.results] == [g.key_of(n) for n, _ in pure_i]

            spec0 = QuerySpec(init_feature=feat, tags=tags,
                              blend=BlendWeights(w_visual=0.0), k_results=5)
            res0 = retrieve_images(g, synthetic.params, index, table, spec0,
                                   synthetic.config.encoder)
            e_t = concept_embedding(np.array([g.id_of(tags[0])]), table)
            pure_t = top_k(index, e_t, 5, kind_filter=NodeKind.IMAGE)
            assert [k for k, _ in res0.results] == [g.key_of(n) for n, _ in pure_t]

            blended = 0.5 * (0.65 * e_i + 0.35 * e_t)
            base = [n for n, _ in top_k(index, blended, 5,
                                        kind_filter=NodeKind.IMAGE)]
            for c in (0.5, 2.0, 10.0):
                scaled = [n for n, _ in top_k(index, c * blended, 5,
                                              kind_filter=NodeKind.IMAGE)]
                assert scaled == base
        assert time.perf_counter() - t0 < 10.0


def test_criterion_6_slider_sweep_monotone(synthetic):
    with criterion(6, "cross-modal slider sweep: cluster-B share of top-10 "
                      "non-decreasing as w1 goes 1.0 -> 0.0"):
        t0 = time.perf_counter()
        g = synthetic.graph
        label, feat = synthetic.heldout[0]
        assert label == "a"
        fractions = []
        for i in range(11):
            w1 = round(1.0 - 0.1 * i, 1)
            spec = QuerySpec(init_feature=feat, tags=["beta"],
                             blend=BlendWeights(w_visual=w1), k_results=10)
            res = retrieve_images(g, synthetic.params, synthetic.index,
                                  synthetic.table, spec, synthetic.config.encoder)
            fractions.append(
                sum(synthetic.labels[k] == "b" for k, _ in res.results) / 10)
        for early, late in zip(fractions, fractions[1:]):
            assert late >= early - 1e-12, fractions
        assert fractions[0] == 0.0 and fractions[-1] == 1.0
        assert time.perf_counter() - t0 < 10.0


def test_criterion_7_pipeline_determinism(tmp_path):
    with criterion(7, "seeded build->train->embed twice: bit-identical "
                      ".mmgf/.mmgw/.mmge"):
        t0 = time.perf_counter()
        records, _, _ = two_cluster_corpus()
        outputs = []
        for run in (1, 2):
            d = tmp_path / f"run{run}"
            d.mkdir()
            g = build_graph(records, BuildConfig(
                k_neighbors=5, similarity_threshold=0.65, d_in=D_IN,
                rng_seed=CORPUS_SEED))
            save_graph(g, d / "graph.mmgf")
            cfg = TrainConfig(
                epochs=3, batch_size=128, learning_rate=1e-4,
                sampler=SamplerConfig(walks_per_node=10, walk_length=3,
                                      rng_seed=CORPUS_SEED),
                encoder=EncoderConfig(dropout=0.2), rng_seed=CORPUS_SEED)
            g2 = load_graph(d / "graph.mmgf")
            params, _ = train(g2, cfg)
            save_params(params, cfg.encoder, d / "weights.mmgw")
            table = embed_all(g2, params, cfg.encoder)
            save_embeddings(table, np.arange(g2.node_count, dtype=np.int64),
                            g2.kinds_array(), d / "embeddings.mmge")
            outputs.append(tuple((d / name).read_bytes() for name in
                                 ("graph.mmgf", "weights.mmgw", "embeddings.mmge")))
        assert outputs[0][0] == outputs[1][0], "graph snapshots differ"
        assert outputs[0][1] == outputs[1][1], "weight checkpoints differ"
        assert outputs[0][2] == outputs[1][2], "embedding tables differ"
        assert time.perf_counter() - t0 < 180.0


def test_criterion_8_round_trips_and_crc(tmp_path, tiny_trained):
    with criterion(8, "all three binary formats round-trip losslessly and "
                      "reject corruption via CRC"):
        g = tiny_trained.graph
        params = tiny_trained.params
        table = tiny_trained.table

        gpath = tmp_path / "g.mmgf"
        save_graph(g, gpath)
        assert load_graph(gpath).equals(g)

        wpath = tmp_path / "w.mmgw"
        save_params(params, tiny_trained.config.encoder, wpath)
        loaded, _ = load_params(wpath)
        for a, b in zip(params.matrices(), loaded.matrices()):
            assert a.tobytes() == b.tobytes()

        epath = tmp_path / "e.mmge"
        ids = np.arange(g.node_count, dtype=np.int64)
        save_embeddings(table, ids, g.kinds_array(), epath)
        t2, i2, k2 = load_embeddings(epath)
        assert t2.tobytes() == table.astype(np.float32).tobytes()
        np.testing.assert_array_equal(i2, ids)

        for path, loader in ((gpath, load_graph), (wpath, load_params),
                             (epath, load_embeddings)):
            raw = bytearray(path.read_bytes())
            raw[len(raw) // 2] ^= 0xFF
            bad = tmp_path / (path.name + ".bad")
            bad.write_bytes(bytes(raw))
            with pytest.raises(ChecksumMismatch):
                loader(bad)
