import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hetprop.evaluation import (
    UndefinedMetricError, auc, aupr, best_accuracy, cross_validate,
    deleted_interaction_experiment, evaluate, kfold_split, new_drug_experiment,
    rank_in_row, write_removal_tsv,
)
from hetprop.bsp import EngineConfig
from hetprop.evaluation import _scores_for
from hetprop.labelprop.program import AlgoParams
from hetprop.netgen import GenSpec, generate
from hetprop.network import Concept, HeterogeneousNetwork, to_dense

from .metric_oracles import aupr_thresholds, auc_pairs, best_acc_enum


def test_auc_examples():
    assert auc([0.9, 0.8, 0.1], [1, 1, 0]) == 1.0
    assert auc([0.5, 0.5], [1, 0]) == 0.5
    assert auc([0.1, 0.9], [1, 0]) == 0.0
    with pytest.raises(UndefinedMetricError):
        auc([0.1, 0.2], [1, 1])


def test_aupr_examples():
    assert aupr([0.9, 0.8, 0.1], [1, 1, 0]) == 1.0
    assert aupr([0.9, 0.8, 0.1], [0, 1, 0]) == 0.5
    assert aupr([0.5, 0.5, 0.5, 0.5], [1, 0, 0, 0]) == 0.25
    with pytest.raises(UndefinedMetricError):
        aupr([0.1], [0])


def test_best_accuracy_examples():
    b = best_accuracy([0.9, 0.8, 0.1], [1, 1, 0])
    assert b.accuracy == 1.0 and b.threshold == 0.8 and (b.tp, b.fp, b.tn, b.fn) == (2, 0, 1, 0)
    b = best_accuracy([0.5, 0.5], [1, 0])
    assert b.accuracy == 0.5 and b.threshold == -np.inf
    with pytest.raises(UndefinedMetricError):
        best_accuracy([], [])


scores_labels = st.integers(1, 12).flatmap(lambda n: st.tuples(
    st.lists(st.sampled_from([0.0, 0.1, 0.25, 0.5, 0.7, 1.0]) | st.floats(0, 1), min_size=n, max_size=n),
    st.lists(st.booleans(), min_size=n, max_size=n),
))


@settings(max_examples=300, deadline=None)
@given(scores_labels)
def test_metrics_match_brute_force(sl):
    s, y = sl
    if 0 < sum(y) < len(y):
        assert abs(auc(s, y) - auc_pairs(s, y)) <= 1e-12
    if sum(y):
        assert abs(aupr(s, y) - aupr_thresholds(s, y)) <= 1e-12
    acc, t = best_acc_enum(s, y)
    b = best_accuracy(s, y)
    assert abs(b.accuracy - acc) <= 1e-12 and b.threshold == t
    assert b.tp + b.fp + b.tn + b.fn == len(s)
    assert b.accuracy >= max(np.mean(y), 1 - np.mean(y)) - 1e-12


@settings(max_examples=100, deadline=None)
@given(scores_labels)
def test_metric_ranges(sl):
    s, y = sl
    if 0 < sum(y) < len(y):
        r = evaluate(s, y)
        assert 0 <= r.auc <= 1 and 0 < r.aupr <= 1 and 0 <= r.best_acc <= 1


def test_auc_invariant_to_monotone_transform():
    rng = np.random.default_rng(0)
    s = rng.random(50)
    y = rng.random(50) < 0.3
    assert auc(s, y) == auc(np.exp(3 * s), y)
    assert aupr(s, y) == aupr(s ** 2, y)


def test_kfold_examples():
    R = np.zeros((5, 5))
    R[np.arange(5), np.arange(5)] = 1
    R[0, 1] = R[2, 3] = R[4, 0] = R[1, 2] = R[3, 4] = 1
    plan = kfold_split(R, 10, 0)
    assert [len(f) for f in plan.folds] == [1] * 10
    allpos = np.concatenate(plan.folds)
    assert len({tuple(p) for p in allpos.tolist()}) == 10
    with pytest.raises(ValueError):
        kfold_split(np.eye(3), 10, 0)
    plan3 = kfold_split(R, 3, 7)
    assert sorted(len(f) for f in plan3.folds) == [3, 3, 4]


@given(st.integers(1, 60), st.integers(1, 10), st.integers(0, 1000))
def test_kfold_partition_property(npos, k, seed):
    if npos < k:
        return
    R = np.zeros(npos * 2)
    R[np.random.default_rng(seed).permutation(npos * 2)[:npos]] = 1
    R = R.reshape(npos, 2)
    plan = kfold_split(R, k, seed)
    sizes = [len(f) for f in plan.folds]
    assert max(sizes) - min(sizes) <= 1 and sum(sizes) == npos
    assert kfold_split(R, k, seed).folds[0].tolist() == plan.folds[0].tolist()


@pytest.fixture(scope="module")
def cvnet():
    return generate(GenSpec(12, 10, 14, 0.3, 0.25, 2, 1))


def test_cross_validate_deterministic_and_no_leak(cvnet):
    rel = [(Concept.DRUG, Concept.TARGET)]
    a = cross_validate(cvnet, "dhlp2", AlgoParams(0.5, 0.1), k=5, rng_seed=3, relations=rel)
    b = cross_validate(cvnet, "dhlp2", AlgoParams(0.5, 0.1), k=5, rng_seed=3, relations=rel)
    assert [f.report for f in a.folds] == [f.report for f in b.folds]
    assert len(a.folds) == 5
    m = a.mean(rel[0])
    assert 0.5 < m["auc"] <= 1


def test_cv_table(tmp_path, cvnet):
    rep = cross_validate(cvnet, "dhlp1", AlgoParams(0.5, 0.1), k=3, rng_seed=0,
                         relations=[(Concept.DRUG, Concept.DISEASE)])
    p = tmp_path / "cv.tsv"
    rep.to_tsv(str(p))
    lines = p.read_text().splitlines()
    assert lines[0] == "relation\talgorithm\tfold\tAUC\tAUPR\tBestAcc"
    assert len(lines) == 1 + 3 + 1 and lines[-1].startswith("drug_disease\tdhlp1\tmean")


def test_rank_in_row():
    s = np.array([0.9, 0.9, 0.1, 0.95])
    assert rank_in_row(s, 3) == 1
    assert rank_in_row(s, 1) == 3
    assert rank_in_row(s, 1, np.array([False, True, True, False])) == 1


def test_experiment_errors_and_output(tmp_path, cvnet):
    R = to_dense(cvnet.raw_relation(Concept.DRUG, Concept.TARGET))
    d, t = map(int, np.argwhere(R)[0])
    z = int(np.flatnonzero(R[d] == 0)[0])
    with pytest.raises(ValueError):
        deleted_interaction_experiment(cvnet, "dhlp2", AlgoParams(), d * 3 + 1, z * 3 + 3)
    with pytest.raises(KeyError):
        deleted_interaction_experiment(cvnet, "dhlp2", AlgoParams(), 2, t * 3 + 3)
    res = deleted_interaction_experiment(cvnet, "dhlp2", AlgoParams(0.5, 0.1), d * 3 + 1,
                                         cvnet.names[Concept.TARGET][t])
    assert res.ranks[cvnet.names[Concept.TARGET][t]] >= 1
    assert len(res.top) == min(20, int((R[d] == 0).sum()) + 1)
    nd = new_drug_experiment(cvnet, "dhlp1", AlgoParams(0.5, 0.1), cvnet.names[Concept.DRUG][d])
    assert sorted(nd.ranks) == sorted(cvnet.names[Concept.TARGET][j] for j in np.flatnonzero(R[d]))
    p = tmp_path / "rm.tsv"
    write_removal_tsv([("dhlp2", res), ("dhlp1", nd)], str(p))
    assert p.read_text().splitlines()[0] == "algorithm\tentity\trank\tcandidate\tscore\tremoved"
    lonely = np.flatnonzero(R.sum(axis=1) == 0)
    if len(lonely):
        with pytest.raises(ValueError):
            new_drug_experiment(cvnet, "dhlp2", AlgoParams(), int(lonely[0]) * 3 + 1)


@pytest.mark.parametrize("algo", ["dhlp2", "dhlp1"])
def test_planted_relations_auc_on_block_net(algo):
    D, T = Concept.DRUG, Concept.TARGET
    net = generate(GenSpec(100, 100, 100, 0.05, 0.2, 4, 1))
    lab = net.meta["blocks"]
    R = to_dense(net.raw_relation(D, T))
    planted = lab[D][:, None] == lab[T][None, :]
    for held in kfold_split(R, 10, 0).folds[:2]:
        train = R.copy()
        train[held[:, 0], held[:, 1]] = 0
        M, _ = _scores_for(net.with_relation(D, T, train), algo, AlgoParams(0.5, 0.1),
                           EngineConfig(), None, D, T)
        pl = held[planted[held[:, 0], held[:, 1]]]
        s = np.r_[M[pl[:, 0], pl[:, 1]], M[R == 0]]
        y = np.r_[np.ones(len(pl), bool), np.zeros(int((R == 0).sum()), bool)]
        assert auc(s, y) > 0.9


def test_metric_spec_examples():
    assert auc([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0]) == 1.0
    assert auc([0.9, 0.8, 0.2, 0.1], [0, 0, 1, 1]) == 0.0
    assert auc([0.3] * 4, [1, 0, 1, 0]) == 0.5
    assert aupr([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0]) == 1.0
    assert aupr([0.9, 0.8, 0.2, 0.1], [0, 0, 0, 1]) == 0.25
    assert aupr([0.2, 0.7], [1, 1]) == 1.0
    assert best_accuracy([0.9, 0.1], [1, 0]).accuracy == 1.0
    assert best_accuracy([0.5, 0.5], [0, 1]).accuracy == 0.5
    b = best_accuracy([0.2, 0.7, 0.4], [1, 1, 1])
    assert b.accuracy == 1.0 and b.threshold == -np.inf


def test_kfold_23_positives():
    R = np.zeros((5, 5))
    R.flat[:23] = 1
    plan = kfold_split(R, 10, 0)
    assert sorted((len(f) for f in plan.folds), reverse=True) == [3, 3, 3] + [2] * 7


def test_cross_validate_k2_smoke():
    net = generate(GenSpec(4, 4, 4, 0.5, 0.5, 0, 0))
    rep = cross_validate(net, "dhlp2", AlgoParams(), k=2, rng_seed=0)
    assert len(rep.relations()) == 3 and len(rep.folds) == 6


# frozen synthetic fixture: three blocks of 20 drugs, 20 diseases and 10 targets
REMOVAL_FIXTURE = GenSpec(60, 60, 30, 0.2, 0.2, 3, 2)


@pytest.mark.parametrize("algo", ["dhlp2", "dhlp1"])
def test_planted_pair_recovered_near_top(algo):
    net = generate(REMOVAL_FIXTURE)
    lab = net.meta["blocks"]
    D, T = Concept.DRUG, Concept.TARGET
    R = to_dense(net.raw_relation(D, T))
    planted = np.argwhere((R > 0) & (lab[D][:, None] == lab[T][None, :]))
    rng = np.random.default_rng(0)
    for d, t in planted[rng.choice(len(planted), 5, replace=False)]:
        res = deleted_interaction_experiment(net, algo, AlgoParams(0.5, 0.1), int(d) * 3 + 1,
                                             int(t) * 3 + 3)
        assert res.ranks[net.names[T][t]] <= 5


@pytest.mark.parametrize("algo", ["dhlp2", "dhlp1"])
def test_new_drug_two_planted_targets_top10(algo):
    net = generate(REMOVAL_FIXTURE)
    lab = net.meta["blocks"]
    D, T = Concept.DRUG, Concept.TARGET
    R = to_dense(net.raw_relation(D, T))
    for d in range(5):
        own = np.flatnonzero(lab[T] == lab[D][d])[:2]
        R2 = R.copy()
        R2[d] = 0
        R2[d, own] = 1
        res = new_drug_experiment(net.with_relation(D, T, R2), algo, AlgoParams(0.5, 0.1),
                                  d * 3 + 1)
        assert len(res.ranks) == 2 and max(res.ranks.values()) <= 10


def test_new_drug_without_similarity_completes():
    net = generate(REMOVAL_FIXTURE)
    D, T = Concept.DRUG, Concept.TARGET
    P = to_dense(net.proximity[D]).copy()
    P[0] = 0
    P[:, 0] = 0
    prox = dict(net.proximity)
    prox[D] = P
    bare = HeterogeneousNetwork.build(net.names, prox, net.relation, net.coupling)
    R = to_dense(bare.raw_relation(D, T))
    if not R[0].any():
        R[0, 0] = 1
        bare = bare.with_relation(D, T, R)
    res = new_drug_experiment(bare, "dhlp2", AlgoParams(0.5, 0.1), 1)
    assert all(r >= 1 for r in res.ranks.values())
