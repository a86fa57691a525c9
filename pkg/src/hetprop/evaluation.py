"""Ranking metrics, k-fold cross-validation and the interaction removal experiments."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .bsp.engine import EngineConfig
from .labelprop.driver import run_all_seeds
from .labelprop.outputs import symmetrize_block
from .network import PAIRS, Concept, pair_key, to_dense


class UndefinedMetricError(ValueError):
    pass


# -- metrics --------------------------------------------------------------------


def _check(scores, labels):
    scores = np.asarray(scores, dtype=float).ravel()
    labels = np.asarray(labels).ravel().astype(bool)
    if scores.shape != labels.shape:
        raise ValueError("scores and labels differ in length")
    return scores, labels


def auc(scores, labels):
    """P(random positive outscores random negative), ties counted one half."""
    s, y = _check(scores, labels)
    npos = int(y.sum())
    nneg = len(y) - npos
    if npos == 0 or nneg == 0:
        raise UndefinedMetricError("AUC needs both classes")
    r = rankdata(s)  # average ranks resolve ties as halves
    return float((r[y].sum() - npos * (npos + 1) / 2.0) / (npos * nneg))


def aupr(scores, labels):
    """Average precision: sum over distinct thresholds of (delta recall) * precision."""
    s, y = _check(scores, labels)
    npos = int(y.sum())
    if npos == 0:
        raise UndefinedMetricError("AUPR needs at least one positive")
    order = np.argsort(-s, kind="stable")
    s, y = s[order], y[order]
    tp = np.cumsum(y)
    # last index of each group of equal scores
    last = np.flatnonzero(np.r_[s[1:] != s[:-1], True])
    tp = tp[last].astype(float)
    pred = (last + 1).astype(float)
    recall = tp / npos
    precision = tp / pred
    d = np.diff(np.r_[0.0, recall])
    return float(np.sum(d * precision))


@dataclass(frozen=True)
class Threshold:
    accuracy: float
    threshold: float
    tp: int
    fp: int
    tn: int
    fn: int


def best_accuracy(scores, labels):
    """Max accuracy over thresholds {-inf, each distinct score, +inf}.

    A pair is predicted positive iff score >= threshold; ties between
    thresholds go to the lowest one.
    """
    s, y = _check(scores, labels)
    n = len(s)
    if n == 0:
        raise UndefinedMetricError("no scores")
    npos = int(y.sum())
    u = np.unique(s)
    ths = np.r_[-np.inf, u, np.inf]
    order = np.argsort(s, kind="stable")
    ss, yy = s[order], y[order]
    # count of items (and positives) with score >= t
    first = np.searchsorted(ss, ths, side="left")
    pos_below = np.r_[0, np.cumsum(yy)]
    tp = npos - pos_below[first]
    pred = n - first
    fp = pred - tp
    fn = npos - tp
    tn = (n - npos) - fp
    acc = (tp + tn) / n
    k = int(np.argmax(acc))  # first maximum == lowest threshold
    return Threshold(float(acc[k]), float(ths[k]), int(tp[k]), int(fp[k]), int(tn[k]), int(fn[k]))


@dataclass(frozen=True)
class MetricReport:
    auc: float
    aupr: float
    best_acc: float
    tp: int
    fp: int
    tn: int
    fn: int
    threshold: float = float("nan")


def evaluate(scores, labels):
    b = best_accuracy(scores, labels)
    return MetricReport(auc(scores, labels), aupr(scores, labels), b.accuracy,
                        b.tp, b.fp, b.tn, b.fn, b.threshold)


# -- folds ------------------------------------------------------------------------


@dataclass(frozen=True)
class FoldPlan:
    relation: tuple
    folds: list          # each an (m, 2) array of (row, col) positive coordinates
    rng_seed: int


def kfold_split(R, k, rng_seed=0, relation=None):
    """Random, balanced partition of the positive entries of ``R`` into ``k`` folds."""
    R = to_dense(R)
    pos = np.argwhere(R != 0)
    if k < 1:
        raise ValueError("k must be positive")
    if len(pos) < k:
        raise ValueError(f"need at least {k} positives, found {len(pos)}")
    rng = np.random.default_rng(rng_seed)
    perm = rng.permutation(len(pos))
    folds = [pos[np.sort(idx)] for idx in np.array_split(perm, k)]
    return FoldPlan(relation, folds, rng_seed)


# -- cross validation ---------------------------------------------------------------


@dataclass
class FoldResult:
    relation: tuple
    fold: int
    report: MetricReport
    supersteps: int
    wall_time: float


@dataclass
class CVReport:
    algorithm: str
    folds: list = field(default_factory=list)

    def mean(self, relation):
        rows = [f.report for f in self.folds if f.relation == relation]
        return {
            "auc": float(np.mean([r.auc for r in rows])),
            "aupr": float(np.mean([r.aupr for r in rows])),
            "best_acc": float(np.mean([r.best_acc for r in rows])),
        }

    def relations(self):
        seen = []
        for f in self.folds:
            if f.relation not in seen:
                seen.append(f.relation)
        return seen

    def to_tsv(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("relation\talgorithm\tfold\tAUC\tAUPR\tBestAcc\n")
            for f in self.folds:
                r = f.report
                fh.write(f"{_rel_name(f.relation)}\t{self.algorithm}\t{f.fold}\t"
                         f"{r.auc:.6f}\t{r.aupr:.6f}\t{r.best_acc:.6f}\n")
            for rel in self.relations():
                m = self.mean(rel)
                fh.write(f"{_rel_name(rel)}\t{self.algorithm}\tmean\t"
                         f"{m['auc']:.6f}\t{m['aupr']:.6f}\t{m['best_acc']:.6f}\n")


def _rel_name(rel):
    return f"{Concept(rel[0]).label}_{Concept(rel[1]).label}"


def _concept_ids(net, c):
    return 3 * np.arange(net.sizes[c], dtype=np.int64) + int(c)


def _scores_for(net, algo, params, config, backend, c1, c2, seeds=None):
    if seeds is None:
        seeds = np.r_[_concept_ids(net, c1), _concept_ids(net, c2)]
    raw = run_all_seeds(net, algo, params, config, seeds=seeds, backend=backend)
    if not raw.converged:
        raise RuntimeError(f"propagation hit the superstep cap at seed {raw.offending_seed}")
    return symmetrize_block(raw, c1, c2, net.sizes), raw


def cross_validate(net, algo, params, k=10, rng_seed=0, relations=None, config=None,
                   backend=None):
    """Per relation and fold: hide a fold of positives, re-normalize, propagate and
    score held-out positives against the pairs that are zero in the full input.
    """
    config = config or EngineConfig()
    relations = [pair_key(*r)[0] for r in (relations or PAIRS)]
    report = CVReport(str(algo))
    for c1, c2 in relations:
        R = to_dense(net.relation[(c1, c2)])
        plan = kfold_split(R, k, rng_seed, (c1, c2))
        negatives = R == 0
        for i, held in enumerate(plan.folds):
            train = R.copy()
            train[held[:, 0], held[:, 1]] = 0.0
            fold_net = net.with_relation(c1, c2, train)
            tr = to_dense(fold_net.relation[(c1, c2)])
            assert not np.any(tr[held[:, 0], held[:, 1]]), "held-out positive leaked into training"
            M, raw = _scores_for(fold_net, algo, params, config, backend, c1, c2)
            pos_scores = M[held[:, 0], held[:, 1]]
            neg_scores = M[negatives]
            scores = np.r_[pos_scores, neg_scores]
            labels = np.r_[np.ones(len(pos_scores), bool), np.zeros(len(neg_scores), bool)]
            report.folds.append(
                FoldResult((c1, c2), i, evaluate(scores, labels), raw.supersteps, raw.wall_time)
            )
    return report


# -- removal experiments ------------------------------------------------------------


def _resolve(net, concept, key):
    """Entity index from a name or a vertex id."""
    concept = Concept(concept)
    if isinstance(key, str):
        return net.lookup(concept, key)
    key = int(key)
    if key < 1 or (key - 1) % 3 + 1 != int(concept):
        raise KeyError(f"vertex {key} is not a {concept.label}")
    x = (key - 1) // 3
    if x >= net.sizes[concept]:
        raise KeyError(f"unknown {concept.label} vertex {key}")
    return x


def rank_in_row(scores, j, candidates=None):
    """1-based rank of column ``j`` in a descending sort, ties by ascending index.

    ``candidates`` (bool mask) restricts the competition to those columns.
    """
    idx = np.arange(len(scores)) if candidates is None else np.flatnonzero(candidates)
    order = idx[np.lexsort((idx, -scores[idx]))]
    return int(np.flatnonzero(order == j)[0]) + 1


@dataclass
class RemovalResult:
    entity: str
    removed: list        # names of the removed partners
    ranks: dict          # partner name -> 1-based rank
    top: list            # (name, score) of the leading candidates
    supersteps: int = 0


def _removal(net, algo, params, entity, partners, config, backend, relation, top):
    c1, c2 = relation
    e = _resolve(net, c1, entity)
    R = to_dense(net.raw_relation(c1, c2)).copy()
    R[e, partners] = 0.0
    reduced = net.with_relation(c1, c2, R)
    seeds = np.r_[3 * e + int(c1), _concept_ids(net, c2)]
    M, raw = _scores_for(reduced, algo, params, config, backend, c1, c2, seeds=seeds)
    row = M[e]
    names = net.names[c2]
    # interactions still present in the input are not predictions
    cand = R[e] == 0
    ranks = {names[j]: rank_in_row(row, j, cand) for j in partners}
    idx = np.flatnonzero(cand)
    order = idx[np.lexsort((idx, -row[idx]))][:top]
    return RemovalResult(net.names[c1][e], [names[j] for j in partners], ranks,
                         [(names[j], float(row[j])) for j in order], raw.supersteps)


def deleted_interaction_experiment(net, algo, params, drug, target, config=None, backend=None,
                                   relation=(Concept.DRUG, Concept.TARGET), top=20):
    """Remove one positive pair, re-run, and report where the partner ranks."""
    c1, c2 = relation
    e = _resolve(net, c1, drug)
    t = _resolve(net, c2, target)
    if to_dense(net.raw_relation(c1, c2))[e, t] == 0:
        raise ValueError(f"{net.names[c1][e]} - {net.names[c2][t]} is not a known interaction")
    return _removal(net, algo, params, drug, [t], config or EngineConfig(), backend, relation, top)


def new_drug_experiment(net, algo, params, drug, config=None, backend=None,
                        relation=(Concept.DRUG, Concept.TARGET), top=20):
    """Remove every interaction of ``drug`` in the relation and rank the removed partners."""
    c1, c2 = relation
    e = _resolve(net, c1, drug)
    partners = np.flatnonzero(to_dense(net.raw_relation(c1, c2))[e]).tolist()
    if not partners:
        raise ValueError(f"{net.names[c1][e]} has no interactions to remove")
    return _removal(net, algo, params, drug, partners, config or EngineConfig(), backend,
                    relation, top)


def write_removal_tsv(results, path):
    """Rank table: algorithm, entity, rank, candidate, score, removed flag."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("algorithm\tentity\trank\tcandidate\tscore\tremoved\n")
        for algo, res in results:
            for r, (name, score) in enumerate(res.top, start=1):
                fh.write(f"{algo}\t{res.entity}\t{r}\t{name}\t{score:.6g}\t"
                         f"{int(name in res.removed)}\n")
