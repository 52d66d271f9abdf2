"""Retrieval evaluation by cosine distance: ranking, AP/MAP, PR-AUC, F-measure, NDCG.

Per-query metrics take a relevance list already in rank order (first item is
rank 1). :func:`evaluate` glues ranking and metrics into a
:class:`RetrievalReport`.
"""

import csv
from dataclasses import dataclass, field
import json

import numpy as np

from .geometry import l2_normalize


@dataclass
class RetrievalReport:
    per_query_ap: np.ndarray
    per_query_auc: np.ndarray
    per_query_f: np.ndarray
    per_query_ndcg: np.ndarray
    query_labels: np.ndarray
    map: float
    map_macro: float
    auc: float
    f_measure_micro: float
    f_measure_macro: float
    ndcg_micro: float
    ndcg_macro: float

    def summary(self):
        keys = ("map", "map_macro", "auc", "f_measure_micro", "f_measure_macro",
                "ndcg_micro", "ndcg_macro")
        return {k: float(getattr(self, k)) for k in keys}


@dataclass
class HistogramReport:
    edges: np.ndarray
    intra: np.ndarray
    inter: np.ndarray
    intra_distances: np.ndarray = field(repr=False, default=None)
    inter_distances: np.ndarray = field(repr=False, default=None)

    @property
    def intra_median(self):
        return float(np.median(self.intra_distances))

    @property
    def inter_median(self):
        return float(np.median(self.inter_distances))


def distance_matrix(queries, gallery, metric="cosine"):
    """Pairwise ``(Q, G)`` distances between row vectors; ``metric`` is cosine or angular."""
    sim = np.clip(l2_normalize(np.atleast_2d(queries)) @ l2_normalize(np.atleast_2d(gallery)).T,
                  -1.0, 1.0)
    if metric == "cosine":
        return 1.0 - sim
    if metric == "angular":
        return np.arccos(sim)
    raise ValueError(f"unknown metric {metric!r}")


def rank(queries, gallery, exclude_self=False, metric="cosine"):
    """Gallery indices sorted by ascending distance for each query.

    Ties go to the lower gallery index. With ``exclude_self`` the query set is
    the gallery and query ``i`` is dropped from its own ranking.
    Returns a list of index arrays, one per query.
    """
    dist = distance_matrix(queries, gallery, metric)
    order = np.argsort(dist, axis=1, kind="stable")
    if not exclude_self:
        return list(order)
    return [row[row != i] for i, row in enumerate(order)]


def average_precision(rel):
    """Mean of precision@k over the ranks k holding a relevant item; 0 if none."""
    rel = np.asarray(rel) != 0
    R = rel.sum()
    if R == 0:
        return 0.0
    hits = np.cumsum(rel)
    ranks = np.arange(1, rel.size + 1)
    return float(np.sum((hits / ranks)[rel]) / R)


def pr_auc(rel):
    """Trapezoidal area under the precision-recall curve.

    The curve starts at (recall 0, precision 1) and has one point per relevant
    item. All-irrelevant lists score 0.
    """
    rel = np.asarray(rel) != 0
    R = rel.sum()
    if R == 0:
        return 0.0
    hits = np.cumsum(rel)
    ranks = np.arange(1, rel.size + 1)
    recall = np.concatenate([[0.0], (hits / R)[rel]])
    precision = np.concatenate([[1.0], (hits / ranks)[rel]])
    return float(np.sum(np.diff(recall) * (precision[1:] + precision[:-1]) / 2.0))


def f_measure(rel, cutoff, total_relevant):
    """F1 of precision and recall measured on the first ``cutoff`` items."""
    rel = np.asarray(rel)[:cutoff] != 0
    hits = rel.sum()
    if hits == 0 or cutoff <= 0 or total_relevant <= 0:
        return 0.0
    p = hits / cutoff
    r = hits / total_relevant
    return float(2 * p * r / (p + r))


def dcg(rel):
    rel = np.asarray(rel, dtype=np.float64)
    discounts = np.log2(np.arange(2, rel.size + 2))
    return float(np.sum((2.0 ** rel - 1.0) / discounts))


def ndcg(rel):
    """DCG over ideal DCG with gain ``2^rel - 1``; 0 when every grade is 0."""
    ideal = dcg(np.sort(np.asarray(rel, dtype=np.float64))[::-1])
    if ideal == 0:
        return 0.0
    return dcg(rel) / ideal


def micro_macro(values, groups):
    """``(micro, macro)``: mean over items, and mean over groups of per-group means."""
    values = np.asarray(values, dtype=np.float64)
    groups = np.asarray(groups)
    if values.size == 0:
        return 0.0, 0.0
    micro = float(np.mean(values))
    macro = float(np.mean([values[groups == g].mean() for g in np.unique(groups)]))
    return micro, macro


def evaluate(queries, query_labels, gallery=None, gallery_labels=None, cutoff=None,
             metric="cosine"):
    """Rank, score every query, and aggregate.

    With no gallery the queries retrieve among themselves (self excluded).
    ``cutoff`` for the F-measure defaults to ``min(relevant gallery size, 1000)``
    per query.
    """
    query_labels = np.asarray(query_labels)
    exclude_self = gallery is None
    if exclude_self:
        gallery, gallery_labels = queries, query_labels
    gallery_labels = np.asarray(gallery_labels)

    ap, auc, fm, nd = [], [], [], []
    for i, order in enumerate(rank(queries, gallery, exclude_self, metric)):
        rel = (gallery_labels[order] == query_labels[i]).astype(np.int64)
        total = int(rel.sum())
        k = cutoff if cutoff is not None else min(total, 1000)
        ap.append(average_precision(rel))
        auc.append(pr_auc(rel))
        fm.append(f_measure(rel, k, total))
        nd.append(ndcg(rel))

    ap, auc, fm, nd = (np.array(a) for a in (ap, auc, fm, nd))
    map_micro, map_macro = micro_macro(ap, query_labels)
    f_micro, f_macro = micro_macro(fm, query_labels)
    nd_micro, nd_macro = micro_macro(nd, query_labels)
    return RetrievalReport(
        per_query_ap=ap,
        per_query_auc=auc,
        per_query_f=fm,
        per_query_ndcg=nd,
        query_labels=query_labels,
        map=map_micro,
        map_macro=map_macro,
        auc=float(np.mean(auc)) if auc.size else 0.0,
        f_measure_micro=f_micro,
        f_measure_macro=f_macro,
        ndcg_micro=nd_micro,
        ndcg_macro=nd_macro,
    )


def cosine_histograms(X, labels, bins=40):
    """Bin cosine distances of all unordered pairs into intra- and inter-class counts over [0, 2]."""
    labels = np.asarray(labels)
    dist = distance_matrix(X, X)
    iu, ju = np.triu_indices(len(labels), k=1)
    d = np.clip(dist[iu, ju], 0.0, 2.0)
    same = labels[iu] == labels[ju]
    edges = np.linspace(0.0, 2.0, bins + 1)
    intra, _ = np.histogram(d[same], bins=edges)
    inter, _ = np.histogram(d[~same], bins=edges)
    return HistogramReport(edges, intra, inter, d[same], d[~same])


def write_report(report, json_path, csv_path):
    """Summary metrics as JSON; per-query rows as CSV."""
    payload = dict(report.summary())
    payload["num_queries"] = int(report.per_query_ap.size)
    with open(json_path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["query", "label", "ap", "auc", "f_measure", "ndcg"])
        for i in range(report.per_query_ap.size):
            w.writerow([i, int(report.query_labels[i]), repr(float(report.per_query_ap[i])),
                        repr(float(report.per_query_auc[i])), repr(float(report.per_query_f[i])),
                        repr(float(report.per_query_ndcg[i]))])


def write_histograms(hist, json_path, csv_path):
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bin_lo", "bin_hi", "intra_count", "inter_count"])
        for lo, hi, a, b in zip(hist.edges[:-1], hist.edges[1:], hist.intra, hist.inter):
            w.writerow([repr(float(lo)), repr(float(hi)), int(a), int(b)])
    payload = {
        "edges": [float(e) for e in hist.edges],
        "intra_count": [int(c) for c in hist.intra],
        "inter_count": [int(c) for c in hist.inter],
        "intra_median": hist.intra_median if hist.intra.sum() else None,
        "inter_median": hist.inter_median if hist.inter.sum() else None,
    }
    with open(json_path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
