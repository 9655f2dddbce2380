"""Experiment harnesses: shift sweep, translated-image kNN and top-k search.

All harnesses are deterministic given their seed, except for the measured
runtimes.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import time
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .datasets import (
    GridImage,
    embed_and_translate,
    fixed_length_offset,
    image_to_distribution,
    sample_distribution,
    translate_distribution,
    with_seed,
)
from .errors import EmptyCorpus, KernelUnderflow, NumericalError
from .relative import rw2_sinkhorn
from .transport import (
    EXACT_MAX_ENTRIES,
    SinkhornConfig,
    build_cost_matrix,
    exact_solve,
    sinkhorn_solve,
)

METRICS = ("L1", "L2", "W1", "W2", "RW2")


@dataclass(frozen=True)
class SweepResult:
    shift_length: float
    method: str
    w2_error: float
    runtime_seconds: float
    trial: int
    seed: int
    failed: bool
    lam: float
    epsilon: float


@dataclass(frozen=True)
class ClassificationResult:
    translation_length: int
    metric: str
    accuracy: float
    std: float
    sample_size: int
    failures: int
    k: int
    repeats: int
    lam: float
    epsilon: float


@dataclass(frozen=True)
class SearchResult:
    query_id: str
    metric: str
    ranked_ids: list
    distances: list

    def to_dict(self):
        return dataclasses.asdict(self)


def _seed_int(*key):
    return int(np.random.SeedSequence(list(key)).generate_state(1)[0])


# --------------------------------------------------------------------------
# shift sweep

def _reference_w2(src, dst, cfg):
    if src.size * dst.size <= EXACT_MAX_ENTRIES:
        cost = build_cost_matrix(src, dst, 2.0)
        return np.sqrt(max(exact_solve(cost, src.masses, dst.masses).transport_cost, 0.0))
    tight = SinkhornConfig(
        lam=cfg.lam / 10,
        epsilon=cfg.epsilon / 100,
        max_iterations=cfg.max_iterations,
        check_interval=cfg.check_interval,
    )
    return rw2_sinkhorn(src, dst, tight).w_distance


def _timed(fn, repeats):
    best, out = np.inf, None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return out, best


def _failed_time(fn):
    t0 = time.perf_counter()
    try:
        fn()
    except (KernelUnderflow, NumericalError):
        pass
    return time.perf_counter() - t0


def shift_sweep(spec, shift_lengths, trials=10, cfg=SinkhornConfig(), seed=0, timing_repeats=1):
    """Classic Sinkhorn against RW_2 Sinkhorn as the source is translated.

    For each trial, mu and nu are drawn from ``spec`` with two derived seeds
    and reused across lengths. mu is moved along the first axis by each
    length. Both methods estimate W_2 and are scored against an exact LP
    value when the instance is small enough, else against RW_2 Sinkhorn run
    with ``lam / 10`` and ``epsilon / 100``.

    A solver failure is recorded as ``failed=True`` with ``w2_error=inf``.
    ``runtime_seconds`` is the best of ``timing_repeats`` identical runs.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rows = []
    for trial in range(trials):
        trial_seed = _seed_int(seed, trial)
        mu0 = sample_distribution(with_seed(spec, _seed_int(trial_seed, 0)))
        nu = sample_distribution(with_seed(spec, _seed_int(trial_seed, 1)))
        for length in shift_lengths:
            t = np.zeros(spec.dimension)
            t[0] = length
            mu = translate_distribution(mu0, t)
            ref = _reference_w2(mu, nu, cfg)

            def classic_run():
                cost = build_cost_matrix(mu, nu, 2.0)
                return sinkhorn_solve(cost, mu.masses, nu.masses, cfg)

            try:
                rep, dt = _timed(classic_run, timing_repeats)
                classic, failed = np.sqrt(max(rep.transport_cost, 0.0)), False
            except (KernelUnderflow, NumericalError):
                classic, failed, dt = np.inf, True, _failed_time(classic_run)
            err = abs(classic - ref) if not failed else np.inf
            rows.append(SweepResult(float(length), "classic_sinkhorn", float(err), dt,
                                    trial, trial_seed, failed, cfg.lam, cfg.epsilon))

            def rw2_run():
                return rw2_sinkhorn(mu, nu, cfg)

            try:
                rep, dt = _timed(rw2_run, timing_repeats)
                est, failed = rep.w_distance, False
            except (KernelUnderflow, NumericalError):
                est, failed, dt = np.inf, True, _failed_time(rw2_run)
            err = abs(est - ref) if not failed else np.inf
            rows.append(SweepResult(float(length), "rw2_sinkhorn", float(err), dt,
                                    trial, trial_seed, failed, cfg.lam, cfg.epsilon))

    order = {m: i for i, m in enumerate(("classic_sinkhorn", "rw2_sinkhorn"))}
    rows.sort(key=lambda r: (r.shift_length, order[r.method], r.trial))
    return rows


def summarize_sweep(rows):
    """``{(length, method): (mean_error, mean_runtime)}``."""
    groups = {}
    for r in rows:
        groups.setdefault((r.shift_length, r.method), []).append(r)
    return {
        key: (float(np.mean([r.w2_error for r in g])), float(np.mean([r.runtime_seconds for r in g])))
        for key, g in groups.items()
    }


# --------------------------------------------------------------------------
# kNN classification

class _PairDistances:
    """OT distances between two canvas images, computed lazily per metric."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.failures = Counter()

    def rw2_and_w2(self, d1, d2):
        try:
            rep = rw2_sinkhorn(d1, d2, self.cfg)
            return rep.rw_distance, rep.w_distance
        except (KernelUnderflow, NumericalError):
            self.failures["RW2"] += 1
            self.failures["W2"] += 1
            return np.inf, np.inf

    def w1(self, d1, d2):
        try:
            cost = build_cost_matrix(d1, d2, 1.0)
            return sinkhorn_solve(cost, d1.masses, d2.masses, self.cfg).transport_cost
        except (KernelUnderflow, NumericalError):
            self.failures["W1"] += 1
            return np.inf


def _distance_tables(test_imgs, train_imgs, metrics, cfg):
    tables = {m: np.empty((len(test_imgs), len(train_imgs))) for m in metrics}
    pd = _PairDistances(cfg)
    need_ot = any(m in ("W1", "W2", "RW2") for m in metrics)
    test_d = [image_to_distribution(g) for g in test_imgs] if need_ot else None
    train_d = [image_to_distribution(g) for g in train_imgs] if need_ot else None
    test_v = np.array([g.intensities.ravel() for g in test_imgs])
    train_v = np.array([g.intensities.ravel() for g in train_imgs])

    if "L1" in metrics:
        tables["L1"] = np.abs(test_v[:, None, :] - train_v[None, :, :]).sum(axis=-1)
    if "L2" in metrics:
        tables["L2"] = np.sqrt(((test_v[:, None, :] - train_v[None, :, :]) ** 2).sum(axis=-1))
    for i in range(len(test_imgs)):
        for j in range(len(train_imgs)):
            if "W2" in metrics or "RW2" in metrics:
                rw, w = pd.rw2_and_w2(test_d[i], train_d[j])
                if "RW2" in metrics:
                    tables["RW2"][i, j] = rw
                if "W2" in metrics:
                    tables["W2"][i, j] = w
            if "W1" in metrics:
                tables["W1"][i, j] = pd.w1(test_d[i], train_d[j])
    return tables, pd.failures


def knn_predict(dist_row, train_labels, k):
    """Majority vote of the k nearest; distance ties go to the lower train
    index, vote ties to the smaller label."""
    order = np.argsort(dist_row, kind="stable")[:k]
    votes = Counter(int(train_labels[j]) for j in order)
    top = max(votes.values())
    return min(lbl for lbl, c in votes.items() if c == top)


def knn_classify(
    corpus,
    translation_lengths,
    metrics=METRICS,
    k=1,
    test_ratio=0.25,
    repeats=10,
    seed=0,
    cfg=SinkhornConfig(lam=0.1, epsilon=0.1),
    canvas=(84, 84),
):
    """Nearest-neighbour accuracy under random image translations.

    ``corpus`` is a sequence of ``(GridImage, label)``. In each repeat the
    train/test split is drawn once and shared by all lengths; every image
    then gets its own random offset of exactly that length (rounded to
    whole pixels). L1/L2 compare flattened canvases, W1/W2/RW2 the pixel
    distributions. W2 is obtained through RW_2 Sinkhorn and the mean gap.
    Pairs whose solver fails get distance +inf and are counted in
    ``failures``.
    """
    if k < 1 or k % 2 == 0:
        raise ValueError("k must be a positive odd integer")
    unknown = set(metrics) - set(METRICS)
    if unknown:
        raise ValueError(f"unknown metrics {sorted(unknown)}")
    images = [img for img, _ in corpus]
    labels = np.array([lbl for _, lbl in corpus])
    if len(set(labels.tolist())) < 2:
        raise ValueError("corpus needs at least two classes")
    n = len(images)
    n_test = max(1, int(round(n * test_ratio)))
    if n_test >= n:
        raise ValueError("test_ratio leaves no training items")

    acc = {(L, m): [] for L in translation_lengths for m in metrics}
    fails = Counter()
    for rep in range(repeats):
        perm = np.random.default_rng(_seed_int(seed, rep)).permutation(n)
        test_idx, train_idx = perm[:n_test], perm[n_test:]
        for L in translation_lengths:
            rng = np.random.default_rng(_seed_int(seed, rep, int(L)))
            placed = [embed_and_translate(img, *canvas, fixed_length_offset(L, rng)) for img in images]
            tables, f = _distance_tables(
                [placed[i] for i in test_idx], [placed[j] for j in train_idx], metrics, cfg
            )
            for m in metrics:
                fails[(L, m)] += f[m]
                pred = [knn_predict(row, labels[train_idx], k) for row in tables[m]]
                acc[(L, m)].append(float(np.mean(np.array(pred) == labels[test_idx])))

    out = []
    for L in translation_lengths:
        for m in metrics:
            a = np.array(acc[(L, m)])
            out.append(ClassificationResult(
                translation_length=int(L),
                metric=m,
                accuracy=float(a.mean()),
                std=float(a.std(ddof=1)) if a.size > 1 else 0.0,
                sample_size=n,
                failures=int(fails[(L, m)]),
                k=k,
                repeats=repeats,
                lam=cfg.lam,
                epsilon=cfg.epsilon,
            ))
    return out


# --------------------------------------------------------------------------
# top-k search

def _snapshot_distance(a, b, metric, cfg):
    try:
        rep = rw2_sinkhorn(image_to_distribution(a), image_to_distribution(b), cfg)
    except (KernelUnderflow, NumericalError):
        return np.inf
    return rep.rw_distance if metric == "RW2" else rep.w_distance


def topk_search(corpus, query, k=5, metric="RW2", cfg=SinkhornConfig(lam=0.1, epsilon=0.01), query_id="query"):
    """Rank ``corpus`` (a mapping id -> item) by distance to ``query``.

    Items are single :class:`GridImage` snapshots or equal-length sequences
    of them; a sequence distance is the sum of frame-wise distances at
    matching time indices. Both W2 and RW2 come from one RW_2 Sinkhorn solve
    per frame pair. Ties are broken by id.
    """
    if metric not in ("W2", "RW2"):
        raise ValueError(f"metric must be W2 or RW2, got {metric!r}")
    if not corpus:
        raise EmptyCorpus("corpus is empty")
    if not 1 <= k <= len(corpus):
        raise ValueError(f"k must be in [1, {len(corpus)}]")

    is_seq = not isinstance(query, GridImage)
    scored = []
    for cid, item in corpus.items():
        if is_seq:
            if isinstance(item, GridImage) or len(item) != len(query):
                raise ValueError(f"item {cid!r} is not a sequence of length {len(query)}")
            d = sum(_snapshot_distance(q, f, metric, cfg) for q, f in zip(query, item))
        else:
            d = _snapshot_distance(query, item, metric, cfg)
        scored.append((float(d), str(cid)))
    scored.sort()
    top = scored[:k]
    return SearchResult(str(query_id), metric, [c for _, c in top], [d for d, _ in top])


# --------------------------------------------------------------------------
# output

def write_csv(rows, dest):
    """Write result dataclasses as CSV; ``dest`` is a path or a text stream.
    The header is the dataclass field names."""
    rows = list(rows)
    if not rows:
        raise ValueError("nothing to write")
    names = [f.name for f in dataclasses.fields(rows[0])]
    if hasattr(dest, "write"):
        _write_rows(dest, names, rows)
    else:
        with Path(dest).open("w", newline="", encoding="utf-8") as fh:
            _write_rows(fh, names, rows)


def _write_rows(fh, names, rows):
    writer = csv.DictWriter(fh, fieldnames=names, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow(dataclasses.asdict(r))


def write_json(doc, path):
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
