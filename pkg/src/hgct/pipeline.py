"""Seed selection, guided hypothesis generation, verification, and registration.

Seeds come from GF-NMS: a small quota of spatial non-maximum-suppression picks
on the confidence scores, topped up by a Laplacian graph-filter ranking over
the mutual-consistency adjacency of the learned hypergraph. Each seed yields
an initial transform from a feature-space KNN subset; refinement re-solves
minimal sets slid along the residual-sorted members of the seed's hyperedge.
Hypotheses are scored by a truncated mean-absolute-error fitness and the
argmax wins.
"""

import time
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import autodiff as av
from . import kernels
from .compat import CompatConfig, build_compat_graph, round_half_up
from .errors import DegenerateInput, NoHypothesis
from .geom import CorrSet, RigidTransform, kabsch_svd, pose_errors, residuals
from .hgnn import HgnnParams, forward
from .hypergraph import Hypergraph, hyperedge_precision, init_hypergraph


@dataclass(frozen=True)
class PipelineConfig:
    ns_frac: float = 0.2        # seed fraction of N
    ninit_frac: float = 0.1     # initial hypotheses as a fraction of N_s
    knn_k: int = 20             # feature-space subset size per seed
    minimal_size: int = 6       # points per minimal set
    max_iters: int = 30         # extra minimal-set windows per hyperedge
    step: int = 3               # window stride along the sorted residuals
    theta_inlier: float = 0.1   # meters, truncation of the fitness kernel
    nms_radius: float = 0.1     # meters, spatial suppression radius
    n1_frac: float = 0.1        # NMS share of the seed budget

    def __post_init__(self):
        if self.minimal_size < 3:
            raise ValueError("minimal_size must be >= 3")
        if self.step < 1:
            raise ValueError("step must be >= 1")
        for name in ("ns_frac", "ninit_frac", "n1_frac"):
            v = getattr(self, name)
            if not (0.0 < v <= 1.0):
                raise ValueError(f"{name} must be in (0, 1]")


class HypothesisOrigin(Enum):
    INITIAL = "initial"
    REFINED = "refined"


@dataclass(frozen=True)
class Hypothesis:
    transform: RigidTransform
    score: float
    origin: HypothesisOrigin
    seed_index: int


def evaluate_hypothesis(transform: RigidTransform, corrs: CorrSet,
                        theta_inlier: float) -> float:
    """Truncated-residual fitness sum_i max(0, 1 - r_i/theta); higher is better."""
    if theta_inlier <= 0:
        raise ValueError("theta_inlier must be positive")
    return float(kernels.mae_scores(transform.R[None], transform.t[None],
                                    corrs.src, corrs.tgt, theta_inlier)[0])


def _score_batch(transforms: Sequence[RigidTransform], corrs: CorrSet,
                 theta_inlier: float) -> np.ndarray:
    rots = np.stack([t.R for t in transforms])
    trs = np.stack([t.t for t in transforms])
    return kernels.mae_scores(rots, trs, corrs.src, corrs.tgt, theta_inlier)


def gf_adjacency(hg: Hypergraph) -> np.ndarray:
    """Mutual-consistency adjacency: A(i,j) = 1 iff H(i,j) = H(j,i) = 1."""
    h = hg.h
    return ((h > 0) & (h.T > 0)).astype(np.float64)


def gf_score(adj: np.ndarray) -> np.ndarray:
    """Graph-filter score: min-max normalized |(diag(d) - A) d|, d = row sums.

    The magnitude of the Laplacian response to the degree signal separates
    structurally embedded vertices from weakly attached ones; the sign does
    not (a vertex inside a strong block can sit on either side of zero), so
    the response is rectified before normalization. All zeros when the
    response is constant (e.g. regular or empty graphs).
    """
    adj = np.asarray(adj, dtype=np.float64)
    d = adj.sum(axis=1)
    raw = np.abs(d * d - adj @ d)
    lo, hi = raw.min(), raw.max()
    if hi == lo:
        return np.zeros_like(raw)
    return (raw - lo) / (hi - lo)


def nms_local_maxima(s_hat: np.ndarray, points: np.ndarray, radius: float,
                     max_picks: int) -> List[int]:
    """Greedy spatial NMS: highest score first (ties to the lower index),
    suppressing everything within `radius` of a pick. Returns up to max_picks."""
    n = len(s_hat)
    order = np.lexsort((np.arange(n), -np.asarray(s_hat, dtype=np.float64)))
    keep = kernels.nms_select(points, order, radius)
    picked = [int(i) for i in order if keep[i]]
    return picked[:max_picks]


def standard_nms_seeds(s_hat: np.ndarray, points: np.ndarray, radius: float,
                       n_seeds: int) -> List[int]:
    """Confidence-only baseline: NMS local maxima ranked by score, remaining
    slots filled by ascending index (suppressed scores count as zero)."""
    n = len(s_hat)
    n_seeds = min(n_seeds, n)
    picks = nms_local_maxima(s_hat, points, radius, n_seeds)
    if len(picks) < n_seeds:
        chosen = set(picks)
        for i in range(n):
            if i not in chosen:
                picks.append(i)
                if len(picks) == n_seeds:
                    break
    return picks


def gf_nms(hg: Hypergraph, s_hat: np.ndarray, corrs: CorrSet,
           cfg: PipelineConfig) -> List[int]:
    """Seed selection: N1 spatial-NMS confidence maxima, then the graph-filter
    ranking tops the set up to N_s. Returns min(N_s, N) distinct indices."""
    n = len(corrs)
    if n < cfg.minimal_size:
        raise ValueError("fewer correspondences than the minimal set size")
    n_s = min(n, max(cfg.minimal_size, round_half_up(cfg.ns_frac * n)))
    n_1 = max(1, round_half_up(cfg.n1_frac * n_s))

    seeds = nms_local_maxima(s_hat, corrs.src, cfg.nms_radius, n_1)
    chosen = set(seeds)

    scores = gf_score(gf_adjacency(hg))
    ranking = np.lexsort((np.arange(n), -scores))
    for idx in ranking:
        if len(seeds) >= n_s:
            break
        i = int(idx)
        if i not in chosen:
            seeds.append(i)
            chosen.add(i)
    return seeds[:n_s]


def initial_hypotheses(corrs: CorrSet, seeds: Sequence[int], x_final: np.ndarray,
                       cfg: PipelineConfig,
                       diagnostics: Optional[Dict] = None) -> List[Hypothesis]:
    """One candidate per seed from its feature-space KNN subset; the
    best-scoring N_init are kept. Degenerate subsets are skipped."""
    n = len(corrs)
    k = min(max(cfg.knn_k, cfg.minimal_size), n)
    x = np.asarray(x_final, dtype=np.float64)

    candidates: List[Hypothesis] = []
    skipped = 0
    for seed in seeds:
        d = x - x[seed]
        dist = np.sum(d * d, axis=1)
        order = np.lexsort((np.arange(n), dist))
        subset = order[:k]
        try:
            transform = kabsch_svd(corrs.src[subset], corrs.tgt[subset])
        except DegenerateInput:
            skipped += 1
            continue
        candidates.append(Hypothesis(transform=transform, score=0.0,
                                     origin=HypothesisOrigin.INITIAL,
                                     seed_index=int(seed)))
    if diagnostics is not None:
        diagnostics["n_seed_candidates"] = len(candidates)
        diagnostics["n_degenerate_seeds"] = skipped
    if not candidates:
        return []

    scores = _score_batch([h.transform for h in candidates], corrs, cfg.theta_inlier)
    scored = [Hypothesis(h.transform, float(s), h.origin, h.seed_index)
              for h, s in zip(candidates, scores)]
    n_s = max(cfg.minimal_size, round_half_up(cfg.ns_frac * n))
    n_init = max(1, round_half_up(cfg.ninit_frac * n_s))
    order = np.lexsort((np.arange(len(scored)), -scores))
    return [scored[i] for i in order[:n_init]]


def refine_hypotheses(corrs: CorrSet, hg: Hypergraph,
                      initial: Sequence[Hypothesis], cfg: PipelineConfig,
                      diagnostics: Optional[Dict] = None) -> List[Hypothesis]:
    """Slide minimal sets along each seed hyperedge's residual-sorted members.

    Window k covers sorted offsets [step*k, step*k + minimal_size) while the
    window fits and k <= max_iters. Returns the initial hypotheses plus every
    non-degenerate window solution.
    """
    if not initial:
        raise ValueError("refine_hypotheses needs at least one initial hypothesis")
    out: List[Hypothesis] = list(initial)
    refined: List[Hypothesis] = []
    skipped = 0
    for hyp in initial:
        seed = hyp.seed_index
        members = np.flatnonzero(hg.h[:, seed] > 0)
        if members.size < cfg.minimal_size:
            continue
        r = residuals(hyp.transform, corrs.src[members], corrs.tgt[members])
        members = members[np.lexsort((members, r))]
        k = 0
        while (cfg.step * k + cfg.minimal_size <= members.size
               and k <= cfg.max_iters):
            window = members[cfg.step * k: cfg.step * k + cfg.minimal_size]
            try:
                transform = kabsch_svd(corrs.src[window], corrs.tgt[window])
                refined.append(Hypothesis(transform=transform, score=0.0,
                                          origin=HypothesisOrigin.REFINED,
                                          seed_index=seed))
            except DegenerateInput:
                skipped += 1
            k += 1
    if refined:
        scores = _score_batch([h.transform for h in refined], corrs, cfg.theta_inlier)
        refined = [Hypothesis(h.transform, float(s), h.origin, h.seed_index)
                   for h, s in zip(refined, scores)]
    if diagnostics is not None:
        diagnostics["n_refined"] = len(refined)
        diagnostics["n_degenerate_windows"] = skipped
    return out + refined


def register(corrs: CorrSet, params: HgnnParams, cc: CompatConfig,
             pc: PipelineConfig) -> Tuple[RigidTransform, Dict]:
    """Full pipeline: compatibility graph, network pass, GF-NMS seeds, guided
    hypothesis generation, truncated-MAE argmax. Returns the best transform
    and a JSON-serializable diagnostics dict."""
    n = len(corrs)
    if n < pc.minimal_size:
        raise ValueError("need at least minimal_size correspondences")
    diagnostics: Dict = {}
    timings: Dict[str, float] = {}

    t0 = time.perf_counter()
    g = build_compat_graph(corrs, cc)
    hg0 = init_hypergraph(g)
    timings["graph_ms"] = 1000.0 * (time.perf_counter() - t0)

    t0 = time.perf_counter()
    with av.no_grad():
        trace = forward(corrs, hg0, g.w_h0, params)
    hg_final = trace.final_hypergraph()
    timings["network_ms"] = 1000.0 * (time.perf_counter() - t0)

    t0 = time.perf_counter()
    seeds = gf_nms(hg_final, trace.s_hat, corrs, pc)
    timings["seeds_ms"] = 1000.0 * (time.perf_counter() - t0)

    t0 = time.perf_counter()
    initial = initial_hypotheses(corrs, seeds, trace.x_final, pc, diagnostics)
    if not initial:
        raise NoHypothesis("every seed subset was degenerate")
    hypotheses = refine_hypotheses(corrs, hg_final, initial, pc, diagnostics)
    timings["hypotheses_ms"] = 1000.0 * (time.perf_counter() - t0)

    scores = np.array([h.score for h in hypotheses])
    best = hypotheses[int(np.lexsort((np.arange(len(scores)), -scores))[0])]

    diagnostics.update({
        "n": n,
        "theta_cmp": g.theta_cmp,
        "seeds": [int(s) for s in seeds],
        "n_seeds": len(seeds),
        "n_initial": len(initial),
        "n_hypotheses": len(hypotheses),
        "best_score": best.score,
        "best_origin": best.origin.value,
        "best_seed": best.seed_index,
        "timings_ms": timings,
    })
    labels = corrs.labels
    if labels is not None:
        diagnostics["hyperedge_precision_before"] = hyperedge_precision(hg0, labels)
        diagnostics["hyperedge_precision_after"] = hyperedge_precision(hg_final, labels)
    if corrs.gt is not None:
        re, te = pose_errors(best.transform, corrs.gt)
        diagnostics["re_deg"] = re
        diagnostics["te_m"] = te
    return best.transform, diagnostics


def ransac_baseline(corrs: CorrSet, budget: int, theta_inlier: float,
                    seed: int) -> RigidTransform:
    """Plain RANSAC: `budget` random 3-point subsets scored by the same
    truncated-MAE fitness; deterministic for a given seed."""
    n = len(corrs)
    if n < 3:
        raise ValueError("need at least 3 correspondences")
    rng = np.random.default_rng(seed)
    transforms = []
    for _ in range(budget):
        idx = rng.choice(n, size=3, replace=False)
        try:
            transforms.append(kabsch_svd(corrs.src[idx], corrs.tgt[idx]))
        except DegenerateInput:
            continue
    if not transforms:
        raise NoHypothesis("all sampled subsets were degenerate")
    scores = _score_batch(transforms, corrs, theta_inlier)
    best = int(np.lexsort((np.arange(len(scores)), -scores))[0])
    return transforms[best]


def hypothesis_correctness(hypos: Sequence[Hypothesis], gt: RigidTransform,
                           re_thresh: float, te_thresh: float) -> float:
    """Fraction of hypotheses within both pose-error thresholds of gt."""
    if not hypos:
        raise ValueError("no hypotheses")
    good = 0
    for h in hypos:
        re, te = pose_errors(h.transform, gt)
        if re <= re_thresh and te <= te_thresh:
            good += 1
    return good / len(hypos)
