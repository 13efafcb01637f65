"""Registration and outlier-removal metrics, aggregation, and threshold sweeps."""

from dataclasses import dataclass, replace as dc_replace
from typing import Dict, List, Optional, Sequence

import numpy as np

from .compat import CompatConfig
from .errors import HgctError
from .geom import CorrSet, RigidTransform, pose_errors, residuals
from .hgnn import HgnnParams
from .pipeline import PipelineConfig, register


@dataclass(frozen=True)
class MetricThresholds:
    re_deg: float = 5.0
    te_m: float = 0.05
    theta_inlier: float = 0.1

    def __post_init__(self):
        if min(self.re_deg, self.te_m, self.theta_inlier) <= 0:
            raise ValueError("thresholds must be positive")


@dataclass
class PairResult:
    re_deg: float
    te_m: float
    success: bool
    ip: float
    ir: float
    f1: float
    runtime_s: float
    hyperedge_precision_before: Optional[float] = None
    hyperedge_precision_after: Optional[float] = None


def inlier_metrics(t_est: RigidTransform, corrs: CorrSet, gt: RigidTransform,
                   theta_inlier: float):
    """Inlier precision/recall/F1 of the residual-based inlier prediction.

    Predicted inliers: residual under t_est below theta_inlier; true inliers:
    residual under gt below theta_inlier. Empty sets yield zeros.
    """
    pred = residuals(t_est, corrs.src, corrs.tgt) < theta_inlier
    true = residuals(gt, corrs.src, corrs.tgt) < theta_inlier
    hit = int(np.sum(pred & true))
    ip = hit / int(np.sum(pred)) if np.any(pred) else 0.0
    ir = hit / int(np.sum(true)) if np.any(true) else 0.0
    f1 = 2.0 * ip * ir / (ip + ir) if (ip + ir) > 0 else 0.0
    return ip, ir, f1


def evaluate_pair(t_est: RigidTransform, corrs: CorrSet, th: MetricThresholds,
                  runtime_s: float = 0.0, hp_before: Optional[float] = None,
                  hp_after: Optional[float] = None) -> PairResult:
    if corrs.gt is None:
        raise ValueError("pair evaluation needs a ground-truth transform")
    re, te = pose_errors(t_est, corrs.gt)
    ip, ir, f1 = inlier_metrics(t_est, corrs, corrs.gt, th.theta_inlier)
    return PairResult(re_deg=re, te_m=te,
                      success=bool(re <= th.re_deg and te <= th.te_m),
                      ip=ip, ir=ir, f1=f1, runtime_s=runtime_s,
                      hyperedge_precision_before=hp_before,
                      hyperedge_precision_after=hp_after)


def aggregate(results: Sequence[PairResult], th: MetricThresholds) -> Dict:
    """Summary over pairs. RE/TE are averaged over successful pairs only and
    reported as None when nothing succeeded; IP/IR/F1 and runtime over all."""
    if not results:
        raise ValueError("no results to aggregate")
    n = len(results)
    succ = [r for r in results if r.success]
    summary = {
        "n_pairs": n,
        "rr": len(succ) / n,
        "mean_re_deg": float(np.mean([r.re_deg for r in succ])) if succ else None,
        "mean_te_m": float(np.mean([r.te_m for r in succ])) if succ else None,
        "mean_ip": float(np.mean([r.ip for r in results])),
        "mean_ir": float(np.mean([r.ir for r in results])),
        "mean_f1": float(np.mean([r.f1 for r in results])),
        "mean_runtime_s": float(np.mean([r.runtime_s for r in results])),
        "thresholds": {"re_deg": th.re_deg, "te_m": th.te_m,
                       "theta_inlier": th.theta_inlier},
    }
    hp_b = [r.hyperedge_precision_before for r in results
            if r.hyperedge_precision_before is not None]
    hp_a = [r.hyperedge_precision_after for r in results
            if r.hyperedge_precision_after is not None]
    if hp_b:
        summary["mean_hyperedge_precision_before"] = float(np.mean(hp_b))
    if hp_a:
        summary["mean_hyperedge_precision_after"] = float(np.mean(hp_a))
    return summary


def run_suite(corrs_set: Sequence[CorrSet], params: HgnnParams,
              cc: CompatConfig, pc: PipelineConfig,
              th: MetricThresholds) -> List[PairResult]:
    """Register every pair; failed pipelines count as failures with inf errors."""
    import time

    results = []
    for corrs in corrs_set:
        t0 = time.perf_counter()
        try:
            t_est, diag = register(corrs, params, cc, pc)
        except HgctError:
            results.append(PairResult(re_deg=float("inf"), te_m=float("inf"),
                                      success=False, ip=0.0, ir=0.0, f1=0.0,
                                      runtime_s=time.perf_counter() - t0))
            continue
        elapsed = time.perf_counter() - t0
        results.append(evaluate_pair(
            t_est, corrs, th, runtime_s=elapsed,
            hp_before=diag.get("hyperedge_precision_before"),
            hp_after=diag.get("hyperedge_precision_after")))
    return results


def sweep_theta(corrs_set: Sequence[CorrSet], params: HgnnParams,
                sweep: Sequence[float], which: str,
                cc: CompatConfig = CompatConfig(),
                pc: PipelineConfig = PipelineConfig(),
                th: MetricThresholds = MetricThresholds()) -> List[Dict]:
    """Registration recall across a threshold sweep, as deltas against the
    default row (dynamic theta_cmp, or the configured theta_inlier)."""
    if which not in ("cmp", "inlier"):
        raise ValueError("which must be 'cmp' or 'inlier'")
    if not sweep:
        raise ValueError("sweep must be non-empty")

    base = aggregate(run_suite(corrs_set, params, cc, pc, th), th)
    default_label = "dynamic" if which == "cmp" else pc.theta_inlier
    rows = [{"which": which, "theta": default_label, "rr": base["rr"],
             "delta_pp": 0.0}]
    for theta in sweep:
        if which == "cmp":
            cc_i, pc_i = dc_replace(cc, theta_override=float(theta)), pc
        else:
            cc_i, pc_i = cc, dc_replace(pc, theta_inlier=float(theta))
        agg = aggregate(run_suite(corrs_set, params, cc_i, pc_i, th), th)
        rows.append({"which": which, "theta": float(theta), "rr": agg["rr"],
                     "delta_pp": 100.0 * (agg["rr"] - base["rr"])})
    return rows
