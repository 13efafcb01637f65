"""Command-line front end.

Commands: gen (synthetic dataset), train (checkpoint from a dataset),
register (one scene), bench (metrics over a dataset), gradcheck
(finite-difference verification), report (merge bench summaries).

Common flags: --config <path>, --seed <int>, --out <path>. The environment
variable HGCT_THREADS caps the bench worker pool. Exit code 0 on success;
failures print one `error: <message>` line on stderr and exit nonzero.
"""

import argparse
import csv
import json
import os
import sys
import time

from .config import RunConfig, default_config_text, load_config
from .errors import HgctError
from .hgnn import init_params, load_checkpoint, save_checkpoint
from .metrics import aggregate, evaluate_pair
from .pipeline import register
from .sceneio import read_dataset, read_scene, write_dataset
from .train import train


def _load_run_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def _params_for(cfg: RunConfig, checkpoint=None):
    path = checkpoint or cfg.checkpoint
    if path:
        return load_checkpoint(path)
    return init_params(channels=cfg.channels, seed=cfg.seed)


def cmd_gen(args) -> int:
    cfg = _load_run_config(args)
    if not args.out:
        raise HgctError("gen requires --out <directory>")
    names = write_dataset(args.out, cfg.synth_config(), cfg.n_scenes, cfg.seed)
    print(f"wrote {len(names)} scenes to {args.out}")
    return 0


def cmd_train(args) -> int:
    cfg = _load_run_config(args)
    scenes = read_dataset(args.dataset)
    if not scenes:
        raise HgctError("no scenes found")
    out = args.out or "model.ckpt"
    log_path = args.log or out + ".train.csv"
    params = train(scenes, cfg.train_config(),
                   init_params(channels=cfg.channels, seed=cfg.seed),
                   log_csv=log_path)
    save_checkpoint(params, out)
    print(f"wrote checkpoint {out} ({params.n_params()} parameters); "
          f"log: {log_path}")
    return 0


def cmd_register(args) -> int:
    cfg = _load_run_config(args)
    corrs = read_scene(args.scene)
    params = _params_for(cfg, args.checkpoint)
    transform, diag = register(corrs, params, cfg.compat_config(),
                               cfg.pipeline_config())
    for row in transform.matrix4():
        print(" ".join(format(v, " .9f") for v in row))
    if corrs.gt is not None:
        print(f"RE_deg={diag['re_deg']:.6f} TE_m={diag['te_m']:.6f}")
    if args.out:
        with open(args.out, "w") as f:
            json.dump(diag, f, indent=2, sort_keys=True)
            f.write("\n")
        print(f"diagnostics: {args.out}")
    return 0


def _bench_one(task):
    scene_path, cfg_kwargs, checkpoint = task
    # worker-side rebuild keeps the task picklable
    cfg = RunConfig(**cfg_kwargs)
    corrs = read_scene(scene_path)
    params = _params_for(cfg, checkpoint)
    t0 = time.perf_counter()
    try:
        transform, diag = register(corrs, params, cfg.compat_config(),
                                   cfg.pipeline_config())
    except HgctError as err:
        return {"scene": os.path.basename(scene_path), "error": str(err)}
    elapsed = time.perf_counter() - t0
    pr = evaluate_pair(transform, corrs, cfg.thresholds(), runtime_s=elapsed,
                       hp_before=diag.get("hyperedge_precision_before"),
                       hp_after=diag.get("hyperedge_precision_after"))
    return {"scene": os.path.basename(scene_path), "result": pr.__dict__}


def _worker_count(cfg: RunConfig) -> int:
    cap = os.environ.get("HGCT_THREADS")
    workers = cfg.threads
    if cap is not None:
        try:
            workers = min(workers, max(1, int(cap)))
        except ValueError:
            raise HgctError(f"HGCT_THREADS must be an integer, got {cap!r}")
    return max(1, workers)


def cmd_bench(args) -> int:
    from .metrics import PairResult

    cfg = _load_run_config(args)
    if not os.path.isdir(args.dataset):
        raise HgctError("no scenes found")
    scene_paths = [os.path.join(args.dataset, n)
                   for n in sorted(os.listdir(args.dataset))
                   if n.startswith("scene_") and n.endswith(".txt")]
    if not scene_paths:
        raise HgctError("no scenes found")

    cfg_kwargs = cfg.__dict__.copy()
    tasks = [(p, cfg_kwargs, args.checkpoint or cfg.checkpoint)
             for p in scene_paths]
    workers = _worker_count(cfg)
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_bench_one, tasks))
    else:
        rows = [_bench_one(t) for t in tasks]

    results, failures = [], []
    for row in rows:
        if "error" in row:
            failures.append(row)
        else:
            results.append(PairResult(**row["result"]))
    if not results:
        raise HgctError("every pair failed: " + failures[0]["error"])
    summary = aggregate(results, cfg.thresholds())
    summary["n_failures"] = len(failures)

    out = args.out or "bench"
    os.makedirs(out, exist_ok=True)
    csv_path = os.path.join(out, "results.csv")
    with open(csv_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["scene", "re_deg", "te_m", "success", "ip", "ir", "f1",
                         "runtime_s"])
        for row in rows:
            if "error" in row:
                writer.writerow([row["scene"], "", "", "error", "", "", "", ""])
            else:
                r = row["result"]
                writer.writerow([row["scene"], f"{r['re_deg']:.6f}",
                                 f"{r['te_m']:.6f}", int(r["success"]),
                                 f"{r['ip']:.4f}", f"{r['ir']:.4f}",
                                 f"{r['f1']:.4f}", f"{r['runtime_s']:.4f}"])
    json_path = os.path.join(out, "summary.json")
    with open(json_path, "w") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
    print(f"RR={summary['rr']:.4f} over {summary['n_pairs']} pairs; "
          f"wrote {csv_path} and {json_path}")
    return 0


def cmd_gradcheck(args) -> int:
    from .train import gradient_check

    cfg = _load_run_config(args)
    report = gradient_check(n=cfg.gradcheck_n, channels=cfg.gradcheck_channels,
                            step=cfg.gradcheck_step)
    ok = report["max_rel_err"] < cfg.gradcheck_tol
    status = "PASS" if ok else "FAIL"
    print(f"{status} max_rel_err={report['max_rel_err']:.3e} "
          f"worst={report['worst_param']} n_params={report['n_params']}")
    return 0 if ok else 1


def cmd_report(args) -> int:
    rows = []
    for path in args.results:
        with open(path) as f:
            summary = json.load(f)
        rows.append((os.path.basename(os.path.dirname(path)) or path, summary))
    header = ["run", "n_pairs", "rr", "mean_re_deg", "mean_te_m", "mean_f1",
              "mean_runtime_s"]
    print(",".join(header))
    lines = [",".join(header)]
    for name, s in rows:
        def cell(key):
            v = s.get(key)
            return "" if v is None else (f"{v:.4f}" if isinstance(v, float) else str(v))
        line = ",".join([name] + [cell(k) for k in header[1:]])
        print(line)
        lines.append(line)
    if args.out:
        with open(args.out, "w", newline="\n") as f:
            f.write("\n".join(lines) + "\n")
    return 0


def cmd_defaults(args) -> int:
    print(default_config_text(), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hgct",
        description="Rigid registration from 3D correspondences via learned "
                    "dynamic hypergraph constraints.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument("--seed", type=int, default=None, help="override seed")
        p.add_argument("--out", default=None, help="output path")

    p = sub.add_parser("gen", help="generate a synthetic dataset directory")
    common(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train a checkpoint on a dataset")
    common(p)
    p.add_argument("dataset", help="dataset directory from `hgct gen`")
    p.add_argument("--log", default=None, help="training log CSV path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("register", help="register one scene file")
    common(p)
    p.add_argument("scene", help="HGCT-CORR scene file")
    p.add_argument("--checkpoint", default=None, help="trained checkpoint")
    p.set_defaults(func=cmd_register)

    p = sub.add_parser("bench", help="run registration metrics over a dataset")
    common(p)
    p.add_argument("dataset", help="dataset directory")
    p.add_argument("--checkpoint", default=None, help="trained checkpoint")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("gradcheck", help="finite-difference gradient check")
    common(p)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("report", help="merge bench summary JSON files")
    common(p)
    p.add_argument("results", nargs="+", help="summary.json files")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("defaults", help="print the default configuration")
    common(p)
    p.set_defaults(func=cmd_defaults)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except HgctError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except FileNotFoundError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
