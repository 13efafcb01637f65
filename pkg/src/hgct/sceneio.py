"""Scene file format (HGCT-CORR v1) and dataset directory layout.

A scene file is plain text:

    HGCT-CORR v1 n=<N> feat_dim=<D> has_gt=<0|1> has_labels=<0|1>
    [12 ground-truth numbers: row-major 3x3 rotation, then translation]
    N data rows: xs ys zs xt yt zt [label] [f1 .. fD]

Floats are written with shortest round-trip precision so a write/read cycle
reproduces the arrays bit for bit. A dataset directory holds numbered scene
files plus a JSON manifest.
"""

import json
import os
from dataclasses import asdict, replace
from typing import List

import numpy as np

from .errors import ConfigError
from .geom import CorrSet, RigidTransform
from .train import SynthConfig, gen_scene

FORMAT_TAG = "HGCT-CORR v1"
MANIFEST_NAME = "manifest.json"


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def scene_to_text(corrs: CorrSet) -> str:
    n = len(corrs)
    feat_dim = 0 if corrs.feat is None else corrs.feat.shape[1]
    has_gt = int(corrs.gt is not None)
    has_labels = int(corrs.labels is not None)
    lines = [f"{FORMAT_TAG} n={n} feat_dim={feat_dim} has_gt={has_gt} "
             f"has_labels={has_labels}"]
    if corrs.gt is not None:
        gt_vals = list(corrs.gt.R.reshape(-1)) + list(corrs.gt.t)
        lines.append(" ".join(_fmt(v) for v in gt_vals))
    for i in range(n):
        parts = [_fmt(v) for v in corrs.src[i]] + [_fmt(v) for v in corrs.tgt[i]]
        if corrs.labels is not None:
            parts.append(str(int(corrs.labels[i])))
        if corrs.feat is not None:
            parts.extend(_fmt(v) for v in corrs.feat[i])
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def scene_from_text(text: str, origin: str = "<string>") -> CorrSet:
    lines = text.splitlines()
    if not lines or not lines[0].startswith(FORMAT_TAG):
        raise ConfigError(f"{origin}: not a {FORMAT_TAG} file")
    header = lines[0][len(FORMAT_TAG):].split()
    try:
        kv = dict(item.split("=", 1) for item in header)
        n = int(kv["n"])
        feat_dim = int(kv["feat_dim"])
        has_gt = bool(int(kv["has_gt"]))
        has_labels = bool(int(kv["has_labels"]))
    except (KeyError, ValueError) as err:
        raise ConfigError(f"{origin}: malformed header: {lines[0]!r}") from err

    row = 1
    gt = None
    if has_gt:
        if row >= len(lines):
            raise ConfigError(f"{origin}: missing ground-truth line")
        vals = lines[row].split()
        if len(vals) != 12:
            raise ConfigError(f"{origin}: line {row + 1}: expected 12 gt numbers")
        vals = [float(v) for v in vals]
        gt = RigidTransform(np.array(vals[:9]).reshape(3, 3), np.array(vals[9:]))
        row += 1

    expected = 6 + (1 if has_labels else 0) + feat_dim
    src = np.empty((n, 3))
    tgt = np.empty((n, 3))
    labels = np.empty(n, dtype=bool) if has_labels else None
    feat = np.empty((n, feat_dim)) if feat_dim else None
    for i in range(n):
        line_no = row + i
        if line_no >= len(lines):
            raise ConfigError(f"{origin}: expected {n} data rows, file ends at {i}")
        parts = lines[line_no].split()
        if len(parts) != expected:
            raise ConfigError(f"{origin}: line {line_no + 1}: expected {expected} "
                              f"fields, got {len(parts)}")
        vals = [float(v) for v in parts[:6]]
        src[i] = vals[:3]
        tgt[i] = vals[3:]
        col = 6
        if has_labels:
            labels[i] = bool(int(parts[col]))
            col += 1
        if feat_dim:
            feat[i] = [float(v) for v in parts[col:]]
    return CorrSet(src, tgt, feat=feat, gt=gt, labels=labels)


def write_scene(corrs: CorrSet, path) -> None:
    with open(path, "w", newline="\n") as f:
        f.write(scene_to_text(corrs))


def read_scene(path) -> CorrSet:
    with open(path, "r") as f:
        return scene_from_text(f.read(), origin=str(path))


def scene_filename(index: int) -> str:
    return f"scene_{index:04d}.txt"


def write_dataset(out_dir, synth: SynthConfig, n_scenes: int, seed: int) -> List[str]:
    """Write n_scenes deterministic scene files plus manifest.json."""
    os.makedirs(out_dir, exist_ok=True)
    names = []
    for i in range(n_scenes):
        cfg = replace(synth, seed=seed + i)
        name = scene_filename(i)
        write_scene(gen_scene(cfg), os.path.join(out_dir, name))
        names.append(name)
    manifest = {
        "format": FORMAT_TAG,
        "n_scenes": n_scenes,
        "seed": seed,
        "files": names,
        "synth": asdict(synth),
    }
    with open(os.path.join(out_dir, MANIFEST_NAME), "w", newline="\n") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return names


def read_dataset(dir_path) -> List[CorrSet]:
    """Load every scene listed in the manifest (or scene_*.txt when absent)."""
    manifest_path = os.path.join(dir_path, MANIFEST_NAME)
    if os.path.exists(manifest_path):
        with open(manifest_path) as f:
            manifest = json.load(f)
        names = manifest.get("files", [])
    else:
        names = sorted(name for name in os.listdir(dir_path)
                       if name.startswith("scene_") and name.endswith(".txt"))
    return [read_scene(os.path.join(dir_path, name)) for name in names]
