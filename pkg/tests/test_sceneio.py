import json

import numpy as np
import pytest

from hgct.errors import ConfigError
from hgct.sceneio import (read_dataset, read_scene, scene_from_text,
                          scene_to_text, write_dataset, write_scene)
from hgct.train import SynthConfig, gen_scene


class TestRoundTrip:
    def test_full_scene_bit_exact(self, tmp_path):
        sc = gen_scene(SynthConfig(n_corrs=25, inlier_ratio=0.4, seed=8))
        path = tmp_path / "scene.txt"
        write_scene(sc, path)
        back = read_scene(path)
        assert np.array_equal(back.src, sc.src)
        assert np.array_equal(back.tgt, sc.tgt)
        assert np.array_equal(back.labels, sc.labels)
        assert np.array_equal(back.gt.R, sc.gt.R)
        assert np.array_equal(back.gt.t, sc.gt.t)

    def test_minimal_scene_without_gt_or_labels(self):
        rng = np.random.default_rng(0)
        from hgct.geom import CorrSet
        sc = CorrSet(rng.normal(size=(5, 3)), rng.normal(size=(5, 3)))
        back = scene_from_text(scene_to_text(sc))
        assert back.gt is None and back.labels is None
        assert np.array_equal(back.src, sc.src)

    def test_features_roundtrip(self):
        rng = np.random.default_rng(1)
        from hgct.geom import CorrSet
        sc = CorrSet(rng.normal(size=(4, 3)), rng.normal(size=(4, 3)),
                     feat=rng.normal(size=(4, 7)))
        back = scene_from_text(scene_to_text(sc))
        assert np.array_equal(back.feat, sc.feat)

    def test_header_format(self):
        sc = gen_scene(SynthConfig(n_corrs=10, seed=0))
        first = scene_to_text(sc).splitlines()[0]
        assert first == "HGCT-CORR v1 n=10 feat_dim=0 has_gt=1 has_labels=1"


class TestErrors:
    def test_bad_magic(self):
        with pytest.raises(ConfigError):
            scene_from_text("WRONG v9 n=1\n0 0 0 0 0 0\n")

    def test_truncated_rows(self):
        sc = gen_scene(SynthConfig(n_corrs=10, seed=0))
        text = "\n".join(scene_to_text(sc).splitlines()[:5])
        with pytest.raises(ConfigError):
            scene_from_text(text)

    def test_wrong_field_count(self):
        text = "HGCT-CORR v1 n=1 feat_dim=0 has_gt=0 has_labels=0\n1 2 3 4 5\n"
        with pytest.raises(ConfigError):
            scene_from_text(text)


class TestDataset:
    def test_write_read_manifest(self, tmp_path):
        out = tmp_path / "data"
        names = write_dataset(out, SynthConfig(n_corrs=15), n_scenes=3, seed=4)
        assert names == ["scene_0000.txt", "scene_0001.txt", "scene_0002.txt"]
        with open(out / "manifest.json") as f:
            manifest = json.load(f)
        assert manifest["n_scenes"] == 3
        assert manifest["files"] == names
        scenes = read_dataset(out)
        assert len(scenes) == 3 and len(scenes[0]) == 15

    def test_manifest_count_matches_listing(self, tmp_path):
        out = tmp_path / "data"
        write_dataset(out, SynthConfig(n_corrs=12), n_scenes=4, seed=0)
        listed = [p.name for p in sorted(out.glob("scene_*.txt"))]
        with open(out / "manifest.json") as f:
            manifest = json.load(f)
        assert manifest["files"] == listed

    def test_deterministic_bytes(self, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        write_dataset(a, SynthConfig(n_corrs=15), n_scenes=2, seed=4)
        write_dataset(b, SynthConfig(n_corrs=15), n_scenes=2, seed=4)
        for name in ("scene_0000.txt", "manifest.json"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_scenes_differ_across_indices(self, tmp_path):
        out = tmp_path / "data"
        write_dataset(out, SynthConfig(n_corrs=15), n_scenes=2, seed=4)
        assert ((out / "scene_0000.txt").read_bytes()
                != (out / "scene_0001.txt").read_bytes())
