"""Scene document validation and loading."""
import glob
import json
import os

import numpy as np
import pytest

from windlift.domain import region_mask
from windlift.scenefile import (
    load_scene,
    scene_from_dict,
    validate_scene_dict,
)

SCENES_DIR = os.path.join(os.path.dirname(__file__), os.pardir, "scenes")


def base_doc():
    return {
        "format": 1,
        "domain": {"boundary": [[0, 0], [1, 0], [1, 1], [0, 1]]},
        "material": {"mu": 2.0, "lambda": 3.0, "density": 1.5,
                     "thickness": 0.1},
        "gravity": [0.0, 0.0, -9.8],
        "pinned": [{"type": "rect", "min": [0.0, 0.9], "max": [1.0, 1.0]}],
        "pin_weight": 50.0,
        "cuts": {"polylines": [[[0.5, 0.1], [0.5, 0.9]]], "alpha": 0.25,
                 "alpha_mode": "sequential"},
        "cubature": {"n": 200, "seed": 4},
        "sim": {"h": 0.01, "tol": 1e-7, "max_iters": 50,
                "stiffness_scale": 2.0, "newton": True,
                "tip_radius_eps": 0.05},
    }


def test_full_document_maps_onto_scene():
    scene = scene_from_dict(base_doc())
    assert scene.material.mu == 2.0
    assert scene.material.lam == 3.0
    assert scene.material.density == 1.5
    assert scene.material.thickness == 0.1
    assert scene.curve.alpha == 0.25
    assert scene.cubature.n == 200
    assert scene.pin_weight == 50.0
    assert scene.sim.h == 0.01
    assert scene.sim.tol == 1e-7
    assert scene.sim.max_iters == 50
    assert scene.sim.stiffness_scale == 2.0
    assert scene.sim.newton is True
    assert scene.tip_radius_eps == 0.05
    assert np.array_equal(scene.gravity, [0.0, 0.0, -9.8])


def test_pinned_points_are_cubature_samples_in_regions():
    doc = base_doc()
    scene = scene_from_dict(doc)
    expected = scene.cubature.points[
        region_mask(scene.cubature.points, doc["pinned"])]
    assert np.array_equal(scene.pinned, expected)
    assert scene.pinned.shape[0] > 0
    assert np.all(scene.pinned[:, 1] >= 0.9)


def test_defaults_fill_optional_sections():
    doc = {
        "format": 1,
        "domain": {"boundary": [[0, 0], [2, 0], [2, 1], [0, 1]]},
        "material": {},
        "gravity": [0, 0, 0],
        "cubature": {"n": 16},
    }
    scene = scene_from_dict(doc)
    assert scene.material.mu == 1.0 and scene.material.lam == 1.0
    assert scene.curve.polylines == ()
    assert scene.curve.alpha == 1.0
    assert scene.pinned.shape == (0, 2)
    assert scene.pin_weight == 1e3
    assert scene.sim.h == pytest.approx(1.0 / 60.0)
    assert scene.sim.newton is False
    # derived tip radius: 2% of the bbox diagonal
    assert scene.tip_radius_eps == pytest.approx(0.02 * np.sqrt(5.0))


@pytest.mark.parametrize("mutate,where", [
    (lambda d: d.pop("format"), "format"),
    (lambda d: d.update(format=2), "format"),
    (lambda d: d.update(extra=1), "extra"),
    (lambda d: d["domain"].update(boundary=[[0, 0], [1, 0]]), "boundary"),
    (lambda d: d.update(gravity=[0, 0]), "gravity"),
    (lambda d: d["pinned"].append({"type": "blob"}), "pinned"),
    (lambda d: d["cuts"].update(alpha=1.5), "alpha"),
    (lambda d: d["cuts"].update(alpha_mode="both"), "alpha_mode"),
    (lambda d: d["cuts"].update(polylines=[[[0.5, 0.5]]]), "polyline"),
    (lambda d: d["cubature"].update(n=0), "cubature"),
    (lambda d: d["cubature"].update(n=2.5), "cubature"),
    (lambda d: d["sim"].update(h=0), "sim"),
    (lambda d: d["material"].update(mu=-1), "material"),
])
def test_schema_rejections(mutate, where):
    doc = base_doc()
    mutate(doc)
    with pytest.raises(ValueError):
        validate_scene_dict(doc)


def test_load_scene_round_trip(tmp_path):
    path = tmp_path / "scene.json"
    path.write_text(json.dumps(base_doc()))
    scene = load_scene(path)
    assert scene.cubature.n == 200


def test_load_scene_rejects_bad_json(tmp_path):
    path = tmp_path / "scene.json"
    path.write_text("{nope")
    with pytest.raises(ValueError, match="not valid JSON"):
        load_scene(path)


def test_load_scene_rejects_non_object(tmp_path):
    path = tmp_path / "scene.json"
    path.write_text("[1, 2]")
    with pytest.raises(ValueError, match="JSON object"):
        load_scene(path)


@pytest.mark.parametrize("path", sorted(glob.glob(
    os.path.join(SCENES_DIR, "*.json"))))
def test_bundled_scenes_load(path):
    scene = load_scene(path)
    assert scene.cubature.n > 0


def test_bundled_scenes_exist():
    assert glob.glob(os.path.join(SCENES_DIR, "*.json"))
