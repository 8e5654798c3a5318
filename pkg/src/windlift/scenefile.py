"""Versioned, schema-validated JSON scene documents.

A scene document bundles the domain polygon, material, gravity, pinned
regions, cut polylines, and cubature/solver settings. The same dictionary
travels inside the service protocol's init message, so parsing is pure
(dict in, Scene out) and file I/O is a thin wrapper around it.
"""
from __future__ import annotations

import json
from importlib import resources

import jsonschema
import numpy as np

from .domain import Domain, region_mask
from .elasticity import Material
from .geometry import CutCurve
from .sim import Scene, SimParams

_SCHEMA_CACHE: dict = {}


def load_schema(name: str) -> dict:
    """Bundled JSON schema by file name, cached."""
    if name not in _SCHEMA_CACHE:
        text = (resources.files("windlift") / "schemas" / name).read_text(
            encoding="utf-8")
        _SCHEMA_CACHE[name] = json.loads(text)
    return _SCHEMA_CACHE[name]


def validate_scene_dict(doc) -> None:
    """Check a scene document against the schema; ValueError on violation."""
    validator = jsonschema.Draft7Validator(load_schema("scene.schema.json"))
    errors = sorted(validator.iter_errors(doc),
                    key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise ValueError(f"scene document invalid at {where}: {err.message}")


def scene_from_dict(doc) -> Scene:
    """Validated scene document -> simulation-ready Scene.

    Pinned points are the cubature samples that land inside any pinned
    region, so pinning costs no extra basis evaluations at solve time.
    """
    validate_scene_dict(doc)
    dom = doc["domain"]
    domain = Domain(dom["boundary"], dom.get("holes", ()))
    mat = doc["material"]
    material = Material(mu=mat.get("mu", 1.0), lam=mat.get("lambda", 1.0),
                        density=mat.get("density", 1.0),
                        thickness=mat.get("thickness", 1.0))
    cuts = doc.get("cuts", {"polylines": []})
    curve = CutCurve(cuts["polylines"], alpha=cuts.get("alpha", 1.0),
                     alpha_mode=cuts.get("alpha_mode", "sequential"))
    cub = doc["cubature"]
    cubature = domain.sample_cubature(int(cub["n"]), int(cub.get("seed", 0)))
    regions = doc.get("pinned", ())
    if regions:
        pinned = cubature.points[region_mask(cubature.points, regions)]
    else:
        pinned = np.zeros((0, 2))
    simdoc = doc.get("sim", {})
    params = SimParams(h=simdoc.get("h", 1.0 / 60.0),
                       tol=simdoc.get("tol", 0.0),
                       max_iters=simdoc.get("max_iters", 200),
                       stiffness_scale=simdoc.get("stiffness_scale", 1.0),
                       newton=simdoc.get("newton", False))
    return Scene(domain=domain, material=material, gravity=doc["gravity"],
                 pinned=pinned, curve=curve, cubature=cubature,
                 pin_weight=doc.get("pin_weight", 1e3), sim=params,
                 tip_radius_eps=simdoc.get("tip_radius_eps", 0.0))


def load_scene(path) -> Scene:
    return scene_from_dict(load_scene_dict(path))


def load_scene_dict(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as err:
        raise ValueError(f"scene file {path} is not valid JSON: {err}") from err
    if not isinstance(doc, dict):
        raise ValueError(f"scene file {path} must hold a JSON object")
    return doc
