"""Scene-spec document builders shared by the io/service/cli tests."""

from __future__ import annotations

import copy
import json

MINIMAL = {
    "version": 1,
    "domain": {"boundary": [[0, 0], [10, 0], [10, 10], [0, 10]], "height": 3.0},
    "objects": [{"id": "crate", "category": "crate", "dims": [1, 1, 1]}],
}


def make_spec(**overrides) -> dict:
    doc = copy.deepcopy(MINIMAL)
    doc.update(copy.deepcopy(overrides))
    return doc


def two_object_spec(room=10.0, fast=True) -> dict:
    doc = {
        "version": 1,
        "domain": {"boundary": [[0, 0], [room, 0], [room, room], [0, room]], "height": 3.0},
        "objects": [
            {"id": "a", "category": "crate", "dims": [1, 1, 1]},
            {"id": "b", "category": "crate", "dims": [1, 1, 1]},
        ],
        "terms": [
            {
                "kind": "distance",
                "participants": ["a", "b"],
                "params": {"target": 2.0},
                "soft": {"weight": 1.0},
            }
        ],
    }
    if fast:
        doc["solver"] = {"restarts": 2, "max_evals": 4000}
    return doc


def nested_spec() -> dict:
    return {
        "version": 1,
        "domain": {"boundary": [[0, 0], [8, 0], [8, 8], [0, 8]], "height": 3.0},
        "objects": [
            {"id": "table", "category": "table", "dims": [1.2, 0.8, 0.75]},
            {"id": "plate0", "category": "plate", "dims": [0.24, 0.24, 0.03], "parent": "table"},
            {"id": "plate1", "category": "plate", "dims": [0.24, 0.24, 0.03], "parent": "table"},
            {"id": "shelf", "category": "shelf", "dims": [0.9, 0.3, 1.8]},
            {"id": "book0", "category": "book", "dims": [0.12, 0.05, 0.2], "parent": "shelf"},
            {"id": "book1", "category": "book", "dims": [0.12, 0.05, 0.2], "parent": "shelf"},
            {"id": "book2", "category": "book", "dims": [0.12, 0.05, 0.2], "parent": "shelf"},
            {"id": "book3", "category": "book", "dims": [0.12, 0.05, 0.2], "parent": "shelf"},
        ],
        "solver": {"restarts": 2, "max_evals": 6000},
    }


def trajectory_spec() -> dict:
    doc = make_spec()
    doc["objects"] = [
        {
            "id": "drum",
            "category": "drum",
            "dims": [1, 1, 1],
            "fixed": True,
            "pose": {"x": 5.0, "y": 5.0, "yaw": 0.0},
        },
        {"id": "crate", "category": "crate", "dims": [0.5, 0.5, 0.5]},
    ]
    doc["solver"] = {"restarts": 1, "max_evals": 1500}
    doc["trajectories"] = [
        {
            "template": "pan",
            "frames": 3,
            "span": 2.0,
            "anchor": {"object": "drum", "relation": "in_front_of", "distance": 2.0},
        },
        {
            "template": "orbit",
            "frames": 4,
            "arc": 6.283185307179586,
            "anchor": {"object": "drum", "relation": "around", "distance": 2.0},
        },
    ]
    return doc


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2)
