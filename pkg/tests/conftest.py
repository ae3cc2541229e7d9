import random

import pytest

from coraster.document import (
    ChangeMessage,
    ChangeRejected,
    DocumentMeta,
    SessionDocument,
    apply_change,
    document_canonical_bytes,
    new_document,
)

LISTING_PATH = [
    ["M", 446.99, 38],
    ["Q", 447, 38, 448, 38],
    ["Q", 449, 38, 449.5, 38],
    ["Q", 450, 38, 451, 38.5],
    ["Q", 452, 39, 452.5, 39],
    ["L", 453.01, 39],
]


def change(module, action, client_id="c0001", time_stamp=1, **payload):
    payload.setdefault("clientId", client_id)
    payload.setdefault("timeStamp", time_stamp)
    return ChangeMessage(
        module=module,
        action=action,
        payload=payload,
        client_id=payload["clientId"],
        time_stamp=payload["timeStamp"],
    )


def add_layer(doc, layer_id, client_id="c0001", **kw):
    doc, _ = apply_change(doc, change("layer", "add", client_id=client_id, layerId=layer_id, **kw))
    return doc


def draw(doc, layer_id, stroke_id, client_id="c0001", path=None, color="#112233", width=3, ts=1):
    doc, _ = apply_change(
        doc,
        change(
            "drawing",
            "newPath",
            client_id=client_id,
            time_stamp=ts,
            layerId=layer_id,
            strokeId=stroke_id,
            color=color,
            width=width,
            path=path or [["M", 1, 1], ["L", 2, 2]],
        ),
    )
    return doc


@pytest.fixture
def empty_doc():
    return new_document("scratch", 800, 600, created_at=0)


@pytest.fixture
def doc_with_layer(empty_doc):
    return add_layer(empty_doc, "L0")


class RandomChanges:
    """Seeded stream of plausible changes over a shared id namespace.

    Produces both applicable and stale/denied changes on purpose; callers
    fold them through the reducer and ignore rejections.
    """

    CATEGORIES = ("add", "delete", "reorder", "property", "draw", "undo", "redo",
                  "lock", "unlock", "excl", "exclUnlock", "vcaAdd", "vcaRemove",
                  "vcaReorder", "vcaParam", "vcaEnable")

    def __init__(self, seed, clients=("a", "b", "c")):
        self.rng = random.Random(seed)
        self.clients = clients
        self.counter = 0

    def _id(self, prefix):
        self.counter += 1
        return f"{prefix}{self.counter:06d}"

    def _layer_id(self, doc):
        known = [l.id for l in doc.layers]
        # occasionally reference a dead/unknown layer to exercise StaleTarget
        if not known or self.rng.random() < 0.08:
            return self._id("ghost")
        return self.rng.choice(known)

    def next_change(self, doc):
        rng = self.rng
        self.counter += 1
        ts = self.counter
        client = rng.choice(self.clients)
        kind = rng.choice(self.CATEGORIES)
        if kind == "add" or not doc.layers:
            return change("layer", "add", client_id=client, time_stamp=ts,
                          layerId=self._id("L"), name=f"layer-{ts}")
        layer_id = self._layer_id(doc)
        if kind == "delete":
            return change("layer", "delete", client_id=client, time_stamp=ts, layerId=layer_id)
        if kind == "reorder":
            return change("layer", "reorder", client_id=client, time_stamp=ts,
                          layerId=layer_id, toIndex=rng.randrange(max(1, len(doc.layers))))
        if kind == "property":
            prop = rng.choice(["visibility", "opacity", "name", "transform"])
            value = {
                "visibility": rng.random() < 0.5,
                "opacity": round(rng.random(), 3),
                "name": f"n{ts}",
                "transform": {"tx": rng.randint(-50, 50), "ty": rng.randint(-50, 50),
                              "rotation": rng.choice([0, 45, 90, 370, -15]),
                              "scaleX": rng.choice([1, 0.5, 2]), "scaleY": 1},
            }[prop]
            return change("layer", "updateProperty", client_id=client, time_stamp=ts,
                          layerId=layer_id, property=prop, value=value)
        if kind == "draw":
            return change("drawing", "newPath", client_id=client, time_stamp=ts,
                          layerId=layer_id, strokeId=self._id("S"), color="#AB12CD",
                          width=rng.randint(1, 12),
                          path=[["M", rng.randint(0, 100), rng.randint(0, 100)],
                                ["L", rng.randint(0, 100), rng.randint(0, 100)]])
        if kind == "undo":
            return change("drawing", "undoPath", client_id=client, time_stamp=ts, layerId=layer_id)
        if kind == "redo":
            return change("drawing", "redoPath", client_id=client, time_stamp=ts, layerId=layer_id)
        if kind == "lock":
            return change("layer", "lock", client_id=client, time_stamp=ts, layerId=layer_id)
        if kind == "unlock":
            return change("layer", "unlock", client_id=client, time_stamp=ts, layerId=layer_id)
        if kind == "excl":
            return change("layer", "exclusiveLock", client_id=client, time_stamp=ts, layerId=layer_id)
        if kind == "exclUnlock":
            return change("layer", "exclusiveUnlock", client_id=client, time_stamp=ts, layerId=layer_id)
        if kind == "vcaAdd":
            effect = rng.choice(["contrast", "pixelation", "vignette", "chromaticAberration", "chromaZoom"])
            return change("pipeline", "addVca", client_id=client, time_stamp=ts,
                          layerId=layer_id, effect=effect)
        index = rng.randrange(4)
        if kind == "vcaRemove":
            return change("pipeline", "removeVca", client_id=client, time_stamp=ts,
                          layerId=layer_id, index=index)
        if kind == "vcaReorder":
            return change("pipeline", "reorderVca", client_id=client, time_stamp=ts,
                          layerId=layer_id, fromIndex=index, toIndex=rng.randrange(4))
        if kind == "vcaParam":
            return change("pipeline", "updateParam", client_id=client, time_stamp=ts,
                          layerId=layer_id, index=index, param="s", value=round(rng.random(), 3))
        return change("pipeline", "setEnabled", client_id=client, time_stamp=ts,
                      layerId=layer_id, index=index, enabled=rng.random() < 0.5)


def fold_changes(doc, changes):
    """Apply a change sequence, returning (doc, accepted, rejected)."""
    accepted, rejected = [], []
    for c in changes:
        try:
            doc, event = apply_change(doc, c)
            accepted.append((c, event))
        except ChangeRejected as e:
            rejected.append((c, e))
    return doc, accepted, rejected
