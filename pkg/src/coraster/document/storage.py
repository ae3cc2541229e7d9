"""Document (de)serialization and the session directory layout.

The canonical form is deliberate: keys are emitted in declared order and
reals as shortest round-trip decimals, so two equal documents always
serialize to identical bytes. Convergence and replay tests compare those
bytes directly.

On disk a session is a directory:
    <session-id>/document.json      current document (autosaved)
    <session-id>/assets/<id>.png    8-bit RGBA source bitmaps
    <session-id>/changelog.jsonl    one sequenced event per line, append-only
"""

from __future__ import annotations

import json
import math
import re
from pathlib import Path

from .types import (
    DocumentMeta,
    ExclusiveLock,
    Layer,
    PATH_ARITY,
    PathCommand,
    SessionDocument,
    Stroke,
    Transform2D,
    VcaInstance,
    clamp_scale,
    normalize_rotation,
)
from ..effects import validate_params

FORMAT_VERSION = 1

COLOR_RE = re.compile(r"^#[0-9a-fA-F]{6}$")


class FormatError(Exception):
    """Malformed document data; ``path`` locates the offending field."""

    def __init__(self, path: str, reason: str):
        super().__init__(f"{path}: {reason}")
        self.path = path
        self.reason = reason


class UnsupportedVersion(FormatError):
    def __init__(self, path: str, version):
        super().__init__(path, f"format version {version} exceeds supported {FORMAT_VERSION}")
        self.version = version


def canonical_json(obj) -> str:
    """Deterministic JSON: declared key order, no whitespace, shortest
    round-trip floats, no NaN/Infinity."""
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False, allow_nan=False)


def canonical_json_bytes(obj) -> bytes:
    return canonical_json(obj).encode("utf-8")


# ---------------------------------------------------------------------------
# to plain data (declared key order)

def transform_to_dict(t: Transform2D) -> dict:
    return {
        "tx": t.tx,
        "ty": t.ty,
        "rotation": t.rotation,
        "scaleX": t.scale_x,
        "scaleY": t.scale_y,
    }


def stroke_to_dict(s: Stroke) -> dict:
    return {
        "strokeId": s.stroke_id,
        "clientId": s.client_id,
        "timeStamp": s.time_stamp,
        "color": s.color,
        "width": s.width,
        "path": [[c.kind, *c.coords] for c in s.path],
        "undone": s.undone,
    }


def vca_to_dict(v: VcaInstance) -> dict:
    return {"effect": v.effect, "enabled": v.enabled, "params": dict(v.params)}


def layer_to_dict(layer: Layer) -> dict:
    return {
        "id": layer.id,
        "name": layer.name,
        "visible": layer.visible,
        "locked": layer.locked,
        "exclusiveLock": (
            {"owner": layer.exclusive_lock.owner, "since": layer.exclusive_lock.since}
            if layer.exclusive_lock
            else None
        ),
        "transform": transform_to_dict(layer.transform),
        "opacity": layer.opacity,
        "asset": layer.asset,
        "strokes": [stroke_to_dict(s) for s in layer.strokes],
        "pipeline": [vca_to_dict(v) for v in layer.pipeline],
    }


def document_to_dict(doc: SessionDocument) -> dict:
    return {
        "meta": {
            "name": doc.meta.name,
            "createdAt": doc.meta.created_at,
            "version": doc.meta.version,
            "width": doc.meta.width,
            "height": doc.meta.height,
        },
        "layers": [layer_to_dict(l) for l in doc.layers],
    }


def document_canonical_bytes(doc: SessionDocument) -> bytes:
    return canonical_json_bytes(document_to_dict(doc))


def save_document(doc: SessionDocument) -> bytes:
    """Canonical document.json bytes."""
    return document_canonical_bytes(doc)


# ---------------------------------------------------------------------------
# from plain data, with validation

def _expect(data, path: str, fields: dict):
    """Pull required fields out of a mapping, type-checked."""
    if not isinstance(data, dict):
        raise FormatError(path, "expected an object")
    out = []
    for name, types in fields.items():
        if name not in data:
            raise FormatError(path, f"missing field {name!r}")
        value = data[name]
        if types is not None and not isinstance(value, types):
            raise FormatError(f"{path}.{name}", "wrong type")
        if isinstance(value, bool) and types is not None and bool not in _as_tuple(types):
            raise FormatError(f"{path}.{name}", "wrong type")
        out.append(value)
    return out


def _as_tuple(t):
    return t if isinstance(t, tuple) else (t,)


def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise FormatError(path, "expected a number")
    if not math.isfinite(value):
        raise FormatError(path, "number must be finite")
    return value


def parse_color(value, path: str) -> str:
    if not isinstance(value, str) or not COLOR_RE.match(value):
        raise FormatError(path, "expected #RRGGBB color")
    return value


def parse_path_commands(raw, path: str) -> tuple[PathCommand, ...]:
    if not isinstance(raw, (list, tuple)) or not raw:
        raise FormatError(path, "expected a non-empty command list")
    commands = []
    for i, cmd in enumerate(raw):
        here = f"{path}[{i}]"
        if not isinstance(cmd, (list, tuple)) or not cmd:
            raise FormatError(here, "expected [kind, coords...]")
        kind = cmd[0]
        arity = PATH_ARITY.get(kind)
        if arity is None:
            raise FormatError(here, f"unknown command kind {kind!r}")
        coords = cmd[1:]
        if len(coords) != arity:
            raise FormatError(here, f"{kind} takes {arity} coordinates")
        coords = tuple(_number(c, here) for c in coords)
        commands.append(PathCommand(kind, coords))
    if commands[0].kind != "M":
        raise FormatError(f"{path}[0]", "path must begin with a move-to")
    return tuple(commands)


def transform_from_dict(data, path: str) -> Transform2D:
    tx, ty, rotation, sx, sy = _expect(
        data, path, {"tx": None, "ty": None, "rotation": None, "scaleX": None, "scaleY": None}
    )
    return Transform2D(
        tx=_number(tx, f"{path}.tx"),
        ty=_number(ty, f"{path}.ty"),
        rotation=normalize_rotation(_number(rotation, f"{path}.rotation")),
        scale_x=clamp_scale(_number(sx, f"{path}.scaleX")),
        scale_y=clamp_scale(_number(sy, f"{path}.scaleY")),
    )


def stroke_from_dict(data, path: str) -> Stroke:
    stroke_id, client_id, time_stamp, color, width, raw_path, undone = _expect(
        data,
        path,
        {
            "strokeId": str,
            "clientId": str,
            "timeStamp": int,
            "color": str,
            "width": (int, float),
            "path": list,
            "undone": bool,
        },
    )
    if _number(width, f"{path}.width") <= 0:
        raise FormatError(f"{path}.width", "width must be > 0")
    return Stroke(
        stroke_id=stroke_id,
        client_id=client_id,
        time_stamp=time_stamp,
        color=parse_color(color, f"{path}.color"),
        width=width,
        path=parse_path_commands(raw_path, f"{path}.path"),
        undone=undone,
    )


def vca_from_dict(data, path: str) -> VcaInstance:
    effect, enabled, params = _expect(
        data, path, {"effect": str, "enabled": bool, "params": dict}
    )
    try:
        params = validate_params(effect, params)
    except ValueError as e:
        msg = str(e)
        if msg.startswith("params."):
            raise FormatError(f"{path}.{msg}", "invalid effect parameter") from None
        raise FormatError(f"{path}.effect", msg) from None
    return VcaInstance(effect=effect, enabled=enabled, params=params)


def layer_from_dict(data, path: str) -> Layer:
    (layer_id, name, visible, locked, excl, transform, opacity, asset, strokes, pipeline) = _expect(
        data,
        path,
        {
            "id": str,
            "name": str,
            "visible": bool,
            "locked": bool,
            "exclusiveLock": (dict, type(None)),
            "transform": dict,
            "opacity": (int, float),
            "asset": (str, type(None)),
            "strokes": list,
            "pipeline": list,
        },
    )
    opacity = _number(opacity, f"{path}.opacity")
    if not 0 <= opacity <= 1:
        raise FormatError(f"{path}.opacity", "opacity must lie in [0, 1]")
    lock = None
    if excl is not None:
        owner, since = _expect(excl, f"{path}.exclusiveLock", {"owner": str, "since": int})
        lock = ExclusiveLock(owner=owner, since=since)
    return Layer(
        id=layer_id,
        name=name,
        visible=visible,
        locked=locked,
        exclusive_lock=lock,
        transform=transform_from_dict(transform, f"{path}.transform"),
        opacity=opacity,
        asset=asset,
        strokes=tuple(
            stroke_from_dict(s, f"{path}.strokes[{i}]") for i, s in enumerate(strokes)
        ),
        pipeline=tuple(vca_from_dict(v, f"{path}.pipeline[{i}]") for i, v in enumerate(pipeline)),
    )


def document_from_dict(data, path: str = "document") -> SessionDocument:
    meta_raw, layers_raw = _expect(data, path, {"meta": dict, "layers": list})
    name, created_at, version, width, height = _expect(
        meta_raw,
        f"{path}.meta",
        {"name": str, "createdAt": int, "version": int, "width": int, "height": int},
    )
    if version < 1:
        raise FormatError(f"{path}.meta.version", "version must be >= 1")
    if version > FORMAT_VERSION:
        raise UnsupportedVersion(f"{path}.meta.version", version)
    if created_at < 0:
        raise FormatError(f"{path}.meta.createdAt", "createdAt must be >= 0")
    if width < 1 or height < 1:
        raise FormatError(f"{path}.meta", "width and height must be >= 1")
    meta = DocumentMeta(name=name, created_at=created_at, version=version, width=width, height=height)
    layers = tuple(layer_from_dict(l, f"{path}.layers[{i}]") for i, l in enumerate(layers_raw))
    seen = set()
    for i, layer in enumerate(layers):
        if layer.id in seen:
            raise FormatError(f"{path}.layers[{i}].id", f"duplicate layer id {layer.id!r}")
        seen.add(layer.id)
    return SessionDocument(meta=meta, layers=layers)


def load_document(raw: bytes | str) -> SessionDocument:
    try:
        data = json.loads(raw)
    except ValueError as e:
        raise FormatError("document", f"invalid JSON: {e}") from None
    return document_from_dict(data)


# ---------------------------------------------------------------------------
# session directories

DOCUMENT_FILE = "document.json"
BASE_FILE = "base.json"
CHANGELOG_FILE = "changelog.jsonl"
ASSETS_DIR = "assets"


def new_document(name: str, width: int, height: int, created_at: int) -> SessionDocument:
    return SessionDocument(
        meta=DocumentMeta(
            name=name, created_at=created_at, version=FORMAT_VERSION, width=width, height=height
        )
    )


def save_document_dir(doc: SessionDocument, directory: str | Path) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / ASSETS_DIR).mkdir(exist_ok=True)
    (directory / DOCUMENT_FILE).write_bytes(save_document(doc))
    return directory


def load_document_dir(directory: str | Path) -> SessionDocument:
    directory = Path(directory)
    doc_path = directory / DOCUMENT_FILE
    if not doc_path.is_file():
        raise FormatError(str(doc_path), "no document.json in session directory")
    return load_document(doc_path.read_bytes())
