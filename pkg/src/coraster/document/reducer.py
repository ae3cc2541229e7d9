"""The pure document reducer.

``apply_change`` is the single mutation path for every document in the
system: the server runs it to accept changes, clients re-run it on
sequenced broadcasts, and replay folds it over the changelog. It must be
deterministic and total: the same (document, change) always produces the
same new document or the same rejection, and a rejection leaves the input
untouched (values are immutable, so that is structural).
"""

from __future__ import annotations

from dataclasses import replace
from typing import Optional

from ..effects import FILTER_SPECS, validate_params
from .permissions import TransformLeaseTable, check_permission
from .storage import COLOR_RE, parse_path_commands, FormatError
from .types import (
    ChangeMessage,
    ChangeRejected,
    DomainEvent,
    ExclusiveLock,
    Layer,
    RejectReason,
    SessionDocument,
    Stroke,
    Transform2D,
    VcaInstance,
    clamp_scale,
    normalize_rotation,
)

MUTATION_MODULES = ("drawing", "layer", "pipeline")


def is_mutation(module: str, action: str) -> bool:
    return module in MUTATION_MODULES


def _reject(reason: RejectReason, detail: str = ""):
    raise ChangeRejected(reason, detail)


def _field(payload, name, types, detail=None):
    value = payload.get(name)
    if isinstance(value, bool) and bool not in (types if isinstance(types, tuple) else (types,)):
        _reject(RejectReason.MALFORMED_PAYLOAD, detail or f"field {name!r}")
    if not isinstance(value, types):
        _reject(RejectReason.MALFORMED_PAYLOAD, detail or f"field {name!r}")
    return value


def _resolve_layer(doc: SessionDocument, payload) -> tuple[int, Layer]:
    layer_id = _field(payload, "layerId", str)
    index = doc.layer_index(layer_id)
    if index < 0:
        _reject(RejectReason.STALE_TARGET, f"layer {layer_id} no longer exists")
    return index, doc.layers[index]


def _resolve_vca(layer: Layer, payload, key="index") -> int:
    index = _field(payload, key, int)
    if not 0 <= index < len(layer.pipeline):
        _reject(RejectReason.STALE_TARGET, f"pipeline entry {index} no longer exists")
    return index


# ---------------------------------------------------------------------------
# undo / redo

def _client_stroke_indices(layer: Layer, client_id: str):
    return [i for i, s in enumerate(layer.strokes) if s.client_id == client_id]


def undo_stroke(doc: SessionDocument, client_id: str, layer_id: str) -> SessionDocument:
    """Mark the client's most recent active stroke on the layer as undone.

    Only the calling client's strokes are candidates; everyone else's work
    is never touched.
    """
    index = doc.layer_index(layer_id)
    if index < 0:
        _reject(RejectReason.STALE_TARGET, f"layer {layer_id} no longer exists")
    layer = doc.layers[index]
    for i in reversed(_client_stroke_indices(layer, client_id)):
        if not layer.strokes[i].undone:
            strokes = (
                layer.strokes[:i]
                + (replace(layer.strokes[i], undone=True),)
                + layer.strokes[i + 1 :]
            )
            return doc.with_layer(index, replace(layer, strokes=strokes))
    _reject(RejectReason.NOTHING_TO_UNDO, f"no active stroke by {client_id}")


def redo_stroke(doc: SessionDocument, client_id: str, layer_id: str) -> SessionDocument:
    """Clear the undone flag on the client's most recently undone stroke.

    Undos walk backwards through the client's strokes, so the earliest
    undone stroke is the one flagged last; redo restores it.
    """
    index = doc.layer_index(layer_id)
    if index < 0:
        _reject(RejectReason.STALE_TARGET, f"layer {layer_id} no longer exists")
    layer = doc.layers[index]
    for i in _client_stroke_indices(layer, client_id):
        if layer.strokes[i].undone:
            strokes = (
                layer.strokes[:i]
                + (replace(layer.strokes[i], undone=False),)
                + layer.strokes[i + 1 :]
            )
            return doc.with_layer(index, replace(layer, strokes=strokes))
    _reject(RejectReason.NOTHING_TO_REDO, f"no undone stroke by {client_id}")


# ---------------------------------------------------------------------------
# per-action appliers; each returns (new_document, DomainEvent)

def _apply_layer_add(doc, change):
    payload = change.payload
    layer_id = _field(payload, "layerId", str, "layerId (server-assigned) is required")
    if doc.layer_index(layer_id) >= 0:
        _reject(RejectReason.INVALID_VALUE, f"layer id {layer_id} already exists")
    name = payload.get("name")
    if name is not None and not isinstance(name, str):
        _reject(RejectReason.MALFORMED_PAYLOAD, "field 'name'")
    layer = Layer(id=layer_id, name=name if name is not None else f"Layer {len(doc.layers) + 1}")
    return (
        replace(doc, layers=doc.layers + (layer,)),
        DomainEvent("layer/add", layer_id=layer_id),
    )


def _apply_layer_delete(doc, change):
    index, layer = _resolve_layer(doc, change.payload)
    layers = doc.layers[:index] + doc.layers[index + 1 :]
    return replace(doc, layers=layers), DomainEvent("layer/delete", layer_id=layer.id)


def _apply_layer_reorder(doc, change):
    index, layer = _resolve_layer(doc, change.payload)
    to_index = _field(change.payload, "toIndex", int)
    if not 0 <= to_index < len(doc.layers):
        _reject(RejectReason.INVALID_VALUE, f"toIndex {to_index} out of range")
    rest = doc.layers[:index] + doc.layers[index + 1 :]
    layers = rest[:to_index] + (layer,) + rest[to_index:]
    return replace(doc, layers=layers), DomainEvent("layer/reorder", layer_id=layer.id)


def _parse_transform(value) -> Transform2D:
    if not isinstance(value, dict):
        _reject(RejectReason.MALFORMED_PAYLOAD, "transform value must be an object")
    parts = {}
    for wire, attr in (("tx", "tx"), ("ty", "ty"), ("rotation", "rotation"),
                       ("scaleX", "scale_x"), ("scaleY", "scale_y")):
        raw = value.get(wire)
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            _reject(RejectReason.MALFORMED_PAYLOAD, f"transform.{wire}")
        parts[attr] = raw
    parts["rotation"] = normalize_rotation(parts["rotation"])
    parts["scale_x"] = clamp_scale(parts["scale_x"])
    parts["scale_y"] = clamp_scale(parts["scale_y"])
    return Transform2D(**parts)


def _apply_layer_update_property(doc, change):
    index, layer = _resolve_layer(doc, change.payload)
    prop = _field(change.payload, "property", str)
    value = change.payload.get("value")
    if prop == "visibility":
        if not isinstance(value, bool):
            _reject(RejectReason.MALFORMED_PAYLOAD, "visibility value must be a boolean")
        layer = replace(layer, visible=value)
    elif prop == "opacity":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            _reject(RejectReason.MALFORMED_PAYLOAD, "opacity value must be a number")
        if not 0 <= value <= 1:
            _reject(RejectReason.INVALID_VALUE, "opacity must lie in [0, 1]")
        layer = replace(layer, opacity=value)
    elif prop == "name":
        if not isinstance(value, str):
            _reject(RejectReason.MALFORMED_PAYLOAD, "name value must be a string")
        layer = replace(layer, name=value)
    elif prop == "transform":
        layer = replace(layer, transform=_parse_transform(value))
    else:
        _reject(RejectReason.MALFORMED_PAYLOAD, f"unknown property {prop!r}")
    return doc.with_layer(index, layer), DomainEvent("layer/updateProperty", layer_id=layer.id)


def _apply_lock(doc, change, locked: bool):
    index, layer = _resolve_layer(doc, change.payload)
    action = "layer/lock" if locked else "layer/unlock"
    return (
        doc.with_layer(index, replace(layer, locked=locked)),
        DomainEvent(action, layer_id=layer.id),
    )


def _apply_exclusive_lock(doc, change):
    index, layer = _resolve_layer(doc, change.payload)
    lock = ExclusiveLock(owner=change.client_id, since=change.time_stamp)
    return (
        doc.with_layer(index, replace(layer, exclusive_lock=lock)),
        DomainEvent("layer/exclusiveLock", layer_id=layer.id),
    )


def _apply_exclusive_unlock(doc, change):
    index, layer = _resolve_layer(doc, change.payload)
    former = layer.exclusive_lock.owner if layer.exclusive_lock else None
    notify = former if former is not None and former != change.client_id else None
    return (
        doc.with_layer(index, replace(layer, exclusive_lock=None)),
        DomainEvent("layer/exclusiveUnlock", layer_id=layer.id, notify_owner=notify),
    )


def _apply_new_path(doc, change):
    payload = change.payload
    index, layer = _resolve_layer(doc, payload)
    stroke_id = _field(payload, "strokeId", str, "strokeId (server-assigned) is required")
    color = _field(payload, "color", str)
    if not COLOR_RE.match(color):
        _reject(RejectReason.INVALID_VALUE, "color must be #RRGGBB")
    width = payload.get("width")
    if isinstance(width, bool) or not isinstance(width, (int, float)) or width <= 0:
        _reject(RejectReason.INVALID_VALUE, "width must be a number > 0")
    try:
        path = parse_path_commands(payload.get("path"), "path")
    except FormatError as e:
        _reject(RejectReason.MALFORMED_PAYLOAD, str(e))
    stroke = Stroke(
        stroke_id=stroke_id,
        client_id=change.client_id,
        time_stamp=change.time_stamp,
        color=color,
        width=width,
        path=path,
    )
    layer = replace(layer, strokes=layer.strokes + (stroke,))
    return doc.with_layer(index, layer), DomainEvent("drawing/newPath", layer_id=layer.id)


def _apply_add_vca(doc, change):
    payload = change.payload
    index, layer = _resolve_layer(doc, payload)
    effect = _field(payload, "effect", str)
    if effect not in FILTER_SPECS:
        _reject(RejectReason.INVALID_VALUE, f"unknown effect {effect!r}")
    raw_params = payload.get("params", {})
    if not isinstance(raw_params, dict):
        _reject(RejectReason.MALFORMED_PAYLOAD, "params must be an object")
    try:
        params = validate_params(effect, raw_params)
    except ValueError as e:
        _reject(RejectReason.INVALID_VALUE, str(e))
    enabled = payload.get("enabled", True)
    if not isinstance(enabled, bool):
        _reject(RejectReason.MALFORMED_PAYLOAD, "enabled must be a boolean")
    vca = VcaInstance(effect=effect, enabled=enabled, params=params)
    layer = replace(layer, pipeline=layer.pipeline + (vca,))
    return doc.with_layer(index, layer), DomainEvent("pipeline/addVca", layer_id=layer.id)


def _apply_remove_vca(doc, change):
    index, layer = _resolve_layer(doc, change.payload)
    vca_index = _resolve_vca(layer, change.payload)
    pipeline = layer.pipeline[:vca_index] + layer.pipeline[vca_index + 1 :]
    layer = replace(layer, pipeline=pipeline)
    return doc.with_layer(index, layer), DomainEvent("pipeline/removeVca", layer_id=layer.id)


def _apply_reorder_vca(doc, change):
    index, layer = _resolve_layer(doc, change.payload)
    from_index = _resolve_vca(layer, change.payload, key="fromIndex")
    to_index = _field(change.payload, "toIndex", int)
    if not 0 <= to_index < len(layer.pipeline):
        _reject(RejectReason.INVALID_VALUE, f"toIndex {to_index} out of range")
    vca = layer.pipeline[from_index]
    rest = layer.pipeline[:from_index] + layer.pipeline[from_index + 1 :]
    pipeline = rest[:to_index] + (vca,) + rest[to_index:]
    layer = replace(layer, pipeline=pipeline)
    return doc.with_layer(index, layer), DomainEvent("pipeline/reorderVca", layer_id=layer.id)


def _apply_update_param(doc, change):
    payload = change.payload
    index, layer = _resolve_layer(doc, payload)
    vca_index = _resolve_vca(layer, payload)
    vca = layer.pipeline[vca_index]
    param = _field(payload, "param", str)
    value = payload.get("value")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _reject(RejectReason.MALFORMED_PAYLOAD, "value must be a number")
    merged = dict(vca.params)
    merged[param] = value
    try:
        params = validate_params(vca.effect, merged)
    except ValueError as e:
        _reject(RejectReason.INVALID_VALUE, str(e))
    layer = replace(
        layer,
        pipeline=layer.pipeline[:vca_index]
        + (replace(vca, params=params),)
        + layer.pipeline[vca_index + 1 :],
    )
    return doc.with_layer(index, layer), DomainEvent("pipeline/updateParam", layer_id=layer.id)


def _apply_set_enabled(doc, change):
    payload = change.payload
    index, layer = _resolve_layer(doc, payload)
    vca_index = _resolve_vca(layer, payload)
    enabled = payload.get("enabled")
    if not isinstance(enabled, bool):
        _reject(RejectReason.MALFORMED_PAYLOAD, "enabled must be a boolean")
    vca = replace(layer.pipeline[vca_index], enabled=enabled)
    layer = replace(
        layer,
        pipeline=layer.pipeline[:vca_index] + (vca,) + layer.pipeline[vca_index + 1 :],
    )
    return doc.with_layer(index, layer), DomainEvent("pipeline/setEnabled", layer_id=layer.id)


def _apply_undo(doc, change):
    index, layer = _resolve_layer(doc, change.payload)
    return (
        undo_stroke(doc, change.client_id, layer.id),
        DomainEvent("drawing/undoPath", layer_id=layer.id),
    )


def _apply_redo(doc, change):
    index, layer = _resolve_layer(doc, change.payload)
    return (
        redo_stroke(doc, change.client_id, layer.id),
        DomainEvent("drawing/redoPath", layer_id=layer.id),
    )


_APPLIERS = {
    ("layer", "add"): _apply_layer_add,
    ("layer", "delete"): _apply_layer_delete,
    ("layer", "reorder"): _apply_layer_reorder,
    ("layer", "updateProperty"): _apply_layer_update_property,
    ("layer", "lock"): lambda doc, change: _apply_lock(doc, change, True),
    ("layer", "unlock"): lambda doc, change: _apply_lock(doc, change, False),
    ("layer", "exclusiveLock"): _apply_exclusive_lock,
    ("layer", "exclusiveUnlock"): _apply_exclusive_unlock,
    ("drawing", "newPath"): _apply_new_path,
    ("drawing", "undoPath"): _apply_undo,
    ("drawing", "redoPath"): _apply_redo,
    ("pipeline", "addVca"): _apply_add_vca,
    ("pipeline", "removeVca"): _apply_remove_vca,
    ("pipeline", "reorderVca"): _apply_reorder_vca,
    ("pipeline", "updateParam"): _apply_update_param,
    ("pipeline", "setEnabled"): _apply_set_enabled,
}


def apply_change(
    doc: SessionDocument,
    change: ChangeMessage,
    leases: Optional[TransformLeaseTable] = None,
) -> tuple[SessionDocument, DomainEvent]:
    """Apply one mutation, returning the new document and what happened.

    Raises ChangeRejected (StaleTarget, PermissionDenied, InvalidValue,
    MalformedPayload, NothingToUndo/Redo) without touching the input.
    """
    applier = _APPLIERS.get((change.module, change.action))
    if applier is None:
        _reject(
            RejectReason.MALFORMED_PAYLOAD,
            f"{change.module}/{change.action} is not a document mutation",
        )
    targets_existing_layer = (change.module, change.action) != ("layer", "add")
    if targets_existing_layer and change.payload.get("layerId") is not None:
        layer_id = change.payload["layerId"]
        if not isinstance(layer_id, str):
            _reject(RejectReason.MALFORMED_PAYLOAD, "field 'layerId'")
        if doc.layer_index(layer_id) < 0:
            _reject(RejectReason.STALE_TARGET, f"layer {layer_id} no longer exists")
        denial = check_permission(doc, change, leases)
        if denial is not None:
            _reject(RejectReason.PERMISSION_DENIED, denial.reason)
    return applier(doc, change)
