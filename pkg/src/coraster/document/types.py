"""Immutable document model for a collaborative editing session.

A session document is project metadata plus an ordered array of layers
(index 0 is bottom-most). All values are frozen; the reducer produces new
documents with structural sharing, which makes snapshots safe to hand to
renderers and broadcast fan-out without copying.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Mapping, Optional

MIN_SCALE = 1e-3


def normalize_rotation(degrees: float):
    """Map any angle to [0, 360). Integer inputs stay integers when exact."""
    r = degrees % 360
    if r == 360:  # guards float wraparound like (-1e-13 % 360) == 360.0
        r = 0 * degrees
    return r


def clamp_scale(value: float):
    return value if value >= MIN_SCALE else MIN_SCALE


@dataclass(frozen=True, slots=True)
class Transform2D:
    """Layer placement: translation of the layer center in canvas pixels,
    counter-clockwise rotation in degrees about the center, and per-axis
    scale factors (always >= MIN_SCALE)."""

    tx: float = 0
    ty: float = 0
    rotation: float = 0
    scale_x: float = 1
    scale_y: float = 1

    @staticmethod
    def normalized(tx=0, ty=0, rotation=0, scale_x=1, scale_y=1) -> "Transform2D":
        return Transform2D(
            tx=tx,
            ty=ty,
            rotation=normalize_rotation(rotation),
            scale_x=clamp_scale(scale_x),
            scale_y=clamp_scale(scale_y),
        )

    def is_identity(self) -> bool:
        return (
            self.tx == 0
            and self.ty == 0
            and self.rotation == 0
            and self.scale_x == 1
            and self.scale_y == 1
        )


@dataclass(frozen=True, slots=True)
class PathCommand:
    """One segment of a stroke path: M/L carry (x, y), Q carries
    (cx, cy, x, y) in layer-local pixels."""

    kind: str
    coords: tuple

    def end_point(self) -> tuple:
        return (self.coords[-2], self.coords[-1])


PATH_ARITY = {"M": 2, "L": 2, "Q": 4}


@dataclass(frozen=True, slots=True)
class Stroke:
    stroke_id: str
    client_id: str
    time_stamp: int
    color: str
    width: float
    path: tuple[PathCommand, ...]
    undone: bool = False


@dataclass(frozen=True, slots=True)
class VcaInstance:
    """One effect stage in a layer's pipeline."""

    effect: str
    enabled: bool = True
    params: Mapping[str, float] = field(default_factory=dict)


@dataclass(frozen=True, slots=True)
class ExclusiveLock:
    owner: str
    since: int  # UTC milliseconds


@dataclass(frozen=True, slots=True)
class Layer:
    id: str
    name: str = ""
    visible: bool = True
    locked: bool = False
    exclusive_lock: Optional[ExclusiveLock] = None
    transform: Transform2D = Transform2D()
    opacity: float = 1.0
    asset: Optional[str] = None
    strokes: tuple[Stroke, ...] = ()
    pipeline: tuple[VcaInstance, ...] = ()


@dataclass(frozen=True, slots=True)
class DocumentMeta:
    name: str
    created_at: int
    version: int = 1
    width: int = 800
    height: int = 600


@dataclass(frozen=True, slots=True)
class SessionDocument:
    meta: DocumentMeta
    layers: tuple[Layer, ...] = ()

    def layer_index(self, layer_id: str) -> int:
        """Index of a layer, or -1 when it does not exist (anymore)."""
        for i, layer in enumerate(self.layers):
            if layer.id == layer_id:
                return i
        return -1

    def get_layer(self, layer_id: str) -> Optional[Layer]:
        i = self.layer_index(layer_id)
        return self.layers[i] if i >= 0 else None

    def with_layer(self, index: int, layer: Layer) -> "SessionDocument":
        layers = self.layers[:index] + (layer,) + self.layers[index + 1 :]
        return replace(self, layers=layers)


@dataclass(frozen=True, slots=True)
class ChangeMessage:
    """One client-initiated document mutation, already decoded and
    payload-validated. ``client_id`` and ``time_stamp`` mirror the payload
    fields of the wire envelope."""

    module: str
    action: str
    payload: Mapping
    client_id: str
    time_stamp: int


@dataclass(frozen=True, slots=True)
class SequencedEvent:
    """A server-accepted change plus its position in the session's total
    order; the unit of broadcast, changelog, and replay."""

    seq: int
    change: ChangeMessage


class RejectReason(str, Enum):
    STALE_TARGET = "StaleTarget"
    PERMISSION_DENIED = "PermissionDenied"
    INVALID_VALUE = "InvalidValue"
    MALFORMED_PAYLOAD = "MalformedPayload"
    NOTHING_TO_UNDO = "NothingToUndo"
    NOTHING_TO_REDO = "NothingToRedo"
    UNKNOWN_SESSION = "UnknownSession"


class ChangeRejected(Exception):
    """A change the reducer refused; the document is unchanged."""

    def __init__(self, reason: RejectReason, detail: str = ""):
        super().__init__(f"{reason.value}: {detail}" if detail else reason.value)
        self.reason = reason
        self.detail = detail


@dataclass(frozen=True, slots=True)
class DomainEvent:
    """Description of an applied mutation, for observers and notifications.

    ``notify_owner`` is set when a client released another client's
    exclusive lock; the former owner must be told who did it.
    """

    action: str
    layer_id: Optional[str] = None
    notify_owner: Optional[str] = None
