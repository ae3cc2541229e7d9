from .types import (
    ChangeMessage,
    ChangeRejected,
    DocumentMeta,
    DomainEvent,
    ExclusiveLock,
    Layer,
    PathCommand,
    RejectReason,
    SequencedEvent,
    SessionDocument,
    Stroke,
    Transform2D,
    VcaInstance,
)
from .permissions import Denial, TransformLeaseTable, check_permission, LEASE_TTL_MS
from .reducer import apply_change, redo_stroke, undo_stroke
from .history import SequenceGap, VersionLog, append_log, replay, SNAPSHOT_INTERVAL
from .storage import (
    FormatError,
    UnsupportedVersion,
    canonical_json,
    canonical_json_bytes,
    document_canonical_bytes,
    document_from_dict,
    document_to_dict,
    load_document,
    load_document_dir,
    new_document,
    save_document,
    save_document_dir,
)

__all__ = [
    "ChangeMessage",
    "ChangeRejected",
    "Denial",
    "DocumentMeta",
    "DomainEvent",
    "ExclusiveLock",
    "FormatError",
    "Layer",
    "LEASE_TTL_MS",
    "PathCommand",
    "RejectReason",
    "SequenceGap",
    "SequencedEvent",
    "SessionDocument",
    "SNAPSHOT_INTERVAL",
    "Stroke",
    "Transform2D",
    "TransformLeaseTable",
    "UnsupportedVersion",
    "VcaInstance",
    "VersionLog",
    "append_log",
    "apply_change",
    "canonical_json",
    "canonical_json_bytes",
    "check_permission",
    "document_canonical_bytes",
    "document_from_dict",
    "document_to_dict",
    "load_document",
    "load_document_dir",
    "new_document",
    "redo_stroke",
    "replay",
    "save_document",
    "save_document_dir",
    "undo_stroke",
]
