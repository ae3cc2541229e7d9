"""Wire protocol: the module/message envelope, the closed action registry,
and bit-exact (de)serialization for every client<->server frame.

Frames are UTF-8 JSON text, one message per frame:

    {"module": "drawing", "message": {"newPath": {...payload...}}}

Named numeric payload fields travel as decimal strings ("width": "10") and
are accepted as either numbers or strings; coordinates inside path arrays
stay bare JSON numbers. Server broadcasts of accepted mutations reuse the
client's envelope plus injected top-level "seq" and "serverTime" fields;
presence and chat broadcasts carry neither.

Encoding is canonical (fixed key order, shortest round-trip decimals), so
encode(decode(frame)) is byte-stable and usable as a test oracle.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from typing import Any, Optional

from .document.storage import (
    FormatError,
    document_from_dict,
    document_to_dict,
)
from .document.types import ChangeMessage, PATH_ARITY, SequencedEvent, SessionDocument
from .effects import FILTER_SPECS, KNOWN_PARAM_NAMES

MAX_FRAME_BYTES = 1 << 20

_COLOR_RE = re.compile(r"^#[0-9a-fA-F]{6}$")
_INT_RE = re.compile(r"^-?\d+$")


class DecodeError(Exception):
    """kind is one of UnknownModule, UnknownAction, MissingField, BadValue."""

    def __init__(self, kind: str, field_path: str = "", detail: str = ""):
        msg = kind if not field_path else f"{kind}({field_path})"
        super().__init__(f"{msg}: {detail}" if detail else msg)
        self.kind = kind
        self.field = field_path
        self.detail = detail


def _missing(name):
    raise DecodeError("MissingField", name)


def _bad(name, detail=""):
    raise DecodeError("BadValue", name, detail)


@dataclass(frozen=True)
class WireMessage:
    module: str
    action: str
    payload: dict
    seq: Optional[int] = None
    server_time: Optional[int] = None


# ---------------------------------------------------------------------------
# field kinds

def _parse_number(value, path):
    if isinstance(value, bool):
        _bad(path, "expected a number")
    if isinstance(value, (int, float)):
        if isinstance(value, float) and not math.isfinite(value):
            _bad(path, "number must be finite")
        return value
    if isinstance(value, str):
        text = value.strip()
        if _INT_RE.match(text):
            return int(text)
        try:
            parsed = float(text)
        except ValueError:
            _bad(path, f"not a decimal number: {value!r}")
        if not math.isfinite(parsed):
            _bad(path, "number must be finite")
        return parsed
    _bad(path, "expected a number")


def _parse_int(value, path):
    number = _parse_number(value, path)
    if isinstance(number, float):
        if number != int(number):
            _bad(path, "expected an integer")
        number = int(number)
    return number


class Kind:
    """One payload field validator/normalizer pair."""

    def parse(self, value, path):
        raise NotImplementedError

    def emit(self, value):
        return value


class _Int(Kind):
    def __init__(self, minimum=None):
        self.minimum = minimum

    def parse(self, value, path):
        number = _parse_int(value, path)
        if self.minimum is not None and number < self.minimum:
            _bad(path, f"must be >= {self.minimum}")
        return number

    def emit(self, value):
        return _emit_number(value)


class _Number(Kind):
    def __init__(self, lo=None, hi=None, positive=False):
        self.lo = lo
        self.hi = hi
        self.positive = positive

    def parse(self, value, path):
        number = _parse_number(value, path)
        if self.positive and not number > 0:
            _bad(path, "must be > 0")
        if self.lo is not None and number < self.lo:
            _bad(path, f"must be >= {self.lo}")
        if self.hi is not None and number > self.hi:
            _bad(path, f"must be <= {self.hi}")
        return number

    def emit(self, value):
        return _emit_number(value)


class _Str(Kind):
    def __init__(self, choices=None, nullable=False):
        self.choices = choices
        self.nullable = nullable

    def parse(self, value, path):
        if value is None and self.nullable:
            return None
        if not isinstance(value, str):
            _bad(path, "expected a string")
        if self.choices is not None and value not in self.choices:
            _bad(path, f"must be one of {sorted(self.choices)}")
        return value


class _Bool(Kind):
    def parse(self, value, path):
        if not isinstance(value, bool):
            _bad(path, "expected a boolean")
        return value


class _Color(Kind):
    def parse(self, value, path):
        if not isinstance(value, str) or not _COLOR_RE.match(value):
            _bad(path, "expected #RRGGBB")
        return value


class _Path(Kind):
    def parse(self, value, path):
        if not isinstance(value, (list, tuple)) or not value:
            _bad(path, "expected a non-empty command list")
        commands = []
        for i, cmd in enumerate(value):
            here = f"{path}[{i}]"
            if not isinstance(cmd, (list, tuple)) or not cmd:
                _bad(here, "expected [kind, coords...]")
            kind = cmd[0]
            arity = PATH_ARITY.get(kind)
            if arity is None:
                _bad(here, f"unknown command kind {kind!r}")
            if len(cmd) - 1 != arity:
                _bad(here, f"{kind} takes {arity} coordinates")
            coords = tuple(_parse_number(c, here) for c in cmd[1:])
            commands.append((kind, *coords))
        if commands[0][0] != "M":
            _bad(f"{path}[0]", "path must begin with a move-to")
        return tuple(commands)

    def emit(self, value):
        return [list(cmd) for cmd in value]


class _Transform(Kind):
    FIELDS = ("tx", "ty", "rotation", "scaleX", "scaleY")

    def parse(self, value, path):
        if not isinstance(value, dict):
            _bad(path, "expected a transform object")
        out = {}
        for name in self.FIELDS:
            if name not in value:
                _missing(f"{path}.{name}")
            out[name] = _parse_number(value[name], f"{path}.{name}")
        for extra in value:
            if extra not in self.FIELDS:
                _bad(f"{path}.{extra}", "unknown transform field")
        return out

    def emit(self, value):
        return {name: _emit_number(value[name]) for name in self.FIELDS}


class _Params(Kind):
    def parse(self, value, path):
        if not isinstance(value, dict):
            _bad(path, "expected a parameter map")
        out = {}
        for name, raw in value.items():
            if name not in KNOWN_PARAM_NAMES:
                _bad(f"params.{name}", "unknown effect parameter")
            out[name] = _parse_number(raw, f"params.{name}")
        return out

    def emit(self, value):
        return {name: _emit_number(v) for name, v in value.items()}


class _Document(Kind):
    def parse(self, value, path):
        if isinstance(value, SessionDocument):
            return value
        try:
            return document_from_dict(value, path)
        except FormatError as e:
            _bad(e.path, e.reason)

    def emit(self, value):
        return document_to_dict(value)


class _Sessions(Kind):
    def parse(self, value, path):
        if not isinstance(value, (list, tuple)):
            _bad(path, "expected a list")
        out = []
        for i, item in enumerate(value):
            here = f"{path}[{i}]"
            if not isinstance(item, dict):
                _bad(here, "expected an object")
            for req in ("sessionId", "name", "activeClients"):
                if req not in item:
                    _missing(f"{here}.{req}")
            if not isinstance(item["sessionId"], str) or not isinstance(item["name"], str):
                _bad(here, "sessionId and name must be strings")
            out.append(
                {
                    "sessionId": item["sessionId"],
                    "name": item["name"],
                    "activeClients": _parse_int(item["activeClients"], f"{here}.activeClients"),
                }
            )
        return tuple(out)

    def emit(self, value):
        return [
            {
                "sessionId": s["sessionId"],
                "name": s["name"],
                "activeClients": _emit_number(s["activeClients"]),
            }
            for s in value
        ]


class _Entries(Kind):
    def parse(self, value, path):
        if not isinstance(value, (list, tuple)):
            _bad(path, "expected a list")
        out = []
        for i, item in enumerate(value):
            here = f"{path}[{i}]"
            if isinstance(item, SequencedEvent):
                out.append(item)
                continue
            if not isinstance(item, dict):
                _bad(here, "expected an object")
            for req in ("seq", "change"):
                if req not in item:
                    _missing(f"{here}.{req}")
            out.append(_event_from_dict(item, here))
        return tuple(out)

    def emit(self, value):
        return [_event_to_dict(ev) for ev in value]


INT = _Int()
NONNEG_INT = _Int(minimum=0)
NUMBER = _Number()
POS_NUMBER = _Number(positive=True)
UNIT_NUMBER = _Number(lo=0, hi=1)
STRING = _Str()
NULLABLE_STRING = _Str(nullable=True)
BOOL = _Bool()
COLOR = _Color()
PATH = _Path()
TRANSFORM = _Transform()
PARAMS = _Params()
DOCUMENT = _Document()
SESSIONS = _Sessions()
ENTRIES = _Entries()


def _emit_number(value):
    """Decimal-string form: shortest text that round-trips the value."""
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


# ---------------------------------------------------------------------------
# the action registry

@dataclass(frozen=True)
class ActionSchema:
    module: str
    action: str
    fields: tuple  # (name, Kind, required)
    post: Any = None  # optional extra validator: fn(payload) -> payload

    def field_names(self):
        return tuple(name for name, _, _ in self.fields)


def _validate_update_property(payload):
    prop = payload["property"]
    value = payload.get("value")
    if value is None and "value" not in payload:
        _missing("value")
    if prop == "visibility":
        payload["value"] = BOOL.parse(value, "visibility")
    elif prop == "opacity":
        number = _parse_number(value, "opacity")
        if not 0 <= number <= 1:
            _bad("opacity", "must lie in [0, 1]")
        payload["value"] = number
    elif prop == "name":
        payload["value"] = STRING.parse(value, "name")
    elif prop == "transform":
        payload["value"] = TRANSFORM.parse(value, "transform")
    return payload


def _emit_update_property_value(payload):
    prop = payload["property"]
    value = payload["value"]
    if prop == "opacity":
        return _emit_number(value)
    if prop == "transform":
        return TRANSFORM.emit(value)
    return value


def _validate_add_vca(payload):
    effect = payload["effect"]
    params = payload.get("params", {})
    spec = FILTER_SPECS[effect].param
    for name, value in params.items():
        if name != spec.name:
            _bad(f"params.{name}", f"not a parameter of {effect}")
        if spec.integer and float(value) != int(value):
            _bad(f"params.{name}", "must be an integer")
        if not spec.lo <= value <= spec.hi:
            _bad(f"params.{name}", f"must lie in [{spec.lo}, {spec.hi}]")
    return payload


def _validate_update_param(payload):
    name = payload["param"]
    value = payload["value"]
    for spec in FILTER_SPECS.values():
        if spec.param.name == name:
            p = spec.param
            if p.integer and float(value) != int(value):
                _bad("value", "must be an integer")
            if not p.lo <= value <= p.hi:
                _bad("value", f"must lie in [{p.lo}, {p.hi}]")
            if p.integer:
                payload["value"] = int(value)
            return payload
    _bad(f"params.{name}", "unknown effect parameter")


_CHANGE_COMMON = (("timeStamp", INT, True), ("clientId", STRING, True))


def _schema(module, action, *fields, post=None):
    return ActionSchema(module, action, fields, post)


_SCHEMAS = [
    _schema("session", "list"),
    _schema(
        "session",
        "join",
        ("sessionId", STRING, True),
        ("clientId", STRING, False),
        ("username", STRING, False),
    ),
    _schema("session", "joined", ("sessionId", STRING, True), ("clientId", STRING, True)),
    _schema("session", "overview", ("sessions", SESSIONS, True)),
    _schema("session", "identity", ("clientId", STRING, True), ("color", COLOR, True)),
    _schema("session", "snapshot", ("seq", NONNEG_INT, True), ("document", DOCUMENT, True)),
    _schema(
        "session",
        "clientJoined",
        ("clientId", STRING, True),
        ("color", COLOR, True),
        ("username", STRING, False),
    ),
    _schema("session", "clientLeft", ("clientId", STRING, True)),
    _schema(
        "session",
        "rejected",
        ("reason", STRING, True),
        ("refTimeStamp", INT, False),
        ("detail", STRING, False),
    ),
    _schema(
        "drawing",
        "newPath",
        *_CHANGE_COMMON,
        ("color", COLOR, True),
        ("width", POS_NUMBER, True),
        ("path", PATH, True),
        ("layerId", STRING, False),
        ("strokeId", STRING, False),
    ),
    _schema("drawing", "undoPath", *_CHANGE_COMMON, ("layerId", STRING, True)),
    _schema("drawing", "redoPath", *_CHANGE_COMMON, ("layerId", STRING, True)),
    _schema(
        "layer",
        "add",
        *_CHANGE_COMMON,
        ("name", STRING, False),
        ("layerId", STRING, False),
    ),
    _schema("layer", "delete", *_CHANGE_COMMON, ("layerId", STRING, True)),
    _schema(
        "layer",
        "reorder",
        *_CHANGE_COMMON,
        ("layerId", STRING, True),
        ("toIndex", NONNEG_INT, True),
    ),
    _schema(
        "layer",
        "updateProperty",
        *_CHANGE_COMMON,
        ("layerId", STRING, True),
        ("property", _Str(choices={"visibility", "opacity", "name", "transform"}), True),
        ("value", None, True),
        post=_validate_update_property,
    ),
    _schema("layer", "lock", *_CHANGE_COMMON, ("layerId", STRING, True)),
    _schema("layer", "unlock", *_CHANGE_COMMON, ("layerId", STRING, True)),
    _schema("layer", "exclusiveLock", *_CHANGE_COMMON, ("layerId", STRING, True)),
    _schema("layer", "exclusiveUnlock", *_CHANGE_COMMON, ("layerId", STRING, True)),
    _schema(
        "layer",
        "exclusiveUnlockNotice",
        ("layerId", STRING, True),
        ("byClientId", STRING, True),
        ("ownerClientId", STRING, True),
        ("timeStamp", INT, True),
    ),
    _schema(
        "pipeline",
        "addVca",
        *_CHANGE_COMMON,
        ("layerId", STRING, True),
        ("effect", _Str(choices=set(FILTER_SPECS)), True),
        ("params", PARAMS, False),
        ("enabled", BOOL, False),
        post=_validate_add_vca,
    ),
    _schema(
        "pipeline",
        "removeVca",
        *_CHANGE_COMMON,
        ("layerId", STRING, True),
        ("index", NONNEG_INT, True),
    ),
    _schema(
        "pipeline",
        "reorderVca",
        *_CHANGE_COMMON,
        ("layerId", STRING, True),
        ("fromIndex", NONNEG_INT, True),
        ("toIndex", NONNEG_INT, True),
    ),
    _schema(
        "pipeline",
        "updateParam",
        *_CHANGE_COMMON,
        ("layerId", STRING, True),
        ("index", NONNEG_INT, True),
        ("param", STRING, True),
        ("value", NUMBER, True),
        post=_validate_update_param,
    ),
    _schema(
        "pipeline",
        "setEnabled",
        *_CHANGE_COMMON,
        ("layerId", STRING, True),
        ("index", NONNEG_INT, True),
        ("enabled", BOOL, True),
    ),
    _schema("presence", "cursor", ("clientId", STRING, True), ("x", NUMBER, True), ("y", NUMBER, True)),
    _schema("presence", "selectLayer", ("clientId", STRING, True), ("layerId", NULLABLE_STRING, True)),
    _schema(
        "presence",
        "selectVca",
        ("clientId", STRING, True),
        ("layerId", NULLABLE_STRING, False),
        ("index", _Int(minimum=0), False),
    ),
    _schema("presence", "selectTool", ("clientId", STRING, True), ("tool", STRING, True)),
    _schema("chat", "post", ("clientId", STRING, True), ("timeStamp", INT, True), ("text", STRING, True)),
    _schema(
        "chat",
        "posted",
        ("clientId", STRING, True),
        ("timeStamp", INT, True),
        ("text", STRING, True),
        ("color", COLOR, False),
        ("username", STRING, False),
    ),
    _schema("history", "list", ("fromSeq", NONNEG_INT, False), ("toSeq", NONNEG_INT, False)),
    _schema("history", "entries", ("entries", ENTRIES, True)),
]

REGISTRY: dict[tuple[str, str], ActionSchema] = {(s.module, s.action): s for s in _SCHEMAS}
MODULES = {module for module, _ in REGISTRY}

# Document mutations: everything the reducer applies and the changelog
# records. Notices and ephemeral traffic are excluded.
CHANGE_ACTIONS = frozenset(
    key
    for key in REGISTRY
    if key[0] in ("drawing", "pipeline") or (key[0] == "layer" and key[1] != "exclusiveUnlockNotice")
)


def is_change(module: str, action: str) -> bool:
    return (module, action) in CHANGE_ACTIONS


# ---------------------------------------------------------------------------
# validate / decode / encode

def validate_payload(module: str, action: str, payload) -> dict:
    """Normalize and type-check one action payload.

    Numeric strings become numbers, path commands become tuples; unknown
    and missing fields raise DecodeError with the offending field path.
    """
    schema = REGISTRY.get((module, action))
    if schema is None:
        if module not in MODULES:
            raise DecodeError("UnknownModule", module)
        raise DecodeError("UnknownAction", f"{module}/{action}")
    if not isinstance(payload, dict):
        _bad("message", "payload must be an object")
    known = schema.field_names()
    for name in payload:
        if name not in known:
            _bad(name, "unknown field")
    out = {}
    for name, kind, required in schema.fields:
        if name not in payload:
            if required:
                _missing(name)
            continue
        value = payload[name]
        out[name] = kind.parse(value, name) if kind is not None else value
    if schema.post is not None:
        out = schema.post(out)
    return out


def decode_message(data: bytes | str) -> WireMessage:
    """Parse one frame into a validated, typed message.

    Raises DecodeError for any malformed input; never crashes on
    arbitrary bytes (frames over 1 MiB are rejected outright).
    """
    if isinstance(data, str):
        raw = data.encode("utf-8", errors="surrogatepass")
    else:
        raw = data
    if len(raw) > MAX_FRAME_BYTES:
        _bad("frame", "frame exceeds 1 MiB")
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError:
        _bad("frame", "not valid UTF-8")
    try:
        envelope = json.loads(text)
    except ValueError as e:
        _bad("frame", f"invalid JSON: {e}")
    if not isinstance(envelope, dict):
        _bad("frame", "envelope must be an object")
    if "module" not in envelope:
        _missing("module")
    module = envelope["module"]
    if not isinstance(module, str) or module not in MODULES:
        raise DecodeError("UnknownModule", str(module))
    if "message" not in envelope:
        _missing("message")
    message = envelope["message"]
    if not isinstance(message, dict) or len(message) != 1:
        _bad("message", "expected exactly one action key")
    for key in envelope:
        if key not in ("module", "message", "seq", "serverTime"):
            _bad(key, "unknown envelope field")
    (action, payload), = message.items()
    if (module, action) not in REGISTRY:
        raise DecodeError("UnknownAction", f"{module}/{action}")
    seq = _parse_int(envelope["seq"], "seq") if "seq" in envelope else None
    server_time = _parse_int(envelope["serverTime"], "serverTime") if "serverTime" in envelope else None
    return WireMessage(
        module=module,
        action=action,
        payload=validate_payload(module, action, payload),
        seq=seq,
        server_time=server_time,
    )


def _emit_payload(schema: ActionSchema, payload: dict) -> dict:
    out = {}
    for name, kind, _required in schema.fields:
        if name not in payload:
            continue
        value = payload[name]
        if schema.action == "updateProperty" and name == "value":
            out[name] = _emit_update_property_value(payload)
        elif kind is None:
            out[name] = value
        else:
            out[name] = kind.emit(value)
    return out


def encode_message(msg: WireMessage) -> str:
    """Canonical single-line frame; decode(encode(m)) == m for every
    registry message."""
    payload = validate_payload(msg.module, msg.action, msg.payload)
    schema = REGISTRY[(msg.module, msg.action)]
    envelope: dict[str, Any] = {
        "module": msg.module,
        "message": {msg.action: _emit_payload(schema, payload)},
    }
    if msg.seq is not None:
        envelope["seq"] = _emit_number(msg.seq)
    if msg.server_time is not None:
        envelope["serverTime"] = _emit_number(msg.server_time)
    return json.dumps(envelope, separators=(",", ":"), ensure_ascii=False, allow_nan=False)


# ---------------------------------------------------------------------------
# change/event helpers shared by server, client, changelog

def change_from_wire(msg: WireMessage) -> ChangeMessage:
    if not is_change(msg.module, msg.action):
        raise DecodeError("UnknownAction", f"{msg.module}/{msg.action}", "not a document mutation")
    payload = msg.payload
    if "clientId" not in payload:
        _missing("clientId")
    if "timeStamp" not in payload:
        _missing("timeStamp")
    return ChangeMessage(
        module=msg.module,
        action=msg.action,
        payload=payload,
        client_id=payload["clientId"],
        time_stamp=payload["timeStamp"],
    )


def wire_from_change(change: ChangeMessage, seq=None, server_time=None) -> WireMessage:
    return WireMessage(
        module=change.module,
        action=change.action,
        payload=dict(change.payload),
        seq=seq,
        server_time=server_time,
    )


def _event_to_dict(event: SequencedEvent) -> dict:
    schema = REGISTRY[(event.change.module, event.change.action)]
    return {
        "seq": _emit_number(event.seq),
        "change": {
            "module": event.change.module,
            "action": event.change.action,
            "payload": _emit_payload(schema, dict(event.change.payload)),
        },
    }


def _event_from_dict(data, path) -> SequencedEvent:
    seq = _parse_int(data["seq"], f"{path}.seq")
    change = data["change"]
    if not isinstance(change, dict):
        _bad(f"{path}.change", "expected an object")
    for req in ("module", "action", "payload"):
        if req not in change:
            _missing(f"{path}.change.{req}")
    module, action = change["module"], change["action"]
    if not isinstance(module, str) or module not in MODULES:
        raise DecodeError("UnknownModule", str(module))
    if not isinstance(action, str) or (module, action) not in REGISTRY:
        raise DecodeError("UnknownAction", f"{module}/{action}")
    if not is_change(module, action):
        _bad(f"{path}.change", "not a document mutation")
    payload = validate_payload(module, action, change["payload"])
    wire = WireMessage(module=module, action=action, payload=payload)
    return SequencedEvent(seq=seq, change=change_from_wire(wire))


def encode_changelog_line(event: SequencedEvent) -> str:
    return json.dumps(_event_to_dict(event), separators=(",", ":"), ensure_ascii=False)


def decode_changelog_line(line: str, lineno: int = 0) -> SequencedEvent:
    try:
        data = json.loads(line)
    except ValueError as e:
        _bad(f"changelog[{lineno}]", f"invalid JSON: {e}")
    if not isinstance(data, dict) or "seq" not in data or "change" not in data:
        _bad(f"changelog[{lineno}]", "expected {seq, change}")
    return _event_from_dict(data, f"changelog[{lineno}]")
