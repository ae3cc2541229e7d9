"""Lock arbitration for document mutations.

Three mechanisms restrict who may touch a layer:
  - plain lock: freezes layer content for everyone until unlocked;
  - exclusive lock: freezes the layer for everyone but its owner, and only
    an explicit exclusive-unlock (by anyone) releases it;
  - transform lease: a short-lived implicit hold while one client drags a
    layer, so two clients never fight over the same handles.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from .types import ChangeMessage, SessionDocument

LEASE_TTL_MS = 30_000

# Actions that only toggle lock state; the plain-lock rule does not apply
# to them (you must be able to unlock a locked layer).
LOCK_ACTIONS = {"lock", "unlock", "exclusiveLock", "exclusiveUnlock"}


@dataclass(frozen=True)
class Denial:
    reason: str  # "ExclusiveLock" | "Locked" | "TransformLease"
    detail: str = ""


class TransformLeaseTable:
    """layer id -> (holder, expiry). Expired leases read as absent."""

    def __init__(self, clock: Optional[Callable[[], int]] = None):
        self._clock = clock or (lambda: 0)
        self._leases: dict[str, tuple[str, int]] = {}

    def holder(self, layer_id: str) -> Optional[str]:
        lease = self._leases.get(layer_id)
        if lease is None:
            return None
        client_id, expires_at = lease
        if expires_at <= self._clock():
            del self._leases[layer_id]
            return None
        return client_id

    def acquire(self, layer_id: str, client_id: str, ttl_ms: int = LEASE_TTL_MS) -> bool:
        current = self.holder(layer_id)
        if current is not None and current != client_id:
            return False
        self._leases[layer_id] = (client_id, self._clock() + ttl_ms)
        return True

    def release(self, layer_id: str, client_id: str) -> None:
        lease = self._leases.get(layer_id)
        if lease and lease[0] == client_id:
            del self._leases[layer_id]

    def release_all(self, client_id: str) -> list[str]:
        released = [lid for lid, (cid, _) in self._leases.items() if cid == client_id]
        for lid in released:
            del self._leases[lid]
        return released

    def snapshot(self) -> dict[str, str]:
        return {lid: cid for lid in list(self._leases) for cid in [self.holder(lid)] if cid}


def target_layer_id(change: ChangeMessage) -> Optional[str]:
    layer_id = change.payload.get("layerId")
    return layer_id if isinstance(layer_id, str) else None


def is_transform_update(change: ChangeMessage) -> bool:
    return (
        change.module == "layer"
        and change.action == "updateProperty"
        and change.payload.get("property") == "transform"
    )


def check_permission(
    doc: SessionDocument,
    change: ChangeMessage,
    leases: Optional[TransformLeaseTable] = None,
) -> Optional[Denial]:
    """None when the change may proceed, a Denial otherwise.

    The caller resolves stale targets first; a change whose layer is gone
    never reaches this check. Total over valid inputs.
    """
    layer_id = target_layer_id(change)
    if layer_id is None:
        return None  # document-level change (e.g. layer/add): nothing to arbitrate
    layer = doc.get_layer(layer_id)
    if layer is None:
        return None

    lock = layer.exclusive_lock
    if lock is not None and lock.owner != change.client_id and change.action != "exclusiveUnlock":
        return Denial("ExclusiveLock", f"layer {layer_id} is exclusively locked by {lock.owner}")

    if layer.locked and change.action not in LOCK_ACTIONS:
        return Denial("Locked", f"layer {layer_id} is locked")

    if leases is not None and is_transform_update(change):
        holder = leases.holder(layer_id)
        if holder is not None and holder != change.client_id:
            return Denial("TransformLease", f"layer {layer_id} is being transformed by {holder}")

    return None
