"""Version log: the gap-free sequence of accepted changes plus periodic
snapshots, so any past document state can be reproduced by bounded replay.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .reducer import apply_change
from .types import ChangeRejected, SequencedEvent, SessionDocument

SNAPSHOT_INTERVAL = 100


class SequenceGap(Exception):
    pass


@dataclass
class VersionLog:
    entries: list[SequencedEvent] = field(default_factory=list)
    snapshots: dict[int, SessionDocument] = field(default_factory=dict)
    snapshot_interval: int = SNAPSHOT_INTERVAL

    @property
    def head(self) -> int:
        return self.entries[-1].seq if self.entries else 0


def append_log(log: VersionLog, event: SequencedEvent, doc_after: SessionDocument) -> VersionLog:
    """Append the next event; snapshot the resulting document on interval
    boundaries. Mutates and returns the log."""
    if event.seq != log.head + 1:
        raise SequenceGap(f"expected seq {log.head + 1}, got {event.seq}")
    log.entries.append(event)
    if event.seq % log.snapshot_interval == 0:
        log.snapshots[event.seq] = doc_after
    return log


def replay(log: VersionLog, initial: SessionDocument, upto: int) -> SessionDocument:
    """Document state as of sequence number ``upto``.

    Starts from the nearest prior snapshot and re-applies events through
    the reducer; every logged event was accepted once, so replay must
    accept it again or the log is corrupt.
    """
    if upto < 0 or upto > log.head:
        raise SequenceGap(f"seq {upto} is not in the log (head {log.head})")
    doc = initial
    start = 0
    for seq in sorted(log.snapshots):
        if start < seq <= upto:
            start = seq
    if start:
        doc = log.snapshots[start]
    for event in log.entries[start:upto]:
        try:
            doc, _ = apply_change(doc, event.change)
        except ChangeRejected as e:
            raise SequenceGap(f"logged event seq {event.seq} no longer applies: {e}") from e
    return doc


def verify_contiguous(entries: list[SequencedEvent]) -> None:
    for i, event in enumerate(entries, start=1):
        if event.seq != i:
            raise SequenceGap(f"changelog entry {i} carries seq {event.seq}")
