import pytest

from conftest import RandomChanges, add_layer, change

from coraster.document import (
    ChangeRejected,
    SequenceGap,
    SequencedEvent,
    VersionLog,
    append_log,
    apply_change,
    document_canonical_bytes,
    new_document,
    replay,
)


def _run(seed, length, initial, interval=100):
    """Drive a random accepted-change stream through doc + log in lockstep."""
    gen = RandomChanges(seed)
    doc = initial
    log = VersionLog(snapshot_interval=interval)
    while log.head < length:
        c = gen.next_change(doc)
        try:
            doc, _ = apply_change(doc, c)
        except ChangeRejected:
            continue
        append_log(log, SequencedEvent(seq=log.head + 1, change=c), doc)
    return doc, log


class TestAppendLog:
    def test_first_event_no_snapshot(self, empty_doc):
        log = VersionLog()
        doc = add_layer(empty_doc, "L0")
        c = change("layer", "add", layerId="L0")
        append_log(log, SequencedEvent(seq=1, change=c), doc)
        assert log.head == 1
        assert log.snapshots == {}

    def test_snapshot_on_interval_boundary(self, empty_doc):
        doc, log = _run(seed=3, length=100, initial=empty_doc)
        assert set(log.snapshots) == {100}
        assert document_canonical_bytes(log.snapshots[100]) == document_canonical_bytes(doc)

    def test_gap_rejected(self, empty_doc):
        doc, log = _run(seed=4, length=5, initial=empty_doc)
        c = change("layer", "add", layerId="Lx")
        with pytest.raises(SequenceGap):
            append_log(log, SequencedEvent(seq=7, change=c), doc)


class TestReplay:
    def test_replay_zero_returns_initial(self, empty_doc):
        _, log = _run(seed=5, length=10, initial=empty_doc)
        out = replay(log, empty_doc, 0)
        assert document_canonical_bytes(out) == document_canonical_bytes(empty_doc)

    def test_replay_head_matches_live(self, empty_doc):
        doc, log = _run(seed=6, length=120, initial=empty_doc)
        out = replay(log, empty_doc, log.head)
        assert document_canonical_bytes(out) == document_canonical_bytes(doc)

    def test_replay_from_snapshot_equals_from_scratch(self, empty_doc):
        doc, log = _run(seed=7, length=150, initial=empty_doc)
        assert set(log.snapshots) == {100}
        via_snapshot = replay(log, empty_doc, 150)
        bare = VersionLog(entries=log.entries, snapshots={}, snapshot_interval=100)
        from_scratch = replay(bare, empty_doc, 150)
        assert document_canonical_bytes(via_snapshot) == document_canonical_bytes(from_scratch)
        assert document_canonical_bytes(via_snapshot) == document_canonical_bytes(doc)

    def test_replay_beyond_head_rejected(self, empty_doc):
        _, log = _run(seed=8, length=3, initial=empty_doc)
        with pytest.raises(SequenceGap):
            replay(log, empty_doc, 4)


def test_replay_equivalence_randomized():
    """fold(apply_change) == replay(log) across >= 1000 random runs."""
    initial = new_document("prop", 64, 64, created_at=0)
    checked = 0
    for seed in range(1000):
        gen = RandomChanges(seed)
        doc = initial
        log = VersionLog(snapshot_interval=10)
        for _ in range(12):
            c = gen.next_change(doc)
            try:
                doc, _ = apply_change(doc, c)
            except ChangeRejected:
                continue
            append_log(log, SequencedEvent(seq=log.head + 1, change=c), doc)
        replayed = replay(log, initial, log.head)
        assert document_canonical_bytes(replayed) == document_canonical_bytes(doc)
        checked += 1
    assert checked == 1000
