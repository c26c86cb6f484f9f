"""Persistence contracts: round trips, lifecycle, query/brute-force equality."""

from __future__ import annotations

import hashlib

import numpy as np
import pytest

from polidigest.errors import (
    ChecksumMismatch,
    DuplicateModel,
    ForeignKeyViolation,
    IllegalTransition,
    UnknownModel,
)
from polidigest.ingest import Document, PersonRef, Platform, compute_doc_id
from polidigest.store import (
    ModelRecord,
    ParagraphTheta,
    Store,
    StoredEntry,
    decode_theta,
    encode_theta,
)

JANE = PersonRef(id="jane-doe", display_name="Jane Doe", party="Greens")
BOB = PersonRef(id="bob-roe", display_name="Bob Roe", party="Centre")


def make_document(text="some words here", person=JANE, platform=Platform.SOCIAL,
                  timestamp="2024-01-15T09:00:00Z", url="https://x/1"):
    return Document(
        doc_id=compute_doc_id(person.id, platform.value, url, text),
        person=person, party=person.party, platform=platform,
        timestamp=timestamp, source_url=url, text=text,
        ingest_time="2024-06-01T00:00:00Z",
        metadata={"source_id": "s1", "external_id": "e1"},
    )


def register_model(store: Store, tmp_path, model_id="m1", backend="lda", k=4,
                   content=b"artifact-bytes\n"):
    artifact = tmp_path / f"{model_id}.model"
    artifact.write_bytes(content)
    store.register_model(ModelRecord(
        model_id=model_id, backend=backend, created_at="2024-06-01T00:00:00Z",
        config={"k": k}, vocab_version="v1", artifact_path=str(artifact)))
    return artifact


def make_entry(doc_id, model_id="m1", theta=(0.25, 0.25, 0.25, 0.25), tokens=10,
               status="active"):
    return StoredEntry(
        doc_id=doc_id, person_id="", party="", platform="", timestamp="",
        source_url="", model_id=model_id, theta=np.asarray(theta, dtype=float),
        token_count=tokens, paragraph_count=1, status=status)


class TestThetaEncoding:
    def test_lossless_round_trip_random_doubles(self):
        rng = np.random.default_rng(51)
        for _ in range(200):
            theta = rng.dirichlet(np.ones(int(rng.integers(1, 30))))
            decoded = decode_theta(encode_theta(theta))
            assert np.array_equal(decoded, theta)  # bitwise

    def test_extreme_values(self):
        theta = np.array([1e-300, 1.0 - 1e-16, 5e-324])
        assert np.array_equal(decode_theta(encode_theta(theta)), theta)


class TestDocuments:
    def test_put_get_round_trip(self, tmp_path):
        with Store(tmp_path / "s.db") as store:
            doc = make_document()
            store.put_document(doc)
            loaded, status = store.get_document(doc.doc_id)
            assert status == "active"
            assert loaded == doc

    def test_put_twice_single_record(self, tmp_path):
        with Store(tmp_path / "s.db") as store:
            doc = make_document()
            store.put_document(doc)
            store.put_document(doc)
            assert store.count_documents() == 1

    def test_thousand_inserts(self, tmp_path):
        with Store(tmp_path / "s.db") as store:
            for i in range(1000):
                store.put_document(make_document(text=f"unique words {i}"))
            assert store.count_documents() == 1000

    def test_quarantined_not_listed_as_active(self, tmp_path):
        with Store(tmp_path / "s.db") as store:
            store.put_document(make_document(text="good words"))
            store.put_document(make_document(text="held words"), status="quarantined")
            assert len(store.list_documents(status="active")) == 1
            assert len(store.list_documents(status="quarantined")) == 1

    def test_seen_ledger(self, tmp_path):
        with Store(tmp_path / "s.db") as store:
            assert store.seen_external_ids("s1") == set()
            store.mark_seen("s1", "e1", "d" * 64)
            store.mark_seen("s1", "e2", "d" * 64)
            store.mark_seen("s2", "e1", "d" * 64)
            assert store.seen_external_ids("s1") == {"e1", "e2"}


class TestEntries:
    def test_unknown_model_rejected(self, tmp_path):
        with Store(tmp_path / "s.db") as store:
            doc = make_document()
            store.put_document(doc)
            with pytest.raises(ForeignKeyViolation):
                store.put_entry(make_entry(doc.doc_id, model_id="ghost"))

    def test_unknown_document_rejected(self, tmp_path):
        with Store(tmp_path / "s.db") as store:
            register_model(store, tmp_path)
            with pytest.raises(ForeignKeyViolation):
                store.put_entry(make_entry("f" * 64))

    def test_upsert_replaces_theta(self, tmp_path):
        with Store(tmp_path / "s.db") as store:
            doc = make_document()
            store.put_document(doc)
            register_model(store, tmp_path)
            store.put_entry(make_entry(doc.doc_id, theta=(1.0, 0.0, 0.0, 0.0)))
            store.put_entry(make_entry(doc.doc_id, theta=(0.0, 1.0, 0.0, 0.0)))
            entries = store.query_entries("m1")
            assert len(entries) == 1
            assert entries[0].theta.tolist() == [0.0, 1.0, 0.0, 0.0]

    def test_two_models_two_records(self, tmp_path):
        with Store(tmp_path / "s.db") as store:
            doc = make_document()
            store.put_document(doc)
            register_model(store, tmp_path, "m1")
            register_model(store, tmp_path, "m2")
            store.put_entry(make_entry(doc.doc_id, "m1"))
            store.put_entry(make_entry(doc.doc_id, "m2"))
            assert len(store.query_entries("m1")) == 1
            assert len(store.query_entries("m2")) == 1

    def test_paragraph_detail_round_trip(self, tmp_path):
        with Store(tmp_path / "s.db") as store:
            doc = make_document()
            store.put_document(doc)
            register_model(store, tmp_path)
            detail = [ParagraphTheta(para_id=f"{doc.doc_id}:0", token_count=7,
                                     theta=np.array([0.5, 0.5, 0.0, 0.0]))]
            entry = make_entry(doc.doc_id)
            entry.paragraph_thetas = detail
            store.put_entry(entry)
            loaded = store.get_entry(doc.doc_id, "m1")
            assert loaded.paragraph_thetas[0].para_id == detail[0].para_id
            assert np.array_equal(loaded.paragraph_thetas[0].theta, detail[0].theta)


class TestQueryEntries:
    def _populate(self, store, tmp_path, n=60):
        rng = np.random.default_rng(61)
        register_model(store, tmp_path)
        persons = [JANE, BOB]
        docs = []
        for i in range(n):
            person = persons[i % 2]
            platform = [Platform.SOCIAL, Platform.BLOG, Platform.PARLIAMENT][i % 3]
            month = 1 + (i % 6)
            doc = make_document(
                text=f"entry text {i}", person=person, platform=platform,
                timestamp=f"2024-{month:02d}-10T0{i % 10}:00:00Z",
                url=f"https://x/{i}")
            status = "quarantined" if i % 10 == 9 else "active"
            store.put_document(doc, status=status)
            entry = make_entry(doc.doc_id, theta=tuple(rng.dirichlet(np.ones(4))),
                               tokens=int(rng.integers(1, 100)))
            store.put_entry(entry)
            docs.append((doc, status, entry))
        return docs

    def test_no_match_is_empty(self, tmp_path):
        with Store(tmp_path / "s.db") as store:
            self._populate(store, tmp_path)
            assert store.query_entries("m1", persons={"nobody"}) == []

    def test_unknown_model(self, tmp_path):
        with Store(tmp_path / "s.db") as store:
            with pytest.raises(UnknownModel):
                store.query_entries("ghost")

    def test_person_filter_matches_linear_scan(self, tmp_path):
        with Store(tmp_path / "s.db") as store:
            docs = self._populate(store, tmp_path)
            got = store.query_entries("m1", persons={"jane-doe"})
            expected = sorted(
                (d.doc_id for d, status, _ in docs
                 if status == "active" and d.person.id == "jane-doe"))
            assert sorted(e.doc_id for e in got) == expected
            for e in got:
                assert e.person_id == "jane-doe"
                assert e.party == "Greens"

    def test_quarantined_never_returned(self, tmp_path):
        with Store(tmp_path / "s.db") as store:
            docs = self._populate(store, tmp_path)
            got = store.query_entries("m1", page_size=1000)
            quarantined_ids = {d.doc_id for d, status, _ in docs if status == "quarantined"}
            assert quarantined_ids
            assert not quarantined_ids & {e.doc_id for e in got}

    def test_time_range_filter(self, tmp_path):
        with Store(tmp_path / "s.db") as store:
            docs = self._populate(store, tmp_path)
            got = store.query_entries(
                "m1", time_range=("2024-02-01T00:00:00Z", "2024-04-01T00:00:00Z"))
            expected = {
                d.doc_id for d, status, _ in docs
                if status == "active" and "2024-02-01" <= d.timestamp[:10] < "2024-04-01"}
            assert {e.doc_id for e in got} == expected

    def test_pagination_concatenates_to_full_result(self, tmp_path):
        with Store(tmp_path / "s.db") as store:
            self._populate(store, tmp_path)
            full = store.query_entries("m1", page_size=1000)
            paged = []
            page = 0
            while True:
                batch = store.query_entries("m1", page=page, page_size=7)
                if not batch:
                    break
                paged.extend(batch)
                page += 1
            assert [e.doc_id for e in paged] == [e.doc_id for e in full]
            # Deterministic order: (timestamp, doc_id) ascending.
            keys = [(e.timestamp, e.doc_id) for e in full]
            assert keys == sorted(keys)


class TestModelRegistry:
    def test_lifecycle(self, tmp_path):
        with Store(tmp_path / "s.db") as store:
            register_model(store, tmp_path)
            assert store.get_model("m1").status == "staged"
            released = store.release_model("m1")
            assert released.status == "released"
            assert released.checksum == hashlib.sha256(b"artifact-bytes\n").hexdigest()
            assert [m.model_id for m in store.list_models(status="released")] == ["m1"]
            retired = store.retire_model("m1")
            assert retired.status == "retired"

    def test_duplicate_rejected(self, tmp_path):
        with Store(tmp_path / "s.db") as store:
            register_model(store, tmp_path)
            with pytest.raises(DuplicateModel):
                register_model(store, tmp_path)

    def test_release_twice_illegal(self, tmp_path):
        with Store(tmp_path / "s.db") as store:
            register_model(store, tmp_path)
            store.release_model("m1")
            with pytest.raises(IllegalTransition):
                store.release_model("m1")

    def test_retire_staged_illegal(self, tmp_path):
        with Store(tmp_path / "s.db") as store:
            register_model(store, tmp_path)
            with pytest.raises(IllegalTransition):
                store.retire_model("m1")

    def test_tampered_artifact_detected(self, tmp_path):
        with Store(tmp_path / "s.db") as store:
            artifact = register_model(store, tmp_path)
            store.release_model("m1")
            artifact.write_bytes(b"tampered!\n")
            with pytest.raises(ChecksumMismatch):
                store.load_artifact("m1")

    def test_staged_artifact_loads_unverified(self, tmp_path):
        with Store(tmp_path / "s.db") as store:
            register_model(store, tmp_path)
            assert store.load_artifact("m1") == b"artifact-bytes\n"

    def test_list_models_newest_first(self, tmp_path):
        with Store(tmp_path / "s.db") as store:
            for i, created in enumerate(["2024-01-01T00:00:00Z", "2024-03-01T00:00:00Z",
                                         "2024-02-01T00:00:00Z"]):
                artifact = tmp_path / f"a{i}.model"
                artifact.write_bytes(b"x")
                store.register_model(ModelRecord(
                    model_id=f"m{i}", backend="lda", created_at=created,
                    config={"k": 2}, vocab_version="v", artifact_path=str(artifact)))
            assert [m.model_id for m in store.list_models()] == ["m1", "m2", "m0"]


class TestDurability:
    def test_restart_round_trip_bit_identical(self, tmp_path):
        path = tmp_path / "s.db"
        doc = make_document()
        theta = np.random.default_rng(71).dirichlet(np.ones(4))
        with Store(path) as store:
            store.put_document(doc)
            register_model(store, tmp_path)
            store.put_entry(make_entry(doc.doc_id, theta=tuple(theta)))

        with Store(path, read_only=True) as store:
            loaded_doc, status = store.get_document(doc.doc_id)
            assert loaded_doc == doc
            entry = store.get_entry(doc.doc_id, "m1")
            assert np.array_equal(entry.theta, theta)

    def test_read_only_session_leaves_bytes_untouched(self, tmp_path):
        path = tmp_path / "s.db"
        with Store(path) as store:
            store.put_document(make_document())
            register_model(store, tmp_path)
        before = path.read_bytes()
        with Store(path, read_only=True) as store:
            store.list_documents()
            store.list_models()
            store.get_document("0" * 64)
        assert path.read_bytes() == before

    def test_read_only_refuses_missing_store(self, tmp_path):
        from polidigest.errors import StorageFailure

        with pytest.raises(StorageFailure):
            Store(tmp_path / "missing.db", read_only=True)


class TestExport:
    def test_export_lines_decode_and_skip_quarantined(self, tmp_path):
        import json

        with Store(tmp_path / "s.db") as store:
            register_model(store, tmp_path)
            good = make_document(text="fine words")
            held = make_document(text="held words")
            store.put_document(good)
            store.put_document(held, status="quarantined")
            store.put_entry(make_entry(good.doc_id))
            store.put_entry(make_entry(held.doc_id))
            lines = list(store.export_entries("m1"))
        assert len(lines) == 1
        record = json.loads(lines[0])
        assert record["doc_id"] == good.doc_id
        assert decode_theta(record["theta"]).tolist() == [0.25] * 4
