"""Fetch raw documents from heterogeneous sources and normalize them.

Connectors pull newline-delimited feed files, RSS/Atom feeds, generic JSON
endpoints, and transcript directories into RawDocuments, which are resolved
against a politician registry into Documents with a content-hash id. A
document whose author cannot be resolved is quarantined, never dropped:
every fetched record is accounted for as stored or quarantined.
"""

from __future__ import annotations

import hashlib
import json
import re
import urllib.error
import urllib.request
import xml.etree.ElementTree as ET
import xml.parsers.expat
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from pathlib import Path

from .errors import ParseFailure, SourceUnavailable, UnknownPerson
from .textprep import tokenize
from .timeutil import format_iso8601, parse_iso8601, utc_now

SOURCE_KINDS = ("feed_file", "rss_url", "http_json", "transcript_dir")
TRANSCRIPT_FORMATS = ("plain_sections", "json_records")

_SLUG_RE = re.compile(r"[a-z0-9-]+")
_HTTP_TIMEOUT = 30.0


class Platform(str, Enum):
    PARLIAMENT = "parliament"
    SOCIAL = "social"
    BLOG = "blog"
    OTHER = "other"

    def __str__(self) -> str:  # serialize as the lowercase name
        return self.value


@dataclass(frozen=True)
class PersonRef:
    """A politician in the registry; `id` is the stable slug."""

    id: str
    display_name: str
    party: str

    def __post_init__(self):
        if not _SLUG_RE.fullmatch(self.id):
            raise ValueError(f"person id must match [a-z0-9-]+, got {self.id!r}")


@dataclass(frozen=True)
class SourceDescriptor:
    source_id: str
    kind: str
    location: str
    platform: Platform
    default_person: PersonRef | None = None
    poll_interval: float | None = None
    transcript_format: str | None = None

    def __post_init__(self):
        if not self.source_id:
            raise ValueError("source_id must be non-empty")
        if self.kind not in SOURCE_KINDS:
            raise ValueError(f"unknown source kind {self.kind!r}; expected one of {SOURCE_KINDS}")
        if not self.location:
            raise ValueError(f"source {self.source_id}: location must be non-empty")
        if self.poll_interval is not None and self.poll_interval <= 0:
            raise ValueError(f"source {self.source_id}: poll_interval must be > 0")
        if self.kind == "transcript_dir" and self.transcript_format not in TRANSCRIPT_FORMATS:
            raise ValueError(
                f"source {self.source_id}: transcript_dir requires format in {TRANSCRIPT_FORMATS}"
            )


@dataclass(frozen=True)
class RawDocument:
    source_id: str
    external_id: str
    body: str
    author_hint: str | None = None
    published_at: str | None = None
    url: str = ""


@dataclass(frozen=True)
class Document:
    """Normalized unit of politician speech; doc_id is a content hash."""

    doc_id: str
    person: PersonRef
    party: str
    platform: Platform
    timestamp: str  # ISO-8601 UTC
    source_url: str
    text: str
    ingest_time: str  # ISO-8601 UTC
    metadata: dict[str, str] = field(default_factory=dict)


def compute_doc_id(person_id: str, platform: str, source_url: str, text: str) -> str:
    """Deterministic 64-char hex id over the identity tuple."""
    payload = json.dumps([person_id, platform, source_url, text],
                         ensure_ascii=False, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


# --- registry and source configuration -------------------------------------


def load_persons(path: str | Path) -> list[PersonRef]:
    """Registry file: JSON array of {id, display_name, party}."""
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, list):
        raise ValueError("persons registry must be a JSON array")
    persons = []
    seen_ids: set[str] = set()
    for i, item in enumerate(raw):
        try:
            person = PersonRef(id=item["id"], display_name=item["display_name"], party=item["party"])
        except (KeyError, TypeError) as exc:
            raise ValueError(f"persons[{i}]: missing field {exc}") from exc
        if person.id in seen_ids:
            raise ValueError(f"persons[{i}]: duplicate id {person.id!r}")
        seen_ids.add(person.id)
        persons.append(person)
    return persons


SOURCES_SCHEMA = {
    "type": "array",
    "items": {
        "type": "object",
        "required": ["source_id", "kind", "location", "platform"],
        "additionalProperties": False,
        "properties": {
            "source_id": {"type": "string", "minLength": 1},
            "kind": {"enum": list(SOURCE_KINDS)},
            "location": {"type": "string", "minLength": 1},
            "platform": {"enum": [p.value for p in Platform]},
            "default_person": {"type": "string"},
            "poll_interval": {"type": "number", "exclusiveMinimum": 0},
            "format": {"enum": list(TRANSCRIPT_FORMATS)},
        },
    },
}


def load_sources(path: str | Path, registry: list[PersonRef]) -> list[SourceDescriptor]:
    """Source configuration: JSON array validated against SOURCES_SCHEMA.

    `default_person` references a registry id; `location` paths are resolved
    relative to the configuration file.
    """
    import jsonschema

    base = Path(path).parent
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    jsonschema.validate(raw, SOURCES_SCHEMA)
    by_id = {p.id: p for p in registry}
    descriptors = []
    seen: set[str] = set()
    for item in raw:
        if item["source_id"] in seen:
            raise ValueError(f"duplicate source_id {item['source_id']!r}")
        seen.add(item["source_id"])
        default_person = None
        if "default_person" in item:
            if item["default_person"] not in by_id:
                raise ValueError(
                    f"source {item['source_id']}: default_person {item['default_person']!r} not in registry"
                )
            default_person = by_id[item["default_person"]]
        location = item["location"]
        if "://" not in location and not Path(location).is_absolute():
            location = str(base / location)
        descriptors.append(SourceDescriptor(
            source_id=item["source_id"],
            kind=item["kind"],
            location=location,
            platform=Platform(item["platform"]),
            default_person=default_person,
            poll_interval=item.get("poll_interval"),
            transcript_format=item.get("format"),
        ))
    return descriptors


# --- parsers ----------------------------------------------------------------


_TAG_RE = re.compile(r"<[^>]*>")
_SCRIPT_RE = re.compile(r"<(script|style)\b[^>]*>.*?</\1\s*>", re.IGNORECASE | re.DOTALL)


def strip_html(text: str) -> str:
    """Drop script/style blocks wholesale, remove tags, decode the five XML entities."""
    text = _SCRIPT_RE.sub(" ", text)
    text = _TAG_RE.sub(" ", text)
    for entity, char in (("&lt;", "<"), ("&gt;", ">"), ("&quot;", '"'), ("&apos;", "'"), ("&amp;", "&")):
        text = text.replace(entity, char)
    return re.sub(r"\s+", " ", text).strip()


def parse_feed_file(data: bytes, source_id: str = "") -> list[RawDocument]:
    """Newline-delimited records, each a flat JSON object.

    Required keys: external_id, body. Optional: author, published_at, url.
    Any malformed or incomplete record fails the whole batch.
    """
    docs = []
    offset = 0
    for index, line in enumerate(data.split(b"\n")):
        stripped = line.strip()
        if stripped:
            try:
                record = json.loads(stripped.decode("utf-8"))
            except (json.JSONDecodeError, UnicodeDecodeError) as exc:
                raise ParseFailure(
                    f"feed record {index} is not valid JSON: {exc}",
                    offset=offset, record_index=index,
                ) from exc
            if not isinstance(record, dict):
                raise ParseFailure(f"feed record {index} is not an object", record_index=index)
            missing = [k for k in ("external_id", "body") if not record.get(k)]
            if missing:
                raise ParseFailure(
                    f"feed record {index} missing required field(s) {missing}", record_index=index)
            if not str(record["body"]).strip():
                raise ParseFailure(f"feed record {index} has an empty body", record_index=index)
            docs.append(RawDocument(
                source_id=source_id,
                external_id=str(record["external_id"]),
                body=str(record["body"]),
                author_hint=record.get("author") or None,
                published_at=record.get("published_at") or None,
                url=str(record.get("url") or ""),
            ))
        offset += len(line) + 1
    return docs


def _first_invalid_byte_offset(data: bytes) -> int:
    parser = xml.parsers.expat.ParserCreate()
    try:
        parser.Parse(data, True)
    except xml.parsers.expat.ExpatError:
        return parser.ErrorByteIndex
    return len(data)


def _text_of(elem: ET.Element | None) -> str:
    return "".join(elem.itertext()).strip() if elem is not None else ""


def parse_rss(data: bytes, source_id: str = "") -> list[RawDocument]:
    """RSS 2.0 or Atom. One RawDocument per item/entry, HTML-stripped body."""
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        offset = _first_invalid_byte_offset(data)
        raise ParseFailure(f"malformed XML at byte {offset}: {exc}", offset=offset) from exc

    ns = {"atom": "http://www.w3.org/2005/Atom", "content": "http://purl.org/rss/1.0/modules/content/"}
    docs = []

    if root.tag == "rss" or root.tag.endswith("}rss"):
        for index, item in enumerate(root.iter("item")):
            body = " ".join(part for part in (
                strip_html(_text_of(item.find("description"))),
                strip_html(_text_of(item.find("content:encoded", ns))),
            ) if part)
            if not body.strip():
                raise ParseFailure(f"rss item {index} has no description/content", record_index=index)
            published = None
            pub_date = _text_of(item.find("pubDate"))
            if pub_date:
                published = _parse_rfc822(pub_date, index)
            docs.append(RawDocument(
                source_id=source_id,
                external_id=_text_of(item.find("guid")) or _text_of(item.find("link")) or f"item-{index}",
                body=body,
                author_hint=_text_of(item.find("author")) or _text_of(
                    item.find("{http://purl.org/dc/elements/1.1/}creator")) or None,
                published_at=published,
                url=_text_of(item.find("link")),
            ))
        return docs

    if root.tag == "{http://www.w3.org/2005/Atom}feed":
        for index, entry in enumerate(root.findall("atom:entry", ns)):
            body = " ".join(part for part in (
                strip_html(_text_of(entry.find("atom:summary", ns))),
                strip_html(_text_of(entry.find("atom:content", ns))),
            ) if part)
            if not body.strip():
                raise ParseFailure(f"atom entry {index} has no summary/content", record_index=index)
            updated = _text_of(entry.find("atom:updated", ns)) or _text_of(
                entry.find("atom:published", ns))
            published = None
            if updated:
                try:
                    published = format_iso8601(parse_iso8601(updated))
                except ValueError as exc:
                    raise ParseFailure(f"atom entry {index}: bad timestamp {updated!r}",
                                       record_index=index) from exc
            link = entry.find("atom:link", ns)
            docs.append(RawDocument(
                source_id=source_id,
                external_id=_text_of(entry.find("atom:id", ns)) or f"entry-{index}",
                body=body,
                author_hint=_text_of(entry.find("atom:author/atom:name", ns)) or None,
                published_at=published,
                url=link.get("href", "") if link is not None else "",
            ))
        return docs

    raise ParseFailure(f"not an RSS or Atom document (root tag {root.tag!r})", offset=0)


def _parse_rfc822(value: str, index: int) -> str:
    from email.utils import parsedate_to_datetime

    try:
        return format_iso8601(parsedate_to_datetime(value))
    except (TypeError, ValueError) as exc:
        raise ParseFailure(f"item {index}: bad pubDate {value!r}", record_index=index) from exc


_SPEAKER_RE = re.compile(r"^SPEAKER:\s*(.+)$")


def parse_transcript(
    data: bytes,
    format: str,
    source_id: str = "",
    name: str = "transcript",
    url: str = "",
) -> list[RawDocument]:
    """Parliamentary transcript parsing.

    plain_sections: blank-line-separated blocks, each headed by a
    'SPEAKER: name' line. json_records: a JSON array of records with
    required speaker/text and optional date/url fields.
    """
    if format == "plain_sections":
        text = data.decode("utf-8")
        docs = []
        blocks = [b for b in re.split(r"\n\s*\n", text) if b.strip()]
        for index, block in enumerate(blocks):
            lines = block.strip().splitlines()
            m = _SPEAKER_RE.match(lines[0].strip())
            if not m:
                raise ParseFailure(
                    f"{name}: block {index} does not start with a SPEAKER: header",
                    record_index=index,
                )
            body = "\n".join(lines[1:]).strip()
            if not body:
                raise ParseFailure(f"{name}: block {index} has a speaker but no text",
                                   record_index=index)
            docs.append(RawDocument(
                source_id=source_id,
                external_id=f"{name}:{index}",
                body=body,
                author_hint=m.group(1).strip(),
                url=url,
            ))
        return docs

    if format == "json_records":
        try:
            records = json.loads(data.decode("utf-8"))
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise ParseFailure(f"{name}: not valid JSON: {exc}") from exc
        if not isinstance(records, list):
            raise ParseFailure(f"{name}: expected a JSON array of records")
        docs = []
        for index, record in enumerate(records):
            if not isinstance(record, dict):
                raise ParseFailure(f"{name}: record {index} is not an object", record_index=index)
            missing = [k for k in ("speaker", "text") if not record.get(k)]
            if missing:
                raise ParseFailure(
                    f"{name}: record {index} missing required field(s) {missing}",
                    record_index=index,
                )
            docs.append(RawDocument(
                source_id=source_id,
                external_id=f"{name}:{index}",
                body=str(record["text"]),
                author_hint=str(record["speaker"]),
                published_at=record.get("date") or None,
                url=str(record.get("url") or url),
            ))
        return docs

    raise ValueError(f"unknown transcript format {format!r}; expected one of {TRANSCRIPT_FORMATS}")


# --- fetching ---------------------------------------------------------------


def _read_location(location: str) -> bytes:
    """File path, file:// URI, or http(s) URL -> bytes; SourceUnavailable on failure."""
    if location.startswith(("http://", "https://")):
        try:
            with urllib.request.urlopen(location, timeout=_HTTP_TIMEOUT) as resp:
                return resp.read()
        except (urllib.error.URLError, OSError) as exc:
            raise SourceUnavailable(f"cannot fetch {location}: {exc}") from exc
    path = Path(location[len("file://"):] if location.startswith("file://") else location)
    try:
        return path.read_bytes()
    except OSError as exc:
        raise SourceUnavailable(f"cannot read {path}: {exc}") from exc


def fetch(descriptor: SourceDescriptor, seen: set[str] | frozenset[str] = frozenset()) -> list[RawDocument]:
    """Pull every not-yet-seen document from a source.

    `seen` holds the external_ids already ingested for this source_id.
    Results are ordered by ascending published_at (missing timestamps first),
    ties broken by external_id.
    """
    if descriptor.kind == "feed_file":
        docs = parse_feed_file(_read_location(descriptor.location), descriptor.source_id)
    elif descriptor.kind == "rss_url":
        docs = parse_rss(_read_location(descriptor.location), descriptor.source_id)
    elif descriptor.kind == "http_json":
        data = _read_location(descriptor.location)
        try:
            records = json.loads(data.decode("utf-8"))
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise ParseFailure(f"{descriptor.location}: not valid JSON: {exc}") from exc
        if not isinstance(records, list):
            raise ParseFailure(f"{descriptor.location}: expected a JSON array")
        ndjson = "\n".join(json.dumps(r) for r in records).encode("utf-8")
        docs = parse_feed_file(ndjson, descriptor.source_id)
    elif descriptor.kind == "transcript_dir":
        root = Path(descriptor.location)
        if not root.is_dir():
            raise SourceUnavailable(f"transcript directory {root} does not exist")
        suffix = ".txt" if descriptor.transcript_format == "plain_sections" else ".json"
        docs = []
        for path in sorted(root.glob(f"*{suffix}")):
            docs.extend(parse_transcript(
                path.read_bytes(), descriptor.transcript_format,
                source_id=descriptor.source_id, name=path.stem,
                url=path.resolve().as_uri(),
            ))
    else:  # pragma: no cover - SourceDescriptor already validates kind
        raise ValueError(f"unknown source kind {descriptor.kind!r}")

    fresh = [d for d in docs if d.external_id not in seen]
    fresh.sort(key=lambda d: (d.published_at or "", d.external_id))
    return fresh


# --- normalization ----------------------------------------------------------


def resolve_person(
    author_hint: str | None,
    registry: list[PersonRef],
    descriptor: SourceDescriptor,
) -> PersonRef:
    """Case-insensitive exact display-name match, else the source's default person.

    Fuzzy matching is deliberately absent: misattribution is worse than
    quarantine in an accountability tool.
    """
    if author_hint:
        wanted = author_hint.strip().lower()
        for person in registry:
            if person.display_name.lower() == wanted:
                return person
    if descriptor.default_person is not None:
        return descriptor.default_person
    raise UnknownPerson(
        f"source {descriptor.source_id}: cannot resolve author {author_hint!r} "
        "and the source has no default person",
        author_hint=author_hint,
    )


def normalize(
    raw: RawDocument,
    registry: list[PersonRef],
    descriptor: SourceDescriptor,
    ingest_time: datetime | None = None,
) -> Document:
    """Resolve the author and produce the canonical Document.

    A missing published_at is replaced by the ingest time. When a feed
    carries a future-dated timestamp the ingest_time is raised to match so
    the timestamp <= ingest_time invariant always holds.
    """
    person = resolve_person(raw.author_hint, registry, descriptor)
    now = ingest_time if ingest_time is not None else utc_now()
    if raw.published_at:
        timestamp = parse_iso8601(raw.published_at)
    else:
        timestamp = now
    if timestamp > now:
        now = timestamp
    source_url = raw.url or descriptor.location
    return Document(
        doc_id=compute_doc_id(person.id, descriptor.platform.value, source_url, raw.body),
        person=person,
        party=person.party,
        platform=descriptor.platform,
        timestamp=format_iso8601(timestamp),
        source_url=source_url,
        text=raw.body,
        ingest_time=format_iso8601(now),
        metadata={"source_id": raw.source_id, "external_id": raw.external_id},
    )


def quarantine_document(
    raw: RawDocument,
    descriptor: SourceDescriptor,
    ingest_time: datetime | None = None,
    reason: str = "unknown_person",
) -> Document:
    """Build the held-for-review Document for an unresolvable author."""
    sentinel = PersonRef(id="unknown", display_name=raw.author_hint or "", party="")
    now = ingest_time if ingest_time is not None else utc_now()
    timestamp = parse_iso8601(raw.published_at) if raw.published_at else now
    if timestamp > now:
        now = timestamp
    source_url = raw.url or descriptor.location
    return Document(
        doc_id=compute_doc_id(sentinel.id, descriptor.platform.value, source_url, raw.body),
        person=sentinel,
        party="",
        platform=descriptor.platform,
        timestamp=format_iso8601(timestamp),
        source_url=source_url,
        text=raw.body,
        ingest_time=format_iso8601(now),
        metadata={"source_id": raw.source_id, "external_id": raw.external_id,
                  "quarantine_reason": reason},
    )


def dedupe(docs: list[Document]) -> list[Document]:
    """Drop exact doc_id duplicates, keeping each first occurrence."""
    seen: set[str] = set()
    out = []
    for doc in docs:
        if doc.doc_id not in seen:
            seen.add(doc.doc_id)
            out.append(doc)
    return out
