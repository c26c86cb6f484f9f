"""The whole pipeline on a miniature multi-source corpus.

Writes a small working directory (registry, two sources, config), then runs
the same code paths the CLI uses: ingest -> train -> release -> rollup.
Everything lands in a temp directory; nothing outside it is touched.

    python demos/03_full_pipeline.py
"""

import json
import tempfile
from pathlib import Path

import numpy as np

from polidigest import aggregate, lda
from polidigest.cli import main
from polidigest.store import Store

workdir = Path(tempfile.mkdtemp(prefix="polidigest-demo-"))
print(f"working directory: {workdir}")

(workdir / "persons.json").write_text(json.dumps([
    {"id": "ada-example", "display_name": "Ada Example", "party": "Modelling League"},
    {"id": "ben-sample", "display_name": "Ben Sample", "party": "Data Union"},
]))

posts = [
    ("ada-1", "Ada Example", "2024-01-10T09:00:00Z",
     "Climate investment pays twice: cleaner air today and cheaper energy tomorrow. "
     "Wind farms and grid upgrades belong in the spring budget."),
    ("ada-2", "Ada Example", "2024-02-14T10:00:00Z",
     "Hospitals need staff more than slogans. Health funding should follow patients "
     "into regional clinics and shorten the waiting lists."),
    ("ben-1", "Ben Sample", "2024-01-22T11:00:00Z",
     "Small businesses carry this economy. Cut the payroll paperwork, speed up "
     "permits, and growth will take care of the tax base."),
    ("ben-2", "Ben Sample", "2024-02-28T12:00:00Z",
     "The budget debate ignores energy prices. A carbon price with a dividend "
     "protects households while emissions fall."),
]
with open(workdir / "feed.ndjson", "w") as fh:
    for external_id, author, ts, body in posts:
        fh.write(json.dumps({"external_id": external_id, "author": author,
                             "published_at": ts, "url": f"https://posts.example/{external_id}",
                             "body": body}) + "\n")

speeches = [
    {"speaker": "Ada Example", "date": "2024-01-17T13:00:00Z",
     "url": "https://chamber.example/2024-01-17/ada",
     "text": "The chamber keeps applauding climate targets while approving fossil "
             "subsidies. Pick one. My motion funds rail and wind power from the savings."},
    {"speaker": "Ben Sample", "date": "2024-02-21T13:00:00Z",
     "url": "https://chamber.example/2024-02-21/ben",
     "text": "Growth is not a dirty word. The employment package cuts payroll costs "
             "for small firms and funds apprenticeships in every region."},
]
(workdir / "transcripts").mkdir()
(workdir / "transcripts" / "session1.json").write_text(json.dumps(speeches))

(workdir / "sources.json").write_text(json.dumps([
    {"source_id": "posts", "kind": "feed_file", "location": "feed.ndjson",
     "platform": "social"},
    {"source_id": "chamber", "kind": "transcript_dir", "location": "transcripts",
     "platform": "parliament", "format": "json_records"},
]))

(workdir / "config.json").write_text(json.dumps({
    "store": str(workdir / "store.db"),
    "sources": str(workdir / "sources.json"),
    "persons": str(workdir / "persons.json"),
    "models_dir": str(workdir / "models"),
    "target_len": 30,
    # Small corpus: a sparse document-topic prior keeps the mixtures legible.
    "lda": {"k": 3, "alpha": 0.1, "iterations": 150, "burn_in": 50},
}))

config = str(workdir / "config.json")
print("\n$ polidigest ingest")
main(["ingest", "--config", config])

print("\n$ polidigest train --seed 42 --k 3")
main(["train", "--config", config, "--seed", "42", "--k", "3"])

with Store(workdir / "store.db", read_only=True) as store:
    model_id = store.list_models()[0].model_id
print(f"\n$ polidigest release --model {model_id}")
main(["release", "--config", config, "--model", model_id])

with Store(workdir / "store.db", read_only=True) as store:
    entries = store.query_entries(model_id, page_size=100)
    model = lda.loads_model(store.load_artifact(model_id).decode("utf-8"))

print("\ntop words per topic:")
for k in range(model.k):
    print(f"  topic {k}: " + ", ".join(w for w, _ in lda.top_words(model, k, 5)))

query = aggregate.RollupQuery(start="2024-01-01T00:00:00Z", end="2024-03-01T00:00:00Z",
                              bucket="month", model_id=model_id)
result = aggregate.rollup(entries, query, model.k)
print("\nmonthly topic shares (all persons, all platforms):")
for bucket in result.buckets:
    shares = np.round(bucket.topic_share, 3).tolist()
    print(f"  {bucket.bucket_start:%Y-%m}: {shares} "
          f"({bucket.document_count} documents, {bucket.token_count} tokens)")

social = aggregate.rollup(entries, aggregate.RollupQuery(
    start="2024-01-01T00:00:00Z", end="2024-03-01T00:00:00Z", bucket="month",
    model_id=model_id, platforms=frozenset({"social"})), model.k)
chamber = aggregate.rollup(entries, aggregate.RollupQuery(
    start="2024-01-01T00:00:00Z", end="2024-03-01T00:00:00Z", bucket="month",
    model_id=model_id, platforms=frozenset({"parliament"})), model.k)
print("\nsocial vs parliament divergence per month (Jensen-Shannon, base 2):")
for sb, cb in zip(social.buckets, chamber.buckets):
    print(f"  {sb.bucket_start:%Y-%m}: {aggregate.compare(sb.topic_share, cb.topic_share):.3f}")

print(f"\nNext: `polidigest serve --config {config}` exposes the same numbers "
      "over HTTP for the dashboard.")
