/** Pure HTML/SVG renderers: payload in, markup string out.
 *
 * Every number on screen is a format.ts rendering of a raw API value - bar
 * geometry scales for display, but the text the user reads is the payload.
 */

import {
  escapeHtml,
  formatBucketStart,
  formatCount,
  formatDivergence,
  formatShare,
} from "./format.js";
import type {
  CompareResponse,
  DocumentListResponse,
  RollupResponse,
  TopicsResponse,
} from "./types.js";

const PALETTE = [
  "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948",
  "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac",
];

export function topicColor(topic: number): string {
  return PALETTE[topic % PALETTE.length] as string;
}

export function renderEmptyState(message = "No documents in this window."): string {
  return `<div class="empty-state">${escapeHtml(message)}</div>`;
}

export function renderError(message: string): string {
  return (
    `<div class="error-state">` +
    `<span>${escapeHtml(message)}</span> ` +
    `<button type="button" data-action="retry">Retry</button>` +
    `</div>`
  );
}

const CHART_WIDTH = 720;
const CHART_HEIGHT = 240;

/** Stacked per-topic bars, plus a designated-share line when the API sent one. */
export function renderTimeline(rollup: RollupResponse, setLabel: string): string {
  const buckets = rollup.buckets;
  if (buckets.every((b) => b.document_count === 0)) {
    return renderEmptyState();
  }
  const n = buckets.length;
  const slot = CHART_WIDTH / Math.max(n, 1);
  const barWidth = Math.max(slot * 0.7, 1);

  const bars: string[] = [];
  buckets.forEach((bucket, i) => {
    const x = i * slot + (slot - barWidth) / 2;
    let yTop = CHART_HEIGHT;
    bucket.topic_share.forEach((share, topic) => {
      const height = share * CHART_HEIGHT;
      yTop -= height;
      if (height > 0) {
        bars.push(
          `<rect class="bucket-bar" data-bucket="${i}" x="${x.toFixed(2)}" ` +
          `y="${yTop.toFixed(2)}" width="${barWidth.toFixed(2)}" ` +
          `height="${height.toFixed(2)}" fill="${topicColor(topic)}">` +
          `<title>${escapeHtml(formatBucketStart(bucket.bucket_start, rollup.bucket))} ` +
          `topic ${topic}: ${formatShare(share)}</title></rect>`,
        );
      }
    });
  });

  let line = "";
  const designated = buckets.map((b) => b.designated_share);
  if (designated.every((v) => v !== undefined)) {
    const points = buckets
      .map((b, i) => {
        const x = i * slot + slot / 2;
        const y = CHART_HEIGHT - (b.designated_share as number) * CHART_HEIGHT;
        return `${x.toFixed(2)},${y.toFixed(2)}`;
      })
      .join(" ");
    line = `<polyline class="designated-line" points="${points}" fill="none" stroke="#222" stroke-width="2"/>`;
  }

  const svg =
    `<svg viewBox="0 0 ${CHART_WIDTH} ${CHART_HEIGHT}" class="timeline-chart" ` +
    `preserveAspectRatio="none" role="img">${bars.join("")}${line}</svg>`;

  const hasDesignated = line !== "";
  const header =
    `<tr><th>bucket</th><th>documents</th><th>tokens</th>` +
    (hasDesignated ? `<th>${escapeHtml(setLabel || "designated")} share</th>` : "") +
    buckets[0]!.topic_share.map((_, k) => `<th>t${k}</th>`).join("") +
    `</tr>`;
  const rows = buckets
    .map((bucket, i) => {
      const cells = [
        `<td><button type="button" class="bucket-link" data-bucket="${i}">` +
          `${escapeHtml(formatBucketStart(bucket.bucket_start, rollup.bucket))}</button></td>`,
        `<td>${formatCount(bucket.document_count)}</td>`,
        `<td>${formatCount(bucket.token_count)}</td>`,
      ];
      if (hasDesignated) {
        cells.push(`<td class="designated-share">${formatShare(bucket.designated_share as number)}</td>`);
      }
      for (const share of bucket.topic_share) {
        cells.push(`<td class="share-cell">${formatShare(share)}</td>`);
      }
      return `<tr>${cells.join("")}</tr>`;
    })
    .join("");

  return `${svg}<table class="share-table">${header}${rows}</table>`;
}

export function renderCompare(compare: CompareResponse): string {
  if (compare.buckets.length === 0) {
    return renderEmptyState("The two panes share no bucket positions.");
  }
  const k = compare.buckets[0]!.left_share.length;
  const header =
    `<tr><th>left bucket</th><th>right bucket</th><th>divergence</th>` +
    `<th>docs L/R</th>` +
    Array.from({ length: k }, (_, i) => `<th>t${i} L|R</th>`).join("") +
    `</tr>`;
  const rows = compare.buckets
    .map((bucket) => {
      const shares = bucket.left_share
        .map(
          (left, i) =>
            `<td><span class="share-cell left">${formatShare(left)}</span> | ` +
            `<span class="share-cell right">${formatShare(bucket.right_share[i] as number)}</span></td>`,
        )
        .join("");
      const width = Math.round(bucket.divergence * 100);
      return (
        `<tr>` +
        `<td>${escapeHtml(formatBucketStart(bucket.left_bucket_start, compare.bucket))}</td>` +
        `<td>${escapeHtml(formatBucketStart(bucket.right_bucket_start, compare.bucket))}</td>` +
        `<td class="divergence-cell">${formatDivergence(bucket.divergence)}` +
        `<span class="divergence-bar" style="width:${width}px"></span></td>` +
        `<td>${formatCount(bucket.left_document_count)}/${formatCount(bucket.right_document_count)}</td>` +
        shares +
        `</tr>`
      );
    })
    .join("");
  return `<table class="compare-table">${header}${rows}</table>`;
}

export function renderDocuments(list: DocumentListResponse): string {
  if (list.documents.length === 0) {
    return renderEmptyState("No documents match the selection.");
  }
  const rows = list.documents
    .map(
      (doc) =>
        `<tr>` +
        `<td>${escapeHtml(doc.person_id)}</td>` +
        `<td>${escapeHtml(doc.party)}</td>` +
        `<td>${escapeHtml(doc.platform)}</td>` +
        `<td>${escapeHtml(doc.timestamp.slice(0, 10))}</td>` +
        `<td class="mass-cell">${formatShare(doc.topic_mass)}</td>` +
        `<td class="snippet">${escapeHtml(doc.snippet)}</td>` +
        `<td><a href="${escapeHtml(doc.source_url)}" target="_blank" rel="noopener">source</a></td>` +
        `</tr>`,
    )
    .join("");
  return (
    `<table class="documents-table">` +
    `<tr><th>person</th><th>party</th><th>platform</th><th>date</th>` +
    `<th>topic mass</th><th>snippet</th><th>link</th></tr>${rows}</table>`
  );
}

export function renderTopicLegend(topics: TopicsResponse): string {
  const items = topics.topics
    .map((topic) => {
      const words = topic.words.map((w) => escapeHtml(w.word)).join(", ");
      return (
        `<li><span class="swatch" style="background:${topicColor(topic.topic)}"></span>` +
        `<strong>t${topic.topic}</strong> ${words}</li>`
      );
    })
    .join("");
  const sets = Object.entries(topics.label_sets)
    .map(([label, ids]) => `<li><strong>${escapeHtml(label)}</strong>: topics ${ids.join(", ")}</li>`)
    .join("");
  return (
    `<ul class="topic-legend">${items}</ul>` +
    (sets ? `<p>label sets:</p><ul class="label-sets">${sets}</ul>` : "")
  );
}
