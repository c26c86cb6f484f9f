/** Number and date formatting for display.
 *
 * These are the ONLY transformations applied to API numbers before they
 * reach the page: fixed-precision string formatting. No rescaling, no
 * renormalization - the displayed value is the API value.
 */

import type { Bucket } from "./types.js";

export const SHARE_DECIMALS = 4;

export function formatShare(value: number): string {
  return value.toFixed(SHARE_DECIMALS);
}

export function formatDivergence(value: number): string {
  return value.toFixed(SHARE_DECIMALS);
}

export function formatCount(value: number): string {
  return String(value);
}

/** Short bucket label: just enough calendar to tell buckets apart. */
export function formatBucketStart(iso: string, bucket: Bucket): string {
  const date = iso.slice(0, 10);
  switch (bucket) {
    case "year":
      return date.slice(0, 4);
    case "quarter": {
      const month = Number(date.slice(5, 7));
      return `${date.slice(0, 4)}-Q${Math.floor((month - 1) / 3) + 1}`;
    }
    case "month":
      return date.slice(0, 7);
    default:
      return date;
  }
}

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}
