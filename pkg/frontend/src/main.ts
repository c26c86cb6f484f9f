/** Browser entry point: wires controls, the URL, and the three panes.
 *
 * The URL query string is the single source of view state - every control
 * change serializes into it (shareable links), and loading a link restores
 * the identical view. Each pane tracks a request sequence number so a slow
 * stale response can never overwrite a newer one.
 */

import { ApiClient, ApiError } from "./api.js";
import {
  comparePanes,
  defaultViewState,
  parseViewState,
  serializeViewState,
  splitPeriodsAt,
  type ViewState,
} from "./state.js";
import {
  renderCompare,
  renderDocuments,
  renderEmptyState,
  renderError,
  renderTimeline,
  renderTopicLegend,
} from "./render.js";
import type { TopicsResponse } from "./types.js";

const API_BASE = (window as { POLIDIGEST_API_BASE?: string }).POLIDIGEST_API_BASE ?? "";
const client = new ApiClient(API_BASE);

let state: ViewState = defaultViewState();
let topicsCache: TopicsResponse | null = null;

// Per-pane sequence numbers: only the latest request may render.
const seq = { timeline: 0, compare: 0, documents: 0, topics: 0 };

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function listFrom(value: string): string[] {
  return value.split(",").map((v) => v.trim()).filter((v) => v.length > 0);
}

function selectedTopicIds(): number[] {
  if (!state.topicSet || !topicsCache) return [];
  return topicsCache.label_sets[state.topicSet] ?? [];
}

function readControls(): ViewState {
  const platforms: string[] = [];
  for (const box of document.querySelectorAll<HTMLInputElement>("input[data-platform]")) {
    if (box.checked) platforms.push(box.dataset.platform as string);
  }
  const comparePlatforms: string[] = [];
  for (const box of document.querySelectorAll<HTMLInputElement>("input[data-cplatform]")) {
    if (box.checked) comparePlatforms.push(box.dataset.cplatform as string);
  }
  return {
    modelId: el<HTMLSelectElement>("model-select").value,
    persons: listFrom(el<HTMLInputElement>("persons-input").value),
    parties: listFrom(el<HTMLInputElement>("parties-input").value),
    platforms,
    from: el<HTMLInputElement>("from-input").value,
    to: el<HTMLInputElement>("to-input").value,
    bucket: el<HTMLSelectElement>("bucket-select").value as ViewState["bucket"],
    topicSet: el<HTMLSelectElement>("set-select").value,
    compareOn: el<HTMLInputElement>("compare-toggle").checked,
    comparePlatforms,
    compareFrom: el<HTMLInputElement>("cfrom-input").value,
    compareTo: el<HTMLInputElement>("cto-input").value,
  };
}

function writeControls(): void {
  el<HTMLSelectElement>("model-select").value = state.modelId;
  el<HTMLInputElement>("persons-input").value = state.persons.join(",");
  el<HTMLInputElement>("parties-input").value = state.parties.join(",");
  for (const box of document.querySelectorAll<HTMLInputElement>("input[data-platform]")) {
    box.checked = state.platforms.includes(box.dataset.platform as string);
  }
  for (const box of document.querySelectorAll<HTMLInputElement>("input[data-cplatform]")) {
    box.checked = state.comparePlatforms.includes(box.dataset.cplatform as string);
  }
  el<HTMLInputElement>("from-input").value = state.from;
  el<HTMLInputElement>("to-input").value = state.to;
  el<HTMLSelectElement>("bucket-select").value = state.bucket;
  el<HTMLSelectElement>("set-select").value = state.topicSet;
  el<HTMLInputElement>("compare-toggle").checked = state.compareOn;
  el<HTMLInputElement>("cfrom-input").value = state.compareFrom;
  el<HTMLInputElement>("cto-input").value = state.compareTo;
  el<HTMLElement>("compare-controls").style.display = state.compareOn ? "" : "none";
  el<HTMLElement>("compare-pane").style.display = state.compareOn ? "" : "none";
}

function pushUrl(): void {
  const query = serializeViewState(state);
  history.pushState(null, "", query ? `?${query}` : location.pathname);
}

function paneError(pane: HTMLElement, error: unknown, retry: () => void): void {
  const message = error instanceof ApiError ? error.message : String(error);
  pane.innerHTML = renderError(message);
  pane.querySelector("button[data-action=retry]")?.addEventListener("click", retry);
}

async function refreshTopics(): Promise<void> {
  const pane = el("topics-pane");
  if (!state.modelId) {
    pane.innerHTML = renderEmptyState("Pick a model to see its topics.");
    return;
  }
  const ticket = ++seq.topics;
  try {
    const topics = await client.topics(state.modelId);
    if (ticket !== seq.topics) return;
    topicsCache = topics;
    pane.innerHTML = renderTopicLegend(topics);
    const setSelect = el<HTMLSelectElement>("set-select");
    const current = state.topicSet;
    setSelect.innerHTML =
      `<option value="">all topics</option>` +
      Object.keys(topics.label_sets)
        .map((label) => `<option value="${label}">${label}</option>`)
        .join("");
    setSelect.value = current && topics.label_sets[current] ? current : "";
  } catch (error) {
    if (ticket !== seq.topics) return;
    topicsCache = null;
    paneError(pane, error, () => void refreshTopics());
  }
}

async function refreshTimeline(): Promise<void> {
  const pane = el("timeline-pane");
  if (!state.modelId || !state.from || !state.to) {
    pane.innerHTML = renderEmptyState("Pick a model and a time range.");
    return;
  }
  const ticket = ++seq.timeline;
  try {
    const rollup = await client.rollup(state, selectedTopicIds());
    if (ticket !== seq.timeline) return;
    pane.innerHTML = renderTimeline(rollup, state.topicSet);
    for (const button of pane.querySelectorAll<HTMLElement>(".bucket-link")) {
      button.addEventListener("click", () => {
        const index = Number(button.dataset.bucket);
        const bucket = rollup.buckets[index];
        if (!bucket) return;
        const next = rollup.buckets[index + 1];
        void refreshDocuments(bucket.bucket_start, next ? next.bucket_start : state.to);
      });
    }
  } catch (error) {
    if (ticket !== seq.timeline) return;
    paneError(pane, error, () => void refreshTimeline());
  }
}

async function refreshCompare(): Promise<void> {
  const pane = el("compare-pane");
  if (!state.compareOn) return;
  if (!state.modelId || !state.from || !state.to) {
    pane.innerHTML = renderEmptyState("Pick a model and a time range.");
    return;
  }
  // Guard the bucket/model pairing client-side; the server would 400 anyway.
  const { left, right } = comparePanes(state);
  if (left.bucket !== right.bucket || left.modelId !== right.modelId) {
    pane.innerHTML = renderError("Comparison panes must share bucket and model.");
    return;
  }
  const ticket = ++seq.compare;
  try {
    const compare = await client.compare(state);
    if (ticket !== seq.compare) return;
    pane.innerHTML = `<h3>left vs right pane</h3>` + renderCompare(compare);
  } catch (error) {
    if (ticket !== seq.compare) return;
    paneError(pane, error, () => void refreshCompare());
  }
}

async function refreshDocuments(from: string, to: string): Promise<void> {
  const pane = el("documents-pane");
  const ticket = ++seq.documents;
  try {
    const list = await client.documents(state, { from, to }, selectedTopicIds());
    if (ticket !== seq.documents) return;
    pane.innerHTML = `<h3>documents ${from.slice(0, 10)} → ${to.slice(0, 10)}</h3>` +
      renderDocuments(list);
  } catch (error) {
    if (ticket !== seq.documents) return;
    paneError(pane, error, () => void refreshDocuments(from, to));
  }
}

function refreshAll(): void {
  void refreshTopics().then(() => {
    void refreshTimeline();
    void refreshCompare();
  });
  el("documents-pane").innerHTML = renderEmptyState("Click a bucket to drill down.");
}

function onControlsChanged(): void {
  state = readControls();
  writeControls();
  pushUrl();
  refreshAll();
}

async function boot(): Promise<void> {
  state = parseViewState(location.search);

  try {
    const models = await client.models();
    const select = el<HTMLSelectElement>("model-select");
    select.innerHTML = models.models
      .map((m) => `<option value="${m.model_id}">${m.model_id} (${m.backend}, k=${m.num_topics})</option>`)
      .join("");
    if (!state.modelId && models.models.length > 0) {
      state.modelId = models.models[0]!.model_id;
    }
  } catch (error) {
    paneError(el("timeline-pane"), error, () => void boot());
    return;
  }

  writeControls();
  for (const id of ["model-select", "persons-input", "parties-input", "from-input",
                    "to-input", "bucket-select", "set-select", "compare-toggle",
                    "cfrom-input", "cto-input"]) {
    el(id).addEventListener("change", onControlsChanged);
  }
  for (const box of document.querySelectorAll<HTMLInputElement>(
      "input[data-platform], input[data-cplatform]")) {
    box.addEventListener("change", onControlsChanged);
  }
  el("split-button").addEventListener("click", () => {
    const pivot = el<HTMLInputElement>("pivot-input").value;
    if (!pivot || !state.from || !state.to) return;
    try {
      const { left, right } = splitPeriodsAt(state.from, state.to, pivot);
      state = {
        ...state,
        compareOn: true,
        from: left.from,
        to: left.to,
        compareFrom: right.from,
        compareTo: right.to,
      };
      writeControls();
      pushUrl();
      refreshAll();
    } catch (error) {
      paneError(el("compare-pane"), error, () => undefined);
    }
  });

  window.addEventListener("popstate", () => {
    state = parseViewState(location.search);
    writeControls();
    refreshAll();
  });

  refreshAll();
}

document.addEventListener("DOMContentLoaded", () => void boot());
