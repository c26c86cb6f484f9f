/** View state and its URL codec.
 *
 * Every piece of dashboard state serializes into the query string so any
 * view is a shareable link; parse(serialize(s)) always reproduces s exactly.
 */

import { BUCKETS, type Bucket } from "./types.js";

export interface ViewState {
  modelId: string; // "" until a model is chosen
  persons: string[];
  parties: string[];
  platforms: string[];
  from: string; // ISO-8601 instants; "" = unset
  to: string;
  bucket: Bucket;
  topicSet: string; // label from the model's label_sets; "" = all topics
  compareOn: boolean;
  // Right pane of the comparison view: filter and (optionally) a different
  // period. Empty strings inherit the left pane's values.
  comparePlatforms: string[];
  compareFrom: string;
  compareTo: string;
}

export function defaultViewState(): ViewState {
  return {
    modelId: "",
    persons: [],
    parties: [],
    platforms: [],
    from: "",
    to: "",
    bucket: "month",
    topicSet: "",
    compareOn: false,
    comparePlatforms: [],
    compareFrom: "",
    compareTo: "",
  };
}

const LIST_KEYS: Array<[keyof ViewState, string]> = [
  ["persons", "persons"],
  ["parties", "parties"],
  ["platforms", "platforms"],
  ["comparePlatforms", "cplatforms"],
];

const STRING_KEYS: Array<[keyof ViewState, string]> = [
  ["modelId", "model"],
  ["from", "from"],
  ["to", "to"],
  ["topicSet", "set"],
  ["compareFrom", "cfrom"],
  ["compareTo", "cto"],
];

/** Query string (no leading "?"); default-valued fields are omitted. */
export function serializeViewState(state: ViewState): string {
  const params = new URLSearchParams();
  for (const [field, key] of STRING_KEYS) {
    const value = state[field] as string;
    if (value !== "") params.set(key, value);
  }
  for (const [field, key] of LIST_KEYS) {
    const values = state[field] as string[];
    if (values.length > 0) params.set(key, values.join(","));
  }
  if (state.bucket !== "month") params.set("bucket", state.bucket);
  if (state.compareOn) params.set("compare", "1");
  return params.toString();
}

export function parseViewState(query: string): ViewState {
  const params = new URLSearchParams(query.startsWith("?") ? query.slice(1) : query);
  const state = defaultViewState();
  for (const [field, key] of STRING_KEYS) {
    const value = params.get(key);
    if (value !== null) (state[field] as string) = value;
  }
  for (const [field, key] of LIST_KEYS) {
    const value = params.get(key);
    if (value !== null && value !== "") {
      (state[field] as string[]) = value.split(",").filter((v) => v.length > 0);
    }
  }
  const bucket = params.get("bucket");
  if (bucket !== null && (BUCKETS as string[]).includes(bucket)) {
    state.bucket = bucket as Bucket;
  }
  state.compareOn = params.get("compare") === "1";
  return state;
}

export interface Period {
  from: string;
  to: string;
}

/** Pre/post split around a pivot instant: [from, pivot) vs [pivot, to). */
export function splitPeriodsAt(from: string, to: string, pivot: string): { left: Period; right: Period } {
  if (!(from < pivot && pivot < to)) {
    throw new Error(`pivot ${pivot} must lie strictly inside [${from}, ${to})`);
  }
  return {
    left: { from, to: pivot },
    right: { from: pivot, to },
  };
}

/** The comparison view's two sub-queries derived from one state. */
export function comparePanes(state: ViewState): { left: ViewState; right: ViewState } {
  const left = { ...state, compareOn: false };
  const right: ViewState = {
    ...state,
    compareOn: false,
    platforms: state.comparePlatforms.length > 0 ? state.comparePlatforms : state.platforms,
    from: state.compareFrom !== "" ? state.compareFrom : state.from,
    to: state.compareTo !== "" ? state.compareTo : state.to,
  };
  return { left, right };
}
