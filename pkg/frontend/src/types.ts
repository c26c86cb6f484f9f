/** Wire types, mirroring the API's JSON shapes field for field. */

export type Bucket = "day" | "week" | "month" | "quarter" | "year";

export const BUCKETS: Bucket[] = ["day", "week", "month", "quarter", "year"];

export type Weighting = "tokens" | "equal_person";

export interface ModelSummary {
  model_id: string;
  backend: "lda" | "hybrid";
  created_at: string;
  vocab_version: string;
  num_topics: number | null;
  status: string;
}

export interface ModelsResponse {
  models: ModelSummary[];
}

export interface TopicWord {
  word: string;
  weight: number;
}

export interface TopicInfo {
  topic: number;
  words: TopicWord[];
}

export interface TopicsResponse {
  model_id: string;
  backend: string;
  topics: TopicInfo[];
  label_sets: Record<string, number[]>;
}

export interface RollupBucket {
  bucket_start: string;
  topic_share: number[];
  document_count: number;
  token_count: number;
  /** Present when the request designated a topic set via `topics=`. */
  designated_share?: number;
}

export interface RollupResponse {
  model_id: string;
  bucket: Bucket;
  num_topics: number;
  designated_topics: number[];
  buckets: RollupBucket[];
}

export interface CompareBucket {
  left_bucket_start: string;
  right_bucket_start: string;
  divergence: number;
  left_share: number[];
  right_share: number[];
  left_document_count: number;
  right_document_count: number;
}

export interface CompareResponse {
  model_id: string;
  bucket: Bucket;
  buckets: CompareBucket[];
}

export interface DocumentRow {
  doc_id: string;
  person_id: string;
  party: string;
  platform: string;
  timestamp: string;
  source_url: string;
  topic_mass: number;
  theta: number[];
  snippet: string;
}

export interface DocumentListResponse {
  model_id: string;
  topics: number[];
  documents: DocumentRow[];
}

export interface ApiErrorBody {
  code: string;
  message: string;
}
