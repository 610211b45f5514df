/** JSON shapes served by the session service. */

export interface ClaimView {
  id: string;
  statement: string;
  assertion: { subject: string; predicate: string; object: string } | null;
  status: string | null;
  evidence: string | null;
}

export interface PendingLayerView {
  layer_index: number;
  objective: string | null;
  state: string;
  attempt: number;
  narrative: string | null;
  claims: ClaimView[];
  aggregate: string | null;
}

export interface SessionView {
  id: string;
  query: { id: string; text: string; domain_tag: string; constraints: string[] } | null;
  status: string;
  plan: { sub_problems: { index: number; objective: string }[] } | null;
  layer_states: string[];
  attempts: Record<string, number>;
  pending_layer: PendingLayerView | null;
  final: { text: string; supporting_layers: number[]; quality: number } | null;
  failed: boolean;
  quality: number;
  backend_calls: number;
}

export interface SessionSummary {
  id: string;
  status: string;
  query: string;
  domain: string;
  created: string;
  pending_layer: number | null;
  quality: number;
}

export interface TraceEventView {
  seq: number;
  ts: string;
  kind: string;
  payload: Record<string, unknown>;
}

export type FeedbackAction = "approve" | "reject" | "annotate";

export interface FeedbackRequest {
  layer_index: number;
  action: FeedbackAction;
  note?: string | null;
  added_constraint?: string | null;
}

export interface SimRequest {
  num_tasks: number;
  num_layers: number;
  error_prob: number;
  detection_prob: number;
  max_refinements: number;
  seed: number;
  sweep?: { param: string; values: number[] };
  include_csv?: boolean;
}

export interface SimResultView {
  vanilla_error_rate: number;
  layered_error_rate: number;
  exhausted_rate: number;
  mean_backend_calls: number;
  quality: number;
}

export interface SweepRowView {
  param: string;
  value: number;
  result: SimResultView;
  analytic: SimResultView;
}

export interface SweepResponse {
  rows: SweepRowView[];
  csv?: string;
}
