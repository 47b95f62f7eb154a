/** Payload shapes of the crossmap review API (see docs/formats.md). */

export type Decision = "accept" | "reject" | "flag";

export interface Standard {
  ref: number;
  id: string;
  domain_id: number;
  domain_name: string;
  text: string;
}

/** One specification in a standard's ranked candidate list. */
export interface Candidate extends Standard {
  similarity: number;
  rank: number;
  /** 1..3 when this spec was regression-selected for the standard. */
  step: number | null;
  increment: number | null;
  r2: number | null;
}

export interface CandidatesPayload {
  standard: Standard;
  candidates: Candidate[];
}

export interface AdjudicationRecord {
  standard_ref: number;
  spec_ref: number;
  decision: Decision;
  note: string;
  reviewer: string;
  created_at: string;
}

export interface AdjudicationInput {
  standard_ref: number;
  spec_ref: number;
  decision: Decision;
  note: string;
  reviewer: string;
}

export interface DomainShare {
  id: number;
  name: string;
  weight_sum: number;
  percent: number;
}

export interface DomainAggregate {
  side: "standard" | "specification";
  total_weight: number;
  domains: DomainShare[];
}

export interface TableRow {
  standard_id: string;
  ref: number;
  steps: number[];
  r2: number[];
  increments: number[];
}

export interface ReportPayload {
  manifest: { input_hashes?: Record<string, string>; master_seed?: number };
  report: {
    aggregates: Record<string, DomainAggregate>;
    occurrences?: { total_slots: number; counts: { spec_ref: number; count: number }[] };
  } | null;
  table: TableRow[];
}

export interface AdjudicationsPayload {
  latest: AdjudicationRecord[];
  history_count: number;
}
