import { ApiClient, ApiError } from "./api";
import type {
  AdjudicationInput,
  AdjudicationRecord,
  CandidatesPayload,
  Decision,
  ReportPayload,
  Standard,
} from "./types";

const keyOf = (standardRef: number, specRef: number, reviewer: string) =>
  `${standardRef}:${specRef}:${reviewer}`;

/**
 * Client-side session state: API data, the reviewer's pending (unsent)
 * decisions, and derived review-progress views.
 *
 * Decisions are applied optimistically; a network failure queues the record
 * for retry and never drops it, while a validation rejection (422) rolls the
 * optimistic record back and surfaces the server's message inline.
 */
export class ReviewStore {
  standards: Standard[] = [];
  report: ReportPayload | null = null;
  candidatesByRef = new Map<number, CandidatesPayload>();
  latest = new Map<string, AdjudicationRecord>();
  pending: AdjudicationInput[] = [];
  reviewer = "sme";
  inlineError: string | null = null;
  offline = false;
  staleArtifacts = false;

  private manifestSnapshot: string | null = null;
  private listeners: Array<() => void> = [];

  constructor(private readonly api: ApiClient) {}

  subscribe(listener: () => void): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }

  /** Initial load: standards, report (aggregates + manifest), decisions. */
  async load(): Promise<void> {
    try {
      const [standards, report, adjudications] = await Promise.all([
        this.api.getStandards(),
        this.api.getReport(),
        this.api.getAdjudications(),
      ]);
      this.standards = standards;
      this.report = report;
      const hashes = JSON.stringify(report.manifest.input_hashes ?? {});
      this.staleArtifacts = this.manifestSnapshot !== null && this.manifestSnapshot !== hashes;
      this.manifestSnapshot = hashes;
      this.latest.clear();
      for (const record of adjudications.latest) {
        this.latest.set(keyOf(record.standard_ref, record.spec_ref, record.reviewer), record);
      }
      this.offline = false;
    } catch (err) {
      if (err instanceof ApiError) throw err;
      this.offline = true; // transport failure: keep whatever state we have
    }
    this.notify();
  }

  /** Candidates for one standard, cached per session. */
  async openStandard(ref: number): Promise<CandidatesPayload> {
    const cached = this.candidatesByRef.get(ref);
    if (cached) return cached;
    const payload = await this.api.getCandidates(ref);
    this.candidatesByRef.set(ref, payload);
    this.notify();
    return payload;
  }

  /** Latest decisions for one (standard, spec) pair, one per reviewer. */
  decisionsFor(standardRef: number, specRef: number): AdjudicationRecord[] {
    const out: AdjudicationRecord[] = [];
    for (const record of this.latest.values()) {
      if (record.standard_ref === standardRef && record.spec_ref === specRef) out.push(record);
    }
    return out.sort((a, b) => a.reviewer.localeCompare(b.reviewer));
  }

  private standardDecisions(standardRef: number): AdjudicationRecord[] {
    return [...this.latest.values()].filter((r) => r.standard_ref === standardRef);
  }

  /**
   * Record a decision: optimistic local update, then write-through.
   * Failed transport keeps the record queued; 422 rolls it back.
   */
  async recordDecision(specRef: number, standardRef: number, decision: Decision, note = ""): Promise<boolean> {
    this.inlineError = null;
    const input: AdjudicationInput = {
      standard_ref: standardRef,
      spec_ref: specRef,
      decision,
      note,
      reviewer: this.reviewer,
    };
    const key = keyOf(standardRef, specRef, this.reviewer);
    const previous = this.latest.get(key);
    this.latest.set(key, { ...input, created_at: "(pending)" });
    this.notify();
    try {
      const stored = await this.api.postAdjudication(input);
      this.latest.set(key, stored);
      this.offline = false;
      this.notify();
      return true;
    } catch (err) {
      if (err instanceof ApiError) {
        // validation refusal: not persisted, roll back and surface
        if (previous) this.latest.set(key, previous);
        else this.latest.delete(key);
        this.inlineError = err.message;
        this.notify();
        return false;
      }
      this.offline = true;
      this.pending.push(input); // transport failure: retry later, never drop
      this.notify();
      return false;
    }
  }

  /** Re-send queued decisions; stops at the first transport failure. */
  async flushPending(): Promise<number> {
    let sent = 0;
    while (this.pending.length > 0) {
      const input = this.pending[0]!;
      try {
        const stored = await this.api.postAdjudication(input);
        this.latest.set(keyOf(input.standard_ref, input.spec_ref, input.reviewer), stored);
        this.pending.shift();
        sent += 1;
        this.offline = false;
      } catch (err) {
        if (err instanceof ApiError) {
          this.pending.shift(); // server refused it; do not loop forever
          this.inlineError = err.message;
        }
        break;
      }
    }
    this.notify();
    return sent;
  }

  /** A standard counts as decided once any decision is recorded for it. */
  progress(): { decided: number; total: number } {
    const decided = new Set<number>();
    for (const record of this.latest.values()) decided.add(record.standard_ref);
    return { decided: decided.size, total: this.standards.length };
  }

  /** True when the panel has worked the list but accepted nothing. */
  coverageWarning(standardRef: number): boolean {
    const records = this.standardDecisions(standardRef);
    return records.length > 0 && records.every((r) => r.decision === "reject");
  }

  canExport(): boolean {
    const { decided, total } = this.progress();
    return total > 0 && decided === total;
  }
}
