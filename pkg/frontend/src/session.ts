// Session state machine for the validate-and-refine loop. One in-flight
// query at a time; stale responses are discarded; the edit buffer must
// validate before resubmission is possible.

import type { ApiClient, Candidate, PipelineError, QueryResponse } from "./api.js";
import {
  JvqlDocument,
  cloneDocument,
  validateDocument,
} from "./jvql.js";

export interface CandidatePicker {
  term: string;
  candidates: Candidate[];
}

export interface SessionState {
  statement: string;
  expandHierarchy: boolean;
  busy: boolean;
  latest: QueryResponse | null;
  editBuffer: JvqlDocument | null;
  editProblems: string[];
  userEdited: boolean;
  pipelineError: PipelineError | null;
  picker: CandidatePicker | null;
  transportError: string | null;
}

const TERM_IN_MESSAGE = /term '([^']+)'/;

export class Session {
  state: SessionState = {
    statement: "",
    expandHierarchy: false,
    busy: false,
    latest: null,
    editBuffer: null,
    editProblems: [],
    userEdited: false,
    pipelineError: null,
    picker: null,
    transportError: null,
  };

  onChange: (state: SessionState) => void = () => {};

  private issued = 0;
  private appliedPlanIds = new Set<string>();

  constructor(private readonly api: ApiClient) {}

  private emit(): void {
    this.onChange(this.state);
  }

  setStatement(text: string): void {
    this.state.statement = text;
    this.emit();
  }

  toggleHierarchy(on: boolean): void {
    this.state.expandHierarchy = on;
    this.emit();
  }

  canSubmitStatement(): boolean {
    return this.state.statement.trim().length > 0 && !this.state.busy;
  }

  canResubmit(): boolean {
    return (
      this.state.editBuffer !== null &&
      this.state.editProblems.length === 0 &&
      !this.state.busy
    );
  }

  async submitStatement(): Promise<void> {
    if (!this.canSubmitStatement()) return;
    const token = ++this.issued;
    this.state.busy = true;
    this.state.transportError = null;
    this.emit();
    try {
      const result = await this.api.submitStatement(this.state.statement, {
        expandHierarchy: this.state.expandHierarchy,
      });
      this.applyResult(token, result, false);
    } catch (error) {
      this.applyTransportError(token, error);
    }
  }

  /** Resubmit the edited tree as a formal query. */
  async resubmitEdited(): Promise<void> {
    if (this.state.editBuffer === null || this.state.busy) return;
    const problems = validateDocument(this.state.editBuffer);
    this.state.editProblems = problems;
    if (problems.length > 0) {
      this.emit();
      return;
    }
    const token = ++this.issued;
    this.state.busy = true;
    this.state.transportError = null;
    this.emit();
    try {
      const result = await this.api.submitFormal(this.state.editBuffer, {
        expandHierarchy: this.state.expandHierarchy,
      });
      this.applyResult(token, result, true);
    } catch (error) {
      this.applyTransportError(token, error);
    }
  }

  /** Edit the buffer through a pure transform; revalidates immediately. */
  applyEdit(transform: (doc: JvqlDocument) => JvqlDocument): void {
    if (this.state.editBuffer === null) return;
    try {
      this.state.editBuffer = transform(this.state.editBuffer);
    } catch (error) {
      this.state.editProblems = [String((error as Error).message ?? error)];
      this.emit();
      return;
    }
    this.state.editProblems = validateDocument(this.state.editBuffer);
    this.state.userEdited = true;
    this.emit();
  }

  /** Start a formal query from a LINK-failure candidate. */
  pickCandidate(candidate: Candidate): void {
    this.state.editBuffer = {
      version: "1",
      root: {
        kind: "predicate",
        classIri: candidate.classIri,
        entityIri: candidate.entityIri,
        label: candidate.label,
      },
    };
    this.state.editProblems = [];
    this.state.userEdited = true;
    this.state.picker = null;
    this.emit();
  }

  private applyResult(
    token: number,
    result: Awaited<ReturnType<ApiClient["submitStatement"]>>,
    edited: boolean,
  ): void {
    if (token !== this.issued) return; // a newer request superseded this one
    this.state.busy = false;
    if (result.ok) {
      if (this.appliedPlanIds.has(result.response.planId)) {
        this.emit();
        return; // duplicate delivery of an already-applied plan
      }
      this.appliedPlanIds.add(result.response.planId);
      this.state.latest = result.response;
      this.state.editBuffer = cloneDocument(result.response.jvql);
      this.state.editProblems = [];
      this.state.userEdited = edited;
      this.state.pipelineError = null;
      this.state.picker = null;
    } else {
      this.state.pipelineError = result.error;
      const failure = result.error.error;
      if (failure.step === "LINK" && failure.candidates.length > 0) {
        const m = TERM_IN_MESSAGE.exec(failure.message);
        this.state.picker = {
          term: m ? m[1] : "(unknown term)",
          candidates: failure.candidates,
        };
      } else {
        this.state.picker = null;
      }
    }
    this.emit();
  }

  private applyTransportError(token: number, error: unknown): void {
    if (token !== this.issued) return;
    this.state.busy = false;
    this.state.transportError = String((error as Error).message ?? error);
    this.emit();
  }
}
