// Typed client for the audiencectl HTTP API. The console performs no query
// logic of its own: everything it displays comes from these responses.

import type { JvqlDocument } from "./jvql.js";

export interface PersonRow {
  iri: string;
  name: string;
  matchedBranches: string[];
}

export interface Audience {
  persons: PersonRow[];
  total: number;
}

export interface StepRecord {
  stepName: string;
  description: string;
  inputSummary: string;
  output: Record<string, unknown>;
  status: "ok" | "error";
  durationMs: number;
  error: string | null;
}

export interface MappingRow {
  term: string | null;
  entityIri: string;
  label: string;
  classIri: string;
  score: number | null;
}

export interface Explanation {
  requestKind: string;
  sections: { name: string; narrative: string; outputs: Record<string, unknown> }[];
  entityMappingTable: MappingRow[];
  logicalStructure: string;
  audienceCount: number | null;
  caveats: string[];
  text: string;
}

export interface QueryResponse {
  planId: string;
  kind: string;
  booleanExpression: string;
  jvql: JvqlDocument;
  sparql: string;
  audience: Audience;
  stepRecords: StepRecord[];
  explanation: Explanation;
}

export interface Candidate {
  entityIri: string;
  classIri: string;
  label: string;
  score: number;
}

export interface PipelineError {
  planId: string;
  kind: string;
  error: { step: string; message: string; candidates: Candidate[] };
  stepRecords: StepRecord[];
  explanation: Explanation | null;
}

export interface EntityMatch {
  entityIri: string;
  classIri: string;
  label: string;
  altLabels: string[];
  matchedLabel: string;
  score: number;
}

export interface QueryOptions {
  expandHierarchy?: boolean;
  resultLimit?: number;
}

export type QueryResult =
  | { ok: true; response: QueryResponse }
  | { ok: false; status: number; error: PipelineError };

export class ApiClient {
  constructor(private readonly baseUrl: string) {}

  private async postQuery(body: unknown): Promise<QueryResult> {
    const response = await fetch(`${this.baseUrl}/v1/queries`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    const payload = await response.json();
    if (response.status === 200) {
      return { ok: true, response: payload as QueryResponse };
    }
    if (response.status === 422) {
      return { ok: false, status: 422, error: payload as PipelineError };
    }
    throw new Error(`query failed (${response.status}): ${JSON.stringify(payload)}`);
  }

  submitStatement(statement: string, options: QueryOptions): Promise<QueryResult> {
    return this.postQuery({ kind: "nl-query", statement, options });
  }

  submitFormal(jvql: JvqlDocument, options: QueryOptions): Promise<QueryResult> {
    return this.postQuery({ kind: "formal-query", jvql, options });
  }

  async searchEntities(q: string, k = 8, classIri?: string): Promise<EntityMatch[]> {
    const params = new URLSearchParams({ q, k: String(k) });
    if (classIri) params.set("class", classIri);
    const response = await fetch(`${this.baseUrl}/v1/entities?${params}`);
    if (!response.ok) {
      return [];
    }
    const payload = (await response.json()) as { matches: EntityMatch[] };
    return payload.matches;
  }
}
