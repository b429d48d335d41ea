// Thin typed wrappers over the review service HTTP API.

import { Snapshot, TabName } from "./types.js";

export interface ApiOptions {
  baseUrl: string;
  token: string;
  fetchFn?: typeof fetch;
}

export class ApiClient {
  private fetchFn: typeof fetch;

  constructor(private options: ApiOptions) {
    this.fetchFn = options.fetchFn ?? fetch.bind(globalThis);
  }

  private headers(): Record<string, string> {
    return { "X-Auth-Token": this.options.token, "Content-Type": "application/json" };
  }

  private async request(path: string, init: RequestInit = {}): Promise<unknown> {
    const response = await this.fetchFn(`${this.options.baseUrl}${path}`, {
      ...init,
      headers: { ...this.headers(), ...(init.headers ?? {}) },
    });
    if (!response.ok) {
      const body = await response.text();
      throw new Error(`${init.method ?? "GET"} ${path} -> ${response.status}: ${body}`);
    }
    return response.json();
  }

  openPatient(patientId: string): Promise<Snapshot> {
    return this.request(`/patients/${patientId}`) as Promise<Snapshot>;
  }

  fetchView(patientId: string, tab: TabName): Promise<{ revision: number; view: unknown }> {
    return this.request(`/patients/${patientId}/views/${tab}`) as
      Promise<{ revision: number; view: unknown }>;
  }

  submitChange(patientId: string, payload: Record<string, unknown>):
      Promise<{ revision: number }> {
    return this.request(`/patients/${patientId}/changes`, {
      method: "POST",
      body: JSON.stringify(payload),
    }) as Promise<{ revision: number }>;
  }

  postChat(patientId: string, text: string): Promise<{ revision: number }> {
    return this.request(`/patients/${patientId}/chat`, {
      method: "POST",
      body: JSON.stringify({ text }),
    }) as Promise<{ revision: number }>;
  }

  validate(patientId: string): Promise<Record<string, unknown>> {
    return this.request(`/patients/${patientId}/validate`, { method: "POST" }) as
      Promise<Record<string, unknown>>;
  }

  watchUrl(patientId: string): string {
    const ws = this.options.baseUrl.replace(/^http/, "ws");
    return `${ws}/patients/${patientId}/watch?token=${encodeURIComponent(this.options.token)}`;
  }
}
