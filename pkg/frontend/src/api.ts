/** Thin typed client for the control HTTP API. All state mutation goes
 * through these documented endpoints and nothing else. */

import { parseEventStream, type EventRecord, type TreeView } from "./types";

export class ControlClient {
  constructor(
    readonly base: string,
    private readonly fetchImpl: typeof fetch = fetch,
  ) {}

  private async get(path: string): Promise<Response> {
    const response = await this.fetchImpl(this.base + path);
    if (!response.ok) {
      throw new Error(`GET ${path} → ${response.status}`);
    }
    return response;
  }

  private async post(path: string, body?: unknown): Promise<Record<string, unknown>> {
    const response = await this.fetchImpl(this.base + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: body === undefined ? "" : JSON.stringify(body),
    });
    const data = (await response.json()) as Record<string, unknown>;
    if (!response.ok) {
      throw new Error(`POST ${path} → ${response.status}: ${JSON.stringify(data)}`);
    }
    return data;
  }

  async tree(): Promise<TreeView> {
    return (await (await this.get("/tree")).json()) as TreeView;
  }

  /** Records with seq >= from, in order. */
  async logSince(from: number): Promise<EventRecord[]> {
    const text = await (await this.get(`/log?from=${from}`)).text();
    return parseEventStream(text);
  }

  async pause(): Promise<string> {
    return String((await this.post("/pause")).result);
  }

  async resume(): Promise<string> {
    return String((await this.post("/resume")).result);
  }

  /** target: "active" or a node id as string. Returns the server ack
   * ("queued" or "deferred: ..."). */
  async inject(target: string, body: string): Promise<string> {
    return String((await this.post("/inject", { target, body })).result);
  }

  variableUrl(nodeId: number, name: string): string {
    return `${this.base}/variable?node=${nodeId}&name=${encodeURIComponent(name)}`;
  }
}
