/** Pure event-log replay: the whole view is a function of the log prefix.
 *
 * The model is fed records in seq order, either all at once (full reload) or
 * in arbitrary batches (incremental polling); both paths converge to the
 * same state by construction, and the tests diff them to prove it. Live
 * status badges and the paused flag come from GET /tree and are merged in
 * separately — they are presentation state, not history.
 */

import type { EventRecord, NodeStatus, TreeView } from "./types";

export interface TranscriptEntry {
  seq: number;
  kind: string;
  payload: Record<string, unknown>;
}

export interface NodeView {
  nodeId: number;
  parentId: number | null;
  childName: string | null;
  agentType: string;
  children: Map<string, number>;
  transcript: TranscriptEntry[];
}

const TRANSCRIPT_KINDS = new Set([
  "call",
  "return",
  "llm_turn",
  "tool_call",
  "tool_result",
  "compression",
  "intervention",
]);

/** An injection acknowledged by the server but not yet seen in the log. */
export interface PendingInjection {
  target: string;
  body: string;
}

export class ViewModel {
  lastSeq = -1;
  readonly nodes = new Map<number, NodeView>();
  /** live, non-log state merged from GET /tree */
  statuses = new Map<number, NodeStatus>();
  paused = false;
  pendingInjections: PendingInjection[] = [];

  static fromRecords(records: EventRecord[]): ViewModel {
    const model = new ViewModel();
    model.applyBatch(records);
    return model;
  }

  /** Apply records with seq > lastSeq, in order; duplicates are skipped so a
   * reconnect that re-fetches an overlapping suffix is harmless. */
  applyBatch(records: EventRecord[]): void {
    for (const record of records) {
      if (record.seq <= this.lastSeq) continue;
      if (record.seq !== this.lastSeq + 1) {
        throw new Error(
          `gap in event stream: have ${this.lastSeq}, got ${record.seq}`,
        );
      }
      this.apply(record);
      this.lastSeq = record.seq;
    }
  }

  private apply(record: EventRecord): void {
    if (record.kind === "node_created") {
      const node: NodeView = {
        nodeId: record.node_id as number,
        parentId: record.parent_id,
        childName: (record.payload.child_name as string | null) ?? null,
        agentType: String(record.payload.agent_type ?? ""),
        children: new Map(),
        transcript: [],
      };
      this.nodes.set(node.nodeId, node);
      if (record.parent_id !== null) {
        const parent = this.nodes.get(record.parent_id);
        if (parent && node.childName !== null) {
          parent.children.set(node.childName, node.nodeId);
        }
      }
      return;
    }
    if (TRANSCRIPT_KINDS.has(record.kind) && record.node_id !== null) {
      const node = this.nodes.get(record.node_id);
      if (node) {
        node.transcript.push({
          seq: record.seq,
          kind: record.kind,
          payload: record.payload,
        });
      }
      if (record.kind === "intervention") {
        const body = String(record.payload.body ?? "");
        this.pendingInjections = this.pendingInjections.filter(
          (p) => p.body !== body,
        );
      }
    }
  }

  mergeTree(view: TreeView): void {
    this.paused = view.paused;
    this.statuses = new Map(view.nodes.map((n) => [n.node_id, n.status]));
  }

  /** An injection the server acked as "queued"; shown with a queued badge
   * until the corresponding intervention event arrives in the log. */
  noteInjection(target: string, body: string): void {
    this.pendingInjections.push({ target, body });
  }

  /** Canonical structural fingerprint, comparable with the server's tree. */
  structure(): Record<number, [number | null, string | null, string, [string, number][]]> {
    const out: Record<
      number,
      [number | null, string | null, string, [string, number][]]
    > = {};
    for (const node of this.nodes.values()) {
      out[node.nodeId] = [
        node.parentId,
        node.childName,
        node.agentType,
        [...node.children.entries()].sort(([a], [b]) => (a < b ? -1 : a > b ? 1 : 0)),
      ];
    }
    return out;
  }

  /** Depth-first (depth, node) pairs: children by name, roots by id. */
  outline(): Array<{ depth: number; node: NodeView }> {
    const out: Array<{ depth: number; node: NodeView }> = [];
    const walk = (node: NodeView, depth: number): void => {
      out.push({ depth, node });
      const names = [...node.children.keys()].sort();
      for (const name of names) {
        const child = this.nodes.get(node.children.get(name) as number);
        if (child) walk(child, depth + 1);
      }
    };
    const roots = [...this.nodes.values()]
      .filter((n) => n.parentId === null)
      .sort((a, b) => a.nodeId - b.nodeId);
    for (const root of roots) walk(root, 0);
    return out;
  }

  /** The same indented text the offline session inspector prints. */
  outlineText(): string {
    return this.outline()
      .map(({ depth, node }) => {
        const label = node.childName ?? "root";
        return "  ".repeat(depth) + `[${node.nodeId}] ${label} <${node.agentType}>`;
      })
      .join("\n");
  }
}
