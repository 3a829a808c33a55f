/** Wire shapes of the control HTTP API. These mirror the server's JSON
 * exactly; the UI never invents fields beyond them. */

export type EventKind =
  | "node_created"
  | "call"
  | "return"
  | "llm_turn"
  | "tool_call"
  | "tool_result"
  | "compression"
  | "intervention"
  | "notification"
  | "ingest";

export interface EventRecord {
  seq: number;
  kind: EventKind;
  node_id: number | null;
  parent_id: number | null;
  payload: Record<string, unknown>;
  at: number;
}

export type NodeStatus =
  | "idle"
  | "running"
  | "waiting_for_child"
  | "waiting_for_caller";

/** One node entry of GET /tree. */
export interface TreeNode {
  node_id: number;
  parent: number | null;
  child_name: string | null;
  agent_type: string;
  status: NodeStatus;
  children: Record<string, number>;
  llm_turns: number;
}

/** Body of GET /tree. */
export interface TreeView {
  paused: boolean;
  nodes: TreeNode[];
}

export function parseEventLine(line: string): EventRecord {
  const data = JSON.parse(line) as Record<string, unknown>;
  return {
    seq: Number(data.seq),
    kind: String(data.kind) as EventKind,
    node_id: data.node_id === null || data.node_id === undefined ? null : Number(data.node_id),
    parent_id:
      data.parent_id === null || data.parent_id === undefined ? null : Number(data.parent_id),
    payload: (data.payload ?? {}) as Record<string, unknown>,
    at: Number(data.at ?? 0),
  };
}

export function parseEventStream(ndjson: string): EventRecord[] {
  return ndjson
    .split("\n")
    .filter((line) => line.trim().length > 0)
    .map(parseEventLine);
}
