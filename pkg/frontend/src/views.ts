/** HTML renderers: pure functions from the view model to markup strings.
 * Keeping them string-valued makes every view decision unit-testable without
 * a DOM. */

import { renderBody, type EmbedContext, escapeHtml } from "./markdown";
import type { NodeView, ViewModel, TranscriptEntry } from "./model";

const STATUS_LABEL: Record<string, string> = {
  idle: "Idle",
  running: "Running",
  waiting_for_child: "Waiting for child",
  waiting_for_caller: "Waiting for caller",
};

export function statusBadge(status: string | undefined): string {
  const value = status ?? "idle";
  const label = STATUS_LABEL[value] ?? value;
  return `<span class="badge status-${escapeHtml(value)}">${escapeHtml(label)}</span>`;
}

export function renderTree(model: ViewModel, selected: number | null): string {
  const rows = model.outline().map(({ depth, node }) => {
    const label = node.childName ?? "root";
    const classes = ["tree-row"];
    if (node.nodeId === selected) classes.push("selected");
    return (
      `<div class="${classes.join(" ")}" data-node="${node.nodeId}" style="--depth:${depth}">` +
      `<span class="node-id">[${node.nodeId}]</span> ` +
      `<span class="node-label">${escapeHtml(label)}</span> ` +
      `<span class="node-type">&lt;${escapeHtml(node.agentType)}&gt;</span> ` +
      statusBadge(model.statuses.get(node.nodeId)) +
      `</div>`
    );
  });
  const pausedBanner = model.paused
    ? `<div class="paused-banner">⏸ execution paused</div>`
    : "";
  return pausedBanner + rows.join("\n");
}

function renderEntry(entry: TranscriptEntry, ctx: EmbedContext): string {
  const p = entry.payload;
  switch (entry.kind) {
    case "llm_turn": {
      const inputs = (p.inputs as Array<Record<string, string>> | undefined) ?? [];
      const inputHtml = inputs
        .map(
          (m) =>
            `<div class="msg msg-${escapeHtml(m.role)}">` +
            `<span class="sender">${escapeHtml(m.sender)}</span>` +
            renderBody(String(m.body ?? ""), ctx) +
            `</div>`,
        )
        .join("\n");
      const output = `<div class="msg msg-assistant">${renderBody(String(p.output ?? ""), ctx)}</div>`;
      return `<section class="turn" data-seq="${entry.seq}">${inputHtml}\n${output}</section>`;
    }
    case "call":
      return `<div class="event event-call" data-seq="${entry.seq}">→ call <b>${escapeHtml(String(p.child_name ?? ""))}</b>: ${renderBody(String(p.message ?? ""), ctx)}</div>`;
    case "return":
      return `<div class="event event-return" data-seq="${entry.seq}">← return: ${renderBody(String(p.message ?? ""), ctx)}</div>`;
    case "tool_call":
      return `<div class="event event-tool" data-seq="${entry.seq}">⚙ @${escapeHtml(String(p.function ?? ""))}</div>`;
    case "tool_result": {
      const error = p.error ? ` <span class="badge status-error">error</span>` : "";
      return `<div class="event event-tool" data-seq="${entry.seq}">⚙ @${escapeHtml(String(p.function ?? ""))} result${error}</div>`;
    }
    case "compression":
      return `<div class="event event-compress" data-seq="${entry.seq}">🗜 history compressed: ${escapeHtml(String(p.summary ?? ""))}</div>`;
    case "intervention":
      return `<div class="event event-intervention" data-seq="${entry.seq}"><span class="badge badge-intervention">intervention</span> ${escapeHtml(String(p.body ?? ""))}</div>`;
    default:
      return `<div class="event" data-seq="${entry.seq}">${escapeHtml(entry.kind)}</div>`;
  }
}

export function renderTranscript(
  model: ViewModel,
  nodeId: number,
  apiBase: string,
  variables: Map<string, string> = new Map(),
): string {
  const node: NodeView | undefined = model.nodes.get(nodeId);
  if (!node) return `<div class="empty">no such node</div>`;
  const ctx: EmbedContext = { variables, nodeId, apiBase };
  const entries = node.transcript.map((entry) => renderEntry(entry, ctx));
  const pending = model.pendingInjections
    .filter((p) => p.target === "active" || p.target === String(nodeId))
    .map(
      (p) =>
        `<div class="event event-intervention pending"><span class="badge badge-queued">queued</span> ${escapeHtml(p.body)}</div>`,
    );
  return [...entries, ...pending].join("\n") || `<div class="empty">no activity yet</div>`;
}
