/** The view model is a pure function of the log prefix: full reload and
 * incremental batches of any shape must converge to identical views. */

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { ViewModel } from "../src/model";
import { parseEventStream, type EventRecord } from "../src/types";

const FIXTURES = join(dirname(fileURLToPath(import.meta.url)), "fixtures");
const RECORDS: EventRecord[] = parseEventStream(
  readFileSync(join(FIXTURES, "events.ndjson"), "utf-8"),
);
const OUTLINE = readFileSync(join(FIXTURES, "outline.txt"), "utf-8");
const TREE = JSON.parse(readFileSync(join(FIXTURES, "tree.json"), "utf-8"));

function structureOfTreeFixture() {
  const out: Record<string, unknown> = {};
  for (const n of TREE.nodes) {
    out[n.node_id] = [
      n.parent,
      n.child_name,
      n.agent_type,
      Object.entries(n.children).sort(([a], [b]) => (a < b ? -1 : 1)),
    ];
  }
  return out;
}

describe("log replay", () => {
  it("reconstructs the same structure the server reports", () => {
    const model = ViewModel.fromRecords(RECORDS);
    expect(JSON.parse(JSON.stringify(model.structure()))).toEqual(structureOfTreeFixture());
  });

  it("renders the same outline the offline inspector prints", () => {
    const model = ViewModel.fromRecords(RECORDS);
    expect(model.outlineText() + "\n").toBe(OUTLINE);
  });

  it("tracks per-node transcripts chronologically", () => {
    const model = ViewModel.fromRecords(RECORDS);
    const root = model.nodes.get(0)!;
    const seqs = root.transcript.map((e) => e.seq);
    expect(seqs).toEqual([...seqs].sort((a, b) => a - b));
    expect(root.transcript.some((e) => e.kind === "intervention")).toBe(true);
    const child = model.nodes.get(1)!;
    expect(child.transcript.some((e) => e.kind === "llm_turn")).toBe(true);
  });
});

describe("incremental convergence", () => {
  function converges(chunks: EventRecord[][]): void {
    const incremental = new ViewModel();
    for (const chunk of chunks) incremental.applyBatch(chunk);
    const full = ViewModel.fromRecords(RECORDS);
    expect(incremental.lastSeq).toBe(full.lastSeq);
    expect(incremental.structure()).toEqual(full.structure());
    expect(incremental.outlineText()).toBe(full.outlineText());
    expect(
      [...incremental.nodes.values()].map((n) => n.transcript),
    ).toEqual([...full.nodes.values()].map((n) => n.transcript));
  }

  it("one record at a time equals full reload", () => {
    converges(RECORDS.map((r) => [r]));
  });

  it("arbitrary chunk sizes equal full reload", () => {
    for (const size of [2, 3, 5, 7]) {
      const chunks: EventRecord[][] = [];
      for (let i = 0; i < RECORDS.length; i += size) {
        chunks.push(RECORDS.slice(i, i + size));
      }
      converges(chunks);
    }
  });

  it("re-fetching an overlapping suffix is harmless", () => {
    const mid = Math.floor(RECORDS.length / 2);
    converges([RECORDS.slice(0, mid), RECORDS.slice(mid - 3), RECORDS]);
  });

  it("a gap in the stream is an error, not silent corruption", () => {
    const model = new ViewModel();
    expect(() => model.applyBatch([RECORDS[0], RECORDS[2]])).toThrow(/gap/);
  });
});

describe("live-state merge and pending injections", () => {
  it("merges statuses and the paused flag from the tree view", () => {
    const model = ViewModel.fromRecords(RECORDS);
    model.mergeTree({ paused: true, nodes: TREE.nodes });
    expect(model.paused).toBe(true);
    expect(model.statuses.get(0)).toBe("idle");
    expect(model.statuses.get(1)).toBe("idle");
  });

  it("clears a pending injection when its intervention event arrives", () => {
    const intervention = RECORDS.find((r) => r.kind === "intervention")!;
    const before = RECORDS.filter((r) => r.seq < intervention.seq);
    const model = ViewModel.fromRecords(before);
    model.noteInjection("active", String(intervention.payload.body));
    expect(model.pendingInjections).toHaveLength(1);
    model.applyBatch(RECORDS.filter((r) => r.seq >= intervention.seq));
    expect(model.pendingInjections).toHaveLength(0);
  });
});
